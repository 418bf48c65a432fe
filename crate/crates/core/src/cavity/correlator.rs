use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lindblad::{LindbladModel, Trajectory, EXCITED, GROUND, PHOTON};
use crate::error::{Error, Result};
use crate::ode::OdeSettings;

/// Relative population left at the end of the time window before the
/// window is considered truncated.
pub const TAIL_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    /// Cavity field `a`: emission collected through the mode.
    CavityField,
    /// Emitter dipole `σ`: direct emission.
    EmitterDipole,
}

impl Observable {
    fn source(self) -> usize {
        match self {
            Observable::CavityField => PHOTON,
            Observable::EmitterDipole => EXCITED,
        }
    }
}

/// `G(t, τ) = ⟨O†(t+τ) O(t)⟩` on a uniform square grid, with the populations
/// `⟨O†O⟩(t)` out to `2·anchors − 1` points.
#[derive(Debug, Clone)]
pub struct TwoTimeCorrelator {
    pub step: f64,
    pub anchors: usize,
    /// Row-major, `values[i * anchors + j] = G(t_i, τ_j)`.
    pub values: Vec<Complex64>,
    pub populations: Vec<f64>,
}

impl TwoTimeCorrelator {
    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.anchors + j]
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.anchors).map(|i| i as f64 * self.step).collect()
    }

    /// Total emitted photon number `∫ ⟨O†O⟩ dt` in units of the rate
    /// prefactor, trapezoid over the full trajectory.
    pub fn integrated_population(&self) -> f64 {
        crate::spectrum::trapezoid_uniform(&self.populations, self.step)
    }
}

/// Quantum-regression correlator: `X(τ) = e^{Lτ}[O ρ(t)]`, `G = Tr(O† X)`.
///
/// The trajectory must be on a uniform grid starting at zero with an odd
/// number of points; the first half are the anchor times.
pub fn two_time_correlator(
    model: &LindbladModel,
    trajectory: &Trajectory,
    observable: Observable,
    ode: &OdeSettings,
) -> Result<TwoTimeCorrelator> {
    let len = trajectory.times.len();
    if len < 3 || len.is_multiple_of(2) {
        return Err(Error::invalid(
            "trajectory",
            "needs an odd number (>= 3) of time points",
        ));
    }
    let step = trajectory.times[1] - trajectory.times[0];
    let uniform = trajectory.times.iter().enumerate().all(|(i, &t)| {
        (t - trajectory.times[0] - i as f64 * step).abs() <= 1e-9 * step.max(t.abs())
    });
    if !uniform || trajectory.times[0] != 0.0 {
        return Err(Error::invalid(
            "trajectory",
            "grid must be uniform and start at 0",
        ));
    }
    let anchors = len.div_ceil(2);
    let src = observable.source();
    let populations: Vec<f64> = trajectory.states.iter().map(|s| s.0[src][src].re).collect();
    let tau = &trajectory.times[..anchors];

    let rows: Vec<Result<Vec<Complex64>>> = trajectory.states[..anchors]
        .par_iter()
        .map(|rho| {
            let mut x = [[Complex64::new(0.0, 0.0); 3]; 3];
            x[GROUND] = rho.0[src];
            let mut row = vec![Complex64::new(0.0, 0.0); anchors];
            model.propagate(&x, tau, ode, |j, xt| row[j] = xt[GROUND][src])?;
            Ok(row)
        })
        .collect();
    let mut values = Vec::with_capacity(anchors * anchors);
    for row in rows {
        values.extend(row?);
    }
    Ok(TwoTimeCorrelator {
        step,
        anchors,
        values,
        populations,
    })
}

/// Two-photon interference visibility
/// `I = ∬|G(t,τ)|² / ∬ n(t) n(t+τ)` over `t, τ ≥ 0`.
///
/// Fails with [`Error::GridSpan`] when the population has not decayed below
/// `1e-4` of its peak by the last anchor.
pub fn indistinguishability_from_correlator(g: &TwoTimeCorrelator) -> Result<f64> {
    let n = g.anchors;
    let peak = g.populations.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::DegenerateData(
            "no emission in the correlator window".into(),
        ));
    }
    let tail = g.populations[n - 1].abs() / peak;
    if tail > TAIL_TOLERANCE {
        return Err(Error::GridSpan { relative: tail });
    }
    let w = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let wi = w(i);
        let ni = g.populations[i];
        for j in 0..n {
            let wij = wi * w(j);
            num += wij * g.value(i, j).norm_sqr();
            den += wij * ni * g.populations[i + j];
        }
    }
    if den <= 0.0 {
        return Err(Error::DegenerateData(
            "vanishing two-photon normalisation".into(),
        ));
    }
    Ok(num / den)
}
