use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate_on_grid, OdeSettings, OdeStats};
use crate::units::HBAR;

/// Index of `|e,0⟩`.
pub const EXCITED: usize = 0;
/// Index of `|g,1⟩`.
pub const PHOTON: usize = 1;
/// Index of `|g,0⟩`.
pub const GROUND: usize = 2;

/// Emitter coupled to one cavity mode, truncated to a single excitation.
///
/// Energies in µeV, rates in ns⁻¹. The Hamiltonian in the frame of the mode is
/// `δ|e⟩⟨e| + g(σ†a + σa†)`; damping through `a` at `κ/ħ`, through `σ` at
/// `gamma_loss`, and pure dephasing through `σ†σ` at `γ*/ħ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladModel {
    #[serde(rename = "g_ueV")]
    pub g_uev: f64,
    #[serde(rename = "kappa_ueV")]
    pub kappa_uev: f64,
    /// `ω_QD − ω_mode` (µeV).
    #[serde(rename = "detuning_ueV")]
    pub detuning_uev: f64,
    pub gamma_loss_per_ns: f64,
    #[serde(rename = "gamma_star_ueV")]
    pub gamma_star_uev: f64,
}

impl LindbladModel {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("g_uev", self.g_uev),
            ("kappa_uev", self.kappa_uev),
            ("gamma_loss_per_ns", self.gamma_loss_per_ns),
            ("gamma_star_uev", self.gamma_star_uev),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        if !self.detuning_uev.is_finite() {
            return Err(Error::invalid("detuning_uev", "must be finite"));
        }
        Ok(())
    }

    /// Same physics with every energy and rate multiplied by `s`.
    pub fn rescaled(&self, s: f64) -> Self {
        Self {
            g_uev: self.g_uev * s,
            kappa_uev: self.kappa_uev * s,
            detuning_uev: self.detuning_uev * s,
            gamma_loss_per_ns: self.gamma_loss_per_ns * s,
            gamma_star_uev: self.gamma_star_uev * s,
        }
    }

    /// Slowest population decay rate (ns⁻¹) of the single-excitation
    /// manifold from the non-Hermitian effective Hamiltonian, the smaller of
    /// the estimates with and without dephasing. With no coupling only the
    /// emitter branch counts.
    pub fn slowest_decay_rate(&self) -> f64 {
        if self.g_uev == 0.0 {
            return self.gamma_loss_per_ns.max(f64::MIN_POSITIVE);
        }
        let rate = |gs: f64| {
            let a = Complex64::new(
                self.detuning_uev,
                -0.5 * (HBAR * self.gamma_loss_per_ns + gs),
            );
            let b = Complex64::new(0.0, -0.5 * self.kappa_uev);
            let mean = 0.5 * (a + b);
            let root = (0.25 * (a - b) * (a - b) + self.g_uev * self.g_uev).sqrt();
            let slow = (mean + root).im.abs().min((mean - root).im.abs());
            2.0 * slow / HBAR
        };
        rate(0.0)
            .min(rate(self.gamma_star_uev))
            .max(f64::MIN_POSITIVE)
    }

    /// `dX/dt = L[X]` for an arbitrary (not necessarily Hermitian) operator.
    pub fn apply(&self, x: &[[Complex64; 3]; 3]) -> [[Complex64; 3]; 3] {
        let g = self.g_uev;
        let d = self.detuning_uev;
        let h = [[d, g, 0.0], [g, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let kappa = self.kappa_uev / HBAR;
        let gamma = self.gamma_loss_per_ns;
        let dephasing = self.gamma_star_uev / HBAR;
        let loss = [gamma, kappa, 0.0];
        let minus_i_over_hbar = Complex64::new(0.0, -1.0 / HBAR);

        let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut comm = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    comm += h[i][k] * x[k][j] - x[i][k] * h[k][j];
                }
                let mut v = minus_i_over_hbar * comm - 0.5 * (loss[i] + loss[j]) * x[i][j];
                if (i == EXCITED) != (j == EXCITED) {
                    v -= 0.5 * dephasing * x[i][j];
                }
                out[i][j] = v;
            }
        }
        out[GROUND][GROUND] += gamma * x[EXCITED][EXCITED] + kappa * x[PHOTON][PHOTON];
        out
    }

    /// Evolves an operator through `grid` (ns) and hands every grid state to `sink`.
    pub fn propagate<S>(
        &self,
        x0: &[[Complex64; 3]; 3],
        grid: &[f64],
        ode: &OdeSettings,
        mut sink: S,
    ) -> Result<OdeStats>
    where
        S: FnMut(usize, [[Complex64; 3]; 3]),
    {
        let y0 = pack(x0);
        integrate_on_grid(
            |_, y, dy| {
                let out = self.apply(&unpack(y));
                dy.copy_from_slice(&pack(&out));
            },
            &y0,
            grid,
            ode,
            |i, y| sink(i, unpack(y)),
        )
    }
}

fn pack(x: &[[Complex64; 3]; 3]) -> [f64; 18] {
    let mut y = [0.0; 18];
    for i in 0..3 {
        for j in 0..3 {
            y[2 * (3 * i + j)] = x[i][j].re;
            y[2 * (3 * i + j) + 1] = x[i][j].im;
        }
    }
    y
}

fn unpack(y: &[f64]) -> [[Complex64; 3]; 3] {
    let mut x = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            x[i][j] = Complex64::new(y[2 * (3 * i + j)], y[2 * (3 * i + j) + 1]);
        }
    }
    x
}

/// Density matrix in the basis `{|e,0⟩, |g,1⟩, |g,0⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(pub [[Complex64; 3]; 3]);

impl DensityMatrix {
    pub fn excited() -> Self {
        let mut x = [[Complex64::new(0.0, 0.0); 3]; 3];
        x[EXCITED][EXCITED] = Complex64::new(1.0, 0.0);
        Self(x)
    }

    pub fn emitter_population(&self) -> f64 {
        self.0[EXCITED][EXCITED].re
    }

    pub fn cavity_population(&self) -> f64 {
        self.0[PHOTON][PHOTON].re
    }

    pub fn ground_population(&self) -> f64 {
        self.0[GROUND][GROUND].re
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = Matrix3::from_fn(|i, j| 0.5 * (self.0[i][j] + self.0[j][i].conj()));
        m.symmetric_eigenvalues().min()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn max_trace_error(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.trace() - 1.0).norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.states
            .iter()
            .map(DensityMatrix::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evolves `ρ(0) = |e,0⟩⟨e,0|` onto `grid` (ns).
pub fn evolve_density_matrix(
    model: &LindbladModel,
    grid: &[f64],
    ode: &OdeSettings,
) -> Result<Trajectory> {
    model.validate()?;
    let mut states = vec![DensityMatrix::excited(); grid.len()];
    let stats = model.propagate(&DensityMatrix::excited().0, grid, ode, |i, x| {
        states[i] = DensityMatrix(x)
    })?;
    Ok(Trajectory {
        times: grid.to_vec(),
        states,
        stats,
    })
}
