//! Emission spectra in the independent-boson model.
//!
//! The zero-phonon line is an analytic Lorentzian. The phonon sidebands are
//! built on a periodic FFT grid: the signed phonon weight is transformed to
//! the time domain, exponentiated and transformed back, which sums the full
//! multi-phonon series `Σ fⁿ*/n!` without truncating the correlator.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phonon::{phi_infinity, PhononBath};
use crate::quadrature::QuadSettings;
use crate::units::HBAR;

/// Largest correlator magnitude tolerated at the edge of the time window,
/// relative to its value at zero delay.
pub const WINDOW_DECAY: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SidebandGrid {
    /// FFT length (power of two is fastest).
    pub points: usize,
    /// Half-width of the energy window in units of the cutoff energy.
    pub span_cutoffs: f64,
}

impl Default for SidebandGrid {
    fn default() -> Self {
        Self {
            points: 1 << 14,
            span_cutoffs: 32.0,
        }
    }
}

/// Normalised Lorentzian of full width `fwhm` evaluated at `x`.
#[inline]
pub fn lorentzian(x: f64, fwhm: f64) -> f64 {
    let hw = 0.5 * fwhm;
    hw / PI / (x * x + hw * hw)
}

#[inline]
fn lorentzian_cdf(x: f64, fwhm: f64) -> f64 {
    0.5 + (2.0 * x / fwhm).atan() / PI
}

/// The phonon-sideband part of the bulk emission spectrum at one temperature.
///
/// Densities are per µeV on a uniform grid of photon detunings
/// `E_photon − E_ZPL` (negative = red side).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhononSpectrum {
    pub temperature_k: f64,
    pub eta_zpl: f64,
    pub phi_infinity: f64,
    step: f64,
    detuning: Arc<[f64]>,
    density: Arc<[f64]>,
}

impl PhononSpectrum {
    pub fn compute(bath: &PhononBath, grid: &SidebandGrid, quad: &QuadSettings) -> Result<Self> {
        bath.validate()?;
        let n = grid.points;
        if n < 64 || !n.is_multiple_of(2) {
            return Err(Error::invalid(
                "sideband grid points",
                "must be even and >= 64",
            ));
        }
        if !(grid.span_cutoffs.is_finite() && grid.span_cutoffs >= 12.0) {
            return Err(Error::invalid(
                "sideband grid span",
                "must cover at least 12 cutoff energies",
            ));
        }
        let phi_inf = phi_infinity(bath, quad)?;
        let eta = (-phi_inf).exp();
        let step = 2.0 * grid.span_cutoffs * bath.cutoff_energy() / n as f64;
        let half = (n / 2) as f64;
        // Photon detuning grid (ascending). Phonon energy is its negative.
        let detuning: Vec<f64> = (0..n).map(|j| (j as f64 - half) * step).collect();
        if bath.deformation_potential_ev == 0.0 {
            return Ok(Self {
                temperature_k: bath.temperature_k,
                eta_zpl: 1.0,
                phi_infinity: 0.0,
                step,
                density: vec![0.0; n].into(),
                detuning: detuning.into(),
            });
        }

        // Phonon-energy grid E_j = (j - n/2) dE.
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(bath.phonon_weight((j as f64 - half) * step) * step, 0.0))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        // Φ(τ_k) = Σ_j f(E_j) e^{-i E_j τ_k/ħ} dE  =  (-1)^k FFT[f dE]_k
        forward.process(&mut buf);
        let phi0 = buf[0].re;
        let scale = (-phi_inf).exp();
        let mut edge = 0.0;
        for (k, z) in buf.iter_mut().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let big_phi = *z * sign;
            let corr = big_phi.exp() - 1.0;
            if k == n / 2 {
                edge = corr.norm();
            }
            *z = corr * scale * sign;
        }
        let origin = phi0.exp_m1();
        if origin > 0.0 && edge > WINDOW_DECAY * origin {
            return Err(Error::FftWindow {
                relative: edge / origin,
            });
        }
        // ρ(E_j) = (1 / (n dE)) Σ_k (-1)^k C_k e^{2πi jk/n}
        inverse.process(&mut buf);
        let norm = 1.0 / (n as f64 * step);
        // Photon detuning is minus the phonon energy: reverse the grid.
        let mut density = vec![0.0; n];
        for (j, z) in buf.iter().enumerate() {
            let phonon_e = (j as f64 - half) * step;
            let photon = -phonon_e;
            let idx = (photon / step + half).round() as i64;
            if (0..n as i64).contains(&idx) {
                density[idx as usize] = (z.re * norm).max(0.0);
            }
        }
        Ok(Self {
            temperature_k: bath.temperature_k,
            eta_zpl: eta,
            phi_infinity: phi_inf,
            step,
            detuning: detuning.into(),
            density: density.into(),
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn detuning(&self) -> &[f64] {
        &self.detuning
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `∫ ρ_PSB`, equal to `1 − η_ZPL` up to discretisation.
    pub fn sideband_weight(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.step
    }

    /// Linearly interpolated sideband density at a photon detuning (µeV).
    pub fn density_at(&self, detuning: f64) -> f64 {
        let x = (detuning - self.detuning[0]) / self.step;
        if !(x >= 0.0) || x >= (self.density.len() - 1) as f64 {
            return 0.0;
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        self.density[i] * (1.0 - frac) + self.density[i + 1] * frac
    }

    /// `∫ ρ_PSB(ω) S(ω − center) dω` for a unit-area Lorentzian `S` of width
    /// `fwhm`, integrating the Lorentzian exactly across every grid cell.
    pub fn lorentzian_overlap(&self, center: f64, fwhm: f64) -> f64 {
        let h = 0.5 * self.step;
        self.detuning
            .iter()
            .zip(self.density.iter())
            .filter(|(_, &rho)| rho > 0.0)
            .map(|(&d, &rho)| {
                rho * (lorentzian_cdf(d + h - center, fwhm) - lorentzian_cdf(d - h - center, fwhm))
            })
            .sum()
    }
}

/// A spectrum sampled on an arbitrary ascending detuning grid (µeV).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub omega_grid: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl SpectrumGrid {
    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.omega_grid, &self.intensity)
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

pub(crate) fn trapezoid_uniform(y: &[f64], step: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => step * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[n - 1])),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BulkSpectrum {
    pub total: SpectrumGrid,
    pub zpl: Vec<f64>,
    pub sideband: Vec<f64>,
    pub zpl_fwhm: f64,
}

/// Checks that `grid` is ascending, covers zero, and samples the ZPL of
/// width `fwhm` with at least two points per FWHM.
pub fn check_zpl_resolution(grid: &[f64], fwhm: f64) -> Result<()> {
    if grid.len() < 3 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "omega_grid",
            "must be strictly increasing with >= 3 points",
        ));
    }
    if grid[0] > -fwhm || grid[grid.len() - 1] < fwhm {
        return Err(Error::GridResolution {
            spacing: f64::INFINITY,
            fwhm,
        });
    }
    let worst = grid
        .windows(2)
        .filter(|w| w[1] >= -fwhm && w[0] <= fwhm)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    if worst > 0.5 * fwhm {
        return Err(Error::GridResolution {
            spacing: worst,
            fwhm,
        });
    }
    Ok(())
}

/// Normalised bulk emission spectrum: a ZPL Lorentzian of weight `η_ZPL`
/// and FWHM `ħγ + γ*` plus the phonon sidebands.
pub fn bulk_spectrum(
    phonons: &PhononSpectrum,
    gamma_total_per_ns: f64,
    gamma_star: f64,
    omega_grid: &[f64],
) -> Result<BulkSpectrum> {
    if !(gamma_total_per_ns.is_finite() && gamma_total_per_ns > 0.0) {
        return Err(Error::invalid("gamma_total", "must be > 0"));
    }
    if !(gamma_star.is_finite() && gamma_star >= 0.0) {
        return Err(Error::invalid("gamma_star", "must be >= 0"));
    }
    let fwhm = HBAR * gamma_total_per_ns + gamma_star;
    check_zpl_resolution(omega_grid, fwhm)?;
    let zpl: Vec<f64> = omega_grid
        .iter()
        .map(|&w| phonons.eta_zpl * lorentzian(w, fwhm))
        .collect();
    let sideband: Vec<f64> = omega_grid.iter().map(|&w| phonons.density_at(w)).collect();
    let intensity = zpl.iter().zip(&sideband).map(|(a, b)| a + b).collect();
    Ok(BulkSpectrum {
        total: SpectrumGrid {
            omega_grid: omega_grid.to_vec(),
            intensity,
        },
        zpl,
        sideband,
        zpl_fwhm: fwhm,
    })
}

/// Detuning grid that is linear across the ZPL core and geometric outside,
/// symmetric about zero and reaching `±window` (µeV).
pub fn log_friendly_grid(window: f64, zpl_fwhm: f64, log_points: usize) -> Vec<f64> {
    let core_step = zpl_fwhm / 8.0;
    let core = (20.0 * zpl_fwhm).min(0.5 * window);
    let n_core = (core / core_step).ceil() as usize;
    let mut positive: Vec<f64> = (1..=n_core).map(|i| i as f64 * core_step).collect();
    let start = n_core as f64 * core_step;
    if window > start && log_points > 0 {
        let ratio = (window / start).powf(1.0 / log_points as f64);
        let mut x = start;
        for _ in 0..log_points {
            x *= ratio;
            positive.push(x);
        }
    }
    let mut grid: Vec<f64> = positive.iter().rev().map(|x| -x).collect();
    grid.push(0.0);
    grid.extend(positive);
    grid
}
