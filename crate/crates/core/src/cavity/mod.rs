//! Quantum-dot–cavity coupling: Purcell budgets including phonon sidebands,
//! Lindblad dynamics in the single-excitation subspace and two-photon
//! interference from quantum-regression correlators.

mod correlator;
mod lindblad;
mod pipeline;

pub use correlator::{
    indistinguishability_from_correlator, two_time_correlator, Observable, TwoTimeCorrelator,
};
pub use lindblad::{evolve_density_matrix, DensityMatrix, LindbladModel, Trajectory};
pub use pipeline::{
    correlator_grid, full_spectrum_indistinguishability, full_spectrum_with,
    zpl_indistinguishability, CorrelatorSettings, FullSpectrumResult, SolverSettings,
};

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phonon::QDParams;
use crate::spectrum::{check_zpl_resolution, lorentzian, PhononSpectrum, SpectrumGrid};
use crate::units::HBAR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Coupling strength ħg (µeV).
    #[serde(rename = "g_ueV")]
    pub g_uev: f64,
    /// Cavity linewidth ħκ, FWHM (µeV).
    #[serde(rename = "kappa_ueV")]
    pub kappa_uev: f64,
    /// `ω_QD − ω_cav` (µeV). With split modes, measured from the excited mode.
    #[serde(rename = "detuning_ueV")]
    pub detuning_uev: f64,
    /// `ω_M − ω_E`, monitored minus excited mode (µeV).
    #[serde(rename = "mode_splitting_ueV")]
    pub mode_splitting_uev: f64,
    /// Two orthogonally polarised modes, each coupled with `g/√2`; only the
    /// monitored one is collected.
    pub split_modes: bool,
}

impl CavityParams {
    pub fn single_mode(g_uev: f64, kappa_uev: f64, detuning_uev: f64) -> Self {
        Self {
            g_uev,
            kappa_uev,
            detuning_uev,
            mode_splitting_uev: 0.0,
            split_modes: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_uev.is_finite() && self.g_uev >= 0.0) {
            return Err(Error::invalid("g_uev", "must be >= 0"));
        }
        if !(self.kappa_uev.is_finite() && self.kappa_uev > 0.0) {
            return Err(Error::invalid("kappa_uev", "must be > 0"));
        }
        if !self.detuning_uev.is_finite() || !self.mode_splitting_uev.is_finite() {
            return Err(Error::invalid("detuning", "must be finite"));
        }
        Ok(())
    }

    /// Nominal Purcell factor `4g² / (κ ħγ₀)`.
    pub fn nominal_purcell(&self, qd: &QDParams) -> f64 {
        4.0 * self.g_uev * self.g_uev / (self.kappa_uev * qd.gamma0_energy())
    }

    /// Coupling that gives nominal Purcell factor `f` at this linewidth.
    pub fn coupling_for_purcell(f: f64, kappa_uev: f64, qd: &QDParams) -> f64 {
        0.5 * (f * kappa_uev * qd.gamma0_energy()).sqrt()
    }

    /// `κ < 4g`: the bad-cavity rate formulas no longer apply.
    pub fn is_strong_coupling(&self) -> bool {
        self.kappa_uev < 4.0 * self.g_uev
    }

    /// The mode whose output is collected.
    pub fn collected_mode(&self) -> CavityMode {
        if self.split_modes {
            CavityMode {
                g_uev: self.g_uev / SQRT_2,
                detuning_uev: self.detuning_uev - self.mode_splitting_uev,
            }
        } else {
            CavityMode {
                g_uev: self.g_uev,
                detuning_uev: self.detuning_uev,
            }
        }
    }

    /// The excited, uncollected mode of a split cavity.
    pub fn uncollected_mode(&self) -> Option<CavityMode> {
        self.split_modes.then(|| CavityMode {
            g_uev: self.g_uev / SQRT_2,
            detuning_uev: self.detuning_uev,
        })
    }
}

/// One cavity mode as seen by the emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityMode {
    pub g_uev: f64,
    /// `ω_QD − ω_mode` (µeV).
    pub detuning_uev: f64,
}

impl CavityMode {
    /// Position of the mode on the photon-detuning axis `ω − ω_ZPL`.
    pub fn photon_detuning(&self) -> f64 {
        -self.detuning_uev
    }

    /// ZPL emission into the mode in units of `γ₀`, without the `η_ZPL` weight.
    fn zpl_factor(&self, kappa: f64, qd: &QDParams, gamma_star: f64) -> f64 {
        let g0 = qd.gamma0_energy();
        let width = kappa + g0 + gamma_star;
        4.0 * self.g_uev * self.g_uev
            / (g0 * width)
            / (1.0 + (2.0 * self.detuning_uev / width).powi(2))
    }

    /// Sideband emission into the mode in units of `γ₀`.
    fn sideband_factor(&self, kappa: f64, qd: &QDParams, phonons: &PhononSpectrum) -> f64 {
        2.0 * PI
            * self.g_uev
            * self.g_uev
            * phonons.lorentzian_overlap(self.photon_detuning(), kappa)
            / qd.gamma0_energy()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurcellEstimate {
    pub factor: f64,
    /// Set when `κ < 4g`, outside the bad-cavity validity range.
    pub outside_validity: bool,
}

/// Purcell factor of the ZPL without phonons, in the bad-cavity limit:
/// `4g² / (ħγ₀ W) / (1 + (2δ/W)²)` with `W = κ + ħγ₀ + γ*`.
pub fn effective_purcell_no_phonon(
    cav: &CavityParams,
    qd: &QDParams,
    gamma_star: f64,
) -> PurcellEstimate {
    let mode = CavityMode {
        g_uev: cav.g_uev,
        detuning_uev: cav.detuning_uev,
    };
    PurcellEstimate {
        factor: mode.zpl_factor(cav.kappa_uev, qd, gamma_star),
        outside_validity: cav.is_strong_coupling(),
    }
}

/// Where the emission goes, in units of the bulk rate `γ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionBudget {
    /// Total cavity-mediated emission over `γ₀` (all modes).
    pub f_eff: f64,
    /// Fraction of all emission leaving through the collected mode.
    pub beta: f64,
    /// ZPL share of the collected emission.
    pub eta_zpl_cav: f64,
    /// Decay rate into everything but the collected mode (ns⁻¹).
    pub gamma_loss_per_ns: f64,
    /// ZPL emission into the collected mode over `γ₀`.
    pub collected_zpl: f64,
    /// Sideband emission into the collected mode over `γ₀`.
    pub collected_sideband: f64,
    /// Sideband emission into the uncollected mode over `γ₀` (zero unless split).
    pub uncollected_sideband: f64,
}

/// Effective Purcell budget with phonon sidebands:
/// `F = η_ZPL F_ZPL + 2πg²/(ħγ₀) ∫ ρ_PSB S_cav`, summed over the cavity
/// modes. In the split configuration the excited mode counts as a loss.
pub fn effective_purcell_with_psb(
    cav: &CavityParams,
    qd: &QDParams,
    phonons: &PhononSpectrum,
    gamma_star: f64,
) -> Result<EmissionBudget> {
    cav.validate()?;
    qd.validate()?;
    let eta = phonons.eta_zpl;
    let kappa = cav.kappa_uev;
    let collected = cav.collected_mode();
    let collected_zpl = eta * collected.zpl_factor(kappa, qd, gamma_star);
    let collected_sideband = collected.sideband_factor(kappa, qd, phonons);
    let (uncollected_zpl, uncollected_sideband) = match cav.uncollected_mode() {
        Some(mode) => (
            eta * mode.zpl_factor(kappa, qd, gamma_star),
            mode.sideband_factor(kappa, qd, phonons),
        ),
        None => (0.0, 0.0),
    };
    let collected_total = collected_zpl + collected_sideband;
    let f_eff = collected_total + uncollected_zpl + uncollected_sideband;
    let eta_zpl_cav = if collected_total > 0.0 {
        collected_zpl / collected_total
    } else {
        eta
    };
    Ok(EmissionBudget {
        f_eff,
        beta: collected_total / (1.0 + f_eff),
        eta_zpl_cav,
        gamma_loss_per_ns: qd.gamma0_per_ns * (1.0 + uncollected_zpl + uncollected_sideband),
        collected_zpl,
        collected_sideband,
        uncollected_sideband,
    })
}

/// Decay rate (ns⁻¹) into all channels other than the monitored mode of a
/// split cavity: free space, plus ZPL and sidebands through the excited mode.
pub fn loss_rate_with_mode_splitting(
    cav: &CavityParams,
    qd: &QDParams,
    phonons: &PhononSpectrum,
    gamma_star: f64,
) -> Result<f64> {
    if !cav.split_modes {
        return Err(Error::invalid(
            "split_modes",
            "loss rate with mode splitting needs split_modes = true",
        ));
    }
    Ok(effective_purcell_with_psb(cav, qd, phonons, gamma_star)?.gamma_loss_per_ns)
}

/// Normalised spectrum of the light leaving through the collected mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CavitySpectrum {
    pub total: SpectrumGrid,
    pub zpl: Vec<f64>,
    pub sideband: Vec<f64>,
    /// Purcell-broadened ZPL width `ħγ₀(1 + F_eff) + γ*` (µeV).
    pub zpl_fwhm: f64,
    pub budget: EmissionBudget,
}

/// Collected emission: the broadened ZPL with weight `η_ZPL,cav` and the
/// sideband density filtered by the mode Lorentzian.
pub fn cavity_spectrum(
    cav: &CavityParams,
    qd: &QDParams,
    phonons: &PhononSpectrum,
    gamma_star: f64,
    omega_grid: &[f64],
) -> Result<CavitySpectrum> {
    let budget = effective_purcell_with_psb(cav, qd, phonons, gamma_star)?;
    let collected = budget.collected_zpl + budget.collected_sideband;
    if !(collected > 0.0) {
        return Err(Error::invalid(
            "g_uev",
            "no emission reaches the collected mode",
        ));
    }
    let fwhm = HBAR * qd.gamma0_per_ns * (1.0 + budget.f_eff) + gamma_star;
    check_zpl_resolution(omega_grid, fwhm)?;
    let mode = cav.collected_mode();
    let filter = 2.0 * PI * mode.g_uev * mode.g_uev / qd.gamma0_energy() / collected;
    let zpl: Vec<f64> = omega_grid
        .iter()
        .map(|&w| budget.eta_zpl_cav * lorentzian(w, fwhm))
        .collect();
    let sideband: Vec<f64> = omega_grid
        .iter()
        .map(|&w| {
            filter * phonons.density_at(w) * lorentzian(w - mode.photon_detuning(), cav.kappa_uev)
        })
        .collect();
    let intensity = zpl.iter().zip(&sideband).map(|(a, b)| a + b).collect();
    Ok(CavitySpectrum {
        total: SpectrumGrid {
            omega_grid: omega_grid.to_vec(),
            intensity,
        },
        zpl,
        sideband,
        zpl_fwhm: fwhm,
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonon::PhononBath;
    use crate::quadrature::QuadSettings;
    use crate::spectrum::SidebandGrid;

    fn phonons(t: f64) -> PhononSpectrum {
        PhononSpectrum::compute(
            &PhononBath::gaas_device(t),
            &SidebandGrid::default(),
            &QuadSettings::default(),
        )
        .unwrap()
    }

    fn no_phonons() -> PhononSpectrum {
        let bath = PhononBath::gaas_device(10.0).with_deformation_potential(0.0);
        PhononSpectrum::compute(&bath, &SidebandGrid::default(), &QuadSettings::default()).unwrap()
    }

    #[test]
    fn nominal_purcell_of_devices() {
        let qd = QDParams::default();
        let d1 = CavityParams::single_mode(19.0, 90.0, 0.0);
        let d2 = CavityParams::single_mode(12.0, 110.0, 0.0);
        assert!((d1.nominal_purcell(&qd) - 24.37).abs() < 0.01);
        assert!((d2.nominal_purcell(&qd) - 7.955).abs() < 0.01);
        let f = effective_purcell_no_phonon(&d1, &qd, 0.0);
        assert!((f.factor - 24.0).abs() < 0.5);
        assert!(!f.outside_validity);
        assert!((effective_purcell_no_phonon(&d2, &qd, 0.0).factor - 8.0).abs() < 0.2);
        let g = CavityParams::coupling_for_purcell(24.0, 90.0, &qd);
        assert!(
            (CavityParams::single_mode(g, 90.0, 0.0).nominal_purcell(&qd) - 24.0).abs() < 1e-12
        );
    }

    #[test]
    fn detuning_kills_purcell() {
        let qd = QDParams::default();
        let far = CavityParams::single_mode(19.0, 90.0, 1e7);
        assert!(effective_purcell_no_phonon(&far, &qd, 0.0).factor < 1e-8);
        let strong = CavityParams::single_mode(19.0, 10.0, 0.0);
        assert!(effective_purcell_no_phonon(&strong, &qd, 0.0).outside_validity);
    }

    #[test]
    fn without_phonons_budget_reduces_to_zpl_formula() {
        let qd = QDParams::default();
        let cav = CavityParams::single_mode(19.0, 90.0, 15.0);
        let b = effective_purcell_with_psb(&cav, &qd, &no_phonons(), 0.1).unwrap();
        let f = effective_purcell_no_phonon(&cav, &qd, 0.1).factor;
        assert!((b.f_eff - f).abs() < 1e-12);
        assert_eq!(b.eta_zpl_cav, 1.0);
        assert!((b.beta - b.f_eff / (1.0 + b.f_eff)).abs() < 1e-12);
    }

    #[test]
    fn cavity_normalisation_matches_zpl_formula_on_resonance() {
        // 2πg² S_cav(ω_cav) = 4g²/κ: a sideband flat across the cavity is
        // Purcell-enhanced exactly like the ZPL with the same density.
        let s = phonons(20.0);
        let g = 10.0;
        let kappa = 20.0;
        let qd = QDParams::default();
        let mode = CavityMode {
            g_uev: g,
            detuning_uev: 0.0,
        };
        let sb = mode.sideband_factor(kappa, &qd, &s);
        let expected =
            4.0 * g * g / kappa * PI * kappa / 2.0 * s.density_at(0.0) / qd.gamma0_energy();
        assert!((sb / expected - 1.0).abs() < 0.05);
    }

    #[test]
    fn split_loss_needs_split_modes() {
        let qd = QDParams::default();
        let cav = CavityParams::single_mode(19.0, 90.0, 0.0);
        assert!(loss_rate_with_mode_splitting(&cav, &qd, &phonons(10.0), 0.0).is_err());
        let uncoupled = CavityParams {
            g_uev: 0.0,
            split_modes: true,
            mode_splitting_uev: 80.0,
            ..cav
        };
        let loss = loss_rate_with_mode_splitting(&uncoupled, &qd, &phonons(10.0), 0.0).unwrap();
        assert_eq!(loss, qd.gamma0_per_ns);
    }

    #[test]
    fn far_detuned_monitor_mode_has_larger_sideband_share() {
        let qd = QDParams::default();
        let s = phonons(10.0);
        let d1 = CavityParams {
            g_uev: 19.0,
            kappa_uev: 90.0,
            detuning_uev: 0.0,
            mode_splitting_uev: 80.0,
            split_modes: true,
        };
        let d2 = CavityParams {
            g_uev: 12.0,
            kappa_uev: 110.0,
            detuning_uev: 0.0,
            mode_splitting_uev: -40.0,
            split_modes: true,
        };
        let b1 = effective_purcell_with_psb(&d1, &qd, &s, 0.0).unwrap();
        let b2 = effective_purcell_with_psb(&d2, &qd, &s, 0.0).unwrap();
        assert!(b1.uncollected_sideband > b2.uncollected_sideband);
        assert!(1.0 - b1.eta_zpl_cav > 1.0 - b2.eta_zpl_cav);
    }
}
