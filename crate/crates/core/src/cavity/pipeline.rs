use serde::{Deserialize, Serialize};

use super::correlator::{indistinguishability_from_correlator, two_time_correlator, Observable};
use super::lindblad::{evolve_density_matrix, LindbladModel, Trajectory};
use super::{effective_purcell_with_psb, CavityParams, EmissionBudget};
use crate::error::{Error, Result};
use crate::ode::OdeSettings;
use crate::phonon::{pure_dephasing_rate, PhononBath, QDParams};
use crate::quadrature::QuadSettings;
use crate::spectrum::{trapezoid_uniform, PhononSpectrum, SidebandGrid};
use crate::units::HBAR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrelatorSettings {
    /// Grid points along each of `t` and `τ`.
    pub points: usize,
    /// Window length in units of the slowest population lifetime.
    pub span_lifetimes: f64,
    /// How many times the window may grow by 1.5x when the tail is truncated.
    pub max_extensions: usize,
}

impl Default for CorrelatorSettings {
    fn default() -> Self {
        Self {
            points: 600,
            span_lifetimes: 12.0,
            max_extensions: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub quadrature: QuadSettings,
    pub sideband: SidebandGrid,
    pub ode: OdeSettings,
    pub correlator: CorrelatorSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullSpectrumResult {
    pub temperature_k: f64,
    /// `η²_ZPL,cav · I_ZPL`.
    pub i_full: f64,
    pub i_zpl: f64,
    /// Bulk ZPL fraction.
    pub eta_zpl: f64,
    /// ZPL share of the collected light.
    pub eta_zpl_cav: f64,
    pub f_eff: f64,
    /// Collected fraction of the emission from the dynamics: cavity ZPL flux
    /// plus sideband feeding of the collected mode. One for a bare emitter.
    pub beta: f64,
    #[serde(rename = "gamma_star_ueV")]
    pub gamma_star_uev: f64,
    pub budget: EmissionBudget,
}

/// Indistinguishability of the collected light from an emitter with phonon
/// bath `bath` (its temperature sets `γ*` and the sideband).
pub fn full_spectrum_indistinguishability(
    cav: &CavityParams,
    qd: &QDParams,
    bath: &PhononBath,
    settings: &SolverSettings,
) -> Result<FullSpectrumResult> {
    let phonons = PhononSpectrum::compute(bath, &settings.sideband, &settings.quadrature)?;
    let gamma_star = pure_dephasing_rate(qd, bath.temperature_k)?;
    full_spectrum_with(cav, qd, &phonons, gamma_star, settings)
}

/// As [`full_spectrum_indistinguishability`] with a precomputed sideband and
/// an explicit pure-dephasing rate (µeV).
///
/// With `g = 0` the bare emitter is collected directly: all light counts and
/// the ZPL share is the bulk one.
pub fn full_spectrum_with(
    cav: &CavityParams,
    qd: &QDParams,
    phonons: &PhononSpectrum,
    gamma_star: f64,
    settings: &SolverSettings,
) -> Result<FullSpectrumResult> {
    if !(gamma_star.is_finite() && gamma_star >= 0.0) {
        return Err(Error::invalid("gamma_star", "must be finite and >= 0"));
    }
    let budget = effective_purcell_with_psb(cav, qd, phonons, gamma_star)?;
    let eta = phonons.eta_zpl;

    if cav.g_uev == 0.0 {
        let model = LindbladModel {
            g_uev: 0.0,
            kappa_uev: cav.kappa_uev,
            detuning_uev: 0.0,
            gamma_loss_per_ns: qd.gamma0_per_ns,
            gamma_star_uev: gamma_star,
        };
        let (i_zpl, _) = zpl_indistinguishability(&model, Observable::EmitterDipole, settings)?;
        return Ok(FullSpectrumResult {
            temperature_k: phonons.temperature_k,
            i_full: eta * eta * i_zpl,
            i_zpl,
            eta_zpl: eta,
            eta_zpl_cav: eta,
            f_eff: 0.0,
            beta: 1.0,
            gamma_star_uev: gamma_star,
            budget,
        });
    }

    let mode = cav.collected_mode();
    // Sidebands feed the collected mode incoherently: a decay channel of the
    // emitter that is counted as collected but carries no ZPL coherence.
    let sideband_feed = budget.collected_sideband * qd.gamma0_per_ns;
    let model = LindbladModel {
        g_uev: mode.g_uev * eta.sqrt(),
        kappa_uev: cav.kappa_uev,
        detuning_uev: mode.detuning_uev,
        gamma_loss_per_ns: budget.gamma_loss_per_ns + sideband_feed,
        gamma_star_uev: gamma_star,
    };
    let (i_zpl, trajectory) = zpl_indistinguishability(&model, Observable::CavityField, settings)?;
    let step = trajectory.times[1] - trajectory.times[0];
    let cavity: Vec<f64> = trajectory
        .states
        .iter()
        .map(|s| s.cavity_population())
        .collect();
    let emitter: Vec<f64> = trajectory
        .states
        .iter()
        .map(|s| s.emitter_population())
        .collect();
    let beta = cav.kappa_uev / HBAR * trapezoid_uniform(&cavity, step)
        + sideband_feed * trapezoid_uniform(&emitter, step);

    Ok(FullSpectrumResult {
        temperature_k: phonons.temperature_k,
        i_full: budget.eta_zpl_cav * budget.eta_zpl_cav * i_zpl,
        i_zpl,
        eta_zpl: eta,
        eta_zpl_cav: budget.eta_zpl_cav,
        f_eff: budget.f_eff,
        beta,
        gamma_star_uev: gamma_star,
        budget,
    })
}

/// Window `[0, 2·span]` on `2·points − 1` nodes, with `span` set from the
/// slowest lifetime.
pub fn correlator_grid(
    model: &LindbladModel,
    settings: &CorrelatorSettings,
    extension: f64,
) -> Vec<f64> {
    let span = extension * settings.span_lifetimes / model.slowest_decay_rate();
    let step = span / (settings.points - 1) as f64;
    (0..2 * settings.points - 1)
        .map(|i| i as f64 * step)
        .collect()
}

/// Evolve, correlate and integrate; grows the window on truncation.
pub fn zpl_indistinguishability(
    model: &LindbladModel,
    observable: Observable,
    settings: &SolverSettings,
) -> Result<(f64, Trajectory)> {
    if settings.correlator.points < 3 {
        return Err(Error::invalid("correlator points", "must be >= 3"));
    }
    let mut extension = 1.0;
    let mut attempt = 0;
    loop {
        let grid = correlator_grid(model, &settings.correlator, extension);
        let trajectory = evolve_density_matrix(model, &grid, &settings.ode)?;
        let g = two_time_correlator(model, &trajectory, observable, &settings.ode)?;
        match indistinguishability_from_correlator(&g) {
            Ok(i) => return Ok((i, trajectory)),
            Err(Error::GridSpan { .. }) if attempt < settings.correlator.max_extensions => {
                attempt += 1;
                extension *= 1.5;
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SolverSettings {
        SolverSettings {
            correlator: CorrelatorSettings {
                points: 300,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn bulk_limit_at_zero_temperature() {
        let cav = CavityParams::single_mode(0.0, 90.0, 0.0);
        let r = full_spectrum_indistinguishability(
            &cav,
            &QDParams::default(),
            &PhononBath::gaas_device(0.0),
            &quick(),
        )
        .unwrap();
        assert!((r.i_zpl - 1.0).abs() < 1e-3);
        assert!((r.i_full - r.eta_zpl * r.eta_zpl).abs() < 1e-3);
        assert!((r.i_full - 0.87).abs() < 0.01);
        assert_eq!(r.beta, 1.0);
    }

    #[test]
    fn bad_cavity_without_phonons_is_coherent() {
        let bath = PhononBath::gaas_device(0.0).with_deformation_potential(0.0);
        let cav = CavityParams::single_mode(10.0, 200.0, 0.0);
        let r = full_spectrum_indistinguishability(&cav, &QDParams::default(), &bath, &quick())
            .unwrap();
        assert!((r.i_full - 1.0).abs() < 1e-3);
        assert!((r.beta - r.f_eff / (1.0 + r.f_eff)).abs() < 0.01);
    }

    #[test]
    fn collected_fraction_matches_budget_in_bad_cavity() {
        let qd = QDParams::default();
        let bath = PhononBath::gaas_device(10.0);
        let cav = CavityParams::single_mode(8.0, 160.0, 0.0);
        let r = full_spectrum_indistinguishability(&cav, &qd, &bath, &quick()).unwrap();
        assert!(
            (r.beta / r.budget.beta - 1.0).abs() < 0.02,
            "{} vs {}",
            r.beta,
            r.budget.beta
        );
    }

    #[test]
    fn rejects_negative_dephasing() {
        let bath = PhononBath::gaas_device(4.0);
        let phonons =
            PhononSpectrum::compute(&bath, &SidebandGrid::default(), &QuadSettings::default())
                .unwrap();
        let cav = CavityParams::single_mode(19.0, 90.0, 0.0);
        assert!(full_spectrum_with(&cav, &QDParams::default(), &phonons, -1.0, &quick()).is_err());
    }
}
