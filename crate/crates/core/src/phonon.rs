//! Exciton coupling to longitudinal-acoustic phonons via the deformation
//! potential, solved exactly in the independent-boson model.
//!
//! All energy arguments are `ħω` in µeV. A positive phonon energy in the
//! signed weight [`PhononBath::phonon_weight`] denotes phonon *emission*,
//! which red-shifts the photon.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadSettings};
use crate::units::{thermal_energy, EV, HBAR, HBAR_SI, PS_PER_NS};

/// Upper integration limit in units of the cutoff energy `ħ c_s / σ`.
pub const CUTOFF_MULTIPLE: f64 = 10.0;

/// Largest per-point quadrature error accepted for the phase function.
pub const PHASE_QUAD_ERROR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononBath {
    /// Exciton deformation potential `D = D_e + D_h` (eV).
    pub deformation_potential_ev: f64,
    /// Gaussian confinement length of electron and hole (nm).
    pub confinement_nm: f64,
    /// Longitudinal sound speed (m/s).
    pub sound_speed_m_s: f64,
    /// Mass density (kg/m³).
    pub mass_density_kg_m3: f64,
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
}

impl PhononBath {
    /// GaAs sound speed and density with the device exciton parameters.
    pub const GAAS_SOUND_SPEED: f64 = 5110.0;
    pub const GAAS_DENSITY: f64 = 5370.0;

    pub fn new(
        deformation_potential_ev: f64,
        confinement_nm: f64,
        sound_speed_m_s: f64,
        mass_density_kg_m3: f64,
        temperature_k: f64,
    ) -> Result<Self> {
        let bath = Self {
            deformation_potential_ev,
            confinement_nm,
            sound_speed_m_s,
            mass_density_kg_m3,
            temperature_k,
        };
        bath.validate()?;
        Ok(bath)
    }

    /// `D = 14 eV`, `σ = 5 nm` in GaAs.
    pub fn gaas_device(temperature_k: f64) -> Self {
        Self {
            deformation_potential_ev: 14.0,
            confinement_nm: 5.0,
            sound_speed_m_s: Self::GAAS_SOUND_SPEED,
            mass_density_kg_m3: Self::GAAS_DENSITY,
            temperature_k,
        }
    }

    /// A vanishing deformation potential is accepted and yields a bath
    /// without sidebands.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        if !(self.deformation_potential_ev.is_finite() && self.deformation_potential_ev >= 0.0) {
            return Err(Error::invalid(
                "deformation_potential_ev",
                "must be finite and >= 0",
            ));
        }
        positive("confinement_nm", self.confinement_nm)?;
        positive("sound_speed_m_s", self.sound_speed_m_s)?;
        positive("mass_density_kg_m3", self.mass_density_kg_m3)?;
        if !(self.temperature_k.is_finite() && self.temperature_k >= 0.0) {
            return Err(Error::invalid("temperature_k", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn with_temperature(&self, temperature_k: f64) -> Self {
        Self {
            temperature_k,
            ..*self
        }
    }

    pub fn with_deformation_potential(&self, deformation_potential_ev: f64) -> Self {
        Self {
            deformation_potential_ev,
            ..*self
        }
    }

    /// Cutoff energy `ħ c_s / σ` in µeV.
    pub fn cutoff_energy(&self) -> f64 {
        HBAR_SI * self.sound_speed_m_s / (self.confinement_nm * 1e-9) / EV * 1e6
    }

    /// Zero-temperature `∫ J(ω)/ω² dω = D² / (4π² ρ ħ c_s³ σ²)`.
    pub fn huang_rhys(&self) -> f64 {
        let d = self.deformation_potential_ev * EV;
        let sigma = self.confinement_nm * 1e-9;
        d * d
            / (4.0
                * PI
                * PI
                * self.mass_density_kg_m3
                * HBAR_SI
                * self.sound_speed_m_s.powi(3)
                * sigma
                * sigma)
    }

    /// Spectral density `J` at phonon energy `ħω` (µeV), in µeV:
    /// `J = S E³/E_c² exp(-E²/2E_c²)`, normalised so that `∫ J/E² dE = S`.
    pub fn spectral_density(&self, energy: f64) -> f64 {
        energy * energy * self.coupling_weight(energy)
    }

    /// `J(E)/E²`, linear in `E` at the origin (µeV⁻¹).
    pub fn coupling_weight(&self, energy: f64) -> f64 {
        let ec = self.cutoff_energy();
        self.huang_rhys() * energy / (ec * ec) * (-0.5 * (energy / ec).powi(2)).exp()
    }

    /// `J(E)/E² (2N(E) + 1)`, with the finite `E → 0` limit `2 k_B T S / E_c²`.
    pub fn thermal_weight(&self, energy: f64) -> f64 {
        let ec = self.cutoff_energy();
        let gauss = self.huang_rhys() / (ec * ec) * (-0.5 * (energy / ec).powi(2)).exp();
        let kt = thermal_energy(self.temperature_k);
        if kt == 0.0 {
            return gauss * energy;
        }
        let x = 0.5 * energy / kt;
        let e_coth = if x.abs() < 1e-4 {
            2.0 * kt * (1.0 + x * x / 3.0)
        } else {
            energy / x.tanh()
        };
        gauss * e_coth
    }

    /// Signed phonon weight `J(|E|)/E² (N(|E|) + θ(E))` over the whole real
    /// axis. Positive `E` is phonon emission, negative `E` absorption; it
    /// obeys `f(-E) = exp(-E/k_BT) f(E)`.
    pub fn phonon_weight(&self, energy: f64) -> f64 {
        let ec = self.cutoff_energy();
        let gauss = self.huang_rhys() / (ec * ec) * (-0.5 * (energy / ec).powi(2)).exp();
        let kt = thermal_energy(self.temperature_k);
        if kt == 0.0 {
            return if energy > 0.0 { gauss * energy } else { 0.0 };
        }
        let x = energy / kt;
        let occupied = if x.abs() < 1e-8 {
            kt + 0.5 * energy
        } else {
            energy / -(-x).exp_m1()
        };
        gauss * occupied
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QDParams {
    /// Radiative decay rate without cavity (ns⁻¹).
    pub gamma0_per_ns: f64,
    /// Pure-dephasing prefactor α (µeV).
    #[serde(rename = "alpha_ueV")]
    pub alpha_uev: f64,
    /// Energy of the maximally coupled phonons ε_p (µeV).
    #[serde(rename = "eps_p_ueV")]
    pub eps_p_uev: f64,
}

impl Default for QDParams {
    fn default() -> Self {
        Self {
            gamma0_per_ns: 1.0,
            alpha_uev: 0.1,
            eps_p_uev: 1000.0,
        }
    }
}

impl QDParams {
    pub fn new(gamma0_per_ns: f64, alpha_uev: f64, eps_p_uev: f64) -> Result<Self> {
        let qd = Self {
            gamma0_per_ns,
            alpha_uev,
            eps_p_uev,
        };
        qd.validate()?;
        Ok(qd)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0_per_ns.is_finite() && self.gamma0_per_ns > 0.0) {
            return Err(Error::invalid("gamma0_per_ns", "must be > 0"));
        }
        if !(self.alpha_uev.is_finite() && self.alpha_uev >= 0.0) {
            return Err(Error::invalid("alpha_uev", "must be >= 0"));
        }
        if !(self.eps_p_uev.is_finite() && self.eps_p_uev > 0.0) {
            return Err(Error::invalid("eps_p_uev", "must be > 0"));
        }
        Ok(())
    }

    /// Bulk radiative linewidth `ħγ₀` in µeV.
    pub fn gamma0_energy(&self) -> f64 {
        HBAR * self.gamma0_per_ns
    }
}

/// Bose–Einstein occupation of a mode of energy `energy` (µeV).
pub fn bose_occupation(energy: f64, temperature_k: f64) -> Result<f64> {
    if !(temperature_k.is_finite() && temperature_k >= 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be >= 0, got {temperature_k}"
        )));
    }
    if !(energy.is_finite() && energy >= 0.0) {
        return Err(Error::Domain(format!(
            "mode energy must be >= 0, got {energy}"
        )));
    }
    if temperature_k == 0.0 {
        return Ok(0.0);
    }
    if energy == 0.0 {
        return Err(Error::Domain(
            "occupation diverges for a zero-energy mode at T > 0".into(),
        ));
    }
    Ok(1.0 / (energy / thermal_energy(temperature_k)).exp_m1())
}

/// Thermally activated Markovian pure dephasing `γ*(T) = α n (n + 1)` with
/// `n` the occupation at `ε_p`. Returned as a linewidth in µeV.
pub fn pure_dephasing_rate(qd: &QDParams, temperature_k: f64) -> Result<f64> {
    let n = bose_occupation(qd.eps_p_uev, temperature_k)?;
    Ok(qd.alpha_uev * n * (n + 1.0))
}

/// Phase `φ(τ)` of the polarisation `exp(-φ(τ))` on a grid of delays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseFunction {
    pub tau_ps: Vec<f64>,
    pub phi: Vec<Complex64>,
    pub phi_infinity: f64,
    /// Largest quadrature error estimate over the grid.
    pub max_error: f64,
}

/// `φ_∞ = ∫ J/ω² (2N + 1) dω`, the Huang–Rhys factor at temperature `T`.
pub fn phi_infinity(bath: &PhononBath, quad: &QuadSettings) -> Result<f64> {
    bath.validate()?;
    if bath.deformation_potential_ev == 0.0 {
        return Ok(0.0);
    }
    let upper = CUTOFF_MULTIPLE * bath.cutoff_energy();
    Ok(integrate(|e| bath.thermal_weight(e), 0.0, upper, quad)?.value)
}

/// Evaluates
/// `φ(τ) = ∫ J/ω² (N [1 - e^{iωτ}] + (N + 1) [1 - e^{-iωτ}]) dω`
/// by adaptive quadrature at every delay in `tau_ps`.
pub fn phase_function(
    bath: &PhononBath,
    tau_ps: &[f64],
    quad: &QuadSettings,
) -> Result<PhaseFunction> {
    bath.validate()?;
    if let Some(bad) = tau_ps.iter().find(|t| !t.is_finite()) {
        return Err(Error::invalid(
            "tau_grid",
            format!("non-finite delay {bad}"),
        ));
    }
    let phi_inf = phi_infinity(bath, quad)?;
    let upper = CUTOFF_MULTIPLE * bath.cutoff_energy();
    let points: Vec<Result<(Complex64, f64)>> = tau_ps
        .par_iter()
        .map(|&tau| {
            if tau == 0.0 || bath.deformation_potential_ev == 0.0 {
                return Ok((Complex64::new(0.0, 0.0), 0.0));
            }
            // ω τ with ω = E/ħ (ns⁻¹) and τ in ns.
            let scale = tau / PS_PER_NS / HBAR;
            let r = integrate(
                |e| {
                    let (s, c) = (e * scale).sin_cos();
                    Complex64::new(
                        bath.thermal_weight(e) * (1.0 - c),
                        bath.coupling_weight(e) * s,
                    )
                },
                0.0,
                upper,
                quad,
            )?;
            Ok((r.value, r.error))
        })
        .collect();

    let mut phi = Vec::with_capacity(tau_ps.len());
    let mut max_error: f64 = 0.0;
    let mut worst_tau = 0.0;
    for (res, &tau) in points.into_iter().zip(tau_ps) {
        let (v, e) = res?;
        if e > max_error {
            max_error = e;
            worst_tau = tau;
        }
        phi.push(v);
    }
    if max_error > PHASE_QUAD_ERROR {
        return Err(Error::Quadrature {
            residual: max_error,
            location: format!("tau = {worst_tau} ps"),
        });
    }
    Ok(PhaseFunction {
        tau_ps: tau_ps.to_vec(),
        phi,
        phi_infinity: phi_inf,
        max_error,
    })
}

/// Debye–Waller weight of the zero-phonon line, `exp(-φ_∞)`.
pub fn zpl_fraction(bath: &PhononBath, quad: &QuadSettings) -> Result<f64> {
    Ok((-phi_infinity(bath, quad)?).exp())
}
