//! Physical constants and the internal unit system.
//!
//! Energies are carried in µeV and times in ns throughout the crate, so
//! that `ħ = 0.658 µeV·ns` and a rate of `1 ns⁻¹` corresponds to a linewidth
//! of `0.658 µeV`. Phonon time scales are quoted in ps at the API boundary.

/// Reduced Planck constant in µeV·ns.
pub const HBAR: f64 = 0.658_211_956_9;

/// Boltzmann constant in µeV/K.
pub const KB: f64 = 86.173_33;

/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Elementary charge (J per eV).
pub const EV: f64 = 1.602_176_634e-19;

pub const PS_PER_NS: f64 = 1.0e3;

/// Thermal energy `k_B T` in µeV.
#[inline]
pub fn thermal_energy(temperature_k: f64) -> f64 {
    KB * temperature_k
}

/// Converts a rate in ns⁻¹ into a linewidth in µeV.
#[inline]
pub fn rate_to_energy(rate_per_ns: f64) -> f64 {
    HBAR * rate_per_ns
}

/// Converts a linewidth in µeV into a rate in ns⁻¹.
#[inline]
pub fn energy_to_rate(energy_uev: f64) -> f64 {
    energy_uev / HBAR
}
