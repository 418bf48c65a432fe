//! Phonon-limited indistinguishability of photons from quantum-dot–cavity
//! single-photon sources: phonon sidebands, cavity dynamics, device sweeps
//! and HOM histogram analysis.
//!
//! Units: energies in µeV, times in ns, rates in ns⁻¹, temperatures in K.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod device;
pub mod error;
pub mod hom;
pub mod ode;
pub mod phonon;
pub mod quadrature;
pub mod spectrum;
pub mod units;

pub use cavity::{
    effective_purcell_no_phonon, effective_purcell_with_psb, full_spectrum_indistinguishability,
    loss_rate_with_mode_splitting, CavityParams, CorrelatorSettings, EmissionBudget,
    FullSpectrumResult, PurcellEstimate, SolverSettings,
};
pub use device::{
    counterfactual_curves, run_sweep, DephasingMode, DeviceConfig, SimRow, Spacing,
    SweepConstraint, SweepParameter, SweepSpec, SweepTable,
};
pub use error::{Error, Result};
pub use hom::{
    analyze_hom, corrected_indistinguishability, extract_g2, fit_peak_train, BeamSplitter,
    CoincidenceHistogram, HOMResult, HomAnalysisParams, PeakSelection, PeakTrainFit,
    SyntheticHistogram, SyntheticKind,
};
pub use ode::OdeSettings;
pub use phonon::{
    bose_occupation, phase_function, pure_dephasing_rate, zpl_fraction, PhononBath, QDParams,
};
pub use quadrature::QuadSettings;
pub use spectrum::{bulk_spectrum, PhononSpectrum, SidebandGrid};
