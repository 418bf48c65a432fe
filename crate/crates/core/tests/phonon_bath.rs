use cqed_core::spectrum::log_friendly_grid;
use cqed_core::units::{HBAR, KB};
use cqed_core::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn spectrum(t: f64) -> PhononSpectrum {
    PhononSpectrum::compute(
        &PhononBath::gaas_device(t),
        &SidebandGrid::default(),
        &QuadSettings::default(),
    )
    .unwrap()
}

#[test]
fn zpl_weight_at_measurement_temperatures() {
    assert!((spectrum(9.0).eta_zpl - 0.81).abs() < 0.01);
    assert!((spectrum(20.0).eta_zpl - 0.64).abs() < 0.01);
}

#[test]
fn sideband_is_the_fourier_transform_of_the_phase_correlator() {
    // Two independent routes: adaptive quadrature of φ(τ) in the time domain
    // against the FFT-built sideband density. At 0 K the phonon weight has a
    // kink at zero energy, which limits the grid sum to ~1e-7.
    let q = QuadSettings::default();
    for t in [0.0, 10.0, 20.0] {
        let bath = PhononBath::gaas_device(t);
        let s = spectrum(t);
        let taus = [0.05, 0.3, 1.0, 2.5, 6.0];
        let pf = phase_function(&bath, &taus, &q).unwrap();
        for (k, &tau_ps) in taus.iter().enumerate() {
            let tau_ns = tau_ps * 1e-3;
            let ft: Complex64 = s
                .detuning()
                .iter()
                .zip(s.density())
                .map(|(d, r)| Complex64::from_polar(r * s.step(), d * tau_ns / HBAR))
                .sum();
            let corr = (-pf.phi[k]).exp() - (-pf.phi_infinity).exp();
            assert!(
                (ft - corr).norm() < 1e-6,
                "T={t} τ={tau_ps}: {ft} vs {corr}"
            );
        }
    }
}

#[test]
fn bulk_spectrum_is_normalised() {
    for t in [0.0, 9.0, 20.0] {
        let s = spectrum(t);
        let gs = pure_dephasing_rate(&QDParams::default(), t).unwrap();
        let fwhm = HBAR + gs;
        let grid = log_friendly_grid(30_000.0, fwhm, 4000);
        let b = bulk_spectrum(&s, 1.0, gs, &grid).unwrap();
        // The Lorentzian tails beyond ±30 meV hold 2·fwhm/(2π·30 meV).
        let tails = s.eta_zpl * fwhm / (std::f64::consts::PI * 30_000.0);
        assert!(
            (b.total.integral() + tails - 1.0).abs() < 1e-3,
            "T={t}: {}",
            b.total.integral()
        );
    }
}

#[test]
fn zero_temperature_sideband_has_no_blue_side() {
    let s = spectrum(0.0);
    let blue = s.density_at(1000.0);
    let red = s.density_at(-1000.0);
    assert!(red > 0.0);
    assert!(blue <= 1e-6 * red);
}

#[test]
fn uncoupled_emitter_is_a_pure_lorentzian() {
    let bath = PhononBath::gaas_device(15.0).with_deformation_potential(0.0);
    let s =
        PhononSpectrum::compute(&bath, &SidebandGrid::default(), &QuadSettings::default()).unwrap();
    let grid = log_friendly_grid(4000.0, 1.0, 400);
    let b = bulk_spectrum(&s, 1.0, 0.3, &grid).unwrap();
    for (w, i) in grid.iter().zip(&b.total.intensity) {
        assert_eq!(*i, spectrum::lorentzian(*w, HBAR + 0.3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn detailed_balance(t in 4.0..25.0f64, delta in 150.0..1200.0f64) {
        let s = spectrum(t);
        let ratio = s.density_at(delta) / s.density_at(-delta);
        let expected = (-delta / (KB * t)).exp();
        prop_assert!((ratio / expected - 1.0).abs() < 0.02, "{ratio} vs {expected}");
    }

    #[test]
    fn zpl_weight_falls_with_coupling(t in 0.0..30.0f64, d1 in 1.0..20.0f64, d2 in 1.0..20.0f64) {
        let q = QuadSettings::default();
        let bath = PhononBath::gaas_device(t);
        let a = zpl_fraction(&bath.with_deformation_potential(d1.min(d2)), &q).unwrap();
        let b = zpl_fraction(&bath.with_deformation_potential(d1.max(d2)), &q).unwrap();
        prop_assert!(a >= b);
        prop_assert!(b > 0.0 && a <= 1.0);
    }
}
