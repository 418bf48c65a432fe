use cqed_core::*;

fn settings() -> SolverSettings {
    let mut s = SolverSettings::default();
    s.correlator.points = 300;
    s
}

fn csv(t: &SweepTable) -> Vec<u8> {
    let mut out = Vec::new();
    t.write_csv(&mut out).unwrap();
    out
}

#[test]
fn sweeps_are_reproducible_byte_for_byte() {
    let spec = SweepSpec::linear(SweepParameter::Temperature, 4.0, 20.0, 5);
    let a = run_sweep(&DeviceConfig::device1(), &spec, &settings()).unwrap();
    let b = run_sweep(&DeviceConfig::device1(), &spec, &settings()).unwrap();
    assert_eq!(csv(&a), csv(&b));
    let header = String::from_utf8(csv(&a)).unwrap();
    assert!(header
        .starts_with("value,I_full,I_zpl,eta_zpl,eta_zpl_cav,F_eff,beta,gamma_star_ueV,status\n"));
}

#[test]
fn rows_respect_physical_ordering() {
    for d in [DeviceConfig::device1(), DeviceConfig::device2()] {
        let half = 0.5 * d.cavity.kappa_uev;
        let specs = [
            SweepSpec::linear(SweepParameter::Temperature, 0.0, 24.0, 7),
            SweepSpec::linear(SweepParameter::Detuning, -half, half, 7).at_temperature(12.0),
        ];
        for spec in specs {
            let t = run_sweep(&d, &spec, &settings()).unwrap();
            for r in &t.rows {
                assert!(r.is_ok(), "{}", r.status);
                assert!(
                    0.0 <= r.i_full && r.i_full <= r.i_zpl && r.i_zpl <= 1.0 + 1e-6,
                    "{r:?}"
                );
                assert!(r.eta_zpl_cav >= r.eta_zpl, "{r:?}");
            }
        }
    }
}

#[test]
fn detuning_response_is_peaked_and_nearly_even() {
    let d = DeviceConfig::device1().without_mode_splitting();
    let spec = SweepSpec::linear(SweepParameter::Detuning, -60.0, 60.0, 13).at_temperature(20.0);
    let t = run_sweep(&d, &spec, &settings()).unwrap();
    let i = t.column(|r| r.i_full);
    let centre = 6;
    assert!(i.iter().all(|&v| v <= i[centre]));
    for k in 1..=6 {
        let (neg, pos) = (i[centre - k], i[centre + k]);
        let delta = t.rows[centre + k].value;
        if delta <= 20.0 {
            assert!((neg - pos).abs() < 1e-3, "δ = ±{delta}: {neg} vs {pos}");
        }
        // A cavity below the line picks up the stronger red sideband.
        assert!(pos < neg);
    }

    let mut flat = d.clone();
    flat.bath = flat.bath.with_deformation_potential(0.0);
    let t = run_sweep(&flat, &spec, &settings()).unwrap();
    let i = t.column(|r| r.i_full);
    for k in 1..=6 {
        assert!((i[centre - k] - i[centre + k]).abs() < 1e-7);
    }
}

#[test]
fn bulk_counterfactual_pair_at_20_kelvin() {
    let spec = SweepSpec::linear(SweepParameter::Temperature, 19.0, 20.0, 2);
    let pair = counterfactual_curves(&DeviceConfig::bulk(), &spec, &settings()).unwrap();
    let full = pair.full.row_at(20.0).unwrap().i_full;
    let zero = pair.zero_dephasing.row_at(20.0).unwrap().i_full;
    assert!((full - 0.24).abs() <= 0.07, "{full}");
    assert!((zero - 0.42).abs() <= 0.02, "{zero}");
    assert!(pair.ratio().iter().all(|&r| r < 1.0));
}

#[test]
fn removing_the_mode_splitting_helps_device1() {
    let spec = SweepSpec::linear(SweepParameter::Temperature, 19.0, 20.0, 2);
    let split = run_sweep(&DeviceConfig::device1(), &spec, &settings()).unwrap();
    let single = run_sweep(
        &DeviceConfig::device1().without_mode_splitting(),
        &spec,
        &settings(),
    )
    .unwrap();
    let gain = single.row_at(20.0).unwrap().i_full - split.row_at(20.0).unwrap().i_full;
    assert!(gain >= 0.10, "{gain}");
}

#[test]
fn purcell_sweep_raises_the_effective_purcell_factor() {
    let spec = SweepSpec {
        spacing: Spacing::Log,
        ..SweepSpec::linear(SweepParameter::Purcell, 1.0, 100.0, 5).at_temperature(10.0)
    };
    let t = run_sweep(
        &DeviceConfig::device1().without_mode_splitting(),
        &spec,
        &settings(),
    )
    .unwrap();
    let f = t.column(|r| r.f_eff);
    assert!(f.windows(2).all(|w| w[1] > w[0]));
    let pair = counterfactual_curves(&DeviceConfig::device1(), &spec, &settings()).unwrap();
    assert!(pair.ratio().iter().all(|&r| r <= 1.0));
    let mut out = Vec::new();
    pair.write_csv(&mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 6);
}
