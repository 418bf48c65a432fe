//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with
//! its measured values and runtime; the process exits non-zero on any FAIL.

use std::time::{Duration, Instant};

use cqed_core::cavity::*;
use cqed_core::hom::*;
use cqed_core::spectrum::log_friendly_grid;
use cqed_core::units::{HBAR, KB};
use cqed_core::*;
use num_complex::Complex64;

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.failures.push(what.clone());
        }
        self.notes.push(what);
    }

    fn within(&mut self, label: &str, value: f64, target: f64, tol: f64) {
        let ok = (value - target).abs() <= tol;
        self.check(ok, format!("{label} = {value:.4} (want {target} ± {tol})"));
    }

    fn between(&mut self, label: &str, value: f64, lo: f64, hi: f64) {
        let ok = lo <= value && value <= hi;
        self.check(ok, format!("{label} = {value:.4} (want [{lo}, {hi}])"));
    }
}

fn run(number: usize, title: &str, budget: Duration, body: impl FnOnce(&mut Outcome)) -> bool {
    let start = Instant::now();
    let mut out = Outcome::new();
    body(&mut out);
    let elapsed = start.elapsed();
    out.check(
        elapsed <= budget,
        format!(
            "runtime {:.2}s (budget {}s)",
            elapsed.as_secs_f64(),
            budget.as_secs()
        ),
    );
    let ok = out.failures.is_empty();
    println!(
        "{} criterion {number}: {title} [{:.2}s]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    for n in &out.notes {
        let mark = if out.failures.contains(n) { "!!" } else { "  " };
        println!("    {mark} {n}");
    }
    ok
}

fn phonons(bath: &PhononBath) -> PhononSpectrum {
    PhononSpectrum::compute(bath, &SidebandGrid::default(), &QuadSettings::default()).unwrap()
}

fn uniform(n: usize, t_end: f64) -> Vec<f64> {
    (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
}

fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    let mut s = y[0] + y[n];
    for (i, v) in y.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

fn zpl_weight(out: &mut Outcome) {
    let q = QuadSettings::default();
    let d = DeviceConfig::device1();
    out.within(
        "η_ZPL(9 K)",
        zpl_fraction(&d.bath.with_temperature(9.0), &q).unwrap(),
        0.81,
        0.01,
    );
    out.within(
        "η_ZPL(20 K)",
        zpl_fraction(&d.bath.with_temperature(20.0), &q).unwrap(),
        0.64,
        0.01,
    );
}

fn effective_purcell(out: &mut Outcome) {
    let d1 = DeviceConfig::device1();
    let d2 = DeviceConfig::device2();
    for t in [0.0, 20.0] {
        let ph = phonons(&d1.bath.with_temperature(t));
        let gs = pure_dephasing_rate(&d1.qd, t).unwrap();
        let b = effective_purcell_with_psb(&d1.cavity, &d1.qd, &ph, gs).unwrap();
        let target = if t == 0.0 { 15.0 } else { 11.0 };
        out.within(&format!("device1 F_eff({t} K)"), b.f_eff, target, 1.0);
    }
    out.within(
        "device1 nominal F_P",
        d1.cavity.nominal_purcell(&d1.qd),
        24.0,
        1.0,
    );
    out.within(
        "device2 nominal F_P",
        d2.cavity.nominal_purcell(&d2.qd),
        8.0,
        0.5,
    );
}

fn zpl_indistinguishability_curve(out: &mut Outcome) {
    let d = DeviceConfig::device1();
    for (t, lo, hi) in [(9.0, 0.990, 0.998), (18.0, 0.965, 0.980)] {
        let ph = phonons(&d.bath.with_temperature(t));
        let gs = pure_dephasing_rate(&d.qd, t).unwrap();
        let b = effective_purcell_with_psb(&d.cavity, &d.qd, &ph, gs).unwrap();
        let gamma = (1.0 + b.f_eff) * d.qd.gamma0_energy();
        out.between(&format!("I_ZPL({t} K)"), gamma / (gamma + gs), lo, hi);
    }
}

fn bulk_indistinguishability(out: &mut Outcome) {
    let d = DeviceConfig::bulk();
    let settings = SolverSettings::default();
    let at = |t: f64, zero: bool| {
        let ph = phonons(&d.bath.with_temperature(t));
        let gs = if zero {
            0.0
        } else {
            pure_dephasing_rate(&d.qd, t).unwrap()
        };
        full_spectrum_with(&d.cavity, &d.qd, &ph, gs, &settings)
            .unwrap()
            .i_full
    };
    out.within("bulk I(0 K)", at(0.0, false), 0.87, 0.01);
    out.within("bulk I(20 K, γ* = 0)", at(20.0, true), 0.41, 0.02);
    out.within("bulk I(20 K)", at(20.0, false), 0.24, 0.07);
}

fn temperature_sweeps(out: &mut Outcome) {
    let settings = SolverSettings::default();
    let spec = SweepSpec::linear(SweepParameter::Temperature, 9.0, 18.0, 2);
    for (d, lo, hi) in [
        (DeviceConfig::device1(), 0.92, 0.74),
        (DeviceConfig::device2(), 0.89, 0.79),
    ] {
        let t = run_sweep(&d, &spec, &settings).unwrap();
        out.within(
            &format!("{} I(9 K)", d.name),
            t.row_at(9.0).unwrap().i_full,
            lo,
            0.05,
        );
        out.within(
            &format!("{} I(18 K)", d.name),
            t.row_at(18.0).unwrap().i_full,
            hi,
            0.05,
        );
    }
    let at20 = SweepSpec::linear(SweepParameter::Temperature, 19.0, 20.0, 2);
    let split = run_sweep(&DeviceConfig::device1(), &at20, &settings).unwrap();
    let single = run_sweep(
        &DeviceConfig::device1().without_mode_splitting(),
        &at20,
        &settings,
    )
    .unwrap();
    let (a, b) = (
        split.row_at(20.0).unwrap().i_full,
        single.row_at(20.0).unwrap().i_full,
    );
    out.check(
        b - a >= 0.10,
        format!(
            "device1 20 K without splitting {b:.4} vs split {a:.4}: gain {:.4} (want ≥ 0.10)",
            b - a
        ),
    );
}

fn linewidth_sweep(out: &mut Outcome) {
    let d = DeviceConfig::device1().without_mode_splitting();
    let settings = SolverSettings::default();
    for t in [4.0, 20.0] {
        let spec = SweepSpec {
            spacing: Spacing::Log,
            ..SweepSpec::linear(SweepParameter::Kappa, 2.0, 200.0, 41)
                .at_temperature(t)
                .with_constraint(SweepConstraint::FixedNominalPurcell { purcell: 24.0 })
        };
        let table = run_sweep(&d, &spec, &settings).unwrap();
        out.check(
            table.rows.iter().all(|r| r.is_ok()),
            format!("{t} K: all rows solved"),
        );
        let i = table.column(|r| r.i_full);
        let (arg, max) =
            i.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc },
            );
        if t == 4.0 {
            out.check(max >= 0.99, format!("4 K max I = {max:.4} (want ≥ 0.99)"));
        } else {
            out.within("20 K max I", max, 0.94, 0.05);
        }
        out.check(
            arg > 0 && arg + 1 < i.len(),
            format!(
                "{t} K interior maximum at κ = {:.2} µeV",
                table.rows[arg].value
            ),
        );
        let band: Vec<&SimRow> = table
            .rows
            .iter()
            .filter(|r| (30.0..=200.0).contains(&r.value))
            .collect();
        let rising = band.windows(2).all(|w| w[0].i_full > w[1].i_full);
        out.check(
            rising,
            format!("{t} K: I rises as κ falls over [30, 200] µeV"),
        );
        let beta: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| (20.0..=200.0).contains(&r.value))
            .map(|r| r.beta)
            .collect();
        let (lo, hi) = beta
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = (hi - lo) / hi;
        out.check(
            spread < 0.05,
            format!(
                "{t} K: β spread over [20, 200] µeV = {:.2}% (want < 5%)",
                100.0 * spread
            ),
        );
    }
}

fn property_suite(out: &mut Outcome) {
    let ode = OdeSettings::default();
    let models = [
        LindbladModel {
            g_uev: 19.0,
            kappa_uev: 90.0,
            detuning_uev: 0.0,
            gamma_loss_per_ns: 1.0,
            gamma_star_uev: 0.3,
        },
        LindbladModel {
            g_uev: 19.0,
            kappa_uev: 5.0,
            detuning_uev: 10.0,
            gamma_loss_per_ns: 1.0,
            gamma_star_uev: 0.0,
        },
        LindbladModel {
            g_uev: 8.0,
            kappa_uev: 150.0,
            detuning_uev: -40.0,
            gamma_loss_per_ns: 2.3,
            gamma_star_uev: 1.1,
        },
    ];

    let (mut trace, mut eig, mut flux, mut cs) = (0.0f64, f64::INFINITY, 0.0f64, f64::NEG_INFINITY);
    for m in &models {
        let t_end = 40.0 / m.slowest_decay_rate();
        let grid = uniform(40_001, t_end);
        let tr = evolve_density_matrix(m, &grid, &ode).unwrap();
        trace = trace.max(tr.max_trace_error());
        eig = eig.min(tr.min_eigenvalue());
        let cav: Vec<f64> = tr.states.iter().map(|s| s.cavity_population()).collect();
        let emi: Vec<f64> = tr.states.iter().map(|s| s.emitter_population()).collect();
        let exits = m.kappa_uev / HBAR * simpson(&cav, grid[1])
            + m.gamma_loss_per_ns * simpson(&emi, grid[1]);
        flux = flux.max((exits - 1.0).abs());

        let short = uniform(201, 12.0 / m.slowest_decay_rate());
        let tr = evolve_density_matrix(m, &short, &ode).unwrap();
        let g = two_time_correlator(m, &tr, Observable::CavityField, &ode).unwrap();
        let n: Vec<f64> = tr.states.iter().map(|s| s.cavity_population()).collect();
        for i in 0..g.anchors {
            for j in 0..g.anchors - i {
                // Absolute ODE error on vanishing populations is bounded by 1e-10.
                let bound = (n[i] + 1e-10) * (n[i + j] + 1e-10);
                cs = cs.max(g.value(i, j).norm_sqr() - bound);
            }
        }
    }
    out.check(
        trace < 1e-9,
        format!("max trace error {trace:.2e} (want < 1e-9)"),
    );
    out.check(
        eig > -1e-10,
        format!("min eigenvalue {eig:.2e} (want > -1e-10)"),
    );
    out.check(
        flux < 1e-6,
        format!("flux balance error {flux:.2e} (want < 1e-6)"),
    );
    out.check(
        cs <= 0.0,
        format!("Cauchy–Schwarz excess {cs:.2e} (want ≤ 0)"),
    );

    let (gamma, gs, delta) = (1.3, 0.4, 7.0);
    let m = LindbladModel {
        g_uev: 0.0,
        kappa_uev: 90.0,
        detuning_uev: delta,
        gamma_loss_per_ns: gamma,
        gamma_star_uev: gs,
    };
    let grid = uniform(301, 8.0);
    let tr = evolve_density_matrix(&m, &grid, &ode).unwrap();
    let g = two_time_correlator(&m, &tr, Observable::EmitterDipole, &ode).unwrap();
    let rate = Complex64::new(-0.5 * gamma - 0.5 * gs / HBAR, delta / HBAR);
    let mut obe: f64 = 0.0;
    for i in 0..g.anchors {
        for j in 0..g.anchors {
            let exact = (-gamma * grid[i]).exp() * (rate * grid[j]).exp();
            obe = obe.max((g.value(i, j) - exact).norm());
        }
    }
    out.check(
        obe <= 1e-6,
        format!("regression correlator vs Bloch solution {obe:.2e} (want ≤ 1e-6)"),
    );

    let qd = QDParams::default();
    let flat = phonons(&PhononBath::gaas_device(0.0).with_deformation_potential(0.0));
    let mut s12: f64 = 0.0;
    for (g, kappa, delta, gs) in [
        (19.0, 90.0, 0.0, 0.0),
        (5.0, 250.0, 40.0, 0.7),
        (30.0, 20.0, -15.0, 1.5),
    ] {
        let b =
            effective_purcell_with_psb(&CavityParams::single_mode(g, kappa, delta), &qd, &flat, gs)
                .unwrap();
        s12 = s12.max((b.beta - b.f_eff / (1.0 + b.f_eff)).abs());
    }
    out.check(
        s12 <= 1e-9,
        format!("β = F/(1+F) deviation {s12:.2e} (want ≤ 1e-9)"),
    );

    let mut norm: f64 = 0.0;
    let mut balance: f64 = 0.0;
    for t in [0.0, 9.0, 20.0] {
        let s = phonons(&PhononBath::gaas_device(t));
        let gs = pure_dephasing_rate(&qd, t).unwrap();
        let fwhm = HBAR + gs;
        let grid = log_friendly_grid(30_000.0, fwhm, 4000);
        let b = bulk_spectrum(&s, 1.0, gs, &grid).unwrap();
        let tails = s.eta_zpl * fwhm / (std::f64::consts::PI * 30_000.0);
        norm = norm.max((b.total.integral() + tails - 1.0).abs());
        if t > 0.0 {
            for e in [200.0, 500.0, 1000.0] {
                let ratio = s.density_at(e) / s.density_at(-e);
                balance = balance.max((ratio / (-e / (KB * t)).exp() - 1.0).abs());
            }
        }
    }
    out.check(
        norm <= 1e-3,
        format!("spectrum normalisation error {norm:.2e} (want ≤ 1e-3)"),
    );
    out.check(
        balance <= 0.02,
        format!("detailed balance relative error {balance:.2e} (want ≤ 2e-2)"),
    );

    let d = DeviceConfig::device1();
    let bath = d.bath.with_temperature(18.0);
    let coarse =
        full_spectrum_indistinguishability(&d.cavity, &d.qd, &bath, &SolverSettings::default())
            .unwrap();
    let mut fine = SolverSettings::default();
    fine.correlator.points = 1200;
    fine.ode.rel_tol = 1e-12;
    fine.ode.abs_tol = 1e-14;
    fine.sideband.points = 1 << 15;
    fine.sideband.span_cutoffs = 48.0;
    fine.quadrature.rel_tol = 1e-13;
    let fine = full_spectrum_indistinguishability(&d.cavity, &d.qd, &bath, &fine).unwrap();
    let change = (coarse.i_full - fine.i_full).abs();
    out.check(
        change <= 1e-3,
        format!("I change under refinement {change:.2e} (want ≤ 1e-3)"),
    );
}

fn hom_pipeline(out: &mut Outcome) {
    let ideal = BeamSplitter::default();
    let perfect = corrected_indistinguishability(0.0, 0.0, 0.5, 0.5, 0.0)
        .unwrap()
        .i_corrected;
    let none = corrected_indistinguishability(0.0, 0.5, 0.5, 0.5, 0.0)
        .unwrap()
        .i_corrected;
    let mut worst = (perfect - 1.0).abs().max(none.abs());
    for k in 0..=50 {
        let ratio = 0.01 * k as f64;
        let i = ideal.indistinguishability(0.0, ratio);
        worst = worst.max((i - (1.0 - 2.0 * ratio)).abs());
        let bs = BeamSplitter {
            r: 0.3 + 0.008 * k as f64,
            t: 0.7 - 0.008 * k as f64,
            epsilon: 0.004 * k as f64,
        };
        let g2 = 0.003 * k as f64;
        let back = bs.indistinguishability(g2, bs.zero_delay_ratio(ratio * 2.0, g2));
        worst = worst.max((back - ratio * 2.0).abs());
    }
    out.check(
        worst <= 1e-12,
        format!("interference identities worst error {worst:.2e} (want ≤ 1e-12)"),
    );

    let hom = SyntheticHistogram::default();
    let hbt = SyntheticHistogram {
        kind: SyntheticKind::Hbt,
        ..hom
    };
    let params = HomAnalysisParams::default();
    let trials = 200u64;
    let hits = (0..trials)
        .filter(|&seed| {
            let report = analyze_hom(
                &hbt.sample(2 * seed).unwrap(),
                &hom.sample(2 * seed + 1).unwrap(),
                &params,
            )
            .unwrap();
            report.result.contains(hom.indistinguishability)
        })
        .count();
    out.check(
        hits as f64 >= 0.9 * trials as f64,
        format!(
            "programmed I = {} inside bounds in {hits}/{trials} trials (want ≥ 90%)",
            hom.indistinguishability
        ),
    );
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "zero-phonon-line weight", secs(1), zpl_weight),
        run(2, "effective Purcell factors", secs(1), effective_purcell),
        run(
            3,
            "zero-phonon-line indistinguishability",
            secs(10),
            zpl_indistinguishability_curve,
        ),
        run(
            4,
            "bulk full-spectrum indistinguishability",
            secs(30),
            bulk_indistinguishability,
        ),
        run(
            5,
            "device temperature sweeps",
            secs(300),
            temperature_sweeps,
        ),
        run(
            6,
            "cavity-linewidth sweep at F = 24",
            secs(600),
            linewidth_sweep,
        ),
        run(7, "property suite", secs(120), property_suite),
        run(8, "HOM pipeline", secs(120), hom_pipeline),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
