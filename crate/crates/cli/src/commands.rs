use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cqed_core::cavity::{cavity_spectrum, CavitySpectrum};
use cqed_core::hom::{analyze_hom, CoincidenceHistogram, PeakTrainFit, SyntheticKind};
use cqed_core::spectrum::{bulk_spectrum, log_friendly_grid, BulkSpectrum};
use cqed_core::units::HBAR;
use cqed_core::{
    counterfactual_curves, pure_dephasing_rate, run_sweep, DephasingMode, EmissionBudget,
    PhononSpectrum, SweepTable,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::*;

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SpectrumSummary {
    #[serde(rename = "temperature_K")]
    temperature_k: f64,
    eta_zpl: f64,
    #[serde(rename = "gamma_star_ueV")]
    gamma_star_uev: f64,
    #[serde(rename = "bulk_zpl_fwhm_ueV")]
    bulk_zpl_fwhm_uev: f64,
    #[serde(rename = "cavity_zpl_fwhm_ueV")]
    cavity_zpl_fwhm_uev: Option<f64>,
    cavity_budget: Option<EmissionBudget>,
}

struct SpectrumAt {
    temperature_k: f64,
    eta_zpl: f64,
    gamma_star: f64,
    bulk: BulkSpectrum,
    cavity: Option<CavitySpectrum>,
}

pub fn spectrum(mut cfg: SpectrumConfig) -> CliResult<Vec<PathBuf>> {
    let device = cfg.device.resolve()?;
    cfg.device = DeviceRef::Inline(device.clone());
    if cfg.temperatures_k.is_empty() {
        return Err(CliError::Config("`temperatures_K` is empty".into()));
    }
    if !(cfg.window_uev.is_finite() && cfg.window_uev > 0.0) || cfg.log_points == 0 {
        return Err(CliError::Config(
            "`window_ueV` and `log_points` must be positive".into(),
        ));
    }
    let dir = output_dir(&cfg.output_dir)?;

    let results: Vec<SpectrumAt> = cfg
        .temperatures_k
        .par_iter()
        .map(|&t| -> CliResult<SpectrumAt> {
            let bath = device.bath.with_temperature(t);
            bath.validate()?;
            let phonons = PhononSpectrum::compute(&bath, &cfg.sideband, &cfg.quadrature)?;
            let gamma_star = match cfg.dephasing {
                DephasingMode::Full => pure_dephasing_rate(&device.qd, t)?,
                DephasingMode::Zero => 0.0,
            };
            let fwhm = HBAR * device.qd.gamma0_per_ns + gamma_star;
            let grid = log_friendly_grid(cfg.window_uev, fwhm, cfg.log_points);
            let bulk = bulk_spectrum(&phonons, device.qd.gamma0_per_ns, gamma_star, &grid)?;
            let cavity = if device.cavity.g_uev > 0.0 {
                Some(cavity_spectrum(
                    &device.cavity,
                    &device.qd,
                    &phonons,
                    gamma_star,
                    &grid,
                )?)
            } else {
                None
            };
            Ok(SpectrumAt {
                temperature_k: t,
                eta_zpl: phonons.eta_zpl,
                gamma_star,
                bulk,
                cavity,
            })
        })
        .collect::<CliResult<_>>()?;

    write_sidecar(&dir, &cfg)?;
    let mut written = Vec::new();
    let mut summary = Vec::new();
    for r in &results {
        let path = dir.join(format!("spectrum_{}K.csv", r.temperature_k));
        let mut w = csv::Writer::from_writer(create(&path)?);
        let mut header = vec!["omega_ueV", "bulk", "bulk_zpl", "bulk_sideband"];
        if r.cavity.is_some() {
            header.extend(["cavity", "cavity_zpl", "cavity_sideband"]);
        }
        w.write_record(&header)?;
        for k in 0..r.bulk.total.omega_grid.len() {
            let mut row = vec![
                r.bulk.total.omega_grid[k],
                r.bulk.total.intensity[k],
                r.bulk.zpl[k],
                r.bulk.sideband[k],
            ];
            if let Some(c) = &r.cavity {
                row.extend([c.total.intensity[k], c.zpl[k], c.sideband[k]]);
            }
            w.write_record(row.iter().map(f64::to_string))?;
        }
        w.flush()?;
        written.push(path);
        summary.push(SpectrumSummary {
            temperature_k: r.temperature_k,
            eta_zpl: r.eta_zpl,
            gamma_star_uev: r.gamma_star,
            bulk_zpl_fwhm_uev: r.bulk.zpl_fwhm,
            cavity_zpl_fwhm_uev: r.cavity.as_ref().map(|c| c.zpl_fwhm),
            cavity_budget: r.cavity.as_ref().map(|c| c.budget),
        });
    }
    let path = dir.join("summary.json");
    write_json(&path, &summary)?;
    written.push(path);
    Ok(written)
}

fn write_table(path: &Path, table: &SweepTable) -> CliResult<()> {
    let mut out = create(path)?;
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn failed_rows(tables: &[&SweepTable]) -> usize {
    tables
        .iter()
        .flat_map(|t| &t.rows)
        .filter(|r| !r.is_ok())
        .count()
}

/// Writes every table, then reports rows whose solver failed as a numerical error.
pub fn sweep(mut cfg: SweepConfig) -> CliResult<Vec<PathBuf>> {
    let device = cfg.device.resolve()?;
    cfg.device = DeviceRef::Inline(device.clone());
    cfg.sweep.validate()?;
    let dir = output_dir(&cfg.output_dir)?;

    let mut written = Vec::new();
    let failures = if cfg.counterfactual {
        let pair = counterfactual_curves(&device, &cfg.sweep, &cfg.solver)?;
        write_sidecar(&dir, &cfg)?;
        for (name, table) in [
            ("sweep.csv", &pair.full),
            ("sweep_zero_dephasing.csv", &pair.zero_dephasing),
        ] {
            let path = dir.join(name);
            write_table(&path, table)?;
            written.push(path);
        }
        let path = dir.join("counterfactual.csv");
        let mut out = create(&path)?;
        pair.write_csv(&mut out)?;
        out.flush()?;
        written.push(path);
        failed_rows(&[&pair.full, &pair.zero_dephasing])
    } else {
        let table = run_sweep(&device, &cfg.sweep, &cfg.solver)?;
        write_sidecar(&dir, &cfg)?;
        let path = dir.join("sweep.csv");
        write_table(&path, &table)?;
        written.push(path);
        failed_rows(&[&table])
    };
    if failures > 0 {
        return Err(CliError::Numerical(format!(
            "{failures} sweep point(s) failed; see the status column in {}",
            dir.display()
        )));
    }
    Ok(written)
}

fn read_histogram(
    path: &Option<PathBuf>,
    which: &str,
    cfg: &HomConfig,
) -> CliResult<CoincidenceHistogram> {
    let path = path.as_ref().ok_or_else(|| {
        CliError::Config(format!(
            "no {which} histogram: pass --{which} or set `{which}_file`"
        ))
    })?;
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut h =
        CoincidenceHistogram::parse(std::io::BufReader::new(file)).map_err(|e| match e {
            cqed_core::Error::Io(e) => CliError::Io(format!("{}: {e}", path.display())),
            e => CliError::Config(format!("{}: {e}", path.display())),
        })?;
    h.rep_period_ns = cfg.rep_period_ns;
    h.hom_delay_ns = cfg.hom_delay_ns;
    h.validate()?;
    Ok(h)
}

fn write_residuals(path: &Path, fit: &PeakTrainFit, h: &CoincidenceHistogram) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["delay_ns", "counts", "expected", "pearson_residual"])?;
    for (t, y, mu, r) in fit.residuals(h) {
        w.write_record([t, y, mu, r].iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

fn absolute(path: &mut Option<PathBuf>) {
    if let Some(p) = path {
        if let Ok(abs) = fs::canonicalize(&*p) {
            *p = abs;
        }
    }
}

pub fn hom(mut cfg: HomConfig) -> CliResult<Vec<PathBuf>> {
    absolute(&mut cfg.hbt_file);
    absolute(&mut cfg.hom_file);
    let hbt = read_histogram(&cfg.hbt_file, "hbt", &cfg)?;
    let hom = read_histogram(&cfg.hom_file, "hom", &cfg)?;
    let dir = output_dir(&cfg.output_dir)?;
    let report = analyze_hom(&hbt, &hom, &cfg.analysis)?;

    write_sidecar(&dir, &cfg)?;
    let paths = [
        dir.join("report.json"),
        dir.join("residuals_hbt.csv"),
        dir.join("residuals_hom.csv"),
    ];
    write_json(&paths[0], &report)?;
    write_residuals(&paths[1], &report.hbt_fit, &hbt)?;
    write_residuals(&paths[2], &report.hom_fit, &hom)?;
    let r = &report.result;
    println!(
        "g2(0) = {:.4} ± {:.4}; A0/<A> = {:.4}; I = {:.4} (+{:.4} / -{:.4}){}",
        report.g2.g2_zero,
        report.g2.error,
        report.zero_delay_ratio.g2_zero,
        r.i_corrected,
        r.upper - r.i_reported,
        r.i_reported - r.lower,
        if r.outside_physical {
            " [outside [0, 1]]"
        } else {
            ""
        }
    );
    Ok(paths.to_vec())
}

pub fn synth_hom(cfg: SynthConfig) -> CliResult<Vec<PathBuf>> {
    cfg.source.validate()?;
    let dir = output_dir(&cfg.output_dir)?;
    let mut written = Vec::new();
    let mut histograms = Vec::new();
    for (n, kind) in [SyntheticKind::Hbt, SyntheticKind::Hom]
        .into_iter()
        .enumerate()
    {
        let model = cqed_core::hom::SyntheticHistogram { kind, ..cfg.source };
        let seed = cfg.seed.wrapping_mul(2).wrapping_add(n as u64);
        let h = if cfg.noiseless {
            model.expected()?
        } else {
            model.sample(seed)?
        };
        histograms.push((kind, h));
    }
    write_sidecar(&dir, &cfg)?;
    for (kind, h) in histograms {
        let path = dir.join(match kind {
            SyntheticKind::Hbt => "hbt.txt",
            SyntheticKind::Hom => "hom.txt",
        });
        let mut out = create(&path)?;
        h.write(&mut out)?;
        out.flush()?;
        written.push(path);
    }
    Ok(written)
}
