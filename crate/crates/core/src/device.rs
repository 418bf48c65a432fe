//! Device presets and parameter sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{full_spectrum_with, CavityParams, FullSpectrumResult, SolverSettings};
use crate::error::{Error, Result};
use crate::phonon::{pure_dephasing_rate, PhononBath, QDParams};
use crate::spectrum::PhononSpectrum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub name: String,
    pub cavity: CavityParams,
    pub qd: QDParams,
    pub bath: PhononBath,
    /// Exciton fine-structure splitting (µeV). Metadata only.
    #[serde(rename = "fss_ueV")]
    pub fss_uev: f64,
}

impl DeviceConfig {
    /// Micropillar with a 90 µeV mode, collected through the mode 80 µeV above.
    pub fn device1() -> Self {
        Self {
            name: "device1".into(),
            cavity: CavityParams {
                g_uev: 19.0,
                kappa_uev: 90.0,
                detuning_uev: 0.0,
                mode_splitting_uev: 80.0,
                split_modes: true,
            },
            qd: QDParams::default(),
            bath: PhononBath::gaas_device(4.0),
            fss_uev: 3.0,
        }
    }

    /// Micropillar with a 110 µeV mode, collected through the mode 40 µeV below.
    pub fn device2() -> Self {
        Self {
            name: "device2".into(),
            cavity: CavityParams {
                g_uev: 12.0,
                kappa_uev: 110.0,
                detuning_uev: 0.0,
                mode_splitting_uev: -40.0,
                split_modes: true,
            },
            qd: QDParams::default(),
            bath: PhononBath::gaas_device(4.0),
            fss_uev: 10.0,
        }
    }

    /// The same emitter without a cavity.
    pub fn bulk() -> Self {
        Self {
            name: "bulk".into(),
            cavity: CavityParams::single_mode(0.0, 90.0, 0.0),
            qd: QDParams::default(),
            bath: PhononBath::gaas_device(4.0),
            fss_uev: 0.0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "device1" => Some(Self::device1()),
            "device2" => Some(Self::device2()),
            "bulk" => Some(Self::bulk()),
            _ => None,
        }
    }

    /// Single collected mode with the full coupling: no mode splitting.
    pub fn without_mode_splitting(&self) -> Self {
        let mut d = self.clone();
        d.name = format!("{}-single-mode", self.name);
        d.cavity.split_modes = false;
        d.cavity.mode_splitting_uev = 0.0;
        d
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        self.qd.validate()?;
        self.bath.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Temperature,
    Kappa,
    Detuning,
    /// Nominal Purcell factor `4g²/(κħγ₀)`, varied through `g`.
    Purcell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SweepConstraint {
    None,
    /// Keep `4g²/(κħγ₀)` fixed by setting `g = √(F κ ħγ₀)/2` at each point.
    FixedNominalPurcell {
        purcell: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingMode {
    Full,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
    pub constraint: SweepConstraint,
    pub dephasing: DephasingMode,
    /// Temperature for sweeps over other parameters; the device bath
    /// temperature when absent.
    #[serde(rename = "temperature_K")]
    pub temperature_k: Option<f64>,
}

impl SweepSpec {
    pub fn linear(parameter: SweepParameter, start: f64, stop: f64, count: usize) -> Self {
        Self {
            parameter,
            start,
            stop,
            count,
            spacing: Spacing::Linear,
            constraint: SweepConstraint::None,
            dephasing: DephasingMode::Full,
            temperature_k: None,
        }
    }

    pub fn at_temperature(mut self, t: f64) -> Self {
        self.temperature_k = Some(t);
        self
    }

    pub fn with_constraint(mut self, c: SweepConstraint) -> Self {
        self.constraint = c;
        self
    }

    pub fn with_dephasing(mut self, d: DephasingMode) -> Self {
        self.dephasing = d;
        self
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if self.count < 2 {
            return Err(Error::invalid("count", "a sweep needs at least 2 points"));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.stop > self.start) {
            return Err(Error::invalid("grid bounds", "need finite start < stop"));
        }
        let n = (self.count - 1) as f64;
        let grid: Vec<f64> = match self.spacing {
            Spacing::Linear => (0..self.count)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / n)
                .collect(),
            Spacing::Log => {
                if self.start <= 0.0 {
                    return Err(Error::invalid("grid bounds", "log spacing needs start > 0"));
                }
                let (a, b) = (self.start.ln(), self.stop.ln());
                (0..self.count)
                    .map(|i| (a + (b - a) * i as f64 / n).exp())
                    .collect()
            }
        };
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid", "must be strictly increasing"));
        }
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if let SweepConstraint::FixedNominalPurcell { purcell } = self.constraint {
            if !(purcell.is_finite() && purcell >= 0.0) {
                return Err(Error::invalid("purcell", "must be >= 0"));
            }
            if self.parameter == SweepParameter::Purcell {
                return Err(Error::invalid(
                    "constraint",
                    "cannot fix the swept Purcell factor",
                ));
            }
        }
        match self.parameter {
            SweepParameter::Temperature | SweepParameter::Kappa | SweepParameter::Purcell
                if self.start < 0.0 =>
            {
                Err(Error::invalid(
                    "grid bounds",
                    "must be >= 0 for this parameter",
                ))
            }
            SweepParameter::Kappa if self.start == 0.0 => {
                Err(Error::invalid("grid bounds", "kappa must be > 0"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub value: f64,
    pub i_full: f64,
    pub i_zpl: f64,
    pub eta_zpl: f64,
    pub eta_zpl_cav: f64,
    pub f_eff: f64,
    pub beta: f64,
    #[serde(rename = "gamma_star_ueV")]
    pub gamma_star_uev: f64,
    /// `ok`, or the error that stopped this point.
    pub status: String,
}

impl SimRow {
    fn ok(value: f64, r: &FullSpectrumResult) -> Self {
        Self {
            value,
            i_full: r.i_full,
            i_zpl: r.i_zpl,
            eta_zpl: r.eta_zpl,
            eta_zpl_cav: r.eta_zpl_cav,
            f_eff: r.f_eff,
            beta: r.beta,
            gamma_star_uev: r.gamma_star_uev,
            status: "ok".into(),
        }
    }

    fn failed(value: f64, e: &Error) -> Self {
        Self {
            value,
            i_full: f64::NAN,
            i_zpl: f64::NAN,
            eta_zpl: f64::NAN,
            eta_zpl_cav: f64::NAN,
            f_eff: f64::NAN,
            beta: f64::NAN,
            gamma_star_uev: f64::NAN,
            status: e.to_string(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "value",
    "I_full",
    "I_zpl",
    "eta_zpl",
    "eta_zpl_cav",
    "F_eff",
    "beta",
    "gamma_star_ueV",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub device: String,
    pub parameter: SweepParameter,
    pub rows: Vec<SimRow>,
}

impl SweepTable {
    /// Row closest to `value`.
    pub fn row_at(&self, value: f64) -> Option<&SimRow> {
        self.rows
            .iter()
            .min_by(|a, b| (a.value - value).abs().total_cmp(&(b.value - value).abs()))
    }

    pub fn column(&self, f: impl Fn(&SimRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let nums = [
                r.value,
                r.i_full,
                r.i_zpl,
                r.eta_zpl,
                r.eta_zpl_cav,
                r.f_eff,
                r.beta,
                r.gamma_star_uev,
            ];
            // `Display` for f64 is the shortest string that round-trips.
            let mut record: Vec<String> = nums.iter().map(|v| v.to_string()).collect();
            record.push(r.status.clone());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Device at one sweep point.
fn configure(device: &DeviceConfig, spec: &SweepSpec, value: f64) -> (CavityParams, f64) {
    let mut cav = device.cavity;
    let mut temperature = spec.temperature_k.unwrap_or(device.bath.temperature_k);
    match spec.parameter {
        SweepParameter::Temperature => temperature = value,
        SweepParameter::Kappa => cav.kappa_uev = value,
        SweepParameter::Detuning => cav.detuning_uev = value,
        SweepParameter::Purcell => {
            cav.g_uev = CavityParams::coupling_for_purcell(value, cav.kappa_uev, &device.qd)
        }
    }
    if let SweepConstraint::FixedNominalPurcell { purcell } = spec.constraint {
        cav.g_uev = CavityParams::coupling_for_purcell(purcell, cav.kappa_uev, &device.qd);
    }
    (cav, temperature)
}

/// One row per grid point. Points are independent and run in parallel;
/// failures are recorded in the row's status instead of aborting.
pub fn run_sweep(
    device: &DeviceConfig,
    spec: &SweepSpec,
    settings: &SolverSettings,
) -> Result<SweepTable> {
    device.validate()?;
    spec.validate()?;
    let grid = spec.grid()?;

    // Only temperature sweeps change the sideband.
    let shared = if spec.parameter == SweepParameter::Temperature {
        None
    } else {
        let t = spec.temperature_k.unwrap_or(device.bath.temperature_k);
        Some(PhononSpectrum::compute(
            &device.bath.with_temperature(t),
            &settings.sideband,
            &settings.quadrature,
        ))
    };

    let rows = grid
        .par_iter()
        .map(|&value| {
            let point = || -> Result<FullSpectrumResult> {
                let (cav, temperature) = configure(device, spec, value);
                let phonons = match &shared {
                    Some(Ok(p)) => p.clone(),
                    Some(Err(e)) => return Err(Error::Domain(e.to_string())),
                    None => PhononSpectrum::compute(
                        &device.bath.with_temperature(temperature),
                        &settings.sideband,
                        &settings.quadrature,
                    )?,
                };
                let gamma_star = match spec.dephasing {
                    DephasingMode::Full => pure_dephasing_rate(&device.qd, temperature)?,
                    DephasingMode::Zero => 0.0,
                };
                full_spectrum_with(&cav, &device.qd, &phonons, gamma_star, settings)
            };
            match point() {
                Ok(r) => SimRow::ok(value, &r),
                Err(e) => SimRow::failed(value, &e),
            }
        })
        .collect();

    Ok(SweepTable {
        device: device.name.clone(),
        parameter: spec.parameter,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualPair {
    pub full: SweepTable,
    pub zero_dephasing: SweepTable,
}

impl CounterfactualPair {
    /// `I_full` with dephasing over `I_full` without: the dephasing penalty.
    pub fn ratio(&self) -> Vec<f64> {
        self.full
            .rows
            .iter()
            .zip(&self.zero_dephasing.rows)
            .map(|(a, b)| a.i_full / b.i_full)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "value",
            "I_full",
            "I_full_zero_dephasing",
            "ratio",
            "status",
        ])?;
        for ((a, b), r) in self
            .full
            .rows
            .iter()
            .zip(&self.zero_dephasing.rows)
            .zip(self.ratio())
        {
            let status = if a.is_ok() && b.is_ok() {
                "ok".to_string()
            } else if a.is_ok() {
                b.status.clone()
            } else {
                a.status.clone()
            };
            w.write_record([
                a.value.to_string(),
                a.i_full.to_string(),
                b.i_full.to_string(),
                r.to_string(),
                status,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The sweep with and without pure dephasing.
pub fn counterfactual_curves(
    device: &DeviceConfig,
    spec: &SweepSpec,
    settings: &SolverSettings,
) -> Result<CounterfactualPair> {
    Ok(CounterfactualPair {
        full: run_sweep(device, &spec.with_dephasing(DephasingMode::Full), settings)?,
        zero_dephasing: run_sweep(device, &spec.with_dephasing(DephasingMode::Zero), settings)?,
    })
}
