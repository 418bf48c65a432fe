//! `cqed`: emission spectra, device sweeps and HOM histogram analysis.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cqed_core::{DephasingMode, Spacing, SweepConstraint, SweepParameter};

use config::*;

#[derive(Parser)]
#[command(
    name = "cqed",
    version,
    about = "Phonon-limited single-photon sources in micropillar cavities"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Bulk and cavity-filtered emission spectra.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Device preset name.
        #[arg(long)]
        device: Option<String>,
        /// Temperature in K; repeat for several.
        #[arg(long = "temperature")]
        temperatures: Vec<f64>,
        /// Half-width of the detuning window in µeV.
        #[arg(long)]
        window_uev: Option<f64>,
        #[arg(long)]
        log_points: Option<usize>,
        /// Switch off pure dephasing.
        #[arg(long)]
        zero_dephasing: bool,
    },
    /// Indistinguishability and Purcell budget over a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        device: Option<String>,
        #[arg(long, value_enum)]
        parameter: Option<ParameterArg>,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        stop: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_enum)]
        spacing: Option<SpacingArg>,
        /// Hold 4g²/(κħγ₀) at this value while κ varies.
        #[arg(long)]
        fixed_purcell: Option<f64>,
        /// Temperature in K for sweeps over other parameters.
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long, value_enum)]
        dephasing: Option<DephasingArg>,
        /// Also write the sweep without pure dephasing.
        #[arg(long)]
        counterfactual: bool,
        /// Correlator grid points along each time axis.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Fit autocorrelation and interference histograms.
    Hom {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        hbt: Option<PathBuf>,
        #[arg(long)]
        hom: Option<PathBuf>,
        /// Beam-splitter reflectivity; transmission is 1 - R.
        #[arg(long)]
        r: Option<f64>,
        /// Interferometer contrast defect ε.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        rep_period_ns: Option<f64>,
        #[arg(long)]
        hom_delay_ns: Option<f64>,
    },
    /// Seeded synthetic autocorrelation and interference histograms.
    SynthHom {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        indistinguishability: Option<f64>,
        #[arg(long)]
        g2: Option<f64>,
        /// Expected counts without Poisson noise.
        #[arg(long)]
        noiseless: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ParameterArg {
    Temperature,
    Kappa,
    Detuning,
    Purcell,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpacingArg {
    Linear,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum DephasingArg {
    Full,
    Zero,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Spectrum {
            common,
            device,
            temperatures,
            window_uev,
            log_points,
            zero_dephasing,
        } => {
            let mut cfg: SpectrumConfig = load(common.config.as_deref())?;
            set(&mut cfg.device, device.map(DeviceRef::Preset));
            if !temperatures.is_empty() {
                cfg.temperatures_k = temperatures;
            }
            set(&mut cfg.window_uev, window_uev);
            set(&mut cfg.log_points, log_points);
            if zero_dephasing {
                cfg.dephasing = DephasingMode::Zero;
            }
            set(&mut cfg.output_dir, common.out.map(Some));
            commands::spectrum(cfg)
        }
        Command::Sweep {
            common,
            device,
            parameter,
            start,
            stop,
            count,
            spacing,
            fixed_purcell,
            temperature,
            dephasing,
            counterfactual,
            points,
        } => {
            let mut cfg: SweepConfig = load(common.config.as_deref())?;
            set(&mut cfg.device, device.map(DeviceRef::Preset));
            let s = &mut cfg.sweep;
            set(
                &mut s.parameter,
                parameter.map(|p| match p {
                    ParameterArg::Temperature => SweepParameter::Temperature,
                    ParameterArg::Kappa => SweepParameter::Kappa,
                    ParameterArg::Detuning => SweepParameter::Detuning,
                    ParameterArg::Purcell => SweepParameter::Purcell,
                }),
            );
            set(&mut s.start, start);
            set(&mut s.stop, stop);
            set(&mut s.count, count);
            set(
                &mut s.spacing,
                spacing.map(|v| match v {
                    SpacingArg::Linear => Spacing::Linear,
                    SpacingArg::Log => Spacing::Log,
                }),
            );
            set(
                &mut s.constraint,
                fixed_purcell.map(|purcell| SweepConstraint::FixedNominalPurcell { purcell }),
            );
            set(&mut s.temperature_k, temperature.map(Some));
            set(
                &mut s.dephasing,
                dephasing.map(|d| match d {
                    DephasingArg::Full => DephasingMode::Full,
                    DephasingArg::Zero => DephasingMode::Zero,
                }),
            );
            cfg.counterfactual |= counterfactual;
            set(&mut cfg.solver.correlator.points, points);
            set(&mut cfg.output_dir, common.out.map(Some));
            commands::sweep(cfg)
        }
        Command::Hom {
            common,
            hbt,
            hom,
            r,
            epsilon,
            rep_period_ns,
            hom_delay_ns,
        } => {
            let mut cfg: HomConfig = load(common.config.as_deref())?;
            set(&mut cfg.hbt_file, hbt.map(Some));
            set(&mut cfg.hom_file, hom.map(Some));
            if let Some(r) = r {
                cfg.analysis.beam_splitter.r = r;
                cfg.analysis.beam_splitter.t = 1.0 - r;
            }
            set(&mut cfg.analysis.beam_splitter.epsilon, epsilon);
            set(&mut cfg.rep_period_ns, rep_period_ns);
            set(&mut cfg.hom_delay_ns, hom_delay_ns);
            set(&mut cfg.output_dir, common.out.map(Some));
            commands::hom(cfg)
        }
        Command::SynthHom {
            common,
            seed,
            indistinguishability,
            g2,
            noiseless,
        } => {
            let mut cfg: SynthConfig = load(common.config.as_deref())?;
            set(&mut cfg.seed, seed);
            set(&mut cfg.source.indistinguishability, indistinguishability);
            set(&mut cfg.source.g2, g2);
            cfg.noiseless |= noiseless;
            set(&mut cfg.output_dir, common.out.map(Some));
            commands::synth_hom(cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cqed: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
