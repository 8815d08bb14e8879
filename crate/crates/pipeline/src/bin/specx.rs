use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use specx::config::{Preset, ScenarioConfig};
use specx::report::{emit_report, Aggregates, Format, RunReport};
use specx::trials::TrialData;
use specx::{run_radar, run_select_bands, run_sense, run_specx, sweep, PipelineError, SweepAxis};

/// Radar/communication spectral coexistence experiments.
#[derive(Parser)]
#[command(name = "specx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario used when no file is given.
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    /// Overrides the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Print intermediate supports and band sets.
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Comm spectrum sensing, plain OMP and OMP with known radar support.
    Sense(Common),
    /// Radar transmit-band selection on environment maps.
    SelectBands(Common),
    /// Delay-Doppler recovery with the selected bands.
    Radar(Common),
    /// The full sense / select / recover / re-sense loop.
    Specx(Common),
    /// Monte-Carlo sweep along one axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: SweepAxis,
    },
    /// Print a built-in scenario as JSON.
    Preset {
        #[arg(value_enum)]
        name: Preset,
    },
}

fn load(c: &Common) -> Result<ScenarioConfig, PipelineError> {
    let mut cfg = match &c.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => c.preset.config(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    let f = cfg.feasibility()?;
    eprintln!(
        "scenario {}: N = {} slices, M = {}, delay bins = {}, K >= {} and P >= {} for {} targets ({} coefficients available): {}",
        cfg.name,
        f.grid.n_slices(),
        cfg.channels,
        f.n_delay,
        f.requirements.k_min,
        f.requirements.p_min,
        cfg.radar.targets,
        f.requirements.b_tot,
        if f.feasible() { "feasible" } else { "infeasible" }
    );
    Ok(cfg)
}

fn dump(r: &RunReport) {
    for t in &r.trials {
        match &t.data {
            TrialData::Sense(s) => eprintln!(
                "point {} trial {}: S_C {:?} S_R {:?} omp {:?} pks {:?}",
                t.point, t.trial, s.s_c, s.s_r, s.omp, s.pks
            ),
            TrialData::Bands(b) => eprintln!("trial {}: F_C {} -> F_R {}", t.trial, b.f_c, b.f_r),
            TrialData::Radar(d) => eprintln!(
                "point {} trial {}: {} F_R {} K {} detections {} hit rate {}",
                t.point,
                t.trial,
                d.layout.label(),
                d.f_r,
                d.k,
                d.detections.len(),
                d.hit_rate
            ),
            TrialData::Specx(s) => {
                eprintln!("trial {}: initial support {:?}", t.trial, s.initial_support);
                for (i, it) in s.iterations.iter().enumerate() {
                    eprintln!(
                        "  pass {i}: F_C {} F_R {} S_R {:?} re-sensed {:?} hit rate {}",
                        it.f_c_detected, it.f_r, it.s_r, it.resensed, it.radar.hit_rate
                    );
                }
            }
        }
    }
}

fn summary(r: &RunReport) {
    let a = &r.header.accounting;
    println!(
        "rate: M = {} x f_s = {:.4e} Hz -> f_tot = {:.4e} Hz, M/N = {:.4}, f_tot/f_Nyq = {:.4}; radar occupancy {:.1}% of B_h",
        a.rate.m,
        a.rate.f_s,
        a.rate.f_tot,
        a.rate.ratio,
        a.rate.nyquist_fraction,
        100.0 * a.radar_occupancy
    );
    match &r.aggregates {
        Aggregates::Detection(rows) => {
            for x in rows {
                let snr = x
                    .snr_db
                    .map_or("noiseless".to_string(), |s| format!("{s} dB"));
                println!(
                    "{:8} snr {:>10} M {:3}: P_d {:.4} +/- {:.4} (comm-only {:.4}), exact {:.4} ({} trials)",
                    x.algorithm, snr, x.channels, x.p_d, x.ci95, x.p_d_comm, x.exact_rate, x.trials
                );
            }
        }
        Aggregates::Layout(rows) => {
            for x in rows {
                let rmse = x
                    .range_rmse_m
                    .map_or("-".to_string(), |v| format!("{v:.3} m"));
                println!(
                    "{:10} snr {:6.1} dB: hit rate {:.4} +/- {:.4}, range RMSE {}, blocked {:.4} ({} trials)",
                    x.band_layout, x.snr_db, x.hit_rate, x.ci95, rmse, x.blocked_rate, x.trials
                );
            }
        }
        Aggregates::Metrics(rows) => {
            for x in rows {
                println!(
                    "{:18} {:.4} +/- {:.4} ({} trials)",
                    x.metric, x.mean, x.ci95, x.trials
                );
            }
        }
    }
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let (common, report) = match &cli.command {
        Command::Preset { name } => {
            println!("{}", name.config().to_json());
            return Ok(());
        }
        Command::Sense(c) => (c, run_sense(&load(c)?)?),
        Command::SelectBands(c) => (c, run_select_bands(&load(c)?)?),
        Command::Radar(c) => (c, run_radar(&load(c)?)?),
        Command::Specx(c) => (c, run_specx(&load(c)?)?),
        Command::Sweep { common, axis } => (common, sweep(&load(common)?, *axis)?),
    };
    if common.verbose {
        dump(&report);
    }
    summary(&report);
    let files = emit_report(&report, &common.out, common.format)?;
    println!(
        "wrote {} and {}",
        files.aggregate.display(),
        files.trials.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
