//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::alignment::calibrate_timing;
use crate::channel::{calibrate_phase_bound, max_peak_shift_deg};
use crate::exec::Execution;
use crate::positioning::{calibrate_ranging_sigma, rms_position_error, RangingModel};
use crate::scenario::{
    emit_csv, misalignment_path, run_misalignment_sweep, run_tracking_scenario, tracking_path,
    walk_points, AlgorithmSelector, ScenarioConfig,
};

#[derive(Debug, Parser)]
#[command(name = "locbeam", version, about = "Location-aware beam alignment simulator")]
pub struct Cli {
    /// Root RNG seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for CSV output, overriding the config file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Which search algorithm(s) to run, overriding the config file.
    #[arg(long, global = true, value_enum)]
    algorithm: Option<AlgorithmSelector>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Beam tracking along the receiver trajectory; writes tracking.csv.
    Run { config: PathBuf },
    /// RSS versus misalignment degree; writes misalignment.csv.
    Sweep { config: PathBuf },
    /// Fit the latency model to two (measurements, seconds) points.
    CalibrateTiming {
        #[arg(long, value_parser = parse_point)]
        fast: (usize, f64),
        #[arg(long, value_parser = parse_point)]
        slow: (usize, f64),
    },
    /// Find the ranging noise that yields a target RMS position error.
    CalibrateRanging {
        #[arg(long)]
        target_rms: f64,
        #[arg(long, default_value_t = 10_000)]
        epochs: u64,
        /// Anchors and walk line come from this config (defaults otherwise).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Find the largest phase-offset bound keeping the beam peak within a target shift.
    CalibrateImpairments {
        #[arg(long, default_value_t = 4.0)]
        target_shift_deg: f64,
        #[arg(long, default_value_t = 1000)]
        draws: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the default scenario configuration.
    DefaultConfig,
}

fn parse_point(s: &str) -> std::result::Result<(usize, f64), String> {
    let (n, t) = s
        .split_once(',')
        .ok_or_else(|| format!("expected N,SECONDS, got '{s}'"))?;
    let n = n.trim().parse().map_err(|e| format!("bad measurement count '{n}': {e}"))?;
    let t = t.trim().parse().map_err(|e| format!("bad duration '{t}': {e}"))?;
    Ok((n, t))
}

impl Cli {
    fn load(&self, path: Option<&PathBuf>) -> Result<ScenarioConfig> {
        let mut cfg = match path {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            cfg.output.dir = dir.clone();
        }
        if let Some(alg) = self.algorithm {
            cfg.alignment.algorithm = alg;
        }
        Ok(cfg)
    }
}

pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let exec = Execution::default();
    match &cli.command {
        Command::Run { config } => {
            let s = cli.load(Some(config))?.build()?;
            let records = run_tracking_scenario(&s, exec)?;
            let path = tracking_path(&s);
            emit_csv(&records, &path)?;
            for alg in s.algorithm.algorithms() {
                let trace: Vec<_> = records.iter().filter(|r| r.algorithm == alg).collect();
                let mean = trace.iter().map(|r| r.elapsed_s).sum::<f64>() / trace.len().max(1) as f64;
                println!(
                    "{:<15} {:>3} cycles, mean alignment time {:.3} s",
                    alg.name(),
                    trace.len(),
                    mean
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Sweep { config } => {
            let s = cli.load(Some(config))?.build()?;
            let rows = run_misalignment_sweep(&s, &s.sweep_distances_m, s.sweep_max_sectors, exec)?;
            let path = misalignment_path(&s);
            emit_csv(&rows, &path)?;
            println!("wrote {} ({} rows)", path.display(), rows.len());
        }
        Command::CalibrateTiming { fast, slow } => {
            let t = calibrate_timing(fast.0, fast.1, slow.0, slow.1)?;
            println!("overhead_s = {:.7}", t.overhead_s());
            println!("dwell_per_measurement_s = {:.7}", t.dwell_per_measurement_s());
        }
        Command::CalibrateRanging {
            target_rms,
            epochs,
            config,
        } => {
            let cfg = cli.load(config.as_ref())?;
            let s = cfg.build()?;
            let seed = cli.seed.unwrap_or(0);
            let points = walk_points(&s, 101);
            let sigma = calibrate_ranging_sigma(&s.anchors, &points, *target_rms, seed, *epochs, exec)?;
            let rms = rms_position_error(&s.anchors, &points, &RangingModel::new(sigma, seed)?, *epochs, exec)?;
            println!("ranging_sigma_m = {sigma:.6}");
            println!("rms_position_error_m = {rms:.6}");
        }
        Command::CalibrateImpairments {
            target_shift_deg,
            draws,
            config,
        } => {
            let s = cli.load(config.as_ref())?.build()?;
            let seed = cli.seed.unwrap_or(0x5EED);
            let angles = s.codebook.angles_deg().to_vec();
            let bound = calibrate_phase_bound(&s.array, &angles, *target_shift_deg, *draws, seed, exec)?;
            let worst = max_peak_shift_deg(&s.array, bound, &angles, *draws, seed, exec)?;
            println!("phase_bound_deg = {bound}");
            println!("worst_peak_shift_deg = {worst:.4}");
        }
        Command::DefaultConfig => {
            print!("{}", ScenarioConfig::default().to_toml_string());
        }
    }
    Ok(())
}

/// Exit status and one-line diagnostic for a CLI error.
pub fn report(err: &anyhow::Error) -> (i32, String) {
    if let Some(clap_err) = err.downcast_ref::<clap::Error>() {
        use clap::error::ErrorKind;
        if matches!(clap_err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            return (0, clap_err.to_string());
        }
        let first = clap_err.to_string();
        let line = first.lines().next().unwrap_or("invalid arguments").to_string();
        return (2, line);
    }
    (1, format!("error: {err}"))
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run(args) {
        Ok(()) => 0,
        Err(e) => {
            let (code, msg) = report(&e);
            if code == 0 {
                print!("{msg}");
            } else {
                eprintln!("{msg}");
            }
            code
        }
    }
}
