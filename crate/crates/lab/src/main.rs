use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use multidop::config::{default_table, load_table, set_path, ScenarioConfig};
use multidop::harness::{self, RunOptions, SweepSpec};

/// Multistatic target Doppler estimation: Monte-Carlo runs and sweeps.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; omitted keys take the reference defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides run.base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides run.runs_per_point.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded runs of one scenario.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write each run's extracted frames.
        #[arg(long)]
        dump_frames: bool,
    },
    /// Runs every value of a named sweep or `path=v1,v2,...`.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sweep: String,
    },
    /// Writes the geometric ground-truth Doppler track.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
    /// Re-estimates a frame dump.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, default_value_t = 0)]
        run_id: usize,
    },
    /// Short built-in sanity checks.
    Selftest,
}

fn table(common: &Common) -> Result<toml::Table> {
    let mut t = match &common.config {
        Some(p) => load_table(p)?,
        None => default_table(),
    };
    if let Some(seed) = common.seed {
        let seed = i64::try_from(seed).context("--seed must fit in a signed 64-bit integer")?;
        set_path(&mut t, "run.base_seed", toml::Value::Integer(seed))?;
    }
    if let Some(runs) = common.runs {
        set_path(&mut t, "run.runs_per_point", toml::Value::Integer(runs as i64))?;
    }
    Ok(t)
}

fn config(common: &Common) -> Result<ScenarioConfig> {
    Ok(ScenarioConfig::from_table(table(common)?)?)
}

fn print_summaries(rows: &[harness::RunSummary]) {
    println!("run_id,seed,mae_hz,frames_dropped,frames_degraded");
    for r in rows {
        println!("{},{},{},{},{}", r.run_id, r.seed, r.mae_hz, r.frames_dropped, r.frames_degraded);
    }
}

fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run { common, dump_frames } => {
            let rows = harness::run(&config(&common)?, &common.out, RunOptions { dump_frames })?;
            print_summaries(&rows);
        }
        Command::Sweep { common, sweep } => {
            let spec = SweepSpec::resolve(&sweep)?;
            let rows = harness::sweep(&table(&common)?, &spec, &common.out, RunOptions { dump_frames: false })?;
            println!("value,runs,min,q1,median,mean,q3,max");
            for r in rows {
                println!("{},{},{},{},{},{},{},{}", r.value, r.runs, r.min, r.q1, r.median, r.mean, r.q3, r.max);
            }
        }
        Command::Oracle { common } => {
            let path = harness::oracle(&config(&common)?, &common.out)?;
            println!("{}", path.display());
        }
        Command::Replay { common, frames, run_id } => {
            let r = harness::replay(&config(&common)?, Path::new(&frames), run_id, &common.out)?;
            println!("run_id,mae_hz,frames_dropped,frames_degraded");
            println!("{},{},{},{}", r.run_id, r.mae_hz, r.frames_dropped, r.frames_degraded);
        }
        Command::Selftest => {
            let checks = harness::selftest()?;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
