//! `scld simulate`: runs a Monte Carlo sweep described by a TOML file and
//! writes `report.json` and `report.csv`.
//!
//! Exit status: 0 on success, 2 for an invalid configuration, 3 when the
//! share of decodes aborted by numerical failures exceeds `failure_threshold`,
//! 1 for anything else (I/O and the like).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scld::experiment::{run_experiment, ExperimentConfig, ExperimentReport, OneOrMany};
use scld::pipeline::DecoderMode;
use scld::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "scld", version, about = "Unsourced random access decoder simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the trials described by a config file.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// TOML experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and report.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated decoder modes.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    /// Comma-separated active-user counts.
    #[arg(long, value_delimiter = ',')]
    ka: Option<Vec<usize>>,
    /// Comma-separated antenna counts.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl SimulateArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut config = ExperimentConfig::read(&self.config)?;
        if let Some(t) = self.trials {
            config.trials = t;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(modes) = &self.modes {
            config.modes = modes.iter().map(|m| m.parse()).collect::<Result<Vec<DecoderMode>, _>>()?;
        }
        if let Some(ka) = &self.ka {
            config.active_users = OneOrMany::Many(ka.clone());
        }
        if let Some(m) = &self.m {
            config.antennas = OneOrMany::Many(m.clone());
        }
        if let Some(t) = self.threads {
            config.threads = t;
        }
        config.validate()?;
        Ok(config)
    }
}

fn print_summary(report: &ExperimentReport) {
    println!("{:>5} {:>5} {:>9} {:>7} {:>10} {:>23} {:>12} {:>8}", "ka", "m", "mode", "trials", "pupe", "95% ci", "decode s", "ratio");
    for p in &report.points {
        let ratio = p.runtime_ratio.map_or_else(|| "-".to_string(), |r| format!("{r:.3}"));
        println!(
            "{:>5} {:>5} {:>9} {:>7} {:>10.5} {:>23} {:>12.4} {:>8}",
            p.ka,
            p.m,
            p.mode.name(),
            p.trials,
            p.pupe,
            format!("[{:.5}, {:.5}]", p.pupe_ci_lo, p.pupe_ci_hi),
            p.mean_decode_seconds,
            ratio
        );
    }
}

fn simulate(args: &SimulateArgs) -> ExitCode {
    let config = match args.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_INVALID_CONFIG);
        }
    };
    let report = match run_experiment(&config) {
        Ok(r) => r,
        Err(e @ Error::InvalidConfig(_)) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_INVALID_CONFIG);
        }
        Err(e) => {
            eprintln!("simulation failed: {e}");
            return ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_FAILURE });
        }
    };
    let (json, csv) = match report.write(&args.out) {
        Ok(paths) => paths,
        Err(e) => {
            eprintln!("cannot write report: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    print_summary(&report);
    println!("wrote {} and {} ({:.1} s)", json.display(), csv.display(), report.wall_seconds);

    let rate = report.numerical_failure_rate();
    if rate > config.failure_threshold {
        eprintln!(
            "numerical failure rate {rate:.4} exceeds threshold {:.4}",
            config.failure_threshold
        );
        return ExitCode::from(EXIT_NUMERICAL);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(args) => simulate(args),
    }
}
