use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod report;

use report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "vcausal", version, about = "Certify finite-speed hidden-influence bounds and their signalling consequences")]
pub struct Cli {
    /// Numerical tolerance for normalization and no-signalling checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Seed for Monte Carlo simulations.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Use exact rational arithmetic for behavior files.
    #[arg(long, global = true)]
    pub rational: bool,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MessageArg {
    Yes,
    No,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate S on the four-party quantum model.
    QuantumS {
        /// JSON file with `amplitudes` and optional `observables`.
        #[arg(long)]
        state_file: Option<PathBuf>,
        /// Write the quantum behavior to this file.
        #[arg(long)]
        dump_behavior: Option<PathBuf>,
    },
    /// Maximize S over no-signalling correlations with local B-C conditionals.
    CertifyBound {
        /// Drop the B-C locality constraints.
        #[arg(long, conflicts_with = "marginals_from_quantum")]
        ns_only: bool,
        /// Test whether the quantum ABD and ACD marginals admit such a behavior.
        #[arg(long)]
        marginals_from_quantum: bool,
        /// Interval radius around each marginal probability.
        #[arg(long, default_value = "1e-9", requires = "marginals_from_quantum")]
        radius: String,
        /// Write the certificate as JSON.
        #[arg(long)]
        certificate_out: Option<PathBuf>,
    },
    /// Validate a behavior file and report signalling and locality.
    CheckBehavior { path: PathBuf },
    /// Simulate the GHZ-triangle signalling protocol.
    GhzProtocol {
        #[arg(long, default_value_t = 1)]
        rounds: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = MessageArg::Both)]
        message: MessageArg,
        /// Influence speed in units of c for the geometry.
        #[arg(long, default_value_t = 10.0)]
        v_over_c: f64,
        /// Distance from A to the receivers in meters.
        #[arg(long, default_value_t = 1e6)]
        length: f64,
        /// Separation between the receivers in meters.
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
    },
    /// Lower bound on the influence speed from spacelike-separated events.
    SpeedBound {
        /// Distance between the two measurements in meters.
        #[arg(long)]
        d: f64,
        /// Synchronization uncertainty in seconds.
        #[arg(long)]
        dt: f64,
        /// Time difference between the two measurements in the lab frame.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Scan candidate privileged frames.
        #[arg(long)]
        scan: bool,
        /// Largest frame speed in units of c.
        #[arg(long, default_value_t = 0.00123)]
        beta_max: f64,
        #[arg(long, default_value_t = 3)]
        speeds: usize,
        #[arg(long, default_value_t = 4)]
        polar: usize,
        #[arg(long, default_value_t = 8)]
        azimuth: usize,
    },
    /// Check a space-time configuration against its required connectivity.
    ValidateConfig {
        path: PathBuf,
        /// JSON list of choice events (`x`, `w`, `bc`, `yz`) for the ordering protocol.
        #[arg(long)]
        choices: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(mut report) => {
            report.finish();
            print(&report, cli.json);
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn print(report: &RunReport, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(report).expect("serializable"));
    } else {
        print!("{}", report.render());
    }
}
