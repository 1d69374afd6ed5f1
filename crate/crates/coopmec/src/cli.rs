//! Command-line front end. Exit codes: 0 optimal (or certified), 2 infeasible
//! instance, 1 any error including a failed certification.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coopmec_core::{solve_equal_allocation, solve_instance, Allocation, Error, Feasibility};

use crate::certify::{certify, render, CertifyError};
use crate::config::{Config, ConfigError};
use crate::report::{write_csv, write_json, InfeasibleReport};
use crate::sweep::{run_parallel, SweepError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "coopmec", version, about = "Cooperative relaying and MEC offloading optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance and print the JSON report.
    Solve {
        #[command(flatten)]
        common: Common,
        /// MEC processor allocation rule.
        #[arg(long, value_enum, default_value_t = Method::Proportional)]
        method: Method,
    },
    /// Run the Monte Carlo α sweep and write the CSV summary.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads; all cores by default.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Compare the solver with a brute-force oracle on small instances.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Nodes per instance (1 or 2).
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Grid points per axis for the one-node oracle.
        #[arg(long)]
        grid: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative dual bracket width at which the ellipsoid stops.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Proportional,
    Equal,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solve(#[from] Error),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl Common {
    fn load(&self) -> Result<Config, CliError> {
        let mut cfg = Config::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(tol) = self.tolerance {
            cfg.set_tolerance(tol);
        }
        if let Some(max) = self.max_iter {
            cfg.set_max_iterations(max);
        }
        Ok(cfg)
    }

    fn output(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Solve { common, method } => {
            let cfg = common.load()?;
            let inst = cfg.instance()?;
            let result = match method {
                Method::Proportional => solve_instance(&inst, &cfg.solve),
                Method::Equal => solve_equal_allocation(&inst, &cfg.solve),
            };
            match result {
                Ok(report) => {
                    write_json(&report, common.output()?)?;
                    eprintln!(
                        "optimal: objective {:.6e}, relative gap {:.2e}, {} iterations",
                        report.primal_value, report.gap, report.iterations
                    );
                    Ok(EXIT_OK)
                }
                Err(Error::InfeasibleInstance { tau_r_lb, direct_rate }) => {
                    let report = InfeasibleReport {
                        method: match method {
                            Method::Proportional => Allocation::Proportional,
                            Method::Equal => Allocation::Equal,
                        },
                        feasibility: Feasibility::Infeasible { tau_r_lb, direct_rate },
                    };
                    write_json(&report, common.output()?)?;
                    eprintln!("infeasible: tau_r_lb = {tau_r_lb} exceeds the frame");
                    Ok(EXIT_INFEASIBLE)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Sweep { common, threads, trials } => {
            let mut cfg = common.load()?;
            if let Some(t) = trials {
                cfg.sweep.trials = t;
            }
            let report = run_parallel(&cfg.sweep, threads)?;
            write_csv(&report, common.output()?)?;
            Ok(EXIT_OK)
        }
        Command::Certify {
            common,
            nodes,
            trials,
            grid,
        } => {
            let mut cfg = common.load()?;
            if let Some(m) = nodes {
                cfg.certify.nodes = m;
            }
            if let Some(t) = trials {
                cfg.certify.trials = t;
            }
            if grid.is_some() {
                cfg.certify.grid = grid;
            }
            let cert = certify(&cfg)?;
            let mut out = common.output()?;
            out.write_all(render(&cert).as_bytes())?;
            out.flush()?;
            Ok(if cert.passed() { EXIT_OK } else { EXIT_ERROR })
        }
    }
}
