//! `ecfgof` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (unreadable or malformed input), 3 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use super::csv_io::{load_csv, write_sample_csv};
use super::experiment::{run_experiment, Calibration, ExperimentSpec, RunOptions};
use crate::engine::{run_bhep_test, run_test, Aggregation, BhepConfig, TestConfig};
use crate::error::{Error, Result};
use crate::numerics::WeightKernel;
use crate::samplers::{Family, RngStream};

#[derive(Debug, Parser)]
#[command(
    name = "ecfgof",
    version,
    about = "Characteristic-function goodness-of-fit tests for elliptical families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggArg {
    Mean,
    Max,
    Bhep,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CalibrationArg {
    Shared,
    PerTrial,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test a CSV data set against an elliptical family.
    Test {
        #[arg(long)]
        data: PathBuf,
        /// normal | laplace | studentt:NU | kotz:N
        #[arg(long, default_value = "normal")]
        family: Family,
        /// gauss | stable:B | glaplace:B
        #[arg(long, default_value = "gauss")]
        kernel: WeightKernel,
        #[arg(long, default_value_t = 10)]
        m: usize,
        #[arg(long = "big-m", default_value_t = 1000)]
        big_m: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = AggArg::Mean)]
        agg: AggArg,
        /// BHEP weight parameter (only with --agg bhep).
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a power study described by a TOML spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// CSV output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Override the number of trials in the spec.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the calibration mode in the spec.
        #[arg(long, value_enum)]
        calibration: Option<CalibrationArg>,
        /// Suppress progress lines on standard error.
        #[arg(long)]
        quiet: bool,
    },
    /// Draw a sample from the standard member of a family.
    Sample {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) => 1,
        Error::Io { .. } | Error::Parse { .. } | Error::Shape(_) => 2,
        e if e.is_numeric() => 3,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ecfgof: {e}");
            exit_code(&e)
        }
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| {
            Error::Io {
                path: p.to_path_buf(),
                source,
            }
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Test {
            data,
            family,
            kernel,
            m,
            big_m,
            alpha,
            agg,
            beta,
            seed,
            out,
        } => {
            let x = load_csv(&data)?;
            let outcome = match agg {
                AggArg::Bhep => {
                    if family != Family::Normal {
                        return Err(Error::config(
                            "the BHEP test only applies to --family normal",
                        ));
                    }
                    run_bhep_test(
                        &x,
                        &BhepConfig {
                            beta,
                            big_m,
                            alpha,
                            seed,
                        },
                    )?
                }
                AggArg::Mean | AggArg::Max => {
                    let agg = if matches!(agg, AggArg::Mean) {
                        Aggregation::Mean
                    } else {
                        Aggregation::Max
                    };
                    run_test(
                        &x,
                        &TestConfig {
                            family,
                            kernel,
                            m,
                            big_m,
                            alpha,
                            agg,
                            seed,
                        },
                    )?
                }
            };
            let mut w = open_out(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &outcome)
                .map_err(|e| io_err(out.as_deref())(e.into()))?;
            writeln!(w)
                .and_then(|_| w.flush())
                .map_err(io_err(out.as_deref()))
        }
        Command::Simulate {
            spec,
            out,
            workers,
            trials,
            calibration,
            quiet,
        } => {
            let mut s = ExperimentSpec::load(&spec)?;
            if let Some(t) = trials {
                s.trials = t;
            }
            if let Some(c) = calibration {
                s.calibration = match c {
                    CalibrationArg::Shared => Calibration::Shared,
                    CalibrationArg::PerTrial => Calibration::PerTrial,
                };
            }
            let table = run_experiment(
                &s,
                &RunOptions {
                    workers,
                    progress: !quiet,
                },
            )?;
            let mut w = open_out(out.as_deref())?;
            table.write_csv(&mut w)?;
            w.flush().map_err(io_err(out.as_deref()))
        }
        Command::Sample {
            family,
            n,
            p,
            seed,
            out,
        } => {
            if n == 0 || p == 0 {
                return Err(Error::config("--n and --p must be positive"));
            }
            let x = family.sample_standard(n, p, &mut RngStream::new(seed, 0).rng())?;
            let mut w = open_out(out.as_deref())?;
            write_sample_csv(&x, &mut w)?;
            w.flush().map_err(io_err(out.as_deref()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_mapping() {
        assert_eq!(exit_code(&Error::config("x")), 1);
        assert_eq!(exit_code(&Error::domain("x")), 1);
        assert_eq!(
            exit_code(&Error::Parse {
                row: 1,
                column: 1,
                message: "x".into()
            }),
            2
        );
        assert_eq!(exit_code(&Error::shape("x")), 2);
        assert_eq!(exit_code(&Error::Estimation("x".into())), 3);
        assert_eq!(
            exit_code(&Error::NearSingular {
                min_eigenvalue: 0.0
            }),
            3
        );
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["ecfgof"]), 1);
        assert_eq!(run(["ecfgof", "bogus"]), 1);
        assert_eq!(
            run(["ecfgof", "sample", "--family", "cauchy", "--n", "3", "--p", "2"]),
            1
        );
        assert_eq!(run(["ecfgof", "--help"]), 0);
    }
}
