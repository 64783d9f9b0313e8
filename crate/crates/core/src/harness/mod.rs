//! Data input, simulation experiments and the command-line interface.

pub mod cli;
mod csv_io;
pub mod experiment;

pub use csv_io::{load_csv, parse_csv, write_sample_csv};
pub use experiment::{
    run_experiment, Calibration, ExperimentSpec, PowerRow, PowerTable, RunOptions,
};
