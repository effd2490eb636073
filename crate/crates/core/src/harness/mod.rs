//! Experiment driver: configuration files, single solves, sweeps,
//! re-verification of persisted solutions and the self-test.

pub mod config;
pub mod run;
pub mod selftest;
pub mod sweep;

pub use config::{load_config, parse_config, ConfigFile};
pub use run::{
    load_solution, run_single, solve_trial, verify, RunStatus, SingleRun, SolutionFile,
    VerifyReport,
};
pub use selftest::selftest;
pub use sweep::{
    load_sweep, parse_sweep, run_sweep, write_sweep, Axis, ResultRow, SweepResult, SweepSpec,
};
