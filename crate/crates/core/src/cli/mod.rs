//! Configuration, reports, CSV output and the subcommand pipelines.

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

pub use commands::{
    cmd_background, cmd_init, cmd_solve, cmd_sweep, cmd_verify, solve, Outcome, SweepRow,
    TransonicSolution,
};
pub use config::RunConfig;
pub use report::Report;
