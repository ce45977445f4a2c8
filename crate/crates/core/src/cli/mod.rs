//! Command-line front end: `flow run|resume`, `verify suite|one` and `markov run`.
//!
//! Every run writes its outputs into `--out`; the exit code is 0 when the flow converged
//! and every check passed, 1 when something failed and 2 on errors.

mod config;
mod run;

pub use config::{
    matrix_from_doc, matrix_to_doc, parse_config, parse_config_str, Kind, Overrides, RunConfig,
};
pub use run::{context, main_with_args, run, Cli, Command, DENSE_CHECK_LIMIT};
