//! Command-line plumbing: input schemas, coefficient expressions, output
//! formats and reproducible runs.

pub mod expr;
pub mod io;
pub mod run;
pub mod schema;

pub use expr::{parse_expr, CoefficientExpr, Func};
pub use io::{Certificate, Manifest};
pub use run::{error_json, execute, exit_code, run, run_config_file, Outcome};
pub use schema::{
    parse_operator, parse_phi, parse_symbol, serialize_symbol, symbol_to_json, ExperimentConfig, GridSpec, Tolerances,
};
