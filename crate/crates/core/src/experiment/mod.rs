//! Scenario configuration, per-N runs, sweeps, reports and the verification suite.

pub mod config;
pub mod crosscheck;
pub mod output;
pub mod run;
pub mod sweep;
pub mod verify;

pub use crosscheck::{oracle_suite, REDUCED_N};
pub use config::{FamilyChoice, GridPolicy, ScenarioConfig, ScenarioParams, Thresholds};
pub use output::{fit_rows, read_csv, records_csv, svg_plot, write_sweep, CsvRow, CSV_HEADER};
pub use run::{dominance_check, grid_for, output_window, run_scenario, ScenarioRecord};
pub use sweep::{cache_key, fit_exponent, fit_points, sweep, FitResult, SweepResult};
pub use verify::{verify_suite, CheckResult, Fault, VerifyConfig, CHECKS};
