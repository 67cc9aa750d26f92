//! Independent reference computations used to cross-check the iterate engines.

pub mod brute;
pub mod general;
pub mod solver;

pub use brute::brute_leading_iterate;
pub use general::{general_data_experiment, gaussian_profile, Evolution, GeneralDataOptions, GeneralDataReport, C_STAR};
pub use solver::{contraction_time, solve, step_solver, SolverOptions, SolverRun};
