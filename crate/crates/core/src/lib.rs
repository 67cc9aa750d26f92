//! Picard-iterate laboratory for norm inflation in dispersive equations.

pub mod bounds;
pub mod equations;
pub mod error;
pub mod experiment;
pub mod oracles;
pub mod picard;
pub mod spectral;

pub use error::{LabError, Result};
