//! Frequency grids, sampled transforms and their algebra.

pub mod convolution;
pub mod family;
pub mod fft;
pub mod field;
pub mod grid;
pub mod sandwich;

pub use convolution::{convolve, convolve_direct, convolve_fft};
pub use family::{DataFamily, FamilyKind};
pub use fft::{NdFft, PeriodicFrame};
pub use field::{Norm, SpectralField};
pub use grid::{GridSpec, IndexBox, MAX_DIM};
pub use sandwich::{cube_sandwich, SandwichReport};
