use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::convolution::convolve;
use super::field::SpectralField;
use super::grid::{GridSpec, IndexBox};
use crate::error::{LabError, Result};

/// Measured constants of `r^d c1 1_{Q_r(q1+q2)} <= 1_{Q_r(q1)} * 1_{Q_r(q2)} <= r^d c2 1_{Q_2r(q1+q2)}`,
/// `Q_r(q)` the cube of half-width `r` centred at `(q, .., q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub dim: usize,
    pub r: f64,
    pub q1: f64,
    pub q2: f64,
    pub h: f64,
    pub c1: f64,
    pub c2: f64,
    /// Largest value outside `Q_{2r + h}(q1 + q2)`, relative to `r^d`.
    pub outside: f64,
}

impl SandwichReport {
    /// `c1 >= 1 - 4h/r`, `c2 <= 2^d + 4h/r` and nothing outside the doubled cube.
    pub fn passed(&self) -> bool {
        let slack = 4.0 * self.h / self.r;
        self.c1 >= 1.0 - slack && self.c2 <= 2f64.powi(self.dim as i32) + slack && self.outside <= 1e-12
    }
}

fn cube(grid: &GridSpec, center: f64, r: f64) -> Result<SpectralField> {
    let d = grid.dim();
    let (lo, hi) = grid
        .half_open_range(center - r, center + r)
        .ok_or_else(|| LabError::InvalidArgument(format!("cube of half-width {r} holds no grid node")))?;
    let b = IndexBox::uniform(d, lo, hi);
    let mut f = SpectralField::zeros(*grid);
    for o in b.iter() {
        f.set(&o[..d], Complex64::new(1.0, 0.0));
    }
    Ok(f.with_support(b))
}

pub fn cube_sandwich(dim: usize, r: f64, q1: f64, q2: f64, h: f64) -> Result<SandwichReport> {
    if !(r > 0.0 && h > 0.0 && h <= r) {
        return Err(LabError::InvalidArgument(format!("need 0 < h <= r, got h={h}, r={r}")));
    }
    let reach = q1.abs().max(q2.abs()).max((q1 + q2).abs()) + 2.0 * r + 4.0 * h;
    let grid = GridSpec::with_spacing(dim, h, reach)?;
    let conv = convolve(&cube(&grid, q1, r)?, &cube(&grid, q2, r)?)?;
    let q = q1 + q2;
    let scale = r.powi(dim as i32);
    let (mut c1, mut c2, mut outside) = (f64::INFINITY, 0.0f64, 0.0f64);
    for idx in 0..grid.len() {
        let o = grid.offsets_of(idx);
        let mut dist = 0.0f64;
        for &oa in o.iter().take(dim) {
            dist = dist.max((oa as f64 * h - q).abs());
        }
        let v = conv.values()[idx].re / scale;
        if dist <= r + 1e-9 * h {
            c1 = c1.min(v);
        }
        c2 = c2.max(v);
        if dist > 2.0 * r + h * (1.0 + 1e-9) {
            outside = outside.max(v.abs());
        }
    }
    Ok(SandwichReport { dim, r, q1, q2, h, c1, c2, outside })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuum_constants_in_one_dimension() {
        let rep = cube_sandwich(1, 1.0, -3.0, 5.0, 1.0 / 64.0).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!((rep.c2 - 2.0).abs() < 0.05 && (rep.c1 - 1.0).abs() < 0.05);
    }

    #[test]
    fn two_dimensional_cubes() {
        let rep = cube_sandwich(2, 0.5, 0.0, 5.0, 1.0 / 32.0).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
}
