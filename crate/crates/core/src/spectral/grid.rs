use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Tolerance used when deciding whether a node sits on an interval endpoint.
const EDGE_EPS: f64 = 1e-9;

/// Uniform frequency grid covering `[-extent, extent)^d` with `points` nodes per axis.
///
/// Node `k` on an axis sits at `-extent + k * h`, so the node with offset
/// `o = k - points/2` sits at `o * h` and offset 0 is the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    extent: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, extent: f64, points: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(LabError::InvalidGrid(format!("unsupported dimension {dim}")));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(LabError::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        if points % 2 != 0 {
            return Err(LabError::InvalidGrid(format!("points per axis must be even, got {points}")));
        }
        if points < 8 {
            return Err(LabError::InvalidGrid(format!("need at least 8 points per axis, got {points}")));
        }
        Ok(Self { dim, extent, points })
    }

    /// Grid with prescribed spacing `h` and at least `min_extent` coverage; the
    /// point count is rounded up to an FFT-friendly even size.
    pub fn with_spacing(dim: usize, h: f64, min_extent: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(LabError::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        let raw = (2.0 * min_extent / h).ceil().max(8.0) as usize;
        let points = fft_friendly_even(raw);
        Self::new(dim, points as f64 * h / 2.0, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    /// Quadrature cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half(&self) -> i64 {
        (self.points / 2) as i64
    }

    /// Smallest offset on each axis.
    pub fn min_offset(&self) -> i64 {
        -self.half()
    }

    /// Largest offset on each axis.
    pub fn max_offset(&self) -> i64 {
        self.half() - 1
    }

    pub fn coord(&self, offset: i64) -> f64 {
        offset as f64 * self.spacing()
    }

    /// Flat index of a multi-offset (axis 0 fastest).
    pub fn flat_index(&self, offsets: &[i64]) -> usize {
        debug_assert_eq!(offsets.len(), self.dim);
        let g = self.points;
        let mut idx = 0usize;
        for axis in (0..self.dim).rev() {
            idx = idx * g + (offsets[axis] + self.half()) as usize;
        }
        idx
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn offsets_of(&self, mut idx: usize) -> [i64; MAX_DIM] {
        let g = self.points;
        let mut out = [0i64; MAX_DIM];
        for o in out.iter_mut().take(self.dim) {
            *o = (idx % g) as i64 - self.half();
            idx /= g;
        }
        out
    }

    pub fn contains_offsets(&self, offsets: &[i64]) -> bool {
        offsets
            .iter()
            .take(self.dim)
            .all(|&o| o >= self.min_offset() && o <= self.max_offset())
    }

    /// Squared Euclidean norm of the node at `idx`.
    pub fn norm_sq(&self, idx: usize) -> f64 {
        let o = self.offsets_of(idx);
        let h = self.spacing();
        o.iter().take(self.dim).map(|&k| (k as f64 * h).powi(2)).sum()
    }

    /// Offsets `o` on one axis with `a <= o*h < b` (half-open cell convention).
    /// Returns `None` when no node qualifies.
    pub fn half_open_range(&self, a: f64, b: f64) -> Option<(i64, i64)> {
        let h = self.spacing();
        let lo = (a / h - EDGE_EPS).ceil() as i64;
        let hi = (b / h - EDGE_EPS).ceil() as i64 - 1;
        (lo <= hi).then_some((lo, hi))
    }

    /// Offsets `o` with `a <= o*h <= b`.
    pub fn closed_range(&self, a: f64, b: f64) -> Option<(i64, i64)> {
        let h = self.spacing();
        let lo = (a / h - EDGE_EPS).ceil() as i64;
        let hi = (b / h + EDGE_EPS).floor() as i64;
        (lo <= hi).then_some((lo, hi))
    }

    /// Box covering the whole grid.
    pub fn full_box(&self) -> IndexBox {
        IndexBox::uniform(self.dim, self.min_offset(), self.max_offset())
    }
}

/// Smallest even integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn fft_friendly_even(n: usize) -> usize {
    let mut m = n.max(2);
    if m % 2 == 1 {
        m += 1;
    }
    loop {
        let mut r = m;
        for f in [2, 3, 5] {
            while r % f == 0 {
                r /= f;
            }
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}

/// Axis-aligned box of grid offsets, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexBox {
    pub dim: usize,
    pub lo: [i64; MAX_DIM],
    pub hi: [i64; MAX_DIM],
}

impl IndexBox {
    pub fn new(dim: usize, lo: [i64; MAX_DIM], hi: [i64; MAX_DIM]) -> Self {
        Self { dim, lo, hi }
    }

    pub fn uniform(dim: usize, lo: i64, hi: i64) -> Self {
        Self { dim, lo: [lo; MAX_DIM], hi: [hi; MAX_DIM] }
    }

    /// The canonical empty box.
    pub fn empty(dim: usize) -> Self {
        Self { dim, lo: [0; MAX_DIM], hi: [-1; MAX_DIM] }
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|a| self.lo[a] > self.hi[a])
    }

    pub fn count(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        (0..self.dim).map(|a| (self.hi[a] - self.lo[a] + 1) as usize).product()
    }

    pub fn extent_along(&self, axis: usize) -> usize {
        if self.lo[axis] > self.hi[axis] {
            0
        } else {
            (self.hi[axis] - self.lo[axis] + 1) as usize
        }
    }

    pub fn contains(&self, offsets: &[i64]) -> bool {
        !self.is_empty() && (0..self.dim).all(|a| offsets[a] >= self.lo[a] && offsets[a] <= self.hi[a])
    }

    pub fn contains_box(&self, other: &IndexBox) -> bool {
        other.is_empty()
            || (!self.is_empty() && (0..self.dim).all(|a| other.lo[a] >= self.lo[a] && other.hi[a] <= self.hi[a]))
    }

    /// Minkowski sum of two boxes (support of a convolution).
    pub fn minkowski(&self, other: &IndexBox) -> IndexBox {
        if self.is_empty() || other.is_empty() {
            return IndexBox::empty(self.dim);
        }
        let mut out = *self;
        for a in 0..self.dim {
            out.lo[a] = self.lo[a] + other.lo[a];
            out.hi[a] = self.hi[a] + other.hi[a];
        }
        out
    }

    /// Point reflection through the origin.
    pub fn reflect(&self) -> IndexBox {
        if self.is_empty() {
            return *self;
        }
        let mut out = *self;
        for a in 0..self.dim {
            out.lo[a] = -self.hi[a];
            out.hi[a] = -self.lo[a];
        }
        out
    }

    pub fn union(&self, other: &IndexBox) -> IndexBox {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        let mut out = *self;
        for a in 0..self.dim {
            out.lo[a] = self.lo[a].min(other.lo[a]);
            out.hi[a] = self.hi[a].max(other.hi[a]);
        }
        out
    }

    pub fn intersect(&self, other: &IndexBox) -> IndexBox {
        let mut out = *self;
        for a in 0..self.dim {
            out.lo[a] = self.lo[a].max(other.lo[a]);
            out.hi[a] = self.hi[a].min(other.hi[a]);
        }
        if out.is_empty() {
            IndexBox::empty(self.dim)
        } else {
            out
        }
    }

    /// `n`-fold Minkowski sum of the box with itself.
    pub fn sumset(&self, n: usize) -> IndexBox {
        if self.is_empty() || n == 0 {
            return IndexBox::empty(self.dim);
        }
        let mut out = *self;
        for a in 0..self.dim {
            out.lo[a] = self.lo[a] * n as i64;
            out.hi[a] = self.hi[a] * n as i64;
        }
        out
    }

    /// Iterate over every multi-offset in the box (axis 0 fastest).
    pub fn iter(&self) -> impl Iterator<Item = [i64; MAX_DIM]> + '_ {
        let total = self.count();
        let dim = self.dim;
        (0..total).map(move |mut k| {
            let mut o = [0i64; MAX_DIM];
            for (a, slot) in o.iter_mut().enumerate().take(dim) {
                let w = self.extent_along(a);
                *slot = self.lo[a] + (k % w) as i64;
                k /= w;
            }
            o
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_follows_definition() {
        let g = GridSpec::new(1, 8.0, 16).unwrap();
        assert_eq!(g.spacing(), 1.0);
        let g2 = GridSpec::new(2, 4.0, 8).unwrap();
        assert_eq!(g2.len(), 64);
    }

    #[test]
    fn node_coordinates_enumerate() {
        let g = GridSpec::new(1, 7.0, 14).unwrap();
        assert_eq!(g.spacing(), 1.0);
        let coords: Vec<f64> = (g.min_offset()..=g.max_offset()).map(|o| g.coord(o)).collect();
        let expected: Vec<f64> = (-7..=6).map(|k| k as f64).collect();
        assert_eq!(coords, expected);
        // node k sits at -extent + k h
        for (k, c) in coords.iter().enumerate() {
            assert_eq!(*c, -7.0 + k as f64);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1, 8.0, 15).is_err());
        assert!(GridSpec::new(1, 0.0, 16).is_err());
        assert!(GridSpec::new(1, -1.0, 16).is_err());
        assert!(GridSpec::new(4, 1.0, 16).is_err());
        assert!(GridSpec::new(0, 1.0, 16).is_err());
        assert!(GridSpec::new(1, 1.0, 6).is_err());
    }

    #[test]
    fn flat_index_roundtrip() {
        let g = GridSpec::new(3, 2.0, 8).unwrap();
        for idx in 0..g.len() {
            let o = g.offsets_of(idx);
            assert_eq!(g.flat_index(&o[..3]), idx);
        }
    }

    #[test]
    fn half_open_cells() {
        let g = GridSpec::new(1, 4.0, 16).unwrap(); // h = 0.5
        assert_eq!(g.half_open_range(-1.0, 1.0), Some((-2, 1)));
        assert_eq!(g.closed_range(-1.0, 1.0), Some((-2, 2)));
        assert_eq!(g.half_open_range(0.1, 0.4), None);
    }

    #[test]
    fn friendly_sizes() {
        assert_eq!(fft_friendly_even(7), 8);
        assert_eq!(fft_friendly_even(14), 16);
        assert_eq!(fft_friendly_even(22), 24);
        assert_eq!(fft_friendly_even(98), 100);
    }

    #[test]
    fn box_algebra() {
        let a = IndexBox::new(1, [1, 0, 0], [3, 0, 0]);
        let b = IndexBox::new(1, [-2, 0, 0], [0, 0, 0]);
        assert_eq!(a.minkowski(&b), IndexBox::new(1, [-1, 0, 0], [3, 0, 0]));
        assert_eq!(a.reflect(), IndexBox::new(1, [-3, 0, 0], [-1, 0, 0]));
        assert_eq!(a.sumset(3), IndexBox::new(1, [3, 0, 0], [9, 0, 0]));
        assert!(IndexBox::empty(2).is_empty());
        assert_eq!(IndexBox::uniform(2, -1, 1).iter().count(), 9);
    }
}
