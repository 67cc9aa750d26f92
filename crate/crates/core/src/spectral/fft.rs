use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;
use super::grid::{fft_friendly_even, GridSpec, IndexBox, MAX_DIM};

/// Multi-dimensional FFT over a flat buffer with axis 0 fastest.
pub struct NdFft {
    shape: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl NdFft {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inv = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self { shape: shape.to_vec(), fwd, inv }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
    }

    /// Unnormalized inverse; divide by [`len`](Self::len) to invert `forward`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len());
        let mut stride = 1usize;
        let mut line = Vec::new();
        for (axis, &n) in self.shape.iter().enumerate() {
            let plan = &plans[axis];
            if axis == 0 {
                plan.process(data);
            } else {
                line.resize(n, Complex64::new(0.0, 0.0));
                let block = stride * n;
                for base in (0..data.len()).step_by(block) {
                    for inner in 0..stride {
                        let start = base + inner;
                        for (k, slot) in line.iter_mut().enumerate() {
                            *slot = data[start + k * stride];
                        }
                        plan.process(&mut line);
                        for (k, v) in line.iter().enumerate() {
                            data[start + k * stride] = *v;
                        }
                    }
                }
            }
            stride *= n;
        }
    }
}

/// Periodic work array in which grid offsets are stored modulo the frame
/// shape. Circular convolutions in this frame are exact whenever the true
/// result fits in a box no wider than the frame along each axis.
pub struct PeriodicFrame {
    shape: Vec<usize>,
    fft: NdFft,
}

impl PeriodicFrame {
    pub fn new(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), fft: NdFft::new(shape) }
    }

    /// Smallest FFT-friendly frame holding every box in `boxes` without wraparound.
    pub fn covering(dim: usize, boxes: &[IndexBox]) -> Self {
        let shape: Vec<usize> = (0..dim)
            .map(|a| {
                let w = boxes.iter().map(|b| b.extent_along(a)).max().unwrap_or(1).max(1);
                fft_friendly_even(w)
            })
            .collect();
        Self::new(&shape)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, offsets: &[i64]) -> usize {
        let mut idx = 0usize;
        for a in (0..self.shape.len()).rev() {
            idx = idx * self.shape[a] + offsets[a].rem_euclid(self.shape[a] as i64) as usize;
        }
        idx
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.len()]
    }

    /// Copies the part of `field` inside `b` into a fresh frame buffer.
    pub fn load(&self, field: &SpectralField, b: &IndexBox) -> Vec<Complex64> {
        let d = self.dim();
        let mut buf = self.zeros();
        let g = field.grid();
        for o in b.iter() {
            if g.contains_offsets(&o[..d]) {
                buf[self.index(&o[..d])] = field.values()[g.flat_index(&o[..d])];
            }
        }
        buf
    }

    /// Writes the cells of `buf` lying in `b` onto a zero field on `grid`.
    pub fn store(&self, buf: &[Complex64], grid: GridSpec, b: &IndexBox) -> SpectralField {
        let d = self.dim();
        let mut out = SpectralField::zeros(grid);
        let vals = out.values_mut();
        for o in b.iter() {
            vals[grid.flat_index(&o[..d])] = buf[self.index(&o[..d])];
        }
        out.with_support(*b)
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fft.forward(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.fft.inverse(buf);
    }

    /// Iterates over the offsets of `b` together with their frame indices.
    pub fn cells<'a>(&'a self, b: &'a IndexBox) -> impl Iterator<Item = ([i64; MAX_DIM], usize)> + 'a {
        let d = self.dim();
        b.iter().map(move |o| (o, self.index(&o[..d])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_2d() {
        let fft = NdFft::new(&[6, 4]);
        let orig: Vec<Complex64> = (0..24).map(|k| Complex64::new(k as f64, (k * k) as f64 * 0.1)).collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / 24.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_dft_along_axis_one() {
        let fft = NdFft::new(&[2, 3]);
        let orig: Vec<Complex64> = (0..6).map(|k| Complex64::new(1.0 + k as f64, -(k as f64))).collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        for k0 in 0..2 {
            for k1 in 0..3 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j0 in 0..2 {
                    for j1 in 0..3 {
                        let ang = -2.0 * std::f64::consts::PI * ((k0 * j0) as f64 / 2.0 + (k1 * j1) as f64 / 3.0);
                        acc += orig[j0 + 2 * j1] * Complex64::from_polar(1.0, ang);
                    }
                }
                assert!((acc - data[k0 + 2 * k1]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn frame_wraps_negative_offsets() {
        let f = PeriodicFrame::new(&[8, 8]);
        assert_eq!(f.index(&[-1, 0]), 7);
        assert_eq!(f.index(&[0, -1]), 56);
    }
}
