use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{GridSpec, IndexBox, MAX_DIM};
use crate::error::{LabError, Result};

/// Which norm to evaluate on a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Norm {
    L2,
    FL1,
    FLinf,
    Hs(f64),
}

/// Samples of a Fourier transform on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    grid: GridSpec,
    values: Vec<Complex64>,
    support: Option<IndexBox>,
}

/// Japanese bracket `(1 + |xi|^2)^{1/2}` from a squared norm.
pub fn bracket_sq(norm_sq: f64) -> f64 {
    1.0 + norm_sq
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()], support: Some(IndexBox::empty(grid.dim())) }
    }

    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values, support: None })
    }

    /// Builds a field by evaluating `f` on each node's coordinates.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let h = grid.spacing();
        let d = grid.dim();
        let mut xi = [0.0; MAX_DIM];
        let values = (0..grid.len())
            .map(|idx| {
                let o = grid.offsets_of(idx);
                for a in 0..d {
                    xi[a] = o[a] as f64 * h;
                }
                f(&xi[..d])
            })
            .collect();
        Self { grid, values, support: None }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Mutable access; drops any cached support box.
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        self.support = None;
        &mut self.values
    }

    pub fn at(&self, offsets: &[i64]) -> Complex64 {
        if self.grid.contains_offsets(offsets) {
            self.values[self.grid.flat_index(offsets)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, offsets: &[i64], v: Complex64) {
        let idx = self.grid.flat_index(offsets);
        self.values[idx] = v;
        self.support = None;
    }

    /// Declares a support box; must contain all nonzero values.
    pub fn with_support(mut self, b: IndexBox) -> Self {
        debug_assert!(b.contains_box(&self.scan_support()));
        self.support = Some(b);
        self
    }

    /// Support box: the declared one if present, otherwise the tight box.
    pub fn support_box(&self) -> IndexBox {
        match self.support {
            Some(b) => b,
            None => self.scan_support(),
        }
    }

    /// Tight bounding box of the nonzero values.
    pub fn scan_support(&self) -> IndexBox {
        let d = self.grid.dim();
        let mut b = IndexBox::empty(d);
        let mut first = true;
        for (idx, v) in self.values.iter().enumerate() {
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            let o = self.grid.offsets_of(idx);
            if first {
                b = IndexBox::new(d, o, o);
                first = false;
            } else {
                for a in 0..d {
                    b.lo[a] = b.lo[a].min(o[a]);
                    b.hi[a] = b.hi[a].max(o[a]);
                }
            }
        }
        b
    }

    pub fn norm(&self, which: Norm) -> f64 {
        let w = self.grid.cell_volume();
        match which {
            Norm::L2 => (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt(),
            Norm::FL1 => self.values.iter().map(|v| v.norm()).sum::<f64>() * w,
            Norm::FLinf => self.values.iter().fold(0.0, |m, v| m.max(v.norm())),
            Norm::Hs(s) => {
                if s == 0.0 {
                    return self.norm(Norm::L2);
                }
                let acc: f64 = self
                    .values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.re != 0.0 || v.im != 0.0)
                    .map(|(idx, v)| bracket_sq(self.grid.norm_sq(idx)).powf(s) * v.norm_sqr())
                    .sum();
                (acc * w).sqrt()
            }
        }
    }

    /// `max(L2, FL1)`, the data norm.
    pub fn norm_d(&self) -> f64 {
        self.norm(Norm::L2).max(self.norm(Norm::FL1))
    }

    /// `xi -> conj(f(-xi))`; the unpaired lowest node maps to zero.
    pub fn conj_reflect(&self) -> SpectralField {
        let g = self.grid;
        let d = g.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let o = g.offsets_of(idx);
            let mut r = [0i64; MAX_DIM];
            for a in 0..d {
                r[a] = -o[a];
            }
            if g.contains_offsets(&r[..d]) {
                *slot = self.values[g.flat_index(&r[..d])].conj();
            }
        }
        let support = self.support.map(|b| b.reflect().intersect(&g.full_box()));
        SpectralField { grid: g, values: out, support }
    }

    /// Largest deviation from Hermitian symmetry relative to the sup norm.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.norm(Norm::FLinf);
        if scale == 0.0 {
            return 0.0;
        }
        let g = self.grid;
        let d = g.dim();
        let mut worst = 0.0f64;
        for idx in 0..g.len() {
            let o = g.offsets_of(idx);
            let mut r = [0i64; MAX_DIM];
            for a in 0..d {
                r[a] = -o[a];
            }
            if !g.contains_offsets(&r[..d]) {
                continue;
            }
            let diff = self.values[idx] - self.values[g.flat_index(&r[..d])].conj();
            worst = worst.max(diff.norm());
        }
        worst / scale
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_defect() <= rel_tol
    }

    fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        let support = match (self.support, other.support) {
            (Some(a), Some(b)) => Some(a.union(&b)),
            _ => None,
        };
        Ok(SpectralField { grid: self.grid, values, support })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        let support = match (self.support, other.support) {
            (Some(a), Some(b)) => Some(a.union(&b)),
            _ => None,
        };
        Ok(SpectralField { grid: self.grid, values, support })
    }

    pub fn scale(&self, c: Complex64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            support: self.support,
        }
    }

    /// Pointwise multiplication by a function of the node coordinates.
    pub fn multiply_by(&self, mut f: impl FnMut(&[f64]) -> Complex64) -> SpectralField {
        let g = self.grid;
        let h = g.spacing();
        let d = g.dim();
        let mut xi = [0.0; MAX_DIM];
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                if v.re == 0.0 && v.im == 0.0 {
                    return *v;
                }
                let o = g.offsets_of(idx);
                for a in 0..d {
                    xi[a] = o[a] as f64 * h;
                }
                v * f(&xi[..d])
            })
            .collect();
        SpectralField { grid: g, values, support: self.support }
    }

    /// Zeroes everything outside `b`.
    pub fn restrict(&self, b: &IndexBox) -> SpectralField {
        let g = self.grid;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| if b.contains(&g.offsets_of(idx)) { *v } else { Complex64::new(0.0, 0.0) })
            .collect();
        SpectralField { grid: g, values, support: Some(b.intersect(&g.full_box())) }
    }

    /// Relative L2 distance `|a - b| / max(|a|, |b|)`; zero when both vanish.
    pub fn rel_l2_distance(&self, other: &SpectralField) -> Result<f64> {
        let diff = self.sub(other)?.norm(Norm::L2);
        let scale = self.norm(Norm::L2).max(other.norm(Norm::L2));
        Ok(if scale == 0.0 { diff } else { diff / scale })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<SpectralField> {
        let f: SpectralField = serde_json::from_str(s)?;
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        GridSpec::new(self.grid.dim(), self.grid.extent(), self.grid.points())?;
        if self.values.len() != self.grid.len() {
            return Err(LabError::InvalidGrid("value count does not match grid".into()));
        }
        Ok(())
    }

    /// Little-endian binary record: magic, dim, points, extent, then re/im pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.points() as u64).to_le_bytes())?;
        w.write_all(&self.grid.extent().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<SpectralField> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(LabError::Io("not a field record".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let points = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let extent = f64::from_le_bytes(b8);
        let grid = GridSpec::new(dim, extent, points)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            values.push(Complex64::new(re, f64::from_le_bytes(b8)));
        }
        SpectralField::from_values(grid, values)
    }
}

const BINARY_MAGIC: &[u8; 8] = b"SPFIELD1";

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_origin_node_has_unit_hs_norm() {
        let g = GridSpec::new(1, 8.0, 16).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set(&[0], c(1.0));
        for s in [-3.0, -0.5, 0.0, 1.5] {
            assert!((f.norm(Norm::Hs(s)) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn indicator_l2_norm() {
        let g = GridSpec::new(1, 4.0, 16).unwrap();
        let f = SpectralField::from_fn(g, |x| if (-1.0..1.0).contains(&x[0]) { c(1.0) } else { c(0.0) });
        assert!((f.norm(Norm::L2) - 2f64.sqrt()).abs() < 1e-14);
        assert!((f.norm(Norm::FL1) - 2.0).abs() < 1e-14);
        assert_eq!(f.norm(Norm::FLinf), 1.0);
    }

    #[test]
    fn reflection_of_window() {
        let g = GridSpec::new(1, 16.0, 64).unwrap();
        let f = SpectralField::from_fn(g, |x| if (3.0..=5.0).contains(&x[0]) { Complex64::new(1.0, 2.0) } else { c(0.0) });
        let r = f.conj_reflect();
        let b = r.scan_support();
        assert_eq!((b.lo[0], b.hi[0]), (-10, -6));
        assert_eq!(r.at(&[-8]), Complex64::new(1.0, -2.0));
        assert_eq!(r.conj_reflect(), f);
    }

    #[test]
    fn unpaired_node_maps_to_zero() {
        let g = GridSpec::new(1, 4.0, 8).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set(&[-4], c(1.0));
        assert_eq!(f.conj_reflect().norm(Norm::FL1), 0.0);
    }

    #[test]
    fn json_and_binary_roundtrip() {
        let g = GridSpec::new(2, 2.0, 8).unwrap();
        let f = SpectralField::from_fn(g, |x| Complex64::new(x[0], x[1] * 0.5));
        let back = SpectralField::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back.values(), f.values());
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        let back = SpectralField::read_binary(&buf[..]).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = SpectralField::zeros(GridSpec::new(1, 4.0, 8).unwrap());
        let b = SpectralField::zeros(GridSpec::new(1, 4.0, 16).unwrap());
        assert_eq!(a.add(&b), Err(LabError::GridMismatch));
    }
}
