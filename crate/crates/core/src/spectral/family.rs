use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::grid::{GridSpec, IndexBox, MAX_DIM};
use crate::error::{LabError, Result};

/// Shape of the initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Cubes of half-width `A` at `±N e_1` and `±2N e_1`.
    CubePair,
    /// `[N-A, N+A] x [-1,1]^{d-1}` and its mirror.
    Slab,
    /// `[N-1, N+1]` and its mirror, one dimension only.
    KawaharaWindow,
    /// Unit-mass Gaussian profile truncated to `[-N, N]^d`.
    SmoothPerturbation { amplitude: f64 },
}

/// A parametric initial datum with frequency scale `N`, width `A` and index `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataFamily {
    pub kind: FamilyKind,
    pub dim: usize,
    pub n: f64,
    pub a: f64,
    pub s: f64,
}

impl DataFamily {
    pub fn new(kind: FamilyKind, dim: usize, n: f64, a: f64, s: f64) -> Result<Self> {
        let fam = Self { kind, dim, n, a, s };
        fam.validate()?;
        Ok(fam)
    }

    pub fn cube_pair(dim: usize, n: f64, a: f64, s: f64) -> Result<Self> {
        Self::new(FamilyKind::CubePair, dim, n, a, s)
    }

    pub fn slab(dim: usize, n: f64, a: f64, s: f64) -> Result<Self> {
        Self::new(FamilyKind::Slab, dim, n, a, s)
    }

    pub fn kawahara_window(n: f64, s: f64) -> Result<Self> {
        Self::new(FamilyKind::KawaharaWindow, 1, n, 1.0, s)
    }

    pub fn smooth_perturbation(dim: usize, n: f64, amplitude: f64) -> Result<Self> {
        Self::new(FamilyKind::SmoothPerturbation { amplitude }, dim, n, 1.0, 0.0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::InvalidFamily(msg));
        if !(1..=MAX_DIM).contains(&self.dim) {
            return bad(format!("unsupported dimension {}", self.dim));
        }
        if !(self.n.is_finite() && self.a.is_finite() && self.s.is_finite()) || self.a <= 0.0 {
            return bad(format!("need finite N, A > 0 and s, got N={}, A={}, s={}", self.n, self.a, self.s));
        }
        match self.kind {
            FamilyKind::CubePair => {
                if self.n < (2.0 * self.a).max(2.0) {
                    return bad(format!("cube pair needs N >= max(2A, 2), got N={}, A={}", self.n, self.a));
                }
            }
            FamilyKind::Slab => {
                if !(self.a <= 1.0 && 1.0 <= self.n) {
                    return bad(format!("slab needs A <= 1 <= N, got N={}, A={}", self.n, self.a));
                }
            }
            FamilyKind::KawaharaWindow => {
                if self.dim != 1 {
                    return bad("window data is one-dimensional".into());
                }
                if self.n < 2.0 {
                    return bad(format!("window needs N >= 2, got {}", self.n));
                }
            }
            FamilyKind::SmoothPerturbation { amplitude } => {
                if !amplitude.is_finite() || self.n <= 0.0 {
                    return bad(format!("perturbation needs finite amplitude and N > 0, got {amplitude}, {}", self.n));
                }
            }
        }
        Ok(())
    }

    /// Height of the indicator (peak value for the Gaussian).
    pub fn amplitude(&self) -> f64 {
        let ln = self.n.ln();
        match self.kind {
            FamilyKind::CubePair => ln.powf(-1.0 / 16.0) * self.n.powf(-self.s) * self.a.powf(-(self.dim as f64) / 2.0),
            FamilyKind::Slab => ln.powf(-1.0 / 16.0) * self.n.powf(-self.s) * self.a.powf(-0.5),
            FamilyKind::KawaharaWindow => self.n.powf(-self.s) / ln,
            FamilyKind::SmoothPerturbation { amplitude } => {
                amplitude * (2.0 * std::f64::consts::PI).powf(-(self.dim as f64) / 2.0)
            }
        }
    }

    /// Largest `|xi_1|` reached by the support.
    pub fn outer_radius(&self) -> f64 {
        match self.kind {
            FamilyKind::CubePair => 2.0 * self.n + self.a,
            FamilyKind::Slab => self.n + self.a,
            FamilyKind::KawaharaWindow => self.n + 1.0,
            FamilyKind::SmoothPerturbation { .. } => self.n,
        }
    }

    /// Smallest structural length of the support, used to pick the spacing.
    pub fn feature_width(&self) -> f64 {
        match self.kind {
            FamilyKind::CubePair | FamilyKind::Slab => self.a.min(1.0),
            FamilyKind::KawaharaWindow | FamilyKind::SmoothPerturbation { .. } => 1.0,
        }
    }

    /// Lebesgue measure of the support of an indicator family.
    pub fn support_measure(&self) -> Option<f64> {
        let d = self.dim as i32;
        match self.kind {
            FamilyKind::CubePair => Some(4.0 * (2.0 * self.a).powi(d)),
            FamilyKind::Slab => Some(2.0 * 2.0 * self.a * 2f64.powi(d - 1)),
            FamilyKind::KawaharaWindow => Some(4.0),
            FamilyKind::SmoothPerturbation { .. } => None,
        }
    }

    /// Continuum FL1 norm (untruncated for the Gaussian).
    pub fn analytic_fl1(&self) -> f64 {
        match self.kind {
            FamilyKind::SmoothPerturbation { amplitude } => amplitude.abs(),
            _ => self.amplitude() * self.support_measure().unwrap_or(0.0),
        }
    }

    /// Continuum L2 norm (untruncated for the Gaussian).
    pub fn analytic_l2(&self) -> f64 {
        match self.kind {
            FamilyKind::SmoothPerturbation { amplitude } => {
                amplitude.abs() * (4.0 * std::f64::consts::PI).powf(-(self.dim as f64) / 4.0)
            }
            _ => self.amplitude() * self.support_measure().unwrap_or(0.0).sqrt(),
        }
    }

    /// `max(L2, FL1)` of the continuum datum.
    pub fn analytic_norm_d(&self) -> f64 {
        self.analytic_l2().max(self.analytic_fl1())
    }

    /// Per-axis half-open intervals `[lo, hi)` of each positive piece.
    fn positive_pieces(&self) -> Vec<[(f64, f64); MAX_DIM]> {
        let d = self.dim;
        let piece = |center: f64, r: f64, transverse: f64| {
            let mut p = [(0.0, 0.0); MAX_DIM];
            p[0] = (center - r, center + r);
            for slot in p.iter_mut().take(d).skip(1) {
                *slot = (-transverse, transverse);
            }
            p
        };
        match self.kind {
            FamilyKind::CubePair => vec![piece(self.n, self.a, self.a), piece(2.0 * self.n, self.a, self.a)],
            FamilyKind::Slab => vec![piece(self.n, self.a, 1.0)],
            FamilyKind::KawaharaWindow => vec![piece(self.n, 1.0, 1.0)],
            FamilyKind::SmoothPerturbation { .. } => Vec::new(),
        }
    }

    /// Samples the datum on `grid`.
    pub fn build(&self, grid: &GridSpec) -> Result<SpectralField> {
        if grid.dim() != self.dim {
            return Err(LabError::InvalidFamily(format!(
                "family is {}-dimensional, grid is {}-dimensional",
                self.dim,
                grid.dim()
            )));
        }
        let d = self.dim;
        let limit = grid.max_offset() as f64 * grid.spacing();
        if self.outer_radius() > limit {
            return Err(LabError::SupportOverflow(format!(
                "datum reaches |xi| = {} beyond grid extent {}",
                self.outer_radius(),
                grid.extent()
            )));
        }
        let amp = Complex64::new(self.amplitude(), 0.0);
        let mut out = SpectralField::zeros(*grid);
        let mut support = IndexBox::empty(d);
        if let FamilyKind::SmoothPerturbation { .. } = self.kind {
            let Some((lo, hi)) = grid.closed_range(-self.n, self.n) else {
                return Ok(out);
            };
            let b = IndexBox::uniform(d, lo.max(-hi), hi.min(-lo));
            let h = grid.spacing();
            let vals = out.values_mut();
            for o in b.iter() {
                let r2: f64 = o.iter().take(d).map(|&k| (k as f64 * h).powi(2)).sum();
                vals[grid.flat_index(&o[..d])] = amp * (-r2 / 2.0).exp();
            }
            return Ok(out.with_support(b));
        }
        let vals = out.values_mut();
        for piece in self.positive_pieces() {
            let mut b = IndexBox::empty(d);
            let mut empty = false;
            for (a, &(lo, hi)) in piece.iter().enumerate().take(d) {
                match grid.half_open_range(lo, hi) {
                    Some((l, u)) => {
                        b.lo[a] = l;
                        b.hi[a] = u;
                    }
                    None => empty = true,
                }
            }
            if empty {
                continue;
            }
            for o in b.iter() {
                vals[grid.flat_index(&o[..d])] = amp;
                let mut r = [0i64; MAX_DIM];
                for a in 0..d {
                    r[a] = -o[a];
                }
                vals[grid.flat_index(&r[..d])] = amp;
            }
            support = support.union(&b).union(&b.reflect());
        }
        Ok(out.with_support(support))
    }
}
