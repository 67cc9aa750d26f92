//! Picard iterates `I_n` of the Duhamel formulation.

pub mod closed;
pub mod quadrature;
pub mod series;
pub mod time_factor;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::equations::EquationSpec;
use crate::error::{LabError, Result};
use crate::spectral::{IndexBox, Norm, SpectralField};

pub use closed::leading_iterate_closed;
pub use series::{series_sum, SeriesSum};
pub use time_factor::{chain_integral, time_factor};

/// True when `I_n` can be nonzero, i.e. `n = l (p - 1) + 1`.
pub fn level_is_active(n: usize, p: usize) -> bool {
    n >= 1 && (n - 1) % (p - 1) == 0
}

/// How the iterates were computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Streaming fourth-order time quadrature with transform-based products.
    Quadrature,
    /// Exact sum over interaction trees with closed-form time integrals.
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    Auto,
    Quadrature,
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub n_max: usize,
    /// Time nodes of the quadrature mesh, endpoints included.
    pub k: usize,
    /// Re-run with `2K - 1` nodes and fail if the iterates move by more than `tolerance`.
    pub check_convergence: bool,
    pub tolerance: f64,
    /// Number of evenly spaced output times; the last one is `t`.
    pub snapshots: usize,
    pub engine: EngineChoice,
    /// Largest tree-engine workload (tuple-pattern evaluations) accepted by `Auto`.
    pub tree_budget: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            n_max: 3,
            k: 65,
            check_convergence: true,
            tolerance: 1e-6,
            snapshots: 1,
            engine: EngineChoice::Auto,
            tree_budget: 2e6,
        }
    }
}

/// Iterates `I_1 .. I_{n_max}` at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub iterates: Vec<SpectralField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateSet {
    pub equation: EquationSpec,
    pub data: SpectralField,
    pub t: f64,
    pub n_max: usize,
    pub engine: Engine,
    pub time_nodes: Vec<f64>,
    /// Snapshots in increasing time; the last one is at `t`.
    pub snapshots: Vec<Snapshot>,
    /// Relative change between the `K` and `2K - 1` runs, when checked.
    pub quadrature_discrepancy: Option<f64>,
}

impl IterateSet {
    /// `I_n` at the final time.
    pub fn iterate(&self, n: usize) -> &SpectralField {
        &self.snapshots.last().expect("at least one snapshot").iterates[n - 1]
    }

    pub fn norm(&self, n: usize, which: Norm) -> f64 {
        self.iterate(n).norm(which)
    }

    pub fn degree(&self) -> usize {
        self.equation.degree()
    }
}

/// Boxes containing the support of each `I_n`, `n = 1..=n_max`.
pub fn level_boxes(eq: &EquationSpec, b1: IndexBox, n_max: usize) -> Vec<IndexBox> {
    let p = eq.degree();
    let m = eq.conj_count();
    let real = eq.nonlinearity.real_reduction;
    let d = b1.dim;
    let mut boxes = vec![IndexBox::empty(d); n_max];
    if n_max == 0 {
        return boxes;
    }
    boxes[0] = b1;
    for n in 2..=n_max {
        if !level_is_active(n, p) {
            continue;
        }
        let mut acc = IndexBox::empty(d);
        for_each_composition(n, p, |parts| {
            let mut b: Option<IndexBox> = None;
            for (i, &nj) in parts.iter().enumerate() {
                let base = boxes[nj - 1];
                let f = if real {
                    base.union(&base.reflect())
                } else if i >= p - m {
                    base.reflect()
                } else {
                    base
                };
                b = Some(match b {
                    None => f,
                    Some(prev) => prev.minkowski(&f),
                });
            }
            if let Some(b) = b {
                acc = acc.union(&b);
            }
        });
        boxes[n - 1] = acc;
    }
    boxes
}

/// Calls `f` on every composition `n_1 + .. + n_p = n` into active levels.
pub fn for_each_composition(n: usize, p: usize, mut f: impl FnMut(&[usize])) {
    fn rec(rem: usize, slots: usize, p: usize, parts: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if slots == 0 {
            if rem == 0 {
                f(parts);
            }
            return;
        }
        for nj in 1..=rem.saturating_sub(slots - 1) {
            if !level_is_active(nj, p) {
                continue;
            }
            parts.push(nj);
            rec(rem - nj, slots - 1, p, parts, f);
            parts.pop();
        }
    }
    let mut parts = Vec::with_capacity(p);
    rec(n, p, p, &mut parts, &mut f);
}

fn validate_common(eq: &EquationSpec, u0: &SpectralField, t: f64, n_max: usize) -> Result<Vec<IndexBox>> {
    eq.check_dim(u0.grid().dim())?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(LabError::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
    }
    if n_max == 0 {
        return Err(LabError::InvalidArgument("n_max must be at least 1".into()));
    }
    let boxes = level_boxes(eq, u0.scan_support(), n_max);
    let full = u0.grid().full_box();
    for (i, b) in boxes.iter().enumerate() {
        if !full.contains_box(b) {
            return Err(LabError::SupportOverflow(format!("support of I_{} exceeds the grid", i + 1)));
        }
    }
    Ok(boxes)
}

/// Computes `I_1 .. I_{n_max}` on `[0, t]`, choosing the engine per `opts`.
pub fn iterate_series(eq: &EquationSpec, u0: &SpectralField, t: f64, opts: &SeriesOptions) -> Result<IterateSet> {
    validate_common(eq, u0, t, opts.n_max)?;
    let engine = match opts.engine {
        EngineChoice::Quadrature => Engine::Quadrature,
        EngineChoice::Tree => Engine::Tree,
        EngineChoice::Auto => {
            if tree::workload(eq, u0, opts.n_max) <= opts.tree_budget {
                Engine::Tree
            } else {
                Engine::Quadrature
            }
        }
    };
    match engine {
        Engine::Quadrature => quadrature::iterate_quadrature(eq, u0, t, opts),
        Engine::Tree => tree::iterate_tree(eq, u0, t, opts),
    }
}

/// Evenly spaced snapshot times `j t / S`, `j = 1..=S`.
pub(crate) fn snapshot_times(t: f64, count: usize) -> Vec<f64> {
    let s = count.max(1);
    (1..=s).map(|j| t * j as f64 / s as f64).collect()
}
