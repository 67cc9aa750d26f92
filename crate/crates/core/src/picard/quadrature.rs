//! Streaming time quadrature of the Duhamel integrals.
//!
//! Each level is advanced in the interaction frame `J_n = e^{-itphi} I_n`,
//! whose integrand is `c mu(xi) e^{-is phi(xi)} S_n(s)` with `S_n` the sum of
//! `p`-fold products of lower iterates. Products are formed in a periodic
//! transform frame wide enough to hold every level's support.

use num_complex::Complex64;

use super::{for_each_composition, level_boxes, level_is_active, snapshot_times, validate_common};
use super::{Engine, IterateSet, SeriesOptions, Snapshot};
use crate::equations::EquationSpec;
use crate::error::{LabError, Result};
use crate::spectral::{GridSpec, Norm, PeriodicFrame, SpectralField};

const STARTUP: [[f64; 4]; 3] = [
    [9.0, 19.0, -5.0, 1.0],
    [-1.0, 13.0, 13.0, -1.0],
    [1.0, -5.0, 19.0, 9.0],
];
const STREAM: [f64; 4] = [1.0, -5.0, 19.0, 9.0];

/// Per-level cell data on the level's support box.
struct Level {
    active: bool,
    frame_idx: Vec<usize>,
    grid_idx: Vec<usize>,
    weight: Vec<Complex64>,
    phase: Vec<f64>,
    j: Vec<Complex64>,
    hist: [Vec<Complex64>; 4],
}

#[derive(Clone, Copy)]
enum FactorKind {
    Plain,
    Conj,
    Real,
}

struct Run<'a> {
    eq: &'a EquationSpec,
    grid: GridSpec,
    frame: PeriodicFrame,
    levels: Vec<Level>,
    u0_vals: Vec<Complex64>,
    product_scale: f64,
    n_max: usize,
    p: usize,
}

impl<'a> Run<'a> {
    fn new(eq: &'a EquationSpec, u0: &SpectralField, n_max: usize) -> Self {
        let grid = *u0.grid();
        let boxes = level_boxes(eq, u0.scan_support(), n_max);
        let frame = PeriodicFrame::covering(grid.dim(), &boxes);
        let d = grid.dim();
        let h = grid.spacing();
        let p = eq.degree();
        let levels: Vec<Level> = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let active = level_is_active(i + 1, p) && !b.is_empty();
                let cells: Vec<_> = if active { frame.cells(b).collect() } else { Vec::new() };
                let mut xi = [0.0; 3];
                let mut weight = Vec::with_capacity(cells.len());
                let mut phase = Vec::with_capacity(cells.len());
                for (o, _) in &cells {
                    for a in 0..d {
                        xi[a] = o[a] as f64 * h;
                    }
                    weight.push(eq.output_weight(&xi[..d]));
                    phase.push(eq.phase(&xi[..d]));
                }
                let len = cells.len();
                Level {
                    active,
                    frame_idx: cells.iter().map(|(_, f)| *f).collect(),
                    grid_idx: cells.iter().map(|(o, _)| grid.flat_index(&o[..d])).collect(),
                    weight,
                    phase,
                    j: vec![Complex64::new(0.0, 0.0); len],
                    hist: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); len]),
                }
            })
            .collect();
        let u0_vals = levels[0].grid_idx.iter().map(|&g| u0.values()[g]).collect();
        let product_scale = grid.cell_volume().powi(p as i32 - 1) / frame.len() as f64;
        Self { eq, grid, frame, levels, u0_vals, product_scale, n_max, p }
    }

    /// Transformed `I_1(s)`.
    fn first_transform(&self, s: f64) -> Vec<Complex64> {
        let lvl = &self.levels[0];
        let mut buf = self.frame.zeros();
        for (k, &fi) in lvl.frame_idx.iter().enumerate() {
            buf[fi] = self.u0_vals[k] * Complex64::from_polar(1.0, s * lvl.phase[k]);
        }
        self.frame.forward(&mut buf);
        buf
    }

    /// Transformed `I_n(s) = e^{is phi} J_n(s)` from the level's current `J`.
    fn level_transform(&self, n: usize, s: f64) -> Vec<Complex64> {
        let lvl = &self.levels[n - 1];
        let mut buf = self.frame.zeros();
        for (k, &fi) in lvl.frame_idx.iter().enumerate() {
            buf[fi] = lvl.j[k] * Complex64::from_polar(1.0, s * lvl.phase[k]);
        }
        self.frame.forward(&mut buf);
        buf
    }

    fn factor_kind(&self, slot: usize) -> FactorKind {
        if self.eq.nonlinearity.real_reduction {
            FactorKind::Real
        } else if slot >= self.p - self.eq.conj_count() {
            FactorKind::Conj
        } else {
            FactorKind::Plain
        }
    }

    /// Integrand `g_n(s)` on the level's cells, given transforms of lower levels at `s`.
    fn integrand(&self, n: usize, s: f64, transforms: &[Option<Vec<Complex64>>]) -> Vec<Complex64> {
        let len = self.frame.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); len];
        let kinds: Vec<FactorKind> = (0..self.p).map(|i| self.factor_kind(i)).collect();
        let mut prod = vec![Complex64::new(0.0, 0.0); len];
        for_each_composition(n, self.p, |parts| {
            if parts.iter().any(|&nj| transforms[nj - 1].is_none()) {
                return;
            }
            for (slot, &nj) in parts.iter().enumerate() {
                let x = transforms[nj - 1].as_ref().expect("checked above");
                let kind = kinds[slot];
                if slot == 0 {
                    for (pv, xv) in prod.iter_mut().zip(x) {
                        *pv = apply(kind, *xv);
                    }
                } else {
                    for (pv, xv) in prod.iter_mut().zip(x) {
                        *pv *= apply(kind, *xv);
                    }
                }
            }
            for (a, pv) in acc.iter_mut().zip(&prod) {
                *a += pv;
            }
        });
        self.frame.inverse(&mut acc);
        let lvl = &self.levels[n - 1];
        lvl.frame_idx
            .iter()
            .enumerate()
            .map(|(k, &fi)| {
                lvl.weight[k] * Complex64::from_polar(self.product_scale, -s * lvl.phase[k]) * acc[fi]
            })
            .collect()
    }

    fn snapshot(&self, s: f64) -> Snapshot {
        let iterates = (1..=self.n_max)
            .map(|n| {
                let mut f = SpectralField::zeros(self.grid);
                let lvl = &self.levels[n - 1];
                if lvl.active {
                    let vals = f.values_mut();
                    for (k, &gi) in lvl.grid_idx.iter().enumerate() {
                        let j = if n == 1 { self.u0_vals[k] } else { lvl.j[k] };
                        vals[gi] = j * Complex64::from_polar(1.0, s * lvl.phase[k]);
                    }
                }
                f
            })
            .collect();
        Snapshot { t: s, iterates }
    }

    /// Whether level `n` is used as a factor by some higher level.
    fn feeds_higher(&self, n: usize) -> bool {
        n + self.p - 1 <= self.n_max
    }

    fn run(&mut self, t: f64, k_nodes: usize, snap_nodes: &[usize]) -> Vec<Snapshot> {
        let dt = t / (k_nodes - 1) as f64;
        let node_t = |k: usize| k as f64 * dt;
        let mut snaps = Vec::new();
        let mut next_snap = 0usize;
        let take = |k: usize, next: &mut usize, run: &Run, snaps: &mut Vec<Snapshot>| {
            while *next < snap_nodes.len() && snap_nodes[*next] == k {
                snaps.push(run.snapshot(node_t(k)));
                *next += 1;
            }
        };

        // startup block: nodes 0..=3, level by level
        let mut startup: Vec<Vec<Option<Vec<Complex64>>>> = (0..4)
            .map(|k| {
                let mut v = vec![None; self.n_max];
                if self.feeds_higher(1) {
                    v[0] = Some(self.first_transform(node_t(k)));
                }
                v
            })
            .collect();
        for n in 2..=self.n_max {
            if !self.levels[n - 1].active {
                continue;
            }
            let g: Vec<Vec<Complex64>> = (0..4).map(|k| self.integrand(n, node_t(k), &startup[k])).collect();
            let lvl = &mut self.levels[n - 1];
            let mut j_at = vec![vec![Complex64::new(0.0, 0.0); lvl.j.len()]; 4];
            for step in 0..3 {
                for c in 0..lvl.j.len() {
                    let inc: Complex64 = (0..4).map(|q| g[q][c] * STARTUP[step][q]).sum();
                    j_at[step + 1][c] = j_at[step][c] + inc * (dt / 24.0);
                }
            }
            for q in 0..4 {
                lvl.hist[q].clone_from(&g[q]);
            }
            for k in 0..4 {
                if self.feeds_higher(n) {
                    self.levels[n - 1].j.clone_from(&j_at[k]);
                    startup[k][n - 1] = Some(self.level_transform(n, node_t(k)));
                }
            }
            self.levels[n - 1].j.clone_from(&j_at[3]);
        }
        drop(startup);
        // snapshot nodes are clamped to >= 3, the first node whose J is still held
        take(3, &mut next_snap, self, &mut snaps);

        // streaming part: hist holds g at nodes k-4..k-1 in slots 0..3
        for k in 4..k_nodes {
            let s = node_t(k);
            let mut transforms: Vec<Option<Vec<Complex64>>> = vec![None; self.n_max];
            if self.feeds_higher(1) {
                transforms[0] = Some(self.first_transform(s));
            }
            for n in 2..=self.n_max {
                if !self.levels[n - 1].active {
                    continue;
                }
                let g = self.integrand(n, s, &transforms);
                let lvl = &mut self.levels[n - 1];
                lvl.hist.rotate_left(1);
                lvl.hist[3] = g;
                // weights act on g at nodes k-3, k-2, k-1, k
                for c in 0..lvl.j.len() {
                    let inc = lvl.hist[0][c] * STREAM[0]
                        + lvl.hist[1][c] * STREAM[1]
                        + lvl.hist[2][c] * STREAM[2]
                        + lvl.hist[3][c] * STREAM[3];
                    lvl.j[c] += inc * (dt / 24.0);
                }
                if self.feeds_higher(n) {
                    transforms[n - 1] = Some(self.level_transform(n, s));
                }
            }
            take(k, &mut next_snap, self, &mut snaps);
        }
        snaps
    }
}

#[inline]
fn apply(kind: FactorKind, x: Complex64) -> Complex64 {
    match kind {
        FactorKind::Plain => x,
        FactorKind::Conj => x.conj(),
        FactorKind::Real => Complex64::new(2.0 * x.re, 0.0),
    }
}

fn snapshot_nodes(t: f64, k_nodes: usize, count: usize) -> Vec<usize> {
    snapshot_times(t, count)
        .iter()
        .map(|&s| if t == 0.0 { k_nodes - 1 } else { ((s / t) * (k_nodes - 1) as f64).round() as usize })
        .map(|k| k.max(3))
        .collect()
}

fn single_run(eq: &EquationSpec, u0: &SpectralField, t: f64, opts: &SeriesOptions, k_nodes: usize) -> Vec<Snapshot> {
    let mut run = Run::new(eq, u0, opts.n_max);
    let nodes = snapshot_nodes(t, k_nodes, opts.snapshots);
    run.run(t, k_nodes, &nodes)
}

/// Largest per-level relative L2 change between two runs at the final time.
fn discrepancy(coarse: &[Snapshot], fine: &[Snapshot]) -> f64 {
    let (a, b) = (coarse.last().expect("snapshot"), fine.last().expect("snapshot"));
    a.iterates
        .iter()
        .zip(&b.iterates)
        .skip(1)
        .filter_map(|(x, y)| {
            let scale = y.norm(Norm::L2);
            (scale > 0.0).then(|| x.sub(y).map(|d| d.norm(Norm::L2) / scale).unwrap_or(f64::INFINITY))
        })
        .fold(0.0, f64::max)
}

pub fn iterate_quadrature(eq: &EquationSpec, u0: &SpectralField, t: f64, opts: &SeriesOptions) -> Result<IterateSet> {
    validate_common(eq, u0, t, opts.n_max)?;
    if opts.k < 9 {
        return Err(LabError::InvalidArgument(format!("quadrature needs K >= 9 nodes, got {}", opts.k)));
    }
    let coarse = single_run(eq, u0, t, opts, opts.k);
    let (snapshots, k_used, disc) = if opts.check_convergence && opts.n_max > 1 {
        let k_fine = 2 * opts.k - 1;
        let fine = single_run(eq, u0, t, opts, k_fine);
        let disc = discrepancy(&coarse, &fine);
        if disc > opts.tolerance {
            return Err(LabError::QuadratureNotConverged {
                k: opts.k,
                k_fine,
                discrepancy: disc,
                tolerance: opts.tolerance,
            });
        }
        (fine, k_fine, Some(disc))
    } else {
        (coarse, opts.k, None)
    };
    let dt = t / (k_used - 1) as f64;
    Ok(IterateSet {
        equation: eq.clone(),
        data: u0.clone(),
        t,
        n_max: opts.n_max,
        engine: Engine::Quadrature,
        time_nodes: (0..k_used).map(|k| k as f64 * dt).collect(),
        snapshots,
        quadrature_discrepancy: disc,
    })
}
