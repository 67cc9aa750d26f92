//! Exact evaluation of `I_n` as a sum over interaction trees.
//!
//! Unrolling the recurrence writes `I_n` as a sum over ordered `p`-ary trees
//! with `n` leaves. Every leaf carries a data frequency, every internal node
//! a Duhamel time, and the nested time integral over the tree's order
//! polytope splits into chain integrals, one per linear extension. No time
//! discretisation is involved, so the result is exact up to rounding even
//! when `t M` is in the thousands.

use num_complex::Complex64;
use rayon::prelude::*;

use super::time_factor::chain_integral;
use super::{level_is_active, snapshot_times, validate_common};
use super::{Engine, IterateSet, SeriesOptions, Snapshot};
use crate::equations::EquationSpec;
use crate::error::{LabError, Result};
use crate::spectral::{IndexBox, SpectralField, MAX_DIM};

/// Forced tree runs above this many evaluations are refused.
const HARD_LIMIT: f64 = 2e9;

#[derive(Debug, Clone)]
struct Tree {
    /// Children of each node in preorder; empty for leaves.
    children: Vec<Vec<usize>>,
}

impl Tree {
    fn leaf() -> Self {
        Self { children: vec![Vec::new()] }
    }

    fn join(parts: &[&Tree]) -> Self {
        let mut children = vec![Vec::new()];
        for part in parts {
            let base = children.len();
            children[0].push(base);
            for ch in &part.children {
                children.push(ch.iter().map(|c| c + base).collect());
            }
        }
        Self { children }
    }
}

fn trees_with_leaves(n: usize, p: usize, memo: &mut Vec<Option<Vec<Tree>>>) -> Vec<Tree> {
    if memo.len() <= n {
        memo.resize(n + 1, None);
    }
    if let Some(v) = &memo[n] {
        return v.clone();
    }
    let out = if n == 1 {
        vec![Tree::leaf()]
    } else {
        let mut out = Vec::new();
        let mut comps = Vec::new();
        super::for_each_composition(n, p, |c| comps.push(c.to_vec()));
        for comp in comps {
            let subs: Vec<Vec<Tree>> = comp.iter().map(|&k| trees_with_leaves(k, p, memo)).collect();
            let mut idx = vec![0usize; p];
            'outer: loop {
                let parts: Vec<&Tree> = (0..p).map(|i| &subs[i][idx[i]]).collect();
                out.push(Tree::join(&parts));
                for i in (0..p).rev() {
                    idx[i] += 1;
                    if idx[i] < subs[i].len() {
                        continue 'outer;
                    }
                    idx[i] = 0;
                }
                break;
            }
        }
        out
    };
    memo[n] = Some(out.clone());
    out
}

/// Flattened tree with the data needed in the inner loop.
struct Compiled {
    children: Vec<Vec<usize>>,
    internals: Vec<usize>,
    leaves: Vec<usize>,
    /// Non-root nodes with their fixed sign, or `None` when the sign is summed over.
    kappa_fixed: Vec<Option<i8>>,
    free: Vec<usize>,
    extensions: Vec<Vec<usize>>,
}

impl Compiled {
    fn new(tree: &Tree, eq: &EquationSpec) -> Self {
        let p = eq.degree();
        let m = eq.conj_count();
        let real = eq.nonlinearity.real_reduction;
        let nn = tree.children.len();
        let internals: Vec<usize> = (0..nn).filter(|&v| !tree.children[v].is_empty()).collect();
        let leaves: Vec<usize> = (0..nn).filter(|&v| tree.children[v].is_empty()).collect();
        let mut kappa_fixed = vec![Some(1i8); nn];
        let mut free = Vec::new();
        for v in 0..nn {
            for (slot, &c) in tree.children[v].iter().enumerate() {
                if real {
                    kappa_fixed[c] = None;
                    free.push(c);
                } else if slot >= p - m {
                    kappa_fixed[c] = Some(-1);
                }
            }
        }
        let mut parent = vec![usize::MAX; nn];
        for v in 0..nn {
            for &c in &tree.children[v] {
                parent[c] = v;
            }
        }
        let mut extensions = Vec::new();
        let mut order = Vec::new();
        let mut placed = vec![false; nn];
        fn extend(
            internals: &[usize],
            parent: &[usize],
            placed: &mut Vec<bool>,
            order: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if order.len() == internals.len() {
                out.push(order.clone());
                return;
            }
            for &v in internals {
                if placed[v] {
                    continue;
                }
                if v != 0 && !placed[parent[v]] {
                    continue;
                }
                placed[v] = true;
                order.push(v);
                extend(internals, parent, placed, order, out);
                order.pop();
                placed[v] = false;
            }
        }
        extend(&internals, &parent, &mut placed, &mut order, &mut extensions);
        Self { children: tree.children.clone(), internals, leaves, kappa_fixed, free, extensions }
    }

    fn patterns(&self) -> usize {
        1usize << self.free.len()
    }

    /// Signs for pattern `mask` and the cumulative signs `sigma`.
    fn signs(&self, mask: usize) -> (Vec<i8>, Vec<i8>) {
        let nn = self.children.len();
        let mut kappa: Vec<i8> = self.kappa_fixed.iter().map(|k| k.unwrap_or(1)).collect();
        for (bit, &v) in self.free.iter().enumerate() {
            kappa[v] = if mask >> bit & 1 == 1 { -1 } else { 1 };
        }
        kappa[0] = 1;
        let mut sigma = vec![1i8; nn];
        for v in 0..nn {
            for &c in &self.children[v] {
                sigma[c] = sigma[v] * kappa[c];
            }
        }
        (kappa, sigma)
    }
}

struct SupportNode {
    offset: [i64; MAX_DIM],
    value: Complex64,
    phase: f64,
}

fn support_nodes(eq: &EquationSpec, u0: &SpectralField) -> Vec<SupportNode> {
    let g = u0.grid();
    let d = g.dim();
    let h = g.spacing();
    u0.values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.re != 0.0 || v.im != 0.0)
        .map(|(idx, v)| {
            let o = g.offsets_of(idx);
            let xi: Vec<f64> = (0..d).map(|a| o[a] as f64 * h).collect();
            SupportNode { offset: o, value: *v, phase: eq.phase(&xi) }
        })
        .collect()
}

/// Number of chain evaluations the tree engine would perform.
pub fn workload(eq: &EquationSpec, u0: &SpectralField, n_max: usize) -> f64 {
    let p = eq.degree();
    let s = u0.values().iter().filter(|v| v.re != 0.0 || v.im != 0.0).count() as f64;
    let mut memo = Vec::new();
    let mut total = 0.0;
    for n in 2..=n_max {
        if !level_is_active(n, p) {
            continue;
        }
        // tree and extension counts grow factorially
        if n > 8 || s.powi(n as i32) > 1e12 {
            return f64::INFINITY;
        }
        for tree in trees_with_leaves(n, p, &mut memo) {
            let c = Compiled::new(&tree, eq);
            total += c.patterns() as f64 * c.extensions.len() as f64 * s.powi(n as i32);
        }
    }
    total
}

fn local_index(b: &IndexBox, o: &[i64; MAX_DIM]) -> usize {
    let mut idx = 0usize;
    for a in (0..b.dim).rev() {
        idx = idx * b.extent_along(a) + (o[a] - b.lo[a]) as usize;
    }
    idx
}

/// `I_n(t)` for each requested time, from the tree expansion.
fn level_at_times(
    eq: &EquationSpec,
    u0: &SpectralField,
    nodes: &[SupportNode],
    n: usize,
    out_box: &IndexBox,
    times: &[f64],
    memo: &mut Vec<Option<Vec<Tree>>>,
) -> Vec<Vec<Complex64>> {
    let p = eq.degree();
    let grid = u0.grid();
    let d = grid.dim();
    let h = grid.spacing();
    let cells = out_box.count();
    let ns = nodes.len();
    let compiled: Vec<Compiled> = trees_with_leaves(n, p, memo).iter().map(|t| Compiled::new(t, eq)).collect();
    let nt = times.len();

    let partials: Vec<Vec<Complex64>> = (0..ns)
        .into_par_iter()
        .map(|first| {
            let mut acc = vec![Complex64::new(0.0, 0.0); cells * nt];
            for tree in &compiled {
                let nn = tree.children.len();
                let nl = tree.leaves.len();
                let mut freq = vec![[0i64; MAX_DIM]; nn];
                let mut phase = vec![0.0f64; nn];
                let mut weight = vec![Complex64::new(0.0, 0.0); nn];
                let mut lambda = vec![Complex64::new(0.0, 0.0); nn];
                let mut chain = vec![Complex64::new(0.0, 0.0); tree.internals.len()];
                let mut assign = vec![0usize; nl];
                for mask in 0..tree.patterns() {
                    let (kappa, sigma) = tree.signs(mask);
                    assign.iter_mut().for_each(|a| *a = 0);
                    assign[0] = first;
                    loop {
                        let mut constant = Complex64::new(1.0, 0.0);
                        for (li, &v) in tree.leaves.iter().enumerate() {
                            let sn = &nodes[assign[li]];
                            freq[v] = sn.offset;
                            phase[v] = sn.phase;
                            constant *= if sigma[v] < 0 { sn.value.conj() } else { sn.value };
                        }
                        for &w in tree.internals.iter().rev() {
                            let mut f = [0i64; MAX_DIM];
                            let mut child_phase = 0.0;
                            for &c in &tree.children[w] {
                                let k = kappa[c] as i64;
                                for a in 0..d {
                                    f[a] += k * freq[c][a];
                                }
                                child_phase += kappa[c] as f64 * phase[c];
                            }
                            freq[w] = f;
                            let mut xi = [0.0; MAX_DIM];
                            for a in 0..d {
                                xi[a] = f[a] as f64 * h;
                            }
                            phase[w] = eq.phase(&xi[..d]);
                            let wt = eq.output_weight(&xi[..d]);
                            weight[w] = if sigma[w] < 0 { wt.conj() } else { wt };
                            let m = phase[w] - child_phase;
                            lambda[w] = Complex64::new(0.0, -(sigma[w] as f64) * m);
                            constant *= weight[w];
                        }
                        if constant.re != 0.0 || constant.im != 0.0 {
                            let cell = local_index(out_box, &freq[0]);
                            for (ti, &t) in times.iter().enumerate() {
                                let mut total = Complex64::new(0.0, 0.0);
                                for ext in &tree.extensions {
                                    for (slot, &w) in ext.iter().enumerate() {
                                        chain[slot] = lambda[w];
                                    }
                                    total += chain_integral(t, &chain);
                                }
                                acc[ti * cells + cell] += constant * total * Complex64::from_polar(1.0, t * phase[0]);
                            }
                        }
                        // next assignment of leaves 1..nl
                        let mut li = 1;
                        while li < nl {
                            assign[li] += 1;
                            if assign[li] < ns {
                                break;
                            }
                            assign[li] = 0;
                            li += 1;
                        }
                        if li >= nl {
                            break;
                        }
                    }
                }
            }
            acc
        })
        .collect();

    let scale = grid.cell_volume().powi(n as i32 - 1);
    let mut out = vec![vec![Complex64::new(0.0, 0.0); cells]; nt];
    for part in &partials {
        for ti in 0..nt {
            for c in 0..cells {
                out[ti][c] += part[ti * cells + c];
            }
        }
    }
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    out
}

pub fn iterate_tree(eq: &EquationSpec, u0: &SpectralField, t: f64, opts: &SeriesOptions) -> Result<IterateSet> {
    let boxes = validate_common(eq, u0, t, opts.n_max)?;
    let work = workload(eq, u0, opts.n_max) * opts.snapshots.max(1) as f64;
    if work > HARD_LIMIT {
        return Err(LabError::Budget(format!("tree expansion needs {work:.2e} chain evaluations")));
    }
    let grid = *u0.grid();
    let d = grid.dim();
    let times = snapshot_times(t, opts.snapshots);
    let nodes = support_nodes(eq, u0);
    let mut memo = Vec::new();
    let mut per_time: Vec<Vec<SpectralField>> = vec![Vec::with_capacity(opts.n_max); times.len()];
    for (ti, &s) in times.iter().enumerate() {
        let first = u0.multiply_by(|xi| Complex64::from_polar(1.0, s * eq.phase(xi)));
        per_time[ti].push(first);
    }
    for n in 2..=opts.n_max {
        let b = boxes[n - 1];
        if !level_is_active(n, eq.degree()) || b.is_empty() || nodes.is_empty() {
            for row in per_time.iter_mut() {
                row.push(SpectralField::zeros(grid));
            }
            continue;
        }
        let vals = level_at_times(eq, u0, &nodes, n, &b, &times, &mut memo);
        for (ti, row) in vals.iter().enumerate() {
            let mut f = SpectralField::zeros(grid);
            {
                let fv = f.values_mut();
                for (o, v) in b.iter().zip(row) {
                    fv[grid.flat_index(&o[..d])] = *v;
                }
            }
            per_time[ti].push(f.with_support(b));
        }
    }
    let snapshots = times
        .iter()
        .zip(per_time)
        .map(|(&s, iterates)| Snapshot { t: s, iterates })
        .collect();
    Ok(IterateSet {
        equation: eq.clone(),
        data: u0.clone(),
        t,
        n_max: opts.n_max,
        engine: Engine::Tree,
        time_nodes: times,
        snapshots,
        quadrature_discrepancy: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_counts_are_catalan_for_quadratic() {
        let mut memo = Vec::new();
        let counts: Vec<usize> = (1..=6).map(|n| trees_with_leaves(n, 2, &mut memo).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 14, 42]);
    }

    #[test]
    fn linear_extensions_of_a_cherry() {
        let eq = EquationSpec::catalog("nls_uu").unwrap();
        let mut memo = Vec::new();
        let trees = trees_with_leaves(5, 2, &mut memo);
        // increasing binary trees with 4 internal nodes are counted by 4!
        let exts: Vec<usize> = trees.iter().map(|t| Compiled::new(t, &eq).extensions.len()).collect();
        assert_eq!(exts.iter().sum::<usize>(), 24);
    }
}
