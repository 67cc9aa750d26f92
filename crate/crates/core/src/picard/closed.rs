use num_complex::Complex64;
use rayon::prelude::*;

use super::time_factor::time_factor;
use crate::equations::EquationSpec;
use crate::error::{LabError, Result};
use crate::spectral::{IndexBox, SpectralField, MAX_DIM};

struct Node {
    flat: usize,
    offset: [i64; MAX_DIM],
    /// `u0(xi)` for plain factors.
    plain: Complex64,
    /// `conj(u0(-xi))` for conjugated factors.
    conj: Complex64,
    phase: f64,
    phase_neg: f64,
}

/// `I_p` on `window` by direct summation over data tuples, with the time
/// integral in closed form.
///
/// Each tuple contributes `c mu(xi) e^{it phi(xi)} Phi(t, M) prod u0(xi_j) h^{d(p-1)}`.
/// When factors are `v + conj v`, every factor is expanded and each of the
/// `2^p` sign patterns gets its own modulation.
pub fn leading_iterate_closed(eq: &EquationSpec, u0: &SpectralField, t: f64, window: &IndexBox) -> Result<SpectralField> {
    let p = eq.degree();
    if !(2..=3).contains(&p) {
        return Err(LabError::InvalidArgument(format!("closed-form leading term needs p in {{2, 3}}, got {p}")));
    }
    let grid = *u0.grid();
    eq.check_dim(grid.dim())?;
    if !grid.full_box().contains_box(window) {
        return Err(LabError::InvalidArgument("output window lies outside the grid".into()));
    }
    let d = grid.dim();
    let h = grid.spacing();
    let m = eq.conj_count();
    let real = eq.nonlinearity.real_reduction;

    // a node can serve as factor j if its plain or conjugated value is nonzero
    let nodes: Vec<Node> = (0..grid.len())
        .filter_map(|idx| {
            let o = grid.offsets_of(idx);
            let mut r = [0i64; MAX_DIM];
            for a in 0..d {
                r[a] = -o[a];
            }
            let plain = u0.values()[idx];
            let conj = u0.at(&r[..d]).conj();
            if plain == Complex64::new(0.0, 0.0) && conj == Complex64::new(0.0, 0.0) {
                return None;
            }
            let mut xi = [0.0; MAX_DIM];
            let mut neg = [0.0; MAX_DIM];
            for a in 0..d {
                xi[a] = o[a] as f64 * h;
                neg[a] = -xi[a];
            }
            let (phase, phase_neg) = (eq.phase(&xi[..d]), eq.phase(&neg[..d]));
            Some(Node { flat: idx, offset: o, plain, conj, phase, phase_neg })
        })
        .collect();
    let node_at = |o: &[i64]| -> Option<&Node> {
        if !grid.contains_offsets(o) {
            return None;
        }
        let idx = grid.flat_index(o);
        nodes.binary_search_by_key(&idx, |n| n.flat).ok().map(|i| &nodes[i])
    };

    // sign patterns: bit j set means factor j is conjugated
    let patterns: Vec<usize> = if real {
        (0..1usize << p).collect()
    } else {
        vec![((1usize << p) - 1) & !((1usize << (p - m)) - 1)]
    };
    let weight = grid.cell_volume().powi(p as i32 - 1);
    let cells: Vec<[i64; MAX_DIM]> = window.iter().collect();
    let values: Vec<Complex64> = cells
        .par_iter()
        .map(|out| {
            let mut xi_out = [0.0; MAX_DIM];
            for a in 0..d {
                xi_out[a] = out[a] as f64 * h;
            }
            let phi_out = eq.phase(&xi_out[..d]);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut tuple: Vec<&Node> = Vec::with_capacity(p);
            let visit = |tuple: &[&Node], acc: &mut Complex64| {
                let mut last = [0i64; MAX_DIM];
                for a in 0..d {
                    last[a] = out[a] - tuple.iter().map(|n| n.offset[a]).sum::<i64>();
                }
                let Some(lastn) = node_at(&last[..d]) else { return };
                let mut all: Vec<&Node> = tuple.to_vec();
                all.push(lastn);
                for &mask in &patterns {
                    let mut prod = Complex64::new(1.0, 0.0);
                    let mut m_val = phi_out;
                    for (j, n) in all.iter().enumerate() {
                        if mask >> j & 1 == 1 {
                            prod *= n.conj;
                            m_val += n.phase_neg;
                        } else {
                            prod *= n.plain;
                            m_val -= n.phase;
                        }
                    }
                    if prod != Complex64::new(0.0, 0.0) {
                        *acc += prod * time_factor(t, m_val);
                    }
                }
            };
            if p == 2 {
                for a in &nodes {
                    tuple.clear();
                    tuple.push(a);
                    visit(&tuple, &mut acc);
                }
            } else {
                for a in &nodes {
                    for b in &nodes {
                        tuple.clear();
                        tuple.push(a);
                        tuple.push(b);
                        visit(&tuple, &mut acc);
                    }
                }
            }
            acc * eq.output_weight(&xi_out[..d]) * Complex64::from_polar(weight, t * phi_out)
        })
        .collect();
    let mut f = SpectralField::zeros(grid);
    {
        let fv = f.values_mut();
        for (o, v) in cells.iter().zip(values) {
            fv[grid.flat_index(&o[..d])] = v;
        }
    }
    Ok(f.with_support(*window))
}
