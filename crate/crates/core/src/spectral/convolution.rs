use num_complex::Complex64;

use super::fft::NdFft;
use super::field::SpectralField;
use super::grid::{fft_friendly_even, IndexBox, MAX_DIM};
use crate::error::{LabError, Result};

/// Grids with fewer nodes than this are convolved by direct summation.
pub const DIRECT_THRESHOLD: usize = 256;

fn output_box(f: &SpectralField, g: &SpectralField) -> Result<(IndexBox, IndexBox, IndexBox)> {
    if f.grid() != g.grid() {
        return Err(LabError::GridMismatch);
    }
    let bf = f.support_box();
    let bg = g.support_box();
    let out = bf.minkowski(&bg);
    if !f.grid().full_box().contains_box(&out) {
        return Err(LabError::SupportOverflow(format!(
            "convolution output box {:?}..{:?}",
            &out.lo[..out.dim],
            &out.hi[..out.dim]
        )));
    }
    Ok((bf, bg, out))
}

/// `(f*g)(xi) = sum_eta f(eta) g(xi - eta) h^d`, picking the strategy by grid size.
pub fn convolve(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if f.grid().len() < DIRECT_THRESHOLD {
        convolve_direct(f, g)
    } else {
        convolve_fft(f, g)
    }
}

pub fn convolve_direct(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let (bf, bg, out_box) = output_box(f, g)?;
    let grid = *f.grid();
    let d = grid.dim();
    let w = grid.cell_volume();
    let mut out = SpectralField::zeros(grid);
    if out_box.is_empty() {
        return Ok(out);
    }
    let vals = out.values_mut();
    let mut o = [0i64; MAX_DIM];
    for a in bf.iter() {
        let fa = f.values()[grid.flat_index(&a[..d])];
        if fa.re == 0.0 && fa.im == 0.0 {
            continue;
        }
        for b in bg.iter() {
            let gb = g.values()[grid.flat_index(&b[..d])];
            for k in 0..d {
                o[k] = a[k] + b[k];
            }
            vals[grid.flat_index(&o[..d])] += fa * gb * w;
        }
    }
    Ok(out.with_support(out_box))
}

/// Linear convolution of the support boxes through zero-padded transforms.
pub fn convolve_fft(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let (bf, bg, out_box) = output_box(f, g)?;
    let grid = *f.grid();
    let d = grid.dim();
    if out_box.is_empty() {
        return Ok(SpectralField::zeros(grid));
    }
    let shape: Vec<usize> = (0..d).map(|a| fft_friendly_even(out_box.extent_along(a))).collect();
    let fft = NdFft::new(&shape);
    let local = |o: &[i64], lo: &[i64; MAX_DIM]| {
        let mut idx = 0usize;
        for a in (0..d).rev() {
            idx = idx * shape[a] + (o[a] - lo[a]) as usize;
        }
        idx
    };
    let mut fa = vec![Complex64::new(0.0, 0.0); fft.len()];
    let mut gb = fa.clone();
    for o in bf.iter() {
        fa[local(&o, &bf.lo)] = f.values()[grid.flat_index(&o[..d])];
    }
    for o in bg.iter() {
        gb[local(&o, &bg.lo)] = g.values()[grid.flat_index(&o[..d])];
    }
    fft.forward(&mut fa);
    fft.forward(&mut gb);
    let scale = grid.cell_volume() / fft.len() as f64;
    for (x, y) in fa.iter_mut().zip(&gb) {
        *x *= y * scale;
    }
    fft.inverse(&mut fa);
    let mut out = SpectralField::zeros(grid);
    let vals = out.values_mut();
    for o in out_box.iter() {
        vals[grid.flat_index(&o[..d])] = fa[local(&o, &out_box.lo)];
    }
    Ok(out.with_support(out_box))
}
