use num_complex::Complex64;

use crate::equations::EquationSpec;
use crate::error::{LabError, Result};
use crate::spectral::{IndexBox, SpectralField, MAX_DIM};

/// Largest number of `(output, tuple)` pairs the brute-force sum will visit.
pub const BRUTE_BUDGET: f64 = 16_777_216.0;

/// `int_0^t e^{-i s m} ds` written as `t e^{-i tm/2} sinc(tm/2)`.
fn phi_factor(t: f64, m: f64) -> Complex64 {
    let x = 0.5 * t * m;
    let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    Complex64::from_polar(t * sinc, -x)
}

/// `I_p(t)` on `window` by looping over every grid tuple.
///
/// Shares nothing with the iterate engines beyond the equation's symbol and
/// multiplier: tuples are enumerated over the whole grid, conjugated and
/// `v + conj v` factors are expanded explicitly, and the time integral is
/// evaluated from its sinc form.
pub fn brute_leading_iterate(eq: &EquationSpec, u0: &SpectralField, t: f64, window: &IndexBox) -> Result<SpectralField> {
    let grid = *u0.grid();
    let d = grid.dim();
    let p = eq.degree();
    eq.check_dim(d)?;
    if p > 4 {
        return Err(LabError::InvalidArgument(format!("brute-force sum supports p <= 4, got {p}")));
    }
    if !grid.full_box().contains_box(window) {
        return Err(LabError::InvalidArgument("output window lies outside the grid".into()));
    }
    let tuples = window.count() as f64 * (grid.len() as f64).powi(p as i32 - 1);
    if tuples > BRUTE_BUDGET {
        return Err(LabError::Budget(format!("brute-force sum needs {tuples:.3e} tuples, limit {BRUTE_BUDGET:.3e}")));
    }
    let h = grid.spacing();
    let weight = grid.cell_volume().powi(p as i32 - 1);
    let coeff = eq.nonlinearity.coefficient;
    let m = eq.conj_count();
    let real = eq.nonlinearity.real_reduction;

    // sign patterns: bit j set means factor j enters conjugated
    let patterns: Vec<u32> = if real { (0..1u32 << p).collect() } else { vec![((1u32 << m) - 1) << (p - m)] };

    let coord = |o: &[i64]| -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for a in 0..d {
            x[a] = o[a] as f64 * h;
        }
        x
    };
    // value and phase of one factor at offset `o`
    let factor = |o: &[i64], conj: bool| -> (Complex64, f64) {
        if conj {
            let mut r = [0i64; MAX_DIM];
            for a in 0..d {
                r[a] = -o[a];
            }
            if !grid.contains_offsets(&r[..d]) {
                return (Complex64::new(0.0, 0.0), 0.0);
            }
            let v = u0.values()[grid.flat_index(&r[..d])].conj();
            (v, eq.phase(&coord(&r[..d])[..d]))
        } else {
            let v = u0.values()[grid.flat_index(o)];
            (v, eq.phase(&coord(o)[..d]))
        }
    };

    let mut out = SpectralField::zeros(grid);
    let free = grid.len().pow(p as u32 - 1);
    for o in window.iter() {
        let xi = coord(&o[..d]);
        let phase_out = eq.phase(&xi[..d]);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut offs = [[0i64; MAX_DIM]; 4];
        for code in 0..free {
            let mut c = code;
            let mut last = o;
            for slot in offs.iter_mut().take(p - 1) {
                *slot = grid.offsets_of(c % grid.len());
                c /= grid.len();
                for a in 0..d {
                    last[a] -= slot[a];
                }
            }
            if !grid.contains_offsets(&last[..d]) {
                continue;
            }
            offs[p - 1] = last;
            for &pat in &patterns {
                let mut prod = Complex64::new(1.0, 0.0);
                let mut m_val = phase_out;
                for (j, oj) in offs.iter().take(p).enumerate() {
                    let conj = pat >> j & 1 == 1;
                    let (v, ph) = factor(&oj[..d], conj);
                    prod *= v;
                    if conj {
                        m_val += ph;
                    } else {
                        m_val -= ph;
                    }
                }
                if prod.re == 0.0 && prod.im == 0.0 {
                    continue;
                }
                acc += prod * phi_factor(t, m_val);
            }
        }
        let val = coeff * eq.nonlinearity.multiplier.eval(&xi[..d]) * Complex64::from_polar(weight, t * phase_out) * acc;
        out.set(&o[..d], val);
    }
    Ok(out)
}
