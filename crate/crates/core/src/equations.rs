//! Model equations: dispersion symbols, nonlinearities and the modulation function.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{DataFamily, FamilyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DispersionSymbol {
    /// `|xi|^alpha`.
    RadialPower(f64),
    /// `sum_k c_k xi^k` in one dimension, coefficients from degree 0 upwards.
    Polynomial1D(Vec<f64>),
}

impl DispersionSymbol {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        match self {
            DispersionSymbol::RadialPower(alpha) => {
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                if *alpha == 2.0 {
                    r2
                } else if *alpha == 4.0 {
                    r2 * r2
                } else {
                    r2.powf(alpha / 2.0)
                }
            }
            DispersionSymbol::Polynomial1D(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * xi[0] + ck),
        }
    }

    /// Growth order `alpha` with `|phi(r)| ~ r^alpha`.
    pub fn order(&self) -> f64 {
        match self {
            DispersionSymbol::RadialPower(alpha) => *alpha,
            DispersionSymbol::Polynomial1D(c) => c.iter().rposition(|&x| x != 0.0).unwrap_or(0) as f64,
        }
    }
}

/// Frequency multiplier applied to the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplier {
    One,
    /// `|xi|^2 / (1 + |xi|^2)`.
    Omega,
    /// `i xi`, one dimension only.
    IXi,
}

impl Multiplier {
    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        match self {
            Multiplier::One => Complex64::new(1.0, 0.0),
            Multiplier::Omega => {
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                Complex64::new(r2 / (1.0 + r2), 0.0)
            }
            Multiplier::IXi => Complex64::new(0.0, xi[0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub degree: usize,
    pub conj_count: usize,
    pub coefficient: Complex64,
    pub multiplier: Multiplier,
    /// Factors are `v + conj(v)` rather than `v` or `conj(v)`.
    pub real_reduction: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub name: String,
    pub dispersion: DispersionSymbol,
    pub nonlinearity: NonlinearitySpec,
    /// Bounded linear term `(i/2) (v - conj v)` of the reduced Boussinesq system.
    pub mass_term: bool,
}

fn minus_i() -> Complex64 {
    Complex64::new(0.0, -1.0)
}

impl EquationSpec {
    pub fn power_nls(alpha: f64, p: usize, m: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(LabError::InvalidEquation(format!("alpha must be positive, got {alpha}")));
        }
        if p < 2 || m > p {
            return Err(LabError::InvalidEquation(format!("need p >= 2 and 0 <= m <= p, got p={p}, m={m}")));
        }
        Ok(Self {
            name: format!("power_nls({},{},{})", fmt_num(alpha), p, m),
            dispersion: DispersionSymbol::RadialPower(alpha),
            nonlinearity: NonlinearitySpec {
                degree: p,
                conj_count: m,
                coefficient: minus_i(),
                multiplier: Multiplier::One,
                real_reduction: false,
            },
            mass_term: false,
        })
    }

    pub fn boussinesq(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(LabError::InvalidEquation(format!("need p >= 2, got {p}")));
        }
        Ok(Self {
            name: format!("boussinesq({p})"),
            dispersion: DispersionSymbol::RadialPower(2.0),
            nonlinearity: NonlinearitySpec {
                degree: p,
                conj_count: 0,
                coefficient: minus_i() / 2f64.powi(p as i32),
                multiplier: Multiplier::Omega,
                real_reduction: true,
            },
            mass_term: true,
        })
    }

    pub fn kawahara(b: i32) -> Result<Self> {
        if !(-1..=1).contains(&b) {
            return Err(LabError::InvalidEquation(format!("kawahara needs b in {{-1, 0, 1}}, got {b}")));
        }
        Ok(Self {
            name: format!("kawahara({b})"),
            dispersion: DispersionSymbol::Polynomial1D(vec![0.0, 0.0, 0.0, b as f64, 0.0, 1.0]),
            nonlinearity: NonlinearitySpec {
                degree: 2,
                conj_count: 0,
                coefficient: Complex64::new(-1.0, 0.0),
                multiplier: Multiplier::IXi,
                real_reduction: false,
            },
            mass_term: false,
        })
    }

    /// Looks up a catalog entry such as `nls_uu`, `power_nls(2,3,1)` or `kawahara(-1)`.
    pub fn catalog(name: &str) -> Result<Self> {
        let compact: String = name.chars().filter(|c| !c.is_whitespace()).collect();
        let (head, args) = match compact.find('(') {
            Some(i) if compact.ends_with(')') => (&compact[..i], &compact[i + 1..compact.len() - 1]),
            Some(_) => return Err(LabError::UnknownEquation(name.to_string())),
            None => (compact.as_str(), ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.parse::<f64>().map_err(|_| LabError::InvalidEquation(format!("bad argument `{a}` in {name}"))))
                .collect::<Result<_>>()?
        };
        let int = |x: f64| -> Result<i64> {
            if x.fract() == 0.0 {
                Ok(x as i64)
            } else {
                Err(LabError::InvalidEquation(format!("expected an integer, got {x} in {name}")))
            }
        };
        let arity = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(LabError::InvalidEquation(format!("{head} takes {k} arguments, got {}", nums.len())))
            }
        };
        let mut spec = match head {
            "nls_uu" => {
                arity(0)?;
                Self::power_nls(2.0, 2, 0)?
            }
            "nls_ubar2" => {
                arity(0)?;
                Self::power_nls(2.0, 2, 2)?
            }
            "nls_mod2" => {
                arity(0)?;
                Self::power_nls(2.0, 2, 1)?
            }
            "nls4_mod2" => {
                arity(0)?;
                Self::power_nls(4.0, 2, 1)?
            }
            "power_nls" => {
                arity(3)?;
                let (p, m) = (int(nums[1])?, int(nums[2])?);
                if p < 2 || m < 0 {
                    return Err(LabError::InvalidEquation(format!("need p >= 2 and m >= 0 in {name}")));
                }
                return Self::power_nls(nums[0], p as usize, m as usize);
            }
            "boussinesq" => {
                arity(1)?;
                let p = int(nums[0])?;
                if p < 2 {
                    return Err(LabError::InvalidEquation(format!("need p >= 2 in {name}")));
                }
                return Self::boussinesq(p as usize);
            }
            "kawahara" => {
                arity(1)?;
                let b = int(nums[0])?;
                return Self::kawahara(b.clamp(-2, 2) as i32);
            }
            _ => return Err(LabError::UnknownEquation(name.to_string())),
        };
        spec.name = head.to_string();
        Ok(spec)
    }

    pub fn degree(&self) -> usize {
        self.nonlinearity.degree
    }

    pub fn conj_count(&self) -> usize {
        self.nonlinearity.conj_count
    }

    pub fn phase(&self, xi: &[f64]) -> f64 {
        self.dispersion.eval(xi)
    }

    pub fn alpha(&self) -> f64 {
        self.dispersion.order()
    }

    pub fn is_kawahara(&self) -> bool {
        matches!(self.dispersion, DispersionSymbol::Polynomial1D(_)) && self.nonlinearity.multiplier == Multiplier::IXi
    }

    /// Whether real data stays real under the flow, so iterates are Hermitian.
    pub fn preserves_real_data(&self) -> bool {
        self.is_kawahara()
    }

    /// `c * mu(xi)`, the full frequency weight of the nonlinearity.
    pub fn output_weight(&self, xi: &[f64]) -> Complex64 {
        self.nonlinearity.coefficient * self.nonlinearity.multiplier.eval(xi)
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        let one_d = matches!(self.dispersion, DispersionSymbol::Polynomial1D(_))
            || self.nonlinearity.multiplier == Multiplier::IXi;
        if one_d && d != 1 {
            return Err(LabError::InvalidEquation(format!("{} is only defined in one dimension", self.name)));
        }
        Ok(())
    }

    /// `phi(sum xi) - sum_unconj phi(xi_j) + sum_conj phi(-xi_l)`, unconjugated factors first.
    pub fn modulation(&self, xis: &[&[f64]]) -> f64 {
        let p = self.degree();
        let m = self.conj_count();
        assert_eq!(xis.len(), p, "modulation takes p frequencies");
        let d = xis[0].len();
        let mut total = vec![0.0; d];
        for xi in xis {
            for (t, x) in total.iter_mut().zip(xi.iter()) {
                *t += x;
            }
        }
        let mut neg = vec![0.0; d];
        let mut out = self.phase(&total);
        for (j, xi) in xis.iter().enumerate() {
            if j < p - m {
                out -= self.phase(xi);
            } else {
                for (n, x) in neg.iter_mut().zip(xi.iter()) {
                    *n = -x;
                }
                out += self.phase(&neg);
            }
        }
        out
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Measured versus predicted size of the modulation on a family's tuple set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub measured_sup: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub tuples: usize,
}

type Bounds = Vec<(f64, f64)>;

/// Closed boxes making up the family support, and the output window.
fn tuple_geometry(family: &DataFamily) -> Result<(Vec<Bounds>, Bounds)> {
    let d = family.dim;
    let (n, a) = (family.n, family.a);
    let piece = |center: f64, r: f64, tr: f64| -> Bounds {
        let mut b = vec![(center - r, center + r)];
        b.extend(std::iter::repeat((-tr, tr)).take(d - 1));
        b
    };
    let (pos, window) = match family.kind {
        FamilyKind::CubePair => (vec![piece(n, a, a), piece(2.0 * n, a, a)], piece(0.0, a, a)),
        FamilyKind::Slab => (vec![piece(n, a, 1.0)], piece(0.0, a, 1.0)),
        FamilyKind::KawaharaWindow => (vec![piece(n, 1.0, 1.0)], piece(0.0, 1.0, 1.0)),
        FamilyKind::SmoothPerturbation { .. } => {
            return Err(LabError::EmptyConstraint("perturbation data defines no tuple window".into()))
        }
    };
    let mut pieces = pos.clone();
    for p in &pos {
        let mut m = p.clone();
        m[0] = (-p[0].1, -p[0].0);
        pieces.push(m);
    }
    Ok((pieces, window))
}

fn inside(bounds: &Bounds, x: &[f64]) -> bool {
    bounds.iter().zip(x).all(|(&(lo, hi), &v)| v >= lo - 1e-12 && v <= hi + 1e-12)
}

fn corners(bounds: &Bounds) -> Vec<Vec<f64>> {
    let d = bounds.len();
    (0..1usize << d)
        .map(|mask| (0..d).map(|k| if mask >> k & 1 == 1 { bounds[k].1 } else { bounds[k].0 }).collect())
        .collect()
}

/// Envelope predicted for the family: `N^alpha` for cubes, `N^{alpha-beta} A^beta + 1`
/// for slabs and `N^4` for the window data.
pub fn predicted_envelope(eq: &EquationSpec, family: &DataFamily, beta: Option<f64>) -> f64 {
    let alpha = eq.alpha();
    match family.kind {
        FamilyKind::CubePair => family.n.powf(alpha),
        FamilyKind::Slab => {
            let beta = beta.unwrap_or(1.0);
            family.n.powf(alpha - beta) * family.a.powf(beta) + 1.0
        }
        FamilyKind::KawaharaWindow => family.n.powi(4),
        FamilyKind::SmoothPerturbation { .. } => f64::NAN,
    }
}

/// Samples admissible tuples (every factor in the support, the sum in the
/// output window) plus all corner tuples and compares `sup |M|` with the
/// predicted envelope.
pub fn modulation_envelope_check(
    eq: &EquationSpec,
    family: &DataFamily,
    beta: Option<f64>,
    sample_count: usize,
    seed: u64,
) -> Result<EnvelopeReport> {
    eq.check_dim(family.dim)?;
    let p = eq.degree();
    let d = family.dim;
    let (pieces, window) = tuple_geometry(family)?;
    let mut sup = 0.0f64;
    let mut tuples = 0usize;
    let eval = |free: &[Vec<f64>], target: &[f64], sup: &mut f64| -> bool {
        let mut last = target.to_vec();
        for xi in free {
            for k in 0..d {
                last[k] -= xi[k];
            }
        }
        if !pieces.iter().any(|b| inside(b, &last)) {
            return false;
        }
        let mut all: Vec<&[f64]> = free.iter().map(|v| v.as_slice()).collect();
        all.push(&last);
        *sup = sup.max(eq.modulation(&all).abs());
        true
    };

    // corner tuples
    let corner_pts: Vec<Vec<f64>> = pieces.iter().flat_map(corners).collect();
    let window_corners = corners(&window);
    let mut idx = vec![0usize; p - 1];
    loop {
        let free: Vec<Vec<f64>> = idx.iter().map(|&i| corner_pts[i].clone()).collect();
        for w in &window_corners {
            if eval(&free, w, &mut sup) {
                tuples += 1;
            }
        }
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] < corner_pts.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            break;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0usize;
    let mut accepted = 0usize;
    while accepted < sample_count && attempts < sample_count.saturating_mul(200).max(1000) {
        attempts += 1;
        let free: Vec<Vec<f64>> = (0..p - 1)
            .map(|_| {
                let b = &pieces[rng.gen_range(0..pieces.len())];
                b.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect()
            })
            .collect();
        let target: Vec<f64> = window.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
        if eval(&free, &target, &mut sup) {
            accepted += 1;
        }
    }
    tuples += accepted;
    if tuples == 0 {
        return Err(LabError::EmptyConstraint(format!(
            "no admissible {p}-tuple for {} with this family",
            eq.name
        )));
    }
    let predicted = predicted_envelope(eq, family, beta);
    Ok(EnvelopeReport { measured_sup: sup, predicted, ratio: sup / predicted, tuples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kawahara_entry() {
        let k = EquationSpec::catalog("kawahara(1)").unwrap();
        assert_eq!(k.phase(&[2.0]), 32.0 + 8.0);
        assert_eq!(k.nonlinearity.multiplier, Multiplier::IXi);
        assert!(EquationSpec::catalog("kawahara(2)").is_err());
        assert!(EquationSpec::catalog("kawahara(0.5)").is_err());
    }

    #[test]
    fn boussinesq_entry() {
        let b = EquationSpec::catalog("boussinesq(2)").unwrap();
        assert_eq!(b.nonlinearity.multiplier, Multiplier::Omega);
        assert!(b.mass_term && b.nonlinearity.real_reduction);
        assert_eq!(b.nonlinearity.coefficient, Complex64::new(0.0, -0.25));
    }

    #[test]
    fn aliases_agree() {
        let a = EquationSpec::catalog("power_nls(2, 2, 0)").unwrap();
        let b = EquationSpec::catalog("nls_uu").unwrap();
        assert_eq!(a.dispersion, b.dispersion);
        assert_eq!(a.nonlinearity, b.nonlinearity);
        assert!(EquationSpec::catalog("nls_cubic").is_err());
    }

    #[test]
    fn modulation_values() {
        let k0 = EquationSpec::kawahara(0).unwrap();
        assert_eq!(k0.modulation(&[&[5.0], &[-4.0]]), -2100.0);
        let k1 = EquationSpec::kawahara(1).unwrap();
        assert_eq!(k1.modulation(&[&[7.5], &[-7.5]]), 0.0);
        let uu = EquationSpec::catalog("nls_uu").unwrap();
        assert_eq!(uu.modulation(&[&[1.0], &[1.0]]), 2.0);
    }

    #[test]
    fn window_envelope_is_uniform() {
        let eq = EquationSpec::kawahara(1).unwrap();
        for k in 5..=9 {
            let fam = DataFamily::kawahara_window(2f64.powi(k), -2.5).unwrap();
            let r = modulation_envelope_check(&eq, &fam, None, 500, 7).unwrap();
            assert!(r.ratio <= 6.0, "ratio {} at N=2^{k}", r.ratio);
        }
    }

    #[test]
    fn degenerate_slab_hits_the_floor() {
        let eq = EquationSpec::catalog("nls_mod2").unwrap();
        let fam = DataFamily::slab(1, 16.0, 1e-6, -0.5).unwrap();
        let r = modulation_envelope_check(&eq, &fam, Some(1.0), 200, 3).unwrap();
        assert!(r.predicted < 1.01 && r.ratio.is_finite());
    }
}
