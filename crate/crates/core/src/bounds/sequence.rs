//! Exact recursions behind the iterate bounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Weights of the majorant recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqVariant {
    /// `a_n = (p-1)/(n-1) sum a_{n_1} ... a_{n_p}`.
    Standard,
    /// `a_n = 2n/(n-1) sum a_{n_1} a_{n_2}`, quadratic only.
    Kawahara,
}

const MAX_N: usize = 200;

/// Runs `b_1 = 1`, `b_n = w(n) sum_{n_1 + .. + n_p = n} b_{n_1} ... b_{n_p}`.
///
/// The `p`-fold sums are kept as convolution powers, so the cost is
/// `O(p n^2)` big-rational operations.
fn recurse(p: usize, n_max: usize, weight: impl Fn(usize) -> BigRational) -> Vec<BigRational> {
    let zero = BigRational::zero();
    // pow[k][n] = (b^{*k})_n, index 0 unused
    let mut pow = vec![vec![zero.clone(); n_max + 1]; p + 1];
    let mut b = vec![zero.clone(); n_max + 1];
    for n in 1..=n_max {
        for k in 2..=p {
            let mut acc = zero.clone();
            for j in 1..n {
                if b[j].is_zero() || pow[k - 1][n - j].is_zero() {
                    continue;
                }
                acc += &b[j] * &pow[k - 1][n - j];
            }
            pow[k][n] = acc;
        }
        b[n] = if n == 1 { BigRational::one() } else { weight(n) * &pow[p][n] };
        pow[1][n] = b[n].clone();
    }
    b.remove(0);
    b
}

fn check_args(p: usize, n_max: usize) -> Result<()> {
    if p < 2 {
        return Err(LabError::InvalidArgument(format!("need p >= 2, got {p}")));
    }
    if n_max == 0 || n_max > MAX_N {
        return Err(LabError::InvalidArgument(format!("need 1 <= n_max <= {MAX_N}, got {n_max}")));
    }
    Ok(())
}

/// `a_1 .. a_{n_max}` in exact arithmetic.
pub fn seq_a(p: usize, variant: SeqVariant, n_max: usize) -> Result<Vec<BigRational>> {
    check_args(p, n_max)?;
    let r = |a: usize, b: usize| BigRational::new(BigInt::from(a), BigInt::from(b));
    Ok(match variant {
        SeqVariant::Standard => recurse(p, n_max, |n| r(p - 1, n - 1)),
        SeqVariant::Kawahara => {
            if p != 2 {
                return Err(LabError::InvalidArgument("the derivative variant is quadratic".into()));
            }
            recurse(2, n_max, |n| r(2 * n, n - 1))
        }
    })
}

/// Extremal sequence `b_1 = 1`, `b_n = C sum b_{n_1} ... b_{n_p}`.
pub fn extremal_sequence(c: f64, p: usize, n_max: usize) -> Result<Vec<BigRational>> {
    check_args(p, n_max)?;
    let c = exact(c)?;
    if !c.is_positive() {
        return Err(LabError::InvalidArgument("need C > 0".into()));
    }
    Ok(recurse(p, n_max, |_| c.clone()))
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| LabError::InvalidArgument(format!("{x} is not finite")))
}

/// Natural log of a positive big integer, valid beyond the `f64` range.
fn ln_big(x: &BigInt) -> f64 {
    if let Some(v) = x.to_f64().filter(|v| v.is_finite()) {
        return v.ln();
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(60);
    let top = (x >> shift).to_f64().unwrap_or(f64::MAX);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_rational(x: &BigRational) -> f64 {
    ln_big(x.numer()) - ln_big(x.denom())
}

/// Rational lower bound of `pi^2 / 6`.
fn pi_sq_over_6_lower() -> BigRational {
    // 3.14159265358979 < pi
    let pi = BigRational::new(BigInt::from(314_159_265_358_979i64), BigInt::from(100_000_000_000_000i64));
    &pi * &pi / BigRational::from_integer(BigInt::from(6))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqBoundReport {
    pub c: f64,
    pub p: usize,
    pub n_max: usize,
    /// `C_0 = (pi^2/6) (C p^2)^{1/(p-1)}`.
    pub c0: f64,
    /// `min_n [(n-1) ln C_0 - ln b_n]` over nonzero terms with `n >= 2`.
    pub min_log_margin: f64,
    pub tightest_n: usize,
    /// Indices where `b_n <= C_0^{n-1}` fails.
    pub violations: Vec<usize>,
}

impl SeqBoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `b_n <= C_0^{n-1}` for the extremal sequence.
///
/// The comparison is exact: both sides are raised to the power `p - 1` and
/// `pi` is replaced by a rational lower bound, which can only make the check
/// harder to pass.
pub fn verify_seq_bound(c: f64, p: usize, n_max: usize) -> Result<SeqBoundReport> {
    let b = extremal_sequence(c, p, n_max)?;
    let cr = exact(c)?;
    let p2 = BigRational::from_integer(BigInt::from((p * p) as u64));
    let base = &cr * &p2;
    let pi6 = pi_sq_over_6_lower();
    let c0 = std::f64::consts::PI.powi(2) / 6.0 * (c * (p * p) as f64).powf(1.0 / (p - 1) as f64);
    let mut violations = Vec::new();
    let mut min_log_margin = f64::INFINITY;
    let mut tightest_n = 1;
    let e = (p - 1) as i32;
    for (i, bn) in b.iter().enumerate() {
        let n = i + 1;
        if n == 1 {
            if bn != &BigRational::one() {
                violations.push(1);
            }
            continue;
        }
        if bn.is_zero() {
            continue;
        }
        let k = (n - 1) as i32;
        let lhs = num_traits::pow::Pow::pow(bn, e);
        let rhs = num_traits::pow::Pow::pow(&pi6, k * e) * num_traits::pow::Pow::pow(&base, k);
        if lhs > rhs {
            violations.push(n);
        }
        let margin = k as f64 * c0.ln() - ln_rational(bn);
        if margin < min_log_margin {
            min_log_margin = margin;
            tightest_n = n;
        }
    }
    Ok(SeqBoundReport { c, p, n_max, c0, min_log_margin, tightest_n, violations })
}
