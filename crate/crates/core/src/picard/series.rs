use serde::{Deserialize, Serialize};

use super::{level_is_active, IterateSet};
use crate::error::{LabError, Result};
use crate::spectral::{Norm, SpectralField};

/// Largest accepted ratio `‖I_last‖ / ‖I_{last-(p-1)}‖` in FL¹.
pub const DECAY_LIMIT: f64 = 0.5;

/// Truncated series `sum_{n <= n_max} I_n` at the final time with a geometric tail.
///
/// The tail in a norm `w` assumes `‖I_n‖_w <= ‖I_a‖_w rho^(n - a)` beyond the last
/// computed level, where the anchor `a` is `p` when a later level exists and 1
/// otherwise, and `rho` is the largest observed per-level growth rate, in `w`
/// from the anchor and in FL¹ from `I_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSum {
    pub sum: SpectralField,
    /// Highest nonzero level used, `l (p - 1) + 1 <= n_max`.
    pub last_level: usize,
    /// FL¹ ratio between the last two active levels.
    pub ratio_fl1: f64,
    degree: usize,
    levels: Vec<SpectralField>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

impl SeriesSum {
    fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.last_level).filter(|&n| level_is_active(n, self.degree))
    }

    fn anchor(&self) -> usize {
        if self.last_level > self.degree {
            self.degree
        } else {
            1
        }
    }

    fn growth(&self, which: Norm, anchor: usize) -> f64 {
        let base = self.levels[anchor - 1].norm(which);
        self.active()
            .filter(|&n| n > anchor)
            .map(|n| ratio(self.levels[n - 1].norm(which), base).powf(1.0 / (n - anchor) as f64))
            .fold(0.0, f64::max)
    }

    /// Per-level growth rate `rho` used for the tail in `which`.
    pub fn rate(&self, which: Norm) -> f64 {
        self.growth(Norm::FL1, 1).max(self.growth(which, self.anchor()))
    }

    /// Bound on `‖sum_{n > n_max} I_n‖` in `which`.
    pub fn tail(&self, which: Norm) -> f64 {
        if self.last_level == 1 {
            return 0.0;
        }
        let rho = self.rate(which);
        let q = rho.powi(self.degree as i32 - 1);
        if q >= 1.0 {
            return f64::INFINITY;
        }
        let a = self.anchor();
        let base = self.levels[a - 1].norm(which);
        if base == 0.0 {
            return 0.0;
        }
        base * rho.powi((self.last_level - a) as i32) * q / (1.0 - q)
    }

    pub fn norm(&self, which: Norm) -> f64 {
        self.sum.norm(which)
    }
}

/// Sums the iterates at the final time, refusing when the last two active
/// levels do not decay by at least [`DECAY_LIMIT`] in FL¹.
pub fn series_sum(set: &IterateSet) -> Result<SeriesSum> {
    let p = set.degree();
    let last_level = (1..=set.n_max).rev().find(|&n| level_is_active(n, p)).unwrap_or(1);
    let mut sum = set.iterate(1).clone();
    for n in 2..=last_level {
        if level_is_active(n, p) {
            sum = sum.add(set.iterate(n))?;
        }
    }
    let ratio_fl1 = if last_level > 1 {
        let q = ratio(set.norm(last_level, Norm::FL1), set.norm(last_level - (p - 1), Norm::FL1));
        if q > DECAY_LIMIT {
            return Err(LabError::OutsideConvergence(format!(
                "‖I_{last_level}‖ / ‖I_{}‖ = {q:.3e} in FL1 exceeds {DECAY_LIMIT}",
                last_level - (p - 1)
            )));
        }
        q
    } else if set.t == 0.0 {
        0.0
    } else {
        return Err(LabError::InvalidArgument(format!("tail estimate needs n_max >= {p}")));
    };
    let levels = (1..=last_level).map(|n| set.iterate(n).clone()).collect();
    Ok(SeriesSum { sum, last_level, ratio_fl1, degree: p, levels })
}
