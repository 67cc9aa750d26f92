//! Parameter choices `(A, theta, t)` and their side conditions.

use serde::{Deserialize, Serialize};

use super::envelope::{f_s, is_critical, DataNorms};
use crate::error::{LabError, Result};
use crate::spectral::DataFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Power-type dispersive equation with cube-pair data.
    DispersiveCube,
    /// Power-type dispersive equation with slab data and a refined modulation bound.
    DispersiveSlab,
    /// Reduced Boussinesq system, cube-pair data.
    BoussinesqCube,
    /// Reduced Boussinesq system, `p = 2`, slab data.
    BoussinesqSlab,
    /// Window data for the fifth-order equation.
    Kawahara,
}

/// How `theta` is picked when `p = 2` and `s < -d/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThetaRule {
    /// Midpoint of `(0, min(1, -2s/d))`, the range where the leading-term
    /// condition still improves with `N`.
    #[default]
    Midpoint,
    /// `theta = 0`, i.e. `A = 1`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub d: usize,
    pub p: usize,
    /// Order of the dispersion symbol.
    pub alpha: f64,
    /// Exponent of the refined modulation bound (slab scenarios only).
    pub beta: Option<f64>,
    pub s: f64,
    #[serde(default)]
    pub theta_rule: ThetaRule,
    /// `x << y` means `x <= y / ll_factor`.
    pub ll_factor: f64,
}

/// One side condition, `lhs <= rhs` or `lhs >= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `true` for `lhs <= rhs`, `false` for `lhs >= rhs`.
    pub upper: bool,
    pub satisfied: bool,
}

impl Condition {
    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, upper: true, satisfied: lhs <= rhs }
    }

    fn ge(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, upper: false, satisfied: lhs >= rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterChoice {
    pub scenario: Scenario,
    pub n: f64,
    pub a: f64,
    /// `log A / log N`.
    pub theta: f64,
    pub t: f64,
    pub family: DataFamily,
    pub norms: DataNorms,
    pub conditions: Vec<Condition>,
}

impl ParameterChoice {
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }
}

fn hyp(msg: String) -> LabError {
    LabError::Hypothesis(msg)
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

impl Scenario {
    pub fn new(kind: ScenarioKind, d: usize, p: usize, alpha: f64, beta: Option<f64>, s: f64) -> Result<Self> {
        let sc = Self { kind, d, p, alpha, beta, s, theta_rule: ThetaRule::default(), ll_factor: 10.0 };
        sc.validate()?;
        Ok(sc)
    }

    pub fn kawahara(s: f64) -> Result<Self> {
        Self::new(ScenarioKind::Kawahara, 1, 2, 5.0, None, s)
    }

    pub fn with_theta_rule(mut self, rule: ThetaRule) -> Self {
        self.theta_rule = rule;
        self
    }

    /// `d/2 - 2/(p-1)`, the critical index of the Boussinesq scaling.
    pub fn boussinesq_critical(&self) -> f64 {
        self.d as f64 / 2.0 - 2.0 / (self.p - 1) as f64
    }

    /// Checks the scenario's range of `s` and structural parameters.
    pub fn validate(&self) -> Result<()> {
        let (d, p, s, alpha) = (self.d as f64, self.p, self.s, self.alpha);
        if !(1..=3).contains(&self.d) || p < 2 || !s.is_finite() || !(alpha > 0.0) {
            return Err(hyp(format!("need d in 1..=3, p >= 2, alpha > 0 (d={}, p={p}, alpha={alpha})", self.d)));
        }
        if !(self.ll_factor >= 1.0) {
            return Err(LabError::InvalidArgument(format!("ll_factor must be >= 1, got {}", self.ll_factor)));
        }
        if s >= 0.0 {
            return Err(hyp(format!("hypothesis s<0 violated (s = {s})")));
        }
        let pf = p as f64;
        let dispersive_range = || -> Result<()> {
            let pc = 1.0 + alpha / d;
            if (pf - pc).abs() < 1e-12 {
                if s > -d / 2.0 + 1e-12 {
                    return Err(hyp(format!("p = 1 + alpha/d needs s <= -d/2 = {}", -d / 2.0)));
                }
            } else if pf > pc {
                let sc = d / 2.0 - alpha / (pf - 1.0);
                if s >= sc {
                    return Err(hyp(format!("p > 1 + alpha/d needs s < d/2 - alpha/(p-1) = {sc}")));
                }
            } else {
                let sb = d / 2.0 - (d + alpha) / pf;
                if s >= sb {
                    return Err(hyp(format!("p < 1 + alpha/d needs s < d/2 - (d+alpha)/p = {sb}")));
                }
            }
            Ok(())
        };
        match self.kind {
            ScenarioKind::DispersiveCube => dispersive_range(),
            ScenarioKind::DispersiveSlab => {
                // only the structural assumptions carry over; the range of s is the threshold below
                let beta = self.beta.ok_or_else(|| hyp("slab scenario needs beta".into()))?;
                if !(beta > 0.0 && beta <= alpha) {
                    return Err(hyp(format!("need 0 < beta <= alpha, got beta = {beta}")));
                }
                let thr = (alpha - beta) / (2.0 * beta) * (1.0 / pf - 1.0);
                if s >= thr {
                    return Err(hyp(format!("slab scenario needs s < (alpha-beta)/(2 beta) (1/p - 1) = {thr}")));
                }
                Ok(())
            }
            ScenarioKind::BoussinesqCube => {
                if (alpha - 2.0).abs() > 1e-12 {
                    return Err(hyp("Boussinesq symbol has order 2".into()));
                }
                let theorem = (self.d == 1 && p == 3 && s <= -0.5 + 1e-12)
                    || (p == 2 && s < -0.5)
                    || (p >= 3 && s < self.boussinesq_critical().min(0.0));
                if !theorem {
                    return Err(hyp(format!(
                        "need (d=1, p=3, s <= -1/2), (p=2, s<-1/2) or (p>=3, s<min(s_c,0)); got d={}, p={p}, s={s}",
                        self.d
                    )));
                }
                dispersive_range()
            }
            ScenarioKind::BoussinesqSlab => {
                if p != 2 || self.d > 2 {
                    return Err(hyp("slab Boussinesq case needs p = 2 and d in {1, 2}".into()));
                }
                let sc = self.boussinesq_critical();
                if !(sc <= s && s < -0.5) {
                    return Err(hyp(format!("slab Boussinesq case needs s_c = {sc} <= s < -1/2, got {s}")));
                }
                Ok(())
            }
            ScenarioKind::Kawahara => {
                if self.d != 1 || p != 2 {
                    return Err(hyp("fifth-order scenario is d = 1, p = 2".into()));
                }
                if s >= -2.0 {
                    return Err(hyp(format!("s<-2 required, got {s}")));
                }
                Ok(())
            }
        }
    }

    /// Admissible open interval for `theta`, or `None` when `A` is fixed by
    /// another rule.
    pub fn theta_interval(&self) -> Result<Option<(f64, f64)>> {
        let (d, p, s, alpha) = (self.d as f64, self.p as f64, self.s, self.alpha);
        let (lo, hi, what) = match self.kind {
            ScenarioKind::DispersiveCube | ScenarioKind::BoussinesqCube => {
                if s > -d / 2.0 && !is_critical(s, self.d) {
                    ((2.0 * (p * s + alpha) / (2.0 * s + d * (p - 1.0))).max(0.0), 1.0, "max(2(ps+alpha)/(2s+d(p-1)), 0) < theta < 1")
                } else if self.p > 2 {
                    ((2.0 * (p * s + alpha) / (d * (p - 2.0))).max(0.0), 1.0, "max(2(ps+alpha)/(d(p-2)), 0) < theta < 1")
                } else if is_critical(s, self.d) {
                    return Ok(None);
                } else {
                    match self.theta_rule {
                        ThetaRule::Zero => return Ok(None),
                        ThetaRule::Midpoint => (0.0, (-2.0 * s / d).min(1.0), "0 < theta < min(1, -2s/d)"),
                    }
                }
            }
            ScenarioKind::BoussinesqSlab => ((s / 2.0).max(2.0 / 3.0 * (2.0 * s + 1.0)), 0.0, "max(s/2, (2/3)(2s+1)) < theta < 0"),
            ScenarioKind::DispersiveSlab | ScenarioKind::Kawahara => return Ok(None),
        };
        if lo >= hi {
            return Err(LabError::EmptyConstraint(format!("{what} has no solution (lower end {lo}, upper end {hi})")));
        }
        Ok(Some((lo, hi)))
    }

    fn width_and_theta(&self, n: f64) -> Result<(f64, f64)> {
        let ln = n.ln();
        if let Some((lo, hi)) = self.theta_interval()? {
            let theta = 0.5 * (lo + hi);
            return Ok((n.powf(theta), theta));
        }
        Ok(match self.kind {
            ScenarioKind::DispersiveSlab => {
                let beta = self.beta.expect("validated");
                let theta = -(self.alpha - beta) / beta;
                (n.powf(theta), theta)
            }
            ScenarioKind::Kawahara => (1.0, 0.0),
            _ if is_critical(self.s, self.d) => {
                let a = n / ln;
                (a, a.ln() / ln)
            }
            _ => (1.0, 0.0),
        })
    }

    fn family(&self, n: f64, a: f64) -> Result<DataFamily> {
        match self.kind {
            ScenarioKind::DispersiveCube | ScenarioKind::BoussinesqCube => DataFamily::cube_pair(self.d, n, a, self.s),
            ScenarioKind::DispersiveSlab | ScenarioKind::BoussinesqSlab => DataFamily::slab(self.d, n, a, self.s),
            ScenarioKind::Kawahara => DataFamily::kawahara_window(n, self.s),
        }
    }
}

/// Continuum norms of a family; the `H^s` entry is left at zero.
pub fn analytic_norms(family: &DataFamily) -> DataNorms {
    DataNorms { fl1: family.analytic_fl1(), l2: family.analytic_l2(), hs: 0.0 }
}

/// Picks `(A, theta, t)` at frequency `N` and records every side condition.
///
/// `norms` defaults to the continuum norms of the scenario's datum.
pub fn choose_parameters(sc: &Scenario, n: f64, norms: Option<DataNorms>) -> Result<ParameterChoice> {
    sc.validate()?;
    if !(n.is_finite() && n >= 2.0) {
        return Err(LabError::InvalidArgument(format!("need N >= 2, got {n}")));
    }
    let (a, theta) = sc.width_and_theta(n)?;
    let family = sc.family(n, a)?;
    let norms = norms.unwrap_or_else(|| analytic_norms(&family));
    let ln = n.ln();
    let ll = sc.ll_factor;
    let p = sc.p as i32;
    let log8 = ln.powf(0.125);
    let mut conditions = Vec::new();
    let t = match sc.kind {
        ScenarioKind::DispersiveCube | ScenarioKind::BoussinesqCube => {
            let t = ln.powf(-0.125) / ll * norms.d().powi(-(p - 1)).min(n.powf(-sc.alpha));
            let fs = f_s(a, sc.s, sc.d)?;
            conditions.push(Condition::le("t_fl1_small", t * norms.fl1.powi(p - 1), 1.0 / ll));
            conditions.push(Condition::le("t_below_dispersion", t, n.powf(-sc.alpha) / ll));
            conditions.push(Condition::ge(
                "leading_term_large",
                t * norms.fl1.powi(p - 2) * norms.l2 * norms.l2 * fs,
                log8,
            ));
            t
        }
        ScenarioKind::DispersiveSlab => {
            let beta = sc.beta.expect("validated");
            let m = bracket(n.powf(sc.alpha - beta) * a.powf(beta));
            let t = ln.powf(-0.125) / ll * norms.fl1.powi(-(p - 1)).min(1.0 / m);
            conditions.push(Condition::le("t_fl1_small", t * norms.fl1.powi(p - 1), 1.0 / ll));
            conditions.push(Condition::le("t_below_modulation", t * m, 1.0 / ll));
            conditions.push(Condition::ge(
                "leading_term_large",
                t * norms.fl1.powi(p - 2) * norms.l2 * norms.l2 * a.sqrt(),
                log8,
            ));
            t
        }
        ScenarioKind::BoussinesqSlab => {
            let na = bracket(n * a);
            let t = ln.powf(-0.125) * (n.powf(sc.s) * a.powf(-0.5)).min(1.0 / na);
            conditions.push(Condition::le("t_fl1_small", t * n.powf(-sc.s) * a.sqrt(), ln.powf(-0.125)));
            conditions.push(Condition::ge("t_after_resonance", t, 2.0 / (n * n)));
            conditions.push(Condition::le("t_below_modulation", t, ln.powf(-0.125) / na));
            conditions.push(Condition::ge("leading_term_large", t * ln.powf(-0.125) * n.powf(-2.0 * sc.s) * a.powf(2.5), log8));
            t
        }
        ScenarioKind::Kawahara => {
            let t = n.powf(sc.s - 2.0);
            conditions.push(Condition::le("series_converges", t / ln * n.powf(-sc.s + 1.0), 1.0 / ll));
            conditions.push(Condition::le("second_iterate_leads", t / ln * n.powf(-sc.s + 2.0), 1.0));
            // leading term against the data and the tail, constants set to one
            let lead = n.powf(-sc.s - 2.0) / (ln * ln);
            let rest = 1.0 / ln + (n * t).powi(2) * n.powf(-3.0 * sc.s) / ln.powi(3);
            conditions.push(Condition::ge("leading_term_beats_rest", lead, rest));
            t
        }
    };
    Ok(ParameterChoice { scenario: *sc, n, a, theta, t, family, norms, conditions })
}

/// Smallest dyadic `N` from which every choice up to `2^max_exp` satisfies its
/// conditions, or `None` when the largest one already fails.
pub fn n_min(sc: &Scenario, max_exp: u32) -> Result<Option<f64>> {
    sc.validate()?;
    sc.theta_interval()?;
    let ok = |k: u32| -> bool {
        choose_parameters(sc, 2f64.powi(k as i32), None).map(|c| c.all_satisfied()).unwrap_or(false)
    };
    let mut k = max_exp;
    if !ok(k) {
        return Ok(None);
    }
    while k > 1 && ok(k - 1) {
        k -= 1;
    }
    Ok(Some(2f64.powi(k as i32)))
}
