use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{GridPolicy, ScenarioConfig};
use crate::bounds::{analytic_norms, choose_parameters, Condition, EnvelopeVariant, ScenarioKind};
use crate::bounds::envelope_ratio;
use crate::equations::{EquationSpec, Multiplier};
use crate::error::{LabError, Result};
use crate::picard::{iterate_series, leading_iterate_closed, level_is_active, series_sum, Engine, IterateSet, SeriesOptions};
use crate::spectral::{convolve, DataFamily, FamilyKind, GridSpec, IndexBox, Norm, SpectralField, MAX_DIM};

/// One row of a sweep: parameters, norms, dominance and the condition ledger at one `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub scenario: String,
    pub n: f64,
    pub a: f64,
    pub theta: f64,
    pub t: f64,
    pub norm_u0_hs: f64,
    pub norm_u0_fl1: f64,
    /// `‖I_p(t)‖_{H^s}` on the low-frequency output window.
    pub norm_ip_hs: f64,
    /// `‖sum_{n <= n_max} I_n(t)‖_{H^s}`.
    pub metric_series_hs: f64,
    pub dominance_ratio: Option<f64>,
    pub cond_all_ok: bool,
    pub status: String,
    pub conditions: Vec<Condition>,
    pub grid_h: f64,
    pub grid_points: usize,
    pub engine: Option<Engine>,
    pub leading_source: String,
    pub level_norms_hs: Vec<f64>,
    pub level_norms_fl1: Vec<f64>,
    pub tail_hs: Option<f64>,
    /// `(n, r_n)` for the active levels `n >= p`.
    pub envelope_ratios: Vec<(usize, f64)>,
    /// `min |I_p| / (t omega (u0^{*p}))` over the window, Boussinesq runs only.
    pub cosine_ratio: Option<f64>,
    pub quadrature_discrepancy: Option<f64>,
}

impl ScenarioRecord {
    /// Whether the record may enter exponent fits.
    pub fn usable(&self) -> bool {
        self.status == "ok" && self.cond_all_ok
    }

    fn failed(scenario: String, n: f64, status: String) -> Self {
        Self {
            scenario,
            n,
            a: f64::NAN,
            theta: f64::NAN,
            t: f64::NAN,
            norm_u0_hs: f64::NAN,
            norm_u0_fl1: f64::NAN,
            norm_ip_hs: f64::NAN,
            metric_series_hs: f64::NAN,
            dominance_ratio: None,
            cond_all_ok: false,
            status,
            conditions: Vec::new(),
            grid_h: f64::NAN,
            grid_points: 0,
            engine: None,
            leading_source: String::new(),
            level_norms_hs: Vec::new(),
            level_norms_fl1: Vec::new(),
            tail_hs: None,
            envelope_ratios: Vec::new(),
            cosine_ratio: None,
            quadrature_discrepancy: None,
        }
    }
}

/// Grid for `family` under `policy` when the series runs to `n_max`.
pub fn grid_for(family: &DataFamily, n_max: usize, policy: &GridPolicy) -> Result<GridSpec> {
    let h = match policy.h {
        Some(h) => h,
        None => {
            let target = family.feature_width() / policy.nodes_per_feature;
            2f64.powi(target.log2().floor() as i32)
        }
    };
    let extent = policy.extent_factor * n_max as f64 * family.outer_radius();
    let grid = GridSpec::with_spacing(family.dim, h, extent)?;
    if grid.len() > policy.max_points {
        return Err(LabError::Budget(format!("grid of {} points exceeds max_points = {}", grid.len(), policy.max_points)));
    }
    Ok(grid)
}

/// Low-frequency window where the leading term is measured: `Q_A(0)` for
/// cubes, `[-A, A] x [-1, 1]^{d-1}` for slabs and `[-1, 1]` for window data.
pub fn output_window(family: &DataFamily, grid: &GridSpec) -> IndexBox {
    let d = family.dim;
    let (first, rest) = match family.kind {
        FamilyKind::CubePair => (family.a, family.a),
        FamilyKind::Slab => (family.a, 1.0),
        FamilyKind::KawaharaWindow | FamilyKind::SmoothPerturbation { .. } => (1.0, 1.0),
    };
    let mut lo = [0i64; MAX_DIM];
    let mut hi = [0i64; MAX_DIM];
    for a in 0..d {
        let r = if a == 0 { first } else { rest };
        let (l, h) = grid.closed_range(-r, r).unwrap_or((0, 0));
        lo[a] = l;
        hi[a] = h;
    }
    IndexBox::new(d, lo, hi)
}

/// `(‖I_1‖ + sum_{p < n <= n_max} ‖I_n‖ + tail) / ‖I_p‖` in `H^s`, or `None`
/// when fewer than two levels beyond `p` are available.
pub fn dominance_check(set: &IterateSet, s: f64) -> Result<Option<f64>> {
    let p = set.degree();
    if set.n_max < p + 2 * (p - 1) {
        return Ok(None);
    }
    let norm = Norm::Hs(s);
    let lead = set.norm(p, norm);
    let rest: f64 = (p + 1..=set.n_max).filter(|&n| level_is_active(n, p)).map(|n| set.norm(n, norm)).sum();
    let tail = series_sum(set)?.tail(norm);
    let num = set.norm(1, norm) + rest + tail;
    Ok(Some(if lead == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / lead
    }))
}

/// Smallest ratio `|I_p(xi)| / (t omega(xi) |u0^{*p}(xi)|)` over the window,
/// skipping nodes where the bound vanishes.
fn cosine_ratio(eq: &EquationSpec, u0: &SpectralField, lead: &SpectralField, t: f64, window: &IndexBox) -> Result<Option<f64>> {
    let mut power = u0.clone();
    for _ in 1..eq.degree() {
        power = convolve(&power, u0)?;
    }
    let grid = u0.grid();
    let d = grid.dim();
    let h = grid.spacing();
    let scale = power.norm(Norm::FLinf);
    if scale == 0.0 {
        return Ok(None);
    }
    let mut worst = f64::INFINITY;
    for o in window.iter() {
        let mut xi = [0.0; MAX_DIM];
        for a in 0..d {
            xi[a] = o[a] as f64 * h;
        }
        let bound = t * eq.nonlinearity.multiplier.eval(&xi[..d]).norm() * power.at(&o[..d]).norm();
        if bound <= 1e-9 * t * scale {
            continue;
        }
        worst = worst.min(lead.at(&o[..d]).norm() / bound);
    }
    Ok(worst.is_finite().then_some(worst))
}

fn closed_cost(eq: &EquationSpec, u0: &SpectralField, window: &IndexBox) -> f64 {
    let s = u0.values().iter().filter(|v| v.re != 0.0 || v.im != 0.0).count() as f64;
    let p = eq.degree() as i32;
    let patterns = if eq.nonlinearity.real_reduction { 2f64.powi(p) } else { 1.0 };
    window.count() as f64 * s.powi(p - 1) * patterns
}

fn compute(cfg: &ScenarioConfig, n: f64, record: &mut ScenarioRecord) -> Result<()> {
    let eq = cfg.equation_spec()?;
    let sc = cfg.scenario()?;
    let p = eq.degree();
    let scale = cfg.params.amplitude_scale;
    let base = choose_parameters(&sc, n, None)?;
    let mut norms = analytic_norms(&base.family);
    norms.fl1 *= scale;
    norms.l2 *= scale;
    let choice = choose_parameters(&sc, n, Some(norms))?;
    record.a = choice.a;
    record.theta = choice.theta;
    record.t = choice.t;
    record.conditions = choice.conditions.clone();
    record.cond_all_ok = choice.all_satisfied();

    let grid = grid_for(&choice.family, cfg.n_max, &cfg.grid)?;
    record.grid_h = grid.spacing();
    record.grid_points = grid.len();
    let u0 = choice.family.build(&grid)?.scale(Complex64::new(scale, 0.0));
    let norm = Norm::Hs(cfg.s);
    record.norm_u0_hs = u0.norm(norm);
    record.norm_u0_fl1 = u0.norm(Norm::FL1);

    let opts = SeriesOptions {
        n_max: cfg.n_max,
        k: cfg.quadrature_k,
        check_convergence: true,
        tolerance: cfg.thresholds.tolerance,
        snapshots: 1,
        engine: cfg.params.engine,
        tree_budget: cfg.thresholds.tree_budget,
    };
    let t = choice.t;
    let set = iterate_series(&eq, &u0, t, &opts)?;
    record.engine = Some(set.engine);
    record.quadrature_discrepancy = set.quadrature_discrepancy;
    record.level_norms_hs = (1..=cfg.n_max).map(|k| set.norm(k, norm)).collect();
    record.level_norms_fl1 = (1..=cfg.n_max).map(|k| set.norm(k, Norm::FL1)).collect();

    let window = output_window(&choice.family, &grid);
    let lead = if p <= 3 && closed_cost(&eq, &u0, &window) <= cfg.thresholds.closed_budget {
        record.leading_source = "closed".into();
        leading_iterate_closed(&eq, &u0, t, &window)?
    } else {
        record.leading_source = "series".into();
        set.iterate(p).restrict(&window)
    };
    record.norm_ip_hs = lead.norm(norm);

    let variant = if sc.kind == ScenarioKind::Kawahara {
        EnvelopeVariant::Kawahara { n }
    } else {
        EnvelopeVariant::Standard { p }
    };
    if record.norm_u0_fl1 > 0.0 && t > 0.0 {
        record.envelope_ratios = (p..=cfg.n_max)
            .filter(|&k| level_is_active(k, p))
            .map(|k| (k, envelope_ratio(k, set.norm(k, Norm::FL1), t, record.norm_u0_fl1, variant)))
            .collect();
    }
    if eq.nonlinearity.multiplier == Multiplier::Omega {
        record.cosine_ratio = cosine_ratio(&eq, &u0, &lead, t, &window)?;
    }

    let sum = series_sum(&set)?;
    record.metric_series_hs = sum.norm(norm);
    record.tail_hs = Some(sum.tail(norm));
    record.dominance_ratio = dominance_check(&set, cfg.s)?;
    Ok(())
}

/// Runs the whole pipeline at frequency `n`. Failures below the
/// configuration level end up in the record's `status` rather than as errors.
pub fn run_scenario(cfg: &ScenarioConfig, n: f64) -> Result<ScenarioRecord> {
    cfg.validate()?;
    let mut record = ScenarioRecord::failed(cfg.name(), n, String::new());
    match compute(cfg, n, &mut record) {
        Ok(()) => {
            record.status = if record.cond_all_ok { "ok" } else { "conditions_failed" }.into();
            Ok(record)
        }
        Err(e) => {
            let kind = if e.is_validation() { "validation_error" } else { "numeric_error" };
            record.status = format!("{kind}: {e}");
            record.cond_all_ok = false;
            Ok(record)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ScenarioConfig {
        ScenarioConfig::from_json(text).unwrap()
    }

    #[test]
    fn grid_policy_resolves_features() {
        let fam = DataFamily::cube_pair(1, 64.0, 0.3, -1.2).unwrap();
        let g = grid_for(&fam, 4, &GridPolicy::default()).unwrap();
        assert_eq!(g.spacing(), 1.0 / 32.0);
        assert!(g.extent() >= 1.1 * 4.0 * (128.0 + 0.3));
    }

    #[test]
    fn zero_data_gives_zero_metrics() {
        let cfg = config(
            r#"{"equation": "nls_uu", "family": "cube_pair", "s": -1.2, "N_list": [8], "n_max": 4,
                "params": {"amplitude_scale": 0.0}, "grid": {"h": 0.25}}"#,
        );
        let rec = run_scenario(&cfg, 8.0).unwrap();
        assert_eq!(rec.norm_ip_hs, 0.0);
        assert_eq!(rec.metric_series_hs, 0.0);
        assert!(rec.level_norms_hs.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn failures_are_recorded() {
        let cfg = config(
            r#"{"equation": "nls_uu", "family": "cube_pair", "s": -1.2, "N_list": [8], "n_max": 4,
                "grid": {"max_points": 64}}"#,
        );
        let rec = run_scenario(&cfg, 8.0).unwrap();
        assert!(rec.status.starts_with("numeric_error"), "{}", rec.status);
        assert!(!rec.usable());
    }
}
