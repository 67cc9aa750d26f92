use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{choose_parameters, envelope_ratio, seq_a, verify_seq_bound, EnvelopeVariant, Scenario, ScenarioKind, SeqVariant};
use crate::equations::{modulation_envelope_check, EquationSpec};
use crate::error::{LabError, Result};
use crate::oracles::{brute_leading_iterate, contraction_time, step_solver};
use crate::picard::{iterate_series, leading_iterate_closed, level_is_active, EngineChoice, SeriesOptions};
use crate::spectral::{cube_sandwich, DataFamily, GridSpec, Norm, SpectralField};
use num_rational::BigRational;
use num_traits::One;

pub const CHECKS: [&str; 8] = [
    "sequence_exact",
    "sequence_bound",
    "convolution_sandwich",
    "envelope",
    "modulation_identity",
    "modulation_envelope",
    "oracle_agreement",
    "solver_order",
];

/// Deliberate defects used to confirm that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Flips the sign of the first phase term of the modulation.
    ModulationSign,
}

/// Selection of checks; an empty list runs all of them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub checks: Vec<String>,
    pub seed: u64,
}

impl VerifyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        for c in &cfg.checks {
            if !CHECKS.contains(&c.as_str()) {
                return Err(LabError::Config(format!("unknown check `{c}`")));
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Outcome = Result<(bool, String)>;

fn sequence_exact() -> Outcome {
    let std = seq_a(2, SeqVariant::Standard, 64)?;
    let ones = std.iter().all(|a| a.is_one());
    let kaw = seq_a(2, SeqVariant::Kawahara, 3)?;
    let int = |k: i64| BigRational::from_integer(k.into());
    let kaw_ok = kaw[1] == int(4) && kaw[2] == int(24);
    Ok((ones && kaw_ok, format!("standard a_n = 1 up to 64: {ones}; a_2 = {}, a_3 = {}", kaw[1], kaw[2])))
}

fn sequence_bound() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, p) in [(1.0, 2), (1.0, 3), (2.0, 2), (0.5, 4)] {
        let r = verify_seq_bound(c, p, 40)?;
        ok &= r.passed();
        parts.push(format!("(C={c}, p={p}) margin {:.3} at n={}", r.min_log_margin, r.tightest_n));
    }
    Ok((ok, parts.join("; ")))
}

fn convolution_sandwich() -> Outcome {
    let mut ok = true;
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    let mut cases = 0;
    for dim in [1, 2] {
        for r in [0.5, 1.0, 2.0] {
            for (q1, q2) in [(-3.0, 0.0), (0.0, 5.0), (-3.0, 5.0)] {
                let h = if dim == 1 { r / 32.0 } else { r / 16.0 };
                let rep = cube_sandwich(dim, r, q1, q2, h)?;
                ok &= rep.passed();
                c1 = c1.min(rep.c1);
                c2 = c2.max(rep.c2 / 2f64.powi(dim as i32));
                cases += 1;
            }
        }
    }
    Ok((ok, format!("{cases} cases; min c1 = {c1:.4}, max c2 / 2^d = {c2:.4}")))
}

/// Envelope ratios `r_n` for `n <= p + 3(p-1)` stay within `10 r_p`.
pub fn envelope_suite() -> Result<Vec<(String, usize, f64, f64)>> {
    let mut out = Vec::new();
    let cases: Vec<(EquationSpec, Scenario, f64)> = vec![
        (EquationSpec::catalog("nls_uu")?, Scenario::new(ScenarioKind::DispersiveCube, 1, 2, 2.0, None, -1.2)?, 8.0),
        (EquationSpec::boussinesq(2)?, Scenario::new(ScenarioKind::BoussinesqCube, 1, 2, 2.0, None, -1.2)?, 8.0),
        (EquationSpec::boussinesq(3)?, Scenario::new(ScenarioKind::BoussinesqCube, 1, 3, 2.0, None, -0.6)?, 16.0),
        (EquationSpec::kawahara(1)?, Scenario::kawahara(-2.5)?, 16.0),
    ];
    for (eq, sc, n) in cases {
        let choice = choose_parameters(&sc, n, None)?;
        let p = eq.degree();
        let n_max = p + 3 * (p - 1);
        let fam = &choice.family;
        let kawahara = sc.kind == ScenarioKind::Kawahara;
        let h = if kawahara { 0.5 } else { 2f64.powi((fam.feature_width() / 8.0).log2().floor() as i32).min(0.25) };
        let grid = GridSpec::with_spacing(1, h, 1.1 * n_max as f64 * fam.outer_radius())?;
        let u0 = fam.build(&grid)?;
        // the window phases oscillate too fast for the quadrature mesh
        let engine = if kawahara { EngineChoice::Tree } else { EngineChoice::Quadrature };
        let opts = SeriesOptions { n_max, k: 257, engine, ..SeriesOptions::default() };
        let set = iterate_series(&eq, &u0, choice.t, &opts)?;
        let fl1 = u0.norm(Norm::FL1);
        let variant = if kawahara { EnvelopeVariant::Kawahara { n } } else { EnvelopeVariant::Standard { p } };
        let ratios: Vec<(usize, f64)> = (p..=n_max)
            .filter(|&k| level_is_active(k, p))
            .map(|k| (k, envelope_ratio(k, set.norm(k, Norm::FL1), choice.t, fl1, variant)))
            .collect();
        let rp = ratios[0].1;
        let worst = ratios.iter().map(|r| r.1).fold(0.0f64, f64::max);
        out.push((eq.name.clone(), n_max, rp, worst));
    }
    Ok(out)
}

fn envelope() -> Outcome {
    let rows = envelope_suite()?;
    let ok = rows.iter().all(|(_, _, rp, worst)| rp.is_finite() && *worst <= 10.0 * rp);
    let detail = rows.iter().map(|(n, k, rp, w)| format!("{n} n<={k}: r_p = {rp:.3e}, max r_n = {w:.3e}")).collect::<Vec<_>>().join("; ");
    Ok((ok, detail))
}

/// Factored closed forms of the modulation for the quadratic catalogue entries.
fn factored(name: &str, b: f64, x: f64, y: f64) -> f64 {
    match name {
        "nls_uu" => 2.0 * x * y,
        "nls_mod2" => 2.0 * y * (x + y),
        "nls_ubar2" => (x + y).powi(2) + x * x + y * y,
        _ => 5.0 * x * y * (x + y) * (x * x + x * y + y * y) + 3.0 * b * x * y * (x + y),
    }
}

fn modulation_identity(seed: u64, fault: Option<Fault>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let cases = [("nls_uu", 0.0), ("nls_mod2", 0.0), ("nls_ubar2", 0.0), ("kawahara", 1.0), ("kawahara", -1.0), ("kawahara", 0.0)];
    for (name, b) in cases {
        let eq = if name == "kawahara" { EquationSpec::kawahara(b as i32)? } else { EquationSpec::catalog(name)? };
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-40.0..40.0);
            let y: f64 = rng.gen_range(-40.0..40.0);
            let mut m = eq.modulation(&[&[x], &[y]]);
            if fault == Some(Fault::ModulationSign) {
                m += 2.0 * eq.phase(&[x]);
            }
            let exact = factored(name, b, x, y);
            worst = worst.max((m - exact).abs() / exact.abs().max(1.0));
        }
    }
    Ok((worst <= 1e-10, format!("largest relative deviation from the factored form {worst:.2e}")))
}

/// The measured-to-predicted ratio must not drift as `N` quadruples.
fn modulation_envelope(seed: u64) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    type Build = fn(f64) -> Result<DataFamily>;
    let cases: Vec<(EquationSpec, Build, Option<f64>)> = vec![
        (EquationSpec::catalog("nls_uu")?, |n| DataFamily::cube_pair(1, n, 2.0, -1.2), None),
        (EquationSpec::catalog("nls_mod2")?, |n| DataFamily::cube_pair(2, n, 1.0, -1.2), None),
        (EquationSpec::catalog("nls_mod2")?, |n| DataFamily::slab(1, n, 0.25, -1.2), Some(1.0)),
        (EquationSpec::boussinesq(3)?, |n| DataFamily::cube_pair(1, n, 2.0, -0.6), None),
        (EquationSpec::kawahara(1)?, |n| DataFamily::kawahara_window(n, -2.5), None),
    ];
    for (eq, build, beta) in cases {
        let mut ratios = Vec::new();
        for n in [64.0, 256.0] {
            ratios.push(modulation_envelope_check(&eq, &build(n)?, beta, 400, seed)?.ratio);
        }
        // the prediction is an upper envelope, so only growth counts against it
        ok &= ratios.iter().all(|r| r.is_finite()) && ratios[1] <= 2.0 * ratios[0];
        parts.push(format!("{}: ratio {:.3} -> {:.3}", eq.name, ratios[0], ratios[1]));
    }
    Ok((ok, parts.join("; ")))
}

fn oracle_cases() -> Result<Vec<(EquationSpec, SpectralField, f64)>> {
    let cube_grid = GridSpec::new(1, 16.0, 64)?;
    let cube = DataFamily::cube_pair(1, 2.0, 0.5, -0.5)?.build(&cube_grid)?;
    let kaw_grid = GridSpec::new(1, 8.0, 64)?;
    let kaw = DataFamily::kawahara_window(2.0, -2.5)?.build(&kaw_grid)?;
    Ok(vec![
        (EquationSpec::catalog("nls_uu")?, cube.clone(), 0.05),
        (EquationSpec::boussinesq(2)?, cube.clone(), 0.05),
        (EquationSpec::boussinesq(3)?, cube, 0.01),
        (EquationSpec::kawahara(1)?, kaw.clone(), 2f64.powf(-4.5)),
        (EquationSpec::kawahara(-1)?, kaw, 2f64.powf(-4.5)),
    ])
}

/// Worst relative L2 gaps (quadrature vs closed form, brute force vs closed form).
pub fn oracle_gaps() -> Result<(f64, f64)> {
    let (mut quad, mut brute) = (0.0f64, 0.0f64);
    for (eq, u0, t) in oracle_cases()? {
        let w = u0.grid().full_box();
        let closed = leading_iterate_closed(&eq, &u0, t, &w)?;
        let p = eq.degree();
        let opts = SeriesOptions { n_max: p, k: 1025, engine: EngineChoice::Quadrature, ..SeriesOptions::default() };
        let set = iterate_series(&eq, &u0, t, &opts)?;
        quad = quad.max(set.iterate(p).rel_l2_distance(&closed)?);
        brute = brute.max(brute_leading_iterate(&eq, &u0, t, &w)?.rel_l2_distance(&closed)?);
    }
    Ok((quad, brute))
}

fn oracle_agreement() -> Outcome {
    let (quad, brute) = oracle_gaps()?;
    Ok((quad <= 1e-6 && brute <= 1e-10, format!("quadrature vs closed {quad:.2e}, brute force vs closed {brute:.2e}")))
}

/// Observed temporal order of the solver from runs with 8, 16 and 32 steps.
pub fn solver_orders() -> Result<Vec<(String, f64)>> {
    let grid = GridSpec::new(1, 8.0, 64)?;
    let smooth = SpectralField::from_fn(grid, |xi| num_complex::Complex64::new((-2.0 * (xi[0].abs() - 1.0).powi(2)).exp(), 0.0));
    let kaw = DataFamily::kawahara_window(2.0, -2.5)?.build(&grid)?;
    let mut out = Vec::new();
    for (eq, u0) in [
        (EquationSpec::catalog("nls_uu")?, smooth.clone()),
        (EquationSpec::boussinesq(2)?, smooth),
        (EquationSpec::kawahara(1)?, kaw),
    ] {
        let t = 0.5 * contraction_time(&eq, &u0, eq.mass_term);
        let run = |steps: usize| step_solver(&eq, &u0, t, t / steps as f64);
        let (a, b, c) = (run(8)?, run(16)?, run(32)?);
        let e1 = a.sub(&b)?.norm(Norm::L2);
        let e2 = b.sub(&c)?.norm(Norm::L2);
        out.push((eq.name.clone(), (e1 / e2).log2()));
    }
    Ok(out)
}

fn solver_order() -> Outcome {
    let orders = solver_orders()?;
    let ok = orders.iter().all(|(_, o)| *o >= 3.5);
    Ok((ok, orders.iter().map(|(n, o)| format!("{n}: {o:.2}")).collect::<Vec<_>>().join("; ")))
}

/// Runs the selected checks; every check runs even after a failure.
pub fn verify_suite(config: Option<&VerifyConfig>, fault: Option<Fault>) -> Vec<CheckResult> {
    let default = VerifyConfig::default();
    let cfg = config.unwrap_or(&default);
    let selected: Vec<&str> = if cfg.checks.is_empty() { CHECKS.to_vec() } else { cfg.checks.iter().map(|s| s.as_str()).collect() };
    selected
        .into_iter()
        .map(|name| {
            let start = Instant::now();
            let outcome = match name {
                "sequence_exact" => sequence_exact(),
                "sequence_bound" => sequence_bound(),
                "convolution_sandwich" => convolution_sandwich(),
                "envelope" => envelope(),
                "modulation_identity" => modulation_identity(cfg.seed, fault),
                "modulation_envelope" => modulation_envelope(cfg.seed),
                "oracle_agreement" => oracle_agreement(),
                "solver_order" => solver_order(),
                other => Err(LabError::Config(format!("unknown check `{other}`"))),
            };
            let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
            CheckResult { name: name.into(), passed, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}
