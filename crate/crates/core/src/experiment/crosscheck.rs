use std::time::Instant;

use super::config::{FamilyChoice, ScenarioConfig};
use super::verify::CheckResult;
use crate::equations::EquationSpec;
use crate::error::Result;
use crate::oracles::{brute_leading_iterate, contraction_time, general_data_experiment, solve, GeneralDataOptions, SolverOptions};
use crate::picard::{iterate_series, leading_iterate_closed, series_sum, SeriesOptions};
use crate::spectral::{DataFamily, GridSpec, Norm, SpectralField};

/// Frequency used by the reduced cross-checks.
pub const REDUCED_N: f64 = 16.0;

fn small_data(cfg: &ScenarioConfig, eq: &EquationSpec) -> Result<(SpectralField, f64)> {
    let d = cfg.params.dim;
    Ok(if eq.is_kawahara() {
        let grid = GridSpec::new(1, 8.0, 64)?;
        (DataFamily::kawahara_window(2.0, cfg.s)?.build(&grid)?, 2f64.powf(cfg.s - 2.0))
    } else {
        let grid = GridSpec::new(d, 16.0, if d == 1 { 64 } else { 32 })?;
        let fam = match cfg.family {
            FamilyChoice::Slab => DataFamily::slab(d, 2.0, 0.5, cfg.s)?,
            _ => DataFamily::cube_pair(d, 2.0, 0.5, cfg.s)?,
        };
        (fam.build(&grid)?, if eq.degree() > 2 { 0.01 } else { 0.05 })
    })
}

fn brute_vs_closed(cfg: &ScenarioConfig, eq: &EquationSpec) -> Result<(bool, String)> {
    let (u0, t) = small_data(cfg, eq)?;
    let w = u0.grid().full_box();
    let closed = leading_iterate_closed(eq, &u0, t, &w)?;
    let gap = brute_leading_iterate(eq, &u0, t, &w)?.rel_l2_distance(&closed)?;
    Ok((gap <= 1e-10, format!("relative L2 gap {gap:.2e} at G = {}", u0.grid().points())))
}

fn series_vs_solver(cfg: &ScenarioConfig, eq: &EquationSpec) -> Result<(bool, String)> {
    if cfg.params.dim != 1 {
        return Ok((true, "skipped: one-dimensional only".into()));
    }
    let n = REDUCED_N;
    let grid = GridSpec::with_spacing(1, 0.5, 1.1 * 5.0 * (2.0 * n + 1.0))?;
    let u0 = if eq.is_kawahara() {
        DataFamily::kawahara_window(n, cfg.s)?.build(&grid)?
    } else {
        DataFamily::cube_pair(1, n, 1.0, cfg.s)?.build(&grid)?
    };
    let t = 0.25 * contraction_time(eq, &u0, false);
    let reference = solve(eq, &u0, t, &SolverOptions { mass_term: false, ..SolverOptions::new(eq, t / 512.0) })?;
    let mut ok = true;
    let mut parts = Vec::new();
    for n_max in [3, 4, 5] {
        let set = iterate_series(eq, &u0, t, &SeriesOptions { n_max, k: 257, ..SeriesOptions::default() })?;
        let sum = series_sum(&set)?;
        let gap = sum.sum.sub(reference.last())?.norm(Norm::L2);
        let tail = sum.tail(Norm::L2) + 1e-12 * u0.norm(Norm::L2);
        ok &= gap <= tail;
        parts.push(format!("n_max {n_max}: gap {gap:.2e} <= tail {tail:.2e}"));
    }
    Ok((ok, parts.join("; ")))
}

fn general_data(cfg: &ScenarioConfig, eq: &EquationSpec) -> Result<(bool, String)> {
    if cfg.params.dim != 1 {
        return Ok((true, "skipped: one-dimensional only".into()));
    }
    let opts = GeneralDataOptions {
        snapshots: 2,
        series: SeriesOptions { n_max: 3, ..SeriesOptions::default() },
        ..Default::default()
    };
    let mut ok = true;
    let mut last = f64::INFINITY;
    let mut parts = Vec::new();
    for n in [4.0, 8.0, 16.0] {
        let (fam, grid) = if eq.is_kawahara() {
            (DataFamily::kawahara_window(n, cfg.s)?, GridSpec::with_spacing(1, 0.5, 5.0 * (n + 8.0))?)
        } else {
            (DataFamily::cube_pair(1, n, 1.0, cfg.s)?, GridSpec::with_spacing(1, 0.25, 4.0 * (2.0 * n + 8.0))?)
        };
        let t = if eq.is_kawahara() {
            0.2 * n.powf(cfg.s - 2.0)
        } else {
            let u0 = fam.build(&grid)?;
            let phi = DataFamily::smooth_perturbation(1, n, opts.amplitude)?.build(&grid)?;
            let v0 = u0.add(&phi)?;
            0.5 * contraction_time(eq, &v0, eq.mass_term)
        };
        let rep = general_data_experiment(eq, &fam, &grid, t, &opts)?;
        ok &= rep.bound_holds && rep.log10_init_gap_hs < last;
        last = rep.log10_init_gap_hs;
        parts.push(format!("N={n}: sup v {:.3e} >= {:.3e}, log10 gap {:.2}", rep.sup_v, rep.lower_bound, rep.log10_init_gap_hs));
    }
    Ok((ok, parts.join("; ")))
}

/// Oracle cross-checks for the configured equation at reduced size.
pub fn oracle_suite(cfg: &ScenarioConfig) -> Result<Vec<CheckResult>> {
    cfg.validate()?;
    let eq = cfg.equation_spec()?;
    type Check = fn(&ScenarioConfig, &EquationSpec) -> Result<(bool, String)>;
    let checks: [(&str, Check); 3] =
        [("brute_vs_closed", brute_vs_closed), ("series_vs_solver", series_vs_solver), ("general_data", general_data)];
    Ok(checks
        .iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let (passed, detail) = f(cfg, &eq).unwrap_or_else(|e| (false, format!("error: {e}")));
            CheckResult { name: (*name).into(), passed, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect())
}
