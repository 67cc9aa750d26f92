use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use super::run::{run_scenario, ScenarioRecord};
use crate::error::{LabError, Result};

/// Least-squares line through `(ln N, ln metric + c ln ln N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: String,
    pub log_correction: f64,
    pub records: Vec<ScenarioRecord>,
    /// Fit of the leading-term metric over usable records, when there are enough.
    pub fit: Option<FitResult>,
    pub fit_error: Option<String>,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> FitResult {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    FitResult { slope, intercept, residual: (ss / n).sqrt(), points: xs.len() }
}

/// Fits the slope of `log(metric (log N)^c)` against `log N` over usable records.
pub fn fit_exponent(records: &[ScenarioRecord], log_correction: f64) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.usable() && r.norm_ip_hs > 0.0 && r.norm_ip_hs.is_finite())
        .map(|r| (r.n, r.norm_ip_hs))
        .collect();
    fit_points(&pts, log_correction)
}

/// Same fit on raw `(N, metric)` pairs.
pub fn fit_points(pts: &[(f64, f64)], log_correction: f64) -> Result<FitResult> {
    if pts.len() < 4 {
        return Err(LabError::InvalidArgument(format!("exponent fit needs at least 4 usable points, got {}", pts.len())));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln() + log_correction * p.0.ln().ln()).collect();
    Ok(least_squares(&xs, &ys))
}

/// Cache key over everything that determines a record.
pub fn cache_key(cfg: &ScenarioConfig, n: f64) -> Result<String> {
    let mut keyed = cfg.clone();
    keyed.out_dir = PathBuf::new();
    keyed.n_list = vec![n];
    let text = serde_json::to_string(&keyed)?;
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(text.as_bytes());
    Ok(format!("{:x}", h.finalize()))
}

fn cached_run(cfg: &ScenarioConfig, n: f64, dir: &Path) -> Result<ScenarioRecord> {
    let key = cache_key(cfg, n)?;
    let path = dir.join(format!("{key}.json"));
    let lock = OpenOptions::new().create(true).truncate(false).write(true).open(dir.join(format!("{key}.lock")))?;
    lock.lock()?;
    if let Ok(mut f) = File::open(&path) {
        let mut text = String::new();
        f.read_to_string(&mut text)?;
        if let Ok(rec) = serde_json::from_str::<ScenarioRecord>(&text) {
            return Ok(rec);
        }
    }
    let rec = run_scenario(cfg, n)?;
    let tmp = dir.join(format!("{key}.tmp"));
    let mut f = File::create(&tmp)?;
    f.write_all(serde_json::to_string(&rec)?.as_bytes())?;
    f.sync_all()?;
    fs::rename(&tmp, &path)?;
    Ok(rec)
}

/// Runs every `N` of the configuration in parallel and fits the exponent.
/// With `use_cache`, records are stored under `out_dir/cache`.
pub fn sweep(cfg: &ScenarioConfig, use_cache: bool) -> Result<SweepResult> {
    cfg.validate()?;
    let cache_dir = cfg.out_dir.join("cache");
    if use_cache {
        fs::create_dir_all(&cache_dir)?;
    }
    let records = cfg
        .n_list
        .par_iter()
        .map(|&n| if use_cache { cached_run(cfg, n, &cache_dir) } else { run_scenario(cfg, n) })
        .collect::<Result<Vec<_>>>()?;
    let c = cfg.log_correction();
    let (fit, fit_error) = match fit_exponent(&records, c) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(SweepResult { scenario: cfg.name(), log_correction: c, records, fit, fit_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = (5..10).map(|k| 2f64.powi(k)).map(|n| (n, n.sqrt())).collect();
        let f = fit_points(&pts, 0.0).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn log_correction_cancels() {
        let pts: Vec<(f64, f64)> = (5..10).map(|k| 2f64.powi(k)).map(|n| (n, n.sqrt() / n.ln().powi(2))).collect();
        let f = fit_points(&pts, 2.0).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_points(&[(2.0, 1.0), (4.0, 2.0), (8.0, 3.0)], 0.0).is_err());
    }

    #[test]
    fn keys_ignore_output_directory() {
        let text = r#"{"equation": "kawahara(1)", "family": "kawahara_window", "s": -2.5, "N_list": [32, 64], "n_max": 4}"#;
        let a = ScenarioConfig::from_json(text).unwrap();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(cache_key(&a, 32.0).unwrap(), cache_key(&b, 32.0).unwrap());
        assert_ne!(cache_key(&a, 32.0).unwrap(), cache_key(&a, 64.0).unwrap());
    }
}
