use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::ScenarioRecord;
use super::sweep::{fit_points, FitResult, SweepResult};
use crate::error::{LabError, Result};

pub const CSV_HEADER: [&str; 12] = [
    "scenario",
    "N",
    "A",
    "theta",
    "t",
    "norm_u0_Hs",
    "norm_u0_FL1",
    "norm_Ip_Hs",
    "metric_series_Hs",
    "dominance_ratio",
    "cond_all_ok",
    "status",
];

/// One CSV row, as read back by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub scenario: String,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub theta: f64,
    pub t: f64,
    #[serde(rename = "norm_u0_Hs")]
    pub norm_u0_hs: f64,
    #[serde(rename = "norm_u0_FL1")]
    pub norm_u0_fl1: f64,
    #[serde(rename = "norm_Ip_Hs")]
    pub norm_ip_hs: f64,
    #[serde(rename = "metric_series_Hs")]
    pub metric_series_hs: f64,
    pub dominance_ratio: Option<f64>,
    pub cond_all_ok: bool,
    pub status: String,
}

impl From<&ScenarioRecord> for CsvRow {
    fn from(r: &ScenarioRecord) -> Self {
        Self {
            scenario: r.scenario.clone(),
            n: r.n,
            a: r.a,
            theta: r.theta,
            t: r.t,
            norm_u0_hs: r.norm_u0_hs,
            norm_u0_fl1: r.norm_u0_fl1,
            norm_ip_hs: r.norm_ip_hs,
            metric_series_hs: r.metric_series_hs,
            dominance_ratio: r.dominance_ratio,
            cond_all_ok: r.cond_all_ok,
            status: r.status.clone(),
        }
    }
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Io(e.to_string())
}

pub fn records_csv(records: &[ScenarioRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.serialize(CsvRow::from(r)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| LabError::Io(e.to_string()))
}

/// Condition ledger as `scenario, N, condition, lhs, rhs, satisfied` rows.
pub fn ledger_csv(records: &[ScenarioRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "N", "condition", "lhs", "rhs", "satisfied"]).map_err(csv_err)?;
    for r in records {
        for c in &r.conditions {
            w.write_record([
                r.scenario.clone(),
                r.n.to_string(),
                c.name.clone(),
                c.lhs.to_string(),
                c.rhs.to_string(),
                c.satisfied.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| LabError::Io(e.to_string()))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(LabError::Config(format!("{}: unexpected CSV header", path.display())));
    }
    r.deserialize().map(|row| row.map_err(|e| LabError::Config(e.to_string()))).collect()
}

/// Fit over the usable rows of a CSV file.
pub fn fit_rows(rows: &[CsvRow], log_correction: f64) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == "ok" && r.cond_all_ok && r.norm_ip_hs > 0.0)
        .map(|r| (r.n, r.norm_ip_hs))
        .collect();
    fit_points(&pts, log_correction)
}

/// Log-log plot of the corrected metric against `N` with the fitted line.
pub fn svg_plot(title: &str, points: &[(f64, f64)], log_correction: f64, fit: Option<&FitResult>) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 1.0 && p.1 > 0.0 && p.1.is_finite())
        .map(|&(n, y)| (n.log10(), y.log10() + log_correction * n.ln().ln().log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#, w / 2.0, escape(title));
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let fold = |f: fn(f64, f64) -> f64, init: f64, k: usize| pts.iter().map(|p| if k == 0 { p.0 } else { p.1 }).fold(init, f);
    let (x0, x1) = (fold(f64::min, f64::INFINITY, 0), fold(f64::max, f64::NEG_INFINITY, 0));
    let (y0, y1) = (fold(f64::min, f64::INFINITY, 1), fold(f64::max, f64::NEG_INFINITY, 1));
    let pad = |a: f64, b: f64| if b - a < 1e-9 { (a - 0.5, b + 0.5) } else { (a - 0.05 * (b - a), b + 0.05 * (b - a)) };
    let ((x0, x1), (y0, y1)) = (pad(x0, x1), pad(y0, y1));
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">log10 N</text>"#, w / 2.0, h - 20.0);
    let ylabel = if log_correction == 0.0 { "log10 metric".to_string() } else { format!("log10 (metric (ln N)^{log_correction})") };
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(&ylabel)
    );
    for (x, tick) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(svg, r#"<text x="{tick:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{x:.2}</text>"#, h - m + 14.0);
    }
    for (y, tick) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(svg, r#"<text x="{}" y="{tick:.1}" text-anchor="end" font-family="sans-serif" font-size="10">{y:.2}</text>"#, m - 4.0);
    }
    let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
    let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, line.join(" "));
    for p in &pts {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(p.0), sy(p.1));
    }
    if let Some(f) = fit {
        // the fit lives in natural logs; convert to base 10
        let at = |x: f64| (f.intercept + f.slope * x * std::f64::consts::LN_10) / std::f64::consts::LN_10;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-dasharray="6 4"/>"#,
            sx(x0),
            sy(at(x0)),
            sx(x1),
            sy(at(x1))
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="12" fill="firebrick">slope {:.4} (rms residual {:.2e})</text>"#,
            w - m,
            m - 8.0,
            f.slope,
            f.residual
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `records.csv`, `conditions.csv`, `sweep.json` and `metric.svg` into `dir`.
pub fn write_sweep(result: &SweepResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("records.csv"), records_csv(&result.records)?)?;
    fs::write(dir.join("conditions.csv"), ledger_csv(&result.records)?)?;
    fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(result)?)?;
    let pts: Vec<(f64, f64)> = result.records.iter().filter(|r| r.usable()).map(|r| (r.n, r.norm_ip_hs)).collect();
    fs::write(dir.join("metric.svg"), svg_plot(&result.scenario, &pts, result.log_correction, result.fit.as_ref()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: f64, metric: f64) -> ScenarioRecord {
        ScenarioRecord {
            scenario: "demo".into(),
            n,
            a: 1.0,
            theta: 0.0,
            t: 0.5,
            norm_u0_hs: 1.0,
            norm_u0_fl1: 2.0,
            norm_ip_hs: metric,
            metric_series_hs: metric,
            dominance_ratio: None,
            cond_all_ok: true,
            status: "ok".into(),
            conditions: Vec::new(),
            grid_h: 0.1,
            grid_points: 10,
            engine: None,
            leading_source: "closed".into(),
            level_norms_hs: Vec::new(),
            level_norms_fl1: Vec::new(),
            tail_hs: None,
            envelope_ratios: Vec::new(),
            cosine_ratio: None,
            quadrature_discrepancy: None,
        }
    }

    #[test]
    fn csv_round_trip() {
        let recs: Vec<_> = (3..8).map(|k| record(2f64.powi(k), 0.1 * k as f64)).collect();
        let text = records_csv(&recs).unwrap();
        assert!(text.starts_with("scenario,N,A,theta,t,norm_u0_Hs,norm_u0_FL1,norm_Ip_Hs,metric_series_Hs,dominance_ratio,cond_all_ok,status\n"));
        let dir = std::env::temp_dir().join(format!("inflate-csv-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("r.csv");
        fs::write(&path, &text).unwrap();
        let rows = read_csv(&path).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[2], CsvRow::from(&recs[2]));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn plot_has_fit_line() {
        let pts: Vec<(f64, f64)> = (3..8).map(|k| 2f64.powi(k)).map(|n| (n, n.sqrt())).collect();
        let f = fit_points(&pts, 0.0).unwrap();
        let svg = svg_plot("a<b", &pts, 0.0, Some(&f));
        assert!(svg.contains("slope 0.5000") && svg.contains("a&lt;b") && svg.ends_with("</svg>\n"));
    }
}
