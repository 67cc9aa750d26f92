use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{Scenario, ScenarioKind, ThetaRule};
use crate::equations::EquationSpec;
use crate::error::{LabError, Result};
use crate::picard::EngineChoice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyChoice {
    CubePair,
    Slab,
    KawaharaWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioParams {
    /// Label used in reports; defaults to `<equation>/<family>/s=<s>`.
    pub name: Option<String>,
    pub dim: usize,
    /// Exponent of the refined modulation bound, slab data only.
    pub beta: Option<f64>,
    pub theta_rule: ThetaRule,
    pub engine: EngineChoice,
    /// Multiplies the datum; conditions are evaluated for the scaled norms.
    pub amplitude_scale: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            name: None,
            dim: 1,
            beta: None,
            theta_rule: ThetaRule::Midpoint,
            engine: EngineChoice::Auto,
            amplitude_scale: 1.0,
        }
    }
}

/// Spacing and extent rules: `h` is the largest power of two with
/// `h <= feature / nodes_per_feature`, and the extent covers
/// `extent_factor * n_max * outer_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridPolicy {
    pub nodes_per_feature: f64,
    pub extent_factor: f64,
    /// Fixed spacing overriding the feature rule.
    pub h: Option<f64>,
    pub max_points: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self { nodes_per_feature: 8.0, extent_factor: 1.1, h: None, max_points: 1 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// `x << y` means `x <= y / ll_factor`.
    pub ll_factor: f64,
    /// Largest dominance ratio reported as leading-term dominance.
    pub dominance: f64,
    /// Relative tolerance of the `K` versus `2K - 1` quadrature check.
    pub tolerance: f64,
    /// Power `c` in the fit of `log(metric (log N)^c)`; defaults to 2 for the
    /// fifth-order equation and 0 otherwise.
    pub log_correction: Option<f64>,
    pub tree_budget: f64,
    /// Largest tuple count for the closed-form leading term.
    pub closed_budget: f64,
    /// Smallest ratio of `|I_p|` to its first-order cosine lower bound.
    pub cosine_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            ll_factor: 10.0,
            dominance: 0.5,
            tolerance: 1e-6,
            log_correction: None,
            tree_budget: 2e6,
            closed_budget: 5e7,
            cosine_floor: 0.5,
        }
    }
}

fn default_k() -> usize {
    65
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub equation: String,
    #[serde(default)]
    pub params: ScenarioParams,
    pub family: FamilyChoice,
    pub s: f64,
    #[serde(rename = "N_list")]
    pub n_list: Vec<f64>,
    pub n_max: usize,
    #[serde(default)]
    pub grid: GridPolicy,
    #[serde(rename = "quadrature_K", default = "default_k")]
    pub quadrature_k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn equation_spec(&self) -> Result<EquationSpec> {
        let eq = EquationSpec::catalog(&self.equation)?;
        eq.check_dim(self.params.dim)?;
        Ok(eq)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let eq = self.equation_spec()?;
        let kind = match (eq.is_kawahara(), eq.mass_term, self.family) {
            (true, _, FamilyChoice::KawaharaWindow) => ScenarioKind::Kawahara,
            (true, _, _) | (false, _, FamilyChoice::KawaharaWindow) => {
                return Err(LabError::Config(format!(
                    "family {:?} does not fit equation {}",
                    self.family, self.equation
                )))
            }
            (false, true, FamilyChoice::CubePair) => ScenarioKind::BoussinesqCube,
            (false, true, FamilyChoice::Slab) => ScenarioKind::BoussinesqSlab,
            (false, false, FamilyChoice::CubePair) => ScenarioKind::DispersiveCube,
            (false, false, FamilyChoice::Slab) => ScenarioKind::DispersiveSlab,
        };
        let sc = Scenario {
            kind,
            d: self.params.dim,
            p: eq.degree(),
            alpha: eq.alpha(),
            beta: self.params.beta,
            s: self.s,
            theta_rule: self.params.theta_rule,
            ll_factor: self.thresholds.ll_factor,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn name(&self) -> String {
        self.params.name.clone().unwrap_or_else(|| {
            let fam = match self.family {
                FamilyChoice::CubePair => "cube_pair",
                FamilyChoice::Slab => "slab",
                FamilyChoice::KawaharaWindow => "kawahara_window",
            };
            format!("{}/{}/s={}", self.equation, fam, self.s)
        })
    }

    pub fn log_correction(&self) -> f64 {
        self.thresholds.log_correction.unwrap_or(if self.family == FamilyChoice::KawaharaWindow { 2.0 } else { 0.0 })
    }

    /// Structural checks; the scenario's own range of `s` is checked too.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.n_list.is_empty() {
            return bad("N_list is empty".into());
        }
        for &n in &self.n_list {
            let k = n.log2();
            if !(n >= 2.0 && k.fract() == 0.0) {
                return bad(format!("N_list entries must be powers of two >= 2, got {n}"));
            }
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad("N_list must be strictly increasing".into());
        }
        if self.quadrature_k < 5 {
            return bad(format!("quadrature_K must be at least 5, got {}", self.quadrature_k));
        }
        if !(self.params.amplitude_scale.is_finite() && self.params.amplitude_scale >= 0.0) {
            return bad(format!("amplitude_scale must be finite and >= 0, got {}", self.params.amplitude_scale));
        }
        if let Some(h) = self.grid.h {
            if !(h > 0.0 && h.log2().fract() == 0.0) {
                return bad(format!("grid.h must be a power of two, got {h}"));
            }
        }
        let eq = self.equation_spec()?;
        if self.n_max < eq.degree() {
            return bad(format!("n_max = {} is below the degree {}", self.n_max, eq.degree()));
        }
        self.scenario()?;
        Ok(())
    }
}
