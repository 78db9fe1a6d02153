//! Run configuration: the model description plus thresholds, levels and
//! estimator options. Validation errors name the offending field.

use serde::{Deserialize, Serialize};

use gpextremes::config::ModelConfig;
use gpextremes::decay::{RegVarSearch, RegVarSpec};
use gpextremes::error::{Error, Result};
use gpextremes::linalg::Mat;
use gpextremes::models::{threshold_u0, CovModel, DomainGrid, DriftModel};
use gpextremes::montecarlo::{EstimatorKind, McOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Margin for the residual-correlation check.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Golden-section refinement of the rate argmin (1-D grids).
    #[serde(default)]
    pub refine: bool,
}

fn default_delta() -> f64 {
    gpextremes::assumptions::DEFAULT_A1_MARGIN
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { delta: default_delta(), refine: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig {
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_dim_cap: Option<usize>,
}

fn default_samples() -> u64 {
    100_000
}

fn default_estimator() -> EstimatorKind {
    EstimatorKind::Crude
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            samples: default_samples(),
            seed: 0,
            estimator: default_estimator(),
            block_size: None,
            workers: None,
            joint_dim_cap: None,
        }
    }
}

impl McConfig {
    pub fn options(&self) -> McOptions {
        let mut opts = McOptions::new(self.samples, self.seed);
        if let Some(bs) = self.block_size {
            opts.block_size = bs;
        }
        opts.workers = self.workers;
        if let Some(cap) = self.joint_dim_cap {
            opts.joint_dim_cap = cap;
        }
        opts
    }
}

/// Parameters of the regularly-varying scaling problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegVarConfig {
    pub alpha: Vec<f64>,
    pub kappa: usize,
    pub c: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

impl RegVarConfig {
    pub fn spec(&self) -> Result<RegVarSpec> {
        RegVarSpec::new(
            self.alpha.clone(),
            self.kappa,
            self.c.clone(),
            Mat::from_rows(&self.s)?,
            self.q.clone(),
        )
    }

    pub fn search(&self) -> RegVarSearch {
        let mut s = RegVarSearch::default();
        if let Some(lo) = self.t_lo {
            s.t_lo = lo;
        }
        if let Some(hi) = self.t_hi {
            s.t_hi = hi;
        }
        if let Some(p) = self.grid_points {
            s.grid_points = p;
        }
        s
    }
}

/// Top-level configuration file consumed by every subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_list: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regvar: Option<RegVarConfig>,
}

/// A config whose model built and whose fields passed validation.
pub struct Validated {
    pub model: CovModel,
    pub drift: DriftModel,
    pub grid: DomainGrid,
    pub q: Vec<f64>,
    pub u0: f64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn q(&self) -> Result<&[f64]> {
        let q = self
            .q
            .as_deref()
            .ok_or_else(|| Error::invalid("field q: required"))?;
        if q.iter().any(|&x| x.is_nan() || x <= 0.0) {
            return Err(Error::invalid("field q: entries must be strictly positive"));
        }
        Ok(q)
    }

    /// Threshold levels: `u` or `u_list`, at least one.
    pub fn levels(&self) -> Result<Vec<f64>> {
        match (&self.u, &self.u_list) {
            (Some(u), None) => Ok(vec![*u]),
            (None, Some(list)) => Ok(list.clone()),
            (Some(_), Some(_)) => Err(Error::invalid("fields u and u_list: give only one")),
            (None, None) => Err(Error::invalid("field u (or u_list): required")),
        }
    }

    /// Builds the model and checks q against it; `u` levels are checked
    /// against the threshold floor by the individual commands.
    pub fn validate(&self) -> Result<Validated> {
        let (model, drift, grid) = self.model.build()?;
        let q = self.q()?.to_vec();
        if q.len() != model.n() {
            return Err(Error::invalid(format!(
                "field q: {} entries for a model with {} coordinates",
                q.len(),
                model.n()
            )));
        }
        let u0 = threshold_u0(&drift, &q, &grid)?;
        Ok(Validated { model, drift, grid, q, u0 })
    }
}
