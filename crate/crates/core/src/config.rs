//! JSON descriptions of models, drifts and grids.
//!
//! This is the file format consumed by the command-line front end. Example:
//!
//! ```json
//! {
//!   "n": 1,
//!   "kind": "independent-components",
//!   "components": [{ "kernel": "bm" }],
//!   "drift": { "kind": "linear-unit" },
//!   "grid": { "box": { "lo": [0.1], "hi": [50.0], "points": [400], "spacing": "log" } }
//! }
//! ```
//!
//! Kernels: `bm`, `fbm` (`hurst`), `ou` (`lambda`), `scaled` (`amplitude`,
//! `inner`). Drifts: `zero`, `linear-unit`, `affine` (`slope`, `intercept`
//! per coordinate), `tabulated` (`points`, `values`). Grids: exactly one of
//! `box`, `points`, or `product`. Mixed models carry the `n x n` matrix `S`;
//! tabulated models carry `table` with per-point covariance matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat, SymMatrix};
use crate::models::{AxisMode, CovModel, DomainGrid, DriftModel, ScalarKernel};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "kebab-case")]
pub enum KernelConfig {
    Bm,
    Fbm { hurst: f64 },
    Ou { lambda: f64 },
    Scaled { amplitude: f64, inner: Box<KernelConfig> },
}

impl KernelConfig {
    pub fn to_kernel(&self) -> ScalarKernel {
        match self {
            KernelConfig::Bm => ScalarKernel::Bm,
            KernelConfig::Fbm { hurst } => ScalarKernel::Fbm { hurst: *hurst },
            KernelConfig::Ou { lambda } => ScalarKernel::Ou { lambda: *lambda },
            KernelConfig::Scaled { amplitude, inner } => ScalarKernel::Scaled {
                amplitude: *amplitude,
                inner: Box::new(inner.to_kernel()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    IndependentComponents,
    MixedByMatrix,
    ProductDomain,
    Tabulated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaTableConfig {
    pub points: Vec<Vec<f64>>,
    pub sigmas: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriftConfig {
    Zero,
    LinearUnit,
    Affine { slope: Vec<f64>, intercept: Vec<f64> },
    Tabulated { points: Vec<Vec<f64>>, values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxGridConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: Vec<usize>,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

/// Exactly one of the fields must be set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_spec: Option<BoxGridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<Vec<AxisConfig>>,
}

/// Model description file: process, drift and evaluation grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: usize,
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<KernelConfig>,
    #[serde(default, rename = "S", skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<SigmaTableConfig>,
    pub drift: DriftConfig,
    pub grid: GridConfig,
}

fn axis_values(lo: f64, hi: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    let grid = match spacing {
        Spacing::Linear => DomainGrid::linear_space_1d(lo, hi, points)?,
        Spacing::Log => DomainGrid::log_space_1d(lo, hi, points)?,
    };
    Ok(grid.points().iter().map(|p| p[0]).collect())
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("model config: {e}")))
    }

    pub fn build_model(&self) -> Result<CovModel> {
        let kernels: Vec<ScalarKernel> = self.components.iter().map(|c| c.to_kernel()).collect();
        let model = match self.kind {
            ModelKind::IndependentComponents => CovModel::independent(kernels)?,
            ModelKind::MixedByMatrix => {
                let rows = self
                    .s
                    .as_ref()
                    .ok_or_else(|| Error::invalid("field S: required for mixed-by-matrix"))?;
                CovModel::mixed(Mat::from_rows(rows)?, kernels)?
            }
            ModelKind::ProductDomain => CovModel::product(kernels)?,
            ModelKind::Tabulated => {
                let table = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::invalid("field table: required for tabulated"))?;
                let sigmas = table
                    .sigmas
                    .iter()
                    .map(|rows| SymMatrix::from_rows(rows))
                    .collect::<Result<Vec<_>>>()?;
                CovModel::tabulated(table.points.clone(), sigmas)?
            }
        };
        if model.n() != self.n {
            return Err(Error::invalid(format!(
                "field n: declared {} but model has {} coordinates",
                self.n,
                model.n()
            )));
        }
        Ok(model)
    }

    pub fn build_drift(&self, model: &CovModel) -> Result<DriftModel> {
        let n = model.n();
        let drift = match &self.drift {
            DriftConfig::Zero => DriftModel::zero(n),
            DriftConfig::LinearUnit => DriftModel::linear_unit(n),
            DriftConfig::Affine { slope, intercept } => {
                if slope.len() != n || intercept.len() != n {
                    return Err(Error::invalid(
                        "field drift: slope and intercept must have n entries",
                    ));
                }
                DriftModel::affine(slope.clone(), intercept.clone())?
            }
            DriftConfig::Tabulated { points, values } => {
                DriftModel::tabulated(points.clone(), values.clone())?
            }
        };
        // product domains evaluate coordinate i on its own axis
        Ok(match model {
            CovModel::ProductDomain { .. } => drift.with_axis(AxisMode::PerCoordinate),
            _ => drift,
        })
    }

    /// Builds the raw grid, then drops points where the covariance is
    /// degenerate.
    pub fn build_grid(&self, model: &CovModel) -> Result<DomainGrid> {
        let g = &self.grid;
        let set = [g.box_spec.is_some(), g.points.is_some(), g.product.is_some()];
        if set.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::invalid(
                "field grid: exactly one of box, points, product must be given",
            ));
        }
        let raw = if let Some(b) = &g.box_spec {
            if b.lo.len() != b.hi.len() || b.lo.len() != b.points.len() {
                return Err(Error::invalid(
                    "field grid.box: lo, hi, points must have equal lengths",
                ));
            }
            let axes = b
                .lo
                .iter()
                .zip(&b.hi)
                .zip(&b.points)
                .map(|((&lo, &hi), &pts)| axis_values(lo, hi, pts, b.spacing))
                .collect::<Result<Vec<_>>>()?;
            let grid = DomainGrid::product_of(&axes)?;
            DomainGrid::with_description(
                grid.points().to_vec(),
                format!(
                    "box {:?}..{:?} with {:?} points per axis ({:?} spacing)",
                    b.lo, b.hi, b.points, b.spacing
                ),
            )?
        } else if let Some(points) = &g.points {
            DomainGrid::from_points(points.clone())?
        } else {
            let axes = g
                .product
                .as_ref()
                .expect("validated above")
                .iter()
                .map(|a| axis_values(a.lo, a.hi, a.points, a.spacing))
                .collect::<Result<Vec<_>>>()?;
            DomainGrid::product_of(&axes)?
        };
        if raw.dim() != model.domain_dim() {
            return Err(Error::invalid(format!(
                "field grid: dimension {} does not match the model domain dimension {}",
                raw.dim(),
                model.domain_dim()
            )));
        }
        raw.filtered_for(model)
    }

    /// Model, drift and filtered grid in one step.
    pub fn build(&self) -> Result<(CovModel, DriftModel, DomainGrid)> {
        let model = self.build_model()?;
        let drift = self.build_drift(&model)?;
        let grid = self.build_grid(&model)?;
        model.validate_on(&grid)?;
        Ok((model, drift, grid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds_bm_config() {
        let text = r#"{
            "n": 1,
            "kind": "independent-components",
            "components": [{ "kernel": "bm" }],
            "drift": { "kind": "linear-unit" },
            "grid": { "box": { "lo": [0.1], "hi": [50.0], "points": [100], "spacing": "log" } }
        }"#;
        let cfg = ModelConfig::from_json(text).unwrap();
        let (model, drift, grid) = cfg.build().unwrap();
        assert_eq!(model.n(), 1);
        assert_eq!(grid.len(), 100);
        assert_eq!(drift.drift_at(&[2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn parses_mixed_with_matrix() {
        let text = r#"{
            "n": 2,
            "kind": "mixed-by-matrix",
            "components": [{ "kernel": "ou", "lambda": 1.0 }, { "kernel": "ou", "lambda": 1.0 }],
            "S": [[1.0, 0.0], [0.5, 1.0]],
            "drift": { "kind": "zero" },
            "grid": { "points": [[0.0], [1.0], [2.0]] }
        }"#;
        let (model, _, grid) = ModelConfig::from_json(text).unwrap().build().unwrap();
        assert_eq!(model.n(), 2);
        assert_eq!(grid.len(), 3);
    }

    #[test]
    fn rejects_ambiguous_grid() {
        let text = r#"{
            "n": 1,
            "kind": "independent-components",
            "components": [{ "kernel": "bm" }],
            "drift": { "kind": "zero" },
            "grid": { "points": [[1.0]], "product": [{ "lo": 1.0, "hi": 2.0, "points": 3 }] }
        }"#;
        let err = ModelConfig::from_json(text).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("grid"));
    }

    #[test]
    fn parses_tabulated_and_scaled_kernels() {
        let text = r#"{
            "n": 1,
            "kind": "tabulated",
            "table": { "points": [[1.0], [2.0]], "sigmas": [[[1.0]], [[2.5]]] },
            "drift": { "kind": "zero" },
            "grid": { "points": [[1.0], [2.0]] }
        }"#;
        let (model, _, grid) = ModelConfig::from_json(text).unwrap().build().unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(model.sigma_at(&[2.0]).unwrap().get(0, 0), 2.5);

        let text = r#"{
            "n": 1,
            "kind": "independent-components",
            "components": [{ "kernel": "scaled", "amplitude": 2.0, "inner": { "kernel": "bm" } }],
            "drift": { "kind": "zero" },
            "grid": { "points": [[1.0]] }
        }"#;
        let (model, _, _) = ModelConfig::from_json(text).unwrap().build().unwrap();
        assert_eq!(model.sigma_at(&[1.0]).unwrap().get(0, 0), 4.0);
    }

    #[test]
    fn product_domain_round_trip() {
        let text = r#"{
            "n": 2,
            "kind": "product-domain",
            "components": [{ "kernel": "bm" }, { "kernel": "fbm", "hurst": 0.75 }],
            "drift": { "kind": "linear-unit" },
            "grid": { "product": [
                { "lo": 0.5, "hi": 4.0, "points": 4 },
                { "lo": 0.5, "hi": 4.0, "points": 3, "spacing": "log" }
            ] }
        }"#;
        let cfg = ModelConfig::from_json(text).unwrap();
        let (model, drift, grid) = cfg.build().unwrap();
        assert_eq!(grid.len(), 12);
        assert_eq!(model.domain_dim(), 2);
        assert_eq!(drift.drift_at(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        // serialization round-trip preserves the description
        let text2 = serde_json::to_string(&cfg).unwrap();
        let cfg2 = ModelConfig::from_json(&text2).unwrap();
        let (_, _, grid2) = cfg2.build().unwrap();
        assert_eq!(grid.points(), grid2.points());
    }
}
