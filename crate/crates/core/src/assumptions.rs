//! Machine checks of the model assumptions behind the rate asymptotics.
//!
//! The residual-correlation bound requires `sup_t k_ij(t) < 1` for every
//! pair `i != j` of coordinates, where `k_ij` are the off-diagonal entries of
//! the normalized inverse covariance. Geometrically, the whitened quadrant
//! axes must keep their pairwise angles bounded away from zero. A finite
//! grid can only certify the bound with an explicit margin, so the report
//! carries the margin and the grid scope rather than claiming a proof over
//! the whole domain.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::partial_corr;
use crate::models::{threshold_u0, CovModel, DomainGrid, DriftModel};

/// Default margin used by the command-line checker.
pub const DEFAULT_A1_MARGIN: f64 = 1e-3;

/// Supremum of one off-diagonal entry of `K_t` over the grid.
#[derive(Debug, Clone, Serialize)]
pub struct A1Pair {
    pub i: usize,
    pub j: usize,
    pub sup_k: f64,
    /// Grid point attaining the supremum.
    pub argmax: Vec<f64>,
    /// `arccos(sup_k)` in degrees: the tightest whitened-axis angle.
    pub angle_degrees: f64,
}

/// Result of the residual-correlation check over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct A1Report {
    pub n: usize,
    pub delta: f64,
    /// `sup_k < 1 - delta` for every pair.
    pub pass: bool,
    pub pairs: Vec<A1Pair>,
    /// Smallest pairwise angle over the grid, in degrees.
    pub min_angle_degrees: Option<f64>,
    pub grid_points: usize,
    /// The check certifies the bound on this grid only.
    pub scope: String,
}

/// Scans the grid for the per-pair suprema of `k_ij(t)` and compares them
/// against `1 - delta`.
pub fn check_a1(model: &CovModel, grid: &DomainGrid, delta: f64) -> Result<A1Report> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} must lie in (0, 1)")));
    }
    let n = model.n();
    let mut sup = vec![f64::NEG_INFINITY; n * n];
    let mut arg: Vec<Option<&Vec<f64>>> = vec![None; n * n];
    for t in grid.points() {
        let sigma = model.sigma_at(t)?;
        let k = partial_corr(&sigma)?;
        for i in 0..n {
            for j in i + 1..n {
                let v = k.get(i, j);
                if v > sup[i * n + j] {
                    sup[i * n + j] = v;
                    arg[i * n + j] = Some(t);
                }
            }
        }
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let s = sup[i * n + j];
            pairs.push(A1Pair {
                i,
                j,
                sup_k: s,
                argmax: arg[i * n + j].expect("grid is non-empty").clone(),
                angle_degrees: s.clamp(-1.0, 1.0).acos().to_degrees(),
            });
        }
    }
    let pass = pairs.iter().all(|p| p.sup_k < 1.0 - delta);
    let min_angle = pairs
        .iter()
        .map(|p| p.angle_degrees)
        .fold(f64::INFINITY, f64::min);
    Ok(A1Report {
        n,
        delta,
        pass,
        pairs,
        min_angle_degrees: if n > 1 { Some(min_angle) } else { None },
        grid_points: grid.len(),
        scope: format!("checked on {}", grid.description()),
    })
}

/// True iff `u` exceeds the threshold floor `u0` computed on the grid.
pub fn check_threshold(drift: &DriftModel, q: &[f64], u: f64, grid: &DomainGrid) -> Result<bool> {
    Ok(u > threshold_u0(drift, q, grid)?)
}

/// Heuristic tail screen for almost-sure drift domination.
///
/// Almost-sure boundedness of `X_i(t) - eps * d_i(t)` is not machine
/// checkable; as a proxy, the ratio `sigma_i^2(t) / (eps * d_i(t))^2` must be
/// nonincreasing along the tail (second half) of the grid for each
/// `eps in {0.1, 0.5, 1}`. A failing coordinate means the drift does not
/// visibly dominate the variance on this grid. Heuristic only, never proof.
#[derive(Debug, Clone, Serialize)]
pub struct A2Heuristic {
    pub epsilons: Vec<f64>,
    /// Verdict per coordinate, all epsilons combined.
    pub per_coordinate: Vec<bool>,
    pub pass: bool,
    pub note: String,
}

pub fn check_a2_heuristic(
    model: &CovModel,
    drift: &DriftModel,
    grid: &DomainGrid,
) -> Result<A2Heuristic> {
    let epsilons = vec![0.1, 0.5, 1.0];
    let n = model.n();
    let mut order: Vec<&Vec<f64>> = grid.points().iter().collect();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tail = &order[order.len() / 2..];
    let mut per_coordinate = vec![true; n];
    for &eps in &epsilons {
        let mut prev = vec![f64::INFINITY; n];
        for t in tail {
            let sigma = model.sigma_at(t)?;
            let d = drift.drift_at(t)?;
            for i in 0..n {
                if d[i] <= 0.0 {
                    per_coordinate[i] = false;
                    continue;
                }
                let ratio = sigma.get(i, i) / (eps * d[i]).powi(2);
                if ratio > prev[i] * (1.0 + 1e-12) {
                    per_coordinate[i] = false;
                }
                prev[i] = ratio;
            }
        }
    }
    let pass = per_coordinate.iter().all(|&p| p);
    Ok(A2Heuristic {
        epsilons,
        per_coordinate,
        pass,
        note: "heuristic tail screen on the working grid; not a proof".to_string(),
    })
}
