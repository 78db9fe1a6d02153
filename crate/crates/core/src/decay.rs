//! Decay-rate computation.
//!
//! Per-point rate `M(u, t) = inf_{v >= u q} <v + d(t), Sigma_t^{-1} (v + d(t))>`
//! and the domain rate `M(u; T) = (1/2) inf_t M(u, t)`, which governs the
//! logarithmic decay of the simultaneous exceedance probability. Also the
//! bounded-path rate `I(T)`, the two-dimensional closed form, and the
//! scaling constant `J` for regularly varying variance functions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{inverse_spd, Mat, SymMatrix};
use crate::models::{threshold_u0, CovModel, DomainGrid, DriftModel};
use crate::optim::golden_section_min;
use crate::qp::{brute_force_active_sets, solve_quadrant, solve_quadrant_psd, QpSolution, QuadrantProblem};

/// Knobs for the domain scan.
#[derive(Debug, Clone, Default)]
pub struct RateOptions {
    /// Keep the full `(t, M(u, t))` table in the result.
    pub keep_per_point: bool,
    /// Golden-section refinement around the incumbent (1-D grids only).
    pub refine: bool,
}

/// Domain rate with the optimizer's KKT certificate.
#[derive(Debug, Clone, Serialize)]
pub struct RateResult {
    pub u: f64,
    /// `M(u; T)`, including the 1/2 factor.
    pub m_of_u_t: f64,
    /// Grid (or refined) point attaining the infimum.
    pub argmin: Vec<f64>,
    /// Inner quadrant solve at the argmin; `w_star` are the optimal weights.
    pub qp: QpSolution,
    /// Un-halved per-point values `(t, M(u, t))`, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_point: Option<Vec<(Vec<f64>, f64)>>,
    /// Threshold floor computed from the drift infima on the grid.
    pub u0: f64,
    pub notes: Vec<String>,
}

/// Inner quadrant solve at one domain point, falling back to active-set
/// enumeration if the iterative path stalls.
fn rate_qp_at_point(
    model: &CovModel,
    drift: &DriftModel,
    q: &[f64],
    u: f64,
    t: &[f64],
) -> Result<QpSolution> {
    let sigma = model.sigma_at(t)?;
    let h = inverse_spd(&sigma)?;
    let d = drift.drift_at(t)?;
    let b: Vec<f64> = q.iter().map(|&qi| u * qi).collect();
    let p = QuadrantProblem::new(h, d, b)?;
    match solve_quadrant(&p) {
        Err(Error::NoConvergence { .. }) if p.dim() <= 20 => brute_force_active_sets(&p),
        other => other,
    }
}

/// `M(u, t)`: the un-halved quadrant optimum at one point.
pub fn rate_at_point(
    model: &CovModel,
    drift: &DriftModel,
    q: &[f64],
    u: f64,
    t: &[f64],
) -> Result<f64> {
    Ok(rate_qp_at_point(model, drift, q, u, t)?.value)
}

fn validate_q(model: &CovModel, q: &[f64]) -> Result<()> {
    if q.len() != model.n() {
        return Err(Error::invalid(format!(
            "q has {} entries, model has {} coordinates",
            q.len(),
            model.n()
        )));
    }
    if q.iter().any(|&qi| qi.is_nan() || qi <= 0.0) {
        return Err(Error::invalid("q must be strictly positive"));
    }
    Ok(())
}

/// `M(u; T)` on the grid: minimizes `M(u, t)` over the points, halves, and
/// re-solves the quadrant program at the argmin for its weight certificate.
///
/// Point evaluations are independent; the scan is deterministic and ties are
/// broken by the lexicographically smallest point.
pub fn rate_over_domain(
    model: &CovModel,
    drift: &DriftModel,
    q: &[f64],
    u: f64,
    grid: &DomainGrid,
    opts: &RateOptions,
) -> Result<RateResult> {
    validate_q(model, q)?;
    let u0 = threshold_u0(drift, q, grid)?;
    if u <= u0 {
        return Err(Error::ThresholdNotExceeded { u, u0 });
    }
    let mut best: Option<(f64, &Vec<f64>)> = None;
    let mut per_point = opts.keep_per_point.then(Vec::new);
    for t in grid.points() {
        let value = rate_at_point(model, drift, q, u, t)?;
        if let Some(table) = per_point.as_mut() {
            table.push((t.clone(), value));
        }
        best = match best {
            None => Some((value, t)),
            Some((bv, bt)) => {
                if value < bv
                    || (value == bv && t.partial_cmp(bt) == Some(std::cmp::Ordering::Less))
                {
                    Some((value, t))
                } else {
                    Some((bv, bt))
                }
            }
        };
    }
    let (mut best_value, mut argmin) =
        best.map(|(v, t)| (v, t.clone())).expect("grid is non-empty");
    let mut notes = Vec::new();

    if opts.refine && grid.dim() == 1 {
        let axis = grid.axis_values_1d().expect("1-D grid");
        let pos = axis
            .iter()
            .position(|&x| x == argmin[0])
            .expect("argmin is a grid value");
        let lo = axis[pos.saturating_sub(1)];
        let hi = axis[(pos + 1).min(axis.len() - 1)];
        if hi > lo {
            let (t_ref, v_ref) = golden_section_min(
                |x| rate_at_point(model, drift, q, u, &[x]).unwrap_or(f64::INFINITY),
                lo,
                hi,
                1e-10,
                200,
            );
            if v_ref < best_value {
                best_value = v_ref;
                argmin = vec![t_ref];
                notes.push(format!("argmin refined within [{lo}, {hi}]"));
            }
        }
    }

    let qp = rate_qp_at_point(model, drift, q, u, &argmin)?;
    Ok(RateResult {
        u,
        m_of_u_t: 0.5 * best_value,
        argmin,
        qp,
        per_point,
        u0,
        notes,
    })
}

/// Bounded-path rate `I(T) = inf_t inf_{v >= q} <v, Sigma_t^{-1} v>`.
///
/// Equals twice the domain rate at `u = 1` with zero drift.
pub fn bounded_rate_i(model: &CovModel, q: &[f64], grid: &DomainGrid) -> Result<f64> {
    validate_q(model, q)?;
    let drift = DriftModel::zero(model.n());
    let mut best = f64::INFINITY;
    for t in grid.points() {
        best = best.min(rate_at_point(model, &drift, q, 1.0, t)?);
    }
    Ok(best)
}

/// Asymptotic exponent scale in the bounded case: `u^2 I(T) / 2`.
pub fn bounded_rate_asymptotic(u: f64, i_of_t: f64) -> f64 {
    0.5 * u * u * i_of_t
}

/// Two-dimensional per-point rate factor in closed form.
///
/// For standard deviations `sigma`, correlation `r` and thresholds `q`,
/// returns
///
/// ```text
/// (1 / min(sigma1/q1, sigma2/q2)^2) * (1 + (c - r)^2 / (1 - r^2) * 1{r < c})
/// ```
///
/// with `c = min((q1/sigma1)(sigma2/q2), (sigma1/q1)(q2/sigma2))`. At
/// `r = 1` the indicator term vanishes in the limit; at `r = -1` the rate is
/// infinite (opposite-signed coordinates cannot both exceed).
pub fn two_dim_closed_form(
    sigma1: f64,
    sigma2: f64,
    r: f64,
    q1: f64,
    q2: f64,
) -> Result<f64> {
    if !(sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(Error::invalid("sigma1 and sigma2 must be positive"));
    }
    if !(q1 > 0.0 && q2 > 0.0) {
        return Err(Error::invalid("q1 and q2 must be positive"));
    }
    if !r.is_finite() || r.abs() > 1.0 {
        return Err(Error::InvalidCorrelation { r });
    }
    let s1 = sigma1 / q1;
    let s2 = sigma2 / q2;
    let base = 1.0 / s1.min(s2).powi(2);
    let c = (s2 / s1).min(s1 / s2);
    if r >= c {
        // includes r = 1, where c <= 1 = r and the extra term's limit is zero
        return Ok(base);
    }
    if r == -1.0 {
        // 1 - r^2 = 0 with c > r: the limit is +infinity
        return Ok(f64::INFINITY);
    }
    Ok(base * (1.0 + (c - r).powi(2) / (1.0 - r * r)))
}

/// Regularly varying variance structure: indices, comparable-scale constants
/// and the mixing matrix for `X(t) = S Y(t)` with linear unit drift.
#[derive(Debug, Clone)]
pub struct RegVarSpec {
    /// Regular-variation indices, ascending, in `(0, 2)`.
    pub alpha: Vec<f64>,
    /// Number of leading coordinates sharing the slowest variance scale.
    pub kappa: usize,
    /// Scale constants `c_1 = 1, c_2, ..., c_kappa`.
    pub c: Vec<f64>,
    pub s: Mat,
    pub q: Vec<f64>,
}

impl RegVarSpec {
    pub fn new(alpha: Vec<f64>, kappa: usize, c: Vec<f64>, s: Mat, q: Vec<f64>) -> Result<Self> {
        let n = alpha.len();
        if n == 0 {
            return Err(Error::invalid("alpha must be non-empty"));
        }
        if alpha.iter().any(|&a| !(a > 0.0 && a < 2.0)) {
            return Err(Error::invalid("alpha entries must lie in (0, 2)"));
        }
        if alpha.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("alpha must be sorted ascending"));
        }
        if kappa == 0 || kappa > n {
            return Err(Error::invalid(format!("kappa {kappa} must lie in 1..=n")));
        }
        if c.len() != kappa {
            return Err(Error::invalid("c must have kappa entries"));
        }
        if c[0] != 1.0 {
            return Err(Error::invalid("c[0] must equal 1"));
        }
        if c.iter().any(|&ci| ci.is_nan() || ci <= 0.0) {
            return Err(Error::invalid("c entries must be positive"));
        }
        if !s.is_square() || s.rows() != n {
            return Err(Error::invalid("S must be square of size n"));
        }
        s.inverse().map_err(|_| Error::invalid("S must be invertible"))?;
        if q.len() != n || q.iter().any(|&qi| qi.is_nan() || qi <= 0.0) {
            return Err(Error::invalid("q must be strictly positive of length n"));
        }
        Ok(RegVarSpec { alpha, kappa, c, s, q })
    }

    /// `diag(1, c_2, ..., c_kappa, 0, ..., 0)`; singular when `kappa < n`.
    pub fn c_matrix(&self) -> SymMatrix {
        let n = self.alpha.len();
        SymMatrix::from_fn(n, |i, j| {
            if i == j && i < self.kappa {
                self.c[i]
            } else {
                0.0
            }
        })
    }
}

/// Outer search bracket for the scaling constant.
#[derive(Debug, Clone)]
pub struct RegVarSearch {
    pub t_lo: f64,
    pub t_hi: f64,
    pub grid_points: usize,
    pub golden_tol: f64,
}

impl Default for RegVarSearch {
    fn default() -> Self {
        RegVarSearch { t_lo: 1e-4, t_hi: 1e4, grid_points: 400, golden_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegVarJ {
    pub j: f64,
    pub t_star: f64,
    /// False when the outer minimizer ran to the bracket edge even after
    /// widening: the infimum may not be attained in finite time.
    pub attained: bool,
    /// Set when the bracket had to be widened once.
    pub widened: bool,
}

/// The scaling constant
/// `J = inf_{t >= 0} inf_{v >= q} <S^{-1}(v + i(t)), C S^{-1}(v + i(t))> / t^{alpha_1}`.
///
/// The inner problem is a (possibly singular) quadrant program; the outer
/// infimum is located on a log-spaced bracket and refined by golden section.
pub fn regvar_j(spec: &RegVarSpec, search: &RegVarSearch) -> Result<RegVarJ> {
    let n = spec.alpha.len();
    let alpha1 = spec.alpha[0];
    let s_inv = spec.s.inverse()?;
    let c = spec.c_matrix();
    // H = S^{-T} C S^{-1}, symmetrized against roundoff
    let cs = Mat::from_fn(n, n, |i, j| {
        (0..n).map(|k| c.get(i, k) * s_inv.get(k, j)).sum()
    });
    let h_raw = s_inv.transpose().mul_mat(&cs);
    let h = SymMatrix::from_fn(n, |i, j| 0.5 * (h_raw.get(i, j) + h_raw.get(j, i)));

    let inner = |t: f64| -> Result<f64> {
        let d = vec![t; n];
        let p = QuadrantProblem::new(h.clone(), d, spec.q.clone())?;
        Ok(solve_quadrant_psd(&p)?.value / t.powf(alpha1))
    };

    let scan = |lo: f64, hi: f64| -> Result<(usize, Vec<f64>, Vec<f64>)> {
        let pts = search.grid_points.max(8);
        let ratio = (hi / lo).ln();
        let ts: Vec<f64> = (0..pts)
            .map(|i| lo * (ratio * i as f64 / (pts - 1) as f64).exp())
            .collect();
        let mut vals = Vec::with_capacity(pts);
        for &t in &ts {
            vals.push(inner(t)?);
        }
        let best = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("scan grid non-empty");
        Ok((best, ts, vals))
    };

    let (mut lo, mut hi) = (search.t_lo, search.t_hi);
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("search bracket requires 0 < t_lo < t_hi"));
    }
    let (mut best, mut ts, mut vals) = scan(lo, hi)?;
    let mut widened = false;
    if best == 0 || best == ts.len() - 1 {
        widened = true;
        lo /= 100.0;
        hi *= 100.0;
        (best, ts, vals) = scan(lo, hi)?;
    }
    let attained = best > 0 && best < ts.len() - 1;
    let (bl, bh) = (
        ts[best.saturating_sub(1)],
        ts[(best + 1).min(ts.len() - 1)],
    );
    let (t_star, j) = if bh > bl {
        golden_section_min(
            |t| inner(t).unwrap_or(f64::INFINITY),
            bl,
            bh,
            search.golden_tol,
            300,
        )
    } else {
        (ts[best], vals[best])
    };
    // keep the scanned value if golden section could not improve on it
    let (t_star, j) = if vals[best] < j { (ts[best], vals[best]) } else { (t_star, j) };
    Ok(RegVarJ { j, t_star, attained, widened })
}

/// Asymptotic decay exponent under regular variation:
/// `u^2 J / (2 sigma_1^2(u))`.
pub fn regvar_asymptotic(u: f64, sigma1_sq: impl Fn(f64) -> f64, j: f64) -> f64 {
    u * u * j / (2.0 * sigma1_sq(u))
}
