//! Gaussian process models, drift functions and domain grids.
//!
//! A [`CovModel`] exposes the covariance matrix at a point and cross-time
//! covariances for joint simulation. A [`DriftModel`] evaluates the drift
//! vector and its grid infima, which set the threshold floor `u0`. Domains
//! are finite [`DomainGrid`]s; refinement of the grid is the caller's
//! convergence knob, and points with a degenerate covariance are filtered
//! out at construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Mat, SymMatrix};

/// Scalar covariance kernels for the coordinate processes.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarKernel {
    /// Brownian motion: `k(s, t) = min(s, t)`, variance `t`.
    Bm,
    /// Fractional Brownian motion with Hurst index `H in (0, 1)`:
    /// variance `t^{2H}`, `k(s, t) = (s^{2H} + t^{2H} - |s - t|^{2H}) / 2`.
    Fbm { hurst: f64 },
    /// Stationary Ornstein-Uhlenbeck: unit variance, `k(s, t) = exp(-lambda |s - t|)`.
    Ou { lambda: f64 },
    /// The inner process scaled by a constant amplitude.
    Scaled { amplitude: f64, inner: Box<ScalarKernel> },
}

impl ScalarKernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarKernel::Bm => Ok(()),
            ScalarKernel::Fbm { hurst } => {
                if *hurst > 0.0 && *hurst < 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("fbm hurst {hurst} must lie in (0, 1)")))
                }
            }
            ScalarKernel::Ou { lambda } => {
                if *lambda > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("ou lambda {lambda} must be positive")))
                }
            }
            ScalarKernel::Scaled { amplitude, inner } => {
                if *amplitude != 0.0 && amplitude.is_finite() {
                    inner.validate()
                } else {
                    Err(Error::invalid("scaled amplitude must be finite and nonzero"))
                }
            }
        }
    }

    /// Whether the kernel is only defined for nonnegative times.
    pub fn requires_nonneg_time(&self) -> bool {
        match self {
            ScalarKernel::Bm | ScalarKernel::Fbm { .. } => true,
            ScalarKernel::Ou { .. } => false,
            ScalarKernel::Scaled { inner, .. } => inner.requires_nonneg_time(),
        }
    }

    pub fn variance(&self, t: f64) -> f64 {
        self.cov(t, t)
    }

    pub fn cov(&self, s: f64, t: f64) -> f64 {
        match self {
            ScalarKernel::Bm => s.min(t),
            ScalarKernel::Fbm { hurst } => {
                let h2 = 2.0 * hurst;
                0.5 * (s.powf(h2) + t.powf(h2) - (s - t).abs().powf(h2))
            }
            ScalarKernel::Ou { lambda } => (-lambda * (s - t).abs()).exp(),
            ScalarKernel::Scaled { amplitude, inner } => amplitude * amplitude * inner.cov(s, t),
        }
    }

    /// Index of regular variation of the variance function at infinity.
    pub fn rv_index(&self) -> f64 {
        match self {
            ScalarKernel::Bm => 1.0,
            ScalarKernel::Fbm { hurst } => 2.0 * hurst,
            ScalarKernel::Ou { .. } => 0.0,
            ScalarKernel::Scaled { inner, .. } => inner.rv_index(),
        }
    }
}

/// Vector-valued covariance model.
#[derive(Debug, Clone)]
pub enum CovModel {
    /// Independent coordinate processes sharing the scalar time axis.
    Independent { kernels: Vec<ScalarKernel> },
    /// `X(t) = S Y(t)` with independent coordinate processes `Y` and an
    /// invertible mixing matrix.
    Mixed { mixing: Mat, kernels: Vec<ScalarKernel> },
    /// Coordinate `i` evaluated at its own time axis `t_i`; the covariance
    /// is diagonal at every point of the product domain.
    ProductDomain { kernels: Vec<ScalarKernel> },
    /// Covariance matrices tabulated at explicit points. Carries no
    /// cross-time structure: distinct points are treated as independent in
    /// simulation.
    Tabulated {
        points: Vec<Vec<f64>>,
        sigmas: Vec<SymMatrix>,
    },
}

fn validate_kernels(kernels: &[ScalarKernel]) -> Result<()> {
    if kernels.is_empty() {
        return Err(Error::invalid("components must be non-empty"));
    }
    for k in kernels {
        k.validate()?;
    }
    Ok(())
}

impl CovModel {
    pub fn independent(kernels: Vec<ScalarKernel>) -> Result<Self> {
        validate_kernels(&kernels)?;
        Ok(CovModel::Independent { kernels })
    }

    pub fn mixed(mixing: Mat, kernels: Vec<ScalarKernel>) -> Result<Self> {
        validate_kernels(&kernels)?;
        if !mixing.is_square() || mixing.rows() != kernels.len() {
            return Err(Error::invalid("S must be square of size n"));
        }
        // invertibility probe
        mixing.inverse().map_err(|_| Error::invalid("S must be invertible"))?;
        Ok(CovModel::Mixed { mixing, kernels })
    }

    pub fn product(kernels: Vec<ScalarKernel>) -> Result<Self> {
        validate_kernels(&kernels)?;
        Ok(CovModel::ProductDomain { kernels })
    }

    pub fn tabulated(points: Vec<Vec<f64>>, sigmas: Vec<SymMatrix>) -> Result<Self> {
        if points.is_empty() || points.len() != sigmas.len() {
            return Err(Error::invalid("table needs one sigma per point"));
        }
        let m = points[0].len();
        let n = sigmas[0].dim();
        for (p, s) in points.iter().zip(&sigmas) {
            if p.len() != m || s.dim() != n {
                return Err(Error::invalid("inconsistent table dimensions"));
            }
            cholesky(s).map_err(|_| Error::DegenerateCovariance { point: p.clone() })?;
        }
        Ok(CovModel::Tabulated { points, sigmas })
    }

    /// Number of coordinate processes.
    pub fn n(&self) -> usize {
        match self {
            CovModel::Independent { kernels }
            | CovModel::Mixed { kernels, .. }
            | CovModel::ProductDomain { kernels } => kernels.len(),
            CovModel::Tabulated { sigmas, .. } => sigmas[0].dim(),
        }
    }

    /// Dimension of the domain points.
    pub fn domain_dim(&self) -> usize {
        match self {
            CovModel::Independent { .. } | CovModel::Mixed { .. } => 1,
            CovModel::ProductDomain { kernels } => kernels.len(),
            CovModel::Tabulated { points, .. } => points[0].len(),
        }
    }

    fn check_point(&self, t: &[f64]) -> Result<()> {
        if t.len() != self.domain_dim() {
            return Err(Error::invalid(format!(
                "point dimension {} does not match domain dimension {}",
                t.len(),
                self.domain_dim()
            )));
        }
        let needs_nonneg: bool = match self {
            CovModel::Independent { kernels }
            | CovModel::Mixed { kernels, .. }
            | CovModel::ProductDomain { kernels } => {
                kernels.iter().any(|k| k.requires_nonneg_time())
            }
            CovModel::Tabulated { .. } => false,
        };
        if needs_nonneg && t.iter().any(|&x| x < 0.0) {
            return Err(Error::invalid(format!(
                "kernels require nonnegative time, got {t:?}"
            )));
        }
        Ok(())
    }

    fn table_lookup(points: &[Vec<f64>], t: &[f64]) -> Result<usize> {
        points
            .iter()
            .position(|p| {
                p.iter()
                    .zip(t)
                    .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
            })
            .ok_or(Error::OutsideTable { point: t.to_vec() })
    }

    /// Covariance matrix of `X(t)`, verified positive definite.
    pub fn sigma_at(&self, t: &[f64]) -> Result<SymMatrix> {
        self.check_point(t)?;
        let sigma = match self {
            CovModel::Independent { kernels } => {
                SymMatrix::diag(&kernels.iter().map(|k| k.variance(t[0])).collect::<Vec<_>>())
            }
            CovModel::Mixed { mixing, kernels } => {
                let vars: Vec<f64> = kernels.iter().map(|k| k.variance(t[0])).collect();
                mixed_sandwich(mixing, &vars)
            }
            CovModel::ProductDomain { kernels } => SymMatrix::diag(
                &kernels
                    .iter()
                    .zip(t)
                    .map(|(k, &ti)| k.variance(ti))
                    .collect::<Vec<_>>(),
            ),
            CovModel::Tabulated { points, sigmas } => {
                sigmas[Self::table_lookup(points, t)?].clone()
            }
        };
        cholesky(&sigma).map_err(|_| Error::DegenerateCovariance { point: t.to_vec() })?;
        Ok(sigma)
    }

    /// Cross-covariance `Cov(X(s), X(t))` as an `n x n` block.
    pub fn cross_cov(&self, s: &[f64], t: &[f64]) -> Result<Mat> {
        self.check_point(s)?;
        self.check_point(t)?;
        Ok(match self {
            CovModel::Independent { kernels } => {
                let d: Vec<f64> = kernels.iter().map(|k| k.cov(s[0], t[0])).collect();
                Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 })
            }
            CovModel::Mixed { mixing, kernels } => {
                let d: Vec<f64> = kernels.iter().map(|k| k.cov(s[0], t[0])).collect();
                Mat::from_sym(&mixed_sandwich(mixing, &d))
            }
            CovModel::ProductDomain { kernels } => {
                let d: Vec<f64> = kernels
                    .iter()
                    .enumerate()
                    .map(|(i, k)| k.cov(s[i], t[i]))
                    .collect();
                Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 })
            }
            CovModel::Tabulated { points, sigmas } => {
                let is = Self::table_lookup(points, s)?;
                let it = Self::table_lookup(points, t)?;
                if is == it {
                    Mat::from_sym(&sigmas[is])
                } else {
                    // no tabulated cross-time structure
                    let n = sigmas[0].dim();
                    Mat::from_fn(n, n, |_, _| 0.0)
                }
            }
        })
    }

    /// Checks positive definiteness of the covariance at every grid point.
    pub fn validate_on(&self, grid: &DomainGrid) -> Result<()> {
        for t in grid.points() {
            self.sigma_at(t)?;
        }
        Ok(())
    }

    pub fn is_degenerate_at(&self, t: &[f64]) -> bool {
        self.sigma_at(t).is_err()
    }
}

/// `S diag(vars) S'`.
fn mixed_sandwich(s: &Mat, vars: &[f64]) -> SymMatrix {
    let n = vars.len();
    SymMatrix::from_fn(n, |i, j| {
        (0..n).map(|k| s.get(i, k) * vars[k] * s.get(j, k)).sum()
    })
}

/// Which time axis a coordinate's drift reads from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisMode {
    /// All coordinates share the scalar time `t[0]`.
    SharedTime,
    /// Coordinate `i` reads `t[i]` (product domains).
    PerCoordinate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriftForm {
    Zero,
    /// `d_i(t) = t` on the coordinate's axis.
    LinearUnit,
    Affine { slope: Vec<f64>, intercept: Vec<f64> },
    /// Drift vectors tabulated at explicit points.
    Tabulated { points: Vec<Vec<f64>>, values: Vec<Vec<f64>> },
}

/// Drift function `d(t)` with the axis convention for product domains.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftModel {
    n: usize,
    axis: AxisMode,
    form: DriftForm,
}

impl DriftModel {
    pub fn zero(n: usize) -> Self {
        DriftModel { n, axis: AxisMode::SharedTime, form: DriftForm::Zero }
    }

    pub fn linear_unit(n: usize) -> Self {
        DriftModel { n, axis: AxisMode::SharedTime, form: DriftForm::LinearUnit }
    }

    pub fn affine(slope: Vec<f64>, intercept: Vec<f64>) -> Result<Self> {
        if slope.len() != intercept.len() || slope.is_empty() {
            return Err(Error::invalid("slope and intercept must have equal nonzero length"));
        }
        if slope.iter().chain(intercept.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("slope and intercept must be finite"));
        }
        Ok(DriftModel {
            n: slope.len(),
            axis: AxisMode::SharedTime,
            form: DriftForm::Affine { slope, intercept },
        })
    }

    pub fn tabulated(points: Vec<Vec<f64>>, values: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() || points.len() != values.len() {
            return Err(Error::invalid("drift table needs one value per point"));
        }
        let n = values[0].len();
        if values.iter().any(|v| v.len() != n) {
            return Err(Error::invalid("drift table rows have inconsistent length"));
        }
        Ok(DriftModel { n, axis: AxisMode::SharedTime, form: DriftForm::Tabulated { points, values } })
    }

    pub fn with_axis(mut self, axis: AxisMode) -> Self {
        self.axis = axis;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn axis(&self) -> AxisMode {
        self.axis
    }

    fn axis_value(&self, i: usize, t: &[f64]) -> f64 {
        match self.axis {
            AxisMode::SharedTime => t[0],
            AxisMode::PerCoordinate => t[i],
        }
    }

    pub fn drift_at(&self, t: &[f64]) -> Result<Vec<f64>> {
        match &self.form {
            DriftForm::Zero => Ok(vec![0.0; self.n]),
            DriftForm::LinearUnit => Ok((0..self.n).map(|i| self.axis_value(i, t)).collect()),
            DriftForm::Affine { slope, intercept } => Ok((0..self.n)
                .map(|i| slope[i] * self.axis_value(i, t) + intercept[i])
                .collect()),
            DriftForm::Tabulated { points, values } => {
                let idx = CovModel::table_lookup(points, t)?;
                Ok(values[idx].clone())
            }
        }
    }

    /// Componentwise infima of the drift over the grid.
    pub fn infima_on(&self, grid: &DomainGrid) -> Result<Vec<f64>> {
        let mut ell = vec![f64::INFINITY; self.n];
        for t in grid.points() {
            let d = self.drift_at(t)?;
            for (e, di) in ell.iter_mut().zip(d) {
                *e = e.min(di);
            }
        }
        Ok(ell)
    }
}

/// Threshold floor `u0 = -min_i(ell_i / q_i)`: for `u > u0` the shifted
/// thresholds `u q + d(t)` stay positive on the grid.
pub fn threshold_u0(drift: &DriftModel, q: &[f64], grid: &DomainGrid) -> Result<f64> {
    if q.len() != drift.n() {
        return Err(Error::invalid("q must have one entry per coordinate"));
    }
    if q.iter().any(|&qi| qi.is_nan() || qi <= 0.0) {
        return Err(Error::invalid("q must be strictly positive"));
    }
    let ell = drift.infima_on(grid)?;
    let min_ratio = ell
        .iter()
        .zip(q)
        .map(|(l, qi)| l / qi)
        .fold(f64::INFINITY, f64::min);
    Ok(-min_ratio)
}

/// Combines scalar (kernel, drift) pairs into a model over the product
/// domain `T_1 x ... x T_n`: coordinate `i` depends only on `t_i`.
///
/// Zero, linear-unit and affine drifts may be mixed freely; they merge into
/// one per-coordinate affine drift.
pub fn product_model(parts: &[(ScalarKernel, DriftForm)]) -> Result<(CovModel, DriftModel)> {
    if parts.is_empty() {
        return Err(Error::invalid("product model needs at least one coordinate"));
    }
    let kernels: Vec<ScalarKernel> = parts.iter().map(|(k, _)| k.clone()).collect();
    let mut slope = Vec::with_capacity(parts.len());
    let mut intercept = Vec::with_capacity(parts.len());
    for (i, (_, form)) in parts.iter().enumerate() {
        match form {
            DriftForm::Zero => {
                slope.push(0.0);
                intercept.push(0.0);
            }
            DriftForm::LinearUnit => {
                slope.push(1.0);
                intercept.push(0.0);
            }
            DriftForm::Affine { slope: s, intercept: c } => {
                if s.len() != 1 {
                    return Err(Error::invalid(format!(
                        "coordinate {i}: product drift parts must be scalar"
                    )));
                }
                slope.push(s[0]);
                intercept.push(c[0]);
            }
            DriftForm::Tabulated { .. } => {
                return Err(Error::invalid(
                    "tabulated drifts cannot be combined into a product model",
                ));
            }
        }
    }
    let model = CovModel::product(kernels)?;
    let drift = DriftModel::affine(slope, intercept)?.with_axis(AxisMode::PerCoordinate);
    Ok((model, drift))
}

/// Finite evaluation domain: an ordered list of distinct points.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid {
    points: Vec<Vec<f64>>,
    description: String,
}

impl DomainGrid {
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_description(points, "explicit point list".to_string())
    }

    pub fn with_description(points: Vec<Vec<f64>>, description: String) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("grid must be non-empty"));
        }
        let m = points[0].len();
        if m == 0 {
            return Err(Error::invalid("grid points must have dimension >= 1"));
        }
        for p in &points {
            if p.len() != m {
                return Err(Error::invalid("grid points have inconsistent dimensions"));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("grid points must be finite"));
            }
        }
        let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("grid points must be distinct"));
        }
        Ok(DomainGrid { points, description })
    }

    /// `count` points spaced logarithmically on `[lo, hi]`, one-dimensional.
    pub fn log_space_1d(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo <= 0.0 || hi <= lo {
            return Err(Error::invalid("log grid requires 0 < lo < hi"));
        }
        if count < 2 {
            return Err(Error::invalid("log grid requires at least 2 points"));
        }
        let ratio = (hi / lo).ln();
        let points = (0..count)
            .map(|i| vec![lo * (ratio * i as f64 / (count - 1) as f64).exp()])
            .collect();
        Self::with_description(
            points,
            format!("log-spaced [{lo}, {hi}] with {count} points"),
        )
    }

    pub fn linear_space_1d(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || hi <= lo {
            return Err(Error::invalid("linear grid requires lo < hi"));
        }
        if count < 2 {
            return Err(Error::invalid("linear grid requires at least 2 points"));
        }
        let step = (hi - lo) / (count - 1) as f64;
        let points = (0..count).map(|i| vec![lo + step * i as f64]).collect();
        Self::with_description(
            points,
            format!("linearly spaced [{lo}, {hi}] with {count} points"),
        )
    }

    /// Cartesian product of per-axis 1-D grids, in lexicographic order.
    pub fn product_of(axes: &[Vec<f64>]) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
            return Err(Error::invalid("product grid requires non-empty axes"));
        }
        let mut points: Vec<Vec<f64>> = vec![vec![]];
        for axis in axes {
            let mut next = Vec::with_capacity(points.len() * axis.len());
            for p in &points {
                for &v in axis {
                    let mut np = p.clone();
                    np.push(v);
                    next.push(np);
                }
            }
            points = next;
        }
        Self::with_description(
            points,
            format!("product of {} axes", axes.len()),
        )
    }

    pub fn singleton(point: Vec<f64>) -> Result<Self> {
        Self::with_description(vec![point], "single point".to_string())
    }

    /// Drops points where the model's covariance is degenerate (e.g. the
    /// time origin for Brownian kernels). Fails if nothing remains.
    pub fn filtered_for(&self, model: &CovModel) -> Result<Self> {
        let kept: Vec<Vec<f64>> = self
            .points
            .iter()
            .filter(|t| !model.is_degenerate_at(t))
            .cloned()
            .collect();
        if kept.is_empty() {
            return Err(Error::invalid(
                "grid has no points with a positive definite covariance",
            ));
        }
        let dropped = self.points.len() - kept.len();
        let description = if dropped > 0 {
            format!("{} ({} degenerate points dropped)", self.description, dropped)
        } else {
            self.description.clone()
        };
        Ok(DomainGrid { points: kept, description })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Sorted scalar values for one-dimensional grids.
    pub fn axis_values_1d(&self) -> Option<Vec<f64>> {
        if self.dim() != 1 {
            return None;
        }
        let mut v: Vec<f64> = self.points.iter().map(|p| p[0]).collect();
        v.sort_by(f64::total_cmp);
        Some(v)
    }
}
