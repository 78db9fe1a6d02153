//! Joint Gaussian simulation over grids and rare-event estimation.
//!
//! Paths are sampled exactly from the joint covariance of the model at the
//! grid points (Cholesky of the block matrix of cross-covariances). Two
//! estimators are provided for the simultaneous exceedance probability:
//! crude counting and mean-shift importance sampling tilted through the most
//! likely point of the decay-rate computation.
//!
//! Determinism contract: the sample stream is partitioned into fixed-size
//! blocks; block `k` draws from a generator seeded with `mix(seed, k)`, and
//! block results are merged in block order. The merged estimate is therefore
//! bit-identical across runs and across worker counts (`GPX_WORKERS`
//! overrides the default of available parallelism).

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decay::{rate_over_domain, RateOptions};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, solve_spd, CholeskyFactor, SymMatrix};
use crate::models::{threshold_u0, CovModel, DomainGrid, DriftModel};

/// SplitMix64 finalizer; the basis of the block seeding scheme.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed of block `k` under master seed `seed`.
pub fn block_seed(seed: u64, k: u64) -> u64 {
    mix64(seed ^ mix64(k.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Crude,
    MeanShift,
}

/// Sampling options shared by the estimators.
#[derive(Debug, Clone)]
pub struct McOptions {
    pub samples: u64,
    pub seed: u64,
    /// Samples per replication block; part of the deterministic stream
    /// layout, not a tuning knob that may silently change.
    pub block_size: u64,
    /// Worker threads; `None` reads `GPX_WORKERS`, else available
    /// parallelism.
    pub workers: Option<usize>,
    /// Cap on the joint covariance dimension `n * |grid|`.
    pub joint_dim_cap: usize,
}

impl McOptions {
    pub fn new(samples: u64, seed: u64) -> Self {
        McOptions {
            samples,
            seed,
            block_size: 16_384,
            workers: None,
            joint_dim_cap: 4_000,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }
}

fn resolve_workers(opt: Option<usize>) -> usize {
    opt.or_else(|| {
        std::env::var("GPX_WORKERS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
    .max(1)
}

/// Probability estimate with its 95% confidence half-width.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub half_width: f64,
    pub samples: u64,
    pub kind: EstimatorKind,
    pub seed: u64,
    /// Sum of indicator weights (hit count for the crude estimator).
    pub sum_w: f64,
    /// Sum of squared indicator weights.
    pub sum_w2: f64,
    /// Diagonal jitter added to make the joint covariance factorizable.
    pub jitter: f64,
}

const Z95: f64 = 1.959_963_984_540_054;

impl McEstimate {
    fn from_moments(
        kind: EstimatorKind,
        samples: u64,
        seed: u64,
        sum_w: f64,
        sum_w2: f64,
        jitter: f64,
    ) -> Self {
        let n = samples as f64;
        let p_hat = if samples > 0 { sum_w / n } else { 0.0 };
        let half_width = if samples > 1 {
            match kind {
                // binomial-normal width, clipped so the interval stays a
                // probability interval even at tiny hit counts
                EstimatorKind::Crude => (Z95 * (p_hat * (1.0 - p_hat) / n).sqrt())
                    .min(p_hat)
                    .min(1.0 - p_hat)
                    .max(0.0),
                EstimatorKind::MeanShift => {
                    let var = ((sum_w2 - sum_w * sum_w / n) / (n - 1.0)).max(0.0);
                    Z95 * (var / n).sqrt()
                }
            }
        } else {
            0.0
        };
        McEstimate {
            p_hat,
            half_width,
            samples,
            kind,
            seed,
            sum_w,
            sum_w2,
            jitter,
        }
    }

    /// Sample-weighted combination of estimates from disjoint seeds.
    pub fn merge(parts: &[McEstimate]) -> Result<McEstimate> {
        let Some(first) = parts.first() else {
            return Err(Error::invalid("cannot merge an empty set of estimates"));
        };
        if parts.iter().any(|p| p.kind != first.kind) {
            return Err(Error::invalid("cannot merge estimates of different kinds"));
        }
        let samples = parts.iter().map(|p| p.samples).sum();
        let sum_w = parts.iter().map(|p| p.sum_w).sum();
        let sum_w2 = parts.iter().map(|p| p.sum_w2).sum();
        let jitter = parts.iter().fold(0.0f64, |m, p| m.max(p.jitter));
        Ok(McEstimate::from_moments(
            first.kind, samples, first.seed, sum_w, sum_w2, jitter,
        ))
    }
}

/// Joint covariance of the model restricted to the grid, with the diagonal
/// jitter that was needed to make it factorizable.
#[derive(Debug, Clone)]
pub struct JointCovariance {
    pub matrix: SymMatrix,
    pub jitter: f64,
}

/// Assembles the `(n |grid|) x (n |grid|)` matrix with blocks
/// `Cov(X(t_a), X(t_b))`, escalating a diagonal jitter from
/// `1e-10 * trace / dim` until the Cholesky factorization succeeds.
pub fn build_joint_covariance(
    model: &CovModel,
    grid: &DomainGrid,
    cap: usize,
) -> Result<JointCovariance> {
    let n = model.n();
    let g = grid.len();
    let size = n * g;
    if size > cap {
        return Err(Error::DimensionCap { size, cap });
    }
    let mut data = vec![0.0; size * size];
    for a in 0..g {
        for b in a..g {
            let block = model.cross_cov(&grid.points()[a], &grid.points()[b])?;
            for i in 0..n {
                for j in 0..n {
                    let v = block.get(i, j);
                    data[(a * n + i) * size + (b * n + j)] = v;
                    data[(b * n + j) * size + (a * n + i)] = v;
                }
            }
        }
    }
    // cross blocks of every built-in model are symmetric, but mirror the
    // diagonal blocks explicitly in case a tabulated block is not exact
    for a in 0..g {
        for i in 0..n {
            for j in 0..n {
                let lo = 0.5
                    * (data[(a * n + i) * size + (a * n + j)]
                        + data[(a * n + j) * size + (a * n + i)]);
                data[(a * n + i) * size + (a * n + j)] = lo;
                data[(a * n + j) * size + (a * n + i)] = lo;
            }
        }
    }
    let mut matrix = SymMatrix::from_raw_symmetric(size, data);
    if cholesky(&matrix).is_ok() {
        return Ok(JointCovariance { matrix, jitter: 0.0 });
    }
    let base = 1e-10 * matrix.trace() / size as f64;
    let mut added = 0.0;
    for level in 0..7 {
        let jitter = base * 10f64.powi(level);
        matrix.add_diag(jitter - added);
        added = jitter;
        if cholesky(&matrix).is_ok() {
            return Ok(JointCovariance { matrix, jitter });
        }
    }
    Err(Error::NotPositiveDefinite { pivot: 0 })
}

/// Flattened exceedance thresholds `u q_i + d_i(t_a)` in row layout `a*n+i`.
fn exceedance_thresholds(
    drift: &DriftModel,
    q: &[f64],
    u: f64,
    grid: &DomainGrid,
) -> Result<Vec<f64>> {
    let n = q.len();
    let mut thr = Vec::with_capacity(n * grid.len());
    for t in grid.points() {
        let d = drift.drift_at(t)?;
        for i in 0..n {
            thr.push(u * q[i] + d[i]);
        }
    }
    Ok(thr)
}

/// True when some grid point has every coordinate above its threshold.
/// Row `r`'s value is `shift[r] + <L_row(r), z[..=r]>`; rows of a point that
/// already failed are skipped.
fn path_exceeds(
    chol: &CholeskyFactor,
    shift: Option<&[f64]>,
    z: &[f64],
    thr: &[f64],
    n: usize,
) -> bool {
    let npoints = thr.len() / n;
    for a in 0..npoints {
        let mut all = true;
        for i in 0..n {
            let r = a * n + i;
            let mut x = dot(chol.lower_row(r), &z[..=r]);
            if let Some(s) = shift {
                x += s[r];
            }
            if x <= thr[r] {
                all = false;
                break;
            }
        }
        if all {
            return true;
        }
    }
    false
}

/// Runs `nblocks` independent block computations on `workers` threads and
/// returns the results in block order.
fn run_blocks<T, F>(nblocks: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    if workers <= 1 || nblocks <= 1 {
        return (0..nblocks).map(f).collect();
    }
    let next = AtomicU64::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..nblocks).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(nblocks as usize) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= nblocks {
                    break;
                }
                let out = f(k);
                *slots[k as usize].lock().expect("block slot poisoned") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .expect("block slot poisoned")
                .expect("block not computed")
        })
        .collect()
}

fn block_sizes(samples: u64, block_size: u64) -> (u64, u64) {
    let bs = block_size.max(1);
    (samples.div_ceil(bs), bs)
}

/// Crude Monte Carlo: exact joint sampling and indicator counting with a
/// binomial-normal confidence interval.
pub fn estimate_crude(
    model: &CovModel,
    drift: &DriftModel,
    q: &[f64],
    u: f64,
    grid: &DomainGrid,
    opts: &McOptions,
) -> Result<McEstimate> {
    if opts.samples == 0 {
        return Err(Error::invalid("samples must be >= 1"));
    }
    let u0 = threshold_u0(drift, q, grid)?;
    if u <= u0 {
        return Err(Error::ThresholdNotExceeded { u, u0 });
    }
    let joint = build_joint_covariance(model, grid, opts.joint_dim_cap)?;
    let chol = cholesky(&joint.matrix)?;
    let thr = exceedance_thresholds(drift, q, u, grid)?;
    let n = model.n();
    let size = thr.len();
    let (nblocks, bs) = block_sizes(opts.samples, opts.block_size);
    let workers = resolve_workers(opts.workers);
    let hits: Vec<u64> = run_blocks(nblocks, workers, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(block_seed(opts.seed, k));
        let count = if k == nblocks - 1 { opts.samples - k * bs } else { bs };
        let mut z = vec![0.0f64; size];
        let mut hits = 0u64;
        for _ in 0..count {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            if path_exceeds(&chol, None, &z, &thr, n) {
                hits += 1;
            }
        }
        hits
    });
    let total: u64 = hits.iter().sum();
    Ok(McEstimate::from_moments(
        EstimatorKind::Crude,
        opts.samples,
        opts.seed,
        total as f64,
        total as f64,
        joint.jitter,
    ))
}

/// Mean-shift importance sampling.
///
/// The proposal shifts the joint mean by the conditional-expectation path
/// through the most likely point: at the rate argmin `t*` with quadrant
/// optimizer `v*`, the shift is
/// `h(t_a) = Cov(X(t_a), X(t*)) Sigma_{t*}^{-1} (v* + d(t*))`,
/// so the marginal at `t*` centers exactly on the optimizer. Unbiasedness
/// comes from the Gaussian likelihood ratio
/// `exp(-<L^{-1} h, z> - |L^{-1} h|^2 / 2)` attached to each hit.
pub fn estimate_is(
    model: &CovModel,
    drift: &DriftModel,
    q: &[f64],
    u: f64,
    grid: &DomainGrid,
    opts: &McOptions,
) -> Result<McEstimate> {
    if opts.samples == 0 {
        return Err(Error::invalid("samples must be >= 1"));
    }
    let rate = rate_over_domain(model, drift, q, u, grid, &RateOptions::default())?;
    let t_star = rate.argmin.clone();
    let sigma_star = model.sigma_at(&t_star)?;
    let d_star = drift.drift_at(&t_star)?;
    let y_star: Vec<f64> = rate
        .qp
        .v_star
        .iter()
        .zip(&d_star)
        .map(|(v, d)| v + d)
        .collect();
    let gamma = solve_spd(&sigma_star, &y_star)?;

    let joint = build_joint_covariance(model, grid, opts.joint_dim_cap)?;
    let chol = cholesky(&joint.matrix)?;
    let thr = exceedance_thresholds(drift, q, u, grid)?;
    let n = model.n();
    let size = thr.len();
    let mut shift = Vec::with_capacity(size);
    for t in grid.points() {
        let cc = model.cross_cov(t, &t_star)?;
        for i in 0..n {
            shift.push(dot(cc.row(i), &gamma));
        }
    }
    let a_vec = chol.forward(&shift);
    let half_norm2 = 0.5 * dot(&a_vec, &a_vec);

    let (nblocks, bs) = block_sizes(opts.samples, opts.block_size);
    let workers = resolve_workers(opts.workers);
    let sums: Vec<(f64, f64)> = run_blocks(nblocks, workers, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(block_seed(opts.seed, k));
        let count = if k == nblocks - 1 { opts.samples - k * bs } else { bs };
        let mut z = vec![0.0f64; size];
        let (mut sw, mut sw2) = (0.0f64, 0.0f64);
        for _ in 0..count {
            let mut az = 0.0;
            for (zi, ai) in z.iter_mut().zip(&a_vec) {
                let draw: f64 = rng.sample(StandardNormal);
                *zi = draw;
                az += ai * draw;
            }
            if path_exceeds(&chol, Some(&shift), &z, &thr, n) {
                let w = (-az - half_norm2).exp();
                sw += w;
                sw2 += w * w;
            }
        }
        (sw, sw2)
    });
    let (sum_w, sum_w2) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    Ok(McEstimate::from_moments(
        EstimatorKind::MeanShift,
        opts.samples,
        opts.seed,
        sum_w,
        sum_w2,
        joint.jitter,
    ))
}

pub fn estimate(
    model: &CovModel,
    drift: &DriftModel,
    q: &[f64],
    u: f64,
    grid: &DomainGrid,
    opts: &McOptions,
    kind: EstimatorKind,
) -> Result<McEstimate> {
    match kind {
        EstimatorKind::Crude => estimate_crude(model, drift, q, u, grid, opts),
        EstimatorKind::MeanShift => estimate_is(model, drift, q, u, grid, opts),
    }
}

/// Grid policy for a threshold sweep.
#[derive(Debug, Clone)]
pub enum SweepGrid {
    /// One grid shared by every threshold level.
    Fixed(DomainGrid),
    /// Per-level log grid `[t_min, factor * t_star(u)]`, truncated at a
    /// multiple of the rate argmin (the event concentrates there, and the
    /// estimate on a subset can only shrink the probability).
    LogAuto {
        t_min: f64,
        points: usize,
        truncation_factor: f64,
    },
}

/// One line of the asymptotics experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub u: f64,
    pub p_hat: f64,
    /// Absent when no exceedance was observed.
    pub neg_log_p: Option<f64>,
    pub m_of_u_t: f64,
    /// `neg_log_p / m_of_u_t`; the quantity that approaches 1 from above.
    pub ratio: Option<f64>,
    pub half_width: f64,
    pub samples: u64,
}

fn auto_grid(
    model: &CovModel,
    drift: &DriftModel,
    q: &[f64],
    u: f64,
    t_min: f64,
    points: usize,
    factor: f64,
) -> Result<DomainGrid> {
    if model.domain_dim() != 1 {
        return Err(Error::invalid(
            "automatic sweep grids require a one-dimensional domain",
        ));
    }
    let probe_hi = (1000.0 * (u.abs() + 1.0)).max(t_min * 1e4);
    let probe = DomainGrid::log_space_1d(t_min, probe_hi, 600)?.filtered_for(model)?;
    let rate = rate_over_domain(model, drift, q, u, &probe, &RateOptions::default())?;
    let hi = (factor * rate.argmin[0]).max(t_min * 10.0);
    DomainGrid::log_space_1d(t_min, hi, points.max(2))?.filtered_for(model)
}

/// Estimates the exceedance probability at each threshold level and reports
/// the ratio of empirical to computed decay.
pub fn sweep(
    model: &CovModel,
    drift: &DriftModel,
    q: &[f64],
    u_list: &[f64],
    grid: &SweepGrid,
    opts: &McOptions,
    kind: EstimatorKind,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(u_list.len());
    for (idx, &u) in u_list.iter().enumerate() {
        let grid_u = match grid {
            SweepGrid::Fixed(g) => g.clone(),
            SweepGrid::LogAuto {
                t_min,
                points,
                truncation_factor,
            } => auto_grid(model, drift, q, u, *t_min, *points, *truncation_factor)?,
        };
        let rate = rate_over_domain(model, drift, q, u, &grid_u, &RateOptions::default())?;
        let mut level_opts = opts.clone();
        // each level draws from its own sub-stream of the master seed
        level_opts.seed = block_seed(opts.seed, 1_000_003 + idx as u64);
        let est = estimate(model, drift, q, u, &grid_u, &level_opts, kind)?;
        let neg_log_p = (est.p_hat > 0.0).then(|| -est.p_hat.ln());
        let ratio = neg_log_p.map(|nl| nl / rate.m_of_u_t);
        rows.push(SweepRow {
            u,
            p_hat: est.p_hat,
            neg_log_p,
            m_of_u_t: rate.m_of_u_t,
            ratio,
            half_width: est.half_width,
            samples: est.samples,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ScalarKernel;

    // standard normal upper tails, frozen from high-precision erfc
    const PHIBAR_1_6449: f64 = 0.0499952174683463;
    const PHIBAR_4: f64 = 3.1671241833119921e-5;
    const PHIBAR_TWO_1_2816: f64 = 0.009_998_300_091_783_372; // product of two tails

    fn bm() -> CovModel {
        CovModel::independent(vec![ScalarKernel::Bm]).unwrap()
    }

    #[test]
    fn joint_covariance_examples() {
        let grid = DomainGrid::singleton(vec![2.0]).unwrap();
        let j = build_joint_covariance(&bm(), &grid, 4000).unwrap();
        assert_eq!(j.matrix, bm().sigma_at(&[2.0]).unwrap());
        assert_eq!(j.jitter, 0.0);

        let grid = DomainGrid::from_points(vec![vec![1.0], vec![2.0]]).unwrap();
        let j = build_joint_covariance(&bm(), &grid, 4000).unwrap();
        let want = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(j.matrix, want);

        let pair = CovModel::independent(vec![ScalarKernel::Bm, ScalarKernel::Bm]).unwrap();
        let grid = DomainGrid::singleton(vec![1.0]).unwrap();
        let j = build_joint_covariance(&pair, &grid, 4000).unwrap();
        assert_eq!(j.matrix, SymMatrix::identity(2));
    }

    #[test]
    fn joint_covariance_cap() {
        let grid = DomainGrid::linear_space_1d(1.0, 2.0, 11).unwrap();
        assert!(matches!(
            build_joint_covariance(&bm(), &grid, 10),
            Err(Error::DimensionCap { size: 11, cap: 10 })
        ));
    }

    #[test]
    fn crude_unreachable_event() {
        let grid = DomainGrid::singleton(vec![1.0]).unwrap();
        let est = estimate_crude(
            &bm(),
            &DriftModel::zero(1),
            &[1.0],
            12.0, // rate 72, far beyond 1e4 samples
            &grid,
            &McOptions::new(10_000, 5),
        )
        .unwrap();
        assert_eq!(est.p_hat, 0.0);
        assert_eq!(est.half_width, 0.0);
    }

    #[test]
    fn crude_scalar_quantile() {
        let grid = DomainGrid::singleton(vec![1.0]).unwrap();
        let est = estimate_crude(
            &bm(),
            &DriftModel::zero(1),
            &[1.0],
            1.6449,
            &grid,
            &McOptions::new(200_000, 42),
        )
        .unwrap();
        assert!(
            (est.p_hat - PHIBAR_1_6449).abs() < 3.0 * est.half_width,
            "p_hat {} truth {}",
            est.p_hat,
            PHIBAR_1_6449
        );
    }

    #[test]
    fn crude_product_of_tails() {
        let pair = CovModel::independent(vec![ScalarKernel::Bm, ScalarKernel::Bm]).unwrap();
        let grid = DomainGrid::singleton(vec![1.0]).unwrap();
        let est = estimate_crude(
            &pair,
            &DriftModel::zero(2),
            &[1.2816, 1.2816],
            1.0,
            &grid,
            &McOptions::new(400_000, 171),
        )
        .unwrap();
        assert!(
            (est.p_hat - PHIBAR_TWO_1_2816).abs() < 3.0 * est.half_width,
            "p_hat {} truth {}",
            est.p_hat,
            PHIBAR_TWO_1_2816
        );
    }

    #[test]
    fn is_scalar_tail_beats_crude() {
        let grid = DomainGrid::singleton(vec![1.0]).unwrap();
        let opts = McOptions::new(100_000, 7);
        let is = estimate_is(&bm(), &DriftModel::zero(1), &[1.0], 4.0, &grid, &opts).unwrap();
        assert!(
            (is.p_hat - PHIBAR_4).abs() < 3.0 * is.half_width,
            "p_hat {} truth {}",
            is.p_hat,
            PHIBAR_4
        );
        let crude =
            estimate_crude(&bm(), &DriftModel::zero(1), &[1.0], 4.0, &grid, &opts).unwrap();
        let rel_is = is.half_width / is.p_hat;
        if crude.p_hat > 0.0 {
            assert!(rel_is * 5.0 <= crude.half_width / crude.p_hat);
        }
    }

    #[test]
    fn is_degenerate_tilt_matches_crude() {
        // at a modest level the tilt is mild and both estimators agree
        let grid = DomainGrid::singleton(vec![1.0]).unwrap();
        let opts = McOptions::new(150_000, 99);
        let crude =
            estimate_crude(&bm(), &DriftModel::zero(1), &[1.0], 0.5, &grid, &opts).unwrap();
        let is = estimate_is(&bm(), &DriftModel::zero(1), &[1.0], 0.5, &grid, &opts).unwrap();
        let joint = 3.0 * (crude.half_width + is.half_width);
        assert!(
            (crude.p_hat - is.p_hat).abs() < joint,
            "crude {} vs is {}",
            crude.p_hat,
            is.p_hat
        );
    }

    #[test]
    fn is_consistent_with_crude_on_drift_grid() {
        let grid = DomainGrid::log_space_1d(0.1, 12.0, 100).unwrap();
        let drift = DriftModel::linear_unit(1);
        let crude = estimate_crude(
            &bm(),
            &drift,
            &[1.0],
            2.0,
            &grid,
            &McOptions::new(400_000, 2024),
        )
        .unwrap();
        let is = estimate_is(
            &bm(),
            &drift,
            &[1.0],
            2.0,
            &grid,
            &McOptions::new(40_000, 2025),
        )
        .unwrap();
        let joint = 3.0 * (crude.half_width + is.half_width);
        assert!(
            (crude.p_hat - is.p_hat).abs() < joint,
            "crude {} vs is {} (joint ci {})",
            crude.p_hat,
            is.p_hat,
            joint
        );
    }

    #[test]
    fn seeded_determinism_across_workers() {
        let grid = DomainGrid::log_space_1d(0.2, 8.0, 40).unwrap();
        let drift = DriftModel::linear_unit(1);
        let base = McOptions::new(30_000, 31).with_workers(1);
        let a = estimate_crude(&bm(), &drift, &[1.0], 2.0, &grid, &base).unwrap();
        let b = estimate_crude(&bm(), &drift, &[1.0], 2.0, &grid, &base).unwrap();
        assert_eq!(a.p_hat.to_bits(), b.p_hat.to_bits());
        let par = estimate_crude(
            &bm(),
            &drift,
            &[1.0],
            2.0,
            &grid,
            &McOptions::new(30_000, 31).with_workers(4),
        )
        .unwrap();
        assert_eq!(a.p_hat.to_bits(), par.p_hat.to_bits());
        assert_eq!(a.half_width.to_bits(), par.half_width.to_bits());

        let ia = estimate_is(&bm(), &drift, &[1.0], 2.0, &grid, &base).unwrap();
        let ib = estimate_is(
            &bm(),
            &drift,
            &[1.0],
            2.0,
            &grid,
            &McOptions::new(30_000, 31).with_workers(3),
        )
        .unwrap();
        assert_eq!(ia.p_hat.to_bits(), ib.p_hat.to_bits());
    }

    #[test]
    fn crude_interval_stays_in_unit_range() {
        // tiny hit counts (around one hit in two thousand samples) must not
        // push the interval below zero
        let grid = DomainGrid::singleton(vec![1.0]).unwrap();
        for seed in 0..8 {
            let est = estimate_crude(
                &bm(),
                &DriftModel::zero(1),
                &[1.0],
                3.5,
                &grid,
                &McOptions::new(2_000, seed),
            )
            .unwrap();
            assert!(est.p_hat - est.half_width >= 0.0);
            assert!(est.p_hat + est.half_width <= 1.0);
        }
    }

    #[test]
    fn is_unbiased_across_replications() {
        // scalar instance with known tail: the truth must fall inside three
        // half-widths in at least 95 of 100 seeded replications
        let grid = DomainGrid::singleton(vec![1.0]).unwrap();
        let truth = 1.3498980316300945e-3; // upper tail at 3
        let mut covered = 0;
        for seed in 0..100 {
            let est = estimate_is(
                &bm(),
                &DriftModel::zero(1),
                &[1.0],
                3.0,
                &grid,
                &McOptions::new(2_000, seed),
            )
            .unwrap();
            if (est.p_hat - truth).abs() < 3.0 * est.half_width {
                covered += 1;
            }
        }
        assert!(covered >= 95, "covered only {covered}/100");
    }

    #[test]
    fn merge_shrinks_interval_like_sqrt_k() {
        let grid = DomainGrid::singleton(vec![1.0]).unwrap();
        let single = estimate_crude(
            &bm(),
            &DriftModel::zero(1),
            &[1.0],
            1.6449,
            &grid,
            &McOptions::new(50_000, 1),
        )
        .unwrap();
        let k = 4;
        let parts: Vec<McEstimate> = (0..k)
            .map(|s| {
                estimate_crude(
                    &bm(),
                    &DriftModel::zero(1),
                    &[1.0],
                    1.6449,
                    &grid,
                    &McOptions::new(50_000, 1000 + s),
                )
                .unwrap()
            })
            .collect();
        let merged = McEstimate::merge(&parts).unwrap();
        assert_eq!(merged.samples, 200_000);
        let expected = single.half_width / (k as f64).sqrt();
        assert!(
            merged.half_width < expected * 1.25 && merged.half_width > expected * 0.75,
            "merged {} vs expected {}",
            merged.half_width,
            expected
        );
    }

    #[test]
    fn sweep_scalar_singleton_ratio_decreases_toward_one() {
        // -log(tail(u)) / (u^2/2) = 1 + (2 log u + O(1))/u^2, decreasing
        let grid = SweepGrid::Fixed(DomainGrid::singleton(vec![1.0]).unwrap());
        let rows = sweep(
            &bm(),
            &DriftModel::zero(1),
            &[1.0],
            &[2.0, 3.0, 4.0],
            &grid,
            &McOptions::new(200_000, 5),
            EstimatorKind::MeanShift,
        )
        .unwrap();
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio.unwrap()).collect();
        for w in ratios.windows(2) {
            assert!(w[1] < w[0], "ratios not decreasing: {ratios:?}");
        }
        for r in &ratios {
            assert!(*r > 1.0);
        }
    }

    #[test]
    fn sweep_drifted_bm_ratio_trend() {
        // -log p over the grid against the computed rate: inside
        // [0.85, 1.35] everywhere; strictly decreasing where the estimator
        // noise is well below the gap, trendwise at the largest level
        let grid = SweepGrid::Fixed(DomainGrid::log_space_1d(0.1, 20.0, 300).unwrap());
        let rows = sweep(
            &bm(),
            &DriftModel::linear_unit(1),
            &[1.0],
            &[2.0, 3.0, 4.0],
            &grid,
            &McOptions::new(100_000, 42),
            EstimatorKind::MeanShift,
        )
        .unwrap();
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio.unwrap()).collect();
        for r in &ratios {
            assert!((0.85..=1.35).contains(r), "ratios {ratios:?}");
        }
        assert!(ratios[1] < ratios[0], "ratios {ratios:?}");
        assert!(ratios[2] < ratios[0], "ratios {ratios:?}");
    }

    #[test]
    fn sweep_emits_rows_for_unreached_events() {
        let grid = SweepGrid::Fixed(DomainGrid::singleton(vec![1.0]).unwrap());
        let rows = sweep(
            &bm(),
            &DriftModel::zero(1),
            &[1.0],
            &[15.0],
            &grid,
            &McOptions::new(1_000, 5),
            EstimatorKind::Crude,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].p_hat, 0.0);
        assert!(rows[0].ratio.is_none());
        assert!(rows[0].neg_log_p.is_none());

        let empty = sweep(
            &bm(),
            &DriftModel::zero(1),
            &[1.0],
            &[],
            &grid,
            &McOptions::new(1_000, 5),
            EstimatorKind::Crude,
        )
        .unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn sweep_chernoff_direction() {
        // P over the grid is at most exp(-M) up to polynomial factors;
        // checked only when the estimate is sharp enough
        let grid = SweepGrid::LogAuto {
            t_min: 0.1,
            points: 150,
            truncation_factor: 5.0,
        };
        let rows = sweep(
            &bm(),
            &DriftModel::linear_unit(1),
            &[1.0],
            &[2.0],
            &grid,
            &McOptions::new(200_000, 8),
            EstimatorKind::Crude,
        )
        .unwrap();
        let row = &rows[0];
        assert!(row.p_hat > 0.0);
        if row.half_width / row.p_hat < 0.25 {
            let slack = 3.0 * row.half_width / row.p_hat;
            assert!(row.neg_log_p.unwrap() >= row.m_of_u_t - slack);
        }
    }

    #[test]
    fn block_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for k in 0..1000 {
            assert!(seen.insert(block_seed(12345, k)));
        }
    }
}
