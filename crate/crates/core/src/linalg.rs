//! Dense symmetric positive-definite kernel: Cholesky factorization, solves,
//! inversion, and the normalized partial-correlation matrix.
//!
//! Everything here is sized for small dense problems (component counts in the
//! single digits, joint simulation matrices in the low thousands), so the
//! implementation favors plain row-major storage and straightforward loops.

use std::ops::Index;

use crate::error::{Error, Result};

/// Dot product with four accumulators.
///
/// Splitting the accumulation chain matters in the Monte Carlo sampler, where
/// triangular matrix-vector products dominate the runtime. The summation
/// order is fixed, so results are reproducible across runs and thread counts.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Dense symmetric matrix, stored row-major with both triangles populated.
///
/// Symmetry is enforced on construction: entries `(i, j)` and `(j, i)` are
/// always the same stored value.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from full rows, rejecting non-square, non-finite or
    /// asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::invalid("matrix must have dim >= 1"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has length {}, expected {dim}",
                    row.len()
                )));
            }
        }
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let v = rows[i][j];
                if !v.is_finite() {
                    return Err(Error::invalid(format!("entry ({i},{j}) is not finite")));
                }
                if rows[j][i] != v {
                    return Err(Error::invalid(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
                data[i * dim + j] = v;
            }
        }
        Ok(SymMatrix { dim, data })
    }

    /// Builds by evaluating `f(i, j)` for `i <= j` and mirroring, so the
    /// result is symmetric by construction.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "matrix must have dim >= 1");
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        SymMatrix { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn add_diag(&mut self, v: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += v;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    /// Quadratic form `x' A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(&self.mul_vec(x), x)
    }

    /// Principal submatrix on the given (strictly increasing) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// Constructs from a row-major buffer the caller guarantees symmetric
    /// (used for block-assembled joint covariances).
    pub(crate) fn from_raw_symmetric(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim);
        debug_assert!(
            (0..dim).all(|i| (0..dim).all(|j| data[i * dim + j] == data[j * dim + i])),
            "buffer is not symmetric"
        );
        SymMatrix { dim, data }
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

/// General dense matrix (mixing matrices, cross-covariance blocks).
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 || rows[0].is_empty() {
            return Err(Error::invalid("matrix must be non-empty"));
        }
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::invalid(format!("row {i} has inconsistent length")));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("row {i} contains a non-finite entry")));
                }
                data.push(v);
            }
        }
        Ok(Mat { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                data[i * cols + j] = f(i, j);
            }
        }
        Mat { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_sym(a: &SymMatrix) -> Self {
        Self::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn mul_mat(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        Mat::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum()
        })
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::invalid("inverse requires a square matrix"));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Mat::identity(n);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = n as f64 * f64::EPSILON * scale;
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[piv * n + col].abs() {
                    piv = r;
                }
            }
            if a[piv * n + col].abs() <= tol {
                return Err(Error::SingularMatrix);
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let d = a[col * n + col];
            for j in 0..n {
                a[col * n + j] /= d;
                inv.data[col * n + j] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r * n + col];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[r * n + j] -= factor * a[col * n + j];
                    inv.data[r * n + j] -= factor * inv.data[col * n + j];
                }
            }
        }
        Ok(inv)
    }
}

/// Lower-triangular Cholesky factor with `L L' = A`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    dim: usize,
    l: Vec<f64>,
}

/// Cholesky factorization of a symmetric matrix.
///
/// Fails with [`Error::NotPositiveDefinite`] when a pivot falls at or below
/// `dim * eps * max|a|`, which signals a degenerate covariance.
pub fn cholesky(a: &SymMatrix) -> Result<CholeskyFactor> {
    let n = a.dim();
    let tol = n as f64 * f64::EPSILON * a.max_abs();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                let pivot = a.get(i, i) - s;
                if pivot <= tol {
                    return Err(Error::NotPositiveDefinite { pivot: i });
                }
                l[i * n + i] = pivot.sqrt();
            } else {
                l[i * n + j] = (a.get(i, j) - s) / l[j * n + j];
            }
        }
    }
    Ok(CholeskyFactor { dim: n, l })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    /// Row `i` of `L` up to and including the diagonal.
    pub fn lower_row(&self, i: usize) -> &[f64] {
        &self.l[i * self.dim..i * self.dim + i + 1]
    }

    /// Solves `L y = b` by forward substitution.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = (b[i] - s) / self.l[i * n + i];
        }
        y
    }

    /// Solves `A x = b` via the factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for (k, &xk) in x.iter().enumerate().skip(i + 1) {
                s -= self.l[k * n + i] * xk;
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// `L L'`, for verifying the factorization.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        SymMatrix::from_fn(n, |i, j| {
            let k = i.min(j) + 1;
            dot(&self.l[i * n..i * n + k], &self.l[j * n..j * n + k])
        })
    }
}

/// Solves `a x = b` for symmetric positive definite `a`.
pub fn solve_spd(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::invalid(format!(
            "rhs length {} does not match dim {}",
            b.len(),
            a.dim()
        )));
    }
    Ok(cholesky(a)?.solve(b))
}

/// Inverse of a symmetric positive definite matrix.
///
/// The computed inverse is symmetrized so downstream invariants (unit
/// diagonal of the partial-correlation matrix, exact symmetry) hold without
/// roundoff asymmetry.
pub fn inverse_spd(a: &SymMatrix) -> Result<SymMatrix> {
    let n = a.dim();
    let f = cholesky(a)?;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(f.solve(&e));
    }
    Ok(SymMatrix::from_fn(n, |i, j| {
        0.5 * (cols[j][i] + cols[i][j])
    }))
}

/// Normalized inverse covariance.
///
/// `K = D S^{-1} D` where `S^{-1} = (m_ij)` and `D = diag(m_ii^{-1/2})`.
/// The diagonal is exactly 1; the negated off-diagonal entries act as
/// partial correlations between coordinates given all the others.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCorrMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl PartialCorrMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].to_vec())
            .collect()
    }
}

impl Index<(usize, usize)> for PartialCorrMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

/// Partial-correlation matrix of a positive definite covariance.
pub fn partial_corr(sigma: &SymMatrix) -> Result<PartialCorrMatrix> {
    let n = sigma.dim();
    let inv = inverse_spd(sigma)?;
    let d: Vec<f64> = (0..n).map(|i| inv.get(i, i).sqrt()).collect();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = if i == j {
                1.0
            } else {
                inv.get(i, j) / (d[i] * d[j])
            };
        }
    }
    Ok(PartialCorrMatrix { dim: n, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// G'G + (0.01 * dim) * I for a dense G with uniform entries.
    pub(crate) fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let g: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        SymMatrix::from_fn(n, |i, j| {
            let gram: f64 = (0..n).map(|k| g[k][i] * g[k][j]).sum();
            gram + if i == j { 0.01 * n as f64 } else { 0.0 }
        })
    }

    #[test]
    fn cholesky_identity() {
        let a = SymMatrix::identity(2);
        let l = cholesky(&a).unwrap();
        assert_eq!(l.get(0, 0), 1.0);
        assert_eq!(l.get(1, 1), 1.0);
        assert_eq!(l.get(1, 0), 0.0);
    }

    #[test]
    fn cholesky_2x2() {
        let a = SymMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = cholesky(&a).unwrap();
        assert!(approx(l.get(0, 0), 2.0, 1e-15));
        assert!(approx(l.get(1, 0), 1.0, 1e-15));
        assert!(approx(l.get(1, 1), 2f64.sqrt(), 1e-15));
        let r = l.reconstruct();
        for i in 0..2 {
            for j in 0..2 {
                assert!(approx(r.get(i, j), a.get(i, j), 1e-12 * a.max_abs()));
            }
        }
    }

    #[test]
    fn cholesky_rank_one_fails() {
        let a = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn solve_examples() {
        let id = SymMatrix::identity(2);
        assert_eq!(solve_spd(&id, &[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);

        let a = SymMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let x = solve_spd(&a, &[6.0, 5.0]).unwrap();
        assert!(approx(x[0], 1.0, 1e-12));
        assert!(approx(x[1], 1.0, 1e-12));

        let a = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let x = solve_spd(&a, &[1.0, 1.0]).unwrap();
        assert!(approx(x[0], 2.0 / 3.0, 1e-12));
        assert!(approx(x[1], 2.0 / 3.0, 1e-12));
        // residual contract
        let r: Vec<f64> = a
            .mul_vec(&x)
            .iter()
            .zip(&[1.0, 1.0])
            .map(|(ax, b)| ax - b)
            .collect();
        let rn = dot(&r, &r).sqrt();
        assert!(rn <= 1e-10 * (a.max_abs() * dot(&x, &x).sqrt() + 2f64.sqrt()));
    }

    #[test]
    fn inverse_examples() {
        let id = SymMatrix::identity(3);
        assert_eq!(inverse_spd(&id).unwrap(), id);

        let rho = 0.5;
        let a = SymMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap();
        let inv = inverse_spd(&a).unwrap();
        let c = 1.0 / 0.75;
        assert!(approx(inv.get(0, 0), c, 1e-12));
        assert!(approx(inv.get(0, 1), -0.5 * c, 1e-12));
        // product with the input is the identity
        for i in 0..2 {
            let prod = a.mul_vec(inv.row(i));
            for (j, &pj) in prod.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(approx(pj, want, 1e-12));
            }
        }

        let d = SymMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let dinv = inverse_spd(&d).unwrap();
        assert!(approx(dinv.get(0, 0), 0.5, 1e-15));
        assert!(approx(dinv.get(1, 1), 0.25, 1e-15));
    }

    #[test]
    fn partial_corr_examples() {
        let id = SymMatrix::identity(2);
        let k = partial_corr(&id).unwrap();
        assert_eq!(k.get(0, 0), 1.0);
        assert_eq!(k.get(0, 1), 0.0);

        // 2x2 oracle: inverse of [[1, r], [r, 1]] normalizes to k01 = -r
        let a = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let k = partial_corr(&a).unwrap();
        assert!(approx(k.get(0, 1), -0.5, 1e-12));

        let a = SymMatrix::from_rows(&[vec![1.0, -0.9], vec![-0.9, 1.0]]).unwrap();
        let k = partial_corr(&a).unwrap();
        assert!(approx(k.get(0, 1), 0.9, 1e-12));
    }

    #[test]
    fn mat_inverse_roundtrip() {
        let s = Mat::from_rows(&[vec![1.0, 2.0], vec![0.5, -1.0]]).unwrap();
        let inv = s.inverse().unwrap();
        let prod = s.mul_mat(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(approx(prod.get(i, j), want, 1e-12));
            }
        }
        let sing = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(sing.inverse(), Err(Error::SingularMatrix)));
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = SymMatrix::from_rows(&[vec![1.0, 0.2], vec![0.3, 1.0]]);
        assert!(err.is_err());
    }

    proptest! {
        #[test]
        fn inverse_times_input_is_identity(seed in 0u64..500, n in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_spd(&mut rng, n);
            let inv = inverse_spd(&a).unwrap();
            for i in 0..n {
                let prod = a.mul_vec(inv.row(i));
                for (j, &pj) in prod.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((pj - want).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn partial_corr_unit_diag_and_range(seed in 0u64..500, n in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_spd(&mut rng, n);
            let k = partial_corr(&a).unwrap();
            for i in 0..n {
                prop_assert_eq!(k.get(i, i), 1.0);
                for j in 0..n {
                    prop_assert!(k.get(i, j).abs() <= 1.0 + 1e-12);
                    prop_assert!((k.get(i, j) - k.get(j, i)).abs() <= 1e-15);
                }
            }
        }

        #[test]
        fn cholesky_solve_matches_inverse(seed in 0u64..300, n in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_spd(&mut rng, n);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x1 = solve_spd(&a, &b).unwrap();
            let x2 = inverse_spd(&a).unwrap().mul_vec(&b);
            for i in 0..n {
                prop_assert!((x1[i] - x2[i]).abs() < 1e-10 * (1.0 + x1[i].abs()));
            }
        }
    }
}
