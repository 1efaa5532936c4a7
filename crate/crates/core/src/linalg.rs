//! Dense and banded linear-algebra kernels shared by the KL solvers and the
//! diffusion solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Leading eigenpairs of a symmetric operator, eigenvalues non-increasing.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// One eigenvector per column.
    pub vectors: DMatrix<f64>,
}

/// Above this size the weighted KL solves switch from a full dense
/// eigendecomposition to Lanczos.
pub const DENSE_EIGEN_LIMIT: usize = 1000;

/// Full symmetric eigendecomposition, truncated to the `k` largest eigenvalues.
pub fn dense_top_k(mat: DMatrix<f64>, k: usize) -> EigenPairs {
    let n = mat.nrows();
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    EigenPairs { values, vectors }
}

/// Largest `k` eigenpairs of a symmetric positive semi-definite operator by
/// Lanczos with full reorthogonalization. The Krylov dimension doubles until
/// every requested Ritz pair has residual below `tol * theta_max`.
pub fn lanczos_top_k<F>(n: usize, k: usize, tol: f64, matvec: F) -> Result<EigenPairs>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot extract {k} eigenpairs from an operator of size {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c);
    let start = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    let mut m = (2 * k + 40).min(n);
    loop {
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m + 1);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        basis.push(start.normalize());
        let mut last_beta = 0.0;
        for j in 0..m {
            let mut w = matvec(&basis[j]);
            let a = basis[j].dot(&w);
            alpha.push(a);
            w.axpy(-a, &basis[j], 1.0);
            if j > 0 {
                w.axpy(-beta[j - 1], &basis[j - 1], 1.0);
            }
            for _ in 0..2 {
                for v in &basis {
                    let c = v.dot(&w);
                    w.axpy(-c, v, 1.0);
                }
            }
            let b = w.norm();
            last_beta = b;
            if j + 1 == m {
                break;
            }
            let scale = alpha.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
            if b <= 1e-13 * scale {
                // Invariant subspace: continue from a fresh direction
                // orthogonal to everything found so far.
                let mut fresh = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
                for _ in 0..2 {
                    for v in &basis {
                        let c = v.dot(&fresh);
                        fresh.axpy(-c, v, 1.0);
                    }
                }
                beta.push(0.0);
                basis.push(fresh.normalize());
                last_beta = 0.0;
            } else {
                beta.push(b);
                basis.push(w / b);
            }
        }
        let size = alpha.len();
        let tri = DMatrix::from_fn(size, size, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let ritz = dense_top_k(tri, k.min(size));
        let theta_max = ritz.values.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
        let converged = ritz.values.len() == k
            && (0..k).all(|i| (last_beta * ritz.vectors[(size - 1, i)]).abs() <= tol * theta_max);
        if converged || size == n {
            if ritz.values.len() < k {
                return Err(Error::Eigen(format!("Lanczos produced only {} Ritz pairs", ritz.values.len())));
            }
            let mut vectors = DMatrix::zeros(n, k);
            for c in 0..k {
                let mut col = DVector::zeros(n);
                for (r, v) in basis.iter().take(size).enumerate() {
                    col.axpy(ritz.vectors[(r, c)], v, 1.0);
                }
                let norm = col.norm();
                vectors.set_column(c, &(col / norm));
            }
            return Ok(EigenPairs { values: ritz.values, vectors });
        }
        m = (2 * m).min(n);
    }
}

/// Leading eigenpairs of the weighted problem `sum_l C[k,l] w_l v_l = mu v_k`.
///
/// Solved symmetrically as `W^1/2 C W^1/2 y = mu y` with `v = W^-1/2 y`, so the
/// returned vectors are orthonormal under the weights. Each vector is scaled so
/// that its entry of largest magnitude is positive.
pub fn weighted_top_k(cov: &DMatrix<f64>, weights: &[f64], k: usize) -> Result<EigenPairs> {
    let n = cov.nrows();
    if cov.ncols() != n {
        return Err(Error::invalid("covariance matrix must be square"));
    }
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::invalid("quadrature weights must be positive"));
    }
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |r, c| sqrt_w[r] * cov[(r, c)] * sqrt_w[c]);
    let mut pairs = if n <= DENSE_EIGEN_LIMIT {
        dense_top_k(scaled, k)
    } else {
        lanczos_top_k(n, k, 1e-12, |v| &scaled * v)?
    };
    for c in 0..pairs.vectors.ncols() {
        for r in 0..n {
            pairs.vectors[(r, c)] /= sqrt_w[r];
        }
    }
    fix_signs(&mut pairs.vectors);
    Ok(pairs)
}

/// Flip each column so that its largest-magnitude entry is positive.
pub fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0.0_f64;
        let mut sign = 1.0;
        for &v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
        if sign < 0.0 {
            col.neg_mut();
        }
    }
}

/// Symmetric positive-definite matrix stored by its lower band.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    // Row i holds columns i-bw..=i at offsets 0..=bw.
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSpd { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Entry `(i, j)` of the full symmetric matrix.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Add `v` to entry `(i, j)` and, implicitly, `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            for j in j0..i {
                let a = row[j + self.bw - i];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += row[self.bw] * x[i];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// In-place banded Cholesky `A = L L^T`.
    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let bw = self.bw;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.data[self.slot(i, j)];
                for k in k0..j {
                    s -= self.data[self.slot(i, k)] * self.data[self.slot(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::SingularSystem(format!("non-positive pivot {s:e} at row {i}")));
                    }
                    let slot = self.slot(i, i);
                    self.data[slot] = s.sqrt();
                } else {
                    let slot = self.slot(i, j);
                    self.data[slot] = s / self.data[self.slot(j, j)];
                }
            }
        }
        Ok(BandedCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    factor: BandedSpd,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        let (n, bw) = (l.n, l.bw);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.data[l.slot(i, k)] * y[k];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                s -= l.data[l.slot(k, i)] * y[k];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        y
    }
}
