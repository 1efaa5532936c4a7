//! Gaussian log-coefficient field: squared-exponential covariance, lognormal
//! parameters and the discrete Karhunen-Loeve expansion.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::{QuadratureWeights, StructuredGrid};

/// How the Gaussian variance is derived from the coefficient moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceConvention {
    /// `sigma_g^2 = ln(1 + sigma_a / a0^2)`, the benchmark's published form.
    #[default]
    Published,
    /// `sigma_g^2 = ln(1 + sigma_a^2 / a0^2)`, the textbook lognormal relation.
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalSpec {
    pub a0: f64,
    pub sigma_a: f64,
    pub sigma_g: f64,
    pub g0: f64,
}

impl LognormalSpec {
    pub fn new(a0: f64, sigma_a: f64, convention: VarianceConvention) -> Result<Self> {
        let (sigma_g, g0) = lognormal_params_with(a0, sigma_a, convention)?;
        Ok(LognormalSpec { a0, sigma_a, sigma_g, g0 })
    }
}

/// `(sigma_g, g0)` with `sigma_g = sqrt(ln(1 + sigma_a / a0^2))` and
/// `g0 = ln(a0 / sqrt(1 + sigma_a / a0^2))`.
pub fn lognormal_params(a0: f64, sigma_a: f64) -> Result<(f64, f64)> {
    lognormal_params_with(a0, sigma_a, VarianceConvention::Published)
}

pub fn lognormal_params_with(a0: f64, sigma_a: f64, convention: VarianceConvention) -> Result<(f64, f64)> {
    if !(a0 > 0.0) {
        return Err(Error::invalid(format!("coefficient mean must be positive, got {a0}")));
    }
    if !(sigma_a >= 0.0) {
        return Err(Error::invalid(format!("coefficient std must be non-negative, got {sigma_a}")));
    }
    let spread = match convention {
        VarianceConvention::Published => sigma_a,
        VarianceConvention::Standard => sigma_a * sigma_a,
    };
    let ratio = 1.0 + spread / (a0 * a0);
    Ok((ratio.ln().sqrt(), (a0 / ratio.sqrt()).ln()))
}

/// `C(x, y) = sigma_g^2 exp(-(x1-y1)^2/l1^2 - (x2-y2)^2/l2^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceKernel {
    pub sigma_g: f64,
    pub l1: f64,
    pub l2: f64,
}

impl CovarianceKernel {
    pub fn new(sigma_g: f64, l1: f64, l2: f64) -> Result<Self> {
        if !(l1 > 0.0 && l2 > 0.0) {
            return Err(Error::invalid("correlation lengths must be positive"));
        }
        if !(sigma_g >= 0.0) {
            return Err(Error::invalid("field standard deviation must be non-negative"));
        }
        Ok(CovarianceKernel { sigma_g, l1, l2 })
    }

    #[inline]
    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let t1 = (x[0] - y[0]) / self.l1;
        let t2 = (x[1] - y[1]) / self.l2;
        self.sigma_g * self.sigma_g * (-t1 * t1 - t2 * t2).exp()
    }

    pub fn matrix(&self, grid: &StructuredGrid) -> DMatrix<f64> {
        let nodes = grid.nodes();
        DMatrix::from_fn(nodes.len(), nodes.len(), |r, c| self.eval(nodes[r], nodes[c]))
    }
}

pub fn kernel_eval(k: &CovarianceKernel, x: [f64; 2], y: [f64; 2]) -> f64 {
    k.eval(x, y)
}

/// Truncated KL expansion `g(x) = g0(x) + sum_i sqrt(lambda_i) g_i(x) xi_i`
/// sampled on grid nodes.
#[derive(Debug, Clone)]
pub struct RandomFieldModel {
    g0: Vec<f64>,
    lambda: Vec<f64>,
    /// One mode per column, w-orthonormal.
    modes: DMatrix<f64>,
    /// `sum_k w_k C(x_k, x_k)`: total discrete variance of the field.
    total_variance: f64,
    // sqrt(lambda_i) g_i, precomputed for realizations.
    scaled: DMatrix<f64>,
}

impl RandomFieldModel {
    pub fn new(g0: Vec<f64>, lambda: Vec<f64>, modes: DMatrix<f64>, total_variance: f64) -> Result<Self> {
        if modes.nrows() != g0.len() {
            return Err(Error::DimensionMismatch { expected: g0.len(), got: modes.nrows() });
        }
        if modes.ncols() != lambda.len() {
            return Err(Error::DimensionMismatch { expected: lambda.len(), got: modes.ncols() });
        }
        if lambda.is_empty() {
            return Err(Error::invalid("random field needs at least one stochastic dimension"));
        }
        if lambda.iter().any(|&l| l < 0.0) {
            return Err(Error::invalid("KL eigenvalues must be non-negative"));
        }
        let mut scaled = modes.clone();
        for (c, &l) in lambda.iter().enumerate() {
            scaled.column_mut(c).scale_mut(l.sqrt());
        }
        Ok(RandomFieldModel { g0, lambda, modes, total_variance, scaled })
    }

    /// A model with `d` inert dimensions: every realization equals `exp(g0)`.
    pub fn deterministic(g0: Vec<f64>, d: usize) -> Result<Self> {
        let n = g0.len();
        Self::new(g0, vec![0.0; d], DMatrix::zeros(n, d), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.g0.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn mean_field(&self) -> &[f64] {
        &self.g0
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    /// Fraction of the discrete field variance carried by the retained modes.
    pub fn captured_variance_fraction(&self) -> f64 {
        if self.total_variance > 0.0 {
            self.lambda.iter().sum::<f64>() / self.total_variance
        } else {
            1.0
        }
    }

    /// Pointwise variance of the truncated field, `sum_i lambda_i g_i(x)^2`.
    pub fn pointwise_variance(&self) -> Vec<f64> {
        self.scaled.row_iter().map(|r| r.iter().map(|v| v * v).sum()).collect()
    }

    pub fn realize_g(&self, xi: &[f64]) -> Result<Vec<f64>> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: xi.len() });
        }
        let mut g = self.g0.clone();
        for (c, &x) in xi.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (gk, m) in g.iter_mut().zip(self.scaled.column(c).iter()) {
                *gk += m * x;
            }
        }
        Ok(g)
    }

    pub fn realize_a(&self, xi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.realize_g(xi)?.into_iter().map(f64::exp).collect())
    }

    /// The same expansion restricted to a subset of nodes.
    pub fn restrict(&self, nodes: &[usize]) -> Result<Self> {
        let g0 = nodes.iter().map(|&k| self.g0[k]).collect();
        let modes = DMatrix::from_fn(nodes.len(), self.dim(), |r, c| self.modes[(nodes[r], c)]);
        Self::new(g0, self.lambda.clone(), modes, self.total_variance)
    }
}

/// Relative cutoff below which a KL eigenvalue counts as zero.
pub const KL_RANK_TOL: f64 = 1e-12;

/// Discrete KL expansion of a constant-mean Gaussian field by Nystrom
/// discretization of the covariance eigenproblem with trapezoid weights.
pub fn kl_solve(
    kernel: &CovarianceKernel,
    grid: &StructuredGrid,
    weights: &QuadratureWeights,
    d: usize,
    g0: f64,
) -> Result<RandomFieldModel> {
    let n = grid.len();
    if d == 0 || d > n {
        return Err(Error::invalid(format!("KL truncation {d} must lie in 1..={n}")));
    }
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
    }
    let total_variance: f64 = grid.nodes().iter().zip(weights.iter()).map(|(&x, w)| w * kernel.eval(x, x)).sum();
    let cov = kernel.matrix(grid);
    let pairs = linalg::weighted_top_k(&cov, weights, d)?;
    let lead = pairs.values[0];
    let positive = pairs.values.iter().filter(|&&l| l > KL_RANK_TOL * lead).count();
    if !(lead > 0.0) || positive < d {
        return Err(Error::RankDeficient { requested: d, available: if lead > 0.0 { positive } else { 0 } });
    }
    RandomFieldModel::new(vec![g0; n], pairs.values, pairs.vectors, total_variance)
}
