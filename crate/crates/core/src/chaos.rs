//! Hermite polynomial chaos: multi-index sets, orthonormal basis evaluation,
//! surrogate solutions and their statistics.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::StructuredGrid;
use crate::sampling;

/// `(d + p)! / (d! p!)`, the number of chaos terms of total order `p` in `d`
/// variables.
pub fn basis_size(d: usize, p: usize) -> usize {
    let k = d.min(p) as u128;
    let n = (d + p) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c as usize
}

/// Values `h_0(x), ..., h_n(x)` of the orthonormal probabilists' Hermite
/// polynomials `He_k(x) / sqrt(k!)`.
pub fn hermite_normalized_table(n: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n + 1);
    h.push(1.0);
    if n >= 1 {
        h.push(x);
    }
    for k in 1..n {
        let next = (x * h[k] - (k as f64).sqrt() * h[k - 1]) / ((k + 1) as f64).sqrt();
        h.push(next);
    }
    h
}

/// Orthonormal Hermite polynomial of degree `n` at `x`.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    hermite_normalized_table(n, x)[n]
}

/// Total-order multi-index set in graded lexicographic order.
///
/// Within one degree the tuples are listed in descending lexicographic
/// order, so index 0 is the constant term and indices `1..=d` are the linear
/// terms `e_1, ..., e_d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dim: usize,
    order: usize,
    indices: Vec<Vec<usize>>,
}

impl MultiIndexSet {
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("chaos dimension must be positive"));
        }
        fn fill(prefix: &mut Vec<usize>, dim: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() + 1 == dim {
                prefix.push(remaining);
                out.push(prefix.clone());
                prefix.pop();
                return;
            }
            for a in (0..=remaining).rev() {
                prefix.push(a);
                fill(prefix, dim, remaining - a, out);
                prefix.pop();
            }
        }
        let mut indices = Vec::with_capacity(basis_size(dim, order));
        for degree in 0..=order {
            fill(&mut Vec::with_capacity(dim), dim, degree, &mut indices);
        }
        Ok(MultiIndexSet { dim, order, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index(&self, i: usize) -> &[usize] {
        &self.indices[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.indices.iter().map(Vec::as_slice)
    }

    /// Position of the multi-index `alpha`, if present.
    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.indices.iter().position(|a| a.as_slice() == alpha)
    }

    fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        Ok(())
    }

    /// All basis functions at `z`.
    pub fn eval_all(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_point(z)?;
        let tables: Vec<Vec<f64>> = z.iter().map(|&x| hermite_normalized_table(self.order, x)).collect();
        Ok(self
            .indices
            .iter()
            .map(|alpha| alpha.iter().zip(&tables).map(|(&a, t)| t[a]).product())
            .collect())
    }

    /// Basis function `i` at `z`.
    pub fn psi_eval(&self, i: usize, z: &[f64]) -> Result<f64> {
        self.check_point(z)?;
        let alpha = self
            .indices
            .get(i)
            .ok_or_else(|| Error::invalid(format!("term {i} out of range for a basis of {}", self.len())))?;
        Ok(alpha.iter().zip(z).map(|(&a, &x)| hermite_eval(a, x)).product())
    }
}

/// Stochastic variables a chaos solution is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Germ {
    /// The original KL variables.
    Xi,
    /// Rotated variables adapted to one subdomain (1-based id).
    Eta { subdomain: usize },
}

/// Chaos coefficients of a field: one row per grid node, one column per
/// basis term.
#[derive(Debug, Clone)]
pub struct PCSolution {
    pub basis: MultiIndexSet,
    pub germ: Germ,
    pub coeffs: DMatrix<f64>,
}

impl PCSolution {
    pub fn new(basis: MultiIndexSet, germ: Germ, coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.ncols() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: coeffs.ncols() });
        }
        Ok(PCSolution { basis, germ, coeffs })
    }

    pub fn num_nodes(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.coeffs.column(0).iter().copied().collect()
    }

    pub fn variance(&self) -> Vec<f64> {
        self.coeffs
            .row_iter()
            .map(|row| row.iter().skip(1).map(|c| c * c).sum())
            .collect()
    }

    pub fn std(&self) -> Vec<f64> {
        self.variance().into_iter().map(f64::sqrt).collect()
    }

    /// Mean and standard deviation fields.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        (self.mean(), self.std())
    }

    pub fn surrogate_eval(&self, z: &[f64], node: usize) -> Result<f64> {
        if node >= self.num_nodes() {
            return Err(Error::invalid(format!("node {node} out of range")));
        }
        let psi = self.basis.eval_all(z)?;
        Ok(self.coeffs.row(node).iter().zip(&psi).map(|(c, p)| c * p).sum())
    }

    /// Surrogate at every node for one germ value.
    pub fn field_at(&self, z: &[f64]) -> Result<Vec<f64>> {
        let psi = nalgebra::DVector::from_vec(self.basis.eval_all(z)?);
        Ok((&self.coeffs * psi).iter().copied().collect())
    }

    /// Terms of total degree at most one: the mean and the linear
    /// coefficients in every direction.
    pub fn gaussian_part(&self) -> Result<PCSolution> {
        let d = self.dim();
        let linear = MultiIndexSet::new(d, 1)?;
        let mut coeffs = DMatrix::zeros(self.num_nodes(), linear.len());
        for (c, alpha) in linear.iter().enumerate() {
            let src = self
                .basis
                .position(alpha)
                .ok_or_else(|| Error::invalid("basis lacks first-order terms"))?;
            coeffs.set_column(c, &self.coeffs.column(src));
        }
        PCSolution::new(linear, self.germ, coeffs)
    }

    /// Surrogate samples at one node under iid standard-normal germs.
    pub fn sample_node(&self, node: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
        if node >= self.num_nodes() {
            return Err(Error::invalid(format!("node {node} out of range")));
        }
        let row: Vec<f64> = self.coeffs.row(node).iter().copied().collect();
        sampling::normal_vectors(seed, n, self.dim())
            .iter()
            .map(|z| Ok(self.basis.eval_all(z)?.iter().zip(&row).map(|(p, c)| p * c).sum()))
            .collect()
    }
}

/// Number of support points of a density estimate.
pub const PDF_SUPPORT_POINTS: usize = 256;
/// Smallest accepted sample count for a density estimate.
pub const PDF_MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone)]
pub struct PdfEstimate {
    pub location: [f64; 2],
    pub node: usize,
    pub support: Vec<f64>,
    pub density: Vec<f64>,
    pub samples: Vec<f64>,
    /// Set when all samples coincide; `support` and `density` are then empty.
    pub degenerate: bool,
}

impl PdfEstimate {
    /// Trapezoid integral of the density over its support.
    pub fn mass(&self) -> f64 {
        self.support
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
            .sum()
    }
}

fn sample_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule-of-thumb bandwidth, `0.9 min(sd, IQR/1.34) n^(-1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = sample_std(samples);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (samples.len() as f64).powf(-0.2)
}

/// Gaussian kernel density estimate of raw samples. The support spans the
/// sample range padded by four bandwidths on each side.
pub fn kde(samples: &[f64]) -> (Vec<f64>, Vec<f64>, bool) {
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return (Vec::new(), Vec::new(), true);
    }
    let h = silverman_bandwidth(samples);
    if !(h > 0.0) {
        return (Vec::new(), Vec::new(), true);
    }
    let (a, b) = (lo - 4.0 * h, hi + 4.0 * h);
    let step = (b - a) / (PDF_SUPPORT_POINTS - 1) as f64;
    let support: Vec<f64> = (0..PDF_SUPPORT_POINTS).map(|i| a + step * i as f64).collect();
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = support
        .iter()
        .map(|&x| {
            samples
                .iter()
                .map(|&s| {
                    let t = (x - s) / h;
                    (-0.5 * t * t).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    (support, density, false)
}

/// Density of the surrogate at the grid node nearest to `location`.
pub fn pdf_estimate(
    sol: &PCSolution,
    grid: &StructuredGrid,
    location: [f64; 2],
    n_samples: usize,
    seed: u64,
) -> Result<PdfEstimate> {
    if n_samples < PDF_MIN_SAMPLES {
        return Err(Error::invalid(format!("density estimate needs at least {PDF_MIN_SAMPLES} samples")));
    }
    let node = grid.nearest_node(location)?;
    let samples = sol.sample_node(node, n_samples, seed)?;
    let (support, density, degenerate) = kde(&samples);
    Ok(PdfEstimate { location, node, support, density, samples, degenerate })
}
