//! Subdomain basis adaptation.
//!
//! For each subdomain the linear part of a coarse chaos solution defines a
//! covariance whose KL modes give a rotation `eta = A xi` of the germ. Only
//! the leading `r` rotated variables are kept, a reduced collocation is run
//! for each subdomain, and the results are stitched by node label.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::chaos::{Germ, MultiIndexSet, PCSolution};
use crate::collocation::{project, with_workers, CollocationRun, Problem, RunOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, fix_signs, EigenPairs};
use crate::mesh::{StructuredGrid, SubdomainPartition};
use crate::sparse_grid::smolyak;

/// Relative cutoff below which a subdomain eigenvalue counts as zero.
pub const MU_RANK_TOL: f64 = 1e-12;
/// Seeds closer than this to the span of the accepted rows are skipped.
pub const COMPLETION_SKIP_TOL: f64 = 1e-8;
/// Target of the automatic choice of `r`.
pub const AUTO_R_TARGET: f64 = 1e-2;

/// Linear coefficients `u_i(x_k)` for the given nodes, one column per
/// direction.
pub fn linear_coefficients(gauss: &PCSolution, nodes: &[usize]) -> Result<DMatrix<f64>> {
    let d = gauss.dim();
    let mut cols = Vec::with_capacity(d);
    for i in 0..d {
        let mut alpha = vec![0; d];
        alpha[i] = 1;
        cols.push(
            gauss
                .basis
                .position(&alpha)
                .ok_or_else(|| Error::invalid("chaos solution lacks first-order terms"))?,
        );
    }
    for &k in nodes {
        if k >= gauss.num_nodes() {
            return Err(Error::invalid(format!("node {k} out of range")));
        }
    }
    Ok(DMatrix::from_fn(nodes.len(), d, |r, c| gauss.coeffs[(nodes[r], cols[c])]))
}

/// Covariance `C(x, y) = sum_i u_i(x) u_i(y)` of the Gaussian part on `nodes`.
pub fn subdomain_covariance(gauss: &PCSolution, nodes: &[usize]) -> Result<DMatrix<f64>> {
    if nodes.is_empty() {
        return Err(Error::invalid("empty subdomain"));
    }
    let u = linear_coefficients(gauss, nodes)?;
    Ok(&u * u.transpose())
}

/// Weighted eigenpairs of a subdomain covariance, at most `d` of them.
pub fn hilbert_kl(cov: &DMatrix<f64>, weights: &[f64], d: usize) -> Result<EigenPairs> {
    let k = d.min(cov.nrows());
    let mut pairs = linalg::weighted_top_k(cov, weights, k)?;
    for v in pairs.values.iter_mut() {
        *v = v.max(0.0);
    }
    Ok(pairs)
}

/// Same eigenpairs as [`hilbert_kl`] for `C = U U^T`, computed from the
/// `d x d` Gram matrix `U^T W U`. Modes of zero eigenvalues are returned as
/// zero vectors.
pub fn hilbert_kl_factored(u: &DMatrix<f64>, weights: &[f64]) -> Result<EigenPairs> {
    if weights.len() != u.nrows() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), got: weights.len() });
    }
    let d = u.ncols();
    let mut wu = u.clone();
    for (mut row, &w) in wu.row_iter_mut().zip(weights) {
        row *= w;
    }
    let gram = u.transpose() * &wu;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lead = eig.eigenvalues[order[0]].max(0.0);
    let mut values = Vec::with_capacity(d);
    let mut vectors = DMatrix::zeros(u.nrows(), d);
    for (c, &i) in order.iter().enumerate() {
        let mu = eig.eigenvalues[i].max(0.0);
        values.push(mu);
        if lead > 0.0 && mu > MU_RANK_TOL * lead {
            let phi = u * eig.eigenvectors.column(i) / mu.sqrt();
            vectors.set_column(c, &phi);
        }
    }
    fix_signs(&mut vectors);
    Ok(EigenPairs { values, vectors })
}

/// Discarded fraction `sum_{i>r} mu_i / sum_i mu_i`.
pub fn truncation_error_indicator(mu: &[f64], r: usize) -> Result<f64> {
    let total: f64 = mu.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("truncation indicator needs a nonzero spectrum"));
    }
    let tail: f64 = mu.iter().skip(r).sum();
    Ok((tail / total).clamp(0.0, 1.0))
}

/// Smallest `r` with indicator below [`AUTO_R_TARGET`].
pub fn auto_r(mu: &[f64]) -> Result<usize> {
    for r in 1..=mu.len() {
        if truncation_error_indicator(mu, r)? < AUTO_R_TARGET {
            return Ok(r);
        }
    }
    Ok(mu.len())
}

/// Numerical rank of a non-increasing spectrum.
pub fn numerical_rank(mu: &[f64]) -> usize {
    match mu.first() {
        Some(&lead) if lead > 0.0 => mu.iter().filter(|&&m| m > MU_RANK_TOL * lead).count(),
        _ => 0,
    }
}

/// Rotation of the germ adapted to one subdomain.
#[derive(Debug, Clone)]
pub struct AdaptationMap {
    pub subdomain: usize,
    pub mu: Vec<f64>,
    /// Eigenfunctions on the subdomain nodes, one per column.
    pub phi: DMatrix<f64>,
    /// Orthogonal `d x d`; row `i` maps `xi` to `eta_i`.
    pub a: DMatrix<f64>,
    pub r: usize,
}

impl AdaptationMap {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Germ point `xi = A^T[:, ..r] eta` for a reduced node `eta`.
    pub fn map_node(&self, eta: &[f64]) -> Result<Vec<f64>> {
        if eta.len() != self.r {
            return Err(Error::DimensionMismatch { expected: self.r, got: eta.len() });
        }
        let mut xi = vec![0.0; self.dim()];
        for (i, &e) in eta.iter().enumerate() {
            for (j, x) in xi.iter_mut().enumerate() {
                *x += e * self.a[(i, j)];
            }
        }
        Ok(xi)
    }

    pub fn map_nodes(&self, eta_nodes: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        eta_nodes.iter().map(|eta| self.map_node(eta)).collect()
    }

    /// `max |A A^T - I|`.
    pub fn isometry_error(&self) -> f64 {
        let g = &self.a * self.a.transpose();
        let d = self.dim();
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }
}

fn orthonormalize_into(rows: &mut Vec<DVector<f64>>, mut v: DVector<f64>) -> bool {
    let norm0 = v.norm();
    if norm0 == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for q in rows.iter() {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
    }
    let n = v.norm();
    if n < COMPLETION_SKIP_TOL * norm0 {
        return false;
    }
    rows.push(v / n);
    true
}

/// Isometry whose first `r` rows are
/// `a_ij = mu_i^{-1/2} sum_k w_k u_j(x_k) phi_i(x_k)`, normalized, completed
/// to an orthonormal basis from canonical seeds.
///
/// `u` holds the linear coefficients on the subdomain nodes that `phi` and
/// `weights` refer to.
pub fn build_isometry(
    subdomain: usize,
    u: &DMatrix<f64>,
    mu: &[f64],
    phi: &DMatrix<f64>,
    weights: &[f64],
    r: usize,
) -> Result<AdaptationMap> {
    let d = u.ncols();
    let n = u.nrows();
    if phi.nrows() != n || weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: phi.nrows().min(weights.len()) });
    }
    let rank = numerical_rank(mu).min(phi.ncols());
    if r == 0 || r > rank || r > d {
        return Err(Error::RankDeficient { requested: r, available: rank.min(d) });
    }
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(d);
    for i in 0..r {
        let mut row = DVector::zeros(d);
        for j in 0..d {
            row[j] = (0..n).map(|k| weights[k] * u[(k, j)] * phi[(k, i)]).sum::<f64>() / mu[i].sqrt();
        }
        if !orthonormalize_into(&mut rows, row) {
            return Err(Error::RankDeficient { requested: r, available: i });
        }
    }
    for j in 0..d {
        if rows.len() == d {
            break;
        }
        let mut seed = DVector::zeros(d);
        seed[j] = 1.0;
        orthonormalize_into(&mut rows, seed);
    }
    if rows.len() != d {
        return Err(Error::Eigen("isometry completion fell short".into()));
    }
    let a = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    Ok(AdaptationMap { subdomain, mu: mu.to_vec(), phi: phi.clone(), a, r })
}

/// Reduced chaos solution in the rotated germ, computed from deterministic
/// solves over the whole domain at mapped sparse-grid nodes.
pub fn run_adapted(
    problem: &Problem,
    map: &AdaptationMap,
    order: usize,
    level: usize,
    opts: RunOptions,
) -> Result<CollocationRun> {
    if map.dim() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: map.dim() });
    }
    let basis = MultiIndexSet::new(map.r, order)?;
    let sg = smolyak(map.r, level)?;
    if sg.exactness_degree() < 2 * order {
        log::warn!(
            "reduced sparse grid level {} is not exact for order-{} projection",
            level,
            order
        );
    }
    let t0 = Instant::now();
    let xi_nodes = map.map_nodes(&sg.nodes)?;
    let coeffs = project(&basis, &sg.nodes, &sg.weights, problem.grid.len(), opts, "adapted collocation", |q| {
        problem.solve_at(&xi_nodes[q])
    })?;
    Ok(CollocationRun {
        solution: PCSolution::new(basis, Germ::Eta { subdomain: map.subdomain }, coeffs)?,
        solves: sg.len(),
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Difference of two adjacent subdomain solutions at a shared node.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceMismatch {
    pub node: usize,
    pub a: usize,
    pub b: usize,
    pub mean_diff: f64,
    pub std_diff: f64,
}

#[derive(Debug, Clone)]
pub struct StitchedSolution {
    /// Reduced solutions, indexed by subdomain id minus one.
    pub pieces: Vec<PCSolution>,
    pub labels: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub mismatches: Vec<InterfaceMismatch>,
}

impl StitchedSolution {
    pub fn max_mean_mismatch(&self) -> f64 {
        self.mismatches.iter().map(|m| m.mean_diff).fold(0.0, f64::max)
    }

    pub fn max_std_mismatch(&self) -> f64 {
        self.mismatches.iter().map(|m| m.std_diff).fold(0.0, f64::max)
    }

    /// Surrogate samples at `node` from the subdomain that owns it.
    pub fn sample_node(&self, node: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
        let s = *self.labels.get(node).ok_or_else(|| Error::invalid(format!("node {node} out of range")))?;
        self.pieces[s - 1].sample_node(node, n, seed)
    }
}

/// Global statistics taken node by node from the owning subdomain.
pub fn stitch(pieces: Vec<PCSolution>, part: &SubdomainPartition, grid: &StructuredGrid) -> Result<StitchedSolution> {
    if pieces.len() != part.count() {
        return Err(Error::invalid(format!(
            "stitching needs {} subdomain solutions, got {}",
            part.count(),
            pieces.len()
        )));
    }
    for p in &pieces {
        if p.num_nodes() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: p.num_nodes() });
        }
    }
    let moments: Vec<(Vec<f64>, Vec<f64>)> = pieces.iter().map(|p| p.moments()).collect();
    let labels = part.labels().to_vec();
    let mean = (0..grid.len()).map(|k| moments[labels[k] - 1].0[k]).collect();
    let std = (0..grid.len()).map(|k| moments[labels[k] - 1].1[k]).collect();
    let mut mismatches = Vec::new();
    for k in 0..grid.len() {
        let owners = part.boxes_containing(grid, k);
        for (x, &a) in owners.iter().enumerate() {
            for &b in &owners[x + 1..] {
                mismatches.push(InterfaceMismatch {
                    node: k,
                    a,
                    b,
                    mean_diff: (moments[a - 1].0[k] - moments[b - 1].0[k]).abs(),
                    std_diff: (moments[a - 1].1[k] - moments[b - 1].1[k]).abs(),
                });
            }
        }
    }
    Ok(StitchedSolution { pieces, labels, mean, std, mismatches })
}

/// Deterministic-solve counts per stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostAccounting {
    pub stages: Vec<(String, usize)>,
}

impl CostAccounting {
    pub fn push(&mut self, stage: impl Into<String>, solves: usize) {
        self.stages.push((stage.into(), solves));
    }

    pub fn total(&self) -> usize {
        self.stages.iter().map(|(_, n)| n).sum()
    }
}

/// Cost of a coarse Gaussian run followed by one reduced run per subdomain.
pub fn total_cost(coarse: usize, per_subdomain: &[usize]) -> CostAccounting {
    let mut c = CostAccounting::default();
    c.push("coarse", coarse);
    for (s, &n) in per_subdomain.iter().enumerate() {
        c.push(format!("subdomain {}", s + 1), n);
    }
    c
}

/// How many rotated variables each subdomain keeps.
#[derive(Debug, Clone, PartialEq)]
pub enum RChoice {
    Fixed(usize),
    PerSubdomain(Vec<usize>),
    Auto,
}

/// Everything needed to adapt one subdomain.
#[derive(Debug, Clone)]
pub struct SubdomainAdaptation {
    pub map: AdaptationMap,
    /// Box nodes the eigenproblem was solved on.
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
    /// `sum_k w_k C(x_k, x_k)` over the box.
    pub weighted_trace: f64,
}

/// Eigenproblem and isometry for subdomain `s` (1-based).
pub fn adapt_subdomain(
    gauss: &PCSolution,
    grid: &StructuredGrid,
    part: &SubdomainPartition,
    s: usize,
    r: &RChoice,
) -> Result<SubdomainAdaptation> {
    let nodes = part.box_nodes(grid, s);
    let weights = part.box_weights(grid, s);
    if nodes.is_empty() {
        return Err(Error::invalid(format!("subdomain {s} is empty")));
    }
    let u = linear_coefficients(gauss, &nodes)?;
    let weighted_trace: f64 = u.row_iter().zip(&weights).map(|(row, w)| w * row.norm_squared()).sum();
    let pairs = hilbert_kl_factored(&u, &weights)?;
    let r = match r {
        RChoice::Fixed(r) => *r,
        RChoice::PerSubdomain(v) => *v
            .get(s - 1)
            .ok_or_else(|| Error::invalid(format!("no r given for subdomain {s}")))?,
        RChoice::Auto => auto_r(&pairs.values)?,
    };
    let map = build_isometry(s, &u, &pairs.values, &pairs.vectors, &weights, r)?;
    Ok(SubdomainAdaptation { map, nodes, weights, weighted_trace })
}

/// Output of the full adaptation pipeline.
#[derive(Debug, Clone)]
pub struct AdaptedRun {
    pub adaptations: Vec<SubdomainAdaptation>,
    pub runs: Vec<CollocationRun>,
    pub stitched: StitchedSolution,
}

/// Adapt every subdomain of `part` from the Gaussian part `gauss`, run the
/// reduced collocations and stitch them.
pub fn run_pipeline(
    problem: &Problem,
    part: &SubdomainPartition,
    gauss: &PCSolution,
    r: &RChoice,
    order: usize,
    level: usize,
    opts: RunOptions,
) -> Result<AdaptedRun> {
    let grid = problem.grid;
    let ids: Vec<usize> = (1..=part.count()).collect();
    let job = |s: &usize| -> Result<(SubdomainAdaptation, CollocationRun)> {
        let adaptation = adapt_subdomain(gauss, grid, part, *s, r)?;
        let run = run_adapted(problem, &adaptation.map, order, level, opts)?;
        Ok((adaptation, run))
    };
    let results: Vec<(SubdomainAdaptation, CollocationRun)> = with_workers(opts.workers, || {
        if opts.workers > 1 {
            ids.par_iter().map(job).collect::<Result<Vec<_>>>()
        } else {
            ids.iter().map(job).collect::<Result<Vec<_>>>()
        }
    })??;
    let (adaptations, runs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let stitched = stitch(runs.iter().map(|r: &CollocationRun| r.solution.clone()).collect(), part, grid)?;
    Ok(AdaptedRun { adaptations, runs, stitched })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::{run_coarse_gaussian, run_full};
    use crate::diffusion::BcCase;
    use crate::mesh::{build_grid, partition_snake, quad_weights, Rect};
    use crate::random_field::{kl_solve, lognormal_params, CovarianceKernel, RandomFieldModel};
    use crate::sampling::normal_vectors;

    fn linear_solution(u: &DMatrix<f64>) -> PCSolution {
        let d = u.ncols();
        let basis = MultiIndexSet::new(d, 1).unwrap();
        let mut c = DMatrix::zeros(u.nrows(), d + 1);
        c.column_mut(0).fill(1.0);
        for i in 0..d {
            let col = basis.position(&(0..d).map(|j| usize::from(j == i)).collect::<Vec<_>>()).unwrap();
            c.set_column(col, &u.column(i));
        }
        PCSolution::new(basis, Germ::Xi, c).unwrap()
    }

    fn random_u(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let z = normal_vectors(seed, n, d);
        DMatrix::from_fn(n, d, |r, c| z[r][c] * (1.0 + r as f64 / n as f64) / (1 + c) as f64)
    }

    #[test]
    fn rank_one_covariance() {
        let u = DMatrix::from_column_slice(5, 1, &[1.0, 2.0, -1.0, 0.5, 3.0]);
        let sol = linear_solution(&u);
        let nodes: Vec<usize> = (0..5).collect();
        let cov = subdomain_covariance(&sol, &nodes).unwrap();
        assert_eq!(cov, &u * u.transpose());
        let w = [0.5, 1.0, 1.0, 1.0, 0.5];
        let pairs = hilbert_kl(&cov, &w, 3).unwrap();
        let expect: f64 = (0..5).map(|k| w[k] * u[k] * u[k]).sum();
        assert!((pairs.values[0] - expect).abs() < 1e-12 * expect);
        assert!(pairs.values[1].abs() < 1e-12 * expect);
        assert!(subdomain_covariance(&sol, &[]).is_err());
    }

    #[test]
    fn factored_matches_dense_and_preserves_trace() {
        let u = random_u(40, 4, 3);
        let w: Vec<f64> = (0..40).map(|k| 0.5 + (k % 3) as f64 * 0.25).collect();
        let cov = &u * u.transpose();
        let dense = hilbert_kl(&cov, &w, 4).unwrap();
        let fact = hilbert_kl_factored(&u, &w).unwrap();
        let trace: f64 = (0..40).map(|k| w[k] * cov[(k, k)]).sum();
        assert!((fact.values.iter().sum::<f64>() - trace).abs() < 1e-10 * trace);
        for i in 0..4 {
            assert!((dense.values[i] - fact.values[i]).abs() < 1e-9 * fact.values[0]);
            assert!(fact.values[i] >= fact.values.get(i + 1).copied().unwrap_or(0.0));
            let diff = (dense.vectors.column(i) - fact.vectors.column(i)).amax();
            assert!(diff < 1e-6, "mode {i}: {diff}");
        }
        for i in 0..4 {
            for j in 0..4 {
                let ip: f64 = (0..40).map(|k| w[k] * fact.vectors[(k, i)] * fact.vectors[(k, j)]).sum();
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn isometry_properties() {
        let u = random_u(60, 6, 11);
        let w = vec![1.0; 60];
        let pairs = hilbert_kl_factored(&u, &w).unwrap();
        for r in 1..=6 {
            let map = build_isometry(1, &u, &pairs.values, &pairs.vectors, &w, r).unwrap();
            assert!(map.isometry_error() < 1e-10);
            for i in 0..r {
                let raw: Vec<f64> = (0..6)
                    .map(|j| (0..60).map(|k| w[k] * u[(k, j)] * pairs.vectors[(k, i)]).sum::<f64>() / pairs.values[i].sqrt())
                    .collect();
                for j in 0..6 {
                    assert!((raw[j] - map.a[(i, j)]).abs() < 1e-8);
                }
            }
            let z = vec![0.3, -1.2, 0.7, 2.0, -0.1, 0.4];
            let xi = map.map_node(&z[..r]).unwrap();
            let n_eta: f64 = z[..r].iter().map(|x| x * x).sum::<f64>().sqrt();
            let n_xi: f64 = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n_eta - n_xi).abs() < 1e-12);
            assert!(map.map_node(&vec![0.0; r]).unwrap().iter().all(|&x| x == 0.0));
            assert!(map.map_node(&vec![0.0; r + 1]).is_err());
        }
    }

    #[test]
    fn one_dimensional_isometry() {
        let u = DMatrix::from_column_slice(3, 1, &[-1.0, -2.0, -0.5]);
        let w = [1.0, 1.0, 1.0];
        let pairs = hilbert_kl_factored(&u, &w).unwrap();
        let map = build_isometry(1, &u, &pairs.values, &pairs.vectors, &w, 1).unwrap();
        assert!((map.a[(0, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_request_fails() {
        let u = DMatrix::from_fn(10, 3, |r, _| r as f64 + 1.0);
        let w = vec![1.0; 10];
        let pairs = hilbert_kl_factored(&u, &w).unwrap();
        assert!(build_isometry(1, &u, &pairs.values, &pairs.vectors, &w, 1).is_ok());
        let map = build_isometry(1, &u, &pairs.values, &pairs.vectors, &w, 1).unwrap();
        assert!(map.isometry_error() < 1e-10);
        assert!(matches!(
            build_isometry(1, &u, &pairs.values, &pairs.vectors, &w, 2),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn eta_is_standard_normal() {
        let u = random_u(50, 5, 21);
        let w = vec![1.0; 50];
        let pairs = hilbert_kl_factored(&u, &w).unwrap();
        let map = build_isometry(1, &u, &pairs.values, &pairs.vectors, &w, 3).unwrap();
        let n = 100_000;
        let mut cov = DMatrix::<f64>::zeros(5, 5);
        for xi in normal_vectors(5, n, 5) {
            let eta = &map.a * DVector::from_vec(xi);
            cov += &eta * eta.transpose();
        }
        cov /= n as f64;
        for i in 0..5 {
            for j in 0..5 {
                assert!((cov[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 0.05);
            }
        }
    }

    #[test]
    fn indicator_values() {
        assert_eq!(truncation_error_indicator(&[3.0, 2.0, 1.0], 3).unwrap(), 0.0);
        assert_eq!(truncation_error_indicator(&[1.0, 0.0, 0.0], 1).unwrap(), 0.0);
        assert!((truncation_error_indicator(&[3.0, 2.0, 1.0], 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(truncation_error_indicator(&[0.0, 0.0], 1).is_err());
        assert_eq!(auto_r(&[1.0, 0.5, 0.001, 0.0]).unwrap(), 2);
        assert_eq!(numerical_rank(&[1.0, 1e-13, 0.0]), 1);
    }

    #[test]
    fn cost_sums() {
        let c = total_cost(221, &[165; 8]);
        assert_eq!(c.total(), 1541);
        assert_eq!(c.stages.len(), 9);
        assert_eq!(total_cost(5, &[13]).total(), 18);
    }

    #[test]
    fn stitching_identical_pieces() {
        let grid = build_grid(Rect::new(0.0, 240.0, 0.0, 60.0), 9, 5).unwrap();
        let part = partition_snake(&grid, 4, 2).unwrap();
        let u = random_u(grid.len(), 2, 4);
        let sol = linear_solution(&u);
        let st = stitch(vec![sol.clone(); 8], &part, &grid).unwrap();
        assert!(!st.mismatches.is_empty());
        assert_eq!(st.max_mean_mismatch(), 0.0);
        assert_eq!(st.max_std_mismatch(), 0.0);
        assert_eq!(st.mean, sol.mean());
        assert!(stitch(vec![sol.clone(); 7], &part, &grid).is_err());

        let single = partition_snake(&grid, 1, 1).unwrap();
        let st = stitch(vec![sol.clone()], &single, &grid).unwrap();
        assert!(st.mismatches.is_empty());
        assert_eq!(st.std, sol.std());
    }

    fn small_model(d: usize) -> (StructuredGrid, RandomFieldModel) {
        let grid = build_grid(Rect::new(0.0, 240.0, 0.0, 60.0), 25, 7).unwrap();
        let w = quad_weights(&grid);
        let (sg, g0) = lognormal_params(5.0, 2.5).unwrap();
        let k = CovarianceKernel::new(sg, 24.0, 20.0).unwrap();
        (grid.clone(), kl_solve(&k, &grid, &w, d, g0).unwrap())
    }

    #[test]
    fn full_rank_adaptation_reproduces_full_solution() {
        let (grid, model) = small_model(3);
        let problem = Problem::new(&grid, &model, BcCase::Mixed).unwrap();
        let opts = RunOptions::default();
        let full = run_full(&problem, &MultiIndexSet::new(3, 2).unwrap(), &smolyak(3, 3).unwrap(), opts).unwrap();
        let gauss = run_coarse_gaussian(&problem, 1, opts).unwrap();
        let part = partition_snake(&grid, 1, 1).unwrap();
        let out = run_pipeline(&problem, &part, &gauss.solution, &RChoice::Fixed(3), 2, 3, opts).unwrap();
        let rel = |a: &[f64], b: &[f64]| {
            let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
            (num / b.iter().map(|y| y * y).sum::<f64>()).sqrt()
        };
        assert!(rel(&out.stitched.mean, &full.solution.mean()) < 1e-6);
        assert!(rel(&out.stitched.std, &full.solution.std()) < 1e-6);
    }

    #[test]
    fn deterministic_model_gives_constant_solution() {
        let grid = build_grid(Rect::new(0.0, 240.0, 0.0, 60.0), 13, 5).unwrap();
        let model = RandomFieldModel::deterministic(vec![1.0; grid.len()], 3).unwrap();
        let problem = Problem::new(&grid, &model, BcCase::Mixed).unwrap();
        let u = random_u(grid.len(), 3, 8);
        let w = vec![1.0; grid.len()];
        let pairs = hilbert_kl_factored(&u, &w).unwrap();
        let map = build_isometry(1, &u, &pairs.values, &pairs.vectors, &w, 2).unwrap();
        let run = run_adapted(&problem, &map, 2, 2, RunOptions::default()).unwrap();
        assert!(run.solution.std().iter().all(|&s| s < 1e-10));
        assert_eq!(run.solves, smolyak(2, 2).unwrap().len());
    }
}
