//! Non-intrusive chaos projection by sparse-grid collocation in the original
//! KL variables.

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::chaos::{Germ, MultiIndexSet, PCSolution};
use crate::diffusion::{self, BcCase};
use crate::error::{Error, Result};
use crate::mesh::{build_grid, StructuredGrid};
use crate::random_field::RandomFieldModel;
use crate::sparse_grid::{smolyak, SparseGrid};

/// One stochastic boundary-value problem: grid, coefficient model, boundary
/// conditions and a deterministic source.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub grid: &'a StructuredGrid,
    pub model: &'a RandomFieldModel,
    pub bc: BcCase,
    pub source: Vec<f64>,
}

impl<'a> Problem<'a> {
    pub fn new(grid: &'a StructuredGrid, model: &'a RandomFieldModel, bc: BcCase) -> Result<Self> {
        if model.num_nodes() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: model.num_nodes() });
        }
        Ok(Problem { grid, model, bc, source: vec![0.0; grid.len()] })
    }

    pub fn with_constant_source(mut self, f: f64) -> Self {
        self.source = vec![f; self.grid.len()];
        self
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Deterministic solution for one germ value.
    pub fn solve_at(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let a = self.model.realize_a(xi)?;
        diffusion::solve_field(self.grid, &a, self.bc, &self.source)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { workers: 1 }
    }
}

/// Result of a collocation run with its cost.
#[derive(Debug, Clone)]
pub struct CollocationRun {
    pub solution: PCSolution,
    pub solves: usize,
    pub seconds: f64,
}

const CHUNK: usize = 64;

/// Run `f` on a pool of `workers` threads. Inside an existing pool `f`
/// runs on that pool.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers <= 1 || rayon::current_thread_index().is_some() {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Quadrature projection `c_i(x) = sum_q u_q(x) psi_i(z_q) w_q`.
///
/// `eval(q)` returns the nodal field at quadrature point `q`. Evaluations run
/// concurrently, but the sum is accumulated chunk by chunk in point order so
/// the coefficients do not depend on scheduling.
pub fn project<F>(
    basis: &MultiIndexSet,
    points: &[Vec<f64>],
    weights: &[f64],
    num_nodes: usize,
    opts: RunOptions,
    stage: &'static str,
    eval: F,
) -> Result<DMatrix<f64>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
    }
    let mut coeffs = DMatrix::zeros(num_nodes, basis.len());
    let wrap = |q: usize| {
        eval(q).map_err(|e| Error::SolveFailed { stage, index: q, source: Box::new(e) })
    };
    with_workers(opts.workers, || -> Result<()> {
        for start in (0..points.len()).step_by(CHUNK) {
            let end = (start + CHUNK).min(points.len());
            let fields: Vec<Vec<f64>> = if opts.workers > 1 {
                (start..end).into_par_iter().map(wrap).collect::<Result<_>>()?
            } else {
                (start..end).map(wrap).collect::<Result<_>>()?
            };
            let mut u = DMatrix::zeros(num_nodes, end - start);
            let mut psi_w = DMatrix::zeros(end - start, basis.len());
            for (c, field) in fields.iter().enumerate() {
                if field.len() != num_nodes {
                    return Err(Error::DimensionMismatch { expected: num_nodes, got: field.len() });
                }
                u.column_mut(c).copy_from_slice(field);
                let q = start + c;
                for (i, p) in basis.eval_all(&points[q])?.into_iter().enumerate() {
                    psi_w[(c, i)] = p * weights[q];
                }
            }
            coeffs.gemm(1.0, &u, &psi_w, 1.0);
        }
        Ok(())
    })??;
    Ok(coeffs)
}

fn check_exactness(sg: &SparseGrid, order: usize) {
    if sg.exactness_degree() < 2 * order {
        log::warn!(
            "sparse grid level {} integrates degree {} exactly; order-{} projection needs {}",
            sg.level,
            sg.exactness_degree(),
            order,
            2 * order
        );
    }
}

/// Full-dimensional projection of the solution onto `basis`.
pub fn run_full(problem: &Problem, basis: &MultiIndexSet, sg: &SparseGrid, opts: RunOptions) -> Result<CollocationRun> {
    let d = problem.dim();
    if basis.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: basis.dim() });
    }
    if sg.dim != d {
        return Err(Error::DimensionMismatch { expected: d, got: sg.dim });
    }
    check_exactness(sg, basis.order());
    let t0 = Instant::now();
    let coeffs = project(basis, &sg.nodes, &sg.weights, problem.grid.len(), opts, "full collocation", |q| {
        problem.solve_at(&sg.nodes[q])
    })?;
    Ok(CollocationRun {
        solution: PCSolution::new(basis.clone(), Germ::Xi, coeffs)?,
        solves: sg.len(),
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Mean and first-order terms of a chaos solution.
pub fn gaussian_part(sol: &PCSolution) -> Result<PCSolution> {
    sol.gaussian_part()
}

/// First-order chaos solution from a cheap sparse grid (0-based `level`).
pub fn run_coarse_gaussian(problem: &Problem, level: usize, opts: RunOptions) -> Result<CollocationRun> {
    let basis = MultiIndexSet::new(problem.dim(), 1)?;
    let sg = smolyak(problem.dim(), level)?;
    run_full(problem, &basis, &sg, opts)
}

/// As [`run_coarse_gaussian`], optionally also coarsening the spatial grid by
/// `factor`. The coarse coefficients are interpolated bilinearly back onto
/// the problem grid.
pub fn run_coarse_gaussian_with_factor(
    problem: &Problem,
    level: usize,
    factor: usize,
    opts: RunOptions,
) -> Result<CollocationRun> {
    if factor <= 1 {
        return run_coarse_gaussian(problem, level, opts);
    }
    let grid = problem.grid;
    if (grid.n1 - 1) % factor != 0 || (grid.n2 - 1) % factor != 0 {
        return Err(Error::invalid(format!(
            "coarse spatial factor {factor} does not divide the {}x{} cell grid",
            grid.n1 - 1,
            grid.n2 - 1
        )));
    }
    let coarse = build_grid(grid.rect, (grid.n1 - 1) / factor + 1, (grid.n2 - 1) / factor + 1)?;
    let subset: Vec<usize> = (0..coarse.len())
        .map(|k| {
            let (i, j) = coarse.ij(k);
            grid.index(i * factor, j * factor)
        })
        .collect();
    let coarse_model = problem.model.restrict(&subset)?;
    let coarse_problem = Problem {
        grid: &coarse,
        model: &coarse_model,
        bc: problem.bc,
        source: subset.iter().map(|&k| problem.source[k]).collect(),
    };
    let run = run_coarse_gaussian(&coarse_problem, level, opts)?;
    let c = &run.solution.coeffs;
    let fine = DMatrix::from_fn(grid.len(), c.ncols(), |k, col| {
        let (i, j) = grid.ij(k);
        let (ci, ti) = ((i / factor).min(coarse.n1 - 2), (i as f64 / factor as f64) - ((i / factor).min(coarse.n1 - 2)) as f64);
        let (cj, tj) = ((j / factor).min(coarse.n2 - 2), (j as f64 / factor as f64) - ((j / factor).min(coarse.n2 - 2)) as f64);
        let at = |a: usize, b: usize| c[(coarse.index(a, b), col)];
        (1.0 - ti) * (1.0 - tj) * at(ci, cj)
            + ti * (1.0 - tj) * at(ci + 1, cj)
            + (1.0 - ti) * tj * at(ci, cj + 1)
            + ti * tj * at(ci + 1, cj + 1)
    });
    Ok(CollocationRun {
        solution: PCSolution::new(run.solution.basis.clone(), Germ::Xi, fine)?,
        solves: run.solves,
        seconds: run.seconds,
    })
}
