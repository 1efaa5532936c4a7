//! Monte Carlo reference solutions and error metrics.

use rayon::prelude::*;

use crate::collocation::{with_workers, Problem, RunOptions};
use crate::error::{Error, Result};
use crate::sampling::normal_vector;

/// Smallest Monte Carlo sample accepted.
pub const MC_MIN_SAMPLES: usize = 100;

/// One-pass mean and variance (Welford) for a vector of nodes.
#[derive(Debug, Clone)]
pub struct RunningStats {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningStats {
    pub fn new(len: usize) -> Self {
        RunningStats { count: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> Vec<f64> {
        let n = self.count.max(2) as f64 - 1.0;
        self.m2.iter().map(|s| (s / n).max(0.0)).collect()
    }

    pub fn std(&self) -> Vec<f64> {
        self.variance().into_iter().map(f64::sqrt).collect()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.std().into_iter().map(|s| s / n.sqrt()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct McReference {
    pub samples: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub std_error: Vec<f64>,
}

const MC_CHUNK: usize = 64;

/// Plain Monte Carlo over iid standard-normal germs. Sample `i` uses the
/// random stream `(seed, i)`, so results do not depend on the worker count.
pub fn mc_reference(problem: &Problem, n: usize, seed: u64, opts: RunOptions) -> Result<McReference> {
    if n < MC_MIN_SAMPLES {
        return Err(Error::invalid(format!("Monte Carlo needs at least {MC_MIN_SAMPLES} samples")));
    }
    let d = problem.dim();
    let mut stats = RunningStats::new(problem.grid.len());
    let one = |i: usize| {
        problem
            .solve_at(&normal_vector(seed, i as u64, d))
            .map_err(|e| Error::SolveFailed { stage: "monte carlo", index: i, source: Box::new(e) })
    };
    with_workers(opts.workers, || -> Result<()> {
        for start in (0..n).step_by(MC_CHUNK) {
            let end = (start + MC_CHUNK).min(n);
            let fields: Vec<Vec<f64>> = if opts.workers > 1 {
                (start..end).into_par_iter().map(one).collect::<Result<_>>()?
            } else {
                (start..end).map(one).collect::<Result<_>>()?
            };
            for f in &fields {
                stats.push(f);
            }
        }
        Ok(())
    })??;
    Ok(McReference { samples: n, mean: stats.mean().to_vec(), std: stats.std(), std_error: stats.std_error() })
}

/// Weighted relative error `||f - g|| / ||g||` over `region` (all nodes when
/// `None`).
pub fn rel_l2_error(f: &[f64], g: &[f64], weights: &[f64], region: Option<&[usize]>) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::DimensionMismatch { expected: g.len(), got: f.len() });
    }
    if weights.len() != g.len() {
        return Err(Error::DimensionMismatch { expected: g.len(), got: weights.len() });
    }
    let all: Vec<usize>;
    let nodes = match region {
        Some(r) => r,
        None => {
            all = (0..g.len()).collect();
            &all
        }
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for &k in nodes {
        if k >= g.len() {
            return Err(Error::invalid(format!("region node {k} out of range")));
        }
        num += weights[k] * (f[k] - g[k]).powi(2);
        den += weights[k] * g[k] * g[k];
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((num / den).sqrt())
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("KS distance needs non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}
