//! Smolyak sparse quadrature for the standard Gaussian measure.
//!
//! One-dimensional rules are Gauss-Hermite with linear growth: level `l`
//! (0-based) uses `l + 1` points and is exact to degree `2l + 1`. The
//! combination technique sums tensor rules over `L - d + 1 <= |l| <= L` with
//! coefficients `(-1)^(L-|l|) C(d-1, L-|l|)`, and coincident nodes are merged.
//! The resulting grid integrates every polynomial of total degree `2L + 1`.
//!
//! Levels here are 0-based. The conventional 1-based "sparse-grid level" used
//! when quoting point counts (221 points for dimension 10 at level 3, 8761 at
//! level 5, 165 for dimension 3 at level 5) is this level plus one; see
//! [`from_one_based`].

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::chaos::hermite_normalized_table;
use crate::error::{Error, Result};

/// Convert a 1-based conventional level to the internal 0-based level.
pub fn from_one_based(level_one_based: usize) -> Result<usize> {
    level_one_based
        .checked_sub(1)
        .ok_or_else(|| Error::invalid("sparse-grid levels are 1-based in configuration"))
}

/// Number of points of the 1D rule at `level`.
pub fn rule_size(level: usize) -> usize {
    level + 1
}

/// Highest total degree integrated exactly by a level-`level` grid.
pub fn exactness_degree(level: usize) -> usize {
    2 * level + 1
}

/// Probabilists' Gauss-Hermite rule with `n` points for the weight
/// `exp(-x^2/2) / sqrt(2 pi)`. Nodes ascend; the rule is exactly symmetric.
pub fn gauss_hermite_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one point");
    if n == 1 {
        return (vec![0.0], vec![1.0]);
    }
    // Golub-Welsch for starting values, then Newton on the normalized
    // three-term recurrence.
    let jacobi = DMatrix::from_fn(n, n, |r, c| {
        if r + 1 == c || c + 1 == r {
            (r.max(c) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let mut weights = vec![0.0; n];
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        for _ in 0..4 {
            let h = hermite_normalized_table(n, *x);
            // d/dx of the normalized degree-n polynomial is sqrt(n) h_{n-1}.
            let step = h[n] / ((n as f64).sqrt() * h[n - 1]);
            *x -= step;
            if step.abs() < 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let h = hermite_normalized_table(n - 1, *x);
        *w = 1.0 / (n as f64 * h[n - 1] * h[n - 1]);
    }
    // Enforce exact symmetry.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

#[derive(Debug, Clone)]
pub struct SparseGrid {
    pub dim: usize,
    pub level: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SparseGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn exactness_degree(&self) -> usize {
        exactness_degree(self.level)
    }

    /// Quadrature of `f` over the Gaussian measure.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(z, w)| w * f(z)).sum()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All level multi-indices of length `dim` with `lo <= |l| <= hi`, in
/// lexicographic order.
fn level_indices(dim: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, dim: usize, remaining: usize, lo: usize, hi: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == dim {
            let s: usize = prefix.iter().sum();
            if s >= lo && s <= hi {
                out.push(prefix.clone());
            }
            return;
        }
        for l in 0..=remaining {
            prefix.push(l);
            rec(prefix, dim, remaining - l, lo, hi, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(dim), dim, hi, lo, hi, &mut out);
    out
}

/// Merge tolerance for coincident nodes.
const MERGE_TOL: f64 = 1e-12;

fn node_key(z: &[f64]) -> Vec<i64> {
    z.iter().map(|&x| (x / MERGE_TOL).round() as i64).collect()
}

pub fn smolyak(dim: usize, level: usize) -> Result<SparseGrid> {
    if dim == 0 {
        return Err(Error::invalid("sparse grid dimension must be positive"));
    }
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (0..=level).map(|l| gauss_hermite_1d(rule_size(l))).collect();
    let lo = (level + 1).saturating_sub(dim);
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut lookup: HashMap<Vec<i64>, usize> = HashMap::new();
    for ell in level_indices(dim, lo, level) {
        let s: usize = ell.iter().sum();
        let gap = level - s;
        let coeff = if gap % 2 == 0 { 1.0 } else { -1.0 } * binomial(dim - 1, gap);
        if coeff == 0.0 {
            continue;
        }
        // Odometer over the tensor product of the selected 1D rules.
        let sizes: Vec<usize> = ell.iter().map(|&l| rule_size(l)).collect();
        let mut counter = vec![0usize; dim];
        loop {
            let z: Vec<f64> = (0..dim).map(|k| rules[ell[k]].0[counter[k]]).collect();
            let w: f64 = coeff * (0..dim).map(|k| rules[ell[k]].1[counter[k]]).product::<f64>();
            match lookup.entry(node_key(&z)) {
                std::collections::hash_map::Entry::Occupied(e) => weights[*e.get()] += w,
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(nodes.len());
                    nodes.push(z);
                    weights.push(w);
                }
            }
            let mut k = 0;
            loop {
                if k == dim {
                    break;
                }
                counter[k] += 1;
                if counter[k] < sizes[k] {
                    break;
                }
                counter[k] = 0;
                k += 1;
            }
            if k == dim {
                break;
            }
        }
    }
    Ok(SparseGrid { dim, level, nodes, weights })
}

/// Number of distinct nodes of `smolyak(dim, level)`, counted
/// combinatorially without building the grid.
///
/// A merged node is characterized per coordinate either by being zero (zero
/// belongs to every odd-sized rule, i.e. even levels) or by the unique level
/// whose rule first contains that nonzero value. A pattern is present iff
/// some admissible level multi-index with a nonzero combination coefficient
/// realizes it.
pub fn node_count(dim: usize, level: usize) -> usize {
    let nonzero = |l: usize| -> u128 {
        let n = rule_size(l);
        if n % 2 == 1 { (n - 1) as u128 } else { n as u128 }
    };
    let lo = (level + 1).saturating_sub(dim);
    // ways[s][z]: weighted number of coordinate patterns with level sum s
    // over nonzero coordinates and z zero coordinates.
    let mut ways = vec![vec![0u128; dim + 1]; level + 1];
    ways[0][0] = 1;
    for _ in 0..dim {
        let mut next = vec![vec![0u128; dim + 1]; level + 1];
        for s in 0..=level {
            for z in 0..dim {
                let w = ways[s][z];
                if w == 0 {
                    continue;
                }
                next[s][z + 1] += w;
                for l in 1..=(level - s) {
                    next[s + l][z] += w * nonzero(l);
                }
            }
        }
        ways = next;
    }
    let mut total: u128 = 0;
    for (s, row) in ways.iter().enumerate() {
        for (z, &w) in row.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let admissible = if z == 0 {
                s >= lo
            } else {
                // Zero coordinates can absorb any even extra level.
                let need_lo = lo.saturating_sub(s);
                let need_hi = level - s;
                let first_even = need_lo + need_lo % 2;
                first_even <= need_hi
            };
            if admissible {
                total += w;
            }
        }
    }
    total as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules() {
        let (x, w) = gauss_hermite_1d(1);
        assert_eq!((x, w), (vec![0.0], vec![1.0]));
        let (x, w) = gauss_hermite_1d(2);
        assert!((x[0] + 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eighth_moment_with_five_points() {
        let (x, w) = gauss_hermite_1d(5);
        let m8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 105.0).abs() < 1e-9, "{m8}");
    }

    #[test]
    fn rules_are_exact_to_2n_minus_1() {
        // E[x^2k] = (2k-1)!!
        let dfact = |k: usize| (1..=k).map(|i| (2 * i - 1) as f64).product::<f64>();
        for n in 1..=12 {
            let (x, w) = gauss_hermite_1d(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { dfact(deg / 2) };
                let scale = dfact((deg + 1) / 2);
                assert!((m - exact).abs() <= 1e-11 * scale, "n={n} deg={deg} m={m}");
            }
        }
    }

    #[test]
    fn level_zero_is_origin() {
        for d in 1..6 {
            let g = smolyak(d, 0).unwrap();
            assert_eq!(g.len(), 1);
            assert!(g.nodes[0].iter().all(|&x| x == 0.0));
            assert_eq!(g.weights[0], 1.0);
        }
    }

    #[test]
    fn reference_counts() {
        assert_eq!(smolyak(10, 2).unwrap().len(), 221);
        assert_eq!(smolyak(3, 4).unwrap().len(), 165);
        assert_eq!(node_count(10, 4), 8761);
        assert_eq!(node_count(10, 2), 221);
        assert_eq!(node_count(3, 4), 165);
        assert_eq!(node_count(1, 1), 2);
    }

    #[test]
    fn combinatorial_count_matches_materialized_grid() {
        for d in 1..=6 {
            for l in 0..=5 {
                assert_eq!(node_count(d, l), smolyak(d, l).unwrap().len(), "d={d} l={l}");
            }
        }
    }

    #[test]
    fn level_offset() {
        assert_eq!(from_one_based(3).unwrap(), 2);
        assert_eq!(from_one_based(5).unwrap(), 4);
        assert!(from_one_based(0).is_err());
    }
}
