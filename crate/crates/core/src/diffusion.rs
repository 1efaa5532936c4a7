//! Steady diffusion `-div(a grad u) = f` on a structured grid.
//!
//! Vertex-centred finite volumes: every node owns the dual cell around it
//! (halved at the boundary), faces between neighbours carry the harmonic mean
//! of the nodal coefficients, and zero-flux sides are the natural condition.
//! All rows are divided by the full cell area `h1 h2`, which keeps the matrix
//! symmetric and gives the textbook `a/h^2 (-1, -1, 4, -1, -1)` row inside.

use crate::error::{Error, Result};
use crate::linalg::BandedSpd;
use crate::mesh::StructuredGrid;

/// Dirichlet value on the `x1 = x1_min` side in both benchmark cases.
pub const INLET_VALUE: f64 = 100.0;
/// Dirichlet value on the `x1 = x1_max` side in both benchmark cases.
pub const OUTLET_VALUE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcCase {
    /// 100 on the left, 10 on the right, zero flux top and bottom.
    Mixed,
    /// 100 on the left, 10 on the right, 0 top and bottom. Corner nodes take
    /// the left/right value.
    AllDirichlet,
    /// The same constant on all four sides.
    UniformDirichlet(f64),
}

impl BcCase {
    fn dirichlet_value(&self, grid: &StructuredGrid, i: usize, j: usize) -> Option<f64> {
        let left = i == 0;
        let right = i == grid.n1 - 1;
        let bottom_top = j == 0 || j == grid.n2 - 1;
        match *self {
            BcCase::Mixed | BcCase::AllDirichlet if left => Some(INLET_VALUE),
            BcCase::Mixed | BcCase::AllDirichlet if right => Some(OUTLET_VALUE),
            BcCase::AllDirichlet if bottom_top => Some(0.0),
            BcCase::UniformDirichlet(v) if left || right || bottom_top => Some(v),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BcCase::Mixed => "mixed",
            BcCase::AllDirichlet => "dirichlet",
            BcCase::UniformDirichlet(_) => "uniform",
        }
    }
}

/// Assembled system for one coefficient realization.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    n1: usize,
    n2: usize,
    cell_area: f64,
    // Face conductances already divided by the cell area.
    east: Vec<f64>,
    north: Vec<f64>,
    source: Vec<f64>,
    dirichlet: Vec<Option<f64>>,
    unknown_of: Vec<Option<usize>>,
    node_of: Vec<usize>,
    pub matrix: BandedSpd,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DeterministicSolution {
    pub values: Vec<f64>,
    /// `||A u - b|| / ||b||` over the unknowns.
    pub residual: f64,
}

/// Net flux entering the domain through each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFlux {
    pub left: f64,
    pub right: f64,
    pub bottom: f64,
    pub top: f64,
}

impl BoundaryFlux {
    pub fn total(&self) -> f64 {
        self.left + self.right + self.bottom + self.top
    }
}

#[inline]
fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

pub fn assemble(grid: &StructuredGrid, a_field: &[f64], bc: BcCase, f_field: &[f64]) -> Result<LinearSystem> {
    let n = grid.len();
    if a_field.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a_field.len() });
    }
    if f_field.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f_field.len() });
    }
    if let Some((node, &value)) = a_field.iter().enumerate().find(|(_, &a)| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::NonPositiveCoefficient { node, value });
    }
    let (n1, n2) = (grid.n1, grid.n2);
    let half = |idx: usize, len: usize| if idx == 0 || idx == len - 1 { 0.5 } else { 1.0 };
    let (inv1, inv2) = (1.0 / (grid.h1 * grid.h1), 1.0 / (grid.h2 * grid.h2));

    let mut east = vec![0.0; (n1 - 1) * n2];
    for j in 0..n2 {
        for i in 0..n1 - 1 {
            let (p, q) = (grid.index(i, j), grid.index(i + 1, j));
            east[j * (n1 - 1) + i] = harmonic(a_field[p], a_field[q]) * inv1 * half(j, n2);
        }
    }
    let mut north = vec![0.0; n1 * (n2 - 1)];
    for j in 0..n2 - 1 {
        for i in 0..n1 {
            let (p, q) = (grid.index(i, j), grid.index(i, j + 1));
            north[j * n1 + i] = harmonic(a_field[p], a_field[q]) * inv2 * half(i, n1);
        }
    }
    let source: Vec<f64> = (0..n)
        .map(|k| {
            let (i, j) = grid.ij(k);
            f_field[k] * half(i, n1) * half(j, n2)
        })
        .collect();
    let dirichlet: Vec<Option<f64>> = (0..n)
        .map(|k| {
            let (i, j) = grid.ij(k);
            bc.dirichlet_value(grid, i, j)
        })
        .collect();
    if dirichlet.iter().all(Option::is_none) {
        return Err(Error::SingularSystem("no Dirichlet node: pure Neumann problem".into()));
    }

    // Number unknowns along the shorter axis first to keep the band narrow.
    let mut node_of = Vec::new();
    if n2 <= n1 {
        for i in 0..n1 {
            for j in 0..n2 {
                let k = grid.index(i, j);
                if dirichlet[k].is_none() {
                    node_of.push(k);
                }
            }
        }
    } else {
        for k in 0..n {
            if dirichlet[k].is_none() {
                node_of.push(k);
            }
        }
    }
    let mut unknown_of = vec![None; n];
    for (u, &k) in node_of.iter().enumerate() {
        unknown_of[k] = Some(u);
    }

    let faces = face_list(n1, n2);
    let mut bw = 0;
    for &(p, q, _) in &faces {
        if let (Some(a), Some(b)) = (unknown_of[p], unknown_of[q]) {
            bw = bw.max(a.abs_diff(b));
        }
    }
    let mut matrix = BandedSpd::zeros(node_of.len(), bw);
    let mut rhs: Vec<f64> = node_of.iter().map(|&k| source[k]).collect();
    for &(p, q, face) in &faces {
        let t = match face {
            Face::East(idx) => east[idx],
            Face::North(idx) => north[idx],
        };
        match (unknown_of[p], unknown_of[q]) {
            (Some(a), Some(b)) => {
                matrix.add(a, a, t);
                matrix.add(b, b, t);
                matrix.add(a, b, -t);
            }
            (Some(a), None) => {
                matrix.add(a, a, t);
                rhs[a] += t * dirichlet[q].unwrap();
            }
            (None, Some(b)) => {
                matrix.add(b, b, t);
                rhs[b] += t * dirichlet[p].unwrap();
            }
            (None, None) => {}
        }
    }
    Ok(LinearSystem {
        n1,
        n2,
        cell_area: grid.h1 * grid.h2,
        east,
        north,
        source,
        dirichlet,
        unknown_of,
        node_of,
        matrix,
        rhs,
    })
}

#[derive(Debug, Clone, Copy)]
enum Face {
    East(usize),
    North(usize),
}

fn face_list(n1: usize, n2: usize) -> Vec<(usize, usize, Face)> {
    let mut faces = Vec::with_capacity((n1 - 1) * n2 + n1 * (n2 - 1));
    for j in 0..n2 {
        for i in 0..n1 - 1 {
            faces.push((j * n1 + i, j * n1 + i + 1, Face::East(j * (n1 - 1) + i)));
        }
    }
    for j in 0..n2 - 1 {
        for i in 0..n1 {
            faces.push((j * n1 + i, (j + 1) * n1 + i, Face::North(j * n1 + i)));
        }
    }
    faces
}

impl LinearSystem {
    pub fn num_unknowns(&self) -> usize {
        self.node_of.len()
    }

    pub fn unknown_of(&self, node: usize) -> Option<usize> {
        self.unknown_of[node]
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        self.dirichlet[node].is_some()
    }

    /// Stencil of `node` over all neighbours, Dirichlet ones included, before
    /// elimination: `(node, coefficient)` pairs, centre first.
    pub fn operator_row(&self, node: usize) -> Vec<(usize, f64)> {
        let (n1, n2) = (self.n1, self.n2);
        let (i, j) = (node % n1, node / n1);
        let mut row = vec![(node, 0.0)];
        let mut push = |other: usize, t: f64| {
            row[0].1 += t;
            row.push((other, -t));
        };
        if i > 0 {
            push(node - 1, self.east[j * (n1 - 1) + i - 1]);
        }
        if i + 1 < n1 {
            push(node + 1, self.east[j * (n1 - 1) + i]);
        }
        if j > 0 {
            push(node - n1, self.north[(j - 1) * n1 + i]);
        }
        if j + 1 < n2 {
            push(node + n1, self.north[j * n1 + i]);
        }
        row
    }

    /// Flux entering through each side for a full nodal solution. Corner
    /// nodes count toward the left and right sides.
    pub fn boundary_flux(&self, values: &[f64]) -> BoundaryFlux {
        let mut flux = BoundaryFlux { left: 0.0, right: 0.0, bottom: 0.0, top: 0.0 };
        for (k, d) in self.dirichlet.iter().enumerate() {
            if d.is_none() {
                continue;
            }
            let r: f64 = self.operator_row(k).iter().map(|&(m, c)| c * values[m]).sum::<f64>() - self.source[k];
            let r = r * self.cell_area;
            let (i, j) = (k % self.n1, k / self.n1);
            if i == 0 {
                flux.left += r;
            } else if i == self.n1 - 1 {
                flux.right += r;
            } else if j == 0 {
                flux.bottom += r;
            } else {
                flux.top += r;
            }
        }
        flux
    }

    /// Total source integrated over the domain.
    pub fn total_source(&self) -> f64 {
        self.source.iter().sum::<f64>() * self.cell_area
    }
}

/// Relative residual accepted by [`solve`].
pub const SOLVE_TOL: f64 = 1e-10;

pub fn solve(system: &LinearSystem) -> Result<DeterministicSolution> {
    let mut values: Vec<f64> = system.dirichlet.iter().map(|d| d.unwrap_or(0.0)).collect();
    if system.num_unknowns() == 0 {
        return Ok(DeterministicSolution { values, residual: 0.0 });
    }
    let x = system.matrix.clone().cholesky()?.solve(&system.rhs);
    let ax = system.matrix.matvec(&x);
    let rnorm = ax.iter().zip(&system.rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let bnorm = system.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
    let residual = if bnorm > 0.0 { rnorm / bnorm } else { rnorm };
    if !(residual <= SOLVE_TOL) {
        return Err(Error::NonConvergence { residual });
    }
    for (u, &k) in system.node_of.iter().enumerate() {
        values[k] = x[u];
    }
    Ok(DeterministicSolution { values, residual })
}

/// Assemble and solve in one step, returning nodal values.
pub fn solve_field(grid: &StructuredGrid, a_field: &[f64], bc: BcCase, f_field: &[f64]) -> Result<Vec<f64>> {
    Ok(solve(&assemble(grid, a_field, bc, f_field)?)?.values)
}
