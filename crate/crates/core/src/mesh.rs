//! Structured rectangular grids, trapezoid quadrature and the non-overlapping
//! subdomain partition.
//!
//! Nodes are stored row-major: `k = j * n1 + i` with `i` running along `x1`.

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x1_min, x1_max] x [x2_min, x2_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl Rect {
    pub fn new(x1_min: f64, x1_max: f64, x2_min: f64, x2_max: f64) -> Self {
        Rect { x1_min, x1_max, x2_min, x2_max }
    }

    pub fn area(&self) -> f64 {
        (self.x1_max - self.x1_min) * (self.x2_max - self.x2_min)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x1_min && p[0] <= self.x1_max && p[1] >= self.x2_min && p[1] <= self.x2_max
    }
}

#[derive(Debug, Clone)]
pub struct StructuredGrid {
    pub rect: Rect,
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    nodes: Vec<[f64; 2]>,
}

impl StructuredGrid {
    pub fn new(rect: Rect, n1: usize, n2: usize) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 nodes per axis, got {n1}x{n2}")));
        }
        let len1 = rect.x1_max - rect.x1_min;
        let len2 = rect.x2_max - rect.x2_min;
        if !(len1 > 0.0 && len2 > 0.0) || !len1.is_finite() || !len2.is_finite() {
            return Err(Error::invalid(format!("grid extents must be positive, got {len1} x {len2}")));
        }
        let coord = |min: f64, len: f64, i: usize, n: usize| min + len * (i as f64) / ((n - 1) as f64);
        let mut nodes = Vec::with_capacity(n1 * n2);
        for j in 0..n2 {
            let x2 = coord(rect.x2_min, len2, j, n2);
            for i in 0..n1 {
                nodes.push([coord(rect.x1_min, len1, i, n1), x2]);
            }
        }
        Ok(StructuredGrid {
            rect,
            n1,
            n2,
            h1: len1 / (n1 - 1) as f64,
            h2: len2 / (n2 - 1) as f64,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> [f64; 2] {
        self.nodes[k]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n1 + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n1, k / self.n1)
    }

    /// Index of the grid node closest to `p`. `p` must lie in the grid box.
    pub fn nearest_node(&self, p: [f64; 2]) -> Result<usize> {
        if !self.rect.contains(p) {
            return Err(Error::invalid(format!("point ({}, {}) lies outside the domain", p[0], p[1])));
        }
        let i = ((p[0] - self.rect.x1_min) / self.h1).round() as usize;
        let j = ((p[1] - self.rect.x2_min) / self.h2).round() as usize;
        Ok(self.index(i.min(self.n1 - 1), j.min(self.n2 - 1)))
    }

    /// Trapezoid weights of the sub-block `i0..=i1, j0..=j1`, returned in
    /// row-major order of the block.
    fn block_weights(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Vec<f64> {
        let cell = self.h1 * self.h2;
        let mut w = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
        for j in j0..=j1 {
            let fj = if j == j0 || j == j1 { 0.5 } else { 1.0 };
            for i in i0..=i1 {
                let fi = if i == i0 || i == i1 { 0.5 } else { 1.0 };
                w.push(cell * fi * fj);
            }
        }
        w
    }
}

pub fn build_grid(rect: Rect, n1: usize, n2: usize) -> Result<StructuredGrid> {
    StructuredGrid::new(rect, n1, n2)
}

/// Per-node trapezoid weights; they sum to the area of the grid box.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureWeights(Vec<f64>);

impl QuadratureWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for QuadratureWeights {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn quad_weights(grid: &StructuredGrid) -> QuadratureWeights {
    QuadratureWeights(grid.block_weights(0, grid.n1 - 1, 0, grid.n2 - 1))
}

/// Node-index extents of one subdomain box (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxRange {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl BoxRange {
    fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i <= self.i1 && j >= self.j0 && j <= self.j1
    }
}

/// Disjoint labeling of grid nodes into `S = nx * ny` rectangular subdomains.
///
/// Subdomain ids are 1-based and follow a serpentine order: the bottom row
/// runs left to right, the next row right to left, and so on. A node on a
/// shared edge belongs to the lowest-numbered box that contains it.
#[derive(Debug, Clone)]
pub struct SubdomainPartition {
    pub nx: usize,
    pub ny: usize,
    labels: Vec<usize>,
    boxes: Vec<Rect>,
    ranges: Vec<BoxRange>,
}

impl SubdomainPartition {
    pub fn count(&self) -> usize {
        self.boxes.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    /// Rectangle of subdomain `s` (1-based).
    pub fn rect(&self, s: usize) -> Rect {
        self.boxes[s - 1]
    }

    pub fn range(&self, s: usize) -> BoxRange {
        self.ranges[s - 1]
    }

    /// Nodes carrying label `s`, ascending.
    pub fn labeled_nodes(&self, s: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(k, &l)| (l == s).then_some(k))
            .collect()
    }

    /// All nodes in the closed box of subdomain `s`, row-major.
    pub fn box_nodes(&self, grid: &StructuredGrid, s: usize) -> Vec<usize> {
        let r = self.range(s);
        let mut out = Vec::with_capacity((r.i1 - r.i0 + 1) * (r.j1 - r.j0 + 1));
        for j in r.j0..=r.j1 {
            for i in r.i0..=r.i1 {
                out.push(grid.index(i, j));
            }
        }
        out
    }

    /// Trapezoid weights of the closed box of subdomain `s`, aligned with
    /// [`box_nodes`](Self::box_nodes). They sum to the box area.
    pub fn box_weights(&self, grid: &StructuredGrid, s: usize) -> Vec<f64> {
        let r = self.range(s);
        grid.block_weights(r.i0, r.i1, r.j0, r.j1)
    }

    /// Ids of every box whose closure contains `node`, ascending.
    pub fn boxes_containing(&self, grid: &StructuredGrid, node: usize) -> Vec<usize> {
        let (i, j) = grid.ij(node);
        (1..=self.count()).filter(|&s| self.ranges[s - 1].contains(i, j)).collect()
    }

    /// Subdomain id of the node nearest to `p`.
    pub fn subdomain_of(&self, grid: &StructuredGrid, p: [f64; 2]) -> Result<usize> {
        Ok(self.labels[grid.nearest_node(p)?])
    }
}

fn serpentine_id(bi: usize, bj: usize, nx: usize) -> usize {
    if bj % 2 == 0 {
        bj * nx + bi + 1
    } else {
        bj * nx + (nx - 1 - bi) + 1
    }
}

pub fn partition_snake(grid: &StructuredGrid, nx: usize, ny: usize) -> Result<SubdomainPartition> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("partition counts must be positive"));
    }
    if (grid.n1 - 1) % nx != 0 || (grid.n2 - 1) % ny != 0 {
        return Err(Error::invalid(format!(
            "{nx}x{ny} boxes do not tile a grid with {}x{} cells",
            grid.n1 - 1,
            grid.n2 - 1
        )));
    }
    let cx = (grid.n1 - 1) / nx;
    let cy = (grid.n2 - 1) / ny;
    let s_count = nx * ny;
    let mut boxes = vec![grid.rect; s_count];
    let mut ranges = vec![BoxRange { i0: 0, i1: 0, j0: 0, j1: 0 }; s_count];
    for bj in 0..ny {
        for bi in 0..nx {
            let s = serpentine_id(bi, bj, nx);
            let r = BoxRange { i0: bi * cx, i1: (bi + 1) * cx, j0: bj * cy, j1: (bj + 1) * cy };
            let lo = grid.node(grid.index(r.i0, r.j0));
            let hi = grid.node(grid.index(r.i1, r.j1));
            boxes[s - 1] = Rect::new(lo[0], hi[0], lo[1], hi[1]);
            ranges[s - 1] = r;
        }
    }
    let labels = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            (1..=s_count)
                .find(|&s| ranges[s - 1].contains(i, j))
                .expect("boxes tile the grid")
        })
        .collect();
    Ok(SubdomainPartition { nx, ny, labels, boxes, ranges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench_rect() -> Rect {
        Rect::new(0.0, 240.0, 0.0, 60.0)
    }

    #[test]
    fn grid_counts_and_spacing() {
        let g = build_grid(bench_rect(), 49, 13).unwrap();
        assert_eq!(g.len(), 637);
        assert_eq!(g.h1, 5.0);
        assert_eq!(g.h2, 5.0);

        let g = build_grid(bench_rect(), 97, 25).unwrap();
        assert_eq!(g.len(), 2425);
        assert_eq!((g.h1, g.h2), (2.5, 2.5));
        assert_eq!(g.node(g.len() - 1), [240.0, 60.0]);
        assert_eq!(g.node(0), [0.0, 0.0]);
    }

    #[test]
    fn minimal_grid_is_corners() {
        let g = build_grid(Rect::new(0.0, 1.0, 0.0, 1.0), 2, 2).unwrap();
        assert_eq!(g.nodes(), &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(build_grid(bench_rect(), 1, 5).is_err());
        assert!(build_grid(Rect::new(0.0, 0.0, 0.0, 1.0), 3, 3).is_err());
        assert!(build_grid(Rect::new(1.0, 0.0, 0.0, 1.0), 3, 3).is_err());
    }

    #[test]
    fn trapezoid_weights() {
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
        let w = quad_weights(&build_grid(unit, 2, 2).unwrap());
        assert_eq!(w.as_slice(), &[0.25; 4]);

        let w = quad_weights(&build_grid(unit, 3, 3).unwrap());
        let expect = [
            1.0 / 16.0, 1.0 / 8.0, 1.0 / 16.0,
            1.0 / 8.0, 1.0 / 4.0, 1.0 / 8.0,
            1.0 / 16.0, 1.0 / 8.0, 1.0 / 16.0,
        ];
        assert_eq!(w.as_slice(), &expect);

        let w = quad_weights(&build_grid(bench_rect(), 49, 13).unwrap());
        assert!((w.total() - 14400.0).abs() < 1e-12 * 14400.0);
    }

    #[test]
    fn serpentine_labels_match_sample_points() {
        let g = build_grid(bench_rect(), 97, 25).unwrap();
        let part = partition_snake(&g, 4, 2).unwrap();
        let at = |x1: f64, x2: f64| part.subdomain_of(&g, [x1, x2]).unwrap();
        assert_eq!(at(24.0, 15.0), 1);
        assert_eq!(at(81.0, 15.0), 2);
        assert_eq!(at(150.0, 15.0), 3);
        assert_eq!(at(210.0, 15.0), 4);
        assert_eq!(at(210.0, 45.0), 5);
        assert_eq!(at(150.0, 45.0), 6);
        assert_eq!(at(81.0, 45.0), 7);
        assert_eq!(at(24.0, 45.0), 8);
        for s in 1..=8 {
            let r = part.rect(s);
            assert_eq!(r.x1_max - r.x1_min, 60.0);
            assert_eq!(r.x2_max - r.x2_min, 30.0);
        }
    }

    #[test]
    fn interface_nodes_go_to_lower_index() {
        let g = build_grid(bench_rect(), 97, 25).unwrap();
        let part = partition_snake(&g, 4, 2).unwrap();
        // x1 = 60 between D1 and D2, x2 = 30 between D1 and D8.
        assert_eq!(part.label(g.index(24, 5)), 1);
        assert_eq!(part.label(g.index(5, 12)), 1);
        // x1 = 180 on the top row is shared by D5 and D6.
        assert_eq!(part.label(g.index(72, 20)), 5);
        assert_eq!(part.boxes_containing(&g, g.index(24, 12)), vec![1, 2, 7, 8]);
    }

    #[test]
    fn single_box_partition() {
        let g = build_grid(bench_rect(), 13, 5).unwrap();
        let part = partition_snake(&g, 1, 1).unwrap();
        assert!(part.labels().iter().all(|&l| l == 1));
        assert_eq!(part.rect(1), bench_rect());
        assert_eq!(part.box_nodes(&g, 1), (0..g.len()).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_non_tiling_partition() {
        let g = build_grid(bench_rect(), 10, 13).unwrap();
        assert!(partition_snake(&g, 4, 2).is_err());
    }

    #[test]
    fn box_weights_sum_to_box_area() {
        let g = build_grid(bench_rect(), 97, 25).unwrap();
        let part = partition_snake(&g, 4, 2).unwrap();
        for s in 1..=8 {
            let w = part.box_weights(&g, s);
            assert_eq!(w.len(), part.box_nodes(&g, s).len());
            assert!((w.iter().sum::<f64>() - 1800.0).abs() < 1e-9);
        }
    }
}
