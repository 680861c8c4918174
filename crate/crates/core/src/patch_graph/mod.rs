//! Patch-similarity graphs and the graph gradient operator.
//!
//! Nodes are pixels. Edges are stored once, oriented `i < j`; the gradient of
//! a node signal on edge `(i, j)` is `sqrt(w_ij) (x_i - x_j)`, so the l1 norm
//! of the gradient is the graph total variation and `grad^T grad` is the
//! combinatorial Laplacian `L = D - W`.

mod kdforest;
mod knn;
mod patches;

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

pub use kdforest::{knn_approx, ApproxParams, KdForest};
pub use knn::{knn_exact, recall, Neighbors};
pub use patches::{extract_patches, PatchSet};

use crate::error::{check_len, invalid, Result};
use crate::image::Image;
use crate::linalg::{power_iteration, CsrMatrix, PowerEstimate};
use crate::scalar::Real;

/// How the Gaussian kernel bandwidth is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// Mean of all retained directed neighbor distances.
    #[default]
    MeanConnectedDistance,
}

/// Weighted undirected graph over the pixels of an `n x n` image.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchGraph<T> {
    side: usize,
    k: usize,
    sigma: T,
    edges: Vec<(u32, u32)>,
    weights: Vec<T>,
    sqrt_weights: Vec<T>,
}

/// One value per oriented edge `(i, j)`, `i < j`.
pub type EdgeVector<T> = Vec<T>;

impl<T: Real> PatchGraph<T> {
    /// Graph from explicit undirected edges. Pairs are reoriented to `i < j`,
    /// duplicates merged (first weight kept) and the result sorted.
    pub fn from_edges(side: usize, k: usize, sigma: T, edges: &[(usize, usize, T)]) -> Result<Self> {
        let nodes = side * side;
        let mut list: Vec<(u32, u32, T)> = Vec::with_capacity(edges.len());
        for &(a, b, w) in edges {
            if a == b {
                return invalid("self-loops are not allowed");
            }
            if a >= nodes || b >= nodes {
                return invalid(format!("edge ({a}, {b}) out of range for {nodes} nodes"));
            }
            if !(w > T::zero() && w <= T::one()) {
                return invalid(format!("edge weight {w} outside (0, 1]"));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            list.push((i as u32, j as u32, w));
        }
        list.sort_by_key(|x| (x.0, x.1));
        list.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
        let graph = PatchGraph {
            side,
            k,
            sigma,
            edges: list.iter().map(|e| (e.0, e.1)).collect(),
            weights: list.iter().map(|e| e.2).collect(),
            sqrt_weights: list.iter().map(|e| e.2.sqrt()).collect(),
        };
        debug_assert!(graph.check_invariants().is_ok());
        Ok(graph)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn node_count(&self) -> usize {
        self.side * self.side
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors per node used to build the graph (4 for the grid).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Orientation, range, positivity and no-self-loop checks.
    pub fn check_invariants(&self) -> Result<()> {
        let nodes = self.node_count() as u32;
        for (&(i, j), &w) in self.edges.iter().zip(&self.weights) {
            if i >= j || j >= nodes {
                return invalid(format!("bad edge ({i}, {j})"));
            }
            if !(w > T::zero() && w <= T::one()) {
                return invalid(format!("bad weight {w} on edge ({i}, {j})"));
            }
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("edges not sorted or duplicated");
        }
        Ok(())
    }

    /// `out[e] = sqrt(w_e) (x_i - x_j)` without allocation.
    pub fn gradient_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.node_count());
        debug_assert_eq!(out.len(), self.edge_count());
        for ((o, &(i, j)), &s) in out.iter_mut().zip(&self.edges).zip(&self.sqrt_weights) {
            *o = s * (x[i as usize] - x[j as usize]);
        }
    }

    /// Adjoint of the gradient, written into `out`.
    pub fn divergence_into(&self, d: &[T], out: &mut [T]) {
        debug_assert_eq!(d.len(), self.edge_count());
        debug_assert_eq!(out.len(), self.node_count());
        out.iter_mut().for_each(|v| *v = T::zero());
        for ((&v, &(i, j)), &s) in d.iter().zip(&self.edges).zip(&self.sqrt_weights) {
            let f = s * v;
            out[i as usize] = out[i as usize] + f;
            out[j as usize] = out[j as usize] - f;
        }
    }

    /// Graph total variation `sum_e sqrt(w_e) |x_i - x_j|`.
    pub fn total_variation(&self, x: &[T]) -> T {
        self.edges
            .iter()
            .zip(&self.sqrt_weights)
            .fold(T::zero(), |acc, (&(i, j), &s)| acc + s * (x[i as usize] - x[j as usize]).abs())
    }

    /// Text edge list: a header `# n <side> K <k> sigma <sigma> edges <|E|>`,
    /// then one `i j w_ij` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# n {} K {} sigma {} edges {}",
            self.side,
            self.k,
            self.sigma,
            self.edge_count()
        )?;
        for (&(i, j), wt) in self.edges.iter().zip(&self.weights) {
            writeln!(w, "{i} {j} {wt}")?;
        }
        Ok(())
    }
}

/// `sqrt(w_ij) (x_i - x_j)` on every edge.
pub fn gradient<T: Real>(g: &PatchGraph<T>, x: &[T]) -> Result<EdgeVector<T>> {
    check_len(g.node_count(), x.len(), "graph signal")?;
    let mut out = vec![T::zero(); g.edge_count()];
    g.gradient_into(x, &mut out);
    Ok(out)
}

/// Adjoint of [`gradient`].
pub fn divergence<T: Real>(g: &PatchGraph<T>, d: &[T]) -> Result<Vec<T>> {
    check_len(g.edge_count(), d.len(), "edge vector")?;
    let mut out = vec![T::zero(); g.node_count()];
    g.divergence_into(d, &mut out);
    Ok(out)
}

/// Combinatorial Laplacian `D - W` in CSR form, columns sorted per row.
pub fn laplacian<T: Real>(g: &PatchGraph<T>) -> CsrMatrix<T> {
    let nodes = g.node_count();
    let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); nodes];
    let mut degree = vec![T::zero(); nodes];
    for (&(i, j), &w) in g.edges.iter().zip(&g.weights) {
        rows[i as usize].push((j, -w));
        rows[j as usize].push((i, -w));
        degree[i as usize] = degree[i as usize] + w;
        degree[j as usize] = degree[j as usize] + w;
    }
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for (r, mut row) in rows.into_iter().enumerate() {
        if degree[r] != T::zero() {
            row.push((r as u32, degree[r]));
        }
        row.sort_by_key(|e| e.0);
        for (c, v) in row {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix {
        rows: nodes,
        cols: nodes,
        row_ptr,
        col_idx,
        values,
    }
}

/// Spectral norm of the graph gradient, `sqrt(lambda_max(L))`, by power iteration.
pub fn operator_norm<T: Real>(g: &PatchGraph<T>, max_iter: usize, tol: f64) -> PowerEstimate<T> {
    let mut edge_buf = vec![T::zero(); g.edge_count()];
    let est = power_iteration(
        g.node_count(),
        |x, y| {
            g.gradient_into(x, &mut edge_buf);
            g.divergence_into(&edge_buf, y);
        },
        max_iter,
        tol,
        0x6772_6170,
    );
    if !est.converged {
        warn!("graph operator norm estimate did not converge");
    }
    PowerEstimate {
        eigenvalue: est.eigenvalue.max(T::zero()).sqrt(),
        ..est
    }
}

/// Gaussian-weighted graph from directed neighbor lists.
///
/// `sigma` is the mean of all directed neighbor distances; weights are
/// `exp(-d^2 / sigma^2)`, or 1 when `sigma` is zero. An undirected edge exists
/// when either endpoint selected the other. Edges whose weight underflows to
/// zero are dropped.
pub fn build_graph<T: Real>(side: usize, neighbors: &Neighbors<T>, rule: SigmaRule) -> Result<PatchGraph<T>> {
    let nodes = neighbors.node_count();
    if nodes == 0 || neighbors.k() == 0 {
        return invalid("cannot build a graph from an empty candidate set");
    }
    check_len(side * side, nodes, "graph nodes")?;
    let sigma = match rule {
        SigmaRule::MeanConnectedDistance => {
            let total: T = (0..nodes).flat_map(|i| neighbors.distances(i).iter().copied()).sum();
            total / T::from_usize_lossy(nodes * neighbors.k())
        }
    };
    let mut list: Vec<(u32, u32, T)> = Vec::with_capacity(nodes * neighbors.k());
    for i in 0..nodes {
        for (&j, &d) in neighbors.neighbors(i).iter().zip(neighbors.distances(i)) {
            let j = j as usize;
            let w = if sigma > T::zero() {
                (-(d * d) / (sigma * sigma)).exp()
            } else {
                T::one()
            };
            if w > T::zero() {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                list.push((a as u32, b as u32, w));
            }
        }
    }
    list.sort_by_key(|x| (x.0, x.1));
    list.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
    let graph = PatchGraph {
        side,
        k: neighbors.k(),
        sigma,
        edges: list.iter().map(|e| (e.0, e.1)).collect(),
        sqrt_weights: list.iter().map(|e| e.2.sqrt()).collect(),
        weights: list.into_iter().map(|e| e.2).collect(),
    };
    graph.check_invariants()?;
    Ok(graph)
}

/// 4-neighborhood lattice with unit weights; its graph TV is anisotropic TV.
pub fn grid_graph<T: Real>(n: usize) -> PatchGraph<T> {
    let mut edges = Vec::with_capacity(2 * n * n.saturating_sub(1));
    for r in 0..n {
        for c in 0..n {
            let i = (r * n + c) as u32;
            if c + 1 < n {
                edges.push((i, i + 1));
            }
            if r + 1 < n {
                edges.push((i, i + n as u32));
            }
        }
    }
    PatchGraph {
        side: n,
        k: 4,
        sigma: T::zero(),
        weights: vec![T::one(); edges.len()],
        sqrt_weights: vec![T::one(); edges.len()],
        edges,
    }
}

/// Search strategy used when building a patch graph from an image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeighborSearch {
    Exact,
    Approximate(ApproxParams),
}

impl Default for NeighborSearch {
    fn default() -> Self {
        NeighborSearch::Approximate(ApproxParams::default())
    }
}

/// Patch extraction, K-NN search and Gaussian weighting in one step.
pub fn patch_graph_from_image<T: Real>(
    img: &Image<T>,
    patch_side: usize,
    k: usize,
    search: NeighborSearch,
) -> Result<PatchGraph<T>> {
    let patches = extract_patches(img, patch_side)?;
    let nn = match search {
        NeighborSearch::Exact => knn_exact(&patches, k)?,
        NeighborSearch::Approximate(params) => knn_approx(&patches, k, &params)?,
    };
    build_graph(img.side(), &nn, SigmaRule::MeanConnectedDistance)
}
