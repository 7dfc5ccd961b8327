//! Weighted communication digraphs and their Laplacians.
//!
//! The adjacency convention follows the information flow: `a_ij > 0` means
//! agent `i` receives the output of agent `j` (edge from `j` to `i`). The
//! Laplacian is `L = Δ − A` with in-degree diagonal `Δ_ii = Σ_j a_ij`, so
//! `L·1 = 0` always. Consensus is reachable exactly when the graph contains a
//! directed spanning tree, which is decided spectrally: `L` must have a
//! single zero eigenvalue with all others in the open right half-plane.

use nalgebra::{Complex, DMatrix};
use rand::Rng;

use crate::{Error, Result};

/// Retry budget for rejection-sampled random graphs.
pub const GRAPH_RETRY_LIMIT: usize = 1000;

/// Directed weighted graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectedGraph {
    n: usize,
    weights: DMatrix<f64>,
}

impl DirectedGraph {
    /// Builds a graph from `(receiver, sender, weight)` triples.
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one node".into()));
        }
        let mut weights = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Graph(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::Graph(format!("self-loop at node {i}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Graph(format!(
                    "edge ({i}, {j}) needs a positive finite weight, got {w}"
                )));
            }
            if weights[(i, j)] != 0.0 {
                return Err(Error::Graph(format!("duplicate edge ({i}, {j})")));
            }
            weights[(i, j)] = w;
        }
        Ok(Self { n, weights })
    }

    /// Builds a graph from a full adjacency matrix (`a_ij` at row `i`).
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::Graph("adjacency matrix must be square and nonempty".into()));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::Graph(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if w < 0.0 || !w.is_finite() {
                    return Err(Error::Graph(format!("weight ({i}, {j}) = {w} is invalid")));
                }
            }
        }
        Ok(Self { n, weights })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// In-neighbors of `i` as `(sender, weight)` pairs.
    pub fn neighbors(&self, i: usize) -> Vec<(usize, f64)> {
        (0..self.n)
            .filter(|&j| self.weights[(i, j)] > 0.0)
            .map(|j| (j, self.weights[(i, j)]))
            .collect()
    }

    /// Edge list as `(receiver, sender, weight)` triples, row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.weights[(i, j)] > 0.0 {
                    out.push((i, j, self.weights[(i, j)]));
                }
            }
        }
        out
    }

    /// Laplacian `L = Δ − A`; rows sum to zero.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.weights.clone();
        for i in 0..self.n {
            l[(i, i)] = self.weights.row(i).sum();
        }
        l
    }

    /// Spectral spanning-tree test with scale-aware zero tolerance.
    pub fn spanning_tree_report(&self) -> SpanningTreeReport {
        let l = self.laplacian();
        let scale = l
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let tolerance = 1e-9 * scale.max(1.0);
        let eigenvalues: Vec<Complex<f64>> = l.complex_eigenvalues().iter().copied().collect();
        let zero_count = eigenvalues.iter().filter(|e| e.norm() < tolerance).count();
        let min_nonzero_re = eigenvalues
            .iter()
            .filter(|e| e.norm() >= tolerance)
            .map(|e| e.re)
            .fold(f64::INFINITY, f64::min);
        let has_spanning_tree = zero_count == 1 && min_nonzero_re > tolerance;
        SpanningTreeReport {
            eigenvalues,
            zero_count,
            min_nonzero_re,
            tolerance,
            has_spanning_tree,
        }
    }

    /// True iff the Laplacian has exactly one zero eigenvalue and every other
    /// eigenvalue a positive real part — equivalently, some root node reaches
    /// all others along directed edges.
    pub fn has_directed_spanning_tree(&self) -> bool {
        self.spanning_tree_report().has_spanning_tree
    }
}

/// Outcome of the spectral spanning-tree test.
#[derive(Clone, Debug)]
pub struct SpanningTreeReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub zero_count: usize,
    /// Smallest real part among eigenvalues classified nonzero
    /// (`+∞` when every eigenvalue is zero, e.g. the edgeless graph).
    pub min_nonzero_re: f64,
    pub tolerance: f64,
    pub has_spanning_tree: bool,
}

/// Pair of integer matrices that split off the consensus direction: the
/// difference map `U` ((n−1)×n, row `i` is `e₁ − e_{i+2}`) and its right
/// inverse `W`. They satisfy `U·1 = 0`, `U·W = I` and `W·U = I − 1·e₁ᵀ`, so
/// `z = U·y` evolves by the reduced matrix `−U·L·W`, which is Hurwitz exactly
/// when the graph has a spanning tree.
#[derive(Clone, Debug)]
pub struct TreeTransform {
    pub u: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

pub fn tree_transform(n: usize) -> Result<TreeTransform> {
    if n < 2 {
        return Err(Error::TreeTransformSize(n));
    }
    let mut u = DMatrix::zeros(n - 1, n);
    let mut w = DMatrix::zeros(n, n - 1);
    for i in 0..n - 1 {
        u[(i, 0)] = 1.0;
        u[(i, i + 1)] = -1.0;
        w[(i + 1, i)] = -1.0;
    }
    Ok(TreeTransform { u, w })
}

/// Samples digraphs with independent edge probability `edge_probability` and
/// uniform(0, 1) weights until one passes the spanning-tree test, giving up
/// after [`GRAPH_RETRY_LIMIT`] attempts.
pub fn random_spanning_tree_graph<R: Rng>(
    n: usize,
    edge_probability: f64,
    rng: &mut R,
) -> Result<DirectedGraph> {
    for _ in 0..GRAPH_RETRY_LIMIT {
        let mut weights = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random::<f64>() < edge_probability {
                    weights[(i, j)] = rng.random::<f64>();
                }
            }
        }
        let g = DirectedGraph::from_weights(weights)?;
        if g.has_directed_spanning_tree() {
            return Ok(g);
        }
    }
    Err(Error::RetryLimit(GRAPH_RETRY_LIMIT))
}
