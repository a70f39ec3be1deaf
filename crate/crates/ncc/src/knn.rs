//! Directed K-nearest-neighbor graph over instance points.

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;

/// Directed KNN graph with Euclidean edge weights. Node features are the
/// coordinates with the weight appended, `[x_i; q_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub n: usize,
    pub kappa: usize,
    /// n x kappa neighbor indices, row-major, sorted by ascending distance.
    neighbor_index: Vec<usize>,
    /// n x kappa distances aligned with `neighbor_index`.
    edge_weight: Vec<f64>,
    /// n x (dim + 1) node features.
    node_features: Vec<f64>,
    pub feature_dim: usize,
}

impl KnnGraph {
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbor_index[i * self.kappa..(i + 1) * self.kappa]
    }

    pub fn edge_weights(&self, i: usize) -> &[f64] {
        &self.edge_weight[i * self.kappa..(i + 1) * self.kappa]
    }

    pub fn node_feature(&self, i: usize) -> &[f64] {
        &self.node_features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }
}

/// Exact nearest neighbors by full scan with deterministic tie-break on
/// ascending index. Self loops are excluded; duplicate coordinates yield
/// zero-weight edges.
pub fn build_knn_graph(inst: &ProblemInstance, kappa: usize) -> Result<KnnGraph> {
    let n = inst.n();
    if kappa == 0 || kappa >= n {
        return Err(Error::invalid(format!("need 0 < kappa < n, got kappa={kappa}, n={n}")));
    }
    let mut neighbor_index = Vec::with_capacity(n * kappa);
    let mut edge_weight = Vec::with_capacity(n * kappa);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        cand.clear();
        for j in 0..n {
            if j != i {
                cand.push((inst.dist(i, j), j));
            }
        }
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for &(d, j) in cand.iter().take(kappa) {
            neighbor_index.push(j);
            edge_weight.push(d);
        }
    }
    let feature_dim = inst.dim + 1;
    let mut node_features = Vec::with_capacity(n * feature_dim);
    for i in 0..n {
        node_features.extend_from_slice(inst.point(i));
        node_features.push(inst.weight(i));
    }
    Ok(KnnGraph {
        n,
        kappa,
        neighbor_index,
        edge_weight,
        node_features,
        feature_dim,
    })
}
