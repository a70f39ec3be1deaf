//! Cluster solvers: initializations, capacitated k-means, the neural
//! capacitated clustering loop, naive baselines and the restart driver.

pub mod baselines;
pub mod capkmeans;
pub mod init;
pub mod ncc;

pub use baselines::{baseline_random, baseline_rnd_nn, baseline_topk_nn, multi_restart};
pub use capkmeans::cap_kmeans;
pub use init::{init_ckmpp, init_kmeanspp, init_topk_weights};
pub use ncc::{ncc, NccOptions};

use serde::{Deserialize, Serialize};

use crate::instance::{euclidean, ProblemInstance};

/// Cluster assignment over `k` real clusters plus a dummy overflow
/// cluster labeled `k`, pinned at the coordinate origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    k: usize,
    labels: Vec<usize>,
    used: Vec<f64>,
}

impl Assignment {
    /// Builds from per-point labels in `[0, k]` where `k` is the dummy.
    /// Panics if a real cluster's weight sum exceeds the capacity; the
    /// solvers never produce such labelings.
    pub fn from_labels(inst: &ProblemInstance, k: usize, labels: Vec<usize>) -> Self {
        assert_eq!(labels.len(), inst.n(), "label count mismatch");
        let mut used = vec![0.0; k];
        for (i, &l) in labels.iter().enumerate() {
            assert!(l <= k, "label {l} out of range for k = {k}");
            if l < k {
                used[l] += inst.weight(i);
                assert!(
                    used[l] <= inst.capacity + 1e-9,
                    "cluster {l} over capacity: {} > {}",
                    used[l],
                    inst.capacity
                );
            }
        }
        Self { k, labels, used }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn is_dummy(&self, i: usize) -> bool {
        self.labels[i] == self.k
    }

    pub fn used_capacity(&self, cluster: usize) -> f64 {
        self.used[cluster]
    }

    pub fn dummy_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == self.k).count()
    }

    /// Feasible iff no point sits in the dummy cluster.
    pub fn is_feasible(&self) -> bool {
        self.dummy_count() == 0
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of nonempty real clusters.
    pub fn clusters_used(&self) -> usize {
        (0..self.k).filter(|&c| self.labels.iter().any(|&l| l == c)).count()
    }
}

/// Cluster center positions (row-major k x dim) plus the index of the
/// member nearest each centroid when known.
#[derive(Debug, Clone, PartialEq)]
pub struct Centers {
    dim: usize,
    positions: Vec<f64>,
    pub medoid_index: Vec<usize>,
}

impl Centers {
    pub fn from_positions(dim: usize, positions: Vec<f64>) -> Self {
        assert_eq!(positions.len() % dim, 0);
        let k = positions.len() / dim;
        Self {
            dim,
            positions,
            medoid_index: vec![0; k],
        }
    }

    /// Centers placed on existing points.
    pub fn from_point_indices(inst: &ProblemInstance, indices: &[usize]) -> Self {
        let mut positions = Vec::with_capacity(indices.len() * inst.dim);
        for &i in indices {
            positions.extend_from_slice(inst.point(i));
        }
        Self {
            dim: inst.dim,
            positions,
            medoid_index: indices.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    /// Max displacement between matching centers; the Lloyd convergence
    /// measure.
    pub fn max_shift(&self, other: &Centers) -> f64 {
        assert_eq!(self.len(), other.len());
        (0..self.len())
            .map(|k| euclidean(self.position(k), other.position(k)))
            .fold(0.0, f64::max)
    }

    /// Index of the instance point nearest to center `k`, tie-break on
    /// the lowest index.
    pub fn nearest_node(&self, inst: &ProblemInstance, k: usize) -> usize {
        let pos = self.position(k);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for i in 0..inst.n() {
            let d = inst.dist_to(i, pos);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMethod {
    TopkWeights,
    KMeansPlusPlus,
    CkmPlusPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssignMode {
    Greedy,
    Sampling,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub init: InitMethod,
    pub max_iters: usize,
    /// Convergence threshold on the max center displacement.
    pub tol: f64,
    /// Fraction of points handed to re-prioritization at the tail of an
    /// assignment round.
    pub alpha: f64,
    pub mode: AssignMode,
    pub num_samples: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Neighbors per node when the scoring model is used.
    pub knn_k: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            init: InitMethod::CkmPlusPlus,
            max_iters: 50,
            tol: 1e-4,
            alpha: 0.2,
            mode: AssignMode::Greedy,
            num_samples: 16,
            restarts: 1,
            seed: 0,
            knn_k: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub assignment: Assignment,
    pub centers: Centers,
    /// Total squared distance of non-dummy points to their centers.
    pub inertia: f64,
    /// Squared distance to the origin summed over dummy points; reported
    /// separately, never folded into `inertia`.
    pub dummy_penalty: f64,
    pub iterations: usize,
    pub feasible: bool,
    pub runtime: f64,
    /// Number of times the scoring model's node encoder ran.
    pub encoder_passes: usize,
}

impl ClusterResult {
    /// (dummy weight, penalty + inertia) ordering used to pick the least
    /// violating result when nothing feasible exists.
    pub fn violation_key(&self) -> (f64, f64) {
        let dummy_weight: f64 = self.assignment.dummy_count() as f64;
        (dummy_weight, self.dummy_penalty + self.inertia)
    }
}

/// Arithmetic-mean centroid update. Empty clusters keep their previous
/// position. With `depot` set, the depot coordinate joins every cluster's
/// member set before averaging.
pub fn update_centers(
    inst: &ProblemInstance,
    labels: &[usize],
    k: usize,
    prev: &Centers,
    depot: Option<&[f64]>,
) -> Centers {
    let dim = inst.dim;
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        if l < k {
            for (d, &c) in inst.point(i).iter().enumerate() {
                sums[l * dim + d] += c;
            }
            counts[l] += 1;
        }
    }
    if let Some(dep) = depot {
        for l in 0..k {
            for (d, &c) in dep.iter().enumerate() {
                sums[l * dim + d] += c;
            }
            counts[l] += 1;
        }
    }
    let mut positions = vec![0.0; k * dim];
    let mut medoids = vec![0; k];
    for l in 0..k {
        if counts[l] == 0 {
            positions[l * dim..(l + 1) * dim].copy_from_slice(prev.position(l));
            medoids[l] = prev.medoid_index[l];
            continue;
        }
        for d in 0..dim {
            positions[l * dim + d] = sums[l * dim + d] / counts[l] as f64;
        }
    }
    let mut centers = Centers::from_positions(dim, positions);
    // medoid: nearest assigned member, falling back to nearest node
    for l in 0..k {
        if counts[l] == 0 {
            centers.medoid_index[l] = medoids[l];
            continue;
        }
        let pos = centers.position(l).to_vec();
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (i, &lab) in labels.iter().enumerate() {
            if lab == l {
                let d = inst.dist_to(i, &pos);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
        }
        centers.medoid_index[l] = if best == usize::MAX {
            centers.nearest_node(inst, l)
        } else {
            best
        };
    }
    centers
}

/// Returns (inertia over non-dummy points, dummy penalty, feasible flag).
pub fn inertia(inst: &ProblemInstance, assignment: &Assignment, centers: &Centers) -> (f64, f64, bool) {
    let origin = vec![0.0; inst.dim];
    let mut total = 0.0;
    let mut penalty = 0.0;
    for i in 0..inst.n() {
        let l = assignment.label(i);
        if l < assignment.k() {
            let d = inst.dist_to(i, centers.position(l));
            total += d * d;
        } else {
            let d = inst.dist_to(i, &origin);
            penalty += d * d;
        }
    }
    (total, penalty, assignment.is_feasible())
}

/// Assembles a result from final labels and centers, computing inertia
/// and feasibility.
pub(crate) fn make_result(
    inst: &ProblemInstance,
    k: usize,
    labels: Vec<usize>,
    centers: Centers,
    iterations: usize,
) -> ClusterResult {
    let assignment = Assignment::from_labels(inst, k, labels);
    let (inertia_v, penalty, feasible) = inertia(inst, &assignment, &centers);
    ClusterResult {
        assignment,
        centers,
        inertia: inertia_v,
        dummy_penalty: penalty,
        iterations,
        feasible,
        runtime: 0.0,
        encoder_passes: 0,
    }
}
