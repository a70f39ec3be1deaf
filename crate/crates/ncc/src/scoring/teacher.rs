//! Teacher labels for supervised training: the strongest heuristic
//! pipeline we have (multi-init, multi-restart capacitated k-means
//! followed by a relocation local search) produces the target
//! assignments; its final centroids are frozen into each sample.

use crate::instance::ProblemInstance;
use crate::nn::matrix::DenseMatrix;
use crate::rng;
use crate::solver::{
    cap_kmeans, inertia, multi_restart, update_centers, Assignment, Centers, ClusterResult,
    InitMethod, SolverConfig,
};

#[derive(Debug, Clone)]
pub struct TeacherConfig {
    /// Restarts per initialization method.
    pub restarts: usize,
    /// Full improvement passes of the relocation search.
    pub max_ls_passes: usize,
    pub seed: u64,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            restarts: 4,
            max_ls_passes: 20,
            seed: 0,
        }
    }
}

/// One supervised sample: an instance, its teacher assignment, and the
/// centroids that assignment implies. Targets are one-hot rows over the
/// real clusters.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub instance: ProblemInstance,
    pub labels: Vec<usize>,
    pub centers: Centers,
}

impl TrainSample {
    /// n x K matrix with 1 where the teacher put the point.
    pub fn targets(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.instance.n(), self.instance.k);
        for (i, &l) in self.labels.iter().enumerate() {
            t.set(i, l, 1.0);
        }
        t
    }
}

/// Produces teacher labels for `inst`, or `None` when even the strongest
/// heuristic cannot find a feasible assignment; such instances are
/// dropped from training sets.
pub fn make_teacher_labels(inst: &ProblemInstance, config: &TeacherConfig) -> Option<TrainSample> {
    let mut best: Option<ClusterResult> = None;
    for (m, init) in [InitMethod::CkmPlusPlus, InitMethod::KMeansPlusPlus]
        .into_iter()
        .enumerate()
    {
        let solver_cfg = SolverConfig {
            init,
            restarts: config.restarts,
            seed: rng::derive_seed(config.seed, m as u64),
            ..SolverConfig::default()
        };
        let res = multi_restart(&solver_cfg, |c| cap_kmeans(inst, c));
        if !res.feasible {
            continue;
        }
        if best.as_ref().is_none_or(|b| res.inertia < b.inertia) {
            best = Some(res);
        }
    }
    let best = best?;
    let mut labels = best.assignment.labels().to_vec();
    relocation_search(inst, &mut labels, config.max_ls_passes);
    let prev = best.centers.clone();
    let centers = update_centers(inst, &labels, inst.k, &prev, None);
    Some(TrainSample {
        instance: inst.clone(),
        labels,
        centers,
    })
}

/// Moves single points between clusters while a move lowers total inertia
/// (with centroids of the two touched clusters recomputed exactly) and
/// keeps both clusters within capacity.
fn relocation_search(inst: &ProblemInstance, labels: &mut [usize], max_passes: usize) {
    let k = inst.k;
    let mut used = vec![0.0; k];
    for (i, &l) in labels.iter().enumerate() {
        used[l] += inst.weight(i);
    }
    for _ in 0..max_passes {
        let mut improved = false;
        for i in 0..inst.n() {
            let from = labels[i];
            let mut best_move: Option<(f64, usize)> = None;
            for to in 0..k {
                if to == from || used[to] + inst.weight(i) > inst.capacity + 1e-9 {
                    continue;
                }
                let before = cluster_sse(inst, labels, from, None, None)
                    + cluster_sse(inst, labels, to, None, None);
                let after = cluster_sse(inst, labels, from, Some(i), None)
                    + cluster_sse(inst, labels, to, None, Some(i));
                let delta = after - before;
                if delta < -1e-12 && best_move.is_none_or(|(d, _)| delta < d) {
                    best_move = Some((delta, to));
                }
            }
            if let Some((_, to)) = best_move {
                used[from] -= inst.weight(i);
                used[to] += inst.weight(i);
                labels[i] = to;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
}

/// Sum of squared distances of a cluster's members to their centroid,
/// with one member optionally removed or added.
fn cluster_sse(
    inst: &ProblemInstance,
    labels: &[usize],
    cluster: usize,
    without: Option<usize>,
    with: Option<usize>,
) -> f64 {
    let members: Vec<usize> = (0..inst.n())
        .filter(|&i| (labels[i] == cluster && Some(i) != without) || Some(i) == with)
        .collect();
    if members.is_empty() {
        return 0.0;
    }
    let dim = inst.dim;
    let mut mean = vec![0.0; dim];
    for &i in &members {
        for (m, &c) in mean.iter_mut().zip(inst.point(i)) {
            *m += c;
        }
    }
    for m in mean.iter_mut() {
        *m /= members.len() as f64;
    }
    members
        .iter()
        .map(|&i| inst.dist_to(i, &mean).powi(2))
        .sum()
}

/// Inertia of a labeling under its own centroids; handy when comparing
/// teacher output against solver results.
pub fn labeling_inertia(inst: &ProblemInstance, labels: &[usize]) -> f64 {
    let prev = Centers::from_point_indices(inst, &vec![0; inst.k]);
    let centers = update_centers(inst, labels, inst.k, &prev, None);
    let assignment = Assignment::from_labels(inst, inst.k, labels.to_vec());
    inertia(inst, &assignment, &centers).0
}
