//! Capacitated k-means: Lloyd iterations where each round assigns points
//! greedily in global priority order under the capacity budget, with an
//! overflow dummy cluster for points that fit nowhere.

use std::time::Instant;

use crate::instance::ProblemInstance;
use crate::rng;
use crate::scoring::heuristic_priority;
use crate::scoring::PriorityMatrix;
use crate::solver::{
    init_ckmpp, init_kmeanspp, init_topk_weights, make_result, update_centers, Centers,
    ClusterResult, InitMethod, SolverConfig,
};

/// Slack when testing whether a weight still fits a cluster, absorbing
/// accumulated floating-point error in the running sums.
pub(crate) const CAP_EPS: f64 = 1e-9;

pub(crate) fn initial_centers(
    inst: &ProblemInstance,
    method: InitMethod,
    rng: &mut crate::rng::Prng,
) -> Centers {
    match method {
        InitMethod::TopkWeights => init_topk_weights(inst),
        InitMethod::KMeansPlusPlus => init_kmeanspp(inst, rng),
        InitMethod::CkmPlusPlus => init_ckmpp(inst, rng),
    }
}

/// One full assignment round: every (point, cluster) pair ranked by
/// priority, assigned greedily while capacity lasts; unplaced points go
/// to the dummy. Ties break on the lower point index, then lower cluster.
pub(crate) fn assign_by_priority(
    inst: &ProblemInstance,
    prio: &PriorityMatrix,
    k: usize,
) -> Vec<usize> {
    let n = inst.n();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n * k);
    for i in 0..n {
        for c in 0..k {
            pairs.push((i, c));
        }
    }
    pairs.sort_by(|&(i, c), &(j, d)| {
        prio.values
            .get(j, d)
            .partial_cmp(&prio.values.get(i, c))
            .unwrap()
            .then(i.cmp(&j))
            .then(c.cmp(&d))
    });
    let mut labels = vec![k; n];
    let mut used = vec![0.0; k];
    let mut assigned = 0;
    for (i, c) in pairs {
        if labels[i] != k {
            continue;
        }
        if used[c] + inst.weight(i) <= inst.capacity + CAP_EPS {
            labels[i] = c;
            used[c] += inst.weight(i);
            assigned += 1;
            if assigned == n {
                break;
            }
        }
    }
    labels
}

/// Prefers feasible results with lower inertia; among infeasible ones,
/// fewer dummy points and lower combined cost.
pub(crate) fn keep_best(best: &mut Option<ClusterResult>, cand: ClusterResult) {
    let better = match best {
        None => true,
        Some(b) => {
            if cand.feasible != b.feasible {
                cand.feasible
            } else if cand.feasible {
                cand.inertia < b.inertia
            } else {
                cand.violation_key() < b.violation_key()
            }
        }
    };
    if better {
        *best = Some(cand);
    }
}

/// Runs capacitated k-means from a single initialization and returns the
/// best iterate encountered.
pub fn cap_kmeans(inst: &ProblemInstance, config: &SolverConfig) -> ClusterResult {
    let start = Instant::now();
    let mut rng = rng::seeded(config.seed);
    let k = inst.k;
    let mut centers = initial_centers(inst, config.init, &mut rng);
    let mut best: Option<ClusterResult> = None;
    let mut iterations = 0;
    for iter in 1..=config.max_iters {
        iterations = iter;
        let prio = heuristic_priority(inst, &centers);
        let labels = assign_by_priority(inst, &prio, k);
        let new_centers = update_centers(inst, &labels, k, &centers, None);
        let shift = centers.max_shift(&new_centers);
        keep_best(&mut best, make_result(inst, k, labels, new_centers.clone(), iter));
        centers = new_centers;
        if shift <= config.tol {
            break;
        }
    }
    let mut out = best.expect("at least one iteration ran");
    out.iterations = iterations;
    out.runtime = start.elapsed().as_secs_f64();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_gmm_instance;
    use crate::instance::GmmSpec;
    use crate::solver::AssignMode;

    fn config(seed: u64) -> SolverConfig {
        SolverConfig {
            seed,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn separable_pairs_recovered() {
        // two tight pairs far apart, capacity fits exactly one pair
        let inst = ProblemInstance::new(
            "pairs",
            2,
            2,
            2.0,
            vec![0.0, 0.0, 0.1, 0.0, 10.0, 0.0, 10.1, 0.0],
            vec![1.0; 4],
        )
        .unwrap();
        let res = cap_kmeans(&inst, &config(3));
        assert!(res.feasible);
        assert_eq!(res.assignment.label(0), res.assignment.label(1));
        assert_eq!(res.assignment.label(2), res.assignment.label(3));
        assert_ne!(res.assignment.label(0), res.assignment.label(2));
        // each centroid is its pair midpoint, so inertia = 4 * 0.05^2
        assert!((res.inertia - 4.0 * 0.05 * 0.05).abs() < 1e-12);
    }

    #[test]
    fn capacity_forces_split_of_one_blob() {
        // four coincident unit-weight points, capacity 2 -> two clusters
        let inst = ProblemInstance::new(
            "blob",
            2,
            2,
            2.0,
            vec![5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0],
            vec![1.0; 4],
        )
        .unwrap();
        let res = cap_kmeans(&inst, &config(0));
        assert!(res.feasible);
        assert_eq!(res.assignment.clusters_used(), 2);
        assert!((res.assignment.used_capacity(0) - 2.0).abs() < 1e-12);
        assert!((res.assignment.used_capacity(1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn overflow_lands_in_dummy() {
        // total weight 3 but only one cluster of capacity 2
        let inst = ProblemInstance::new(
            "tight",
            2,
            1,
            2.0,
            vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0],
            vec![1.0; 3],
        )
        .unwrap();
        let res = cap_kmeans(&inst, &config(0));
        assert!(!res.feasible);
        assert_eq!(res.assignment.dummy_count(), 1);
        assert!(res.dummy_penalty > 0.0);
    }

    #[test]
    fn priority_gives_near_heavy_points_first_claim() {
        // one slot: the heavy point sitting on the center takes it
        let inst = ProblemInstance::new(
            "prio",
            2,
            1,
            1.0,
            vec![0.0, 0.0, 0.2, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let prio = heuristic_priority(&inst, &Centers::from_positions(2, vec![0.0, 0.0]));
        let labels = assign_by_priority(&inst, &prio, 1);
        assert_eq!(labels, vec![0, 1]);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let inst = generate_gmm_instance(&GmmSpec { seed: 11, ..GmmSpec::default() }, 60).unwrap();
        let a = cap_kmeans(&inst, &config(5));
        let b = cap_kmeans(&inst, &config(5));
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.inertia.to_bits(), b.inertia.to_bits());
    }

    #[test]
    fn respects_iteration_cap() {
        let inst = generate_gmm_instance(&GmmSpec { seed: 2, ..GmmSpec::default() }, 40).unwrap();
        let cfg = SolverConfig {
            max_iters: 3,
            mode: AssignMode::Greedy,
            ..config(1)
        };
        let res = cap_kmeans(&inst, &cfg);
        assert!(res.iterations <= 3);
    }

    #[test]
    fn tie_break_prefers_lower_point_index() {
        // two coincident points compete for one slot: index 0 wins
        let inst = ProblemInstance::new(
            "tie",
            2,
            1,
            1.0,
            vec![1.0, 1.0, 1.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let prio = heuristic_priority(&inst, &Centers::from_positions(2, vec![0.0, 0.0]));
        let labels = assign_by_priority(&inst, &prio, 1);
        assert_eq!(labels, vec![0, 1]);
    }
}
