//! Naive reference assignments and the restart driver. All baselines
//! report inertia against centroids recomputed from their final labels,
//! so comparisons with the iterative solvers are like for like.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::instance::ProblemInstance;
use crate::rng;
use crate::solver::capkmeans::{keep_best, CAP_EPS};
use crate::solver::{make_result, update_centers, Centers, ClusterResult, SolverConfig};

/// Random point order, random cluster among those with room.
pub fn baseline_random(inst: &ProblemInstance, config: &SolverConfig) -> ClusterResult {
    let start = Instant::now();
    let mut rng = rng::seeded(config.seed);
    let k = inst.k;
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.shuffle(&mut rng);
    let mut labels = vec![k; inst.n()];
    let mut used = vec![0.0; k];
    for i in order {
        let open: Vec<usize> = (0..k)
            .filter(|&c| used[c] + inst.weight(i) <= inst.capacity + CAP_EPS)
            .collect();
        if !open.is_empty() {
            let c = open[rng.random_range(0..open.len())];
            labels[i] = c;
            used[c] += inst.weight(i);
        }
    }
    finish(inst, k, labels, start)
}

/// Nearest-neighbor fill around k distinct random points.
pub fn baseline_rnd_nn(inst: &ProblemInstance, config: &SolverConfig) -> ClusterResult {
    let start = Instant::now();
    let mut rng = rng::seeded(config.seed);
    let k = inst.k;
    let mut idx: Vec<usize> = (0..inst.n()).collect();
    idx.shuffle(&mut rng);
    let centers = Centers::from_point_indices(inst, &idx[..k]);
    let labels = nearest_neighbor_fill(inst, &centers);
    finish(inst, k, labels, start)
}

/// Nearest-neighbor fill around the k heaviest points.
pub fn baseline_topk_nn(inst: &ProblemInstance, config: &SolverConfig) -> ClusterResult {
    let start = Instant::now();
    let _ = config;
    let k = inst.k;
    let centers = crate::solver::init_topk_weights(inst);
    let labels = nearest_neighbor_fill(inst, &centers);
    finish(inst, k, labels, start)
}

/// Center-major fill: each center in turn absorbs its nearest unassigned
/// points until the next-nearest no longer fits, then the next center
/// takes over. Whatever is left after the last center goes to the dummy.
fn nearest_neighbor_fill(inst: &ProblemInstance, centers: &Centers) -> Vec<usize> {
    let k = centers.len();
    let mut labels = vec![k; inst.n()];
    for c in 0..k {
        let mut by_dist: Vec<usize> = (0..inst.n()).filter(|&i| labels[i] == k).collect();
        by_dist.sort_by(|&a, &b| {
            inst.dist_to(a, centers.position(c))
                .partial_cmp(&inst.dist_to(b, centers.position(c)))
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut used = 0.0;
        for i in by_dist {
            if used + inst.weight(i) > inst.capacity + CAP_EPS {
                break;
            }
            labels[i] = c;
            used += inst.weight(i);
        }
    }
    labels
}

fn finish(inst: &ProblemInstance, k: usize, labels: Vec<usize>, start: Instant) -> ClusterResult {
    let anchors: Vec<usize> = (0..k).map(|c| c.min(inst.n() - 1)).collect();
    let prev = Centers::from_point_indices(inst, &anchors);
    let centers = update_centers(inst, &labels, k, &prev, None);
    let mut res = make_result(inst, k, labels, centers, 1);
    res.runtime = start.elapsed().as_secs_f64();
    res
}

/// Runs `config.restarts` independent solves on derived seeds and keeps
/// the best: feasible with minimum inertia, otherwise least violating.
pub fn multi_restart(
    config: &SolverConfig,
    run: impl Fn(&SolverConfig) -> ClusterResult,
) -> ClusterResult {
    let start = Instant::now();
    let mut best: Option<ClusterResult> = None;
    for r in 0..config.restarts.max(1) {
        let restart_cfg = SolverConfig {
            seed: rng::derive_seed(config.seed, r as u64),
            restarts: 1,
            ..config.clone()
        };
        keep_best(&mut best, run(&restart_cfg));
    }
    let mut out = best.expect("restarts >= 1");
    out.runtime = start.elapsed().as_secs_f64();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_gmm_instance, GmmSpec};
    use crate::solver::cap_kmeans;

    fn cfg(seed: u64) -> SolverConfig {
        SolverConfig {
            seed,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn baselines_respect_capacity() {
        for seed in 0..4 {
            let inst = generate_gmm_instance(&GmmSpec { seed: seed, ..GmmSpec::default() }, 60).unwrap();
            for res in [
                baseline_random(&inst, &cfg(seed)),
                baseline_rnd_nn(&inst, &cfg(seed)),
                baseline_topk_nn(&inst, &cfg(seed)),
            ] {
                for c in 0..inst.k {
                    assert!(res.assignment.used_capacity(c) <= inst.capacity + 1e-9);
                }
            }
        }
    }

    #[test]
    fn random_is_worst_on_average() {
        let mut rnd = 0.0;
        let mut nn = 0.0;
        for seed in 0..8 {
            let inst = generate_gmm_instance(&GmmSpec { seed: 200 + seed, ..GmmSpec::default() }, 80).unwrap();
            rnd += baseline_random(&inst, &cfg(seed)).inertia;
            nn += baseline_rnd_nn(&inst, &cfg(seed)).inertia;
        }
        assert!(rnd > nn, "random {rnd} should exceed rnd-nn {nn}");
    }

    #[test]
    fn restart_driver_returns_best() {
        let inst = generate_gmm_instance(&GmmSpec { seed: 77, ..GmmSpec::default() }, 60).unwrap();
        let single = cap_kmeans(
            &inst,
            &SolverConfig {
                seed: rng::derive_seed(5, 0),
                ..cfg(5)
            },
        );
        let multi = multi_restart(
            &SolverConfig {
                restarts: 4,
                ..cfg(5)
            },
            |c| cap_kmeans(&inst, c),
        );
        if single.feasible && multi.feasible {
            assert!(multi.inertia <= single.inertia + 1e-12);
        } else {
            assert!(multi.feasible || !single.feasible);
        }
    }

    #[test]
    fn restart_driver_is_deterministic() {
        let inst = generate_gmm_instance(&GmmSpec { seed: 8, ..GmmSpec::default() }, 50).unwrap();
        let cfgm = SolverConfig {
            restarts: 3,
            ..cfg(9)
        };
        let a = multi_restart(&cfgm, |c| cap_kmeans(&inst, c));
        let b = multi_restart(&cfgm, |c| cap_kmeans(&inst, c));
        assert_eq!(a.assignment, b.assignment);
    }
}
