//! The main clustering loop: capacitated Lloyd iterations where each
//! round assigns points to centers cyclically in a random center order,
//! ranked by (optionally model-scaled) priorities, with the tail fraction
//! of points re-prioritized greedily or by sampled rollouts.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::instance::ProblemInstance;
use crate::knn::build_knn_graph;
use crate::rng;
use crate::scoring::{heuristic_priority, scaled_priority, PriorityMatrix, ScoreModel};
use crate::solver::capkmeans::{initial_centers, keep_best, CAP_EPS};
use crate::solver::{make_result, update_centers, AssignMode, Centers, ClusterResult, SolverConfig};

/// Optional attachments for a solver run.
#[derive(Default, Clone, Copy)]
pub struct NccOptions<'a> {
    /// Learned scoring model; priorities fall back to the heuristic rule
    /// when absent.
    pub model: Option<&'a ScoreModel>,
    /// Depot coordinate for vehicle-routing style runs: biases priorities
    /// toward far-from-depot points and joins every centroid update.
    pub depot: Option<&'a [f64]>,
}

pub fn ncc(inst: &ProblemInstance, opts: &NccOptions, config: &SolverConfig) -> Result<ClusterResult> {
    let start = Instant::now();
    let n = inst.n();
    let k = inst.k;
    let mut rng = rng::seeded(config.seed);
    let mut centers = initial_centers(inst, config.init, &mut rng);

    // the node encoder runs once; only the cheap decode repeats per iteration
    let mut encoded = None;
    let passes_before = opts.model.map_or(0, ScoreModel::encoder_passes);
    if let Some(model) = opts.model {
        let kappa = config.knn_k.min(n.saturating_sub(1)).max(1);
        let graph = build_knn_graph(inst, kappa)?;
        let enc = model.encode(&graph)?;
        encoded = Some((graph, enc));
    }

    let assign_limit = (((1.0 - config.alpha) * n as f64).ceil() as usize).min(n);
    let mut best: Option<ClusterResult> = None;
    let mut iterations = 0;
    for iter in 1..=config.max_iters {
        iterations = iter;

        // base scores drive re-prioritization; the assignment phase uses
        // them scaled by the heuristic when a model is present
        let heur = heuristic_priority(inst, &centers);
        let (base, mut prio) = match (&opts.model, &encoded) {
            (Some(model), Some((graph, enc))) => {
                let neural = model.decode(graph, enc, &centers, opts.depot)?;
                let scaled = scaled_priority(&neural, &heur)?;
                (neural, scaled)
            }
            _ => (heur.clone(), heur),
        };
        if let Some(dep) = opts.depot {
            prio = crate::routing::depot_priority(inst, dep, &prio);
        }

        // per-center candidate order, descending priority, ties on index
        let order: Vec<Vec<usize>> = (0..k)
            .map(|c| {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| {
                    prio.values
                        .get(b, c)
                        .partial_cmp(&prio.values.get(a, c))
                        .unwrap()
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();

        let mut pi: Vec<usize> = (0..k).collect();
        pi.shuffle(&mut rng);

        let mut labels = vec![k; n];
        let mut used = vec![0.0; k];
        let mut cursor = vec![0usize; k];
        let mut assigned = 0;
        // cyclic assignment: each center in turn claims its best remaining
        // point that still fits. A point skipped for capacity never fits
        // that center again this round, so cursors only move forward.
        'rounds: while assigned < assign_limit {
            let mut progress = false;
            for &c in &pi {
                if assigned >= assign_limit {
                    break 'rounds;
                }
                while cursor[c] < n {
                    let i = order[c][cursor[c]];
                    cursor[c] += 1;
                    if labels[i] != k {
                        continue;
                    }
                    if used[c] + inst.weight(i) > inst.capacity + CAP_EPS {
                        continue;
                    }
                    labels[i] = c;
                    used[c] += inst.weight(i);
                    assigned += 1;
                    progress = true;
                    break;
                }
            }
            if !progress {
                break;
            }
        }

        let unassigned: Vec<usize> = (0..n).filter(|&i| labels[i] == k).collect();
        if !unassigned.is_empty() {
            match config.mode {
                AssignMode::Greedy => {
                    reprioritize_greedy(inst, &centers, &base, &unassigned, &mut labels, &mut used);
                }
                AssignMode::Sampling => reprioritize_sampling(
                    inst,
                    &centers,
                    &base,
                    &unassigned,
                    &mut labels,
                    &mut used,
                    config.num_samples,
                    &mut rng,
                ),
            }
        }

        let new_centers = update_centers(inst, &labels, k, &centers, opts.depot);
        let shift = centers.max_shift(&new_centers);
        keep_best(&mut best, make_result(inst, k, labels, new_centers.clone(), iter));
        centers = new_centers;
        if shift <= config.tol {
            break;
        }
    }

    let mut out = best.expect("at least one iteration ran");
    out.iterations = iterations;
    out.encoder_passes = opts.model.map_or(0, ScoreModel::encoder_passes) - passes_before;
    out.runtime = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Highest remaining score first, each point to its nearest cluster with
/// room; the dummy takes whatever fits nowhere.
fn reprioritize_greedy(
    inst: &ProblemInstance,
    centers: &Centers,
    base: &PriorityMatrix,
    unassigned: &[usize],
    labels: &mut [usize],
    used: &mut [f64],
) {
    let k = centers.len();
    let mut order: Vec<usize> = unassigned.to_vec();
    order.sort_by(|&a, &b| {
        row_max(base, b)
            .partial_cmp(&row_max(base, a))
            .unwrap()
            .then(a.cmp(&b))
    });
    for i in order {
        labels[i] = nearest_feasible(inst, centers, used, i).unwrap_or(k);
        if labels[i] < k {
            used[labels[i]] += inst.weight(i);
        }
    }
}

/// Samples `num_samples` insertion orders from a softmax over the scores
/// and keeps the rollout with the fewest dummies, then lowest cost.
#[allow(clippy::too_many_arguments)]
fn reprioritize_sampling(
    inst: &ProblemInstance,
    centers: &Centers,
    base: &PriorityMatrix,
    unassigned: &[usize],
    labels: &mut [usize],
    used: &mut [f64],
    num_samples: usize,
    rng: &mut rng::Prng,
) {
    let k = centers.len();
    let logits: Vec<f64> = unassigned.iter().map(|&i| row_max(base, i)).collect();
    let mut best: Option<(usize, f64, Vec<usize>, Vec<f64>)> = None;
    for _ in 0..num_samples.max(1) {
        // Gumbel perturbation: sorting logit + noise descending draws an
        // order distributed as successive softmax sampling
        let mut keyed: Vec<(f64, usize)> = unassigned
            .iter()
            .zip(&logits)
            .map(|(&i, &l)| {
                let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                (l - (-u.ln()).ln(), i)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

        let mut trial_labels = labels.to_vec();
        let mut trial_used = used.to_vec();
        let mut dummies = 0;
        for &(_, i) in &keyed {
            match nearest_feasible(inst, centers, &trial_used, i) {
                Some(c) => {
                    trial_labels[i] = c;
                    trial_used[c] += inst.weight(i);
                }
                None => dummies += 1,
            }
        }
        let cost = rollout_cost(inst, centers, &trial_labels, k);
        let better = match &best {
            None => true,
            Some((bd, bc, _, _)) => (dummies, cost) < (*bd, *bc),
        };
        if better {
            best = Some((dummies, cost, trial_labels, trial_used));
        }
    }
    if let Some((_, _, best_labels, best_used)) = best {
        labels.copy_from_slice(&best_labels);
        used.copy_from_slice(&best_used);
    }
}

fn row_max(prio: &PriorityMatrix, i: usize) -> f64 {
    prio.values.row(i).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn nearest_feasible(
    inst: &ProblemInstance,
    centers: &Centers,
    used: &[f64],
    i: usize,
) -> Option<usize> {
    let q = inst.weight(i);
    let mut best = None;
    let mut best_d = f64::INFINITY;
    for c in 0..centers.len() {
        if used[c] + q > inst.capacity + CAP_EPS {
            continue;
        }
        let d = inst.dist_to(i, centers.position(c));
        if d < best_d {
            best_d = d;
            best = Some(c);
        }
    }
    best
}

/// Inertia against the fixed centers plus the dummy penalty; used only to
/// rank rollouts within one iteration.
fn rollout_cost(inst: &ProblemInstance, centers: &Centers, labels: &[usize], k: usize) -> f64 {
    let origin = vec![0.0; inst.dim];
    let mut cost = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        let d = if l < k {
            inst.dist_to(i, centers.position(l))
        } else {
            inst.dist_to(i, &origin)
        };
        cost += d * d;
    }
    cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_gmm_instance, GmmSpec};
    use crate::scoring::ModelConfig;
    use crate::solver::cap_kmeans;

    fn cfg(seed: u64) -> SolverConfig {
        SolverConfig {
            seed,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn heuristic_runs_are_feasible_on_generated_instances() {
        for seed in 0..5 {
            let inst = generate_gmm_instance(&GmmSpec { seed: seed, ..GmmSpec::default() }, 80).unwrap();
            let res = ncc(&inst, &NccOptions::default(), &cfg(seed)).unwrap();
            assert!(res.feasible, "seed {seed} infeasible");
            assert_eq!(res.encoder_passes, 0);
        }
    }

    #[test]
    fn deterministic_replay() {
        let inst = generate_gmm_instance(&GmmSpec { seed: 9, ..GmmSpec::default() }, 60).unwrap();
        let a = ncc(&inst, &NccOptions::default(), &cfg(4)).unwrap();
        let b = ncc(&inst, &NccOptions::default(), &cfg(4)).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.inertia.to_bits(), b.inertia.to_bits());
    }

    #[test]
    fn sampling_mode_feasible_and_deterministic() {
        let inst = generate_gmm_instance(&GmmSpec { seed: 3, ..GmmSpec::default() }, 60).unwrap();
        let config = SolverConfig {
            mode: AssignMode::Sampling,
            num_samples: 8,
            ..cfg(2)
        };
        let a = ncc(&inst, &NccOptions::default(), &config).unwrap();
        let b = ncc(&inst, &NccOptions::default(), &config).unwrap();
        assert!(a.feasible);
        assert_eq!(a.assignment, b.assignment);
    }

    #[test]
    fn overflow_goes_to_dummy() {
        let inst = ProblemInstance::new(
            "tight",
            2,
            1,
            2.0,
            vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0],
            vec![1.0; 3],
        )
        .unwrap();
        let res = ncc(&inst, &NccOptions::default(), &cfg(0)).unwrap();
        assert!(!res.feasible);
        assert_eq!(res.assignment.dummy_count(), 1);
    }

    #[test]
    fn alpha_zero_skips_reprioritization() {
        let inst = generate_gmm_instance(&GmmSpec { seed: 7, ..GmmSpec::default() }, 50).unwrap();
        let config = SolverConfig {
            alpha: 0.0,
            ..cfg(1)
        };
        let res = ncc(&inst, &NccOptions::default(), &config).unwrap();
        assert!(res.feasible);
    }

    #[test]
    fn model_encoder_runs_once_per_solve() {
        let inst = generate_gmm_instance(&GmmSpec { seed: 5, ..GmmSpec::default() }, 40).unwrap();
        let model = ScoreModel::init(
            ModelConfig {
                d_emb: 8,
                d_hidden: 8,
                layers: 2,
                kappa: 8,
                ..ModelConfig::default()
            },
            1,
        );
        let config = SolverConfig {
            knn_k: 8,
            ..cfg(3)
        };
        let opts = NccOptions {
            model: Some(&model),
            depot: None,
        };
        let res = ncc(&inst, &opts, &config).unwrap();
        assert_eq!(res.encoder_passes, 1);
        assert!(res.iterations >= 1);
    }

    #[test]
    fn comparable_quality_to_cap_kmeans() {
        let mut better_or_close = 0;
        for seed in 0..6 {
            let inst = generate_gmm_instance(&GmmSpec { seed: 100 + seed, ..GmmSpec::default() }, 70).unwrap();
            let a = ncc(&inst, &NccOptions::default(), &cfg(seed)).unwrap();
            let b = cap_kmeans(&inst, &cfg(seed));
            if !a.feasible || !b.feasible || a.inertia <= b.inertia * 1.5 {
                better_or_close += 1;
            }
        }
        assert!(better_or_close >= 4, "only {better_or_close}/6 close to baseline");
    }
}
