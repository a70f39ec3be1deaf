//! Exhaustive reference solvers for tiny inputs, the benchmark driver,
//! and ablation sweeps.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::instance::{CvrpInstance, ProblemInstance};
use crate::routing;
use crate::scoring::ScoreModel;
use crate::solver::{
    baseline_random, baseline_rnd_nn, baseline_topk_nn, cap_kmeans, multi_restart, ncc,
    update_centers, Assignment, Centers, ClusterResult, InitMethod, NccOptions, SolverConfig,
};

/// Exhaustive-search limits; beyond these the search space is too large
/// to enumerate and the functions refuse to run.
pub const BRUTE_FORCE_MAX_N: usize = 12;
pub const BRUTE_FORCE_MAX_K: usize = 3;
pub const BRUTE_FORCE_TSP_MAX: usize = 9;

/// Global optimum by enumerating every feasible labeling; centers are the
/// implied centroids. Errors if the instance exceeds the enumeration
/// limits or admits no feasible labeling.
pub fn brute_force_clustering(inst: &ProblemInstance) -> Result<ClusterResult> {
    let n = inst.n();
    let k = inst.k;
    if n > BRUTE_FORCE_MAX_N || k > BRUTE_FORCE_MAX_K {
        return Err(Error::SizeGuard(format!(
            "brute force limited to n <= {BRUTE_FORCE_MAX_N}, k <= {BRUTE_FORCE_MAX_K}; got n = {n}, k = {k}"
        )));
    }
    let mut labels = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        if feasible(inst, &labels, k) {
            let cost = labeling_cost(inst, &labels, k);
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, labels.clone()));
            }
        }
        // odometer increment over base-k labels
        let mut pos = 0;
        loop {
            if pos == n {
                break;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }
    let (_, labels) = best.ok_or_else(|| {
        Error::DegenerateInstance("no feasible labeling exists".to_string())
    })?;
    let prev = Centers::from_point_indices(inst, &vec![0; k]);
    let centers = update_centers(inst, &labels, k, &prev, None);
    let assignment = Assignment::from_labels(inst, k, labels);
    let (inertia, penalty, feasible) = crate::solver::inertia(inst, &assignment, &centers);
    Ok(ClusterResult {
        assignment,
        centers,
        inertia,
        dummy_penalty: penalty,
        iterations: 0,
        feasible,
        runtime: 0.0,
        encoder_passes: 0,
    })
}

fn feasible(inst: &ProblemInstance, labels: &[usize], k: usize) -> bool {
    let mut used = vec![0.0; k];
    for (i, &l) in labels.iter().enumerate() {
        used[l] += inst.weight(i);
        if used[l] > inst.capacity + 1e-9 {
            return false;
        }
    }
    true
}

fn labeling_cost(inst: &ProblemInstance, labels: &[usize], k: usize) -> f64 {
    let dim = inst.dim;
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        for (d, &c) in inst.point(i).iter().enumerate() {
            sums[l * dim + d] += c;
        }
        counts[l] += 1;
    }
    let mut cost = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        if counts[l] == 0 {
            continue;
        }
        let mut d2 = 0.0;
        for (d, &c) in inst.point(i).iter().enumerate() {
            let mu = sums[l * dim + d] / counts[l] as f64;
            d2 += (c - mu) * (c - mu);
        }
        cost += d2;
    }
    cost
}

/// Shortest depot-to-depot tour over the given customers by checking
/// every permutation. Errors beyond [`BRUTE_FORCE_TSP_MAX`] customers.
pub fn brute_force_tsp(cvrp: &CvrpInstance, customers: &[usize]) -> Result<(Vec<usize>, f64)> {
    if customers.len() > BRUTE_FORCE_TSP_MAX {
        return Err(Error::SizeGuard(format!(
            "exhaustive tours limited to {BRUTE_FORCE_TSP_MAX} customers, got {}",
            customers.len()
        )));
    }
    let mut order = customers.to_vec();
    let mut best_order = order.clone();
    let mut best_len = tour_length(cvrp, &order);
    permute(&mut order, 0, &mut |perm| {
        let len = tour_length(cvrp, perm);
        if len < best_len {
            best_len = len;
            best_order = perm.to_vec();
        }
    });
    Ok((best_order, best_len))
}

fn tour_length(cvrp: &CvrpInstance, order: &[usize]) -> f64 {
    use crate::instance::euclidean;
    if order.is_empty() {
        return 0.0;
    }
    let inst = &cvrp.base;
    let mut len = euclidean(&cvrp.depot, inst.point(order[0]));
    for w in order.windows(2) {
        len += inst.dist(w[0], w[1]);
    }
    len + euclidean(inst.point(*order.last().unwrap()), &cvrp.depot)
}

fn permute(items: &mut [usize], start: usize, visit: &mut impl FnMut(&[usize])) {
    if start + 1 >= items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

/// Held-Karp dynamic program over subsets; same optimum as
/// [`brute_force_tsp`] by a different method, used to cross-check it.
pub fn held_karp_tsp(cvrp: &CvrpInstance, customers: &[usize]) -> Result<f64> {
    let m = customers.len();
    if m > 16 {
        return Err(Error::SizeGuard(format!("dynamic program limited to 16 customers, got {m}")));
    }
    if m == 0 {
        return Ok(0.0);
    }
    use crate::instance::euclidean;
    let inst = &cvrp.base;
    let from_depot: Vec<f64> = customers
        .iter()
        .map(|&i| euclidean(&cvrp.depot, inst.point(i)))
        .collect();
    let dist = |a: usize, b: usize| inst.dist(customers[a], customers[b]);
    let full = 1usize << m;
    let mut dp = vec![f64::INFINITY; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = from_depot[j];
    }
    for mask in 1..full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let cur = dp[mask * m + j];
            if !cur.is_finite() {
                continue;
            }
            for t in 0..m {
                if mask & (1 << t) != 0 {
                    continue;
                }
                let nm = mask | (1 << t);
                let cand = cur + dist(j, t);
                if cand < dp[nm * m + t] {
                    dp[nm * m + t] = cand;
                }
            }
        }
    }
    let best = (0..m)
        .map(|j| dp[(full - 1) * m + j] + from_depot[j])
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

/// Solver selector shared by the benchmark driver and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Random,
    RndNn,
    TopkNn,
    CapKmeans,
    Ncc,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Random,
        Method::RndNn,
        Method::TopkNn,
        Method::CapKmeans,
        Method::Ncc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::RndNn => "rnd-nn",
            Method::TopkNn => "topk-nn",
            Method::CapKmeans => "capkmeans",
            Method::Ncc => "ncc",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Method::Random),
            "rnd-nn" => Ok(Method::RndNn),
            "topk-nn" => Ok(Method::TopkNn),
            "capkmeans" => Ok(Method::CapKmeans),
            "ncc" => Ok(Method::Ncc),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected random, rnd-nn, topk-nn, capkmeans or ncc)"
            ))),
        }
    }
}

/// Dispatches one solve. The restart driver wraps every method so the
/// `restarts` knob means the same thing everywhere.
pub fn run_method(
    inst: &ProblemInstance,
    method: Method,
    model: Option<&ScoreModel>,
    config: &SolverConfig,
) -> Result<ClusterResult> {
    let res = match method {
        Method::Random => multi_restart(config, |c| baseline_random(inst, c)),
        Method::RndNn => multi_restart(config, |c| baseline_rnd_nn(inst, c)),
        Method::TopkNn => multi_restart(config, |c| baseline_topk_nn(inst, c)),
        Method::CapKmeans => multi_restart(config, |c| cap_kmeans(inst, c)),
        Method::Ncc => {
            let opts = NccOptions { model, depot: None };
            let mut best: Option<ClusterResult> = None;
            let mut first_err = None;
            for r in 0..config.restarts.max(1) {
                let c = SolverConfig {
                    seed: crate::rng::derive_seed(config.seed, r as u64),
                    restarts: 1,
                    ..config.clone()
                };
                match ncc(inst, &opts, &c) {
                    Ok(res) => crate::solver::capkmeans::keep_best(&mut best, res),
                    Err(e) => first_err = Some(e),
                }
            }
            match best {
                Some(b) => b,
                None => return Err(first_err.expect("restarts >= 1")),
            }
        }
    };
    Ok(res)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub instance_id: String,
    pub method: String,
    pub seed: u64,
    pub inertia: f64,
    pub runtime_s: f64,
    pub feasible: bool,
    pub k_used: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<ResultRow>,
    /// (instance id, method, seed) runs that panicked or errored.
    pub failures: Vec<(String, String, u64)>,
}

impl BenchReport {
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let to_err = |e: csv::Error| Error::Parse {
            path: path.display().to_string(),
            detail: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(to_err)?;
        w.write_record([
            "instance_id",
            "method",
            "seed",
            "inertia",
            "runtime_s",
            "feasible",
            "k_used",
        ])
        .map_err(to_err)?;
        for r in &self.rows {
            w.write_record([
                r.instance_id.clone(),
                r.method.clone(),
                r.seed.to_string(),
                r.inertia.to_string(),
                r.runtime_s.to_string(),
                r.feasible.to_string(),
                r.k_used.to_string(),
            ])
            .map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn mean_inertia(&self, method: &str) -> f64 {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.feasible)
            .map(|r| r.inertia)
            .collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    }

    pub fn infeasible_fraction(&self, method: &str) -> f64 {
        let rows: Vec<&ResultRow> = self.rows.iter().filter(|r| r.method == method).collect();
        let bad = rows.iter().filter(|r| !r.feasible).count();
        bad as f64 / rows.len().max(1) as f64
    }
}

/// Runs every method on every instance under every seed. A run that
/// panics is recorded in `failures` and skipped; the sweep continues.
pub fn run_benchmark(
    instances: &[ProblemInstance],
    methods: &[Method],
    seeds: &[u64],
    model: Option<&ScoreModel>,
    config: &SolverConfig,
) -> BenchReport {
    let mut report = BenchReport::default();
    for inst in instances {
        for &method in methods {
            for &seed in seeds {
                let cfg = SolverConfig {
                    seed,
                    ..config.clone()
                };
                let outcome = catch_unwind(AssertUnwindSafe(|| {
                    run_method(inst, method, model, &cfg)
                }));
                match outcome {
                    Ok(Ok(res)) => report.rows.push(ResultRow {
                        instance_id: inst.id.clone(),
                        method: method.name().to_string(),
                        seed,
                        inertia: res.inertia,
                        runtime_s: res.runtime,
                        feasible: res.feasible,
                        k_used: res.assignment.clusters_used(),
                    }),
                    _ => report
                        .failures
                        .push((inst.id.clone(), method.name().to_string(), seed)),
                }
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitAblationRow {
    pub init: InitMethod,
    pub restarts: usize,
    pub infeasible_fraction: f64,
    pub mean_inertia: f64,
}

/// Sweeps initialization methods against restart budgets for the
/// capacitated k-means solver.
pub fn ablate_init_restarts(
    instances: &[ProblemInstance],
    inits: &[InitMethod],
    restart_counts: &[usize],
    seed: u64,
) -> Vec<InitAblationRow> {
    let mut rows = Vec::new();
    for &init in inits {
        for &restarts in restart_counts {
            let mut infeasible = 0usize;
            let mut inertia_sum = 0.0;
            let mut inertia_n = 0usize;
            for inst in instances {
                let cfg = SolverConfig {
                    init,
                    restarts,
                    seed,
                    ..SolverConfig::default()
                };
                let res = multi_restart(&cfg, |c| cap_kmeans(inst, c));
                if res.feasible {
                    inertia_sum += res.inertia;
                    inertia_n += 1;
                } else {
                    infeasible += 1;
                }
            }
            rows.push(InitAblationRow {
                init,
                restarts,
                infeasible_fraction: infeasible as f64 / instances.len().max(1) as f64,
                mean_inertia: inertia_sum / inertia_n.max(1) as f64,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnAblationRow {
    pub knn_k: usize,
    pub mean_inertia: f64,
    pub infeasible_fraction: f64,
}

/// Sweeps the graph degree for model-guided solves.
pub fn ablate_knn_k(
    instances: &[ProblemInstance],
    model: &ScoreModel,
    degrees: &[usize],
    config: &SolverConfig,
) -> Result<Vec<KnnAblationRow>> {
    let mut rows = Vec::new();
    for &knn_k in degrees {
        let mut infeasible = 0usize;
        let mut inertia_sum = 0.0;
        let mut inertia_n = 0usize;
        for inst in instances {
            let cfg = SolverConfig {
                knn_k,
                ..config.clone()
            };
            let opts = NccOptions {
                model: Some(model),
                depot: None,
            };
            let res = ncc(inst, &opts, &cfg)?;
            if res.feasible {
                inertia_sum += res.inertia;
                inertia_n += 1;
            } else {
                infeasible += 1;
            }
        }
        rows.push(KnnAblationRow {
            knn_k,
            mean_inertia: inertia_sum / inertia_n.max(1) as f64,
            infeasible_fraction: infeasible as f64 / instances.len().max(1) as f64,
        });
    }
    Ok(rows)
}

/// Routing-aware counterpart of [`run_method`]'s TSP step, exposed for
/// comparisons: optimality gap of a 2-opt tour against the exhaustive
/// optimum.
pub fn tsp_gap(cvrp: &CvrpInstance, customers: &[usize]) -> Result<f64> {
    let heuristic = routing::tsp_route(cvrp, customers);
    let (_, opt) = brute_force_tsp(cvrp, customers)?;
    if opt == 0.0 {
        return Ok(0.0);
    }
    Ok(heuristic.length / opt)
}
