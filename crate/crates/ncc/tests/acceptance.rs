//! Acceptance suite: ten end-to-end checks covering solver feasibility,
//! quality orderings against baselines and exhaustive optima, gradient
//! integrity, training signal, routing quality, determinism and encoder
//! caching. Each check prints one PASS line with its measured numbers
//! (visible with `--nocapture`); a failed assertion marks the criterion
//! failed.

use std::time::Instant;

use ncc::bench::{
    ablate_init_restarts, brute_force_clustering, brute_force_tsp, run_benchmark, run_method,
    Method,
};
use ncc::instance::generate_gmm_instance;
use ncc::knn::build_knn_graph;
use ncc::nn::gradcheck::{central_diff, rel_error, FD_STEP};
use ncc::nn::layers::{gelu, gelu_backward, softmax_rows, softmax_rows_backward, ParamPack};
use ncc::nn::{DenseMatrix, LayerNorm, Linear, Mlp, SelfAttention};
use ncc::rng;
use ncc::routing::{c1r2_solve, sweep_baseline, sweep_plus_baseline, CvrpSolution};
use ncc::scoring::{
    heuristic_priority, make_teacher_labels, model_forward, scaled_priority, train, PriorityKind,
    PriorityMatrix, TeacherConfig, TrainConfig, TrainSample,
};
use ncc::solver::{ncc as ncc_solve, AssignMode, Centers, InitMethod, NccOptions};
use ncc::{
    ClusterResult, CvrpInstance, GmmSpec, ModelConfig, ProblemInstance, ScoreModel, SolverConfig,
};
use rand::Rng;

const CAP_EPS: f64 = 1e-9;

fn gmm_set(count: usize, n: usize, seed: u64, spec: &GmmSpec) -> Vec<ProblemInstance> {
    (0..count)
        .map(|i| {
            let spec = GmmSpec {
                seed: rng::derive_seed(seed, i as u64),
                ..spec.clone()
            };
            generate_gmm_instance(&spec, n).unwrap()
        })
        .collect()
}

fn assert_cluster_capacities(inst: &ProblemInstance, res: &ClusterResult) {
    for c in 0..inst.k {
        assert!(
            res.assignment.used_capacity(c) <= inst.capacity + CAP_EPS,
            "{}: cluster {c} overfull ({} > {})",
            inst.id,
            res.assignment.used_capacity(c),
            inst.capacity
        );
    }
}

// 1. Feasibility: the main solver leaves no point unassigned on standard
//    generated instances, in greedy and sampling modes, within budget.
#[test]
fn criterion_01_feasibility() {
    let start = Instant::now();
    let instances = gmm_set(100, 100, 101, &GmmSpec::default());
    for mode in [AssignMode::Greedy, AssignMode::Sampling] {
        for inst in &instances {
            let config = SolverConfig {
                mode,
                ..SolverConfig::default()
            };
            let res = ncc_solve(inst, &NccOptions::default(), &config).unwrap();
            assert_cluster_capacities(inst, &res);
            assert_eq!(
                res.assignment.dummy_count(),
                0,
                "{} ({mode:?}): unassigned points",
                inst.id
            );
            assert!(res.feasible);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "budget exceeded: {elapsed:.1}s");
    println!("01 feasibility: PASS (200 solves, 0 infeasible, {elapsed:.1}s)");
}

// 2. Method ordering by mean inertia, with the main solver at least 10%
//    below capacitated k-means.
#[test]
fn criterion_02_method_ordering() {
    let instances = gmm_set(100, 100, 101, &GmmSpec::default());
    let config = SolverConfig {
        mode: AssignMode::Sampling,
        ..SolverConfig::default()
    };
    let report = run_benchmark(&instances, &Method::ALL, &[0], None, &config);
    assert!(report.failures.is_empty(), "failures: {:?}", report.failures);
    let m = |name: &str| report.mean_inertia(name);
    assert!(m("random") > m("rnd-nn"), "{} vs {}", m("random"), m("rnd-nn"));
    assert!(m("rnd-nn") >= m("topk-nn"), "{} vs {}", m("rnd-nn"), m("topk-nn"));
    assert!(m("topk-nn") > m("capkmeans"), "{} vs {}", m("topk-nn"), m("capkmeans"));
    assert!(m("capkmeans") > m("ncc"), "{} vs {}", m("capkmeans"), m("ncc"));
    assert!(
        m("ncc") <= 0.9 * m("capkmeans"),
        "ncc {} not 10% below capkmeans {}",
        m("ncc"),
        m("capkmeans")
    );
    println!(
        "02 method ordering: PASS (random {:.3} > rnd-nn {:.3} >= topk-nn {:.3} > capkmeans {:.3} > ncc {:.3})",
        m("random"),
        m("rnd-nn"),
        m("topk-nn"),
        m("capkmeans"),
        m("ncc")
    );
}

// 3. More restarts cut the infeasibility rate of k-means++-seeded
//    capacitated k-means by at least half on a tightly packed set.
#[test]
fn criterion_03_restart_ablation() {
    let spec = GmmSpec {
        capacity_factor: 1.02,
        k_min: 4,
        k_max: 8,
        ..GmmSpec::default()
    };
    let instances = gmm_set(50, 50, 303, &spec);
    let rows = ablate_init_restarts(&instances, &[InitMethod::KMeansPlusPlus], &[1, 8], 7);
    let (r1, r8) = (rows[0].infeasible_fraction, rows[1].infeasible_fraction);
    assert!(r1 > 0.0, "1-restart runs never fail; set not constrained enough");
    assert!(r8 < r1, "no strict decrease: {r1} -> {r8}");
    assert!(r8 <= 0.5 * r1, "reduction below 50%: {r1} -> {r8}");
    println!("03 restart ablation: PASS (infeasible {r1:.2} @1 restart -> {r8:.2} @8 restarts)");
}

fn tiny_instance(seed: u64) -> ProblemInstance {
    let mut r = rng::seeded(seed);
    let n = 8 + (seed % 3) as usize;
    let coords: Vec<f64> = (0..2 * n).map(|_| r.random_range(0.0..1.0)).collect();
    let weights: Vec<f64> = (0..n).map(|_| r.random_range(0.1..0.5)).collect();
    let total: f64 = weights.iter().sum();
    ProblemInstance::new(format!("tiny-{seed}"), 2, 2, total / 2.0 * 1.25, coords, weights)
        .unwrap()
}

// 4. Against the exhaustive optimum on tiny instances: no solver ever
//    reports a feasible cost below it, and the main solver's mean gap is
//    no worse than capacitated k-means's.
#[test]
fn criterion_04_oracle_gap() {
    let mut gap_sums = [0.0f64; 2]; // [capkmeans, ncc]
    let mut gap_counts = [0usize; 2];
    for s in 0..50u64 {
        let inst = tiny_instance(400 + s);
        let opt = brute_force_clustering(&inst).unwrap();
        for method in Method::ALL {
            let config = SolverConfig {
                seed: s,
                ..SolverConfig::default()
            };
            let res = run_method(&inst, method, None, &config).unwrap();
            if res.feasible {
                assert_cluster_capacities(&inst, &res);
                assert!(
                    res.inertia >= opt.inertia - 1e-9,
                    "{} {}: {} below optimum {}",
                    inst.id,
                    method.name(),
                    res.inertia,
                    opt.inertia
                );
            } else {
                // infeasible runs must be flagged, never silently overfull
                assert!(res.assignment.dummy_count() > 0, "unflagged infeasibility");
            }
            let slot = match method {
                Method::CapKmeans => 0,
                Method::Ncc => 1,
                _ => continue,
            };
            if res.feasible && opt.inertia > 0.0 {
                gap_sums[slot] += res.inertia / opt.inertia;
                gap_counts[slot] += 1;
            }
        }
    }
    let gap_ck = gap_sums[0] / gap_counts[0] as f64;
    let gap_ncc = gap_sums[1] / gap_counts[1] as f64;
    assert!(
        gap_ncc <= gap_ck + 1e-12,
        "mean gap ncc {gap_ncc} > capkmeans {gap_ck}"
    );
    println!("04 oracle gap: PASS (mean gap ncc {gap_ncc:.4} <= capkmeans {gap_ck:.4})");
}

const GRAD_TOL: f64 = 1e-4;
const GRAD_SEEDS: u64 = 20;

fn rand_matrix(rows: usize, cols: usize, r: &mut ncc::rng::Prng) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

fn probe_loss(out: &DenseMatrix, probe: &[f64]) -> f64 {
    out.data().iter().zip(probe).map(|(o, p)| o * p).sum()
}

/// Checks one layer's input and parameter gradients against central
/// finite differences under a random linear probe of the output.
fn check_layer<L, G>(
    name: &str,
    seed: u64,
    layer: &L,
    forward: impl Fn(&L, &DenseMatrix) -> DenseMatrix,
    backward: impl Fn(&L, &DenseMatrix, &DenseMatrix) -> (DenseMatrix, G),
    x: &DenseMatrix,
    r: &mut ncc::rng::Prng,
) where
    L: ParamPack + Clone,
    G: ParamPack,
{
    let out = forward(layer, x);
    let probe: Vec<f64> = (0..out.data().len()).map(|_| r.random_range(-1.0..1.0)).collect();
    let grad_out = DenseMatrix::from_vec(out.rows, out.cols, probe.clone()).unwrap();
    let (gx, gp) = backward(layer, x, &grad_out);

    let fd_x = central_diff(
        |xd| {
            let xm = DenseMatrix::from_vec(x.rows, x.cols, xd.to_vec()).unwrap();
            probe_loss(&forward(layer, &xm), &probe)
        },
        x.data(),
        FD_STEP,
    );
    let err_x = rel_error(gx.data(), &fd_x);
    assert!(err_x <= GRAD_TOL, "{name} seed {seed}: input grad error {err_x}");

    let mut params = Vec::new();
    layer.collect_params(&mut params);
    if params.is_empty() {
        return;
    }
    let fd_p = central_diff(
        |pd| {
            let mut l = layer.clone();
            l.assign_params(&mut pd.iter().copied());
            probe_loss(&forward(&l, x), &probe)
        },
        &params,
        FD_STEP,
    );
    let mut gp_flat = Vec::new();
    gp.collect_params(&mut gp_flat);
    let err_p = rel_error(&gp_flat, &fd_p);
    assert!(err_p <= GRAD_TOL, "{name} seed {seed}: param grad error {err_p}");
}

fn tiny_model_setup(
    seed: u64,
    cvrp: bool,
) -> (ProblemInstance, ncc::KnnGraph, Centers, ScoreModel, Option<Vec<f64>>) {
    let inst = generate_gmm_instance(
        &GmmSpec {
            seed,
            k_min: 2,
            k_max: 3,
            ..GmmSpec::default()
        },
        8,
    )
    .unwrap();
    let graph = build_knn_graph(&inst, 4).unwrap();
    let centers = Centers::from_point_indices(&inst, &(0..inst.k).collect::<Vec<_>>());
    let model = ScoreModel::init(
        ModelConfig {
            d_emb: 4,
            d_hidden: 5,
            layers: 2,
            kappa: 4,
            num_heads: 2,
            cvrp,
            ..ModelConfig::default()
        },
        seed,
    );
    let depot = cvrp.then(|| vec![0.4, 0.6]);
    (inst, graph, centers, model, depot)
}

// 5. Gradient integrity: every layer and the end-to-end scoring pipeline
//    match central finite differences over 20 seeds each.
#[test]
fn criterion_05_gradient_integrity() {
    for seed in 0..GRAD_SEEDS {
        let mut r = rng::seeded(500 + seed);

        let lin = Linear::init(3, 4, &mut r);
        let x = rand_matrix(4, 3, &mut r);
        check_layer("linear", seed, &lin, |l, x| l.forward(x), |l, x, g| l.backward(x, g), &x, &mut r);

        let mut ln = LayerNorm::identity(5);
        for g in ln.gain.iter_mut() {
            *g = r.random_range(0.5..1.5);
        }
        for b in ln.offset.iter_mut() {
            *b = r.random_range(-0.5..0.5);
        }
        let x = rand_matrix(3, 5, &mut r);
        check_layer("layer_norm", seed, &ln, |l, x| l.forward(x), |l, x, g| l.backward(x, g), &x, &mut r);

        let mlp = Mlp::init(&[4, 6, 3], &mut r);
        let x = rand_matrix(5, 4, &mut r);
        check_layer(
            "mlp",
            seed,
            &mlp,
            |l, x| l.forward(x),
            |l, x, g| {
                let (_, cache) = l.forward_cached(x);
                l.backward(&cache, g)
            },
            &x,
            &mut r,
        );

        let sa = SelfAttention::init(4, 4, 4, 2, &mut r);
        let x = rand_matrix(3, 4, &mut r);
        check_layer(
            "attention",
            seed,
            &sa,
            |l, x| l.forward(x),
            |l, x, g| {
                let (_, cache) = l.forward_cached(x);
                l.backward(x, &cache, g)
            },
            &x,
            &mut r,
        );

        // parameter-free pieces: activation and row softmax
        let x = rand_matrix(3, 4, &mut r);
        let probe: Vec<f64> = (0..12).map(|_| r.random_range(-1.0..1.0)).collect();
        let grad_out = DenseMatrix::from_vec(3, 4, probe.clone()).unwrap();
        let gx = gelu_backward(&x, &grad_out);
        let fd = central_diff(
            |xd| {
                let xm = DenseMatrix::from_vec(3, 4, xd.to_vec()).unwrap();
                probe_loss(&gelu(&xm), &probe)
            },
            x.data(),
            FD_STEP,
        );
        assert!(rel_error(gx.data(), &fd) <= GRAD_TOL, "gelu seed {seed}");

        let p = softmax_rows(&x);
        let gx = softmax_rows_backward(&p, &grad_out);
        let fd = central_diff(
            |xd| {
                let xm = DenseMatrix::from_vec(3, 4, xd.to_vec()).unwrap();
                probe_loss(&softmax_rows(&xm), &probe)
            },
            x.data(),
            FD_STEP,
        );
        assert!(rel_error(gx.data(), &fd) <= GRAD_TOL, "softmax seed {seed}");
    }

    // end-to-end: full scoring pipeline, plain and depot-conditioned
    for seed in 0..GRAD_SEEDS {
        let cvrp = seed % 2 == 1;
        let (_, graph, centers, model, depot) = tiny_model_setup(550 + seed, cvrp);
        let mut r = rng::seeded(1_000 + seed);
        let depot_ref = depot.as_deref();

        let (logits, cache) = model.forward_training(&graph, &centers, depot_ref).unwrap();
        let probe: Vec<f64> = (0..logits.data().len()).map(|_| r.random_range(-1.0..1.0)).collect();
        let grad_logits = DenseMatrix::from_vec(logits.rows, logits.cols, probe.clone()).unwrap();
        let grads_struct = model.backward(&graph, &cache, &grad_logits);
        let mut grads = Vec::new();
        grads_struct.collect_params(&mut grads);

        let params = model.params();
        let fd = central_diff(
            |pd| {
                let mut m = model.clone();
                m.set_params(pd);
                let (out, _) = m.forward_training(&graph, &centers, depot_ref).unwrap();
                probe_loss(&out, &probe)
            },
            &params,
            FD_STEP,
        );
        let err = rel_error(&grads, &fd);
        assert!(err <= GRAD_TOL, "end-to-end seed {seed} (cvrp {cvrp}): error {err}");
    }
    println!("05 gradient integrity: PASS (6 layers + end-to-end, {GRAD_SEEDS} seeds, tol {GRAD_TOL})");
}

fn teacher_set(count: usize, n: usize, seed: u64) -> Vec<TrainSample> {
    let cfg = TeacherConfig {
        restarts: 2,
        ..TeacherConfig::default()
    };
    let mut samples = Vec::new();
    let mut s = 0u64;
    while samples.len() < count {
        let spec = GmmSpec {
            seed: rng::derive_seed(seed, s),
            k_min: 3,
            k_max: 5,
            std_scale: 0.08,
            ..GmmSpec::default()
        };
        s += 1;
        let inst = generate_gmm_instance(&spec, n).unwrap();
        if let Some(sample) = make_teacher_labels(&inst, &cfg) {
            samples.push(sample);
        }
    }
    samples
}

// 6. Training signal: loss drops by at least 10% on a 200-sample set,
//    and a single sample can be overfit to perfect label accuracy.
#[test]
fn criterion_06_training_signal() {
    let samples = teacher_set(200, 30, 600);
    let mut model = ScoreModel::init(
        ModelConfig {
            d_emb: 16,
            d_hidden: 16,
            layers: 2,
            kappa: 8,
            ..ModelConfig::default()
        },
        1,
    );
    let config = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let hist = train(&mut model, &samples, &config).unwrap();
    assert!(
        hist.final_loss() < 0.9 * hist.initial_loss(),
        "loss {} -> {}",
        hist.initial_loss(),
        hist.final_loss()
    );

    // overfit one easy, well-separated sample to accuracy 1.0
    let sample = (13u64..60)
        .find_map(|s| {
            let spec = GmmSpec {
                seed: s,
                k_min: 3,
                k_max: 3,
                std_scale: 0.05,
                ..GmmSpec::default()
            };
            let inst = generate_gmm_instance(&spec, 12).unwrap();
            make_teacher_labels(&inst, &TeacherConfig::default())
        })
        .unwrap();
    let mut over = ScoreModel::init(
        ModelConfig {
            d_emb: 16,
            d_hidden: 16,
            layers: 2,
            kappa: 6,
            ..ModelConfig::default()
        },
        42,
    );
    let over_cfg = TrainConfig {
        epochs: 400,
        lr: 3e-3,
        decay_every: 1000,
        val_fraction: 0.0,
        ..TrainConfig::default()
    };
    let over_hist = train(&mut over, std::slice::from_ref(&sample), &over_cfg).unwrap();
    assert_eq!(
        over_hist.final_accuracy(),
        1.0,
        "overfit accuracy {}",
        over_hist.final_accuracy()
    );
    println!(
        "06 training signal: PASS (loss {:.4} -> {:.4} on 200 samples; single-sample accuracy 1.0)",
        hist.initial_loss(),
        hist.final_loss()
    );
}

// 7. Constant-per-row neural probabilities leave the heuristic argmax
//    untouched after scaling, exactly.
#[test]
fn criterion_07_scaled_priority_invariance() {
    let mut r = rng::seeded(700);
    let (n, k) = (1000, 6);
    let inst = generate_gmm_instance(
        &GmmSpec {
            seed: 7,
            k_min: k,
            k_max: k,
            ..GmmSpec::default()
        },
        n,
    )
    .unwrap();
    let centers = Centers::from_point_indices(&inst, &(0..k).collect::<Vec<_>>());
    let heur = heuristic_priority(&inst, &centers);

    let mut values = DenseMatrix::zeros(n, k);
    for i in 0..n {
        let row_score = -r.random_range(0.0..5.0); // log-probabilities
        for c in 0..k {
            values.set(i, c, row_score);
        }
    }
    let neural = PriorityMatrix {
        values,
        kind: PriorityKind::Neural,
    };
    let scaled = scaled_priority(&neural, &heur).unwrap();
    assert_eq!(scaled.kind, PriorityKind::NeuralScaled);
    let argmax = |m: &DenseMatrix, i: usize| {
        let row = m.row(i);
        (0..k).max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap()).unwrap()
    };
    for i in 0..n {
        assert_eq!(
            argmax(&scaled.values, i),
            argmax(&heur.values, i),
            "row {i}: argmax moved"
        );
    }
    println!("07 scaled priority invariance: PASS (1000 rows, argmax identical)");
}

fn cvrp_set(count: usize, n: usize, seed: u64) -> Vec<CvrpInstance> {
    (0..count)
        .map(|i| {
            let spec = GmmSpec {
                seed: rng::derive_seed(seed, i as u64),
                ..GmmSpec::default()
            };
            let base = generate_gmm_instance(&spec, n).unwrap();
            let mut r = rng::derived(seed, 1_000 + i as u64);
            let depot = vec![r.random_range(0.0..1.0), r.random_range(0.0..1.0)];
            CvrpInstance::new(base, depot).unwrap()
        })
        .collect()
}

fn assert_routes_feasible(cvrp: &CvrpInstance, sol: &CvrpSolution) {
    for route in &sol.routes {
        assert!(
            route.load <= cvrp.base.capacity + CAP_EPS,
            "{}: route load {} over capacity",
            cvrp.base.id,
            route.load
        );
    }
}

// 8. Routing direction: cluster-first-route-second beats the sweep
//    baseline on average, the improved sweep never loses to plain sweep,
//    all routes are capacity-feasible, the fleet is not undersized, and
//    small routes are near the exhaustive tour optimum.
#[test]
fn criterion_08_cvrp_direction() {
    let instances = cvrp_set(50, 100, 800);
    let config = SolverConfig::default();
    let mut total_ncc = 0.0;
    let mut total_sweep = 0.0;
    let mut small_routes = 0usize;
    let mut small_routes_ok = 0usize;
    for cvrp in &instances {
        let ncc_sol = c1r2_solve(cvrp, &NccOptions::default(), &config).unwrap();
        let sweep = sweep_baseline(cvrp);
        let sweep_plus = sweep_plus_baseline(cvrp);
        total_ncc += ncc_sol.total_length;
        total_sweep += sweep.total_length;
        assert!(
            sweep_plus.total_length <= sweep.total_length + 1e-9,
            "{}: sweep+ {} worse than sweep {}",
            cvrp.base.id,
            sweep_plus.total_length,
            sweep.total_length
        );
        for sol in [&ncc_sol, &sweep, &sweep_plus] {
            assert_routes_feasible(cvrp, sol);
        }
        let min_fleet = (cvrp.base.total_weight() / cvrp.base.capacity).ceil() as usize;
        assert!(
            ncc_sol.k_used() >= min_fleet,
            "{}: {} routes below fleet bound {min_fleet}",
            cvrp.base.id,
            ncc_sol.k_used()
        );
        for route in ncc_sol.routes.iter().chain(&sweep_plus.routes) {
            if route.customers.len() <= 8 && !route.customers.is_empty() {
                let (_, opt) = brute_force_tsp(cvrp, &route.customers).unwrap();
                small_routes += 1;
                if route.length <= 1.25 * opt + 1e-9 {
                    small_routes_ok += 1;
                }
            }
        }
    }
    let mean_ncc = total_ncc / instances.len() as f64;
    let mean_sweep = total_sweep / instances.len() as f64;
    assert!(
        mean_ncc <= mean_sweep,
        "mean length {mean_ncc} above sweep {mean_sweep}"
    );
    let ok_frac = small_routes_ok as f64 / small_routes.max(1) as f64;
    assert!(
        ok_frac >= 0.95,
        "only {ok_frac:.3} of {small_routes} small routes within 1.25x of optimum"
    );
    println!(
        "08 cvrp direction: PASS (mean {mean_ncc:.3} <= sweep {mean_sweep:.3}; {small_routes_ok}/{small_routes} small routes near-optimal)"
    );
}

/// Canonical replay fingerprint: every float bit-exact, runtime excluded.
fn fingerprint(res: &ClusterResult) -> String {
    let mut s = format!(
        "labels={:?} inertia={:016x} dummy={:016x} feasible={} iters={}",
        res.assignment.labels(),
        res.inertia.to_bits(),
        res.dummy_penalty.to_bits(),
        res.feasible,
        res.iterations
    );
    for c in 0..res.centers.len() {
        for &v in res.centers.position(c) {
            s.push_str(&format!(" {:016x}", v.to_bits()));
        }
    }
    s
}

// 9. Determinism: identical (instance, config, seed) runs replay to
//    bit-identical results for every method, with and without a model.
#[test]
fn criterion_09_determinism() {
    let instances = gmm_set(5, 60, 900, &GmmSpec::default());
    for mode in [AssignMode::Greedy, AssignMode::Sampling] {
        for (i, inst) in instances.iter().enumerate() {
            let config = SolverConfig {
                mode,
                seed: i as u64,
                restarts: 2,
                ..SolverConfig::default()
            };
            for method in Method::ALL {
                let a = run_method(inst, method, None, &config).unwrap();
                let b = run_method(inst, method, None, &config).unwrap();
                assert_eq!(
                    fingerprint(&a),
                    fingerprint(&b),
                    "{} {} replay differs",
                    inst.id,
                    method.name()
                );
            }
        }
    }
    // model-guided runs replay too
    let model = ScoreModel::init(
        ModelConfig {
            d_emb: 8,
            d_hidden: 8,
            layers: 2,
            kappa: 8,
            ..ModelConfig::default()
        },
        3,
    );
    let config = SolverConfig {
        knn_k: 8,
        ..SolverConfig::default()
    };
    let opts = NccOptions {
        model: Some(&model),
        depot: None,
    };
    let a = ncc_solve(&instances[0], &opts, &config).unwrap();
    let b = ncc_solve(&instances[0], &opts, &config).unwrap();
    assert_eq!(fingerprint(&a), fingerprint(&b), "model-guided replay differs");
    println!("09 determinism: PASS (5 instances x 2 modes x 5 methods + model-guided, bit-identical)");
}

// 10. Encoder caching: buffered node embeddings reproduce the full
//     forward scores and cut encoder passes below the iteration count.
#[test]
fn criterion_10_embedding_cache() {
    let inst = generate_gmm_instance(
        &GmmSpec {
            seed: 10,
            ..GmmSpec::default()
        },
        80,
    )
    .unwrap();
    let model = ScoreModel::init(
        ModelConfig {
            d_emb: 8,
            d_hidden: 8,
            layers: 2,
            kappa: 8,
            ..ModelConfig::default()
        },
        5,
    );
    let graph = build_knn_graph(&inst, 8).unwrap();
    let centers = Centers::from_point_indices(&inst, &(0..inst.k).collect::<Vec<_>>());

    let enc = model.encode(&graph).unwrap();
    let cached = model.decode(&graph, &enc, &centers, None).unwrap();
    let full = model_forward(&model, &graph, &centers, None).unwrap();
    let max_diff = cached
        .values
        .data()
        .iter()
        .zip(full.values.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(max_diff <= 1e-12, "cached priorities drift: {max_diff}");

    let config = SolverConfig {
        knn_k: 8,
        ..SolverConfig::default()
    };
    let opts = NccOptions {
        model: Some(&model),
        depot: None,
    };
    let res = ncc_solve(&inst, &opts, &config).unwrap();
    assert!(res.iterations > 1, "converged too fast to observe caching");
    assert!(
        res.encoder_passes < res.iterations,
        "{} encoder passes over {} iterations",
        res.encoder_passes,
        res.iterations
    );
    println!(
        "10 embedding cache: PASS (max diff {max_diff:.2e}; {} encoder pass(es) over {} iterations)",
        res.encoder_passes, res.iterations
    );
}
