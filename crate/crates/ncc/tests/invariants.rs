//! Property-based invariants over randomly drawn instances: capacity
//! safety, inertia accounting, determinism, and restart monotonicity.

use ncc::instance::generate_gmm_instance;
use ncc::solver::{
    baseline_random, baseline_rnd_nn, baseline_topk_nn, cap_kmeans, multi_restart,
    ncc as ncc_solve, NccOptions,
};
use ncc::{GmmSpec, ProblemInstance, SolverConfig};
use proptest::prelude::*;

const CAP_EPS: f64 = 1e-9;

fn arb_instance() -> impl Strategy<Value = ProblemInstance> {
    (0u64..10_000, 20usize..80, 105u64..150).prop_map(|(seed, n, factor)| {
        let spec = GmmSpec {
            seed,
            capacity_factor: factor as f64 / 100.0,
            ..GmmSpec::default()
        };
        generate_gmm_instance(&spec, n).unwrap()
    })
}

fn check_result(inst: &ProblemInstance, res: &ncc::ClusterResult) {
    let k = inst.k;
    for c in 0..k {
        assert!(res.assignment.used_capacity(c) <= inst.capacity + CAP_EPS);
    }
    assert_eq!(res.assignment.labels().len(), inst.n());
    assert_eq!(res.feasible, res.assignment.dummy_count() == 0);
    // inertia is recomputable from the labels and centers
    let mut inertia = 0.0;
    for (i, &l) in res.assignment.labels().iter().enumerate() {
        if l < k {
            let d = inst.dist_to(i, res.centers.position(l));
            inertia += d * d;
        }
    }
    assert!((inertia - res.inertia).abs() <= 1e-9 * inertia.max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_solver_respects_capacity(inst in arb_instance(), seed in 0u64..1000) {
        let config = SolverConfig { seed, ..SolverConfig::default() };
        for res in [
            baseline_random(&inst, &config),
            baseline_rnd_nn(&inst, &config),
            baseline_topk_nn(&inst, &config),
            cap_kmeans(&inst, &config),
            ncc_solve(&inst, &NccOptions::default(), &config).unwrap(),
        ] {
            check_result(&inst, &res);
        }
    }

    #[test]
    fn solves_replay_deterministically(inst in arb_instance(), seed in 0u64..1000) {
        let config = SolverConfig { seed, ..SolverConfig::default() };
        let a = ncc_solve(&inst, &NccOptions::default(), &config).unwrap();
        let b = ncc_solve(&inst, &NccOptions::default(), &config).unwrap();
        prop_assert_eq!(a.assignment.labels(), b.assignment.labels());
        prop_assert_eq!(a.inertia.to_bits(), b.inertia.to_bits());
    }

    #[test]
    fn more_restarts_never_hurt(inst in arb_instance(), seed in 0u64..1000) {
        let few = multi_restart(
            &SolverConfig { seed, restarts: 1, ..SolverConfig::default() },
            |c| cap_kmeans(&inst, c),
        );
        let many = multi_restart(
            &SolverConfig { seed, restarts: 4, ..SolverConfig::default() },
            |c| cap_kmeans(&inst, c),
        );
        // the first restart of the larger budget is exactly the smaller
        // run, so the kept result can only improve
        if few.feasible {
            prop_assert!(many.feasible);
            prop_assert!(many.inertia <= few.inertia + 1e-12);
        }
    }
}
