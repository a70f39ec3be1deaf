//! Center initialization strategies. All three place centers on existing
//! points, returned via [`Centers::from_point_indices`].

use rand::Rng;

use crate::instance::ProblemInstance;
use crate::rng::Prng;
use crate::solver::Centers;

/// Centers on the K heaviest points, ties broken by the lower index.
pub fn init_topk_weights(inst: &ProblemInstance) -> Centers {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| {
        inst.weight(b)
            .partial_cmp(&inst.weight(a))
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(inst.k);
    Centers::from_point_indices(inst, &order)
}

/// k-means++ seeding: first center uniform, the rest proportional to the
/// squared distance to the nearest chosen center, without replacement.
pub fn init_kmeanspp(inst: &ProblemInstance, rng: &mut Prng) -> Centers {
    seed_weighted(inst, rng, |_inst, _i, d2| d2)
}

/// Capacitated variant: sampling weight `q_x * D(x)^2`, so heavy points
/// far from existing centers are preferred.
pub fn init_ckmpp(inst: &ProblemInstance, rng: &mut Prng) -> Centers {
    seed_weighted(inst, rng, |inst, i, d2| inst.weight(i) * d2)
}

fn seed_weighted(
    inst: &ProblemInstance,
    rng: &mut Prng,
    score: impl Fn(&ProblemInstance, usize, f64) -> f64,
) -> Centers {
    let n = inst.n();
    assert!(inst.k <= n, "more centers than points");
    let mut chosen = Vec::with_capacity(inst.k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    // squared distance to the nearest chosen center
    let mut d2: Vec<f64> = (0..n).map(|i| inst.dist(i, first).powi(2)).collect();
    while chosen.len() < inst.k {
        let weights: Vec<f64> = (0..n)
            .map(|i| if taken[i] { 0.0 } else { score(inst, i, d2[i]) })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in weights.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                if t < w {
                    pick = i;
                    break;
                }
                t -= w;
            }
            pick
        } else {
            // all remaining candidates coincide with a center; pick
            // uniformly among the untaken ones
            let open: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            open[rng.random_range(0..open.len())]
        };
        chosen.push(pick);
        taken[pick] = true;
        for i in 0..n {
            d2[i] = d2[i].min(inst.dist(i, pick).powi(2));
        }
    }
    Centers::from_point_indices(inst, &chosen)
}
