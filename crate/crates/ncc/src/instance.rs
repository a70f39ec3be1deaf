//! Problem instances: data model, synthetic generation, sub-sampling,
//! weight normalization, cluster-count selection and file I/O.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Prng};

/// A capacitated clustering instance: `n` weighted points in `dim`
/// dimensions to be partitioned into `k` clusters of capacity `capacity`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub id: String,
    pub dim: usize,
    pub k: usize,
    /// Uniform per-cluster capacity Q.
    pub capacity: f64,
    /// Row-major n x dim coordinates.
    coords: Vec<f64>,
    weights: Vec<f64>,
    /// Set when some single weight exceeds the capacity. Such instances
    /// load and solve (the dummy cluster absorbs the overflow) but can
    /// never be feasible.
    pub oversized_weights: bool,
}

impl ProblemInstance {
    pub fn new(
        id: impl Into<String>,
        dim: usize,
        k: usize,
        capacity: f64,
        coords: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "coords length {} not divisible by dim {dim}",
                coords.len()
            )));
        }
        let n = coords.len() / dim;
        if weights.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} weights, got {}",
                weights.len()
            )));
        }
        if n < k || k == 0 {
            return Err(Error::invalid(format!("need n >= k >= 1, got n={n}, k={k}")));
        }
        if capacity <= 0.0 || !capacity.is_finite() {
            return Err(Error::invalid(format!("capacity must be positive, got {capacity}")));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coords must be finite"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!("weights must be finite and nonnegative, got {w}")));
        }
        let oversized = weights.iter().any(|&w| w > capacity);
        Ok(Self {
            id,
            dim,
            k,
            capacity,
            coords,
            weights,
            oversized_weights: oversized,
        })
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Euclidean distance between point `i` and an arbitrary coordinate.
    pub fn dist_to(&self, i: usize, other: &[f64]) -> f64 {
        euclidean(self.point(i), other)
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A CVRP instance: customers plus a fixed depot. Weights play the role
/// of customer demands.
#[derive(Debug, Clone, PartialEq)]
pub struct CvrpInstance {
    pub base: ProblemInstance,
    pub depot: Vec<f64>,
}

impl CvrpInstance {
    pub fn new(base: ProblemInstance, depot: Vec<f64>) -> Result<Self> {
        if depot.len() != base.dim {
            return Err(Error::invalid(format!(
                "depot dim {} != instance dim {}",
                depot.len(),
                base.dim
            )));
        }
        if depot.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("depot must be finite"));
        }
        Ok(Self { base, depot })
    }
}

/// Parameters for Gaussian-mixture instance generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmSpec {
    pub k_min: usize,
    pub k_max: usize,
    /// Capacity slack: weights sum to K / capacity_factor with Q = 1.
    pub capacity_factor: f64,
    /// Per-axis standard deviations are drawn uniform in [0, 1] then
    /// multiplied by this scale; unit-scale deviations would swamp the
    /// unit box the means live in.
    pub std_scale: f64,
    pub seed: u64,
}

impl Default for GmmSpec {
    fn default() -> Self {
        Self {
            k_min: 3,
            k_max: 12,
            capacity_factor: 1.1,
            std_scale: 0.1,
            seed: 0,
        }
    }
}

/// Samples an instance from a Gaussian mixture: K components drawn
/// uniformly from the spec's range, component means and (scaled) per-axis
/// deviations uniform in the unit box, standard-uniform weights rescaled
/// so they sum to K / capacity_factor with capacity 1.
pub fn generate_gmm_instance(spec: &GmmSpec, n: usize) -> Result<ProblemInstance> {
    if spec.k_min < 1 || spec.k_min > spec.k_max {
        return Err(Error::InvalidSpec(format!(
            "bad k range [{}, {}]",
            spec.k_min, spec.k_max
        )));
    }
    if spec.capacity_factor <= 1.0 {
        return Err(Error::InvalidSpec(format!(
            "capacity_factor must exceed 1, got {}",
            spec.capacity_factor
        )));
    }
    if n < spec.k_min {
        return Err(Error::InvalidSpec(format!(
            "n = {n} below minimum component count {}",
            spec.k_min
        )));
    }
    let dim = 2;
    let mut rng = rng::seeded(spec.seed);
    let k = rng.random_range(spec.k_min..=spec.k_max.min(n));

    let mut means = vec![0.0; k * dim];
    let mut stds = vec![0.0; k * dim];
    for v in means.iter_mut() {
        *v = rng.random_range(0.0..1.0);
    }
    for v in stds.iter_mut() {
        *v = rng.random_range(0.0..1.0) * spec.std_scale;
    }

    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let c = rng.random_range(0..k);
        for d in 0..dim {
            let z = sample_standard_normal(&mut rng);
            coords.push(means[c * dim + d] + stds[c * dim + d] * z);
        }
    }

    let mut weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let target = k as f64 / spec.capacity_factor;
    for w in weights.iter_mut() {
        *w *= target / total;
    }

    ProblemInstance::new(format!("gmm-{}", spec.seed), dim, k, 1.0, coords, weights)
}

/// Box-Muller, consuming two uniforms per call so the draw count is
/// deterministic.
fn sample_standard_normal(rng: &mut Prng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

const RECT_RETRY_CAP: usize = 100;

/// Draws a random rectangle of half the source bounding-box side lengths,
/// samples `n_sub` points uniformly from within it, and scales their
/// weights by a factor uniform in `weight_scale_range`. Rectangles with
/// fewer than `n_sub` interior points are redrawn up to a retry cap.
/// The cluster count of the sub-sample is re-derived with [`choose_k`]
/// after scaling.
pub fn subsample_rectangle(
    full: &ProblemInstance,
    n_sub: usize,
    weight_scale_range: (f64, f64),
    seed: u64,
) -> Result<ProblemInstance> {
    if n_sub == 0 || n_sub > full.n() {
        return Err(Error::invalid(format!(
            "n_sub = {n_sub} out of range for n = {}",
            full.n()
        )));
    }
    let (lo, hi) = weight_scale_range;
    if lo <= 0.0 || hi < lo {
        return Err(Error::invalid(format!("bad weight scale range [{lo}, {hi})")));
    }
    let dim = full.dim;
    let n = full.n();
    let mut min = vec![f64::INFINITY; dim];
    let mut max = vec![f64::NEG_INFINITY; dim];
    for i in 0..n {
        for (d, &c) in full.point(i).iter().enumerate() {
            min[d] = min[d].min(c);
            max[d] = max[d].max(c);
        }
    }
    let half: Vec<f64> = (0..dim).map(|d| 0.5 * (max[d] - min[d])).collect();

    let mut rng = rng::seeded(seed);
    for _ in 0..RECT_RETRY_CAP {
        let lo_corner: Vec<f64> = (0..dim)
            .map(|d| min[d] + rng.random_range(0.0..=1.0) * (max[d] - min[d] - half[d]).max(0.0))
            .collect();
        let inside: Vec<usize> = (0..n)
            .filter(|&i| {
                full.point(i)
                    .iter()
                    .enumerate()
                    .all(|(d, &c)| c >= lo_corner[d] && c <= lo_corner[d] + half[d])
            })
            .collect();
        if inside.len() < n_sub {
            continue;
        }
        let mut chosen = inside;
        chosen.shuffle(&mut rng);
        chosen.truncate(n_sub);
        let factor = if hi > lo { rng.random_range(lo..hi) } else { lo };

        let mut coords = Vec::with_capacity(n_sub * dim);
        let mut weights = Vec::with_capacity(n_sub);
        for &i in &chosen {
            coords.extend_from_slice(full.point(i));
            weights.push(full.weight(i) * factor);
        }
        let sub = ProblemInstance::new(
            format!("{}-sub-{seed}", full.id),
            dim,
            1,
            full.capacity,
            coords,
            weights,
        )?;
        let seeds: Vec<u64> = (0..8).map(|s| rng::derived(seed, 1000 + s).random()).collect();
        let k = choose_k(&sub, &seeds);
        return Ok(sub.with_k(k.min(n_sub)));
    }
    Err(Error::NoDenseRegion {
        retries: RECT_RETRY_CAP,
        needed: n_sub,
    })
}

/// Rescales weights so they sum to `k / capacity_factor` with capacity 1.
pub fn normalize_weights(inst: &ProblemInstance, capacity_factor: f64) -> Result<ProblemInstance> {
    let total = inst.total_weight();
    if total <= 0.0 {
        return Err(Error::DegenerateInstance("zero total weight".into()));
    }
    let target = inst.k as f64 / capacity_factor;
    let scale = target / total;
    let weights: Vec<f64> = inst.weights.iter().map(|w| w * scale).collect();
    ProblemInstance::new(
        inst.id.clone(),
        inst.dim,
        inst.k,
        1.0,
        inst.coords.clone(),
        weights,
    )
}

/// Picks K by packing points into unboundedly many clusters with random
/// feasible labels, once per seed, and taking the minimal cluster count
/// used. Never returns less than the pigeonhole bound ceil(sum(q) / Q).
pub fn choose_k(inst: &ProblemInstance, seeds: &[u64]) -> usize {
    let lower = (inst.total_weight() / inst.capacity).ceil().max(1.0) as usize;
    let mut best = usize::MAX;
    for &seed in seeds {
        let mut rng = rng::seeded(seed);
        let mut order: Vec<usize> = (0..inst.n()).collect();
        order.shuffle(&mut rng);
        // residual capacity per open cluster
        let mut residual: Vec<f64> = Vec::new();
        for &i in &order {
            let q = inst.weight(i);
            let fits: Vec<usize> = (0..residual.len()).filter(|&c| residual[c] >= q).collect();
            if fits.is_empty() {
                residual.push(inst.capacity - q);
            } else {
                let c = fits[rng.random_range(0..fits.len())];
                residual[c] -= q;
            }
        }
        best = best.min(residual.len());
    }
    if best == usize::MAX {
        best = lower;
    }
    best.max(lower).min(inst.n())
}

// ---------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    id: String,
    dim: usize,
    k: usize,
    capacity: f64,
    coords: Vec<Vec<f64>>,
    weights: Vec<f64>,
    depot: Option<Vec<f64>>,
}

fn read_file(path: &Path) -> Result<InstanceFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

fn file_to_instance(file: InstanceFile, path: &Path) -> Result<(ProblemInstance, Option<Vec<f64>>)> {
    let coords: Vec<f64> = file.coords.iter().flatten().copied().collect();
    if file.coords.iter().any(|row| row.len() != file.dim) {
        return Err(Error::Validation {
            path: path.display().to_string(),
            detail: "coords row length does not match dim".into(),
        });
    }
    let inst = ProblemInstance::new(file.id, file.dim, file.k, file.capacity, coords, file.weights)
        .map_err(|e| Error::Validation {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
    Ok((inst, file.depot))
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    let path = path.as_ref();
    let (inst, _) = file_to_instance(read_file(path)?, path)?;
    Ok(inst)
}

pub fn load_cvrp_instance(path: impl AsRef<Path>) -> Result<CvrpInstance> {
    let path = path.as_ref();
    let (inst, depot) = file_to_instance(read_file(path)?, path)?;
    let depot = depot.ok_or_else(|| Error::Validation {
        path: path.display().to_string(),
        detail: "missing depot for CVRP instance".into(),
    })?;
    CvrpInstance::new(inst, depot)
}

pub fn save_instance(inst: &ProblemInstance, depot: Option<&[f64]>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = InstanceFile {
        id: inst.id.clone(),
        dim: inst.dim,
        k: inst.k,
        capacity: inst.capacity,
        coords: (0..inst.n()).map(|i| inst.point(i).to_vec()).collect(),
        weights: inst.weights.clone(),
        depot: depot.map(|d| d.to_vec()),
    };
    let text = serde_json::to_string_pretty(&file).expect("instance serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_cvrp_instance(inst: &CvrpInstance, path: impl AsRef<Path>) -> Result<()> {
    save_instance(&inst.base, Some(&inst.depot), path)
}
