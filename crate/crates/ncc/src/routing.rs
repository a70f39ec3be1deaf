//! Vehicle routing on top of the clustering solvers: cluster-first
//! route-second, a polar sweep baseline, tour construction with 2-opt,
//! and a plain-text CVRP file parser.

use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::instance::{euclidean, CvrpInstance, ProblemInstance};
use crate::scoring::PriorityMatrix;
use crate::solver::{ncc, NccOptions, SolverConfig};

/// One vehicle tour; `customers` are point indices in visit order, the
/// depot implicitly starts and ends the tour.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub customers: Vec<usize>,
    pub length: f64,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvrpSolution {
    pub routes: Vec<Route>,
    pub total_length: f64,
    pub feasible: bool,
    pub runtime: f64,
}

impl CvrpSolution {
    pub fn k_used(&self) -> usize {
        self.routes.iter().filter(|r| !r.customers.is_empty()).count()
    }
}

/// Adds a normalized depot-distance bonus to every priority entry, so
/// points far from the depot are claimed earlier:
/// `w'_ik = w_ik + d(x_i, depot) / max_j d(x_j, depot)`.
pub fn depot_priority(inst: &ProblemInstance, depot: &[f64], prio: &PriorityMatrix) -> PriorityMatrix {
    let dmax = (0..inst.n())
        .map(|i| inst.dist_to(i, depot))
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut out = prio.clone();
    for i in 0..inst.n() {
        let bonus = inst.dist_to(i, depot) / dmax;
        for c in 0..out.values.cols {
            let v = out.values.get(i, c);
            out.values.set(i, c, v + bonus);
        }
    }
    out
}

fn route_length(cvrp: &CvrpInstance, order: &[usize]) -> f64 {
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

/// Builds a tour over `customers`: nearest neighbor from the depot, then
/// first-improvement 2-opt to a local optimum.
pub fn tsp_route(cvrp: &CvrpInstance, customers: &[usize]) -> Route {
    let inst = &cvrp.base;
    let mut remaining: Vec<usize> = customers.to_vec();
    let mut order = Vec::with_capacity(remaining.len());
    let mut cur_pos = cvrp.depot.clone();
    while !remaining.is_empty() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (slot, &i) in remaining.iter().enumerate() {
            let d = inst.dist_to(i, &cur_pos);
            if d < best_d {
                best_d = d;
                best = slot;
            }
        }
        let i = remaining.swap_remove(best);
        cur_pos = inst.point(i).to_vec();
        order.push(i);
    }
    two_opt(cvrp, &mut order);
    finish_route(cvrp, order)
}

/// First-improvement 2-opt on a depot-anchored tour; only ever shortens.
pub fn two_opt(cvrp: &CvrpInstance, order: &mut Vec<usize>) {
    let inst = &cvrp.base;
    let m = order.len();
    if m < 3 {
        return;
    }
    // position 0 is the depot; tour nodes are 1..=m in "order" space
    let pos = |order: &[usize], idx: usize| -> Vec<f64> {
        if idx == 0 || idx == m + 1 {
            cvrp.depot.clone()
        } else {
            inst.point(order[idx - 1]).to_vec()
        }
    };
    let mut improved = true;
    while improved {
        improved = false;
        for a in 0..m {
            for b in (a + 1)..m {
                // reversing order[a..=b] replaces edges (a, a+1) and
                // (b+1, b+2) in depot-anchored indexing
                let p0 = pos(order, a);
                let p1 = pos(order, a + 1);
                let p2 = pos(order, b + 1);
                let p3 = pos(order, b + 2);
                let before = euclidean(&p0, &p1) + euclidean(&p2, &p3);
                let after = euclidean(&p0, &p2) + euclidean(&p1, &p3);
                if after + 1e-12 < before {
                    order[a..=b].reverse();
                    improved = true;
                }
            }
        }
    }
}

fn finish_route(cvrp: &CvrpInstance, order: Vec<usize>) -> Route {
    let load = order.iter().map(|&i| cvrp.base.weight(i)).sum();
    let length = route_length(cvrp, &order);
    Route {
        customers: order,
        length,
        load,
    }
}

fn solution_from_routes(cvrp: &CvrpInstance, routes: Vec<Route>, start: Instant) -> CvrpSolution {
    let total_length = routes.iter().map(|r| r.length).sum();
    let feasible = routes.iter().all(|r| r.load <= cvrp.base.capacity + 1e-9);
    CvrpSolution {
        routes,
        total_length,
        feasible,
        runtime: start.elapsed().as_secs_f64(),
    }
}

/// Cluster-first route-second: the clustering solver groups customers
/// under the capacity with depot-biased priorities and depot-pulled
/// centroids, then each cluster gets an independent tour. Customers the
/// solver could not place become singleton tours.
pub fn c1r2_solve(cvrp: &CvrpInstance, opts: &NccOptions, config: &SolverConfig) -> Result<CvrpSolution> {
    let start = Instant::now();
    let depot_opts = NccOptions {
        depot: Some(&cvrp.depot),
        ..*opts
    };
    let clustering = ncc(&cvrp.base, &depot_opts, config)?;
    let k = clustering.assignment.k();
    let mut routes = Vec::new();
    for c in 0..k {
        let members = clustering.assignment.members(c);
        if !members.is_empty() {
            routes.push(tsp_route(cvrp, &members));
        }
    }
    for i in 0..cvrp.base.n() {
        if clustering.assignment.is_dummy(i) {
            routes.push(tsp_route(cvrp, &[i]));
        }
    }
    Ok(solution_from_routes(cvrp, routes, start))
}

/// Polar-angle sweep: customers sorted by angle around the depot are
/// packed into consecutive capacity-bounded groups, each toured in sweep
/// order. All start offsets and both directions are tried; the shortest
/// total wins.
pub fn sweep_baseline(cvrp: &CvrpInstance) -> CvrpSolution {
    sweep_impl(cvrp, false)
}

/// The sweep baseline with each group's tour improved by 2-opt instead of
/// visiting in sweep order. Group construction is identical, so this is
/// never longer than [`sweep_baseline`] on the same instance.
pub fn sweep_plus_baseline(cvrp: &CvrpInstance) -> CvrpSolution {
    sweep_impl(cvrp, true)
}

fn sweep_impl(cvrp: &CvrpInstance, improve: bool) -> CvrpSolution {
    let start = Instant::now();
    let inst = &cvrp.base;
    let n = inst.n();
    let mut by_angle: Vec<usize> = (0..n).collect();
    by_angle.sort_by(|&a, &b| {
        let ang = |i: usize| {
            let p = inst.point(i);
            (p[1] - cvrp.depot[1]).atan2(p[0] - cvrp.depot[0])
        };
        ang(a).partial_cmp(&ang(b)).unwrap().then(a.cmp(&b))
    });

    let mut best: Option<Vec<Route>> = None;
    let mut best_len = f64::INFINITY;
    for dir in 0..2 {
        let ring: Vec<usize> = if dir == 0 {
            by_angle.clone()
        } else {
            by_angle.iter().rev().copied().collect()
        };
        for s in 0..n {
            let mut routes: Vec<Route> = Vec::new();
            let mut group: Vec<usize> = Vec::new();
            let mut load = 0.0;
            for t in 0..n {
                let i = ring[(s + t) % n];
                if load + inst.weight(i) > inst.capacity + 1e-9 && !group.is_empty() {
                    routes.push(make_sweep_route(cvrp, std::mem::take(&mut group), improve));
                    load = 0.0;
                }
                group.push(i);
                load += inst.weight(i);
            }
            if !group.is_empty() {
                routes.push(make_sweep_route(cvrp, group, improve));
            }
            let total: f64 = routes.iter().map(|r| r.length).sum();
            if total < best_len {
                best_len = total;
                best = Some(routes);
            }
        }
    }
    solution_from_routes(cvrp, best.expect("nonempty instance"), start)
}

fn make_sweep_route(cvrp: &CvrpInstance, mut group: Vec<usize>, improve: bool) -> Route {
    if improve {
        two_opt(cvrp, &mut group);
    }
    finish_route(cvrp, group)
}

/// Parses the plain-text CVRP interchange format with NAME / DIMENSION /
/// CAPACITY headers, NODE_COORD_SECTION, DEMAND_SECTION and
/// DEPOT_SECTION. Node ids are 1-based with the depot listed in
/// DEPOT_SECTION; demands rescale to capacity 1 and the cluster count is
/// the packing lower bound.
pub fn load_vrp(path: impl AsRef<Path>) -> Result<CvrpInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vrp(&text, &path.display().to_string())
}

pub fn parse_vrp(text: &str, origin: &str) -> Result<CvrpInstance> {
    let err = |detail: String| Error::Parse {
        path: origin.to_string(),
        detail,
    };
    let mut name = String::from("vrp");
    let mut dimension = None;
    let mut capacity = None;
    let mut coords: Vec<(usize, f64, f64)> = Vec::new();
    let mut demands: Vec<(usize, f64)> = Vec::new();
    let mut depot_id = None;
    let mut section = "";
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line == "EOF" {
            continue;
        }
        if let Some((key, value)) = line.split_once(':') {
            let key = key.trim();
            let value = value.trim();
            match key {
                "NAME" => name = value.to_string(),
                "DIMENSION" => {
                    dimension = Some(value.parse::<usize>().map_err(|e| err(format!("DIMENSION: {e}")))?)
                }
                "CAPACITY" => {
                    capacity = Some(value.parse::<f64>().map_err(|e| err(format!("CAPACITY: {e}")))?)
                }
                _ => {}
            }
            continue;
        }
        match line {
            "NODE_COORD_SECTION" | "DEMAND_SECTION" | "DEPOT_SECTION" => {
                section = match line {
                    "NODE_COORD_SECTION" => "coord",
                    "DEMAND_SECTION" => "demand",
                    _ => "depot",
                };
                continue;
            }
            _ => {}
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            "coord" => {
                if fields.len() != 3 {
                    return Err(err(format!("bad coord line: {line}")));
                }
                let id = fields[0].parse().map_err(|e| err(format!("node id: {e}")))?;
                let x = fields[1].parse().map_err(|e| err(format!("x: {e}")))?;
                let y = fields[2].parse().map_err(|e| err(format!("y: {e}")))?;
                coords.push((id, x, y));
            }
            "demand" => {
                if fields.len() != 2 {
                    return Err(err(format!("bad demand line: {line}")));
                }
                let id = fields[0].parse().map_err(|e| err(format!("node id: {e}")))?;
                let q = fields[1].parse().map_err(|e| err(format!("demand: {e}")))?;
                demands.push((id, q));
            }
            "depot" => {
                let id: i64 = fields[0].parse().map_err(|e| err(format!("depot id: {e}")))?;
                if id > 0 && depot_id.is_none() {
                    depot_id = Some(id as usize);
                }
            }
            _ => return Err(err(format!("unexpected line outside any section: {line}"))),
        }
    }
    let dimension = dimension.ok_or_else(|| err("missing DIMENSION".into()))?;
    let capacity = capacity.ok_or_else(|| err("missing CAPACITY".into()))?;
    let depot_id = depot_id.ok_or_else(|| err("missing DEPOT_SECTION entry".into()))?;
    if coords.len() != dimension || demands.len() != dimension {
        return Err(err(format!(
            "expected {dimension} coord and demand rows, got {} and {}",
            coords.len(),
            demands.len()
        )));
    }
    coords.sort_by_key(|&(id, _, _)| id);
    demands.sort_by_key(|&(id, _)| id);

    let mut depot = None;
    let mut flat = Vec::with_capacity((dimension - 1) * 2);
    let mut weights = Vec::with_capacity(dimension - 1);
    for (&(id, x, y), &(did, q)) in coords.iter().zip(&demands) {
        if id != did {
            return Err(err(format!("coord id {id} does not match demand id {did}")));
        }
        if id == depot_id {
            if q != 0.0 {
                return Err(err(format!("depot demand must be 0, got {q}")));
            }
            depot = Some(vec![x, y]);
        } else {
            flat.extend_from_slice(&[x, y]);
            // demands rescale so the vehicle capacity is 1
            weights.push(q / capacity);
        }
    }
    let depot = depot.ok_or_else(|| err(format!("depot id {depot_id} has no coordinates")))?;
    let total: f64 = weights.iter().sum();
    let k = total.ceil().max(1.0) as usize;
    let base = ProblemInstance::new(name, 2, k.min(weights.len()), 1.0, flat, weights)?;
    CvrpInstance::new(base, depot)
}
