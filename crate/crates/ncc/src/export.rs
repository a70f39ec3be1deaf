//! GeoJSON export of clustering results: one hull feature per cluster
//! plus point features for the centers.

use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::solver::ClusterResult;

/// Convex hull via Andrew's monotone chain, counter-clockwise without a
/// repeated closing point. Collinear boundary points are dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    // a fully collinear set collapses to its two extremes
    if lower.len() < 3 {
        let mut ends = vec![pts[0], *pts.last().unwrap()];
        ends.dedup();
        return ends;
    }
    lower
}

fn position(p: [f64; 2]) -> Value {
    json!([p[0], p[1]])
}

/// One feature per nonempty cluster — a Polygon when the members span an
/// area, degrading to LineString or Point — plus a Point feature for each
/// center. Dummy points, if any, form their own feature.
pub fn result_to_geojson(inst: &ProblemInstance, result: &ClusterResult) -> Value {
    let k = result.assignment.k();
    let mut features = Vec::new();
    for c in 0..k {
        let members = result.assignment.members(c);
        if members.is_empty() {
            continue;
        }
        let pts: Vec<[f64; 2]> = members
            .iter()
            .map(|&i| [inst.point(i)[0], inst.point(i)[1]])
            .collect();
        let hull = convex_hull(&pts);
        let geometry = match hull.len() {
            1 => json!({ "type": "Point", "coordinates": position(hull[0]) }),
            2 => json!({
                "type": "LineString",
                "coordinates": [position(hull[0]), position(hull[1])],
            }),
            _ => {
                // GeoJSON rings repeat the first position at the end
                let mut ring: Vec<Value> = hull.iter().map(|&p| position(p)).collect();
                ring.push(position(hull[0]));
                json!({ "type": "Polygon", "coordinates": [ring] })
            }
        };
        features.push(json!({
            "type": "Feature",
            "geometry": geometry,
            "properties": {
                "kind": "cluster",
                "cluster": c,
                "members": members.len(),
                "weight": result.assignment.used_capacity(c),
            },
        }));
    }
    for c in 0..k {
        let p = result.centers.position(c);
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": [p[0], p[1]] },
            "properties": { "kind": "center", "cluster": c },
        }));
    }
    let dummies = result.assignment.members(k);
    if !dummies.is_empty() {
        let coords: Vec<Value> = dummies
            .iter()
            .map(|&i| json!([inst.point(i)[0], inst.point(i)[1]]))
            .collect();
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "MultiPoint", "coordinates": coords },
            "properties": { "kind": "unassigned", "members": dummies.len() },
        }));
    }
    json!({ "type": "FeatureCollection", "features": features })
}

pub fn save_geojson(inst: &ProblemInstance, result: &ClusterResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let value = result_to_geojson(inst, result);
    let text = serde_json::to_string_pretty(&value).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
