//! Vertex re-spacing along polylines and midpoint refinement.

use std::f64::consts::PI;

use crate::geom;
use crate::model::{MultiCurve, Params, Polyline};
use crate::projection::Assignment;

/// `l_j`: half the summed length of the edges adjacent to vertex `j`.
pub fn half_lengths(p: &Polyline) -> Vec<f64> {
    let m = p.len();
    (0..m)
        .map(|j| {
            let mut s = 0.0;
            if j > 0 {
                s += p.edge_length(j - 1);
            }
            if j + 1 < m {
                s += p.edge_length(j);
            }
            0.5 * s
        })
        .collect()
}

/// Moves the vertices along the polyline so that the integral of the square
/// root of the estimated data density is equal between consecutive
/// vertices. Endpoints and the vertex count are kept. The density near
/// vertex `j` is `mass_j / l_j`; vertices without mass take the smallest
/// positive estimate.
pub fn reparametrize(p: &Polyline, mass: &[f64]) -> Polyline {
    let m = p.len();
    if m < 3 || mass.iter().all(|&w| w <= 0.0) {
        return p.clone();
    }
    let l = half_lengths(p);
    let raw: Vec<f64> = mass
        .iter()
        .zip(&l)
        .map(|(&w, &lj)| if w > 0.0 && lj > 0.0 { w / lj } else { 0.0 })
        .collect();
    let floor = raw.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return p.clone();
    }
    let root: Vec<f64> = raw.iter().map(|&r| r.max(floor).sqrt()).collect();

    // Each edge is split at its midpoint into a half weighted by each
    // endpoint's density.
    let edges: Vec<f64> = (0..m - 1).map(|j| p.edge_length(j)).collect();
    let mut cumulative = Vec::with_capacity(m);
    cumulative.push(0.0);
    for j in 0..m - 1 {
        let prev = cumulative[j];
        cumulative.push(prev + 0.5 * edges[j] * (root[j] + root[j + 1]));
    }
    let total = cumulative[m - 1];
    if !(total > 0.0) {
        return p.clone();
    }
    let dim = p.dim();
    let mut out = Polyline::singleton(p.vertex(0));
    let mut e = 0;
    for k in 1..m - 1 {
        let target = total * k as f64 / (m - 1) as f64;
        while e < m - 2 && cumulative[e + 1] < target {
            e += 1;
        }
        let within = target - cumulative[e];
        let half = 0.5 * edges[e];
        let first = half * root[e];
        let s = if within <= first {
            within / root[e]
        } else {
            half + (within - first) / root[e + 1]
        };
        let t = if edges[e] > 0.0 { (s / edges[e]).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (p.vertex(e), p.vertex(e + 1));
        let v: Vec<f64> = (0..dim).map(|d| a[d] + t * (b[d] - a[d])).collect();
        out.push(&v);
    }
    out.push(p.vertex(m - 1));
    out
}

pub fn mean_edge_length(p: &Polyline) -> f64 {
    if p.len() < 2 {
        0.0
    } else {
        p.length() / (p.len() - 1) as f64
    }
}

/// Mean angle between consecutive non-degenerate edges.
pub fn mean_turning_angle(p: &Polyline) -> f64 {
    let dim = p.dim();
    let dirs: Vec<Vec<f64>> = (0..p.len().saturating_sub(1))
        .filter_map(|j| {
            let d: Vec<f64> = (0..dim).map(|k| p.vertex(j + 1)[k] - p.vertex(j)[k]).collect();
            let n = geom::norm(&d);
            (n > 0.0).then(|| d.iter().map(|x| x / n).collect())
        })
        .collect();
    if dirs.len() < 2 {
        return 0.0;
    }
    let sum: f64 = dirs
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0).acos())
        .sum();
    sum / (dirs.len() - 1) as f64
}

/// Largest vertex count refinement will grow a component to.
pub fn vertex_cap(p: &Polyline, params: &Params) -> usize {
    let by_length = (4.0 * p.length() / params.lambda2).ceil();
    let by_length = if by_length.is_finite() { by_length as usize } else { usize::MAX };
    by_length.max(8)
}

fn needs_refinement(p: &Polyline, params: &Params) -> bool {
    mean_edge_length(p) > params.lambda2 / 2.0 || (params.turning_angle_check && mean_turning_angle(p) > PI / 10.0)
}

/// Inserts edge midpoints next to the vertex with the largest `l_j * mass_j`
/// until the mean edge length is at most `lambda2 / 2` (and, when enabled,
/// the mean turning angle at most `pi / 10`) or the vertex cap is reached.
/// A split vertex shares its mass estimate with the inserted one.
pub fn refine(p: &Polyline, params: &Params, mass: &[f64]) -> Polyline {
    if p.len() < 2 {
        return p.clone();
    }
    let mut p = p.clone();
    let mut mass = mass.to_vec();
    let cap = vertex_cap(&p, params);
    while p.len() < cap && needs_refinement(&p, params) {
        let l = half_lengths(&p);
        let j = (0..p.len())
            .max_by(|&a, &b| (l[a] * mass[a]).total_cmp(&(l[b] * mass[b])).then(b.cmp(&a)))
            .expect("non-empty polyline");
        let m = p.len();
        let left = if j > 0 { p.edge_length(j - 1) } else { -1.0 };
        let right = if j + 1 < m { p.edge_length(j) } else { -1.0 };
        let e = if right >= left { j } else { j - 1 };
        let mid: Vec<f64> = p.vertex(e).iter().zip(p.vertex(e + 1)).map(|(a, b)| 0.5 * (a + b)).collect();
        p.insert(e + 1, &mid);
        let share = 0.5 * mass[j];
        mass[j] = share;
        mass.insert(e + 1, share);
    }
    p
}

/// Re-spaces and refines every non-singleton component using the current
/// per-vertex masses.
pub fn resolve(curves: &MultiCurve, assignment: &Assignment, params: &Params) -> MultiCurve {
    let offsets = curves.offsets();
    let comps = curves
        .components()
        .iter()
        .enumerate()
        .map(|(c, p)| {
            if p.is_singleton() {
                return p.clone();
            }
            let mass = &assignment.mass[offsets[c]..offsets[c + 1]];
            let q = reparametrize(p, mass);
            refine(&q, params, mass)
        })
        .collect();
    MultiCurve::new(comps).expect("same component count")
}
