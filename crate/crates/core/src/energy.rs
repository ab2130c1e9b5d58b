//! Multi-curve energies and the exact energy contribution of edges and edge
//! sequences.
//!
//! Two fidelity measures are used. The *discrete* one projects data to
//! vertices only and is what the local relaxation decreases. The
//! *continuum* one projects to the whole polyline (segments and singleton
//! vertices); topological decisions are based on it so that they do not
//! depend on how finely a segment is subdivided.
//!
//! Deltas are stored as `energy with the edge(s) - energy without`.

use crate::error::{MppcError, Result};
use crate::geom;
use crate::model::{EnergyBreakdown, MultiCurve, Params, PointCloud};
use crate::projection::{self, Element, ElementField};

/// Energy contribution of an edge or a run of consecutive edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDelta {
    /// `length_term - component_term - fidelity_gain`.
    pub value: f64,
    pub length_term: f64,
    pub component_term: f64,
    /// Decrease of the continuum fidelity caused by the presence of the edge(s).
    pub fidelity_gain: f64,
    /// Points whose squared distance is strictly reduced by the edge(s).
    pub points: Vec<usize>,
}

impl EdgeDelta {
    fn new(length_term: f64, component_term: f64, fidelity_gain: f64, points: Vec<usize>) -> Self {
        Self {
            value: length_term - component_term - fidelity_gain,
            length_term,
            component_term,
            fidelity_gain,
            points,
        }
    }
}

fn check_exponent(params: &Params) -> Result<()> {
    if params.p != 2.0 {
        return Err(MppcError::UnsupportedExponent(params.p));
    }
    Ok(())
}

fn structural_terms(curves: &MultiCurve, params: &Params) -> (f64, f64) {
    let length = params.lambda1 * curves.total_length();
    let comps = params.component_cost() * (curves.component_count() as f64 - 1.0);
    (length, comps)
}

/// Discrete energy: vertex-projection fidelity + `lambda1 * length` +
/// `lambda1 * lambda2 * (k - 1)`.
pub fn discrete_energy(cloud: &PointCloud, curves: &MultiCurve, params: &Params) -> Result<EnergyBreakdown> {
    check_exponent(params)?;
    let assignment = projection::assign(cloud, curves);
    let (length, comps) = structural_terms(curves, params);
    Ok(EnergyBreakdown::new(assignment.fidelity(cloud), length, comps))
}

/// `sum_i w_i dist(x_i, curves)^2` with distances to segments and singleton vertices.
pub fn continuum_fidelity(cloud: &PointCloud, curves: &MultiCurve) -> f64 {
    ElementField::build(cloud, curves).fidelity(cloud)
}

/// Energy with the continuum fidelity in place of the vertex-projection one.
pub fn continuum_energy(cloud: &PointCloud, curves: &MultiCurve, params: &Params) -> Result<EnergyBreakdown> {
    check_exponent(params)?;
    let (length, comps) = structural_terms(curves, params);
    Ok(EnergyBreakdown::new(continuum_fidelity(cloud, curves), length, comps))
}

enum EdgeKind {
    /// Existing edge starting at this global vertex.
    Existing(usize),
    /// Candidate edge between two endpoints of distinct components.
    Candidate(usize, usize),
}

fn classify_edge(curves: &MultiCurve, i: usize, j: usize) -> Result<EdgeKind> {
    let invalid = || MppcError::InvalidEdge(i, j);
    let (ci, li) = curves.locate(i).ok_or_else(invalid)?;
    let (cj, lj) = curves.locate(j).ok_or_else(invalid)?;
    if ci == cj {
        if li + 1 == lj {
            return Ok(EdgeKind::Existing(i));
        }
        if lj + 1 == li {
            return Ok(EdgeKind::Existing(j));
        }
        return Err(invalid());
    }
    let comps = curves.components();
    let is_end = |c: usize, l: usize| l == 0 || l + 1 == comps[c].len();
    if is_end(ci, li) && is_end(cj, lj) {
        Ok(EdgeKind::Candidate(i, j))
    } else {
        Err(invalid())
    }
}

/// Energy contribution of the edge `{i, j}` (global vertex indices). For an
/// existing edge the comparison is against the configuration with that edge
/// removed; for an endpoint pair of two components it is against the
/// current configuration.
pub fn edge_delta(cloud: &PointCloud, curves: &MultiCurve, params: &Params, i: usize, j: usize) -> Result<EdgeDelta> {
    let kind = classify_edge(curves, i, j)?;
    let field = ElementField::build(cloud, curves);
    Ok(match kind {
        EdgeKind::Existing(start) => existing_edge_delta(cloud, &field, params, start),
        EdgeKind::Candidate(a, b) => candidate_edge_delta(cloud, &field, params, a, b),
    })
}

/// Energy contribution of the `count` consecutive edges starting at global
/// vertex `start`, including the interior vertices between them.
pub fn edge_sequence_delta(
    cloud: &PointCloud,
    curves: &MultiCurve,
    params: &Params,
    start: usize,
    count: usize,
) -> Result<EdgeDelta> {
    let invalid = || MppcError::InvalidRange { start, count };
    if count == 0 {
        return Err(invalid());
    }
    let (c, l) = curves.locate(start).ok_or_else(invalid)?;
    if l + count >= curves.components()[c].len() {
        return Err(invalid());
    }
    let field = ElementField::build(cloud, curves);
    Ok(sequence_delta(cloud, &field, params, start, count))
}

pub(crate) fn edge_element(field: &ElementField, start: usize) -> Option<usize> {
    field
        .elements
        .binary_search_by_key(&start, |e| match *e {
            Element::Edge(j) | Element::Vertex(j) => j,
        })
        .ok()
        .filter(|&pos| field.elements[pos] == Element::Edge(start))
}

pub(crate) fn existing_edge_delta(cloud: &PointCloud, field: &ElementField, params: &Params, start: usize) -> EdgeDelta {
    let e = edge_element(field, start).expect("edge must exist in the element field");
    let a = field.vertex(start);
    let b = field.vertex(start + 1);
    let mut gain = 0.0;
    let mut points = Vec::new();
    for i in 0..cloud.len() {
        if field.best[i] != e {
            continue;
        }
        let x = cloud.point(i);
        let without = field.second_d2[i].min(geom::dist2(x, a)).min(geom::dist2(x, b));
        let g = without - field.best_d2[i];
        if g > 0.0 {
            gain += cloud.weight(i) * g;
            points.push(i);
        }
    }
    EdgeDelta::new(params.lambda1 * geom::dist(a, b), params.component_cost(), gain, points)
}

pub(crate) fn candidate_edge_delta(cloud: &PointCloud, field: &ElementField, params: &Params, a: usize, b: usize) -> EdgeDelta {
    let ya = field.vertex(a);
    let yb = field.vertex(b);
    let mut gain = 0.0;
    let mut points = Vec::new();
    for i in 0..cloud.len() {
        let s2 = geom::seg_dist2(cloud.point(i), ya, yb);
        if s2 < field.best_d2[i] {
            gain += cloud.weight(i) * (field.best_d2[i] - s2);
            points.push(i);
        }
    }
    EdgeDelta::new(params.lambda1 * geom::dist(ya, yb), params.component_cost(), gain, points)
}

pub(crate) fn sequence_delta(cloud: &PointCloud, field: &ElementField, params: &Params, start: usize, count: usize) -> EdgeDelta {
    let first = edge_element(field, start).expect("edge must exist in the element field");
    let window = first..first + count;
    let ya = field.vertex(start);
    let yb = field.vertex(start + count);
    let length: f64 = (0..count)
        .map(|l| geom::dist(field.vertex(start + l), field.vertex(start + l + 1)))
        .sum();
    let mut gain = 0.0;
    let mut points = Vec::new();
    for i in 0..cloud.len() {
        if !window.contains(&field.best[i]) {
            continue;
        }
        let x = cloud.point(i);
        let mut without = geom::dist2(x, ya).min(geom::dist2(x, yb));
        for (ei, &el) in field.elements.iter().enumerate() {
            if !window.contains(&ei) {
                without = without.min(field.element_d2(x, el));
            }
        }
        let g = without - field.best_d2[i];
        if g > 0.0 {
            gain += cloud.weight(i) * g;
            points.push(i);
        }
    }
    EdgeDelta::new(params.lambda1 * length, params.component_cost(), gain, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Polyline;

    fn half_cloud() -> PointCloud {
        PointCloud::new(1, vec![0.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn discrete_energy_by_hand() {
        let curves = MultiCurve::single(Polyline::new(1, vec![0.25, 0.75]).unwrap());
        let e = discrete_energy(&half_cloud(), &curves, &Params::new(0.1, 0.5)).unwrap();
        assert!((e.fidelity - 0.0625).abs() < 1e-15);
        assert!((e.length - 0.05).abs() < 1e-15);
        assert_eq!(e.components, 0.0);
        assert!((e.total - 0.1125).abs() < 1e-15);
    }

    #[test]
    fn two_singletons_cost_one_component() {
        let curves = MultiCurve::singletons(1, &[0.0, 1.0]).unwrap();
        let e = discrete_energy(&half_cloud(), &curves, &Params::new(0.1, 0.5)).unwrap();
        assert!((e.total - 0.05).abs() < 1e-15);
    }

    #[test]
    fn perfect_fit_is_zero() {
        let cloud = PointCloud::uniform(2, vec![3.0, -1.0]).unwrap();
        let curves = MultiCurve::singletons(2, &[3.0, -1.0]).unwrap();
        assert_eq!(discrete_energy(&cloud, &curves, &Params::new(0.1, 0.5)).unwrap().total, 0.0);
    }

    #[test]
    fn other_exponents_are_rejected() {
        let mut p = Params::new(0.1, 0.5);
        p.p = 1.0;
        let curves = MultiCurve::singletons(1, &[0.0]).unwrap();
        assert!(matches!(
            discrete_energy(&half_cloud(), &curves, &p),
            Err(MppcError::UnsupportedExponent(_))
        ));
    }

    #[test]
    fn connecting_close_singletons_pays() {
        let cloud = PointCloud::new(1, vec![0.0, 0.5], vec![0.5, 0.5]).unwrap();
        let curves = MultiCurve::singletons(1, &[0.0, 0.5]).unwrap();
        let d = edge_delta(&cloud, &curves, &Params::new(0.1, 1.0), 0, 1).unwrap();
        assert!((d.value + 0.05).abs() < 1e-15);

        let cloud = PointCloud::new(1, vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        let curves = MultiCurve::singletons(1, &[0.0, 2.0]).unwrap();
        let d = edge_delta(&cloud, &curves, &Params::new(0.1, 1.0), 0, 1).unwrap();
        assert!((d.value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn edge_with_midpoint_mass() {
        let cloud = PointCloud::new(1, vec![1.0], vec![0.05]).unwrap();
        let curves = MultiCurve::single(Polyline::new(1, vec![0.0, 2.0]).unwrap());
        let d = edge_delta(&cloud, &curves, &Params::new(0.1, 1.0), 0, 1).unwrap();
        assert!((d.value - 0.05).abs() < 1e-15, "{d:?}");
        assert_eq!(d.points, vec![0]);
        // Same pair as a candidate between two singletons.
        let curves = MultiCurve::singletons(1, &[0.0, 2.0]).unwrap();
        let d2 = edge_delta(&cloud, &curves, &Params::new(0.1, 1.0), 1, 0).unwrap();
        assert!((d2.value - d.value).abs() < 1e-15);
    }

    #[test]
    fn invalid_edges() {
        let cloud = half_cloud();
        let p = Params::new(0.1, 1.0);
        let curves = MultiCurve::new(vec![
            Polyline::new(1, vec![0.0, 1.0, 2.0]).unwrap(),
            Polyline::singleton(&[5.0]),
        ])
        .unwrap();
        assert!(matches!(edge_delta(&cloud, &curves, &p, 0, 2), Err(MppcError::InvalidEdge(0, 2))));
        assert!(matches!(edge_delta(&cloud, &curves, &p, 1, 3), Err(MppcError::InvalidEdge(..))));
        assert!(matches!(edge_delta(&cloud, &curves, &p, 0, 9), Err(MppcError::InvalidEdge(..))));
        assert!(edge_delta(&cloud, &curves, &p, 2, 3).is_ok());
        assert!(matches!(
            edge_sequence_delta(&cloud, &curves, &p, 1, 2),
            Err(MppcError::InvalidRange { .. })
        ));
        assert!(matches!(
            edge_sequence_delta(&cloud, &curves, &p, 0, 0),
            Err(MppcError::InvalidRange { .. })
        ));
    }

    #[test]
    fn sequence_of_one_matches_edge() {
        let cloud = PointCloud::uniform(2, vec![0.0, 3.0, 5.0, 3.0]).unwrap();
        let curves = MultiCurve::single(Polyline::new(2, vec![0.0, 0.0, 4.0, 0.0, 8.0, 0.0]).unwrap());
        let p = Params::new(0.1, 1.0);
        let a = edge_delta(&cloud, &curves, &p, 0, 1).unwrap();
        let b = edge_sequence_delta(&cloud, &curves, &p, 0, 1).unwrap();
        assert!((a.value - b.value).abs() < 1e-15);
    }

    #[test]
    fn dumbbell_middle_removal_pays() {
        // Dense clusters at x = 0 and x = 2, three empty edges in between.
        let mut xs = Vec::new();
        for i in 0..20 {
            xs.push(-0.01 * i as f64);
            xs.push(2.0 + 0.01 * i as f64);
        }
        let cloud = PointCloud::uniform(1, xs).unwrap();
        let curves = MultiCurve::single(
            Polyline::new(1, vec![-0.2, 0.0, 2.0 / 3.0, 4.0 / 3.0, 2.0, 2.2]).unwrap(),
        );
        let p = Params::new(0.1, 0.5);
        let d = edge_sequence_delta(&cloud, &curves, &p, 1, 3).unwrap();
        assert!(d.points.is_empty());
        assert!((d.value - 0.15).abs() < 1e-12, "{d:?}");
    }

    #[test]
    fn loaded_middle_edge_keeps() {
        // Unit mass at the middle of a unit edge; the min-endpoint term is 0.25.
        let cloud = PointCloud::new(1, vec![0.5], vec![1.0]).unwrap();
        let curves = MultiCurve::single(Polyline::new(1, vec![0.0, 1.0]).unwrap());
        let p = Params::new(0.1, 2.0);
        let d = edge_sequence_delta(&cloud, &curves, &p, 0, 1).unwrap();
        assert!((d.fidelity_gain - 0.25).abs() < 1e-15);
        assert!(d.value < 0.0);
    }

    #[test]
    fn continuum_fidelity_cases() {
        let curves = MultiCurve::single(Polyline::new(2, vec![0.0, 0.0, 2.0, 0.0]).unwrap());
        let on = PointCloud::new(2, vec![1.5, 0.0], vec![1.0]).unwrap();
        assert_eq!(continuum_fidelity(&on, &curves), 0.0);
        let above = PointCloud::new(2, vec![1.0, 1.0], vec![1.0]).unwrap();
        assert_eq!(continuum_fidelity(&above, &curves), 1.0);

        let cloud = PointCloud::uniform(2, vec![0.0, 1.0, 3.0, 2.0, -1.0, 0.5]).unwrap();
        let singles = MultiCurve::singletons(2, &[0.0, 0.0, 2.0, 2.0]).unwrap();
        let disc = discrete_energy(&cloud, &singles, &Params::new(0.1, 1.0)).unwrap();
        assert!((continuum_fidelity(&cloud, &singles) - disc.fidelity).abs() < 1e-15);
    }
}
