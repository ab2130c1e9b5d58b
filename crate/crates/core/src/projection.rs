//! Nearest-vertex assignment of data to curve vertices, per-vertex mass and
//! centroid, and orthogonal projection onto segments.

use crate::geom;
use crate::model::{MultiCurve, PointCloud};
use crate::par;

/// Point-to-vertex assignment with the per-vertex statistics derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    dim: usize,
    /// Global vertex index owning each point.
    pub owner: Vec<usize>,
    /// Squared distance from each point to its owner.
    pub dist2: Vec<f64>,
    /// Total weight projecting to each vertex.
    pub mass: Vec<f64>,
    /// Mass-weighted centroid per vertex (row-major); zero rows for empty vertices.
    pub centroid: Vec<f64>,
}

impl Assignment {
    pub fn vertex_count(&self) -> usize {
        self.mass.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty_vertex(&self, j: usize) -> bool {
        self.mass[j] <= 0.0
    }

    /// Centroid of vertex `j`, `None` when no mass projects to it.
    pub fn centroid_of(&self, j: usize) -> Option<&[f64]> {
        if self.is_empty_vertex(j) {
            None
        } else {
            Some(&self.centroid[j * self.dim..(j + 1) * self.dim])
        }
    }

    /// Fidelity `sum_i w_i |x_i - y_owner(i)|^2` in point order.
    pub fn fidelity(&self, cloud: &PointCloud) -> f64 {
        let mut acc = 0.0;
        for (i, d2) in self.dist2.iter().enumerate() {
            acc += cloud.weight(i) * d2;
        }
        acc
    }

    /// Indices of points owned by vertex `j`, in increasing order.
    pub fn points_of(&self, j: usize) -> Vec<usize> {
        self.owner
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| (o == j).then_some(i))
            .collect()
    }
}

/// Nearest vertex of `vertices` (row-major) to `x`; ties go to the lowest index.
#[inline]
pub(crate) fn nearest_vertex(x: &[f64], vertices: &[f64], dim: usize) -> (usize, f64) {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (j, v) in vertices.chunks_exact(dim).enumerate() {
        let d2 = geom::dist2(x, v);
        if d2 < best_d2 {
            best_d2 = d2;
            best = j;
        }
    }
    (best, best_d2)
}

/// Assigns every point to a globally nearest vertex (lowest global index on
/// ties) and accumulates the vertex statistics.
pub fn assign(cloud: &PointCloud, curves: &MultiCurve) -> Assignment {
    let dim = cloud.dim();
    let vertices = curves.vertex_coords();
    let pairs = par::map_indices(cloud.len(), |i| nearest_vertex(cloud.point(i), &vertices, dim));
    let owner: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let dist2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mass, centroid) = vertex_stats(cloud, &owner, curves.vertex_count());
    Assignment {
        dim,
        owner,
        dist2,
        mass,
        centroid,
    }
}

/// Per-vertex mass and mass-weighted centroid for a given owner map.
/// Accumulation runs in point order so results are reproducible.
pub fn vertex_stats(cloud: &PointCloud, owner: &[usize], vertex_count: usize) -> (Vec<f64>, Vec<f64>) {
    let dim = cloud.dim();
    let mut mass = vec![0.0; vertex_count];
    let mut centroid = vec![0.0; vertex_count * dim];
    for (i, &j) in owner.iter().enumerate() {
        let w = cloud.weight(i);
        mass[j] += w;
        let x = cloud.point(i);
        for k in 0..dim {
            centroid[j * dim + k] += w * x[k];
        }
    }
    for j in 0..vertex_count {
        let row = &mut centroid[j * dim..(j + 1) * dim];
        if mass[j] > 0.0 {
            row.iter_mut().for_each(|c| *c /= mass[j]);
        } else {
            row.iter_mut().for_each(|c| *c = 0.0);
        }
    }
    (mass, centroid)
}

/// Orthogonal projection of a point onto a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFoot {
    pub foot: Vec<f64>,
    /// Clamped segment parameter in `[0, 1]`.
    pub t: f64,
    pub distance: f64,
    /// True iff the unclamped parameter lies strictly inside `(0, 1)`.
    pub interior: bool,
}

pub fn segment_foot(x: &[f64], a: &[f64], b: &[f64]) -> SegmentFoot {
    let mut ab2 = 0.0;
    let mut dot = 0.0;
    for k in 0..x.len() {
        let e = b[k] - a[k];
        ab2 += e * e;
        dot += (x[k] - a[k]) * e;
    }
    if ab2 == 0.0 {
        return SegmentFoot {
            foot: a.to_vec(),
            t: 0.0,
            distance: geom::dist(x, a),
            interior: false,
        };
    }
    let raw = dot / ab2;
    let interior = raw > 0.0 && raw < 1.0;
    let t = raw.clamp(0.0, 1.0);
    let foot: Vec<f64> = (0..x.len()).map(|k| a[k] + t * (b[k] - a[k])).collect();
    SegmentFoot {
        distance: geom::dist(x, &foot),
        foot,
        t,
        interior,
    }
}

/// A geometric piece of a configuration: an edge or a singleton vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Element {
    /// Edge between consecutive global vertices `(j, j + 1)`.
    Edge(usize),
    Vertex(usize),
}

/// The edges and singleton vertices of a configuration, with the nearest
/// and second-nearest element of every data point.
pub(crate) struct ElementField {
    pub dim: usize,
    pub vertices: Vec<f64>,
    pub elements: Vec<Element>,
    /// Index into `elements` of the nearest element per point.
    pub best: Vec<usize>,
    pub best_d2: Vec<f64>,
    /// Squared distance to the nearest element other than `best`.
    pub second_d2: Vec<f64>,
}

impl ElementField {
    pub fn elements_of(curves: &MultiCurve) -> Vec<Element> {
        let mut elements = Vec::new();
        let mut start = 0;
        for c in curves.components() {
            if c.len() == 1 {
                elements.push(Element::Vertex(start));
            } else {
                elements.extend((start..start + c.len() - 1).map(Element::Edge));
            }
            start += c.len();
        }
        elements
    }

    #[inline]
    pub fn element_d2(&self, x: &[f64], e: Element) -> f64 {
        let d = self.dim;
        match e {
            Element::Vertex(j) => geom::dist2(x, &self.vertices[j * d..(j + 1) * d]),
            Element::Edge(j) => geom::seg_dist2(
                x,
                &self.vertices[j * d..(j + 1) * d],
                &self.vertices[(j + 1) * d..(j + 2) * d],
            ),
        }
    }

    #[inline]
    pub fn vertex(&self, j: usize) -> &[f64] {
        &self.vertices[j * self.dim..(j + 1) * self.dim]
    }

    pub fn build(cloud: &PointCloud, curves: &MultiCurve) -> Self {
        let dim = cloud.dim();
        let mut field = Self {
            dim,
            vertices: curves.vertex_coords(),
            elements: Self::elements_of(curves),
            best: Vec::new(),
            best_d2: Vec::new(),
            second_d2: Vec::new(),
        };
        let rows = par::map_indices(cloud.len(), |i| {
            let x = cloud.point(i);
            let mut b = usize::MAX;
            let mut b2 = f64::INFINITY;
            let mut s2 = f64::INFINITY;
            for (ei, &e) in field.elements.iter().enumerate() {
                let d2 = field.element_d2(x, e);
                if d2 < b2 {
                    s2 = b2;
                    b2 = d2;
                    b = ei;
                } else if d2 < s2 {
                    s2 = d2;
                }
            }
            (b, b2, s2)
        });
        field.best = rows.iter().map(|r| r.0).collect();
        field.best_d2 = rows.iter().map(|r| r.1).collect();
        field.second_d2 = rows.iter().map(|r| r.2).collect();
        field
    }

    /// `sum_i w_i d(x_i, curves)^2` over segments and singleton vertices.
    pub fn fidelity(&self, cloud: &PointCloud) -> f64 {
        let mut acc = 0.0;
        for (i, d2) in self.best_d2.iter().enumerate() {
            acc += cloud.weight(i) * d2;
        }
        acc
    }
}
