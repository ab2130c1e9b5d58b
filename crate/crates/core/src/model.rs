//! Domain types shared by every stage of the fit: the weighted point cloud,
//! the multi-curve configuration, solver parameters and reports.

use serde::{Deserialize, Serialize};

use crate::error::{MppcError, Result};
use crate::geom;

/// `n` weighted points in `d` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates and one weight per point.
    /// Only shapes are checked here; use [`validate`] before fitting.
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(MppcError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if coords.len() != weights.len() * dim {
            return Err(MppcError::DimensionMismatch {
                expected: weights.len() * dim,
                found: coords.len(),
            });
        }
        Ok(Self {
            dim,
            coords,
            weights,
        })
    }

    /// Cloud with uniform weights `1/n`.
    pub fn uniform(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(MppcError::DimensionMismatch {
                expected: dim,
                found: coords.len(),
            });
        }
        let n = coords.len() / dim;
        let w = if n > 0 { 1.0 / n as f64 } else { 0.0 };
        Self::new(dim, coords, vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same points with every weight multiplied by `factor`.
    pub fn scaled_weights(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }

    /// Same weights with every coordinate multiplied by `factor`.
    pub fn scaled_coords(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|x| x * factor).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Rescales weights to total mass one.
pub fn normalize(cloud: &PointCloud) -> Result<PointCloud> {
    let total = cloud.total_mass();
    if !(total > 0.0) || !total.is_finite() {
        return Err(MppcError::EmptyCloud);
    }
    if total == 1.0 {
        return Ok(cloud.clone());
    }
    Ok(cloud.scaled_weights(1.0 / total))
}

/// An ordered polyline. A single vertex is a singleton component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    dim: usize,
    coords: Vec<f64>,
}

impl Polyline {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(MppcError::DimensionMismatch {
                expected: dim.max(1),
                found: coords.len(),
            });
        }
        Ok(Self { dim, coords })
    }

    pub fn singleton(point: &[f64]) -> Self {
        Self {
            dim: point.len(),
            coords: point.to_vec(),
        }
    }

    /// Straight polyline with `m >= 2` equally spaced vertices from `a` to `b`.
    pub fn segment(a: &[f64], b: &[f64], m: usize) -> Self {
        let m = m.max(2);
        let dim = a.len();
        let mut coords = Vec::with_capacity(m * dim);
        for j in 0..m {
            let t = j as f64 / (m - 1) as f64;
            coords.extend((0..dim).map(|k| a[k] + t * (b[k] - a[k])));
        }
        Self { dim, coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_singleton(&self) -> bool {
        self.len() == 1
    }

    #[inline]
    pub fn vertex(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    #[inline]
    pub fn vertex_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.coords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn edge_length(&self, j: usize) -> f64 {
        geom::dist(self.vertex(j), self.vertex(j + 1))
    }

    pub fn length(&self) -> f64 {
        (0..self.len().saturating_sub(1))
            .map(|j| self.edge_length(j))
            .sum()
    }

    pub fn push(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.dim);
        self.coords.extend_from_slice(v);
    }

    pub fn insert(&mut self, j: usize, v: &[f64]) {
        let at = j * self.dim;
        self.coords.splice(at..at, v.iter().copied());
    }

    pub fn remove(&mut self, j: usize) -> Vec<f64> {
        let at = j * self.dim;
        self.coords.drain(at..at + self.dim).collect()
    }

    pub fn reversed(&self) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for j in (0..self.len()).rev() {
            coords.extend_from_slice(self.vertex(j));
        }
        Self {
            dim: self.dim,
            coords,
        }
    }

    /// Vertices `from..=to` as a new polyline.
    pub fn slice(&self, from: usize, to: usize) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords[from * self.dim..(to + 1) * self.dim].to_vec(),
        }
    }

    pub fn append(&mut self, other: &Polyline) {
        self.coords.extend_from_slice(&other.coords);
    }
}

/// Ordered list of components; global vertex indices run through the
/// components in order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCurve {
    dim: usize,
    components: Vec<Polyline>,
}

impl MultiCurve {
    pub fn new(components: Vec<Polyline>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(MppcError::InvalidOption(
                "a configuration needs at least one component".into(),
            ));
        };
        let dim = first.dim();
        for c in &components {
            if c.dim() != dim {
                return Err(MppcError::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
        }
        Ok(Self { dim, components })
    }

    pub fn single(polyline: Polyline) -> Self {
        Self {
            dim: polyline.dim(),
            components: vec![polyline],
        }
    }

    /// One singleton per row of `centers`.
    pub fn singletons(dim: usize, centers: &[f64]) -> Result<Self> {
        let comps = centers
            .chunks(dim)
            .map(Polyline::singleton)
            .collect::<Vec<_>>();
        Self::new(comps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Polyline] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut Vec<Polyline> {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<Polyline> {
        self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.components.iter().map(Polyline::len).sum()
    }

    pub fn singleton_count(&self) -> usize {
        self.components.iter().filter(|c| c.is_singleton()).count()
    }

    /// Global index of the first vertex of every component, plus the total
    /// vertex count as a final entry.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.components.len() + 1);
        let mut acc = 0;
        out.push(0);
        for c in &self.components {
            acc += c.len();
            out.push(acc);
        }
        out
    }

    /// (component, local index) of a global vertex index.
    pub fn locate(&self, global: usize) -> Option<(usize, usize)> {
        let mut start = 0;
        for (c, comp) in self.components.iter().enumerate() {
            if global < start + comp.len() {
                return Some((c, global - start));
            }
            start += comp.len();
        }
        None
    }

    pub fn vertex(&self, global: usize) -> &[f64] {
        let (c, j) = self.locate(global).expect("vertex index out of range");
        self.components[c].vertex(j)
    }

    /// All vertices, row-major, in global order.
    pub fn vertex_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.vertex_count() * self.dim);
        for c in &self.components {
            out.extend_from_slice(c.coords());
        }
        out
    }

    pub fn total_length(&self) -> f64 {
        self.components.iter().map(Polyline::length).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            components: self
                .components
                .iter()
                .map(|c| Polyline {
                    dim: c.dim,
                    coords: c.coords.iter().map(|x| x * factor).collect(),
                })
                .collect(),
        }
    }
}

/// Solver and functional parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Length weight.
    pub lambda1: f64,
    /// Per-component weight, in length units.
    pub lambda2: f64,
    /// Fidelity exponent. The discrete solver only supports 2.
    pub p: f64,
    /// ADMM penalty; `None` selects `2 * projected mass / m` per component.
    pub rho: Option<f64>,
    pub top_period: usize,
    pub reparam_period: usize,
    /// Initial ADMM cycles per outer iteration.
    pub inner_admm_iters: usize,
    pub max_inner_admm_iters: usize,
    pub max_outer_iters: usize,
    pub energy_rtol: f64,
    pub fix_endpoints: bool,
    pub turning_angle_check: bool,
    /// Moves every vertex, not only singletons, to the center of mass of its
    /// data after relaxation. The energy is then no longer monotone.
    #[serde(default)]
    pub centroid_all_vertices: bool,
    /// Disables every topological move (single-curve descent).
    pub ppc_only: bool,
    pub seed: u64,
}

impl Params {
    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        Self {
            lambda1,
            lambda2,
            p: 2.0,
            rho: None,
            top_period: 10,
            reparam_period: 5,
            inner_admm_iters: 1,
            max_inner_admm_iters: 64,
            max_outer_iters: 2000,
            energy_rtol: 1e-6,
            fix_endpoints: false,
            turning_angle_check: false,
            centroid_all_vertices: false,
            ppc_only: false,
            seed: 0,
        }
    }

    /// Component penalty `lambda1 * lambda2`.
    pub fn component_cost(&self) -> f64 {
        self.lambda1 * self.lambda2
    }
}

/// Checks every type invariant of the cloud and parameters.
pub fn validate(cloud: &PointCloud, params: &Params) -> Result<()> {
    if cloud.is_empty() {
        return Err(MppcError::EmptyCloud);
    }
    if cloud.coords().iter().any(|x| !x.is_finite()) {
        return Err(MppcError::NonFinite("coordinates"));
    }
    if cloud.weights().iter().any(|w| !w.is_finite()) {
        return Err(MppcError::NonFinite("weights"));
    }
    if cloud.weights().iter().any(|&w| w < 0.0) {
        return Err(MppcError::NonPositiveParam("weights"));
    }
    if !(cloud.total_mass() > 0.0) {
        return Err(MppcError::EmptyCloud);
    }
    for (name, v) in [("lambda1", params.lambda1), ("lambda2", params.lambda2)] {
        if !v.is_finite() {
            return Err(MppcError::NonFinite(name));
        }
        if v <= 0.0 {
            return Err(MppcError::NonPositiveParam(name));
        }
    }
    if let Some(rho) = params.rho {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(MppcError::NonPositiveParam("rho"));
        }
    }
    if !(params.p >= 1.0) {
        return Err(MppcError::NonPositiveParam("p"));
    }
    if params.top_period == 0 {
        return Err(MppcError::NonPositiveParam("top_period"));
    }
    if params.reparam_period == 0 {
        return Err(MppcError::NonPositiveParam("reparam_period"));
    }
    Ok(())
}

/// Checks a configuration against a cloud: matching dimension, finite coordinates.
pub fn validate_curves(cloud: &PointCloud, curves: &MultiCurve) -> Result<()> {
    if curves.dim() != cloud.dim() {
        return Err(MppcError::DimensionMismatch {
            expected: cloud.dim(),
            found: curves.dim(),
        });
    }
    if curves
        .components()
        .iter()
        .any(|c| c.coords().iter().any(|x| !x.is_finite()))
    {
        return Err(MppcError::NonFinite("curve vertices"));
    }
    Ok(())
}

/// The three terms of the multi-curve energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub fidelity: f64,
    /// `lambda1 * total length`.
    pub length: f64,
    /// `lambda1 * lambda2 * (k - 1)`.
    pub components: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(fidelity: f64, length: f64, components: f64) -> Self {
        Self {
            fidelity,
            length,
            components,
            total: fidelity + length + components,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    CutEdge,
    CutSequence,
    Connect,
    Spawn,
    Split,
    Remove,
    Grow,
    DropEmpty,
}

/// One applied topological move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyEvent {
    pub kind: EventKind,
    pub iteration: usize,
    pub energy_before: f64,
    pub energy_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    /// Total discrete energy at the end of each outer iteration.
    pub history: Vec<f64>,
    /// Iterations (1-based) whose re-parametrization may raise the energy.
    pub refinement_iterations: Vec<usize>,
    pub events: Vec<TopologyEvent>,
    pub converged: bool,
    pub wall_time_s: f64,
}
