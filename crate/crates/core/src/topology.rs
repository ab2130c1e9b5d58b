//! Topological moves: cutting edges and edge runs, greedy reconnection of
//! components, and spawning, splitting, removing and growing singletons.
//!
//! Cuts and connections are proposed from the exact continuum edge deltas.
//! Every applied move is then checked against the discrete energy, which
//! must strictly decrease; moves that fail the check are rolled back. New
//! edges are subdivided so the discrete energy sees the fidelity they add.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use crate::energy::{candidate_edge_delta, sequence_delta};
use crate::geom;
use crate::kmeans;
use crate::model::{EventKind, MultiCurve, Params, PointCloud, Polyline, TopologyEvent};
use crate::par;
use crate::projection::{self, Assignment, Element, ElementField};

/// Endpoint candidates kept per endpoint in the connection pass.
pub const CANDIDATES_PER_ENDPOINT: usize = 10;

const SPLIT_LLOYD_ITERS: usize = 5;

fn tolerance(params: &Params) -> f64 {
    1e-12 * params.component_cost()
}

/// Discrete energy of `curves` together with the assignment it was computed from.
pub(crate) fn evaluate(cloud: &PointCloud, curves: &MultiCurve, params: &Params) -> (f64, Assignment) {
    let a = projection::assign(cloud, curves);
    let total = a.fidelity(cloud)
        + params.lambda1 * curves.total_length()
        + params.component_cost() * (curves.component_count() as f64 - 1.0);
    (total, a)
}

fn event(kind: EventKind, iteration: usize, before: f64, after: f64) -> TopologyEvent {
    TopologyEvent {
        kind,
        iteration,
        energy_before: before,
        energy_after: after,
    }
}

/// Fidelity gain of every edge element of `field`, indexed like `field.elements`.
fn edge_gains(cloud: &PointCloud, field: &ElementField) -> Vec<f64> {
    let mut gains = vec![0.0; field.elements.len()];
    for i in 0..cloud.len() {
        let e = field.best[i];
        if let Element::Edge(j) = field.elements[e] {
            let x = cloud.point(i);
            let without = field.second_d2[i]
                .min(geom::dist2(x, field.vertex(j)))
                .min(geom::dist2(x, field.vertex(j + 1)));
            let g = without - field.best_d2[i];
            if g > 0.0 {
                gains[e] += cloud.weight(i) * g;
            }
        }
    }
    gains
}

/// Removes the `count` edges starting at global vertex `start`, with the
/// vertices strictly between them.
fn cut(curves: &MultiCurve, start: usize, count: usize) -> MultiCurve {
    let (c, l) = curves.locate(start).expect("cut start in range");
    let mut comps = curves.components().to_vec();
    let p = comps[c].clone();
    let head = p.slice(0, l);
    let tail = p.slice(l + count, p.len() - 1);
    comps[c] = head;
    comps.insert(c + 1, tail);
    MultiCurve::new(comps).expect("cut keeps components")
}

/// Removes every edge and edge run whose presence raises the energy.
///
/// Single edges are handled first, then windows of at least two
/// consecutive edges grown until their length exceeds `lambda2`, scanning
/// each component from its start.
pub fn cut_pass(
    cloud: &PointCloud,
    curves: &MultiCurve,
    params: &Params,
    iteration: usize,
) -> (MultiCurve, Vec<TopologyEvent>) {
    let tol = tolerance(params);
    let cc = params.component_cost();
    let mut curves = curves.clone();
    let mut events = Vec::new();
    let (mut energy, _) = evaluate(cloud, &curves, params);

    // Removing a single edge keeps every vertex, so the discrete fidelity
    // is unchanged and the saving is exact.
    loop {
        let field = ElementField::build(cloud, &curves);
        let gains = edge_gains(cloud, &field);
        let pick = field.elements.iter().enumerate().find_map(|(e, el)| match *el {
            Element::Edge(j) => {
                let len = params.lambda1 * geom::dist(field.vertex(j), field.vertex(j + 1));
                (len - cc - gains[e] > tol).then_some((j, len - cc))
            }
            Element::Vertex(_) => None,
        });
        let Some((start, saving)) = pick else { break };
        curves = cut(&curves, start, 1);
        let after = energy - saving;
        events.push(event(EventKind::CutEdge, iteration, energy, after));
        energy = after;
    }

    let mut c = 0;
    while c < curves.component_count() {
        let mut i = 0;
        loop {
            let m = curves.components()[c].len();
            if i + 2 > m - 1 {
                break;
            }
            let poly = &curves.components()[c];
            let mut k = 1;
            let mut len = poly.edge_length(i);
            loop {
                k += 1;
                len += poly.edge_length(i + k - 1);
                if len > params.lambda2 || i + k == m - 1 {
                    break;
                }
            }
            if len <= params.lambda2 {
                // The window reached the end without exceeding lambda2; no
                // later window in this component can either.
                break;
            }
            let start = curves.offsets()[c] + i;
            let field = ElementField::build(cloud, &curves);
            let delta = sequence_delta(cloud, &field, params, start, k);
            if delta.value > tol {
                let candidate = cut(&curves, start, k);
                let (after, _) = evaluate(cloud, &candidate, params);
                if after < energy {
                    events.push(event(EventKind::CutSequence, iteration, energy, after));
                    energy = after;
                    curves = candidate;
                    break;
                }
            }
            i += 1;
        }
        c += 1;
    }
    (curves, events)
}

/// An endpoint of an input component: `(component, 0)` is its first
/// vertex, `(component, 1)` its last. Singletons use side 0 only.
type Label = (usize, u8);

#[derive(Clone)]
struct Slot {
    poly: Polyline,
    ends: [Label; 2],
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum End {
    First,
    Last,
}

struct Candidate {
    value: f64,
    version: usize,
    a: Label,
    b: Label,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

struct Joiner {
    slots: Vec<Option<Slot>>,
    /// Slot currently holding each input component.
    home: Vec<usize>,
    singleton: Vec<bool>,
}

impl Joiner {
    fn new(curves: &MultiCurve) -> Self {
        let slots = curves
            .components()
            .iter()
            .enumerate()
            .map(|(c, p)| {
                Some(Slot {
                    poly: p.clone(),
                    ends: [(c, 0), (c, 1)],
                })
            })
            .collect();
        Self {
            slots,
            home: (0..curves.component_count()).collect(),
            singleton: curves.components().iter().map(Polyline::is_singleton).collect(),
        }
    }

    fn curves(&self) -> MultiCurve {
        MultiCurve::new(self.slots.iter().flatten().map(|s| s.poly.clone()).collect())
            .expect("at least one slot survives")
    }

    /// Slot and end at which `label` currently sits, if it is still an endpoint.
    fn position(&self, label: Label) -> Option<(usize, End)> {
        let s = self.home[label.0];
        let slot = self.slots[s].as_ref()?;
        let matches = |l: Label| {
            if self.singleton[label.0] {
                l.0 == label.0
            } else {
                l == label
            }
        };
        if slot.poly.is_singleton() {
            return slot.ends.iter().any(|&l| matches(l)).then_some((s, End::First));
        }
        if matches(slot.ends[0]) {
            Some((s, End::First))
        } else if matches(slot.ends[1]) {
            Some((s, End::Last))
        } else {
            None
        }
    }

    fn global(&self, slot: usize, end: End) -> usize {
        let offset: usize = self.slots[..slot].iter().flatten().map(|s| s.poly.len()).sum();
        let len = self.slots[slot].as_ref().expect("live slot").poly.len();
        match end {
            End::First => offset,
            End::Last => offset + len - 1,
        }
    }

    /// Joins the two endpoints with a straight run of edges no longer than
    /// `max_edge`; the merged polyline takes the lower slot.
    fn join(&mut self, a: (usize, End), b: (usize, End), max_edge: f64) {
        let (mut first, mut second) = (a, b);
        if first.0 > second.0 {
            std::mem::swap(&mut first, &mut second);
        }
        let mut sa = self.slots[first.0].take().expect("live slot");
        let mut sb = self.slots[second.0].take().expect("live slot");
        if first.1 == End::First && sa.poly.len() > 1 {
            sa.poly = sa.poly.reversed();
            sa.ends.swap(0, 1);
        }
        if second.1 == End::Last && sb.poly.len() > 1 {
            sb.poly = sb.poly.reversed();
            sb.ends.swap(0, 1);
        }
        let ya = sa.poly.vertex(sa.poly.len() - 1).to_vec();
        let yb = sb.poly.vertex(0).to_vec();
        let pieces = (geom::dist(&ya, &yb) / max_edge).ceil().max(1.0) as usize;
        let mut poly = sa.poly;
        for s in 1..pieces {
            let t = s as f64 / pieces as f64;
            let v: Vec<f64> = ya.iter().zip(&yb).map(|(p, q)| p + t * (q - p)).collect();
            poly.push(&v);
        }
        poly.append(&sb.poly);
        for h in self.home.iter_mut() {
            if *h == second.0 {
                *h = first.0;
            }
        }
        self.slots[first.0] = Some(Slot {
            poly,
            ends: [sa.ends[0], sb.ends[1]],
        });
    }
}

/// Greedily adds energy-decreasing edges between endpoints of distinct
/// components, most negative delta first, never closing a cycle.
pub fn connect_pass(
    cloud: &PointCloud,
    curves: &MultiCurve,
    params: &Params,
    iteration: usize,
) -> (MultiCurve, Vec<TopologyEvent>) {
    let tol = tolerance(params);
    let mut events = Vec::new();
    if curves.component_count() < 2 {
        return (curves.clone(), events);
    }
    let mut joiner = Joiner::new(curves);
    let mut labels: Vec<Label> = Vec::new();
    for (c, p) in curves.components().iter().enumerate() {
        labels.push((c, 0));
        if !p.is_singleton() {
            labels.push((c, 1));
        }
    }
    let coord = |l: Label| {
        let p = &curves.components()[l.0];
        p.vertex(if l.1 == 0 { 0 } else { p.len() - 1 })
    };
    let mut pairs = BTreeSet::new();
    for (ia, &a) in labels.iter().enumerate() {
        let mut near: Vec<(f64, usize)> = labels
            .iter()
            .enumerate()
            .filter(|(_, b)| b.0 != a.0)
            .map(|(ib, &b)| (geom::dist2(coord(a), coord(b)), ib))
            .collect();
        near.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for &(_, ib) in near.iter().take(CANDIDATES_PER_ENDPOINT) {
            pairs.insert((ia.min(ib), ia.max(ib)));
        }
    }
    let pairs: Vec<(Label, Label)> = pairs.into_iter().map(|(i, j)| (labels[i], labels[j])).collect();

    let mut current = joiner.curves();
    let mut field = ElementField::build(cloud, &current);
    let values = {
        let field = &field;
        let joiner = &joiner;
        par::map_indices(pairs.len(), |q| {
            let (a, b) = pairs[q];
            let pa = joiner.position(a).expect("fresh endpoint");
            let pb = joiner.position(b).expect("fresh endpoint");
            candidate_edge_delta(cloud, field, params, joiner.global(pa.0, pa.1), joiner.global(pb.0, pb.1)).value
        })
    };
    let mut heap: BinaryHeap<Reverse<Candidate>> = pairs
        .iter()
        .zip(values)
        .map(|(&(a, b), value)| {
            Reverse(Candidate {
                value,
                version: 0,
                a,
                b,
            })
        })
        .collect();
    let mut version = 0;
    let (mut energy, _) = evaluate(cloud, &current, params);
    while let Some(Reverse(top)) = heap.pop() {
        if top.value >= -tol {
            break;
        }
        let (Some(pa), Some(pb)) = (joiner.position(top.a), joiner.position(top.b)) else {
            continue;
        };
        if pa.0 == pb.0 {
            continue;
        }
        if top.version != version {
            let value =
                candidate_edge_delta(cloud, &field, params, joiner.global(pa.0, pa.1), joiner.global(pb.0, pb.1)).value;
            heap.push(Reverse(Candidate { value, version, ..top }));
            continue;
        }
        let saved = (joiner.slots.clone(), joiner.home.clone());
        joiner.join(pa, pb, params.lambda2 / 2.0);
        let candidate = joiner.curves();
        let (after, _) = evaluate(cloud, &candidate, params);
        if after < energy {
            events.push(event(EventKind::Connect, iteration, energy, after));
            energy = after;
            current = candidate;
            field = ElementField::build(cloud, &current);
            version += 1;
        } else {
            joiner.slots = saved.0;
            joiner.home = saved.1;
        }
    }
    (current, events)
}

/// Removes non-singleton components that receive no data, while more than
/// one component remains.
pub fn drop_empty(
    cloud: &PointCloud,
    curves: &MultiCurve,
    assignment: &Assignment,
    params: &Params,
    iteration: usize,
) -> (MultiCurve, Vec<TopologyEvent>) {
    let offsets = curves.offsets();
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for (c, p) in curves.components().iter().enumerate() {
        let mass: f64 = assignment.mass[offsets[c]..offsets[c + 1]].iter().sum();
        if mass <= 0.0 && !p.is_singleton() {
            dropped.push(p.clone());
        } else {
            keep.push(p.clone());
        }
    }
    if dropped.is_empty() {
        return (curves.clone(), Vec::new());
    }
    if keep.is_empty() {
        keep.push(dropped.remove(0));
    }
    let mut events = Vec::new();
    let mut energy = evaluate(cloud, curves, params).0;
    for p in &dropped {
        let after = energy - params.lambda1 * p.length() - params.component_cost();
        events.push(event(EventKind::DropEmpty, iteration, energy, after));
        energy = after;
    }
    (MultiCurve::new(keep).expect("non-empty"), events)
}

/// Spawns, splits, removes and grows singletons, in that order.
pub fn singleton_pass(
    cloud: &PointCloud,
    curves: &MultiCurve,
    assignment: &Assignment,
    params: &Params,
    iteration: usize,
) -> (MultiCurve, Vec<TopologyEvent>) {
    let mut events = Vec::new();
    let mut curves = curves.clone();
    let (energy, current) = evaluate(cloud, &curves, params);
    let mut state = State {
        energy,
        d2: current.dist2,
    };
    spawn(cloud, &mut curves, assignment, params, iteration, &mut state, &mut events);
    split(cloud, &mut curves, params, iteration, &mut state, &mut events);
    remove(cloud, &mut curves, params, iteration, &mut state, &mut events);
    grow(cloud, &mut curves, params, iteration, &mut state, &mut events);
    (curves, events)
}

/// Energy of the current curves and the squared distance from every point
/// to its nearest vertex.
struct State {
    energy: f64,
    d2: Vec<f64>,
}

impl State {
    /// Exact energy of `candidate`, whose vertex set is the current one with
    /// `removed` taken out and `added` put in. Only points whose nearest
    /// vertex may have been removed are rescanned.
    fn energy_of(
        &self,
        cloud: &PointCloud,
        candidate: &MultiCurve,
        removed: &[Vec<f64>],
        added: &[Vec<f64>],
        params: &Params,
    ) -> (f64, Vec<f64>) {
        let dim = cloud.dim();
        let vertices = candidate.vertex_coords();
        let d2 = par::map_indices(cloud.len(), |i| {
            let x = cloud.point(i);
            let old = self.d2[i];
            if removed.iter().any(|r| geom::dist2(x, r) == old) {
                projection::nearest_vertex(x, &vertices, dim).1
            } else {
                added.iter().fold(old, |m, a| m.min(geom::dist2(x, a)))
            }
        });
        let mut fid = 0.0;
        for (i, d) in d2.iter().enumerate() {
            fid += cloud.weight(i) * d;
        }
        let total = fid
            + params.lambda1 * candidate.total_length()
            + params.component_cost() * (candidate.component_count() as f64 - 1.0);
        (total, d2)
    }
}

/// Applies `candidate` if it strictly lowers the discrete energy.
#[allow(clippy::too_many_arguments)]
fn try_apply(
    cloud: &PointCloud,
    curves: &mut MultiCurve,
    candidate: MultiCurve,
    removed: &[Vec<f64>],
    added: &[Vec<f64>],
    params: &Params,
    kind: EventKind,
    iteration: usize,
    state: &mut State,
    events: &mut Vec<TopologyEvent>,
) -> bool {
    let (after, d2) = state.energy_of(cloud, &candidate, removed, added, params);
    if after < state.energy {
        events.push(event(kind, iteration, state.energy, after));
        state.energy = after;
        state.d2 = d2;
        *curves = candidate;
        true
    } else {
        false
    }
}

/// Spawn test for a curve vertex: detaching it to its centroid and
/// bridging its neighbours pays for a new component.
pub fn spawn_criterion(
    params: &Params,
    prev: &[f64],
    y: &[f64],
    next: &[f64],
    mass: f64,
    centroid: &[f64],
) -> bool {
    let bridge = geom::dist(y, prev) + geom::dist(y, next) - geom::dist(prev, next);
    params.component_cost() < mass * geom::dist2(centroid, y) + params.lambda1 * bridge
}

fn spawn(
    cloud: &PointCloud,
    curves: &mut MultiCurve,
    assignment: &Assignment,
    params: &Params,
    iteration: usize,
    state: &mut State,
    events: &mut Vec<TopologyEvent>,
) {
    for g in (0..assignment.vertex_count()).rev() {
        let Some(centroid) = assignment.centroid_of(g) else { continue };
        let (c, l) = curves.locate(g).expect("index below every shifted vertex");
        let poly = &curves.components()[c];
        if poly.is_singleton() {
            continue;
        }
        let m = poly.len();
        let prev = poly.vertex(l.saturating_sub(1));
        let next = poly.vertex((l + 1).min(m - 1));
        if !spawn_criterion(params, prev, poly.vertex(l), next, assignment.mass[g], centroid) {
            continue;
        }
        let removed = [poly.vertex(l).to_vec()];
        let added = [centroid.to_vec()];
        let mut comps = curves.components().to_vec();
        comps[c].remove(l);
        comps.push(Polyline::singleton(centroid));
        let candidate = MultiCurve::new(comps).expect("non-empty");
        try_apply(cloud, curves, candidate, &removed, &added, params, EventKind::Spawn, iteration, state, events);
    }
}

fn split(
    cloud: &PointCloud,
    curves: &mut MultiCurve,
    params: &Params,
    iteration: usize,
    state: &mut State,
    events: &mut Vec<TopologyEvent>,
) {
    let dim = cloud.dim();
    let (_, assignment) = evaluate(cloud, curves, params);
    let offsets = curves.offsets();
    let count = curves.component_count();
    for c in 0..count {
        if !curves.components()[c].is_singleton() {
            continue;
        }
        let g = offsets[c];
        let y = curves.components()[c].vertex(0).to_vec();
        let points = assignment.points_of(g);
        if points.len() < 2 {
            continue;
        }
        let fid: f64 = points.iter().map(|&i| cloud.weight(i) * geom::dist2(cloud.point(i), &y)).sum();
        if fid <= params.component_cost() {
            continue;
        }
        let far = points
            .iter()
            .copied()
            .max_by(|&a, &b| {
                geom::dist2(cloud.point(a), &y)
                    .total_cmp(&geom::dist2(cloud.point(b), &y))
                    .then(b.cmp(&a))
            })
            .expect("at least two points");
        let mut centers = Vec::with_capacity(2 * dim);
        for sign in [1.0, -1.0] {
            centers.extend(y.iter().zip(cloud.point(far)).map(|(yk, xk)| yk + sign * 0.5 * (xk - yk)));
        }
        kmeans::iterate(cloud, &points, &mut centers, SPLIT_LLOYD_ITERS);
        let mut comps = curves.components().to_vec();
        comps[c] = Polyline::singleton(&centers[..dim]);
        comps.push(Polyline::singleton(&centers[dim..]));
        let candidate = MultiCurve::new(comps).expect("non-empty");
        let added = [centers[..dim].to_vec(), centers[dim..].to_vec()];
        try_apply(cloud, curves, candidate, &[y], &added, params, EventKind::Split, iteration, state, events);
    }
}

/// `sum_{j in I_i} w_j (d(x_j, y_{-i})^2 - |x_j - y_i|^2)`: the fidelity
/// increase caused by deleting vertex `g`.
fn removal_cost(cloud: &PointCloud, curves: &MultiCurve, assignment: &Assignment, g: usize) -> f64 {
    let dim = cloud.dim();
    let vertices = curves.vertex_coords();
    let mut cost = 0.0;
    for i in assignment.points_of(g) {
        let x = cloud.point(i);
        let mut other = f64::INFINITY;
        for (j, v) in vertices.chunks_exact(dim).enumerate() {
            if j != g {
                other = other.min(geom::dist2(x, v));
            }
        }
        cost += cloud.weight(i) * (other - assignment.dist2[i]);
    }
    cost
}

fn remove(
    cloud: &PointCloud,
    curves: &mut MultiCurve,
    params: &Params,
    iteration: usize,
    state: &mut State,
    events: &mut Vec<TopologyEvent>,
) {
    let (_, mut assignment) = evaluate(cloud, curves, params);
    for c in (0..curves.component_count()).rev() {
        if curves.component_count() < 2 || !curves.components()[c].is_singleton() {
            continue;
        }
        let g = curves.offsets()[c];
        if params.component_cost() <= removal_cost(cloud, curves, &assignment, g) {
            continue;
        }
        let mut comps = curves.components().to_vec();
        comps.remove(c);
        let candidate = MultiCurve::new(comps).expect("another component remains");
        let removed = [curves.components()[c].vertex(0).to_vec()];
        if try_apply(cloud, curves, candidate, &removed, &[], params, EventKind::Remove, iteration, state, events) {
            assignment = projection::assign(cloud, curves);
        }
    }
}

/// Grow test for a singleton with assigned mass `mass` and weighted sum of
/// projection distances `spread`.
pub fn grow_criterion(params: &Params, mass: f64, spread: f64) -> bool {
    mass > 0.0 && spread > params.lambda1 / mass
}

fn grow(
    cloud: &PointCloud,
    curves: &mut MultiCurve,
    params: &Params,
    iteration: usize,
    state: &mut State,
    events: &mut Vec<TopologyEvent>,
) {
    let dim = cloud.dim();
    let (_, assignment) = evaluate(cloud, curves, params);
    let offsets = curves.offsets();
    for c in (0..curves.component_count()).rev() {
        if !curves.components()[c].is_singleton() {
            continue;
        }
        let g = offsets[c];
        let y = curves.components()[c].vertex(0).to_vec();
        let points = assignment.points_of(g);
        let spread: f64 = points.iter().map(|&i| cloud.weight(i) * geom::dist(cloud.point(i), &y)).sum();
        if points.len() < 2 || !grow_criterion(params, assignment.mass[g], spread) {
            continue;
        }
        let refs: Vec<&[f64]> = points.iter().map(|&i| cloud.point(i)).collect();
        let weights: Vec<f64> = points.iter().map(|&i| cloud.weight(i)).collect();
        let dir = geom::principal_direction(dim, &refs, &weights);
        let mut halves = [(0.0, vec![0.0; dim]), (0.0, vec![0.0; dim])];
        for (x, &w) in refs.iter().zip(&weights) {
            let t: f64 = x.iter().zip(&y).zip(&dir).map(|((a, b), d)| (a - b) * d).sum();
            let h = &mut halves[usize::from(t <= 0.0)];
            h.0 += w;
            for k in 0..dim {
                h.1[k] += w * x[k];
            }
        }
        let centers: Vec<Vec<f64>> = halves
            .iter()
            .filter(|h| h.0 > 0.0)
            .map(|h| h.1.iter().map(|s| s / h.0).collect())
            .collect();
        let Some(target) = centers
            .iter()
            .max_by(|a, b| geom::dist2(a, &y).total_cmp(&geom::dist2(b, &y)))
        else {
            continue;
        };
        let mut poly = Polyline::singleton(&y);
        poly.push(target);
        let mut comps = curves.components().to_vec();
        comps[c] = poly;
        let added = [target.clone()];
        let candidate = MultiCurve::new(comps).expect("non-empty");
        try_apply(cloud, curves, candidate, &[], &added, params, EventKind::Grow, iteration, state, events);
    }
}
