//! Singleton initialization and the main fitting loop.

use std::collections::BTreeMap;

use crate::admm::{self, AdmmState, Subproblem};
use crate::error::{MppcError, Result};
use crate::geom;
use crate::kmeans;
use crate::model::{
    validate, validate_curves, EnergyBreakdown, FitReport, MultiCurve, Params, PointCloud, Polyline, TopologyEvent,
};
use crate::projection::{self, Assignment};
use crate::resolution;
use crate::topology::{self, evaluate};

/// Lloyd steps used for each candidate `k` of the initialization search.
pub const INIT_LLOYD_ITERS: usize = 200;

/// Seedings tried for each candidate `k`; the lowest-energy one is kept.
pub const INIT_RESTARTS: u64 = 4;

const REFINEMENT_SLACK: f64 = 1e-9;

fn singleton_energy(cloud: &PointCloud, params: &Params, k: usize) -> Result<(f64, Vec<f64>)> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in 0..INIT_RESTARTS {
        let seed = params.seed.wrapping_add(r.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let centers = kmeans::lloyd(cloud, k, seed, INIT_LLOYD_ITERS)?;
        let curves = MultiCurve::singletons(cloud.dim(), &centers)?;
        let e = evaluate(cloud, &curves, params).0;
        if best.as_ref().is_none_or(|b| e < b.0) {
            best = Some((e, centers));
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Energy of the k-means centers `E(k)` for the values of `k` visited by the
/// initialization search, in visiting order.
#[derive(Debug, Clone, Default)]
pub struct InitTrace {
    pub visited: Vec<(usize, f64)>,
    pub chosen: usize,
}

/// Singleton initialization: doubles `k` while `E(k)` decreases, halves the
/// bracket as in the classical search, then moves `k` by one while that
/// lowers the energy further.
pub fn init_singletons(cloud: &PointCloud, params: &Params) -> Result<MultiCurve> {
    init_singletons_traced(cloud, params).map(|(c, _)| c)
}

pub fn init_singletons_traced(cloud: &PointCloud, params: &Params) -> Result<(MultiCurve, InitTrace)> {
    validate(cloud, params)?;
    let n = cloud.len();
    let mut cache: BTreeMap<usize, (f64, Vec<f64>)> = BTreeMap::new();
    let mut trace = InitTrace::default();
    let mut energy = |k: usize, trace: &mut InitTrace| -> Result<f64> {
        if let Some(e) = cache.get(&k) {
            return Ok(e.0);
        }
        let r = singleton_energy(cloud, params, k)?;
        let e = r.0;
        trace.visited.push((k, e));
        cache.insert(k, r);
        Ok(e)
    };

    let mut k = 1;
    let mut prev = energy(1, &mut trace)?;
    loop {
        if k >= n {
            break;
        }
        let next = (2 * k).min(n);
        let e = energy(next, &mut trace)?;
        k = next;
        if e >= prev {
            break;
        }
        prev = e;
    }
    // `k` is the first value whose energy did not improve (or n).
    let mut best = if energy(k, &mut trace)? < prev { k } else { (k / 2).max(1) };
    let mut step = best;
    if best > 1 && k > best {
        loop {
            step /= 2;
            if step == 0 {
                break;
            }
            let cand = best + step;
            if cand <= n && energy(cand, &mut trace)? < energy(best, &mut trace)? {
                best = cand;
            }
            if step == 1 {
                break;
            }
        }
    }
    loop {
        let here = energy(best, &mut trace)?;
        if best + 1 <= n && energy(best + 1, &mut trace)? < here {
            best += 1;
        } else if best > 1 && energy(best - 1, &mut trace)? < here {
            best -= 1;
        } else {
            break;
        }
    }
    trace.chosen = best;
    let centers = &cache[&best].1;
    Ok((MultiCurve::singletons(cloud.dim(), centers)?, trace))
}

/// Straight polyline with `m` vertices spanning the cloud along its
/// principal direction.
pub fn principal_line(cloud: &PointCloud, m: usize) -> Polyline {
    let dim = cloud.dim();
    let refs: Vec<&[f64]> = (0..cloud.len()).map(|i| cloud.point(i)).collect();
    let dir = geom::principal_direction(dim, &refs, cloud.weights());
    let total = cloud.total_mass();
    let mut mean = vec![0.0; dim];
    for (x, &w) in refs.iter().zip(cloud.weights()) {
        for k in 0..dim {
            mean[k] += w * x[k] / total;
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in &refs {
        let t: f64 = x.iter().zip(&mean).zip(&dir).map(|((a, b), d)| (a - b) * d).sum();
        lo = lo.min(t);
        hi = hi.max(t);
    }
    let a: Vec<f64> = (0..dim).map(|k| mean[k] + lo * dir[k]).collect();
    let b: Vec<f64> = (0..dim).map(|k| mean[k] + hi * dir[k]).collect();
    Polyline::segment(&a, &b, m)
}

fn breakdown(cloud: &PointCloud, curves: &MultiCurve, params: &Params) -> EnergyBreakdown {
    let a = projection::assign(cloud, curves);
    EnergyBreakdown::new(
        a.fidelity(cloud),
        params.lambda1 * curves.total_length(),
        params.component_cost() * (curves.component_count() as f64 - 1.0),
    )
}

/// Warm ADMM state per component; `None` for singletons.
type States = Vec<Option<AdmmState>>;

fn fresh_states(curves: &MultiCurve) -> States {
    curves
        .components()
        .iter()
        .map(|p| (!p.is_singleton()).then(|| AdmmState::from_polyline(p, 1.0)))
        .collect()
}

/// One relaxation of every non-singleton component. A component whose
/// subproblem objective would rise keeps its input position and a reset
/// state after the retries.
fn relax_all(
    curves: &MultiCurve,
    assignment: &Assignment,
    params: &Params,
    states: &mut States,
    cycles: usize,
) -> Result<MultiCurve> {
    let offsets = curves.offsets();
    let dim = curves.dim();
    let results = crate::par::map_indices(curves.component_count(), |c| -> Result<(Polyline, Option<AdmmState>)> {
        let p = &curves.components()[c];
        let Some(state) = states[c].clone() else {
            return Ok((p.clone(), None));
        };
        let mass = &assignment.mass[offsets[c]..offsets[c + 1]];
        let centroid = &assignment.centroid[offsets[c] * dim..offsets[c + 1] * dim];
        let problem = Subproblem {
            mass,
            centroid,
            dim,
            lambda1: params.lambda1,
            fix_endpoints: params.fix_endpoints,
        };
        let rho = params.rho.unwrap_or_else(|| admm::default_rho(mass));
        let mut start = state;
        if start.rho != rho {
            let scale = start.rho / rho;
            start.b.iter_mut().for_each(|b| *b *= scale);
            start.rho = rho;
        }
        let before = problem.objective(p.coords());
        let slack = 1e-12 * before.abs().max(1.0);
        let mut n = cycles;
        loop {
            let mut s = start.clone();
            problem.run(&mut s, n)?;
            if problem.objective(&s.y) <= before + slack {
                return Ok((s.to_polyline(), Some(s)));
            }
            if n >= params.max_inner_admm_iters.max(cycles) {
                break;
            }
            n = (2 * n).min(params.max_inner_admm_iters.max(cycles));
        }
        Ok((p.clone(), Some(AdmmState::new(p.coords().to_vec(), dim, rho))))
    });
    let mut comps = Vec::with_capacity(results.len());
    for (c, r) in results.into_iter().enumerate() {
        let (p, s) = r?;
        comps.push(p);
        states[c] = s;
    }
    MultiCurve::new(comps)
}

fn move_to_centroids(curves: &mut MultiCurve, assignment: &Assignment, params: &Params) {
    let offsets = curves.offsets();
    for (c, p) in curves.components_mut().iter_mut().enumerate() {
        if !params.centroid_all_vertices && !p.is_singleton() {
            continue;
        }
        let pinned = params.fix_endpoints && !p.is_singleton();
        for j in 0..p.len() {
            if pinned && (j == 0 || j + 1 == p.len()) {
                continue;
            }
            if let Some(x) = assignment.centroid_of(offsets[c] + j) {
                p.vertex_mut(j).copy_from_slice(x);
            }
        }
    }
}

enum Stage {
    Cut,
    Singletons,
    Connect,
    Resolve,
    None,
}

fn stage(iter: usize, params: &Params) -> Stage {
    let top = params.top_period;
    if (iter + 4) % top == 0 {
        Stage::Cut
    } else if (iter + 3) % top == 0 {
        Stage::Singletons
    } else if (iter + 2) % top == 0 {
        Stage::Connect
    } else if (iter + 1) % params.reparam_period == 0 {
        Stage::Resolve
    } else {
        Stage::None
    }
}

/// Runs the alternating projection / relaxation / topology loop from
/// `initial`, or from the singleton initialization when absent (from a
/// principal line when topology moves are disabled).
pub fn fit(cloud: &PointCloud, params: &Params, initial: Option<MultiCurve>) -> Result<(MultiCurve, FitReport)> {
    validate(cloud, params)?;
    if params.p != 2.0 {
        return Err(MppcError::UnsupportedExponent(params.p));
    }
    let clock = Clock::start();
    let mut curves = match initial {
        Some(c) => {
            validate_curves(cloud, &c)?;
            c
        }
        None if params.ppc_only => MultiCurve::single(principal_line(cloud, 8)),
        None => init_singletons(cloud, params)?,
    };
    let mut states = fresh_states(&curves);
    let mut cycles = params.inner_admm_iters.max(1);
    let mut history: Vec<f64> = Vec::new();
    let mut events: Vec<TopologyEvent> = Vec::new();
    let mut refinement_iterations = Vec::new();
    let mut pending: Option<(MultiCurve, f64)> = None;
    let mut converged = false;
    let mut last_event_iter = 0;
    let mut energy = evaluate(cloud, &curves, params).0;
    let mut iter = 0;

    while iter < params.max_outer_iters {
        iter += 1;
        let start_energy = energy;
        let mut structural = false;

        let mut assignment = projection::assign(cloud, &curves);
        if curves.component_count() > 1 {
            let (next, ev) = topology::drop_empty(cloud, &curves, &assignment, params, iter);
            if !ev.is_empty() {
                curves = next;
                events.extend(ev);
                structural = true;
                assignment = projection::assign(cloud, &curves);
            }
        }
        if structural {
            states = fresh_states(&curves);
        }
        curves = relax_all(&curves, &assignment, params, &mut states, cycles)?;
        let assignment = projection::assign(cloud, &curves);
        move_to_centroids(&mut curves, &assignment, params);

        let mut resolved = false;
        let before_stage = evaluate(cloud, &curves, params);
        let mut new_events = Vec::new();
        match stage(iter, params) {
            Stage::Cut if !params.ppc_only => {
                let (c, ev) = topology::cut_pass(cloud, &curves, params, iter);
                curves = c;
                new_events = ev;
            }
            Stage::Singletons if !params.ppc_only => {
                let (c, ev) = topology::singleton_pass(cloud, &curves, &before_stage.1, params, iter);
                curves = c;
                new_events = ev;
            }
            Stage::Connect if !params.ppc_only => {
                let (c, ev) = topology::connect_pass(cloud, &curves, params, iter);
                curves = c;
                new_events = ev;
            }
            Stage::Resolve => {
                let next = resolution::resolve(&curves, &before_stage.1, params);
                if next != curves {
                    pending = Some((curves.clone(), before_stage.0));
                    curves = next;
                    resolved = true;
                    refinement_iterations.push(iter);
                }
            }
            _ => {}
        }
        if !new_events.is_empty() {
            last_event_iter = iter;
            structural = true;
        }
        events.extend(new_events);
        if structural || resolved {
            states = fresh_states(&curves);
        }

        energy = evaluate(cloud, &curves, params).0;
        if !resolved {
            if let Some((snapshot, e0)) = pending.take() {
                if energy > e0 + REFINEMENT_SLACK {
                    curves = snapshot;
                    states = fresh_states(&curves);
                    energy = evaluate(cloud, &curves, params).0;
                }
            }
        }
        history.push(energy);

        let decrease = (start_energy - energy) / start_energy.abs().max(f64::MIN_POSITIVE);
        if !resolved && decrease < 1e-4 && cycles < params.max_inner_admm_iters {
            cycles = (cycles * 2).min(params.max_inner_admm_iters);
        }

        let window = params.top_period;
        if iter > window && iter - last_event_iter >= window && pending.is_none() {
            let old = history[iter - 1 - window];
            let change = (old - energy).abs() / energy.abs().max(f64::MIN_POSITIVE);
            if change < params.energy_rtol || energy == 0.0 {
                converged = true;
                break;
            }
        }
    }

    let report = FitReport {
        energy: breakdown(cloud, &curves, params),
        iterations: iter,
        history,
        refinement_iterations,
        events,
        converged,
        wall_time_s: clock.elapsed(),
    };
    Ok((curves, report))
}

struct Clock {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Clock {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}
