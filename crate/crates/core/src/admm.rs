//! ADMM for the fixed-projection subproblem of one polyline:
//!
//! ```text
//! minimize  sum_j wbar_j |y_j - xbar_j|^2 + lambda1 * sum_j |y_{j+1} - y_j|
//! ```
//!
//! split as `z = D y` with `D` the forward difference operator. Each cycle
//! solves a tridiagonal system for `y`, block-soft-thresholds `D y + b`
//! into `z`, and updates the scaled dual `b`.

use crate::error::{MppcError, Result};
use crate::model::Polyline;

/// Iterate of the split problem for a polyline with `m` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    dim: usize,
    /// `m x d` vertex positions.
    pub y: Vec<f64>,
    /// `(m - 1) x d` auxiliary differences.
    pub z: Vec<f64>,
    /// `(m - 1) x d` scaled duals.
    pub b: Vec<f64>,
    pub rho: f64,
}

impl AdmmState {
    /// Warm state at `y` with `z = D y` and zero duals.
    pub fn new(y: Vec<f64>, dim: usize, rho: f64) -> Self {
        let z = difference(&y, dim);
        let b = vec![0.0; z.len()];
        Self { dim, y, z, b, rho }
    }

    pub fn from_polyline(p: &Polyline, rho: f64) -> Self {
        Self::new(p.coords().to_vec(), p.dim(), rho)
    }

    pub fn vertex_count(&self) -> usize {
        self.y.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest row norm of `D y - z`.
    pub fn constraint_residual(&self) -> f64 {
        let dy = difference(&self.y, self.dim);
        dy.chunks(self.dim)
            .zip(self.z.chunks(self.dim))
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn to_polyline(&self) -> Polyline {
        Polyline::new(self.dim, self.y.clone()).expect("state holds at least one vertex")
    }
}

/// Row-wise forward differences `y_{j+1} - y_j`.
pub fn difference(y: &[f64], dim: usize) -> Vec<f64> {
    let m = y.len() / dim;
    let mut out = Vec::with_capacity(m.saturating_sub(1) * dim);
    for j in 0..m.saturating_sub(1) {
        for k in 0..dim {
            out.push(y[(j + 1) * dim + k] - y[j * dim + k]);
        }
    }
    out
}

/// `D^T v` for `v` with `m - 1` rows.
fn difference_transpose(v: &[f64], m: usize, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * dim];
    for i in 0..m.saturating_sub(1) {
        for k in 0..dim {
            out[i * dim + k] -= v[i * dim + k];
            out[(i + 1) * dim + k] += v[i * dim + k];
        }
    }
    out
}

/// Default penalty: twice the projected mass per vertex.
pub fn default_rho(mass: &[f64]) -> f64 {
    let total: f64 = mass.iter().sum();
    (2.0 * total / mass.len().max(1) as f64).max(1e-12)
}

/// LU factors of the tridiagonal matrix `2 W + rho D^T D` (with identity
/// rows for pinned endpoints), reused across right-hand sides.
struct Tridiagonal {
    sub: Vec<f64>,
    /// Modified super-diagonal of the forward sweep.
    sup: Vec<f64>,
    /// Pivots of the forward sweep.
    piv: Vec<f64>,
}

impl Tridiagonal {
    fn factor(mass: &[f64], rho: f64, pinned: bool) -> Result<Self> {
        let m = mass.len();
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        for j in 0..m {
            let degree = if m == 1 {
                0.0
            } else if j == 0 || j == m - 1 {
                1.0
            } else {
                2.0
            };
            diag[j] = 2.0 * mass[j] + rho * degree;
            if j > 0 {
                sub[j] = -rho;
            }
            if j + 1 < m {
                sup[j] = -rho;
            }
        }
        if pinned {
            for j in [0, m - 1] {
                diag[j] = 1.0;
                sub[j] = 0.0;
                sup[j] = 0.0;
            }
        } else if mass.iter().all(|&w| w <= 0.0) {
            return Err(MppcError::SingularSystem);
        }
        let scale = diag.iter().fold(0.0f64, |a, &d| a.max(d.abs())).max(f64::MIN_POSITIVE);
        let mut piv = vec![0.0; m];
        let mut sup_mod = vec![0.0; m];
        for j in 0..m {
            let p = if j == 0 {
                diag[0]
            } else {
                diag[j] - sub[j] * sup_mod[j - 1]
            };
            if p.abs() <= 1e-14 * scale {
                return Err(MppcError::SingularSystem);
            }
            piv[j] = p;
            sup_mod[j] = sup[j] / p;
        }
        Ok(Self {
            sub,
            sup: sup_mod,
            piv,
        })
    }

    /// Solves in place for one column stored with stride `dim` at offset `k`.
    fn solve_strided(&self, rhs: &mut [f64], dim: usize, k: usize) {
        let m = self.piv.len();
        rhs[k] /= self.piv[0];
        for j in 1..m {
            let prev = rhs[(j - 1) * dim + k];
            rhs[j * dim + k] = (rhs[j * dim + k] - self.sub[j] * prev) / self.piv[j];
        }
        for j in (0..m.saturating_sub(1)).rev() {
            let next = rhs[(j + 1) * dim + k];
            rhs[j * dim + k] -= self.sup[j] * next;
        }
    }
}

/// Solves `(2 W + rho D^T D) y = 2 W xbar + rho D^T (z - b)` as `dim`
/// independent tridiagonal systems. With `pinned = Some((first, last))`
/// the endpoint rows are replaced by identity rows holding those values.
pub fn y_update(
    mass: &[f64],
    centroid: &[f64],
    z: &[f64],
    b: &[f64],
    rho: f64,
    pinned: Option<(&[f64], &[f64])>,
) -> Result<Vec<f64>> {
    let m = mass.len();
    let dim = centroid.len() / m.max(1);
    let lu = Tridiagonal::factor(mass, rho, pinned.is_some() && m >= 2)?;
    let mut rhs = rhs_for(mass, centroid, z, b, rho, dim);
    apply_pins(&mut rhs, pinned, m, dim);
    for k in 0..dim {
        lu.solve_strided(&mut rhs, dim, k);
    }
    Ok(rhs)
}

fn rhs_for(mass: &[f64], centroid: &[f64], z: &[f64], b: &[f64], rho: f64, dim: usize) -> Vec<f64> {
    let m = mass.len();
    let diff: Vec<f64> = z.iter().zip(b).map(|(zi, bi)| zi - bi).collect();
    let mut rhs = difference_transpose(&diff, m, dim);
    for j in 0..m {
        for k in 0..dim {
            rhs[j * dim + k] = 2.0 * mass[j] * centroid[j * dim + k] + rho * rhs[j * dim + k];
        }
    }
    rhs
}

fn apply_pins(rhs: &mut [f64], pinned: Option<(&[f64], &[f64])>, m: usize, dim: usize) {
    if let Some((first, last)) = pinned {
        if m >= 2 {
            rhs[..dim].copy_from_slice(first);
            rhs[(m - 1) * dim..].copy_from_slice(last);
        }
    }
}

/// Block soft thresholding: each row `v` becomes `v (1 - kappa / |v|)` when
/// `|v| > kappa`, else zero.
pub fn z_update(v: &[f64], kappa: f64, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (row, dst) in v.chunks(dim).zip(out.chunks_mut(dim)) {
        let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > kappa {
            let s = 1.0 - kappa / n;
            for (d, x) in dst.iter_mut().zip(row) {
                *d = s * x;
            }
        }
    }
    out
}

/// Fixed-projection data for one polyline.
#[derive(Debug, Clone, Copy)]
pub struct Subproblem<'a> {
    pub mass: &'a [f64],
    pub centroid: &'a [f64],
    pub dim: usize,
    pub lambda1: f64,
    pub fix_endpoints: bool,
}

impl<'a> Subproblem<'a> {
    /// `sum_j wbar_j |y_j - xbar_j|^2 + lambda1 * sum_j |y_{j+1} - y_j|`.
    pub fn objective(&self, y: &[f64]) -> f64 {
        let dim = self.dim;
        let mut fid = 0.0;
        for (j, &w) in self.mass.iter().enumerate() {
            if w > 0.0 {
                let mut d2 = 0.0;
                for k in 0..dim {
                    let e = y[j * dim + k] - self.centroid[j * dim + k];
                    d2 += e * e;
                }
                fid += w * d2;
            }
        }
        let tv: f64 = difference(y, dim)
            .chunks(dim)
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum();
        fid + self.lambda1 * tv
    }

    /// Runs `cycles` ADMM cycles on `state`. Endpoints, when fixed, are the
    /// ones stored in `state.y`.
    pub fn run(&self, state: &mut AdmmState, cycles: usize) -> Result<()> {
        let m = self.mass.len();
        debug_assert_eq!(state.vertex_count(), m);
        if m < 2 || cycles == 0 {
            return Ok(());
        }
        let dim = self.dim;
        let pinned = self.fix_endpoints;
        let first = state.y[..dim].to_vec();
        let last = state.y[(m - 1) * dim..].to_vec();
        let lu = Tridiagonal::factor(self.mass, state.rho, pinned)?;
        let kappa = self.lambda1 / state.rho;
        for _ in 0..cycles {
            let mut y = rhs_for(self.mass, self.centroid, &state.z, &state.b, state.rho, dim);
            if pinned {
                apply_pins(&mut y, Some((&first, &last)), m, dim);
            }
            for k in 0..dim {
                lu.solve_strided(&mut y, dim, k);
            }
            let dy = difference(&y, dim);
            let v: Vec<f64> = dy.iter().zip(&state.b).map(|(a, b)| a + b).collect();
            let z = z_update(&v, kappa, dim);
            for i in 0..state.b.len() {
                state.b[i] += dy[i] - z[i];
            }
            state.y = y;
            state.z = z;
        }
        Ok(())
    }

    /// Runs cycles until the constraint residual and the change in `z`
    /// (scaled by rho) both drop below `tol`, or `max_cycles` is reached.
    /// Returns the number of cycles run.
    pub fn solve(&self, state: &mut AdmmState, tol: f64, max_cycles: usize) -> Result<usize> {
        for cycle in 1..=max_cycles {
            let z_prev = state.z.clone();
            self.run(state, 1)?;
            let dual = z_prev
                .iter()
                .zip(&state.z)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                * state.rho;
            if state.constraint_residual() < tol && dual < tol {
                return Ok(cycle);
            }
        }
        Ok(max_cycles)
    }
}

/// Runs `iters` ADMM cycles from a fresh state at `polyline` and returns the
/// new vertex positions. Polylines with fewer than two vertices are
/// returned unchanged.
pub fn relax(
    mass: &[f64],
    centroid: &[f64],
    polyline: &Polyline,
    lambda1: f64,
    rho: Option<f64>,
    fix_endpoints: bool,
    iters: usize,
) -> Result<Polyline> {
    if polyline.len() < 2 {
        return Ok(polyline.clone());
    }
    let rho = rho.unwrap_or_else(|| default_rho(mass));
    let mut state = AdmmState::from_polyline(polyline, rho);
    let problem = Subproblem {
        mass,
        centroid,
        dim: polyline.dim(),
        lambda1,
        fix_endpoints,
    };
    problem.run(&mut state, iters)?;
    Ok(state.to_polyline())
}
