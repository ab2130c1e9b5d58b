//! Synthetic point clouds. Every generator returns unit total mass and is
//! deterministic for a fixed seed.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{MppcError, Result};
use crate::model::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Segment,
    Rectangle,
    Spiral,
    Oscillation,
    ParallelLines,
    GridClutter,
}

impl Generator {
    pub const ALL: [Generator; 6] = [
        Generator::Segment,
        Generator::Rectangle,
        Generator::Spiral,
        Generator::Oscillation,
        Generator::ParallelLines,
        Generator::GridClutter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Segment => "segment",
            Generator::Rectangle => "rectangle",
            Generator::Spiral => "spiral",
            Generator::Oscillation => "oscillation",
            Generator::ParallelLines => "parallel_lines",
            Generator::GridClutter => "grid_clutter",
        }
    }

    /// Accepted option names with their defaults.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            Generator::Segment => &[("n", 1000.0), ("length", 16.0)],
            Generator::Rectangle => &[("nx", 361.0), ("ny", 81.0), ("width", 4.0), ("height", 1.0)],
            Generator::Spiral => &[("n", 2000.0), ("t0", 3.0), ("t1", 14.0), ("noise", 1.5), ("scale", 1.0)],
            Generator::Oscillation => &[("n", 3000.0), ("x0", 0.001), ("x1", 25.790339917193062)],
            Generator::ParallelLines => &[("n", 400.0), ("height", 0.4), ("length", 2.0)],
            Generator::GridClutter => &[("per_line", 600.0), ("background", 2400.0), ("noise", 0.05)],
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = MppcError;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s || g.name().replace('_', "-") == s)
            .ok_or_else(|| MppcError::UnknownKind(s.to_owned()))
    }
}

struct Options {
    values: BTreeMap<&'static str, f64>,
}

impl Options {
    fn resolve(kind: Generator, given: &BTreeMap<String, f64>) -> Result<Self> {
        let mut values: BTreeMap<&'static str, f64> = kind.defaults().iter().copied().collect();
        for (key, &v) in given {
            let Some(slot) = values.iter_mut().find(|(k, _)| **k == key.as_str()).map(|(_, v)| v) else {
                return Err(MppcError::InvalidOption(format!("`{key}` is not an option of {}", kind.name())));
            };
            if !v.is_finite() {
                return Err(MppcError::InvalidOption(format!("`{key}` must be finite")));
            }
            *slot = v;
        }
        Ok(Self { values })
    }

    fn get(&self, key: &str) -> f64 {
        self.values[key]
    }

    fn count(&self, key: &str, min: usize) -> Result<usize> {
        let v = self.get(key);
        if v.fract() != 0.0 || v < min as f64 {
            return Err(MppcError::InvalidOption(format!("`{key}` must be an integer >= {min}")));
        }
        Ok(v as usize)
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v = self.get(key);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(MppcError::InvalidOption(format!("`{key}` must be positive")))
        }
    }

    fn nonnegative(&self, key: &str) -> Result<f64> {
        let v = self.get(key);
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(MppcError::InvalidOption(format!("`{key}` must be nonnegative")))
        }
    }
}

/// Builds the named dataset. Unlisted options keep their defaults.
pub fn generate(kind: &str, options: &BTreeMap<String, f64>, seed: u64) -> Result<PointCloud> {
    let kind: Generator = kind.parse()?;
    let o = Options::resolve(kind, options)?;
    match kind {
        Generator::Segment => segment(o.count("n", 1)?, o.positive("length")?),
        Generator::Rectangle => rectangle(o.count("nx", 1)?, o.count("ny", 1)?, o.positive("width")?, o.positive("height")?),
        Generator::Spiral => {
            let (t0, t1) = (o.positive("t0")?, o.positive("t1")?);
            if t1 <= t0 {
                return Err(MppcError::InvalidOption("`t1` must exceed `t0`".into()));
            }
            let n = o.count("n", 1)?;
            Ok(spiral(n, t0, t1, o.nonnegative("noise")?, o.positive("scale")?, seed)?.0)
        }
        Generator::Oscillation => {
            let (x0, x1) = (o.positive("x0")?, o.positive("x1")?);
            if x1 <= x0 {
                return Err(MppcError::InvalidOption("`x1` must exceed `x0`".into()));
            }
            oscillation(o.count("n", 2)?, x0, x1)
        }
        Generator::ParallelLines => parallel_lines(o.count("n", 2)?, o.nonnegative("height")?, o.positive("length")?),
        Generator::GridClutter => grid_clutter(o.count("per_line", 0)?, o.count("background", 0)?, o.nonnegative("noise")?, seed),
    }
}

/// `n` points at the cell midpoints of `[0, length] x {0}`.
pub fn segment(n: usize, length: f64) -> Result<PointCloud> {
    let coords = (0..n)
        .flat_map(|i| [length * (i as f64 + 0.5) / n as f64, 0.0])
        .collect();
    PointCloud::uniform(2, coords)
}

/// Uniform `nx` by `ny` grid covering `[0, width] x [0, height]`, edges included.
pub fn rectangle(nx: usize, ny: usize, width: f64, height: f64) -> Result<PointCloud> {
    let step = |k: usize, n: usize, extent: f64| if n > 1 { extent * k as f64 / (n - 1) as f64 } else { 0.5 * extent };
    let mut coords = Vec::with_capacity(2 * nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            coords.push(step(i, nx, width));
            coords.push(step(j, ny, height));
        }
    }
    PointCloud::uniform(2, coords)
}

fn spiral_arclength(t: f64) -> f64 {
    0.5 * (t * (1.0 + t * t).sqrt() + t.asinh())
}

/// Noisy samples of `scale * (t cos t, t sin t)`, drawn uniformly in arc
/// length over `[t0, t1]`, with `scale * noise * N(0, I)` added. Also
/// returns the parameter `t` of each point.
pub fn spiral(n: usize, t0: f64, t1: f64, noise: f64, scale: f64, seed: u64) -> Result<(PointCloud, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s0, s1) = (spiral_arclength(t0), spiral_arclength(t1));
    let mut coords = Vec::with_capacity(2 * n);
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        let s = s0 + (s1 - s0) * rng.random::<f64>();
        // Newton on the monotone arc length; ds/dt = sqrt(1 + t^2).
        let mut t = (2.0 * s).sqrt().clamp(t0, t1);
        for _ in 0..50 {
            let step = (spiral_arclength(t) - s) / (1.0 + t * t).sqrt();
            t = (t - step).clamp(t0, t1);
            if step.abs() < 1e-14 * t {
                break;
            }
        }
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        coords.push(scale * (t * t.cos() + noise * ex));
        coords.push(scale * (t * t.sin() + noise * ey));
        params.push(t);
    }
    Ok((PointCloud::uniform(2, coords)?, params))
}

/// `n` points equally spaced in arc length on the graph of
/// `(x / 5) sin(-4 pi ln x)` over `[x0, x1]`.
pub fn oscillation(n: usize, x0: f64, x1: f64) -> Result<PointCloud> {
    let f = |x: f64| (x / 5.0) * (-4.0 * PI * x.ln()).sin();
    // Fine polyline in log x, where the oscillation has constant frequency.
    const TABLE: usize = 200_000;
    let (l0, l1) = (x0.ln(), x1.ln());
    let xs: Vec<f64> = (0..=TABLE).map(|k| (l0 + (l1 - l0) * k as f64 / TABLE as f64).exp()).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut cumulative = vec![0.0; TABLE + 1];
    for k in 0..TABLE {
        cumulative[k + 1] = cumulative[k] + (xs[k + 1] - xs[k]).hypot(ys[k + 1] - ys[k]);
    }
    let total = cumulative[TABLE];
    let mut coords = Vec::with_capacity(2 * n);
    let mut k = 0;
    for i in 0..n {
        let s = total * i as f64 / (n - 1) as f64;
        while k + 1 < TABLE && cumulative[k + 1] < s {
            k += 1;
        }
        let span = cumulative[k + 1] - cumulative[k];
        let u = if span > 0.0 { ((s - cumulative[k]) / span).clamp(0.0, 1.0) } else { 0.0 };
        coords.push(xs[k] + u * (xs[k + 1] - xs[k]));
        coords.push(ys[k] + u * (ys[k + 1] - ys[k]));
    }
    PointCloud::uniform(2, coords)
}

/// Two horizontal segments of the given length centered on the origin at
/// heights `+height` and `-height`, `n / 2` equally spaced points each.
pub fn parallel_lines(n: usize, height: f64, length: f64) -> Result<PointCloud> {
    let per = n / 2;
    let mut coords = Vec::with_capacity(4 * per);
    for h in [height, -height] {
        for i in 0..per {
            coords.push(length * ((i as f64 + 0.5) / per as f64 - 0.5));
            coords.push(h);
        }
    }
    PointCloud::uniform(2, coords)
}

/// Four lines `x = 1`, `x = 2`, `y = 1`, `y = 2` in the plane `z = 0` over
/// `[0, 3]`, with isotropic Gaussian noise, plus uniform background clutter
/// in `[0, 3] x [0, 3] x [-0.75, 0.75]`.
pub fn grid_clutter(per_line: usize, background: usize, noise: f64, seed: u64) -> Result<PointCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(3 * (4 * per_line + background));
    for line in 0..4 {
        let fixed = if line % 2 == 0 { 1.0 } else { 2.0 };
        for _ in 0..per_line {
            let s = 3.0 * rng.random::<f64>();
            let (x, y) = if line < 2 { (fixed, s) } else { (s, fixed) };
            for c in [x, y, 0.0] {
                let e: f64 = rng.sample(StandardNormal);
                coords.push(c + noise * e);
            }
        }
    }
    for _ in 0..background {
        coords.push(3.0 * rng.random::<f64>());
        coords.push(3.0 * rng.random::<f64>());
        coords.push(1.5 * rng.random::<f64>() - 0.75);
    }
    PointCloud::uniform(3, coords)
}
