//! Closed-form length scales and thresholds, the exact analysis of uniform
//! data on a segment, and a brute-force verifier for it.

use serde::{Deserialize, Serialize};

use crate::error::{MppcError, Result};

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(MppcError::NonFinite(name));
    }
    if v <= 0.0 {
        return Err(MppcError::NonPositive(name));
    }
    Ok(v)
}

fn nonnegative(name: &'static str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(MppcError::NonFinite(name));
    }
    if v < 0.0 {
        return Err(MppcError::NonPositive(name));
    }
    Ok(v)
}

/// `sqrt(lambda1 / (2 alpha))`: transverse amplitude below which variation
/// is treated as noise.
pub fn smoothing_length(lambda1: f64, alpha: f64) -> Result<f64> {
    Ok((positive("lambda1", lambda1)? / (2.0 * positive("alpha", alpha)?)).sqrt())
}

/// Projection distance `h = (sqrt(1 + 2 lambda1 K^2 / alpha) - 1) / (2K)` at
/// curvature `K`, with the limit 0 at `K = 0`.
pub fn projection_distance(curvature: f64, lambda1: f64, alpha: f64) -> Result<f64> {
    let k = nonnegative("curvature", curvature)?;
    let l1 = positive("lambda1", lambda1)?;
    let a = positive("alpha", alpha)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    // sqrt(1 + u) - 1 = u / (sqrt(1 + u) + 1) avoids cancellation for small u.
    let u = 2.0 * l1 * k * k / a;
    Ok(u / ((1.0 + u).sqrt() + 1.0) / (2.0 * k))
}

/// `2 alpha H^2`: below this length weight a straight line with mean squared
/// transverse spread `H^2` is linearly unstable.
pub fn critical_lambda1(alpha: f64, spread: f64) -> Result<f64> {
    let a = positive("alpha", alpha)?;
    let h = nonnegative("H", spread)?;
    Ok(2.0 * a * h * h)
}

fn check_p(p: f64) -> Result<f64> {
    if !p.is_finite() || p < 1.0 {
        return Err(MppcError::UnsupportedExponent(p));
    }
    Ok(p)
}

/// `(2p / (p + 1))^p * lambda1 / lambda2^p`: linear density below which
/// uniform data on a long segment is represented by isolated points.
pub fn critical_density(lambda1: f64, lambda2: f64, p: f64) -> Result<f64> {
    let p = check_p(p)?;
    let l1 = positive("lambda1", lambda1)?;
    let l2 = positive("lambda2", lambda2)?;
    Ok((2.0 * p / (p + 1.0)).powf(p) * l1 / l2.powf(p))
}

/// `2 ((p + 1) lambda1 lambda2 / (2 p alpha))^(1 / (p + 1))`: spacing of the
/// points representing sub-critical uniform data.
pub fn typical_gap(lambda1: f64, lambda2: f64, alpha: f64, p: f64) -> Result<f64> {
    let p = check_p(p)?;
    let l1 = positive("lambda1", lambda1)?;
    let l2 = positive("lambda2", lambda2)?;
    let a = positive("alpha", alpha)?;
    Ok(2.0 * ((p + 1.0) * l1 * l2 / (2.0 * p * a)).powf(1.0 / (p + 1.0)))
}

/// Parameters resolving density `alpha_star` and transverse scale `h_star`:
/// `(2 alpha* H*^2, 4 sqrt(2) / 3 H*)`.
pub fn select_params(alpha_star: f64, h_star: f64) -> Result<(f64, f64)> {
    let a = positive("alpha_star", alpha_star)?;
    let h = positive("h_star", h_star)?;
    Ok((2.0 * a * h * h, 4.0 * 2f64.sqrt() / 3.0 * h))
}

/// `lambda1 = 9/16 alpha* lambda2^2`, the length weight that puts the
/// critical density at `alpha_star` for a chosen `lambda2`.
pub fn lambda1_for_density(alpha_star: f64, lambda2: f64) -> Result<f64> {
    let a = positive("alpha_star", alpha_star)?;
    let l2 = positive("lambda2", lambda2)?;
    Ok(9.0 / 16.0 * a * l2 * l2)
}

/// A union of closed intervals inside `[0, length]`, in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub length: f64,
    pub intervals: Vec<(f64, f64)>,
}

impl SegmentConfig {
    pub fn new(length: f64, intervals: Vec<(f64, f64)>) -> Result<Self> {
        positive("L", length)?;
        if intervals.is_empty() {
            return Err(MppcError::InvalidOption("a segment configuration needs an interval".into()));
        }
        let mut prev = 0.0;
        for &(a, b) in &intervals {
            if !(a >= prev && b >= a && b <= length) {
                return Err(MppcError::InvalidOption(format!(
                    "interval [{a}, {b}] is out of order or outside [0, {length}]"
                )));
            }
            prev = b;
        }
        Ok(Self { length, intervals })
    }

    /// Pinned configuration with `gaps + 1` components of total length
    /// `total`: equal interior pieces, half-length end pieces touching `0`
    /// and `L`, and equal gaps.
    pub fn uniform(length: f64, gaps: usize, total: f64) -> Result<Self> {
        if gaps == 0 {
            return Self::new(length, vec![(0.0, length)]);
        }
        let c = gaps as f64;
        let l = total / c;
        let g = ((length - total) / c).max(0.0);
        let mut intervals = Vec::with_capacity(gaps + 1);
        let mut a = 0.0;
        for i in 0..=gaps {
            let piece = if i == 0 || i == gaps { l / 2.0 } else { l };
            let b = if i == gaps { length } else { (a + piece).min(length) };
            intervals.push((a.min(b), b));
            a = b + g;
        }
        Self::new(length, intervals)
    }

    /// Total curve length `tau`.
    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Interior gap sizes `g_i = a_{i+1} - b_i`.
    pub fn gaps(&self) -> Vec<f64> {
        self.intervals.windows(2).map(|w| w[1].0 - w[0].1).collect()
    }

    pub fn total_gap(&self) -> f64 {
        self.gaps().iter().sum()
    }

    pub fn component_count(&self) -> usize {
        self.intervals.len()
    }
}

/// Energy of `config` for data of density `alpha` on `[0, L]`: exact
/// distance integrals over half-gaps and end overhangs, plus length and
/// component terms.
pub fn segment_energy(config: &SegmentConfig, alpha: f64, lambda1: f64, lambda2: f64, p: f64) -> Result<f64> {
    let p = check_p(p)?;
    let a = positive("alpha", alpha)?;
    let l1 = positive("lambda1", lambda1)?;
    let l2 = positive("lambda2", lambda2)?;
    let q = p + 1.0;
    let mut fid = 0.0;
    for g in config.gaps() {
        fid += 2.0 * (g / 2.0).powf(q) / q;
    }
    let first = config.intervals[0].0;
    let last = config.length - config.intervals[config.intervals.len() - 1].1;
    fid += (first.powf(q) + last.powf(q)) / q;
    Ok(a * fid + l1 * config.total_length() + l1 * l2 * (config.component_count() as f64 - 1.0))
}

/// Outcome of the segment analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentPrediction {
    pub components: usize,
    /// Length of each interior component.
    pub component_length: f64,
    pub gap: f64,
    pub energy: f64,
    /// Real-valued optimum of the zero-length component count.
    pub zero_length_optimum: f64,
}

/// `E_{l=0}(c)`: energy of `c + 1` points with `c` equal gaps.
pub fn zero_length_energy(length: f64, alpha: f64, lambda1: f64, lambda2: f64, p: f64, gaps: f64) -> f64 {
    2.0 / (p + 1.0) * (length / 2.0).powf(p + 1.0) * alpha / gaps.powf(p) + lambda1 * lambda2 * gaps
}

/// Optimal configuration for uniform data of density `alpha` on `[0, L]`
/// among curves containing both ends.
pub fn segment_minimizer(length: f64, alpha: f64, lambda1: f64, lambda2: f64, p: f64) -> Result<SegmentPrediction> {
    let p = check_p(p)?;
    let length = positive("L", length)?;
    let a = positive("alpha", alpha)?;
    let l1 = positive("lambda1", lambda1)?;
    let l2 = positive("lambda2", lambda2)?;
    let r = (l1 / a).powf(1.0 / p);
    let threshold = 2.0 * p / (p + 1.0) * r;
    let star = length / 2.0 * ((p + 1.0) * l1 * l2 / (2.0 * p * a)).powf(-1.0 / (p + 1.0));
    if l2 >= threshold {
        return Ok(SegmentPrediction {
            components: 1,
            component_length: (length - 2.0 * r).max(0.0),
            gap: 0.0,
            energy: l1 * length,
            zero_length_optimum: star,
        });
    }
    let bar = length / (2.0 * r);
    let lo = star.floor().max(1.0);
    let hi = star.ceil().max(1.0);
    let e = |c: f64| zero_length_energy(length, a, l1, l2, p, c);
    let best = if e(hi) < e(lo) { hi } else { lo };
    if best < bar {
        let c = bar.floor().max(1.0);
        let piece = length / c - 2.0 * r;
        return Ok(SegmentPrediction {
            components: c as usize + 1,
            component_length: piece.max(0.0),
            gap: 2.0 * r,
            energy: l1 * length + l1 * l2 * c - l1 * threshold * c,
            zero_length_optimum: star,
        });
    }
    Ok(SegmentPrediction {
        components: best as usize + 1,
        component_length: 0.0,
        gap: length / best,
        energy: e(best),
        zero_length_optimum: star,
    })
}

/// Best configuration found by the exhaustive search, with a bound on the
/// energy error of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForce {
    pub config: SegmentConfig,
    pub energy: f64,
    pub error_bound: f64,
    /// Lowest energy per gap count, index = number of gaps.
    pub per_count: Vec<f64>,
}

impl BruteForce {
    /// Gap between the best and the second-best component count.
    pub fn margin(&self) -> f64 {
        let mut sorted = self.per_count.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.len() < 2 {
            f64::INFINITY
        } else {
            sorted[1] - sorted[0]
        }
    }
}

/// Searches gap counts `0..=ceil(3 * zero-length optimum)` and interior
/// component lengths on a grid of spacing `step`, using pinned uniform
/// configurations, and evaluates each with [`segment_energy`].
pub fn brute_force_segment(length: f64, alpha: f64, lambda1: f64, lambda2: f64, p: f64, step: f64) -> Result<BruteForce> {
    let p = check_p(p)?;
    let length = positive("L", length)?;
    let step = positive("grid", step)?;
    if step > length / 10.0 {
        return Err(MppcError::InvalidOption("grid step must not exceed L / 10".into()));
    }
    let star = length / 2.0 * ((p + 1.0) * lambda1 * lambda2 / (2.0 * p * alpha)).powf(-1.0 / (p + 1.0));
    let max_gaps = (3.0 * star).ceil().max(1.0) as usize;
    let whole = SegmentConfig::new(length, vec![(0.0, length)])?;
    let mut best = (segment_energy(&whole, alpha, lambda1, lambda2, p)?, whole);
    let mut per_count = vec![best.0];
    let mut slope: f64 = 0.0;
    for gaps in 1..=max_gaps {
        let c = gaps as f64;
        slope = slope.max(c * lambda1.max(alpha * (length / (2.0 * c)).powf(p)));
        let steps = (length / c / step).floor() as usize;
        let mut count_best = f64::INFINITY;
        for s in 0..=steps {
            let l = s as f64 * step;
            let cfg = SegmentConfig::uniform(length, gaps, c * l)?;
            let e = segment_energy(&cfg, alpha, lambda1, lambda2, p)?;
            count_best = count_best.min(e);
            if e < best.0 {
                best = (e, cfg);
            }
        }
        per_count.push(count_best);
    }
    Ok(BruteForce {
        config: best.1,
        energy: best.0,
        error_bound: step * slope,
        per_count,
    })
}
