//! Small dense-vector helpers over `&[f64]` slices.

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Squared distance from `x` to the segment `[a, b]`.
#[inline]
pub(crate) fn seg_dist2(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut ax_ab = 0.0;
    for k in 0..x.len() {
        let e = b[k] - a[k];
        ab2 += e * e;
        ax_ab += (x[k] - a[k]) * e;
    }
    if ab2 == 0.0 {
        return dist2(x, a);
    }
    let t = (ax_ab / ab2).clamp(0.0, 1.0);
    let mut d2 = 0.0;
    for k in 0..x.len() {
        let f = a[k] + t * (b[k] - a[k]);
        d2 += (x[k] - f) * (x[k] - f);
    }
    d2
}

/// Unit vector of the dominant principal direction of weighted points
/// (power iteration on the weighted covariance). Falls back to the first
/// axis when the spread is zero.
pub(crate) fn principal_direction(dim: usize, points: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; dim];
    if total > 0.0 {
        for (p, &w) in points.iter().zip(weights) {
            for k in 0..dim {
                mean[k] += w * p[k];
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
    }
    let mut v: Vec<f64> = (0..dim).map(|k| 1.0 + 0.1 * k as f64).collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut tmp = vec![0.0; dim];
    for _ in 0..100 {
        tmp.iter_mut().for_each(|t| *t = 0.0);
        for (p, &w) in points.iter().zip(weights) {
            let mut proj = 0.0;
            for k in 0..dim {
                proj += (p[k] - mean[k]) * v[k];
            }
            for k in 0..dim {
                tmp[k] += w * proj * (p[k] - mean[k]);
            }
        }
        let n = norm(&tmp);
        if n == 0.0 || !n.is_finite() {
            let mut e = vec![0.0; dim];
            e[0] = 1.0;
            return e;
        }
        let mut delta = 0.0;
        for k in 0..dim {
            let nk = tmp[k] / n;
            delta += (nk - v[k]).abs();
            v[k] = nk;
        }
        if delta < 1e-13 {
            break;
        }
    }
    v
}
