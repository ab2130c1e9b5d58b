//! Weighted Lloyd iterations with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MppcError, Result};
use crate::geom;
use crate::model::PointCloud;
use crate::par;
use crate::projection::nearest_vertex;

/// `k` cluster centers (row-major) of the weighted cloud: k-means++ seeding
/// from `seed`, then Lloyd steps until the assignment is fixed or `iters`
/// steps have run.
pub fn lloyd(cloud: &PointCloud, k: usize, seed: u64, iters: usize) -> Result<Vec<f64>> {
    if k == 0 || k > cloud.len() {
        return Err(MppcError::InvalidOption(format!(
            "k = {k} must lie in 1..={}",
            cloud.len()
        )));
    }
    let subset: Vec<usize> = (0..cloud.len()).collect();
    let mut centers = seed_plus_plus(cloud, &subset, k, seed);
    iterate(cloud, &subset, &mut centers, iters);
    Ok(centers)
}

/// Weighted k-means++: the first center is drawn with probability
/// proportional to weight, later ones proportional to weight times squared
/// distance to the nearest chosen center.
pub(crate) fn seed_plus_plus(cloud: &PointCloud, subset: &[usize], k: usize, seed: u64) -> Vec<f64> {
    let dim = cloud.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Vec::with_capacity(k * dim);
    let weights: Vec<f64> = subset.iter().map(|&i| cloud.weight(i)).collect();
    let first = draw(&weights, &mut rng).unwrap_or(0);
    centers.extend_from_slice(cloud.point(subset[first]));
    let mut d2: Vec<f64> = subset
        .iter()
        .map(|&i| geom::dist2(cloud.point(i), &centers[..dim]))
        .collect();
    while centers.len() < k * dim {
        let scores: Vec<f64> = weights.iter().zip(&d2).map(|(w, d)| w * d).collect();
        let pick = match draw(&scores, &mut rng) {
            Some(p) => p,
            // Every point coincides with a center; pad with the heaviest point.
            None => draw(&weights, &mut rng).unwrap_or(0),
        };
        let c = cloud.point(subset[pick]).to_vec();
        for (d, &i) in d2.iter_mut().zip(subset) {
            *d = d.min(geom::dist2(cloud.point(i), &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

fn draw(scores: &[f64], rng: &mut ChaCha8Rng) -> Option<usize> {
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &s) in scores.iter().enumerate() {
        if s > 0.0 {
            acc += s;
            last = Some(i);
            if acc > target {
                return Some(i);
            }
        }
    }
    last
}

/// Lloyd steps on the points `subset`, updating `centers` in place. Empty
/// clusters are moved to the point farthest from its center. Returns true
/// if the assignment became stationary.
pub(crate) fn iterate(cloud: &PointCloud, subset: &[usize], centers: &mut [f64], iters: usize) -> bool {
    let dim = cloud.dim();
    let k = centers.len() / dim;
    let mut owner: Vec<usize> = vec![usize::MAX; subset.len()];
    for _ in 0..iters {
        let pairs = par::map_indices(subset.len(), |s| nearest_vertex(cloud.point(subset[s]), centers, dim));
        let changed = pairs.iter().zip(&owner).any(|(p, &o)| p.0 != o);
        owner = pairs.iter().map(|p| p.0).collect();
        if !changed {
            return true;
        }
        let mut mass = vec![0.0; k];
        let mut sum = vec![0.0; k * dim];
        for (s, &j) in owner.iter().enumerate() {
            let i = subset[s];
            let w = cloud.weight(i);
            mass[j] += w;
            for (acc, x) in sum[j * dim..(j + 1) * dim].iter_mut().zip(cloud.point(i)) {
                *acc += w * x;
            }
        }
        let mut taken = vec![false; subset.len()];
        for j in 0..k {
            if mass[j] > 0.0 {
                for t in 0..dim {
                    centers[j * dim + t] = sum[j * dim + t] / mass[j];
                }
            } else {
                let far = pairs
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| !taken[*s])
                    .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
                    .map(|(s, _)| s);
                if let Some(s) = far {
                    taken[s] = true;
                    centers[j * dim..(j + 1) * dim].copy_from_slice(cloud.point(subset[s]));
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_center_is_weighted_mean() {
        let c = PointCloud::new(2, vec![0.0, 0.0, 4.0, 2.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(lloyd(&c, 1, 7, 50).unwrap(), vec![3.0, 1.5]);
    }

    #[test]
    fn two_points_two_centers() {
        let c = PointCloud::uniform(1, vec![-1.0, 5.0]).unwrap();
        let mut z = lloyd(&c, 2, 3, 50).unwrap();
        z.sort_by(f64::total_cmp);
        assert_eq!(z, vec![-1.0, 5.0]);
    }

    #[test]
    fn rejects_bad_k() {
        let c = PointCloud::uniform(1, vec![0.0]).unwrap();
        assert!(lloyd(&c, 0, 0, 10).is_err());
        assert!(lloyd(&c, 2, 0, 10).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let pts: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let c = PointCloud::uniform(2, pts).unwrap();
        assert_eq!(lloyd(&c, 5, 11, 50).unwrap(), lloyd(&c, 5, 11, 50).unwrap());
    }
}
