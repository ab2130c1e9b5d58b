//! Static SVG plots: data in gray, polylines in green, singletons as dots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{MppcError, Result};
use crate::model::{MultiCurve, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Keep the first two coordinates.
    First2,
    /// Project onto the top two weighted principal components.
    Pca2,
}

impl std::str::FromStr for Projection {
    type Err = MppcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first2" => Ok(Projection::First2),
            "pca2" => Ok(Projection::Pca2),
            _ => Err(MppcError::InvalidOption(format!("unknown projection `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
    /// Fraction of the data extent added on every side.
    pub padding: f64,
    /// Required when the dimension exceeds two.
    pub projection: Option<Projection>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            width: 800.0,
            height: 600.0,
            padding: 0.05,
            projection: None,
        }
    }
}

struct Frame {
    center: Vec<f64>,
    axes: Option<[Vec<f64>; 2]>,
}

impl Frame {
    fn new(cloud: &PointCloud, options: &SvgOptions) -> Result<Self> {
        let dim = cloud.dim();
        match (dim, options.projection) {
            (1 | 2, None | Some(Projection::First2)) => Ok(Self { center: vec![0.0; dim], axes: None }),
            (_, None) => Err(MppcError::InvalidOption(format!("dimension {dim} needs a projection"))),
            (_, Some(Projection::First2)) => Ok(Self { center: vec![0.0; dim], axes: None }),
            (_, Some(Projection::Pca2)) => Ok(pca2(cloud)),
        }
    }

    fn apply(&self, v: &[f64]) -> (f64, f64) {
        match &self.axes {
            None => (v[0], v.get(1).copied().unwrap_or(0.0)),
            Some([a, b]) => {
                let dot = |u: &[f64]| v.iter().zip(&self.center).zip(u).map(|((x, c), e)| (x - c) * e).sum::<f64>();
                (dot(a), dot(b))
            }
        }
    }
}

/// Weighted mean and top two covariance eigenvectors by power iteration with
/// deflation. Only used for display.
fn pca2(cloud: &PointCloud) -> Frame {
    let dim = cloud.dim();
    let total = cloud.total_mass();
    let mut center = vec![0.0; dim];
    for i in 0..cloud.len() {
        for (c, x) in center.iter_mut().zip(cloud.point(i)) {
            *c += cloud.weight(i) * x / total;
        }
    }
    let cov_times = |v: &[f64], found: &[Vec<f64>]| {
        let mut out = vec![0.0; dim];
        for i in 0..cloud.len() {
            let p = cloud.point(i);
            let s: f64 = (0..dim).map(|k| (p[k] - center[k]) * v[k]).sum::<f64>() * cloud.weight(i);
            for k in 0..dim {
                out[k] += s * (p[k] - center[k]);
            }
        }
        for f in found {
            let s: f64 = out.iter().zip(f).map(|(a, b)| a * b).sum();
            for k in 0..dim {
                out[k] -= s * f[k];
            }
        }
        out
    };
    let mut found: Vec<Vec<f64>> = Vec::new();
    for axis in 0..2 {
        let mut v: Vec<f64> = (0..dim).map(|k| 1.0 + ((k * 7 + axis * 3) % 11) as f64 / 11.0).collect();
        for f in &found {
            let s: f64 = v.iter().zip(f).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(f).for_each(|(a, b)| *a -= s * b);
        }
        for _ in 0..200 {
            let w = cov_times(&v, &found);
            let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                break;
            }
            v = w.into_iter().map(|x| x / n).collect();
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
        found.push(v);
    }
    let b = found.pop().expect("two axes");
    let a = found.pop().expect("two axes");
    Frame { center, axes: Some([a, b]) }
}

pub fn render_svg(cloud: &PointCloud, curves: &MultiCurve, options: &SvgOptions) -> Result<String> {
    if curves.dim() != cloud.dim() {
        return Err(MppcError::DimensionMismatch {
            expected: cloud.dim(),
            found: curves.dim(),
        });
    }
    let frame = Frame::new(cloud, options)?;
    let data: Vec<(f64, f64)> = (0..cloud.len()).map(|i| frame.apply(cloud.point(i))).collect();
    let comps: Vec<Vec<(f64, f64)>> = curves
        .components()
        .iter()
        .map(|p| (0..p.len()).map(|j| frame.apply(p.vertex(j))).collect())
        .collect();

    let all = data.iter().chain(comps.iter().flatten());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let (pad_x, pad_y) = (options.padding * (x1 - x0).max(1e-3 * span), options.padding * (y1 - y0).max(1e-3 * span));
    let (x0, x1, y0, y1) = (x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y);
    // Uniform scale keeps the aspect ratio.
    let scale = (options.width / (x1 - x0)).min(options.height / (y1 - y0));
    let ox = 0.5 * (options.width - scale * (x1 - x0));
    let oy = 0.5 * (options.height - scale * (y1 - y0));
    let to_px = |(x, y): (f64, f64)| (ox + scale * (x - x0), options.height - oy - scale * (y - y0));

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = options.width,
        h = options.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let r_data = (1.5 * (options.width * options.height / 480_000.0).sqrt() / (1.0 + (cloud.len() as f64 / 5000.0))).max(0.4);
    let _ = writeln!(s, r##"<g id="data" fill="#999999">"##);
    for &p in &data {
        let (x, y) = to_px(p);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r_data:.2}"/>"#);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g id="curves" fill="none" stroke="#1a9641" stroke-width="2" stroke-linejoin="round">"##);
    for c in comps.iter().filter(|c| c.len() > 1) {
        let mut d = String::new();
        for (j, &p) in c.iter().enumerate() {
            let (x, y) = to_px(p);
            let _ = write!(d, "{}{x:.2},{y:.2}", if j == 0 { "M" } else { " L" });
        }
        let _ = writeln!(s, r#"<path d="{d}"/>"#);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g id="singletons" fill="#1a9641">"##);
    for c in comps.iter().filter(|c| c.len() == 1) {
        let (x, y) = to_px(c[0]);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4"/>"#);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(cloud: &PointCloud, curves: &MultiCurve, path: impl AsRef<Path>, options: &SvgOptions) -> Result<()> {
    std::fs::write(path, render_svg(cloud, curves, options)?)?;
    Ok(())
}
