//! Curvature and color feature comparison on projected surfaces.
//!
//! Every reference point is projected onto a quadric fitted to the
//! distorted cloud around its nearest distorted point; the same fit on the
//! reference around the point itself provides the reference-side values.
//! Mean curvature, lightness, chroma and hue are then compared over each
//! reference point's neighborhood with SSIM-style terms, and every feature
//! is reported as a dissimilarity (0 = identical).
//!
//! Colors use CIELAB (D65) as the perceptual space.

use rayon::prelude::*;

use super::{MetricConfig, MetricKind, MetricResult};
use crate::characterization::{sparsity_with_index, DEFAULT_SPARSITY_K};
use crate::cloud::{Point3, PointCloud};
use crate::color::{rgb_to_lab, Lab};
use crate::error::{Error, Result};
use crate::index::NeighborIndex;
use crate::normals::LocalSurface;

pub const FEATURE_COUNT: usize = 8;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "curvature_comparison",
    "curvature_contrast",
    "curvature_structure",
    "lightness_comparison",
    "lightness_contrast",
    "lightness_structure",
    "chroma_comparison",
    "hue_comparison",
];

/// Stabilizing constants of the curvature, lightness, chroma and hue terms.
pub const CURVATURE_CONSTANT: f64 = 1e-4;
pub const LIGHTNESS_CONSTANT: f64 = 1.0;
pub const CHROMA_CONSTANT: f64 = 1.0;
pub const HUE_CONSTANT: f64 = 1.0;

/// Values attached to one reference point and to its projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSample {
    pub curvature: f64,
    pub lab: Lab,
}

/// Window statistics of a paired sample: means, variances and covariance
/// (population normalization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov: f64,
}

impl PairStats {
    pub fn from_pairs(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> Self {
        let n = pairs.clone().count() as f64;
        let (sx, sy) = pairs.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mean_x, mean_y) = (sx / n, sy / n);
        let (mut var_x, mut var_y, mut cov) = (0.0, 0.0, 0.0);
        for (x, y) in pairs {
            let (dx, dy) = (x - mean_x, y - mean_y);
            var_x += dx * dx;
            var_y += dy * dy;
            cov += dx * dy;
        }
        Self {
            mean_x,
            mean_y,
            var_x: var_x / n,
            var_y: var_y / n,
            cov: cov / n,
        }
    }

    pub fn comparison(&self, c: f64) -> f64 {
        1.0 - (2.0 * self.mean_x * self.mean_y + c) / (self.mean_x.powi(2) + self.mean_y.powi(2) + c)
    }

    pub fn contrast(&self, c: f64) -> f64 {
        1.0 - (2.0 * (self.var_x * self.var_y).sqrt() + c) / (self.var_x + self.var_y + c)
    }

    pub fn structure(&self, c: f64) -> f64 {
        1.0 - (self.cov + c) / ((self.var_x * self.var_y).sqrt() + c)
    }
}

/// The eight dissimilarities of one window of paired samples.
pub fn window_features(pairs: &[(PointSample, PointSample)]) -> [f64; FEATURE_COUNT] {
    let curv = PairStats::from_pairs(pairs.iter().map(|(x, y)| (x.curvature, y.curvature)));
    let light = PairStats::from_pairs(pairs.iter().map(|(x, y)| (x.lab.l, y.lab.l)));
    let chroma = PairStats::from_pairs(pairs.iter().map(|(x, y)| (x.lab.chroma(), y.lab.chroma())));
    let a = PairStats::from_pairs(pairs.iter().map(|(x, y)| (x.lab.a, y.lab.a)));
    let b = PairStats::from_pairs(pairs.iter().map(|(x, y)| (x.lab.b, y.lab.b)));

    let delta_c = chroma.mean_x - chroma.mean_y;
    let delta_h2 = ((a.mean_x - a.mean_y).powi(2) + (b.mean_x - b.mean_y).powi(2) - delta_c.powi(2)).max(0.0);
    let hue = 1.0 - HUE_CONSTANT / (HUE_CONSTANT + delta_h2);

    [
        curv.comparison(CURVATURE_CONSTANT),
        curv.contrast(CURVATURE_CONSTANT),
        curv.structure(CURVATURE_CONSTANT),
        light.comparison(LIGHTNESS_CONSTANT),
        light.contrast(LIGHTNESS_CONSTANT),
        light.structure(LIGHTNESS_CONSTANT),
        chroma.comparison(CHROMA_CONSTANT),
        hue,
    ]
}

/// Weighted sum of averaged features.
pub fn combine(features: &[f64; FEATURE_COUNT], weights: &[f64]) -> f64 {
    features.iter().zip(weights).map(|(f, w)| f * w).sum()
}

fn surface_curvature(cloud: &PointCloud, index: &NeighborIndex, anchor: usize, radius: f64, target: &Point3) -> f64 {
    let positions = cloud.positions();
    let anchor_pos = &positions[anchor];
    let hood: Vec<Point3> = index
        .within_radius(anchor_pos, radius)
        .iter()
        .map(|n| positions[n.index])
        .collect();
    match LocalSurface::fit(&hood, anchor_pos) {
        Some(surface) => {
            let (_, [u, v]) = surface.project(target);
            surface.mean_curvature_at(u, v).abs()
        }
        None => 0.0,
    }
}

/// Per-feature averages over all reference points.
pub fn pcqm_features(reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<[f64; FEATURE_COUNT]> {
    let ref_colors = reference.require_colors()?;
    let dist_colors = distorted.require_colors()?;
    let ref_index = NeighborIndex::new(reference.positions());
    let dist_index = NeighborIndex::new(distorted.positions());
    let radius = match cfg.pcqm_radius {
        Some(r) => r,
        None if reference.len() >= 2 => 2.0 * sparsity_with_index(&ref_index, DEFAULT_SPARSITY_K)?,
        None => 1.0,
    };

    let samples: Vec<(PointSample, PointSample)> = reference
        .positions()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let q = dist_index.nearest(p).index;
            let x = PointSample {
                curvature: surface_curvature(reference, &ref_index, i, radius, p),
                lab: rgb_to_lab(ref_colors[i]),
            };
            let y = PointSample {
                curvature: surface_curvature(distorted, &dist_index, q, radius, p),
                lab: rgb_to_lab(dist_colors[q]),
            };
            (x, y)
        })
        .collect();

    let per_point: Vec<[f64; FEATURE_COUNT]> = reference
        .positions()
        .par_iter()
        .map(|p| {
            let window: Vec<(PointSample, PointSample)> = ref_index
                .within_radius(p, radius)
                .iter()
                .map(|n| samples[n.index])
                .collect();
            window_features(&window)
        })
        .collect();

    let n = per_point.len() as f64;
    let mut avg = [0.0; FEATURE_COUNT];
    for f in &per_point {
        for k in 0..FEATURE_COUNT {
            avg[k] += f[k];
        }
    }
    Ok(avg.map(|s| s / n))
}

pub fn pcqm(reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<MetricResult> {
    let weights = cfg.pcqm_weights.as_deref().ok_or(Error::MissingConfig {
        metric: "pcqm",
        what: "pcqm_weights",
    })?;
    if weights.len() != FEATURE_COUNT {
        return Err(Error::InvalidArgument(format!(
            "pcqm_weights needs {FEATURE_COUNT} entries, got {}",
            weights.len()
        )));
    }
    let features = pcqm_features(reference, distorted, cfg)?;
    let value = combine(&features, weights);
    let mut r = MetricResult::new(MetricKind::Pcqm, value);
    r.identical = features.iter().all(|f| *f == 0.0);
    for (name, f) in FEATURE_NAMES.iter().zip(features) {
        r = r.with_aux(name, f);
    }
    Ok(r.with_aux("color_space_cielab", 1.0))
}
