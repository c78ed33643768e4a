//! Point-to-distribution: Mahalanobis distance of each point to the
//! Gaussian of its `K` nearest neighbors in the other cloud, for geometry
//! (3D positions) and for luminance.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::{mean, MetricConfig, MetricKind, MetricResult};
use crate::cloud::{Point3, PointCloud};
use crate::color::rgb_to_ycbcr;
use crate::error::Result;
use crate::index::NeighborIndex;

/// Relative diagonal loading: `REGULARIZATION · trace / dim`.
pub const REGULARIZATION: f64 = 1e-9;
/// Absolute floor on the diagonal loading, for zero-spread neighborhoods.
pub const REGULARIZATION_FLOOR: f64 = 1e-12;

fn loading(trace: f64, dim: f64) -> f64 {
    (REGULARIZATION * trace / dim).max(REGULARIZATION_FLOOR)
}

/// Mahalanobis distance of `x` to the Gaussian fitted (population
/// covariance, diagonally loaded) on `samples`.
pub fn mahalanobis_3d(x: &Point3, samples: &[Point3]) -> f64 {
    let n = samples.len() as f64;
    let mu = samples
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p))
        / n;
    let mut cov = Matrix3::zeros();
    for p in samples {
        let d = Vector3::from(*p) - mu;
        cov += d * d.transpose();
    }
    cov /= n;
    cov += Matrix3::identity() * loading(cov.trace(), 3.0);
    let delta = Vector3::from(*x) - mu;
    let solved = match cov.cholesky() {
        Some(ch) => ch.solve(&delta),
        None => cov.try_inverse().map(|inv| inv * delta).unwrap_or(delta),
    };
    delta.dot(&solved).max(0.0).sqrt()
}

pub fn mahalanobis_1d(x: f64, samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / n;
    let var = var + loading(var, 1.0);
    (x - mu).abs() / var.sqrt()
}

/// Average geometry and luminance distances from every point of one cloud
/// to the neighborhoods of the other.
fn direction(
    from_pos: &[Point3],
    from_luma: &[f64],
    to_index: &NeighborIndex,
    to_luma: &[f64],
    k: usize,
) -> (f64, f64) {
    let to_pos = to_index.points();
    let per_point: Vec<(f64, f64)> = from_pos
        .par_iter()
        .zip(from_luma.par_iter())
        .map(|(p, &y)| {
            let hood = to_index.k_nearest_clamped(p, k);
            let pts: Vec<Point3> = hood.iter().map(|n| to_pos[n.index]).collect();
            let lum: Vec<f64> = hood.iter().map(|n| to_luma[n.index]).collect();
            (mahalanobis_3d(p, &pts), mahalanobis_1d(y, &lum))
        })
        .collect();
    let g: Vec<f64> = per_point.iter().map(|v| v.0).collect();
    let c: Vec<f64> = per_point.iter().map(|v| v.1).collect();
    (mean(&g), mean(&c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2dComponents {
    pub geometry_ref_to_dist: f64,
    pub geometry_dist_to_ref: f64,
    pub color_ref_to_dist: f64,
    pub color_dist_to_ref: f64,
}

impl P2dComponents {
    pub fn geometry(&self) -> f64 {
        self.geometry_ref_to_dist.max(self.geometry_dist_to_ref)
    }

    pub fn color(&self) -> f64 {
        self.color_ref_to_dist.max(self.color_dist_to_ref)
    }

    pub fn joint(&self) -> f64 {
        (self.geometry() + self.color()) / 2.0
    }
}

/// Final score from the joint geometry/color distance.
pub fn score_from_joint(jgc: f64) -> f64 {
    (1.0 + 1.0 / jgc).log10()
}

pub fn p2d_components(reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<P2dComponents> {
    let luma = |c: &PointCloud| -> Result<Vec<f64>> {
        Ok(c.require_colors()?
            .iter()
            .map(|&rgb| rgb_to_ycbcr(rgb, cfg.ycbcr_matrix).y)
            .collect())
    };
    let (ref_luma, dist_luma) = (luma(reference)?, luma(distorted)?);
    let ref_index = NeighborIndex::new(reference.positions());
    let dist_index = NeighborIndex::new(distorted.positions());
    let k = cfg.p2d_neighbors;
    let (g_rd, c_rd) = direction(reference.positions(), &ref_luma, &dist_index, &dist_luma, k);
    let (g_dr, c_dr) = direction(distorted.positions(), &dist_luma, &ref_index, &ref_luma, k);
    Ok(P2dComponents {
        geometry_ref_to_dist: g_rd,
        geometry_dist_to_ref: g_dr,
        color_ref_to_dist: c_rd,
        color_dist_to_ref: c_dr,
    })
}

pub fn p2d(reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<MetricResult> {
    let c = p2d_components(reference, distorted, cfg)?;
    let jgc = c.joint();
    let mut r = MetricResult::new(MetricKind::P2d, score_from_joint(jgc));
    r.identical = jgc == 0.0;
    Ok(r
        .with_aux("geometry", c.geometry())
        .with_aux("color", c.color())
        .with_aux("joint", jgc)
        .with_aux("geometry_ref_to_dist", c.geometry_ref_to_dist)
        .with_aux("geometry_dist_to_ref", c.geometry_dist_to_ref)
        .with_aux("color_ref_to_dist", c.color_ref_to_dist)
        .with_aux("color_dist_to_ref", c.color_dist_to_ref))
}
