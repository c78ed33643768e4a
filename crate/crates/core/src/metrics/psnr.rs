//! Point-to-point (D1) and point-to-plane (D2) geometry PSNR.

use rayon::prelude::*;

use super::{ensure_normals, mean, psnr_db, MetricConfig, MetricKind, MetricResult};
use crate::cloud::{dot, sub, Point3, PointCloud};
use crate::error::Result;
use crate::index::NeighborIndex;

/// Per-point squared errors of `from` against its nearest neighbors in
/// `to`. `err` receives (from-point index, nearest to-point index).
fn directional_errors<F>(from: &[Point3], to: &NeighborIndex, err: F) -> Vec<f64>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    from.par_iter()
        .enumerate()
        .map(|(i, p)| err(i, to.nearest(p).index))
        .collect()
}

fn peak(reference: &PointCloud, cfg: &MetricConfig) -> f64 {
    cfg.peak_value
        .unwrap_or_else(|| reference.bounding_box_diagonal())
}

fn finish(kind: MetricKind, peak: f64, mse_dr: f64, mse_rd: Option<f64>) -> MetricResult {
    let mse = mse_rd.map_or(mse_dr, |m| m.max(mse_dr));
    let mut r = if mse == 0.0 {
        let mut r = MetricResult::new(kind, f64::INFINITY);
        r.identical = true;
        r
    } else {
        MetricResult::new(kind, psnr_db(peak, mse))
    };
    r = r
        .with_aux("mse", mse)
        .with_aux("mse_dist_to_ref", mse_dr)
        .with_aux("peak", peak);
    if let Some(m) = mse_rd {
        r = r.with_aux("mse_ref_to_dist", m);
    }
    r
}

/// Every distorted point (and every reference point when `both`) has an
/// exact counterpart in the other cloud.
fn coincident(rp: &[Point3], dp: &[Point3], both: bool) -> bool {
    let hits = |from: &[Point3], to: &[Point3]| {
        let index = NeighborIndex::new(to);
        from.par_iter().all(|p| index.nearest(p).distance == 0.0)
    };
    hits(dp, rp) && (!both || hits(rp, dp))
}

/// Point-to-point PSNR: squared Euclidean distance of every point to its
/// nearest neighbor in the other cloud.
pub fn d1_psnr(reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<MetricResult> {
    let (rp, dp) = (reference.positions(), distorted.positions());
    let ref_index = NeighborIndex::new(rp);
    let mse_dr = mean(&directional_errors(dp, &ref_index, |i, j| {
        crate::cloud::squared_distance(&dp[i], &rp[j])
    }));
    let mse_rd = cfg.symmetric.then(|| {
        let dist_index = NeighborIndex::new(dp);
        mean(&directional_errors(rp, &dist_index, |i, j| {
            crate::cloud::squared_distance(&rp[i], &dp[j])
        }))
    });
    Ok(finish(MetricKind::D1, peak(reference, cfg), mse_dr, mse_rd))
}

/// Point-to-plane PSNR: the error vector projected on the reference normal.
///
/// Distorted → reference uses the normal of the matched reference point.
/// Reference → distorted uses the normal of the querying reference point,
/// so only the reference needs normals.
pub fn d2_psnr(reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<MetricResult> {
    // Zero error vectors project to zero on any normal, so coincident
    // geometry needs no estimated normals (estimation can be impossible on
    // tiny clouds).
    if reference.normals().is_none() && cfg.estimate_normals && coincident(reference.positions(), distorted.positions(), cfg.symmetric) {
        return Ok(finish(MetricKind::D2, peak(reference, cfg), 0.0, cfg.symmetric.then_some(0.0)));
    }
    let reference = ensure_normals(reference, cfg)?;
    let normals = reference.require_normals()?;
    let (rp, dp) = (reference.positions(), distorted.positions());
    let ref_index = NeighborIndex::new(rp);
    let mse_dr = mean(&directional_errors(dp, &ref_index, |i, j| {
        dot(&sub(&dp[i], &rp[j]), &normals[j]).powi(2)
    }));
    let mse_rd = cfg.symmetric.then(|| {
        let dist_index = NeighborIndex::new(dp);
        mean(&directional_errors(rp, &dist_index, |i, j| {
            dot(&sub(&rp[i], &dp[j]), &normals[i]).powi(2)
        }))
    });
    Ok(finish(MetricKind::D2, peak(&reference, cfg), mse_dr, mse_rd))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: Vec<Point3>) -> PointCloud {
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn coincident_clouds_need_no_normals() {
        let c = cloud(vec![[0.0; 3], [1.0, 2.0, 3.0]]);
        let r = d2_psnr(&c, &c, &MetricConfig::default()).unwrap();
        assert!(r.identical);
        let moved = cloud(vec![[0.0; 3], [1.0, 2.0, 3.5]]);
        assert!(d2_psnr(&c, &moved, &MetricConfig::default()).is_err());
    }

    #[test]
    fn identical_is_flagged() {
        let c = cloud(vec![[0.0; 3], [1.0, 2.0, 3.0]]);
        let r = d1_psnr(&c, &c, &MetricConfig::default()).unwrap();
        assert!(r.identical);
        assert_eq!(r.value, f64::INFINITY);
        assert_eq!(r.aux["mse"], 0.0);
    }

    #[test]
    fn unit_offset_is_zero_db() {
        let cfg = MetricConfig {
            peak_value: Some(1.0),
            ..MetricConfig::default()
        };
        let r = d1_psnr(&cloud(vec![[0.0; 3]]), &cloud(vec![[1.0, 0.0, 0.0]]), &cfg).unwrap();
        assert_eq!(r.aux["mse"], 1.0);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn tangent_displacement_is_invisible_to_d2() {
        let reference = cloud(vec![[0.0; 3]]).with_normals(vec![[0.0, 0.0, 1.0]]).unwrap();
        let dist = cloud(vec![[0.3, -0.4, 0.0]]);
        let r = d2_psnr(&reference, &dist, &MetricConfig::default()).unwrap();
        assert!(r.identical);
        let d1 = d1_psnr(&reference, &dist, &MetricConfig::default()).unwrap();
        assert!(!d1.identical);
    }

    #[test]
    fn normal_displacement_matches_d1() {
        let reference = cloud(vec![[0.0; 3]]).with_normals(vec![[0.6, 0.0, 0.8]]).unwrap();
        let dist = cloud(vec![[0.3, 0.0, 0.4]]);
        let cfg = MetricConfig {
            peak_value: Some(10.0),
            ..MetricConfig::default()
        };
        let d1 = d1_psnr(&reference, &dist, &cfg).unwrap();
        let d2 = d2_psnr(&reference, &dist, &cfg).unwrap();
        assert!((d1.value - d2.value).abs() < 1e-9);
    }

    #[test]
    fn missing_normals_without_estimation() {
        let c = cloud(vec![[0.0; 3]]);
        let cfg = MetricConfig {
            estimate_normals: false,
            ..MetricConfig::default()
        };
        assert!(d2_psnr(&c, &c, &cfg).is_err());
    }

    #[test]
    fn one_way_mode_ignores_reverse_direction() {
        let reference = cloud(vec![[0.0; 3], [5.0, 0.0, 0.0]]);
        let dist = cloud(vec![[0.0; 3]]);
        let cfg = MetricConfig {
            symmetric: false,
            ..MetricConfig::default()
        };
        assert!(d1_psnr(&reference, &dist, &cfg).unwrap().identical);
        assert!(!d1_psnr(&reference, &dist, &MetricConfig::default()).unwrap().identical);
    }
}
