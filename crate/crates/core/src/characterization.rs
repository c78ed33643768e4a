//! Content descriptors: geometric sparsity, color gamut volume and the
//! spread of each YCbCr channel.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::cloud::{Point3, PointCloud};
use crate::color::{rgb_to_ycbcr, YcbcrMatrix};
use crate::error::{Error, Result};
use crate::hull::convex_hull_volume;
use crate::index::NeighborIndex;

pub const DEFAULT_SPARSITY_K: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContentProfile {
    pub sparsity: f64,
    pub gamut_volume_pct: f64,
    pub gamut_degenerate: bool,
    pub y_dev: f64,
    pub cb_dev: f64,
    pub cr_dev: f64,
}

/// Mean distance from each point to its `k` nearest other points, averaged
/// over the cloud. `k` is clamped to `n - 1`.
pub fn sparsity(cloud: &PointCloud, k: usize) -> Result<f64> {
    let index = NeighborIndex::new(cloud.positions());
    sparsity_with_index(&index, k)
}

pub fn sparsity_with_index(index: &NeighborIndex, k: usize) -> Result<f64> {
    let n = index.len();
    if n < 2 {
        return Err(Error::InvalidArgument("sparsity needs at least two points".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("sparsity needs K >= 1".into()));
    }
    let k = k.min(n - 1);
    let per_point: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let hood = index.k_nearest_excluding(i, k);
            hood.iter().map(|nb| nb.distance).sum::<f64>() / hood.len() as f64
        })
        .collect();
    Ok(per_point.iter().sum::<f64>() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GamutVolume {
    /// Percentage of the unit YCbCr cube.
    pub percent: f64,
    pub degenerate: bool,
}

pub fn gamut_volume(cloud: &PointCloud, matrix: YcbcrMatrix) -> Result<GamutVolume> {
    let colors = cloud.require_colors()?;
    let distinct: BTreeSet<[u8; 3]> = colors.iter().copied().collect();
    let points: Vec<Point3> = distinct
        .into_iter()
        .map(|c| {
            let y = rgb_to_ycbcr(c, matrix);
            [y.y, y.cb, y.cr]
        })
        .collect();
    let hull = convex_hull_volume(&points);
    Ok(GamutVolume {
        percent: (hull.volume * 100.0).clamp(0.0, 100.0),
        degenerate: hull.degenerate,
    })
}

/// Population standard deviations of the normalized Y, Cb and Cr channels.
pub fn channel_stats(cloud: &PointCloud, matrix: YcbcrMatrix) -> Result<(f64, f64, f64)> {
    let colors = cloud.require_colors()?;
    let n = colors.len() as f64;
    let ycc: Vec<[f64; 3]> = colors
        .iter()
        .map(|&c| {
            let y = rgb_to_ycbcr(c, matrix);
            [y.y, y.cb, y.cr]
        })
        .collect();
    // Shifted by the first sample so constant channels come out exactly 0.
    let dev = |ch: usize| {
        let shift = ycc[0][ch];
        let mean = ycc.iter().map(|v| v[ch] - shift).sum::<f64>() / n;
        (ycc.iter().map(|v| (v[ch] - shift - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    Ok((dev(0), dev(1), dev(2)))
}

pub fn characterize(cloud: &PointCloud, k: usize, matrix: YcbcrMatrix) -> Result<ContentProfile> {
    let sparsity = sparsity(cloud, k)?;
    let gamut = gamut_volume(cloud, matrix)?;
    let (y_dev, cb_dev, cr_dev) = channel_stats(cloud, matrix)?;
    Ok(ContentProfile {
        sparsity,
        gamut_volume_pct: gamut.percent,
        gamut_degenerate: gamut.degenerate,
        y_dev,
        cb_dev,
        cr_dev,
    })
}
