//! Reduced-reference comparison of compact per-cloud feature vectors.
//!
//! Each cloud is summarized by 21 numbers: seven statistics of a geometry
//! attribute (distance to the centroid), seven of luminance, and seven of
//! the angular similarity between every normal and the normals of its `K`
//! nearest neighbors. The score is the weighted sum of absolute feature
//! differences.

use rayon::prelude::*;

use super::{MetricConfig, MetricKind, MetricResult};
use crate::cloud::{distance, dot, Point3, PointCloud};
use crate::color::rgb_to_ycbcr;
use crate::error::{Error, Result};
use crate::index::NeighborIndex;
use crate::normals::estimate_normals;

pub const FEATURE_COUNT: usize = 21;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "geometry_mean",
    "geometry_std",
    "geometry_median",
    "geometry_mode",
    "geometry_entropy",
    "geometry_energy",
    "geometry_sparsity",
    "luma_mean",
    "luma_std",
    "luma_median",
    "luma_mode",
    "luma_entropy",
    "luma_energy",
    "luma_sparsity",
    "normal_mean_of_means",
    "normal_mean_of_stds",
    "normal_mean_of_medians",
    "normal_std_of_means",
    "normal_entropy",
    "normal_energy",
    "normal_sparsity",
];

/// Occurrence histogram normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub mass: Vec<f64>,
}

impl Histogram {
    /// Histogram over `[lo, hi]`; values at `hi` land in the last bin.
    pub fn over_range(values: &[f64], bins: usize, lo: f64, hi: f64) -> Self {
        let mut counts = vec![0usize; bins];
        let width = hi - lo;
        for &v in values {
            let b = if width > 0.0 {
                (((v - lo) / width) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize
            } else {
                0
            };
            counts[b] += 1;
        }
        let total = values.len().max(1) as f64;
        Self {
            lo,
            hi,
            mass: counts.into_iter().map(|c| c as f64 / total).collect(),
        }
    }

    /// Histogram over the min–max range of `values`.
    pub fn of(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::over_range(values, bins, lo, hi)
    }

    /// Center of the fullest bin (lowest bin on ties).
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (i, m) in self.mass.iter().enumerate() {
            if *m > self.mass[best] {
                best = i;
            }
        }
        let width = (self.hi - self.lo) / self.mass.len() as f64;
        self.lo + (best as f64 + 0.5) * width
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        -self
            .mass
            .iter()
            .filter(|m| **m > 0.0)
            .map(|m| m * m.log2())
            .sum::<f64>()
    }

    pub fn energy(&self) -> f64 {
        self.mass.iter().map(|m| m * m).sum()
    }

    /// Fraction of empty bins.
    pub fn sparsity(&self) -> f64 {
        self.mass.iter().filter(|m| **m == 0.0).count() as f64 / self.mass.len() as f64
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let shift = values[0];
    let off = values.iter().map(|v| v - shift).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - shift - off).powi(2)).sum::<f64>() / n;
    (shift + off, var.sqrt())
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Mean, std, median, mode, entropy, energy and sparsity of an attribute.
pub fn attribute_features(values: &[f64], bins: usize) -> [f64; 7] {
    let (m, s) = mean_std(values);
    let h = Histogram::of(values, bins);
    [m, s, median(values), h.mode(), h.entropy(), h.energy(), h.sparsity()]
}

/// Angular similarity in [0, 1]: 1 for parallel unit vectors.
pub fn angular_similarity(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    1.0 - dot(a, b).clamp(-1.0, 1.0).acos() / std::f64::consts::PI
}

/// Given normals, or estimated ones where the neighborhood allows.
fn point_normals(cloud: &PointCloud, cfg: &MetricConfig) -> Result<Vec<Option<Point3>>> {
    if let Some(n) = cloud.normals() {
        return Ok(n.iter().copied().map(Some).collect());
    }
    if !cfg.estimate_normals {
        return Err(Error::MissingAttribute("normals"));
    }
    Ok(estimate_normals(cloud, cfg.normal_radius)?.normals)
}

/// Points without a normal are left out; a cloud with none at all yields
/// an all-zero group.
fn normal_features(cloud: &PointCloud, normals: &[Option<Point3>], k: usize, bins: usize) -> [f64; 7] {
    let index = NeighborIndex::new(cloud.positions());
    let per_point: Vec<(f64, f64, f64, Vec<f64>)> = (0..cloud.len())
        .into_par_iter()
        .filter_map(|i| {
            let ni = normals[i]?;
            let mut theta: Vec<f64> = index
                .k_nearest_excluding(i, k)
                .iter()
                .filter_map(|n| normals[n.index].map(|nj| angular_similarity(&ni, &nj)))
                .collect();
            if theta.is_empty() {
                theta.push(1.0);
            }
            let (m, s) = mean_std(&theta);
            let hist = Histogram::over_range(&theta, bins, 0.0, 1.0);
            Some((m, s, median(&theta), hist.mass))
        })
        .collect();
    if per_point.is_empty() {
        return [0.0; 7];
    }

    let n = per_point.len() as f64;
    let means: Vec<f64> = per_point.iter().map(|p| p.0).collect();
    let (mean_of_means, std_of_means) = mean_std(&means);
    let mean_of_stds = per_point.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_of_medians = per_point.iter().map(|p| p.2).sum::<f64>() / n;
    let mut mass = vec![0.0; bins];
    for p in &per_point {
        for (acc, m) in mass.iter_mut().zip(&p.3) {
            *acc += m;
        }
    }
    let averaged = Histogram {
        lo: 0.0,
        hi: 1.0,
        mass: mass.into_iter().map(|m| m / n).collect(),
    };
    [
        mean_of_means,
        mean_of_stds,
        mean_of_medians,
        std_of_means,
        averaged.entropy(),
        averaged.energy(),
        averaged.sparsity(),
    ]
}

/// The 21-entry reduced feature vector of one cloud.
pub fn reduced_features(cloud: &PointCloud, cfg: &MetricConfig) -> Result<[f64; FEATURE_COUNT]> {
    let normals = point_normals(cloud, cfg)?;
    let centroid = cloud.centroid();
    let radial: Vec<f64> = cloud.positions().iter().map(|p| distance(p, &centroid)).collect();
    let luma: Vec<f64> = cloud
        .require_colors()?
        .iter()
        .map(|&c| rgb_to_ycbcr(c, cfg.ycbcr_matrix).y)
        .collect();
    let mut out = [0.0; FEATURE_COUNT];
    out[..7].copy_from_slice(&attribute_features(&radial, cfg.pcmrr_bins));
    out[7..14].copy_from_slice(&attribute_features(&luma, cfg.pcmrr_bins));
    out[14..].copy_from_slice(&normal_features(cloud, &normals, cfg.pcmrr_neighbors, cfg.pcmrr_bins));
    Ok(out)
}

/// Weighted sum of absolute feature differences.
pub fn score(reference: &[f64], distorted: &[f64], weights: &[f64]) -> f64 {
    reference
        .iter()
        .zip(distorted)
        .zip(weights)
        .map(|((r, d), w)| w * (r - d).abs())
        .sum()
}

pub fn pcm_rr(reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<MetricResult> {
    let weights = cfg.pcmrr_weights.as_deref().ok_or(Error::MissingConfig {
        metric: "pcmrr",
        what: "pcmrr_weights",
    })?;
    if weights.len() != FEATURE_COUNT {
        return Err(Error::InvalidArgument(format!(
            "pcmrr_weights needs {FEATURE_COUNT} entries, got {}",
            weights.len()
        )));
    }
    let fr = reduced_features(reference, cfg)?;
    let fd = reduced_features(distorted, cfg)?;
    let value = score(&fr, &fd, weights);
    let mut r = MetricResult::new(MetricKind::PcmRr, value);
    r.identical = fr == fd;
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        r = r.with_aux(&format!("d_{name}"), (fr[k] - fd[k]).abs());
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_histogram_entropy() {
        let values: Vec<f64> = (0..64).map(|i| i as f64 + 0.5).collect();
        let h = Histogram::over_range(&values, 64, 0.0, 64.0);
        assert!((h.entropy() - 6.0).abs() < 1e-12);
        assert!((h.energy() - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(h.sparsity(), 0.0);
    }

    #[test]
    fn histogram_mode_and_sparsity() {
        let h = Histogram::of(&[0.0, 1.0, 1.0, 4.0], 4);
        assert_eq!(h.mode(), 1.5);
        assert_eq!(h.sparsity(), 0.25);
        let flat = Histogram::of(&[2.0, 2.0], 8);
        assert_eq!(flat.mass[0], 1.0);
        assert_eq!(flat.mode(), 2.0);
        assert_eq!(flat.entropy(), 0.0);
    }

    #[test]
    fn weighted_difference() {
        let r = [1.0, 2.0, 3.0];
        let d = [0.5, 2.5, 1.0];
        assert_eq!(score(&r, &d, &[1.0, 2.0, 0.5]), 0.5 + 1.0 + 1.0);
    }

    #[test]
    fn angular_similarity_range() {
        assert_eq!(angular_similarity(&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]), 1.0);
        assert_eq!(angular_similarity(&[0.0, 0.0, 1.0], &[0.0, 0.0, -1.0]), 0.0);
        assert!((angular_similarity(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn even_median() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
