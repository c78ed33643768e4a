//! Graph-based similarity of color gradients around keypoints.
//!
//! Keypoints are the reference points with the strongest high-pass graph
//! response of their color signal. Around each keypoint a local graph is
//! built from the reference points inside a radius; the distorted graph
//! pairs each node with its nearest distorted point. Color-gradient
//! moments of the two graphs are compared channel by channel and pooled
//! with per-channel factors.

use rayon::prelude::*;

use super::{MetricConfig, MetricKind, MetricResult};
use crate::characterization::{sparsity_with_index, DEFAULT_SPARSITY_K};
use crate::cloud::{distance, PointCloud};
use crate::color::rgb_to_ycbcr;
use crate::error::{Error, Result};
use crate::index::NeighborIndex;

/// Stabilizing constant of every similarity term.
pub const STABILITY: f64 = 1e-4;

/// One node of a local graph: distance to the graph center and the
/// absolute channel difference to the center's value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphNode {
    pub distance: f64,
    pub gradient: f64,
}

/// Gaussian edge weight for a node at `distance` in a graph of `radius`.
pub fn edge_weight(distance: f64, radius: f64) -> f64 {
    (-(distance * distance) / (radius * radius)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientMoments {
    /// Weighted gradient mass.
    pub mass: f64,
    /// Unweighted mean gradient.
    pub mean: f64,
    /// Weighted variance about the unweighted mean.
    pub variance: f64,
}

pub fn gradient_moments(nodes: &[GraphNode], radius: f64) -> GradientMoments {
    let n = nodes.len() as f64;
    let mean = nodes.iter().map(|g| g.gradient).sum::<f64>() / n;
    let mut mass = 0.0;
    let mut wsum = 0.0;
    let mut var = 0.0;
    for g in nodes {
        let w = edge_weight(g.distance, radius);
        mass += w * g.gradient;
        wsum += w;
        let d = g.gradient - mean;
        var += w * (d * d);
    }
    GradientMoments {
        mass,
        mean,
        variance: var / wsum,
    }
}

/// Weighted covariance of paired gradients; each pair is weighted by the
/// geometric mean of its two edge weights.
pub fn gradient_covariance(
    x: &[GraphNode],
    y: &[GraphNode],
    mx: &GradientMoments,
    my: &GradientMoments,
    radius: f64,
) -> f64 {
    let mut wsum = 0.0;
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        let w = (edge_weight(a.distance, radius) * edge_weight(b.distance, radius)).sqrt();
        wsum += w;
        acc += w * ((a.gradient - mx.mean) * (b.gradient - my.mean));
    }
    acc / wsum
}

/// Product of mass, mean, contrast and structure similarities.
pub fn channel_similarity(x: &GradientMoments, y: &GradientMoments, covariance: f64) -> f64 {
    let t = STABILITY;
    let sigma_xy = (x.variance * y.variance).sqrt();
    let mass = (2.0 * x.mass * y.mass + t) / (x.mass * x.mass + y.mass * y.mass + t);
    let mean = (2.0 * x.mean * y.mean + t) / (x.mean * x.mean + y.mean * y.mean + t);
    let contrast = (2.0 * sigma_xy + t) / (x.variance + y.variance + t);
    let structure = (covariance + t) / (sigma_xy + t);
    mass * mean * contrast * structure
}

/// Channel pooling: Σ γ_C |S_C| / Σ γ_C.
pub fn pool_channels(similarities: &[f64; 3], factors: &[f64; 3]) -> f64 {
    let total: f64 = factors.iter().sum();
    similarities
        .iter()
        .zip(factors)
        .map(|(s, g)| g * s.abs())
        .sum::<f64>()
        / total
}

/// Indices of the `count` reference points with the largest high-pass
/// response ‖(L·x)_i‖ on the k-NN graph with Gaussian weights.
pub fn select_keypoints(index: &NeighborIndex, signal: &[[f64; 3]], k: usize, count: usize) -> Vec<usize> {
    let n = index.len();
    let hoods: Vec<Vec<crate::index::Neighbor>> = (0..n)
        .into_par_iter()
        .map(|i| index.k_nearest_excluding(i, k))
        .collect();
    let (sq_sum, edges) = hoods
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, c), nb| (s + nb.distance * nb.distance, c + 1));
    let scale = if edges > 0 && sq_sum > 0.0 { sq_sum / edges as f64 } else { 1.0 };

    let response: Vec<f64> = hoods
        .par_iter()
        .enumerate()
        .map(|(i, hood)| {
            let mut acc = [0.0; 3];
            for nb in hood {
                let w = (-(nb.distance * nb.distance) / scale).exp();
                for c in 0..3 {
                    acc[c] += w * (signal[i][c] - signal[nb.index][c]);
                }
            }
            (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| response[b].total_cmp(&response[a]).then(a.cmp(&b)));
    order.truncate(count.min(n));
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSimBreakdown {
    pub score: f64,
    pub keypoints: Vec<usize>,
    pub skipped: Vec<usize>,
    pub radius: f64,
}

pub fn graph_sim_breakdown(reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<GraphSimBreakdown> {
    let to_ycc = |c: &PointCloud| -> Result<Vec<[f64; 3]>> {
        Ok(c.require_colors()?
            .iter()
            .map(|&rgb| {
                let v = rgb_to_ycbcr(rgb, cfg.ycbcr_matrix);
                [v.y, v.cb, v.cr]
            })
            .collect())
    };
    let (ref_ycc, dist_ycc) = (to_ycc(reference)?, to_ycc(distorted)?);
    let ref_index = NeighborIndex::new(reference.positions());
    let dist_index = NeighborIndex::new(distorted.positions());
    let radius = match cfg.graph_radius {
        Some(r) => r,
        None => 3.0 * sparsity_with_index(&ref_index, DEFAULT_SPARSITY_K)?,
    };
    let keypoints = select_keypoints(&ref_index, &ref_ycc, cfg.graph_neighbors, cfg.graph_keypoints);
    let (rp, dp) = (reference.positions(), distorted.positions());

    let per_keypoint: Vec<Option<f64>> = keypoints
        .par_iter()
        .map(|&s| {
            let center = &rp[s];
            let nodes: Vec<usize> = ref_index
                .within_radius(center, radius)
                .into_iter()
                .map(|n| n.index)
                .filter(|&i| i != s)
                .collect();
            if nodes.is_empty() {
                return None;
            }
            let dist_center = dist_index.nearest(center).index;
            let dist_nodes: Vec<usize> = nodes.iter().map(|&i| dist_index.nearest(&rp[i]).index).collect();
            let mut sims = [0.0; 3];
            for (ch, sim) in sims.iter_mut().enumerate() {
                let gx: Vec<GraphNode> = nodes
                    .iter()
                    .map(|&i| GraphNode {
                        distance: distance(&rp[i], center),
                        gradient: (ref_ycc[i][ch] - ref_ycc[s][ch]).abs(),
                    })
                    .collect();
                let gy: Vec<GraphNode> = dist_nodes
                    .iter()
                    .map(|&j| GraphNode {
                        distance: distance(&dp[j], &dp[dist_center]),
                        gradient: (dist_ycc[j][ch] - dist_ycc[dist_center][ch]).abs(),
                    })
                    .collect();
                let mx = gradient_moments(&gx, radius);
                let my = gradient_moments(&gy, radius);
                let cov = gradient_covariance(&gx, &gy, &mx, &my, radius);
                *sim = channel_similarity(&mx, &my, cov);
            }
            Some(pool_channels(&sims, &cfg.graph_channel_pooling))
        })
        .collect();

    let mut skipped = Vec::new();
    let mut scores = Vec::new();
    for (s, v) in keypoints.iter().zip(&per_keypoint) {
        match v {
            Some(v) => scores.push(*v),
            None => skipped.push(*s),
        }
    }
    if scores.is_empty() {
        return Err(Error::Degenerate(format!(
            "every keypoint has an empty local graph at radius {radius}"
        )));
    }
    Ok(GraphSimBreakdown {
        score: scores.iter().sum::<f64>() / scores.len() as f64,
        keypoints,
        skipped,
        radius,
    })
}

pub fn graph_sim(reference: &PointCloud, distorted: &PointCloud, cfg: &MetricConfig) -> Result<MetricResult> {
    let b = graph_sim_breakdown(reference, distorted, cfg)?;
    let mut r = MetricResult::new(MetricKind::GraphSim, b.score);
    r.identical = b.score == 1.0;
    Ok(r
        .with_aux("keypoints", (b.keypoints.len() - b.skipped.len()) as f64)
        .with_aux("skipped_keypoints", b.skipped.len() as f64)
        .with_aux("radius", b.radius))
}
