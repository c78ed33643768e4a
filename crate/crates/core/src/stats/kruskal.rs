use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::correlation::average_ranks;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub p_value: f64,
    pub dof: usize,
}

/// Kruskal–Wallis H test with tie correction; the p-value is the upper
/// chi-square tail with `groups - 1` degrees of freedom.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<KruskalWallis> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument("Kruskal-Wallis needs at least two groups".into()));
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(Error::InvalidArgument(format!("group {i} is empty")));
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let n = pooled.len() as f64;
    let ranks = average_ranks(&pooled);

    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h_raw = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    let correction = 1.0 - ties / (n * n * n - n);
    let dof = groups.len() - 1;
    if correction <= 0.0 {
        // Every observation is identical.
        return Ok(KruskalWallis { h: 0.0, p_value: 1.0, dof });
    }
    let h = (h_raw / correction).max(0.0);
    let chi = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(KruskalWallis {
        h,
        p_value: chi.sf(h),
        dof,
    })
}
