//! Monotone four-parameter logistic mapping from objective scores to MOS:
//!
//! `MOSp(x) = β1 + (β2 − β1) / (1 + exp(−β3·(x − β4)))`
//!
//! fitted by damped Gauss–Newton (Levenberg–Marquardt) from eight
//! deterministic starts. The objective is standardized internally, which
//! makes the fitted predictions independent of its scale and offset.

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use super::correlation::{check_pair, spearman};
use crate::error::Result;

const STARTS: usize = 8;
const MAX_ITERATIONS: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticFit {
    /// (β1, β2, β3, β4) in the units of the objective input.
    pub params: [f64; 4],
    pub predictions: Vec<f64>,
    pub sse: f64,
    /// Constant objective or constant MOS; the predictor is then constant.
    pub degenerate: bool,
}

impl LogisticFit {
    pub fn predict(&self, x: f64) -> f64 {
        logistic(&self.params, x)
    }
}

pub fn logistic(b: &[f64; 4], x: f64) -> f64 {
    let g = 1.0 / (1.0 + (-b[2] * (x - b[3])).exp());
    b[0] + (b[1] - b[0]) * g
}

fn sse(b: &Vector4<f64>, z: &[f64], y: &[f64]) -> f64 {
    let p = [b[0], b[1], b[2], b[3]];
    z.iter().zip(y).map(|(zi, yi)| (yi - logistic(&p, *zi)).powi(2)).sum()
}

fn levenberg_marquardt(mut b: Vector4<f64>, z: &[f64], y: &[f64]) -> (Vector4<f64>, f64) {
    let mut cost = sse(&b, z, y);
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        if cost == 0.0 {
            break;
        }
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (zi, yi) in z.iter().zip(y) {
            let t = b[2] * (zi - b[3]);
            let g = 1.0 / (1.0 + (-t).exp());
            let span = b[1] - b[0];
            let dg = g * (1.0 - g);
            let row = Vector4::new(1.0 - g, g, span * dg * (zi - b[3]), -span * dg * b[2]);
            let r = yi - (b[0] + span * g);
            jtj += row * row.transpose();
            jtr += row * r;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            for k in 0..4 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = b + step;
            let c = sse(&candidate, z, y);
            if c.is_finite() && c < cost {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                b = candidate;
                cost = c;
                lambda = (lambda / 10.0).max(1e-15);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (b, cost)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn fit_logistic(objective: &[f64], mos: &[f64]) -> Result<LogisticFit> {
    check_pair(objective, mos, 5)?;
    let n = objective.len() as f64;
    let mean_x = objective.iter().sum::<f64>() / n;
    let std_x = (objective.iter().map(|x| (x - mean_x).powi(2)).sum::<f64>() / n).sqrt();
    let mean_y = mos.iter().sum::<f64>() / n;
    let lo = mos.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mos.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    if std_x == 0.0 || lo == hi {
        let level = if lo == hi { lo } else { mean_y };
        return Ok(LogisticFit {
            params: [level, level, 0.0, mean_x],
            predictions: vec![level; objective.len()],
            sse: mos.iter().map(|m| (m - level).powi(2)).sum(),
            degenerate: true,
        });
    }

    let z: Vec<f64> = objective.iter().map(|x| (x - mean_x) / std_x).collect();
    let sign = if spearman(objective, mos).unwrap_or(1.0) < 0.0 { -1.0 } else { 1.0 };
    let mut sorted_z = z.clone();
    sorted_z.sort_by(f64::total_cmp);

    let mut best: Option<(Vector4<f64>, f64)> = None;
    for s in 0..STARTS {
        let center = quantile(&sorted_z, (s + 1) as f64 / (STARTS + 1) as f64);
        let start = Vector4::new(lo, hi, sign * 2.0, center);
        let (b, cost) = levenberg_marquardt(start, &z, mos);
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((b, cost));
        }
    }
    let (bz, cost) = best.expect("at least one start");
    let params = [bz[0], bz[1], bz[2] / std_x, mean_x + std_x * bz[3]];
    let bz_arr = [bz[0], bz[1], bz[2], bz[3]];
    Ok(LogisticFit {
        params,
        predictions: z.iter().map(|zi| logistic(&bz_arr, *zi)).collect(),
        sse: cost,
        degenerate: false,
    })
}
