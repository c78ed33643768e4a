mod common;

use common::{focal_oracle, rng, KRUSKAL_CASES};
use pcqa_core::stats::logistic::logistic;
use pcqa_core::stats::{
    correlation_report, fit_logistic, focal_bce, kruskal_wallis, linear_fit_compare, mos_with_ci, pearson, spearman,
};
use rand::Rng;

#[test]
fn kruskal_wallis_matches_reference_values() {
    for (i, (groups, h, p)) in KRUSKAL_CASES.iter().enumerate() {
        let r = kruskal_wallis(groups).unwrap();
        assert!((r.h - h).abs() < 1e-9, "case {i}: H {} vs {h}", r.h);
        assert!((r.p_value - p).abs() < 1e-9, "case {i}: p {} vs {p}", r.p_value);
        assert_eq!(r.dof, groups.len() - 1);
    }
}

#[test]
fn kruskal_wallis_is_rank_based() {
    let (groups, _, _) = KRUSKAL_CASES[4];
    let base = kruskal_wallis(groups).unwrap();
    let transformed: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| v.exp() + 3.0).collect()).collect();
    let refs: Vec<&[f64]> = transformed.iter().map(Vec::as_slice).collect();
    let t = kruskal_wallis(&refs).unwrap();
    assert!((t.h - base.h).abs() < 1e-12);
}

#[test]
fn mos_of_one_to_five() {
    let (m, ci) = mos_with_ci(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert_eq!(m, 3.0);
    assert!((ci - 2.776 * 1.5811 / 5f64.sqrt()).abs() < 1e-3);
}

#[test]
fn correlation_invariances() {
    let mut r = rng(51);
    let x: Vec<f64> = (0..40).map(|_| r.random_range(0.0..10.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| v * 0.3 + r.random_range(0.0..2.0)).collect();
    let p = pearson(&x, &y).unwrap();
    let s = spearman(&x, &y).unwrap();
    let affine: Vec<f64> = x.iter().map(|v| 4.0 * v - 7.0).collect();
    let mono: Vec<f64> = x.iter().map(|v| v.powi(3) + v.exp()).collect();
    assert!((pearson(&affine, &y).unwrap() - p).abs() < 1e-12);
    assert_eq!(spearman(&mono, &y).unwrap(), s);
}

#[test]
fn outlier_ratio_shrinks_as_intervals_grow() {
    let mut r = rng(52);
    let m: Vec<f64> = (0..30).map(|_| r.random_range(1.0..5.0)).collect();
    let p: Vec<f64> = m.iter().map(|v| v + r.random_range(-1.0..1.0)).collect();
    let ci: Vec<f64> = (0..30).map(|_| r.random_range(0.05..0.5)).collect();
    let mut last = f64::INFINITY;
    for scale in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let scaled: Vec<f64> = ci.iter().map(|c| c * scale).collect();
        let or = correlation_report(&p, &m, &scaled).unwrap().or_;
        assert!(or <= last);
        last = or;
    }
}

#[test]
fn logistic_predictions_ignore_affine_rescaling() {
    let truth = [1.0, 4.8, 1.1, 0.3];
    let mut r = rng(53);
    let x: Vec<f64> = (0..25).map(|_| r.random_range(-3.0..3.0)).collect();
    let y: Vec<f64> = x.iter().map(|&v| logistic(&truth, v) + r.random_range(-0.2..0.2)).collect();
    let a = fit_logistic(&x, &y).unwrap();
    let scaled: Vec<f64> = x.iter().map(|v| 12.5 * v + 40.0).collect();
    let b = fit_logistic(&scaled, &y).unwrap();
    let rmse = |f: &pcqa_core::stats::LogisticFit| (f.sse / y.len() as f64).sqrt();
    assert!((rmse(&a) - rmse(&b)).abs() < 1e-6);
}

#[test]
fn linear_comparison_recovers_exact_line() {
    let a = [0.1, 0.3, 0.35, 0.8, 0.95, 0.5];
    let b: Vec<f64> = a.iter().map(|v| 0.5 * v + 0.1).collect();
    let r = linear_fit_compare(&a, &b, &[0.01; 6]).unwrap();
    assert!((r.slope - 0.5).abs() < 1e-12 && (r.intercept - 0.1).abs() < 1e-12);
    assert!(r.summary.rmse < 1e-12);
}

#[test]
fn focal_loss_matches_transcription() {
    let mut r = rng(54);
    for _ in 0..20 {
        let n = r.random_range(1..200);
        let x: Vec<bool> = (0..n).map(|_| r.random()).collect();
        let p: Vec<f64> = (0..n).map(|_| r.random_range(0.0..=1.0)).collect();
        let (alpha, gamma) = (r.random_range(0.0..1.0), r.random_range(0.0..5.0));
        let got = focal_bce(&x, &p, alpha, gamma).unwrap();
        assert!((got - focal_oracle(&x, &p, alpha, gamma)).abs() < 1e-9);
        assert!(got >= 0.0);
    }
    assert!((focal_bce(&[true], &[0.5], 0.7, 2.0).unwrap() - 0.7 * 0.25 * 2f64.ln()).abs() < 1e-15);
}
