use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Two-sided 97.5% Student-t quantile with `dof` degrees of freedom.
pub fn t_quantile_975(dof: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

/// Mean opinion score and the half-width of its 95% confidence interval.
pub fn mos_with_ci(scores: &[f64]) -> Result<(f64, f64)> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "a confidence interval needs at least 2 scores, got {n}"
        )));
    }
    let nf = n as f64;
    let mos = scores.iter().sum::<f64>() / nf;
    let var = scores.iter().map(|s| (s - mos).powi(2)).sum::<f64>() / (nf - 1.0);
    let ci = if var == 0.0 {
        0.0
    } else {
        t_quantile_975(nf - 1.0) * var.sqrt() / nf.sqrt()
    };
    Ok((mos, ci))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanimous() {
        assert_eq!(mos_with_ci(&[5.0; 4]).unwrap(), (5.0, 0.0));
    }

    #[test]
    fn one_to_five() {
        let (m, ci) = mos_with_ci(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(m, 3.0);
        assert!((ci - 1.963).abs() < 1e-3, "{ci}");
    }

    #[test]
    fn single_score_rejected() {
        assert!(mos_with_ci(&[3.0]).is_err());
    }

    #[test]
    fn t_quantile_reference_values() {
        // Standard table values.
        assert!((t_quantile_975(4.0) - 2.776_445).abs() < 1e-5);
        assert!((t_quantile_975(16.0) - 2.119_905).abs() < 1e-5);
    }
}
