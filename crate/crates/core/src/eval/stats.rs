use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub dof: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn two_sided(t: f64, dof: f64) -> Result<f64, EvalError> {
    if t == 0.0 {
        return Ok(1.0);
    }
    let dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| EvalError::DegenerateSample(e.to_string()))?;
    Ok((2.0 * dist.sf(t.abs())).clamp(0.0, 1.0))
}

/// Welch's unequal-variance two-sample t-test, two-sided.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, EvalError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(EvalError::DegenerateSample(format!(
            "samples of size {} and {}; need at least 2 each",
            a.len(),
            b.len()
        )));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let sa = va / a.len() as f64;
    let sb = vb / b.len() as f64;
    let se2 = sa + sb;
    if se2.is_nan() || se2 <= 0.0 {
        return Err(EvalError::DegenerateSample("both samples have zero variance".into()));
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2
        / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    Ok(TTestResult {
        t_statistic: t,
        p_value: two_sided(t, dof)?,
        dof,
    })
}

/// Paired t-test on `a[i] - b[i]`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(EvalError::DegenerateSample(format!("{} pairs; need at least 2", a.len())));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (md, vd) = mean_var(&d);
    if vd.is_nan() || vd <= 0.0 {
        return Err(EvalError::DegenerateSample("differences have zero variance".into()));
    }
    let n = d.len() as f64;
    let t = md / (vd / n).sqrt();
    let dof = n - 1.0;
    Ok(TTestResult {
        t_statistic: t,
        p_value: two_sided(t, dof)?,
        dof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_derived_case() {
        let r = t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((r.t_statistic + 1.0).abs() < 1e-12);
        assert!((r.dof - 8.0).abs() < 1e-12);
        assert!((r.p_value - 0.3466).abs() < 1e-3, "{}", r.p_value);
    }

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.9, 0.4, 0.7];
        let r = t_test(&a, &a).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn degenerate_samples() {
        assert!(matches!(t_test(&[1.0, 1.0], &[1.0, 1.0]), Err(EvalError::DegenerateSample(_))));
        assert!(matches!(t_test(&[1.0], &[1.0, 2.0]), Err(EvalError::DegenerateSample(_))));
        assert!(matches!(paired_t_test(&[1.0, 2.0], &[0.0, 1.0]), Err(EvalError::DegenerateSample(_))));
    }

    #[test]
    fn paired_matches_one_sample_reference() {
        // differences {1, 2, 3}: mean 2, sd 1, t = 2 / (1 / sqrt 3)
        let r = paired_t_test(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r.t_statistic - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.dof, 2.0);
        assert!((r.p_value - 0.07417).abs() < 1e-4, "{}", r.p_value);
    }

    proptest! {
        #[test]
        fn swapping_negates_t(
            a in prop::collection::vec(-10.0f64..10.0, 2..20),
            b in prop::collection::vec(-10.0f64..10.0, 2..20),
        ) {
            if let (Ok(x), Ok(y)) = (t_test(&a, &b), t_test(&b, &a)) {
                prop_assert!((x.t_statistic + y.t_statistic).abs() < 1e-9);
                prop_assert!((x.p_value - y.p_value).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&x.p_value));
            }
        }
    }
}
