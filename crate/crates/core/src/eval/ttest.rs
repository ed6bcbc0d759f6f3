//! Paired two-tailed Student's t-test over per-query scores.

use std::collections::BTreeMap;

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct TTestOutcome {
    pub t: f64,
    pub p: f64,
    /// Set when the paired differences have zero variance; `p` is then 1.0
    /// for a zero mean and 0.0 otherwise, by convention.
    pub degenerate_variance: bool,
}

/// Classic paired t with n−1 degrees of freedom; the two-tailed p-value
/// comes from the regularized incomplete beta function
/// `p = I_x(df/2, 1/2)` with `x = df / (df + t²)`.
pub fn paired_ttest(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
) -> Result<TTestOutcome> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(Error::MismatchedQids);
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid("paired t-test needs at least 2 queries"));
    }

    let diffs: Vec<f64> = a.values().zip(b.values()).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);

    if var == 0.0 {
        return Ok(if mean == 0.0 {
            TTestOutcome {
                t: 0.0,
                p: 1.0,
                degenerate_variance: true,
            }
        } else {
            TTestOutcome {
                t: if mean > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY },
                p: 0.0,
                degenerate_variance: true,
            }
        });
    }

    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let df = n as f64 - 1.0;
    let p = beta_reg(df / 2.0, 0.5, df / (df + t * t));
    Ok(TTestOutcome {
        t,
        p,
        degenerate_variance: false,
    })
}

/// Two-tailed p for a given t statistic and degrees of freedom; exposed so
/// reports can annotate externally produced statistics.
pub fn two_tailed_p(t: f64, df: f64) -> f64 {
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(values: &[f64]) -> BTreeMap<String, f64> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (format!("q{i:02}"), v))
            .collect()
    }

    #[test]
    fn identical_samples_give_p_one() {
        let a = scores(&[0.1, 0.5, 0.9, 0.3]);
        let out = paired_ttest(&a, &a).unwrap();
        assert_eq!(out.p, 1.0);
        assert_eq!(out.t, 0.0);
        assert!(out.degenerate_variance);
    }

    #[test]
    fn constant_nonzero_differences_flagged() {
        let a = scores(&[1.0, 2.0, 3.0, 4.0]);
        let b = scores(&[0.0, 1.0, 2.0, 3.0]);
        let out = paired_ttest(&a, &b).unwrap();
        assert_eq!(out.p, 0.0);
        assert!(out.degenerate_variance);
        assert!(out.t.is_infinite() && out.t > 0.0);
    }

    #[test]
    fn mismatched_qids_error() {
        let a = scores(&[1.0, 2.0]);
        let mut b = scores(&[1.0, 2.0]);
        let moved = b.remove("q01").unwrap();
        b.insert("q99".into(), moved);
        assert!(paired_ttest(&a, &b).is_err());
    }

    #[test]
    fn antisymmetric_in_t() {
        let a = scores(&[0.9, 0.7, 0.8, 0.6, 0.75]);
        let b = scores(&[0.5, 0.6, 0.65, 0.7, 0.55]);
        let ab = paired_ttest(&a, &b).unwrap();
        let ba = paired_ttest(&b, &a).unwrap();
        assert!((ab.t + ba.t).abs() < 1e-12);
        assert!((ab.p - ba.p).abs() < 1e-12);
    }

    #[test]
    fn published_critical_values() {
        // t-table anchors for df = 9: two-tailed p at the classic critical
        // points.
        assert!((two_tailed_p(2.2621571628, 9.0) - 0.05).abs() < 1e-6);
        assert!((two_tailed_p(1.8331129327, 9.0) - 0.10).abs() < 1e-6);
        assert!((two_tailed_p(3.2498355416, 9.0) - 0.01).abs() < 1e-6);
    }
}
