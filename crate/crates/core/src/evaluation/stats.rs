//! Student-t quantiles, confidence intervals and the unpaired equivalence test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Display level for result intervals.
pub const DISPLAY_LEVEL: f64 = 0.95;
/// Level of the equivalence test between two methods.
pub const EQUIVALENCE_LEVEL: f64 = 0.90;

/// Quantile of Student's t with `df` degrees of freedom, `p` in (0, 1).
///
/// Inverts `P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)` by bisection on the
/// beta argument.
pub fn t_quantile(p: f64, df: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidConfig(format!("t quantile: p = {p} outside (0, 1)")));
    }
    if !(df > 0.0) || df.is_nan() {
        return Err(Error::InvalidConfig(format!("t quantile: df = {df}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let two_tail = 2.0 * p.min(1.0 - p);
    // I_x is increasing in x; find x with I_x = two_tail.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(df / 2.0, 0.5, mid) < two_tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let t = (df * (1.0 - x) / x).sqrt();
    Ok(if p > 0.5 { t } else { -t })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("confidence level {level} outside (0, 1)")))
    }
}

/// Student-t interval on the mean.
pub fn confidence_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!("interval needs 2 values, got {}", values.len())));
    }
    let n = values.len() as f64;
    let m = mean(values);
    let half = t_quantile((1.0 + level) / 2.0, n - 1.0)? * (sample_variance(values) / n).sqrt();
    Ok((m - half, m + half))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equivalent,
    Different,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub df: f64,
    pub verdict: Verdict,
}

/// Welch interval on `mean(a) - mean(b)`; the methods are equivalent when it
/// contains zero.
pub fn unpaired_ttest(a: &[f64], b: &[f64], level: f64) -> Result<EquivalenceVerdict> {
    check_level(level)?;
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!("t-test needs 2 values per side, got {} and {}", a.len(), b.len())));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_variance(a) / na, sample_variance(b) / nb);
    let mean_diff = mean(a) - mean(b);
    let se = (va + vb).sqrt();
    let (half, df) = if se > 0.0 {
        let df = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
        (t_quantile((1.0 + level) / 2.0, df)? * se, df)
    } else {
        (0.0, na + nb - 2.0)
    };
    let (ci_low, ci_high) = (mean_diff - half, mean_diff + half);
    let verdict = if ci_low <= 0.0 && 0.0 <= ci_high {
        Verdict::Equivalent
    } else {
        Verdict::Different
    };
    Ok(EquivalenceVerdict {
        mean_diff,
        ci_low,
        ci_high,
        df,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_table_values() {
        // Two-sided critical values from standard tables.
        let table = [
            (0.975, 1.0, 12.706204736),
            (0.975, 2.0, 4.302652730),
            (0.975, 5.0, 2.570581836),
            (0.975, 9.0, 2.262157163),
            (0.975, 30.0, 2.042272456),
            (0.95, 9.0, 1.833112933),
            (0.95, 1.0, 6.313751515),
            (0.995, 10.0, 3.169272673),
        ];
        for (p, df, want) in table {
            let got = t_quantile(p, df).unwrap();
            assert!((got - want).abs() < 1e-8, "t({p}, {df}) = {got}, want {want}");
        }
        assert!((t_quantile(0.025, 5.0).unwrap() + 2.570581836).abs() < 1e-8);
        assert_eq!(t_quantile(0.5, 3.0).unwrap(), 0.0);
        assert!(t_quantile(1.0, 3.0).is_err());
    }

    #[test]
    fn interval_examples() {
        let (lo, hi) = confidence_interval(&[0.0, 1.0], 0.95).unwrap();
        assert!((lo - (0.5 - 6.353102368)).abs() < 1e-8);
        assert!((hi - (0.5 + 6.353102368)).abs() < 1e-8);
        assert_eq!(confidence_interval(&[0.3; 4], 0.95).unwrap(), (0.3, 0.3));
        let v = [0.1, 0.4, 0.35, 0.8];
        let (a, b) = confidence_interval(&v, 0.90).unwrap();
        let (c, d) = confidence_interval(&v, 0.95).unwrap();
        assert!(c < a && b < d);
        assert!(confidence_interval(&[1.0], 0.95).is_err());
    }

    #[test]
    fn ttest_examples() {
        let a = [0.8, 0.82, 0.79, 0.81];
        let same = unpaired_ttest(&a, &a, 0.9).unwrap();
        assert_eq!(same.mean_diff, 0.0);
        assert_eq!(same.verdict, Verdict::Equivalent);

        let hi: Vec<f64> = (0..10).map(|i| 0.9 + 1e-3 * i as f64).collect();
        let lo: Vec<f64> = (0..10).map(|i| 0.1 - 1e-3 * i as f64).collect();
        let v = unpaired_ttest(&hi, &lo, 0.9).unwrap();
        assert_eq!(v.verdict, Verdict::Different);
        let w = unpaired_ttest(&lo, &hi, 0.9).unwrap();
        assert_eq!(w.verdict, v.verdict);
        assert!((w.ci_low + v.ci_high).abs() < 1e-12);
        assert!((w.ci_high + v.ci_low).abs() < 1e-12);
    }

    #[test]
    fn welch_df_equal_variances() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        let v = unpaired_ttest(&a, &b, 0.9).unwrap();
        assert!((v.df - 4.0).abs() < 1e-12);
        assert!((v.mean_diff + 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_sides() {
        let v = unpaired_ttest(&[1.0, 1.0], &[0.5, 0.5], 0.9).unwrap();
        assert_eq!((v.ci_low, v.ci_high), (0.5, 0.5));
        assert_eq!(v.verdict, Verdict::Different);
    }
}
