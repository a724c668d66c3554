use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

/// Welch's unequal-variance t test between two samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    /// `None` when both samples have zero variance.
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p: f64,
    pub significant: bool,
    pub degenerate: bool,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    if x.iter().all(|&v| v == x[0]) {
        return (x[0], 0.0);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-tailed Welch test with Welch–Satterthwaite degrees of freedom.
///
/// If both samples have zero variance the statistic is undefined; the
/// result is flagged degenerate with `p = 1` for equal means and `p = 0`
/// otherwise.
pub fn welch_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid(format!(
            "welch_test needs two samples of equal length ≥ 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sa = va / na;
    let sb = vb / nb;
    let se2 = sa + sb;
    if se2 == 0.0 {
        let p = if ma == mb { 1.0 } else { 0.0 };
        return Ok(WelchTest {
            t: None,
            df: None,
            p,
            significant: p < SIGNIFICANCE_LEVEL,
            degenerate: true,
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(WelchTest {
        t: Some(t),
        df: Some(df),
        p,
        significant: p < SIGNIFICANCE_LEVEL,
        degenerate: false,
    })
}

/// Median of a non-empty sample; the mean of the two middle values for
/// even lengths.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let r = welch_test(&[0.5, 0.6, 0.7], &[0.5, 0.6, 0.7]).unwrap();
        assert_eq!(r.t, Some(0.0));
        assert_eq!(r.p, 1.0);
        assert!(!r.significant);
    }

    #[test]
    fn degenerate_conventions() {
        let r = welch_test(&[0.0; 3], &[1.0; 3]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p, 0.0);
        let r = welch_test(&[0.2; 3], &[0.2; 3]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn bad_lengths() {
        assert!(welch_test(&[1.0], &[1.0]).is_err());
        assert!(welch_test(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
