//! Convergence and distribution diagnostics.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::statistics::Statistics;

use crate::error::{Error, Result};

/// Asymptotic Kolmogorov-Smirnov critical value at level 0.01, times √R.
pub const KS_CRITICAL_01: f64 = 1.628;

fn input(msg: &str) -> Error {
    Error::Usage(msg.to_string())
}

/// Mean of `(s - target)²`.
pub fn mse_vs_target(samples: &[f64], target: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(input("mse of an empty sample"));
    }
    Ok(samples.iter().map(|s| (s - target) * (s - target)).sum::<f64>() / samples.len() as f64)
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` with fewer than three points, where it is trivially 1.
    pub r_squared: Option<f64>,
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(input("log-log fit needs at least two (x, y) pairs"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(input("log-log fit needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().mean();
    let my = ly.iter().mean();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(input("log-log fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let r_squared = (xs.len() >= 3).then(|| if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) });
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub stat: f64,
    pub critical_01: f64,
    pub pass: bool,
}

fn centred_normal(variance: f64, samples: &[f64]) -> Result<Option<Normal>> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(input("variance must be finite and non-negative"));
    }
    if variance == 0.0 {
        return if samples.iter().all(|&s| s == 0.0) {
            Ok(None)
        } else {
            Err(input("zero variance with nonzero samples"))
        };
    }
    Ok(Some(Normal::new(0.0, variance.sqrt()).expect("positive standard deviation")))
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// One-sample KS statistic against `N(0, variance)` with the asymptotic
/// α = 0.01 gate `1.628/√R`.
pub fn ks_statistic(samples: &[f64], variance: f64) -> Result<KsResult> {
    if samples.len() < 20 {
        return Err(input("KS test needs at least 20 samples"));
    }
    let r = samples.len() as f64;
    let critical_01 = KS_CRITICAL_01 / r.sqrt();
    let Some(dist) = centred_normal(variance, samples)? else {
        return Ok(KsResult {
            stat: 0.0,
            critical_01,
            pass: true,
        });
    };
    let stat = sorted(samples)
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / r).max((i + 1) as f64 / r - f)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        stat,
        critical_01,
        pass: stat < critical_01,
    })
}

/// `(theoretical, empirical)` quantile pairs at plotting positions
/// `(i - 0.5)/R`.
pub fn qq_points(samples: &[f64], variance: f64) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(input("QQ plot of an empty sample"));
    }
    let r = samples.len() as f64;
    let dist = centred_normal(variance, samples)?;
    Ok(sorted(samples)
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let p = (i as f64 + 0.5) / r;
            (dist.map_or(0.0, |d| d.inverse_cdf(p)), x)
        })
        .collect())
}

/// Empirical quantile function of sorted data at level `p ∈ [0, 1]`, linear
/// between the plotting positions `(i + 0.5)/n`.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (p * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// 1-D Wasserstein-1 distance: mean absolute difference of the sorted
/// samples. Unequal sizes resample the larger set at the smaller set's
/// plotting positions.
pub fn wasserstein1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(input("W1 of an empty sample"));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let (small, large) = if sa.len() <= sb.len() { (sa, sb) } else { (sb, sa) };
    let n = small.len();
    let total: f64 = if large.len() == n {
        small.iter().zip(&large).map(|(x, y)| (x - y).abs()).sum()
    } else {
        small
            .iter()
            .enumerate()
            .map(|(i, x)| (x - quantile(&large, (i as f64 + 0.5) / n as f64)).abs())
            .sum()
    };
    Ok(total / n as f64)
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let mean = xs.iter().mean();
    let se = if xs.len() > 1 { (xs.iter().variance() / xs.len() as f64).sqrt() } else { f64::NAN };
    (mean, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn normal_quantiles(r: usize, sd: f64) -> Vec<f64> {
        let d = Normal::new(0.0, sd).unwrap();
        (0..r).map(|i| d.inverse_cdf((i as f64 + 0.5) / r as f64)).collect()
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse_vs_target(&[3.0, 3.0], 3.0).unwrap(), 0.0);
        assert_eq!(mse_vs_target(&[0.0, 2.0], 1.0).unwrap(), 1.0);
        assert!(mse_vs_target(&[], 1.0).is_err());
    }

    #[test]
    fn slope_examples() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let fit = loglog_slope(&xs, &xs.map(|x| 3.0 / x)).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.r_squared.unwrap() - 1.0).abs() < 1e-12);
        let fit = loglog_slope(&xs, &[2.0; 4]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert!(loglog_slope(&[1.0, 2.0], &[1.0, 0.5]).unwrap().r_squared.is_none());
        assert!(loglog_slope(&[1.0, -2.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn ks_examples() {
        let q = normal_quantiles(250, 2.0);
        let ks = ks_statistic(&q, 4.0).unwrap();
        assert!((ks.stat - 0.5 / 250.0).abs() < 1e-9, "{}", ks.stat);
        assert!(ks.pass);
        let shifted: Vec<f64> = q.iter().map(|v| v + 20.0).collect();
        assert!(!ks_statistic(&shifted, 4.0).unwrap().pass);
        assert!(ks_statistic(&q[..10], 4.0).is_err());
        assert!(ks_statistic(&q, 0.0).is_err());
    }

    #[test]
    fn qq_examples() {
        let q = normal_quantiles(100, 1.5);
        for (t, e) in qq_points(&q, 2.25).unwrap() {
            assert!((t - e).abs() < 1e-12);
        }
        let flat = qq_points(&[0.7; 30], 1.0).unwrap();
        assert!(flat.iter().all(|&(_, e)| e == 0.7));
    }

    #[test]
    fn w1_examples() {
        assert_eq!(wasserstein1_1d(&[1.0, 5.0, 2.0], &[5.0, 2.0, 1.0]).unwrap(), 0.0);
        assert_eq!(wasserstein1_1d(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(wasserstein1_1d(&[0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!(wasserstein1_1d(&[], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn w1_is_a_metric(
            a in proptest::collection::vec(-10.0f64..10.0, 12),
            b in proptest::collection::vec(-10.0f64..10.0, 12),
            c in proptest::collection::vec(-10.0f64..10.0, 12),
        ) {
            let ab = wasserstein1_1d(&a, &b).unwrap();
            prop_assert!((ab - wasserstein1_1d(&b, &a).unwrap()).abs() <= 1e-12);
            let ac = wasserstein1_1d(&a, &c).unwrap();
            let cb = wasserstein1_1d(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }

        #[test]
        fn ks_ignores_order(mut xs in proptest::collection::vec(-3.0f64..3.0, 20..60)) {
            let a = ks_statistic(&xs, 1.3).unwrap();
            xs.reverse();
            prop_assert_eq!(a, ks_statistic(&xs, 1.3).unwrap());
        }

        #[test]
        fn slope_is_scale_equivariant(c in 0.01f64..100.0) {
            let xs = [50.0, 100.0, 200.0, 400.0];
            let ys = [0.3, 0.17, 0.07, 0.04];
            let a = loglog_slope(&xs, &ys).unwrap();
            let b = loglog_slope(&xs, &ys.map(|y| c * y)).unwrap();
            prop_assert!((a.slope - b.slope).abs() <= 1e-12);
        }
    }
}
