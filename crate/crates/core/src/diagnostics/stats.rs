use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Smallest sample accepted by the normality test.
pub const KS_MIN_SAMPLES: usize = 100;

/// Kolmogorov–Smirnov test against the standard normal at the 5% level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KSResult {
    pub statistic: f64,
    pub n: usize,
    pub threshold: f64,
    pub passed: bool,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn check_samples(samples: &[f64], needed: usize) -> Result<()> {
    if samples.len() < needed {
        return Err(Error::SampleTooSmall { needed, got: samples.len() });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("samples contain non-finite values".into()));
    }
    Ok(())
}

pub fn ks_against_std_normal(samples: &[f64]) -> Result<KSResult> {
    check_samples(samples, KS_MIN_SAMPLES)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let phi = std_normal_cdf(x);
        d.max((i + 1) as f64 / n - phi).max(phi - i as f64 / n)
    });
    let threshold = 1.358 / n.sqrt();
    Ok(KSResult { statistic, n: sorted.len(), threshold, passed: statistic <= threshold })
}

/// Sample moments with delete-one jackknife standard errors. `kurtosis` is
/// the raw standardized fourth moment (3 for a normal law).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_skewness: f64,
    pub se_kurtosis: f64,
}

impl MomentSummary {
    pub fn excess_kurtosis(&self) -> f64 {
        self.kurtosis - 3.0
    }
}

/// Mean and its standard error `s/√N`.
pub fn mean_with_se(samples: &[f64]) -> Result<(f64, f64)> {
    check_samples(samples, 2)?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

struct Central {
    n: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Central {
    fn variance(&self) -> f64 {
        self.m2 * self.n / (self.n - 1.0)
    }
    fn skewness(&self) -> f64 {
        self.m3 / self.m2.powf(1.5)
    }
    fn kurtosis(&self) -> f64 {
        self.m4 / (self.m2 * self.m2)
    }
}

pub fn summarize(samples: &[f64]) -> Result<MomentSummary> {
    check_samples(samples, 3)?;
    let n = samples.len();
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let y: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let (s1, s2, s3, s4) = y.iter().fold((0.0, 0.0, 0.0, 0.0), |(a, b, c, d), &v| {
        let v2 = v * v;
        (a + v, b + v2, c + v2 * v, d + v2 * v2)
    });
    let full = central(nf, s1, s2, s3, s4);
    if !(full.m2 > 0.0) {
        return Err(Error::InvalidParameter("samples have zero variance".into()));
    }

    // delete-one statistics from the centered power sums, O(N) overall
    let k = nf - 1.0;
    let mut acc = [[0.0f64; 2]; 4];
    let mut stats = [0.0f64; 4];
    let mut loo = Vec::with_capacity(n);
    for &v in &y {
        let v2 = v * v;
        let c = central(k, s1 - v, s2 - v2, s3 - v2 * v, s4 - v2 * v2);
        stats[0] = mean + (s1 - v) / k;
        stats[1] = c.variance();
        stats[2] = c.skewness();
        stats[3] = c.kurtosis();
        loo.push(stats);
        for (a, s) in acc.iter_mut().zip(stats) {
            a[0] += s;
        }
    }
    for a in acc.iter_mut() {
        a[0] /= nf;
    }
    for s in &loo {
        for (a, v) in acc.iter_mut().zip(s) {
            a[1] += (v - a[0]).powi(2);
        }
    }
    let se = |i: usize| (acc[i][1] * (nf - 1.0) / nf).sqrt();

    Ok(MomentSummary {
        n,
        mean,
        variance: full.variance(),
        skewness: full.skewness(),
        kurtosis: full.kurtosis(),
        se_mean: se(0),
        se_variance: se(1),
        se_skewness: se(2),
        se_kurtosis: se(3),
    })
}

/// Central moments of a sample from its power sums about a fixed origin.
fn central(n: f64, s1: f64, s2: f64, s3: f64, s4: f64) -> Central {
    let m = s1 / n;
    let (r2, r3, r4) = (s2 / n, s3 / n, s4 / n);
    Central {
        n,
        m2: r2 - m * m,
        m3: r3 - 3.0 * m * r2 + 2.0 * m.powi(3),
        m4: r4 - 4.0 * m * r3 + 6.0 * m * m * r2 - 3.0 * m.powi(4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_central(x: &[f64]) -> (f64, f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let c = |p: i32| x.iter().map(|v| (v - m).powi(p)).sum::<f64>() / n;
        (c(2), c(3), c(4))
    }

    #[test]
    fn constant_sample_fails_ks() {
        let r = ks_against_std_normal(&vec![0.0; 200]).unwrap();
        assert!(r.statistic >= 0.5);
        assert!(!r.passed);
    }

    #[test]
    fn ks_requires_enough_samples() {
        assert!(matches!(ks_against_std_normal(&[0.0; 99]), Err(Error::SampleTooSmall { needed: 100, got: 99 })));
    }

    #[test]
    fn ks_statistic_of_two_points_by_hand() {
        let xs: Vec<f64> = (0..100).map(|i| if i < 50 { -10.0 } else { 10.0 }).collect();
        let r = ks_against_std_normal(&xs).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-12);
    }

    #[test]
    fn moments_match_direct_formulas() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37 % 11) as f64).sqrt() + 0.1 * i as f64).collect();
        let s = summarize(&xs).unwrap();
        let (m2, m3, m4) = naive_central(&xs);
        assert!((s.variance - m2 * 50.0 / 49.0).abs() < 1e-12);
        assert!((s.skewness - m3 / m2.powf(1.5)).abs() < 1e-10);
        assert!((s.kurtosis - m4 / (m2 * m2)).abs() < 1e-10);
    }

    #[test]
    fn jackknife_matches_explicit_leave_one_out() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 13 % 7) as f64 - 3.0) * (1.0 + 0.05 * i as f64)).collect();
        let s = summarize(&xs).unwrap();
        let n = xs.len() as f64;
        let loo: Vec<f64> = (0..xs.len())
            .map(|i| {
                let rest: Vec<f64> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
                let (m2, _, m4) = naive_central(&rest);
                m4 / (m2 * m2)
            })
            .collect();
        let bar = loo.iter().sum::<f64>() / n;
        let se = (loo.iter().map(|v| (v - bar).powi(2)).sum::<f64>() * (n - 1.0) / n).sqrt();
        assert!((s.se_kurtosis - se).abs() < 1e-9 * se.max(1.0));
        // jackknife SE of the mean reduces to s/√N
        let (_, se_mean) = mean_with_se(&xs).unwrap();
        assert!((s.se_mean - se_mean).abs() < 1e-12);
    }
}
