//! Circular statistics of phase-estimate errors.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::noise::rng_from_seed;

/// Sharpness of the one-photon canonical posterior `(1 + cos Δ)/2π`.
pub const CANONICAL_SHARPNESS: f64 = 0.5;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Circular mean `⟨e^{iΔ}⟩` as `(re, im)`, with compensated summation.
pub fn circular_mean(angles: &[f64]) -> Result<(f64, f64)> {
    if angles.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut c = CompensatedSum::default();
    let mut s = CompensatedSum::default();
    for a in angles {
        let (sin, cos) = a.sin_cos();
        c.add(cos);
        s.add(sin);
    }
    let n = angles.len() as f64;
    Ok((c.value() / n, s.value() / n))
}

/// `S = |⟨e^{iΔ}⟩|`.
pub fn sharpness(angles: &[f64]) -> Result<f64> {
    let (re, im) = circular_mean(angles)?;
    Ok(re.hypot(im))
}

/// Holevo variance `S⁻² - 1`; `+∞` when the sample carries no phase
/// information at all.
pub fn holevo_variance(angles: &[f64]) -> Result<f64> {
    Ok(holevo_from_sharpness(sharpness(angles)?))
}

pub fn holevo_from_sharpness(s: f64) -> f64 {
    if s <= f64::EPSILON {
        f64::INFINITY
    } else {
        (s * s).recip() - 1.0
    }
}

/// Intrinsic phase-estimation efficiency `F = S / S_canonical`.
pub fn intrinsic_efficiency(s: f64) -> f64 {
    s / CANONICAL_SHARPNESS
}

/// Delta-method standard errors of `S` and `V_H`.
pub fn sharpness_standard_error(angles: &[f64]) -> Result<(f64, f64)> {
    let (re, im) = circular_mean(angles)?;
    let s = re.hypot(im);
    let n = angles.len() as f64;
    if n < 2.0 || s <= f64::EPSILON {
        return Ok((f64::NAN, f64::NAN));
    }
    let dir = im.atan2(re);
    let mut m = CompensatedSum::default();
    let mut m2 = CompensatedSum::default();
    for a in angles {
        let p = (a - dir).cos();
        m.add(p);
        m2.add(p * p);
    }
    let mean = m.value() / n;
    let var = (m2.value() / n - mean * mean) * n / (n - 1.0);
    let se_s = (var.max(0.0) / n).sqrt();
    let se_v = 2.0 * se_s / (s * s * s);
    Ok((se_s, se_v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolevoSummary {
    pub n: usize,
    pub sharpness: f64,
    #[serde(with = "crate::serde_float")]
    pub sharpness_se: f64,
    #[serde(with = "crate::serde_float")]
    pub holevo: f64,
    #[serde(with = "crate::serde_float")]
    pub holevo_se: f64,
    /// 95% bootstrap percentile interval, when computed.
    #[serde(with = "crate::serde_float::option_pair")]
    pub holevo_ci: Option<(f64, f64)>,
    pub efficiency: f64,
    #[serde(with = "crate::serde_float")]
    pub efficiency_se: f64,
}

pub fn summarize(angles: &[f64], bootstrap: Option<(usize, u64)>) -> Result<HolevoSummary> {
    let s = sharpness(angles)?;
    let (se_s, se_v) = sharpness_standard_error(angles)?;
    let holevo_ci = match bootstrap {
        Some((resamples, seed)) if resamples > 0 => Some(bootstrap_holevo_ci(angles, resamples, seed)?),
        _ => None,
    };
    Ok(HolevoSummary {
        n: angles.len(),
        sharpness: s,
        sharpness_se: se_s,
        holevo: holevo_from_sharpness(s),
        holevo_se: se_v,
        holevo_ci,
        efficiency: intrinsic_efficiency(s),
        efficiency_se: se_s / CANONICAL_SHARPNESS,
    })
}

/// 95% percentile bootstrap interval of the Holevo variance.
pub fn bootstrap_holevo_ci(angles: &[f64], resamples: usize, seed: u64) -> Result<(f64, f64)> {
    if angles.is_empty() {
        return Err(Error::EmptySample);
    }
    let trig: Vec<(f64, f64)> = angles.iter().map(|a| a.sin_cos()).map(|(s, c)| (c, s)).collect();
    let n = trig.len();
    let mut rng = rng_from_seed(seed);
    let mut vals: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut c = CompensatedSum::default();
            let mut s = CompensatedSum::default();
            for _ in 0..n {
                let (cc, ss) = trig[rng.random_range(0..n)];
                c.add(cc);
                s.add(ss);
            }
            holevo_from_sharpness(c.value().hypot(s.value()) / n as f64)
        })
        .collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| vals[((p * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Ok((q(0.025), q(0.975)))
}

/// Two-sided p-value for equality of two Holevo variances from independent
/// samples (normal approximation with delta-method errors).
pub fn holevo_two_sample_p(a: &HolevoSummary, b: &HolevoSummary) -> f64 {
    let se = a.holevo_se.hypot(b.holevo_se);
    if !(se > 0.0) {
        return f64::NAN;
    }
    let z = (a.holevo - b.holevo) / se;
    let normal = Normal::standard();
    2.0 * (1.0 - normal.cdf(z.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Inverse CDF of `(1 + cos x)/2π` on (-π, π] by bisection.
    fn canonical_inverse_cdf(p: f64) -> f64 {
        let cdf = |x: f64| (x + PI + x.sin()) / (2.0 * PI);
        let (mut lo, mut hi) = (-PI, PI);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn delta_distribution_has_zero_variance() {
        assert_eq!(holevo_variance(&[0.0; 100]).unwrap(), 0.0);
        assert_eq!(holevo_variance(&[1.3; 10]).unwrap(), 0.0);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(matches!(holevo_variance(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn canonical_posterior_has_holevo_variance_three() {
        let n = 200_000;
        let mut rng = rng_from_seed(11);
        let angles: Vec<f64> =
            (0..n).map(|_| canonical_inverse_cdf(rng.random::<f64>())).collect();
        let sum = summarize(&angles, None).unwrap();
        assert!((sum.holevo - 3.0).abs() < 5.0 * sum.holevo_se, "{sum:?}");
        assert!((sum.efficiency - 1.0).abs() < 5.0 * sum.efficiency_se);
        // closed-form delta-method error for this posterior: var(cos) = 1/4
        let expected_se = 16.0 * (0.25f64 / n as f64).sqrt();
        assert!((sum.holevo_se - expected_se).abs() / expected_se < 0.05);
    }

    #[test]
    fn uniform_sample_has_no_information() {
        let even: Vec<f64> = (0..64).map(|k| -PI + (k as f64 + 0.5) * 2.0 * PI / 64.0).collect();
        assert_eq!(holevo_variance(&even).unwrap(), f64::INFINITY);
        let mut rng = rng_from_seed(3);
        let n = 10_000;
        let random: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
        assert!(holevo_variance(&random).unwrap() > n as f64 / 20.0);
    }

    #[test]
    fn efficiency_anchors() {
        assert_eq!(intrinsic_efficiency(0.5), 1.0);
        assert_eq!(intrinsic_efficiency(0.0), 0.0);
        assert!((intrinsic_efficiency(PI.sqrt() / 4.0) - 0.886_226_925_452_758).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_interval_brackets_estimate() {
        let mut rng = rng_from_seed(5);
        let angles: Vec<f64> = (0..5000).map(|_| canonical_inverse_cdf(rng.random::<f64>())).collect();
        let sum = summarize(&angles, Some((200, 1))).unwrap();
        let (lo, hi) = sum.holevo_ci.unwrap();
        assert!(lo < sum.holevo && sum.holevo < hi);
        // width comparable to ±1.96 delta-method errors
        let width = hi - lo;
        assert!(width > 2.0 * sum.holevo_se && width < 6.0 * sum.holevo_se, "{width}");
    }

    #[test]
    fn compensated_sum_is_order_independent_enough() {
        let xs: Vec<f64> = (0..100_000).map(|i| ((i as f64) * 0.618).sin() * 1e-3 + 1.0).collect();
        let a: CompensatedSum = xs.iter().copied().collect();
        let b: CompensatedSum = xs.iter().rev().copied().collect();
        assert!((a.value() - b.value()).abs() < 1e-10);
    }
}
