//! Fixed-bin histograms and the goodness-of-fit test for the canonical
//! estimate distribution.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Bin count used for every phase histogram.
pub const PHASE_BINS: usize = 64;

/// Histogram over `(lo, hi]` with equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Samples falling outside `(lo, hi]`.
    pub outside: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo && bins > 0);
        Self { lo, hi, counts: vec![0; bins], outside: 0 }
    }

    /// 64 bins over `(-π, π]`.
    pub fn phase() -> Self {
        Self::new(-PI, PI, PHASE_BINS)
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x > self.lo && x <= self.hi) {
            return None;
        }
        let i = ((x - self.lo) / self.width()).ceil() as usize;
        Some(i.clamp(1, self.counts.len()) - 1)
    }

    pub fn add(&mut self, x: f64) {
        match self.bin_of(x) {
            Some(i) => self.counts[i] += 1,
            None => self.outside += 1,
        }
    }

    pub fn from_samples(lo: f64, hi: f64, bins: usize, xs: impl IntoIterator<Item = f64>) -> Self {
        let mut h = Self::new(lo, hi, bins);
        for x in xs {
            h.add(x);
        }
        h
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(left, right)` edges of bin `i`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.lo + (i as f64 + 0.5) * self.width()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareFit {
    pub statistic: f64,
    pub dof: usize,
    #[serde(with = "crate::serde_float")]
    pub p_value: f64,
    /// Number of groups after pooling sparse bins.
    pub groups: usize,
}

/// Pearson chi-square test of a phase histogram against `A(1 + cos Δ)`,
/// with `A` fixed by the sample size. Neighbouring bins are pooled until
/// each group expects at least `min_expected` counts.
pub fn chi_square_one_plus_cos(h: &Histogram, min_expected: f64) -> ChiSquareFit {
    let n = h.total() as f64;
    let expected: Vec<f64> = (0..h.counts.len())
        .map(|i| {
            let (a, b) = h.edges(i);
            n * ((b - a) + b.sin() - a.sin()) / (2.0 * PI)
        })
        .collect();
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (o, e) in h.counts.iter().zip(&expected) {
        obs += *o as f64;
        exp += e;
        if exp >= min_expected {
            groups.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => groups.push((obs, exp)),
        }
    }
    let statistic: f64 = groups.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = groups.len().saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(statistic)).unwrap_or(f64::NAN);
    ChiSquareFit { statistic, dof, p_value, groups: groups.len() }
}
