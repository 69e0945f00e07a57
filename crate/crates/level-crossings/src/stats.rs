//! Empirical distributions and theory-vs-simulation comparison.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::theory::Law;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empirical distribution needs at least one finite sample")]
    NoSamples,

    #[error("sample {0} is not finite")]
    NonFiniteSample(f64),

    #[error("histogram needs bins >= 1 and lo < hi, got bins = {bins}, range = ({lo}, {hi})")]
    InvalidHistogram { bins: usize, lo: f64, hi: f64 },
}

/// Sorted sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self, StatsError> {
        if samples.is_empty() {
            return Err(StatsError::NoSamples);
        }
        if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(StatsError::NonFiniteSample(bad));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalDistribution { samples })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    /// Sorted samples.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Right-continuous empirical CDF: fraction of samples ≤ x.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }
}

/// Kolmogorov–Smirnov distance between the sample set and a reference CDF.
///
/// At every distinct sample both one-sided comparisons are taken: the CDF at
/// the sample against the fraction ≤ it, and the CDF just below the sample
/// against the fraction strictly below it. This keeps the statistic exact for
/// step-function references as well as continuous ones.
pub fn ks_statistic<F: Fn(f64) -> f64>(dist: &EmpiricalDistribution, cdf: F) -> f64 {
    let s = dist.samples();
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let at_or_below = (j + 1) as f64 / n;
        d = d.max((cdf(x) - at_or_below).abs());
        d = d.max((cdf(x.next_down()) - below).abs());
        i = j + 1;
    }
    d
}

/// Density-normalized histogram over `[lo, hi)` (the last bin also takes
/// x == hi). Densities integrate to the in-range sample fraction.
pub fn histogram(
    dist: &EmpiricalDistribution,
    bins: usize,
    range: (f64, f64),
) -> Result<(Vec<f64>, Vec<f64>), StatsError> {
    let (lo, hi) = range;
    if bins == 0 || !(lo < hi) {
        return Err(StatsError::InvalidHistogram { bins, lo, hi });
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in dist.samples() {
        if x < lo || x > hi {
            continue;
        }
        let mut b = ((x - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let norm = dist.n() as f64 * width;
    let density: Vec<f64> = counts.into_iter().map(|c| c as f64 / norm).collect();
    Ok((edges, density))
}

/// Outcome of one theory-vs-simulation comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub label: String,
    pub n_events: usize,
    pub ks_distance: f64,
    pub tolerance: f64,
    pub min_events: usize,
    pub pass: bool,
    pub reason: Option<String>,
    /// (x, theoretical cdf) pairs for plotting.
    pub theory_grid: Vec<(f64, f64)>,
    /// (x, empirical cdf) pairs, decimated for large sample sets.
    pub empirical_grid: Vec<(f64, f64)>,
}

const REPORT_THEORY_POINTS: usize = 201;
const REPORT_EMPIRICAL_POINTS: usize = 512;

/// Compare samples against a reference law at a fixed KS tolerance.
///
/// The report fails when the distance exceeds the tolerance or fewer than
/// `min_events` samples were provided (the latter with an explicit reason —
/// sparse data must not silently pass).
pub fn validate(
    label: &str,
    samples: &[f64],
    law: &dyn Law,
    tolerance: f64,
    min_events: usize,
) -> ValidationReport {
    let n_events = samples.len();
    let dist = EmpiricalDistribution::new(samples.to_vec()).ok();
    let (ks_distance, theory_grid, empirical_grid) = match &dist {
        Some(dist) => {
            let ks = ks_statistic(dist, |x| law.cdf(x));
            let lo = dist.min().min(0.0);
            let hi = dist.max();
            let theory: Vec<(f64, f64)> = (0..REPORT_THEORY_POINTS)
                .map(|i| {
                    let x = lo + (hi - lo) * i as f64 / (REPORT_THEORY_POINTS - 1) as f64;
                    (x, law.cdf(x))
                })
                .collect();
            let stride = dist.n().div_ceil(REPORT_EMPIRICAL_POINTS).max(1);
            let empirical: Vec<(f64, f64)> = dist
                .samples()
                .iter()
                .enumerate()
                .filter(|(i, _)| i % stride == 0 || *i == dist.n() - 1)
                .map(|(i, &x)| (x, (i + 1) as f64 / dist.n() as f64))
                .collect();
            (ks, theory, empirical)
        }
        None => (1.0, Vec::new(), Vec::new()),
    };
    let enough = n_events >= min_events;
    let fits = ks_distance <= tolerance;
    let reason = if !enough {
        Some(format!("insufficient events: {n_events} < {min_events}"))
    } else if !fits {
        Some(format!("ks {ks_distance:.4} > tolerance {tolerance:.4}"))
    } else {
        None
    };
    ValidationReport {
        label: label.to_string(),
        n_events,
        ks_distance,
        tolerance,
        min_events,
        pass: enough && fits,
        reason,
        theory_grid,
        empirical_grid,
    }
}
