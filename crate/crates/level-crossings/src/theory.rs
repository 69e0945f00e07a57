//! Closed-form single-level results.
//!
//! Everything here is an asymptotic or exact law for a zero-mean
//! unit-variance stationary Gaussian process with finite λ₂: the Rice
//! crossing rate and its up/down split, the Rayleigh law of excursion lengths
//! above a large level, the Erlang law of the interval to the k-th subsequent
//! up-crossing, the exponential law of up-excursions above a large negative
//! level, and the limiting parabola shape of a large excursion.

use std::f64::consts::PI;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acf::ConditionFlags;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("invalid level context: lambda0 = {lambda0}, lambda2 = {lambda2} (need lambda0 > 0 and finite lambda2 > 0)")]
    InvalidContext { lambda0: f64, lambda2: f64 },

    #[error("the large-excursion law applies to positive levels, got gamma = {0}")]
    PositiveLevelRequired(f64),

    #[error("the negative-excursion law applies to negative levels, got gamma = {0}")]
    NegativeLevelRequired(f64),

    #[error("interval order k must be >= 1, got {0}")]
    InvalidOrder(u32),

    #[error("model does not satisfy condition {condition} required by {theorem}")]
    ConditionsUnmet {
        condition: &'static str,
        theorem: &'static str,
    },

    #[error("up-crossing rate must be positive and finite, got {0}")]
    InvalidRate(f64),
}

/// A univariate continuous law exposing the handful of operations the
/// validation harness needs.
pub trait Law {
    fn cdf(&self, x: f64) -> f64;
    fn pdf(&self, x: f64) -> f64;
    fn mean(&self) -> f64;
    /// Inverse CDF for p in (0, 1).
    fn quantile(&self, p: f64) -> f64;
}

/// Level and spectral-moment bundle for the single-level formulas.
///
/// `gamma` is the level in standard deviations. λ₂ must be finite and
/// positive: the crossing rate is finite exactly when it is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelContext {
    pub gamma: f64,
    pub lambda0: f64,
    pub lambda2: f64,
}

impl LevelContext {
    pub fn new(gamma: f64, lambda0: f64, lambda2: f64) -> Result<Self, TheoryError> {
        if !(lambda0 > 0.0 && lambda0.is_finite() && lambda2 > 0.0 && lambda2.is_finite()) {
            return Err(TheoryError::InvalidContext { lambda0, lambda2 });
        }
        Ok(LevelContext {
            gamma,
            lambda0,
            lambda2,
        })
    }

    pub fn from_moments(gamma: f64, moments: &crate::acf::SpectralMoments) -> Result<Self, TheoryError> {
        Self::new(gamma, moments.lambda0, moments.lambda2)
    }
}

/// Mean number of crossings of the level per unit time:
/// (1/π)·√(λ₂/λ₀)·exp(−γ²/(2λ₀)).
pub fn rice_rate(ctx: &LevelContext) -> f64 {
    (1.0 / PI) * (ctx.lambda2 / ctx.lambda0).sqrt() * (-ctx.gamma * ctx.gamma / (2.0 * ctx.lambda0)).exp()
}

/// Mean up-crossing rate: the crossing rate splits evenly, so this is exactly
/// half of [`rice_rate`]. Equal to the down-crossing rate.
pub fn up_rate(ctx: &LevelContext) -> f64 {
    0.5 * rice_rate(ctx)
}

/// Rayleigh law with CDF 1 − exp(−x²/(2s²)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighLaw {
    pub scale: f64,
}

impl Law for RayleighLaw {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let u = x / self.scale;
        -(-0.5 * u * u).exp_m1()
    }

    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s2 = self.scale * self.scale;
        x / s2 * (-0.5 * x * x / s2).exp()
    }

    fn mean(&self) -> f64 {
        self.scale * (PI / 2.0).sqrt()
    }

    fn quantile(&self, p: f64) -> f64 {
        self.scale * (-2.0 * (1.0 - p).ln()).sqrt()
    }
}

/// Exponential law with CDF 1 − exp(−rate·x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialLaw {
    pub rate: f64,
}

impl Law for ExponentialLaw {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-self.rate * x).exp_m1()
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.rate * (-self.rate * x).exp()
    }

    fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    fn quantile(&self, p: f64) -> f64 {
        -(1.0 - p).ln() / self.rate
    }
}

/// Limiting law of the interval between an up-crossing and the k-th
/// subsequent up-crossing, in normalized time t = μ·(physical time).
///
/// F_k(t) = 1 − [Σ_{n=1..k} t^{n−1}/(n−1)!]·e^{−t}, with density
/// f_k(t) = t^{k−1}e^{−t}/(k−1)! and mean k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErlangIntervalLaw {
    pub k: u32,
}

impl ErlangIntervalLaw {
    pub fn new(k: u32) -> Result<Self, TheoryError> {
        if k < 1 {
            return Err(TheoryError::InvalidOrder(k));
        }
        Ok(ErlangIntervalLaw { k })
    }
}

impl Law for ErlangIntervalLaw {
    fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut term = 1.0; // t^n / n! running from n = 0
        let mut partial = 1.0;
        for n in 1..self.k {
            term *= t / n as f64;
            partial += term;
        }
        1.0 - partial * (-t).exp()
    }

    fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let mut num = 1.0; // t^{k−1}/(k−1)!
        for n in 1..self.k {
            num *= t / n as f64;
        }
        num * (-t).exp()
    }

    fn mean(&self) -> f64 {
        self.k as f64
    }

    fn quantile(&self, p: f64) -> f64 {
        // CDF is smooth and strictly increasing on (0, ∞); bisection is
        // plenty for the grid sizes used here.
        let k = self.k as f64;
        let mut lo = 0.0;
        let mut hi = k + 40.0 * k.sqrt() + 40.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Point evaluation of the normalized interval law: (F_k(t), f_k(t)).
pub fn erlang_interval_law(k: u32, t: f64) -> Result<(f64, f64), TheoryError> {
    let law = ErlangIntervalLaw::new(k)?;
    Ok((law.cdf(t), law.pdf(t)))
}

/// Interval law in physical time for up-crossing rate `mu`: applies the
/// normalization t ↦ t·μ, so the CDF at physical t is F_k(t·μ).
pub fn erlang_interval_physical(k: u32, t: f64, mu: f64) -> Result<(f64, f64), TheoryError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(TheoryError::InvalidRate(mu));
    }
    let law = ErlangIntervalLaw::new(k)?;
    Ok((law.cdf(t * mu), mu * law.pdf(t * mu)))
}

/// Physical-time wrapper around [`ErlangIntervalLaw`] for a given up-crossing
/// rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalErlangLaw {
    pub k: u32,
    pub mu: f64,
}

impl PhysicalErlangLaw {
    pub fn new(k: u32, mu: f64) -> Result<Self, TheoryError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(TheoryError::InvalidRate(mu));
        }
        ErlangIntervalLaw::new(k)?;
        Ok(PhysicalErlangLaw { k, mu })
    }

    fn normalized(&self) -> ErlangIntervalLaw {
        ErlangIntervalLaw { k: self.k }
    }
}

impl Law for PhysicalErlangLaw {
    fn cdf(&self, t: f64) -> f64 {
        self.normalized().cdf(t * self.mu)
    }

    fn pdf(&self, t: f64) -> f64 {
        self.mu * self.normalized().pdf(t * self.mu)
    }

    fn mean(&self) -> f64 {
        self.k as f64 / self.mu
    }

    fn quantile(&self, p: f64) -> f64 {
        self.normalized().quantile(p) / self.mu
    }
}

/// Asymptotic law of the length of an up-excursion above a large level
/// γ → +∞: Rayleigh with scale 2/(γ√λ₂).
pub fn large_excursion_length_law(ctx: &LevelContext) -> Result<RayleighLaw, TheoryError> {
    if ctx.gamma <= 0.0 {
        return Err(TheoryError::PositiveLevelRequired(ctx.gamma));
    }
    Ok(RayleighLaw {
        scale: 2.0 / (ctx.gamma * ctx.lambda2.sqrt()),
    })
}

/// Asymptotic law of the length of an up-excursion above a large negative
/// level −γ → −∞: exponential with rate equal to the up-crossing rate of the
/// level.
///
/// Requires the quartic-expansion/decay conditions (finite λ₄), so the
/// generating model's flags must mark them satisfied.
pub fn negative_excursion_length_law(
    ctx: &LevelContext,
    conditions: &ConditionFlags,
) -> Result<ExponentialLaw, TheoryError> {
    if ctx.gamma >= 0.0 {
        return Err(TheoryError::NegativeLevelRequired(ctx.gamma));
    }
    if !conditions.eq8_9.is_satisfied() {
        return Err(TheoryError::ConditionsUnmet {
            condition: "eq8_9",
            theorem: "the negative-excursion exponential law",
        });
    }
    Ok(ExponentialLaw {
        rate: up_rate(ctx),
    })
}

/// The limiting shape of an excursion above a large level γ:
/// X(t) ≈ γ + ξt − γλ₂t²/2 with Rayleigh-distributed slope ξ.
pub fn parabola(gamma: f64, xi: f64, lambda2: f64, t: f64) -> f64 {
    gamma + xi * t - 0.5 * gamma * lambda2 * t * t
}

/// Root-to-root length of the parabola above its starting level: 2ξ/(γλ₂).
pub fn parabola_root_length(gamma: f64, xi: f64, lambda2: f64) -> f64 {
    2.0 * xi / (gamma * lambda2)
}

/// Peak value of the parabola, reached at t = ξ/(γλ₂).
pub fn parabola_peak(gamma: f64, xi: f64, lambda2: f64) -> f64 {
    gamma + xi * xi / (2.0 * gamma * lambda2)
}

/// Export a theory curve as CSV `tau,cdf,pdf` on the given grid.
pub fn write_law_csv<L: Law + ?Sized, W: io::Write>(
    law: &L,
    grid: &[f64],
    writer: &mut W,
) -> io::Result<()> {
    writeln!(writer, "tau,cdf,pdf")?;
    for &tau in grid {
        writeln!(writer, "{},{},{}", tau, law.cdf(tau), law.pdf(tau))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acf::AcfModel;
    use crate::quad::adaptive_simpson;

    fn ctx(gamma: f64, lambda2: f64) -> LevelContext {
        LevelContext::new(gamma, 1.0, lambda2).unwrap()
    }

    #[test]
    fn rice_rate_direct_evaluations() {
        // Frozen by direct evaluation of the rate formula.
        assert!((rice_rate(&ctx(0.0, 0.25)) - 0.15915494309189535).abs() < 1e-15);
        assert!((rice_rate(&ctx(1.0, 0.25)) - 0.09653235263005391).abs() < 1e-15);
        assert!((up_rate(&ctx(1.0, 0.25)) - 0.04826617631502696).abs() < 1e-15);
        assert!((up_rate(&ctx(2.5, 0.25)) - 0.0034963900852328957).abs() < 1e-15);
    }

    #[test]
    fn rice_rate_even_and_decreasing_in_level() {
        assert_eq!(rice_rate(&ctx(1.0, 0.25)), rice_rate(&ctx(-1.0, 0.25)));
        assert_eq!(up_rate(&ctx(1.0, 0.25)), up_rate(&ctx(-1.0, 0.25)));
        let mut last = rice_rate(&ctx(0.0, 0.25));
        for g in [0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0] {
            let r = rice_rate(&ctx(g, 0.25));
            assert!(r < last);
            last = r;
        }
    }

    #[test]
    fn context_rejects_bad_moments() {
        assert!(LevelContext::new(1.0, 0.0, 0.25).is_err());
        assert!(LevelContext::new(1.0, 1.0, f64::INFINITY).is_err());
        assert!(LevelContext::new(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn large_excursion_law_scale_and_moments() {
        let law = large_excursion_length_law(&ctx(2.5, 0.25)).unwrap();
        assert!((law.scale - 1.6).abs() < 1e-15);
        assert!((law.mean() - 2.0053026197048003).abs() < 1e-12);
        assert!((law.quantile(0.5) - 1.8838560360247596).abs() < 1e-12);
        assert_eq!(law.cdf(0.0), 0.0);
        assert_eq!(law.pdf(0.0), 0.0);
        assert!(matches!(
            large_excursion_length_law(&ctx(-2.5, 0.25)),
            Err(TheoryError::PositiveLevelRequired(_))
        ));
    }

    #[test]
    fn erlang_first_order_is_exponential() {
        let (f, d) = erlang_interval_law(1, 0.7).unwrap();
        assert!((f - (1.0 - (-0.7f64).exp())).abs() < 1e-15);
        assert!((d - (-0.7f64).exp()).abs() < 1e-15);
        for k in 1..=4 {
            let (f0, _) = erlang_interval_law(k, 0.0).unwrap();
            assert_eq!(f0, 0.0);
        }
        assert!(matches!(
            erlang_interval_law(0, 1.0),
            Err(TheoryError::InvalidOrder(0))
        ));
    }

    #[test]
    fn erlang_density_normalization_and_mean_by_quadrature() {
        for k in 1..=3u32 {
            let law = ErlangIntervalLaw::new(k).unwrap();
            let total = adaptive_simpson(&|t| law.pdf(t), 0.0, 150.0, 1e-12);
            assert!((total - 1.0).abs() < 1e-8, "k={k} total={total}");
            let mean = adaptive_simpson(&|t| t * law.pdf(t), 0.0, 150.0, 1e-12);
            assert!((mean - k as f64).abs() < 1e-8, "k={k} mean={mean}");
        }
    }

    #[test]
    fn erlang_cdf_derivative_matches_density() {
        for k in 1..=3u32 {
            let law = ErlangIntervalLaw::new(k).unwrap();
            let h = 1e-5;
            let mut t = 0.1;
            while t <= 10.0 {
                let numeric = (law.cdf(t + h) - law.cdf(t - h)) / (2.0 * h);
                assert!(
                    (numeric - law.pdf(t)).abs() < 1e-6,
                    "k={k} t={t} numeric={numeric} pdf={}",
                    law.pdf(t)
                );
                t += 0.5;
            }
        }
    }

    #[test]
    fn erlang_physical_scaling() {
        let mu = 0.04826617631502696;
        let norm = ErlangIntervalLaw::new(2).unwrap();
        let phys = PhysicalErlangLaw::new(2, mu).unwrap();
        let t = 30.0;
        assert!((phys.cdf(t) - norm.cdf(t * mu)).abs() < 1e-15);
        let (f, d) = erlang_interval_physical(2, t, mu).unwrap();
        assert_eq!(f, phys.cdf(t));
        assert_eq!(d, phys.pdf(t));
        assert!((phys.mean() - 2.0 / mu).abs() < 1e-12);
    }

    #[test]
    fn negative_excursion_law_rate_and_quantiles() {
        let model = AcfModel::squared_exponential(2.0).unwrap();
        let law =
            negative_excursion_length_law(&ctx(-1.0, 0.25), &model.check_conditions()).unwrap();
        assert!((law.rate - 0.04826617631502696).abs() < 1e-15);
        assert!((law.mean() - 20.718442527395005).abs() < 1e-10);
        assert!((law.quantile(0.5) - 14.360930023457115).abs() < 1e-10);
        assert_eq!(law.cdf(0.0), 0.0);
    }

    #[test]
    fn negative_excursion_law_preconditions() {
        let markov = AcfModel::exponential(5.0).unwrap();
        let err =
            negative_excursion_length_law(&ctx(-1.0, 0.25), &markov.check_conditions()).unwrap_err();
        assert!(matches!(err, TheoryError::ConditionsUnmet { condition: "eq8_9", .. }));

        let smooth = AcfModel::squared_exponential(2.0).unwrap();
        assert!(matches!(
            negative_excursion_length_law(&ctx(1.0, 0.25), &smooth.check_conditions()),
            Err(TheoryError::NegativeLevelRequired(_))
        ));
    }

    #[test]
    fn parabola_geometry() {
        assert_eq!(parabola(2.5, 0.5, 0.25, 0.0), 2.5);
        assert!((parabola_root_length(2.5, 0.5, 0.25) - 1.6).abs() < 1e-15);
        assert!((parabola_peak(2.5, 0.5, 0.25) - 2.7).abs() < 1e-15);
        // Vertex at t* = ξ/(γλ₂); the peak value is attained there.
        let t_star: f64 = 0.5 / (2.5 * 0.25);
        assert!((t_star - 0.8).abs() < 1e-15);
        assert!((parabola(2.5, 0.5, 0.25, t_star) - 2.7).abs() < 1e-15);
        // Root length: the parabola returns to γ at t = T₁.
        let t1 = parabola_root_length(2.5, 0.5, 0.25);
        assert!((parabola(2.5, 0.5, 0.25, t1) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_slope_gives_rayleigh_lengths() {
        // Drawing ξ and mapping through the root length 2ξ/(γλ₂) must land
        // exactly on the large-excursion law (scale identity).
        let gamma = 2.5;
        let lambda2 = 0.25;
        let law = large_excursion_length_law(&ctx(gamma, lambda2)).unwrap();
        let n = 100_000u64;
        let mut lengths: Vec<f64> = (0..n)
            .map(|seed| {
                let xi = crate::gp::sample_rayleigh_xi(lambda2, seed).unwrap();
                parabola_root_length(gamma, xi, lambda2)
            })
            .collect();
        lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let dist = crate::stats::EmpiricalDistribution::new(lengths).unwrap();
        let ks = crate::stats::ks_statistic(&dist, |x| law.cdf(x));
        assert!(ks < 0.01, "ks = {ks}");
    }

    #[test]
    fn mean_lengths_diverge_in_opposite_level_limits() {
        let model = AcfModel::squared_exponential(2.0).unwrap();
        let flags = model.check_conditions();
        let mut neg_means = Vec::new();
        let mut pos_means = Vec::new();
        for g in [1.0, 2.0, 3.0, 4.0, 5.0] {
            neg_means
                .push(negative_excursion_length_law(&ctx(-g, 0.25), &flags).unwrap().mean());
            pos_means.push(large_excursion_length_law(&ctx(g, 0.25)).unwrap().mean());
        }
        assert!(neg_means.windows(2).all(|w| w[1] > w[0]));
        assert!(pos_means.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn quantile_inverts_cdf() {
        let laws: Vec<Box<dyn Law>> = vec![
            Box::new(RayleighLaw { scale: 1.6 }),
            Box::new(ExponentialLaw { rate: 0.0482 }),
            Box::new(ErlangIntervalLaw::new(3).unwrap()),
            Box::new(PhysicalErlangLaw::new(2, 0.05).unwrap()),
        ];
        for law in &laws {
            for p in [0.05, 0.25, 0.5, 0.9, 0.99] {
                let q = law.quantile(p);
                assert!((law.cdf(q) - p).abs() < 1e-9, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn law_csv_layout() {
        let law = RayleighLaw { scale: 1.6 };
        let mut buf = Vec::new();
        write_law_csv(&law, &[0.0, 1.0, 2.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("tau,cdf,pdf"));
        assert_eq!(lines.count(), 3);
    }
}
