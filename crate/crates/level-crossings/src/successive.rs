//! Two-level conditional crossing statistics.
//!
//! Everything is driven by the asymptotic parabola of a large excursion: an
//! up-excursion above γ₁ has Rayleigh slope ξ, length T₁ = 2ξ/(γ₁λ₂), and
//! reaches γ₂ ≥ γ₁ exactly when the discriminant Δ = ξ² − 2γ₁λ₂(γ₂−γ₁) is
//! positive, in which case the time spent above γ₂ is T₂ = 2√Δ/(γ₁λ₂).
//! Conditioning on T₁ ≥ τ₁ turns every quantity here into a ratio of
//! exponentials in V = γ₁²λ₂/8, with the critical length τ₁* marking the
//! excursion length beyond which γ₂ is reached with certainty.
//!
//! The closed forms are paired with [`parabola_mc_oracle`], a direct Monte
//! Carlo simulation of the same parabola model used as an independent check
//! on every formula in this module.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::theory::Law;

#[derive(Debug, Error)]
pub enum SuccessiveError {
    #[error("invalid two-level spec: need gamma1 > 0, gamma2 >= gamma1, tau1 >= 0, tau2 >= 0 and finite lambda2 > 0 (got gamma1 = {gamma1}, gamma2 = {gamma2}, tau1 = {tau1}, tau2 = {tau2}, lambda2 = {lambda2})")]
    InvalidSpec {
        gamma1: f64,
        gamma2: f64,
        tau1: f64,
        tau2: f64,
        lambda2: f64,
    },

    #[error("conditioning event T2 >= {tau2} has zero probability")]
    ConditioningImpossible { tau2: f64 },

    #[error("window probability {p} outside [0, 1]; parameters are outside the asymptotic regime")]
    ProbabilityOutOfRange { p: f64 },

    #[error("oracle needs at least {need} samples, got {got}")]
    TooFewSamples { got: u64, need: u64 },

    #[error("up-crossing rate must be finite and non-negative, got {0}")]
    InvalidUpRate(f64),
}

/// Two successive levels with the conditioning lengths and the curvature
/// moment, plus the derived constants the closed forms share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelSpec {
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub lambda2: f64,
}

impl TwoLevelSpec {
    pub fn new(
        gamma1: f64,
        gamma2: f64,
        tau1: f64,
        tau2: f64,
        lambda2: f64,
    ) -> Result<Self, SuccessiveError> {
        let ok = gamma1 > 0.0
            && gamma1.is_finite()
            && gamma2 >= gamma1
            && gamma2.is_finite()
            && tau1 >= 0.0
            && tau1.is_finite()
            && tau2 >= 0.0
            && tau2.is_finite()
            && lambda2 > 0.0
            && lambda2.is_finite();
        if !ok {
            return Err(SuccessiveError::InvalidSpec {
                gamma1,
                gamma2,
                tau1,
                tau2,
                lambda2,
            });
        }
        Ok(TwoLevelSpec {
            gamma1,
            gamma2,
            tau1,
            tau2,
            lambda2,
        })
    }

    /// Rate constant V = γ₁²λ₂/8 governing all two-level exponentials.
    pub fn v(&self) -> f64 {
        self.gamma1 * self.gamma1 * self.lambda2 / 8.0
    }

    /// Critical length τ₁* = √(8(γ₂−γ₁)/(γ₁λ₂)): an excursion at least this
    /// long reaches γ₂ with certainty. Satisfies V·τ₁*² = γ₁(γ₂−γ₁).
    pub fn tau1_star(&self) -> f64 {
        (8.0 * (self.gamma2 - self.gamma1) / (self.gamma1 * self.lambda2)).sqrt()
    }

    /// τ₂* = √(τ₁² − τ₁*²), defined only when τ₁ > τ₁*.
    pub fn tau2_star(&self) -> Option<f64> {
        let t1s = self.tau1_star();
        if self.tau1 > t1s {
            Some((self.tau1 * self.tau1 - t1s * t1s).sqrt())
        } else {
            None
        }
    }

    /// exp(−V·max(τ₁*² − τ₁², 0)) shows up in every conditional form.
    fn excess_decay(&self) -> f64 {
        let t1s = self.tau1_star();
        (-self.v() * (t1s * t1s - self.tau1 * self.tau1).max(0.0)).exp()
    }
}

/// Mean number of up-crossings of γ₂ inside a γ₁ up-excursion of length
/// ≥ τ₁, as γ₁ → +∞:
/// exp(−V·max(τ₁*², τ₁²))/exp(−V·τ₁²). Equals 1 whenever τ₁ ≥ τ₁* and lies
/// in (0, 1].
pub fn mean_upcrossings_conditional(spec: &TwoLevelSpec) -> f64 {
    spec.excess_decay()
}

/// Mean down-crossings of γ₂ under the same conditioning: every up-crossing
/// of the parabola is followed by its down-crossing.
pub fn mean_downcrossings_conditional(spec: &TwoLevelSpec) -> f64 {
    mean_upcrossings_conditional(spec)
}

/// Mean total crossings of γ₂ under the same conditioning: twice the
/// up-crossing mean.
pub fn mean_crossings_conditional(spec: &TwoLevelSpec) -> f64 {
    2.0 * mean_upcrossings_conditional(spec)
}

/// Probability mass of T₂ at the origin:
/// 1(τ₁ ≤ τ₁*)·[1 − exp(−V·τ₁*²)/exp(−V·τ₁²)].
pub fn t2_mass_at_zero(spec: &TwoLevelSpec) -> f64 {
    let t1s = spec.tau1_star();
    if spec.tau1 <= t1s {
        -(-spec.v() * (t1s * t1s - spec.tau1 * spec.tau1)).exp_m1()
    } else {
        0.0
    }
}

/// Survival of the absolutely continuous part:
/// P(T₂ > τ | …) = exp(−V·max(τ² + τ₁*², τ₁²))/exp(−V·τ₁²).
pub fn t2_survival(spec: &TwoLevelSpec, tau: f64) -> f64 {
    let t1s = spec.tau1_star();
    let excess = (tau * tau + t1s * t1s - spec.tau1 * spec.tau1).max(0.0);
    (-spec.v() * excess).exp()
}

/// P(T₂ ≥ τ | …) for the mixed law: the survival plus, exactly at τ = 0, the
/// atom.
pub fn t2_prob_ge(spec: &TwoLevelSpec, tau: f64) -> f64 {
    t2_survival(spec, tau) + if tau == 0.0 { t2_mass_at_zero(spec) } else { 0.0 }
}

/// ∫_{τ₂}^∞ P(T₂* > τ) dτ in closed form via the complementary error
/// function.
fn t2_survival_tail_integral(spec: &TwoLevelSpec, tau2: f64) -> f64 {
    let v = spec.v();
    let sq = (PI / (4.0 * v)).sqrt();
    match spec.tau2_star() {
        // τ₁ ≤ τ₁*: the max always picks τ² + τ₁*².
        None => spec.excess_decay() * sq * libm::erfc(v.sqrt() * tau2),
        // τ₁ > τ₁*: flat survival (= 1) until τ₂*, Gaussian tail beyond.
        Some(t2s) => {
            let flat = (t2s - tau2).max(0.0);
            flat + spec.excess_decay() * sq * libm::erfc(v.sqrt() * t2s.max(tau2))
        }
    }
}

/// E{T₂* | T₂* ≥ τ₂} = τ₂ + ∫_{τ₂}^∞ P(T₂* > τ)dτ / P(T₂* ≥ τ₂).
pub fn expected_t2_conditional(spec: &TwoLevelSpec) -> Result<f64, SuccessiveError> {
    let p = t2_prob_ge(spec, spec.tau2);
    if p <= 0.0 {
        return Err(SuccessiveError::ConditioningImpossible { tau2: spec.tau2 });
    }
    Ok(spec.tau2 + t2_survival_tail_integral(spec, spec.tau2) / p)
}

/// Which closed form produced a window probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowCase {
    /// τ₁ ≤ τ₁* and τ₂ = 0.
    Case1,
    /// τ₁ ≤ τ₁* and τ₂ > 0.
    Case2,
    /// τ₁ > τ₁* and τ₂ ≥ τ₂*.
    Case3,
    /// τ₁ > τ₁* and τ₂ < τ₂*.
    Case4,
}

/// Window probability with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowProbability {
    pub p: f64,
    pub case: WindowCase,
    pub v: f64,
    pub tau1_star: f64,
    pub tau2_star: Option<f64>,
}

/// Probability that a window contains a qualifying successive excursion pair
/// (a γ₁ up-excursion of length ≥ τ₁ whose γ₂ up-excursion lasts ≥ τ₂), per
/// unit window time.
///
/// The window length cancels between the expected occupied time and the
/// window duration, so the result is window-independent. The four cases are
/// selected by (τ₁ ≤ τ₁*, τ₂ = 0 / τ₂ ≥ τ₂*) and agree at the case
/// boundaries.
pub fn window_probability(
    spec: &TwoLevelSpec,
    up_rate_gamma1: f64,
) -> Result<WindowProbability, SuccessiveError> {
    if !(up_rate_gamma1 >= 0.0 && up_rate_gamma1.is_finite()) {
        return Err(SuccessiveError::InvalidUpRate(up_rate_gamma1));
    }
    let v = spec.v();
    let t1s = spec.tau1_star();
    let tau1 = spec.tau1;
    let tau2 = spec.tau2;
    let sq = (PI / (4.0 * v)).sqrt();
    let (case, p) = match spec.tau2_star() {
        None if tau2 == 0.0 => {
            let p = up_rate_gamma1 * (-v * t1s * t1s).exp() * sq;
            (WindowCase::Case1, p)
        }
        None => {
            let p = up_rate_gamma1
                * (tau2 * (-v * (tau2 * tau2 + t1s * t1s)).exp()
                    + (-v * t1s * t1s).exp() * sq * libm::erfc(v.sqrt() * tau2));
            (WindowCase::Case2, p)
        }
        Some(t2s) if tau2 >= t2s => {
            let p = up_rate_gamma1
                * (tau2 * (-v * (tau2 * tau2 + t1s * t1s)).exp()
                    + (-v * t1s * t1s).exp() * sq * libm::erfc(v.sqrt() * tau2));
            (WindowCase::Case3, p)
        }
        Some(t2s) => {
            let p = up_rate_gamma1
                * (-v * tau1 * tau1).exp()
                * (t2s + (v * (tau1 * tau1 - t1s * t1s)).exp() * sq * libm::erfc(v.sqrt() * t2s));
            (WindowCase::Case4, p)
        }
    };
    if !(0.0..=1.0).contains(&p) {
        return Err(SuccessiveError::ProbabilityOutOfRange { p });
    }
    Ok(WindowProbability {
        p,
        case,
        v,
        tau1_star: t1s,
        tau2_star: spec.tau2_star(),
    })
}

/// Law of T₂ conditioned on being positive: cdf(τ) = 1 − surv(τ)/surv(0).
///
/// This is the curve the positive part of an empirical T₂ sample is compared
/// against; for τ₁ ≤ τ₁* it reduces to a Rayleigh law of scale 1/√(2V).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2PositiveLaw {
    pub spec: TwoLevelSpec,
}

impl T2PositiveLaw {
    fn survival_ratio(&self, tau: f64) -> f64 {
        t2_survival(&self.spec, tau) / t2_survival(&self.spec, 0.0)
    }
}

impl Law for T2PositiveLaw {
    fn cdf(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        1.0 - self.survival_ratio(tau)
    }

    fn pdf(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let t1s = self.spec.tau1_star();
        if tau * tau + t1s * t1s <= self.spec.tau1 * self.spec.tau1 {
            return 0.0;
        }
        2.0 * self.spec.v() * tau * self.survival_ratio(tau)
    }

    fn mean(&self) -> f64 {
        t2_survival_tail_integral(&self.spec, 0.0) / t2_survival(&self.spec, 0.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = self.spec.tau2_star().unwrap_or(0.0) + 40.0 / (2.0 * self.spec.v()).sqrt();
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

/// A Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Estimates from direct simulation of the asymptotic parabola model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n_samples: u64,
    /// P(T₁ ≥ τ₁), from unconditional slope draws.
    pub p_t1_ge_tau1: Estimate,
    /// P(one up-crossing of γ₂ | T₁ ≥ τ₁).
    pub p_upcross: Estimate,
    /// P(T₂ = 0 | T₁ ≥ τ₁).
    pub t2_atom: Estimate,
    /// τ ↦ P(T₂ > τ | T₁ ≥ τ₁) on the requested grid.
    pub t2_survival: Vec<(f64, Estimate)>,
    /// Draws with T₂ ≥ τ₂ feeding the conditional mean.
    pub n_t2_qualifying: u64,
    /// E{T₂ | T₂ ≥ τ₂, T₁ ≥ τ₁}; None when no draw qualified.
    pub mean_t2_given_ge_tau2: Option<Estimate>,
    /// E{T₂·1(T₂ ≥ τ₂) | T₁ ≥ τ₁}: multiplied by the up-rate and
    /// P(T₁ ≥ τ₁) this is the window probability.
    pub window_time_factor: Estimate,
}

impl OracleReport {
    /// Window probability implied by the oracle factors for a given γ₁
    /// up-crossing rate, with the product-form standard error.
    pub fn window_probability(&self, up_rate_gamma1: f64) -> Estimate {
        let value = up_rate_gamma1 * self.p_t1_ge_tau1.value * self.window_time_factor.value;
        let rel_p = if self.p_t1_ge_tau1.value > 0.0 {
            self.p_t1_ge_tau1.std_error / self.p_t1_ge_tau1.value
        } else {
            0.0
        };
        let rel_w = if self.window_time_factor.value > 0.0 {
            self.window_time_factor.std_error / self.window_time_factor.value
        } else {
            0.0
        };
        Estimate {
            value,
            std_error: value * (rel_p * rel_p + rel_w * rel_w).sqrt(),
        }
    }
}

fn proportion_estimate(count: u64, n: u64) -> Estimate {
    let p = count as f64 / n as f64;
    Estimate {
        value: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
    }
}

fn mean_estimate(sum: f64, sum_sq: f64, n: u64) -> Estimate {
    let m = sum / n as f64;
    let var = (sum_sq / n as f64 - m * m).max(0.0);
    Estimate {
        value: m,
        std_error: (var / n as f64).sqrt(),
    }
}

/// Minimum oracle size; below this the standard errors are not meaningful.
pub const ORACLE_MIN_SAMPLES: u64 = 10_000;

/// Direct simulation of the parabola model, conditioned on T₁ ≥ τ₁.
///
/// The conditional slope is drawn exactly: ξ² is exponential with mean 2λ₂,
/// so conditioning on ξ ≥ γ₁λ₂τ₁/2 shifts it by memorylessness instead of
/// rejection, keeping the full sample budget at any τ₁. A second independent
/// stream estimates the unconditional P(T₁ ≥ τ₁). Every closed form in this
/// module
/// is checked against this report by the validation suites.
pub fn parabola_mc_oracle(
    spec: &TwoLevelSpec,
    n_samples: u64,
    seed: u64,
    survival_grid: &[f64],
) -> Result<OracleReport, SuccessiveError> {
    if n_samples < ORACLE_MIN_SAMPLES {
        return Err(SuccessiveError::TooFewSamples {
            got: n_samples,
            need: ORACLE_MIN_SAMPLES,
        });
    }
    let g1 = spec.gamma1;
    let l2 = spec.lambda2;
    let half_curvature = 0.5 * g1 * l2; // ξ threshold per unit excursion length
    let xi_min = half_curvature * spec.tau1;
    let delta_shift = 2.0 * g1 * l2 * (spec.gamma2 - spec.gamma1);

    let mut cond_rng = ChaCha12Rng::seed_from_u64(seed);
    cond_rng.set_stream(1);
    let mut uncond_rng = ChaCha12Rng::seed_from_u64(seed);
    uncond_rng.set_stream(2);

    let mut n_up = 0u64;
    let mut n_atom = 0u64;
    let mut survival_counts = vec![0u64; survival_grid.len()];
    let mut qual_n = 0u64;
    let mut qual_sum = 0.0;
    let mut qual_sum_sq = 0.0;
    let mut win_sum = 0.0;
    let mut win_sum_sq = 0.0;
    let mut t1_hits = 0u64;

    for _ in 0..n_samples {
        // Conditional draw: ξ² = ξ_min² + Exp(mean 2λ₂).
        let u: f64 = cond_rng.random();
        let xi_sq = xi_min * xi_min - 2.0 * l2 * (1.0 - u).ln();
        let delta = xi_sq - delta_shift;
        let t2 = if delta > 0.0 {
            delta.sqrt() / half_curvature
        } else {
            0.0
        };
        if delta > 0.0 {
            n_up += 1;
        } else {
            n_atom += 1;
        }
        for (i, &tau) in survival_grid.iter().enumerate() {
            if t2 > tau {
                survival_counts[i] += 1;
            }
        }
        if t2 >= spec.tau2 {
            qual_n += 1;
            qual_sum += t2;
            qual_sum_sq += t2 * t2;
        }
        let w = if t2 >= spec.tau2 { t2 } else { 0.0 };
        win_sum += w;
        win_sum_sq += w * w;

        // Unconditional draw for P(T₁ ≥ τ₁).
        let u2: f64 = uncond_rng.random();
        let xi_u_sq = -2.0 * l2 * (1.0 - u2).ln();
        if xi_u_sq >= xi_min * xi_min {
            t1_hits += 1;
        }
    }

    let t2_survival = survival_grid
        .iter()
        .zip(survival_counts)
        .map(|(&tau, c)| (tau, proportion_estimate(c, n_samples)))
        .collect();
    let mean_t2_given_ge_tau2 = if qual_n > 0 {
        Some(mean_estimate(qual_sum, qual_sum_sq, qual_n))
    } else {
        None
    };
    Ok(OracleReport {
        n_samples,
        p_t1_ge_tau1: proportion_estimate(t1_hits, n_samples),
        p_upcross: proportion_estimate(n_up, n_samples),
        t2_atom: proportion_estimate(n_atom, n_samples),
        t2_survival,
        n_t2_qualifying: qual_n,
        mean_t2_given_ge_tau2,
        window_time_factor: mean_estimate(win_sum, win_sum_sq, n_samples),
    })
}
