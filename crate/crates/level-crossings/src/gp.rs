//! Sample-path synthesis for stationary Gaussian processes.
//!
//! Paths are generated on a uniform grid by circulant embedding: the
//! covariance sequence R(k·dt) is embedded in a circulant matrix diagonalized
//! by the FFT, complex Gaussian noise is colored by the eigenvalue square
//! roots, and the real part of the transform is an exact realization whenever
//! the embedding is non-negative definite. Small negative eigenvalue mass
//! (≤ 10⁻³ of the spectrum) is clipped to zero and reported on the path;
//! larger violations fall back to a dense covariance square root for short
//! paths and are rejected otherwise.
//!
//! All randomness comes from the ChaCha12 counter-based stream cipher, seeded
//! from a single `u64`. Per-replicate seeds are derived from
//! `(master_seed, replicate_index)` with [`derive_replicate_seed`], so
//! replicates are independent and any run is reproducible from its master
//! seed alone.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acf::{AcfError, AcfModel};

/// Largest fraction of negative eigenvalue mass the embedding may clip before
/// the model/grid combination is rejected.
pub const CLIP_TOLERANCE: f64 = 1e-3;

/// Longest path the dense covariance square-root fallback will attempt.
pub const DIRECT_MAX_LEN: usize = 4096;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("need n >= 2 and dt > 0, got n = {n}, dt = {dt}")]
    InvalidGrid { n: usize, dt: f64 },

    #[error(transparent)]
    Acf(#[from] AcfError),

    #[error("circulant embedding rejected: clipped eigenvalue mass {clipped_mass:.3e} exceeds {CLIP_TOLERANCE:.0e} and n = {n} is beyond the dense fallback limit {DIRECT_MAX_LEN}")]
    EmbeddingRejected { clipped_mass: f64, n: usize },

    #[error("covariance matrix is not positive definite even with jitter; the table is not a valid autocorrelation")]
    CholeskyFailed,

    #[error("synthesis produced a non-finite sample")]
    NonFiniteOutput,

    #[error("lambda2 must be finite and positive, got {0}")]
    InvalidLambda2(f64),
}

/// How a path was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMethod {
    /// Frequency-domain circulant embedding (exact when `clipped_mass` is 0).
    Circulant,
    /// Dense covariance Cholesky square root.
    DirectCholesky,
}

/// A uniformly sampled realization of the process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    /// Time step between consecutive samples.
    pub dt: f64,
    /// X at t = 0, dt, 2·dt, …
    pub values: Vec<f64>,
    /// Seed the realization was drawn from.
    pub seed: u64,
    /// Description of the generating autocorrelation model.
    pub model_id: String,
    /// Fraction of spectral mass clipped from the embedding (0 when exact).
    pub clipped_mass: f64,
    pub method: SynthesisMethod,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of sample `i`.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Total covered time span, (n − 1)·dt.
    pub fn duration(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    /// Export as CSV `t,x` with a comment header recording the provenance.
    pub fn write_csv<W: io::Write>(&self, writer: &mut W) -> io::Result<()> {
        writeln!(
            writer,
            "# model={}, dt={}, n={}, seed={}",
            self.model_id,
            self.dt,
            self.values.len(),
            self.seed
        )?;
        writeln!(writer, "t,x")?;
        for (i, x) in self.values.iter().enumerate() {
            writeln!(writer, "{},{}", self.time(i), x)?;
        }
        Ok(())
    }
}

/// Mix a master seed and replicate index into an independent stream seed.
pub fn derive_replicate_seed(master_seed: u64, replicate: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(replicate.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Synthesize a realization of the zero-mean unit-variance process with the
/// given autocorrelation on the grid t = 0, dt, …, (n−1)·dt.
///
/// Deterministic: identical `(model, dt, n, seed)` produce bit-identical
/// values.
pub fn synthesize_path(
    model: &AcfModel,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<SamplePath, GpError> {
    if n < 2 || !(dt > 0.0 && dt.is_finite()) {
        return Err(GpError::InvalidGrid { n, dt });
    }

    // Embedding size: padded to a power of two at least twice the path
    // length, shrunk to the minimal even embedding when a tabulated model
    // cannot be evaluated that far out.
    let minimal = 2 * (n - 1);
    let mut m = (2 * n).next_power_of_two().max(16);
    if (m / 2) as f64 * dt > model.max_lag() {
        m = minimal;
    }

    let half = m / 2;
    let mut cov = Vec::with_capacity(half + 1);
    for k in 0..=half {
        cov.push(model.eval(k as f64 * dt)?);
    }

    let mut spectrum: Vec<Complex64> = (0..m)
        .map(|j| Complex64::new(cov[j.min(m - j)], 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut spectrum);

    let mut negative = 0.0;
    let mut total = 0.0;
    for e in &spectrum {
        total += e.re.abs();
        if e.re < 0.0 {
            negative += -e.re;
        }
    }
    let clipped_mass = if total > 0.0 { negative / total } else { 0.0 };

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (values, method) = if clipped_mass <= CLIP_TOLERANCE {
        let mut buf = spectrum;
        for e in buf.iter_mut() {
            let lambda = e.re.max(0.0);
            let u: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            *e = lambda.sqrt() * Complex64::new(u, v);
        }
        planner.plan_fft_forward(m).process(&mut buf);
        let scale = 1.0 / (m as f64).sqrt();
        let values: Vec<f64> = buf[..n].iter().map(|c| c.re * scale).collect();
        (values, SynthesisMethod::Circulant)
    } else if n <= DIRECT_MAX_LEN {
        (cholesky_path(model, dt, n, &mut rng)?, SynthesisMethod::DirectCholesky)
    } else {
        return Err(GpError::EmbeddingRejected { clipped_mass, n });
    };

    if values.iter().any(|x| !x.is_finite()) {
        return Err(GpError::NonFiniteOutput);
    }

    Ok(SamplePath {
        dt,
        values,
        seed,
        model_id: model.to_string(),
        clipped_mass: if method == SynthesisMethod::Circulant {
            clipped_mass
        } else {
            0.0
        },
        method,
    })
}

/// Dense route: Cholesky factor of the Toeplitz covariance applied to white
/// noise. Escalating diagonal jitter absorbs roundoff-level indefiniteness.
fn cholesky_path(
    model: &AcfModel,
    dt: f64,
    n: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<f64>, GpError> {
    let mut cov = Vec::with_capacity(n);
    for k in 0..n {
        cov.push(model.eval(k as f64 * dt)?);
    }
    let mut factor = None;
    for jitter in [0.0, 1e-12, 1e-10, 1e-8] {
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                a[i * n + j] = cov[i - j];
            }
            a[i * n + i] += jitter;
        }
        if cholesky_in_place(&mut a, n) {
            factor = Some(a);
            break;
        }
    }
    let l = factor.ok_or(GpError::CholeskyFailed)?;
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Ok((0..n)
        .map(|i| (0..=i).map(|k| l[i * n + k] * z[k]).sum())
        .collect())
}

/// Lower Cholesky factorization, returning false when the matrix is not
/// positive definite.
fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

/// Draw the Rayleigh slope ξ of the asymptotic excursion parabola:
/// P(ξ ≤ x) = 1 − exp(−x²/(2λ₂)), so ξ² is exponential with mean 2λ₂.
pub fn sample_rayleigh_xi(lambda2: f64, seed: u64) -> Result<f64, GpError> {
    if !(lambda2 > 0.0 && lambda2.is_finite()) {
        return Err(GpError::InvalidLambda2(lambda2));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let u: f64 = rng.random();
    Ok((-2.0 * lambda2 * (1.0 - u).ln()).sqrt())
}
