//! Level-crossing statistics of stationary Gaussian processes.
//!
//! This crate simulates zero-mean unit-variance stationary Gaussian processes
//! on a uniform time grid, detects level crossings and excursions on the
//! sampled paths, and provides the matching closed-form results: the Rice
//! crossing rate, the Rayleigh law of excursion lengths above a large level,
//! the Erlang law of intervals between subsequent up-crossings, the
//! exponential law of up-excursions above a large negative level, and the
//! two-level conditional statistics of successive excursions (including the
//! windowed successive-excursion probability).
//!
//! The pieces fit together as a validation pipeline:
//!
//! * [`acf`] — autocorrelation models, spectral moments λ₀/λ₂/λ₄, and the
//!   regularity conditions each model satisfies.
//! * [`gp`] — sample-path synthesis by circulant embedding, seeded and
//!   reproducible.
//! * [`crossings`] — crossing detection, excursion segmentation, empirical
//!   rates and two-level conditional statistics on sampled paths.
//! * [`theory`] — single-level closed forms (Rice rate, Rayleigh, Erlang,
//!   exponential laws, the asymptotic parabola).
//! * [`successive`] — two-level closed forms (conditional up-crossing mean,
//!   the mixed law of T₂, conditional expected lengths, the four-case window
//!   probability) plus a parabola-model Monte Carlo oracle.
//! * [`stats`] — empirical CDFs, histograms, Kolmogorov–Smirnov distances and
//!   validation reports.
//! * [`cli`] — configuration and the `synthesize` / `validate-single` /
//!   `validate-successive` / `window-prob` commands.
//!
//! Runnable walkthroughs for each capability live in the crate's `examples/`
//! directory; `cargo run --example large_excursions` is a good place to start.

pub mod acf;
pub mod cli;
pub mod crossings;
pub mod gp;
pub mod quad;
pub mod stats;
pub mod successive;
pub mod theory;

pub use acf::{AcfModel, CondStatus, ConditionFlags, SpectralMoments};
pub use crossings::{CrossingEvent, CrossingKind, CrossingRates, Excursion, ExcursionKind};
pub use gp::SamplePath;
pub use stats::{EmpiricalDistribution, ValidationReport};
pub use successive::TwoLevelSpec;
pub use theory::{Law, LevelContext};
