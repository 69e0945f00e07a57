//! JSON report payloads. Field order is fixed by the struct definitions and
//! no timestamps are recorded, so identical runs serialize byte-identically.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::acf::ConditionFlags;
use crate::gp::SynthesisMethod;
use crate::stats::ValidationReport;
use crate::successive::{Estimate, WindowCase};

#[derive(Debug, Serialize)]
pub struct PathEntry {
    pub replicate: u64,
    pub seed: u64,
    pub file: PathBuf,
    pub clipped_mass: f64,
    pub method: SynthesisMethod,
}

#[derive(Debug, Serialize)]
pub struct SynthesizeManifest {
    pub schema_version: String,
    pub command: String,
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub samples_per_replicate: usize,
    pub paths: Vec<PathEntry>,
}

/// Closed-form vs empirical crossing rates at one level.
#[derive(Debug, Serialize)]
pub struct RateCheck {
    pub level: f64,
    pub n_events: usize,
    pub empirical_up: f64,
    pub empirical_down: f64,
    pub empirical_total: f64,
    pub theory_up: f64,
    pub theory_down: f64,
    pub theory_total: f64,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct SingleLawReport {
    pub schema_version: String,
    pub command: String,
    pub which: String,
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub level: f64,
    pub conditions: ConditionFlags,
    pub rate_check: Option<RateCheck>,
    pub distribution_checks: Vec<ValidationReport>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct MeanUpcrossPoint {
    pub delta_gamma: f64,
    pub gamma2: f64,
    pub n_qualifying: usize,
    pub empirical_mean: f64,
    pub theory_mean: f64,
    pub oracle_mean: f64,
    pub oracle_std_error: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct T2Section {
    pub gamma2: f64,
    pub n_qualifying: usize,
    pub n_positive: usize,
    pub atom_empirical: f64,
    pub atom_theory: f64,
    pub atom_oracle: f64,
    pub atom_oracle_std_error: f64,
    pub atom_tolerance: f64,
    pub atom_pass: bool,
    pub positive_ks: f64,
    pub ks_tolerance: f64,
    pub ks_pass: bool,
}

#[derive(Debug, Serialize)]
pub struct SuccessiveReport {
    pub schema_version: String,
    pub command: String,
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub min_events: usize,
    pub mean_upcrossings: Vec<MeanUpcrossPoint>,
    pub t2: T2Section,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct WindowInputs {
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub lambda2: f64,
    pub model: String,
    pub up_rate_gamma1: f64,
}

#[derive(Debug, Serialize)]
pub struct WindowDerived {
    pub v: f64,
    pub tau1_star: f64,
    pub tau2_star: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct WindowOutputs {
    pub case: WindowCase,
    pub p: f64,
    /// The window-independent P multiplied back by the configured window
    /// length: expected time occupied by qualifying successive excursions.
    pub expected_occupied_time: f64,
    pub window_length: f64,
}

#[derive(Debug, Serialize)]
pub struct WindowOracleSection {
    pub n_samples: u64,
    pub p_estimate: f64,
    pub p_std_error: f64,
    pub p_t1_ge_tau1: Estimate,
    pub window_time_factor: Estimate,
}

#[derive(Debug, Serialize)]
pub struct WindowReport {
    pub schema_version: String,
    pub command: String,
    pub experiment: String,
    pub inputs: WindowInputs,
    pub derived: WindowDerived,
    pub outputs: WindowOutputs,
    pub oracle: WindowOracleSection,
    /// Closed form within three oracle standard errors.
    pub pass: bool,
}
