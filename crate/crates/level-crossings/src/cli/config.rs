//! Run configuration: flat `key = value` files with cosmetic `[sections]`,
//! overridable by command-line flags of the same names (flags win).

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::CliError;
use crate::acf::AcfModel;

pub const SCHEMA_VERSION: &str = "1";

/// Which autocorrelation model a run uses.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpec {
    Exponential { d_c: f64 },
    SquaredExponential { d_c: f64 },
    Tabulated { table: PathBuf },
}

impl ModelSpec {
    pub fn build(&self) -> Result<AcfModel, CliError> {
        match self {
            ModelSpec::Exponential { d_c } => Ok(AcfModel::exponential(*d_c)?),
            ModelSpec::SquaredExponential { d_c } => Ok(AcfModel::squared_exponential(*d_c)?),
            ModelSpec::Tabulated { table } => {
                let file = fs::File::open(table)?;
                let model = AcfModel::from_csv(BufReader::new(file))?;
                if (model.lag0_scale() - 1.0).abs() > 1e-9 {
                    eprintln!(
                        "warning: tabulated ACF lag-0 value {} differs from 1; values were normalized",
                        model.lag0_scale()
                    );
                }
                Ok(model)
            }
        }
    }
}

/// Full configuration of one command run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Time step of the sampling grid.
    pub dt: f64,
    /// Time span per replicate.
    pub total_time: f64,
    pub replicates: u64,
    pub master_seed: u64,
    /// Single-level commands use `gamma`; two-level commands use
    /// `gamma1`/`gamma2` with the conditioning lengths.
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// Sweep grid for the conditional-mean validation: Δγ from 0 to
    /// `delta_gamma_max` in `delta_gamma_steps` points.
    pub delta_gamma_max: f64,
    pub delta_gamma_steps: usize,
    pub min_events: usize,
    /// KS / relative-error gate for the primary comparison of a command.
    pub tolerance: f64,
    /// KS gate for the higher-order interval laws (k ≥ 2) and the
    /// conditional T₂ distribution, which carry more estimation noise.
    pub tolerance_k: f64,
    /// Absolute gate on the T₂ atom comparison.
    pub atom_tolerance: f64,
    pub oracle_samples: u64,
    pub experiment: String,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSpec::SquaredExponential { d_c: 2.0 },
            dt: 0.1,
            total_time: 10_000.0,
            replicates: 4,
            master_seed: 42,
            gamma: 2.5,
            gamma1: 2.5,
            gamma2: 2.7,
            tau1: 0.0,
            tau2: 0.0,
            delta_gamma_max: 0.5,
            delta_gamma_steps: 6,
            min_events: 1000,
            tolerance: 0.05,
            tolerance_k: 0.07,
            atom_tolerance: 0.03,
            oracle_samples: 1_000_000,
            experiment: "run".to_string(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Samples per replicate for the configured grid.
    pub fn samples_per_replicate(&self) -> usize {
        (self.total_time / self.dt).round() as usize + 1
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.total_time / self.dt < 2.0 {
            return Err(CliError::Config(format!(
                "total_time/dt must be at least 2, got {}",
                self.total_time / self.dt
            )));
        }
        if self.replicates < 1 {
            return Err(CliError::Config("replicates must be at least 1".to_string()));
        }
        if self.delta_gamma_steps < 1 {
            return Err(CliError::Config("delta_gamma_steps must be at least 1".to_string()));
        }
        Ok(())
    }

    /// Load a config file and apply it over the defaults.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = RunConfig::default();
        for (key, value, line) in parse_key_values(&text)? {
            config.set(&key, &value).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("line {line}: {msg}")),
                other => other,
            })?;
        }
        Ok(config)
    }

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        fn num(key: &str, value: &str) -> Result<f64, CliError> {
            value
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{key}: expected a number, got {value:?}")))
        }
        fn int(key: &str, value: &str) -> Result<u64, CliError> {
            value
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("{key}: expected an integer, got {value:?}")))
        }
        match key {
            "kind" => {
                self.model = match value {
                    "exponential" => ModelSpec::Exponential { d_c: self.model_d_c() },
                    "squared_exponential" => {
                        ModelSpec::SquaredExponential { d_c: self.model_d_c() }
                    }
                    "tabulated" => ModelSpec::Tabulated { table: PathBuf::new() },
                    other => {
                        return Err(CliError::Config(format!(
                            "kind: expected exponential | squared_exponential | tabulated, got {other:?}"
                        )))
                    }
                };
            }
            "d_c" => {
                let d_c = num(key, value)?;
                self.model = match &self.model {
                    ModelSpec::Exponential { .. } => ModelSpec::Exponential { d_c },
                    ModelSpec::SquaredExponential { .. } => {
                        ModelSpec::SquaredExponential { d_c }
                    }
                    ModelSpec::Tabulated { .. } => {
                        return Err(CliError::Config(
                            "d_c does not apply to a tabulated model".to_string(),
                        ))
                    }
                };
            }
            "table" => self.model = ModelSpec::Tabulated { table: PathBuf::from(value) },
            "dt" => self.dt = num(key, value)?,
            "total_time" => self.total_time = num(key, value)?,
            "replicates" => self.replicates = int(key, value)?,
            "master_seed" => self.master_seed = int(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "gamma1" => self.gamma1 = num(key, value)?,
            "gamma2" => self.gamma2 = num(key, value)?,
            "tau1" => self.tau1 = num(key, value)?,
            "tau2" => self.tau2 = num(key, value)?,
            "delta_gamma_max" => self.delta_gamma_max = num(key, value)?,
            "delta_gamma_steps" => self.delta_gamma_steps = int(key, value)? as usize,
            "min_events" => self.min_events = int(key, value)? as usize,
            "tolerance" => self.tolerance = num(key, value)?,
            "tolerance_k" => self.tolerance_k = num(key, value)?,
            "atom_tolerance" => self.atom_tolerance = num(key, value)?,
            "oracle_samples" => self.oracle_samples = int(key, value)?,
            "experiment" => self.experiment = value.to_string(),
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(CliError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    fn model_d_c(&self) -> f64 {
        match &self.model {
            ModelSpec::Exponential { d_c } | ModelSpec::SquaredExponential { d_c } => *d_c,
            ModelSpec::Tabulated { .. } => 2.0,
        }
    }

    /// Flat view of the effective configuration for report echoes.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        match &self.model {
            ModelSpec::Exponential { d_c } => {
                map.insert("kind".into(), "exponential".into());
                map.insert("d_c".into(), d_c.to_string());
            }
            ModelSpec::SquaredExponential { d_c } => {
                map.insert("kind".into(), "squared_exponential".into());
                map.insert("d_c".into(), d_c.to_string());
            }
            ModelSpec::Tabulated { table } => {
                map.insert("kind".into(), "tabulated".into());
                map.insert("table".into(), table.display().to_string());
            }
        }
        map.insert("dt".into(), self.dt.to_string());
        map.insert("total_time".into(), self.total_time.to_string());
        map.insert("replicates".into(), self.replicates.to_string());
        map.insert("master_seed".into(), self.master_seed.to_string());
        map.insert("gamma".into(), self.gamma.to_string());
        map.insert("gamma1".into(), self.gamma1.to_string());
        map.insert("gamma2".into(), self.gamma2.to_string());
        map.insert("tau1".into(), self.tau1.to_string());
        map.insert("tau2".into(), self.tau2.to_string());
        map
    }
}

/// Parse `key = value` lines; `[section]` headers group keys visually but do
/// not namespace them. `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String, usize)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(CliError::Config(format!(
                    "line {}: unterminated section header {line:?}",
                    i + 1
                )));
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected key = value, got {line:?}",
                i + 1
            )));
        };
        out.push((key.trim().to_string(), value.trim().to_string(), i + 1));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let text = "\n# comment\n[model]\nkind = squared_exponential\nd_c = 5\n[run]\ndt = 0.1\ntotal_time = 100\n";
        let pairs = parse_key_values(text).unwrap();
        assert_eq!(pairs.len(), 4);
        assert_eq!(pairs[0].0, "kind");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_key_values("dt 0.1").is_err());
        assert!(parse_key_values("[model").is_err());
    }

    #[test]
    fn set_builds_model_in_any_key_order() {
        let mut c = RunConfig::default();
        c.set("d_c", "5").unwrap();
        c.set("kind", "exponential").unwrap();
        assert_eq!(c.model, ModelSpec::Exponential { d_c: 5.0 });

        let mut c2 = RunConfig::default();
        c2.set("kind", "exponential").unwrap();
        c2.set("d_c", "5").unwrap();
        assert_eq!(c2.model, ModelSpec::Exponential { d_c: 5.0 });
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut c = RunConfig::default();
        let err = c.set("dtt", "0.1").unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }

    #[test]
    fn validates_grid() {
        let mut c = RunConfig::default();
        c.total_time = 0.05;
        c.dt = 0.1;
        assert!(c.validate().is_err());
        c.total_time = 100.0;
        assert!(c.validate().is_ok());
        assert_eq!(c.samples_per_replicate(), 1001);
    }
}
