//! Implementations of the four commands. Each returns whether every
//! requested validation passed; reports and plot CSVs land in the configured
//! output directory.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{RunConfig, SCHEMA_VERSION};
use super::report::*;
use super::{CliError, SingleLaw};
use crate::acf::{AcfModel, CondStatus, ConditionFlags, SpectralMoments};
use crate::crossings::{
    conditional_upcrossing_stats, detect_crossings, empirical_rates, segment_excursions,
    CrossingKind, ExcursionKind,
};
use crate::gp::{derive_replicate_seed, synthesize_path, SamplePath};
use crate::stats::{validate, ValidationReport};
use crate::successive::{
    parabola_mc_oracle, t2_mass_at_zero, window_probability, T2PositiveLaw, TwoLevelSpec,
};
use crate::theory::{
    large_excursion_length_law, negative_excursion_length_law, rice_rate, up_rate, Law,
    LevelContext, PhysicalErlangLaw,
};

/// Seed-stream tags keeping the Monte Carlo oracles disjoint from the path
/// replicates.
const ORACLE_STREAM_BASE: u64 = 1 << 32;

fn ensure_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| {
        CliError::Config(format!(
            "output directory {} is not writable: {e}",
            cfg.out_dir.display()
        ))
    })
}

fn out_path(cfg: &RunConfig, suffix: &str) -> PathBuf {
    cfg.out_dir.join(format!("{}_{}", cfg.experiment, suffix))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_pairs_csv(path: &Path, header: &str, pairs: &[(f64, f64)]) -> Result<(), CliError> {
    let mut out = Vec::new();
    writeln!(out, "{header}")?;
    for (x, y) in pairs {
        writeln!(out, "{x},{y}")?;
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_law_curve(path: &Path, law: &dyn Law, hi: f64) -> Result<(), CliError> {
    let grid: Vec<f64> = (0..=200).map(|i| hi * i as f64 / 200.0).collect();
    let mut out = Vec::new();
    crate::theory::write_law_csv(law, &grid, &mut out)?;
    fs::write(path, out)?;
    Ok(())
}

fn require_condition(
    flags: &ConditionFlags,
    pick: fn(&ConditionFlags) -> CondStatus,
    name: &str,
    what: &str,
) -> Result<(), CliError> {
    match pick(flags) {
        CondStatus::Satisfied => Ok(()),
        CondStatus::Unsatisfied => Err(CliError::ConditionRefused {
            condition: name.to_string(),
            what: what.to_string(),
            status: "unsatisfied".to_string(),
        }),
        CondStatus::Unknown => Err(CliError::ConditionRefused {
            condition: name.to_string(),
            what: what.to_string(),
            status: "unknown".to_string(),
        }),
    }
}

fn synth_replicate(
    cfg: &RunConfig,
    model: &AcfModel,
    replicate: u64,
) -> Result<SamplePath, CliError> {
    let seed = derive_replicate_seed(cfg.master_seed, replicate);
    Ok(synthesize_path(model, cfg.dt, cfg.samples_per_replicate(), seed)?)
}

fn print_check(label: &str, pass: bool, detail: &str) {
    println!("{}: {label} — {detail}", if pass { "PASS" } else { "FAIL" });
}

/// Synthesize and export the configured replicates.
pub fn cmd_synthesize(cfg: &RunConfig) -> Result<bool, CliError> {
    ensure_out_dir(cfg)?;
    let model = cfg.model.build()?;
    let mut entries = Vec::new();
    for r in 0..cfg.replicates {
        let path = synth_replicate(cfg, &model, r)?;
        if path.clipped_mass > 0.0 {
            eprintln!(
                "warning: replicate {r}: clipped spectral mass {:.3e}",
                path.clipped_mass
            );
        }
        let file = out_path(cfg, &format!("path_{r:03}.csv"));
        let mut buf = Vec::new();
        path.write_csv(&mut buf)?;
        fs::write(&file, buf)?;
        entries.push(PathEntry {
            replicate: r,
            seed: path.seed,
            file,
            clipped_mass: path.clipped_mass,
            method: path.method,
        });
    }
    let manifest = SynthesizeManifest {
        schema_version: SCHEMA_VERSION.to_string(),
        command: "synthesize".to_string(),
        experiment: cfg.experiment.clone(),
        config: cfg.echo(),
        samples_per_replicate: cfg.samples_per_replicate(),
        paths: entries,
    };
    write_json(&out_path(cfg, "manifest.json"), &manifest)?;
    println!(
        "synthesized {} replicate(s) of {} samples into {}",
        cfg.replicates,
        cfg.samples_per_replicate(),
        cfg.out_dir.display()
    );
    Ok(true)
}

fn moments_and_context(
    model: &AcfModel,
    gamma: f64,
) -> Result<(SpectralMoments, LevelContext), CliError> {
    let moments = model.spectral_moments()?;
    let ctx = LevelContext::from_moments(gamma, &moments)?;
    Ok((moments, ctx))
}

/// Single-level validations: crossing rates and the three distribution laws.
pub fn cmd_validate_single(cfg: &RunConfig, which: SingleLaw) -> Result<bool, CliError> {
    ensure_out_dir(cfg)?;
    let model = cfg.model.build()?;
    let conditions = model.check_conditions();
    match which {
        SingleLaw::RiceRate => {
            require_condition(&conditions, |f| f.eq2, "eq2", "the finite crossing rate")?
        }
        SingleLaw::LargeExcursion => require_condition(
            &conditions,
            |f| f.eq5_6,
            "eq5_6",
            "the large-excursion parabola law",
        )?,
        SingleLaw::IntervalErlang | SingleLaw::NegativeExcursion => require_condition(
            &conditions,
            |f| f.eq8_9,
            "eq8_9",
            "the up-crossing interval law",
        )?,
    }
    let (_, ctx) = moments_and_context(&model, cfg.gamma)?;

    let mut rate_check = None;
    let mut distribution_checks: Vec<ValidationReport> = Vec::new();

    match which {
        SingleLaw::RiceRate => {
            let mut n_up = 0usize;
            let mut n_down = 0usize;
            let mut duration = 0.0;
            for r in 0..cfg.replicates {
                let path = synth_replicate(cfg, &model, r)?;
                let rates = empirical_rates(&path, cfg.gamma);
                n_up += rates.n_up;
                n_down += rates.n_down;
                duration += path.duration();
            }
            let empirical_up = n_up as f64 / duration;
            let empirical_down = n_down as f64 / duration;
            let empirical_total = empirical_up + empirical_down;
            let theory_total = rice_rate(&ctx);
            let theory_up = up_rate(&ctx);
            let rel = |emp: f64, th: f64| ((emp - th) / th).abs();
            let max_rel_error = rel(empirical_total, theory_total)
                .max(rel(empirical_up, theory_up))
                .max(rel(empirical_down, theory_up));
            let n_events = n_up + n_down;
            let pass = max_rel_error <= cfg.tolerance && n_events >= cfg.min_events;
            print_check(
                "rice_rate",
                pass,
                &format!(
                    "empirical total {empirical_total:.6} vs theory {theory_total:.6} (max rel err {max_rel_error:.4}, {n_events} events)"
                ),
            );
            rate_check = Some(RateCheck {
                level: cfg.gamma,
                n_events,
                empirical_up,
                empirical_down,
                empirical_total,
                theory_up,
                theory_down: theory_up,
                theory_total,
                max_rel_error,
                tolerance: cfg.tolerance,
                pass,
            });
        }
        SingleLaw::LargeExcursion => {
            let law = large_excursion_length_law(&ctx)?;
            let mut lengths = Vec::new();
            for r in 0..cfg.replicates {
                let path = synth_replicate(cfg, &model, r)?;
                lengths.extend(
                    segment_excursions(&path, cfg.gamma).lengths_of(ExcursionKind::UpAbove),
                );
            }
            let report = validate(
                "large_excursion_lengths",
                &lengths,
                &law,
                cfg.tolerance,
                cfg.min_events,
            );
            print_check(
                &report.label.clone(),
                report.pass,
                &format!("ks {:.4} (n = {})", report.ks_distance, report.n_events),
            );
            write_law_curve(
                &out_path(cfg, "large_excursion_theory.csv"),
                &law,
                law.quantile(0.999),
            )?;
            write_pairs_csv(
                &out_path(cfg, "large_excursion_empirical.csv"),
                "x,ecdf",
                &report.empirical_grid,
            )?;
            distribution_checks.push(report);
        }
        SingleLaw::NegativeExcursion => {
            let law = negative_excursion_length_law(&ctx, &conditions)?;
            let mut lengths = Vec::new();
            for r in 0..cfg.replicates {
                let path = synth_replicate(cfg, &model, r)?;
                lengths.extend(
                    segment_excursions(&path, cfg.gamma).lengths_of(ExcursionKind::UpAbove),
                );
            }
            let report = validate(
                "negative_excursion_lengths",
                &lengths,
                &law,
                cfg.tolerance,
                cfg.min_events,
            );
            print_check(
                &report.label.clone(),
                report.pass,
                &format!("ks {:.4} (n = {})", report.ks_distance, report.n_events),
            );
            write_law_curve(
                &out_path(cfg, "negative_excursion_theory.csv"),
                &law,
                law.quantile(0.999),
            )?;
            write_pairs_csv(
                &out_path(cfg, "negative_excursion_empirical.csv"),
                "x,ecdf",
                &report.empirical_grid,
            )?;
            distribution_checks.push(report);
        }
        SingleLaw::IntervalErlang => {
            let mu = up_rate(&ctx);
            let mut down_times_per_rep: Vec<Vec<f64>> = Vec::new();
            for r in 0..cfg.replicates {
                let path = synth_replicate(cfg, &model, r)?;
                down_times_per_rep.push(
                    detect_crossings(&path, cfg.gamma)
                        .into_iter()
                        .filter(|e| e.kind == CrossingKind::Down)
                        .map(|e| e.time)
                        .collect(),
                );
            }
            for k in 1..=3u32 {
                let law = PhysicalErlangLaw::new(k, mu)?;
                let mut intervals = Vec::new();
                for times in &down_times_per_rep {
                    for i in 0..times.len().saturating_sub(k as usize) {
                        intervals.push(times[i + k as usize] - times[i]);
                    }
                }
                let tolerance = if k == 1 { cfg.tolerance } else { cfg.tolerance_k };
                let report = validate(
                    &format!("interval_to_{k}th_downcrossing"),
                    &intervals,
                    &law,
                    tolerance,
                    cfg.min_events,
                );
                print_check(
                    &report.label.clone(),
                    report.pass,
                    &format!("ks {:.4} (n = {})", report.ks_distance, report.n_events),
                );
                write_law_curve(
                    &out_path(cfg, &format!("interval_k{k}_theory.csv")),
                    &law,
                    law.quantile(0.999),
                )?;
                write_pairs_csv(
                    &out_path(cfg, &format!("interval_k{k}_empirical.csv")),
                    "x,ecdf",
                    &report.empirical_grid,
                )?;
                distribution_checks.push(report);
            }
        }
    }

    let pass = rate_check.as_ref().map(|r| r.pass).unwrap_or(true)
        && distribution_checks.iter().all(|r| r.pass);
    let report = SingleLawReport {
        schema_version: SCHEMA_VERSION.to_string(),
        command: "validate-single".to_string(),
        which: which.name().to_string(),
        experiment: cfg.experiment.clone(),
        config: cfg.echo(),
        level: cfg.gamma,
        conditions,
        rate_check,
        distribution_checks,
        pass,
    };
    write_json(&out_path(cfg, &format!("{}_report.json", which.name())), &report)?;
    Ok(pass)
}

/// Two-level validations: conditional up-crossing means over a Δγ sweep and
/// the mixed law of T₂, each against the closed forms and the parabola
/// oracle.
pub fn cmd_validate_successive(cfg: &RunConfig) -> Result<bool, CliError> {
    ensure_out_dir(cfg)?;
    let model = cfg.model.build()?;
    let conditions = model.check_conditions();
    require_condition(
        &conditions,
        |f| f.eq5_6,
        "eq5_6",
        "the successive-level conditional laws",
    )?;
    let moments = model.spectral_moments()?;
    let lambda2 = moments.lambda2;
    let gamma1 = cfg.gamma1;

    let steps = cfg.delta_gamma_steps;
    let delta_gammas: Vec<f64> = (0..steps)
        .map(|i| {
            if steps == 1 {
                0.0
            } else {
                cfg.delta_gamma_max * i as f64 / (steps - 1) as f64
            }
        })
        .collect();

    let mut ups = vec![0u64; steps];
    let mut qual = vec![0usize; steps];
    let mut t2_samples: Vec<f64> = Vec::new();
    for r in 0..cfg.replicates {
        let path = synth_replicate(cfg, &model, r)?;
        for (i, dg) in delta_gammas.iter().enumerate() {
            let stats = conditional_upcrossing_stats(&path, gamma1, gamma1 + dg, cfg.tau1)?;
            ups[i] += stats.total_upcrossings;
            qual[i] += stats.n_qualifying;
        }
        let stats = conditional_upcrossing_stats(&path, gamma1, cfg.gamma2, cfg.tau1)?;
        t2_samples.extend(stats.t2_samples);
    }

    let mut grid_points = Vec::with_capacity(steps);
    for (i, &dg) in delta_gammas.iter().enumerate() {
        let spec = TwoLevelSpec::new(gamma1, gamma1 + dg, cfg.tau1, 0.0, lambda2)?;
        let theory_mean = crate::successive::mean_upcrossings_conditional(&spec);
        let oracle = parabola_mc_oracle(
            &spec,
            cfg.oracle_samples,
            derive_replicate_seed(cfg.master_seed, ORACLE_STREAM_BASE + i as u64),
            &[],
        )?;
        let empirical_mean = if qual[i] > 0 {
            ups[i] as f64 / qual[i] as f64
        } else {
            f64::NAN
        };
        let abs_error = (empirical_mean - theory_mean).abs();
        let pass = qual[i] >= cfg.min_events && abs_error <= cfg.tolerance;
        print_check(
            &format!("mean_upcrossings dgamma={dg:.3}"),
            pass,
            &format!(
                "empirical {empirical_mean:.4} vs theory {theory_mean:.4} (oracle {:.4} ± {:.4}, n = {})",
                oracle.p_upcross.value, oracle.p_upcross.std_error, qual[i]
            ),
        );
        grid_points.push(MeanUpcrossPoint {
            delta_gamma: dg,
            gamma2: gamma1 + dg,
            n_qualifying: qual[i],
            empirical_mean,
            theory_mean,
            oracle_mean: oracle.p_upcross.value,
            oracle_std_error: oracle.p_upcross.std_error,
            abs_error,
            tolerance: cfg.tolerance,
            pass,
        });
    }

    // T₂: atom plus positive-part distribution at (γ₁, γ₂).
    let spec2 = TwoLevelSpec::new(gamma1, cfg.gamma2, cfg.tau1, 0.0, lambda2)?;
    let oracle2 = parabola_mc_oracle(
        &spec2,
        cfg.oracle_samples,
        derive_replicate_seed(cfg.master_seed, ORACLE_STREAM_BASE + steps as u64),
        &[],
    )?;
    let n_qualifying = t2_samples.len();
    let positive: Vec<f64> = t2_samples.iter().copied().filter(|&t| t > 0.0).collect();
    let atom_empirical = if n_qualifying > 0 {
        (n_qualifying - positive.len()) as f64 / n_qualifying as f64
    } else {
        f64::NAN
    };
    let atom_theory = t2_mass_at_zero(&spec2);
    let atom_pass = n_qualifying >= cfg.min_events
        && (atom_empirical - atom_theory).abs() <= cfg.atom_tolerance;
    print_check(
        "t2_atom",
        atom_pass,
        &format!(
            "empirical {atom_empirical:.4} vs theory {atom_theory:.4} (oracle {:.4} ± {:.4}, n = {n_qualifying})",
            oracle2.t2_atom.value, oracle2.t2_atom.std_error
        ),
    );
    let positive_law = T2PositiveLaw { spec: spec2 };
    let positive_report = validate(
        "t2_positive_lengths",
        &positive,
        &positive_law,
        cfg.tolerance_k,
        cfg.min_events / 2,
    );
    print_check(
        "t2_positive_ks",
        positive_report.pass,
        &format!(
            "ks {:.4} (n = {})",
            positive_report.ks_distance, positive_report.n_events
        ),
    );
    write_law_curve(
        &out_path(cfg, "t2_theory.csv"),
        &positive_law,
        positive_law.quantile(0.999),
    )?;
    write_pairs_csv(
        &out_path(cfg, "t2_empirical.csv"),
        "x,ecdf",
        &positive_report.empirical_grid,
    )?;
    {
        let mut out = Vec::new();
        writeln!(out, "delta_gamma,n_qualifying,empirical,theory,oracle,oracle_se")?;
        for p in &grid_points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.delta_gamma,
                p.n_qualifying,
                p.empirical_mean,
                p.theory_mean,
                p.oracle_mean,
                p.oracle_std_error
            )?;
        }
        fs::write(out_path(cfg, "mean_upcross_grid.csv"), out)?;
    }

    let pass = grid_points.iter().all(|p| p.pass) && atom_pass && positive_report.pass;
    let report = SuccessiveReport {
        schema_version: SCHEMA_VERSION.to_string(),
        command: "validate-successive".to_string(),
        experiment: cfg.experiment.clone(),
        config: cfg.echo(),
        min_events: cfg.min_events,
        mean_upcrossings: grid_points,
        t2: T2Section {
            gamma2: cfg.gamma2,
            n_qualifying,
            n_positive: positive.len(),
            atom_empirical,
            atom_theory,
            atom_oracle: oracle2.t2_atom.value,
            atom_oracle_std_error: oracle2.t2_atom.std_error,
            atom_tolerance: cfg.atom_tolerance,
            atom_pass,
            positive_ks: positive_report.ks_distance,
            ks_tolerance: cfg.tolerance_k,
            ks_pass: positive_report.pass,
        },
        pass,
    };
    write_json(&out_path(cfg, "successive_report.json"), &report)?;
    Ok(pass)
}

/// Closed-form window probability with its Monte Carlo cross-check.
pub fn cmd_window_prob(cfg: &RunConfig) -> Result<bool, CliError> {
    ensure_out_dir(cfg)?;
    let model = cfg.model.build()?;
    let conditions = model.check_conditions();
    require_condition(&conditions, |f| f.eq2, "eq2", "a finite lambda2")?;
    let moments = model.spectral_moments()?;
    let spec = TwoLevelSpec::new(cfg.gamma1, cfg.gamma2, cfg.tau1, cfg.tau2, moments.lambda2)?;
    let ctx1 = LevelContext::from_moments(cfg.gamma1, &moments)?;
    let up = up_rate(&ctx1);
    let w = window_probability(&spec, up)?;
    let oracle = parabola_mc_oracle(
        &spec,
        cfg.oracle_samples,
        derive_replicate_seed(cfg.master_seed, ORACLE_STREAM_BASE),
        &[cfg.tau2],
    )?;
    let oracle_p = oracle.window_probability(up);
    let pass = (w.p - oracle_p.value).abs() <= 3.0 * oracle_p.std_error + 1e-12;
    print_check(
        "window_probability",
        pass,
        &format!(
            "{:?}: P = {:.7e} (oracle {:.7e} ± {:.1e}); V = {:.6}, tau1* = {:.6}, tau2* = {}",
            w.case,
            w.p,
            oracle_p.value,
            oracle_p.std_error,
            w.v,
            w.tau1_star,
            w.tau2_star
                .map(|t| format!("{t:.6}"))
                .unwrap_or_else(|| "undefined".to_string()),
        ),
    );
    let report = WindowReport {
        schema_version: SCHEMA_VERSION.to_string(),
        command: "window-prob".to_string(),
        experiment: cfg.experiment.clone(),
        inputs: WindowInputs {
            gamma1: spec.gamma1,
            gamma2: spec.gamma2,
            tau1: spec.tau1,
            tau2: spec.tau2,
            lambda2: spec.lambda2,
            model: model.to_string(),
            up_rate_gamma1: up,
        },
        derived: WindowDerived {
            v: w.v,
            tau1_star: w.tau1_star,
            tau2_star: w.tau2_star,
        },
        outputs: WindowOutputs {
            case: w.case,
            p: w.p,
            expected_occupied_time: w.p * cfg.total_time,
            window_length: cfg.total_time,
        },
        oracle: WindowOracleSection {
            n_samples: oracle.n_samples,
            p_estimate: oracle_p.value,
            p_std_error: oracle_p.std_error,
            p_t1_ge_tau1: oracle.p_t1_ge_tau1,
            window_time_factor: oracle.window_time_factor,
        },
        pass,
    };
    write_json(&out_path(cfg, "window_report.json"), &report)?;
    Ok(pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::ModelSpec;

    fn test_config(dir: &Path) -> RunConfig {
        RunConfig {
            out_dir: dir.to_path_buf(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn synthesize_writes_paths_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = test_config(dir.path());
        cfg.total_time = 50.0;
        cfg.replicates = 3;
        assert!(cmd_synthesize(&cfg).unwrap());
        for r in 0..3 {
            assert!(dir.path().join(format!("run_path_{r:03}.csv")).exists());
        }
        let manifest = fs::read_to_string(dir.path().join("run_manifest.json")).unwrap();
        assert!(manifest.contains("\"schema_version\": \"1\""));
        assert!(manifest.contains("squared_exponential"));
    }

    #[test]
    fn synthesize_is_byte_identical_across_runs() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        for dir in [dir_a.path(), dir_b.path()] {
            let mut cfg = test_config(dir);
            cfg.total_time = 50.0;
            cfg.replicates = 2;
            cmd_synthesize(&cfg).unwrap();
        }
        for name in ["run_path_000.csv", "run_path_001.csv"] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn validate_single_refuses_unmet_conditions() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = test_config(dir.path());
        cfg.model = ModelSpec::Exponential { d_c: 5.0 };
        let err = cmd_validate_single(&cfg, SingleLaw::LargeExcursion).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("eq5_6"), "got: {msg}");
        let err = cmd_validate_single(&cfg, SingleLaw::RiceRate).unwrap_err();
        assert!(err.to_string().contains("eq2"));
    }

    #[test]
    fn window_prob_reports_case_and_oracle() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = test_config(dir.path());
        cfg.tau1 = 3.0;
        cfg.oracle_samples = 100_000;
        assert!(cmd_window_prob(&cfg).unwrap());
        let report = fs::read_to_string(dir.path().join("run_window_report.json")).unwrap();
        assert!(report.contains("\"case\": \"case4\""));
        assert!(report.contains("tau2_star"));
    }
}
