//! Crossing detection and excursion statistics on sampled paths.
//!
//! Detection uses the strict sign-change rule: an event is emitted where the
//! signed offsets of two neighboring samples straddle the level, with the
//! crossing instant placed by linear interpolation. Samples exactly equal to
//! the level are bridged — the event fires only if the nearest unequal
//! neighbors on each side straddle, so tangencies produce nothing.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::SamplePath;

#[derive(Debug, Error)]
pub enum CrossingsError {
    #[error("conditional statistics need gamma2 >= gamma1, got gamma1 = {gamma1}, gamma2 = {gamma2}")]
    InvalidLevels { gamma1: f64, gamma2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    Up,
    Down,
}

/// A single level crossing.
///
/// `left_index` is the left of the two straddling samples (the nearest
/// unequal neighbors when samples sitting exactly on the level were bridged);
/// the interpolated `time` lies strictly between the straddling samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub kind: CrossingKind,
    pub time: f64,
    pub left_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcursionKind {
    UpAbove,
    DownBelow,
}

/// A completed excursion: an up-crossing paired with the next down-crossing
/// (or vice versa) with no crossing of the level in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    pub kind: ExcursionKind,
    pub level: f64,
    pub start: f64,
    pub end: f64,
    pub length: f64,
    /// Extreme sample value strictly inside the excursion (max for up, min
    /// for down).
    pub peak: f64,
}

/// Completed excursions plus a count of the boundary-truncated segments that
/// were dropped (their lengths are censored).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSet {
    pub excursions: Vec<Excursion>,
    pub discarded_boundary: usize,
}

impl ExcursionSet {
    pub fn of_kind(&self, kind: ExcursionKind) -> impl Iterator<Item = &Excursion> {
        self.excursions.iter().filter(move |e| e.kind == kind)
    }

    pub fn lengths_of(&self, kind: ExcursionKind) -> Vec<f64> {
        self.of_kind(kind).map(|e| e.length).collect()
    }
}

/// Crossing counts divided by the covered time span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRates {
    pub up_rate: f64,
    pub down_rate: f64,
    pub total_rate: f64,
    pub n_up: usize,
    pub n_down: usize,
}

/// Empirical counterparts of the two-level conditional statistics: per
/// qualifying excursion of the lower level, the up-crossing count of the
/// upper level and the total time spent above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalStats {
    pub n_qualifying: usize,
    pub total_upcrossings: u64,
    /// None when no excursion qualified — deliberately not a fabricated 0.
    pub mean_upcrossings: Option<f64>,
    /// One entry per qualifying excursion; 0 when the upper level was never
    /// reached inside it.
    pub t2_samples: Vec<f64>,
}

/// Detect all crossings of `level`, sorted by time.
pub fn detect_crossings(path: &SamplePath, level: f64) -> Vec<CrossingEvent> {
    let mut events = Vec::new();
    let mut prev: Option<usize> = None;
    for (i, &x) in path.values.iter().enumerate() {
        let d = x - level;
        if d == 0.0 {
            continue;
        }
        if let Some(p) = prev {
            let xp = path.values[p];
            if (xp - level) * d < 0.0 {
                let tp = path.time(p);
                let ti = path.time(i);
                let time = tp + (level - xp) * (ti - tp) / (x - xp);
                let kind = if d > 0.0 {
                    CrossingKind::Up
                } else {
                    CrossingKind::Down
                };
                events.push(CrossingEvent {
                    kind,
                    time,
                    left_index: p,
                });
            }
        }
        prev = Some(i);
    }
    events
}

/// Pair alternating crossings into completed excursions of both kinds,
/// discarding (and counting) the censored segments at the path boundaries.
pub fn segment_excursions(path: &SamplePath, level: f64) -> ExcursionSet {
    let events = detect_crossings(path, level);
    let mut excursions = Vec::new();
    for pair in events.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let kind = match (a.kind, b.kind) {
            (CrossingKind::Up, CrossingKind::Down) => ExcursionKind::UpAbove,
            (CrossingKind::Down, CrossingKind::Up) => ExcursionKind::DownBelow,
            // Crossings of one level strictly alternate.
            _ => unreachable!("non-alternating crossing events"),
        };
        let interior = &path.values[a.left_index + 1..=b.left_index];
        let peak = match kind {
            ExcursionKind::UpAbove => interior.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ExcursionKind::DownBelow => interior.iter().copied().fold(f64::INFINITY, f64::min),
        };
        excursions.push(Excursion {
            kind,
            level,
            start: a.time,
            end: b.time,
            length: b.time - a.time,
            peak,
        });
    }
    // Each boundary censors one segment, except when the path never leaves
    // the level.
    let any_offset = path.values.iter().any(|&x| x != level);
    let discarded_boundary = if events.is_empty() {
        usize::from(any_offset)
    } else {
        2
    };
    ExcursionSet {
        excursions,
        discarded_boundary,
    }
}

/// Crossing counts of `level` divided by the covered time span (n−1)·dt.
pub fn empirical_rates(path: &SamplePath, level: f64) -> CrossingRates {
    let events = detect_crossings(path, level);
    let duration = path.duration();
    let n_up = events.iter().filter(|e| e.kind == CrossingKind::Up).count();
    let n_down = events.len() - n_up;
    let up_rate = n_up as f64 / duration;
    let down_rate = n_down as f64 / duration;
    CrossingRates {
        up_rate,
        down_rate,
        total_rate: up_rate + down_rate,
        n_up,
        n_down,
    }
}

/// Over all completed up-excursions of `gamma1` with length ≥ `tau1`: count
/// the up-crossings of `gamma2` inside each, and collect the total time above
/// `gamma2` inside each as T₂ samples.
pub fn conditional_upcrossing_stats(
    path: &SamplePath,
    gamma1: f64,
    gamma2: f64,
    tau1: f64,
) -> Result<ConditionalStats, CrossingsError> {
    if gamma2 < gamma1 {
        return Err(CrossingsError::InvalidLevels { gamma1, gamma2 });
    }
    let lower = segment_excursions(path, gamma1);
    let upper = segment_excursions(path, gamma2);
    let up_times: Vec<f64> = detect_crossings(path, gamma2)
        .into_iter()
        .filter(|e| e.kind == CrossingKind::Up)
        .map(|e| e.time)
        .collect();
    let upper_excursions: Vec<&Excursion> =
        upper.of_kind(ExcursionKind::UpAbove).collect();

    let mut n_qualifying = 0usize;
    let mut total_upcrossings = 0u64;
    let mut t2_samples = Vec::new();
    for exc in lower.of_kind(ExcursionKind::UpAbove) {
        if exc.length < tau1 {
            continue;
        }
        n_qualifying += 1;
        // Up-crossings of the upper level inside [start, end]; the closed
        // interval makes the gamma2 == gamma1 case count its own opening
        // crossing.
        let lo = up_times.partition_point(|&t| t < exc.start);
        let hi = up_times.partition_point(|&t| t <= exc.end);
        total_upcrossings += (hi - lo) as u64;
        let t2: f64 = upper_excursions
            .iter()
            .filter(|u| u.start >= exc.start && u.end <= exc.end)
            .map(|u| u.length)
            .sum();
        t2_samples.push(t2);
    }
    let mean_upcrossings = if n_qualifying > 0 {
        Some(total_upcrossings as f64 / n_qualifying as f64)
    } else {
        None
    };
    Ok(ConditionalStats {
        n_qualifying,
        total_upcrossings,
        mean_upcrossings,
        t2_samples,
    })
}

/// Export excursions as CSV `kind,start,end,length,peak`.
pub fn write_excursions_csv<W: io::Write>(
    excursions: &[Excursion],
    writer: &mut W,
) -> io::Result<()> {
    writeln!(writer, "kind,start,end,length,peak")?;
    for e in excursions {
        let kind = match e.kind {
            ExcursionKind::UpAbove => "up_above",
            ExcursionKind::DownBelow => "down_below",
        };
        writeln!(
            writer,
            "{},{},{},{},{}",
            kind, e.start, e.end, e.length, e.peak
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{synthesize_path, SynthesisMethod};
    use proptest::prelude::*;

    fn fixture(values: Vec<f64>, dt: f64) -> SamplePath {
        SamplePath {
            dt,
            values,
            seed: 0,
            model_id: "fixture".into(),
            clipped_mass: 0.0,
            method: SynthesisMethod::Circulant,
        }
    }

    #[test]
    fn detects_interpolated_crossings() {
        let up = detect_crossings(&fixture(vec![-1.0, 1.0], 1.0), 0.0);
        assert_eq!(up.len(), 1);
        assert_eq!(up[0].kind, CrossingKind::Up);
        assert_eq!(up[0].time, 0.5);
        assert_eq!(up[0].left_index, 0);

        let down = detect_crossings(&fixture(vec![1.0, -1.0], 1.0), 0.0);
        assert_eq!(down.len(), 1);
        assert_eq!(down[0].kind, CrossingKind::Down);
        assert_eq!(down[0].time, 0.5);
    }

    #[test]
    fn tangency_produces_no_event() {
        let events = detect_crossings(&fixture(vec![-1.0, 0.0, -1.0], 1.0), 0.0);
        assert!(events.is_empty());
    }

    #[test]
    fn samples_on_the_level_are_bridged() {
        let events = detect_crossings(&fixture(vec![-1.0, 0.0, 1.0], 1.0), 0.0);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].kind, CrossingKind::Up);
        assert_eq!(events[0].time, 1.0);
        assert_eq!(events[0].left_index, 0);
    }

    #[test]
    fn segments_single_up_excursion() {
        let set = segment_excursions(&fixture(vec![-1.0, 1.0, 1.0, -1.0], 1.0), 0.0);
        assert_eq!(set.excursions.len(), 1);
        let e = &set.excursions[0];
        assert_eq!(e.kind, ExcursionKind::UpAbove);
        assert_eq!((e.start, e.end, e.length), (0.5, 2.5, 2.0));
        assert_eq!(e.peak, 1.0);
        assert_eq!(set.discarded_boundary, 2);
    }

    #[test]
    fn constant_path_has_no_excursions() {
        let set = segment_excursions(&fixture(vec![0.3; 5], 1.0), 0.0);
        assert!(set.excursions.is_empty());
        assert_eq!(set.discarded_boundary, 1);
    }

    #[test]
    fn down_excursion_mirror() {
        let set = segment_excursions(&fixture(vec![1.0, -1.0, 1.0], 1.0), 0.0);
        let down: Vec<_> = set.of_kind(ExcursionKind::DownBelow).collect();
        assert_eq!(down.len(), 1);
        assert_eq!(down[0].length, 1.0);
        assert_eq!(down[0].peak, -1.0);
        assert_eq!(set.of_kind(ExcursionKind::UpAbove).count(), 0);
    }

    #[test]
    fn rates_count_per_unit_time() {
        let r = empirical_rates(&fixture(vec![-1.0, 1.0, -1.0], 1.0), 0.0);
        assert_eq!(r.up_rate, 0.5);
        assert_eq!(r.down_rate, 0.5);
        assert_eq!(r.total_rate, 1.0);
        assert!(r.total_rate == r.up_rate + r.down_rate);

        let above = empirical_rates(&fixture(vec![-1.0, 1.0, -1.0], 1.0), 5.0);
        assert_eq!((above.up_rate, above.down_rate, above.total_rate), (0.0, 0.0, 0.0));
    }

    #[test]
    fn conditional_stats_on_triangle_fixture() {
        // One lower-level excursion containing one upper-level excursion of
        // interpolated width 1.
        let path = fixture(vec![0.0, 1.0, 2.0, 1.0, 0.0], 1.0);
        let stats = conditional_upcrossing_stats(&path, 0.5, 1.5, 0.0).unwrap();
        assert_eq!(stats.n_qualifying, 1);
        assert_eq!(stats.mean_upcrossings, Some(1.0));
        assert_eq!(stats.t2_samples, vec![1.0]);
    }

    #[test]
    fn conditional_stats_level_coincidence_counts_own_crossing() {
        let model = crate::acf::AcfModel::squared_exponential(2.0).unwrap();
        let path = synthesize_path(&model, 0.1, 200_000, 21).unwrap();
        let stats = conditional_upcrossing_stats(&path, 1.0, 1.0, 0.0).unwrap();
        assert!(stats.n_qualifying > 100);
        assert_eq!(stats.mean_upcrossings, Some(1.0));
        // Each excursion's time above its own level is its own length.
        let lengths = segment_excursions(&path, 1.0).lengths_of(ExcursionKind::UpAbove);
        assert_eq!(stats.t2_samples.len(), lengths.len());
        for (t2, len) in stats.t2_samples.iter().zip(&lengths) {
            assert_eq!(t2, len);
        }
    }

    #[test]
    fn conditional_stats_empty_marker() {
        let path = fixture(vec![-1.0, -0.5, -1.0], 1.0);
        let stats = conditional_upcrossing_stats(&path, 0.5, 0.6, 0.0).unwrap();
        assert_eq!(stats.n_qualifying, 0);
        assert_eq!(stats.mean_upcrossings, None);
        assert!(stats.t2_samples.is_empty());
    }

    #[test]
    fn conditional_stats_rejects_misordered_levels() {
        let path = fixture(vec![0.0, 1.0, 0.0], 1.0);
        assert!(matches!(
            conditional_upcrossing_stats(&path, 1.0, 0.5, 0.0),
            Err(CrossingsError::InvalidLevels { .. })
        ));
    }

    #[test]
    fn mean_upcrossings_tracks_corollary_on_synthesized_path() {
        // e^{−γ₁Δγ} with γ₁ = 2.5, Δγ = 0.1.
        let model = crate::acf::AcfModel::squared_exponential(2.0).unwrap();
        let mut total_ups = 0u64;
        let mut total_qual = 0usize;
        for rep in 0..6u64 {
            let seed = crate::gp::derive_replicate_seed(1234, rep);
            let path = synthesize_path(&model, 0.05, 1_000_000, seed).unwrap();
            let s = conditional_upcrossing_stats(&path, 2.5, 2.6, 0.0).unwrap();
            total_ups += s.total_upcrossings;
            total_qual += s.n_qualifying;
        }
        assert!(total_qual > 500, "qualifying excursions: {total_qual}");
        let mean = total_ups as f64 / total_qual as f64;
        assert!(
            (mean - 0.7788007830714049).abs() < 0.05,
            "mean = {mean} over {total_qual} excursions"
        );
    }

    #[test]
    fn duration_partition_identity() {
        let model = crate::acf::AcfModel::squared_exponential(2.0).unwrap();
        let path = synthesize_path(&model, 0.1, 100_000, 3).unwrap();
        let level = 0.5;
        let set = segment_excursions(&path, level);
        let events = detect_crossings(&path, level);
        let covered: f64 = set.excursions.iter().map(|e| e.length).sum();
        let leading = events.first().unwrap().time;
        let trailing = path.duration() - events.last().unwrap().time;
        assert!(
            (covered + leading + trailing - path.duration()).abs() < 1e-6,
            "partition mismatch"
        );
    }

    #[test]
    fn refining_grid_never_loses_crossings() {
        let model = crate::acf::AcfModel::squared_exponential(2.0).unwrap();
        for seed in 0..10u64 {
            let fine = synthesize_path(&model, 0.05, 40_001, seed).unwrap();
            let coarse = fixture(
                fine.values.iter().copied().step_by(2).collect(),
                fine.dt * 2.0,
            );
            for level in [-1.0, 0.0, 1.0, 2.0] {
                let nf = detect_crossings(&fine, level).len();
                let nc = detect_crossings(&coarse, level).len();
                assert!(nf >= nc, "seed {seed} level {level}: fine {nf} < coarse {nc}");
            }
        }
    }

    #[test]
    fn excursion_csv_layout() {
        let set = segment_excursions(&fixture(vec![-1.0, 1.0, -1.0, 1.0, -1.0], 1.0), 0.0);
        let mut buf = Vec::new();
        write_excursions_csv(&set.excursions, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("kind,start,end,length,peak"));
        assert_eq!(lines.count(), set.excursions.len());
        assert!(text.contains("up_above") && text.contains("down_below"));
    }

    proptest! {
        #[test]
        fn events_strictly_alternate(values in proptest::collection::vec(-3.0f64..3.0, 2..200), level in -1.0f64..1.0) {
            let events = detect_crossings(&fixture(values, 0.5), level);
            for pair in events.windows(2) {
                prop_assert_ne!(pair[0].kind, pair[1].kind);
                prop_assert!(pair[0].time < pair[1].time);
            }
        }

        #[test]
        fn negation_swaps_kinds_with_identical_times(values in proptest::collection::vec(-3.0f64..3.0, 2..200), level in -1.0f64..1.0) {
            let path = fixture(values.clone(), 0.5);
            let mirrored = fixture(values.iter().map(|v| -v).collect(), 0.5);
            let a = detect_crossings(&path, level);
            let b = detect_crossings(&mirrored, -level);
            prop_assert_eq!(a.len(), b.len());
            for (ea, eb) in a.iter().zip(&b) {
                prop_assert_ne!(ea.kind, eb.kind);
                prop_assert_eq!(ea.time, eb.time);
                prop_assert_eq!(ea.left_index, eb.left_index);
            }
        }

        #[test]
        fn event_time_between_straddling_samples(values in proptest::collection::vec(-3.0f64..3.0, 2..100)) {
            let path = fixture(values, 0.25);
            for e in detect_crossings(&path, 0.0) {
                prop_assert!(e.time > path.time(e.left_index));
                prop_assert!(e.time < path.duration() + 0.25);
            }
        }
    }
}
