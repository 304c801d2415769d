//! Tracking and misalignment experiments.
//!
//! A tracking run repeats the alignment cycle back to back along the receiver
//! trajectory: sample the true position, range and trilaterate, align, then
//! advance the clock by the modeled latency of that cycle.

mod config;
mod output;

pub use config::{
    derive_seed, Algorithm, AlgorithmSelector, AlignmentSection, ArraySection, CodebookSection,
    ImpairmentSection, OutputSection, PositioningSection, Scenario, ScenarioConfig, SignalSection,
    SweepSection, TrajectorySection,
};
pub use output::{emit_csv, format_sig6, CsvRow};

use std::path::PathBuf;

use crate::alignment::{
    beamformer, exhaustive_align, location_aware_align, measurement_stream, sweep, BeamPair,
    SlotContext,
};
use crate::channel::{linear_to_db, los_channel, measure_rss};
use crate::error::Result;
use crate::exec::Execution;
use crate::geometry::{desired_angle, nearest_beam_index};
use crate::mobility::SegmentKind;
use crate::positioning::{simulate_ranges, trilaterate, Position};

/// One alignment cycle of one algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotRecord {
    pub algorithm: Algorithm,
    pub k: usize,
    /// Wall time at the start of the cycle.
    pub t_s: f64,
    pub true_pos: Position,
    pub est_pos: Position,
    /// Geometric best pair for the true position.
    pub true_pair: BeamPair,
    pub chosen: BeamPair,
    pub rss_db: f64,
    pub num_measurements: usize,
    pub elapsed_s: f64,
}

impl SlotRecord {
    /// Instant the chosen pair takes effect.
    pub fn completed_at_s(&self) -> f64 {
        self.t_s + self.elapsed_s
    }
}

/// Geometric best pair for a receiver at `rx`.
pub fn geometric_pair(s: &Scenario, rx: Position) -> Result<BeamPair> {
    let angle = desired_angle(s.tx_pos, rx)?;
    let idx = nearest_beam_index(&s.codebook, angle);
    Ok(BeamPair::new(idx, idx))
}

/// Geometric best pair at wall time `t_s` on the scenario trajectory.
pub fn true_pair_at(s: &Scenario, t_s: f64) -> Result<BeamPair> {
    geometric_pair(s, s.trajectory.position_at(t_s)?)
}

/// Pair in use at `t_s`: the result of the latest cycle completed by then.
pub fn current_pair_at(records: &[SlotRecord], t_s: f64) -> Option<BeamPair> {
    records
        .iter()
        .rev()
        .find(|r| r.completed_at_s() <= t_s)
        .map(|r| r.chosen)
}

/// Instants on a `step_s` grid where the exhaustive trace is at least two
/// indices off the true pair while the location-aware trace is within one.
pub fn staleness_instants(
    s: &Scenario,
    exhaustive: &[SlotRecord],
    location_aware: &[SlotRecord],
    step_s: f64,
) -> Result<Vec<f64>> {
    let total = s.trajectory.duration_s();
    let steps = (total / step_s).floor() as usize;
    let mut out = Vec::new();
    for i in 0..=steps {
        let t = i as f64 * step_s;
        let truth = true_pair_at(s, t)?;
        if let (Some(ex), Some(la)) = (current_pair_at(exhaustive, t), current_pair_at(location_aware, t)) {
            if ex.index_distance(&truth) >= 2 && la.index_distance(&truth) <= 1 {
                out.push(t);
            }
        }
    }
    Ok(out)
}

fn slot_stream(algorithm: Algorithm, k: usize) -> u64 {
    (algorithm.tag() << 32) | k as u64
}

/// Runs one algorithm on its own clock over the whole trajectory.
pub fn run_trace(s: &Scenario, algorithm: Algorithm, exec: Execution) -> Result<Vec<SlotRecord>> {
    let total = s.trajectory.duration_s();
    let mut records = Vec::new();
    let mut t = 0.0;
    let mut k = 0usize;
    while t < total {
        let true_pos = s.trajectory.position_at(t)?;
        let stream = slot_stream(algorithm, k);
        let ranges = simulate_ranges(true_pos, &s.anchors, &s.ranging, stream);
        let estimate = trilaterate(&s.anchors, &ranges)?;
        // The physical channel is the only place the true position is used.
        let channel = los_channel(&s.array, s.tx_pos, true_pos)?;
        let ctx = SlotContext {
            array: &s.array,
            tx_pos: s.tx_pos,
            channel: &channel,
            tx_codebook: &s.codebook,
            rx_codebook: &s.codebook,
            impairments: &s.impairments,
            signal: &s.signal,
            timing: &s.timing,
            search_halfwidth: s.search_halfwidth,
            stream_base: stream,
            exec,
        };
        let outcome = match algorithm {
            Algorithm::Exhaustive => exhaustive_align(&ctx)?,
            Algorithm::LocationAware => location_aware_align(&ctx, &estimate)?,
        };
        records.push(SlotRecord {
            algorithm,
            k,
            t_s: t,
            true_pos,
            est_pos: estimate.position,
            true_pair: geometric_pair(s, true_pos)?,
            chosen: outcome.chosen,
            rss_db: outcome.chosen_measurement().rss_db,
            num_measurements: outcome.num_measurements,
            elapsed_s: outcome.elapsed_s,
        });
        t += outcome.elapsed_s;
        k += 1;
    }
    Ok(records)
}

/// Tracking experiment for the configured algorithm selection. Traces are
/// concatenated in the order exhaustive, location-aware.
pub fn run_tracking(cfg: &ScenarioConfig) -> Result<Vec<SlotRecord>> {
    let s = cfg.build()?;
    run_tracking_scenario(&s, Execution::default())
}

pub fn run_tracking_scenario(s: &Scenario, exec: Execution) -> Result<Vec<SlotRecord>> {
    let mut all = Vec::new();
    for algorithm in s.algorithm.algorithms() {
        all.extend(run_trace(s, algorithm, exec)?);
    }
    Ok(all)
}

/// One cell of the misalignment table.
#[derive(Clone, Debug, PartialEq)]
pub struct MisalignmentRow {
    pub distance_m: f64,
    pub degree: usize,
    pub num_alternatives: usize,
    /// dB of the mean linear RSS over all alternatives; `None` when no pair
    /// at this degree fits in the codebook.
    pub mean_rss_db: Option<f64>,
}

/// All pairs `(a ± i, b ± j)` with `i + j = degree` inside `1..=n`.
pub fn misaligned_pairs(aligned: BeamPair, degree: usize, n_tx: usize, n_rx: usize) -> Vec<BeamPair> {
    let offsets = |d: usize| -> Vec<isize> {
        if d == 0 {
            vec![0]
        } else {
            vec![-(d as isize), d as isize]
        }
    };
    let shift = |idx: usize, off: isize, n: usize| -> Option<usize> {
        let v = idx as isize + off;
        (1..=n as isize).contains(&v).then_some(v as usize)
    };
    let mut pairs = Vec::new();
    for i in 0..=degree {
        let j = degree - i;
        for dt in offsets(i) {
            for dr in offsets(j) {
                if let (Some(t), Some(r)) = (
                    shift(aligned.tx_index, dt, n_tx),
                    shift(aligned.rx_index, dr, n_rx),
                ) {
                    pairs.push(BeamPair::new(t, r));
                }
            }
        }
    }
    pairs
}

/// Misalignment experiment on the sweep codebook.
///
/// At each distance the receiver sits on the transmitter's boresight; the
/// aligned pair is the exhaustive-search winner, and every reachable pair at
/// each misalignment degree is measured and averaged in linear power.
pub fn run_misalignment_sweep(
    s: &Scenario,
    distances_m: &[f64],
    max_sectors: usize,
    exec: Execution,
) -> Result<Vec<MisalignmentRow>> {
    let cb = &s.sweep_codebook;
    let n = cb.len();
    let mut rows = Vec::new();
    for (di, &d) in distances_m.iter().enumerate() {
        let rx = s.tx_pos.translated(d, 0.0);
        let channel = los_channel(&s.array, s.tx_pos, rx)?;
        let base = (3u64 << 32) | (di as u64) << 8;
        let aligned = sweep(
            &s.array, cb, cb, &channel, &s.impairments, &s.signal, &s.timing, base, exec,
        )?
        .chosen;
        for degree in 0..=max_sectors {
            let pairs = misaligned_pairs(aligned, degree, n, n);
            let rss = exec.map(&pairs, |pair| -> Result<f64> {
                let f = s.impairments.apply_tx(&beamformer(&s.array, cb.angle_deg(pair.tx_index).expect("in range"))?)?;
                let w = s.impairments.apply_rx(&beamformer(&s.array, cb.angle_deg(pair.rx_index).expect("in range"))?)?;
                measure_rss(&channel, &w, &f, &s.signal, measurement_stream(base + 1 + degree as u64, *pair))
            });
            let rss: Vec<f64> = rss.into_iter().collect::<Result<_>>()?;
            let mean_rss_db = (!rss.is_empty()).then(|| linear_to_db(rss.iter().sum::<f64>() / rss.len() as f64));
            rows.push(MisalignmentRow {
                distance_m: d,
                degree,
                num_alternatives: rss.len(),
                mean_rss_db,
            });
        }
    }
    Ok(rows)
}

/// `n` evenly spaced points along the walking part of the trajectory (the
/// whole trajectory if it never moves). Used to calibrate ranging noise.
pub fn walk_points(s: &Scenario, n: usize) -> Vec<Position> {
    let segments = s.trajectory.segments();
    let seg = segments
        .iter()
        .find(|seg| matches!(seg.kind, SegmentKind::Linear { .. }))
        .unwrap_or(&segments[0]);
    let (vx, vy) = match seg.kind {
        SegmentKind::Linear { velocity_mps } => velocity_mps,
        SegmentKind::Hold => (0.0, 0.0),
    };
    let last = n.saturating_sub(1).max(1) as f64;
    (0..n)
        .map(|i| {
            let dt = seg.duration_s * i as f64 / last;
            seg.start.translated(vx * dt, vy * dt)
        })
        .collect()
}

/// Output paths of a scenario.
pub fn tracking_path(s: &Scenario) -> PathBuf {
    s.output_dir.join(&s.tracking_file)
}

pub fn misalignment_path(s: &Scenario) -> PathBuf {
    s.output_dir.join(&s.misalignment_file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{Segment, Trajectory};
    use crate::positioning::PositionEstimate;

    #[test]
    fn misaligned_pair_enumeration() {
        let a = BeamPair::new(4, 4);
        assert_eq!(misaligned_pairs(a, 0, 7, 7), vec![a]);
        let g1 = misaligned_pairs(a, 1, 7, 7);
        assert_eq!(g1.len(), 4);
        assert!(g1.contains(&BeamPair::new(3, 4)) && g1.contains(&BeamPair::new(4, 5)));
        // (±2,0), (0,±2), (±1,±1)
        assert_eq!(misaligned_pairs(a, 2, 7, 7).len(), 8);
        assert_eq!(misaligned_pairs(a, 3, 7, 7).len(), 12);
        // Corner: only non-negative offsets survive.
        assert_eq!(misaligned_pairs(BeamPair::new(1, 1), 1, 7, 7).len(), 2);
        assert!(misaligned_pairs(BeamPair::new(1, 1), 5, 2, 2).is_empty());
    }

    #[test]
    fn current_pair_follows_completions() {
        let rec = |t_s: f64, elapsed_s: f64, idx: usize| SlotRecord {
            algorithm: Algorithm::Exhaustive,
            k: 0,
            t_s,
            true_pos: Position::origin(),
            est_pos: Position::origin(),
            true_pair: BeamPair::new(idx, idx),
            chosen: BeamPair::new(idx, idx),
            rss_db: 0.0,
            num_measurements: 1,
            elapsed_s,
        };
        let recs = vec![rec(0.0, 1.0, 3), rec(1.0, 1.0, 5)];
        assert_eq!(current_pair_at(&recs, 0.5), None);
        assert_eq!(current_pair_at(&recs, 1.0), Some(BeamPair::new(3, 3)));
        assert_eq!(current_pair_at(&recs, 2.5), Some(BeamPair::new(5, 5)));
    }

    #[test]
    fn stationary_noiseless_receiver_keeps_pair() {
        let mut cfg = ScenarioConfig::default();
        cfg.signal.noise_power = Some(0.0);
        cfg.positioning.ranging_sigma_m = 0.0;
        let mut s = cfg.build().unwrap();
        s.trajectory = Trajectory::new(vec![Segment {
            kind: SegmentKind::Hold,
            duration_s: 4.0,
            start: Position::new(6.0, 1.0).unwrap(),
        }])
        .unwrap();
        let recs = run_tracking_scenario(&s, Execution::default()).unwrap();
        let first = recs[0].chosen;
        assert!(recs.iter().all(|r| r.chosen == first));
        assert!(recs.iter().filter(|r| r.algorithm == Algorithm::LocationAware).count() > 10);
    }

    #[test]
    fn location_aware_only_sees_estimate() {
        // The alignment entry point accepts a PositionEstimate and a context
        // without the receiver's position; a wrong estimate moves the window.
        let s = ScenarioConfig::default().build().unwrap();
        let truth = Position::new(6.0, 0.0).unwrap();
        let channel = los_channel(&s.array, s.tx_pos, truth).unwrap();
        let ctx = SlotContext {
            array: &s.array,
            tx_pos: s.tx_pos,
            channel: &channel,
            tx_codebook: &s.codebook,
            rx_codebook: &s.codebook,
            impairments: &s.impairments,
            signal: &s.signal,
            timing: &s.timing,
            search_halfwidth: 1,
            stream_base: 0,
            exec: Execution::default(),
        };
        let wrong = PositionEstimate {
            position: Position::new(6.0, 6.0 * 20f64.to_radians().tan()).unwrap(),
            residual_norm_m: 0.0,
        };
        let out = location_aware_align(&ctx, &wrong).unwrap();
        assert_eq!(out.predicted.unwrap().rx_index, 11);
        assert!((10..=12).contains(&out.chosen.rx_index));
    }
}
