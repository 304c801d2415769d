//! Exhaustive and location-aware beam search, and the alignment latency model.

use crate::array::{steering_vector, ArrayConfig, Codebook, SteeringVector};
use crate::channel::{measure_rss, Impairments, LosChannel, RssMeasurement, SignalConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{reduced_codebook_with_halfwidth, steering_decision, SteeringDecision};
use crate::positioning::{Position, PositionEstimate};

/// Published average alignment latencies: 9 measurements in 0.28 s
/// (location-aware) and 169 in 3.7 s (exhaustive, 13 × 13).
pub const REFERENCE_FAST: (usize, f64) = (9, 0.28);
pub const REFERENCE_SLOW: (usize, f64) = (169, 3.7);

/// Beam indices are packed into the RSS stream id as `tx * 256 + rx`.
const MAX_BEAM_INDEX: usize = 255;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeamPair {
    pub tx_index: usize,
    pub rx_index: usize,
}

impl BeamPair {
    pub fn new(tx_index: usize, rx_index: usize) -> Self {
        Self { tx_index, rx_index }
    }

    /// Chebyshev distance between two pairs in index space.
    pub fn index_distance(&self, other: &BeamPair) -> usize {
        self.tx_index
            .abs_diff(other.tx_index)
            .max(self.rx_index.abs_diff(other.rx_index))
    }
}

/// Latency of one alignment cycle: `overhead + n · dwell` for n measurements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingModel {
    overhead_s: f64,
    dwell_per_measurement_s: f64,
}

impl TimingModel {
    pub fn new(overhead_s: f64, dwell_per_measurement_s: f64) -> Result<Self> {
        if !(overhead_s >= 0.0 && overhead_s.is_finite()) {
            return Err(Error::Calibration(format!(
                "overhead must be non-negative, got {overhead_s}"
            )));
        }
        if !(dwell_per_measurement_s > 0.0 && dwell_per_measurement_s.is_finite()) {
            return Err(Error::Calibration(format!(
                "dwell per measurement must be positive, got {dwell_per_measurement_s}"
            )));
        }
        Ok(Self {
            overhead_s,
            dwell_per_measurement_s,
        })
    }

    pub fn overhead_s(&self) -> f64 {
        self.overhead_s
    }

    pub fn dwell_per_measurement_s(&self) -> f64 {
        self.dwell_per_measurement_s
    }

    pub fn elapsed_s(&self, num_measurements: usize) -> f64 {
        self.overhead_s + num_measurements as f64 * self.dwell_per_measurement_s
    }
}

impl Default for TimingModel {
    fn default() -> Self {
        calibrate_timing(REFERENCE_FAST.0, REFERENCE_FAST.1, REFERENCE_SLOW.0, REFERENCE_SLOW.1)
            .expect("reference latencies give a valid model")
    }
}

/// Exact two-point fit of [`TimingModel`].
pub fn calibrate_timing(n_fast: usize, t_fast_s: f64, n_slow: usize, t_slow_s: f64) -> Result<TimingModel> {
    if n_fast == n_slow {
        return Err(Error::Calibration(format!(
            "both points use {n_fast} measurements; the fit is singular"
        )));
    }
    if !(t_fast_s > 0.0 && t_slow_s > 0.0) {
        return Err(Error::Calibration("latencies must be positive".into()));
    }
    let dwell = (t_slow_s - t_fast_s) / (n_slow as f64 - n_fast as f64);
    let overhead = t_fast_s - n_fast as f64 * dwell;
    TimingModel::new(overhead, dwell)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentOutcome {
    pub chosen: BeamPair,
    /// Measured pairs in sweep order (tx-major).
    pub rss_table: Vec<RssMeasurement>,
    pub num_measurements: usize,
    pub elapsed_s: f64,
    /// Geometric prediction that shaped the search, for location-aware runs.
    pub predicted: Option<SteeringDecision>,
}

impl AlignmentOutcome {
    pub fn chosen_measurement(&self) -> &RssMeasurement {
        self.rss_table
            .iter()
            .find(|m| m.tx_index == self.chosen.tx_index && m.rx_index == self.chosen.rx_index)
            .expect("chosen pair is in the table")
    }
}

/// Beamformer for codebook angle `angle_deg`: the unit-power steering vector.
pub fn beamformer(cfg: &ArrayConfig, angle_deg: f64) -> Result<SteeringVector> {
    Ok(steering_vector(cfg, angle_deg)?.normalized())
}

/// Stream id of a measurement: `stream_base · 65536 + tx · 256 + rx`.
pub fn measurement_stream(stream_base: u64, pair: BeamPair) -> u64 {
    stream_base
        .wrapping_mul(65_536)
        .wrapping_add((pair.tx_index as u64) << 8)
        .wrapping_add(pair.rx_index as u64)
}

/// Measures every `(tx, rx)` beam pair of the two codebooks and picks the
/// strongest. Ties go to the lexicographically smallest `(tx, rx)`.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    cfg: &ArrayConfig,
    tx_cb: &Codebook,
    rx_cb: &Codebook,
    ch: &LosChannel,
    imp: &Impairments,
    sig: &SignalConfig,
    timing: &TimingModel,
    stream_base: u64,
    exec: Execution,
) -> Result<AlignmentOutcome> {
    if tx_cb.last_index() > MAX_BEAM_INDEX || rx_cb.last_index() > MAX_BEAM_INDEX {
        return Err(Error::config(format!(
            "beam indices above {MAX_BEAM_INDEX} are not supported"
        )));
    }
    let tx_beams: Vec<(usize, SteeringVector)> = tx_cb
        .iter()
        .map(|(i, a)| Ok((i, imp.apply_tx(&beamformer(cfg, a)?)?)))
        .collect::<Result<_>>()?;
    let rx_beams: Vec<(usize, SteeringVector)> = rx_cb
        .iter()
        .map(|(i, a)| Ok((i, imp.apply_rx(&beamformer(cfg, a)?)?)))
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..tx_beams.len())
        .flat_map(|t| (0..rx_beams.len()).map(move |r| (t, r)))
        .collect();
    let measured = exec.map(&pairs, |&(t, r)| -> Result<RssMeasurement> {
        let (tx_idx, f) = &tx_beams[t];
        let (rx_idx, w) = &rx_beams[r];
        let pair = BeamPair::new(*tx_idx, *rx_idx);
        let rss = measure_rss(ch, w, f, sig, measurement_stream(stream_base, pair))?;
        Ok(RssMeasurement::new(*tx_idx, *rx_idx, rss))
    });
    let rss_table: Vec<RssMeasurement> = measured.into_iter().collect::<Result<_>>()?;

    // Table is in lexicographic order, so a strict `>` keeps the first maximum.
    let mut best = &rss_table[0];
    for m in &rss_table[1..] {
        if m.rss_linear > best.rss_linear {
            best = m;
        }
    }
    let chosen = BeamPair::new(best.tx_index, best.rx_index);
    let num_measurements = rss_table.len();
    Ok(AlignmentOutcome {
        chosen,
        rss_table,
        num_measurements,
        elapsed_s: timing.elapsed_s(num_measurements),
        predicted: None,
    })
}

/// Everything an alignment cycle may observe in slot k.
///
/// There is no receiver position field; the true position reaches the
/// search only through the physical channel.
#[derive(Clone, Copy, Debug)]
pub struct SlotContext<'a> {
    pub array: &'a ArrayConfig,
    pub tx_pos: Position,
    pub channel: &'a LosChannel,
    pub tx_codebook: &'a Codebook,
    pub rx_codebook: &'a Codebook,
    pub impairments: &'a Impairments,
    pub signal: &'a SignalConfig,
    pub timing: &'a TimingModel,
    pub search_halfwidth: usize,
    pub stream_base: u64,
    pub exec: Execution,
}

/// Full N × N sweep; uses no position information.
pub fn exhaustive_align(ctx: &SlotContext<'_>) -> Result<AlignmentOutcome> {
    sweep(
        ctx.array,
        ctx.tx_codebook,
        ctx.rx_codebook,
        ctx.channel,
        ctx.impairments,
        ctx.signal,
        ctx.timing,
        ctx.stream_base,
        ctx.exec,
    )
}

/// Position estimate → steering angle → nearest indices → windows around
/// them → sweep over the windows only.
pub fn location_aware_align(
    ctx: &SlotContext<'_>,
    estimate: &PositionEstimate,
) -> Result<AlignmentOutcome> {
    let decision = steering_decision(ctx.tx_pos, estimate, ctx.tx_codebook, ctx.rx_codebook)?;
    let tx_window = reduced_codebook_with_halfwidth(ctx.tx_codebook, decision.tx_index, ctx.search_halfwidth)?;
    let rx_window = reduced_codebook_with_halfwidth(ctx.rx_codebook, decision.rx_index, ctx.search_halfwidth)?;
    let mut outcome = sweep(
        ctx.array,
        &tx_window,
        &rx_window,
        ctx.channel,
        ctx.impairments,
        ctx.signal,
        ctx.timing,
        ctx.stream_base,
        ctx.exec,
    )?;
    outcome.predicted = Some(decision);
    Ok(outcome)
}
