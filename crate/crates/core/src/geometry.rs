//! Location-to-angle mapping and beam-index selection.

use crate::array::Codebook;
use crate::error::{Error, Result};
use crate::positioning::{Position, PositionEstimate};

/// Default number of neighbouring beams searched on each side of the
/// predicted index.
pub const DEFAULT_SEARCH_HALFWIDTH: usize = 1;

/// Geometric steering prediction for one alignment cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteeringDecision {
    pub desired_angle_tx_deg: f64,
    pub desired_angle_rx_deg: f64,
    /// 1-based transmit beam index nearest to the desired angle.
    pub tx_index: usize,
    pub rx_index: usize,
}

/// Direction from `tx_pos` to `rx_pos`, `atan(Δy / Δx)` in degrees.
///
/// Both arrays share the same orientation, so this is the steering angle on
/// both sides. A receiver directly abeam (Δx = 0) maps to ±90°.
pub fn desired_angle(tx_pos: Position, rx_pos: Position) -> Result<f64> {
    let dx = rx_pos.x_m - tx_pos.x_m;
    let dy = rx_pos.y_m - tx_pos.y_m;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::domain("transmitter and receiver coincide"));
    }
    if dx == 0.0 {
        return Ok(90f64.copysign(dy));
    }
    Ok((dy / dx).atan().to_degrees())
}

/// 1-based index of the codebook angle closest to `angle_deg`; ties go to the
/// lower index.
pub fn nearest_beam_index(cb: &Codebook, angle_deg: f64) -> usize {
    let mut best = (cb.first_index(), f64::INFINITY);
    for (idx, a) in cb.iter() {
        let d = (a - angle_deg).abs();
        if d < best.1 {
            best = (idx, d);
        }
    }
    best.0
}

/// The ±1 window around `center_index`, clamped to the codebook.
pub fn reduced_codebook(cb: &Codebook, center_index: usize) -> Result<Codebook> {
    reduced_codebook_with_halfwidth(cb, center_index, DEFAULT_SEARCH_HALFWIDTH)
}

/// Beams `center - halfwidth ..= center + halfwidth` intersected with the
/// codebook. Indices keep their meaning in the parent codebook.
pub fn reduced_codebook_with_halfwidth(
    cb: &Codebook,
    center_index: usize,
    halfwidth: usize,
) -> Result<Codebook> {
    if !cb.indices().contains(&center_index) {
        return Err(Error::domain(format!(
            "beam index {center_index} outside {}..={}",
            cb.first_index(),
            cb.last_index()
        )));
    }
    let lo = center_index.saturating_sub(halfwidth).max(cb.first_index());
    let hi = (center_index + halfwidth).min(cb.last_index());
    let angles = (lo..=hi)
        .map(|i| cb.angle_deg(i).expect("window lies inside codebook"))
        .collect();
    Codebook::with_first_index(angles, lo)
}

/// Steering angles and predicted indices from an estimated receiver position.
pub fn steering_decision(
    tx_pos: Position,
    estimate: &PositionEstimate,
    tx_cb: &Codebook,
    rx_cb: &Codebook,
) -> Result<SteeringDecision> {
    let angle = desired_angle(tx_pos, estimate.position)?;
    Ok(SteeringDecision {
        desired_angle_tx_deg: angle,
        desired_angle_rx_deg: angle,
        tx_index: nearest_beam_index(tx_cb, angle),
        rx_index: nearest_beam_index(rx_cb, angle),
    })
}
