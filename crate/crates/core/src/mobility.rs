//! Piecewise receiver trajectories.

use crate::error::{Error, Result};
use crate::positioning::{Position, ROOM_WIDTH_M};

pub const WALKING_SPEED_KMH: f64 = 3.0;

/// Speed in m/s for a speed given in km/h.
pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SegmentKind {
    Hold,
    Linear { velocity_mps: (f64, f64) },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub duration_s: f64,
    pub start: Position,
}

impl Segment {
    pub fn end(&self) -> Position {
        self.at(self.duration_s)
    }

    fn at(&self, dt: f64) -> Position {
        match self.kind {
            SegmentKind::Hold => self.start,
            SegmentKind::Linear { velocity_mps: (vx, vy) } => self.start.translated(vx * dt, vy * dt),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    segments: Vec<Segment>,
}

impl Trajectory {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::config("trajectory needs at least one segment"));
        }
        for s in &segments {
            if !(s.duration_s > 0.0 && s.duration_s.is_finite()) {
                return Err(Error::config(format!(
                    "segment duration must be positive, got {}",
                    s.duration_s
                )));
            }
        }
        for pair in segments.windows(2) {
            if pair[0].end().distance_to(pair[1].start) > 1e-9 {
                return Err(Error::config("trajectory segments are not contiguous"));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn duration_s(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    pub fn start(&self) -> Position {
        self.segments[0].start
    }

    pub fn position_at(&self, t_s: f64) -> Result<Position> {
        let total = self.duration_s();
        if !(0.0..=total).contains(&t_s) {
            return Err(Error::domain(format!(
                "time {t_s} s outside trajectory [0, {total}] s"
            )));
        }
        let mut seg_start = 0.0;
        for s in &self.segments {
            if t_s <= seg_start + s.duration_s {
                return Ok(s.at(t_s - seg_start));
            }
            seg_start += s.duration_s;
        }
        Ok(self.segments.last().expect("non-empty").end())
    }
}

/// Receiver walk along a line parallel to the transmitter's array, `offset_m`
/// in front of it: hold still for `hold_s`, then walk `length_m` in +y.
pub fn walk(offset_m: f64, start_y_m: f64, length_m: f64, hold_s: f64, speed_kmh: f64) -> Result<Trajectory> {
    let half = ROOM_WIDTH_M / 2.0;
    let end_y = start_y_m + length_m;
    if !(length_m > 0.0) || start_y_m < -half || end_y > half {
        return Err(Error::config(format!(
            "walk from y = {start_y_m} m to {end_y} m does not fit the {ROOM_WIDTH_M} m room"
        )));
    }
    if !(offset_m > 0.0) {
        return Err(Error::config(format!("walk offset must be positive, got {offset_m}")));
    }
    if !(speed_kmh > 0.0) {
        return Err(Error::config(format!("walking speed must be positive, got {speed_kmh}")));
    }
    let start = Position::new(offset_m, start_y_m)?;
    let speed = kmh_to_mps(speed_kmh);
    let mut segments = Vec::new();
    if hold_s > 0.0 {
        segments.push(Segment {
            kind: SegmentKind::Hold,
            duration_s: hold_s,
            start,
        });
    }
    segments.push(Segment {
        kind: SegmentKind::Linear {
            velocity_mps: (0.0, speed),
        },
        duration_s: length_m / speed,
        start,
    });
    Trajectory::new(segments)
}

/// 3 s hold at (6, `start_y_m`), then a 3 km/h walk of `length_m` in +y.
pub fn default_walk(start_y_m: f64, length_m: f64) -> Result<Trajectory> {
    walk(6.0, start_y_m, length_m, 3.0, WALKING_SPEED_KMH)
}
