//! Anchor ranging and trilateration of the receiver position.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Ranging noise standard deviation (m) for the default anchor layout.
///
/// Output of [`calibrate_ranging_sigma`] with the corner anchors, the default
/// walk line as evaluation points, a 0.072 m RMS target, 10⁴ epochs and seed 0.
pub const DEFAULT_RANGING_SIGMA_M: f64 = 0.051_067;

/// Room extents (m) in the transmitter frame: the transmitter sits at the
/// origin on the x = 0 wall, facing +x, with the 9 m side along y.
pub const ROOM_DEPTH_M: f64 = 6.0;
pub const ROOM_WIDTH_M: f64 = 9.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    pub x_m: f64,
    pub y_m: f64,
}

impl Position {
    pub fn new(x_m: f64, y_m: f64) -> Result<Self> {
        if !(x_m.is_finite() && y_m.is_finite()) {
            return Err(Error::domain(format!("non-finite position ({x_m}, {y_m})")));
        }
        Ok(Self { x_m, y_m })
    }

    pub const fn origin() -> Self {
        Self { x_m: 0.0, y_m: 0.0 }
    }

    pub fn distance_to(self, other: Position) -> f64 {
        (self.x_m - other.x_m).hypot(self.y_m - other.y_m)
    }

    pub fn translated(self, dx: f64, dy: f64) -> Self {
        Self {
            x_m: self.x_m + dx,
            y_m: self.y_m + dy,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnchorSet {
    anchors: Vec<Position>,
}

impl AnchorSet {
    pub fn new(anchors: Vec<Position>) -> Result<Self> {
        if anchors.len() < 3 {
            return Err(Error::Geometry(format!(
                "need at least 3 anchors, got {}",
                anchors.len()
            )));
        }
        let n = anchors.len();
        let spread = (0..n).any(|i| {
            (i + 1..n).any(|j| (j + 1..n).any(|k| triangle_area(anchors[i], anchors[j], anchors[k]) > 1e-9))
        });
        if !spread {
            return Err(Error::Geometry("anchors are collinear".into()));
        }
        Ok(Self { anchors })
    }

    /// One anchor in each corner of the 6 m × 9 m room.
    pub fn room_corners() -> Self {
        let half = ROOM_WIDTH_M / 2.0;
        Self {
            anchors: vec![
                Position { x_m: 0.0, y_m: -half },
                Position { x_m: ROOM_DEPTH_M, y_m: -half },
                Position { x_m: 0.0, y_m: half },
                Position { x_m: ROOM_DEPTH_M, y_m: half },
            ],
        }
    }

    pub fn anchors(&self) -> &[Position] {
        &self.anchors
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

fn triangle_area(a: Position, b: Position, c: Position) -> f64 {
    0.5 * ((b.x_m - a.x_m) * (c.y_m - a.y_m) - (c.x_m - a.x_m) * (b.y_m - a.y_m)).abs()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangingModel {
    pub noise_sigma_m: f64,
    pub rng_seed: u64,
}

impl RangingModel {
    pub fn new(noise_sigma_m: f64, rng_seed: u64) -> Result<Self> {
        if !(noise_sigma_m >= 0.0 && noise_sigma_m.is_finite()) {
            return Err(Error::config(format!(
                "ranging sigma must be non-negative, got {noise_sigma_m}"
            )));
        }
        Ok(Self {
            noise_sigma_m,
            rng_seed,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionEstimate {
    pub position: Position,
    /// Euclidean norm of the range residuals at the solution.
    pub residual_norm_m: f64,
}

/// Anchor ranges with additive Gaussian error, clamped at zero.
///
/// Anchor i of `epoch` uses the i-th normal draw of ChaCha8 stream `epoch`.
pub fn simulate_ranges(
    true_pos: Position,
    anchors: &AnchorSet,
    model: &RangingModel,
    epoch: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.rng_seed);
    rng.set_stream(epoch);
    anchors
        .anchors
        .iter()
        .map(|a| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (true_pos.distance_to(*a) + model.noise_sigma_m * z).max(0.0)
        })
        .collect()
}

/// Linearized least-squares trilateration.
///
/// Subtracting the first anchor's circle from the others gives `A p = b`,
/// solved through the 2×2 normal equations with partial pivoting.
pub fn trilaterate(anchors: &AnchorSet, ranges: &[f64]) -> Result<PositionEstimate> {
    if ranges.len() != anchors.len() {
        return Err(Error::dimension(anchors.len(), ranges.len()));
    }
    if let Some(r) = ranges.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::domain(format!("invalid range {r}")));
    }
    let a0 = anchors.anchors[0];
    let r0 = ranges[0];
    // Normal equations, accumulated directly: n = AᵀA, v = Aᵀb.
    let mut n = [[0.0f64; 2]; 2];
    let mut v = [0.0f64; 2];
    for (ai, &ri) in anchors.anchors.iter().zip(ranges).skip(1) {
        let row = [2.0 * (ai.x_m - a0.x_m), 2.0 * (ai.y_m - a0.y_m)];
        let rhs = r0 * r0 - ri * ri + ai.x_m * ai.x_m - a0.x_m * a0.x_m + ai.y_m * ai.y_m
            - a0.y_m * a0.y_m;
        for i in 0..2 {
            for j in 0..2 {
                n[i][j] += row[i] * row[j];
            }
            v[i] += row[i] * rhs;
        }
    }
    let [x, y] = solve_2x2_pivoted(n, v)?;
    let position = Position { x_m: x, y_m: y };
    let residual_norm_m = anchors
        .anchors
        .iter()
        .zip(ranges)
        .map(|(a, r)| (position.distance_to(*a) - r).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(PositionEstimate {
        position,
        residual_norm_m,
    })
}

fn solve_2x2_pivoted(mut n: [[f64; 2]; 2], mut v: [f64; 2]) -> Result<[f64; 2]> {
    let scale = n.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let tiny = 1e-12 * scale;
    if scale == 0.0 {
        return Err(Error::Geometry("degenerate anchor geometry".into()));
    }
    if n[1][0].abs() > n[0][0].abs() {
        n.swap(0, 1);
        v.swap(0, 1);
    }
    if n[0][0].abs() <= tiny {
        return Err(Error::Geometry("rank-deficient trilateration system".into()));
    }
    let factor = n[1][0] / n[0][0];
    let n11 = n[1][1] - factor * n[0][1];
    let v1 = v[1] - factor * v[0];
    if n11.abs() <= tiny {
        return Err(Error::Geometry("rank-deficient trilateration system".into()));
    }
    let y = v1 / n11;
    let x = (v[0] - n[0][1] * y) / n[0][0];
    Ok([x, y])
}

/// Root-mean-square position error over `epochs` ranging epochs; epoch `e`
/// places the receiver at `points[e % points.len()]`.
pub fn rms_position_error(
    anchors: &AnchorSet,
    points: &[Position],
    model: &RangingModel,
    epochs: u64,
    exec: Execution,
) -> Result<f64> {
    if points.is_empty() || epochs == 0 {
        return Err(Error::config("need at least one point and one epoch"));
    }
    let errors = exec.map_range(epochs, |e| -> Result<f64> {
        let truth = points[(e % points.len() as u64) as usize];
        let est = trilaterate(anchors, &simulate_ranges(truth, anchors, model, e))?;
        Ok(est.position.distance_to(truth).powi(2))
    });
    let mut sum = 0.0;
    for e in errors {
        sum += e?;
    }
    Ok((sum / epochs as f64).sqrt())
}

/// Finds the ranging sigma whose Monte-Carlo RMS position error equals
/// `target_rms_m`.
///
/// All evaluations reuse the same seed and epochs, so the RMS is a smooth
/// increasing function of sigma and plain bisection converges.
pub fn calibrate_ranging_sigma(
    anchors: &AnchorSet,
    points: &[Position],
    target_rms_m: f64,
    seed: u64,
    epochs: u64,
    exec: Execution,
) -> Result<f64> {
    if !(target_rms_m > 0.0 && target_rms_m.is_finite()) {
        return Err(Error::Calibration(format!(
            "target RMS must be positive, got {target_rms_m}"
        )));
    }
    let rms = |sigma: f64| rms_position_error(anchors, points, &RangingModel::new(sigma, seed)?, epochs, exec);

    let mut lo = 0.0;
    let mut hi = target_rms_m;
    let mut expansions = 0;
    while rms(hi)? < target_rms_m {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Calibration("ranging sigma bracket did not close".into()));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if rms(mid)? < target_rms_m {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
