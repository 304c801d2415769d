//! Uniform linear array manifold, beam patterns and codebooks.
//!
//! Angles are in degrees at every public boundary, measured from broadside
//! (the array normal) with positive angles toward +y in the room frame.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Carrier used by the 13.8 GHz testbed.
pub const DEFAULT_CARRIER_HZ: f64 = 13.8e9;
pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayConfig {
    num_elements: usize,
    element_spacing_wavelengths: f64,
    carrier_frequency_hz: f64,
}

impl ArrayConfig {
    pub fn new(
        num_elements: usize,
        element_spacing_wavelengths: f64,
        carrier_frequency_hz: f64,
    ) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::config("array needs at least one element"));
        }
        if !(element_spacing_wavelengths > 0.0 && element_spacing_wavelengths.is_finite()) {
            return Err(Error::config(format!(
                "element spacing must be positive, got {element_spacing_wavelengths}"
            )));
        }
        if !(carrier_frequency_hz > 0.0 && carrier_frequency_hz.is_finite()) {
            return Err(Error::config(format!(
                "carrier frequency must be positive, got {carrier_frequency_hz}"
            )));
        }
        Ok(Self {
            num_elements,
            element_spacing_wavelengths,
            carrier_frequency_hz,
        })
    }

    /// Half-wavelength ULA at the default carrier.
    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, 0.5, DEFAULT_CARRIER_HZ)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn element_spacing_wavelengths(&self) -> f64 {
        self.element_spacing_wavelengths
    }

    pub fn carrier_frequency_hz(&self) -> f64 {
        self.carrier_frequency_hz
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_MPS / self.carrier_frequency_hz
    }
}

impl Default for ArrayConfig {
    /// The testbed's 8-element half-wavelength ULA at 13.8 GHz.
    fn default() -> Self {
        Self {
            num_elements: 8,
            element_spacing_wavelengths: 0.5,
            carrier_frequency_hz: DEFAULT_CARRIER_HZ,
        }
    }
}

/// Per-element complex weights: either the array response a(θ) or a
/// beamforming vector drawn from a codebook.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringVector(Vec<Complex64>);

impl SteeringVector {
    pub fn from_entries(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Returns `self / sqrt(M)`, the unit-power beamformer used by codebook sweeps.
    pub fn normalized(&self) -> Self {
        let scale = 1.0 / (self.0.len() as f64).sqrt();
        Self(self.0.iter().map(|z| z * scale).collect())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|z| z.conj()).collect())
    }

    /// Hermitian inner product `selfᴴ other`.
    pub fn inner(&self, other: &SteeringVector) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(Error::dimension(self.len(), other.len()));
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

fn check_angle(angle_deg: f64) -> Result<()> {
    if !(angle_deg.abs() <= 90.0) {
        return Err(Error::domain(format!(
            "steering angle {angle_deg}° outside [-90°, 90°]"
        )));
    }
    Ok(())
}

/// Array response a(θ): entry m is `exp(i 2π s m sin θ)` for spacing `s`
/// wavelengths, phase-referenced to element 0.
pub fn steering_vector(cfg: &ArrayConfig, angle_deg: f64) -> Result<SteeringVector> {
    check_angle(angle_deg)?;
    Ok(steering_vector_unchecked(cfg, angle_deg.to_radians().sin()))
}

fn steering_vector_unchecked(cfg: &ArrayConfig, sin_theta: f64) -> SteeringVector {
    let k = 2.0 * PI * cfg.element_spacing_wavelengths * sin_theta;
    SteeringVector(
        (0..cfg.num_elements)
            .map(|m| Complex64::from_polar(1.0, k * m as f64))
            .collect(),
    )
}

/// Beam pattern `|wᴴ a(θ)|² / M`; an ideal beam peaks at M.
pub fn array_gain(w: &SteeringVector, cfg: &ArrayConfig, angle_deg: f64) -> Result<f64> {
    if w.len() != cfg.num_elements {
        return Err(Error::dimension(cfg.num_elements, w.len()));
    }
    let a = steering_vector(cfg, angle_deg)?;
    Ok(w.inner(&a)?.norm_sqr() / cfg.num_elements as f64)
}

/// Half-power beamwidth (degrees) of the ideal beam steered to `steer_angle_deg`.
///
/// Walks outward from the peak until the pattern drops below half, then
/// bisects each edge to 1e-6°. An edge that never drops before ±90° is
/// clamped there.
pub fn estimate_hpbw(cfg: &ArrayConfig, steer_angle_deg: f64) -> Result<f64> {
    const STEP_DEG: f64 = 0.01;
    const TOL_DEG: f64 = 1e-6;

    let w = steering_vector(cfg, steer_angle_deg)?;
    let peak = array_gain(&w, cfg, steer_angle_deg)?;
    let half = 0.5 * peak;
    let gain = |theta: f64| array_gain(&w, cfg, theta).expect("angle clamped to ±90°");

    let edge = |direction: f64| -> f64 {
        let mut inside = steer_angle_deg;
        loop {
            let next = (inside + direction * STEP_DEG).clamp(-90.0, 90.0);
            if next == inside {
                return inside;
            }
            if gain(next) < half {
                let (mut lo, mut hi) = (inside, next);
                while (hi - lo).abs() > TOL_DEG {
                    let mid = 0.5 * (lo + hi);
                    if gain(mid) >= half {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
            inside = next;
        }
    };

    Ok(edge(1.0) - edge(-1.0))
}

/// Arc length covered by a beam of width `hpbw_deg` at `distance_m`.
pub fn beam_coverage_m(distance_m: f64, hpbw_deg: f64) -> Result<f64> {
    if !(distance_m > 0.0 && distance_m.is_finite()) {
        return Err(Error::domain(format!(
            "distance must be positive, got {distance_m}"
        )));
    }
    if !(0.0..180.0).contains(&hpbw_deg) {
        return Err(Error::domain(format!(
            "beamwidth must lie in [0°, 180°), got {hpbw_deg}"
        )));
    }
    Ok(distance_m * hpbw_deg.to_radians())
}

/// Direction (degrees) where the pattern of `w` is largest over [-90°, 90°].
///
/// Dense scan at 0.05° followed by golden-section refinement around the best
/// grid point.
pub fn pattern_peak_deg(w: &SteeringVector, cfg: &ArrayConfig) -> Result<f64> {
    PatternScanner::new(cfg).peak_deg(w)
}

/// Precomputed manifold over a dense angle grid, for repeated peak searches.
#[derive(Clone, Debug)]
pub struct PatternScanner {
    cfg: ArrayConfig,
    grid_deg: Vec<f64>,
    manifold: Vec<SteeringVector>,
}

impl PatternScanner {
    const GRID_STEP_DEG: f64 = 0.05;

    pub fn new(cfg: &ArrayConfig) -> Self {
        let n = (180.0 / Self::GRID_STEP_DEG).round() as usize;
        let grid_deg: Vec<f64> = (0..=n)
            .map(|i| -90.0 + i as f64 * Self::GRID_STEP_DEG)
            .collect();
        let manifold = grid_deg
            .iter()
            .map(|t| steering_vector_unchecked(cfg, t.to_radians().sin()))
            .collect();
        Self {
            cfg: cfg.clone(),
            grid_deg,
            manifold,
        }
    }

    pub fn peak_deg(&self, w: &SteeringVector) -> Result<f64> {
        if w.len() != self.cfg.num_elements {
            return Err(Error::dimension(self.cfg.num_elements, w.len()));
        }
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, a) in self.manifold.iter().enumerate() {
            let g = w.inner(a)?.norm_sqr();
            if g > best.1 {
                best = (i, g);
            }
        }
        let center = self.grid_deg[best.0];
        let mut lo = (center - Self::GRID_STEP_DEG).max(-90.0);
        let mut hi = (center + Self::GRID_STEP_DEG).min(90.0);
        let gain = |t: f64| {
            w.inner(&steering_vector_unchecked(&self.cfg, t.to_radians().sin()))
                .map(|z| z.norm_sqr())
                .unwrap_or(f64::NEG_INFINITY)
        };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut gc, mut gd) = (gain(c), gain(d));
        while hi - lo > 1e-7 {
            if gc > gd {
                hi = d;
                d = c;
                gd = gc;
                c = hi - inv_phi * (hi - lo);
                gc = gain(c);
            } else {
                lo = c;
                c = d;
                gc = gd;
                d = lo + inv_phi * (hi - lo);
                gd = gain(d);
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// An ordered set of steering angles.
///
/// Beam indices are 1-based. A window cut from a larger codebook keeps the
/// indices of the parent, so `index_of(0)` of the window `{6, 7, 8}` is 6.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    angles_deg: Vec<f64>,
    first_index: usize,
}

impl Codebook {
    pub fn from_angles(angles_deg: Vec<f64>) -> Result<Self> {
        Self::with_first_index(angles_deg, 1)
    }

    pub(crate) fn with_first_index(angles_deg: Vec<f64>, first_index: usize) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(Error::config("codebook must contain at least one angle"));
        }
        if let Some(bad) = angles_deg.iter().find(|a| !(a.abs() <= 90.0)) {
            return Err(Error::config(format!(
                "codebook angle {bad}° outside [-90°, 90°]"
            )));
        }
        if angles_deg.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("codebook angles must be strictly increasing"));
        }
        Ok(Self {
            angles_deg,
            first_index,
        })
    }

    /// Number of beams, N.
    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn last_index(&self) -> usize {
        self.first_index + self.len() - 1
    }

    /// 1-based beam index of the `pos`-th entry.
    pub fn index_of(&self, pos: usize) -> usize {
        self.first_index + pos
    }

    /// Angle of beam `index` (1-based, in this codebook's index space).
    pub fn angle_deg(&self, index: usize) -> Option<f64> {
        index
            .checked_sub(self.first_index)
            .and_then(|p| self.angles_deg.get(p).copied())
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.first_index..=self.last_index()
    }

    /// `(index, angle)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.angles_deg
            .iter()
            .enumerate()
            .map(|(p, &a)| (self.first_index + p, a))
    }
}

/// `min, min + step, …, max`.
pub fn uniform_codebook(min_deg: f64, max_deg: f64, step_deg: f64) -> Result<Codebook> {
    if !(min_deg < max_deg) {
        return Err(Error::config(format!(
            "codebook range needs min < max, got [{min_deg}, {max_deg}]"
        )));
    }
    if !(step_deg > 0.0) {
        return Err(Error::config(format!("codebook step must be positive, got {step_deg}")));
    }
    let steps = (max_deg - min_deg) / step_deg;
    let n = steps.round();
    if (steps - n).abs() > 1e-9 {
        return Err(Error::config(format!(
            "range [{min_deg}, {max_deg}] is not a multiple of step {step_deg}"
        )));
    }
    let n = n as usize;
    let angles = (0..=n)
        .map(|i| if i == n { max_deg } else { min_deg + i as f64 * step_deg })
        .collect();
    Codebook::from_angles(angles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_entries(v: &SteeringVector, expected: &[Complex64]) {
        assert_eq!(v.len(), expected.len());
        for (a, b) in v.entries().iter().zip(expected) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn steering_vector_examples() {
        let cfg = ArrayConfig::half_wavelength(8).unwrap();
        assert_entries(&steering_vector(&cfg, 0.0).unwrap(), &[c(1.0, 0.0); 8]);

        let cfg2 = ArrayConfig::half_wavelength(2).unwrap();
        assert_entries(
            &steering_vector(&cfg2, 90.0).unwrap(),
            &[c(1.0, 0.0), c(-1.0, 0.0)],
        );

        let cfg4 = ArrayConfig::half_wavelength(4).unwrap();
        assert_entries(
            &steering_vector(&cfg4, 30.0).unwrap(),
            &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)],
        );
    }

    #[test]
    fn steering_vector_rejects_out_of_range() {
        let cfg = ArrayConfig::default();
        assert!(matches!(steering_vector(&cfg, 90.5), Err(Error::Domain(_))));
        assert!(matches!(steering_vector(&cfg, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn config_invariants() {
        assert!(ArrayConfig::new(0, 0.5, 1e9).is_err());
        assert!(ArrayConfig::new(4, 0.0, 1e9).is_err());
        assert!(ArrayConfig::new(4, 0.5, -1.0).is_err());
        let cfg = ArrayConfig::default();
        assert_eq!(cfg.num_elements(), 8);
        assert!(close(cfg.wavelength_m(), 0.021_724_091_159, 1e-12));
    }

    #[test]
    fn array_gain_examples() {
        let cfg = ArrayConfig::default();
        let w = steering_vector(&cfg, 17.0).unwrap();
        assert!(close(array_gain(&w, &cfg, 17.0).unwrap(), 8.0, 1e-12));

        let w0 = steering_vector(&cfg, 0.0).unwrap();
        assert!(array_gain(&w0, &cfg, 90.0).unwrap() < 1e-24);

        let short = steering_vector(&ArrayConfig::half_wavelength(4).unwrap(), 0.0).unwrap();
        assert!(matches!(
            array_gain(&short, &cfg, 0.0),
            Err(Error::Dimension { expected: 8, actual: 4 })
        ));
    }

    // Reference values from the closed-form array factor
    // |sin(Mπu/2) / (M sin(πu/2))|² = 1/2, solved with a bracketing root finder.
    #[test]
    fn hpbw_matches_closed_form_roots() {
        let cases = [(2, 0.0, 60.0), (8, 0.0, 12.802_525_797), (64, 0.0, 1.586_403_023)];
        for (m, steer, expected) in cases {
            let cfg = ArrayConfig::half_wavelength(m).unwrap();
            let hpbw = estimate_hpbw(&cfg, steer).unwrap();
            assert!(close(hpbw, expected, 1e-5), "M={m}: {hpbw} vs {expected}");
        }
        let steered = estimate_hpbw(&ArrayConfig::default(), 20.0).unwrap();
        assert!(close(steered, 13.640_932_670, 1e-5), "{steered}");
    }

    #[test]
    fn hpbw_of_64_elements_rounds_to_quoted_value() {
        let hpbw = estimate_hpbw(&ArrayConfig::half_wavelength(64).unwrap(), 0.0).unwrap();
        assert!((hpbw - 1.6).abs() < 0.05);
    }

    #[test]
    fn hpbw_single_element_spans_everything() {
        let hpbw = estimate_hpbw(&ArrayConfig::half_wavelength(1).unwrap(), 0.0).unwrap();
        assert!(close(hpbw, 180.0, 1e-9));
    }

    #[test]
    fn coverage_examples() {
        assert!(close(beam_coverage_m(6.0, 8.0).unwrap(), 0.837_758_041, 1e-9));
        assert!(close(beam_coverage_m(100.0, 1.6).unwrap(), 2.792_526_803, 1e-9));
        assert_eq!(beam_coverage_m(4.0, 0.0).unwrap(), 0.0);
        assert!(matches!(beam_coverage_m(0.0, 8.0), Err(Error::Domain(_))));
        assert!(matches!(beam_coverage_m(-1.0, 8.0), Err(Error::Domain(_))));
        assert!(beam_coverage_m(1.0, 180.0).is_err());
    }

    #[test]
    fn uniform_codebook_examples() {
        let cb = uniform_codebook(-30.0, 30.0, 10.0).unwrap();
        assert_eq!(cb.angles_deg(), &[-30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0]);
        assert_eq!(cb.len(), 7);

        let cb13 = uniform_codebook(-30.0, 30.0, 5.0).unwrap();
        assert_eq!(cb13.len(), 13);
        assert_eq!(cb13.angle_deg(1), Some(-30.0));
        assert_eq!(cb13.angle_deg(7), Some(0.0));
        assert_eq!(cb13.angle_deg(13), Some(30.0));
        assert_eq!(cb13.angle_deg(0), None);
        assert_eq!(cb13.angle_deg(14), None);

        assert!(uniform_codebook(0.0, 0.0, 1.0).is_err());
        assert!(uniform_codebook(-30.0, 30.0, 7.0).is_err());
        assert!(uniform_codebook(-30.0, 30.0, 0.0).is_err());

        let single = Codebook::from_angles(vec![12.0]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.indices(), 1..=1);
    }

    #[test]
    fn codebook_rejects_bad_angles() {
        assert!(Codebook::from_angles(vec![]).is_err());
        assert!(Codebook::from_angles(vec![0.0, 0.0]).is_err());
        assert!(Codebook::from_angles(vec![10.0, 5.0]).is_err());
        assert!(Codebook::from_angles(vec![-95.0, 0.0]).is_err());
    }

    #[test]
    fn pattern_peak_of_ideal_beam_is_steer_angle() {
        let cfg = ArrayConfig::default();
        let scanner = PatternScanner::new(&cfg);
        for steer in [-30.0, -12.3, 0.0, 4.99, 25.0, 60.0] {
            let w = steering_vector(&cfg, steer).unwrap();
            let peak = scanner.peak_deg(&w).unwrap();
            assert!(close(peak, steer, 1e-5), "{steer}: {peak}");
        }
    }
}
