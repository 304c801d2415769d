//! TOML scenario files.
//!
//! Every section is optional and falls back to the default testbed setup.
//! Unknown keys anywhere in the file are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alignment::{calibrate_timing, TimingModel, REFERENCE_FAST, REFERENCE_SLOW};
use crate::array::{uniform_codebook, ArrayConfig, Codebook, DEFAULT_CARRIER_HZ};
use crate::channel::{noise_power_for_snr, Impairments, SignalConfig, IMPAIRMENT_PHASE_BOUND_DEG};
use crate::error::{Error, Result};
use crate::geometry::DEFAULT_SEARCH_HALFWIDTH;
use crate::mobility::{walk, Trajectory, WALKING_SPEED_KMH};
use crate::positioning::{AnchorSet, Position, RangingModel, DEFAULT_RANGING_SIGMA_M};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmSelector {
    Exhaustive,
    LocationAware,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Exhaustive,
    LocationAware,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::LocationAware => "location_aware",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            Algorithm::Exhaustive => 1,
            Algorithm::LocationAware => 2,
        }
    }
}

impl AlgorithmSelector {
    pub fn algorithms(self) -> Vec<Algorithm> {
        match self {
            AlgorithmSelector::Exhaustive => vec![Algorithm::Exhaustive],
            AlgorithmSelector::LocationAware => vec![Algorithm::LocationAware],
            AlgorithmSelector::Both => vec![Algorithm::Exhaustive, Algorithm::LocationAware],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub num_elements: usize,
    pub element_spacing_wavelengths: f64,
    pub carrier_frequency_hz: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            num_elements: 8,
            element_spacing_wavelengths: 0.5,
            carrier_frequency_hz: DEFAULT_CARRIER_HZ,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookSection {
    pub min_deg: f64,
    pub max_deg: f64,
    pub step_deg: f64,
}

impl Default for CodebookSection {
    fn default() -> Self {
        Self {
            min_deg: -30.0,
            max_deg: 30.0,
            step_deg: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSection {
    pub num_samples: usize,
    pub tx_power: f64,
    /// SNR of the aligned beam pair at `reference_distance_m`; sets the noise
    /// power unless `noise_power` is given.
    pub aligned_snr_db: f64,
    pub reference_distance_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power: Option<f64>,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            num_samples: 1024,
            tx_power: 1.0,
            aligned_snr_db: 20.0,
            reference_distance_m: 6.0,
            noise_power: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpairmentSection {
    /// Per-element phase offsets are drawn uniformly in ±this bound. 0 disables.
    pub phase_bound_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_phase_offsets_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_phase_offsets_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_gain_factors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_gain_factors: Option<Vec<f64>>,
}

impl Default for ImpairmentSection {
    fn default() -> Self {
        Self {
            phase_bound_deg: IMPAIRMENT_PHASE_BOUND_DEG,
            tx_phase_offsets_deg: None,
            rx_phase_offsets_deg: None,
            tx_gain_factors: None,
            rx_gain_factors: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PositioningSection {
    pub tx_position_m: [f64; 2],
    pub anchors_m: Vec<[f64; 2]>,
    pub ranging_sigma_m: f64,
}

impl Default for PositioningSection {
    fn default() -> Self {
        Self {
            tx_position_m: [0.0, 0.0],
            anchors_m: AnchorSet::room_corners()
                .anchors()
                .iter()
                .map(|a| [a.x_m, a.y_m])
                .collect(),
            ranging_sigma_m: DEFAULT_RANGING_SIGMA_M,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    /// x coordinate of the walking line.
    pub line_x_m: f64,
    pub start_y_m: f64,
    pub length_m: f64,
    pub hold_s: f64,
    pub speed_kmh: f64,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self {
            line_x_m: 6.0,
            start_y_m: -2.5,
            length_m: 5.0,
            hold_s: 3.0,
            speed_kmh: WALKING_SPEED_KMH,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignmentSection {
    pub algorithm: AlgorithmSelector,
    pub search_halfwidth: usize,
    /// `[measurements, seconds]` calibration points of the latency model.
    pub timing_fast: (usize, f64),
    pub timing_slow: (usize, f64),
}

impl Default for AlignmentSection {
    fn default() -> Self {
        Self {
            algorithm: AlgorithmSelector::Both,
            search_halfwidth: DEFAULT_SEARCH_HALFWIDTH,
            timing_fast: REFERENCE_FAST,
            timing_slow: REFERENCE_SLOW,
        }
    }
}

/// Misalignment experiment: its own coarser codebook and boresight distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub min_deg: f64,
    pub max_deg: f64,
    pub step_deg: f64,
    pub distances_m: Vec<f64>,
    pub max_sectors: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            min_deg: -30.0,
            max_deg: 30.0,
            step_deg: 10.0,
            distances_m: (1..=8).map(f64::from).collect(),
            max_sectors: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub tracking_file: String,
    pub misalignment_file: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            tracking_file: "tracking.csv".into(),
            misalignment_file: "misalignment.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Root seed; every random stream in a run derives from it.
    pub seed: u64,
    pub array: ArraySection,
    pub codebook: CodebookSection,
    pub signal: SignalSection,
    pub impairments: ImpairmentSection,
    pub positioning: PositioningSection,
    pub trajectory: TrajectorySection,
    pub alignment: AlignmentSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 2020,
            array: Default::default(),
            codebook: Default::default(),
            signal: Default::default(),
            impairments: Default::default(),
            positioning: Default::default(),
            trajectory: Default::default(),
            alignment: Default::default(),
            sweep: Default::default(),
            output: Default::default(),
        }
    }
}

const SIGNAL_SEED_TAG: u64 = 0x5349_474E;
const RANGING_SEED_TAG: u64 = 0x5241_4E47;
const IMPAIRMENT_SEED_TAG: u64 = 0x494D_5041;

/// SplitMix64 finalizer over `root ^ tag`.
pub fn derive_seed(root: u64, tag: u64) -> u64 {
    let mut z = (root ^ tag).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().trim().replace('\n', " ");
            match e.span() {
                Some(span) => {
                    let before = &text[..span.start.min(text.len())];
                    let line = before.matches('\n').count() + 1;
                    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                    Error::config(format!("line {line}, column {col}: {msg}"))
                }
                None => Error::config(msg),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Validates every section and assembles the domain objects.
    pub fn build(&self) -> Result<Scenario> {
        let a = &self.array;
        let array = ArrayConfig::new(a.num_elements, a.element_spacing_wavelengths, a.carrier_frequency_hz)?;
        let m = array.num_elements();

        let c = &self.codebook;
        let codebook = uniform_codebook(c.min_deg, c.max_deg, c.step_deg)?;

        let s = &self.signal;
        let noise_power = match s.noise_power {
            Some(p) => p,
            None => {
                if !(s.reference_distance_m > 0.0) {
                    return Err(Error::config("reference distance must be positive"));
                }
                noise_power_for_snr(&array, s.tx_power, s.reference_distance_m, s.aligned_snr_db)
            }
        };
        let signal = SignalConfig::new(
            s.num_samples,
            s.tx_power,
            noise_power,
            derive_seed(self.seed, SIGNAL_SEED_TAG),
        )?;

        let impairments = self.build_impairments(m)?;

        let p = &self.positioning;
        let tx_pos = Position::new(p.tx_position_m[0], p.tx_position_m[1])?;
        let anchors = AnchorSet::new(
            p.anchors_m
                .iter()
                .map(|&[x, y]| Position::new(x, y))
                .collect::<Result<_>>()?,
        )?;
        let ranging = RangingModel::new(p.ranging_sigma_m, derive_seed(self.seed, RANGING_SEED_TAG))?;

        let t = &self.trajectory;
        let trajectory = walk(t.line_x_m, t.start_y_m, t.length_m, t.hold_s, t.speed_kmh)?;
        if trajectory.start().distance_to(tx_pos) == 0.0 {
            return Err(Error::config("receiver starts on top of the transmitter"));
        }

        let al = &self.alignment;
        let timing = calibrate_timing(al.timing_fast.0, al.timing_fast.1, al.timing_slow.0, al.timing_slow.1)?;

        let sw = &self.sweep;
        let sweep_codebook = uniform_codebook(sw.min_deg, sw.max_deg, sw.step_deg)?;
        if sw.distances_m.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::config("sweep distances must be positive"));
        }

        Ok(Scenario {
            array,
            codebook,
            signal,
            impairments,
            tx_pos,
            anchors,
            ranging,
            trajectory,
            algorithm: al.algorithm,
            search_halfwidth: al.search_halfwidth,
            timing,
            sweep_codebook,
            sweep_distances_m: sw.distances_m.clone(),
            sweep_max_sectors: sw.max_sectors,
            output_dir: self.output.dir.clone(),
            tracking_file: self.output.tracking_file.clone(),
            misalignment_file: self.output.misalignment_file.clone(),
        })
    }

    fn build_impairments(&self, m: usize) -> Result<Impairments> {
        let imp = &self.impairments;
        if !(imp.phase_bound_deg >= 0.0 && imp.phase_bound_deg.is_finite()) {
            return Err(Error::config("impairment phase bound must be non-negative"));
        }
        let drawn = Impairments::draw(m, imp.phase_bound_deg, derive_seed(self.seed, IMPAIRMENT_SEED_TAG), 0);
        let degs = |v: &Option<Vec<f64>>, fallback: &[f64]| -> Vec<f64> {
            v.as_ref()
                .map(|d| d.iter().map(|x| x.to_radians()).collect())
                .unwrap_or_else(|| fallback.to_vec())
        };
        let gains = |v: &Option<Vec<f64>>, fallback: &[f64]| v.clone().unwrap_or_else(|| fallback.to_vec());
        let built = Impairments::new(
            degs(&imp.tx_phase_offsets_deg, drawn.tx_phase_offsets_rad()),
            degs(&imp.rx_phase_offsets_deg, drawn.rx_phase_offsets_rad()),
            gains(&imp.tx_gain_factors, drawn.tx_gain_factors()),
            gains(&imp.rx_gain_factors, drawn.rx_gain_factors()),
        )?;
        if built.num_elements() != m {
            return Err(Error::dimension(m, built.num_elements()));
        }
        Ok(built)
    }
}

/// A validated scenario, ready to run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub array: ArrayConfig,
    pub codebook: Codebook,
    pub signal: SignalConfig,
    pub impairments: Impairments,
    pub tx_pos: Position,
    pub anchors: AnchorSet,
    pub ranging: RangingModel,
    pub trajectory: Trajectory,
    pub algorithm: AlgorithmSelector,
    pub search_halfwidth: usize,
    pub timing: TimingModel,
    pub sweep_codebook: Codebook,
    pub sweep_distances_m: Vec<f64>,
    pub sweep_max_sectors: usize,
    pub output_dir: PathBuf,
    pub tracking_file: String,
    pub misalignment_file: String,
}
