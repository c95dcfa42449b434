//! Declarative experiment configuration.
//!
//! Every field has a baked-in default matching the reference deployment, so
//! a bare scenario id reproduces the standard setup; a TOML file overrides
//! whichever fields it names. Validation collects every violation instead
//! of stopping at the first so a config can be fixed in one pass.

use holofuse_core::channel::{db_to_linear, dbm_to_watts, ChannelError, FadingParams};
use holofuse_core::geometry::SceneConfig;
use holofuse_core::rng::RandomStream;
use holofuse_core::sensing::{SensingError, SensorStats};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scenario to run unless overridden on the command line.
    pub scenario: String,
    pub output_dir: PathBuf,
    /// Master seed; every random quantity in a run derives from it.
    pub seed: u64,
    /// Monte Carlo trials per hypothesis.
    pub trials: usize,
    /// Independent channel and deployment redraws averaged per point.
    pub redraws: usize,
    /// False-alarm rate at which summary detection probabilities are read.
    pub pfa_target: f64,
    /// Receiver noise power in dBm.
    pub noise_dbm: f64,
    pub sensors: Sensors,
    pub surface: Surface,
    pub digital: Digital,
    pub fading: Fading,
    pub layout: Layout,
    pub design: Design,
    pub power: Power,
    pub sweep: Sweep,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sensors {
    pub count: usize,
    pub prob_detection: f64,
    pub prob_false_alarm: f64,
    /// Common transmit amplitude.
    pub amplitude: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Surface {
    pub elements: usize,
    pub feeds: usize,
    /// Element pitch in wavelengths.
    pub element_spacing: f64,
    pub feed_spacing: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Digital {
    pub antennas: usize,
    pub spacing: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fading {
    pub reference_gain_db: f64,
    pub reference_distance: f64,
    pub path_loss_exponent: f64,
    /// Rician factor range in dB; each sensor draws uniformly from it.
    pub rician_db_min: f64,
    pub rician_db_max: f64,
    pub efficiency: f64,
    pub directivity_exponent: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Layout {
    pub sensor_box_min: [f64; 3],
    pub sensor_box_max: [f64; 3],
    pub surface_center: [f64; 3],
    pub feed_center: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Design {
    pub max_outer: usize,
    pub tolerance: f64,
    pub mm_steps: usize,
}

/// Per-interval circuit consumption (milliwatts).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Power {
    pub sensor_circuit: f64,
    pub element_circuit: f64,
    pub chain_circuit: f64,
    pub overhead: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    /// Element counts for the aperture sweep; each must be a perfect square.
    pub elements: Vec<usize>,
    pub feeds: Vec<usize>,
    pub sensors_min: usize,
    pub sensors_max: usize,
    pub bits: Vec<u32>,
    /// Aperture used by the sensor-count and quantization studies.
    pub study_elements: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: "roc_design".into(),
            output_dir: PathBuf::from("artifacts"),
            seed: 7,
            trials: 20_000,
            redraws: 20,
            pfa_target: 0.01,
            noise_dbm: -50.0,
            sensors: Sensors::default(),
            surface: Surface::default(),
            digital: Digital::default(),
            fading: Fading::default(),
            layout: Layout::default(),
            design: Design::default(),
            power: Power::default(),
            sweep: Sweep::default(),
        }
    }
}

impl Default for Sensors {
    fn default() -> Self {
        Self {
            count: 10,
            prob_detection: 0.5,
            prob_false_alarm: 0.05,
            amplitude: 1.0,
        }
    }
}

impl Default for Surface {
    fn default() -> Self {
        Self {
            elements: 64,
            feeds: 1,
            element_spacing: 1.0 / 3.0,
            feed_spacing: 0.5,
        }
    }
}

impl Default for Digital {
    fn default() -> Self {
        Self {
            antennas: 100,
            spacing: 0.5,
        }
    }
}

impl Default for Fading {
    fn default() -> Self {
        Self {
            reference_gain_db: -30.0,
            reference_distance: 1.0,
            path_loss_exponent: 2.0,
            rician_db_min: 3.0,
            rician_db_max: 5.0,
            efficiency: 1.0,
            directivity_exponent: 1.5,
        }
    }
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            sensor_box_min: [0.0, 0.0, 0.0],
            sensor_box_max: [40.0, 40.0, 3.0],
            surface_center: [70.0, 20.0, 10.0],
            feed_center: [68.0, 18.0, 10.0],
        }
    }
}

impl Default for Design {
    fn default() -> Self {
        Self {
            max_outer: 200,
            tolerance: 1e-6,
            mm_steps: 1,
        }
    }
}

impl Default for Power {
    fn default() -> Self {
        Self {
            sensor_circuit: 1.0,
            element_circuit: 1.0,
            chain_circuit: 10.0,
            overhead: 5.0,
        }
    }
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            elements: vec![25, 49, 64, 100, 144],
            feeds: vec![1, 2],
            sensors_min: 5,
            sensors_max: 15,
            bits: vec![1, 2, 3],
            study_elements: 100,
        }
    }
}

pub const SCENARIO_IDS: &[&str] = &[
    "roc_design",
    "pd_vs_M",
    "pd_vs_K",
    "quantization",
    "power_table",
];

/// Joint decision tables cap the sensor count (the exact fusion rule
/// enumerates 2^K patterns).
const MAX_SENSORS: usize = 20;

fn is_square(n: usize) -> bool {
    let side = (n as f64).sqrt().round() as usize;
    side * side == n
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Ok(Self::from_toml_str(&text)
            .map_err(|e| anyhow::anyhow!("cannot parse config {}: {e}", path.display()))?)
    }

    /// Noise power in watts.
    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    /// Hex SHA-256 of the canonical JSON serialization; identifies the
    /// resolved configuration in artifacts.
    pub fn sha256_hex(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn scene_config(&self, elements: usize, feeds: usize, sensors: usize) -> SceneConfig {
        SceneConfig {
            num_sensors: sensors,
            num_elements: elements,
            num_feeds: feeds,
            num_digital_antennas: self.digital.antennas,
            element_spacing: self.surface.element_spacing,
            feed_spacing: self.surface.feed_spacing,
            digital_spacing: self.digital.spacing,
            sensor_box_min: self.layout.sensor_box_min,
            sensor_box_max: self.layout.sensor_box_max,
            surface_center: self.layout.surface_center,
            feed_center: self.layout.feed_center,
            directivity_exponent: self.fading.directivity_exponent,
        }
    }

    pub fn sensor_stats(&self, count: usize) -> Result<SensorStats, SensingError> {
        SensorStats::iid(
            count,
            self.sensors.prob_detection,
            self.sensors.prob_false_alarm,
            DVector::from_element(count, self.sensors.amplitude),
        )
    }

    /// Fading parameters with per-sensor Rician factors drawn from the
    /// configured range.
    pub fn fading_params(
        &self,
        count: usize,
        rng: &mut RandomStream,
    ) -> Result<FadingParams, ChannelError> {
        let factors = (0..count)
            .map(|_| db_to_linear(rng.uniform(self.fading.rician_db_min, self.fading.rician_db_max)))
            .collect();
        FadingParams::new(
            db_to_linear(self.fading.reference_gain_db),
            self.fading.reference_distance,
            self.fading.path_loss_exponent,
            factors,
            self.fading.efficiency,
        )
    }

    /// Every constraint violation, each naming the offending field. Empty
    /// iff the configuration is runnable.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut flag = |cond: bool, msg: &str| {
            if !cond {
                v.push(msg.to_string());
            }
        };

        flag(
            SCENARIO_IDS.contains(&self.scenario.as_str()),
            &format!(
                "scenario: '{}' is not one of {}",
                self.scenario,
                SCENARIO_IDS.join(", ")
            ),
        );
        flag(self.trials >= 1, "trials: must be at least 1");
        flag(self.redraws >= 1, "redraws: must be at least 1");
        flag(
            self.pfa_target > 0.0 && self.pfa_target <= 1.0,
            "pfa_target: must lie in (0, 1]",
        );
        if self.trials >= 1 {
            flag(
                self.pfa_target >= 1.0 / self.trials as f64,
                "pfa_target: below the resolution of the configured trial count",
            );
        }
        flag(self.noise_dbm.is_finite(), "noise_dbm: must be finite");

        let s = &self.sensors;
        flag(
            s.count >= 1 && s.count <= MAX_SENSORS,
            &format!("sensors.count: must lie in 1..={MAX_SENSORS}"),
        );
        flag(
            (0.0..=1.0).contains(&s.prob_false_alarm)
                && s.prob_false_alarm <= s.prob_detection
                && s.prob_detection <= 1.0,
            "sensors: must satisfy 0 <= prob_false_alarm <= prob_detection <= 1",
        );
        flag(
            s.amplitude.is_finite() && s.amplitude > 0.0,
            "sensors.amplitude: must be positive and finite",
        );

        flag(
            self.surface.elements >= 1 && is_square(self.surface.elements),
            "surface.elements: must be a positive perfect square",
        );
        flag(self.surface.feeds >= 1, "surface.feeds: must be at least 1");
        flag(
            self.surface.element_spacing > 0.0,
            "surface.element_spacing: must be positive",
        );
        flag(
            self.surface.feed_spacing > 0.0,
            "surface.feed_spacing: must be positive",
        );
        flag(
            self.digital.antennas >= 1 && is_square(self.digital.antennas),
            "digital.antennas: must be a positive perfect square",
        );
        flag(
            self.digital.spacing > 0.0,
            "digital.spacing: must be positive",
        );

        let f = &self.fading;
        flag(
            f.reference_gain_db.is_finite(),
            "fading.reference_gain_db: must be finite",
        );
        flag(
            f.reference_distance > 0.0,
            "fading.reference_distance: must be positive",
        );
        flag(
            f.path_loss_exponent >= 0.0 && f.path_loss_exponent.is_finite(),
            "fading.path_loss_exponent: must be nonnegative",
        );
        flag(
            f.rician_db_min <= f.rician_db_max && f.rician_db_min.is_finite() && f.rician_db_max.is_finite(),
            "fading: rician_db_min must not exceed rician_db_max",
        );
        flag(
            f.efficiency > 0.0 && f.efficiency <= 1.0,
            "fading.efficiency: must lie in (0, 1]",
        );
        flag(
            f.directivity_exponent >= 0.0 && f.directivity_exponent.is_finite(),
            "fading.directivity_exponent: must be nonnegative",
        );

        let l = &self.layout;
        flag(
            l.sensor_box_min
                .iter()
                .zip(&l.sensor_box_max)
                .all(|(lo, hi)| lo < hi),
            "layout: sensor_box_min must be strictly below sensor_box_max per axis",
        );
        flag(
            l.surface_center != l.feed_center,
            "layout: surface_center and feed_center must differ",
        );

        flag(
            self.design.max_outer >= 1,
            "design.max_outer: must be at least 1",
        );
        flag(
            self.design.tolerance > 0.0,
            "design.tolerance: must be positive",
        );
        flag(
            self.design.mm_steps >= 1,
            "design.mm_steps: must be at least 1",
        );

        let p = &self.power;
        flag(
            [p.sensor_circuit, p.element_circuit, p.chain_circuit, p.overhead]
                .iter()
                .all(|x| x.is_finite() && *x >= 0.0),
            "power: all entries must be finite and nonnegative",
        );
        flag(
            p.element_circuit > 0.0 || p.chain_circuit > 0.0,
            "power: surface receive hardware must draw some power",
        );

        let w = &self.sweep;
        flag(
            !w.elements.is_empty() && w.elements.iter().all(|&m| m >= 1 && is_square(m)),
            "sweep.elements: must be nonempty perfect squares",
        );
        flag(
            !w.feeds.is_empty() && w.feeds.iter().all(|&n| n >= 1),
            "sweep.feeds: must be nonempty positive counts",
        );
        flag(
            w.sensors_min >= 1 && w.sensors_min <= w.sensors_max && w.sensors_max <= MAX_SENSORS,
            &format!("sweep: sensors range must satisfy 1 <= min <= max <= {MAX_SENSORS}"),
        );
        flag(
            !w.bits.is_empty() && w.bits.iter().all(|&b| (1..=16).contains(&b)),
            "sweep.bits: must be nonempty values in 1..=16",
        );
        flag(
            w.study_elements >= 1 && is_square(w.study_elements),
            "sweep.study_elements: must be a positive perfect square",
        );

        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_empty(), "{:?}", cfg.validate());
        assert_eq!(cfg.noise_power(), 1e-8);
    }

    #[test]
    fn toml_overrides_only_named_fields() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            trials = 500
            [sensors]
            prob_detection = 0.7
            "#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 500);
        assert_eq!(cfg.sensors.prob_detection, 0.7);
        assert_eq!(cfg.sensors.count, 10);
        assert_eq!(cfg.surface.elements, 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("trails = 500").is_err());
    }

    #[test]
    fn violations_name_their_fields() {
        let mut cfg = ExperimentConfig::default();
        cfg.trials = 0;
        cfg.sensors.prob_detection = 0.2;
        cfg.sensors.prob_false_alarm = 0.4;
        cfg.noise_dbm = f64::NAN;
        cfg.scenario = "mystery".into();
        let violations = cfg.validate();
        for needle in ["trials", "prob_false_alarm", "noise_dbm", "scenario"] {
            assert!(
                violations.iter().any(|v| v.contains(needle)),
                "no violation names {needle}: {violations:?}"
            );
        }
    }

    #[test]
    fn pfa_resolution_is_checked_against_trials() {
        let mut cfg = ExperimentConfig::default();
        cfg.trials = 50;
        cfg.pfa_target = 0.01;
        assert!(cfg
            .validate()
            .iter()
            .any(|v| v.contains("pfa_target") && v.contains("resolution")));
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = ExperimentConfig::default();
        assert_eq!(a.sha256_hex(), b.sha256_hex());
        b.seed = 8;
        assert_ne!(a.sha256_hex(), b.sha256_hex());
    }
}
