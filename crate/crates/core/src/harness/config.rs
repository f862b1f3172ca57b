//! Experiment configuration (TOML) and its content hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::scenario;
use super::SchemeId;
use crate::beamform::OptimizerConfig;
use crate::dynamics::ScenarioSpec;
use crate::error::{Error, Result};
use crate::metrics;
use crate::predictor::TrainingConfig;
use crate::scene::{dbm_to_watts, SceneConfig};

fn d_interferers() -> usize {
    8
}
fn d_k_range() -> [usize; 2] {
    [2, 12]
}
fn d_k_step() -> usize {
    2
}
fn d_dt() -> f64 {
    1e-3
}
fn d_horizon() -> usize {
    5
}
fn d_samples() -> usize {
    10
}
fn d_t_sim() -> usize {
    100
}
fn d_history() -> usize {
    4
}
fn d_v_max() -> f64 {
    1.0
}
fn d_noise() -> f64 {
    -80.0
}
fn d_power() -> f64 {
    0.0
}
fn d_gamma() -> f64 {
    5.0
}
fn d_eta() -> f64 {
    0.01
}
fn d_lambda_c() -> f64 {
    3.0
}
fn d_fc() -> f64 {
    100e9
}
fn d_budget() -> f64 {
    1.5
}
fn d_schemes() -> Vec<SchemeId> {
    SchemeId::COMPARED.to_vec()
}
fn d_seeds() -> Vec<u64> {
    (0..20).collect()
}
fn d_training_seeds() -> Vec<u64> {
    (1000..1008).collect()
}
fn d_output() -> PathBuf {
    PathBuf::from("out")
}
fn d_model_dir() -> PathBuf {
    PathBuf::from("models")
}
fn d_optimizer() -> OptimizerSettings {
    OptimizerSettings::default()
}

/// Optimizer fields that are not derived from other parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub max_iters: usize,
    pub tol: f64,
    /// Omitted selects `1e-6 tr(HH^H)/K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zf_delta: Option<f64>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-6,
            zf_delta: None,
        }
    }
}

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Scene file; the built-in layout is used when omitted. Relative paths
    /// resolve against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_file: Option<PathBuf>,
    /// Interferer count for single runs.
    #[serde(default = "d_interferers")]
    pub interferers: usize,
    /// Inclusive interferer-count range swept by `sweep`.
    #[serde(default = "d_k_range")]
    pub k_range: [usize; 2],
    #[serde(default = "d_k_step")]
    pub k_step: usize,
    /// Step duration, seconds.
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_horizon")]
    pub horizon: usize,
    /// Sampled futures per prediction.
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default = "d_t_sim")]
    pub t_sim: usize,
    /// History window `T_h` of the conditioning features.
    #[serde(default = "d_history")]
    pub history: usize,
    /// Maximum UE speed, m/s.
    #[serde(default = "d_v_max")]
    pub v_max: f64,
    #[serde(default = "d_noise")]
    pub noise_dbm: f64,
    #[serde(default = "d_power")]
    pub tx_power_dbm: f64,
    #[serde(default = "d_gamma")]
    pub gamma_min_db: f64,
    #[serde(default = "d_eta")]
    pub blockage_attenuation: f64,
    /// Expected users per hotspot cluster.
    #[serde(default = "d_lambda_c")]
    pub hotspot_intensity: f64,
    #[serde(default = "d_fc")]
    pub carrier_frequency: f64,
    /// Network budget as a multiple of the summed nominal powers.
    #[serde(default = "d_budget")]
    pub power_budget_factor: f64,
    #[serde(default = "d_schemes")]
    pub schemes: Vec<SchemeId>,
    #[serde(default = "d_seeds")]
    pub seeds: Vec<u64>,
    /// Episodes used to build training datasets.
    #[serde(default = "d_training_seeds")]
    pub training_seeds: Vec<u64>,
    #[serde(default = "d_output")]
    pub output_dir: PathBuf,
    /// Directory holding `model_k{K}.bin` artifacts.
    #[serde(default = "d_model_dir")]
    pub model_dir: PathBuf,
    #[serde(default = "d_optimizer")]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub training: TrainingConfig,
    /// Mobility and hotspot script; the built-in script is used when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Parse a config file; a relative `scene_file` is resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut c = Self::parse(&text)?;
        if let (Some(f), Some(dir)) = (&c.scene_file, path.parent()) {
            if f.is_relative() {
                c.scene_file = Some(dir.join(f));
            }
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("dt", self.dt),
            ("v_max", self.v_max),
            ("carrier_frequency", self.carrier_frequency),
            ("power_budget_factor", self.power_budget_factor),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.horizon == 0 || self.samples == 0 || self.t_sim == 0 {
            return Err(Error::Config("horizon, samples and t_sim must be positive".into()));
        }
        if self.k_step == 0 || self.k_range[0] > self.k_range[1] || self.k_range[0] == 0 {
            return Err(Error::Config("k_range must be an increasing range of positive counts".into()));
        }
        if !(self.blockage_attenuation > 0.0 && self.blockage_attenuation <= 1.0) {
            return Err(Error::Config("blockage attenuation must lie in (0, 1]".into()));
        }
        if !(self.hotspot_intensity >= 0.0) {
            return Err(Error::Config("hotspot intensity must be non-negative".into()));
        }
        if self.power_budget_factor < 1.0 {
            return Err(Error::Config("power budget must cover the nominal powers".into()));
        }
        if self.schemes.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("at least one scheme and one seed are required".into()));
        }
        if !self.noise_dbm.is_finite() || !self.tx_power_dbm.is_finite() || !self.gamma_min_db.is_finite() {
            return Err(Error::Config("power levels must be finite".into()));
        }
        self.training.validate()?;
        Ok(())
    }

    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn gamma_min(&self) -> f64 {
        metrics::from_db(self.gamma_min_db)
    }

    /// Interferer counts visited by a sweep.
    pub fn k_values(&self) -> Vec<usize> {
        (self.k_range[0]..=self.k_range[1]).step_by(self.k_step).collect()
    }

    /// Steps rolled per episode: history warm-up, the evaluated steps and the horizon tail.
    pub fn episode_len(&self) -> usize {
        self.history + self.t_sim + self.horizon + 1
    }

    /// Full scene (all listed transmitters) with experiment-level physics applied.
    pub fn scene_config(&self) -> Result<SceneConfig> {
        let mut s = match &self.scene_file {
            Some(p) => SceneConfig::load(p)?,
            None => scenario::default_scene(),
        };
        s.carrier_frequency = self.carrier_frequency;
        s.blockage_attenuation = self.blockage_attenuation;
        for t in &mut s.transmitters {
            t.tx_power_dbm = self.tx_power_dbm;
        }
        Ok(s)
    }

    /// Scene restricted to the serving AP and the first `k` interferers.
    pub fn scene_for(&self, k: usize) -> Result<SceneConfig> {
        let mut s = self.scene_config()?;
        if s.transmitters.len() < k + 1 {
            return Err(Error::Config(format!(
                "scene lists {} interferers, {} requested",
                s.transmitters.len().saturating_sub(1),
                k
            )));
        }
        s.transmitters.truncate(k + 1);
        Ok(s)
    }

    pub fn scenario_spec(&self) -> ScenarioSpec {
        let mut s = self.scenario.clone().unwrap_or_else(scenario::default_scenario);
        s.dt = self.dt;
        s.v_max = self.v_max;
        s.speed_min = s.speed_min.min(self.v_max);
        for h in &mut s.hotspots {
            h.intensity = self.hotspot_intensity;
        }
        s
    }

    pub fn optimizer_config(&self, k: usize) -> OptimizerConfig {
        OptimizerConfig {
            gamma_min: self.gamma_min(),
            max_iters: self.optimizer.max_iters,
            tol: self.optimizer.tol,
            zf_delta: self.optimizer.zf_delta,
            power_budget: self.power_budget_factor * (k + 1) as f64 * dbm_to_watts(self.tx_power_dbm),
            noise_power: self.noise_power(),
        }
    }

    pub fn model_path(&self, k: usize) -> PathBuf {
        self.model_dir.join(format!("model_k{k}.bin"))
    }

    /// SHA-256 over the canonical config serialization and the resolved scene.
    pub fn hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.scene_file = None;
        canonical.output_dir = PathBuf::new();
        canonical.model_dir = PathBuf::new();
        canonical.schemes.clear();
        canonical.seeds.clear();
        let mut h = Sha256::new();
        h.update(canonical.to_toml()?.as_bytes());
        h.update(self.scene_config()?.to_toml()?.as_bytes());
        h.update(toml::to_string(&self.scenario_spec())?.as_bytes());
        Ok(hex::encode(h.finalize()))
    }
}
