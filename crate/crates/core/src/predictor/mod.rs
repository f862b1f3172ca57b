//! Future-state predictors and the trajectory bundles they emit.

pub mod artifact;
pub mod gan;
pub mod nn;

use serde::{Deserialize, Serialize};

use crate::beamform::BeamformerSet;
use crate::channel::{self, CVec, LinkChannel};
use crate::dynamics::{self, MobilityState, Trace};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::rng;
use crate::scene::{Regime, Scene};

pub use gan::{generate_trajectories, train_generative, ConditioningVector, GenerativeModel, TrainingConfig, TrainingLog};

/// Regime rule used when a predictor synthesizes channels at a predicted position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// Classify each link against its Rayleigh distance.
    #[default]
    RegimeAware,
    /// Treat every link with exact per-element distances.
    AllNearField,
    /// Treat every link with the shared array-center distance.
    AllFarField,
}

impl ChannelModel {
    pub fn regime_override(self) -> Option<Regime> {
        match self {
            ChannelModel::RegimeAware => None,
            ChannelModel::AllNearField => Some(Regime::NearField),
            ChannelModel::AllFarField => Some(Regime::FarField),
        }
    }

    pub fn synthesize(self, scene: &Scene, k: usize, u: &Vec3) -> Result<LinkChannel> {
        channel::synthesize(scene, k, u, self.regime_override())
    }
}

/// Predicted state of every link at one future step.
#[derive(Debug, Clone)]
pub struct PredictedStep {
    pub ue: Vec3,
    pub links: Vec<LinkChannel>,
}

/// One sampled future over `tau = 1..=T`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<PredictedStep>,
    /// Aggregate interference per step under the last evaluated beams.
    pub interference: Vec<f64>,
    /// Serving SINR per step under the last evaluated beams.
    pub sinr: Vec<f64>,
}

impl Trajectory {
    pub fn new(steps: Vec<PredictedStep>) -> Self {
        let n = steps.len();
        Self {
            steps,
            interference: vec![f64::NAN; n],
            sinr: vec![f64::NAN; n],
        }
    }
}

/// `M` sampled futures of the tagged UE's links.
#[derive(Debug, Clone)]
pub struct TrajectoryBundle {
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryBundle {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        let first = trajectories.first().ok_or(Error::Empty("trajectory bundle"))?;
        let horizon = first.steps.len();
        let links = first.steps.first().map(|s| s.links.len()).unwrap_or(0);
        for t in &trajectories {
            if t.steps.len() != horizon || t.steps.iter().any(|s| s.links.len() != links) {
                return Err(Error::Dimension("ragged trajectory bundle".into()));
            }
        }
        Ok(Self { trajectories })
    }

    pub fn num_samples(&self) -> usize {
        self.trajectories.len()
    }

    pub fn horizon(&self) -> usize {
        self.trajectories[0].steps.len()
    }

    pub fn num_links(&self) -> usize {
        self.trajectories[0].steps.first().map(|s| s.links.len()).unwrap_or(0)
    }

    /// Predicted effective channel of link `k` in sample `m` at `tau` (1-based).
    pub fn effective(&self, m: usize, tau: usize, k: usize) -> &CVec {
        &self.trajectories[m].steps[tau - 1].links[k].h_eff
    }

    /// Recompute interference and SINR of every sample and step under `beams`.
    pub fn evaluate(&mut self, beams: &BeamformerSet, noise_power: f64) {
        for traj in &mut self.trajectories {
            for (i, step) in traj.steps.iter().enumerate() {
                let (int, s) = beams.interference_and_sinr(&step.links, noise_power);
                traj.interference[i] = int;
                traj.sinr[i] = s;
            }
        }
    }

    /// Sample mean of the predicted interference per step.
    pub fn mean_interference(&self) -> Vec<f64> {
        let m = self.num_samples() as f64;
        (0..self.horizon())
            .map(|i| self.trajectories.iter().map(|t| t.interference[i]).sum::<f64>() / m)
            .collect()
    }

    /// Sample mean of the predicted SINR per step.
    pub fn mean_sinr(&self) -> Vec<f64> {
        let m = self.num_samples() as f64;
        (0..self.horizon())
            .map(|i| self.trajectories.iter().map(|t| t.sinr[i]).sum::<f64>() / m)
            .collect()
    }
}

/// Constant-velocity positions `u(t + tau dt)` for `tau = 1..=horizon`, with
/// wall reflection and no perturbation.
pub fn extrapolate(scene: &Scene, state: &MobilityState, horizon: usize, dt: f64) -> Vec<Vec3> {
    let mut s = MobilityState {
        noise_sigma: 0.0,
        ..*state
    };
    let mut unused = rng::substream(0, &[]);
    (0..horizon)
        .map(|_| {
            s = dynamics::mobility_step(scene, &s, dt, &mut unused);
            s.position
        })
        .collect()
}

/// Single deterministic future: constant-velocity extrapolation with
/// geometry-implied blockage, regimes and channels.
pub fn deterministic_dt_predict(
    scene: &Scene,
    state: &MobilityState,
    horizon: usize,
    dt: f64,
    model: ChannelModel,
) -> Result<TrajectoryBundle> {
    let steps = extrapolate(scene, state, horizon, dt)
        .into_iter()
        .map(|u| {
            let links = (0..scene.num_transmitters())
                .map(|k| model.synthesize(scene, k, &u))
                .collect::<Result<Vec<_>>>()?;
            Ok(PredictedStep { ue: u, links })
        })
        .collect::<Result<Vec<_>>>()?;
    TrajectoryBundle::new(vec![Trajectory::new(steps)])
}

/// The realized future of `trace` after step `t`.
pub fn oracle_predict(trace: &Trace, t: usize, horizon: usize) -> Result<TrajectoryBundle> {
    if t + horizon >= trace.len() {
        return Err(Error::HorizonTooLong {
            horizon,
            history: t,
            t_sim: trace.len(),
        });
    }
    let steps = trace.snapshots[t + 1..=t + horizon]
        .iter()
        .map(|s| PredictedStep {
            ue: s.ue,
            links: s.links.clone(),
        })
        .collect();
    TrajectoryBundle::new(vec![Trajectory::new(steps)])
}

/// Interference prediction error per horizon and pooled.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseReport {
    pub per_horizon: Vec<f64>,
    pub aggregate: f64,
}

/// RMSE between predicted and realized interference. Both inputs are indexed
/// `[step][tau - 1]`.
pub fn prediction_rmse(predicted: &[Vec<f64>], realized: &[Vec<f64>]) -> Result<RmseReport> {
    if predicted.len() != realized.len() {
        return Err(Error::Dimension(format!(
            "{} predicted steps vs {} realized",
            predicted.len(),
            realized.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Empty("prediction series"));
    }
    let horizon = predicted[0].len();
    if predicted.iter().chain(realized).any(|r| r.len() != horizon) {
        return Err(Error::Dimension("ragged prediction series".into()));
    }
    let n = predicted.len() as f64;
    let mut per = vec![0.0; horizon];
    for (p, r) in predicted.iter().zip(realized) {
        for i in 0..horizon {
            per[i] += (p[i] - r[i]).powi(2);
        }
    }
    let aggregate = (per.iter().sum::<f64>() / (n * horizon as f64)).sqrt();
    let per_horizon = per.into_iter().map(|s| (s / n).sqrt()).collect();
    Ok(RmseReport { per_horizon, aggregate })
}
