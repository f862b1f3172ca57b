//! Closed-loop simulation: at every step the scheme observes the current
//! state, predicts (if it has a predictor), chooses beams, and the beams are
//! deployed on the realized channels of the next step.

use std::sync::Arc;

use super::{ExperimentConfig, PredictorKind, SchemeId};
use crate::beamform::{self, BeamformerSet, OptimizerTrace, ProactiveProblem};
use crate::channel::{self, CVec};
use crate::dynamics::{Snapshot, Trace};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::predictor::gan::StepRef;
use crate::predictor::{self, ConditioningVector, GenerativeModel, TrajectoryBundle};
use crate::scene::{Regime, Scene};

/// One realized step of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub ue: [f64; 3],
    /// Aggregate interference at the tagged UE, watts.
    pub interference: f64,
    /// Realized serving SINR, linear.
    pub sinr: f64,
    /// Mean predicted SINR for this step (NaN without a predictor).
    pub predicted_sinr: f64,
    pub serving_blocked: bool,
    pub blocked_links: usize,
    pub near_field_links: usize,
    pub hotspot_users: usize,
    pub serving_power: f64,
    pub iterations: usize,
    pub feasible_fraction: f64,
    /// Mean predicted interference for `tau = 1..=T` under the chosen beams.
    pub predicted: Vec<f64>,
    /// Realized interference for `tau = 1..=T` under the same beams.
    pub realized: Vec<f64>,
}

/// All steps of one (scheme, K, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTrace {
    pub scheme: SchemeId,
    pub interferers: usize,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub optimizer: Vec<Option<OptimizerTraceSummary>>,
}

/// Deterministic part of an optimizer trace.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerTraceSummary {
    pub objective: Vec<f64>,
    pub total_power: Vec<f64>,
    pub worst_sinr: Vec<f64>,
    pub feasible: Vec<Vec<bool>>,
}

impl From<&OptimizerTrace> for OptimizerTraceSummary {
    fn from(t: &OptimizerTrace) -> Self {
        Self {
            objective: t.objective.clone(),
            total_power: t.total_power.clone(),
            worst_sinr: t.worst_sinr.clone(),
            feasible: t.feasible.clone(),
        }
    }
}

/// Shared per-(K, seed) state.
pub struct CellContext<'a> {
    pub config: &'a ExperimentConfig,
    pub scene: Arc<Scene>,
    pub trace: Arc<Trace>,
    pub model: Option<&'a GenerativeModel>,
    pub exec: Execution,
}

impl<'a> CellContext<'a> {
    pub fn new(config: &'a ExperimentConfig, k: usize, seed: u64, model: Option<&'a GenerativeModel>, exec: Execution) -> Result<Self> {
        let scene = Arc::new(config.scene_for(k)?.build(seed)?);
        let trace = Arc::new(Trace::build(&scene, &config.scenario_spec(), seed, config.episode_len())?);
        Ok(Self {
            config,
            scene,
            trace,
            model,
            exec,
        })
    }

    fn k(&self) -> usize {
        self.scene.num_transmitters() - 1
    }
}

struct Decision {
    beams: BeamformerSet,
    bundle: Option<TrajectoryBundle>,
    optimizer: Option<OptimizerTrace>,
}

fn nominal_powers(scene: &Scene) -> Vec<f64> {
    scene.transmitters.iter().map(|t| t.tx_power).collect()
}

fn effective(links: &[channel::LinkChannel]) -> Vec<CVec> {
    links.iter().map(|c| c.h_eff.clone()).collect()
}

/// Predicted futures for `scheme` at episode step `t`.
pub fn predict(ctx: &CellContext, scheme: SchemeId, t: usize) -> Result<Option<TrajectoryBundle>> {
    let cfg = ctx.config;
    let scene = &ctx.scene;
    match scheme.predictor() {
        PredictorKind::None => Ok(None),
        PredictorKind::Deterministic => {
            let state = &ctx.trace.episode.states[t].ue;
            predictor::deterministic_dt_predict(scene, state, cfg.horizon, cfg.dt, scheme.channel_model()).map(Some)
        }
        PredictorKind::Oracle => predictor::oracle_predict(&ctx.trace, t, cfg.horizon).map(Some),
        PredictorKind::Generative => {
            let model = ctx
                .model
                .ok_or_else(|| Error::MissingArtifact(format!("{} needs a trained model", scheme.name())))?;
            if model.layout.history != cfg.history + 1 || model.layout.horizon != cfg.horizon {
                return Err(Error::Dimension(format!(
                    "model window {}+{} differs from configured {}+{}",
                    model.layout.history,
                    model.layout.horizon,
                    cfg.history + 1,
                    cfg.horizon
                )));
            }
            let hist: Vec<StepRef> = ctx.trace.snapshots[t - cfg.history..=t].iter().map(StepRef::from).collect();
            let cond = ConditioningVector::from_history(&hist)?;
            let ue = ctx.trace.snapshots[t].ue;
            predictor::generate_trajectories(
                model,
                scene,
                &cond,
                &ue,
                cfg.samples,
                ctx.trace.episode.seed,
                t as u64,
                scheme.channel_model(),
                ctx.exec,
            )
            .map(Some)
        }
    }
}

fn decide(ctx: &CellContext, scheme: SchemeId, t: usize, previous: Option<&BeamformerSet>) -> Result<Decision> {
    let scene = &ctx.scene;
    let snap: &Snapshot = &ctx.trace.snapshots[t];
    let powers = nominal_powers(scene);
    let delta = ctx.config.optimizer.zf_delta;
    let regimes = snap.regimes();
    match scheme {
        SchemeId::ReactiveZf => {
            let n = scene.num_transmitters();
            let tagged = (0..n)
                .map(|k| channel::plane_wave_steering(scene, k, &snap.ue))
                .collect::<Result<Vec<_>>>()?;
            let own = (0..n)
                .map(|k| channel::plane_wave_steering(scene, k, &snap.served[k]))
                .collect::<Result<Vec<_>>>()?;
            let far = vec![Regime::FarField; n];
            let beams = beamform::reactive_schemes(scheme.reactive_kind(), &tagged, &own, &far, &powers, delta)?;
            Ok(Decision {
                beams,
                bundle: None,
                optimizer: None,
            })
        }
        SchemeId::ReactiveHybrid => {
            let beams = beamform::reactive_schemes(
                scheme.reactive_kind(),
                &effective(&snap.links),
                &effective(&snap.own),
                &regimes,
                &powers,
                delta,
            )?;
            Ok(Decision {
                beams,
                bundle: None,
                optimizer: None,
            })
        }
        _ => {
            let bundle = predict(ctx, scheme, t)?.expect("predictive scheme");
            let own = effective(&snap.own);
            let problem = ProactiveProblem {
                bundle: &bundle,
                own: &own,
                regimes: &regimes,
                nominal_powers: &powers,
                init: scheme.reactive_kind(),
                previous,
            };
            let out = beamform::proactive_optimize(&problem, &ctx.config.optimizer_config(ctx.k()), ctx.exec)?;
            Ok(Decision {
                beams: out.beams,
                bundle: Some(bundle),
                optimizer: Some(out.trace),
            })
        }
    }
}

/// Run `scheme` through the closed loop of one (K, seed) context.
pub fn run_scheme(ctx: &CellContext, scheme: SchemeId) -> Result<CellTrace> {
    let cfg = ctx.config;
    let noise = cfg.noise_power();
    let t0 = cfg.history;
    let mut steps = Vec::with_capacity(cfg.t_sim);
    let mut optimizer = Vec::with_capacity(cfg.t_sim);
    let mut previous: Option<BeamformerSet> = None;
    for step in 0..cfg.t_sim {
        let t = t0 + step;
        let mut d = decide(ctx, scheme, t, previous.as_ref())?;
        let next = &ctx.trace.snapshots[t + 1];
        let (interference, sinr) = d.beams.interference_and_sinr(&next.links, noise);
        let realized: Vec<f64> = (1..=cfg.horizon)
            .map(|tau| d.beams.interference_and_sinr(&ctx.trace.snapshots[t + tau].links, noise).0)
            .collect();
        let (predicted, predicted_sinr) = match d.bundle.as_mut() {
            Some(b) => {
                b.evaluate(&d.beams, noise);
                (b.mean_interference(), b.mean_sinr()[0])
            }
            None => (vec![f64::NAN; cfg.horizon], f64::NAN),
        };
        let state = &ctx.trace.episode.states[t + 1];
        steps.push(StepRecord {
            step,
            ue: [next.ue.x, next.ue.y, next.ue.z],
            interference,
            sinr,
            predicted_sinr,
            serving_blocked: next.links[0].blockage < 1.0,
            blocked_links: next.links.iter().filter(|c| c.blockage < 1.0).count(),
            near_field_links: next.links.iter().filter(|c| c.regime == Regime::NearField).count(),
            hotspot_users: state.hotspot_users.len(),
            serving_power: d.beams.powers[0],
            iterations: d.optimizer.as_ref().map(|o| o.iterations()).unwrap_or(0),
            feasible_fraction: d.optimizer.as_ref().map(|o| o.feasible_fraction()).unwrap_or(f64::NAN),
            predicted,
            realized,
        });
        optimizer.push(d.optimizer.as_ref().map(OptimizerTraceSummary::from));
        previous = Some(d.beams);
    }
    Ok(CellTrace {
        scheme,
        interferers: ctx.k(),
        seed: ctx.trace.episode.seed,
        steps,
        optimizer,
    })
}

/// Run every scheme on the (K, seed) realization.
pub fn run_cell(
    config: &ExperimentConfig,
    schemes: &[SchemeId],
    k: usize,
    seed: u64,
    model: Option<&GenerativeModel>,
    exec: Execution,
) -> Result<Vec<CellTrace>> {
    let ctx = CellContext::new(config, k, seed, model, exec)?;
    schemes.iter().map(|s| run_scheme(&ctx, *s)).collect()
}

/// Run the grid `k_values x seeds`, cells in parallel; results ordered by (K, seed, scheme).
pub fn run_grid(
    config: &ExperimentConfig,
    schemes: &[SchemeId],
    k_values: &[usize],
    models: &dyn Fn(usize) -> Option<Arc<GenerativeModel>>,
    exec: Execution,
) -> Result<Vec<CellTrace>> {
    let cells: Vec<(usize, u64, Option<Arc<GenerativeModel>>)> = k_values
        .iter()
        .flat_map(|k| config.seeds.iter().map(move |s| (*k, *s)))
        .map(|(k, s)| (k, s, models(k)))
        .collect();
    let out = par::map(exec, &cells, |(k, s, m)| run_cell(config, schemes, *k, *s, m.as_deref(), Execution::Sequential));
    let mut all = Vec::new();
    for r in out {
        all.extend(r?);
    }
    Ok(all)
}
