//! Conditional generative predictor: a generator maps conditioning features
//! and a Gaussian latent to displacement, blockage and interference
//! trajectories; a discriminator scores (conditioning, trajectory) pairs.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::nn::{sigmoid, Cache, Mlp};
use super::{ChannelModel, PredictedStep, Trajectory, TrajectoryBundle};
use crate::channel::{self, LinkChannel};
use crate::dynamics::{Dataset, Snapshot};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::par::{self, Execution};
use crate::rng::{self, SimRng};
use crate::scene::Scene;

const TINY: f64 = 1e-300;

/// Borrowed view of one time step: UE position and per-link channels.
#[derive(Debug, Clone, Copy)]
pub struct StepRef<'a> {
    pub ue: &'a Vec3,
    pub links: &'a [LinkChannel],
}

impl<'a> From<&'a Snapshot> for StepRef<'a> {
    fn from(s: &'a Snapshot) -> Self {
        Self {
            ue: &s.ue,
            links: &s.links,
        }
    }
}

impl<'a> From<&'a PredictedStep> for StepRef<'a> {
    fn from(s: &'a PredictedStep) -> Self {
        Self {
            ue: &s.ue,
            links: &s.links,
        }
    }
}

/// Shapes shared by the feature extractor and both networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub links: usize,
    /// Number of history steps (`T_h + 1`).
    pub history: usize,
    pub horizon: usize,
    pub latent_dim: usize,
}

pub const FEATURES_PER_LINK_STEP: usize = 5;

impl FeatureLayout {
    pub fn cond_dim(&self) -> usize {
        if self.history == 0 {
            return 0;
        }
        self.history * self.links * FEATURES_PER_LINK_STEP + 3 + 3 * (self.history - 1) + 2 * self.links
    }

    pub fn step_dim(&self) -> usize {
        3 + self.links + 1
    }

    pub fn out_dim(&self) -> usize {
        self.horizon * self.step_dim()
    }
}

/// Raw (unnormalized) conditioning features: per history step and link the
/// real/imaginary parts of two array elements and the log channel power, then
/// the current UE position, the position increments over the window, regime
/// flags and unblocked flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningVector {
    pub values: Vec<f64>,
}

impl ConditioningVector {
    pub fn from_history(history: &[StepRef]) -> Result<Self> {
        let last = history.last().ok_or(Error::Empty("conditioning history"))?;
        let mut v = Vec::new();
        for s in history {
            if s.links.len() != last.links.len() {
                return Err(Error::Dimension("history with varying link count".into()));
            }
            for c in s.links {
                let h = &c.h_eff;
                let mid = h.len() / 2;
                v.extend([h[0].re, h[0].im, h[mid].re, h[mid].im, (h.norm_squared() + TINY).log10()]);
            }
        }
        v.extend(last.ue.iter());
        for w in history.windows(2) {
            v.extend((w[1].ue - w[0].ue).iter());
        }
        v.extend(last.links.iter().map(|c| c.regime.indicator() as f64));
        v.extend(last.links.iter().map(|c| if c.blockage < 1.0 { 0.0 } else { 1.0 }));
        Ok(Self { values: v })
    }
}

/// Raw targets per `tau`: UE displacement, unblocked flag per link, log10 interference.
pub fn target_features(current: &Vec3, targets: &[StepRef], interference: &[f64]) -> Result<Vec<f64>> {
    if targets.len() != interference.len() {
        return Err(Error::Dimension("targets and interference lengths differ".into()));
    }
    let mut v = Vec::new();
    for (s, i) in targets.iter().zip(interference) {
        v.extend((s.ue - current).iter());
        v.extend(s.links.iter().map(|c| if c.blockage < 1.0 { 0.0 } else { 1.0 }));
        v.push((i + TINY).log10());
    }
    Ok(v)
}

/// Per-dimension z-scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn fit<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Self {
        let mut n = 0.0;
        let mut mean = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        for r in rows {
            n += 1.0;
            for i in 0..dim {
                let d = r[i] - mean[i];
                mean[i] += d / n;
                m2[i] += d * (r[i] - mean[i]);
            }
        }
        let std = m2
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let mean_abs = m.abs();
                let sd = if n > 1.0 { (s / (n - 1.0)).sqrt() } else { 0.0 };
                if sd.is_finite() && sd > 0.0 && sd > 1e-12 * mean_abs {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn invert(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| x * s + m).collect()
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda_pred: f64,
    pub mu: f64,
    pub latent_dim: usize,
    pub hidden: usize,
    pub label_smoothing: f64,
    /// Latent draws per example whose mean enters the consistency loss.
    pub consistency_draws: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 32,
            learning_rate: 0.01,
            lambda_pred: 10.0,
            mu: 1.0,
            latent_dim: 16,
            hidden: 128,
            label_smoothing: 0.9,
            consistency_draws: 4,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.consistency_draws == 0 || self.hidden == 0 {
            return Err(Error::Config("batch size, hidden width and consistency draws must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.lambda_pred >= 0.0) || !(self.mu >= 0.0) {
            return Err(Error::Config("learning rate must be positive and loss weights non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) || !(0.0..=1.0).contains(&self.label_smoothing) {
            return Err(Error::Config("validation fraction in [0, 1) and label smoothing in [0, 1] required".into()));
        }
        Ok(())
    }
}

/// Generator, discriminator and the statistics needed to run them.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    pub layout: FeatureLayout,
    pub config: TrainingConfig,
    pub cond_norm: Normalizer,
    /// Statistics of displacement (3 entries) and log interference (1 entry).
    pub disp_norm: Normalizer,
    pub int_norm: Normalizer,
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub epochs_trained: usize,
}

/// One training example in raw units.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub episode: u64,
    pub t: usize,
    pub condition: Vec<f64>,
    pub target: Vec<f64>,
}

/// Extract training examples from in-memory samples.
pub fn examples_from_dataset(dataset: &Dataset) -> Result<Vec<TrainingExample>> {
    dataset
        .samples
        .iter()
        .map(|s| {
            let hist: Vec<StepRef> = s.history().iter().map(StepRef::from).collect();
            let tgt: Vec<StepRef> = s.targets().iter().map(StepRef::from).collect();
            Ok(TrainingExample {
                episode: s.trace.episode.seed,
                t: s.t,
                condition: ConditioningVector::from_history(&hist)?.values,
                target: target_features(&s.current().ue, &tgt, &s.interference)?,
            })
        })
        .collect()
}

/// Split by time blocks: per episode, the first part of the timeline trains and
/// the tail validates; examples whose windows straddle the split are dropped.
pub fn time_block_split(
    examples: &[TrainingExample],
    validation_fraction: f64,
    history: usize,
    horizon: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut episodes: Vec<u64> = examples.iter().map(|e| e.episode).collect();
    episodes.sort_unstable();
    episodes.dedup();
    let mut train = Vec::new();
    let mut val = Vec::new();
    for ep in episodes {
        let idx: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].episode == ep).collect();
        let tmin = idx.iter().map(|&i| examples[i].t).min().unwrap_or(0);
        let tmax = idx.iter().map(|&i| examples[i].t).max().unwrap_or(0);
        if validation_fraction <= 0.0 {
            train.extend(idx);
            continue;
        }
        let span = (tmax - tmin + horizon + history) as f64;
        let split = tmin + ((1.0 - validation_fraction) * span).round() as usize;
        for i in idx {
            let t = examples[i].t;
            if t + horizon < split {
                train.push(i);
            } else if t >= split + history {
                val.push(i);
            }
        }
    }
    (train, val)
}

/// Map raw generator outputs to the compared representation: normalized
/// displacement, unblocked probability, normalized log interference.
pub fn transform_output(layout: &FeatureLayout, y: &[f64]) -> Vec<f64> {
    let sd = layout.step_dim();
    y.iter()
        .enumerate()
        .map(|(i, v)| {
            let j = i % sd;
            if (3..3 + layout.links).contains(&j) {
                sigmoid(*v)
            } else {
                *v
            }
        })
        .collect()
}

/// Per-example consistency loss on the compared representation:
/// `sum_tau (||du - du*||^2 + sum_k (p_k - xi_k)^2 + mu (I - I*)^2)`.
pub fn prediction_loss(layout: &FeatureLayout, output: &[f64], target: &[f64], mu: f64) -> f64 {
    let sd = layout.step_dim();
    output
        .iter()
        .zip(target)
        .enumerate()
        .map(|(i, (o, t))| {
            let w = if i % sd == sd - 1 { mu } else { 1.0 };
            w * (o - t).powi(2)
        })
        .sum()
}

/// `log D(real) + log(1 - D(fake))`.
pub fn adversarial_value(d_real: f64, d_fake: f64) -> f64 {
    d_real.ln() + (1.0 - d_fake).ln()
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub discriminator_loss: f64,
    pub generator_adversarial: f64,
    pub train_pred: f64,
    pub validation_pred: f64,
    /// Norm of the consistency-term contribution to the generator gradient.
    pub pred_grad_norm: f64,
    pub adv_grad_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub initial_validation_pred: f64,
    pub epochs: Vec<EpochLog>,
}

impl GenerativeModel {
    /// Fresh networks with normalization fitted to `examples`.
    pub fn initialize(layout: FeatureLayout, config: TrainingConfig, examples: &[TrainingExample]) -> Result<Self> {
        config.validate()?;
        if layout.latent_dim != config.latent_dim {
            return Err(Error::Config("layout and config latent dimensions differ".into()));
        }
        let cd = layout.cond_dim();
        for e in examples {
            if e.condition.len() != cd || e.target.len() != layout.out_dim() {
                return Err(Error::Dimension(format!(
                    "example of width {}/{} vs layout {}/{}",
                    e.condition.len(),
                    e.target.len(),
                    cd,
                    layout.out_dim()
                )));
            }
        }
        let cond_norm = Normalizer::fit(examples.iter().map(|e| e.condition.as_slice()), cd);
        let sd = layout.step_dim();
        let disp_rows: Vec<Vec<f64>> = examples
            .iter()
            .flat_map(|e| e.target.chunks(sd).map(|c| c[..3].to_vec()))
            .collect();
        let int_rows: Vec<Vec<f64>> = examples
            .iter()
            .flat_map(|e| e.target.chunks(sd).map(|c| vec![c[sd - 1]]))
            .collect();
        let disp_norm = Normalizer::fit(disp_rows.iter().map(|r| r.as_slice()), 3);
        let int_norm = Normalizer::fit(int_rows.iter().map(|r| r.as_slice()), 1);
        let mut r = rng::substream(config.seed, &[rng::tag::TRAINING, u64::MAX]);
        let h = config.hidden;
        let generator = Mlp::new(&[cd + layout.latent_dim, h, h, layout.out_dim()], &mut r)?;
        let discriminator = Mlp::new(&[cd + layout.out_dim(), h, h, 1], &mut r)?;
        Ok(Self {
            layout,
            config,
            cond_norm,
            disp_norm,
            int_norm,
            generator,
            discriminator,
            epochs_trained: 0,
        })
    }

    pub fn is_trained(&self) -> bool {
        self.epochs_trained > 0
    }

    /// Normalized targets in the compared representation.
    pub fn normalize_target(&self, raw: &[f64]) -> Vec<f64> {
        let sd = self.layout.step_dim();
        let mut out = Vec::with_capacity(raw.len());
        for c in raw.chunks(sd) {
            out.extend(self.disp_norm.apply(&c[..3]));
            out.extend(&c[3..sd - 1]);
            out.extend(self.int_norm.apply(&c[sd - 1..]));
        }
        out
    }

    fn generator_input(&self, cond_n: &[f64], z: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(cond_n.len() + z.len());
        x.extend_from_slice(cond_n);
        x.extend_from_slice(z);
        x
    }

    /// Raw generator output for normalized conditioning and latent `z`.
    pub fn generate_raw(&self, cond_n: &[f64], z: &[f64]) -> Vec<f64> {
        self.generator.forward(&self.generator_input(cond_n, z))
    }

    /// Discriminator probability for normalized conditioning and a compared-representation trajectory.
    pub fn discriminate(&self, cond_n: &[f64], x: &[f64]) -> f64 {
        sigmoid(self.discriminator.forward(&self.generator_input(cond_n, x))[0])
    }

    /// Mean consistency loss on `idx` with latents drawn from `rng`.
    pub fn mean_prediction_loss(&self, examples: &[TrainingExample], idx: &[usize], rng: &mut SimRng) -> f64 {
        if idx.is_empty() {
            return f64::NAN;
        }
        let r = self.config.consistency_draws;
        let mut total = 0.0;
        for &i in idx {
            let e = &examples[i];
            let c = self.cond_norm.apply(&e.condition);
            let target = self.normalize_target(&e.target);
            let mut mean = vec![0.0; self.layout.out_dim()];
            for _ in 0..r {
                let z = draw_latent(self.layout.latent_dim, rng);
                let g = transform_output(&self.layout, &self.generate_raw(&c, &z));
                for (m, v) in mean.iter_mut().zip(&g) {
                    *m += v / r as f64;
                }
            }
            total += prediction_loss(&self.layout, &mean, &target, self.config.mu);
        }
        total / idx.len() as f64
    }

    /// Gradient of the consistency loss of one example with respect to the
    /// generator parameters, for fixed latents.
    pub fn prediction_loss_gradient(&self, cond_n: &[f64], target_n: &[f64], latents: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let r = latents.len() as f64;
        let caches: Vec<Cache> = latents
            .iter()
            .map(|z| self.generator.forward_cached(&self.generator_input(cond_n, z)))
            .collect();
        let mut mean = vec![0.0; self.layout.out_dim()];
        for c in &caches {
            for (m, v) in mean.iter_mut().zip(transform_output(&self.layout, c.output())) {
                *m += v / r;
            }
        }
        let loss = prediction_loss(&self.layout, &mean, target_n, self.config.mu);
        let sd = self.layout.step_dim();
        let dmean: Vec<f64> = mean
            .iter()
            .zip(target_n)
            .enumerate()
            .map(|(i, (o, t))| {
                let w = if i % sd == sd - 1 { self.config.mu } else { 1.0 };
                2.0 * w * (o - t)
            })
            .collect();
        let mut grad = vec![0.0; self.generator.num_params()];
        for c in &caches {
            let gy = output_chain(&self.layout, c.output(), &dmean, 1.0 / r);
            self.generator.backward(c, &gy, &mut grad);
        }
        (loss, grad)
    }
}

/// Chain `dL/d(transformed)` back to `dL/d(raw output)`, scaled by `scale`.
fn output_chain(layout: &FeatureLayout, y: &[f64], dtrans: &[f64], scale: f64) -> Vec<f64> {
    let sd = layout.step_dim();
    y.iter()
        .zip(dtrans)
        .enumerate()
        .map(|(i, (v, d))| {
            let j = i % sd;
            let local = if (3..3 + layout.links).contains(&j) {
                let s = sigmoid(*v);
                s * (1.0 - s)
            } else {
                1.0
            };
            d * local * scale
        })
        .collect()
}

pub fn draw_latent(dim: usize, rng: &mut SimRng) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_finite(epoch: usize, what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged {
            epoch,
            detail: format!("{what} is {v}"),
        })
    }
}

/// Alternating discriminator / generator SGD. Continues from `resume` when
/// given (its normalization statistics are kept); epoch randomness is keyed by
/// the absolute epoch index, so resuming reproduces uninterrupted training.
pub fn train_generative(
    examples: &[TrainingExample],
    layout: FeatureLayout,
    config: TrainingConfig,
    resume: Option<GenerativeModel>,
) -> Result<(GenerativeModel, TrainingLog)> {
    if examples.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    let mut model = match resume {
        Some(mut m) => {
            if m.layout != layout {
                return Err(Error::Dimension("resumed model layout differs from the dataset".into()));
            }
            m.config = TrainingConfig {
                latent_dim: m.config.latent_dim,
                hidden: m.config.hidden,
                ..config
            };
            m.config.validate()?;
            m
        }
        None => GenerativeModel::initialize(layout, config, examples)?,
    };
    let cfg = model.config;
    let (train, val) = time_block_split(examples, cfg.validation_fraction, layout.history.saturating_sub(1), layout.horizon);
    if train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    let val_idx = if val.is_empty() { train.clone() } else { val };
    let cond: Vec<Vec<f64>> = examples.iter().map(|e| model.cond_norm.apply(&e.condition)).collect();
    let targets: Vec<Vec<f64>> = examples.iter().map(|e| model.normalize_target(&e.target)).collect();
    let val_rng = || rng::substream(cfg.seed, &[rng::tag::TRAINING, u64::MAX - 1]);

    let mut log = TrainingLog {
        initial_validation_pred: model.mean_prediction_loss(examples, &val_idx, &mut val_rng()),
        epochs: Vec::new(),
    };
    let start = model.epochs_trained;
    for epoch in start..start + cfg.epochs {
        let mut r = rng::substream(cfg.seed, &[rng::tag::TRAINING, epoch as u64]);
        let mut order = train.clone();
        order.shuffle(&mut r);
        let (mut d_sum, mut g_adv_sum, mut pred_sum) = (0.0, 0.0, 0.0);
        let (mut pred_gn, mut adv_gn) = (0.0, 0.0);
        let mut batches = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let bn = batch.len() as f64;
            let latents: Vec<Vec<Vec<f64>>> = batch
                .iter()
                .map(|_| (0..cfg.consistency_draws).map(|_| draw_latent(layout.latent_dim, &mut r)).collect())
                .collect();

            // discriminator step
            let mut gd = vec![0.0; model.discriminator.num_params()];
            let mut d_loss = 0.0;
            for (b, &i) in batch.iter().enumerate() {
                let real_in = model.generator_input(&cond[i], &targets[i]);
                let rc = model.discriminator.forward_cached(&real_in);
                let pr = sigmoid(rc.output()[0]);
                d_loss -= cfg.label_smoothing * (pr + TINY).ln() + (1.0 - cfg.label_smoothing) * (1.0 - pr + TINY).ln();
                model.discriminator.backward(&rc, &[(pr - cfg.label_smoothing) / bn], &mut gd);

                let fake = transform_output(&layout, &model.generate_raw(&cond[i], &latents[b][0]));
                let fc = model.discriminator.forward_cached(&model.generator_input(&cond[i], &fake));
                let pf = sigmoid(fc.output()[0]);
                d_loss -= (1.0 - pf + TINY).ln();
                model.discriminator.backward(&fc, &[pf / bn], &mut gd);
            }
            d_loss /= bn;
            check_finite(epoch, "discriminator loss", d_loss)?;
            model.discriminator.sgd_step(&gd, cfg.learning_rate);

            // generator step
            let np = model.generator.num_params();
            let mut g_adv = vec![0.0; np];
            let mut g_pred = vec![0.0; np];
            let mut adv_loss = 0.0;
            let mut pred_loss = 0.0;
            let draws = cfg.consistency_draws as f64;
            for (b, &i) in batch.iter().enumerate() {
                for z in &latents[b] {
                    let gc = model.generator.forward_cached(&model.generator_input(&cond[i], z));
                    let fake = transform_output(&layout, gc.output());
                    let dc = model.discriminator.forward_cached(&model.generator_input(&cond[i], &fake));
                    let pf = sigmoid(dc.output()[0]);
                    adv_loss -= (pf + TINY).ln() / (bn * draws);
                    let mut unused = vec![0.0; model.discriminator.num_params()];
                    let din = model.discriminator.backward(&dc, &[(pf - 1.0) / (bn * draws)], &mut unused);
                    let gy = output_chain(&layout, gc.output(), &din[cond[i].len()..], 1.0);
                    model.generator.backward(&gc, &gy, &mut g_adv);
                }
                if cfg.lambda_pred > 0.0 {
                    let (l, g) = model.prediction_loss_gradient(&cond[i], &targets[i], &latents[b]);
                    pred_loss += l / bn;
                    for (a, v) in g_pred.iter_mut().zip(&g) {
                        *a += cfg.lambda_pred * v / bn;
                    }
                } else {
                    let mut mean = vec![0.0; layout.out_dim()];
                    for z in &latents[b] {
                        for (m, v) in mean.iter_mut().zip(transform_output(&layout, &model.generate_raw(&cond[i], z))) {
                            *m += v / draws;
                        }
                    }
                    pred_loss += prediction_loss(&layout, &mean, &targets[i], cfg.mu) / bn;
                }
            }
            check_finite(epoch, "generator adversarial loss", adv_loss)?;
            check_finite(epoch, "consistency loss", pred_loss)?;
            pred_gn += norm(&g_pred);
            adv_gn += norm(&g_adv);
            let total: Vec<f64> = g_adv.iter().zip(&g_pred).map(|(a, b)| a + b).collect();
            model.generator.sgd_step(&total, cfg.learning_rate);
            d_sum += d_loss;
            g_adv_sum += adv_loss;
            pred_sum += pred_loss;
            batches += 1.0;
        }
        let validation_pred = model.mean_prediction_loss(examples, &val_idx, &mut val_rng());
        check_finite(epoch, "validation consistency loss", validation_pred)?;
        model.epochs_trained = epoch + 1;
        log.epochs.push(EpochLog {
            epoch: epoch + 1,
            discriminator_loss: d_sum / batches,
            generator_adversarial: g_adv_sum / batches,
            train_pred: pred_sum / batches,
            validation_pred,
            pred_grad_norm: pred_gn / batches,
            adv_grad_norm: adv_gn / batches,
        });
        log::debug!(
            "epoch {} d {:.4} g_adv {:.4} pred {:.4} val {:.4}",
            epoch + 1,
            d_sum / batches,
            g_adv_sum / batches,
            pred_sum / batches,
            validation_pred
        );
    }
    Ok((model, log))
}

/// Decode one latent into a predicted trajectory at the twin.
fn decode(
    model: &GenerativeModel,
    scene: &Scene,
    ue: &Vec3,
    cond_n: &[f64],
    z: &[f64],
    channel_model: ChannelModel,
) -> Result<Trajectory> {
    let layout = &model.layout;
    if layout.links != scene.num_transmitters() {
        return Err(Error::Dimension(format!(
            "model trained for {} links, scene has {}",
            layout.links,
            scene.num_transmitters()
        )));
    }
    let y = model.generate_raw(cond_n, z);
    let sd = layout.step_dim();
    let room = scene.room_bounds;
    let mut steps = Vec::with_capacity(layout.horizon);
    for chunk in y.chunks(sd) {
        let du = model.disp_norm.invert(&chunk[..3]);
        let mut u = ue + Vec3::new(du[0], du[1], du[2]);
        for i in 0..3 {
            u[i] = u[i].clamp(room.min[i], room.max[i]);
        }
        let links = (0..layout.links)
            .map(|k| {
                let xi = if sigmoid(chunk[3 + k]) >= 0.5 { 1.0 } else { scene.blockage_attenuation };
                let regime = match channel_model.regime_override() {
                    Some(r) => r,
                    None => scene.regime(k, &u)?,
                };
                let paths = channel::nlos_paths(scene, k, &u)?;
                channel::hybrid_channel(scene, k, &u, regime, xi, &paths)
            })
            .collect::<Result<Vec<_>>>()?;
        steps.push(PredictedStep { ue: u, links });
    }
    Ok(Trajectory::new(steps))
}

/// Decode the given latents into a bundle.
pub fn generate_from_latents(
    model: &GenerativeModel,
    scene: &Scene,
    conditioning: &ConditioningVector,
    ue: &Vec3,
    latents: &[Vec<f64>],
    channel_model: ChannelModel,
    exec: Execution,
) -> Result<TrajectoryBundle> {
    if !model.is_trained() {
        return Err(Error::Untrained);
    }
    if conditioning.values.len() != model.layout.cond_dim() {
        return Err(Error::Dimension(format!(
            "conditioning width {} vs model {}",
            conditioning.values.len(),
            model.layout.cond_dim()
        )));
    }
    if latents.iter().any(|z| z.len() != model.layout.latent_dim) {
        return Err(Error::Dimension("latent width".into()));
    }
    let cond_n = model.cond_norm.apply(&conditioning.values);
    let trajectories = par::map(exec, latents, |z| decode(model, scene, ue, &cond_n, z, channel_model))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    TrajectoryBundle::new(trajectories)
}

/// Draw `m` latents from per-sample substreams of `(seed, step)` and decode them.
#[allow(clippy::too_many_arguments)]
pub fn generate_trajectories(
    model: &GenerativeModel,
    scene: &Scene,
    conditioning: &ConditioningVector,
    ue: &Vec3,
    m: usize,
    seed: u64,
    step: u64,
    channel_model: ChannelModel,
    exec: Execution,
) -> Result<TrajectoryBundle> {
    if m == 0 {
        return Err(Error::InvalidArgument("at least one sample required".into()));
    }
    let latents: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut r = rng::substream(seed, &[rng::tag::LATENT, step, i as u64]);
            draw_latent(model.layout.latent_dim, &mut r)
        })
        .collect();
    generate_from_latents(model, scene, conditioning, ue, &latents, channel_model, exec)
}
