//! End-to-end commands: dataset construction, training, closed-loop
//! simulation, evaluation and the K sweep.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::output::{self, TraceData};
use super::sim;
use super::{ExperimentConfig, SchemeId};
use crate::dynamics::store::{DatasetManifest, StoredDataset};
use crate::dynamics::{build_dataset, Dataset, DatasetParams};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::metrics;
use crate::par::{self, Execution};
use crate::predictor::gan::FeatureLayout;
use crate::predictor::{artifact, train_generative, GenerativeModel, TrainingLog};

pub const TRACE_DIR: &str = "traces";

pub fn dataset_paths(dir: &Path, k: usize) -> (PathBuf, PathBuf) {
    (dir.join(format!("dataset_k{k}.bin")), dir.join(format!("dataset_k{k}.toml")))
}

pub fn loss_curve_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("loss_curve_k{k}.csv"))
}

pub fn dataset_params(config: &ExperimentConfig) -> DatasetParams {
    DatasetParams {
        history: config.history,
        horizon: config.horizon,
        t_sim: config.episode_len(),
    }
}

/// Windowed dataset over the training seeds for `k` interferers.
pub fn build_training_dataset(config: &ExperimentConfig, k: usize, exec: Execution) -> Result<Dataset> {
    config.validate()?;
    if config.training_seeds.is_empty() {
        return Err(Error::Config("no training seeds".into()));
    }
    let scene_cfg = config.scene_for(k)?;
    let spec = config.scenario_spec();
    let params = dataset_params(config);
    let parts = par::map(exec, &config.training_seeds, |seed| {
        let scene = scene_cfg.build(*seed)?;
        build_dataset(&scene, &spec, params, *seed)
    });
    let mut it = parts.into_iter();
    let mut ds = it.next().expect("at least one seed")?;
    for p in it {
        ds = ds.merge(p?)?;
    }
    Ok(ds)
}

/// Build and persist one dataset per `k` under `dir`.
pub fn run_dataset(config: &ExperimentConfig, ks: &[usize], dir: &Path, exec: Execution) -> Result<Vec<DatasetManifest>> {
    let hash = config.hash()?;
    ks.iter()
        .map(|&k| {
            let ds = build_training_dataset(config, k, exec)?;
            let stored = StoredDataset::from_dataset(&ds)?;
            let (data, manifest) = dataset_paths(dir, k);
            let m = stored.save(&data, &manifest, &hash)?;
            log::info!("dataset K={k}: {} samples, {} rows -> {}", m.samples, m.snapshot_rows, data.display());
            Ok(m)
        })
        .collect()
}

pub fn layout_for(config: &ExperimentConfig, k: usize) -> FeatureLayout {
    FeatureLayout {
        links: k + 1,
        history: config.history + 1,
        horizon: config.horizon,
        latent_dim: config.training.latent_dim,
    }
}

/// Outcome of one training run.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: GenerativeModel,
    pub log: TrainingLog,
    pub model_path: PathBuf,
    pub loss_curve: PathBuf,
}

/// Train the generative predictor for `k` from the dataset in `dataset_dir`.
/// With `resume`, training continues from the existing model file and the
/// loss curve keeps its earlier rows. `epochs` overrides the configured epoch
/// count without changing the config hash.
pub fn run_train(
    config: &ExperimentConfig,
    k: usize,
    dataset_dir: &Path,
    out_dir: &Path,
    resume: bool,
    epochs: Option<usize>,
) -> Result<TrainOutcome> {
    let hash = config.hash()?;
    let (data, manifest) = dataset_paths(dataset_dir, k);
    if !manifest.exists() {
        return Err(Error::MissingArtifact(format!("dataset manifest {}", manifest.display())));
    }
    let (ds, m) = StoredDataset::load(&data, &manifest, Some(&hash))?;
    if m.interferers != k || m.history != config.history || m.horizon != config.horizon {
        return Err(Error::Dimension(format!(
            "dataset (K={}, history={}, horizon={}) does not match the config (K={k}, history={}, horizon={})",
            m.interferers, m.history, m.horizon, config.history, config.horizon
        )));
    }
    let examples = ds.examples()?;
    let model_path = config.model_path(k);
    let previous = if resume && model_path.exists() {
        Some(artifact::load(&model_path)?)
    } else {
        None
    };
    let start = previous.as_ref().map(|p| p.epochs_trained).unwrap_or(0);
    let mut training = config.training;
    if let Some(e) = epochs {
        training.epochs = e;
    }
    let (model, log) = train_generative(&examples, layout_for(config, k), training, previous)?;
    artifact::save(&model, &model_path)?;

    let curve = loss_curve_path(out_dir, k);
    let fresh = output::loss_curve_csv(&log, &hash, config.training.seed, k)?;
    let bytes = if start > 0 && curve.exists() {
        splice_loss_curve(&std::fs::read_to_string(&curve)?, &String::from_utf8(fresh).expect("utf8"), start)?
    } else {
        fresh
    };
    write_atomic(&curve, &bytes)?;
    log::info!("trained K={k} to epoch {} -> {}", model.epochs_trained, model_path.display());
    Ok(TrainOutcome {
        model,
        log,
        model_path,
        loss_curve: curve,
    })
}

/// Earlier loss-curve rows up to epoch `start`, followed by the new rows.
fn splice_loss_curve(old: &str, new: &str, start: usize) -> Result<Vec<u8>> {
    let mut lines = new.lines();
    let mut out = String::new();
    for l in lines.by_ref().take(2) {
        out.push_str(l);
        out.push('\n');
    }
    for l in old.lines().skip(2) {
        let epoch: usize = l
            .split(',')
            .next()
            .and_then(|e| e.parse().ok())
            .ok_or_else(|| Error::Format("bad loss curve row".into()))?;
        if epoch <= start {
            out.push_str(l);
            out.push('\n');
        }
    }
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    Ok(out.into_bytes())
}

/// Load the generative models for every `k` when any requested scheme needs one.
pub fn load_models(config: &ExperimentConfig, schemes: &[SchemeId], ks: &[usize]) -> Result<Vec<(usize, Arc<GenerativeModel>)>> {
    if !schemes.iter().any(|s| s.is_generative()) {
        return Ok(Vec::new());
    }
    ks.iter()
        .map(|&k| {
            let p = config.model_path(k);
            if !p.exists() {
                return Err(Error::MissingArtifact(format!(
                    "generative schemes need a trained model at {} (run `train`)",
                    p.display()
                )));
            }
            Ok((k, Arc::new(artifact::load(&p)?)))
        })
        .collect()
}

/// Run the closed loop for every (K, seed, scheme) and return the traces.
pub fn simulate_cells(config: &ExperimentConfig, schemes: &[SchemeId], ks: &[usize], exec: Execution) -> Result<Vec<sim::CellTrace>> {
    config.validate()?;
    if schemes.is_empty() {
        return Err(Error::Config("no schemes selected".into()));
    }
    if config.seeds.is_empty() {
        return Err(Error::Config("no seeds selected".into()));
    }
    let models = load_models(config, schemes, ks)?;
    let lookup = |k: usize| models.iter().find(|(mk, _)| *mk == k).map(|(_, m)| Arc::clone(m));
    sim::run_grid(config, schemes, ks, &lookup, exec)
}

/// Simulate and write one trace file per (scheme, K, seed) under `out/traces`;
/// with `verbose`, optimizer traces go next to them.
pub fn run_simulate(
    config: &ExperimentConfig,
    schemes: &[SchemeId],
    ks: &[usize],
    out: &Path,
    verbose: bool,
    exec: Execution,
) -> Result<Vec<TraceData>> {
    let hash = config.hash()?;
    let cells = simulate_cells(config, schemes, ks, exec)?;
    let dir = out.join(TRACE_DIR);
    let mut traces = Vec::with_capacity(cells.len());
    for c in &cells {
        let t = TraceData::from_cell(c, &hash, config.horizon);
        output::write_trace(&dir, &t)?;
        if verbose {
            output::write_optimizer_trace(&dir, c, &hash)?;
        }
        traces.push(t);
    }
    traces.sort_by_key(|t| (t.header.scheme, t.header.interferers, t.header.seed));
    Ok(traces)
}

/// Read the traces under `input/traces` and write the figure tables and reports under `out`.
pub fn run_evaluate(input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let traces = output::load_traces(&input.join(TRACE_DIR))?;
    output::write_evaluation(out, &traces, &metrics::default_threshold_grid_db())
}

/// Simulate every K of the configured range, then evaluate.
pub fn run_sweep(config: &ExperimentConfig, schemes: &[SchemeId], out: &Path, verbose: bool, exec: Execution) -> Result<Vec<PathBuf>> {
    let traces = run_simulate(config, schemes, &config.k_values(), out, verbose, exec)?;
    output::write_evaluation(out, &traces, &metrics::default_threshold_grid_db())
}
