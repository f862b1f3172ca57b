//! Persisted DT dataset: a binary table plus a TOML manifest.
//!
//! Overlapping windows share snapshots, so the binary file stores each
//! (episode, step, link) row once and the windowed samples as an index into
//! it. Layout (integers `u64`, floats `f64`, little endian):
//!
//! ```text
//! magic "XLTWINDS" | version u32
//! links history horizon t_sim
//! episodes: count, then per episode
//!     seed steps
//!     per step: ue x y z
//!         per link: regime(0 FF, 1 NF) blockage lambda_los lambda_nlos
//!                   elements, then elements x (re im) of the unit-scale shape h
//! samples: count, then per sample
//!     episode_seed t, horizon x interference (watts)
//! sha256 of everything above (32 bytes)
//! ```
//!
//! `h_eff` is rebuilt as `sqrt(Lambda * xi) * h` on load.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Dataset, DatasetParams, Trace};
use crate::channel::{CVec, LinkChannel};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::io::{write_atomic, ByteReader, ByteWriter};
use crate::predictor::gan::{target_features, ConditioningVector, StepRef, TrainingExample};
use crate::scene::Regime;

pub const MAGIC: &[u8; 8] = b"XLTWINDS";
pub const VERSION: u32 = 1;

/// One time step of a stored episode.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredStep {
    pub ue: Vec3,
    pub links: Vec<LinkChannel>,
}

impl<'a> From<&'a StoredStep> for StepRef<'a> {
    fn from(s: &'a StoredStep) -> Self {
        Self {
            ue: &s.ue,
            links: &s.links,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredEpisode {
    pub seed: u64,
    pub steps: Vec<StoredStep>,
}

/// Window ending at step `t` of the episode with seed `episode`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSample {
    pub episode: u64,
    pub t: usize,
    pub interference: Vec<f64>,
}

/// Dataset as read back from disk, independent of the scene that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredDataset {
    pub params: DatasetParams,
    pub links: usize,
    pub episodes: Vec<StoredEpisode>,
    pub samples: Vec<StoredSample>,
}

/// Sidecar describing a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub interferers: usize,
    pub elements: usize,
    pub history: usize,
    pub horizon: usize,
    pub t_sim: usize,
    pub episodes: usize,
    pub snapshot_rows: usize,
    pub samples: usize,
    /// SHA-256 of the binary file.
    pub data_sha256: String,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(toml::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

impl StoredDataset {
    pub fn from_dataset(dataset: &Dataset) -> Result<Self> {
        let mut traces: BTreeMap<u64, &Arc<Trace>> = BTreeMap::new();
        for s in &dataset.samples {
            let prev = traces.entry(s.trace.episode.seed).or_insert(&s.trace);
            if !Arc::ptr_eq(prev, &s.trace) {
                return Err(Error::InvalidArgument(format!("two episodes share seed {}", s.trace.episode.seed)));
            }
        }
        let episodes: Vec<StoredEpisode> = traces
            .values()
            .map(|tr| StoredEpisode {
                seed: tr.episode.seed,
                steps: tr
                    .snapshots
                    .iter()
                    .map(|s| StoredStep {
                        ue: s.ue,
                        links: s.links.clone(),
                    })
                    .collect(),
            })
            .collect();
        let links = episodes
            .first()
            .and_then(|e| e.steps.first())
            .map(|s| s.links.len())
            .ok_or(Error::Empty("dataset"))?;
        let samples = dataset
            .samples
            .iter()
            .map(|s| StoredSample {
                episode: s.trace.episode.seed,
                t: s.t,
                interference: s.interference.clone(),
            })
            .collect();
        let out = Self {
            params: dataset.params,
            links,
            episodes,
            samples,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        for e in &self.episodes {
            if e.steps.iter().any(|s| s.links.len() != self.links) {
                return Err(Error::Format(format!("episode {} has a step with the wrong link count", e.seed)));
            }
        }
        for s in &self.samples {
            let ep = self.episode(s.episode)?;
            if s.t < p.history || s.t + p.horizon >= ep.steps.len() || s.interference.len() != p.horizon {
                return Err(Error::Format(format!("sample (episode {}, t {}) outside its episode", s.episode, s.t)));
            }
        }
        Ok(())
    }

    fn episode(&self, seed: u64) -> Result<&StoredEpisode> {
        self.episodes
            .iter()
            .find(|e| e.seed == seed)
            .ok_or_else(|| Error::Format(format!("sample refers to missing episode {seed}")))
    }

    pub fn snapshot_rows(&self) -> usize {
        self.episodes.iter().map(|e| e.steps.len()).sum::<usize>() * self.links
    }

    pub fn elements(&self) -> usize {
        self.episodes
            .first()
            .and_then(|e| e.steps.first())
            .and_then(|s| s.links.first())
            .map(|c| c.h.len())
            .unwrap_or(0)
    }

    /// Conditioning/target pairs, identical to [`crate::predictor::gan::examples_from_dataset`]
    /// on the in-memory dataset this was built from.
    pub fn examples(&self) -> Result<Vec<TrainingExample>> {
        let p = &self.params;
        self.samples
            .iter()
            .map(|s| {
                let ep = self.episode(s.episode)?;
                let hist: Vec<StepRef> = ep.steps[s.t - p.history..=s.t].iter().map(StepRef::from).collect();
                let tgt: Vec<StepRef> = ep.steps[s.t + 1..=s.t + p.horizon].iter().map(StepRef::from).collect();
                Ok(TrainingExample {
                    episode: s.episode,
                    t: s.t,
                    condition: ConditioningVector::from_history(&hist)?.values,
                    target: target_features(&ep.steps[s.t].ue, &tgt, &s.interference)?,
                })
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.0.extend(MAGIC);
        w.0.extend(VERSION.to_le_bytes());
        let p = &self.params;
        for v in [self.links, p.history, p.horizon, p.t_sim] {
            w.u(v);
        }
        w.u(self.episodes.len());
        for e in &self.episodes {
            w.u64(e.seed);
            w.u(e.steps.len());
            for s in &e.steps {
                for x in s.ue.iter() {
                    w.f(*x);
                }
                for c in &s.links {
                    w.u(c.regime.indicator() as usize);
                    w.f(c.blockage);
                    w.f(c.lambda_los);
                    w.f(c.lambda_nlos);
                    w.u(c.h.len());
                    for z in c.h.iter() {
                        w.f(z.re);
                        w.f(z.im);
                    }
                }
            }
        }
        w.u(self.samples.len());
        for s in &self.samples {
            w.u64(s.episode);
            w.u(s.t);
            for i in &s.interference {
                w.f(*i);
            }
        }
        w.seal()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open(buf, MAGIC, VERSION, "dataset")?;
        let links = r.u()?;
        let params = DatasetParams {
            history: r.u()?,
            horizon: r.u()?,
            t_sim: r.u()?,
        };
        let n_ep = r.count(16)?;
        let mut episodes = Vec::with_capacity(n_ep);
        for _ in 0..n_ep {
            let seed = r.u64()?;
            let n_steps = r.count(24)?;
            let mut steps = Vec::with_capacity(n_steps);
            for _ in 0..n_steps {
                let ue = Vec3::new(r.f()?, r.f()?, r.f()?);
                let mut ls = Vec::with_capacity(links);
                for k in 0..links {
                    let regime = match r.u()? {
                        0 => Regime::FarField,
                        1 => Regime::NearField,
                        x => return Err(Error::Format(format!("regime flag {x}"))),
                    };
                    let blockage = r.f()?;
                    let lambda_los = r.f()?;
                    let lambda_nlos = r.f()?;
                    let m = r.count(16)?;
                    let mut h = CVec::zeros(m);
                    for z in h.iter_mut() {
                        *z = Complex64::new(r.f()?, r.f()?);
                    }
                    let lambda_total = lambda_los + lambda_nlos;
                    let h_eff = &h * Complex64::from((lambda_total * blockage).sqrt());
                    ls.push(LinkChannel {
                        k,
                        regime,
                        blockage,
                        h,
                        lambda_los,
                        lambda_nlos,
                        lambda_total,
                        h_eff,
                    });
                }
                steps.push(StoredStep { ue, links: ls });
            }
            episodes.push(StoredEpisode { seed, steps });
        }
        let n_s = r.count(16 + 8 * params.horizon)?;
        let mut samples = Vec::with_capacity(n_s);
        for _ in 0..n_s {
            let episode = r.u64()?;
            let t = r.u()?;
            let interference = (0..params.horizon).map(|_| r.f()).collect::<Result<Vec<_>>>()?;
            samples.push(StoredSample { episode, t, interference });
        }
        r.finish()?;
        let out = Self {
            params,
            links,
            episodes,
            samples,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn manifest(&self, bytes: &[u8], config_hash: &str) -> DatasetManifest {
        DatasetManifest {
            format_version: VERSION,
            config_hash: config_hash.to_string(),
            seeds: self.episodes.iter().map(|e| e.seed).collect(),
            interferers: self.links.saturating_sub(1),
            elements: self.elements(),
            history: self.params.history,
            horizon: self.params.horizon,
            t_sim: self.params.t_sim,
            episodes: self.episodes.len(),
            snapshot_rows: self.snapshot_rows(),
            samples: self.samples.len(),
            data_sha256: hex::encode(Sha256::digest(bytes)),
        }
    }

    /// Write `data` and its manifest atomically; returns the manifest.
    pub fn save(&self, data: &Path, manifest: &Path, config_hash: &str) -> Result<DatasetManifest> {
        let bytes = self.to_bytes();
        let m = self.manifest(&bytes, config_hash);
        write_atomic(data, &bytes)?;
        write_atomic(manifest, m.to_toml()?.as_bytes())?;
        Ok(m)
    }

    /// Load `data`, checking it against `manifest` and, when given, the expected config hash.
    pub fn load(data: &Path, manifest: &Path, expected_hash: Option<&str>) -> Result<(Self, DatasetManifest)> {
        let m = DatasetManifest::load(manifest)?;
        if let Some(h) = expected_hash {
            if m.config_hash != h {
                return Err(Error::HashMismatch {
                    expected: h.to_string(),
                    found: m.config_hash.clone(),
                });
            }
        }
        let bytes = std::fs::read(data).map_err(|e| Error::MissingArtifact(format!("{}: {e}", data.display())))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        if digest != m.data_sha256 {
            return Err(Error::HashMismatch {
                expected: m.data_sha256.clone(),
                found: digest,
            });
        }
        let ds = Self::from_bytes(&bytes)?;
        let derived = ds.manifest(&bytes, &m.config_hash);
        if derived != m {
            return Err(Error::Format("dataset disagrees with its manifest".into()));
        }
        Ok((ds, m))
    }
}
