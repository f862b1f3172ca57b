//! Experiment orchestration: configuration, the scheme registry, the closed
//! simulation loop, dataset/train/evaluate pipelines and CSV output.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod scenario;
pub mod sim;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beamform::ReactiveKind;
use crate::error::{Error, Result};
use crate::predictor::ChannelModel;

pub use config::ExperimentConfig;
pub use sim::{run_cell, CellTrace, StepRecord};

/// Interference-management scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    ReactiveZf,
    ReactiveHybrid,
    DtDeterministic,
    GenaiRegimeUnaware,
    GenaiRegimeAwareProposed,
    Oracle,
}

/// Source of the future states a scheme optimizes against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    None,
    Deterministic,
    Generative,
    Oracle,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::ReactiveZf,
        SchemeId::ReactiveHybrid,
        SchemeId::DtDeterministic,
        SchemeId::GenaiRegimeUnaware,
        SchemeId::GenaiRegimeAwareProposed,
        SchemeId::Oracle,
    ];

    /// The five compared schemes (the oracle is opt-in).
    pub const COMPARED: [SchemeId; 5] = [
        SchemeId::ReactiveZf,
        SchemeId::ReactiveHybrid,
        SchemeId::DtDeterministic,
        SchemeId::GenaiRegimeUnaware,
        SchemeId::GenaiRegimeAwareProposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::ReactiveZf => "reactive_zf",
            SchemeId::ReactiveHybrid => "reactive_hybrid",
            SchemeId::DtDeterministic => "dt_deterministic",
            SchemeId::GenaiRegimeUnaware => "genai_regime_unaware",
            SchemeId::GenaiRegimeAwareProposed => "genai_regime_aware_proposed",
            SchemeId::Oracle => "oracle",
        }
    }

    pub fn predictor(self) -> PredictorKind {
        match self {
            SchemeId::ReactiveZf | SchemeId::ReactiveHybrid => PredictorKind::None,
            SchemeId::DtDeterministic => PredictorKind::Deterministic,
            SchemeId::GenaiRegimeUnaware | SchemeId::GenaiRegimeAwareProposed => PredictorKind::Generative,
            SchemeId::Oracle => PredictorKind::Oracle,
        }
    }

    /// Regime rule the scheme's predictor applies at predicted positions.
    pub fn channel_model(self) -> ChannelModel {
        match self {
            SchemeId::GenaiRegimeUnaware => ChannelModel::AllNearField,
            _ => ChannelModel::RegimeAware,
        }
    }

    /// Precoder used reactively, or to initialize the proactive optimizer.
    pub fn reactive_kind(self) -> ReactiveKind {
        match self {
            SchemeId::ReactiveZf | SchemeId::GenaiRegimeUnaware => ReactiveKind::AllZf,
            _ => ReactiveKind::RegimeDispatch,
        }
    }

    pub fn is_generative(self) -> bool {
        self.predictor() == PredictorKind::Generative
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme {s:?}")))
    }
}
