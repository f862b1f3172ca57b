//! Link-level simulator and benchmark harness for proactive interference
//! management in dense indoor XL-MIMO deployments with mixed near-field and
//! far-field links.
//!
//! The crate is organised bottom-up:
//!
//! - [`scene`]: the static geometric twin (room, arrays, obstacles, scatterers)
//! - [`channel`]: hybrid-field channel synthesis and the effective channel
//! - [`dynamics`]: UE mobility, geometric blockage, Poisson hotspots, dataset construction
//! - [`predictor`]: deterministic, oracle and conditional-GAN future-state predictors
//! - [`beamform`]: zero-forcing, beam focusing and the proactive optimizer
//! - [`metrics`]: interference, SINR CDF, outage, RMSE and min-rate reductions
//! - [`harness`]: experiment configuration, closed-loop simulation, sweeps and CSV output

pub mod beamform;
pub mod channel;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod par;
pub mod predictor;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
