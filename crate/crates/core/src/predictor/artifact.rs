//! Versioned binary model artifact.
//!
//! Layout (all integers `u64`, all floats `f64`, little endian):
//!
//! ```text
//! magic "XLTWINGM" | version u32
//! layout: links history horizon latent_dim
//! config: epochs batch_size learning_rate lambda_pred mu latent_dim hidden
//!         label_smoothing consistency_draws validation_fraction seed
//! epochs_trained
//! 3 normalizers (conditioning, displacement, interference): len, means, stds
//! generator:     layer count, sizes, parameter count, parameters
//! discriminator: same
//! sha256 of everything above (32 bytes)
//! ```

use std::path::Path;

use super::gan::{FeatureLayout, GenerativeModel, Normalizer, TrainingConfig};
use super::nn::Mlp;
use crate::error::{Error, Result};
use crate::io::{ByteReader, ByteWriter};

pub const MAGIC: &[u8; 8] = b"XLTWINGM";
pub const VERSION: u32 = 1;

fn write_norm(w: &mut ByteWriter, n: &Normalizer) {
    w.fs(&n.mean);
    w.fs(&n.std);
}

fn write_mlp(w: &mut ByteWriter, m: &Mlp) {
    w.u(m.sizes.len());
    for s in &m.sizes {
        w.u(*s);
    }
    w.fs(&m.params);
}

fn read_norm(r: &mut ByteReader) -> Result<Normalizer> {
    let mean = r.fs()?;
    let std = r.fs()?;
    if mean.len() != std.len() {
        return Err(Error::Format("normalizer arrays differ in length".into()));
    }
    Ok(Normalizer { mean, std })
}

fn read_mlp(r: &mut ByteReader) -> Result<Mlp> {
    let n = r.u()?;
    if n > 64 {
        return Err(Error::Format("implausible layer count".into()));
    }
    let sizes = (0..n).map(|_| r.u()).collect::<Result<Vec<_>>>()?;
    let params = r.fs()?;
    Mlp::from_params(&sizes, params).map_err(|e| Error::Format(e.to_string()))
}

pub fn to_bytes(model: &GenerativeModel) -> Vec<u8> {
    let mut w = ByteWriter::default();
    w.0.extend(MAGIC);
    w.0.extend(VERSION.to_le_bytes());
    let l = &model.layout;
    for v in [l.links, l.history, l.horizon, l.latent_dim] {
        w.u(v);
    }
    let c = &model.config;
    w.u(c.epochs);
    w.u(c.batch_size);
    w.f(c.learning_rate);
    w.f(c.lambda_pred);
    w.f(c.mu);
    w.u(c.latent_dim);
    w.u(c.hidden);
    w.f(c.label_smoothing);
    w.u(c.consistency_draws);
    w.f(c.validation_fraction);
    w.u64(c.seed);
    w.u(model.epochs_trained);
    write_norm(&mut w, &model.cond_norm);
    write_norm(&mut w, &model.disp_norm);
    write_norm(&mut w, &model.int_norm);
    write_mlp(&mut w, &model.generator);
    write_mlp(&mut w, &model.discriminator);
    w.seal()
}

pub fn from_bytes(buf: &[u8]) -> Result<GenerativeModel> {
    let mut r = ByteReader::open(buf, MAGIC, VERSION, "model artifact")?;
    let layout = FeatureLayout {
        links: r.u()?,
        history: r.u()?,
        horizon: r.u()?,
        latent_dim: r.u()?,
    };
    let config = TrainingConfig {
        epochs: r.u()?,
        batch_size: r.u()?,
        learning_rate: r.f()?,
        lambda_pred: r.f()?,
        mu: r.f()?,
        latent_dim: r.u()?,
        hidden: r.u()?,
        label_smoothing: r.f()?,
        consistency_draws: r.u()?,
        validation_fraction: r.f()?,
        seed: r.u64()?,
    };
    let epochs_trained = r.u()?;
    let cond_norm = read_norm(&mut r)?;
    let disp_norm = read_norm(&mut r)?;
    let int_norm = read_norm(&mut r)?;
    let generator = read_mlp(&mut r)?;
    let discriminator = read_mlp(&mut r)?;
    r.finish()?;
    let cd = layout.cond_dim();
    if generator.input_dim() != cd + layout.latent_dim
        || generator.output_dim() != layout.out_dim()
        || discriminator.input_dim() != cd + layout.out_dim()
        || discriminator.output_dim() != 1
        || cond_norm.mean.len() != cd
        || disp_norm.mean.len() != 3
        || int_norm.mean.len() != 1
    {
        return Err(Error::Format("network shapes disagree with the feature layout".into()));
    }
    Ok(GenerativeModel {
        layout,
        config,
        cond_norm,
        disp_norm,
        int_norm,
        generator,
        discriminator,
        epochs_trained,
    })
}

pub fn save(model: &GenerativeModel, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, &to_bytes(model))
}

pub fn load(path: &Path) -> Result<GenerativeModel> {
    from_bytes(&std::fs::read(path)?)
}
