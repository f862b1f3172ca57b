//! Hybrid near/far-field channel synthesis.
//!
//! Channels are stored as a unit-large-scale shape `h` plus the large-scale
//! gain `Lambda` and blockage `xi`, with the effective channel
//! `h_eff = sqrt(Lambda * xi) * h` used by every downstream computation.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scene::{Regime, Scene, SPEED_OF_LIGHT};

pub type CVec = DVector<Complex64>;

/// Log-distance path loss `C0 (d / d_ref)^(-alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub c0: f64,
    pub d_ref: f64,
    pub alpha: f64,
}

impl PathLossModel {
    pub fn new(c0: f64, d_ref: f64, alpha: f64) -> Result<Self> {
        if !(c0 > 0.0) || !(d_ref > 0.0) || !(alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "path loss needs c0 > 0, d_ref > 0, alpha >= 0 (got {c0}, {d_ref}, {alpha})"
            )));
        }
        Ok(Self { c0, d_ref, alpha })
    }

    pub fn gain(&self, d: f64) -> Result<f64> {
        path_loss(self, d)
    }
}

pub fn path_loss(model: &PathLossModel, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("distance {d} must be positive")));
    }
    Ok(model.c0 * (d / model.d_ref).powf(-model.alpha))
}

/// Free-space gain `(lambda / (4 pi d))^2`.
pub fn los_gain(wavelength: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("distance {d} must be positive")));
    }
    let a = wavelength / (4.0 * PI * d);
    Ok(a * a)
}

/// One single-bounce NLoS path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlosPath {
    pub scatterer: Vec3,
    pub reflection: Complex64,
    /// Array-center to scatterer distance.
    pub r_bs: f64,
    /// Scatterer to UE distance.
    pub r_ue: f64,
}

/// Product-distance gain `lambda^2 |alpha|^2 / ((4 pi)^2 r_bs r_ue)`.
pub fn nlos_path_loss(path: &NlosPath, wavelength: f64) -> Result<f64> {
    if !(path.r_bs > 0.0) || !(path.r_ue > 0.0) {
        return Err(Error::InvalidArgument("NLoS path with zero length".into()));
    }
    let a2 = path.reflection.norm_sqr();
    Ok(wavelength * wavelength * a2 / ((4.0 * PI).powi(2) * path.r_bs * path.r_ue))
}

/// The NLoS paths of link `k` for a UE at `u`, one per scatterer attached to `k`.
pub fn nlos_paths(scene: &Scene, k: usize, u: &Vec3) -> Result<Vec<NlosPath>> {
    let tx = scene.transmitter(k)?;
    let (pos, refl) = scene.link_scatterers(k)?;
    Ok(pos
        .iter()
        .zip(refl)
        .map(|(p, a)| NlosPath {
            scatterer: *p,
            reflection: *a,
            r_bs: (tx.center - p).norm(),
            r_ue: (p - u).norm(),
        })
        .collect())
}

fn phasor(wavenumber: f64, d: f64) -> Complex64 {
    Complex64::from_polar(1.0, -wavenumber * d)
}

/// LoS vector with per-element magnitude `sqrt(beta_los)` and phase
/// `-2 pi / lambda * d[m]`, where `d[m]` is the array-center distance in the
/// far field and the exact element distance in the near field.
pub fn los_channel(scene: &Scene, k: usize, u: &Vec3, regime: Regime) -> Result<CVec> {
    let tx = scene.transmitter(k)?;
    let d = (u - tx.center).norm();
    let beta = los_gain(scene.wavelength, d).map_err(|_| Error::CoincidentElement(k))?;
    let amp = beta.sqrt();
    let kw = 2.0 * PI / scene.wavelength;
    let elems = &tx.array.element_positions;
    let mut h = CVec::zeros(elems.len());
    match regime {
        Regime::FarField => {
            let p = phasor(kw, d) * amp;
            h.fill(p);
        }
        Regime::NearField => {
            for (m, pm) in elems.iter().enumerate() {
                let dm = (u - pm).norm();
                if dm == 0.0 {
                    return Err(Error::CoincidentElement(k));
                }
                h[m] = phasor(kw, dm) * amp;
            }
        }
    }
    Ok(h)
}

/// Per-element NLoS vector of one path: `alpha/|alpha| sqrt(Lambda_l)` times the phasors.
fn nlos_vector(scene: &Scene, k: usize, u: &Vec3, regime: Regime, path: &NlosPath, out: &mut CVec) -> Result<f64> {
    let gain = nlos_path_loss(path, scene.wavelength)?;
    if gain == 0.0 {
        return Ok(0.0);
    }
    let tx = scene.transmitter(k)?;
    let kw = 2.0 * PI / scene.wavelength;
    let coeff = path.reflection / path.reflection.norm() * gain.sqrt();
    let to_ue = (path.scatterer - u).norm();
    match regime {
        Regime::FarField => {
            let p = coeff * phasor(kw, path.r_bs + path.r_ue);
            for x in out.iter_mut() {
                *x += p;
            }
        }
        Regime::NearField => {
            for (m, pm) in tx.array.element_positions.iter().enumerate() {
                let dm = (pm - path.scatterer).norm() + to_ue;
                out[m] += coeff * phasor(kw, dm);
            }
        }
    }
    Ok(gain)
}

/// Per-link channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    pub k: usize,
    pub regime: Regime,
    /// `1` or the blockage attenuation.
    pub blockage: f64,
    /// Unit-large-scale shape.
    pub h: CVec,
    pub lambda_los: f64,
    pub lambda_nlos: f64,
    pub lambda_total: f64,
    pub h_eff: CVec,
}

impl LinkChannel {
    /// Large-scale factor `sqrt(Lambda * xi)` applied to the shape.
    pub fn scale(&self) -> f64 {
        (self.lambda_total * self.blockage).sqrt()
    }

    pub fn num_elements(&self) -> usize {
        self.h.len()
    }
}

/// Assemble the hybrid-field channel of link `k` at `u`.
pub fn hybrid_channel(
    scene: &Scene,
    k: usize,
    u: &Vec3,
    regime: Regime,
    blockage: f64,
    paths: &[NlosPath],
) -> Result<LinkChannel> {
    let tx = scene.transmitter(k)?;
    let d = (u - tx.center).norm();
    let mut raw = los_channel(scene, k, u, regime)?;
    let lambda_los = los_gain(scene.wavelength, d)?;
    let mut lambda_nlos = 0.0;
    for p in paths {
        lambda_nlos += nlos_vector(scene, k, u, regime, p, &mut raw)?;
    }
    let lambda_total = lambda_los + lambda_nlos;
    let h = raw.unscale(lambda_total.sqrt());
    let h_eff = &h * Complex64::from((lambda_total * blockage).sqrt());
    Ok(LinkChannel {
        k,
        regime,
        blockage,
        h,
        lambda_los,
        lambda_nlos,
        lambda_total,
        h_eff,
    })
}

/// Channel of link `k` at `u` with regime and blockage taken from the scene
/// geometry, unless `regime` overrides the classification.
pub fn synthesize(scene: &Scene, k: usize, u: &Vec3, regime: Option<Regime>) -> Result<LinkChannel> {
    let regime = match regime {
        Some(r) => r,
        None => scene.regime(k, u)?,
    };
    let blockage = scene.blockage(k, u)?;
    let paths = nlos_paths(scene, k, u)?;
    hybrid_channel(scene, k, u, regime, blockage, &paths)
}

/// Conventional plane-wave steering vector toward `u`, scaled by the LoS
/// amplitude: phases `-2 pi / lambda (d - (p_m - p) . u_hat)`.
pub fn plane_wave_steering(scene: &Scene, k: usize, u: &Vec3) -> Result<CVec> {
    let tx = scene.transmitter(k)?;
    let r = u - tx.center;
    let d = r.norm();
    let amp = los_gain(scene.wavelength, d)?.sqrt();
    let dir = r / d;
    let kw = 2.0 * PI / scene.wavelength;
    Ok(CVec::from_iterator(
        tx.array.num_elements(),
        tx.array
            .element_positions
            .iter()
            .map(|pm| phasor(kw, d - (pm - tx.center).dot(&dir)) * amp),
    ))
}

/// Maximum Doppler shift and coherence time `0.423 / f_d`; coherence is
/// `f64::INFINITY` for a static UE.
pub fn doppler_and_coherence(speed: f64, carrier: f64) -> (f64, f64) {
    let fd = speed * carrier / SPEED_OF_LIGHT;
    let tc = if fd > 0.0 { 0.423 / fd } else { f64::INFINITY };
    (fd, tc)
}
