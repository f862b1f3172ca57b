//! Static geometric twin of the indoor deployment.
//!
//! A [`Scene`] holds the room, the transmitters with their planar arrays, box
//! obstacles, and the single-bounce scatterers that feed the multipath model.
//! It is immutable once built and can be shared freely across workers.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::rng;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Propagation regime of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    NearField,
    FarField,
}

impl Regime {
    /// Binary indicator: 1 for near field, 0 for far field.
    pub fn indicator(self) -> u8 {
        match self {
            Regime::NearField => 1,
            Regime::FarField => 0,
        }
    }

    pub fn from_indicator(rho: u8) -> Self {
        if rho == 0 {
            Regime::FarField
        } else {
            Regime::NearField
        }
    }
}

/// Uniform planar array laid out on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct UpaGeometry {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    /// Columns are the array's local x, y and boresight axes.
    pub orientation: nalgebra::Matrix3<f64>,
    pub element_positions: Vec<Vec3>,
}

impl UpaGeometry {
    pub fn new(center: Vec3, nx: usize, ny: usize, spacing: f64, boresight: Vec3) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("array needs at least one element".into()));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidArgument(format!("element spacing {spacing} must be positive")));
        }
        let orientation = frame_from_boresight(boresight)?;
        let ex = orientation.column(0).into_owned();
        let ey = orientation.column(1).into_owned();
        let cx = (nx as f64 - 1.0) / 2.0;
        let cy = (ny as f64 - 1.0) / 2.0;
        let mut element_positions = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let ox = (ix as f64 - cx) * spacing;
                let oy = (iy as f64 - cy) * spacing;
                element_positions.push(center + ex * ox + ey * oy);
            }
        }
        Ok(Self {
            nx,
            ny,
            spacing,
            orientation,
            element_positions,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    /// Aperture taken as the array diagonal.
    pub fn aperture(&self) -> f64 {
        let a = (self.nx as f64 - 1.0).powi(2) + (self.ny as f64 - 1.0).powi(2);
        self.spacing * a.sqrt()
    }

    pub fn boresight(&self) -> Vec3 {
        self.orientation.column(2).into_owned()
    }
}

fn frame_from_boresight(boresight: Vec3) -> Result<nalgebra::Matrix3<f64>> {
    let n = boresight.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument("boresight must be a non-zero vector".into()));
    }
    let z = boresight / n;
    let helper = if z.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
    let x = helper.cross(&z).normalize();
    let y = z.cross(&x);
    Ok(nalgebra::Matrix3::from_columns(&[x, y, z]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmitter {
    pub index: usize,
    pub center: Vec3,
    pub array: UpaGeometry,
    /// Nominal transmit power in watts.
    pub tx_power: f64,
}

impl Transmitter {
    pub fn rayleigh_distance(&self, wavelength: f64) -> f64 {
        rayleigh_distance(self.array.aperture(), wavelength).unwrap_or(0.0)
    }
}

/// The geometric twin.
#[derive(Debug, Clone)]
pub struct Scene {
    pub room_bounds: Aabb,
    pub transmitters: Vec<Transmitter>,
    pub obstacles: Vec<Aabb>,
    /// Scatterer positions, `scatterers_per_link` consecutive entries per transmitter.
    pub scatterers: Vec<Vec3>,
    /// Complex reflection coefficient of each scatterer.
    pub reflections: Vec<Complex64>,
    pub scatterers_per_link: usize,
    pub carrier_frequency: f64,
    pub wavelength: f64,
    /// Blockage attenuation applied when the direct path is obstructed.
    pub blockage_attenuation: f64,
}

impl Scene {
    pub fn transmitter(&self, k: usize) -> Result<&Transmitter> {
        self.transmitters.get(k).ok_or(Error::UnknownTransmitter(k))
    }

    pub fn num_transmitters(&self) -> usize {
        self.transmitters.len()
    }

    /// Scatterers and reflection coefficients attached to transmitter `k`.
    pub fn link_scatterers(&self, k: usize) -> Result<(&[Vec3], &[Complex64])> {
        self.transmitter(k)?;
        let n = self.scatterers_per_link;
        let lo = k * n;
        let hi = lo + n;
        if hi > self.scatterers.len() {
            return Ok((&[], &[]));
        }
        Ok((&self.scatterers[lo..hi], &self.reflections[lo..hi]))
    }

    pub fn distance_to_ue(&self, k: usize, u: &Vec3) -> Result<f64> {
        let tx = self.transmitter(k)?;
        Ok((u - tx.center).norm())
    }

    pub fn element_distances(&self, k: usize, u: &Vec3) -> Result<Vec<f64>> {
        let tx = self.transmitter(k)?;
        Ok(tx.array.element_positions.iter().map(|p| (u - p).norm()).collect())
    }

    pub fn rayleigh(&self, k: usize) -> Result<f64> {
        let tx = self.transmitter(k)?;
        rayleigh_distance(tx.array.aperture(), self.wavelength)
    }

    /// Regime of link `k` for a UE at `u`.
    pub fn regime(&self, k: usize, u: &Vec3) -> Result<Regime> {
        let d = self.distance_to_ue(k, u)?;
        Ok(classify_regime(d, self.rayleigh(k)?))
    }

    pub fn los_blocked(&self, a: &Vec3, b: &Vec3) -> bool {
        self.obstacles.iter().any(|o| o.blocks_segment(a, b))
    }

    /// Blockage factor for link `k`: the attenuation if the direct path is obstructed, else 1.
    pub fn blockage(&self, k: usize, u: &Vec3) -> Result<f64> {
        let tx = self.transmitter(k)?;
        Ok(if self.los_blocked(&tx.center, u) {
            self.blockage_attenuation
        } else {
            1.0
        })
    }

    /// True if `p` is inside the room and outside every obstacle interior.
    pub fn is_free(&self, p: &Vec3) -> bool {
        self.room_bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains_strict(p))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.room_bounds.is_valid() {
            return Err(Error::Config("room bounds are not a valid box".into()));
        }
        if !(self.carrier_frequency > 0.0) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        let expected = SPEED_OF_LIGHT / self.carrier_frequency;
        if ((self.wavelength - expected) / expected).abs() > 1e-12 {
            return Err(Error::Config("wavelength inconsistent with carrier frequency".into()));
        }
        if !(self.blockage_attenuation > 0.0 && self.blockage_attenuation <= 1.0) {
            return Err(Error::Config("blockage attenuation must lie in (0, 1]".into()));
        }
        for (i, tx) in self.transmitters.iter().enumerate() {
            if tx.index != i {
                return Err(Error::Config(format!("transmitter {i} carries index {}", tx.index)));
            }
            if !(tx.tx_power > 0.0) {
                return Err(Error::Config(format!("transmitter {i} needs positive power")));
            }
            if !self.room_bounds.contains(&tx.center) {
                return Err(Error::Config(format!("transmitter {i} lies outside the room")));
            }
            for p in &tx.array.element_positions {
                if self.obstacles.iter().any(|o| o.contains(p)) {
                    return Err(Error::Config(format!("transmitter {i} has an element inside an obstacle")));
                }
            }
        }
        for o in &self.obstacles {
            if !o.is_valid() {
                return Err(Error::Config("obstacle is not a valid box".into()));
            }
        }
        if self.scatterers.len() != self.reflections.len() {
            return Err(Error::Config("scatterer/reflection count mismatch".into()));
        }
        if self.scatterers.iter().any(|s| !self.room_bounds.contains(s)) {
            return Err(Error::Config("scatterer outside the room".into()));
        }
        Ok(())
    }

    pub fn from_config(cfg: &SceneConfig, seed: u64) -> Result<Self> {
        cfg.build(seed)
    }
}

/// Rayleigh distance `2 D^2 / lambda`.
pub fn rayleigh_distance(aperture: f64, wavelength: f64) -> Result<f64> {
    if !(aperture > 0.0) || !(wavelength > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "aperture ({aperture}) and wavelength ({wavelength}) must be positive"
        )));
    }
    Ok(2.0 * aperture * aperture / wavelength)
}

/// Near field iff `distance <= rayleigh`.
pub fn classify_regime(distance: f64, rayleigh: f64) -> Regime {
    if distance <= rayleigh {
        Regime::NearField
    } else {
        Regime::FarField
    }
}

fn default_tx_power_dbm() -> f64 {
    0.0
}

fn default_blockage() -> f64 {
    0.01
}

fn default_scatterers() -> usize {
    2
}

/// One transmitter entry of a scene file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitterConfig {
    pub center: [f64; 3],
    pub nx: usize,
    pub ny: usize,
    /// Element spacing in meters; half a wavelength when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    pub boresight: [f64; 3],
    #[serde(default = "default_tx_power_dbm")]
    pub tx_power_dbm: f64,
}

/// Scene file contents (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub carrier_frequency: f64,
    pub room: Aabb,
    #[serde(default = "default_blockage")]
    pub blockage_attenuation: f64,
    /// NLoS scatterers per link (number of paths minus one).
    #[serde(default = "default_scatterers")]
    pub scatterers_per_link: usize,
    #[serde(default, rename = "transmitter")]
    pub transmitters: Vec<TransmitterConfig>,
    #[serde(default, rename = "obstacle")]
    pub obstacles: Vec<Aabb>,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

impl SceneConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Build the scene, drawing scatterer positions and reflection
    /// coefficients from the scenario seed.
    pub fn build(&self, seed: u64) -> Result<Scene> {
        if !(self.carrier_frequency > 0.0) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        let wavelength = self.wavelength();
        let mut transmitters = Vec::with_capacity(self.transmitters.len());
        for (index, t) in self.transmitters.iter().enumerate() {
            let center = Vec3::from(t.center);
            let spacing = t.spacing.unwrap_or(wavelength / 2.0);
            let array = UpaGeometry::new(center, t.nx, t.ny, spacing, Vec3::from(t.boresight))?;
            transmitters.push(Transmitter {
                index,
                center,
                array,
                tx_power: dbm_to_watts(t.tx_power_dbm),
            });
        }
        let mut scene = Scene {
            room_bounds: self.room,
            transmitters,
            obstacles: self.obstacles.clone(),
            scatterers: Vec::new(),
            reflections: Vec::new(),
            scatterers_per_link: self.scatterers_per_link,
            carrier_frequency: self.carrier_frequency,
            wavelength,
            blockage_attenuation: self.blockage_attenuation,
        };
        scene.validate()?;
        let (scatterers, reflections) = draw_scatterers(&scene, seed)?;
        scene.scatterers = scatterers;
        scene.reflections = reflections;
        Ok(scene)
    }
}

/// Uniform scatterers in free space, `|alpha| ~ U[0.3, 0.9]`, phase `~ U[0, 2 pi)`.
fn draw_scatterers(scene: &Scene, seed: u64) -> Result<(Vec<Vec3>, Vec<Complex64>)> {
    let n = scene.scatterers_per_link * scene.transmitters.len();
    let mut rng = rng::substream(seed, &[rng::tag::SCENE]);
    let room = scene.room_bounds;
    let mut pos = Vec::with_capacity(n);
    let mut refl = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tries = 0;
        let p = loop {
            let p = Vec3::new(
                rng.random_range(room.min[0]..=room.max[0]),
                rng.random_range(room.min[1]..=room.max[1]),
                rng.random_range(room.min[2]..=room.max[2]),
            );
            if scene.is_free(&p) {
                break p;
            }
            tries += 1;
            if tries > 10_000 {
                return Err(Error::Config("no free space left for scatterers".into()));
            }
        };
        let mag = rng.random_range(0.3..=0.9);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        pos.push(p);
        refl.push(Complex64::from_polar(mag, phase));
    }
    Ok((pos, refl))
}
