#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use xltwin::beamform::{BeamformerSet, OptimizerConfig, ProactiveProblem, ReactiveKind};
use xltwin::channel::{self, CVec, LinkChannel};
use xltwin::geometry::{Aabb, Vec3};
use xltwin::harness::ExperimentConfig;
use xltwin::predictor::{PredictedStep, Trajectory, TrajectoryBundle};
use xltwin::rng::{self, SimRng};
use xltwin::scene::{Regime, Scene, SceneConfig, TransmitterConfig};

pub fn rng(seed: u64) -> SimRng {
    rng::substream(seed, &[0xACCE])
}

/// A one-transmitter scene with an `nx x ny` array at a random pose and
/// `scatterers` NLoS scatterers.
pub fn random_scene(r: &mut SimRng, nx: usize, ny: usize, scatterers: usize) -> Scene {
    let center = [r.random_range(2.0..8.0), r.random_range(2.0..8.0), r.random_range(0.5..2.5)];
    let boresight = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
    SceneConfig {
        carrier_frequency: r.random_range(20e9..150e9),
        room: Aabb::new([0.0; 3], [10.0, 10.0, 3.0]),
        blockage_attenuation: 0.01,
        scatterers_per_link: scatterers,
        transmitters: vec![TransmitterConfig {
            center,
            nx,
            ny,
            spacing: None,
            boresight,
            tx_power_dbm: 0.0,
        }],
        obstacles: vec![],
    }
    .build(r.random())
    .unwrap()
}

/// Straight-line recomputation of the hybrid channel from raw coordinates:
/// every distance, gain and phase is evaluated per element without the
/// library's channel code.
pub fn brute_force_channel(scene: &Scene, u: &Vec3, regime: Regime, blockage: f64) -> (Vec<Complex64>, f64) {
    let tx = &scene.transmitters[0];
    let lambda = scene.wavelength;
    let kw = 2.0 * PI / lambda;
    let (pos, refl) = scene.link_scatterers(0).unwrap();
    let dx = u.x - tx.center.x;
    let dy = u.y - tx.center.y;
    let dz = u.z - tx.center.z;
    let d = (dx * dx + dy * dy + dz * dz).sqrt();
    let dist = |a: &Vec3, b: &Vec3| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt();
    let los_amp = lambda / (4.0 * PI * d);
    let mut big_lambda = los_amp * los_amp;
    let mut paths = Vec::new();
    for (s, a) in pos.iter().zip(refl) {
        let r_bs = dist(&tx.center, s);
        let r_ue = dist(s, u);
        let g = lambda * lambda * a.norm_sqr() / (16.0 * PI * PI * r_bs * r_ue);
        big_lambda += g;
        paths.push((s, *a, r_bs, r_ue, g));
    }
    let elems = &tx.array.element_positions;
    let mut h = Vec::with_capacity(elems.len());
    for p in elems {
        let d_los = match regime {
            Regime::NearField => dist(p, u),
            Regime::FarField => d,
        };
        let mut acc = Complex64::from_polar(los_amp, -kw * d_los);
        for (s, a, r_bs, r_ue, g) in &paths {
            let d_path = match regime {
                Regime::NearField => dist(p, s) + r_ue,
                Regime::FarField => r_bs + r_ue,
            };
            acc += a / a.norm() * g.sqrt() * Complex64::from_polar(1.0, -kw * d_path);
        }
        h.push(acc / big_lambda.sqrt() * (big_lambda * blockage).sqrt());
    }
    (h, big_lambda)
}

/// Quick closed-loop configuration: K = 2, short episodes, small networks.
pub fn quick_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.interferers = 2;
    c.t_sim = 12;
    c.samples = 4;
    c.seeds = vec![0, 1];
    c.training_seeds = vec![100, 101, 102];
    c.training.epochs = 4;
    c.training.hidden = 24;
    c.training.latent_dim = 4;
    c.training.batch_size = 16;
    c
}

pub fn link(k: usize, h_eff: CVec) -> LinkChannel {
    LinkChannel {
        k,
        regime: Regime::FarField,
        blockage: 1.0,
        h: h_eff.clone(),
        lambda_los: 1.0,
        lambda_nlos: 0.0,
        lambda_total: 1.0,
        h_eff,
    }
}

pub fn random_cvec(n: usize, r: &mut SimRng) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

/// An optimizer instance on the built-in layout: `m` sampled futures of `t`
/// steps whose UE positions jitter around a random point of the work area.
pub struct Instance {
    pub scene: Scene,
    pub bundle: TrajectoryBundle,
    pub own: Vec<CVec>,
    pub regimes: Vec<Regime>,
    pub powers: Vec<f64>,
    pub config: OptimizerConfig,
}

impl Instance {
    pub fn on_layout(k: usize, m: usize, t: usize, seed: u64) -> Self {
        let cfg = ExperimentConfig::default();
        let scene = cfg.scene_for(k).unwrap().build(seed).unwrap();
        let mut r = rng(seed);
        let base = Vec3::new(r.random_range(4.7..5.3), r.random_range(4.8..5.2), r.random_range(1.0..1.2));
        let trajectories = (0..m)
            .map(|_| {
                let steps = (0..t)
                    .map(|_| {
                        let ue = base + Vec3::new(r.random_range(-0.02..0.02), r.random_range(-0.02..0.02), 0.0);
                        let links = (0..=k).map(|j| channel::synthesize(&scene, j, &ue, None).unwrap()).collect();
                        PredictedStep { ue, links }
                    })
                    .collect();
                Trajectory::new(steps)
            })
            .collect();
        let bundle = TrajectoryBundle::new(trajectories).unwrap();
        let own = (0..=k)
            .map(|j| {
                let tx = &scene.transmitters[j];
                let p = tx.center + tx.array.boresight() * r.random_range(0.2..0.4);
                channel::synthesize(&scene, j, &p, None).unwrap().h_eff
            })
            .collect();
        let regimes = (0..=k).map(|j| scene.regime(j, &base).unwrap()).collect();
        let powers = scene.transmitters.iter().map(|t| t.tx_power).collect();
        let config = cfg.optimizer_config(k);
        Self {
            scene,
            bundle,
            own,
            regimes,
            powers,
            config,
        }
    }

    pub fn problem<'a>(&'a self, init: ReactiveKind, previous: Option<&'a BeamformerSet>) -> ProactiveProblem<'a> {
        ProactiveProblem {
            bundle: &self.bundle,
            own: &self.own,
            regimes: &self.regimes,
            nominal_powers: &self.powers,
            init,
            previous,
        }
    }
}
