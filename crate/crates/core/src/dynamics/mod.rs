//! Scenario evolution: UE mobility, geometric blockage, Poisson hotspots and
//! the windowed dataset built from rolled-out episodes.

pub mod store;

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::{self, LinkChannel};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::rng::{self, SimRng};
use crate::scene::{Regime, Scene};

/// Kinematic state of the tagged UE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Standard deviation of the per-axis position perturbation, meters.
    pub noise_sigma: f64,
}

/// Per-step perturbations are truncated at this many standard deviations (norm).
pub const NOISE_TRUNCATION: f64 = 6.0;

fn draw_perturbation(sigma: f64, rng: &mut SimRng) -> Vec3 {
    if sigma <= 0.0 {
        return Vec3::zeros();
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    loop {
        let e = Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        if e.norm() <= NOISE_TRUNCATION * sigma {
            return e;
        }
    }
}

/// Reflect `x` into `[lo, hi]`; returns the reflected coordinate and whether
/// an odd number of reflections occurred.
fn reflect_axis(mut x: f64, lo: f64, hi: f64) -> (f64, bool) {
    let mut flipped = false;
    if hi <= lo {
        return (lo, false);
    }
    for _ in 0..64 {
        if x < lo {
            x = 2.0 * lo - x;
            flipped = !flipped;
        } else if x > hi {
            x = 2.0 * hi - x;
            flipped = !flipped;
        } else {
            return (x, flipped);
        }
    }
    (x.clamp(lo, hi), flipped)
}

/// Advance the UE by `v dt + eps`, reflecting off room walls (speed preserved,
/// heading mirrored) and bouncing back from obstacle interiors.
pub fn mobility_step(scene: &Scene, state: &MobilityState, dt: f64, rng: &mut SimRng) -> MobilityState {
    let eps = draw_perturbation(state.noise_sigma, rng);
    let proposed = state.position + state.velocity * dt + eps;
    let room = scene.room_bounds;
    let mut pos = proposed;
    let mut vel = state.velocity;
    for i in 0..3 {
        let (x, flipped) = reflect_axis(pos[i], room.min[i], room.max[i]);
        pos[i] = x;
        if flipped {
            vel[i] = -vel[i];
        }
    }
    if scene.obstacles.iter().any(|o| o.contains_strict(&pos)) {
        pos = state.position;
        vel = -vel;
    }
    MobilityState {
        position: pos,
        velocity: vel,
        noise_sigma: state.noise_sigma,
    }
}

/// Geometric blockage indicator of link `k`.
pub fn blockage_process(scene: &Scene, k: usize, u: &Vec3) -> Result<f64> {
    scene.blockage(k, u)
}

/// A hotspot cluster region with Poisson-distributed user count.
#[derive(Debug, Clone, PartialEq)]
pub struct Hotspot {
    pub region: Aabb,
    /// Expected number of users.
    pub intensity: f64,
    pub users: Vec<Vec3>,
}

impl Hotspot {
    pub fn active_users(&self) -> usize {
        self.users.len()
    }
}

/// Resample the hotspot: `Poisson(intensity)` users placed uniformly in the region.
pub fn hotspot_activate(hotspot: &Hotspot, rng: &mut SimRng) -> Result<Hotspot> {
    if !(hotspot.intensity >= 0.0) {
        return Err(Error::InvalidArgument("hotspot intensity must be non-negative".into()));
    }
    let count = if hotspot.intensity == 0.0 {
        0
    } else {
        let p = Poisson::new(hotspot.intensity).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        p.sample(rng) as usize
    };
    let r = hotspot.region;
    let users = (0..count)
        .map(|_| {
            Vec3::new(
                rng.random_range(r.min[0]..=r.max[0]),
                rng.random_range(r.min[1]..=r.max[1]),
                rng.random_range(r.min[2]..=r.max[2]),
            )
        })
        .collect();
    Ok(Hotspot {
        region: r,
        intensity: hotspot.intensity,
        users,
    })
}

/// Hotspot cluster that switches on at a scripted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotspotSpec {
    pub region: Aabb,
    pub intensity: f64,
    pub activation_step: usize,
}

fn default_noise_sigma() -> f64 {
    0.01
}

/// How episodes are initialised and evolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Box the tagged UE starts in.
    pub ue_start: Aabb,
    /// Initial speed is drawn uniformly from `[speed_min, v_max]`.
    pub speed_min: f64,
    pub v_max: f64,
    /// Mean initial heading in the horizontal plane (radians from +x) and its half spread.
    pub heading: f64,
    pub heading_spread: f64,
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    pub dt: f64,
    /// Home users sit this far in front of each interferer's array, meters.
    pub home_user_range: [f64; 2],
    /// Lateral jitter of home users around the boresight, meters.
    pub home_user_lateral: f64,
    #[serde(default)]
    pub hotspots: Vec<HotspotSpec>,
}

impl ScenarioSpec {
    pub fn validate(&self, scene: &Scene) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if !(self.v_max >= 0.0) || !(self.speed_min >= 0.0) || self.speed_min > self.v_max {
            return Err(Error::Config("need 0 <= speed_min <= v_max".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise sigma must be non-negative".into()));
        }
        if !scene.room_bounds.contains_box(&self.ue_start) {
            return Err(Error::Config("UE start box leaves the room".into()));
        }
        for h in &self.hotspots {
            if !scene.room_bounds.contains_box(&h.region) {
                return Err(Error::Config("hotspot region leaves the room".into()));
            }
            if !(h.intensity >= 0.0) {
                return Err(Error::Config("hotspot intensity must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Environment state at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub t: usize,
    pub ue: MobilityState,
    /// Users of all currently active hotspots.
    pub hotspot_users: Vec<Vec3>,
}

/// A rolled-out scenario realisation.
#[derive(Debug, Clone)]
pub struct Episode {
    pub seed: u64,
    /// Home user of each transmitter; entry 0 is unused (the serving AP serves the tagged UE).
    pub home_users: Vec<Vec3>,
    pub states: Vec<EnvState>,
}

fn uniform_in(r: &Aabb, rng: &mut SimRng) -> Vec3 {
    Vec3::new(
        rng.random_range(r.min[0]..=r.max[0]),
        rng.random_range(r.min[1]..=r.max[1]),
        rng.random_range(r.min[2]..=r.max[2]),
    )
}

impl Episode {
    /// Roll the environment for `n_steps` steps from the seeded initial state.
    pub fn roll(scene: &Scene, spec: &ScenarioSpec, seed: u64, n_steps: usize) -> Result<Self> {
        spec.validate(scene)?;
        let mut start_rng = rng::substream(seed, &[rng::tag::START]);
        let mut position = uniform_in(&spec.ue_start, &mut start_rng);
        let mut guard = 0;
        while !scene.is_free(&position) {
            position = uniform_in(&spec.ue_start, &mut start_rng);
            guard += 1;
            if guard > 10_000 {
                return Err(Error::Config("UE start box has no free space".into()));
            }
        }
        let speed = start_rng.random_range(spec.speed_min..=spec.v_max);
        let heading = spec.heading + start_rng.random_range(-spec.heading_spread..=spec.heading_spread);
        let velocity = Vec3::new(heading.cos(), heading.sin(), 0.0) * speed;
        let mut ue = MobilityState {
            position,
            velocity,
            noise_sigma: spec.noise_sigma,
        };

        let mut home_rng = rng::substream(seed, &[rng::tag::OWN_USERS]);
        let mut home_users = vec![scene.transmitters[0].center];
        for tx in scene.transmitters.iter().skip(1) {
            let b = tx.array.boresight();
            let ex = tx.array.orientation.column(0).into_owned();
            let ey = tx.array.orientation.column(1).into_owned();
            let mut p;
            let mut tries = 0;
            loop {
                let r = home_rng.random_range(spec.home_user_range[0]..=spec.home_user_range[1]);
                let a = home_rng.random_range(-spec.home_user_lateral..=spec.home_user_lateral);
                let c = home_rng.random_range(-spec.home_user_lateral..=spec.home_user_lateral);
                p = tx.center + b * r + ex * a + ey * c;
                if scene.is_free(&p) {
                    break;
                }
                tries += 1;
                if tries > 10_000 {
                    return Err(Error::Config(format!("no free spot for the home user of transmitter {}", tx.index)));
                }
            }
            home_users.push(p);
        }

        let mut mob_rng = rng::substream(seed, &[rng::tag::MOBILITY]);
        let mut active: Vec<Option<Hotspot>> = vec![None; spec.hotspots.len()];
        let mut states = Vec::with_capacity(n_steps);
        for t in 0..n_steps {
            if t > 0 {
                ue = mobility_step(scene, &ue, spec.dt, &mut mob_rng);
            }
            for (c, h) in spec.hotspots.iter().enumerate() {
                if t == h.activation_step {
                    let mut hr = rng::substream(seed, &[rng::tag::HOTSPOT, c as u64]);
                    let base = Hotspot {
                        region: h.region,
                        intensity: h.intensity,
                        users: vec![],
                    };
                    active[c] = Some(hotspot_activate(&base, &mut hr)?);
                }
            }
            let hotspot_users = active.iter().flatten().flat_map(|h| h.users.iter().copied()).collect();
            states.push(EnvState { t, ue, hotspot_users });
        }
        Ok(Self {
            seed,
            home_users,
            states,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Interferer (index >= 1) nearest to `p`.
pub fn nearest_interferer(scene: &Scene, p: &Vec3) -> Option<usize> {
    scene
        .transmitters
        .iter()
        .skip(1)
        .map(|tx| (tx.index, (tx.center - p).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
}

/// Hotspot users assigned to interferer `k` (nearest-interferer rule).
pub fn assigned_hotspot_users(scene: &Scene, state: &EnvState, k: usize) -> Vec<Vec3> {
    state
        .hotspot_users
        .iter()
        .filter(|p| nearest_interferer(scene, p) == Some(k))
        .copied()
        .collect()
}

/// Position transmitter `k` currently serves: the tagged UE for `k = 0`,
/// otherwise the nearest member of its active set (home user plus assigned hotspot users).
pub fn served_position(scene: &Scene, episode: &Episode, state: &EnvState, k: usize) -> Vec3 {
    if k == 0 {
        return state.ue.position;
    }
    let center = scene.transmitters[k].center;
    let mut best = episode.home_users[k];
    let mut best_d = (best - center).norm();
    for p in assigned_hotspot_users(scene, state, k) {
        let d = (p - center).norm();
        if d < best_d {
            best = p;
            best_d = d;
        }
    }
    best
}

/// Environment-level events of each link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkEvents {
    pub blockage_active: bool,
    pub hotspot_active: bool,
    pub hotspot_users: usize,
}

/// True channel state of every link at one step.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: usize,
    pub ue: Vec3,
    /// Transmitter `k` to the tagged UE.
    pub links: Vec<LinkChannel>,
    /// Transmitter `k` to the user it serves; entry 0 equals `links[0]`.
    pub own: Vec<LinkChannel>,
    pub served: Vec<Vec3>,
    pub events: Vec<LinkEvents>,
}

impl Snapshot {
    pub fn capture(scene: &Scene, episode: &Episode, t: usize) -> Result<Self> {
        let state = &episode.states[t];
        let u = state.ue.position;
        let n = scene.num_transmitters();
        let mut links = Vec::with_capacity(n);
        let mut own = Vec::with_capacity(n);
        let mut served = Vec::with_capacity(n);
        let mut events = Vec::with_capacity(n);
        for k in 0..n {
            let c = channel::synthesize(scene, k, &u, None)?;
            let sp = served_position(scene, episode, state, k);
            let oc = if k == 0 { c.clone() } else { channel::synthesize(scene, k, &sp, None)? };
            let hs = if k == 0 { 0 } else { assigned_hotspot_users(scene, state, k).len() };
            events.push(LinkEvents {
                blockage_active: c.blockage < 1.0,
                hotspot_active: hs > 0,
                hotspot_users: hs,
            });
            links.push(c);
            own.push(oc);
            served.push(sp);
        }
        Ok(Self {
            t,
            ue: u,
            links,
            own,
            served,
            events,
        })
    }

    pub fn regimes(&self) -> Vec<Regime> {
        self.links.iter().map(|c| c.regime).collect()
    }
}

/// Episode with the true channel snapshot of every step.
#[derive(Debug, Clone)]
pub struct Trace {
    pub episode: Episode,
    pub snapshots: Vec<Snapshot>,
}

impl Trace {
    pub fn build(scene: &Scene, spec: &ScenarioSpec, seed: u64, n_steps: usize) -> Result<Self> {
        let episode = Episode::roll(scene, spec, seed, n_steps)?;
        let snapshots = (0..n_steps)
            .map(|t| Snapshot::capture(scene, &episode, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { episode, snapshots })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

/// Unit-norm conjugate beam of every transmitter toward the user it serves;
/// the reference policy used to label dataset interference.
pub fn reference_beams(snapshot: &Snapshot) -> Vec<channel::CVec> {
    snapshot
        .own
        .iter()
        .map(|c| {
            let n = c.h.norm();
            if n > 0.0 {
                c.h.unscale(n)
            } else {
                c.h.clone()
            }
        })
        .collect()
}

/// Aggregate interference at the tagged UE, `sum_{k>=1} P_k |h_eff_k^H w_k|^2`.
pub fn interference_at(scene: &Scene, links: &[LinkChannel], beams: &[channel::CVec], powers: Option<&[f64]>) -> f64 {
    links
        .iter()
        .zip(beams)
        .enumerate()
        .skip(1)
        .map(|(k, (c, w))| {
            let p = powers.map(|p| p[k]).unwrap_or(scene.transmitters[k].tx_power);
            p * c.h_eff.dotc(w).norm_sqr()
        })
        .sum()
}

/// One windowed sample: history `t - T_h ..= t` and targets `t+1 ..= t+T`.
#[derive(Debug, Clone)]
pub struct DtSample {
    pub trace: Arc<Trace>,
    pub t: usize,
    pub history_len: usize,
    pub horizon: usize,
    /// Beams in effect when the targets were labelled.
    pub beams: Arc<Vec<channel::CVec>>,
    /// Aggregate interference per target step `tau = 1..=T`.
    pub interference: Vec<f64>,
}

impl DtSample {
    /// History snapshots, oldest first; length `T_h + 1`.
    pub fn history(&self) -> &[Snapshot] {
        &self.trace.snapshots[self.t + 1 - self.history_len..=self.t]
    }

    /// Target snapshots for `tau = 1..=T`.
    pub fn targets(&self) -> &[Snapshot] {
        &self.trace.snapshots[self.t + 1..=self.t + self.horizon]
    }

    pub fn current(&self) -> &Snapshot {
        &self.trace.snapshots[self.t]
    }
}

/// Dataset construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetParams {
    /// History window `T_h` (the window holds `T_h + 1` steps).
    pub history: usize,
    pub horizon: usize,
    pub t_sim: usize,
}

/// Windowed samples over one or more traces.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub params: DatasetParams,
    pub samples: Vec<DtSample>,
}

/// Build the windowed dataset of one episode: every `t` with a full history
/// and a full horizon inside `0..t_sim` yields one sample.
pub fn build_dataset(scene: &Scene, spec: &ScenarioSpec, params: DatasetParams, seed: u64) -> Result<Dataset> {
    if params.history + params.horizon >= params.t_sim {
        return Err(Error::HorizonTooLong {
            horizon: params.horizon,
            history: params.history,
            t_sim: params.t_sim,
        });
    }
    let trace = Arc::new(Trace::build(scene, spec, seed, params.t_sim)?);
    Ok(Dataset {
        params,
        samples: samples_from_trace(scene, &trace, params),
    })
}

pub fn samples_from_trace(scene: &Scene, trace: &Arc<Trace>, params: DatasetParams) -> Vec<DtSample> {
    let last = params.t_sim.min(trace.len());
    (params.history..last.saturating_sub(params.horizon))
        .map(|t| {
            let beams = Arc::new(reference_beams(&trace.snapshots[t]));
            let interference = (1..=params.horizon)
                .map(|tau| interference_at(scene, &trace.snapshots[t + tau].links, &beams, None))
                .collect();
            DtSample {
                trace: Arc::clone(trace),
                t,
                history_len: params.history + 1,
                horizon: params.horizon,
                beams,
                interference,
            }
        })
        .collect()
}

impl Dataset {
    pub fn merge(mut self, other: Dataset) -> Result<Dataset> {
        if self.params != other.params {
            return Err(Error::Dimension("cannot merge datasets with different windows".into()));
        }
        self.samples.extend(other.samples);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
