//! Built-in indoor layout: a 10 x 10 x 3 m room with the serving AP on the
//! ceiling, two desk-level interferers within a Rayleigh distance of the UE's
//! working area, and ten more around the room in the far field.

use crate::dynamics::{HotspotSpec, ScenarioSpec};
use crate::geometry::Aabb;
use crate::scene::{SceneConfig, TransmitterConfig};

fn tx(center: [f64; 3], toward: [f64; 3]) -> TransmitterConfig {
    let b = [toward[0] - center[0], toward[1] - center[1], toward[2] - center[2]];
    TransmitterConfig {
        center,
        nx: 16,
        ny: 16,
        spacing: None,
        boresight: b,
        tx_power_dbm: 0.0,
    }
}

/// Work area the UE moves through.
pub const WORK_AREA: [f64; 3] = [5.0, 5.0, 1.1];

pub fn default_scene() -> SceneConfig {
    let w = WORK_AREA;
    let mut transmitters = vec![
        tx([5.0, 5.0, 2.9], [5.0, 5.0, 0.0]),
        tx([5.0, 4.55, 1.1], [5.0, 6.0, 1.1]),
        tx([5.5, 5.0, 1.1], [4.0, 5.0, 1.1]),
    ];
    let far = [
        [4.0, 5.6, 1.3],
        [6.0, 4.3, 1.3],
        [4.2, 4.1, 1.6],
        [6.0, 6.0, 1.6],
        [3.5, 5.0, 2.2],
        [5.0, 3.4, 2.2],
        [2.0, 2.0, 1.5],
        [8.0, 8.0, 1.5],
        [2.0, 8.0, 1.5],
        [8.5, 5.0, 1.5],
    ];
    transmitters.extend(far.iter().map(|c| tx(*c, w)));
    SceneConfig {
        carrier_frequency: 100e9,
        room: Aabb::new([0.0, 0.0, 0.0], [10.0, 10.0, 3.0]),
        blockage_attenuation: 0.01,
        scatterers_per_link: 2,
        transmitters,
        obstacles: vec![
            // suspended duct partly shadowing the serving link over the work area
            Aabb::new([5.02, 4.0, 2.0], [6.0, 6.0, 2.2]),
            // shelving between the work area and the east side of the room
            Aabb::new([6.8, 3.0, 0.0], [7.1, 7.0, 2.0]),
        ],
    }
}

pub fn default_scenario() -> ScenarioSpec {
    ScenarioSpec {
        ue_start: Aabb::new([4.95, 4.9, 1.0], [5.0, 5.0, 1.2]),
        speed_min: 0.5,
        v_max: 1.0,
        heading: 0.0,
        heading_spread: 0.5,
        noise_sigma: 0.01,
        dt: 1e-3,
        home_user_range: [0.2, 0.4],
        home_user_lateral: 0.15,
        hotspots: vec![HotspotSpec {
            region: Aabb::new([4.8, 4.65, 1.0], [5.2, 4.8, 1.2]),
            intensity: 3.0,
            activation_step: 55,
        }],
    }
}
