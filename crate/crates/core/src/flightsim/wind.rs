use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindParams {
    /// Largest induced acceleration, m/s^2.
    pub max_accel_mps2: f64,
    /// Rate at which the current vector moves toward the target, m/s^3.
    pub slew_mps3: f64,
    /// `[min, max]` seconds between target redraws.
    pub resample_interval_s: [f64; 2],
}

impl Default for WindParams {
    fn default() -> Self {
        Self {
            max_accel_mps2: 1.2,
            slew_mps3: 0.5,
            resample_interval_s: [4.0, 10.0],
        }
    }
}

/// Wind as an induced acceleration that slews toward a randomly redrawn target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindState {
    pub current: Vec3,
    pub target: Vec3,
    pub next_resample_at: f64,
    /// Simulated seconds since the wind started.
    pub clock: f64,
}

impl Default for WindState {
    fn default() -> Self {
        Self {
            current: Vec3::ZERO,
            target: Vec3::ZERO,
            next_resample_at: 0.0,
            clock: 0.0,
        }
    }
}

/// Largest vertical share of a redrawn target direction.
const MAX_VERTICAL: f64 = 0.1;

pub fn update_wind<R: Rng + ?Sized>(w: &WindState, p: &WindParams, rng: &mut R, dt: f64) -> WindState {
    let mut next = w.clone();
    if next.clock >= next.next_resample_at {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let vertical = rng.random_range(-MAX_VERTICAL..=MAX_VERTICAL);
        let magnitude = rng.random_range(0.0..=p.max_accel_mps2);
        let dir = Vec3::new(theta.cos(), theta.sin(), vertical).normalized();
        next.target = dir * magnitude;
        let [lo, hi] = p.resample_interval_s;
        next.next_resample_at += if hi > lo { rng.random_range(lo..=hi) } else { lo };
    }

    let delta = next.target - next.current;
    let step = p.slew_mps3 * dt;
    if delta.norm() <= step {
        next.current = next.target;
    } else {
        next.current += delta.normalized() * step;
    }
    next.clock += dt;
    next
}
