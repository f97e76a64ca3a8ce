use rand::Rng;
use rand_distr::StandardNormal;

use super::DroneState;
use crate::config::GpsParams;
use crate::geom::Vec3;
use crate::scenario::{FacadeFrame, FacadeRect};

/// Slew the GPS signal toward 0 inside any denied zone and toward 1 outside,
/// then grow or shrink the uncertainty radius and random-walk the estimate
/// within it.
pub fn update_gps<R: Rng + ?Sized>(
    s: &DroneState,
    zones: &[FacadeRect],
    frame: &FacadeFrame,
    p: &GpsParams,
    rng: &mut R,
    dt: f64,
) -> DroneState {
    let mut next = s.clone();
    let (u, v, w) = frame.to_local(s.pos_true);
    let denied = zones.iter().any(|z| z.contains(u, v, w));
    let target = if denied { 0.0 } else { 1.0 };
    let max_step = p.rate * dt;
    let delta = (target - s.gps_signal).clamp(-max_step, max_step);
    next.gps_signal = (s.gps_signal + delta).clamp(0.0, 1.0);
    next.gps_lost = next.gps_signal < p.lost_threshold;

    next.uncertainty_radius = if next.gps_lost {
        (s.uncertainty_radius + p.uncertainty_grow_rate * dt).min(p.uncertainty_cap_m)
    } else {
        (s.uncertainty_radius - p.uncertainty_decay_rate * dt).max(p.uncertainty_floor_m)
    };

    // horizontal estimate error only; the walk is fastest at the cap so a
    // good fix drifts slowly inside its small radius
    let sigma = p.walk_sigma * dt.sqrt() * (next.uncertainty_radius / p.uncertainty_cap_m);
    let nx: f64 = rng.sample(StandardNormal);
    let ny: f64 = rng.sample(StandardNormal);
    let offset = (s.pos_est - s.pos_true).horizontal() + Vec3::new(nx, ny, 0.0) * sigma;
    next.pos_est = s.pos_true + offset.clamp_norm(next.uncertainty_radius);
    next
}
