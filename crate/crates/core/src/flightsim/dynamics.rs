use serde::{Deserialize, Serialize};

use super::{DroneState, WindState};
use crate::config::DynamicsParams;
use crate::geom::{wrap_angle, Vec3};

/// World-frame velocity setpoint plus yaw rate (radians/s, counterclockwise).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub vel: Vec3,
    pub yaw_rate: f64,
}

impl VelocityCommand {
    pub const HOLD: VelocityCommand = VelocityCommand {
        vel: Vec3::ZERO,
        yaw_rate: 0.0,
    };

    pub fn is_zero(&self) -> bool {
        self.vel == Vec3::ZERO && self.yaw_rate == 0.0
    }
}

fn clamp_envelope(v: Vec3, p: &DynamicsParams) -> Vec3 {
    let h = v.horizontal().clamp_norm(p.max_horizontal_speed);
    Vec3::new(h.x, h.y, v.z.clamp(-p.max_vertical_speed, p.max_vertical_speed))
}

/// One velocity-tracking step. With a GPS fix the position controller
/// rejects wind completely; without one, wind acts as a raw acceleration.
pub fn step_dynamics(
    s: &DroneState,
    cmd: &VelocityCommand,
    wind: &WindState,
    p: &DynamicsParams,
    dt: f64,
) -> DroneState {
    let mut next = s.clone();
    if !s.airborne {
        return next;
    }
    let target = clamp_envelope(cmd.vel, p);
    let yaw_rate = cmd.yaw_rate.clamp(-p.max_yaw_rate, p.max_yaw_rate);

    let mut vel = s.vel + (target - s.vel) * (p.velocity_gain * dt);
    if s.gps_lost {
        vel += wind.current * dt;
    }
    vel = clamp_envelope(vel, p);

    let step = vel * dt;
    next.vel = vel;
    next.pos_true = s.pos_true + step;
    next.pos_est = s.pos_est + step;
    next.yaw = wrap_angle(s.yaw + yaw_rate * dt);
    next
}
