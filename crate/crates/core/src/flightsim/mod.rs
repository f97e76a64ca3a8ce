//! Fixed-timestep drone physics and safety signals.
//!
//! Every update is a pure function of its inputs plus an explicit random
//! stream, so equal seeds give bit-identical trajectories.

mod battery;
mod dynamics;
mod gps;
mod sensing;
mod wind;

use serde::{Deserialize, Serialize};

pub use battery::{required_rth_fraction, update_battery, BatteryModel};
pub use dynamics::{step_dynamics, VelocityCommand};
pub use gps::update_gps;
pub use sensing::{sector_bearing, sense_collisions, CollisionReadings, Reading, ReadingLevel, SECTORS};
pub use wind::{update_wind, WindParams, WindState};

use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Manual,
    Autopilot,
}

/// Coarse flight phase, including the automated take-off and RTH sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlightPhase {
    Grounded,
    TakingOff,
    Flying,
    ReturningHome,
    Landing,
    Landed,
    Crashed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub pos_true: Vec3,
    pub vel: Vec3,
    pub yaw: f64,
    /// GPS-derived estimate; drives every drone-centered visual.
    pub pos_est: Vec3,
    pub gps_signal: f64,
    pub gps_lost: bool,
    pub uncertainty_radius: f64,
    pub battery: f64,
    pub airborne: bool,
    pub control_mode: ControlMode,
    pub phase: FlightPhase,
    pub collision: CollisionReadings,
}

impl DroneState {
    /// Parked at `home` with a full battery and a clean GPS fix.
    pub fn on_ground(home: Vec3, yaw: f64, uncertainty_floor: f64) -> Self {
        Self {
            pos_true: home,
            vel: Vec3::ZERO,
            yaw,
            pos_est: home,
            gps_signal: 1.0,
            gps_lost: false,
            uncertainty_radius: uncertainty_floor,
            battery: 1.0,
            airborne: false,
            control_mode: ControlMode::Manual,
            phase: FlightPhase::Grounded,
            collision: CollisionReadings::clear(),
        }
    }

    pub fn estimate_error(&self) -> f64 {
        self.pos_est.distance(self.pos_true)
    }
}
