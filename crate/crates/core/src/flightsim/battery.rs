use serde::{Deserialize, Serialize};

use super::DroneState;
use crate::config::BatteryParams;
use crate::geom::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryModel {
    pub full_duration_s: f64,
    pub low_threshold: f64,
    pub critical_threshold: f64,
    pub land_floor: f64,
    pub rth_speed: f64,
    pub land_speed: f64,
    pub rth_margin_s: f64,
}

impl BatteryModel {
    pub fn new(full_duration_s: f64, p: &BatteryParams) -> Self {
        Self {
            full_duration_s,
            low_threshold: p.low_threshold,
            critical_threshold: p.critical_threshold,
            land_floor: p.land_floor,
            rth_speed: p.rth_speed,
            land_speed: p.land_speed,
            rth_margin_s: p.rth_margin_s,
        }
    }
}

/// Linear drain while airborne, floored at zero.
pub fn update_battery(s: &DroneState, m: &BatteryModel, dt: f64) -> DroneState {
    let mut next = s.clone();
    if s.airborne {
        next.battery = (s.battery - dt / m.full_duration_s).max(0.0);
    }
    next
}

/// Battery fraction needed to fly home horizontally, descend, and keep a
/// fixed margin.
pub fn required_rth_fraction(s: &DroneState, m: &BatteryModel, home: Vec3) -> f64 {
    let horizontal = (s.pos_est - home).horizontal().norm();
    let altitude = (s.pos_est.z - home.z).max(0.0);
    let seconds = horizontal / m.rth_speed + altitude / m.land_speed + m.rth_margin_s;
    (seconds / m.full_duration_s).clamp(0.0, 1.0)
}
