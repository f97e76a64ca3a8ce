//! Engine configuration: every tunable that is not part of a scenario.
//!
//! Loaded from a `.engine.json` document of the same family as scenarios.
//! Every field has a default, so `{}` is a valid document.

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::error::DocumentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub tick_rate_hz: f64,
    pub dynamics: DynamicsParams,
    pub gps: GpsParams,
    pub sensing: SensingParams,
    pub battery: BatteryParams,
    pub autopilot: AutopilotParams,
    pub coverage: CoverageParams,
    pub hud: HudParams,
    pub camera: CameraModel,
    /// Extra simulated seconds, beyond the battery duration, before an idle
    /// session times out.
    pub timeout_grace_s: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            tick_rate_hz: 50.0,
            dynamics: DynamicsParams::default(),
            gps: GpsParams::default(),
            sensing: SensingParams::default(),
            battery: BatteryParams::default(),
            autopilot: AutopilotParams::default(),
            coverage: CoverageParams::default(),
            hud: HudParams::default(),
            camera: CameraModel::default(),
            timeout_grace_s: 30.0,
        }
    }
}

impl EngineConfig {
    pub fn dt(&self) -> f64 {
        1.0 / self.tick_rate_hz
    }

    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let cfg: EngineConfig = canonical::from_str(text)?;
        if !(cfg.tick_rate_hz > 0.0) {
            return Err(DocumentError::Schema {
                path: "tick_rate_hz".into(),
                message: "must be > 0".into(),
            });
        }
        Ok(cfg)
    }

    pub fn emit(&self) -> String {
        canonical::to_pretty(self)
    }

    pub fn digest(&self) -> String {
        canonical::sha256_hex(self.emit().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsParams {
    /// First-order velocity tracking gain, 1/s.
    pub velocity_gain: f64,
    pub max_horizontal_speed: f64,
    pub max_vertical_speed: f64,
    pub max_yaw_rate: f64,
    pub takeoff_altitude_m: f64,
    pub takeoff_climb_speed: f64,
    /// Touchdowns faster than this vertically are crashes.
    pub safe_touchdown_speed: f64,
    /// Collision radius of the airframe, m.
    pub drone_radius_m: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            velocity_gain: 4.0,
            max_horizontal_speed: 5.0,
            max_vertical_speed: 3.0,
            max_yaw_rate: 1.5,
            takeoff_altitude_m: 2.0,
            takeoff_climb_speed: 1.5,
            safe_touchdown_speed: 2.0,
            drone_radius_m: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpsParams {
    /// Max signal change per second.
    pub rate: f64,
    pub lost_threshold: f64,
    pub uncertainty_grow_rate: f64,
    pub uncertainty_cap_m: f64,
    pub uncertainty_decay_rate: f64,
    pub uncertainty_floor_m: f64,
    /// Standard deviation of the estimate random walk at the uncertainty
    /// cap, m per sqrt(s); it scales with the current radius.
    pub walk_sigma: f64,
}

impl Default for GpsParams {
    fn default() -> Self {
        Self {
            rate: 0.25,
            lost_threshold: 0.4,
            uncertainty_grow_rate: 0.4,
            uncertainty_cap_m: 3.0,
            uncertainty_decay_rate: 1.0,
            uncertainty_floor_m: 0.05,
            walk_sigma: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingParams {
    pub warn_distance_m: f64,
    pub critical_distance_m: f64,
    pub max_range_m: f64,
    /// Rays cast per horizontal sector.
    pub rays_per_sector: u32,
}

impl Default for SensingParams {
    fn default() -> Self {
        Self {
            warn_distance_m: 5.0,
            critical_distance_m: 2.0,
            max_range_m: 20.0,
            rays_per_sector: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryParams {
    pub low_threshold: f64,
    pub critical_threshold: f64,
    /// Battery fraction at which the whole RTH path turns red.
    pub land_floor: f64,
    pub rth_speed: f64,
    pub land_speed: f64,
    pub rth_margin_s: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            low_threshold: 0.25,
            critical_threshold: 0.10,
            land_floor: 0.05,
            rth_speed: 5.0,
            land_speed: 1.5,
            rth_margin_s: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutopilotParams {
    pub cruise_speed: f64,
    pub pause_duration_s: f64,
    pub arrival_radius_m: f64,
    pub engage_radius_m: f64,
    pub stick_deadzone: f64,
}

impl Default for AutopilotParams {
    fn default() -> Self {
        Self {
            cruise_speed: 2.0,
            pause_duration_s: 2.0,
            arrival_radius_m: 0.3,
            engage_radius_m: 3.0,
            stick_deadzone: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageParams {
    pub hold_radius_m: f64,
    pub hold_time_s: f64,
}

impl Default for CoverageParams {
    fn default() -> Self {
        Self {
            hold_radius_m: 0.5,
            hold_time_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HudParams {
    pub gaze_full_rad: f64,
    pub gaze_faded_rad: f64,
    pub gaze_min_alpha: f64,
    /// Pilot eye height above the home point, m.
    pub pilot_eye_height_m: f64,
    pub disc_max_alpha: f64,
    /// Uncertainty radius at which the disc alpha halves.
    pub disc_half_alpha_radius_m: f64,
}

impl Default for HudParams {
    fn default() -> Self {
        Self {
            gaze_full_rad: 0.15,
            gaze_faded_rad: 0.6,
            gaze_min_alpha: 0.25,
            pilot_eye_height_m: 1.7,
            disc_max_alpha: 0.6,
            disc_half_alpha_radius_m: 1.0,
        }
    }
}

/// Pinhole drone camera aimed along yaw with zero gimbal pitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    pub horizontal_fov_rad: f64,
    /// Width over height.
    pub aspect: f64,
}

impl CameraModel {
    pub fn tan_half_h(&self) -> f64 {
        (self.horizontal_fov_rad * 0.5).tan()
    }

    pub fn tan_half_v(&self) -> f64 {
        self.tan_half_h() / self.aspect
    }
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            horizontal_fov_rad: 70f64.to_radians(),
            aspect: 16.0 / 9.0,
        }
    }
}
