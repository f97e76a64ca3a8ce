//! Facade path planning and the waypoint autopilot.
//!
//! The path is a serpentine sweep: one row per layer, bottom to top, at a
//! fixed standoff from the facade, alternating direction each row. The
//! autopilot flies it at constant speed and pauses at every waypoint.

use serde::{Deserialize, Serialize};

use crate::config::{AutopilotParams, DynamicsParams};
use crate::error::GeometryError;
use crate::events::{DisengageCause, EngageRejection, Event};
use crate::flightsim::{required_rth_fraction, BatteryModel, DroneState, ReadingLevel, VelocityCommand};
use crate::geom::Vec3;
use crate::input::InputFrame;
use crate::scenario::ScenarioSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub pos: Vec3,
    pub layer: u32,
    pub facade_uv: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub waypoints: Vec<Waypoint>,
    pub cruise_speed: f64,
    pub pause_duration: f64,
    pub standoff: f64,
}

impl PathPlan {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}

/// Serpentine path over the selected facade.
pub fn generate_path(spec: &ScenarioSpec, p: &AutopilotParams) -> Result<PathPlan, GeometryError> {
    let frame = spec.facade_frame();
    if spec.layers == 0 || !(spec.col_spacing_m > 0.0) {
        return Err(GeometryError::Invalid("layers and column spacing must be positive".into()));
    }
    let cols = (frame.width / spec.col_spacing_m).ceil() as usize + 1;
    let step = frame.width / (cols - 1) as f64;
    let row_height = frame.height / spec.layers as f64;
    let boundary = spec.mission_boundary();

    let mut waypoints = Vec::with_capacity(cols * spec.layers as usize);
    for layer in 0..spec.layers {
        let v = (layer as f64 + 0.5) * row_height;
        for c in 0..cols {
            let col = if layer % 2 == 0 { c } else { cols - 1 - c };
            // last column pinned to the edge to avoid rounding drift
            let u = if col == cols - 1 { frame.width } else { col as f64 * step };
            let pos = frame.point_out(u, v, spec.standoff_distance_m);
            let index = waypoints.len();
            if !boundary.contains(pos) || pos.x <= boundary.min.x || pos.x >= boundary.max.x
                || pos.y <= boundary.min.y || pos.y >= boundary.max.y
            {
                return Err(GeometryError::PathOutsideBoundary {
                    index,
                    pos: pos.into(),
                });
            }
            waypoints.push(Waypoint {
                pos,
                layer,
                facade_uv: [u, v],
            });
        }
    }
    Ok(PathPlan {
        waypoints,
        cruise_speed: p.cruise_speed,
        pause_duration: p.pause_duration_s,
        standoff: spec.standoff_distance_m,
    })
}

/// Closest waypoint to the estimated position; ties go to the lower index.
pub fn nearest_waypoint(s: &DroneState, plan: &PathPlan) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, w) in plan.waypoints.iter().enumerate() {
        let d = w.pos.distance(s.pos_est);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Context the engage and interrupt rules need besides the drone itself.
#[derive(Debug, Clone, Copy)]
pub struct SafetyContext<'a> {
    pub battery: &'a BatteryModel,
    pub home: Vec3,
    pub params: &'a AutopilotParams,
}

impl SafetyContext<'_> {
    /// Battery fraction below which the autopilot must hand over.
    pub fn battery_floor(&self, s: &DroneState) -> f64 {
        self.battery
            .low_threshold
            .max(required_rth_fraction(s, self.battery, self.home))
    }
}

pub fn engage_rejection(s: &DroneState, plan: &PathPlan, ctx: &SafetyContext) -> Option<EngageRejection> {
    if !s.airborne {
        return Some(EngageRejection::NotAirborne);
    }
    if plan.is_empty() || nearest_waypoint(s, plan).1 >= ctx.params.engage_radius_m {
        return Some(EngageRejection::TooFarFromPath);
    }
    if s.gps_lost {
        return Some(EngageRejection::GpsLost);
    }
    if s.collision.worst() == ReadingLevel::Critical {
        return Some(EngageRejection::CollisionCritical);
    }
    if s.battery <= required_rth_fraction(s, ctx.battery, ctx.home) {
        return Some(EngageRejection::BatteryInsufficient);
    }
    None
}

pub fn can_engage(s: &DroneState, plan: &PathPlan, ctx: &SafetyContext) -> bool {
    engage_rejection(s, plan, ctx).is_none()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegPhase {
    Cruising,
    Pausing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutopilotState {
    pub engaged: bool,
    pub current_index: usize,
    pub phase: LegPhase,
    pub pause_remaining: f64,
    /// Waypoint whose pause finished on the latest command step.
    pub just_completed: Option<usize>,
}

impl Default for AutopilotState {
    fn default() -> Self {
        Self {
            engaged: false,
            current_index: 0,
            phase: LegPhase::Cruising,
            pause_remaining: 0.0,
            just_completed: None,
        }
    }
}

impl AutopilotState {
    /// Engage toward the nearest waypoint.
    pub fn engaged_at(s: &DroneState, plan: &PathPlan) -> Self {
        Self {
            engaged: true,
            current_index: nearest_waypoint(s, plan).0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutopilotStep {
    pub command: VelocityCommand,
    pub state: AutopilotState,
    pub events: Vec<Event>,
}

/// One autopilot control step.
///
/// While cruising, the commanded velocity leads the first-order airframe
/// response so the realized velocity lands on `cruise_speed` toward the
/// waypoint; once at speed the command is exactly that vector.
pub fn autopilot_command(
    a: &AutopilotState,
    s: &DroneState,
    plan: &PathPlan,
    p: &AutopilotParams,
    dyn_params: &DynamicsParams,
    dt: f64,
) -> AutopilotStep {
    let mut state = a.clone();
    state.just_completed = None;
    let mut events = Vec::new();
    if !a.engaged || plan.is_empty() {
        state.engaged = false;
        return AutopilotStep {
            command: VelocityCommand::HOLD,
            state,
            events,
        };
    }

    let command = match a.phase {
        LegPhase::Cruising => {
            let target = plan.waypoints[a.current_index].pos;
            let to_target = target - s.pos_est;
            if to_target.norm() < p.arrival_radius_m {
                state.phase = LegPhase::Pausing;
                state.pause_remaining = plan.pause_duration;
                events.push(Event::WaypointReached {
                    waypoint: a.current_index,
                });
                VelocityCommand::HOLD
            } else {
                let desired = to_target.normalized() * plan.cruise_speed;
                let lead = 1.0 / (dyn_params.velocity_gain * dt);
                VelocityCommand {
                    vel: s.vel + (desired - s.vel) * lead,
                    yaw_rate: 0.0,
                }
            }
        }
        LegPhase::Pausing => {
            state.pause_remaining = (a.pause_remaining - dt).max(0.0);
            if state.pause_remaining <= 1e-9 {
                state.pause_remaining = 0.0;
                state.just_completed = Some(a.current_index);
                if a.current_index + 1 >= plan.len() {
                    state.engaged = false;
                    events.push(Event::MissionComplete);
                } else {
                    state.current_index += 1;
                    state.phase = LegPhase::Cruising;
                }
            }
            VelocityCommand::HOLD
        }
    };
    AutopilotStep {
        command,
        state,
        events,
    }
}

/// Hand control back to the pilot on stick input or any safety issue.
pub fn apply_interrupts(
    a: &AutopilotState,
    s: &DroneState,
    input: &InputFrame,
    ctx: &SafetyContext,
) -> (AutopilotState, Vec<Event>) {
    if !a.engaged {
        return (a.clone(), Vec::new());
    }
    let cause = if input.exceeds_deadzone(ctx.params.stick_deadzone) {
        Some(DisengageCause::ManualInput)
    } else if s.gps_lost {
        Some(DisengageCause::GpsLost)
    } else if s.collision.worst() >= ReadingLevel::Warn {
        Some(DisengageCause::CollisionWarn)
    } else if s.battery < ctx.battery_floor(s) {
        Some(DisengageCause::BatteryLow)
    } else {
        None
    };
    match cause {
        Some(cause) => (
            AutopilotState {
                engaged: false,
                ..a.clone()
            },
            vec![Event::AutopilotDisengaged { cause }],
        ),
        None => (a.clone(), Vec::new()),
    }
}
