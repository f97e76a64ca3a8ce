//! A scripted pilot that flies the inspection path by hand.
//!
//! It sees the true drone pose (as a pilot with line of sight would),
//! flies each waypoint in order with a proportional controller on the
//! sticks, hovers until the waypoint is covered, clicks the projected pixel
//! of every defect as it comes into view, then returns home. The session is
//! driven exactly the way a script replay drives it, so the recorded frames
//! reproduce the flight.

use crate::config::{DynamicsParams, EngineConfig};
use crate::error::GeometryError;
use crate::flightsim::{DroneState, FlightPhase};
use crate::geom::{wrap_angle, Vec3};
use crate::hud::InterfaceMode;
use crate::input::{InputFrame, AXIS_PITCH, AXIS_ROLL, AXIS_THROTTLE, AXIS_YAW};
use crate::mission::{facade_hit, project_point};
use crate::scenario::ScenarioSpec;
use crate::script::Script;
use crate::session::Session;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotParams {
    /// Stick command per meter of position error, 1/s.
    pub position_gain: f64,
    pub yaw_gain: f64,
    /// Stick resolution; coarser steps make sparser scripts.
    pub stick_step: f64,
    pub mark_defects: bool,
}

impl Default for PilotParams {
    fn default() -> Self {
        Self {
            position_gain: 2.0,
            yaw_gain: 2.0,
            stick_step: 0.01,
            mark_defects: true,
        }
    }
}

fn quantize(x: f64, step: f64) -> f64 {
    let q = ((x / step).round() / (1.0 / step)).clamp(-1.0, 1.0);
    // keep -0.0 out of the script
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stage {
    TakeOff,
    Climb,
    Survey(usize),
    Home,
}

/// Stick deflections that fly `s` toward `target` on its true position
/// while turning to `heading`.
pub fn steer_sticks(s: &DroneState, target: Vec3, heading: f64, dynp: &DynamicsParams, p: &PilotParams) -> [f64; 4] {
    let want = (target - s.pos_true) * p.position_gain;
    let h = want.horizontal().clamp_norm(dynp.max_horizontal_speed);
    let vz = want.z.clamp(-dynp.max_vertical_speed, dynp.max_vertical_speed);
    let (sn, cs) = s.yaw.sin_cos();
    let fwd = Vec3::new(cs, sn, 0.0);
    let right = Vec3::new(sn, -cs, 0.0);
    let yaw_rate = (wrap_angle(heading - s.yaw) * p.yaw_gain).clamp(-dynp.max_yaw_rate, dynp.max_yaw_rate);
    let mut sticks = [0.0; 4];
    sticks[AXIS_PITCH] = quantize(h.dot(fwd) / dynp.max_horizontal_speed, p.stick_step);
    sticks[AXIS_ROLL] = quantize(h.dot(right) / dynp.max_horizontal_speed, p.stick_step);
    sticks[AXIS_THROTTLE] = quantize(vz / dynp.max_vertical_speed, p.stick_step);
    sticks[AXIS_YAW] = quantize(-yaw_rate / dynp.max_yaw_rate, p.stick_step);
    sticks
}

/// Fly the whole mission and return the sparse script that reproduces it.
pub fn fly_perfect_mission(
    spec: &ScenarioSpec,
    config: &EngineConfig,
    mode: InterfaceMode,
    p: &PilotParams,
) -> Result<Script, GeometryError> {
    let mut session = Session::new(spec.clone(), config.clone(), mode)?;
    let frame = spec.facade_frame();
    let facing = frame.facing_yaw();
    let dynp = &config.dynamics;
    let mut marked = vec![false; spec.defects.len()];
    let mut frames: Vec<InputFrame> = Vec::new();
    let mut held = [0.0; 4];
    let mut stage = Stage::TakeOff;

    while session.ended().is_none() {
        let tick = session.tick();
        let s = session.drone().clone();
        let mut f = InputFrame::idle(tick);
        f.sticks = held;

        match stage {
            Stage::TakeOff => {
                f.buttons.takeoff = true;
                stage = Stage::Climb;
            }
            Stage::Climb => {
                if s.phase == FlightPhase::Flying {
                    stage = Stage::Survey(0);
                }
            }
            Stage::Survey(k) if k >= session.plan().len() => {
                f.sticks = [0.0; 4];
                f.buttons.rth = true;
                stage = Stage::Home;
            }
            Stage::Survey(k) => {
                if session.coverage().covered[k] {
                    stage = Stage::Survey(k + 1);
                }
                let target = session.plan().waypoints[k.min(session.plan().len() - 1)].pos;
                f.sticks = steer_sticks(&s, target, facing, dynp, p);
            }
            Stage::Home => {
                f.sticks = [0.0; 4];
            }
        }

        if p.mark_defects && s.airborne && s.phase == FlightPhase::Flying {
            let hit = spec.defects.iter().enumerate().find_map(|(i, d)| {
                if marked[i] {
                    return None;
                }
                let px = project_point(&s, frame.point(d.center_m[0], d.center_m[1]), &config.camera)?;
                // only click when the ray provably lands inside the defect
                let [u, v] = facade_hit(&s, px, &frame, &config.camera).ok()?;
                ((u - d.center_m[0]).hypot(v - d.center_m[1]) <= d.radius_m * 0.5).then_some((i, px))
            });
            if let Some((i, px)) = hit {
                marked[i] = true;
                f.mark = Some(px);
            }
        }

        let changed = f.buttons.any() || f.mark.is_some() || f.sticks != held;
        held = f.sticks;
        if changed {
            frames.push(f.clone());
            session.step(Some(f));
        } else {
            session.step(None);
        }
    }
    Ok(Script::for_scenario(spec, frames))
}
