//! The fixed-order tick loop that ties the subsystems together.
//!
//! Per tick: apply the pilot input (marks against the pre-step state,
//! buttons, interrupts), pick a velocity command, advance wind, dynamics,
//! GPS, battery and sensing, resolve contacts, update coverage and the
//! view, then compose the HUD frame and the telemetry record.

use rand_chacha::ChaCha8Rng;

use crate::autopilot::{
    apply_interrupts, autopilot_command, engage_rejection, generate_path, AutopilotState, PathPlan, SafetyContext,
};
use crate::config::EngineConfig;
use crate::error::GeometryError;
use crate::events::{CrashCause, DisengageCause, EndReason, EngageRejection, Event};
use crate::flightsim::{
    sense_collisions, step_dynamics, update_battery, update_gps, update_wind, BatteryModel, CollisionReadings,
    ControlMode, DroneState, FlightPhase, ReadingLevel, VelocityCommand, WindState,
};
use crate::geom::Vec3;
use crate::hud::{active_issues, compose_hud_frame, transition_view, HudFrame, HudInputs, InterfaceMode, ViewObservation, ViewState};
use crate::input::{InputFrame, AXIS_PITCH, AXIS_ROLL, AXIS_THROTTLE, AXIS_YAW};
use crate::mission::{mark_defect, path_deviation, score_marks, update_coverage, CoverageMap, Mark, Metrics};
use crate::rng::{stream, Stream};
use crate::scenario::{FacadeFrame, ScenarioSpec};
use crate::telemetry::TelemetryRecord;

/// Horizontal distance at which return-to-home switches to the descent.
const RTH_ARRIVAL_M: f64 = 0.5;
const TAKEOFF_TOLERANCE_M: f64 = 0.02;
const TAKEOFF_GAIN: f64 = 2.0;
const TAKEOFF_MIN_CLIMB: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub record: TelemetryRecord,
    pub frame: HudFrame,
}

#[derive(Debug, Clone)]
pub struct Session {
    spec: ScenarioSpec,
    config: EngineConfig,
    mode: InterfaceMode,
    plan: PathPlan,
    battery: BatteryModel,
    frame: FacadeFrame,
    drone: DroneState,
    autopilot: AutopilotState,
    wind: WindState,
    wind_rng: ChaCha8Rng,
    gps_rng: ChaCha8Rng,
    view: ViewState,
    coverage: CoverageMap,
    marks: Vec<Mark>,
    tick: u64,
    last_input: InputFrame,
    ended: Option<EndReason>,
    entered_boundary: bool,
    mission_complete: bool,
    track: Vec<Vec3>,
    disengages: usize,
    airborne_ticks: u64,
    low_fired: bool,
    critical_fired: bool,
}

impl Session {
    pub fn new(spec: ScenarioSpec, config: EngineConfig, mode: InterfaceMode) -> Result<Self, GeometryError> {
        let plan = generate_path(&spec, &config.autopilot)?;
        let frame = spec.facade_frame();
        let battery = BatteryModel::new(spec.battery_full_duration_s, &config.battery);
        let drone = DroneState::on_ground(spec.home_point_m, frame.facing_yaw(), config.gps.uncertainty_floor_m);
        let coverage = CoverageMap::new(&plan, &frame, &config.camera);
        Ok(Self {
            wind_rng: stream(spec.seed, Stream::Wind),
            gps_rng: stream(spec.seed, Stream::Gps),
            spec,
            config,
            mode,
            plan,
            battery,
            frame,
            drone,
            autopilot: AutopilotState::default(),
            wind: WindState::default(),
            view: ViewState::default(),
            coverage,
            marks: Vec::new(),
            tick: 0,
            last_input: InputFrame::idle(0),
            ended: None,
            entered_boundary: false,
            mission_complete: false,
            track: Vec::new(),
            disengages: 0,
            airborne_ticks: 0,
            low_fired: false,
            critical_fired: false,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn mode(&self) -> InterfaceMode {
        self.mode
    }

    pub fn plan(&self) -> &PathPlan {
        &self.plan
    }

    pub fn battery_model(&self) -> &BatteryModel {
        &self.battery
    }

    pub fn drone(&self) -> &DroneState {
        &self.drone
    }

    pub fn autopilot(&self) -> &AutopilotState {
        &self.autopilot
    }

    pub fn wind(&self) -> &WindState {
        &self.wind
    }

    pub fn view(&self) -> &ViewState {
        &self.view
    }

    pub fn coverage(&self) -> &CoverageMap {
        &self.coverage
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    /// Index of the next tick to run.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn ended(&self) -> Option<EndReason> {
        self.ended
    }

    pub fn max_ticks(&self) -> u64 {
        ((self.spec.battery_full_duration_s + self.config.timeout_grace_s) * self.config.tick_rate_hz).ceil() as u64
    }

    fn safety(&self) -> SafetyContext<'_> {
        SafetyContext {
            battery: &self.battery,
            home: self.spec.home_point_m,
            params: &self.config.autopilot,
        }
    }

    fn disengage(&mut self, cause: DisengageCause, events: &mut Vec<Event>) {
        if self.autopilot.engaged {
            self.autopilot.engaged = false;
            self.drone.control_mode = ControlMode::Manual;
            self.disengages += 1;
            events.push(Event::AutopilotDisengaged { cause });
        }
    }

    fn handle_buttons(&mut self, input: &InputFrame, events: &mut Vec<Event>) -> bool {
        let b = input.buttons;
        if b.takeoff && self.drone.phase == FlightPhase::Grounded {
            self.drone.phase = FlightPhase::TakingOff;
            self.drone.airborne = true;
            events.push(Event::TakeOff);
        }
        if b.rth && self.drone.airborne {
            match self.drone.phase {
                FlightPhase::Flying | FlightPhase::TakingOff => {
                    self.disengage(DisengageCause::ManualInput, events);
                    self.drone.phase = FlightPhase::ReturningHome;
                    events.push(Event::RthStarted);
                }
                FlightPhase::ReturningHome | FlightPhase::Landing => {
                    self.drone.phase = FlightPhase::Flying;
                    events.push(Event::RthCancelled);
                }
                _ => {}
            }
        }
        let mut clicked = false;
        if b.autopilot_toggle {
            if self.autopilot.engaged {
                self.disengage(DisengageCause::ManualInput, events);
            } else {
                let rejection = match self.drone.phase {
                    FlightPhase::Flying => engage_rejection(&self.drone, &self.plan, &self.safety()),
                    FlightPhase::TakingOff | FlightPhase::ReturningHome | FlightPhase::Landing => {
                        Some(EngageRejection::AutomatedManeuver)
                    }
                    _ => Some(EngageRejection::NotAirborne),
                };
                match rejection {
                    None => {
                        self.autopilot = AutopilotState::engaged_at(&self.drone, &self.plan);
                        self.drone.control_mode = ControlMode::Autopilot;
                        events.push(Event::AutopilotEngaged {
                            waypoint: self.autopilot.current_index,
                        });
                        clicked = true;
                    }
                    Some(reason) => events.push(Event::AutopilotRejected { reason }),
                }
            }
        }
        clicked
    }

    fn manual_command(&self, input: &InputFrame) -> VelocityCommand {
        let p = &self.config.dynamics;
        let (s, c) = self.drone.yaw.sin_cos();
        let fwd = Vec3::new(c, s, 0.0);
        let right = Vec3::new(s, -c, 0.0);
        let sticks = input.sticks;
        let h = (fwd * sticks[AXIS_PITCH] + right * sticks[AXIS_ROLL]) * p.max_horizontal_speed;
        VelocityCommand {
            vel: Vec3::new(h.x, h.y, sticks[AXIS_THROTTLE] * p.max_vertical_speed),
            yaw_rate: -sticks[AXIS_YAW] * p.max_yaw_rate,
        }
    }

    fn rth_command(&mut self) -> VelocityCommand {
        let home = self.spec.home_point_m;
        let err = (home - self.drone.pos_est).horizontal();
        match self.drone.phase {
            FlightPhase::ReturningHome => {
                if err.norm() < RTH_ARRIVAL_M {
                    self.drone.phase = FlightPhase::Landing;
                    return self.rth_command();
                }
                VelocityCommand {
                    vel: err.clamp_norm(self.battery.rth_speed),
                    yaw_rate: 0.0,
                }
            }
            _ => {
                let h = err.clamp_norm(1.0);
                VelocityCommand {
                    vel: Vec3::new(h.x, h.y, -self.battery.land_speed),
                    yaw_rate: 0.0,
                }
            }
        }
    }

    fn command(&mut self, input: &InputFrame, events: &mut Vec<Event>) -> VelocityCommand {
        let dt = self.config.dt();
        match self.drone.phase {
            FlightPhase::TakingOff => {
                let p = &self.config.dynamics;
                let remaining = self.spec.home_point_m.z + p.takeoff_altitude_m - self.drone.pos_true.z;
                if remaining <= TAKEOFF_TOLERANCE_M {
                    self.drone.phase = FlightPhase::Flying;
                    VelocityCommand::HOLD
                } else {
                    // ease into the hover instead of overshooting it
                    let vz = (remaining * TAKEOFF_GAIN).clamp(TAKEOFF_MIN_CLIMB, p.takeoff_climb_speed);
                    VelocityCommand {
                        vel: Vec3::new(0.0, 0.0, vz),
                        yaw_rate: 0.0,
                    }
                }
            }
            FlightPhase::Flying if self.autopilot.engaged => {
                let step = autopilot_command(
                    &self.autopilot,
                    &self.drone,
                    &self.plan,
                    &self.config.autopilot,
                    &self.config.dynamics,
                    dt,
                );
                self.autopilot = step.state;
                if step.events.contains(&Event::MissionComplete) {
                    self.mission_complete = true;
                    self.drone.control_mode = ControlMode::Manual;
                }
                events.extend(step.events);
                step.command
            }
            FlightPhase::Flying => self.manual_command(input),
            FlightPhase::ReturningHome | FlightPhase::Landing => self.rth_command(),
            _ => VelocityCommand::HOLD,
        }
    }

    /// Ground touchdown or collision with the building or an obstacle.
    fn resolve_contact(&mut self, events: &mut Vec<Event>) -> Option<EndReason> {
        if !self.drone.airborne {
            return None;
        }
        let p = self.drone.pos_true;
        let radius = self.config.dynamics.drone_radius_m;
        let cause = if self.spec.building().inflate(radius).contains(p) {
            Some(CrashCause::Building)
        } else if self.spec.obstacles.iter().any(|o| o.volume.inflate(radius).contains(p)) {
            Some(CrashCause::Obstacle)
        } else if p.z <= 0.0 && self.drone.phase != FlightPhase::TakingOff {
            if -self.drone.vel.z <= self.config.dynamics.safe_touchdown_speed {
                self.drone.pos_true.z = 0.0;
                self.drone.pos_est.z = 0.0;
                self.drone.vel = Vec3::ZERO;
                self.drone.airborne = false;
                self.drone.phase = FlightPhase::Landed;
                self.drone.collision = CollisionReadings::clear();
                events.push(Event::Landed);
                return Some(EndReason::Landed);
            }
            Some(CrashCause::Ground)
        } else {
            None
        };
        let cause = cause?;
        self.drone.vel = Vec3::ZERO;
        self.drone.airborne = false;
        self.drone.phase = FlightPhase::Crashed;
        if cause == CrashCause::Ground {
            self.drone.pos_true.z = 0.0;
        }
        events.push(Event::Crash { cause });
        Some(EndReason::Crashed)
    }

    fn signal_edges(&mut self, pre: &DroneState, events: &mut Vec<Event>) {
        let s = &self.drone;
        if s.gps_lost && !pre.gps_lost {
            events.push(Event::GpsLost);
        } else if !s.gps_lost && pre.gps_lost {
            events.push(Event::GpsRecovered);
        }
        let level = s.collision.worst();
        if level != pre.collision.worst() {
            events.push(Event::CollisionLevel { level });
        }
        if !self.low_fired && s.battery <= self.battery.low_threshold {
            self.low_fired = true;
            events.push(Event::BatteryLow);
        }
        if !self.critical_fired && s.battery <= self.battery.critical_threshold {
            self.critical_fired = true;
            events.push(Event::BatteryCritical);
        }
    }

    /// Run one tick. `None` repeats the previous axes and gaze with no
    /// button edges and no mark. Returns `None` once the mission has ended.
    pub fn step(&mut self, input: Option<InputFrame>) -> Option<TickOutput> {
        if self.ended.is_some() {
            return None;
        }
        let dt = self.config.dt();
        let tick = self.tick;
        let input = match input {
            Some(f) => InputFrame { tick, ..f }.sanitized(),
            None => self.last_input.held(tick),
        };
        let mut events = Vec::new();
        let pre = self.drone.clone();

        if let (Some(pixel), true) = (input.mark, pre.airborne) {
            let mark = mark_defect(&pre, pixel, &self.spec, &self.config.camera, tick as f64 * dt);
            events.push(Event::DefectMarked { mark: mark.clone() });
            self.marks.push(mark);
        }

        let clicked = self.handle_buttons(&input, &mut events);
        if self.autopilot.engaged && !clicked {
            let (a, ev) = apply_interrupts(&self.autopilot, &self.drone, &input, &self.safety());
            if !a.engaged {
                self.autopilot = a;
                self.drone.control_mode = ControlMode::Manual;
                self.disengages += ev.len();
                events.extend(ev);
            }
        }
        if matches!(self.drone.phase, FlightPhase::ReturningHome | FlightPhase::Landing)
            && input.exceeds_deadzone(self.config.autopilot.stick_deadzone)
        {
            self.drone.phase = FlightPhase::Flying;
            events.push(Event::RthCancelled);
        }

        let cmd = self.command(&input, &mut events);
        let before_physics = self.drone.clone();
        self.wind = update_wind(&self.wind, &self.spec.wind, &mut self.wind_rng, dt);
        self.drone = step_dynamics(&self.drone, &cmd, &self.wind, &self.config.dynamics, dt);
        self.drone = update_gps(
            &self.drone,
            &self.spec.gps_zones,
            &self.frame,
            &self.config.gps,
            &mut self.gps_rng,
            dt,
        );
        self.drone = update_battery(&self.drone, &self.battery, dt);
        self.drone.collision = if self.drone.airborne {
            sense_collisions(&self.drone, &self.spec, &self.config.sensing)
        } else {
            CollisionReadings::clear()
        };
        self.signal_edges(&before_physics, &mut events);

        let mut end = self.resolve_contact(&mut events);
        if self.drone.airborne {
            self.airborne_ticks += 1;
            self.track.push(self.drone.pos_true);
        }

        let (coverage, newly) = update_coverage(
            &self.coverage,
            &self.drone,
            &self.autopilot,
            &self.plan,
            &self.config.coverage,
            dt,
        );
        self.coverage = coverage;
        events.extend(newly.into_iter().map(|waypoint| Event::WaypointCovered { waypoint }));
        if !self.mission_complete && self.coverage.complete() {
            self.mission_complete = true;
            if !events.contains(&Event::MissionComplete) {
                events.push(Event::MissionComplete);
            }
        }

        let in_boundary = self.drone.airborne && self.spec.mission_boundary().contains(self.drone.pos_true);
        if in_boundary && !self.entered_boundary {
            self.entered_boundary = true;
            events.push(Event::EnteredBoundary);
        }
        let obs = ViewObservation {
            issues: active_issues(&self.drone, &self.autopilot, &self.battery, self.spec.home_point_m),
            in_boundary,
            autopilot_clicked: clicked,
        };
        let view = transition_view(&self.view, &obs);
        if view.phase != self.view.phase {
            events.push(Event::ViewChanged {
                from: self.view.phase,
                to: view.phase,
            });
        }
        self.view = view;

        if end.is_none() {
            if self.drone.airborne && self.drone.battery <= 0.0 {
                end = Some(EndReason::BatteryDepleted);
            } else if tick + 1 >= self.max_ticks() {
                end = Some(EndReason::Timeout);
            }
        }
        if let Some(reason) = end {
            self.ended = Some(reason);
            events.push(Event::MissionEnd { reason });
        }

        let frame = compose_hud_frame(HudInputs {
            mode: self.mode,
            view: &self.view,
            drone: &self.drone,
            autopilot: &self.autopilot,
            plan: &self.plan,
            spec: &self.spec,
            battery: &self.battery,
            coverage: &self.coverage,
            marks: &self.marks,
            gaze: input.gaze.as_ref(),
            config: &self.config,
            mission_complete: self.mission_complete,
        });
        let record = TelemetryRecord {
            tick,
            input: input.clone(),
            drone: self.drone.clone(),
            autopilot: self.autopilot.clone(),
            view: self.view.clone(),
            events,
            hud_element_count: frame.elements.len(),
        };
        self.last_input = input;
        self.tick += 1;
        Some(TickOutput { record, frame })
    }

    /// Metrics so far; `partial` until the mission has ended.
    pub fn metrics(&self) -> Metrics {
        let score = score_marks(&self.marks, &self.spec);
        let waypoints: Vec<Vec3> = self.plan.waypoints.iter().map(|w| w.pos).collect();
        Metrics {
            marked_pct: score.marked_pct,
            false_marks: score.false_marks,
            matched_defects: score.matched,
            total_defects: self.spec.defects.len(),
            deviation_m: path_deviation(&waypoints, &self.track).ok(),
            coverage_pct: self.coverage.coverage_pct(),
            covered_waypoints: self.coverage.covered_count(),
            flight_time_s: self.airborne_ticks as f64 * self.config.dt(),
            disengage_events: self.disengages,
            ticks: self.tick,
            end_reason: self.ended,
            partial: self.ended.is_none(),
        }
    }

    /// Worst collision level right now, for callers that poll.
    pub fn collision_level(&self) -> ReadingLevel {
        self.drone.collision.worst()
    }
}
