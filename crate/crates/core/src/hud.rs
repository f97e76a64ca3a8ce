//! Mission/safety view state machine and declarative HUD frames.
//!
//! A frame is a flat, ordered list of elements plus the camera panel dock.
//! The cockpit draws it verbatim; nothing here knows about rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autopilot::{nearest_waypoint, AutopilotState, PathPlan};
use crate::config::{EngineConfig, HudParams};
use crate::flightsim::{required_rth_fraction, sector_bearing, BatteryModel, DroneState, ReadingLevel, SECTORS};
use crate::geom::Vec3;
use crate::input::GazeRay;
use crate::mission::{project_point, CoverageMap, Mark};
use crate::scenario::ScenarioSpec;

pub const HUD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewPhase {
    PreMission,
    Mission,
    Safety,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Issue {
    GpsLost,
    Collision,
    BatteryLow,
    ManualControl,
}

impl Issue {
    pub const ALL: [Issue; 4] = [Issue::GpsLost, Issue::Collision, Issue::BatteryLow, Issue::ManualControl];
}

pub type IssueSet = BTreeSet<Issue>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewState {
    pub phase: ViewPhase,
    pub active_issues: IssueSet,
}

impl Default for ViewState {
    fn default() -> Self {
        Self {
            phase: ViewPhase::PreMission,
            active_issues: IssueSet::new(),
        }
    }
}

/// What the view machine observed this tick.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ViewObservation {
    /// Issues active after this tick's update; cleared issues are absent.
    pub issues: IssueSet,
    pub in_boundary: bool,
    /// The pilot engaged the autopilot this tick.
    pub autopilot_clicked: bool,
}

/// Issues implied by the current state.
pub fn active_issues(s: &DroneState, a: &AutopilotState, battery: &BatteryModel, home: Vec3) -> IssueSet {
    let mut out = IssueSet::new();
    if s.gps_lost {
        out.insert(Issue::GpsLost);
    }
    if s.collision.worst() >= ReadingLevel::Warn {
        out.insert(Issue::Collision);
    }
    if s.airborne && s.battery < battery.low_threshold.max(required_rth_fraction(s, battery, home)) {
        out.insert(Issue::BatteryLow);
    }
    if s.airborne && !a.engaged {
        out.insert(Issue::ManualControl);
    }
    out
}

pub fn transition_view(v: &ViewState, obs: &ViewObservation) -> ViewState {
    let phase = if v.phase == ViewPhase::PreMission && !obs.in_boundary {
        ViewPhase::PreMission
    } else if !obs.issues.is_empty() {
        ViewPhase::Safety
    } else if v.phase == ViewPhase::Mission || obs.autopilot_clicked {
        ViewPhase::Mission
    } else {
        ViewPhase::Safety
    };
    ViewState {
        phase,
        active_issues: obs.issues.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceMode {
    TwodOnly,
    FullAr,
    AdaptAr,
}

impl InterfaceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            InterfaceMode::TwodOnly => "twod_only",
            InterfaceMode::FullAr => "full_ar",
            InterfaceMode::AdaptAr => "adapt_ar",
        }
    }
}

impl fmt::Display for InterfaceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InterfaceMode {
    type Err = String;

    /// Accepts the short flag names as well as the wire names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2d" | "twod_only" => Ok(InterfaceMode::TwodOnly),
            "full" | "full_ar" => Ok(InterfaceMode::FullAr),
            "adapt" | "adapt_ar" => Ok(InterfaceMode::AdaptAr),
            other => Err(format!("unknown interface mode `{other}` (expected 2d, full or adapt)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    LocatorRing,
    HeadingArrow,
    GroundProjection,
    UncertaintyDisc,
    RthPath,
    BoundaryBox,
    Waypoint,
    PathLine,
    CoveragePatch,
    CollisionArc,
    StatusMessage,
    DefectMark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    World,
    Panel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelAnchor {
    HandFixed,
    HeadLocked,
    BodyLocked,
}

pub type Rgba = [f64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HudElement {
    pub kind: ElementKind,
    pub space: Space,
    /// World anchor; unused for panel elements.
    pub pose: Vec3,
    pub scale: f64,
    /// Straight RGBA, each in `[0, 1]`; alpha is the element alpha.
    pub color: Rgba,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub payload: BTreeMap<String, f64>,
}

impl HudElement {
    fn world(kind: ElementKind, pose: Vec3, scale: f64, color: Rgba) -> Self {
        Self {
            kind,
            space: Space::World,
            pose,
            scale,
            color,
            label: None,
            payload: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.payload.insert(key.to_string(), value);
        self
    }

    pub fn alpha(&self) -> f64 {
        self.color[3]
    }
}

/// Red circle drawn on the camera feed where an earlier mark landed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelMark {
    pub pixel: [f64; 2],
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Panel {
    pub anchor: PanelAnchor,
    pub alpha: f64,
    #[serde(default)]
    pub marks: Vec<PanelMark>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HudFrame {
    pub schema_version: u32,
    pub mode: InterfaceMode,
    pub elements: Vec<HudElement>,
    pub panel: Panel,
    pub view: ViewState,
}

impl HudFrame {
    pub fn world_element_count(&self) -> usize {
        self.elements.iter().filter(|e| e.space == Space::World).count()
    }

    pub fn kinds(&self) -> BTreeSet<ElementKind> {
        self.elements.iter().map(|e| e.kind).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusMessage {
    GpsLost,
    BatteryLow,
    Collision,
    AutopilotOn,
    AutopilotOff,
    MissionComplete,
}

impl StatusMessage {
    pub fn text(&self) -> &'static str {
        match self {
            StatusMessage::GpsLost => "GPS signal lost",
            StatusMessage::BatteryLow => "Battery low, return home",
            StatusMessage::Collision => "Obstacle nearby",
            StatusMessage::AutopilotOn => "Autopilot on",
            StatusMessage::AutopilotOff => "Autopilot off",
            StatusMessage::MissionComplete => "Mission complete",
        }
    }
}

pub fn ring_scale(distance_to_viewer: f64) -> f64 {
    (0.04 * distance_to_viewer).max(1.0)
}

/// Battery bar along the RTH path.
///
/// `yellow` and `red` are how far each bar has extended from the home
/// point; red grows over yellow, so the drawn yellow segment is
/// `yellow - red` once red appears. `green + visible yellow + red` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RthBar {
    pub green: f64,
    pub yellow: f64,
    pub red: f64,
}

impl RthBar {
    pub fn visible_yellow(&self) -> f64 {
        self.yellow.max(self.red) - self.red
    }

    /// Drawn segments from the home point outward: red, yellow, green.
    pub fn segments(&self) -> [f64; 3] {
        [self.red, self.visible_yellow(), self.green]
    }
}

fn unit_clamp(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

pub fn rth_bar_segments(battery: f64, m: &BatteryModel, rth_needed: f64) -> RthBar {
    let low_start = m.low_threshold.max(rth_needed);
    let yellow = if low_start > m.critical_threshold {
        unit_clamp((low_start - battery) / (low_start - m.critical_threshold))
    } else if battery <= m.critical_threshold {
        1.0
    } else {
        0.0
    };
    let red = if m.critical_threshold > m.land_floor {
        unit_clamp((m.critical_threshold - battery) / (m.critical_threshold - m.land_floor))
    } else if battery <= m.land_floor {
        1.0
    } else {
        0.0
    };
    RthBar {
        green: 1.0 - yellow.max(red),
        yellow,
        red,
    }
}

/// Camera-panel opacity from the angle between the view ray and the panel.
pub fn panel_alpha(gaze_angle: f64, p: &HudParams) -> f64 {
    if gaze_angle <= p.gaze_full_rad {
        1.0
    } else if gaze_angle >= p.gaze_faded_rad {
        p.gaze_min_alpha
    } else {
        let t = (gaze_angle - p.gaze_full_rad) / (p.gaze_faded_rad - p.gaze_full_rad);
        1.0 + (p.gaze_min_alpha - 1.0) * t
    }
}

/// Opacity of the positional-uncertainty disc; strictly decreasing in the
/// radius.
pub fn uncertainty_alpha(radius: f64, p: &HudParams) -> f64 {
    p.disc_max_alpha / (1.0 + radius.max(0.0) / p.disc_half_alpha_radius_m)
}

/// Where the pilot stands: the home point at eye height.
pub fn viewer_position(spec: &ScenarioSpec, p: &HudParams) -> Vec3 {
    spec.home_point_m + Vec3::Z * p.pilot_eye_height_m
}

/// Body-locked panel dock: ahead of the pilot, low and to the right, with
/// the body turned toward the building.
pub fn body_dock_position(spec: &ScenarioSpec, p: &HudParams) -> Vec3 {
    let eye = viewer_position(spec, p);
    let to_building = (spec.building().center() - eye).horizontal();
    let fwd = if to_building.norm() > 0.0 {
        to_building.normalized()
    } else {
        Vec3::new(1.0, 0.0, 0.0)
    };
    let right = fwd.cross(Vec3::Z);
    eye + fwd * 1.0 + right * 0.45 - Vec3::Z * 0.35
}

pub fn gaze_angle_to(gaze: &GazeRay, target: Vec3) -> f64 {
    let to = target - gaze.origin;
    let (a, b) = (gaze.direction.norm(), to.norm());
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    (gaze.direction.dot(to) / (a * b)).clamp(-1.0, 1.0).acos()
}

mod colors {
    use super::Rgba;
    pub const BOUNDARY: Rgba = [0.2, 0.85, 0.3, 0.15];
    pub const WAYPOINT: Rgba = [1.0, 1.0, 1.0, 0.9];
    pub const WAYPOINT_NEXT: Rgba = [0.1, 0.9, 1.0, 1.0];
    pub const WAYPOINT_COVERED: Rgba = [0.2, 0.85, 0.3, 0.9];
    pub const PATH: Rgba = [0.15, 0.4, 1.0, 0.8];
    pub const COVERAGE: Rgba = [0.2, 0.85, 0.3, 0.35];
    pub const RING: Rgba = [1.0, 1.0, 1.0, 1.0];
    pub const HEADING: Rgba = [1.0, 0.1, 0.1, 1.0];
    pub const WARN: Rgba = [1.0, 0.85, 0.0, 1.0];
    pub const CRITICAL: Rgba = [1.0, 0.1, 0.1, 1.0];
    pub const PROJECTION: Rgba = [0.15, 0.4, 1.0, 0.9];
    pub const DISC: [f64; 3] = [0.15, 0.4, 1.0];
    pub const RTH: Rgba = [0.2, 0.85, 0.3, 1.0];
    pub const STATUS: Rgba = [1.0, 1.0, 1.0, 1.0];
    pub const STATUS_ALERT: Rgba = [1.0, 0.55, 0.0, 1.0];
    pub const MARK: Rgba = [1.0, 0.1, 0.1, 1.0];
}

/// Everything one frame is composed from, all from the same tick.
#[derive(Debug, Clone, Copy)]
pub struct HudInputs<'a> {
    pub mode: InterfaceMode,
    pub view: &'a ViewState,
    pub drone: &'a DroneState,
    pub autopilot: &'a AutopilotState,
    pub plan: &'a PathPlan,
    pub spec: &'a ScenarioSpec,
    pub battery: &'a BatteryModel,
    pub coverage: &'a CoverageMap,
    pub marks: &'a [Mark],
    pub gaze: Option<&'a GazeRay>,
    pub config: &'a EngineConfig,
    pub mission_complete: bool,
}

struct Composer<'a> {
    i: HudInputs<'a>,
    out: Vec<HudElement>,
}

impl Composer<'_> {
    fn boundary_box(&mut self) {
        let b = self.i.spec.mission_boundary();
        let size = b.max - b.min;
        self.out.push(
            HudElement::world(ElementKind::BoundaryBox, b.center(), 1.0, colors::BOUNDARY)
                .with("size_x_m", size.x)
                .with("size_y_m", size.y)
                .with("size_z_m", size.z),
        );
    }

    fn waypoint(&mut self, index: usize, next: bool) {
        let w = &self.i.plan.waypoints[index];
        let covered = self.i.coverage.covered.get(index).copied().unwrap_or(false);
        let color = if next {
            colors::WAYPOINT_NEXT
        } else if covered {
            colors::WAYPOINT_COVERED
        } else {
            colors::WAYPOINT
        };
        self.out.push(
            HudElement::world(ElementKind::Waypoint, w.pos, 1.0, color)
                .with("index", index as f64)
                .with("layer", w.layer as f64)
                .with("covered", covered as u8 as f64)
                .with("next", next as u8 as f64),
        );
    }

    fn focus_waypoint(&self) -> Option<usize> {
        if self.i.plan.is_empty() {
            None
        } else if self.i.autopilot.engaged {
            Some(self.i.autopilot.current_index)
        } else {
            Some(nearest_waypoint(self.i.drone, self.i.plan).0)
        }
    }

    fn path_line(&mut self) {
        let Some(from) = self.focus_waypoint() else { return };
        let last = self.i.plan.len() - 1;
        self.out.push(
            HudElement::world(ElementKind::PathLine, self.i.plan.waypoints[from].pos, 1.0, colors::PATH)
                .with("from_waypoint", from as f64)
                .with("to_waypoint", last as f64),
        );
    }

    fn coverage_patches(&mut self) {
        let frame = self.i.spec.facade_frame();
        for (index, patch) in self.i.coverage.patches.iter().enumerate() {
            if !self.i.coverage.covered[index] {
                continue;
            }
            let u = 0.5 * (patch.u_min_m + patch.u_max_m);
            let v = 0.5 * (patch.v_min_m + patch.v_max_m);
            self.out.push(
                HudElement::world(ElementKind::CoveragePatch, frame.point_out(u, v, 0.05), 1.0, colors::COVERAGE)
                    .with("waypoint", index as f64)
                    .with("u_min_m", patch.u_min_m)
                    .with("u_max_m", patch.u_max_m)
                    .with("v_min_m", patch.v_min_m)
                    .with("v_max_m", patch.v_max_m),
            );
        }
    }

    fn defect_marks(&mut self) {
        let frame = self.i.spec.facade_frame();
        for (index, m) in self.i.marks.iter().enumerate() {
            if let Some([u, v]) = m.hit {
                self.out.push(
                    HudElement::world(ElementKind::DefectMark, frame.point_out(u, v, 0.05), 1.0, colors::MARK)
                        .with("mark", index as f64)
                        .with("matched", m.matched_defect.is_some() as u8 as f64),
                );
            }
        }
    }

    fn ring(&self) -> f64 {
        let viewer = viewer_position(self.i.spec, &self.i.config.hud);
        ring_scale(viewer.distance(self.i.drone.pos_est))
    }

    fn drone_centered(&mut self, with_rth: bool) {
        let s = self.i.drone;
        let scale = self.ring();
        self.out
            .push(HudElement::world(ElementKind::LocatorRing, s.pos_est, scale, colors::RING).with("yaw_rad", s.yaw));
        self.out.push(
            HudElement::world(ElementKind::HeadingArrow, s.pos_est, scale, colors::HEADING).with("yaw_rad", s.yaw),
        );
        for (index, r) in s.collision.all() {
            let color = match r.level {
                ReadingLevel::Clear => continue,
                ReadingLevel::Warn => colors::WARN,
                ReadingLevel::Critical => colors::CRITICAL,
            };
            let mut arc = HudElement::world(ElementKind::CollisionArc, s.pos_est, scale, color)
                .with("sector", index as f64)
                .with("distance_m", r.distance_m);
            if index < SECTORS {
                arc = arc
                    .with("bearing_rad", sector_bearing(s.yaw, index))
                    .with("span_rad", std::f64::consts::TAU / SECTORS as f64);
            } else {
                arc = arc.with("vertical", if index == SECTORS { 1.0 } else { -1.0 });
            }
            self.out.push(arc);
        }
        self.out.push(
            HudElement::world(
                ElementKind::GroundProjection,
                Vec3::new(s.pos_est.x, s.pos_est.y, 0.0),
                1.0,
                colors::PROJECTION,
            )
            .with("altitude_m", s.pos_est.z)
            .with("top_z_m", s.pos_est.z),
        );
        let d = colors::DISC;
        let alpha = uncertainty_alpha(s.uncertainty_radius, &self.i.config.hud);
        self.out.push(
            HudElement::world(ElementKind::UncertaintyDisc, s.pos_est, s.uncertainty_radius, [d[0], d[1], d[2], alpha])
                .with("radius_m", s.uncertainty_radius),
        );
        if with_rth {
            let home = self.i.spec.home_point_m;
            let needed = required_rth_fraction(s, self.i.battery, home);
            let bar = rth_bar_segments(s.battery, self.i.battery, needed);
            self.out.push(
                HudElement::world(ElementKind::RthPath, home, 1.0, colors::RTH)
                    .with("to_x_m", s.pos_est.x)
                    .with("to_y_m", s.pos_est.y)
                    .with("to_z_m", s.pos_est.z)
                    .with("battery", s.battery)
                    .with("rth_needed", needed)
                    .with("green", bar.green)
                    .with("yellow", bar.yellow)
                    .with("red", bar.red)
                    .with("yellow_visible", bar.visible_yellow()),
            );
        }
    }

    fn status_messages(&mut self) {
        let issues = &self.i.view.active_issues;
        let mut msgs = Vec::new();
        if issues.contains(&Issue::GpsLost) {
            msgs.push(StatusMessage::GpsLost);
        }
        if issues.contains(&Issue::BatteryLow) {
            msgs.push(StatusMessage::BatteryLow);
        }
        if issues.contains(&Issue::Collision) {
            msgs.push(StatusMessage::Collision);
        }
        if self.i.mission_complete {
            msgs.push(StatusMessage::MissionComplete);
        } else if self.i.drone.airborne {
            msgs.push(if self.i.autopilot.engaged {
                StatusMessage::AutopilotOn
            } else {
                StatusMessage::AutopilotOff
            });
        }
        for m in msgs {
            let alert = matches!(m, StatusMessage::GpsLost | StatusMessage::BatteryLow | StatusMessage::Collision);
            self.out.push(HudElement {
                kind: ElementKind::StatusMessage,
                space: Space::Panel,
                pose: Vec3::ZERO,
                scale: 1.0,
                color: if alert { colors::STATUS_ALERT } else { colors::STATUS },
                label: Some(m.text().to_string()),
                payload: BTreeMap::new(),
            });
        }
    }
}

fn panel_marks(i: &HudInputs) -> Vec<PanelMark> {
    let frame = i.spec.facade_frame();
    i.marks
        .iter()
        .filter_map(|m| {
            let [u, v] = m.hit?;
            let pixel = project_point(i.drone, frame.point(u, v), &i.config.camera)?;
            Some(PanelMark {
                pixel,
                matched: m.matched_defect.is_some(),
            })
        })
        .collect()
}

/// Compose the frame for one tick. Elements come out in a fixed kind order,
/// then by index, so equal inputs give byte-identical frames.
pub fn compose_hud_frame(i: HudInputs) -> HudFrame {
    let mut c = Composer { i, out: Vec::new() };
    let phase = i.view.phase;
    let gaze_alpha = || match i.gaze {
        Some(g) => panel_alpha(gaze_angle_to(g, body_dock_position(i.spec, &i.config.hud)), &i.config.hud),
        None => 1.0,
    };

    let (anchor, alpha) = match i.mode {
        InterfaceMode::TwodOnly => {
            c.status_messages();
            (PanelAnchor::HandFixed, 1.0)
        }
        InterfaceMode::FullAr => {
            c.boundary_box();
            c.path_line();
            let focus = c.focus_waypoint();
            for w in 0..i.plan.len() {
                c.waypoint(w, Some(w) == focus);
            }
            c.coverage_patches();
            c.defect_marks();
            c.drone_centered(true);
            c.status_messages();
            (PanelAnchor::HeadLocked, 1.0)
        }
        InterfaceMode::AdaptAr => match phase {
            ViewPhase::PreMission => {
                c.boundary_box();
                for w in 0..i.plan.len() {
                    c.waypoint(w, false);
                }
                (PanelAnchor::BodyLocked, gaze_alpha())
            }
            ViewPhase::Mission => {
                c.path_line();
                if let Some(w) = c.focus_waypoint() {
                    c.waypoint(w, true);
                }
                c.coverage_patches();
                c.status_messages();
                (PanelAnchor::HeadLocked, 1.0)
            }
            ViewPhase::Safety => {
                if let Some(w) = c.focus_waypoint() {
                    c.waypoint(w, true);
                }
                c.coverage_patches();
                c.drone_centered(i.view.active_issues.contains(&Issue::BatteryLow));
                c.status_messages();
                (PanelAnchor::BodyLocked, gaze_alpha())
            }
        },
    };
    HudFrame {
        schema_version: HUD_SCHEMA_VERSION,
        mode: i.mode,
        elements: c.out,
        panel: Panel {
            anchor,
            alpha,
            marks: panel_marks(&i),
        },
        view: i.view.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BatteryParams;

    fn model() -> BatteryModel {
        BatteryModel::new(260.0, &BatteryParams::default())
    }

    #[test]
    fn ring_scale_values() {
        assert_eq!(ring_scale(10.0), 1.0);
        assert_eq!(ring_scale(25.0), 1.0);
        assert_eq!(ring_scale(50.0), 2.0);
        assert_eq!(ring_scale(0.0), 1.0);
    }

    #[test]
    fn rth_bar_examples() {
        let m = model();
        let b = rth_bar_segments(0.30, &m, 0.0);
        assert_eq!((b.green, b.yellow, b.red), (1.0, 0.0, 0.0));
        let b = rth_bar_segments(0.175, &m, 0.0);
        assert!((b.yellow - 0.5).abs() < 1e-12);
        assert!((b.green - 0.5).abs() < 1e-12);
        let b = rth_bar_segments(0.05, &m, 0.0);
        assert_eq!(b.red, 1.0);
        assert_eq!(b.green, 0.0);
        assert_eq!(b.segments(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn rth_bar_dynamic_threshold_starts_yellow_early() {
        let m = model();
        let b = rth_bar_segments(0.35, &m, 0.4);
        assert!(b.yellow > 0.0);
    }

    #[test]
    fn panel_alpha_curve() {
        let p = HudParams::default();
        assert_eq!(panel_alpha(0.0, &p), 1.0);
        assert!((panel_alpha(0.375, &p) - 0.625).abs() < 1e-12);
        assert_eq!(panel_alpha(std::f64::consts::FRAC_PI_2, &p), 0.25);
    }

    #[test]
    fn disc_alpha_strictly_decreasing() {
        let p = HudParams::default();
        let mut last = f64::INFINITY;
        for i in 0..400 {
            let a = uncertainty_alpha(i as f64 * 0.01, &p);
            assert!(a < last);
            last = a;
        }
    }

    #[test]
    fn mode_names_parse() {
        for (s, m) in [
            ("2d", InterfaceMode::TwodOnly),
            ("full", InterfaceMode::FullAr),
            ("adapt", InterfaceMode::AdaptAr),
            ("adapt_ar", InterfaceMode::AdaptAr),
        ] {
            assert_eq!(s.parse::<InterfaceMode>(), Ok(m));
        }
        assert!("vr".parse::<InterfaceMode>().is_err());
    }

    fn obs(issues: &[Issue], in_boundary: bool, clicked: bool) -> ViewObservation {
        ViewObservation {
            issues: issues.iter().copied().collect(),
            in_boundary,
            autopilot_clicked: clicked,
        }
    }

    #[test]
    fn view_examples() {
        let mission = ViewState {
            phase: ViewPhase::Mission,
            active_issues: IssueSet::new(),
        };
        let v = transition_view(&mission, &obs(&[Issue::GpsLost], true, false));
        assert_eq!(v.phase, ViewPhase::Safety);
        assert_eq!(v.active_issues, [Issue::GpsLost].into_iter().collect());

        let safety = ViewState {
            phase: ViewPhase::Safety,
            active_issues: IssueSet::new(),
        };
        assert_eq!(transition_view(&safety, &obs(&[], true, true)).phase, ViewPhase::Mission);
        assert_eq!(
            transition_view(&safety, &obs(&[Issue::BatteryLow], true, true)).phase,
            ViewPhase::Safety
        );
        let pre = ViewState::default();
        assert_eq!(transition_view(&pre, &obs(&[Issue::ManualControl], false, false)).phase, ViewPhase::PreMission);
        assert_eq!(transition_view(&pre, &obs(&[Issue::ManualControl], true, false)).phase, ViewPhase::Safety);
    }
}
