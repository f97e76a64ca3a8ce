//! Defect marking, coverage tracking, and mission metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autopilot::{AutopilotState, PathPlan};
use crate::config::{CameraModel, CoverageParams};
use crate::events::EndReason;
use crate::flightsim::DroneState;
use crate::geom::Vec3;
use crate::scenario::{FacadeFrame, ScenarioSpec};

/// A click on the camera panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mark {
    pub time_s: f64,
    pub camera_pixel: [f64; 2],
    /// Facade `(u, v)` the click ray landed on.
    pub hit: Option<[f64; 2]>,
    /// Index into the scenario's defect list.
    pub matched_defect: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MarkError {
    #[error("mark ray does not hit the facade")]
    NoHit,
}

/// Camera basis: forward along yaw, right, up.
fn camera_basis(yaw: f64) -> (Vec3, Vec3, Vec3) {
    let (s, c) = yaw.sin_cos();
    (Vec3::new(c, s, 0.0), Vec3::new(s, -c, 0.0), Vec3::Z)
}

/// World direction through a normalized pixel, `(0, 0)` top-left.
pub fn pixel_ray(yaw: f64, pixel: [f64; 2], camera: &CameraModel) -> Vec3 {
    let (f, r, u) = camera_basis(yaw);
    let x = (2.0 * pixel[0] - 1.0) * camera.tan_half_h();
    let y = (1.0 - 2.0 * pixel[1]) * camera.tan_half_v();
    f + r * x + u * y
}

/// Pixel at which a world point appears, if it is in front of the camera and
/// inside the image.
pub fn project_point(s: &DroneState, p: Vec3, camera: &CameraModel) -> Option<[f64; 2]> {
    let (f, r, u) = camera_basis(s.yaw);
    let d = p - s.pos_true;
    let depth = d.dot(f);
    if depth <= 1e-9 {
        return None;
    }
    let x = d.dot(r) / depth / camera.tan_half_h();
    let y = d.dot(u) / depth / camera.tan_half_v();
    let pixel = [(x + 1.0) * 0.5, (1.0 - y) * 0.5];
    if (0.0..=1.0).contains(&pixel[0]) && (0.0..=1.0).contains(&pixel[1]) {
        Some(pixel)
    } else {
        None
    }
}

/// Facade `(u, v)` hit by the ray through `pixel`.
pub fn facade_hit(
    s: &DroneState,
    pixel: [f64; 2],
    frame: &FacadeFrame,
    camera: &CameraModel,
) -> Result<[f64; 2], MarkError> {
    let dir = pixel_ray(s.yaw, pixel, camera);
    let denom = dir.dot(frame.normal);
    if denom >= -1e-12 {
        return Err(MarkError::NoHit);
    }
    let t = (frame.origin - s.pos_true).dot(frame.normal) / denom;
    if t <= 0.0 {
        return Err(MarkError::NoHit);
    }
    let (u, v, _) = frame.to_local(s.pos_true + dir * t);
    if frame.contains_uv(u, v) {
        Ok([u, v])
    } else {
        Err(MarkError::NoHit)
    }
}

/// Cast the click and match the nearest defect within its radius.
pub fn mark_defect(
    s: &DroneState,
    pixel: [f64; 2],
    spec: &ScenarioSpec,
    camera: &CameraModel,
    time_s: f64,
) -> Mark {
    let hit = facade_hit(s, pixel, &spec.facade_frame(), camera).ok();
    let matched_defect = hit.and_then(|[u, v]| {
        spec.defects
            .iter()
            .enumerate()
            .map(|(i, d)| (i, (u - d.center_m[0]).hypot(v - d.center_m[1]), d.radius_m))
            .filter(|&(_, dist, r)| dist <= r)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _, _)| i)
    });
    Mark {
        time_s,
        camera_pixel: pixel,
        hit,
        matched_defect,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkScore {
    pub marked_pct: f64,
    pub matched: usize,
    pub false_marks: usize,
}

pub fn score_marks(marks: &[Mark], spec: &ScenarioSpec) -> MarkScore {
    let mut seen = vec![false; spec.defects.len()];
    let mut false_marks = 0;
    for m in marks {
        match m.matched_defect {
            Some(i) if i < seen.len() => seen[i] = true,
            _ => false_marks += 1,
        }
    }
    let matched = seen.iter().filter(|&&b| b).count();
    let marked_pct = if seen.is_empty() {
        0.0
    } else {
        100.0 * matched as f64 / seen.len() as f64
    };
    MarkScore {
        marked_pct,
        matched,
        false_marks,
    }
}

/// Facade region photographed from a waypoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacadePatch {
    pub u_min_m: f64,
    pub u_max_m: f64,
    pub v_min_m: f64,
    pub v_max_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMap {
    pub covered: Vec<bool>,
    pub patches: Vec<FacadePatch>,
    /// Contiguous manual dwell per waypoint, seconds.
    pub dwell_s: Vec<f64>,
}

impl CoverageMap {
    /// Patches are the camera footprint at the plan standoff, clipped to the
    /// facade.
    pub fn new(plan: &PathPlan, frame: &FacadeFrame, camera: &CameraModel) -> Self {
        let hw = plan.standoff * camera.tan_half_h();
        let hh = plan.standoff * camera.tan_half_v();
        let patches = plan
            .waypoints
            .iter()
            .map(|w| {
                let [u, v] = w.facade_uv;
                FacadePatch {
                    u_min_m: (u - hw).max(0.0),
                    u_max_m: (u + hw).min(frame.width),
                    v_min_m: (v - hh).max(0.0),
                    v_max_m: (v + hh).min(frame.height),
                }
            })
            .collect();
        Self {
            covered: vec![false; plan.len()],
            patches,
            dwell_s: vec![0.0; plan.len()],
        }
    }

    pub fn covered_count(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }

    pub fn coverage_pct(&self) -> f64 {
        if self.covered.is_empty() {
            0.0
        } else {
            100.0 * self.covered_count() as f64 / self.covered.len() as f64
        }
    }

    pub fn complete(&self) -> bool {
        !self.covered.is_empty() && self.covered.iter().all(|&c| c)
    }
}

/// Mark waypoints covered by a finished autopilot pause or by a manual
/// hover. Returns the map and the waypoints newly covered this step, in
/// index order.
pub fn update_coverage(
    c: &CoverageMap,
    s: &DroneState,
    a: &AutopilotState,
    plan: &PathPlan,
    p: &CoverageParams,
    dt: f64,
) -> (CoverageMap, Vec<usize>) {
    let mut next = c.clone();
    let mut newly = Vec::new();
    if let Some(i) = a.just_completed {
        if i < next.covered.len() && !next.covered[i] {
            next.covered[i] = true;
            newly.push(i);
        }
    }
    let manual = s.airborne && !a.engaged && a.just_completed.is_none();
    for (i, w) in plan.waypoints.iter().enumerate() {
        if manual && w.pos.distance(s.pos_true) <= p.hold_radius_m {
            next.dwell_s[i] += dt;
            // tolerate accumulated rounding in the tick sum
            if next.dwell_s[i] >= p.hold_time_s - 1e-9 && !next.covered[i] {
                next.covered[i] = true;
                newly.push(i);
            }
        } else {
            next.dwell_s[i] = 0.0;
        }
    }
    newly.sort_unstable();
    newly.dedup();
    (next, newly)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DeviationError {
    #[error("track is empty")]
    EmptyTrack,
}

pub fn point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

const CHUNK: usize = 64;

struct Chunk {
    lo: Vec3,
    hi: Vec3,
    start: usize,
    end: usize,
}

fn box_distance(p: Vec3, lo: Vec3, hi: Vec3) -> f64 {
    let d = Vec3::new(
        (lo.x - p.x).max(0.0).max(p.x - hi.x),
        (lo.y - p.y).max(0.0).max(p.y - hi.y),
        (lo.z - p.z).max(0.0).max(p.z - hi.z),
    );
    d.norm()
}

/// Mean over waypoints of the distance to the track polyline.
///
/// Segments are grouped into chunks with bounding boxes so far-away parts
/// of a long track are skipped.
pub fn path_deviation(waypoints: &[Vec3], track: &[Vec3]) -> Result<f64, DeviationError> {
    if track.is_empty() {
        return Err(DeviationError::EmptyTrack);
    }
    if waypoints.is_empty() {
        return Ok(0.0);
    }
    if track.len() == 1 {
        let sum: f64 = waypoints.iter().map(|w| w.distance(track[0])).sum();
        return Ok(sum / waypoints.len() as f64);
    }
    let segments = track.len() - 1;
    let chunks: Vec<Chunk> = (0..segments)
        .step_by(CHUNK)
        .map(|start| {
            let end = (start + CHUNK).min(segments);
            let mut lo = track[start];
            let mut hi = track[start];
            for q in &track[start..=end] {
                lo = Vec3::new(lo.x.min(q.x), lo.y.min(q.y), lo.z.min(q.z));
                hi = Vec3::new(hi.x.max(q.x), hi.y.max(q.y), hi.z.max(q.z));
            }
            Chunk { lo, hi, start, end }
        })
        .collect();

    let mut sum = 0.0;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(chunks.len());
    for &w in waypoints {
        order.clear();
        order.extend(chunks.iter().enumerate().map(|(i, c)| (box_distance(w, c.lo, c.hi), i)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::INFINITY;
        for &(bound, i) in &order {
            if bound > best {
                break;
            }
            let c = &chunks[i];
            for k in c.start..c.end {
                best = best.min(point_segment_distance(w, track[k], track[k + 1]));
            }
        }
        sum += best;
    }
    Ok(sum / waypoints.len() as f64)
}

/// Situational Awareness Rating Technique answers, each item on 1..=7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SartInputs {
    pub demand: [u8; 3],
    pub supply: [u8; 4],
    pub understanding: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SartError {
    #[error("{field} = {value} is outside 1..=7")]
    Range { field: String, value: u8 },
}

pub fn sart_score(inputs: &SartInputs) -> Result<i32, SartError> {
    let check = |name: &str, items: &[u8]| -> Result<i32, SartError> {
        let mut sum = 0;
        for (i, &v) in items.iter().enumerate() {
            if !(1..=7).contains(&v) {
                return Err(SartError::Range {
                    field: format!("{name}[{i}]"),
                    value: v,
                });
            }
            sum += v as i32;
        }
        Ok(sum)
    };
    let d = check("demand", &inputs.demand)?;
    let s = check("supply", &inputs.supply)?;
    let u = check("understanding", &inputs.understanding)?;
    Ok(u - (d - s))
}

/// End-of-run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub marked_pct: f64,
    pub false_marks: usize,
    pub matched_defects: usize,
    pub total_defects: usize,
    /// Mean waypoint distance to the flown track; absent if never airborne.
    pub deviation_m: Option<f64>,
    pub coverage_pct: f64,
    pub covered_waypoints: usize,
    pub flight_time_s: f64,
    pub disengage_events: usize,
    pub ticks: u64,
    pub end_reason: Option<EndReason>,
    /// Set when the run stopped before the mission ended.
    pub partial: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autopilot::{generate_path, LegPhase};
    use crate::config::{AutopilotParams, EngineConfig};
    use crate::flightsim::WindParams;
    use crate::scenario::{Defect, DefectKind, FacadeSelection, Face};

    fn spec() -> ScenarioSpec {
        ScenarioSpec {
            schema_version: 1,
            name: String::new(),
            building_size_m: Vec3::new(34.0, 29.46, 62.0),
            facade: FacadeSelection { face: Face::South },
            layers: 12,
            col_spacing_m: 6.0,
            defects: vec![
                Defect {
                    kind: DefectKind::WallCrack,
                    center_m: [10.0, 20.0],
                    radius_m: 1.0,
                    layer: 3,
                    shadowed: false,
                    variant: 0,
                },
                Defect {
                    kind: DefectKind::Leakage,
                    center_m: [25.0, 40.0],
                    radius_m: 1.0,
                    layer: 7,
                    shadowed: false,
                    variant: 0,
                },
            ],
            gps_zones: vec![],
            obstacles: vec![],
            wind: WindParams::default(),
            battery_full_duration_s: 260.0,
            home_point_m: Vec3::new(17.0, -30.0, 0.0),
            standoff_distance_m: 6.0,
            boundary_margin_m: 10.0,
            seed: 1,
        }
    }

    /// Drone at standoff in front of facade `(u, v)` on the south face.
    fn facing(u: f64, v: f64, standoff: f64) -> DroneState {
        let sp = spec();
        let frame = sp.facade_frame();
        let mut s = DroneState::on_ground(frame.point_out(u, v, standoff), frame.facing_yaw(), 0.05);
        s.airborne = true;
        s
    }

    #[test]
    fn centered_pixel_hits_defect_center() {
        let cam = CameraModel::default();
        let s = facing(10.0, 20.0, 6.0);
        let m = mark_defect(&s, [0.5, 0.5], &spec(), &cam, 3.0);
        let hit = m.hit.unwrap();
        assert!((hit[0] - 10.0).abs() < 1e-9 && (hit[1] - 20.0).abs() < 1e-9);
        assert_eq!(m.matched_defect, Some(0));
    }

    #[test]
    fn sky_pixel_misses() {
        let cam = CameraModel::default();
        let mut s = facing(10.0, 20.0, 6.0);
        s.yaw += std::f64::consts::PI;
        let m = mark_defect(&s, [0.5, 0.5], &spec(), &cam, 0.0);
        assert_eq!(m.hit, None);
        assert_eq!(m.matched_defect, None);
        assert_eq!(facade_hit(&s, [0.5, 0.5], &spec().facade_frame(), &cam), Err(MarkError::NoHit));
    }

    #[test]
    fn off_center_pixel_beyond_radius_is_unmatched() {
        // independent pinhole oracle: offset along the facade for a pixel
        // dx from center at standoff d is d * (2 dx) * tan(hfov / 2)
        let cam = CameraModel::default();
        let d = 6.0;
        let tan = (35f64).to_radians().tan();
        let dx = 1.2 / (2.0 * d * tan);
        let s = facing(10.0, 20.0, d);
        let m = mark_defect(&s, [0.5 + dx, 0.5], &spec(), &cam, 0.0);
        let hit = m.hit.unwrap();
        // south face u runs along +x; camera right is +x when facing north
        assert!((hit[0] - 11.2).abs() < 1e-9, "{hit:?}");
        assert_eq!(m.matched_defect, None);
    }

    #[test]
    fn projection_inverts_pixel_ray() {
        let cam = CameraModel::default();
        let sp = spec();
        let frame = sp.facade_frame();
        let s = facing(12.0, 22.0, 6.0);
        let target = frame.point(13.5, 21.0);
        let px = project_point(&s, target, &cam).unwrap();
        let hit = facade_hit(&s, px, &frame, &cam).unwrap();
        assert!((hit[0] - 13.5).abs() < 1e-9 && (hit[1] - 21.0).abs() < 1e-9);
    }

    fn mk(matched: Option<usize>) -> Mark {
        Mark {
            time_s: 0.0,
            camera_pixel: [0.5, 0.5],
            hit: matched.map(|_| [0.0, 0.0]),
            matched_defect: matched,
        }
    }

    #[test]
    fn scoring() {
        let mut sp = spec();
        let template = sp.defects[0].clone();
        sp.defects = (0..11).map(|_| template.clone()).collect();
        let marks: Vec<Mark> = (0..8).map(|i| mk(Some(i))).collect();
        let score = score_marks(&marks, &sp);
        assert!((score.marked_pct - 72.727).abs() < 1e-3);
        assert_eq!(score.false_marks, 0);

        let dup = score_marks(&[mk(Some(1)), mk(Some(1)), mk(None)], &sp);
        assert_eq!(dup.matched, 1);
        assert_eq!(dup.false_marks, 1);

        let none = score_marks(&[], &sp);
        assert_eq!((none.marked_pct, none.false_marks), (0.0, 0));
    }

    fn plan() -> PathPlan {
        generate_path(&spec(), &AutopilotParams::default()).unwrap()
    }

    #[test]
    fn autopilot_pause_covers() {
        let cfg = EngineConfig::default();
        let plan = plan();
        let c = CoverageMap::new(&plan, &spec().facade_frame(), &cfg.camera);
        let s = facing(0.0, 0.0, 6.0);
        let a = AutopilotState {
            engaged: true,
            current_index: 5,
            phase: LegPhase::Cruising,
            pause_remaining: 0.0,
            just_completed: Some(4),
        };
        let (c, newly) = update_coverage(&c, &s, &a, &plan, &cfg.coverage, 0.02);
        assert!(c.covered[4]);
        assert_eq!(newly, vec![4]);
    }

    #[test]
    fn manual_hover_covers_after_hold_time() {
        let cfg = EngineConfig::default();
        let plan = plan();
        let mut c = CoverageMap::new(&plan, &spec().facade_frame(), &cfg.camera);
        let mut s = facing(0.0, 0.0, 6.0);
        s.pos_true = plan.waypoints[7].pos + Vec3::new(0.3, 0.0, 0.0);
        let a = AutopilotState::default();
        let mut covered_at = None;
        for tick in 0..125 {
            let (next, newly) = update_coverage(&c, &s, &a, &plan, &cfg.coverage, 0.02);
            if newly.contains(&7) {
                covered_at = Some(tick + 1);
            }
            c = next;
        }
        assert!(c.covered[7]);
        assert_eq!(covered_at, Some(100));
    }

    #[test]
    fn passing_through_does_not_cover() {
        let cfg = EngineConfig::default();
        let plan = plan();
        let mut c = CoverageMap::new(&plan, &spec().facade_frame(), &cfg.camera);
        let mut s = facing(0.0, 0.0, 6.0);
        let a = AutopilotState::default();
        let start = plan.waypoints[3].pos - Vec3::new(3.0, 0.0, 0.0);
        for tick in 0..150 {
            s.pos_true = start + Vec3::new(2.0 * 0.02 * tick as f64, 0.0, 0.0);
            c = update_coverage(&c, &s, &a, &plan, &cfg.coverage, 0.02).0;
        }
        assert!(!c.covered[3]);
    }

    #[test]
    fn deviation_examples() {
        let track = [Vec3::ZERO, Vec3::new(4.0, 0.0, 0.0)];
        assert_eq!(path_deviation(&[Vec3::new(2.0, 1.0, 0.0)], &track), Ok(1.0));
        let on = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(3.5, 0.0, 0.0)];
        assert_eq!(path_deviation(&on, &track), Ok(0.0));
        assert_eq!(path_deviation(&on, &[]), Err(DeviationError::EmptyTrack));
    }

    #[test]
    fn sart_examples() {
        let all = |n| SartInputs {
            demand: [n; 3],
            supply: [n; 4],
            understanding: [n; 3],
        };
        assert_eq!(sart_score(&all(4)), Ok(16));
        let max = SartInputs {
            demand: [1; 3],
            supply: [7; 4],
            understanding: [7; 3],
        };
        assert_eq!(sart_score(&max), Ok(46));
        let min = SartInputs {
            demand: [7; 3],
            supply: [1; 4],
            understanding: [1; 3],
        };
        assert_eq!(sart_score(&min), Ok(3 - (21 - 4)));
        let bad = SartInputs {
            demand: [4, 8, 4],
            ..all(4)
        };
        assert!(matches!(sart_score(&bad), Err(SartError::Range { value: 8, .. })));
    }
}
