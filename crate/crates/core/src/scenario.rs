//! Inspection scenarios: building, facade frame, defects, GPS-denied zones,
//! obstacles, and environment parameters.
//!
//! Scenarios are JSON documents (`.scenario.json`). All lengths are meters,
//! times seconds, angles radians. The facade frame has `u` running rightward
//! and `v` upward when facing the selected building face from outside.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::error::{DocumentError, GeometryError};
use crate::flightsim::WindParams;
use crate::geom::{Aabb, Vec3};
use crate::rng::{self, Stream};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    PaintPeel,
    WallCrack,
    WallDent,
    RottenSurface,
    Leakage,
    Delamination,
}

impl DefectKind {
    pub const ALL: [DefectKind; 6] = [
        DefectKind::PaintPeel,
        DefectKind::WallCrack,
        DefectKind::WallDent,
        DefectKind::RottenSurface,
        DefectKind::Leakage,
        DefectKind::Delamination,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defect {
    pub kind: DefectKind,
    /// Facade `(u, v)`.
    pub center_m: [f64; 2],
    /// Marks within this distance of the center count as hits.
    #[serde(default = "default_defect_radius")]
    pub radius_m: f64,
    pub layer: u32,
    #[serde(default)]
    pub shadowed: bool,
    /// Visual variation of the kind, for the renderer.
    #[serde(default)]
    pub variant: u8,
}

fn default_defect_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    /// The `y = 0` face, looking toward +y.
    South,
    /// The `y = length` face.
    North,
    /// The `x = width` face.
    East,
    /// The `x = 0` face.
    West,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacadeSelection {
    pub face: Face,
}

/// A rectangle on the facade extruded outward by `depth_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacadeRect {
    pub u_min_m: f64,
    pub u_max_m: f64,
    pub v_min_m: f64,
    pub v_max_m: f64,
    pub depth_m: f64,
}

impl FacadeRect {
    /// Facade-frame containment with `w` the outward distance from the wall.
    pub fn contains(&self, u: f64, v: f64, w: f64) -> bool {
        u >= self.u_min_m
            && u <= self.u_max_m
            && v >= self.v_min_m
            && v <= self.v_max_m
            && w >= 0.0
            && w <= self.depth_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    Tree,
    Gondola,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub kind: ObstacleKind,
    pub volume: Aabb,
    /// Horizontal fraction of the volume, about its center, that the proximity
    /// sensor can see. Branches outside that core are invisible to it.
    pub sensor_detectable_fraction: f64,
}

impl Obstacle {
    pub fn detectable_volume(&self) -> Option<Aabb> {
        if self.sensor_detectable_fraction <= 0.0 {
            None
        } else {
            Some(self.volume.scaled_horizontal(self.sensor_detectable_fraction))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    /// Extents along x (width), y (length), z (height).
    pub building_size_m: Vec3,
    pub facade: FacadeSelection,
    pub layers: u32,
    /// Maximum spacing between path columns.
    #[serde(default = "default_col_spacing")]
    pub col_spacing_m: f64,
    #[serde(default)]
    pub defects: Vec<Defect>,
    #[serde(default)]
    pub gps_zones: Vec<FacadeRect>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub wind: WindParams,
    pub battery_full_duration_s: f64,
    pub home_point_m: Vec3,
    pub standoff_distance_m: f64,
    #[serde(default = "default_boundary_margin")]
    pub boundary_margin_m: f64,
    pub seed: u64,
}

fn default_schema_version() -> u32 {
    SCENARIO_SCHEMA_VERSION
}

fn default_col_spacing() -> f64 {
    6.0
}

fn default_boundary_margin() -> f64 {
    10.0
}

/// One broken invariant, e.g. `gps_zones[0].depth_m must be > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.rule)
    }
}

/// Parse a scenario document without checking invariants.
pub fn parse_scenario_unchecked(text: &str) -> Result<ScenarioSpec, DocumentError> {
    canonical::from_str(text)
}

/// Parse and validate. Invariant violations surface as schema errors naming
/// the first offending field.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, DocumentError> {
    let spec = parse_scenario_unchecked(text)?;
    if let Some(v) = validate_scenario(&spec).into_iter().next() {
        return Err(DocumentError::Schema {
            path: v.field,
            message: v.rule,
        });
    }
    Ok(spec)
}

/// Canonical form: sorted keys, shortest floats, trailing newline.
pub fn emit_scenario(spec: &ScenarioSpec) -> String {
    canonical::to_pretty(spec)
}

impl ScenarioSpec {
    pub fn digest(&self) -> String {
        canonical::sha256_hex(emit_scenario(self).as_bytes())
    }

    pub fn facade_frame(&self) -> FacadeFrame {
        FacadeFrame::new(self.building_size_m, self.facade.face)
    }

    pub fn building(&self) -> Aabb {
        Aabb::new(Vec3::ZERO, self.building_size_m)
    }

    /// The safety buffer box around the building.
    pub fn mission_boundary(&self) -> Aabb {
        let m = self.boundary_margin_m;
        let s = self.building_size_m;
        Aabb::new(Vec3::new(-m, -m, 0.0), Vec3::new(s.x + m, s.y + m, s.z + m))
    }
}

pub fn validate_scenario(spec: &ScenarioSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |ok: bool, field: String, rule: &str| {
        if !ok {
            out.push(Violation {
                field,
                rule: rule.to_string(),
            });
        }
    };

    let s = spec.building_size_m;
    check(
        spec.schema_version == SCENARIO_SCHEMA_VERSION,
        "schema_version".into(),
        "must be 1",
    );
    for (axis, value) in [("x", s.x), ("y", s.y), ("z", s.z)] {
        check(
            value.is_finite() && value > 0.0,
            format!("building_size_m.{axis}"),
            "must be > 0",
        );
    }
    check(spec.layers >= 1, "layers".into(), "must be >= 1");
    check(
        spec.col_spacing_m.is_finite() && spec.col_spacing_m > 0.0,
        "col_spacing_m".into(),
        "must be > 0",
    );
    check(
        spec.battery_full_duration_s.is_finite() && spec.battery_full_duration_s > 0.0,
        "battery_full_duration_s".into(),
        "must be > 0",
    );
    check(
        spec.standoff_distance_m.is_finite() && spec.standoff_distance_m > 0.0,
        "standoff_distance_m".into(),
        "must be > 0",
    );
    check(
        spec.boundary_margin_m.is_finite() && spec.boundary_margin_m > 0.0,
        "boundary_margin_m".into(),
        "must be > 0",
    );
    check(
        spec.home_point_m.is_finite() && spec.home_point_m.z >= 0.0,
        "home_point_m".into(),
        "must be finite and at or above ground",
    );

    let w = &spec.wind;
    check(w.max_accel_mps2 > 0.0, "wind.max_accel_mps2".into(), "must be > 0");
    check(w.slew_mps3 > 0.0, "wind.slew_mps3".into(), "must be > 0");
    check(
        w.resample_interval_s[0] > 0.0,
        "wind.resample_interval_s".into(),
        "must be > 0",
    );
    check(
        w.resample_interval_s[0] <= w.resample_interval_s[1],
        "wind.resample_interval_s".into(),
        "min must be <= max",
    );

    let frame = spec.facade_frame();
    let (fw, fh) = (frame.width, frame.height);
    for (i, d) in spec.defects.iter().enumerate() {
        check(
            d.radius_m.is_finite() && d.radius_m > 0.0,
            format!("defects[{i}].radius_m"),
            "must be > 0",
        );
        check(
            d.layer < spec.layers,
            format!("defects[{i}].layer"),
            "must be < layers",
        );
        let [u, v] = d.center_m;
        check(
            (0.0..=fw).contains(&u) && (0.0..=fh).contains(&v),
            format!("defects[{i}].center_m"),
            "must lie within facade bounds",
        );
    }
    for i in 0..spec.defects.len() {
        for j in (i + 1)..spec.defects.len() {
            let (a, b) = (&spec.defects[i], &spec.defects[j]);
            let d = ((a.center_m[0] - b.center_m[0]).powi(2)
                + (a.center_m[1] - b.center_m[1]).powi(2))
            .sqrt();
            check(
                d >= a.radius_m + b.radius_m,
                format!("defects[{j}].center_m"),
                &format!("must not overlap defects[{i}]"),
            );
        }
    }
    for (i, z) in spec.gps_zones.iter().enumerate() {
        check(
            z.u_min_m < z.u_max_m,
            format!("gps_zones[{i}].u_min_m"),
            "must be < u_max_m",
        );
        check(
            z.v_min_m < z.v_max_m,
            format!("gps_zones[{i}].v_min_m"),
            "must be < v_max_m",
        );
        check(z.depth_m > 0.0, format!("gps_zones[{i}].depth_m"), "must be > 0");
        check(
            z.u_min_m >= 0.0 && z.u_max_m <= fw && z.v_min_m >= 0.0 && z.v_max_m <= fh,
            format!("gps_zones[{i}]"),
            "must lie within facade bounds",
        );
    }
    for (i, o) in spec.obstacles.iter().enumerate() {
        check(
            !o.volume.is_degenerate(),
            format!("obstacles[{i}].volume"),
            "must be non-degenerate",
        );
        check(
            (0.0..=1.0).contains(&o.sensor_detectable_fraction),
            format!("obstacles[{i}].sensor_detectable_fraction"),
            "must be in [0, 1]",
        );
    }
    out
}

/// Local 2D frame on the selected building face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacadeFrame {
    /// World position of facade `(0, 0)`: lower-left corner seen from outside.
    pub origin: Vec3,
    pub u_axis: Vec3,
    /// Outward unit normal.
    pub normal: Vec3,
    pub width: f64,
    pub height: f64,
}

impl FacadeFrame {
    pub fn new(size: Vec3, face: Face) -> Self {
        let (origin, u_axis, normal, width) = match face {
            Face::South => (Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, -1.0, 0.0), size.x),
            Face::North => (
                Vec3::new(size.x, size.y, 0.0),
                Vec3::new(-1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                size.x,
            ),
            Face::East => (
                Vec3::new(size.x, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                size.y,
            ),
            Face::West => (
                Vec3::new(0.0, size.y, 0.0),
                Vec3::new(0.0, -1.0, 0.0),
                Vec3::new(-1.0, 0.0, 0.0),
                size.y,
            ),
        };
        Self {
            origin,
            u_axis,
            normal,
            width,
            height: size.z,
        }
    }

    pub fn contains_uv(&self, u: f64, v: f64) -> bool {
        (0.0..=self.width).contains(&u) && (0.0..=self.height).contains(&v)
    }

    /// Point on the facade plane, no bounds check.
    pub fn point(&self, u: f64, v: f64) -> Vec3 {
        self.origin + self.u_axis * u + Vec3::Z * v
    }

    /// Point `w` meters outward from facade `(u, v)`.
    pub fn point_out(&self, u: f64, v: f64, w: f64) -> Vec3 {
        self.point(u, v) + self.normal * w
    }

    /// World point to `(u, v, w)`, with `w` the signed outward distance.
    pub fn to_local(&self, p: Vec3) -> (f64, f64, f64) {
        let d = p - self.origin;
        (d.dot(self.u_axis), d.z, d.dot(self.normal))
    }

    /// Heading that faces the wall, radians from +x counterclockwise.
    pub fn facing_yaw(&self) -> f64 {
        (-self.normal.y).atan2(-self.normal.x)
    }
}

pub fn facade_to_world(spec: &ScenarioSpec, u: f64, v: f64) -> Result<Vec3, GeometryError> {
    let frame = spec.facade_frame();
    if !frame.contains_uv(u, v) {
        return Err(GeometryError::OutOfBounds {
            u,
            v,
            width: frame.width,
            height: frame.height,
        });
    }
    Ok(frame.point(u, v))
}

/// Inverse of [`facade_to_world`] for points on the facade plane.
pub fn world_to_facade(spec: &ScenarioSpec, p: Vec3) -> (f64, f64) {
    let (u, v, _) = spec.facade_frame().to_local(p);
    (u, v)
}

/// Spread 0-2 defects per layer over the facade; 11-12 in total for 12 layers.
///
/// Kinds cycle through a shuffled list of all six so they stay balanced, and
/// repeated kinds receive distinct visual variants. Defects sit near their
/// layer's mid-height and never overlap.
pub fn generate_defect_layout(
    seed: u64,
    facade: &FacadeFrame,
    layers: u32,
) -> Result<Vec<Defect>, GeometryError> {
    const RADIUS: f64 = 1.0;
    const MAX_TRIES: usize = 500;

    if layers == 0 {
        return Err(GeometryError::Invalid("layers must be >= 1".into()));
    }
    let mut rng = rng::stream(seed, Stream::Layout);
    let n = layers as usize;

    // total in [round(11/12 n), n]; counts in {0,1,2} with at most two doubles
    let low_total = (11 * n + 6) / 12;
    let total = rng.random_range(low_total..=n);
    let doubles_max = (total / 2).min(2);
    let doubles_min = total.saturating_sub(n);
    let doubles = rng.random_range(doubles_min..=doubles_max.max(doubles_min));
    let zeros = n + doubles - total;
    let mut counts = vec![1usize; n];
    for c in counts.iter_mut().take(doubles) {
        *c = 2;
    }
    for c in counts.iter_mut().skip(doubles).take(zeros) {
        *c = 0;
    }
    counts.shuffle(&mut rng);

    let band = facade.height / n as f64;
    let v_jitter = (band * 0.5 - RADIUS).min(1.0);
    if v_jitter < 0.0 || facade.width < 2.0 * RADIUS {
        let layer = counts.iter().position(|&c| c > 0).unwrap_or(0) as u32;
        return Err(GeometryError::NoRoomForDefects {
            layer,
            requested: counts.iter().sum(),
        });
    }

    let mut kinds = Vec::new();
    let mut variants: Vec<Vec<u8>> = Vec::new();
    let mut used = [0usize; 6];
    let mut defects: Vec<Defect> = Vec::with_capacity(total);

    for (layer, &count) in counts.iter().enumerate() {
        let v_center = (layer as f64 + 0.5) * band;
        for _ in 0..count {
            if kinds.is_empty() {
                kinds = DefectKind::ALL.to_vec();
                kinds.shuffle(&mut rng);
            }
            let kind = kinds.pop().expect("refilled above");
            let k = DefectKind::ALL.iter().position(|&x| x == kind).unwrap();
            if variants.len() < 6 {
                variants = (0..6)
                    .map(|_| {
                        let mut v = vec![0u8, 1, 2];
                        v.shuffle(&mut rng);
                        v
                    })
                    .collect();
            }
            let variant = variants[k][used[k] % 3];
            used[k] += 1;

            let mut placed = None;
            for _ in 0..MAX_TRIES {
                let u = rng.random_range(RADIUS..=facade.width - RADIUS);
                let v = v_center + rng.random_range(-v_jitter..=v_jitter);
                let clear = defects.iter().all(|d| {
                    let du = d.center_m[0] - u;
                    let dv = d.center_m[1] - v;
                    (du * du + dv * dv).sqrt() >= d.radius_m + RADIUS
                });
                if clear {
                    placed = Some([u, v]);
                    break;
                }
            }
            let center_m = placed.ok_or(GeometryError::NoRoomForDefects {
                layer: layer as u32,
                requested: count,
            })?;
            defects.push(Defect {
                kind,
                center_m,
                radius_m: RADIUS,
                layer: layer as u32,
                shadowed: rng.random_bool(0.25),
                variant,
            });
        }
    }
    Ok(defects)
}
