use serde::{Deserialize, Serialize};

use super::DroneState;
use crate::canonical::finite_or_null;
use crate::config::SensingParams;
use crate::geom::{Aabb, Vec3};
use crate::scenario::ScenarioSpec;

/// Horizontal sectors, counterclockwise from the nose.
pub const SECTORS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadingLevel {
    Clear,
    Warn,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    /// Nearest detectable surface; `null` on the wire when clear.
    #[serde(with = "finite_or_null")]
    pub distance_m: f64,
    pub level: ReadingLevel,
}

impl Reading {
    pub const CLEAR: Reading = Reading {
        distance_m: f64::INFINITY,
        level: ReadingLevel::Clear,
    };

    pub fn from_distance(distance_m: f64, p: &SensingParams) -> Self {
        let level = if distance_m < p.critical_distance_m {
            ReadingLevel::Critical
        } else if distance_m < p.warn_distance_m {
            ReadingLevel::Warn
        } else {
            ReadingLevel::Clear
        };
        Self { distance_m, level }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReadings {
    pub sectors: [Reading; SECTORS],
    pub up: Reading,
    pub down: Reading,
}

impl CollisionReadings {
    pub fn clear() -> Self {
        Self {
            sectors: [Reading::CLEAR; SECTORS],
            up: Reading::CLEAR,
            down: Reading::CLEAR,
        }
    }

    /// Sectors 0..8, then up (8) and down (9).
    pub fn all(&self) -> impl Iterator<Item = (usize, &Reading)> {
        self.sectors
            .iter()
            .chain([&self.up, &self.down])
            .enumerate()
    }

    pub fn worst(&self) -> ReadingLevel {
        self.all()
            .map(|(_, r)| r.level)
            .max()
            .unwrap_or(ReadingLevel::Clear)
    }
}

/// World bearing of a sector center.
pub fn sector_bearing(yaw: f64, sector: usize) -> f64 {
    yaw + sector as f64 * std::f64::consts::TAU / SECTORS as f64
}

fn nearest(origin: Vec3, dir: Vec3, targets: &[Aabb], range: f64) -> f64 {
    targets
        .iter()
        .filter_map(|b| b.ray_hit(origin, dir))
        .filter(|&t| t <= range)
        .fold(f64::INFINITY, f64::min)
}

/// Proximity readings around the airframe. The building and the detectable
/// core of each obstacle are sensed; the ground is left to touchdown logic.
pub fn sense_collisions(s: &DroneState, spec: &ScenarioSpec, p: &SensingParams) -> CollisionReadings {
    let mut targets = vec![spec.building()];
    targets.extend(spec.obstacles.iter().filter_map(|o| o.detectable_volume()));

    let origin = s.pos_true;
    let half = std::f64::consts::PI / SECTORS as f64;
    let rays = p.rays_per_sector.max(1);
    let mut out = CollisionReadings::clear();
    for (i, reading) in out.sectors.iter_mut().enumerate() {
        let center = sector_bearing(s.yaw, i);
        let d = (0..rays)
            .map(|k| {
                let offset = if rays == 1 {
                    0.0
                } else {
                    -half + 2.0 * half * k as f64 / (rays - 1) as f64
                };
                let a = center + offset;
                nearest(origin, Vec3::new(a.cos(), a.sin(), 0.0), &targets, p.max_range_m)
            })
            .fold(f64::INFINITY, f64::min);
        *reading = Reading::from_distance(d, p);
    }
    out.up = Reading::from_distance(nearest(origin, Vec3::Z, &targets, p.max_range_m), p);
    out.down = Reading::from_distance(nearest(origin, -Vec3::Z, &targets, p.max_range_m), p);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flightsim::WindParams;
    use crate::scenario::{FacadeSelection, Face, Obstacle, ObstacleKind};

    fn spec() -> ScenarioSpec {
        ScenarioSpec {
            schema_version: 1,
            name: String::new(),
            building_size_m: Vec3::new(34.0, 29.46, 62.0),
            facade: FacadeSelection { face: Face::South },
            layers: 12,
            col_spacing_m: 6.0,
            defects: vec![],
            gps_zones: vec![],
            obstacles: vec![],
            wind: WindParams::default(),
            battery_full_duration_s: 260.0,
            home_point_m: Vec3::new(0.0, -40.0, 0.0),
            standoff_distance_m: 6.0,
            boundary_margin_m: 10.0,
            seed: 1,
        }
    }

    fn drone(p: Vec3, yaw: f64) -> DroneState {
        let mut s = DroneState::on_ground(p, yaw, 0.05);
        s.airborne = true;
        s
    }

    #[test]
    fn warn_level_from_building_ahead() {
        // facing +y toward the south wall, 4 m away
        let s = drone(Vec3::new(17.0, -4.0, 20.0), std::f64::consts::FRAC_PI_2);
        let r = sense_collisions(&s, &spec(), &SensingParams::default());
        assert!((r.sectors[0].distance_m - 4.0).abs() < 1e-9);
        assert_eq!(r.sectors[0].level, ReadingLevel::Warn);
        assert_eq!(r.sectors[4].level, ReadingLevel::Clear);
    }

    #[test]
    fn open_sky_is_clear() {
        let s = drone(Vec3::new(200.0, -200.0, 30.0), 0.0);
        let r = sense_collisions(&s, &spec(), &SensingParams::default());
        for (_, reading) in r.all() {
            assert_eq!(*reading, Reading::CLEAR);
        }
        assert_eq!(r.worst(), ReadingLevel::Clear);
    }

    #[test]
    fn tree_branches_are_invisible() {
        let mut sc = spec();
        // 8 x 8 m canopy, detectable trunk core 0.8 x 0.8 m
        sc.obstacles.push(Obstacle {
            kind: ObstacleKind::Tree,
            volume: Aabb::new(Vec3::new(52.0, -30.0, 0.0), Vec3::new(60.0, -22.0, 15.0)),
            sensor_detectable_fraction: 0.1,
        });
        // inside the canopy, 1 m from its west face, nose pointing west
        let s = drone(Vec3::new(53.0, -23.0, 10.0), std::f64::consts::PI);
        let r = sense_collisions(&s, &sc, &SensingParams::default());
        assert_eq!(r.sectors[0].distance_m, f64::INFINITY);
        assert_eq!(r.sectors[0].level, ReadingLevel::Clear);
        // the trunk itself (x 55.6..56.4, y -26.4..-25.6) is still seen from the side
        let s = drone(Vec3::new(56.0, -23.0, 10.0), -std::f64::consts::FRAC_PI_2);
        let r = sense_collisions(&s, &sc, &SensingParams::default());
        assert!((r.sectors[0].distance_m - 2.6).abs() < 1e-9);
        assert_eq!(r.sectors[0].level, ReadingLevel::Warn);
    }

    #[test]
    fn levels_monotone_in_distance() {
        let p = SensingParams::default();
        let mut last = ReadingLevel::Critical;
        for i in 0..1000 {
            let level = Reading::from_distance(i as f64 * 0.01, &p).level;
            assert!(level <= last);
            last = level;
        }
        assert_eq!(Reading::from_distance(1.99, &p).level, ReadingLevel::Critical);
        assert_eq!(Reading::from_distance(2.0, &p).level, ReadingLevel::Warn);
        assert_eq!(Reading::from_distance(5.0, &p).level, ReadingLevel::Clear);
    }

    #[test]
    fn clear_reading_serializes_as_null() {
        let s = serde_json::to_string(&Reading::CLEAR).unwrap();
        assert_eq!(s, r#"{"distance_m":null,"level":"clear"}"#);
        let back: Reading = serde_json::from_str(&s).unwrap();
        assert_eq!(back, Reading::CLEAR);
    }
}
