//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use safespect_core::config::EngineConfig;
use safespect_core::flightsim::FlightPhase;
use safespect_core::geom::Vec3;
use safespect_core::input::InputFrame;
use safespect_core::pilot::{steer_sticks, PilotParams};
use safespect_core::session::Session;
use safespect_core::scenario::{parse_scenario, ScenarioSpec};
use safespect_core::script::{parse_script, Script};

pub const STOCK: [&str; 3] = ["short-facade", "long-facade-a", "long-facade-b"];

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario_path(name: &str) -> PathBuf {
    repo_root().join("scenarios").join(format!("{name}.scenario.json"))
}

pub fn load_scenario(name: &str) -> ScenarioSpec {
    let text = std::fs::read_to_string(scenario_path(name)).expect("stock scenario readable");
    parse_scenario(&text).expect("stock scenario valid")
}

pub fn perfect_script_path() -> PathBuf {
    repo_root().join("scripts/short-facade-perfect.script.jsonl")
}

pub fn load_perfect_script() -> Script {
    let text = std::fs::read_to_string(perfect_script_path()).expect("bundled script readable");
    parse_script(&text).expect("bundled script parses")
}

pub fn config() -> EngineConfig {
    EngineConfig::default()
}

/// Set `UPDATE_GOLDEN=1` to rewrite checked-in fixtures instead of comparing.
pub fn update_golden() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some()
}

/// A take-off followed by random stick changes, panel clicks and the odd
/// autopilot or RTH press, sparse like a recorded script.
pub fn random_script(seed: u64, ticks: u64) -> Vec<Option<InputFrame>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![None; ticks as usize];
    let mut first = InputFrame::idle(0);
    first.buttons.takeoff = true;
    out[0] = Some(first);
    let mut t = 150;
    while t < ticks {
        let mut f = InputFrame::idle(t);
        if rng.random_bool(0.7) {
            for a in f.sticks.iter_mut() {
                *a = rng.random_range(-0.4..0.4);
            }
        }
        if rng.random_bool(0.2) {
            f.mark = Some([rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]);
        }
        f.buttons.autopilot_toggle = rng.random_bool(0.15);
        f.buttons.rth = rng.random_bool(0.03);
        out[t as usize] = Some(f);
        t += rng.random_range(20..120);
    }
    out
}

pub fn idle_with(tick: u64, f: impl FnOnce(&mut InputFrame)) -> InputFrame {
    let mut i = InputFrame::idle(tick);
    f(&mut i);
    i
}

/// A facade with nothing that would interrupt the autopilot.
pub fn open_facade() -> ScenarioSpec {
    let mut spec = load_scenario("long-facade-a");
    spec.gps_zones.clear();
    spec.obstacles.clear();
    spec.battery_full_duration_s = 2000.0;
    spec
}

pub fn take_off(session: &mut Session) {
    let t = session.tick();
    session.step(Some(idle_with(t, |i| i.buttons.takeoff = true)));
    while session.drone().phase != FlightPhase::Flying {
        session.step(None).expect("still running");
    }
}

/// Hand-fly to `target`, hover until settled, then release the sticks.
pub fn fly_to(session: &mut Session, target: Vec3) {
    let heading = session.spec().facade_frame().facing_yaw();
    let dynp = session.config().dynamics.clone();
    let p = PilotParams::default();
    let mut settled = 0;
    while settled < 50 {
        let s = session.drone().clone();
        let sticks = steer_sticks(&s, target, heading, &dynp, &p);
        let t = session.tick();
        session.step(Some(idle_with(t, |i| i.sticks = sticks))).expect("still running");
        let near = session.drone().pos_true.distance(target) < 0.1 && session.drone().vel.norm() < 0.05;
        settled = if near { settled + 1 } else { 0 };
    }
    let t = session.tick();
    session.step(Some(InputFrame::idle(t)));
}

