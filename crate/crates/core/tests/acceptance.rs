//! Acceptance suite: one test per criterion, each printing a single
//! `PASS`/`FAIL` line with the measured values. Tolerances are pinned here.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use safespect_core::autopilot::LegPhase;
use safespect_core::events::Event;
use safespect_core::flightsim::{required_rth_fraction, BatteryModel};
use safespect_core::geom::Vec3;
use safespect_core::hud::{
    compose_hud_frame, ring_scale, rth_bar_segments, transition_view, HudInputs, InterfaceMode, Issue, IssueSet,
    ViewObservation, ViewPhase, ViewState,
};
use safespect_core::mission::{path_deviation, sart_score, SartError, SartInputs};
use safespect_core::pilot::{steer_sticks, PilotParams};
use safespect_core::session::Session;
use safespect_core::telemetry::{parse_log, replay_log, run_inputs};

const TICK_TOLERANCE: f64 = 1.0;
const SPEED_TOLERANCE: f64 = 0.01;
const DEVIATION_TOLERANCE: f64 = 1e-9;
const GPS_SLACK: f64 = 1e-12;

fn report(name: &str, ok: bool, detail: String) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

#[test]
fn ring_scaling() {
    let start = Instant::now();
    let got = [ring_scale(10.0), ring_scale(25.0), ring_scale(50.0)];
    let elapsed = start.elapsed();
    let ok = got == [1.0, 1.0, 2.0] && elapsed < Duration::from_secs(1);
    report("ring scaling", ok, format!("scale(10, 25, 50) = {got:?} in {elapsed:?}"));
}

#[test]
fn battery_timeline() {
    let spec = load_scenario("short-facade");
    assert_eq!(spec.battery_full_duration_s, 260.0);
    let mut session = Session::new(spec, config(), InterfaceMode::AdaptAr).unwrap();
    let dt = session.config().dt();
    let (mut low, mut critical) = (None, None);
    let mut input = Some(idle_with(0, |i| i.buttons.takeoff = true));
    // hover with centered sticks from the take-off tick on; that tick drains
    while let Some(out) = session.step(input.take()) {
        assert!(out.record.drone.airborne);
        let flown = (out.record.tick + 1) as f64 * dt;
        for e in &out.record.events {
            match e {
                Event::BatteryLow => low = Some(flown),
                Event::BatteryCritical => critical = Some(flown),
                _ => {}
            }
        }
        if critical.is_some() {
            break;
        }
    }
    let low = low.unwrap_or(f64::NAN);
    let critical = critical.unwrap_or(f64::NAN);
    let tol = TICK_TOLERANCE * dt;
    let ok = (low - 0.75 * 260.0).abs() <= tol && (critical - 0.90 * 260.0).abs() <= tol;
    report(
        "battery timeline",
        ok,
        format!("battery_low at {low:.2} s (want 195 +/- {tol}), critical at {critical:.2} s (want 234)"),
    );
}

/// The conformance table, written as plain rules over the four inputs.
fn expected_phase(from: ViewPhase, issues: bool, clicked: bool, in_boundary: bool) -> ViewPhase {
    use ViewPhase::*;
    match (from, in_boundary, issues, clicked) {
        (PreMission, false, _, _) => PreMission,
        (_, _, true, _) => Safety,
        (Mission, _, false, _) => Mission,
        (_, _, false, true) => Mission,
        (PreMission | Safety, _, false, false) => Safety,
    }
}

#[test]
fn adaptive_state_machine_conformance() {
    let phases = [ViewPhase::PreMission, ViewPhase::Mission, ViewPhase::Safety];
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for &from in &phases {
        for mask in 0u8..16 {
            let issues: IssueSet = Issue::ALL
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &i)| i)
                .collect();
            for clicked in [false, true] {
                for in_boundary in [false, true] {
                    // the previous issue set must not leak into the result
                    for stale in [IssueSet::new(), Issue::ALL.into_iter().collect()] {
                        let v = ViewState {
                            phase: from,
                            active_issues: stale,
                        };
                        let obs = ViewObservation {
                            issues: issues.clone(),
                            in_boundary,
                            autopilot_clicked: clicked,
                        };
                        let got = transition_view(&v, &obs);
                        let want = expected_phase(from, !issues.is_empty(), clicked, in_boundary);
                        cases += 1;
                        if got.phase != want || got.active_issues != issues {
                            mismatches.push(format!("{from:?} {issues:?} clicked={clicked} in={in_boundary} -> {got:?}"));
                        }
                    }
                }
            }
        }
    }
    let ok = mismatches.is_empty() && cases == 3 * 16 * 2 * 2 * 2;
    report(
        "state-machine conformance",
        ok,
        format!("{cases} cases, {} mismatches {:?}", mismatches.len(), mismatches.first()),
    );
}

#[test]
fn gps_gradualness() {
    let mut spec = load_scenario("short-facade");
    spec.obstacles.clear();
    spec.battery_full_duration_s = 1000.0;
    let frame = spec.facade_frame();
    let cfg = config();
    let limit = cfg.gps.rate * cfg.dt();
    let mut worst: f64 = 0.0;
    let mut lowest: f64 = 1.0;
    let mut losses = 0;
    for seed in [1u64, 2, 3] {
        spec.seed = seed;
        let mut session = Session::new(spec.clone(), cfg.clone(), InterfaceMode::AdaptAr).unwrap();
        take_off(&mut session);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut records = Vec::new();
        let mut target = session.drone().pos_true;
        let mut hold = 0;
        while records.len() < 10_000 {
            if hold == 0 {
                // hover spots spread around the degraded zone
                let u = rng.random_range(16.0..29.0);
                let v = rng.random_range(10.0..32.0);
                let w = rng.random_range(4.0..9.0);
                target = frame.point_out(u, v, w);
                hold = rng.random_range(200..400);
            }
            hold -= 1;
            let s = session.drone().clone();
            let sticks = steer_sticks(&s, target, frame.facing_yaw(), &cfg.dynamics, &PilotParams::default());
            let t = session.tick();
            let out = session.step(Some(idle_with(t, |i| i.sticks = sticks))).expect("flight continues");
            records.push(out.record);
        }
        for w in records.windows(2) {
            worst = worst.max((w[1].drone.gps_signal - w[0].drone.gps_signal).abs());
        }
        lowest = records.iter().map(|r| r.drone.gps_signal).fold(lowest, f64::min);
        losses += records.iter().flat_map(|r| &r.events).filter(|e| matches!(e, Event::GpsLost)).count();
    }
    let ok = worst <= limit + GPS_SLACK && losses > 0 && lowest < cfg.gps.lost_threshold;
    report(
        "gps gradualness",
        ok,
        format!("3 x 10000 ticks: max |dsignal| = {worst:.6} (limit {limit:.6}), {losses} fix losses, min signal {lowest:.3}"),
    );
}

/// Distance from `p` to segment `ab`, minimizing over the segment
/// parameter in closed form on each coordinate's quadratic.
fn oracle_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let (dx, dy, dz) = (b.x - a.x, b.y - a.y, b.z - a.z);
    let (ex, ey, ez) = (a.x - p.x, a.y - p.y, a.z - p.z);
    // |e + t d|^2 = A t^2 + 2 B t + C, minimized at t = -B / A
    let qa = dx * dx + dy * dy + dz * dz;
    let qb = ex * dx + ey * dy + ez * dz;
    let eval = |t: f64| {
        let (x, y, z) = (ex + t * dx, ey + t * dy, ez + t * dz);
        (x * x + y * y + z * z).sqrt()
    };
    let mut best = eval(0.0).min(eval(1.0));
    if qa > 0.0 {
        let t = -qb / qa;
        if (0.0..=1.0).contains(&t) {
            best = best.min(eval(t));
        }
    }
    best
}

fn oracle_deviation(waypoints: &[Vec3], track: &[Vec3]) -> f64 {
    let mut total = 0.0;
    for &w in waypoints {
        let mut best = f64::INFINITY;
        if track.len() == 1 {
            best = oracle_segment_distance(w, track[0], track[0]);
        }
        for k in 1..track.len() {
            best = best.min(oracle_segment_distance(w, track[k - 1], track[k]));
        }
        total += best;
    }
    total / waypoints.len() as f64
}

#[test]
fn deviation_metric_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdec0de);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let nw = rng.random_range(1..=50);
        let nt = rng.random_range(1..=5000);
        let waypoints: Vec<Vec3> = (0..nw)
            .map(|_| Vec3::new(rng.random_range(-5.0..40.0), rng.random_range(-10.0..0.0), rng.random_range(0.0..62.0)))
            .collect();
        let mut p = Vec3::new(17.0, -6.0, 2.0);
        let track: Vec<Vec3> = (0..nt)
            .map(|_| {
                p += Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.3..0.5));
                p
            })
            .collect();
        let got = path_deviation(&waypoints, &track).unwrap();
        let want = oracle_deviation(&waypoints, &track);
        worst = worst.max((got - want).abs());
    }
    let elapsed = start.elapsed();
    let ok = worst <= DEVIATION_TOLERANCE && elapsed < Duration::from_secs(10);
    report(
        "deviation oracle",
        ok,
        format!("100 instances, max |fast - brute| = {worst:e}, {elapsed:?}"),
    );
}

#[test]
fn end_to_end_scripted_mission() {
    let spec = load_scenario("short-facade");
    let script = load_perfect_script();
    script.check(&spec).expect("script targets the stock scenario");
    let start = Instant::now();
    let out = run_inputs(&spec, &config(), InterfaceMode::AdaptAr, &script.dense(), true).unwrap();
    let elapsed = start.elapsed();
    let m = &out.metrics;
    let ok = m.marked_pct == 100.0
        && m.coverage_pct == 100.0
        && m.false_marks == 0
        && m.total_defects > 0
        && elapsed < Duration::from_secs(10);
    report(
        "end-to-end scripted mission",
        ok,
        format!(
            "marked {}% ({}/{}), coverage {}%, false marks {}, end {:?}, {} ticks in {elapsed:?}",
            m.marked_pct, m.matched_defects, m.total_defects, m.coverage_pct, m.false_marks, m.end_reason, m.ticks
        ),
    );
}

#[test]
fn autopilot_kinematics() {
    let spec = open_facade();
    let mut session = Session::new(spec, config(), InterfaceMode::AdaptAr).unwrap();
    take_off(&mut session);
    let first = session.plan().waypoints[0].pos;
    fly_to(&mut session, first);
    let t = session.tick();
    let engage = session.step(Some(idle_with(t, |i| i.buttons.autopilot_toggle = true))).unwrap();
    assert!(session.autopilot().engaged, "engage failed");

    let cfg = session.config().clone();
    let tau_ticks = (1.0 / (cfg.dynamics.velocity_gain * cfg.dt())).ceil() as u64;
    let cruise = cfg.autopilot.cruise_speed;
    let expected_pause = (cfg.autopilot.pause_duration_s / cfg.dt()).round() as i64;

    let mut worst_speed: f64 = 0.0;
    let mut checked = 0usize;
    let mut leg_start = None;
    let mut reached: BTreeMap<usize, u64> = BTreeMap::new();
    for e in &engage.record.events {
        if let Event::WaypointReached { waypoint } = e {
            reached.insert(*waypoint, engage.record.tick);
        }
    }
    let mut pauses: BTreeMap<usize, i64> = BTreeMap::new();
    let mut complete = false;
    while !complete {
        let out = session.step(None).expect("mission still running");
        let a = &out.record.autopilot;
        complete |= out.record.events.iter().any(|e| matches!(e, Event::MissionComplete));
        assert!(a.engaged || complete, "autopilot dropped out at tick {}", out.record.tick);
        for e in &out.record.events {
            if let Event::WaypointReached { waypoint } = e {
                reached.insert(*waypoint, out.record.tick);
            }
        }
        // pause length: from the arrival tick to the tick the hold is released
        if let Some(w) = a.just_completed {
            pauses.insert(w, (out.record.tick - reached[&w]) as i64);
        }
        if a.phase == LegPhase::Cruising && a.just_completed.is_none() {
            let start = *leg_start.get_or_insert(out.record.tick);
            if out.record.tick >= start + tau_ticks {
                let speed = out.record.drone.vel.norm();
                worst_speed = worst_speed.max((speed - cruise).abs() / cruise);
                checked += 1;
            }
        } else {
            leg_start = None;
        }
    }
    let pause_errors: Vec<(usize, i64)> = pauses
        .iter()
        .map(|(&w, &n)| (w, n - expected_pause))
        .filter(|(_, e)| e.abs() as f64 > TICK_TOLERANCE)
        .collect();
    let ok = worst_speed <= SPEED_TOLERANCE
        && checked > 0
        && pauses.len() == session.plan().len()
        && pause_errors.is_empty();
    report(
        "autopilot kinematics",
        ok,
        format!(
            "{} legs, {checked} cruise ticks, max speed error {:.4}%, {} pauses, off-by-more-than-a-tick {:?}",
            session.plan().len(),
            worst_speed * 100.0,
            pauses.len(),
            pause_errors
        ),
    );
}

#[test]
fn determinism_and_replay() {
    let spec = load_scenario("short-facade");
    let cfg = config();
    let perfect = load_perfect_script().dense();
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, inputs, until_end) in [
        ("perfect", perfect, true),
        ("random-a", random_script(5, 3000), false),
        ("random-b", random_script(6, 3000), false),
    ] {
        let a = run_inputs(&spec, &cfg, InterfaceMode::AdaptAr, &inputs, until_end).unwrap();
        let b = run_inputs(&spec, &cfg, InterfaceMode::AdaptAr, &inputs, until_end).unwrap();
        let text = a.log.to_jsonl(Some(&a.metrics));
        let parsed = parse_log(&text).unwrap();
        let replayed = replay_log(&parsed).unwrap();
        let same = a.log.stream_hash() == b.log.stream_hash();
        let replay_same = replayed.stream_hash == a.log.stream_hash() && replayed.first_divergence.is_none();
        ok &= same && replay_same;
        lines.push(format!("{name}: runs equal={same} replay equal={replay_same}"));
    }
    let mut other = spec.clone();
    other.seed += 1;
    let inputs = random_script(5, 3000);
    let a = run_inputs(&spec, &cfg, InterfaceMode::AdaptAr, &inputs, false).unwrap();
    let c = run_inputs(&other, &cfg, InterfaceMode::AdaptAr, &inputs, false).unwrap();
    let seed_matters = a.log.stream_hash() != c.log.stream_hash();
    ok &= seed_matters;
    lines.push(format!("other seed differs={seed_matters}"));
    report("determinism and replay", ok, lines.join("; "));
}

#[test]
fn mode_contrast() {
    let spec = open_facade();
    let mut session = Session::new(spec, config(), InterfaceMode::AdaptAr).unwrap();
    take_off(&mut session);
    let first = session.plan().waypoints[0].pos;
    fly_to(&mut session, first);
    let t = session.tick();
    session.step(Some(idle_with(t, |i| i.buttons.autopilot_toggle = true)));
    let half = session.plan().len() / 2;
    while session.coverage().covered_count() < half {
        session.step(None).expect("mission running");
    }
    assert!(session.autopilot().engaged);
    let mission_view = session.view().clone();
    assert_eq!(mission_view.phase, ViewPhase::Mission);

    let count = |mode: InterfaceMode, view: &ViewState| {
        compose_hud_frame(HudInputs {
            mode,
            view,
            drone: session.drone(),
            autopilot: session.autopilot(),
            plan: session.plan(),
            spec: session.spec(),
            battery: session.battery_model(),
            coverage: session.coverage(),
            marks: session.marks(),
            gaze: None,
            config: session.config(),
            mission_complete: false,
        })
    };
    let mission = count(InterfaceMode::AdaptAr, &mission_view).elements.len();
    let full = count(InterfaceMode::FullAr, &mission_view).elements.len();
    let mut ok = count(InterfaceMode::TwodOnly, &mission_view).world_element_count() == 0;
    let mut safety_counts = Vec::new();
    for mask in 1u8..16 {
        let issues: IssueSet = Issue::ALL
            .iter()
            .enumerate()
            .filter(|(b, _)| mask & (1 << b) != 0)
            .map(|(_, &i)| i)
            .collect();
        let view = transition_view(
            &mission_view,
            &ViewObservation {
                issues,
                in_boundary: true,
                autopilot_clicked: false,
            },
        );
        assert_eq!(view.phase, ViewPhase::Safety);
        let safety = count(InterfaceMode::AdaptAr, &view).elements.len();
        let full_here = count(InterfaceMode::FullAr, &view).elements.len();
        ok &= mission < safety && safety <= full_here;
        ok &= count(InterfaceMode::TwodOnly, &view).world_element_count() == 0;
        safety_counts.push(safety);
    }
    ok &= mission < full;
    report(
        "mode contrast",
        ok,
        format!("adapt mission {mission}, adapt safety {safety_counts:?}, full {full}, 2d world elements 0"),
    );
}

#[test]
fn rth_bar() {
    let cfg = config();
    let m = BatteryModel::new(260.0, &cfg.battery);
    let mut ok = true;
    let mut worst_sum: f64 = 0.0;
    let mut yellow_rises = 0;
    for needed in [0.0, 0.1, 0.2, 0.3, 0.5] {
        let mut prev_yellow = f64::NEG_INFINITY;
        // drain from full to empty
        for step in (0..=10_000).rev() {
            let battery = step as f64 / 10_000.0;
            let bar = rth_bar_segments(battery, &m, needed);
            let sum: f64 = bar.segments().iter().sum();
            worst_sum = worst_sum.max((sum - 1.0).abs());
            if bar.yellow < prev_yellow {
                yellow_rises += 1;
            }
            prev_yellow = bar.yellow;
        }
        let at_floor = rth_bar_segments(0.05, &m, needed);
        ok &= at_floor.red == 1.0 && at_floor.segments()[0] == 1.0;
    }

    // and along a real hover drain, with the live RTH estimate
    let spec = load_scenario("short-facade");
    let home = spec.home_point_m;
    let run = run_inputs(
        &spec,
        &cfg,
        InterfaceMode::AdaptAr,
        &[Some(idle_with(0, |i| i.buttons.takeoff = true))],
        true,
    )
    .unwrap();
    let mut prev_yellow = f64::NEG_INFINITY;
    for r in run.log.records() {
        let needed = required_rth_fraction(&r.drone, &m, home);
        let bar = rth_bar_segments(r.drone.battery, &m, needed);
        worst_sum = worst_sum.max((bar.segments().iter().sum::<f64>() - 1.0).abs());
        if bar.yellow < prev_yellow - 1e-12 {
            yellow_rises += 1;
        }
        prev_yellow = bar.yellow;
    }
    ok &= worst_sum <= 1e-12 && yellow_rises == 0;
    report(
        "rth bar",
        ok,
        format!("max |sum - 1| = {worst_sum:e}, yellow increases with battery {yellow_rises} times, red(0.05) = 1"),
    );
}

#[test]
fn sart() {
    let score = |u: [u8; 3], d: [u8; 3], s: [u8; 4]| {
        sart_score(&SartInputs {
            demand: d,
            supply: s,
            understanding: u,
        })
    };
    // U = 18, D = 12, S = 14
    let main = score([6, 6, 6], [4, 4, 4], [4, 4, 3, 3]);
    let lowest = score([1; 3], [7; 3], [1; 4]);
    let highest = score([7; 3], [1; 3], [7; 4]);
    let all_ones = score([1; 3], [1; 3], [1; 4]);
    let below = score([0, 1, 1], [1; 3], [1; 4]);
    let above = score([1; 3], [1; 3], [1, 1, 1, 8]);
    let ok = main == Ok(20)
        && lowest == Ok(3 - (21 - 4))
        && highest == Ok(21 - (3 - 28))
        && all_ones == Ok(3 - (3 - 4))
        && matches!(below, Err(SartError::Range { value: 0, .. }))
        && matches!(above, Err(SartError::Range { value: 8, .. }));
    report(
        "sart",
        ok,
        format!("(18,12,14) -> {main:?}, min {lowest:?}, max {highest:?}, ones {all_ones:?}, 0 and 8 rejected"),
    );
}
