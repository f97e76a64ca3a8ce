//! The shipped scenarios and the bundled perfect-flight script stay in sync
//! with the generators that produced them.

mod common;

use common::*;
use safespect_core::hud::InterfaceMode;
use safespect_core::pilot::{fly_perfect_mission, PilotParams};
use safespect_core::scenario::{emit_scenario, generate_defect_layout, parse_scenario_unchecked, validate_scenario};

#[test]
fn stock_defects_come_from_the_layout_generator() {
    for name in STOCK {
        let path = scenario_path(name);
        let text = std::fs::read_to_string(&path).unwrap();
        let mut spec = parse_scenario_unchecked(&text).unwrap();
        let layout = generate_defect_layout(spec.seed, &spec.facade_frame(), spec.layers).unwrap();
        if update_golden() {
            spec.defects = layout;
            std::fs::write(&path, emit_scenario(&spec)).unwrap();
            continue;
        }
        assert_eq!(spec.defects, layout, "{name}");
        assert!(validate_scenario(&spec).is_empty(), "{name}");
        assert!((11..=12).contains(&spec.defects.len()), "{name}");
        assert_eq!(text, emit_scenario(&spec), "{name} is not in canonical form");
    }
}

#[test]
fn bundled_script_is_current() {
    let spec = load_scenario("short-facade");
    let script = fly_perfect_mission(&spec, &config(), InterfaceMode::AdaptAr, &PilotParams::default()).unwrap();
    let path = perfect_script_path();
    if update_golden() {
        std::fs::write(&path, script.to_jsonl()).unwrap();
        return;
    }
    assert_eq!(std::fs::read_to_string(&path).unwrap(), script.to_jsonl());
}
