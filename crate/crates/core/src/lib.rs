//! Deterministic drone facade-inspection simulator with an adaptive
//! heads-up interface.
//!
//! Everything here is plain data and pure state transitions stepped at a
//! fixed rate; the [`session::Session`] loop wires the subsystems together
//! and [`telemetry`] records and replays it.

pub mod autopilot;
pub mod canonical;
pub mod config;
pub mod error;
pub mod events;
pub mod flightsim;
pub mod geom;
pub mod hud;
pub mod input;
pub mod mission;
pub mod pilot;
pub mod rng;
pub mod scenario;
pub mod script;
pub mod session;
pub mod telemetry;

pub use config::EngineConfig;
pub use geom::Vec3;
pub use hud::InterfaceMode;
pub use scenario::ScenarioSpec;
pub use session::Session;
