//! Discrete things that happen during a tick.

use serde::{Deserialize, Serialize};

use crate::flightsim::ReadingLevel;
use crate::hud::ViewPhase;
use crate::mission::Mark;

/// Why the autopilot let go. Every disengage carries exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisengageCause {
    ManualInput,
    GpsLost,
    CollisionWarn,
    BatteryLow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngageRejection {
    TooFarFromPath,
    GpsLost,
    CollisionCritical,
    BatteryInsufficient,
    NotAirborne,
    /// Take-off or return-to-home is in progress.
    AutomatedManeuver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashCause {
    Ground,
    Building,
    Obstacle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Landed,
    Crashed,
    BatteryDepleted,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    TakeOff,
    EnteredBoundary,
    AutopilotEngaged { waypoint: usize },
    AutopilotRejected { reason: EngageRejection },
    AutopilotDisengaged { cause: DisengageCause },
    WaypointReached { waypoint: usize },
    WaypointCovered { waypoint: usize },
    MissionComplete,
    GpsLost,
    GpsRecovered,
    CollisionLevel { level: ReadingLevel },
    BatteryLow,
    BatteryCritical,
    RthStarted,
    RthCancelled,
    DefectMarked { mark: Mark },
    ViewChanged { from: ViewPhase, to: ViewPhase },
    Crash { cause: CrashCause },
    Landed,
    MissionEnd { reason: EndReason },
}
