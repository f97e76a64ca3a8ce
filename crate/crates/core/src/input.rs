//! Pilot input for one tick.

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

/// Stick axes, each in `[-1, 1]`, in the order `[yaw, throttle, roll, pitch]`
/// (left stick x/y, right stick x/y).
pub const AXIS_YAW: usize = 0;
pub const AXIS_THROTTLE: usize = 1;
pub const AXIS_ROLL: usize = 2;
pub const AXIS_PITCH: usize = 3;

/// Button edges: `true` only on the tick the button was pressed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Buttons {
    pub takeoff: bool,
    pub rth: bool,
    pub autopilot_toggle: bool,
}

impl Buttons {
    pub fn any(&self) -> bool {
        self.takeoff || self.rth || self.autopilot_toggle
    }
}

/// View-forward ray of the pilot, used as a gaze proxy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeRay {
    pub origin: Vec3,
    pub direction: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFrame {
    pub tick: u64,
    #[serde(default)]
    pub sticks: [f64; 4],
    #[serde(default)]
    pub buttons: Buttons,
    /// Normalized camera-panel pixel, `(0, 0)` top-left.
    #[serde(default)]
    pub mark: Option<[f64; 2]>,
    #[serde(default)]
    pub gaze: Option<GazeRay>,
}

impl InputFrame {
    pub fn idle(tick: u64) -> Self {
        Self {
            tick,
            sticks: [0.0; 4],
            buttons: Buttons::default(),
            mark: None,
            gaze: None,
        }
    }

    /// Clamp axes into range and drop out-of-range marks. Non-finite values
    /// become zero.
    pub fn sanitized(mut self) -> Self {
        for a in self.sticks.iter_mut() {
            *a = if a.is_finite() { a.clamp(-1.0, 1.0) } else { 0.0 };
        }
        if let Some([x, y]) = self.mark {
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                self.mark = None;
            }
        }
        if let Some(g) = self.gaze {
            if !g.origin.is_finite() || !g.direction.is_finite() || g.direction.norm() == 0.0 {
                self.gaze = None;
            }
        }
        self
    }

    /// The frame applied on a tick with no fresh input: axes and gaze held,
    /// no button edges, no mark.
    pub fn held(&self, tick: u64) -> Self {
        Self {
            tick,
            sticks: self.sticks,
            buttons: Buttons::default(),
            mark: None,
            gaze: self.gaze,
        }
    }

    pub fn exceeds_deadzone(&self, deadzone: f64) -> bool {
        self.sticks.iter().any(|a| a.abs() > deadzone)
    }
}
