//! The authoritative per-session loop, independent of any transport.
//!
//! Inputs queue between ticks with the latest one winning; a tick without
//! a queued input holds the previous axes and presses nothing.

use safespect_core::autopilot::PathPlan;
use safespect_core::config::EngineConfig;
use safespect_core::error::GeometryError;
use safespect_core::hud::{InterfaceMode, HUD_SCHEMA_VERSION};
use safespect_core::input::InputFrame;
use safespect_core::mission::Metrics;
use safespect_core::scenario::ScenarioSpec;
use safespect_core::script::Script;
use safespect_core::session::Session;
use safespect_core::telemetry::{TelemetryHeader, TelemetryLog};

use crate::protocol::{WireMessage, PROTOCOL_VERSION};

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub log: TelemetryLog,
    pub metrics: Metrics,
}

#[derive(Debug)]
pub struct TickLoop {
    session: Session,
    log: TelemetryLog,
    pending: Option<InputFrame>,
    script: Option<Vec<Option<InputFrame>>>,
}

impl TickLoop {
    /// A `script` replaces live input: tick `t` takes the script's frame for
    /// `t`, or holds the previous one.
    pub fn new(
        spec: ScenarioSpec,
        config: EngineConfig,
        mode: InterfaceMode,
        script: Option<&Script>,
    ) -> Result<Self, GeometryError> {
        let log = TelemetryLog::new(TelemetryHeader::new(&spec, &config, mode));
        Ok(Self {
            session: Session::new(spec, config, mode)?,
            log,
            pending: None,
            script: script.map(Script::dense),
        })
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn plan(&self) -> &PathPlan {
        self.session.plan()
    }

    pub fn scripted(&self) -> bool {
        self.script.is_some()
    }

    pub fn finished(&self) -> bool {
        self.session.ended().is_some()
    }

    pub fn welcome(&self) -> WireMessage {
        let spec = self.session.spec();
        WireMessage::Welcome {
            schema_version: PROTOCOL_VERSION,
            hud_schema_version: HUD_SCHEMA_VERSION,
            scenario_digest: spec.digest(),
            scenario: spec.clone(),
            mode: self.session.mode(),
            plan: self.session.plan().clone(),
            tick_rate_hz: self.session.config().tick_rate_hz,
            tick: self.session.tick(),
        }
    }

    /// Queue a live input for the next tick. Its `tick` field is ignored.
    /// Ignored while a script drives the session.
    pub fn queue_input(&mut self, input: InputFrame) {
        if self.script.is_none() {
            self.pending = Some(input);
        }
    }

    /// Run one tick. Returns its `Frame`, followed by `MissionEnd` on the
    /// tick that ends the mission; empty once the mission is over.
    pub fn tick(&mut self) -> Vec<WireMessage> {
        let input = match &self.script {
            Some(frames) => frames.get(self.session.tick() as usize).cloned().flatten(),
            None => self.pending.take(),
        };
        let Some(out) = self.session.step(input) else {
            return Vec::new();
        };
        let mut msgs = vec![WireMessage::Frame {
            tick: out.record.tick,
            drone: out.record.drone.clone(),
            hud: out.frame,
            events: out.record.events.clone(),
        }];
        self.log.record_tick(out.record).expect("session ticks are sequential");
        if self.finished() {
            msgs.push(WireMessage::MissionEnd {
                metrics: self.session.metrics(),
                stream_hash: self.log.stream_hash(),
            });
        }
        msgs
    }

    pub fn log(&self) -> &TelemetryLog {
        &self.log
    }

    pub fn outcome(&self) -> SessionOutcome {
        SessionOutcome {
            log: self.log.clone(),
            metrics: self.session.metrics(),
        }
    }
}
