//! Tick logs: canonical records, running digests, replay.
//!
//! A `.telemetry.jsonl` file is a header line, one line per tick, and an
//! optional footer. Each tick line carries `chain`, the SHA-256 of every
//! canonical record line up to and including it, so the final chain is the
//! stream hash and a replay can name the first tick that differs.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::autopilot::AutopilotState;
use crate::canonical;
use crate::config::EngineConfig;
use crate::error::{DocumentError, GeometryError};
use crate::events::Event;
use crate::flightsim::DroneState;
use crate::hud::{InterfaceMode, ViewState, HUD_SCHEMA_VERSION};
use crate::input::InputFrame;
use crate::mission::{mark_defect, path_deviation, score_marks, Metrics};
use crate::autopilot::generate_path;
use crate::geom::Vec3;
use crate::scenario::ScenarioSpec;
use crate::session::Session;

pub const TELEMETRY_FORMAT_VERSION: u32 = 1;

/// SHA-256 of zero bytes: the stream hash of a log with no records.
pub const EMPTY_STREAM_HASH: &str = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryRecord {
    pub tick: u64,
    /// The input actually applied, after hold-last expansion.
    pub input: InputFrame,
    pub drone: DroneState,
    pub autopilot: AutopilotState,
    pub view: ViewState,
    pub events: Vec<Event>,
    pub hud_element_count: usize,
}

impl TelemetryRecord {
    pub fn canonical_line(&self) -> String {
        canonical::to_line(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryHeader {
    pub format_version: u32,
    pub hud_schema_version: u32,
    pub scenario_hash: String,
    pub engine_config_hash: String,
    pub seed: u64,
    pub mode: InterfaceMode,
    pub scenario: ScenarioSpec,
    pub engine_config: EngineConfig,
}

impl TelemetryHeader {
    pub fn new(spec: &ScenarioSpec, config: &EngineConfig, mode: InterfaceMode) -> Self {
        Self {
            format_version: TELEMETRY_FORMAT_VERSION,
            hud_schema_version: HUD_SCHEMA_VERSION,
            scenario_hash: spec.digest(),
            engine_config_hash: config.digest(),
            seed: spec.seed,
            mode,
            scenario: spec.clone(),
            engine_config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryFooter {
    pub ticks: u64,
    pub stream_hash: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MetaLine {
    Header(TelemetryHeader),
    Footer(TelemetryFooter),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("tick {got} does not follow {expected_after:?}")]
pub struct SequenceError {
    pub expected_after: Option<u64>,
    pub got: u64,
}

/// In-memory log with an incrementally maintained stream hash.
#[derive(Debug, Clone)]
pub struct TelemetryLog {
    pub header: TelemetryHeader,
    records: Vec<TelemetryRecord>,
    chains: Vec<String>,
    hasher: Sha256,
}

impl TelemetryLog {
    pub fn new(header: TelemetryHeader) -> Self {
        Self {
            header,
            records: Vec::new(),
            chains: Vec::new(),
            hasher: Sha256::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TelemetryRecord] {
        &self.records
    }

    pub fn chains(&self) -> &[String] {
        &self.chains
    }

    /// Append one record; ticks must run 0, 1, 2, ...
    pub fn record_tick(&mut self, rec: TelemetryRecord) -> Result<(), SequenceError> {
        let last = self.records.last().map(|r| r.tick);
        let ok = match last {
            None => rec.tick == 0,
            Some(t) => rec.tick == t + 1,
        };
        if !ok {
            return Err(SequenceError {
                expected_after: last,
                got: rec.tick,
            });
        }
        self.hasher.update(rec.canonical_line().as_bytes());
        self.hasher.update(b"\n");
        self.chains.push(hex::encode(self.hasher.clone().finalize()));
        self.records.push(rec);
        Ok(())
    }

    pub fn stream_hash(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }

    /// Serialize as `.telemetry.jsonl` text.
    pub fn to_jsonl(&self, metrics: Option<&Metrics>) -> String {
        let mut out = canonical::to_line(&MetaLine::Header(self.header.clone()));
        out.push('\n');
        for (rec, chain) in self.records.iter().zip(&self.chains) {
            let mut v = canonical::to_value(rec);
            v.as_object_mut()
                .expect("records serialize as objects")
                .insert("chain".into(), Value::String(chain.clone()));
            out.push_str(&serde_json::to_string(&v).expect("value serializes"));
            out.push('\n');
        }
        if let Some(m) = metrics {
            out.push_str(&canonical::to_line(&MetaLine::Footer(TelemetryFooter {
                ticks: self.records.len() as u64,
                stream_hash: self.stream_hash(),
                metrics: m.clone(),
            })));
            out.push('\n');
        }
        out
    }
}

/// Stream hash of a sequence of records.
pub fn stream_hash(records: &[TelemetryRecord]) -> String {
    let mut h = Sha256::new();
    for r in records {
        h.update(r.canonical_line().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("log is empty or does not start with a header line")]
    MissingHeader,
    #[error("line {line}: {source}")]
    Document {
        line: usize,
        #[source]
        source: DocumentError,
    },
    #[error("line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// A log read back from disk.
#[derive(Debug, Clone)]
pub struct ParsedLog {
    pub header: TelemetryHeader,
    pub records: Vec<TelemetryRecord>,
    /// `chain` values as stored in the file.
    pub chains: Vec<String>,
    pub footer: Option<TelemetryFooter>,
}

impl ParsedLog {
    /// No footer: the writer stopped before the mission ended.
    pub fn truncated(&self) -> bool {
        self.footer.is_none()
    }

    pub fn inputs(&self) -> Vec<InputFrame> {
        self.records.iter().map(|r| r.input.clone()).collect()
    }
}

fn doc_err(line: usize, source: DocumentError) -> TelemetryError {
    TelemetryError::Document { line, source }
}

pub fn parse_log(text: &str) -> Result<ParsedLog, TelemetryError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(TelemetryError::MissingHeader)?;
    let header = match canonical::from_str::<MetaLine>(first) {
        Ok(MetaLine::Header(h)) => h,
        _ => return Err(TelemetryError::MissingHeader),
    };
    let mut records = Vec::new();
    let mut chains = Vec::new();
    let mut footer = None;
    let mut last: Option<u64> = None;
    for (i, line) in lines {
        let n = i + 1;
        if footer.is_some() {
            return Err(TelemetryError::Corrupt {
                line: n,
                message: "content after footer".into(),
            });
        }
        let mut v: Value = canonical::from_str(line).map_err(|e| doc_err(n, e))?;
        let obj = v.as_object_mut().ok_or_else(|| TelemetryError::Corrupt {
            line: n,
            message: "expected an object".into(),
        })?;
        if obj.contains_key("kind") {
            match canonical::from_str::<MetaLine>(line).map_err(|e| doc_err(n, e))? {
                MetaLine::Footer(f) => footer = Some(f),
                MetaLine::Header(_) => {
                    return Err(TelemetryError::Corrupt {
                        line: n,
                        message: "second header".into(),
                    })
                }
            }
            continue;
        }
        let chain = match obj.remove("chain") {
            Some(Value::String(s)) => s,
            _ => {
                return Err(TelemetryError::Corrupt {
                    line: n,
                    message: "missing chain digest".into(),
                })
            }
        };
        let rec: TelemetryRecord =
            canonical::from_str(&serde_json::to_string(&v).expect("value serializes")).map_err(|e| doc_err(n, e))?;
        let ok = match last {
            None => rec.tick == 0,
            Some(t) => rec.tick == t + 1,
        };
        if !ok {
            return Err(SequenceError {
                expected_after: last,
                got: rec.tick,
            }
            .into());
        }
        last = Some(rec.tick);
        records.push(rec);
        chains.push(chain);
    }
    Ok(ParsedLog {
        header,
        records,
        chains,
        footer,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Check a log header against the scenario and engine config it is about
/// to be replayed with.
pub fn check_header(header: &TelemetryHeader, spec: &ScenarioSpec, config: &EngineConfig) -> Result<(), ReplayError> {
    if header.seed != spec.seed {
        return Err(ReplayError::ScenarioMismatch(format!(
            "log seed {} but scenario seed {}",
            header.seed, spec.seed
        )));
    }
    if header.scenario_hash != spec.digest() {
        return Err(ReplayError::ScenarioMismatch("scenario hash differs from log header".into()));
    }
    if header.engine_config_hash != config.digest() {
        return Err(ReplayError::ScenarioMismatch("engine config hash differs from log header".into()));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub log: TelemetryLog,
    pub final_state: DroneState,
    pub metrics: Metrics,
}

/// Run a session over per-tick inputs. `None` entries hold the previous
/// axes. With `until_end`, keeps ticking past the input list until the
/// mission ends; otherwise stops at the last input.
pub fn run_inputs(
    spec: &ScenarioSpec,
    config: &EngineConfig,
    mode: InterfaceMode,
    inputs: &[Option<InputFrame>],
    until_end: bool,
) -> Result<RunOutcome, GeometryError> {
    let mut session = Session::new(spec.clone(), config.clone(), mode)?;
    let mut log = TelemetryLog::new(TelemetryHeader::new(spec, config, mode));
    let mut i = 0usize;
    loop {
        if !until_end && i >= inputs.len() {
            break;
        }
        let input = inputs.get(i).cloned().flatten();
        match session.step(input) {
            Some(out) => log.record_tick(out.record).expect("session ticks are sequential"),
            None => break,
        }
        i += 1;
    }
    Ok(RunOutcome {
        final_state: session.drone().clone(),
        metrics: session.metrics(),
        log,
    })
}

/// Re-run recorded inputs. A list shorter than the original run stops at
/// its last tick and flags the metrics partial.
pub fn replay(
    spec: &ScenarioSpec,
    config: &EngineConfig,
    header: &TelemetryHeader,
    inputs: &[InputFrame],
) -> Result<RunOutcome, ReplayError> {
    check_header(header, spec, config)?;
    let inputs: Vec<Option<InputFrame>> = inputs.iter().cloned().map(Some).collect();
    Ok(run_inputs(spec, config, header.mode, &inputs, false)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub ticks: u64,
    pub stream_hash: String,
    /// First tick whose recomputed digest differs from the file.
    pub first_divergence: Option<u64>,
    pub metrics: Metrics,
}

/// Replay a parsed log against its own header and compare digests tick by
/// tick.
pub fn replay_log(log: &ParsedLog) -> Result<ReplayReport, ReplayError> {
    let out = replay(
        &log.header.scenario,
        &log.header.engine_config,
        &log.header,
        &log.inputs(),
    )?;
    let mut first = out
        .log
        .chains()
        .iter()
        .zip(&log.chains)
        .position(|(a, b)| a != b)
        .map(|i| i as u64);
    if first.is_none() && out.log.len() != log.records.len() {
        first = Some(out.log.len().min(log.records.len()) as u64);
    }
    if first.is_none() {
        if let Some(f) = &log.footer {
            if f.stream_hash != out.log.stream_hash() {
                first = Some(log.records.len().saturating_sub(1) as u64);
            }
        }
    }
    Ok(ReplayReport {
        ticks: out.log.len() as u64,
        stream_hash: out.log.stream_hash(),
        first_divergence: first,
        metrics: out.metrics,
    })
}

/// Recompute the mission metrics from the log alone.
///
/// Marks are re-cast from each tick's input against the previous tick's
/// state, coverage comes from the covered-waypoint events, and deviation
/// from the airborne track.
pub fn metrics_from_log(log: &ParsedLog) -> Result<Metrics, GeometryError> {
    let spec = &log.header.scenario;
    let config = &log.header.engine_config;
    let plan = generate_path(spec, &config.autopilot)?;
    let dt = config.dt();

    let mut marks = Vec::new();
    let mut covered = vec![false; plan.len()];
    let mut track = Vec::new();
    let mut disengages = 0;
    let mut airborne_ticks = 0u64;
    let mut end_reason = None;
    let mut prev: Option<&DroneState> = None;
    for r in &log.records {
        if let (Some(pixel), Some(p)) = (r.input.mark, prev) {
            if p.airborne {
                marks.push(mark_defect(p, pixel, spec, &config.camera, r.tick as f64 * dt));
            }
        }
        for e in &r.events {
            match e {
                Event::WaypointCovered { waypoint } if *waypoint < covered.len() => covered[*waypoint] = true,
                Event::AutopilotDisengaged { .. } => disengages += 1,
                Event::MissionEnd { reason } => end_reason = Some(*reason),
                _ => {}
            }
        }
        if r.drone.airborne {
            airborne_ticks += 1;
            track.push(r.drone.pos_true);
        }
        prev = Some(&r.drone);
    }
    let score = score_marks(&marks, spec);
    let waypoints: Vec<Vec3> = plan.waypoints.iter().map(|w| w.pos).collect();
    let covered_count = covered.iter().filter(|&&c| c).count();
    Ok(Metrics {
        marked_pct: score.marked_pct,
        false_marks: score.false_marks,
        matched_defects: score.matched,
        total_defects: spec.defects.len(),
        deviation_m: path_deviation(&waypoints, &track).ok(),
        coverage_pct: if covered.is_empty() {
            0.0
        } else {
            100.0 * covered_count as f64 / covered.len() as f64
        },
        covered_waypoints: covered_count,
        flight_time_s: airborne_ticks as f64 * dt,
        disengage_events: disengages,
        ticks: log.records.len() as u64,
        end_reason,
        partial: end_reason.is_none() || log.truncated(),
    })
}
