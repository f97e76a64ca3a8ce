//! Input scripts: `.script.jsonl`, an optional header then sparse
//! `InputFrame` lines in tick order. Ticks without a line hold the previous
//! axes and gaze and press nothing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;
use crate::error::DocumentError;
use crate::input::InputFrame;
use crate::scenario::ScenarioSpec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptHeader {
    pub kind: ScriptKind,
    pub seed: u64,
    pub scenario_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptKind {
    Script,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Script {
    pub header: Option<ScriptHeader>,
    pub frames: Vec<InputFrame>,
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("line {line}: {source}")]
    Document {
        line: usize,
        #[source]
        source: DocumentError,
    },
    #[error("line {line}: tick {tick} is not after tick {previous}")]
    Order { line: usize, tick: u64, previous: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptMismatch {
    #[error("script was recorded for seed {script} but the scenario seed is {scenario}")]
    Seed { script: u64, scenario: u64 },
    #[error("script scenario hash {script} does not match {scenario}")]
    ScenarioHash { script: String, scenario: String },
}

impl Script {
    pub fn for_scenario(spec: &ScenarioSpec, frames: Vec<InputFrame>) -> Self {
        Self {
            header: Some(ScriptHeader {
                kind: ScriptKind::Script,
                seed: spec.seed,
                scenario_hash: spec.digest(),
            }),
            frames,
        }
    }

    /// A script without a header runs against any scenario.
    pub fn check(&self, spec: &ScenarioSpec) -> Result<(), ScriptMismatch> {
        let Some(h) = &self.header else { return Ok(()) };
        if h.seed != spec.seed {
            return Err(ScriptMismatch::Seed {
                script: h.seed,
                scenario: spec.seed,
            });
        }
        let digest = spec.digest();
        if h.scenario_hash != digest {
            return Err(ScriptMismatch::ScenarioHash {
                script: h.scenario_hash.clone(),
                scenario: digest,
            });
        }
        Ok(())
    }

    /// One slot per tick up to the last scripted tick.
    pub fn dense(&self) -> Vec<Option<InputFrame>> {
        let len = self.frames.last().map(|f| f.tick as usize + 1).unwrap_or(0);
        let mut out = vec![None; len];
        for f in &self.frames {
            out[f.tick as usize] = Some(f.clone());
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        if let Some(h) = &self.header {
            out.push_str(&canonical::to_line(h));
            out.push('\n');
        }
        for f in &self.frames {
            out.push_str(&canonical::to_line(f));
            out.push('\n');
        }
        out
    }
}

pub fn parse_script(text: &str) -> Result<Script, ScriptError> {
    let mut script = Script::default();
    let mut previous: Option<u64> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if previous.is_none() && script.header.is_none() && line.contains("\"kind\"") {
            let h = canonical::from_str(line).map_err(|source| ScriptError::Document { line: n, source })?;
            script.header = Some(h);
            continue;
        }
        let f: InputFrame = canonical::from_str(line).map_err(|source| ScriptError::Document { line: n, source })?;
        if let Some(p) = previous {
            if f.tick <= p {
                return Err(ScriptError::Order {
                    line: n,
                    tick: f.tick,
                    previous: p,
                });
            }
        }
        previous = Some(f.tick);
        script.frames.push(f);
    }
    Ok(script)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_and_sparse_frames() {
        let text = concat!(
            r#"{"kind":"script","seed":7,"scenario_hash":"ab"}"#,
            "\n",
            r#"{"tick":0,"buttons":{"takeoff":true}}"#,
            "\n\n",
            r#"{"tick":5,"sticks":[0,0,0,0.5]}"#,
            "\n"
        );
        let s = parse_script(text).unwrap();
        assert_eq!(s.header.as_ref().unwrap().seed, 7);
        assert_eq!(s.frames.len(), 2);
        let dense = s.dense();
        assert_eq!(dense.len(), 6);
        assert!(dense[1].is_none());
        assert_eq!(dense[5].as_ref().unwrap().sticks[3], 0.5);
        assert_eq!(parse_script(&s.to_jsonl()).unwrap(), s);
    }

    #[test]
    fn out_of_order_rejected() {
        let text = "{\"tick\":3}\n{\"tick\":3}\n";
        assert!(matches!(parse_script(text), Err(ScriptError::Order { line: 2, .. })));
    }

    #[test]
    fn unknown_field_names_path() {
        let err = parse_script("{\"tick\":0,\"stick\":[0,0,0,0]}\n").unwrap_err();
        let ScriptError::Document { source, .. } = err else { panic!() };
        assert!(matches!(source, DocumentError::Schema { .. }));
    }
}
