use thiserror::Error;

/// Failure to read a JSON document (scenario, engine config, script, log line).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
}

/// Geometry that cannot be laid out.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("facade point ({u}, {v}) is outside the {width} x {height} m facade")]
    OutOfBounds {
        u: f64,
        v: f64,
        width: f64,
        height: f64,
    },
    #[error("cannot place {requested} defects without overlap on layer {layer}")]
    NoRoomForDefects { layer: u32, requested: usize },
    #[error("waypoint {index} at {pos:?} lies outside the mission boundary")]
    PathOutsideBoundary { index: usize, pos: [f64; 3] },
    #[error("invalid path geometry: {0}")]
    Invalid(String),
}
