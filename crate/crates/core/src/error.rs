use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rotation matrix is not proper orthonormal")]
    InvalidRotation,

    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),

    #[error("unknown frame `{0}`")]
    UnknownFrame(String),

    #[error("state dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("suspension triangle degenerate: L_x = {length} outside ({lower}, {upper})")]
    TriangleDegenerate { length: f64, lower: f64, upper: f64 },

    #[error("cylinder chamber degenerate at stroke position {x} (stroke {stroke})")]
    ChamberDegenerate { x: f64, stroke: f64 },

    #[error("stability angle about edge {edge} is not positive ({angle} rad)")]
    NonPositiveAngle { edge: usize, angle: f64 },

    #[error("centre of mass outside the wheelbase (l1 = {l1}, l2 = {l2})")]
    ComOutsideWheelbase { l1: f64, l2: f64 },

    #[error("optimization infeasible: {constraint} violated by {violation}")]
    Infeasible { constraint: String, violation: f64 },

    #[error("optimizer reached {iterations} iterations without convergence")]
    MaxIterations { iterations: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("at t = {time} s: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
