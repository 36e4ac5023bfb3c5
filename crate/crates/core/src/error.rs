use thiserror::Error;

/// Errors raised by the simulation modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // operator algebra
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero vector at position {0} in projector basis")]
    ZeroVector(usize),
    #[error("empty projector basis")]
    EmptyBasis,
    #[error("not a projector: ‖P²−P‖ = {idempotency:.3e}, ‖P−P†‖ = {hermiticity:.3e}")]
    NotAProjector { idempotency: f64, hermiticity: f64 },
    #[error("projectors {first} and {second} are not orthogonal (‖PₖPⱼ‖ = {norm:.3e})")]
    NonOrthogonal { first: usize, second: usize, norm: f64 },
    #[error("partition is incomplete: ‖ΣPₖ − I‖ = {0:.3e}")]
    IncompletePartition(f64),
    #[error("length mismatch: {what} has {found} entries, expected {expected}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },
    #[error("unsupported truncation order {0} (expected 1, 2 or 3)")]
    UnsupportedOrder(usize),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    // grids and fields
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between fields")]
    GridMismatch,
    #[error("spin dimension mismatch: expected {expected}, found {found}")]
    SpinMismatch { expected: usize, found: usize },
    #[error("packet {index} touches the grid boundary: {detail}")]
    PacketTouchesBoundary { index: usize, detail: String },
    #[error("superposition has zero norm")]
    ZeroNorm,
    #[error("region box {index} is not aligned to grid nodes on axis {axis}")]
    MisalignedRegion { index: usize, axis: usize },
    #[error("region boxes {first} ('{first_label}') and {second} ('{second_label}') overlap")]
    OverlappingRegions { first: usize, first_label: String, second: usize, second_label: String },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("accuracy guard violated: dt·max|η|/ħ = {0:.3e} ≥ 0.1")]
    AccuracyGuard(f64),
    #[error("coincidence condition violated: {0}")]
    CoincidenceViolation(String),
    #[error("negative duration {0}")]
    NegativeDuration(f64),

    // bohmian
    #[error("position {position:?} is too close to a node (|ψ|² = {density:.3e})")]
    NodeProximity { position: Vec<f64>, density: f64 },
    #[error("position {0:?} lies outside the grid")]
    OutsideGrid(Vec<f64>),
    #[error("degenerate density: nothing to sample")]
    DegenerateDensity,
    #[error("invalid ensemble spec: {0}")]
    InvalidEnsemble(String),

    // stochastic
    #[error("invalid parameter density: {0}")]
    InvalidDensity(String),
    #[error("integrand returned a non-finite value")]
    NonIntegrable,
    #[error("quadrature supports at most 3 stochastic dimensions, got {0}")]
    TooManyDimensions(usize),

    // experiments
    #[error("config error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("config invariant '{name}' violated: {message}")]
    Invariant { name: &'static str, message: String },
    #[error("overlap precondition violated: {0}")]
    OverlapViolation(String),
    #[error("stage '{stage}': {source}")]
    Stage { stage: &'static str, source: Box<Error> },
    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error with stage context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
