use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible resolution: {0}")]
    InfeasibleResolution(String),

    #[error("meshing failure: {0}")]
    MeshingFailure(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("non-tangential input at point {index}: |v.n| = {normal_component:e}")]
    NonTangentialInput { index: usize, normal_component: f64 },

    #[error("normal trace violation at point {index}: |v.n| = {normal_component:e}")]
    NormalTraceViolation { index: usize, normal_component: f64 },

    #[error("negative slip coefficient {value} ({location})")]
    NegativeSlip { value: f64, location: String },

    #[error("inconsistent chart: {0}")]
    InconsistentChart(String),

    #[error("singular operator: {0}")]
    SingularOperator(String),

    #[error("linear solver failed to converge: {0}")]
    Nonconvergence(String),

    #[error("time step failed at t = {time}: {reason}")]
    StepFailure { time: f64, reason: String },

    #[error("divergence alarm at t = {time}: kinetic energy grew by {growth:e} (relative)")]
    DivergenceAlarm { time: f64, growth: f64 },

    #[error("field leaks outside the computed eigenspan (relative residual {0:e})")]
    SpanDeficiency(f64),

    #[error("fractional power undefined: {0}")]
    UndefinedPower(String),

    #[error("forcing support overlaps the probe ball B_t (|f| = {0:e} inside)")]
    SupportViolation(f64),

    #[error("invalid probe: {0}")]
    InvalidProbe(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_stage(self, stage: impl Into<String>) -> Error {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
