use thiserror::Error;

/// Everything that can go wrong in the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("parameter point ({u}, {v}) lies outside the {domain} domain")]
    OutOfDomain { u: f64, v: f64, domain: &'static str },

    #[error("immersion degenerates at ({u}, {v}): {detail}")]
    ImmersionFailure { u: f64, v: f64, detail: String },

    #[error("analytic jets are not available for surface `{0}`")]
    NoAnalyticJet(String),

    #[error("degenerate curve at t = {t}: {reason}")]
    DegenerateCurve { t: f64, reason: String },

    #[error("inconsistent curve data at t = {t}: {detail}")]
    InconsistentData { t: f64, detail: String },

    #[error("conormal sign is ambiguous at t = {t}: orientation product {product} is not positive")]
    SignAmbiguity { t: f64, product: f64 },

    #[error("asymptotic degeneracy at {location}: Gram determinant {gram} below threshold")]
    AsymptoticDegeneracy { location: String, gram: f64 },

    #[error("march became unstable at row {row} (s = {s}): position scale {scale} exceeds {limit}")]
    Instability { row: usize, s: f64, scale: f64, limit: f64 },

    #[error("geodesic leaves the domain immediately at ({u}, {v})")]
    DomainExit { u: f64, v: f64 },

    #[error("discrete system is singular: {0}")]
    SingularSystem(String),

    #[error("metric mismatch at the alignment point: deviation {0}")]
    MetricMismatch(f64),

    #[error("frame alignment would require an orientation-reversing motion (curvature product {0})")]
    OrientationObstruction(f64),

    #[error("seed region is not usable: {0}")]
    SeedNotElliptic(String),

    #[error("point ({u}, {v}) has a two-dimensional zero-curvature kernel; reclassify it as flat")]
    ReclassifyFlat { u: f64, v: f64 },

    #[error("geometry inconsistency: {0}")]
    GeometryInconsistency(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(err: std::io::Error) -> Self {
        LabError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
