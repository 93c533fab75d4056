use thiserror::Error;

/// Errors shared by all modules of the engine.
///
/// Every geometric predicate that can fail carries enough data to identify the
/// offending object; margins of *near* failures are reported through result
/// structs, not through errors.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("the four rays do not span a projective line (rank defect {defect:.3e})")]
    CollinearityViolation { defect: f64 },
    #[error("degenerate cross-ratio quadruple: {0}")]
    DegenerateQuadruple(&'static str),
    #[error("point is not in the interior of the body (margin {margin:.3e})")]
    OutsideDomain { margin: f64 },
    #[error("point is not in the closure of the body (margin {margin:.3e})")]
    NotInClosure { margin: f64 },
    #[error("point is not on the boundary of the body")]
    NotOnBoundary,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("trivial SL2 angle")]
    TrivialAngle,
    #[error("tube is not uniformisable")]
    NotUniformisable,
    #[error("tube is not special (margin {margin:.6})")]
    NotSpecial { margin: f64 },
    #[error("normal form failure: {0}")]
    NormalFormFailure(&'static str),
    #[error("map does not fix the codimension-2 sphere pointwise: {0}")]
    NotInFixator(&'static str),
    #[error("wall mismatch on edge `{edge}` (deviation {deviation:.3e})")]
    WallMismatch { edge: String, deviation: f64 },
    #[error("bad meridian for corner `{corner}`: {reason}")]
    BadMeridian { corner: String, reason: String },
    #[error("kit is not certified convex")]
    NotCertified,
    #[error("point is not on the hyperboloid (q(x) = {q:.6})")]
    OffHyperboloid { q: f64 },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("corner trace below 2 (margin {margin:.6})")]
    SubcriticalTrace { margin: f64 },
    #[error("generator does not preserve the Lorentz form (residual {residual:.3e})")]
    NotLorentz { residual: f64 },
    #[error("parameters outside the admissible polytope: {0}")]
    OutsidePolytope(String),
    #[error("no admissible solution: {0}")]
    Infeasible(String),
    #[error("angle data is not realizable by a hyperbolic polygon: {0}")]
    NotRealizable(String),
    #[error("unsupported number field (only k = 4, tau = sqrt 2 is wired)")]
    UnsupportedField,
    #[error("degenerate hyperplane configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("bad concatenation: {0}")]
    BadConcatenation(String),
    #[error("scene validation failed: {0}")]
    SceneError(String),
    #[error("unsupported body for this operation: {0}")]
    UnsupportedBody(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
