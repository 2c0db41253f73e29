//! Exact computational engine for modular curves attached to finite-index
//! subgroups of Gamma(2) presented as dessins d'enfants.
//!
//! The crate is organized around seven pieces:
//!
//! - [`gamma2`]: 2x2 integer matrices and the free-group word problem in
//!   PGamma(2).
//! - [`dessin`]: permutation-pair models of subgroups, cusps, widths, genus.
//! - [`homology`]: mixed relative homology in the xi+ / xi- bases, the
//!   intersection pairing, loop maps lambda+/-, and the Manin presentation of
//!   H_1(X, cusps).
//! - [`lattice`]: integer linear algebra (Smith normal form) for cuspidal
//!   divisor class groups of classical and generalized Jacobians.
//! - [`eisenstein`]: Eisenstein cycles for Fermat curves, divisor splitting,
//!   full-curve assembly, and torsion certificates.
//! - [`analytic`]: configurable-precision numerics — the modular lambda
//!   function, contour integrals of dlog of modular units, truncated
//!   Kloosterman zeta functions, scattering differences, and rational
//!   recognition.
//! - [`report`]: shared JSON report structures used by the CLI.
//!
//! Conventions (fixed once, used everywhere): permutations act on cosets on
//! the RIGHT; the boundary of every constructed cycle for a divisor D is -D.

pub mod analytic;
pub mod dessin;
pub mod eisenstein;
pub mod gamma2;
pub mod homology;
pub mod lattice;
pub mod linalg;
pub mod report;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not in Gamma(2): {0}")]
    NotGamma2(String),
    #[error("invalid dessin: {}", .0.join("; "))]
    InvalidDessin(Vec<String>),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("divisor has nonzero degree: {0}")]
    NonzeroDegree(String),
    #[error("divisor supported on the wrong cusp set: {0}")]
    WrongSupport(String),
    #[error("estimator did not stabilize: {0}")]
    Unstable(String),
    #[error("numeric oracle disagrees with exact value: {0}")]
    OracleMismatch(String),
    #[error("requirement violated: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
