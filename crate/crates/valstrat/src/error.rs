use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    /// A quantity could not be certified at the available precision.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    /// The product 0 * inf in the value group is left undefined.
    #[error("undefined product zero * inf in the value group")]
    UndefinedProduct,
    #[error("domain error: {0}")]
    Domain(String),
    /// An exponent denominator grew past the configured cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("newton iteration does not contract: {0}")]
    NoConvergence(String),
    #[error("derivative vanishes at the newton seed")]
    SingularSeed,
    #[error("element is not in the valuation ring (v > 1)")]
    NotInValuationRing,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("stratum is singular at the given point")]
    SingularPoint,
    /// A subspace grid violates one of the construction hypotheses.
    #[error("rejected input: hypothesis {0} fails ({1})")]
    RejectedInput(&'static str, String),
    /// A translater sample is not closed under composition.
    #[error("sample closure error: {0}")]
    SampleClosure(String),
    #[error("point set larger than the brute-force cap {0}")]
    SizeCap(usize),
    #[error("no consistent monomial fit: outliers {0}")]
    UnfitSamples(String),
    #[error("unsupported arc family: {0}")]
    UnsupportedFamily(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
