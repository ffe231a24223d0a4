use thiserror::Error;

/// Errors raised by the library. CLI maps these onto exit code 2 (bad input)
/// or 1 (a check that ran and failed).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("order relation has a cycle: {0} <= {1} <= {0}")]
    Cycle(String, String),
    #[error("poset must have at least one element")]
    EmptyPoset,
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("size {size} exceeds exhaustive search bound {bound}")]
    SizeLimit { size: usize, bound: usize },
    #[error("no strictly shrinking monotone neighbourhood chain of depth {depth} at index {point}")]
    ChainUnavailable { point: usize, depth: usize },
    #[error("index {0} is out of range")]
    IndexOutOfRange(usize),
    #[error("invalid arc: {0}")]
    InvalidArc(String),
    #[error("circle resolution must be at least 4, got {0}")]
    ResolutionTooSmall(u64),

    #[error("negative rational {0} is not in the positive cone")]
    NegativeInput(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime sequence has no term p({0})")]
    PrimeIndexOutOfRange(usize),
    #[error("integer overflow while computing {0}")]
    OverflowGuard(String),
    #[error("{0} is not in the semigroup within level {1}")]
    NotInSemigroup(String, usize),
    #[error("element {value} does not lie on the truncation lattice of level {level}")]
    LevelMismatch { value: String, level: usize },

    #[error("polynomial degree {degree} does not fit in dimension {dim}")]
    DegreeOverflow { degree: u64, dim: usize },
    #[error("norm iteration did not converge after {0} steps")]
    NonConvergence(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("mask width {k} exceeds the safe interior {interior}")]
    MaskTooWide { k: usize, interior: usize },
    #[error("grid of {grid} points is too coarse for degree {degree}")]
    GridTooCoarse { grid: usize, degree: u64 },
    #[error("component at index {0} is not a monomial")]
    NotMonomial(usize),

    #[error("stage {from} is not below terminal stage {to}")]
    StageOrder { from: usize, to: usize },
    #[error("cocone is incompatible along {lower} -> {upper}")]
    IncompatibleCocone { lower: usize, upper: usize },
    #[error("no bonding map registered for {lower} -> {upper}")]
    MissingBonding { lower: usize, upper: usize },
    #[error("morphism {0} does not act on this payload")]
    UnsupportedMorphism(String),

    #[error("field algebra over an empty domain")]
    EmptyDomain,
    #[error("domain is not a subset of the field's domain")]
    NotSubset,
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("stage {stage} is outside the chain of depth {depth}")]
    ChainTooShort { stage: usize, depth: usize },
    #[error("element needs stage {needed}, chain of depth {depth} supports stages below {depth}")]
    DepthExceeded { needed: usize, depth: usize },
    #[error("chain is not cofinal: anchors {0} -> {1} have no chain domain below them")]
    CofinalityFailure(String, String),
    #[error("malformed chain partition: {0}")]
    BadPartition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
