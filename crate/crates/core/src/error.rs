use thiserror::Error;

use crate::set::PointSet;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("open family must contain the empty set and the whole point set")]
    MissingEmptyOrFull,
    #[error("open family not closed under union: {0} and {1}")]
    NotClosedUnderUnion(PointSet, PointSet),
    #[error("open family not closed under intersection: {0} and {1}")]
    NotClosedUnderIntersection(PointSet, PointSet),
    #[error("set {set} is not a subset of 0..{n}")]
    SetOutOfRange { set: u64, n: usize },
    #[error("point {point} is not in 0..{n}")]
    PointOutOfRange { point: usize, n: usize },
    #[error("{n} points exceed the cap of {cap}")]
    TooManyPoints { n: usize, cap: usize },
    #[error("map table has {got} entries but the domain has {expected} points")]
    TableSize { expected: usize, got: usize },
    #[error("map is not continuous: preimage of open {open} is not open")]
    NotContinuous { open: PointSet },
    #[error("set {0} is not open")]
    NotOpen(PointSet),
    #[error("set {0} is not closed in its ambient subspace")]
    NotClosed(PointSet),
    #[error("sets {0} and {1} are not disjoint")]
    Overlap(PointSet, PointSet),
    #[error("point {0} is not in the ambient neighborhood")]
    PointNotInRegion(usize),
    #[error("sublevel gap {gap} does not exceed the oscillation {osc}")]
    PreconditionGap { gap: String, osc: String },
    #[error("family member {index} is not f-continuous at {y}")]
    MemberNotFContinuous { index: usize, y: usize },
    #[error("weights and family have different lengths")]
    WeightCount,
    #[error("partition blocks overlap")]
    NotDisjoint,
    #[error("partition blocks do not cover the carrier")]
    NotCovering,
    #[error("prefix union up to {0} is not closed")]
    PrefixNotClosed(u64),
    #[error("condition (2) fails at p = {0}")]
    Condition2Violated(u64),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("neighborhood at level {0} is not nested in the previous one")]
    NeighborhoodNotNested(usize),
    #[error("coherence fails at level {0}, block {1}")]
    CoherenceViolated(usize, u64),
    #[error("level {level} is not a regular partition: {detail}")]
    LevelNotRegular { level: usize, detail: String },
    #[error("malformed family: {0}")]
    MalformedFamily(String),
    #[error("requested level {requested} exceeds depth {depth}")]
    DepthExceeded { requested: usize, depth: usize },
    #[error("depth {0} is outside the supported range 1..=62")]
    DepthRange(usize),
    #[error("hypothesis ({which}) fails at level {level}")]
    HypothesisFailed { which: char, level: usize },
    #[error("no neighborhood solves step {step} at level {level} (target {target})")]
    SearchFailed { level: usize, step: u64, target: usize },
    #[error("no witness found: {0}")]
    NotFound(String),
    #[error("family did not become stationary within {0} levels")]
    NotStationary(usize),
    #[error("verification failed: {0}")]
    CheckFailed(String),
    #[error("the function to extend is not continuous along the fibers at {0}")]
    PreconditionNotFContinuous(usize),
    #[error("iteration limit reached with residual {0}")]
    MaxIterReached(String),
    #[error("{points} points exceed the decider cap of {cap}")]
    CapExceeded { points: usize, cap: usize },
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("invalid {object}: {reason}")]
    Validation { object: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
