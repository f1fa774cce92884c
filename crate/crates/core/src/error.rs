use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree must be at least 3, got {0}")]
    InvalidDegree(usize),

    #[error("letter {letter} is outside the alphabet 1..={d}")]
    InvalidLetter { letter: u8, d: usize },

    #[error("word is not reduced: letter {letter} repeats at position {position}")]
    NotReduced { letter: u8, position: usize },

    #[error("cannot parse site or prefix from {0:?}")]
    Parse(String),

    #[error("enumeration cap exceeded: {what} needs {requested}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("boundary prefix has depth {depth}, operation needs at least {needed}")]
    DepthTooSmall { depth: usize, needed: usize },

    #[error("rank {rank} out of range for level {level} (class size {size})")]
    RankOutOfRange { rank: u64, level: u32, size: u64 },

    #[error("group element {level}:{exponent} is invalid: {reason}")]
    InvalidGroupElement {
        level: u32,
        exponent: u64,
        reason: &'static str,
    },

    #[error("prefixes differ beyond position {0}")]
    NotTailEquivalent(usize),

    #[error("letters {a} and {b} must both be compatible with the site {site}")]
    IncompatibleLetters { site: String, a: u8, b: u8 },

    #[error("site {site} lies outside the ball of radius {radius}")]
    OutsideRadius { site: String, radius: usize },

    #[error("automorphism radii differ: {0} vs {1}")]
    RadiusMismatch(usize, usize),

    #[error("horosphere construction failed: {0}")]
    Construction(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("configuration does not cover site {0}")]
    MissingValue(String),

    #[error("regions must be disjoint; {0} appears in both")]
    Overlap(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
