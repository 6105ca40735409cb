use thiserror::Error;

use crate::folding::StallingsGraph;
use crate::words::Word;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("generator index {index} out of range for rank {rank}")]
    LetterOutOfRange { index: usize, rank: usize },

    #[error("invalid generator name {0:?}")]
    InvalidSymbol(String),

    #[error("duplicate generator {0:?}")]
    DuplicateGenerator(String),

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("basis must contain at least one generator")]
    EmptyBasis,

    #[error("no image given for generator {0:?}")]
    MissingGenerator(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("basis mismatch")]
    BasisMismatch,

    #[error("endomorphism is not surjective (folded image graph has {} vertices)", .0.vertex_count())]
    NotSurjective(Box<StallingsGraph>),

    #[error("subgroup is not invariant: generator {generator:?} leaves it")]
    NotInvariant { generator: Word },

    #[error("operation needs a nontrivial subgroup")]
    TrivialSubgroup,

    #[error("all generators lie in the fiber (every t-exponent is zero)")]
    NoStableLetter,

    #[error("saturation did not stabilise within {rounds} rounds / {vertices} vertices")]
    Unstabilized { rounds: usize, vertices: usize },

    #[error("graph of groups violation: {0}")]
    Violation(String),

    #[error("fixed-splitting witness rejected: {0}")]
    WitnessRejected(String),

    #[error("the fiber is cyclic; splittings of cyclic free groups are not induced")]
    CyclicFiber,

    #[error("ball exceeds the vertex cap of {cap}")]
    BallTooLarge { cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}
