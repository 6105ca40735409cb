//! Free group automorphisms: words, Stallings folds, growth classification,
//! free-by-cyclic mapping tori and their splittings.

pub mod automorphisms;
pub mod error;
pub mod folding;
pub mod geometry;
pub mod growth;
pub mod mapping_torus;
pub mod splittings;
pub mod words;

pub use automorphisms::{Automorphism, Endomorphism};
pub use error::{Error, Result};
pub use folding::{Index, StallingsGraph};
pub use growth::{classify_growth, GrowthKind, GrowthParams, GrowthReport};
pub use mapping_torus::{TorusElement, TorusGroup};
pub use words::{Basis, CyclicWord, Letter, Word};
