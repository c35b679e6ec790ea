pub mod blocks;
pub mod exchange;
pub mod frontend;
pub mod helpers;
pub mod logic;
pub mod master;
pub mod orchestrator;
pub mod semantics;
pub mod task;
pub mod testing;
pub mod verdict;
pub mod witness;

pub use helpers::affine::{Affine, Karr};
pub use master::{Control, Engine, MasterKind};
pub use task::Task;
pub use verdict::{Verdict, VerdictKind};

/// Affine analysis over exact rationals.
pub type RationalKarr = Karr<num_rational::Rational64>;
/// Affine analysis over floating point, with tolerant comparisons.
pub type FloatKarr = Karr<f64>;
pub type RationalAffine = Affine<num_rational::Rational64>;
pub type FloatAffine = Affine<f64>;
