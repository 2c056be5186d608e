//! Decision procedures for existential sentences built from linear equations
//! and divisibility constraints over semilocal holomorphy rings of `Q` and
//! `F_p(t)`, together with a laboratory for positive-existential defining
//! formulas over rings of S-integers in `F_p(t)`.

pub mod deflab;
pub mod exactlin;
pub mod formula;
pub mod fraction;
pub mod localdec;
pub mod oracle;
pub mod places;
pub mod rng;
pub mod scalar;
pub mod solver;

pub use exactlin::{AffineForm, AffineParam, Mat};
pub use formula::{LinTerm, Literal, NormalAtom, NormalForm, NormalSystem, Sentence};
pub use fraction::FieldElem;
pub use localdec::{LocalAtom, LocalSystem, LocalVerdict};
pub use oracle::HeightBound;
pub use places::{OrdVal, Place, RingSpec};
pub use scalar::{Base, PolyFp, Scalar};
pub use solver::{DecisionOutcome, Verdict};
