//! Finite relational structures, formulas, and bounded model spaces.

mod eval;
mod formula;
mod parse;
mod space;
mod structure;
mod theory;

pub use eval::{eval, Assignment, CompiledFormula};
pub use formula::{build, Formula, FormulaDigest, Var};
pub use parse::{parse_formula, parse_theory_strings, ParseError};
pub use space::{
    enumerate_models, enumerate_models_with, entails, models_of, preprocess, EnumerationLimits,
    Entailment, ModelSpace,
};
pub use structure::{RelationSymbol, Signature, Structure};
pub use theory::{Axiom, Origin, Provenance, Theory, TheoryFileError};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate relation name `{0}`")]
    DuplicateRelation(String),
    #[error("relation `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("structures must have a nonempty universe")]
    EmptyUniverse,
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("tuple {tuple:?} for `{relation}` does not fit arity {arity} over a universe of size {size}")]
    BadTuple {
        relation: String,
        tuple: Vec<usize>,
        arity: usize,
        size: usize,
    },
    #[error("malformed sentence: relation `{relation}` has arity {expected} but is applied to {found} arguments")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("malformed sentence: variable `{0}` is neither bound nor assigned")]
    UnboundVariable(String),
    #[error("assignment sends `{var}` to {element}, outside a universe of size {size}")]
    AssignmentOutOfRange {
        var: String,
        element: usize,
        size: usize,
    },
    #[error("structures do not share a signature")]
    SignatureMismatch,
    #[error("enumeration overflow: {0}")]
    EnumerationOverflow(String),
}

impl ModelError {
    /// True for the errors that mean the sentence itself is not well formed.
    pub fn is_malformed(&self) -> bool {
        matches!(
            self,
            ModelError::ArityMismatch { .. }
                | ModelError::UnboundVariable(_)
                | ModelError::UnknownRelation(_)
        )
    }
}
