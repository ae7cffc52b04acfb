//! Brute-force certification: a literal type recursion, permutation isomorphism search,
//! and theory-level independence and equivalence reports.
//!
//! Every report is relative to a bound (the model-space size or the family universe) and
//! a failing report always names a concrete counterexample.

mod oracle;

use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelError, ModelSpace, Structure, Theory};

pub use oracle::{oracle_isomorphic, oracle_types_equal, OracleCaps, TypeOracle, ISOMORPHISM_SIZE_CAP};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("structure of size {size} exceeds the oracle cap {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error("level {level} exceeds the oracle cap {cap}")]
    LevelCap { level: usize, cap: usize },
    #[error("tuples have different lengths ({left} and {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("tuple of length {0} is too long for the oracle")]
    TupleTooLong(usize),
    #[error("element {element} is outside a universe of size {size}")]
    ElementOutOfRange { element: usize, size: usize },
    #[error("structures do not share a signature")]
    SignatureMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Theory,
    Family,
    Transform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Structure(Structure),
    Element(usize),
}

/// One checked condition. `index` is the sentence or set the condition is about, if any.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub condition: String,
    pub index: Option<usize>,
    pub holds: bool,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub subject: Subject,
    /// Model-space size bound, or universe size for families.
    pub bound: usize,
    pub verdict: Verdict,
    pub certificates: Vec<Certificate>,
}

impl VerificationReport {
    pub fn new(subject: Subject, bound: usize, certificates: Vec<Certificate>) -> Self {
        let verdict = if certificates.iter().all(|c| c.holds) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            subject,
            bound,
            verdict,
            certificates,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// The first failing certificate.
    pub fn failure(&self) -> Option<&Certificate> {
        self.certificates.iter().find(|c| !c.holds)
    }
}

/// For each index `i`, looks for a model of the other sentences that fails sentence `i`.
///
/// A failing certificate means the rest of the theory entails sentence `i` over the space;
/// the entailed index is itself the counterexample.
pub fn check_independence(theory: &Theory, space: &ModelSpace) -> Result<VerificationReport, VerifyError> {
    let sats = theory
        .sentences()
        .map(|s| space.satisfying(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut certificates = Vec::with_capacity(sats.len());
    for i in 0..sats.len() {
        let mut rest = space.all();
        for (j, s) in sats.iter().enumerate() {
            if j != i {
                rest.intersect_with(s);
            }
        }
        rest.difference_with(&sats[i]);
        let witness = rest.ones().next();
        certificates.push(Certificate {
            condition: if witness.is_some() {
                format!("a model of the other sentences fails sentence {i}")
            } else {
                format!("the other sentences entail sentence {i}")
            },
            index: Some(i),
            holds: witness.is_some(),
            witness: witness.map(|k| Witness::Structure(space.representatives()[k].clone())),
        });
    }
    Ok(VerificationReport::new(Subject::Theory, space.max_size(), certificates))
}

/// Compares the model sets of two theories; a failure carries a structure modelling exactly
/// one of them.
pub fn check_theories_equivalent(t: &Theory, u: &Theory, space: &ModelSpace) -> Result<VerificationReport, VerifyError> {
    let left = space.model_set(t)?;
    let right = space.model_set(u)?;
    let mut certificates = Vec::new();
    let mut only_left = left.clone();
    only_left.difference_with(&right);
    let mut only_right = right;
    only_right.difference_with(&left);
    for (side, diff) in [("first", only_left), ("second", only_right)] {
        let witness = diff.ones().next();
        certificates.push(Certificate {
            condition: if witness.is_some() {
                format!("a model of only the {side} theory exists")
            } else {
                format!("every model of the {side} theory models the other")
            },
            index: None,
            holds: witness.is_none(),
            witness: witness.map(|k| Witness::Structure(space.representatives()[k].clone())),
        });
    }
    Ok(VerificationReport::new(Subject::Theory, space.max_size(), certificates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_models, parse_formula, Signature};

    fn theory(src: &[&str]) -> Theory {
        src.iter().map(|s| parse_formula(s).unwrap()).collect()
    }

    fn space() -> ModelSpace {
        enumerate_models(&Signature::from_pairs([("P", 1)]).unwrap(), 2).unwrap()
    }

    #[test]
    fn independence_examples() {
        let s = space();
        let r = check_independence(&theory(&["(exists x (atom P x))", "(exists x (not (atom P x)))"]), &s).unwrap();
        assert!(r.passed());
        assert_eq!(r.bound, 2);
        for c in &r.certificates {
            let Some(Witness::Structure(w)) = &c.witness else { panic!() };
            let homogeneous = w.tuples(0).is_empty() || w.tuples(0).len() == w.size();
            assert!(homogeneous);
        }

        let r = check_independence(
            &theory(&["(exists x (atom P x))", "(and (exists x (atom P x)) (exists x (eq x x)))"]),
            &s,
        )
        .unwrap();
        assert!(!r.passed());
        assert_eq!(r.failure().unwrap().index, Some(0));

        assert!(check_independence(&theory(&["(forall x (atom P x))"]), &s).unwrap().passed());
        assert!(!check_independence(&theory(&["(exists x (eq x x))"]), &s).unwrap().passed());
    }

    #[test]
    fn equivalence_examples() {
        let s = space();
        let t = theory(&["(forall x (atom P x))"]);
        assert!(check_theories_equivalent(&t, &t, &s).unwrap().passed());
        let u = theory(&["(exists x (atom P x))"]);
        let r = check_theories_equivalent(&t, &u, &s).unwrap();
        assert!(!r.passed());
        let Some(Witness::Structure(w)) = &r.failure().unwrap().witness else { panic!() };
        assert_eq!((w.size(), w.tuples(0).len()), (2, 1));
    }
}
