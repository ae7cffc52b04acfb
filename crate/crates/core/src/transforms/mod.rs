//! Theory transforms producing independent axiomatizations over a bounded model space.
//!
//! Every construction verifies its own output against the input before returning: a report
//! with `equivalence_checked` set has the same models as its input over the space, and each
//! output sentence carries a structure satisfying the others and failing it.

mod tree;

use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{build, preprocess, Formula, ModelError, ModelSpace, Origin, Provenance, Structure, Theory};
use crate::scott::{space_negated_scott_sentence, ScottError, DEFAULT_MATERIALIZE_CAP};
use crate::verify::{check_independence, check_theories_equivalent, Certificate, Subject, VerificationReport, VerifyError, Witness};

pub use tree::{build_separating_tree, phi_star, SeparatingTree, TypeSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Partition,
    Reznikoff,
    Complement,
    ScottFilter,
    PhiStar,
    Driver,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("index {index} is out of range for a theory of {len} sentences")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("the theory has no sentence besides the pivot")]
    NoNonPivot,
    #[error("expected one block per non-pivot sentence ({expected}), found {found}")]
    PartsMismatch { expected: usize, found: usize },
    #[error("the blocks do not partition the negated pivot: {}", describe_failure(.0))]
    PartitionInvalid(Box<VerificationReport>),
    #[error("{extra} extra sentences cannot be paired one-to-one with {base} base sentences")]
    SizeMismatch { extra: usize, base: usize },
    #[error("not applicable: {}", .0.condition)]
    NotApplicable(Box<Certificate>),
    #[error("the theory has no model of size at most {bound}")]
    Inconsistent { bound: usize },
    #[error("types {first} and {second} have the same formula set")]
    DuplicateTypes { first: usize, second: usize },
    #[error("type {0} is not realized by any element in the space")]
    Unrealized(usize),
    #[error("type {0} uses a variable other than the tree variable")]
    NotUnary(usize),
    #[error("types {left} and {right} cannot be separated over the space")]
    Inseparable { left: usize, right: usize },
    #[error("output failed verification: {}", describe_failure(.0))]
    VerificationFailed(Box<VerificationReport>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scott(#[from] ScottError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

fn describe_failure(r: &VerificationReport) -> String {
    r.failure().map_or_else(|| "no failing condition".into(), |c| c.condition.clone())
}

/// Knobs shared by the Scott-sentence based transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransformOptions {
    /// Largest structure whose Scott sentence may be built.
    pub materialize_cap: usize,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            materialize_cap: DEFAULT_MATERIALIZE_CAP,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransformReport {
    pub input: Theory,
    pub output: Theory,
    pub method: Method,
    /// Largest structure size of the space the claims hold over.
    pub bound: usize,
    pub equivalence_checked: bool,
    /// Per output sentence, a structure satisfying the other outputs and failing it.
    pub independence_witnesses: Vec<Option<Structure>>,
    /// Per output sentence, the representatives it rules out when it is a conjunction of
    /// negated Scott sentences; empty otherwise.
    pub excluded: Vec<Vec<Structure>>,
}

impl TransformReport {
    /// Re-runs both checks on the space: equivalence of input and output, then independence
    /// of the output.
    pub fn recheck(&self, space: &ModelSpace) -> Result<(VerificationReport, VerificationReport), VerifyError> {
        Ok((
            check_theories_equivalent(&self.input, &self.output, space)?,
            check_independence(&self.output, space)?,
        ))
    }

    /// JSON form. Sentences whose expanded tree exceeds `print_limit` nodes are replaced by
    /// their sizes; the `excludes` list still determines them.
    pub fn to_json(&self, print_limit: u64) -> Value {
        let output: Vec<Value> = self
            .output
            .axioms()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let size = a.sentence.tree_size();
                json!({
                    "sentence": (size <= print_limit).then(|| a.sentence.to_string()),
                    "tree_size": size,
                    "dag_size": a.sentence.dag_size(),
                    "origin": a.label.origin,
                    "sources": a.label.sources,
                    "excludes": self.excluded.get(i).cloned().unwrap_or_default(),
                    "witness": self.independence_witnesses.get(i).cloned().flatten(),
                })
            })
            .collect();
        json!({
            "method": self.method,
            "bound": self.bound,
            "equivalence_checked": self.equivalence_checked,
            "input": self.input.to_strings(),
            "output": output,
        })
    }
}

/// Checks equivalence and independence, returning the independence witnesses.
fn verified_witnesses(input: &Theory, output: &Theory, space: &ModelSpace) -> Result<Vec<Option<Structure>>, TransformError> {
    let eq = check_theories_equivalent(input, output, space)?;
    if !eq.passed() {
        return Err(TransformError::VerificationFailed(Box::new(eq)));
    }
    let ind = check_independence(output, space)?;
    if !ind.passed() {
        return Err(TransformError::VerificationFailed(Box::new(ind)));
    }
    Ok(ind
        .certificates
        .into_iter()
        .map(|c| match c.witness {
            Some(Witness::Structure(m)) => Some(m),
            _ => None,
        })
        .collect())
}

fn some_model(bits: &fixedbitset::FixedBitSet, space: &ModelSpace) -> Option<Witness> {
    bits.ones().next().map(|k| Witness::Structure(space.representatives()[k].clone()))
}

/// Whether `parts` partition `phi` over the space: each part has a model, `phi` is
/// equivalent to their disjunction, and no two parts share a model.
pub fn check_partition(phi: &Arc<Formula>, parts: &[Arc<Formula>], space: &ModelSpace) -> Result<VerificationReport, TransformError> {
    let target = space.satisfying(phi)?;
    let sats = parts.iter().map(|p| space.satisfying(p)).collect::<Result<Vec<_>, _>>()?;
    let mut certificates = Vec::new();
    for (a, s) in sats.iter().enumerate() {
        certificates.push(Certificate {
            condition: format!("block {a} has a model"),
            index: Some(a),
            holds: !s.is_clear(),
            witness: some_model(s, space),
        });
    }
    let mut union = fixedbitset::FixedBitSet::with_capacity(space.len());
    for s in &sats {
        union.union_with(s);
    }
    let mut uncovered = target.clone();
    uncovered.difference_with(&union);
    certificates.push(Certificate {
        condition: "every model of the sentence models some block".into(),
        index: None,
        holds: uncovered.is_clear(),
        witness: some_model(&uncovered, space),
    });
    let mut stray = union;
    stray.difference_with(&target);
    certificates.push(Certificate {
        condition: "every model of a block models the sentence".into(),
        index: None,
        holds: stray.is_clear(),
        witness: some_model(&stray, space),
    });
    for a in 0..sats.len() {
        for b in a + 1..sats.len() {
            let mut both = sats[a].clone();
            both.intersect_with(&sats[b]);
            certificates.push(Certificate {
                condition: format!("blocks {a} and {b} share no model"),
                index: Some(a),
                holds: both.is_clear(),
                witness: some_model(&both, space),
            });
        }
    }
    Ok(VerificationReport::new(Subject::Theory, space.max_size(), certificates))
}

/// `¬ψ_α ∧ (¬φ₀ ∨ φ_α)` for each non-pivot sentence `φ_α`, where `φ₀` is the pivot and the
/// blocks `ψ` partition `¬φ₀`, block `a` going with the `a`-th non-pivot sentence.
///
/// A model of block `a` is the independence witness of output `a`.
pub fn partition_transform(t: &Theory, pivot: usize, parts: &[Arc<Formula>], space: &ModelSpace) -> Result<TransformReport, TransformError> {
    if pivot >= t.len() {
        return Err(TransformError::IndexOutOfRange { index: pivot, len: t.len() });
    }
    if t.len() < 2 {
        return Err(TransformError::NoNonPivot);
    }
    if parts.len() != t.len() - 1 {
        return Err(TransformError::PartsMismatch {
            expected: t.len() - 1,
            found: parts.len(),
        });
    }
    let phi0 = t.get(pivot).expect("pivot in range").clone();
    let not_phi0 = build::not(phi0);
    let check = check_partition(&not_phi0, parts, space)?;
    if !check.passed() {
        return Err(TransformError::PartitionInvalid(Box::new(check)));
    }
    let mut output = Theory::new();
    let mut witnesses = Vec::new();
    for (psi, j) in parts.iter().zip((0..t.len()).filter(|&j| j != pivot)) {
        let phi = t.get(j).expect("index in range").clone();
        output.push(
            build::and(vec![build::not(psi.clone()), build::or(vec![not_phi0.clone(), phi])]),
            Provenance::new(Origin::Partition, vec![pivot, j]),
        );
        witnesses.push(space.satisfying(psi)?.ones().next());
    }
    let generic = verified_witnesses(t, &output, space)?;
    // the block models must themselves be witnesses, not just some other structure
    let mut independence_witnesses = Vec::with_capacity(witnesses.len());
    for (a, w) in witnesses.into_iter().enumerate() {
        let w = w.expect("blocks have models");
        let rest = space.model_set(&output.without(a))?;
        let own = space.satisfying(output.get(a).expect("output index"))?;
        if !rest.contains(w) || own.contains(w) {
            let failing = Certificate {
                condition: format!("a model of block {a} witnesses output {a}"),
                index: Some(a),
                holds: false,
                witness: Some(Witness::Structure(space.representatives()[w].clone())),
            };
            return Err(TransformError::VerificationFailed(Box::new(VerificationReport::new(
                Subject::Transform,
                space.max_size(),
                vec![failing],
            ))));
        }
        independence_witnesses.push(Some(space.representatives()[w].clone()));
    }
    debug_assert_eq!(generic.len(), independence_witnesses.len());
    Ok(TransformReport {
        input: t.clone(),
        excluded: vec![Vec::new(); output.len()],
        output,
        method: Method::Partition,
        bound: space.max_size(),
        equivalence_checked: true,
        independence_witnesses,
    })
}

/// Pairs the extra sentences `d` with the first `|d|` base sentences `c` and returns the
/// unpaired base sentences followed by `d[j] ∧ c[j]`.
///
/// The input of the report is `c` followed by `d`. Requires that no base sentence is
/// entailed by the remaining sentences of both lists; otherwise the error names one that is.
pub fn reznikoff_pairing(c: &Theory, d: &Theory, space: &ModelSpace) -> Result<TransformReport, TransformError> {
    if d.len() > c.len() {
        return Err(TransformError::SizeMismatch {
            extra: d.len(),
            base: c.len(),
        });
    }
    let mut input = Theory::new();
    for (i, s) in c.sentences().chain(d.sentences()).enumerate() {
        input.push(s.clone(), Provenance::input(i));
    }
    let sats = input.sentences().map(|s| space.satisfying(s)).collect::<Result<Vec<_>, _>>()?;
    for i in 0..c.len() {
        let mut rest = space.all();
        for (j, s) in sats.iter().enumerate() {
            if j != i {
                rest.intersect_with(s);
            }
        }
        rest.difference_with(&sats[i]);
        if rest.is_clear() {
            return Err(TransformError::NotApplicable(Box::new(Certificate {
                condition: format!("base sentence {i} is entailed by the other sentences"),
                index: Some(i),
                holds: false,
                witness: None,
            })));
        }
    }
    let mut output = Theory::new();
    for i in d.len()..c.len() {
        output.push(input.get(i).expect("base index").clone(), Provenance::new(Origin::Reznikoff, vec![i]));
    }
    for j in 0..d.len() {
        let delta = input.get(c.len() + j).expect("extra index").clone();
        let phi = input.get(j).expect("base index").clone();
        output.push(build::and(vec![delta, phi]), Provenance::new(Origin::Reznikoff, vec![c.len() + j, j]));
    }
    let independence_witnesses = verified_witnesses(&input, &output, space)?;
    Ok(TransformReport {
        input,
        excluded: vec![Vec::new(); output.len()],
        output,
        method: Method::Reznikoff,
        bound: space.max_size(),
        equivalence_checked: true,
        independence_witnesses,
    })
}

/// Representatives failing the theory, in enumeration order.
fn counter_models(t: &Theory, space: &ModelSpace) -> Result<Vec<usize>, TransformError> {
    let models = space.model_set(t)?;
    if models.is_clear() {
        return Err(TransformError::Inconsistent { bound: space.max_size() });
    }
    Ok((0..space.len()).filter(|&k| !models.contains(k)).collect())
}

/// `¬s(M)` for representative `k`, with its satisfaction set cached so that conjunctions of
/// these are answered with bit operations.
fn negated_scott(k: usize, space: &ModelSpace, opts: &TransformOptions) -> Result<Arc<Formula>, TransformError> {
    let f = space_negated_scott_sentence(space, k, opts.materialize_cap)?;
    space.satisfying(&f)?;
    Ok(f)
}

fn exclusion(ks: &[usize], space: &ModelSpace, opts: &TransformOptions) -> Result<Arc<Formula>, TransformError> {
    let mut parts = ks.iter().map(|&k| negated_scott(k, space, opts)).collect::<Result<Vec<_>, _>>()?;
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { build::and(parts) })
}

/// One negated Scott sentence per representative failing the theory.
pub fn complement_axiomatization(t: &Theory, space: &ModelSpace) -> Result<TransformReport, TransformError> {
    complement_axiomatization_with(t, space, &TransformOptions::default())
}

pub fn complement_axiomatization_with(t: &Theory, space: &ModelSpace, opts: &TransformOptions) -> Result<TransformReport, TransformError> {
    let counter = counter_models(t, space)?;
    let mut output = Theory::new();
    let mut excluded = Vec::with_capacity(counter.len());
    for &k in &counter {
        output.push(
            negated_scott(k, space, opts)?,
            Provenance::new(Origin::Complement, (0..t.len()).collect()),
        );
        excluded.push(vec![space.representatives()[k].clone()]);
    }
    let independence_witnesses = verified_witnesses(t, &output, space)?;
    Ok(TransformReport {
        input: t.clone(),
        output,
        method: Method::Complement,
        bound: space.max_size(),
        equivalence_checked: true,
        independence_witnesses,
        excluded,
    })
}

/// In input order, sentence `α` becomes the conjunction of `¬s(M)` over its counter-models
/// `M` not already claimed by an earlier sentence; empty conjunctions are dropped.
///
/// Representatives are unique per isomorphism class, so tracking claimed representatives is
/// tracking claimed canonical invariants. No sentence is kept verbatim: for finite
/// structures there is no sentence whose models all fall outside the space.
pub fn scott_filter_transform(t: &Theory, space: &ModelSpace) -> Result<TransformReport, TransformError> {
    scott_filter_transform_with(t, space, &TransformOptions::default())
}

pub fn scott_filter_transform_with(t: &Theory, space: &ModelSpace, opts: &TransformOptions) -> Result<TransformReport, TransformError> {
    counter_models(t, space)?;
    let mut claimed = space.all();
    claimed.clear();
    let mut output = Theory::new();
    let mut excluded = Vec::new();
    for (alpha, s) in t.sentences().enumerate() {
        let mut fresh = space.satisfying(s)?;
        fresh.toggle_range(..);
        fresh.difference_with(&claimed);
        if fresh.is_clear() {
            continue;
        }
        claimed.union_with(&fresh);
        let ks: Vec<usize> = fresh.ones().collect();
        output.push(exclusion(&ks, space, opts)?, Provenance::new(Origin::ScottFilter, vec![alpha]));
        excluded.push(ks.iter().map(|&k| space.representatives()[k].clone()).collect());
    }
    let independence_witnesses = verified_witnesses(t, &output, space)?;
    Ok(TransformReport {
        input: t.clone(),
        output,
        method: Method::ScottFilter,
        bound: space.max_size(),
        equivalence_checked: true,
        independence_witnesses,
        excluded,
    })
}

/// Preprocesses, keeps an empty or single-sentence result as is, and otherwise applies the
/// Scott filter, falling back to the complement axiomatization if two outputs coincide.
pub fn independent_axiomatize(t: &Theory, space: &ModelSpace) -> Result<TransformReport, TransformError> {
    independent_axiomatize_with(t, space, &TransformOptions::default())
}

pub fn independent_axiomatize_with(t: &Theory, space: &ModelSpace, opts: &TransformOptions) -> Result<TransformReport, TransformError> {
    let pre = preprocess(t, space)?;
    let (mut output, excluded) = if pre.len() <= 1 {
        let n = pre.len();
        (pre.clone(), vec![Vec::new(); n])
    } else {
        let mut r = scott_filter_transform_with(&pre, space, opts)?;
        if has_equivalent_pair(&r.output, space)? {
            r = complement_axiomatization_with(&pre, space, opts)?;
        }
        (r.output, r.excluded)
    };
    // provenance indices refer to the preprocessed theory; map them back to the input
    let mut relabelled = Theory::new();
    for a in output.axioms() {
        let sources = if a.label.origin == Origin::Preprocess || pre.len() <= 1 {
            a.label.sources.clone()
        } else {
            let mut s: Vec<usize> = a
                .label
                .sources
                .iter()
                .flat_map(|&i| pre.axioms()[i].label.sources.iter().copied())
                .collect();
            s.sort_unstable();
            s.dedup();
            s
        };
        relabelled.push(a.sentence.clone(), Provenance::new(a.label.origin, sources));
    }
    output = relabelled;
    let independence_witnesses = verified_witnesses(t, &output, space)?;
    Ok(TransformReport {
        input: t.clone(),
        output,
        method: Method::Driver,
        bound: space.max_size(),
        equivalence_checked: true,
        independence_witnesses,
        excluded,
    })
}

fn has_equivalent_pair(t: &Theory, space: &ModelSpace) -> Result<bool, TransformError> {
    let sats = t.sentences().map(|s| space.satisfying(s)).collect::<Result<Vec<_>, _>>()?;
    Ok((0..sats.len()).any(|i| (i + 1..sats.len()).any(|j| sats[i] == sats[j])))
}
