use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use fixedbitset::FixedBitSet;

use super::structure::next_permutation;
use super::{build, CompiledFormula, Formula, ModelError, Origin, Provenance, Signature, Structure, Theory};

/// Resource caps for [`enumerate_models_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationLimits {
    /// Maximum number of isomorphism classes in the whole space.
    pub max_classes: usize,
    /// Maximum number of labelled structures scanned for a single universe size.
    pub max_labeled_per_size: u64,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self {
            max_classes: 200_000,
            max_labeled_per_size: 1 << 24,
        }
    }
}

/// A Scott sentence and its negation.
type SentencePair = (Arc<Formula>, Arc<Formula>);

/// One representative per isomorphism class of structures of size `1..=max_size`.
///
/// Representatives are the labelled structures whose table encoding is lexicographically
/// least among all relabellings, listed by size and then by encoding.
///
/// The space also memoizes, per sentence node, the set of representatives satisfying it.
/// Negations, and conjunctions or disjunctions whose members are all memoized, are
/// answered with bit operations; this keeps conjunctions of negated Scott sentences cheap.
pub struct ModelSpace {
    signature: Signature,
    max_size: usize,
    representatives: Vec<Structure>,
    index: HashMap<(usize, Vec<bool>), usize>,
    sat_cache: Mutex<HashMap<usize, (Arc<Formula>, FixedBitSet)>>,
    scott_cache: Mutex<HashMap<usize, SentencePair>>,
}

impl fmt::Debug for ModelSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpace")
            .field("signature", &self.signature)
            .field("max_size", &self.max_size)
            .field("classes", &self.representatives.len())
            .finish()
    }
}

impl Clone for ModelSpace {
    fn clone(&self) -> Self {
        Self {
            signature: self.signature.clone(),
            max_size: self.max_size,
            representatives: self.representatives.clone(),
            index: self.index.clone(),
            sat_cache: Mutex::default(),
            scott_cache: Mutex::default(),
        }
    }
}

pub fn enumerate_models(sig: &Signature, max_size: usize) -> Result<ModelSpace, ModelError> {
    enumerate_models_with(sig, max_size, EnumerationLimits::default())
}

/// Enumerates all isomorphism classes of size `1..=max_size`.
///
/// Every labelled structure is scanned and kept only when no relabelling produces a smaller
/// encoding, so each class contributes exactly its least labelled member.
pub fn enumerate_models_with(
    sig: &Signature,
    max_size: usize,
    limits: EnumerationLimits,
) -> Result<ModelSpace, ModelError> {
    if max_size == 0 {
        return Err(ModelError::EmptyUniverse);
    }
    let mut reps = Vec::new();
    for n in 1..=max_size {
        let bits = sig
            .table_bits(n)
            .filter(|&b| b < 63)
            .ok_or_else(|| ModelError::EnumerationOverflow(format!("size {n} needs too many table bits")))?;
        let labeled = 1u64 << bits;
        if labeled > limits.max_labeled_per_size {
            return Err(ModelError::EnumerationOverflow(format!(
                "size {n} has {labeled} labelled structures, above the cap of {}",
                limits.max_labeled_per_size
            )));
        }
        let moves = permutation_bit_maps(sig, n, bits);
        for code in 0..labeled {
            if moves.iter().all(|map| permute_code(code, map, bits) >= code) {
                if reps.len() >= limits.max_classes {
                    return Err(ModelError::EnumerationOverflow(format!(
                        "more than {} isomorphism classes",
                        limits.max_classes
                    )));
                }
                let enc: Vec<bool> = (0..bits).map(|p| code >> (bits - 1 - p) & 1 == 1).collect();
                reps.push(Structure::from_encoding(sig.clone(), n, &enc)?);
            }
        }
    }
    Ok(ModelSpace::assemble(sig.clone(), max_size, reps))
}

/// For every non-identity permutation of `0..n`, where each table position moves to.
fn permutation_bit_maps(sig: &Signature, n: usize, bits: usize) -> Vec<Vec<usize>> {
    let mut maps = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    while next_permutation(&mut perm) {
        let mut map = Vec::with_capacity(bits);
        let mut base = 0;
        for r in sig.relations() {
            let cells = n.pow(r.arity as u32);
            for cell in 0..cells {
                let tuple = super::structure::decode_cell(cell, r.arity, n);
                let image = tuple.iter().fold(0, |acc, &e| acc * n + perm[e]);
                map.push(base + image);
            }
            base += cells;
        }
        maps.push(map);
    }
    maps
}

fn permute_code(code: u64, map: &[usize], bits: usize) -> u64 {
    let mut out = 0u64;
    let mut rest = code;
    while rest != 0 {
        let low = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let pos = bits - 1 - low;
        out |= 1 << (bits - 1 - map[pos]);
    }
    out
}

impl ModelSpace {
    fn assemble(signature: Signature, max_size: usize, representatives: Vec<Structure>) -> Self {
        let index = representatives
            .iter()
            .enumerate()
            .map(|(i, m)| ((m.size(), m.encoding()), i))
            .collect();
        Self {
            signature,
            max_size,
            representatives,
            index,
            sat_cache: Mutex::default(),
            scott_cache: Mutex::default(),
        }
    }

    /// A space over an explicit list of structures, keeping the first of each isomorphism
    /// class. Each kept structure is replaced by its canonical relabelling.
    pub fn from_structures(signature: Signature, structures: impl IntoIterator<Item = Structure>) -> Result<Self, ModelError> {
        let mut seen = HashMap::new();
        let mut reps = Vec::new();
        let mut max_size = 1;
        for m in structures {
            if m.signature() != &signature {
                return Err(ModelError::SignatureMismatch);
            }
            let canon = m.canonical_encoding();
            if seen.insert((m.size(), canon.clone()), ()).is_none() {
                max_size = max_size.max(m.size());
                reps.push(Structure::from_encoding(signature.clone(), m.size(), &canon)?);
            }
        }
        Ok(Self::assemble(signature, max_size, reps))
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn representatives(&self) -> &[Structure] {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Index of the representative isomorphic to `m`, if `m` lies in the space.
    pub fn representative_of(&self, m: &Structure) -> Option<usize> {
        if m.signature() != &self.signature {
            return None;
        }
        self.index.get(&(m.size(), m.canonical_encoding())).copied()
    }

    pub fn all(&self) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(self.len());
        b.insert_range(..);
        b
    }

    /// The representatives satisfying `sentence`, as a bitset over representative indices.
    pub fn satisfying(&self, sentence: &Arc<Formula>) -> Result<FixedBitSet, ModelError> {
        let key = Arc::as_ptr(sentence) as usize;
        if let Some((_, b)) = self.sat_cache.lock().unwrap().get(&key) {
            return Ok(b.clone());
        }
        let cached = |c: &Arc<Formula>| self.sat_cache.lock().unwrap().contains_key(&(Arc::as_ptr(c) as usize));
        let bits = match &**sentence {
            // splitting an uncached conjunction would lose short-circuit evaluation
            Formula::And(cs) if cs.iter().all(cached) => {
                let mut acc = self.all();
                for c in cs {
                    acc.intersect_with(&self.satisfying(c)?);
                }
                acc
            }
            Formula::Or(cs) if cs.iter().all(cached) => {
                let mut acc = FixedBitSet::with_capacity(self.len());
                for c in cs {
                    acc.union_with(&self.satisfying(c)?);
                }
                acc
            }
            Formula::Not(c) => {
                let mut b = self.satisfying(c)?;
                b.toggle_range(..);
                b
            }
            _ => {
                let compiled = CompiledFormula::compile(sentence, &self.signature)?;
                if let Some(v) = compiled.free_vars().first() {
                    return Err(ModelError::UnboundVariable(v.to_string()));
                }
                let mut b = FixedBitSet::with_capacity(self.len());
                for (i, m) in self.representatives.iter().enumerate() {
                    if compiled.holds_in(m)? {
                        b.insert(i);
                    }
                }
                b
            }
        };
        self.sat_cache
            .lock()
            .unwrap()
            .insert(key, (sentence.clone(), bits.clone()));
        Ok(bits)
    }

    /// Representatives satisfying every sentence of `theory`.
    pub fn model_set(&self, theory: &Theory) -> Result<FixedBitSet, ModelError> {
        let mut acc = self.all();
        for s in theory.sentences() {
            acc.intersect_with(&self.satisfying(s)?);
        }
        Ok(acc)
    }

    /// The Scott sentence of representative `index` and its negation, built once per space.
    pub(crate) fn scott_sentence_cached(
        &self,
        index: usize,
        build: impl FnOnce(&Structure) -> Arc<Formula>,
    ) -> (Arc<Formula>, Arc<Formula>) {
        if let Some(pair) = self.scott_cache.lock().unwrap().get(&index) {
            return pair.clone();
        }
        let s = build(&self.representatives[index]);
        let not = Arc::new(Formula::Not(s.clone()));
        self.scott_cache.lock().unwrap().entry(index).or_insert((s, not)).clone()
    }
}

/// Representatives satisfying every sentence of `theory`.
pub fn models_of<'a>(theory: &Theory, space: &'a ModelSpace) -> Result<Vec<&'a Structure>, ModelError> {
    let set = space.model_set(theory)?;
    Ok(set.ones().map(|i| &space.representatives[i]).collect())
}

/// Result of a bounded entailment check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entailment {
    pub holds: bool,
    /// A model of the theory falsifying the sentence, when `holds` is false.
    pub counter_model: Option<Structure>,
    /// The size bound the verdict is relative to.
    pub bound: usize,
}

/// Whether every model of `theory` in the space satisfies `sentence`.
pub fn entails(theory: &Theory, sentence: &Arc<Formula>, space: &ModelSpace) -> Result<Entailment, ModelError> {
    let mut gap = space.model_set(theory)?;
    gap.difference_with(&space.satisfying(sentence)?);
    let counter_model = gap.ones().next().map(|i| space.representatives[i].clone());
    Ok(Entailment {
        holds: counter_model.is_none(),
        counter_model,
        bound: space.max_size(),
    })
}

/// Replaces an inconsistent theory by `{∃x x≠x}` and otherwise drops valid sentences.
pub fn preprocess(theory: &Theory, space: &ModelSpace) -> Result<Theory, ModelError> {
    if space.model_set(theory)?.is_clear() {
        let mut out = Theory::new();
        out.push(
            build::falsum(),
            Provenance::new(Origin::Preprocess, (0..theory.len()).collect()),
        );
        return Ok(out);
    }
    let all = space.all();
    let mut kept = Vec::new();
    for a in theory.axioms() {
        if space.satisfying(&a.sentence)? != all {
            kept.push(a.clone());
        }
    }
    Ok(Theory::from_axioms(kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_formula;

    fn unary() -> Signature {
        Signature::from_pairs([("P", 1)]).unwrap()
    }

    fn theory(src: &[&str]) -> Theory {
        src.iter().map(|s| parse_formula(s).unwrap()).collect()
    }

    /// Brute force: all labelled structures, deduplicated by trying every relabelling.
    fn oracle_class_count(sig: &Signature, max_size: usize) -> usize {
        let mut total = 0;
        for n in 1..=max_size {
            let bits = sig.table_bits(n).unwrap();
            let mut classes: Vec<Structure> = Vec::new();
            for code in 0..(1u64 << bits) {
                let enc: Vec<bool> = (0..bits).map(|p| code >> p & 1 == 1).collect();
                let m = Structure::from_encoding(sig.clone(), n, &enc).unwrap();
                let mut perm: Vec<usize> = (0..n).collect();
                let mut found = classes.contains(&m);
                while !found && next_permutation(&mut perm) {
                    found = classes.contains(&m.permuted(&perm));
                }
                if !found {
                    classes.push(m);
                }
            }
            total += classes.len();
        }
        total
    }

    #[test]
    fn class_counts() {
        assert_eq!(enumerate_models(&unary(), 2).unwrap().len(), 5);
        assert_eq!(enumerate_models(&Signature::empty(), 3).unwrap().len(), 3);
        let binary = Signature::from_pairs([("R", 2)]).unwrap();
        let oracle = oracle_class_count(&binary, 2);
        assert_eq!(oracle, 12);
        assert_eq!(enumerate_models(&binary, 2).unwrap().len(), oracle);
        let mixed = Signature::from_pairs([("P", 1), ("R", 2)]).unwrap();
        assert_eq!(enumerate_models(&mixed, 2).unwrap().len(), oracle_class_count(&mixed, 2));
    }

    #[test]
    fn every_labelled_structure_has_a_representative() {
        let sig = Signature::from_pairs([("P", 1), ("R", 2)]).unwrap();
        let space = enumerate_models(&sig, 3).unwrap();
        for code in (0u64..4096).step_by(37) {
            let enc: Vec<bool> = (0..12).map(|p| code >> p & 1 == 1).collect();
            let m = Structure::from_encoding(sig.clone(), 3, &enc).unwrap();
            assert!(space.representative_of(&m).is_some());
        }
    }

    #[test]
    fn overflow_is_reported() {
        let sig = Signature::from_pairs([("R", 2)]).unwrap();
        let limits = EnumerationLimits {
            max_classes: 3,
            ..Default::default()
        };
        assert!(matches!(
            enumerate_models_with(&sig, 2, limits),
            Err(ModelError::EnumerationOverflow(_))
        ));
    }

    #[test]
    fn models_of_examples() {
        let space = enumerate_models(&unary(), 2).unwrap();
        assert_eq!(models_of(&theory(&["(exists x (atom P x))"]), &space).unwrap().len(), 3);
        assert_eq!(models_of(&Theory::new(), &space).unwrap().len(), 5);
        assert!(models_of(&theory(&["(exists x (not (eq x x)))"]), &space).unwrap().is_empty());
    }

    #[test]
    fn entailment_examples() {
        let space = enumerate_models(&unary(), 2).unwrap();
        let all_p = theory(&["(forall x (atom P x))"]);
        let some_p = parse_formula("(exists x (atom P x))").unwrap();
        assert!(entails(&all_p, &some_p, &space).unwrap().holds);
        assert!(entails(&Theory::new(), &build::verum(), &space).unwrap().holds);

        let e = entails(&theory(&["(exists x (atom P x))"]), &parse_formula("(forall x (atom P x))").unwrap(), &space)
            .unwrap();
        assert!(!e.holds);
        let w = e.counter_model.unwrap();
        assert_eq!(w.size(), 2);
        assert_eq!(w.tuples(0).len(), 1);
        assert_eq!(e.bound, 2);
    }

    #[test]
    fn preprocess_examples() {
        let space = enumerate_models(&unary(), 2).unwrap();
        let t = theory(&["(exists x (eq x x))", "(exists x (atom P x))"]);
        let p = preprocess(&t, &space).unwrap();
        assert_eq!(p.to_strings(), vec!["(exists x (atom P x))"]);
        assert_eq!(p.axioms()[0].label, Provenance::input(1));

        let t = theory(&["(forall x (atom P x))", "(exists x (not (atom P x)))"]);
        let p = preprocess(&t, &space).unwrap();
        assert_eq!(p.to_strings(), vec!["(exists x (not (eq x x)))"]);

        assert!(preprocess(&Theory::new(), &space).unwrap().is_empty());
    }

    #[test]
    fn open_formula_is_rejected_by_space_checks() {
        let space = enumerate_models(&unary(), 1).unwrap();
        let e = space.satisfying(&parse_formula("(atom P x)").unwrap()).unwrap_err();
        assert_eq!(e, ModelError::UnboundVariable("x".into()));
    }
}
