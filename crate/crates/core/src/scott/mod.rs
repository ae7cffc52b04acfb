//! Back-and-forth types, Scott height, Scott sentences and isomorphism invariants.
//!
//! Types are computed by joint partition refinement over every tuple of length
//! `0..=n_max` in a list of structures, where `n_max` is the largest universe size.
//! Level 0 groups tuples by atomic type; level `k+1` groups two tuples when they agree at
//! level `k` and every one-element extension of either is matched by one of the other.
//!
//! Tuples of length `n_max` are not extended. For them the successor step is computed
//! exactly by other means:
//!
//! - a tuple with a repeated entry has the level-`k+1` type of the shorter tuple obtained by
//!   deleting the last repeated coordinate;
//! - a repetition-free tuple lists its whole structure, so every extension repeats an entry
//!   and its type stops changing after level 0.
//!
//! Both facts hold for the uncapped recursion too, so the capped partition agrees with it
//! at every level.

mod sentence;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{Formula, ModelError, ModelSpace, Structure};

pub use sentence::{type_formula, DEFAULT_MATERIALIZE_CAP};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScottError {
    #[error("structures do not share a signature")]
    SignatureMismatch,
    #[error("tuples have different lengths ({left} and {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("element {element} is outside a universe of size {size}")]
    ElementOutOfRange { element: usize, size: usize },
    #[error("tuple of length {length} exceeds the partition bound {bound}")]
    TupleTooLong { length: usize, bound: usize },
    #[error("no structure with index {0} in the partition")]
    NoSuchStructure(usize),
    #[error("refusing to materialize a Scott sentence for size {size} above the cap {cap}")]
    MaterializationRefused { size: usize, cap: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A class of the type partition at one level. Class indices are dense per level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TypeId {
    pub level: usize,
    pub class_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Key {
    Atomic { len: usize, facts: Vec<bool> },
    Extend { prev: u32, ext: Vec<u32> },
    Reduced { prev: u32, reduced: u32 },
    Frozen { prev: u32 },
}

#[derive(Clone, Debug)]
struct Level {
    /// `classes[s][len][code]` for the tuple with base-`size` code `code`.
    classes: Vec<Vec<Vec<u32>>>,
    /// `keys[id]` is the key that class `id` was numbered from.
    keys: Vec<Key>,
}

/// Joint type partition of a list of structures.
///
/// Stored levels run one past the stabilization level; queries
/// at higher levels are answered from the stabilization level.
#[derive(Clone, Debug)]
pub struct TypePartition {
    structures: Vec<Structure>,
    n_max: usize,
    levels: Vec<Level>,
    stabilization_level: usize,
}

fn encode(tuple: &[usize], size: usize) -> usize {
    tuple.iter().fold(0, |acc, &e| acc * size + e)
}

fn decode(mut code: usize, len: usize, size: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = code % size;
        code /= size;
    }
    out
}

fn atomic_facts(m: &Structure, t: &[usize]) -> Vec<bool> {
    let len = t.len();
    let mut facts = Vec::new();
    for i in 0..len {
        for j in i + 1..len {
            facts.push(t[i] == t[j]);
        }
    }
    let mut args = Vec::new();
    for (r, sym) in m.signature().relations().iter().enumerate() {
        for map in 0..len.pow(sym.arity as u32) {
            args.clear();
            args.extend(decode(map, sym.arity, len).into_iter().map(|c| t[c]));
            facts.push(m.holds(r, &args));
        }
    }
    facts
}

/// Numbers `keys` by rank among their distinct values, starting at `offset`.
fn number(keys: Vec<Key>, offset: u32, table: &mut Vec<Key>) -> Vec<u32> {
    let distinct: BTreeSet<&Key> = keys.iter().collect();
    let rank: BTreeMap<&Key, u32> = distinct.iter().enumerate().map(|(i, &k)| (k, offset + i as u32)).collect();
    let ids = keys.iter().map(|k| rank[k]).collect();
    table.extend(distinct.into_iter().cloned());
    ids
}

/// The coordinate removed when reducing a tuple with a repeated entry.
fn last_repeat(t: &[usize]) -> Option<usize> {
    (1..t.len()).rev().find(|&j| t[..j].contains(&t[j]))
}

impl TypePartition {
    fn level0(structures: &[Structure], n_max: usize) -> Level {
        let mut keys = Vec::new();
        for m in structures {
            for len in 0..=n_max {
                for code in 0..m.size().pow(len as u32) {
                    let t = decode(code, len, m.size());
                    keys.push(Key::Atomic {
                        len,
                        facts: atomic_facts(m, &t),
                    });
                }
            }
        }
        let mut table = Vec::new();
        let ids = number(keys, 0, &mut table);
        Level {
            classes: Self::split(structures, n_max, &ids, |_| true),
            keys: table,
        }
    }

    /// Cuts a flat id list (ordered by structure, length, code) back into tables, taking
    /// only lengths accepted by `keep`.
    fn split(structures: &[Structure], n_max: usize, ids: &[u32], keep: impl Fn(usize) -> bool) -> Vec<Vec<Vec<u32>>> {
        let mut pos = 0;
        structures
            .iter()
            .map(|m| {
                (0..=n_max)
                    .filter(|&len| keep(len))
                    .map(|len| {
                        let count = m.size().pow(len as u32);
                        let out = ids[pos..pos + count].to_vec();
                        pos += count;
                        out
                    })
                    .collect()
            })
            .collect()
    }

    fn refine(structures: &[Structure], n_max: usize, prev: &Level) -> Level {
        let mut table = Vec::new();
        let mut keys = Vec::new();
        for (s, m) in structures.iter().enumerate() {
            let n = m.size();
            for len in 0..n_max {
                for code in 0..n.pow(len as u32) {
                    let mut ext: Vec<u32> = (0..n).map(|c| prev.classes[s][len + 1][code * n + c]).collect();
                    ext.sort_unstable();
                    ext.dedup();
                    keys.push(Key::Extend {
                        prev: prev.classes[s][len][code],
                        ext,
                    });
                }
            }
        }
        let short_ids = number(keys, 0, &mut table);
        let mut classes = Self::split(structures, n_max, &short_ids, |len| len < n_max);

        let mut keys = Vec::new();
        for (s, m) in structures.iter().enumerate() {
            let n = m.size();
            for code in 0..n.pow(n_max as u32) {
                let t = decode(code, n_max, n);
                let prev_id = prev.classes[s][n_max][code];
                keys.push(match last_repeat(&t) {
                    Some(j) => {
                        let mut r = t.clone();
                        r.remove(j);
                        Key::Reduced {
                            prev: prev_id,
                            reduced: classes[s][n_max - 1][encode(&r, n)],
                        }
                    }
                    None => Key::Frozen { prev: prev_id },
                });
            }
        }
        let offset = table.len() as u32;
        let long_ids = number(keys, offset, &mut table);
        let mut pos = 0;
        for (s, m) in structures.iter().enumerate() {
            let count = m.size().pow(n_max as u32);
            classes[s].push(long_ids[pos..pos + count].to_vec());
            pos += count;
        }
        Level { classes, keys: table }
    }

    fn build(structures: Vec<Structure>) -> Self {
        let n_max = structures.iter().map(Structure::size).max().unwrap_or(0);
        let mut levels = vec![Self::level0(&structures, n_max)];
        loop {
            let next = Self::refine(&structures, n_max, levels.last().unwrap());
            let stable = next.keys.len() == levels.last().unwrap().keys.len();
            levels.push(next);
            if stable {
                break;
            }
        }
        let stabilization_level = levels.len() - 2;
        Self {
            structures,
            n_max,
            levels,
            stabilization_level,
        }
    }

    pub fn structures(&self) -> &[Structure] {
        &self.structures
    }

    /// The tuple-length bound: the largest universe size.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Least level at which the partition stops changing.
    pub fn stabilization_level(&self) -> usize {
        self.stabilization_level
    }

    /// Number of classes at `level`.
    pub fn class_count(&self, level: usize) -> usize {
        self.levels[level.min(self.stabilization_level)].keys.len()
    }

    /// The type of `tuple` in structure `structure` at `level`. Levels past stabilization
    /// report the stabilization level.
    pub fn type_of(&self, structure: usize, tuple: &[usize], level: usize) -> Result<TypeId, ScottError> {
        let m = self.structures.get(structure).ok_or(ScottError::NoSuchStructure(structure))?;
        if tuple.len() > self.n_max {
            return Err(ScottError::TupleTooLong {
                length: tuple.len(),
                bound: self.n_max,
            });
        }
        if let Some(&e) = tuple.iter().find(|&&e| e >= m.size()) {
            return Err(ScottError::ElementOutOfRange { element: e, size: m.size() });
        }
        let level = level.min(self.stabilization_level);
        Ok(TypeId {
            level,
            class_index: self.levels[level].classes[structure][tuple.len()][encode(tuple, m.size())] as usize,
        })
    }

    /// Whether two (structure, tuple) pairs share a class at `level`.
    ///
    /// Tuples longer than `n_max` repeat entries; they agree when they repeat in the same
    /// places and agree after the repeats are deleted.
    pub fn same_type(&self, s: usize, a: &[usize], t: usize, b: &[usize], level: usize) -> Result<bool, ScottError> {
        if a.len() != b.len() {
            return Err(ScottError::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        if a.len() <= self.n_max {
            return Ok(self.type_of(s, a, level)? == self.type_of(t, b, level)?);
        }
        let pattern = |t: &[usize]| -> Vec<bool> { (0..t.len()).flat_map(|i| (0..i).map(move |j| t[i] == t[j])).collect() };
        if pattern(a) != pattern(b) {
            return Ok(false);
        }
        let (mut a, mut b) = (a.to_vec(), b.to_vec());
        while a.len() > self.n_max {
            let j = last_repeat(&a).expect("tuples longer than every universe repeat");
            a.remove(j);
            b.remove(j);
        }
        self.same_type(s, &a, t, &b, level)
    }

    /// Every (tuple, type) pair of structure `s` at `level`, tuples of all lengths.
    pub fn types_in(&self, s: usize, level: usize) -> impl Iterator<Item = TypeId> + '_ {
        let level = level.min(self.stabilization_level);
        self.levels[level].classes[s]
            .iter()
            .flatten()
            .map(move |&c| TypeId {
                level,
                class_index: c as usize,
            })
    }
}

/// Joint type partition of `structures`, which must share a signature.
pub fn joint_type_partition(structures: &[Structure]) -> Result<TypePartition, ScottError> {
    if let Some(first) = structures.first() {
        if structures.iter().any(|m| m.signature() != first.signature()) {
            return Err(ScottError::SignatureMismatch);
        }
    }
    Ok(TypePartition::build(structures.to_vec()))
}

/// Whether `(m, a)` and `(n, b)` have the same type at level `alpha`.
pub fn types_equal(m: &Structure, a: &[usize], n: &Structure, b: &[usize], alpha: usize) -> Result<bool, ScottError> {
    if a.len() != b.len() {
        return Err(ScottError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    for (t, s) in [(a, m), (b, n)] {
        if let Some(&e) = t.iter().find(|&&e| e >= s.size()) {
            return Err(ScottError::ElementOutOfRange { element: e, size: s.size() });
        }
    }
    joint_type_partition(&[m.clone(), n.clone()])?.same_type(0, a, 1, b, alpha)
}

/// Least level at which the self-partition of `m` is stable.
pub fn scott_height(m: &Structure) -> usize {
    TypePartition::build(vec![m.clone()]).stabilization_level()
}

/// An isomorphism-complete invariant of a finite structure: its size and the key tables of
/// its own type partition, which determine the whole type of the empty tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalInvariant {
    size: usize,
    tables: Vec<Vec<Key>>,
    root: u32,
}

impl CanonicalInvariant {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Hex SHA-256 of a fixed serialization of the invariant.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let word = |h: &mut Sha256, x: u64| h.update(x.to_le_bytes());
        word(&mut h, self.size as u64);
        word(&mut h, self.root as u64);
        word(&mut h, self.tables.len() as u64);
        for table in &self.tables {
            word(&mut h, table.len() as u64);
            for key in table {
                match key {
                    Key::Atomic { len, facts } => {
                        word(&mut h, 0);
                        word(&mut h, *len as u64);
                        word(&mut h, facts.len() as u64);
                        h.update(facts.iter().map(|&b| b as u8).collect::<Vec<_>>());
                    }
                    Key::Extend { prev, ext } => {
                        word(&mut h, 1);
                        word(&mut h, *prev as u64);
                        word(&mut h, ext.len() as u64);
                        for &e in ext {
                            word(&mut h, e as u64);
                        }
                    }
                    Key::Reduced { prev, reduced } => {
                        word(&mut h, 2);
                        word(&mut h, *prev as u64);
                        word(&mut h, *reduced as u64);
                    }
                    Key::Frozen { prev } => {
                        word(&mut h, 3);
                        word(&mut h, *prev as u64);
                    }
                }
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for CanonicalInvariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digest())
    }
}

pub fn canonical_invariant(m: &Structure) -> CanonicalInvariant {
    let p = TypePartition::build(vec![m.clone()]);
    let last = p.levels.last().unwrap();
    CanonicalInvariant {
        size: m.size(),
        tables: p.levels.iter().map(|l| l.keys.clone()).collect(),
        root: last.classes[0][0][0],
    }
}

/// Ψ and Φ at level `alpha`: the classes realized by any tuple, and by the empty tuple, in
/// the models of `sentence` within the space. Class indices refer to the joint partition of
/// all representatives.
pub fn alpha_types_of(
    sentence: &Arc<Formula>,
    alpha: usize,
    space: &ModelSpace,
) -> Result<(BTreeSet<TypeId>, BTreeSet<TypeId>), ScottError> {
    let models = space.satisfying(sentence)?;
    let mut psi = BTreeSet::new();
    let mut phi = BTreeSet::new();
    if models.is_clear() {
        return Ok((psi, phi));
    }
    let p = TypePartition::build(space.representatives().to_vec());
    for s in models.ones() {
        psi.extend(p.types_in(s, alpha));
        phi.insert(p.type_of(s, &[], alpha)?);
    }
    Ok((psi, phi))
}

/// `(|Ψ_α|, |Φ_α|)` for `α` from 0 to one past the stabilization level of the joint
/// partition, from a single refinement. Empty when the sentence has no model.
pub fn alpha_type_counts(sentence: &Arc<Formula>, space: &ModelSpace) -> Result<Vec<(usize, usize)>, ScottError> {
    let models = space.satisfying(sentence)?;
    if models.is_clear() {
        return Ok(Vec::new());
    }
    let p = TypePartition::build(space.representatives().to_vec());
    let mut out = Vec::new();
    for alpha in 0..=p.stabilization_level() + 1 {
        let mut psi = BTreeSet::new();
        let mut phi = BTreeSet::new();
        for s in models.ones() {
            psi.extend(p.types_in(s, alpha));
            phi.insert(p.type_of(s, &[], alpha)?);
        }
        out.push((psi.len(), phi.len()));
    }
    Ok(out)
}

/// Height, invariant and (when the size allows) Scott sentence of one structure.
#[derive(Clone, Debug)]
pub struct ScottReport {
    pub structure: Structure,
    pub height: usize,
    pub sentence: Option<Arc<Formula>>,
    pub invariant: CanonicalInvariant,
}

/// Builds a [`ScottReport`], materializing the sentence only when `|m| <= cap`.
pub fn scott_report(m: &Structure, cap: usize) -> ScottReport {
    ScottReport {
        structure: m.clone(),
        height: scott_height(m),
        sentence: scott_sentence_capped(m, cap).ok(),
        invariant: canonical_invariant(m),
    }
}

/// The Scott sentence of `m` at the default materialization cap.
pub fn scott_sentence(m: &Structure) -> Result<Arc<Formula>, ScottError> {
    scott_sentence_capped(m, DEFAULT_MATERIALIZE_CAP)
}

/// The Scott sentence `φ^{∅,M}_{α(M)+2}`, refused for structures larger than `cap`.
pub fn scott_sentence_capped(m: &Structure, cap: usize) -> Result<Arc<Formula>, ScottError> {
    if m.size() > cap {
        return Err(ScottError::MaterializationRefused { size: m.size(), cap });
    }
    Ok(sentence::build_type_formula(m, &[], scott_height(m) + 2))
}

/// The Scott sentence of representative `index`, shared across calls on the same space so
/// that satisfaction sets are computed once per representative.
pub fn space_scott_sentence(space: &ModelSpace, index: usize, cap: usize) -> Result<Arc<Formula>, ScottError> {
    Ok(cached_pair(space, index, cap)?.0)
}

/// The negation of [`space_scott_sentence`], likewise shared.
pub fn space_negated_scott_sentence(space: &ModelSpace, index: usize, cap: usize) -> Result<Arc<Formula>, ScottError> {
    Ok(cached_pair(space, index, cap)?.1)
}

fn cached_pair(space: &ModelSpace, index: usize, cap: usize) -> Result<(Arc<Formula>, Arc<Formula>), ScottError> {
    let m = space.representatives().get(index).ok_or(ScottError::NoSuchStructure(index))?;
    if m.size() > cap {
        return Err(ScottError::MaterializationRefused { size: m.size(), cap });
    }
    Ok(space.scott_sentence_cached(index, |m| {
        sentence::build_type_formula(m, &[], scott_height(m) + 2)
    }))
}
