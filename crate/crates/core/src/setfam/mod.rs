//! Finite set families and two constructions turning a family with nonempty intersection
//! into an equivalent independent one.
//!
//! A family is independent when its intersection is nonempty and, for every index `i`, some
//! point lies in every other set but not in set `i`. Two families are equivalent when their
//! intersections agree. The intersection of the empty family is the whole universe.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ModelSpace, Theory};
use crate::verify::{Certificate, Subject, VerificationReport, Witness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetFamilyError {
    #[error("the universe must be nonempty")]
    EmptyUniverse,
    #[error("element {element} is outside a universe of size {universe}")]
    ElementOutOfRange { element: usize, universe: usize },
    #[error("families live in universes of different sizes ({left} and {right})")]
    UniverseMismatch { left: usize, right: usize },
    #[error("the family has an empty intersection")]
    EmptyIntersection,
    #[error("index {index} is out of range for a family of {len} sets")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("construction not applicable: {0}")]
    NotApplicable(String),
    #[error("family file: {0}")]
    Json(String),
}

/// An indexed list of subsets of `0..universe`, each optionally labelled with the index
/// of the set (or sentence) it was derived from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetFamily {
    universe: usize,
    sets: Vec<FixedBitSet>,
    labels: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct FamilyFile {
    universe: usize,
    sets: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<Option<usize>>>,
}

impl SetFamily {
    pub fn new(universe: usize, sets: Vec<Vec<usize>>) -> Result<Self, SetFamilyError> {
        if universe == 0 {
            return Err(SetFamilyError::EmptyUniverse);
        }
        let mut bits = Vec::with_capacity(sets.len());
        for set in sets {
            let mut b = FixedBitSet::with_capacity(universe);
            for e in set {
                if e >= universe {
                    return Err(SetFamilyError::ElementOutOfRange { element: e, universe });
                }
                b.insert(e);
            }
            bits.push(b);
        }
        let labels = vec![None; bits.len()];
        Ok(Self {
            universe,
            sets: bits,
            labels,
        })
    }

    /// Builds from bitsets of capacity `universe`, with labels.
    pub fn from_bitsets(universe: usize, sets: Vec<FixedBitSet>, labels: Vec<Option<usize>>) -> Result<Self, SetFamilyError> {
        if universe == 0 {
            return Err(SetFamilyError::EmptyUniverse);
        }
        assert_eq!(sets.len(), labels.len());
        for s in &sets {
            if let Some(e) = s.ones().find(|&e| e >= universe) {
                return Err(SetFamilyError::ElementOutOfRange { element: e, universe });
            }
        }
        let sets = sets
            .into_iter()
            .map(|mut s| {
                s.grow(universe);
                s
            })
            .collect();
        Ok(Self { universe, sets, labels })
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[FixedBitSet] {
        &self.sets
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn set(&self, i: usize) -> Vec<usize> {
        self.sets[i].ones().collect()
    }

    pub fn full(&self) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(self.universe);
        b.insert_range(..);
        b
    }

    /// Intersection of all sets; the whole universe for the empty family.
    pub fn intersection(&self) -> FixedBitSet {
        self.intersection_without(None)
    }

    fn intersection_without(&self, skip: Option<usize>) -> FixedBitSet {
        let mut acc = self.full();
        for (i, s) in self.sets.iter().enumerate() {
            if Some(i) != skip {
                acc.intersect_with(s);
            }
        }
        acc
    }

    fn complement(&self, s: &FixedBitSet) -> FixedBitSet {
        let mut c = s.clone();
        c.toggle_range(..);
        c
    }

    pub fn to_json(&self) -> String {
        let file = FamilyFile {
            universe: self.universe,
            sets: (0..self.len()).map(|i| self.set(i)).collect(),
            labels: self.labels.iter().any(Option::is_some).then(|| self.labels.clone()),
        };
        serde_json::to_string_pretty(&file).expect("families serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SetFamilyError> {
        let file: FamilyFile = serde_json::from_str(text).map_err(|e| SetFamilyError::Json(e.to_string()))?;
        let mut f = Self::new(file.universe, file.sets)?;
        if let Some(labels) = file.labels {
            if labels.len() != f.len() {
                return Err(SetFamilyError::Json("one label per set is required".into()));
            }
            f.labels = labels;
        }
        Ok(f)
    }
}

/// Outcome of [`family_is_independent`] with its witnesses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyIndependence {
    pub independent: bool,
    /// A point of the intersection.
    pub common: Option<usize>,
    /// Per index `i`, a point in every other set but not in set `i`.
    pub separators: Vec<Option<usize>>,
}

impl FamilyIndependence {
    pub fn report(&self, universe: usize) -> VerificationReport {
        let mut certificates = vec![Certificate {
            condition: "the intersection is nonempty".into(),
            index: None,
            holds: self.common.is_some(),
            witness: self.common.map(Witness::Element),
        }];
        for (i, w) in self.separators.iter().enumerate() {
            certificates.push(Certificate {
                condition: format!("some point lies in every set but set {i}"),
                index: Some(i),
                holds: w.is_some(),
                witness: w.map(Witness::Element),
            });
        }
        VerificationReport::new(Subject::Family, universe, certificates)
    }
}

pub fn family_is_independent(f: &SetFamily) -> FamilyIndependence {
    let common = f.intersection().ones().next();
    let separators: Vec<Option<usize>> = (0..f.len())
        .map(|i| {
            let mut rest = f.intersection_without(Some(i));
            rest.difference_with(&f.sets[i]);
            rest.ones().next()
        })
        .collect();
    FamilyIndependence {
        independent: common.is_some() && separators.iter().all(Option::is_some),
        common,
        separators,
    }
}

pub fn families_equivalent(f: &SetFamily, g: &SetFamily) -> Result<bool, SetFamilyError> {
    if f.universe != g.universe {
        return Err(SetFamilyError::UniverseMismatch {
            left: f.universe,
            right: g.universe,
        });
    }
    Ok(f.intersection() == g.intersection())
}

/// Output of [`case1_transform`]: the new family and the blocks `C_j` it was cut from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case1Output {
    pub family: SetFamily,
    pub blocks: Vec<FixedBitSet>,
}

/// Cuts the complement of set `i0` into `|F|-1` blocks and returns
/// `B'_j = ∁C_j ∩ (∁F[i0] ∪ F[j])` for every `j ≠ i0`, in index order.
///
/// Blocks are singletons in element order, the last one taking the remainder. Needs a
/// nonempty intersection, at least two sets, and a complement with at least `|F|-1` points.
pub fn case1_transform(f: &SetFamily, i0: usize) -> Result<Case1Output, SetFamilyError> {
    if i0 >= f.len() {
        return Err(SetFamilyError::IndexOutOfRange { index: i0, len: f.len() });
    }
    if f.intersection().is_clear() {
        return Err(SetFamilyError::EmptyIntersection);
    }
    if f.len() < 2 {
        return Err(SetFamilyError::NotApplicable("needs at least two sets".into()));
    }
    let outside = f.complement(&f.sets[i0]);
    let points: Vec<usize> = outside.ones().collect();
    if points.len() < f.len() - 1 {
        return Err(SetFamilyError::NotApplicable(format!(
            "the complement of set {i0} has {} points but {} blocks are needed",
            points.len(),
            f.len() - 1
        )));
    }
    let mut blocks = Vec::with_capacity(f.len() - 1);
    for b in 0..f.len() - 1 {
        let mut block = FixedBitSet::with_capacity(f.universe);
        if b + 1 < f.len() - 1 {
            block.insert(points[b]);
        } else {
            for &p in &points[b..] {
                block.insert(p);
            }
        }
        blocks.push(block);
    }
    let mut sets = Vec::with_capacity(blocks.len());
    let mut labels = Vec::with_capacity(blocks.len());
    for (block, j) in blocks.iter().zip((0..f.len()).filter(|&j| j != i0)) {
        let mut b = outside.clone();
        b.union_with(&f.sets[j]);
        b.difference_with(block);
        sets.push(b);
        labels.push(Some(j));
    }
    Ok(Case1Output {
        family: SetFamily::from_bitsets(f.universe, sets, labels)?,
        blocks,
    })
}

/// Output of [`case2_transform`]: the retained sets and the indices dropped for being the
/// whole universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case2Output {
    pub family: SetFamily,
    pub dropped: Vec<usize>,
}

/// `B'_j = F[j] ∪ ⋃_{i<j} ∁F[i]` in index order, dropping sets equal to the universe.
pub fn case2_transform(f: &SetFamily) -> Result<Case2Output, SetFamilyError> {
    if f.intersection().is_clear() {
        return Err(SetFamilyError::EmptyIntersection);
    }
    let full = f.full();
    let mut seen_outside = FixedBitSet::with_capacity(f.universe);
    let mut sets = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = Vec::new();
    for (j, s) in f.sets.iter().enumerate() {
        let mut b = s.clone();
        b.union_with(&seen_outside);
        if b == full {
            dropped.push(j);
        } else {
            sets.push(b);
            labels.push(Some(j));
        }
        seen_outside.union_with(&f.complement(s));
    }
    Ok(Case2Output {
        family: SetFamily::from_bitsets(f.universe, sets, labels)?,
        dropped,
    })
}

/// Result of [`independize_family`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependizeReport {
    pub dropped: Vec<usize>,
    pub equivalent: bool,
    pub independence: FamilyIndependence,
}

impl IndependizeReport {
    pub fn verified(&self) -> bool {
        self.equivalent && self.independence.independent
    }
}

/// An equivalent independent family, by [`case2_transform`], checked before returning.
pub fn independize_family(f: &SetFamily) -> Result<(SetFamily, IndependizeReport), SetFamilyError> {
    let out = case2_transform(f)?;
    let report = IndependizeReport {
        dropped: out.dropped,
        equivalent: families_equivalent(f, &out.family)?,
        independence: family_is_independent(&out.family),
    };
    Ok((out.family, report))
}

/// The family of model sets of a theory: set `i` holds the representatives satisfying
/// sentence `i`. The universe is the list of representatives.
pub fn theory_to_family(theory: &Theory, space: &ModelSpace) -> Result<SetFamily, ModelError> {
    let mut sets = Vec::with_capacity(theory.len());
    for s in theory.sentences() {
        sets.push(space.satisfying(s)?);
    }
    let labels = (0..sets.len()).map(Some).collect();
    // a space always holds the one-element structures, and satisfying sets fit its length
    Ok(SetFamily::from_bitsets(space.len(), sets, labels).expect("model sets fit the space"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(universe: usize, sets: &[&[usize]]) -> SetFamily {
        SetFamily::new(universe, sets.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    fn as_vecs(f: &SetFamily) -> Vec<Vec<usize>> {
        (0..f.len()).map(|i| f.set(i)).collect()
    }

    #[test]
    fn independence_examples() {
        assert!(family_is_independent(&fam(2, &[&[0]])).independent);
        assert!(!family_is_independent(&fam(2, &[&[0], &[0]])).independent);
        let w = family_is_independent(&fam(3, &[&[0, 1], &[0, 2]]));
        assert!(w.independent);
        assert_eq!(w.common, Some(0));
        assert_eq!(w.separators, vec![Some(2), Some(1)]);
        assert!(family_is_independent(&fam(3, &[])).independent);
        assert!(w.report(3).passed());
    }

    #[test]
    fn equivalence_examples() {
        let f = fam(2, &[&[0]]);
        assert!(families_equivalent(&f, &f).unwrap());
        assert!(!families_equivalent(&f, &fam(2, &[&[1]])).unwrap());
        assert!(families_equivalent(&f, &fam(3, &[&[0]])).is_err());
    }

    #[test]
    fn case1_examples() {
        let f = fam(4, &[&[0, 1], &[0, 2], &[0, 3]]);
        let out = case1_transform(&f, 0).unwrap();
        let blocks: Vec<Vec<usize>> = out.blocks.iter().map(|b| b.ones().collect()).collect();
        assert_eq!(blocks, vec![vec![2], vec![3]]);
        assert_eq!(as_vecs(&out.family), vec![vec![0, 3], vec![0, 2]]);
        assert_eq!(out.family.labels(), &[Some(1), Some(2)]);
        assert!(families_equivalent(&f, &out.family).unwrap());
        assert!(family_is_independent(&out.family).independent);

        let two = fam(4, &[&[0, 1], &[0, 2]]);
        let out = case1_transform(&two, 0).unwrap();
        assert_eq!(out.blocks[0].ones().collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(as_vecs(&out.family), vec![vec![0]]);

        let no_room = fam(2, &[&[0, 1], &[0]]);
        assert!(matches!(case1_transform(&no_room, 0), Err(SetFamilyError::NotApplicable(_))));
        assert_eq!(case1_transform(&fam(2, &[&[0], &[1]]), 0).unwrap_err(), SetFamilyError::EmptyIntersection);
    }

    #[test]
    fn case2_examples() {
        let out = case2_transform(&fam(4, &[&[0, 1], &[1, 2]])).unwrap();
        assert_eq!(as_vecs(&out.family), vec![vec![0, 1], vec![1, 2, 3]]);
        assert!(family_is_independent(&out.family).independent);

        let out = case2_transform(&fam(4, &[&[0, 1], &[0, 1, 2]])).unwrap();
        assert_eq!(as_vecs(&out.family), vec![vec![0, 1]]);
        assert_eq!(out.dropped, vec![1]);

        let out = case2_transform(&fam(2, &[&[0, 1], &[0, 1]])).unwrap();
        assert!(out.family.is_empty());
        assert_eq!(out.family.intersection().count_ones(..), 2);
    }

    #[test]
    fn independize_examples() {
        let (out, report) = independize_family(&fam(3, &[])).unwrap();
        assert!(out.is_empty() && report.verified());
        let f = fam(3, &[&[0, 1], &[0, 2]]);
        let (out, report) = independize_family(&f).unwrap();
        assert!(report.verified());
        assert_eq!(as_vecs(&out), vec![vec![0, 1], vec![0, 2]]);
        assert_eq!(independize_family(&fam(2, &[&[0], &[1]])).unwrap_err(), SetFamilyError::EmptyIntersection);
    }

    #[test]
    fn json_round_trip() {
        let f = SetFamily::from_json(r#"{"universe": 8, "sets": [[0,1,2],[2,3]]}"#).unwrap();
        assert_eq!(as_vecs(&f), vec![vec![0, 1, 2], vec![2, 3]]);
        assert_eq!(SetFamily::from_json(&f.to_json()).unwrap(), f);
        let g = case2_transform(&f).unwrap().family;
        assert_eq!(SetFamily::from_json(&g.to_json()).unwrap(), g);
        assert!(matches!(
            SetFamily::from_json(r#"{"universe": 2, "sets": [[5]]}"#),
            Err(SetFamilyError::ElementOutOfRange { element: 5, .. })
        ));
    }
}
