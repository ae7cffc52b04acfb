use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Formula, ModelError};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
}

/// A finite relational signature. Order matters: it fixes the table encoding.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<RelationSymbol>", into = "Vec<RelationSymbol>")]
pub struct Signature {
    relations: Vec<RelationSymbol>,
}

impl Signature {
    pub fn new(relations: Vec<RelationSymbol>) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        for r in &relations {
            if r.arity == 0 {
                return Err(ModelError::ZeroArity(r.name.clone()));
            }
            if !seen.insert(r.name.as_str()) {
                return Err(ModelError::DuplicateRelation(r.name.clone()));
            }
        }
        Ok(Self { relations })
    }

    /// Builds a signature from `(name, arity)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, usize)>) -> Result<Self, ModelError> {
        Self::new(
            pairs
                .into_iter()
                .map(|(name, arity)| RelationSymbol {
                    name: name.to_string(),
                    arity,
                })
                .collect(),
        )
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn arity(&self, rel: usize) -> usize {
        self.relations[rel].arity
    }

    /// The relations used in `sentences`, ordered by name. A relation applied with two
    /// different arities is an error.
    pub fn infer<'a>(sentences: impl IntoIterator<Item = &'a Arc<Formula>>) -> Result<Self, ModelError> {
        let mut arities: BTreeMap<String, usize> = BTreeMap::new();
        let mut seen = HashSet::new();
        let mut stack: Vec<&Arc<Formula>> = sentences.into_iter().collect();
        while let Some(f) = stack.pop() {
            if !seen.insert(Arc::as_ptr(f)) {
                continue;
            }
            if let Formula::Atom { rel, args } = &**f {
                let expected = *arities.entry(rel.clone()).or_insert(args.len());
                if expected != args.len() {
                    return Err(ModelError::ArityMismatch {
                        relation: rel.clone(),
                        expected,
                        found: args.len(),
                    });
                }
            }
            stack.extend(f.children());
        }
        Self::new(
            arities
                .into_iter()
                .map(|(name, arity)| RelationSymbol { name, arity })
                .collect(),
        )
    }

    /// Number of table bits a structure of `size` carries over this signature.
    pub fn table_bits(&self, size: usize) -> Option<usize> {
        self.relations.iter().try_fold(0usize, |acc, r| {
            let cells = u32::try_from(r.arity).ok().and_then(|a| size.checked_pow(a))?;
            acc.checked_add(cells)
        })
    }
}

impl TryFrom<Vec<RelationSymbol>> for Signature {
    type Error = ModelError;

    fn try_from(relations: Vec<RelationSymbol>) -> Result<Self, Self::Error> {
        Self::new(relations)
    }
}

impl From<Signature> for Vec<RelationSymbol> {
    fn from(sig: Signature) -> Self {
        sig.relations
    }
}

/// A finite relational structure with universe `0..size`.
///
/// Relation tables are dense: table `r` holds `size.pow(arity)` cells in lexicographic tuple
/// order, so two structures are equal exactly when they have the same labelled diagram.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "StructureFile", into = "StructureFile")]
pub struct Structure {
    signature: Signature,
    size: usize,
    tables: Vec<Vec<bool>>,
}

impl Structure {
    /// The structure of the given size with every relation empty.
    pub fn new(signature: Signature, size: usize) -> Result<Self, ModelError> {
        if size == 0 {
            return Err(ModelError::EmptyUniverse);
        }
        let tables = signature
            .relations()
            .iter()
            .map(|r| vec![false; size.pow(r.arity as u32)])
            .collect();
        Ok(Self {
            signature,
            size,
            tables,
        })
    }

    /// Builds a structure from relation names mapped to tuple lists. Missing relations are empty.
    pub fn from_tuples<'a, I, T>(signature: Signature, size: usize, relations: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (&'a str, T)>,
        T: IntoIterator<Item = Vec<usize>>,
    {
        let mut m = Self::new(signature, size)?;
        for (name, tuples) in relations {
            let rel = m
                .signature
                .index_of(name)
                .ok_or_else(|| ModelError::UnknownRelation(name.to_string()))?;
            for t in tuples {
                m.insert(rel, &t)?;
            }
        }
        Ok(m)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn cell(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &e| acc * self.size + e)
    }

    /// Whether `rel` holds of `tuple`. Panics on out-of-range input.
    pub fn holds(&self, rel: usize, tuple: &[usize]) -> bool {
        debug_assert_eq!(tuple.len(), self.signature.arity(rel));
        self.tables[rel][self.cell(tuple)]
    }

    pub(crate) fn cell_value(&self, rel: usize, cell: usize) -> bool {
        self.tables[rel][cell]
    }

    pub fn insert(&mut self, rel: usize, tuple: &[usize]) -> Result<(), ModelError> {
        self.set(rel, tuple, true)
    }

    pub fn set(&mut self, rel: usize, tuple: &[usize], value: bool) -> Result<(), ModelError> {
        let arity = self.signature.arity(rel);
        if tuple.len() != arity || tuple.iter().any(|&e| e >= self.size) {
            return Err(ModelError::BadTuple {
                relation: self.signature.relations()[rel].name.clone(),
                tuple: tuple.to_vec(),
                arity,
                size: self.size,
            });
        }
        let c = self.cell(tuple);
        self.tables[rel][c] = value;
        Ok(())
    }

    /// Tuples of `rel` that hold, in lexicographic order.
    pub fn tuples(&self, rel: usize) -> Vec<Vec<usize>> {
        let arity = self.signature.arity(rel);
        self.tables[rel]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(cell, _)| decode_cell(cell, arity, self.size))
            .collect()
    }

    /// Concatenated relation tables, in signature order.
    pub fn encoding(&self) -> Vec<bool> {
        self.tables.iter().flatten().copied().collect()
    }

    /// Rebuilds a structure from [`Structure::encoding`] output.
    pub fn from_encoding(signature: Signature, size: usize, bits: &[bool]) -> Result<Self, ModelError> {
        let mut m = Self::new(signature, size)?;
        let mut rest = bits;
        for table in &mut m.tables {
            if rest.len() < table.len() {
                return Err(ModelError::EnumerationOverflow(
                    "encoding shorter than the signature requires".into(),
                ));
            }
            let len = table.len();
            table.copy_from_slice(&rest[..len]);
            rest = &rest[len..];
        }
        Ok(m)
    }

    /// The image of this structure under the relabelling `element e ↦ perm[e]`.
    pub fn permuted(&self, perm: &[usize]) -> Structure {
        assert_eq!(perm.len(), self.size);
        let mut out = Structure {
            signature: self.signature.clone(),
            size: self.size,
            tables: self.tables.iter().map(|t| vec![false; t.len()]).collect(),
        };
        for (rel, table) in self.tables.iter().enumerate() {
            let arity = self.signature.arity(rel);
            for (cell, &b) in table.iter().enumerate() {
                if b {
                    let image: Vec<usize> = decode_cell(cell, arity, self.size)
                        .into_iter()
                        .map(|e| perm[e])
                        .collect();
                    let c = out.cell(&image);
                    out.tables[rel][c] = true;
                }
            }
        }
        out
    }

    /// Lexicographically least encoding over all relabellings of the universe.
    ///
    /// Exact but factorial; intended for universes of at most eight elements.
    pub fn canonical_encoding(&self) -> Vec<bool> {
        let mut best = self.encoding();
        let mut perm: Vec<usize> = (0..self.size).collect();
        while next_permutation(&mut perm) {
            let enc = self.permuted(&perm).encoding();
            if enc < best {
                best = enc;
            }
        }
        best
    }
}

pub(crate) fn decode_cell(mut cell: usize, arity: usize, size: usize) -> Vec<usize> {
    let mut out = vec![0; arity];
    for slot in out.iter_mut().rev() {
        *slot = cell % size;
        cell /= size;
    }
    out
}

/// Advances `perm` to the next permutation in lexicographic order; false once exhausted.
pub(crate) fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

impl fmt::Debug for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Structure");
        s.field("size", &self.size);
        for (i, r) in self.signature.relations().iter().enumerate() {
            s.field(&r.name, &self.tuples(i));
        }
        s.finish()
    }
}

/// On-disk form: `{"signature":[{"name":"R","arity":2}],"size":3,"relations":{"R":[[0,1]]}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct StructureFile {
    signature: Signature,
    size: usize,
    #[serde(default)]
    relations: BTreeMap<String, Vec<Vec<usize>>>,
}

impl TryFrom<StructureFile> for Structure {
    type Error = ModelError;

    fn try_from(file: StructureFile) -> Result<Self, Self::Error> {
        let mut m = Structure::new(file.signature, file.size)?;
        for (name, tuples) in &file.relations {
            let rel = m
                .signature
                .index_of(name)
                .ok_or_else(|| ModelError::UnknownRelation(name.clone()))?;
            for t in tuples {
                let c = if t.len() == m.signature.arity(rel) && t.iter().all(|&e| e < m.size) {
                    m.cell(t)
                } else {
                    return Err(ModelError::BadTuple {
                        relation: name.clone(),
                        tuple: t.clone(),
                        arity: m.signature.arity(rel),
                        size: m.size,
                    });
                };
                if m.tables[rel][c] {
                    return Err(ModelError::BadTuple {
                        relation: format!("{name} (duplicate)"),
                        tuple: t.clone(),
                        arity: m.signature.arity(rel),
                        size: m.size,
                    });
                }
                m.tables[rel][c] = true;
            }
        }
        Ok(m)
    }
}

impl From<Structure> for StructureFile {
    fn from(m: Structure) -> Self {
        let relations = m
            .signature
            .relations()
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), m.tuples(i)))
            .collect();
        StructureFile {
            signature: m.signature,
            size: m.size,
            relations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_formula;

    #[test]
    fn signatures_are_inferred_by_name() {
        let fs = [
            parse_formula("(forall x (atom R x x))").unwrap(),
            parse_formula("(exists y (and (atom P y) (atom R y y)))").unwrap(),
        ];
        let sig = Signature::infer(&fs).unwrap();
        assert_eq!(sig, Signature::from_pairs([("P", 1), ("R", 2)]).unwrap());
        let clash = parse_formula("(exists x (and (atom P x) (atom P x x)))").unwrap();
        assert!(matches!(Signature::infer([&clash]), Err(ModelError::ArityMismatch { .. })));
    }

    fn cycle(n: usize) -> Structure {
        let sig = Signature::from_pairs([("R", 2)]).unwrap();
        Structure::from_tuples(sig, n, [("R", (0..n).map(|i| vec![i, (i + 1) % n]))]).unwrap()
    }

    #[test]
    fn signature_rejects_duplicates_and_nullary() {
        assert_eq!(
            Signature::from_pairs([("R", 2), ("R", 1)]),
            Err(ModelError::DuplicateRelation("R".into()))
        );
        assert_eq!(
            Signature::from_pairs([("c", 0)]),
            Err(ModelError::ZeroArity("c".into()))
        );
    }

    #[test]
    fn json_matches_documented_shape() {
        let text = r#"{"signature":[{"name":"R","arity":2}],"size":3,"relations":{"R":[[0,1],[1,2],[2,0]]}}"#;
        let m: Structure = serde_json::from_str(text).unwrap();
        assert_eq!(m, cycle(3));
        assert_eq!(serde_json::to_string(&m).unwrap(), text);
    }

    #[test]
    fn json_rejects_out_of_range_and_duplicates() {
        let bad = r#"{"signature":[{"name":"R","arity":2}],"size":2,"relations":{"R":[[0,2]]}}"#;
        assert!(serde_json::from_str::<Structure>(bad).is_err());
        let dup = r#"{"signature":[{"name":"R","arity":2}],"size":2,"relations":{"R":[[0,1],[0,1]]}}"#;
        assert!(serde_json::from_str::<Structure>(dup).is_err());
        let empty = r#"{"signature":[],"size":0,"relations":{}}"#;
        assert!(serde_json::from_str::<Structure>(empty).is_err());
    }

    #[test]
    fn canonical_encoding_is_relabelling_invariant() {
        let c = cycle(4);
        let p = c.permuted(&[2, 0, 3, 1]);
        assert_ne!(c, p);
        assert_eq!(c.canonical_encoding(), p.canonical_encoding());
    }

    #[test]
    fn next_permutation_visits_all() {
        let mut p = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut p) {
            n += 1;
        }
        assert_eq!(n, 24);
    }
}
