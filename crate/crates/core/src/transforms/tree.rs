//! Binary trees of formula sets separating finitely many one-variable types, and the
//! sentence `φ*` asserting that some element follows a branch to the end.
//!
//! Siblings are incompatible in the semantic sense: no element of any structure in the
//! space satisfies both labels. Labels grow along branches and each leaf label is exactly
//! one input type.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::TransformError;
use crate::model::{build, Assignment, CompiledFormula, Formula, FormulaDigest, ModelSpace};
use crate::scott::TypeId;
use crate::verify::{Certificate, Subject, VerificationReport, Witness};

/// One input type: formulas in the single free variable `x0`.
#[derive(Clone, Debug)]
pub struct TypeSpec {
    pub id: TypeId,
    pub formulas: Vec<Arc<Formula>>,
}

/// Nodes are keyed by binary strings, the root by the empty string.
#[derive(Clone, Debug)]
pub struct SeparatingTree {
    pub var: String,
    pub nodes: BTreeMap<String, Vec<Arc<Formula>>>,
    pub leaves: BTreeMap<String, usize>,
}

impl SeparatingTree {
    /// Length of the longest branch.
    pub fn depth(&self) -> usize {
        self.nodes.keys().map(String::len).max().unwrap_or(0)
    }

    /// Nodes of length `n`, plus shorter leaves, which stand for themselves at every
    /// deeper level.
    pub fn frontier(&self, n: usize) -> Vec<&str> {
        self.nodes
            .keys()
            .filter(|u| u.len() == n || (u.len() < n && self.leaves.contains_key(*u)))
            .map(String::as_str)
            .collect()
    }

    /// Re-checks monotonicity, sibling incompatibility over the space and the leaf bijection.
    pub fn check(&self, types: &[TypeSpec], space: &ModelSpace) -> Result<VerificationReport, TransformError> {
        let mut pool = Pool::new(space);
        let mut certificates = Vec::new();
        for (u, label) in &self.nodes {
            if let Some(parent) = u.len().checked_sub(1).map(|l| &u[..l]) {
                let above = &self.nodes[parent];
                certificates.push(Certificate {
                    condition: format!("node '{u}' extends its parent's label"),
                    index: None,
                    holds: above.iter().all(|f| label.contains(f)),
                    witness: None,
                });
            }
            if u.ends_with('0') {
                let sibling = format!("{}1", &u[..u.len() - 1]);
                if let Some(other) = self.nodes.get(&sibling) {
                    let both = pool.satisfying_all(label.iter().chain(other).cloned())?;
                    certificates.push(Certificate {
                        condition: format!("node '{u}' is incompatible with node '{sibling}'"),
                        index: None,
                        holds: both.is_clear(),
                        witness: both.ones().next().map(|p| Witness::Structure(space.representatives()[pool.points[p].0].clone())),
                    });
                }
            }
        }
        let mut hit = vec![0usize; types.len()];
        for (u, &t) in &self.leaves {
            let label: BTreeSet<usize> = self.nodes[u].iter().map(|f| pool.id(f)).collect();
            let want: BTreeSet<usize> = types[t].formulas.iter().map(|f| pool.id(f)).collect();
            hit[t] += 1;
            certificates.push(Certificate {
                condition: format!("leaf '{u}' carries exactly type {t}"),
                index: Some(t),
                holds: label == want,
                witness: None,
            });
        }
        for (t, &h) in hit.iter().enumerate() {
            certificates.push(Certificate {
                condition: format!("type {t} ends exactly one branch"),
                index: Some(t),
                holds: h == 1,
                witness: None,
            });
        }
        Ok(VerificationReport::new(Subject::Transform, space.max_size(), certificates))
    }
}

/// Distinct formulas of the instance with their satisfaction sets over the points
/// (representative, element) of the space.
struct Pool<'s> {
    space: &'s ModelSpace,
    points: Vec<(usize, usize)>,
    digest: FormulaDigest,
    buckets: HashMap<u64, Vec<usize>>,
    formulas: Vec<Arc<Formula>>,
    bits: Vec<Option<FixedBitSet>>,
}

impl<'s> Pool<'s> {
    fn new(space: &'s ModelSpace) -> Self {
        let points = space
            .representatives()
            .iter()
            .enumerate()
            .flat_map(|(k, m)| (0..m.size()).map(move |e| (k, e)))
            .collect();
        Self {
            space,
            points,
            digest: FormulaDigest::new(),
            buckets: HashMap::new(),
            formulas: Vec::new(),
            bits: Vec::new(),
        }
    }

    fn id(&mut self, f: &Arc<Formula>) -> usize {
        let d = self.digest.digest(f);
        let formulas = &self.formulas;
        let bucket = self.buckets.entry(d).or_default();
        if let Some(&i) = bucket.iter().find(|&&i| formulas[i] == *f) {
            return i;
        }
        bucket.push(formulas.len());
        self.formulas.push(f.clone());
        self.bits.push(None);
        self.formulas.len() - 1
    }

    fn bits(&mut self, i: usize) -> Result<&FixedBitSet, TransformError> {
        if self.bits[i].is_none() {
            if let Formula::Not(inner) = &*self.formulas[i].clone() {
                let j = self.id(inner);
                let mut b = self.bits(j)?.clone();
                b.toggle_range(..);
                self.bits[i] = Some(b);
                return Ok(self.bits[i].as_ref().expect("just filled"));
            }
            let compiled = CompiledFormula::compile(&self.formulas[i], self.space.signature())?;
            let mut b = FixedBitSet::with_capacity(self.points.len());
            let mut at = Assignment::new();
            for (p, &(k, e)) in self.points.iter().enumerate() {
                at.insert("x0".into(), e);
                if compiled.eval(&self.space.representatives()[k], &at)? {
                    b.insert(p);
                }
            }
            self.bits[i] = Some(b);
        }
        Ok(self.bits[i].as_ref().expect("just filled"))
    }

    fn satisfying_all(&mut self, fs: impl Iterator<Item = Arc<Formula>>) -> Result<FixedBitSet, TransformError> {
        let mut acc = FixedBitSet::with_capacity(self.points.len());
        acc.insert_range(..);
        for f in fs {
            let i = self.id(&f);
            acc.intersect_with(self.bits(i)?);
        }
        Ok(acc)
    }
}

/// Splits the types recursively on a pair of incompatible formulas, each type containing
/// one of them, preferring the most balanced split.
pub fn build_separating_tree(types: &[TypeSpec], space: &ModelSpace) -> Result<SeparatingTree, TransformError> {
    let mut pool = Pool::new(space);
    let mut sets: Vec<BTreeSet<usize>> = Vec::with_capacity(types.len());
    for (t, ty) in types.iter().enumerate() {
        if ty.formulas.iter().any(|f| f.free_vars().iter().any(|v| v != "x0")) {
            return Err(TransformError::NotUnary(t));
        }
        let set: BTreeSet<usize> = ty.formulas.iter().map(|f| pool.id(f)).collect();
        if let Some(first) = sets.iter().position(|s| *s == set) {
            return Err(TransformError::DuplicateTypes { first, second: t });
        }
        sets.push(set);
    }
    for (t, set) in sets.iter().enumerate() {
        let formulas: Vec<Arc<Formula>> = set.iter().map(|&i| pool.formulas[i].clone()).collect();
        if pool.satisfying_all(formulas.into_iter())?.is_clear() {
            return Err(TransformError::Unrealized(t));
        }
    }
    let mut labels = BTreeMap::new();
    let mut leaves = BTreeMap::new();
    let group: Vec<usize> = (0..types.len()).collect();
    split(&mut pool, &sets, &group, BTreeSet::new(), String::new(), &mut labels, &mut leaves)?;
    let nodes = labels
        .into_iter()
        .map(|(u, s): (String, BTreeSet<usize>)| (u, s.into_iter().map(|i| pool.formulas[i].clone()).collect()))
        .collect();
    Ok(SeparatingTree {
        var: "x0".into(),
        nodes,
        leaves,
    })
}

fn split(
    pool: &mut Pool,
    sets: &[BTreeSet<usize>],
    group: &[usize],
    label: BTreeSet<usize>,
    at: String,
    labels: &mut BTreeMap<String, BTreeSet<usize>>,
    leaves: &mut BTreeMap<String, usize>,
) -> Result<(), TransformError> {
    labels.insert(at.clone(), label.clone());
    match group {
        [] => return Ok(()),
        [t] => {
            if sets[*t] == label {
                leaves.insert(at, *t);
            } else {
                let child = format!("{at}0");
                labels.insert(child.clone(), sets[*t].clone());
                leaves.insert(child, *t);
            }
            return Ok(());
        }
        _ => {}
    }
    let candidates: BTreeSet<usize> = group.iter().flat_map(|&t| sets[t].difference(&label).copied()).collect();
    let candidates: Vec<usize> = candidates.into_iter().collect();
    let mut best: Option<(usize, usize, usize)> = None;
    for (x, &a) in candidates.iter().enumerate() {
        for &b in &candidates[x + 1..] {
            let (mut left, mut right) = (0, 0);
            let covers = group.iter().all(|&t| match (sets[t].contains(&a), sets[t].contains(&b)) {
                (true, false) => {
                    left += 1;
                    true
                }
                (false, true) => {
                    right += 1;
                    true
                }
                _ => false,
            });
            let balance = left.min(right);
            if !covers || balance == 0 || best.is_some_and(|(_, _, bb)| bb >= balance) {
                continue;
            }
            let mut both = pool.bits(a)?.clone();
            both.intersect_with(pool.bits(b)?);
            if both.is_clear() {
                best = Some((a, b, balance));
            }
        }
    }
    let Some((a, b, _)) = best else {
        return Err(TransformError::Inseparable {
            left: group[0],
            right: group[1],
        });
    };
    for (bit, f) in [('0', a), ('1', b)] {
        let side: Vec<usize> = group.iter().copied().filter(|&t| sets[t].contains(&f)).collect();
        let mut child = label.clone();
        child.insert(f);
        split(pool, sets, &side, child, format!("{at}{bit}"), labels, leaves)?;
    }
    Ok(())
}

/// `∃x0 ⋀_n ⋁_{u} ⋀S_u(x0)`, with `n` over the levels of the tree and `u` over the
/// frontier at level `n`. Levels where some label is empty are true and left out.
pub fn phi_star(tree: &SeparatingTree) -> Arc<Formula> {
    let mut levels = Vec::new();
    for n in 0..=tree.depth() {
        let frontier = tree.frontier(n);
        if frontier.iter().any(|u| tree.nodes[*u].is_empty()) {
            continue;
        }
        let mut branches: Vec<Arc<Formula>> = frontier
            .iter()
            .map(|u| {
                let label = &tree.nodes[*u];
                if label.len() == 1 {
                    label[0].clone()
                } else {
                    build::and(label.clone())
                }
            })
            .collect();
        levels.push(if branches.len() == 1 { branches.pop().unwrap() } else { build::or(branches) });
    }
    let body = match levels.len() {
        0 => build::eq(&tree.var, &tree.var),
        1 => levels.pop().unwrap(),
        _ => build::and(levels),
    };
    build::exists(&tree.var, body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_models, parse_formula, Signature};

    fn f(s: &str) -> Arc<Formula> {
        parse_formula(s).unwrap()
    }

    fn id(i: usize) -> TypeId {
        TypeId { level: 0, class_index: i }
    }

    fn space() -> ModelSpace {
        enumerate_models(&Signature::from_pairs([("P", 1), ("Q", 1)]).unwrap(), 2).unwrap()
    }

    #[test]
    fn single_type() {
        let s = space();
        let ty = vec![TypeSpec { id: id(0), formulas: vec![f("(atom P x0)")] }];
        let tree = build_separating_tree(&ty, &s).unwrap();
        assert!(tree.nodes[""].is_empty());
        assert_eq!(tree.leaves, BTreeMap::from([("0".to_string(), 0)]));
        assert_eq!(phi_star(&tree).to_string(), "(exists x0 (atom P x0))");
        assert!(tree.check(&ty, &s).unwrap().passed());
    }

    #[test]
    fn two_types_split_on_their_difference() {
        let s = space();
        let ty = vec![
            TypeSpec { id: id(0), formulas: vec![f("(atom P x0)")] },
            TypeSpec { id: id(1), formulas: vec![f("(not (atom P x0))")] },
        ];
        let tree = build_separating_tree(&ty, &s).unwrap();
        assert_eq!(tree.nodes["0"], vec![f("(atom P x0)")]);
        assert_eq!(tree.nodes["1"], vec![f("(not (atom P x0))")]);
        assert!(tree.check(&ty, &s).unwrap().passed());
    }

    #[test]
    fn three_types_and_phi_star() {
        let s = space();
        let signs = |p: bool, q: bool| {
            let lit = |name: &str, pos: bool| {
                let a = format!("(atom {name} x0)");
                f(&if pos { a } else { format!("(not {a})") })
            };
            vec![lit("P", p), lit("Q", q)]
        };
        let ty: Vec<TypeSpec> = [(true, true), (true, false), (false, true)]
            .into_iter()
            .enumerate()
            .map(|(i, (p, q))| TypeSpec { id: id(i), formulas: signs(p, q) })
            .collect();
        let tree = build_separating_tree(&ty, &s).unwrap();
        assert!(tree.check(&ty, &s).unwrap().passed());
        let star = phi_star(&tree);
        let models = s.satisfying(&star).unwrap();
        // the three sign patterns cover exactly the elements in P or Q
        let direct = f("(exists x0 (or (atom P x0) (atom Q x0)))");
        assert_eq!(models, s.satisfying(&direct).unwrap());
    }

    #[test]
    fn errors() {
        let s = space();
        let p = TypeSpec { id: id(0), formulas: vec![f("(atom P x0)")] };
        assert!(matches!(
            build_separating_tree(&[p.clone(), p.clone()], &s),
            Err(TransformError::DuplicateTypes { first: 0, second: 1 })
        ));
        let q = TypeSpec { id: id(1), formulas: vec![f("(atom Q x0)")] };
        assert!(matches!(build_separating_tree(&[p.clone(), q], &s), Err(TransformError::Inseparable { .. })));
        let never = TypeSpec { id: id(1), formulas: vec![f("(and (atom P x0) (not (atom P x0)))")] };
        assert!(matches!(build_separating_tree(&[p, never], &s), Err(TransformError::Unrealized(1))));
    }
}
