//! Materialized type formulas `φ^{a,M}_k`.
//!
//! Variables are positional: coordinate `i` of a tuple is `x{i}`. The successor step
//! quantifies over blocks of new variables, with the total tuple length capped at `|M|+1`.
//! That cap keeps the `∀`-block over `|M|+1` fresh elements, which bounds the size of any
//! model, and together with the `∃`-block over a full enumeration pins `M` up to
//! isomorphism from level 1 on.
//!
//! Subformulas are hash-consed, so equal types share one node, and block members are
//! ordered by structural digest, so the output does not depend on element names.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::{decode, ScottError};
use crate::model::{Formula, FormulaDigest, Structure};

/// Largest universe for which Scott sentences are built by default.
pub const DEFAULT_MATERIALIZE_CAP: usize = 4;

struct Builder<'m> {
    m: &'m Structure,
    limit: usize,
    vars: Vec<String>,
    digest: FormulaDigest,
    interned: HashMap<u64, Vec<Arc<Formula>>>,
    memo: HashMap<(Vec<usize>, usize), Arc<Formula>>,
}

impl<'m> Builder<'m> {
    fn new(m: &'m Structure, longest: usize) -> Self {
        let limit = m.size() + 1;
        Self {
            m,
            limit,
            vars: (0..limit.max(longest)).map(|i| format!("x{i}")).collect(),
            digest: FormulaDigest::new(),
            interned: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    fn intern(&mut self, f: Formula) -> Arc<Formula> {
        let f = Arc::new(f);
        let d = self.digest.digest(&f);
        let bucket = self.interned.entry(d).or_default();
        if let Some(same) = bucket.iter().find(|g| **g == f) {
            return same.clone();
        }
        bucket.push(f.clone());
        f
    }

    /// Sorts by digest and drops repeats, keeping first occurrences.
    fn canonical(&mut self, mut fs: Vec<Arc<Formula>>) -> Vec<Arc<Formula>> {
        let mut seen = HashSet::new();
        fs.retain(|f| seen.insert(Arc::as_ptr(f)));
        let mut keyed: Vec<(u64, Arc<Formula>)> = fs.into_iter().map(|f| (self.digest.digest(&f), f)).collect();
        keyed.sort_by_key(|(d, _)| *d);
        keyed.into_iter().map(|(_, f)| f).collect()
    }

    fn literals(&mut self, t: &[usize]) -> Arc<Formula> {
        let mut lits = Vec::new();
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                let e = self.intern(Formula::Eq(self.vars[i].clone(), self.vars[j].clone()));
                lits.push(if t[i] == t[j] { e } else { self.intern(Formula::Not(e)) });
            }
        }
        let sig = self.m.signature().clone();
        for (r, sym) in sig.relations().iter().enumerate() {
            for map in 0..t.len().pow(sym.arity as u32) {
                let coords = decode(map, sym.arity, t.len());
                let args: Vec<usize> = coords.iter().map(|&c| t[c]).collect();
                let a = self.intern(Formula::Atom {
                    rel: sym.name.clone(),
                    args: coords.iter().map(|&c| self.vars[c].clone()).collect(),
                });
                lits.push(if self.m.holds(r, &args) { a } else { self.intern(Formula::Not(a)) });
            }
        }
        self.intern(Formula::And(lits))
    }

    fn quantify(&mut self, exists: bool, from: usize, to: usize, body: Arc<Formula>) -> Arc<Formula> {
        (from..to).rev().fold(body, |acc, i| {
            let x = self.vars[i].clone();
            self.intern(if exists { Formula::Exists(x, acc) } else { Formula::Forall(x, acc) })
        })
    }

    fn node(&mut self, t: &[usize], k: usize) -> Arc<Formula> {
        if let Some(f) = self.memo.get(&(t.to_vec(), k)) {
            return f.clone();
        }
        let f = if k == 0 {
            self.literals(t)
        } else {
            let len = t.len();
            let n = self.m.size();
            let mut parts = vec![self.node(t, k - 1)];
            let mut witnessed = Vec::new();
            let mut universal = Vec::new();
            for extra in 1..=self.limit.saturating_sub(len) {
                let mut bodies = Vec::new();
                let mut complete = Vec::new();
                let mut ext = t.to_vec();
                for code in 0..n.pow(extra as u32) {
                    ext.truncate(len);
                    ext.extend(decode(code, extra, n));
                    let body = self.node(&ext, k - 1);
                    if len + extra == n && (0..n).all(|e| ext.contains(&e)) {
                        complete.push(body.clone());
                    }
                    bodies.push(body);
                }
                let bodies = self.canonical(bodies);
                let mut exists = Vec::new();
                for b in &bodies {
                    exists.push(self.quantify(true, len, len + extra, b.clone()));
                }
                let exists = self.canonical(exists);
                // the witnesses of a full enumeration of M reject most structures at once
                if complete.is_empty() {
                    witnessed.push(exists);
                } else {
                    let mut first = Vec::new();
                    for b in self.canonical(complete) {
                        first.push(self.quantify(true, len, len + extra, b));
                    }
                    let rest = exists.into_iter().filter(|f| !first.iter().any(|g| Arc::ptr_eq(f, g))).collect();
                    witnessed.insert(0, rest);
                    witnessed.insert(0, first);
                }
                let or = self.intern(Formula::Or(bodies));
                universal.push(self.quantify(false, len, len + extra, or));
            }
            parts.extend(witnessed.into_iter().flatten());
            parts.extend(universal);
            if parts.len() == 1 {
                parts.pop().unwrap()
            } else {
                self.intern(Formula::And(parts))
            }
        };
        self.memo.insert((t.to_vec(), k), f.clone());
        f
    }
}

pub(super) fn build_type_formula(m: &Structure, tuple: &[usize], level: usize) -> Arc<Formula> {
    Builder::new(m, tuple.len()).node(tuple, level)
}

/// The level-`level` type formula of `tuple` in `m`, with free variables `x0..`.
pub fn type_formula(m: &Structure, tuple: &[usize], level: usize, cap: usize) -> Result<Arc<Formula>, ScottError> {
    if m.size() > cap {
        return Err(ScottError::MaterializationRefused { size: m.size(), cap });
    }
    if let Some(&e) = tuple.iter().find(|&&e| e >= m.size()) {
        return Err(ScottError::ElementOutOfRange { element: e, size: m.size() });
    }
    Ok(build_type_formula(m, tuple, level))
}
