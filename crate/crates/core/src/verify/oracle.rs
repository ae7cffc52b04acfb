//! Brute-force ground truth. Nothing here reuses the refinement or canonical-form code.

use std::collections::HashMap;

use super::VerifyError;
use crate::model::Structure;

/// Resource caps for [`TypeOracle`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleCaps {
    pub max_level: usize,
    pub max_size: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self {
            max_level: 6,
            max_size: 4,
        }
    }
}

/// The type recursion run literally on one pair of structures, memoized on
/// (level, left tuple, right tuple).
///
/// Level 0 compares atomic types. Level `k+1` holds when level `k` holds and every
/// one-element extension on either side is matched at level `k` by one on the other side.
pub struct TypeOracle<'a> {
    m: &'a Structure,
    n: &'a Structure,
    caps: OracleCaps,
    memo: HashMap<(u8, u64, u64), bool>,
}

/// Four bits per entry, length in the top byte.
fn pack(t: &[usize]) -> u64 {
    t.iter()
        .enumerate()
        .fold((t.len() as u64) << 56, |acc, (i, &e)| acc | (e as u64) << (4 * i))
}

impl<'a> TypeOracle<'a> {
    pub fn new(m: &'a Structure, n: &'a Structure, caps: OracleCaps) -> Result<Self, VerifyError> {
        if m.signature() != n.signature() {
            return Err(VerifyError::SignatureMismatch);
        }
        for s in [m, n] {
            if s.size() > caps.max_size {
                return Err(VerifyError::SizeCap {
                    size: s.size(),
                    cap: caps.max_size,
                });
            }
        }
        Ok(Self {
            m,
            n,
            caps,
            memo: HashMap::new(),
        })
    }

    pub fn equal(&mut self, a: &[usize], b: &[usize], level: usize) -> Result<bool, VerifyError> {
        if a.len() != b.len() {
            return Err(VerifyError::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        if level > self.caps.max_level {
            return Err(VerifyError::LevelCap {
                level,
                cap: self.caps.max_level,
            });
        }
        if a.len() + level > 14 {
            return Err(VerifyError::TupleTooLong(a.len()));
        }
        for (t, s) in [(a, self.m), (b, self.n)] {
            if let Some(&e) = t.iter().find(|&&e| e >= s.size()) {
                return Err(VerifyError::ElementOutOfRange { element: e, size: s.size() });
            }
        }
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        Ok(self.go(&mut a, &mut b, level))
    }

    fn atomic(&self, a: &[usize], b: &[usize]) -> bool {
        for i in 0..a.len() {
            for j in 0..a.len() {
                if (a[i] == a[j]) != (b[i] == b[j]) {
                    return false;
                }
            }
        }
        let sig = self.m.signature();
        if a.is_empty() {
            return true;
        }
        for r in 0..sig.len() {
            let arity = sig.arity(r);
            let mut idx = vec![0usize; arity];
            'maps: loop {
                let x: Vec<usize> = idx.iter().map(|&i| a[i]).collect();
                let y: Vec<usize> = idx.iter().map(|&i| b[i]).collect();
                if self.m.holds(r, &x) != self.n.holds(r, &y) {
                    return false;
                }
                for slot in (0..arity).rev() {
                    idx[slot] += 1;
                    if idx[slot] < a.len() {
                        continue 'maps;
                    }
                    idx[slot] = 0;
                }
                break;
            }
        }
        true
    }

    fn go(&mut self, a: &mut Vec<usize>, b: &mut Vec<usize>, level: usize) -> bool {
        if level == 0 {
            return self.atomic(a, b);
        }
        let key = (level as u8, pack(a), pack(b));
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = self.go(a, b, level - 1) && self.forth(a, b, level - 1, false) && self.forth(a, b, level - 1, true);
        self.memo.insert(key, v);
        v
    }

    /// Every extension of the left tuple (or the right one, when `back`) is matched.
    fn forth(&mut self, a: &mut Vec<usize>, b: &mut Vec<usize>, level: usize, back: bool) -> bool {
        let (from, to) = if back { (self.n.size(), self.m.size()) } else { (self.m.size(), self.n.size()) };
        for c in 0..from {
            let mut matched = false;
            for d in 0..to {
                let (x, y) = if back { (d, c) } else { (c, d) };
                a.push(x);
                b.push(y);
                matched = self.go(a, b, level);
                a.pop();
                b.pop();
                if matched {
                    break;
                }
            }
            if !matched {
                return false;
            }
        }
        true
    }
}

/// [`TypeOracle`] for a single query at the default caps.
pub fn oracle_types_equal(m: &Structure, a: &[usize], n: &Structure, b: &[usize], alpha: usize) -> Result<bool, VerifyError> {
    TypeOracle::new(m, n, OracleCaps::default())?.equal(a, b, alpha)
}

/// Largest universe [`oracle_isomorphic`] accepts.
pub const ISOMORPHISM_SIZE_CAP: usize = 8;

/// Exhaustive search for an isomorphism; returns `bijection[e]` = image of `e` in `n`.
pub fn oracle_isomorphic(m: &Structure, n: &Structure) -> Result<Option<Vec<usize>>, VerifyError> {
    for s in [m, n] {
        if s.size() > ISOMORPHISM_SIZE_CAP {
            return Err(VerifyError::SizeCap {
                size: s.size(),
                cap: ISOMORPHISM_SIZE_CAP,
            });
        }
    }
    if m.signature() != n.signature() || m.size() != n.size() {
        return Ok(None);
    }
    let facts: Vec<(usize, Vec<usize>)> = (0..m.signature().len())
        .flat_map(|r| m.tuples(r).into_iter().map(move |t| (r, t)))
        .collect();
    let counts: Vec<usize> = (0..m.signature().len()).map(|r| n.tuples(r).len()).collect();
    for (r, &count) in counts.iter().enumerate() {
        if facts.iter().filter(|(q, _)| *q == r).count() != count {
            return Ok(None);
        }
    }
    // same tuple counts, so an injective fact map is onto
    let preserves = |p: &[usize]| {
        facts.iter().all(|(r, t)| {
            let image: Vec<usize> = t.iter().map(|&e| p[e]).collect();
            n.holds(*r, &image)
        })
    };
    // Heap's algorithm
    let size = m.size();
    let mut p: Vec<usize> = (0..size).collect();
    if preserves(&p) {
        return Ok(Some(p));
    }
    let mut c = vec![0usize; size];
    let mut i = 0;
    while i < size {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            if preserves(&p) {
                return Ok(Some(p));
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Signature;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Structure {
        let sig = Signature::from_pairs([("R", 2)]).unwrap();
        Structure::from_tuples(sig, n, [("R", edges.iter().map(|&(a, b)| vec![a, b]))]).unwrap()
    }

    #[test]
    fn cycles_and_orders() {
        let c3 = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let c4 = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(oracle_types_equal(&c3, &[], &c4, &[], 1).unwrap());
        assert!(!oracle_types_equal(&c3, &[], &c4, &[], 2).unwrap());
        let o = graph(2, &[(0, 1)]);
        assert!(oracle_types_equal(&o, &[0], &o, &[1], 0).unwrap());
        assert!(!oracle_types_equal(&o, &[0], &o, &[1], 1).unwrap());
        assert!(oracle_types_equal(&o, &[0, 1], &o, &[0, 1], 4).unwrap());
        assert!(!oracle_types_equal(&o, &[0, 1], &o, &[1, 0], 0).unwrap());
    }

    #[test]
    fn caps_are_enforced() {
        let big = graph(5, &[]);
        assert!(matches!(oracle_types_equal(&big, &[], &big, &[], 1), Err(VerifyError::SizeCap { .. })));
        let o = graph(2, &[(0, 1)]);
        assert!(matches!(oracle_types_equal(&o, &[], &o, &[], 7), Err(VerifyError::LevelCap { .. })));
        assert!(matches!(oracle_types_equal(&o, &[0], &o, &[], 1), Err(VerifyError::LengthMismatch { .. })));
    }

    #[test]
    fn isomorphism_search() {
        let c3 = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let relabelled = c3.permuted(&[2, 0, 1]);
        let iso = oracle_isomorphic(&c3, &relabelled).unwrap().unwrap();
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            assert!(relabelled.holds(0, &[iso[a], iso[b]]));
        }
        let path = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(oracle_isomorphic(&c3, &path).unwrap(), None);
        assert_eq!(oracle_isomorphic(&c3, &graph(4, &[])).unwrap(), None);
        assert!(oracle_isomorphic(&graph(9, &[]), &graph(9, &[])).is_err());
    }
}
