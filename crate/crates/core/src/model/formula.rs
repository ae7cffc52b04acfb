use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub type Var = String;

/// Formula AST. Children sit behind `Arc` so large formulas (Scott sentences in particular)
/// can share subtrees; every traversal in this crate memoizes on node identity.
///
/// `And`/`Or` take finite lists standing in for countable conjunction and disjunction. The
/// empty conjunction is true and the empty disjunction is false.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Atom { rel: String, args: Vec<Var> },
    Eq(Var, Var),
    Not(Arc<Formula>),
    And(Vec<Arc<Formula>>),
    Or(Vec<Arc<Formula>>),
    Exists(Var, Arc<Formula>),
    Forall(Var, Arc<Formula>),
}

/// Shorthand constructors returning shared nodes.
pub mod build {
    use super::*;

    pub fn atom(rel: &str, args: &[&str]) -> Arc<Formula> {
        Arc::new(Formula::Atom {
            rel: rel.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        })
    }

    pub fn eq(x: &str, y: &str) -> Arc<Formula> {
        Arc::new(Formula::Eq(x.to_string(), y.to_string()))
    }

    pub fn not(f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Not(f))
    }

    pub fn and(fs: Vec<Arc<Formula>>) -> Arc<Formula> {
        Arc::new(Formula::And(fs))
    }

    pub fn or(fs: Vec<Arc<Formula>>) -> Arc<Formula> {
        Arc::new(Formula::Or(fs))
    }

    pub fn exists(x: &str, f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Exists(x.to_string(), f))
    }

    pub fn forall(x: &str, f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Forall(x.to_string(), f))
    }

    pub fn implies(a: Arc<Formula>, b: Arc<Formula>) -> Arc<Formula> {
        or(vec![not(a), b])
    }

    pub fn iff(a: Arc<Formula>, b: Arc<Formula>) -> Arc<Formula> {
        and(vec![implies(a.clone(), b.clone()), implies(b, a)])
    }

    /// `∃x x≠x`, the canonical contradiction.
    pub fn falsum() -> Arc<Formula> {
        exists("x", not(eq("x", "x")))
    }

    /// `∃x x=x`, valid under nonempty domains.
    pub fn verum() -> Arc<Formula> {
        exists("x", eq("x", "x"))
    }
}

impl Formula {
    pub fn children(&self) -> &[Arc<Formula>] {
        match self {
            Formula::Atom { .. } | Formula::Eq(..) => &[],
            Formula::Not(c) | Formula::Exists(_, c) | Formula::Forall(_, c) => std::slice::from_ref(c),
            Formula::And(cs) | Formula::Or(cs) => cs,
        }
    }

    /// Free variables, computed with sharing taken into account.
    pub fn free_vars(self: &Arc<Self>) -> BTreeSet<Var> {
        let mut memo = HashMap::new();
        free_vars_memo(self, &mut memo)
    }

    pub fn is_sentence(self: &Arc<Self>) -> bool {
        self.free_vars().is_empty()
    }

    /// Number of nodes in the fully expanded tree (saturating).
    pub fn tree_size(self: &Arc<Self>) -> u64 {
        fn go(f: &Arc<Formula>, memo: &mut HashMap<*const Formula, u64>) -> u64 {
            if let Some(&n) = memo.get(&Arc::as_ptr(f)) {
                return n;
            }
            let n = f
                .children()
                .iter()
                .fold(1u64, |acc, c| acc.saturating_add(go(c, memo)));
            memo.insert(Arc::as_ptr(f), n);
            n
        }
        go(self, &mut HashMap::new())
    }

    /// Number of distinct nodes reachable from this one.
    pub fn dag_size(self: &Arc<Self>) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(f) = stack.pop() {
            if seen.insert(Arc::as_ptr(&f)) {
                stack.extend(f.children().iter().cloned());
            }
        }
        seen.len()
    }

    /// Maximum nesting depth; atoms have depth 1.
    pub fn depth(self: &Arc<Self>) -> usize {
        fn go(f: &Arc<Formula>, memo: &mut HashMap<*const Formula, usize>) -> usize {
            if let Some(&d) = memo.get(&Arc::as_ptr(f)) {
                return d;
            }
            let d = 1 + f.children().iter().map(|c| go(c, memo)).max().unwrap_or(0);
            memo.insert(Arc::as_ptr(f), d);
            d
        }
        go(self, &mut HashMap::new())
    }
}

fn free_vars_memo(f: &Arc<Formula>, memo: &mut HashMap<*const Formula, BTreeSet<Var>>) -> BTreeSet<Var> {
    if let Some(v) = memo.get(&Arc::as_ptr(f)) {
        return v.clone();
    }
    let out = match &**f {
        Formula::Atom { args, .. } => args.iter().cloned().collect(),
        Formula::Eq(x, y) => [x.clone(), y.clone()].into_iter().collect(),
        Formula::Not(c) => free_vars_memo(c, memo),
        Formula::And(cs) | Formula::Or(cs) => {
            let mut s = BTreeSet::new();
            for c in cs {
                s.extend(free_vars_memo(c, memo));
            }
            s
        }
        Formula::Exists(x, c) | Formula::Forall(x, c) => {
            let mut s = free_vars_memo(c, memo);
            s.remove(x);
            s
        }
    };
    memo.insert(Arc::as_ptr(f), out.clone());
    out
}

/// Structural (Merkle) digests of formulas, memoized on node identity.
///
/// Equal digests are used as a fast proxy for structural equality; callers that need
/// certainty fall back to `==`.
#[derive(Default)]
pub struct FormulaDigest {
    memo: HashMap<*const Formula, (Arc<Formula>, u64)>,
}

impl FormulaDigest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn digest(&mut self, f: &Arc<Formula>) -> u64 {
        if let Some((_, d)) = self.memo.get(&Arc::as_ptr(f)) {
            return *d;
        }
        let mut h = DefaultHasher::new();
        match &**f {
            Formula::Atom { rel, args } => (0u8, rel, args).hash(&mut h),
            Formula::Eq(x, y) => (1u8, x, y).hash(&mut h),
            Formula::Not(_) => 2u8.hash(&mut h),
            Formula::And(_) => 3u8.hash(&mut h),
            Formula::Or(_) => 4u8.hash(&mut h),
            Formula::Exists(x, _) => (5u8, x).hash(&mut h),
            Formula::Forall(x, _) => (6u8, x).hash(&mut h),
        }
        for c in f.children() {
            self.digest(c).hash(&mut h);
        }
        let d = h.finish();
        self.memo.insert(Arc::as_ptr(f), (f.clone(), d));
        d
    }
}

impl fmt::Display for Formula {
    /// Writes the s-expression form, expanding shared subtrees.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { rel, args } => {
                write!(f, "(atom {rel}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Formula::Eq(x, y) => write!(f, "(eq {x} {y})"),
            Formula::Not(c) => write!(f, "(not {c})"),
            Formula::And(cs) | Formula::Or(cs) => {
                let head = if matches!(self, Formula::And(_)) { "and" } else { "or" };
                write!(f, "({head}")?;
                for c in cs {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
            Formula::Exists(x, c) => write!(f, "(exists {x} {c})"),
            Formula::Forall(x, c) => write!(f, "(forall {x} {c})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::build::*;
    use super::*;

    #[test]
    fn free_vars_respect_binding() {
        let f = exists("x", and(vec![atom("R", &["x", "y"]), eq("x", "z")]));
        let fv: Vec<_> = f.free_vars().into_iter().collect();
        assert_eq!(fv, vec!["y".to_string(), "z".to_string()]);
        assert!(falsum().is_sentence());
    }

    #[test]
    fn sizes_account_for_sharing() {
        let leaf = atom("P", &["x"]);
        let pair = and(vec![leaf.clone(), leaf.clone()]);
        let top = forall("x", or(vec![pair.clone(), pair]));
        assert_eq!(top.tree_size(), 1 + 1 + 2 * 3);
        assert_eq!(top.dag_size(), 4);
        assert_eq!(top.depth(), 4);
    }

    #[test]
    fn digest_is_structural() {
        let mut d = FormulaDigest::new();
        let a = exists("x", atom("P", &["x"]));
        let b = exists("x", atom("P", &["x"]));
        let c = exists("y", atom("P", &["y"]));
        assert_eq!(d.digest(&a), d.digest(&b));
        assert_ne!(d.digest(&a), d.digest(&c));
    }

    #[test]
    fn display_is_sexpr() {
        let f = forall("x", exists("y", and(vec![atom("R", &["x", "y"]), not(eq("x", "y"))])));
        assert_eq!(
            f.to_string(),
            "(forall x (exists y (and (atom R x y) (not (eq x y)))))"
        );
        assert_eq!(and(vec![]).to_string(), "(and)");
    }
}
