use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::{Formula, ModelError, Signature, Structure};

/// Variable assignment for formulas with free variables.
pub type Assignment = BTreeMap<String, usize>;

/// Evaluates `formula` in `m` under `assignment`.
///
/// Standard Tarskian semantics over the nonempty universe `0..m.size()`; the empty
/// conjunction is true and the empty disjunction false.
pub fn eval(m: &Structure, formula: &Arc<Formula>, assignment: &Assignment) -> Result<bool, ModelError> {
    CompiledFormula::compile(formula, m.signature())?.eval(m, assignment)
}

type Slot = u16;
type NodeId = u32;

#[derive(Debug)]
enum Node {
    Atom { rel: usize, args: Vec<Slot> },
    Eq(Slot, Slot),
    Not(NodeId),
    And(Vec<NodeId>),
    Or(Vec<NodeId>),
    Exists(Slot, NodeId),
    Forall(Slot, NodeId),
}

/// A formula resolved against a signature: relations become indices, variables become
/// slots, and shared subtrees become shared nodes whose values are memoized per evaluation.
#[derive(Debug)]
pub struct CompiledFormula {
    signature: Signature,
    nodes: Vec<Node>,
    free: Vec<Vec<Slot>>,
    shared: Vec<bool>,
    root: NodeId,
    slots: Vec<String>,
}

struct Compiler<'a> {
    sig: &'a Signature,
    nodes: Vec<Node>,
    free: Vec<Vec<Slot>>,
    parents: Vec<u32>,
    by_ptr: HashMap<*const Formula, NodeId>,
    slot_of: HashMap<String, Slot>,
    slots: Vec<String>,
}

impl Compiler<'_> {
    fn slot(&mut self, name: &str) -> Slot {
        if let Some(&s) = self.slot_of.get(name) {
            return s;
        }
        let s = self.slots.len() as Slot;
        self.slots.push(name.to_string());
        self.slot_of.insert(name.to_string(), s);
        s
    }

    fn push(&mut self, node: Node, free: Vec<Slot>) -> NodeId {
        self.nodes.push(node);
        self.free.push(free);
        self.parents.push(0);
        (self.nodes.len() - 1) as NodeId
    }

    fn child(&mut self, f: &Arc<Formula>) -> Result<NodeId, ModelError> {
        let id = self.compile(f)?;
        self.parents[id as usize] += 1;
        Ok(id)
    }

    fn union(&self, ids: &[NodeId]) -> Vec<Slot> {
        let mut out: Vec<Slot> = ids.iter().flat_map(|&i| self.free[i as usize].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn compile(&mut self, f: &Arc<Formula>) -> Result<NodeId, ModelError> {
        if let Some(&id) = self.by_ptr.get(&Arc::as_ptr(f)) {
            return Ok(id);
        }
        let id = match &**f {
            Formula::Atom { rel, args } => {
                let r = self
                    .sig
                    .index_of(rel)
                    .ok_or_else(|| ModelError::UnknownRelation(rel.clone()))?;
                let arity = self.sig.arity(r);
                if arity != args.len() {
                    return Err(ModelError::ArityMismatch {
                        relation: rel.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                let args: Vec<Slot> = args.iter().map(|a| self.slot(a)).collect();
                let mut free = args.clone();
                free.sort_unstable();
                free.dedup();
                self.push(Node::Atom { rel: r, args }, free)
            }
            Formula::Eq(x, y) => {
                let (x, y) = (self.slot(x), self.slot(y));
                let mut free = vec![x, y];
                free.sort_unstable();
                free.dedup();
                self.push(Node::Eq(x, y), free)
            }
            Formula::Not(c) => {
                let c = self.child(c)?;
                let free = self.free[c as usize].clone();
                self.push(Node::Not(c), free)
            }
            Formula::And(cs) | Formula::Or(cs) => {
                let ids = cs.iter().map(|c| self.child(c)).collect::<Result<Vec<_>, _>>()?;
                let free = self.union(&ids);
                let node = if matches!(&**f, Formula::And(_)) {
                    Node::And(ids)
                } else {
                    Node::Or(ids)
                };
                self.push(node, free)
            }
            Formula::Exists(x, c) | Formula::Forall(x, c) => {
                let s = self.slot(x);
                let c = self.child(c)?;
                let free: Vec<Slot> = self.free[c as usize].iter().copied().filter(|&v| v != s).collect();
                let node = if matches!(&**f, Formula::Exists(..)) {
                    Node::Exists(s, c)
                } else {
                    Node::Forall(s, c)
                };
                self.push(node, free)
            }
        };
        self.by_ptr.insert(Arc::as_ptr(f), id);
        Ok(id)
    }
}

impl CompiledFormula {
    pub fn compile(formula: &Arc<Formula>, signature: &Signature) -> Result<Self, ModelError> {
        let mut c = Compiler {
            sig: signature,
            nodes: Vec::new(),
            free: Vec::new(),
            parents: Vec::new(),
            by_ptr: HashMap::new(),
            slot_of: HashMap::new(),
            slots: Vec::new(),
        };
        let root = c.compile(formula)?;
        // literals are cheaper to evaluate than to look up
        let shared = c
            .parents
            .iter()
            .zip(&c.nodes)
            .map(|(&p, node)| {
                p > 1
                    && match node {
                        Node::Atom { .. } | Node::Eq(..) => false,
                        Node::Not(inner) => !matches!(c.nodes[*inner as usize], Node::Atom { .. } | Node::Eq(..)),
                        _ => true,
                    }
            })
            .collect();
        Ok(Self {
            signature: signature.clone(),
            nodes: c.nodes,
            free: c.free,
            shared,
            root,
            slots: c.slots,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Names of the free variables of the whole formula, sorted.
    pub fn free_vars(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.free[self.root as usize]
            .iter()
            .map(|&s| self.slots[s as usize].as_str())
            .collect();
        v.sort_unstable();
        v
    }

    pub fn is_sentence(&self) -> bool {
        self.free[self.root as usize].is_empty()
    }

    pub fn eval(&self, m: &Structure, assignment: &Assignment) -> Result<bool, ModelError> {
        if m.signature() != &self.signature {
            return Err(ModelError::SignatureMismatch);
        }
        let mut env = vec![0usize; self.slots.len()];
        for &s in &self.free[self.root as usize] {
            let name = &self.slots[s as usize];
            let &e = assignment
                .get(name)
                .ok_or_else(|| ModelError::UnboundVariable(name.clone()))?;
            if e >= m.size() {
                return Err(ModelError::AssignmentOutOfRange {
                    var: name.clone(),
                    element: e,
                    size: m.size(),
                });
            }
            env[s as usize] = e;
        }
        Ok(self.run(m, env))
    }

    /// Evaluates a sentence; free variables are an error.
    pub fn holds_in(&self, m: &Structure) -> Result<bool, ModelError> {
        self.eval(m, &Assignment::new())
    }

    fn run(&self, m: &Structure, env: Vec<usize>) -> bool {
        let mut ctx = Ctx {
            f: self,
            m,
            env,
            memo: HashMap::new(),
            memo_ok: m.size() <= 256,
        };
        ctx.go(self.root)
    }
}

struct Ctx<'a> {
    f: &'a CompiledFormula,
    m: &'a Structure,
    env: Vec<usize>,
    memo: HashMap<(NodeId, u128), bool>,
    memo_ok: bool,
}

impl Ctx<'_> {
    fn key(&self, id: NodeId) -> Option<u128> {
        let free = &self.f.free[id as usize];
        if !self.memo_ok || free.len() > 16 {
            return None;
        }
        Some(free.iter().fold(0u128, |k, &s| (k << 8) | self.env[s as usize] as u128))
    }

    fn go(&mut self, id: NodeId) -> bool {
        let key = if self.f.shared[id as usize] { self.key(id) } else { None };
        if let Some(k) = key {
            if let Some(&v) = self.memo.get(&(id, k)) {
                return v;
            }
        }
        let v = match &self.f.nodes[id as usize] {
            Node::Atom { rel, args } => {
                let n = self.m.size();
                let cell = args.iter().fold(0, |acc, &s| acc * n + self.env[s as usize]);
                self.m.cell_value(*rel, cell)
            }
            Node::Eq(x, y) => self.env[*x as usize] == self.env[*y as usize],
            Node::Not(c) => !self.go(*c),
            Node::And(cs) => cs.iter().all(|&c| self.go(c)),
            Node::Or(cs) => cs.iter().any(|&c| self.go(c)),
            Node::Exists(s, c) => self.quantify(*s, *c, true),
            Node::Forall(s, c) => !self.quantify(*s, *c, false),
        };
        if let Some(k) = key {
            self.memo.insert((id, k), v);
        }
        v
    }

    /// Searches for an element making the body evaluate to `target`.
    fn quantify(&mut self, slot: Slot, body: NodeId, target: bool) -> bool {
        let saved = self.env[slot as usize];
        let mut found = false;
        for e in 0..self.m.size() {
            self.env[slot as usize] = e;
            if self.go(body) == target {
                found = true;
                break;
            }
        }
        self.env[slot as usize] = saved;
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build::*;
    use crate::model::parse_formula;

    fn cycle(n: usize) -> Structure {
        let sig = Signature::from_pairs([("R", 2)]).unwrap();
        Structure::from_tuples(sig, n, [("R", (0..n).map(|i| vec![i, (i + 1) % n]))]).unwrap()
    }

    fn holds(m: &Structure, src: &str) -> bool {
        eval(m, &parse_formula(src).unwrap(), &Assignment::new()).unwrap()
    }

    #[test]
    fn cycle_examples() {
        let c3 = cycle(3);
        assert!(holds(&c3, "(forall x (exists y (atom R x y)))"));
        assert!(!holds(&c3, "(exists x (atom R x x))"));
        assert!(holds(&c3, "(and)"));
        assert!(!holds(&c3, "(or)"));
    }

    #[test]
    fn shadowing_restores_outer_binding() {
        let c3 = cycle(3);
        // the inner x shadows the outer one, after which the outer x is visible again
        let f = "(exists x (and (exists x (atom R x x)) (eq x x)))";
        assert!(!holds(&c3, f));
        let g = "(forall x (or (exists x (atom R x x)) (exists y (atom R x y))))";
        assert!(holds(&c3, g));
    }

    #[test]
    fn free_variables_need_an_assignment() {
        let c3 = cycle(3);
        let f = atom("R", &["x", "y"]);
        let a: Assignment = [("x".to_string(), 0), ("y".to_string(), 1)].into_iter().collect();
        assert!(eval(&c3, &f, &a).unwrap());
        let b: Assignment = [("x".to_string(), 1), ("y".to_string(), 0)].into_iter().collect();
        assert!(!eval(&c3, &f, &b).unwrap());
        let err = eval(&c3, &f, &Assignment::new()).unwrap_err();
        assert_eq!(err, ModelError::UnboundVariable("x".into()));
        assert!(err.is_malformed());
    }

    #[test]
    fn arity_and_unknown_relation_are_malformed() {
        let c3 = cycle(3);
        let e = eval(&c3, &parse_formula("(exists x (atom R x))").unwrap(), &Assignment::new()).unwrap_err();
        assert!(matches!(e, ModelError::ArityMismatch { expected: 2, found: 1, .. }));
        let e = eval(&c3, &parse_formula("(exists x (atom P x))").unwrap(), &Assignment::new()).unwrap_err();
        assert_eq!(e, ModelError::UnknownRelation("P".into()));
    }

    #[test]
    fn shared_subtrees_evaluate_like_trees() {
        let c4 = cycle(4);
        let step = exists("y", and(vec![atom("R", &["x", "y"]), atom("R", &["y", "x"])]));
        let shared = forall("x", or(vec![step.clone(), not(step.clone()), step]));
        assert!(eval(&c4, &shared, &Assignment::new()).unwrap());
        let two_step = forall(
            "x",
            exists("y", and(vec![atom("R", &["x", "y"]), exists("x", atom("R", &["y", "x"]))])),
        );
        assert!(eval(&c4, &two_step, &Assignment::new()).unwrap());
    }
}
