//! Seeded instance generators and the check loops run over them.
//!
//! Every suite draws from its own ChaCha stream of the run seed, so suites can be run alone
//! and a fixed seed reproduces the same report bytes.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::model::{build, entails, enumerate_models, eval, Assignment, Formula, FormulaDigest, ModelError, ModelSpace, Signature, Theory};
use crate::scott::{joint_type_partition, type_formula};
use crate::setfam::{case1_transform, case2_transform, families_equivalent, family_is_independent, SetFamily};
use crate::transforms::{
    build_separating_tree, independent_axiomatize_with, partition_transform, phi_star, reznikoff_pairing, TransformError,
    TransformOptions, TypeSpec,
};
use crate::verify::{check_independence, check_theories_equivalent};

/// One unary and one binary relation.
pub fn fuzz_signature() -> Signature {
    Signature::from_pairs([("P", 1), ("R", 2)]).expect("valid signature")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FuzzConfig {
    pub seed: u64,
    pub max_size: usize,
    pub theories: usize,
    pub families: usize,
    pub partitions: usize,
    pub reznikoff: usize,
    pub trees: usize,
    /// Level of the type formulas in tree instances.
    pub tree_level: usize,
    pub materialize_cap: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_size: 3,
            theories: 500,
            families: 1000,
            partitions: 50,
            reznikoff: 100,
            trees: 20,
            tree_level: 2,
            materialize_cap: crate::scott::DEFAULT_MATERIALIZE_CAP,
        }
    }
}

const VARS: [&str; 3] = ["x", "y", "z"];

fn pick<'a>(rng: &mut ChaCha8Rng, scope: &[&'a str]) -> &'a str {
    scope[rng.gen_range(0..scope.len())]
}

fn literal(rng: &mut ChaCha8Rng, scope: &[&str]) -> Arc<Formula> {
    match rng.gen_range(0..4) {
        0 => build::atom("P", &[pick(rng, scope)]),
        1 => build::eq(pick(rng, scope), pick(rng, scope)),
        _ => build::atom("R", &[pick(rng, scope), pick(rng, scope)]),
    }
}

/// A formula of depth at most `budget` whose free variables lie in `scope`.
fn body(rng: &mut ChaCha8Rng, budget: usize, scope: &mut Vec<&'static str>) -> Arc<Formula> {
    if budget <= 1 || rng.gen_bool(0.25) {
        return literal(rng, scope);
    }
    match rng.gen_range(0..6) {
        0 => build::not(body(rng, budget - 1, scope)),
        1 => build::and(vec![body(rng, budget - 1, scope), body(rng, budget - 1, scope)]),
        2 => build::or(vec![body(rng, budget - 1, scope), body(rng, budget - 1, scope)]),
        _ if scope.len() < VARS.len() => {
            let v = VARS[scope.len()];
            scope.push(v);
            let inner = body(rng, budget - 1, scope);
            scope.pop();
            if rng.gen_bool(0.5) {
                build::exists(v, inner)
            } else {
                build::forall(v, inner)
            }
        }
        _ => build::not(literal(rng, scope)),
    }
}

/// A random sentence of depth at most `depth` over [`fuzz_signature`].
pub fn random_sentence(rng: &mut ChaCha8Rng, depth: usize) -> Arc<Formula> {
    let mut scope = vec![VARS[0]];
    let inner = body(rng, depth.saturating_sub(1).max(1), &mut scope);
    if rng.gen_bool(0.5) {
        build::exists(VARS[0], inner)
    } else {
        build::forall(VARS[0], inner)
    }
}

/// `count` sentences drawn until the theory has a model in the space.
pub fn random_consistent_theory(rng: &mut ChaCha8Rng, space: &ModelSpace, count: usize, depth: usize) -> Result<Theory, ModelError> {
    loop {
        let t: Theory = (0..count).map(|_| random_sentence(rng, depth)).collect();
        if !space.model_set(&t)?.is_clear() {
            return Ok(t);
        }
    }
}

/// Universe of 1 to 16 points, up to 8 sets, all containing a common point.
pub fn random_family(rng: &mut ChaCha8Rng) -> SetFamily {
    let universe = rng.gen_range(1..=16);
    let common = rng.gen_range(0..universe);
    let density = rng.gen_range(0.2..0.9);
    let sets = (0..rng.gen_range(0..=8))
        .map(|_| {
            (0..universe)
                .filter(|&e| e == common || rng.gen_bool(density))
                .collect()
        })
        .collect();
    SetFamily::new(universe, sets).expect("elements lie in the universe")
}

/// A theory, a pivot, and blocks partitioning the negated pivot.
#[derive(Clone, Debug)]
pub struct PartitionInstance {
    pub theory: Theory,
    pub pivot: usize,
    pub parts: Vec<Arc<Formula>>,
}

/// Blocks are `¬φ₀ ∧ ¬χ₁ ∧ … ∧ ¬χ_{a-1} ∧ χ_a`, the last one without `χ`, so they are
/// exclusive and exhaustive by construction; draws repeat until every block has a model.
pub fn random_partition_instance(rng: &mut ChaCha8Rng, space: &ModelSpace) -> Result<PartitionInstance, ModelError> {
    loop {
        let n = rng.gen_range(2..=5);
        let theory = random_consistent_theory(rng, space, n, 4)?;
        let pivot = rng.gen_range(0..n);
        let not_pivot = build::not(theory.get(pivot).expect("pivot in range").clone());
        for _ in 0..20 {
            let chis: Vec<Arc<Formula>> = (0..n - 2).map(|_| random_sentence(rng, 3)).collect();
            let parts: Vec<Arc<Formula>> = (0..n - 1)
                .map(|a| {
                    let mut conj = vec![not_pivot.clone()];
                    conj.extend(chis[..a].iter().map(|c| build::not(c.clone())));
                    conj.extend(chis.get(a).cloned());
                    build::and(conj)
                })
                .collect();
            let mut ok = true;
            for p in &parts {
                if space.satisfying(p)?.is_clear() {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(PartitionInstance { theory, pivot, parts });
            }
        }
    }
}

/// A base list of 1 to 4 sentences and at most as many extra sentences.
pub fn random_reznikoff_instance(rng: &mut ChaCha8Rng, space: &ModelSpace) -> Result<(Theory, Theory), ModelError> {
    let n = rng.gen_range(1..=4);
    let c = random_consistent_theory(rng, space, n, 3)?;
    let d: Theory = (0..rng.gen_range(0..=c.len())).map(|_| random_sentence(rng, 3)).collect();
    Ok((c, d))
}

/// Two to six one-variable types from pairwise non-isomorphic structures.
///
/// Type `i` holds its level-`level` type formula, the signed atoms on `x0`, and the negated
/// type formulas of the other types.
pub fn random_tree_instance(rng: &mut ChaCha8Rng, space: &ModelSpace, level: usize, cap: usize) -> Result<Vec<TypeSpec>, TransformError> {
    let k = rng.gen_range(2..=6.min(space.len()));
    let mut picks = sample(rng, space.len(), k).into_vec();
    picks.sort_unstable();
    let models: Vec<_> = picks.iter().map(|&i| space.representatives()[i].clone()).collect();
    let elements: Vec<usize> = models.iter().map(|m| rng.gen_range(0..m.size())).collect();
    let partition = joint_type_partition(&models)?;
    let taus = models
        .iter()
        .zip(&elements)
        .map(|(m, &a)| type_formula(m, &[a], level, cap))
        .collect::<Result<Vec<_>, _>>()?;
    let negated: Vec<Arc<Formula>> = taus.iter().map(|t| build::not(t.clone())).collect();
    let sig = space.signature().clone();
    let atoms: Vec<Arc<Formula>> = sig
        .relations()
        .iter()
        .map(|r| build::atom(&r.name, &vec!["x0"; r.arity]))
        .collect();
    let mut types = Vec::with_capacity(k);
    for (i, (m, &a)) in models.iter().zip(&elements).enumerate() {
        let mut formulas = vec![taus[i].clone()];
        let at: Assignment = [("x0".to_string(), a)].into();
        for atom in &atoms {
            formulas.push(if eval(m, atom, &at)? { atom.clone() } else { build::not(atom.clone()) });
        }
        formulas.extend((0..k).filter(|&j| j != i).map(|j| negated[j].clone()));
        types.push(TypeSpec {
            id: partition.type_of(i, &[a], level)?,
            formulas,
        });
    }
    Ok(types)
}

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub instances: usize,
    pub passed: usize,
    /// Extra counters, such as how many instances exercised an optional branch.
    pub notes: Vec<(String, usize)>,
    /// The first few failures, for diagnosis.
    pub failures: Vec<String>,
    /// SHA-256 over the per-instance records.
    pub digest: String,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.instances
    }
}

struct Suite {
    report: SuiteReport,
    hasher: Sha256,
}

impl Suite {
    fn new(name: &str) -> Self {
        Self {
            report: SuiteReport {
                name: name.into(),
                instances: 0,
                passed: 0,
                notes: Vec::new(),
                failures: Vec::new(),
                digest: String::new(),
            },
            hasher: Sha256::new(),
        }
    }

    fn record(&mut self, record: &str, ok: Result<(), String>) {
        self.report.instances += 1;
        self.hasher.update(record.as_bytes());
        self.hasher.update([ok.is_ok() as u8, b'\n']);
        match ok {
            Ok(()) => self.report.passed += 1,
            Err(e) if self.report.failures.len() < 5 => self.report.failures.push(format!("#{}: {e}", self.report.instances - 1)),
            Err(_) => {}
        }
    }

    fn note(&mut self, key: &str) {
        match self.report.notes.iter_mut().find(|(k, _)| k == key) {
            Some((_, n)) => *n += 1,
            None => self.report.notes.push((key.into(), 1)),
        }
    }

    fn finish(self) -> SuiteReport {
        let mut r = self.report;
        r.digest = format!("{:x}", self.hasher.finalize());
        r
    }
}

fn stream(seed: u64, suite: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite);
    rng
}

fn fingerprint(t: &Theory, digest: &mut FormulaDigest) -> String {
    t.sentences().map(|s| format!("{:016x}", digest.digest(s))).collect::<Vec<_>>().join(",")
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

/// Random consistent theories through the driver, each output rechecked from scratch.
pub fn theory_suite(config: &FuzzConfig, space: &ModelSpace) -> Result<SuiteReport, ModelError> {
    let mut rng = stream(config.seed, 1);
    let mut suite = Suite::new("theories");
    let mut digest = FormulaDigest::new();
    let opts = TransformOptions {
        materialize_cap: config.materialize_cap,
    };
    for _ in 0..config.theories {
        let n = rng.gen_range(1..=5);
        let t = random_consistent_theory(&mut rng, space, n, 4)?;
        let outcome = independent_axiomatize_with(&t, space, &opts).map_err(|e| e.to_string()).and_then(|r| {
            let eq = check_theories_equivalent(&t, &r.output, space).map_err(|e| e.to_string())?;
            let ind = check_independence(&r.output, space).map_err(|e| e.to_string())?;
            check(eq.passed() && ind.passed(), || format!("equivalent {}, independent {}", eq.passed(), ind.passed()))?;
            Ok(r)
        });
        let record = format!("{:?}|{}", t.to_strings(), outcome.as_ref().map_or(String::new(), |r| fingerprint(&r.output, &mut digest)));
        suite.record(&record, outcome.map(|_| ()));
    }
    Ok(suite.finish())
}

/// Random families through both constructions, with the monotonicity of the second.
pub fn family_suite(config: &FuzzConfig) -> SuiteReport {
    let mut rng = stream(config.seed, 2);
    let mut suite = Suite::new("families");
    for _ in 0..config.families {
        let f = random_family(&mut rng);
        let mut record = f.to_json();
        let outcome = (|| {
            let out = case2_transform(&f).map_err(|e| e.to_string())?;
            record.push_str(&out.family.to_json());
            check(family_is_independent(&out.family).independent, || "case II output is not independent".into())?;
            check(families_equivalent(&f, &out.family).unwrap_or(false), || "case II output is not equivalent".into())?;
            for (set, label) in out.family.sets().iter().zip(out.family.labels()) {
                let j = label.expect("case II labels every set");
                check(f.sets()[j].is_subset(set), || format!("set {j} shrank"))?;
            }
            let outside = |i: usize| f.universe() - f.sets()[i].count_ones(..);
            for i0 in (0..f.len()).filter(|&i| f.len() >= 2 && outside(i) + 1 >= f.len()) {
                suite.note("case I applicable");
                let out = case1_transform(&f, i0).map_err(|e| e.to_string())?;
                record.push_str(&out.family.to_json());
                check(family_is_independent(&out.family).independent, || format!("case I at {i0} is not independent"))?;
                check(families_equivalent(&f, &out.family).unwrap_or(false), || format!("case I at {i0} is not equivalent"))?;
            }
            Ok(())
        })();
        suite.record(&record, outcome);
    }
    suite.finish()
}

/// Partition instances: the output is equivalent to the input, and every model of block
/// `a` satisfies the other outputs and fails output `a`.
pub fn partition_suite(config: &FuzzConfig, space: &ModelSpace) -> Result<SuiteReport, ModelError> {
    let mut rng = stream(config.seed, 3);
    let mut suite = Suite::new("partitions");
    let mut digest = FormulaDigest::new();
    for _ in 0..config.partitions {
        let inst = random_partition_instance(&mut rng, space)?;
        let outcome = (|| {
            let r = partition_transform(&inst.theory, inst.pivot, &inst.parts, space).map_err(|e| e.to_string())?;
            let eq = check_theories_equivalent(&inst.theory, &r.output, space).map_err(|e| e.to_string())?;
            check(eq.passed(), || "outputs are not equivalent to the input".into())?;
            for (a, psi) in inst.parts.iter().enumerate() {
                let models = space.satisfying(psi).map_err(|e| e.to_string())?;
                let rest = space.model_set(&r.output.without(a)).map_err(|e| e.to_string())?;
                let own = space.satisfying(r.output.get(a).expect("one output per block")).map_err(|e| e.to_string())?;
                check(models.is_subset(&rest) && models.is_disjoint(&own), || format!("a model of block {a} is not a witness"))?;
            }
            Ok(fingerprint(&r.output, &mut digest))
        })();
        let record = format!("{:?}|{}|{}", inst.theory.to_strings(), inst.pivot, outcome.clone().unwrap_or_default());
        suite.record(&record, outcome.map(|_| ()));
    }
    Ok(suite.finish())
}

/// Draws until `config.reznikoff` instances meet the hypothesis. Applicable instances are
/// rechecked; the others must name a base sentence that the rest really entails.
pub fn reznikoff_suite(config: &FuzzConfig, space: &ModelSpace) -> Result<SuiteReport, ModelError> {
    let mut rng = stream(config.seed, 4);
    let mut suite = Suite::new("reznikoff");
    let mut digest = FormulaDigest::new();
    let mut applicable = 0;
    while applicable < config.reznikoff {
        let (c, d) = random_reznikoff_instance(&mut rng, space)?;
        let record = format!("{:?}|{:?}", c.to_strings(), d.to_strings());
        let outcome = match reznikoff_pairing(&c, &d, space) {
            Ok(r) => {
                applicable += 1;
                suite.note("applicable");
                (|| {
                    let (eq, ind) = r.recheck(space).map_err(|e| e.to_string())?;
                    check(eq.passed() && ind.passed(), || "output failed the recheck".into())?;
                    check(r.output.len() == c.len(), || "output size differs from the base".into())?;
                    Ok(fingerprint(&r.output, &mut digest))
                })()
            }
            Err(TransformError::NotApplicable(cert)) => {
                suite.note("not applicable");
                (|| {
                    let i = cert.index.ok_or("certificate without an index")?;
                    let mut rest = Theory::new();
                    for (j, s) in c.sentences().chain(d.sentences()).enumerate() {
                        if j != i {
                            rest.push(s.clone(), crate::model::Provenance::input(j));
                        }
                    }
                    let e = entails(&rest, c.get(i).ok_or("certificate index out of range")?, space).map_err(|e| e.to_string())?;
                    check(e.holds, || format!("sentence {i} is not entailed by the rest"))?;
                    Ok(format!("n/a {i}"))
                })()
            }
            Err(e) => Err(e.to_string()),
        };
        suite.record(&format!("{record}|{}", outcome.clone().unwrap_or_default()), outcome.map(|_| ()));
    }
    Ok(suite.finish())
}

/// Tree instances: the tree passes its own checks, and every model of `φ*` in the space
/// realizes exactly one input type while every source structure is a model.
pub fn tree_suite(config: &FuzzConfig, space: &ModelSpace) -> Result<SuiteReport, TransformError> {
    let mut rng = stream(config.seed, 5);
    let mut suite = Suite::new("trees");
    let mut digest = FormulaDigest::new();
    for _ in 0..config.trees {
        let types = random_tree_instance(&mut rng, space, config.tree_level, config.materialize_cap)?;
        let outcome = (|| {
            let tree = build_separating_tree(&types, space).map_err(|e| e.to_string())?;
            let report = tree.check(&types, space).map_err(|e| e.to_string())?;
            check(report.passed(), || format!("tree check failed: {}", report.failure().map_or("", |c| &c.condition)))?;
            let star = phi_star(&tree);
            let models = space.satisfying(&star).map_err(|e| e.to_string())?;
            check(!models.is_clear(), || "the sentence has no model".into())?;
            for w in models.ones() {
                let m = &space.representatives()[w];
                let mut realized = 0;
                for ty in &types {
                    let mut found = false;
                    for e in 0..m.size() {
                        let at: Assignment = [("x0".to_string(), e)].into();
                        let mut all = true;
                        for f in &ty.formulas {
                            if !eval(m, f, &at).map_err(|e| e.to_string())? {
                                all = false;
                                break;
                            }
                        }
                        if all {
                            found = true;
                            break;
                        }
                    }
                    realized += found as usize;
                }
                check(realized == 1, || format!("model {w} realizes {realized} input types"))?;
            }
            Ok(format!("{}:{:016x}:{}", types.len(), digest.digest(&star), models.count_ones(..)))
        })();
        let ids: Vec<String> = types.iter().map(|t| format!("{}.{}", t.id.level, t.id.class_index)).collect();
        let record = format!("{ids:?}|{}", outcome.clone().unwrap_or_default());
        suite.record(&record, outcome.map(|_| ()));
    }
    Ok(suite.finish())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    pub suites: Vec<SuiteReport>,
}

impl FuzzReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::all_passed)
    }
}

/// All suites; suites with a zero count are skipped.
pub fn run(config: &FuzzConfig) -> Result<FuzzReport, TransformError> {
    let space = enumerate_models(&fuzz_signature(), config.max_size)?;
    let mut suites = Vec::new();
    if config.theories > 0 {
        suites.push(theory_suite(config, &space)?);
    }
    if config.families > 0 {
        suites.push(family_suite(config));
    }
    if config.partitions > 0 {
        suites.push(partition_suite(config, &space)?);
    }
    if config.reznikoff > 0 {
        suites.push(reznikoff_suite(config, &space)?);
    }
    if config.trees > 0 {
        suites.push(tree_suite(config, &space)?);
    }
    Ok(FuzzReport {
        config: config.clone(),
        suites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FuzzConfig {
        FuzzConfig {
            seed: 7,
            max_size: 2,
            theories: 10,
            families: 50,
            partitions: 5,
            reznikoff: 5,
            trees: 3,
            ..FuzzConfig::default()
        }
    }

    #[test]
    fn generated_sentences_are_small_sentences() {
        let mut rng = stream(1, 0);
        for _ in 0..200 {
            let s = random_sentence(&mut rng, 4);
            assert!(s.is_sentence() && s.depth() <= 4, "{s}");
        }
    }

    #[test]
    fn families_share_a_point() {
        let mut rng = stream(1, 0);
        for _ in 0..200 {
            let f = random_family(&mut rng);
            assert!(f.len() <= 8 && f.universe() <= 16);
            assert!(!f.intersection().is_clear());
        }
    }

    #[test]
    fn small_run_passes_and_repeats() {
        let a = run(&small()).unwrap();
        assert!(a.all_passed(), "{a:#?}");
        let b = run(&small()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
