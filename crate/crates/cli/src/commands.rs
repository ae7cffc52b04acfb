//! Command bodies. Each returns an [`Outcome`]; a failed check is an outcome with
//! `passed == false`, while anything that prevents a verdict is an error.

use std::path::Path;

use anyhow::{bail, Result};
use indax_core::fuzz::{run, FuzzConfig};
use indax_core::model::{build, enumerate_models_with, EnumerationLimits, ModelSpace, Theory};
use indax_core::scott::{alpha_type_counts, scott_report};
use indax_core::setfam::{
    case1_transform, case2_transform, families_equivalent, family_is_independent, independize_family, theory_to_family,
    SetFamily, SetFamilyError,
};
use indax_core::transforms::{
    complement_axiomatization_with, independent_axiomatize_with, partition_transform, reznikoff_pairing,
    scott_filter_transform_with, TransformError, TransformOptions, TransformReport,
};
use indax_core::verify::{check_independence, check_theories_equivalent};
use serde_json::{json, Value};

use crate::input::{self, InputError};

/// Settings shared by all commands.
pub struct Globals {
    pub max_size: usize,
    pub seed: u64,
    pub limits: EnumerationLimits,
    pub materialize_cap: usize,
    pub print_limit: u64,
}

pub struct Outcome {
    pub passed: bool,
    pub report: Value,
    pub summary: Vec<String>,
    /// Extra files written next to the report under `--out`, as (name, contents).
    pub files: Vec<(String, String)>,
}

impl Outcome {
    fn new(passed: bool, report: Value, summary: Vec<String>) -> Self {
        Self {
            passed,
            report,
            summary,
            files: Vec::new(),
        }
    }
}

fn space(theories: &[(&Path, &Theory)], g: &Globals) -> Result<ModelSpace> {
    let sig = input::signature(theories)?;
    Ok(enumerate_models_with(&sig, g.max_size, g.limits)?)
}

pub fn scott(path: &Path, g: &Globals) -> Result<Outcome> {
    let m = input::structure(path)?;
    let r = scott_report(&m, g.materialize_cap);
    let printed = r.sentence.as_ref().filter(|s| s.tree_size() <= g.print_limit);
    let report = json!({
        "size": m.size(),
        "height": r.height,
        "invariant": r.invariant.digest(),
        "materialized": r.sentence.is_some(),
        "tree_size": r.sentence.as_ref().map(|s| s.tree_size()),
        "dag_size": r.sentence.as_ref().map(|s| s.dag_size()),
        "sentence": printed.map(|s| s.to_string()),
    });
    let mut summary = vec![
        format!("Scott height {} for a structure of size {}", r.height, m.size()),
        format!("invariant {}", r.invariant.digest()),
    ];
    match &r.sentence {
        None => summary.push(format!("sentence not materialized: size {} exceeds cap {}", m.size(), g.materialize_cap)),
        Some(s) if printed.is_none() => summary.push(format!("sentence has {} nodes, over the print limit", s.tree_size())),
        Some(s) => summary.push(format!("sentence with {} nodes included", s.tree_size())),
    }
    Ok(Outcome::new(true, report, summary))
}

pub fn analyze(path: &Path, g: &Globals) -> Result<Outcome> {
    let t = input::theory(path)?;
    let space = space(&[(path, &t)], g)?;
    let conj = build::and(t.sentences().cloned().collect());
    let models = space.satisfying(&conj)?.count_ones(..);
    let counts = alpha_type_counts(&conj, &space)?;
    let levels: Vec<Value> = counts
        .iter()
        .enumerate()
        .map(|(alpha, (psi, phi))| json!({ "alpha": alpha, "psi": psi, "phi": phi }))
        .collect();
    let mut summary = vec![format!(
        "{models} of {} isomorphism classes of size at most {} satisfy the theory",
        space.len(),
        g.max_size
    )];
    summary.extend(counts.iter().enumerate().map(|(a, (psi, phi))| format!("level {a}: |Psi| = {psi}, |Phi| = {phi}")));
    let report = json!({
        "bound": g.max_size,
        "classes": space.len(),
        "models": models,
        "levels": levels,
    });
    Ok(Outcome::new(true, report, summary))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Partition,
    Reznikoff,
    Complement,
    ScottFilter,
    Auto,
}

pub struct TransformArgs<'a> {
    pub method: MethodArg,
    pub theory: &'a Path,
    pub pivot: Option<usize>,
    pub parts: Option<&'a Path>,
    pub extra: Option<&'a Path>,
}

pub fn transform(a: &TransformArgs, g: &Globals) -> Result<Outcome> {
    let t = input::theory(a.theory)?;
    let opts = TransformOptions {
        materialize_cap: g.materialize_cap,
    };
    let result = match a.method {
        MethodArg::Partition => {
            let (Some(pivot), Some(parts_path)) = (a.pivot, a.parts) else {
                bail!(InputError::new(a.theory, "the partition method needs --pivot and --parts"));
            };
            let parts = input::theory(parts_path)?;
            let space = space(&[(a.theory, &t), (parts_path, &parts)], g)?;
            if pivot >= t.len() {
                bail!(InputError::new(a.theory, format!("pivot {pivot} is out of range for {} sentences", t.len())));
            }
            let parts: Vec<_> = parts.sentences().cloned().collect();
            partition_transform(&t, pivot, &parts, &space).map(|r| (r, space))
        }
        MethodArg::Reznikoff => {
            let Some(extra_path) = a.extra else {
                bail!(InputError::new(a.theory, "the reznikoff method needs --extra"));
            };
            let d = input::theory(extra_path)?;
            let space = space(&[(a.theory, &t), (extra_path, &d)], g)?;
            reznikoff_pairing(&t, &d, &space).map(|r| (r, space))
        }
        method => {
            let space = space(&[(a.theory, &t)], g)?;
            let r = match method {
                MethodArg::Complement => complement_axiomatization_with(&t, &space, &opts),
                MethodArg::ScottFilter => scott_filter_transform_with(&t, &space, &opts),
                _ => independent_axiomatize_with(&t, &space, &opts),
            };
            r.map(|r| (r, space))
        }
    };
    match result {
        Ok((r, space)) => transform_outcome(&r, &space, g),
        Err(e) if is_precondition(&e) => Ok(Outcome::new(
            false,
            json!({ "error": e.to_string(), "bound": g.max_size, "certificate": certificate(&e) }),
            vec![format!("transform refused: {e}")],
        )),
        Err(e) => Err(e.into()),
    }
}

/// Failures that are a verdict about the input rather than a problem running the command.
fn is_precondition(e: &TransformError) -> bool {
    matches!(
        e,
        TransformError::NoNonPivot
            | TransformError::PartsMismatch { .. }
            | TransformError::PartitionInvalid(_)
            | TransformError::SizeMismatch { .. }
            | TransformError::NotApplicable(_)
            | TransformError::Inconsistent { .. }
            | TransformError::VerificationFailed(_)
    )
}

fn certificate(e: &TransformError) -> Value {
    match e {
        TransformError::PartitionInvalid(r) | TransformError::VerificationFailed(r) => json!(r),
        TransformError::NotApplicable(c) => json!(c),
        _ => Value::Null,
    }
}

fn transform_outcome(r: &TransformReport, space: &ModelSpace, g: &Globals) -> Result<Outcome> {
    // the transform verified itself; this is a second, independent pass over the same space
    let (eq, ind) = r.recheck(space)?;
    let passed = eq.passed() && ind.passed();
    let mut report = r.to_json(g.print_limit);
    report["verification"] = json!({ "equivalent": eq.passed(), "independent": ind.passed() });
    let mut summary = vec![format!(
        "{} sentences in, {} out; equivalent: {}, independent: {} (structures of size at most {})",
        r.input.len(),
        r.output.len(),
        eq.passed(),
        ind.passed(),
        r.bound
    )];
    let mut files = Vec::new();
    if r.output.sentences().all(|s| s.tree_size() <= g.print_limit) {
        files.push(("output.json".into(), r.output.to_json()));
    } else {
        summary.push("output sentences exceed the print limit; output.json not written".into());
    }
    for (i, w) in r.independence_witnesses.iter().enumerate() {
        if let Some(w) = w {
            files.push((format!("witness_{i}.json"), serde_json::to_string_pretty(w)?));
        }
    }
    Ok(Outcome {
        passed,
        report,
        summary,
        files,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetfamMode {
    Check,
    Independize,
    Case1(usize),
    Case2,
}

pub fn setfam(family: Option<&Path>, from_theory: Option<&Path>, mode: SetfamMode, g: &Globals) -> Result<Outcome> {
    let (f, origin) = match (family, from_theory) {
        (Some(p), None) => (input::family(p)?, p),
        (None, Some(p)) => {
            let t = input::theory(p)?;
            let space = space(&[(p, &t)], g)?;
            (theory_to_family(&t, &space)?, p)
        }
        _ => bail!("give exactly one of a family file or --from-theory"),
    };
    let mut files = vec![("input_family.json".to_string(), f.to_json())];
    let (passed, mut report, summary, out) = match mode {
        SetfamMode::Check => {
            let ind = family_is_independent(&f);
            let summary = format!("{} sets over {} points; independent: {}", f.len(), f.universe(), ind.independent);
            (ind.independent, json!({ "independence": ind.report(f.universe()) }), summary, None)
        }
        SetfamMode::Independize => {
            let (out, r) = independize_family(&f).map_err(|e| family_error(origin, e))?;
            let summary = format!(
                "{} sets in, {} out ({} dropped); equivalent: {}, independent: {}",
                f.len(),
                out.len(),
                r.dropped.len(),
                r.equivalent,
                r.independence.independent
            );
            let report = json!({
                "dropped": r.dropped,
                "equivalent": r.equivalent,
                "independence": r.independence.report(out.universe()),
            });
            (r.verified(), report, summary, Some(out))
        }
        SetfamMode::Case1(i0) => match case1_transform(&f, i0) {
            Ok(o) => {
                let blocks: Vec<Vec<usize>> = o.blocks.iter().map(|b| b.ones().collect()).collect();
                let (report, summary, ok) = checked(&f, &o.family, json!({ "pivot": i0, "blocks": blocks }))?;
                (ok, report, summary, Some(o.family))
            }
            Err(SetFamilyError::NotApplicable(why)) => (false, json!({ "error": why }), format!("not applicable: {why}"), None),
            Err(e) => return Err(family_error(origin, e).into()),
        },
        SetfamMode::Case2 => {
            let o = case2_transform(&f).map_err(|e| family_error(origin, e))?;
            let (report, summary, ok) = checked(&f, &o.family, json!({ "dropped": o.dropped }))?;
            (ok, report, summary, Some(o.family))
        }
    };
    report["universe"] = json!(f.universe());
    report["input"] = json!(sets_of(&f));
    if let Some(out) = &out {
        report["output"] = json!(sets_of(out));
        report["labels"] = json!(out.labels());
        files.push(("family.json".into(), out.to_json()));
    }
    Ok(Outcome {
        passed,
        report,
        summary: vec![summary],
        files,
    })
}

fn sets_of(f: &SetFamily) -> Vec<Vec<usize>> {
    (0..f.len()).map(|i| f.set(i)).collect()
}

fn checked(f: &SetFamily, out: &SetFamily, mut report: Value) -> Result<(Value, String, bool)> {
    let ind = family_is_independent(out);
    let eq = families_equivalent(f, out)?;
    report["equivalent"] = json!(eq);
    report["independence"] = json!(ind.report(out.universe()));
    let summary = format!("{} sets in, {} out; equivalent: {eq}, independent: {}", f.len(), out.len(), ind.independent);
    Ok((report, summary, eq && ind.independent))
}

/// Family errors caused by the input's shape, such as an empty intersection, are input errors.
fn family_error(path: &Path, e: SetFamilyError) -> InputError {
    InputError::new(path, e.to_string())
}

pub fn verify(path: &Path, independent: bool, equivalent_to: Option<&Path>, g: &Globals) -> Result<Outcome> {
    let t = input::theory(path)?;
    let other = equivalent_to.map(|p| input::theory(p).map(|u| (p, u))).transpose()?;
    let mut sources = vec![(path, &t)];
    if let Some((p, u)) = &other {
        sources.push((p, u));
    }
    let space = space(&sources, g)?;
    let mut report = json!({ "bound": g.max_size });
    let mut summary = Vec::new();
    let mut passed = true;
    if independent {
        let r = check_independence(&t, &space)?;
        summary.push(format!("independent over structures of size at most {}: {}", g.max_size, r.passed()));
        passed &= r.passed();
        report["independence"] = json!(r);
    }
    if let Some((_, u)) = &other {
        let r = check_theories_equivalent(&t, u, &space)?;
        summary.push(format!("equivalent over structures of size at most {}: {}", g.max_size, r.passed()));
        passed &= r.passed();
        report["equivalence"] = json!(r);
    }
    Ok(Outcome::new(passed, report, summary))
}

pub struct FuzzCounts {
    pub theories: usize,
    pub families: usize,
    pub partitions: usize,
    pub reznikoff: usize,
    pub trees: usize,
    pub tree_level: usize,
}

pub fn fuzz(c: &FuzzCounts, g: &Globals) -> Result<Outcome> {
    let config = FuzzConfig {
        seed: g.seed,
        max_size: g.max_size,
        theories: c.theories,
        families: c.families,
        partitions: c.partitions,
        reznikoff: c.reznikoff,
        trees: c.trees,
        tree_level: c.tree_level,
        materialize_cap: g.materialize_cap,
    };
    let r = run(&config)?;
    let summary = r
        .suites
        .iter()
        .map(|s| {
            let mut line = format!("{}: {}/{} passed", s.name, s.passed, s.instances);
            for (k, v) in &s.notes {
                line += &format!(", {k} {v}");
            }
            line
        })
        .collect();
    Ok(Outcome::new(r.all_passed(), json!(r), summary))
}
