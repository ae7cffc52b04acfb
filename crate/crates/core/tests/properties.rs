use std::sync::OnceLock;

use indax_core::fuzz::{fuzz_signature, random_sentence};
use indax_core::model::{enumerate_models, eval, parse_formula, preprocess, Assignment, ModelSpace, Signature, Structure, Theory};
use indax_core::scott::{canonical_invariant, scott_height, types_equal};
use indax_core::setfam::{case1_transform, case2_transform, families_equivalent, family_is_independent, SetFamily};
use indax_core::transforms::independent_axiomatize;
use indax_core::verify::{check_independence, check_theories_equivalent, oracle_isomorphic};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn structure(sig: Signature, max: usize) -> impl Strategy<Value = Structure> {
    (1..=max).prop_flat_map(move |n| {
        let sig = sig.clone();
        let bits = sig.table_bits(n).unwrap();
        prop::collection::vec(any::<bool>(), bits).prop_map(move |enc| Structure::from_encoding(sig.clone(), n, &enc).unwrap())
    })
}

fn relabelled(sig: Signature, max: usize) -> impl Strategy<Value = (Structure, Structure)> {
    structure(sig, max).prop_flat_map(|m| {
        let perm: Vec<usize> = (0..m.size()).collect();
        (Just(m), Just(perm).prop_shuffle()).prop_map(|(m, p)| {
            let n = m.permuted(&p);
            (m, n)
        })
    })
}

fn family() -> impl Strategy<Value = SetFamily> {
    (1usize..=16).prop_flat_map(|u| {
        (0..u, prop::collection::vec(prop::collection::vec(0..u, 0..=u), 0..=8)).prop_map(move |(common, mut sets)| {
            for s in &mut sets {
                s.push(common);
            }
            SetFamily::new(u, sets).unwrap()
        })
    })
}

fn theory(seed: u64, len: usize) -> Theory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| random_sentence(&mut rng, 4)).collect()
}

fn small_space() -> &'static ModelSpace {
    static SPACE: OnceLock<ModelSpace> = OnceLock::new();
    SPACE.get_or_init(|| enumerate_models(&fuzz_signature(), 2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_sentences_parse_back(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_sentence(&mut rng, 4);
        prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn structure_files_round_trip(m in structure(fuzz_signature(), 4)) {
        let text = serde_json::to_string(&m).unwrap();
        prop_assert_eq!(serde_json::from_str::<Structure>(&text).unwrap(), m);
    }

    #[test]
    fn relabelling_preserves_everything((m, n) in relabelled(fuzz_signature(), 4), seed in any::<u64>()) {
        prop_assert_eq!(canonical_invariant(&m), canonical_invariant(&n));
        prop_assert_eq!(m.canonical_encoding(), n.canonical_encoding());
        prop_assert_eq!(scott_height(&m), scott_height(&n));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_sentence(&mut rng, 4);
        prop_assert_eq!(eval(&m, &s, &Assignment::new()).unwrap(), eval(&n, &s, &Assignment::new()).unwrap());
    }

    #[test]
    fn invariant_equality_is_isomorphism(m in structure(fuzz_signature(), 3), n in structure(fuzz_signature(), 3)) {
        let iso = oracle_isomorphic(&m, &n).unwrap().is_some();
        prop_assert_eq!(iso, canonical_invariant(&m) == canonical_invariant(&n));
    }

    #[test]
    fn types_are_reflexive_and_symmetric(m in structure(fuzz_signature(), 3), n in structure(fuzz_signature(), 3), a in 0usize..3, b in 0usize..3, alpha in 0usize..4) {
        let (a, b) = (a % m.size(), b % n.size());
        prop_assert!(types_equal(&m, &[a], &m, &[a], alpha).unwrap());
        prop_assert_eq!(types_equal(&m, &[a], &n, &[b], alpha).unwrap(), types_equal(&n, &[b], &m, &[a], alpha).unwrap());
        if types_equal(&m, &[a], &n, &[b], alpha + 1).unwrap() {
            prop_assert!(types_equal(&m, &[a], &n, &[b], alpha).unwrap());
        }
    }

    #[test]
    fn case_two_output_is_independent_equivalent_and_larger(f in family()) {
        let out = case2_transform(&f).unwrap();
        prop_assert!(family_is_independent(&out.family).independent);
        prop_assert!(families_equivalent(&f, &out.family).unwrap());
        for (set, label) in out.family.sets().iter().zip(out.family.labels()) {
            prop_assert!(f.sets()[label.unwrap()].is_subset(set));
        }
        prop_assert_eq!(out.family.len() + out.dropped.len(), f.len());
        prop_assert_eq!(SetFamily::from_json(&out.family.to_json()).unwrap(), out.family);
    }

    #[test]
    fn case_one_output_is_independent_and_equivalent(f in family(), i in 0usize..8) {
        prop_assume!(f.len() >= 2);
        let i0 = i % f.len();
        prop_assume!(f.universe() - f.sets()[i0].count_ones(..) + 1 >= f.len());
        let out = case1_transform(&f, i0).unwrap();
        prop_assert_eq!(out.family.len(), f.len() - 1);
        prop_assert!(family_is_independent(&out.family).independent);
        prop_assert!(families_equivalent(&f, &out.family).unwrap());
    }

    #[test]
    fn preprocessing_keeps_the_models(seed in any::<u64>(), len in 0usize..5) {
        let space = small_space();
        let t = theory(seed, len);
        let p = preprocess(&t, space).unwrap();
        prop_assert!(check_theories_equivalent(&t, &p, space).unwrap().passed());
        prop_assert!(p.len() <= t.len().max(1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn driver_output_is_verified(seed in any::<u64>(), len in 0usize..5) {
        let space = small_space();
        let t = theory(seed, len);
        let r = independent_axiomatize(&t, space).unwrap();
        prop_assert!(check_theories_equivalent(&t, &r.output, space).unwrap().passed());
        prop_assert!(check_independence(&r.output, space).unwrap().passed());
        for (i, w) in r.independence_witnesses.iter().enumerate() {
            let w = w.as_ref().unwrap();
            prop_assert!(!eval(w, r.output.get(i).unwrap(), &Assignment::new()).unwrap());
        }
    }
}
