//! Randomised properties over generated terms.

use std::collections::BTreeMap;

use pi_hier_core::forest::{enumerate_congruent_forests, forest_of};
use pi_hier_core::gen::{
    random_annotation, random_congruent, random_hierarchy, random_net, random_term, rng, TermConfig,
};
use pi_hier_core::inference::{InferenceFailure, InferenceResult};
use pi_hier_core::normal_form::{canonical, prune};
use pi_hier_core::reduction::successors;
use pi_hier_core::tcompat::{is_tcompat_nf, tshape_failure_nf};
use pi_hier_core::typing::typecheck;
use pi_hier_core::{
    encode_reset_net, infer, nf, p_safe, parse, pretty, typecheck_term, Name, Substitution, TypeEnv, TypeExpr,
};
use proptest::prelude::*;

fn small() -> TermConfig {
    TermConfig { max_restrictions: 4, max_actives: 5, max_depth: 2, free_names: 2 }
}

/// Inference on a random term, retried until it succeeds.
fn typable(seed: u64) -> InferenceResult {
    let mut r = rng(seed);
    loop {
        let res = infer(&random_term(&mut r, small()));
        if res.ok {
            return res;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pretty_parse_round_trip(seed in any::<u64>()) {
        let t = random_term(&mut rng(seed), small());
        let back = parse(&pretty(&t)).unwrap();
        prop_assert!(back.alpha_eq(&t), "{}", pretty(&t));
    }

    #[test]
    fn normal_form_is_idempotent(seed in any::<u64>()) {
        let t = random_term(&mut rng(seed), small());
        let n = nf(&t);
        prop_assert_eq!(canonical(&nf(&n.to_term())), canonical(&n));
    }

    #[test]
    fn forest_round_trip(seed in any::<u64>()) {
        let t = random_term(&mut rng(seed), small());
        let back = forest_of(&t).to_normal_form().unwrap();
        prop_assert_eq!(canonical(&prune(&back)), canonical(&prune(&nf(&t))));
    }

    #[test]
    fn phi_agrees_with_forest_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_term(&mut r, small());
        let h = random_hierarchy(&mut r, 3);
        let n = nf(&random_annotation(&mut r, &t, &h));
        let oracle = enumerate_congruent_forests(&n, 1 << 22).unwrap().any(|f| f.is_tcompatible(&h));
        prop_assert_eq!(is_tcompat_nf(&h, &n).unwrap(), oracle, "{}", pretty(&n.to_term()));
    }

    #[test]
    fn inference_is_sound(seed in any::<u64>()) {
        let r = infer(&random_term(&mut rng(seed), small()));
        prop_assert!(!matches!(r.failure, Some(InferenceFailure::SelfCheck { .. })), "{:?}", r.failure);
        if r.ok {
            prop_assert!(typecheck_term(&r.hierarchy, &r.env, &r.term).ok);
            prop_assert!(p_safe(&r.hierarchy, &r.env, &r.term).unwrap());
            prop_assert!(tshape_failure_nf(&r.hierarchy, &nf(&r.term)).unwrap().is_none());
        }
    }

    #[test]
    fn one_step_preserves_typing_and_shape(seed in any::<u64>()) {
        let r = typable(seed);
        for (redex, q) in successors(&nf(&r.term)) {
            let rep = typecheck(&r.hierarchy, &r.env, &q);
            prop_assert!(rep.ok, "{} by {redex}: {:?}", pretty(&r.term), rep.violations);
            prop_assert!(tshape_failure_nf(&r.hierarchy, &q).unwrap().is_none(), "{} by {redex}", pretty(&r.term));
        }
    }

    #[test]
    fn weakening(seed in any::<u64>(), typed in any::<bool>()) {
        let mut g = rng(seed);
        let (h, env, t) = if typed {
            let r = typable(seed);
            (r.hierarchy, r.env, r.term)
        } else {
            let t = random_term(&mut g, small());
            let h = random_hierarchy(&mut g, 3);
            let env: TypeEnv = t.free_names().into_iter().map(|x| (x, TypeExpr::only(h.nodes()[0].clone()))).collect();
            (h.clone(), env, random_annotation(&mut g, &t, &h))
        };
        prop_assume!(!h.nodes().is_empty());
        let mut wide = env.clone();
        let base = h.nodes()[seed as usize % h.nodes().len()].clone();
        wide.insert(Name::fresh("w"), TypeExpr::channel(base.clone(), TypeExpr::only(base)));
        prop_assert_eq!(typecheck_term(&h, &env, &t).ok, typecheck_term(&h, &wide, &t).ok);
    }

    #[test]
    fn congruence_preserves_typability(seed in any::<u64>()) {
        let r = typable(seed);
        let mut g = rng(seed ^ 0x5eed);
        let u = random_congruent(&mut g, &r.term);
        prop_assert!(typecheck_term(&r.hierarchy, &r.env, &u).ok, "{} ~ {}", pretty(&r.term), pretty(&u));
        // also on untypable annotations
        let h = random_hierarchy(&mut g, 3);
        let raw = random_term(&mut g, small());
        let t = random_annotation(&mut g, &raw, &h);
        let env: TypeEnv = t.free_names().into_iter().map(|x| (x, TypeExpr::only(h.nodes()[0].clone()))).collect();
        let v = random_congruent(&mut g, &t);
        prop_assert_eq!(typecheck_term(&h, &env, &t).ok, typecheck_term(&h, &env, &v).ok);
    }

    #[test]
    fn substitution(seed in any::<u64>()) {
        let r = typable(seed);
        let free: Vec<Name> = r.term.free_names().into_iter().collect();
        prop_assume!(!free.is_empty());
        let a = free[seed as usize % free.len()].clone();
        // a fresh name of the same type, and any free name sharing it
        let mut env = r.env.clone();
        let b = Name::fresh("b");
        env.insert(b.clone(), r.env.get(&a).unwrap().clone());
        let mut targets = vec![b];
        targets.extend(free.iter().filter(|y| **y != a && r.env.get(y) == r.env.get(&a)).cloned());
        for y in targets {
            let s = r.term.substitute(&Substitution::single(a.clone(), y.clone()));
            prop_assert!(typecheck_term(&r.hierarchy, &env, &s).ok, "{} with {a} := {y}", pretty(&r.term));
        }
    }

    #[test]
    fn reset_net_encodings_type(seed in any::<u64>()) {
        let net = random_net(&mut rng(seed), 3, 3);
        let e = encode_reset_net(&net).unwrap();
        prop_assert!(typecheck_term(&e.hierarchy, &e.env, &e.term).ok);
        prop_assert!(p_safe(&e.hierarchy, &e.env, &e.term).unwrap());
        prop_assert!(tshape_failure_nf(&e.hierarchy, &nf(&e.term)).unwrap().is_none());
    }
}

#[test]
fn inference_is_deterministic_across_parses() {
    let src = "new a. new b. (!a(x).(new c. x<c>) | a<b> | b(y).a<y>)";
    let j1 = infer(&parse(src).unwrap()).to_json();
    let j2 = infer(&parse(src).unwrap()).to_json();
    assert_eq!(j1, j2);
    let _: BTreeMap<String, serde_json::Value> = serde_json::from_value(j1).unwrap();
}
