//! Random generators for property tests, the acceptance suite and
//! benchmarks. All randomness flows from an explicit seed; `PI_HIER_SEED`
//! overrides the default.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::encodings::{ResetNet, Transition};
use crate::hierarchy::{BaseTypeRef, Hierarchy};
use crate::normal_form::{nf, NormalForm, Sequential};
use crate::term::{Branch, Name, Prefix, Term, TypeExpr};

pub const SEED_VAR: &str = "PI_HIER_SEED";

pub fn seed_from_env(default: u64) -> u64 {
    std::env::var(SEED_VAR).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(default)
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TermConfig {
    /// Restrictions at top level.
    pub max_restrictions: usize,
    /// Parallel components at top level.
    pub max_actives: usize,
    /// Nesting of prefixes.
    pub max_depth: usize,
    /// Size of the pool of free names.
    pub free_names: usize,
}

impl Default for TermConfig {
    fn default() -> Self {
        TermConfig { max_restrictions: 4, max_actives: 5, max_depth: 2, free_names: 2 }
    }
}

/// A plain, name-unique term `ν X. (A_1 | .. | A_m)` whose sequential
/// components may nest further restrictions after prefixes.
pub fn random_term(rng: &mut impl Rng, cfg: TermConfig) -> Term {
    let free: Vec<Name> = (0..cfg.free_names).map(|k| Name::global(&format!("f{k}"))).collect();
    let k = rng.gen_range(0..=cfg.max_restrictions);
    let bound: Vec<Name> = (0..k).map(|i| Name::fresh(&format!("n{i}"))).collect();
    let mut scope = free.clone();
    scope.extend(bound.iter().cloned());
    let m = rng.gen_range(1..=cfg.max_actives.max(1));
    let actives: Vec<Term> = (0..m).map(|_| sequential(rng, &scope, cfg.max_depth)).collect();
    let body = Term::par_all(actives);
    bound.into_iter().rev().fold(body, |acc, x| Term::restrict(x, None, acc))
}

fn sequential(rng: &mut impl Rng, scope: &[Name], depth: usize) -> Term {
    let branches: Vec<Branch> = (0..rng.gen_range(1..=2)).map(|_| branch(rng, scope, depth)).collect();
    if rng.gen_bool(0.3) {
        Term::Repl(branches)
    } else {
        Term::Choice(branches)
    }
}

fn branch(rng: &mut impl Rng, scope: &[Name], depth: usize) -> Branch {
    let pick = |rng: &mut dyn rand::RngCore| scope.choose(rng).cloned();
    let (prefix, inner) = match (rng.gen_range(0..10), pick(rng), pick(rng)) {
        (0, _, _) | (_, None, _) | (_, _, None) => (Prefix::Tau, scope.to_vec()),
        (1..=4, Some(chan), _) => {
            let var = Name::fresh("v");
            let mut inner = scope.to_vec();
            inner.push(var.clone());
            (Prefix::Input { chan, var }, inner)
        }
        (_, Some(chan), Some(msg)) => (Prefix::Output { chan, msg }, scope.to_vec()),
    };
    let cont = if depth == 0 || rng.gen_bool(0.4) { Term::Nil } else { continuation(rng, &inner, depth - 1) };
    Branch::new(prefix, cont)
}

fn continuation(rng: &mut impl Rng, scope: &[Name], depth: usize) -> Term {
    let mut scope = scope.to_vec();
    let fresh: Vec<Name> = (0..rng.gen_range(0..=1)).map(|_| Name::fresh("r")).collect();
    scope.extend(fresh.iter().cloned());
    let parts: Vec<Term> = (0..rng.gen_range(1..=2)).map(|_| sequential(rng, &scope, depth)).collect();
    let body = Term::par_all(parts);
    fresh.into_iter().rev().fold(body, |acc, x| Term::restrict(x, None, acc))
}

/// A forest over `n` bases `g0..`, each node either a root or below an
/// earlier node.
pub fn random_hierarchy(rng: &mut impl Rng, n: usize) -> Hierarchy {
    let nodes: Vec<BaseTypeRef> = (0..n).map(|i| BaseTypeRef::named(&format!("g{i}"))).collect();
    let mut edges = Vec::new();
    for i in 1..n {
        if rng.gen_bool(0.7) {
            edges.push((nodes[rng.gen_range(0..i)].clone(), nodes[i].clone()));
        }
    }
    Hierarchy::new(nodes, edges).expect("parents precede children")
}

/// Gives every restriction a random base-only type from `h`.
pub fn random_annotation(rng: &mut impl Rng, t: &Term, h: &Hierarchy) -> Term {
    let bases = h.nodes();
    let ann = t
        .restriction_names()
        .into_iter()
        .map(|(x, _)| (x, TypeExpr::only(bases.choose(rng).expect("non-empty hierarchy").clone())))
        .collect();
    t.annotate(&ann)
}

pub fn random_net(rng: &mut impl Rng, max_places: usize, max_transitions: usize) -> ResetNet {
    let places = rng.gen_range(1..=max_places.max(1));
    let transitions = (0..rng.gen_range(0..=max_transitions))
        .map(|_| Transition {
            update: (0..places).map(|_| rng.gen_range(-1..=1)).collect(),
            reset: (1..=places).filter(|_| rng.gen_bool(0.25)).collect(),
        })
        .collect();
    let initial = (0..places).map(|_| rng.gen_range(0..=2)).collect();
    ResetNet { places, transitions, initial }
}

/// A structurally congruent variant: components and binders shuffled, some
/// restrictions pushed into the single component using them, some
/// replications unfolded once, and continuations rewritten the same way.
pub fn random_congruent(rng: &mut impl Rng, t: &Term) -> Term {
    random_congruent_with(rng, t, 0.3)
}

/// As [`random_congruent`], unfolding each replication with probability
/// `unfold`.
pub fn random_congruent_with(rng: &mut impl Rng, t: &Term, unfold: f64) -> Term {
    shuffle_nf(rng, &nf(t), unfold)
}

fn shuffle_nf(rng: &mut impl Rng, n: &NormalForm, p: f64) -> Term {
    let mut actives: Vec<Sequential> = n.actives.clone();
    let unfold: Vec<Sequential> = actives
        .iter()
        .filter(|a| a.replicated && rng.gen_bool(p))
        .map(|a| Sequential { replicated: false, branches: a.branches.iter().map(|b| b.freshen()).collect() })
        .collect();
    actives.extend(unfold);
    actives.shuffle(rng);
    let mut parts: Vec<(Term, std::collections::BTreeSet<Name>)> = actives
        .iter()
        .map(|a| {
            let branches =
                a.branches.iter().map(|b| Branch::new(b.prefix.clone(), shuffle_nf(rng, &b.cont, p))).collect();
            let t = if a.replicated { Term::Repl(branches) } else { Term::Choice(branches) };
            (t, a.free_names())
        })
        .collect();
    let mut binders = n.binders.clone();
    binders.shuffle(rng);
    let mut outer = Vec::new();
    for b in binders {
        let users: Vec<usize> = (0..parts.len()).filter(|&i| parts[i].1.contains(&b.name)).collect();
        match users.as_slice() {
            [i] if rng.gen_bool(0.5) => {
                let (t, fns) = parts[*i].clone();
                parts[*i] = (Term::restrict(b.name, b.ty, t), fns);
            }
            [] if rng.gen_bool(0.5) => parts.push((Term::restrict(b.name, b.ty, Term::Nil), Default::default())),
            _ => outer.push(b),
        }
    }
    let mut body = Term::Nil;
    for (t, _) in parts {
        body = if body == Term::Nil || rng.gen_bool(0.5) { Term::par(t, body) } else { Term::par(body, t) };
    }
    outer.into_iter().rev().fold(body, |acc, b| Term::restrict(b.name, b.ty, acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::canonical;

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = crate::pretty::pretty(&random_term(&mut rng(3), TermConfig::default()));
        let b = crate::pretty::pretty(&random_term(&mut rng(3), TermConfig::default()));
        assert_eq!(a, b);
    }

    #[test]
    fn generated_terms_respect_bounds() {
        let mut r = rng(11);
        let cfg = TermConfig::default();
        for _ in 0..200 {
            let t = random_term(&mut r, cfg);
            assert!(t.is_name_unique());
            let n = nf(&t);
            assert!(n.binders.len() <= cfg.max_restrictions);
            assert!(n.actives.len() <= cfg.max_actives);
            let h = random_hierarchy(&mut r, 3);
            assert!(random_annotation(&mut r, &t, &h).is_fully_annotated());
        }
    }

    #[test]
    fn nets_are_well_formed() {
        let mut r = rng(5);
        for _ in 0..100 {
            random_net(&mut r, 3, 3).validate().unwrap();
        }
    }

    /// Without unfolding, a variant has the same canonical normal form.
    /// Restrictions nobody uses may move, hence the pruning.
    #[test]
    fn congruent_variants_share_normal_forms() {
        let mut r = rng(9);
        for _ in 0..200 {
            let t = random_term(&mut r, TermConfig::default());
            let n = nf(&t);
            let u = random_congruent_with(&mut r, &t, 0.0);
            assert_eq!(canonical(&crate::normal_form::prune(&nf(&u))), canonical(&crate::normal_form::prune(&n)));
        }
    }
}
