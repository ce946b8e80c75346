//! Normal forms `ν x1…xn.(A1 | … | Am)`, pruning, canonical keys and the
//! linked / tied / migratable relations.

mod canonical;
mod tied;

pub use canonical::{canonical, canonical_seq_with, CanonicalKey};
pub use tied::{migratable, tied_relation, TiedRelation};

use std::collections::BTreeSet;

use crate::term::{Branch, Name, Prefix, Substitution, Term, TypeExpr};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binder {
    pub name: Name,
    pub ty: Option<TypeExpr>,
}

impl Binder {
    pub fn new(name: Name, ty: Option<TypeExpr>) -> Binder {
        Binder { name, ty }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NormalForm {
    pub binders: Vec<Binder>,
    pub actives: Vec<Sequential>,
}

/// A choice, or a replicated choice, whose continuations are normal forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequential {
    pub replicated: bool,
    pub branches: Vec<NfBranch>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NfBranch {
    pub prefix: Prefix,
    pub cont: NormalForm,
}

/// Normal form of a term, following the defining equations literally:
/// `ν a.0` is kept (see [`prune`]).
pub fn nf(t: &Term) -> NormalForm {
    match t {
        Term::Nil => NormalForm::default(),
        Term::Restrict { name, ty, body } => {
            let mut inner = nf(body);
            inner.binders.insert(0, Binder::new(name.clone(), ty.clone()));
            inner
        }
        Term::Par(l, r) => {
            let (p, q) = (nf(l), nf(r));
            if q.is_zero() && !p.is_zero() {
                p
            } else if p.is_zero() {
                q
            } else {
                let mut out = p;
                out.binders.extend(q.binders);
                out.actives.extend(q.actives);
                out
            }
        }
        Term::Choice(bs) => NormalForm { binders: vec![], actives: vec![Sequential::from_branches(false, bs)] },
        Term::Repl(bs) => NormalForm { binders: vec![], actives: vec![Sequential::from_branches(true, bs)] },
    }
}

impl Sequential {
    fn from_branches(replicated: bool, bs: &[Branch]) -> Sequential {
        Sequential {
            replicated,
            branches: bs.iter().map(|b| NfBranch { prefix: b.prefix.clone(), cont: nf(&b.cont) }).collect(),
        }
    }

    pub fn to_term(&self) -> Term {
        let bs = self.branches.iter().map(|b| Branch::new(b.prefix.clone(), b.cont.to_term())).collect();
        if self.replicated {
            Term::Repl(bs)
        } else {
            Term::Choice(bs)
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for b in &self.branches {
            out.extend(b.prefix.free_names().into_iter().cloned());
            let mut inner = b.cont.free_names();
            if let Some(v) = b.prefix.bound_var() {
                inner.remove(v);
            }
            out.extend(inner);
        }
        out
    }

    pub fn substitute(&self, s: &Substitution) -> Sequential {
        nf(&self.to_term().substitute(s)).actives.into_iter().next().expect("a sequential term stays sequential")
    }

    /// Copy with every bound name replaced by a fresh one.
    pub fn freshen(&self) -> Sequential {
        let (t, _) = fresh_binders(&self.to_term());
        nf(&t).actives.into_iter().next().expect("a sequential term stays sequential")
    }
}

impl NfBranch {
    /// Copy of the branch with its input variable and all bound names of the
    /// continuation replaced by fresh ones.
    pub fn freshen(&self) -> NfBranch {
        let seq = Sequential { replicated: false, branches: vec![self.clone()] }.freshen();
        seq.branches.into_iter().next().expect("one branch")
    }
}

/// Renames binders to fresh ids keeping their displays.
fn fresh_binders(t: &Term) -> (Term, Substitution) {
    let mut ren = Substitution::new();
    let out = refresh_rec(t, &Substitution::new(), &mut ren);
    (out, ren)
}

fn refresh_rec(t: &Term, env: &Substitution, ren: &mut Substitution) -> Term {
    match t {
        Term::Nil => Term::Nil,
        Term::Par(l, r) => {
            let l = refresh_rec(l, env, ren);
            Term::par(l, refresh_rec(r, env, ren))
        }
        Term::Restrict { name, ty, body } => {
            let fresh = name.refresh();
            ren.insert(name.clone(), fresh.clone());
            let mut inner = env.clone();
            inner.insert(name.clone(), fresh.clone());
            Term::restrict(fresh, ty.clone(), refresh_rec(body, &inner, ren))
        }
        Term::Choice(bs) | Term::Repl(bs) => {
            let bs = bs
                .iter()
                .map(|b| match &b.prefix {
                    Prefix::Input { chan, var } => {
                        let fresh = var.refresh();
                        ren.insert(var.clone(), fresh.clone());
                        let mut inner = env.clone();
                        inner.insert(var.clone(), fresh.clone());
                        Branch::new(
                            Prefix::Input { chan: env.apply(chan), var: fresh },
                            refresh_rec(&b.cont, &inner, ren),
                        )
                    }
                    Prefix::Output { chan, msg } => Branch::new(
                        Prefix::Output { chan: env.apply(chan), msg: env.apply(msg) },
                        refresh_rec(&b.cont, env, ren),
                    ),
                    Prefix::Tau => Branch::new(Prefix::Tau, refresh_rec(&b.cont, env, ren)),
                })
                .collect();
            if matches!(t, Term::Repl(_)) {
                Term::Repl(bs)
            } else {
                Term::Choice(bs)
            }
        }
    }
}

impl NormalForm {
    /// No binders and no actives.
    pub fn is_zero(&self) -> bool {
        self.binders.is_empty() && self.actives.is_empty()
    }

    pub fn to_term(&self) -> Term {
        let body = Term::par_all(self.actives.iter().map(Sequential::to_term));
        self.binders.iter().rev().fold(body, |acc, b| Term::restrict(b.name.clone(), b.ty.clone(), acc))
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for a in &self.actives {
            out.extend(a.free_names());
        }
        for b in &self.binders {
            out.remove(&b.name);
        }
        out
    }

    pub fn binder_names(&self) -> Vec<Name> {
        self.binders.iter().map(|b| b.name.clone()).collect()
    }

    pub fn binder(&self, x: &Name) -> Option<&Binder> {
        self.binders.iter().find(|b| &b.name == x)
    }

    pub fn substitute(&self, s: &Substitution) -> NormalForm {
        nf(&self.to_term().substitute(s))
    }

    /// Copy with every bound name replaced by a fresh one.
    pub fn freshen(&self) -> NormalForm {
        nf(&fresh_binders(&self.to_term()).0)
    }

    /// Sub-normal-form with the chosen binders and actives.
    pub fn restrict_to(&self, binders: &[usize], actives: &[usize]) -> NormalForm {
        NormalForm {
            binders: binders.iter().map(|&i| self.binders[i].clone()).collect(),
            actives: actives.iter().map(|&i| self.actives[i].clone()).collect(),
        }
    }
}

/// Drops binders that no active uses, recursively.
pub fn prune(n: &NormalForm) -> NormalForm {
    let actives: Vec<Sequential> = n.actives.iter().map(prune_seq).collect();
    let mut used = BTreeSet::new();
    for a in &actives {
        used.extend(a.free_names());
    }
    let binders = n.binders.iter().filter(|b| used.contains(&b.name)).cloned().collect();
    NormalForm { binders, actives }
}

fn prune_seq(s: &Sequential) -> Sequential {
    Sequential {
        replicated: s.replicated,
        branches: s.branches.iter().map(|b| NfBranch { prefix: b.prefix.clone(), cont: prune(&b.cont) }).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::pretty::pretty;

    #[test]
    fn par_with_zero() {
        let t = parse("a(x).0 | 0").unwrap();
        let n = nf(&t);
        assert!(n.binders.is_empty());
        assert_eq!(n.actives.len(), 1);
        assert_eq!(pretty(&n.to_term()), "a(x)");
    }

    #[test]
    fn scope_extrusion() {
        let t = parse("(new a. a(x)) | (new b. b(y))").unwrap();
        let n = nf(&t);
        let names: Vec<&str> = n.binders.iter().map(|b| b.name.display()).collect();
        assert_eq!(names, ["a", "b"]);
        assert_eq!(n.actives.len(), 2);
    }

    #[test]
    fn depth_example_q() {
        let t = parse("(new a. a(x)) | (new c. ((new b. b<c>) | c(y)))").unwrap();
        let n = nf(&t);
        assert_eq!(n.binders.len(), 3);
        assert_eq!(n.actives.len(), 3);
        assert_eq!(n.free_names(), t.free_names());
    }

    #[test]
    fn nf_keeps_empty_restrictions_prune_drops_them() {
        let t = parse("new a. 0").unwrap();
        let n = nf(&t);
        assert_eq!(n.binders.len(), 1);
        assert!(prune(&n).is_zero());
        let t = parse("new a. new b. a<b>").unwrap();
        assert_eq!(prune(&nf(&t)), nf(&t));
    }

    #[test]
    fn nested_continuations_are_normalised() {
        let t = parse("a(x).(new y. x<y> | 0)").unwrap();
        let n = nf(&t);
        let cont = &n.actives[0].branches[0].cont;
        assert_eq!(cont.binders.len(), 1);
        assert_eq!(cont.actives.len(), 1);
    }

    #[test]
    fn freshen_keeps_shape() {
        let t = parse("!a(x).new d. x<d>").unwrap();
        let s = &nf(&t).actives[0];
        let f = s.freshen();
        assert!(f.to_term().alpha_eq(&s.to_term()));
        assert_ne!(f.branches[0].prefix, s.branches[0].prefix);
        assert_eq!(f.free_names(), s.free_names());
    }
}
