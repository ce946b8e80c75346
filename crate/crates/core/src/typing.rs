//! Type checking annotated normal forms against a hierarchy.
//!
//! The checker is syntax directed and total: every violated premise is
//! recorded and checking continues, so a report lists all problems at once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::hierarchy::{BaseTypeRef, Hierarchy, TypeEnv};
use crate::normal_form::{migratable, nf, tied_relation, NormalForm, Sequential};
use crate::pretty::{pretty_nf, pretty_seq};
use crate::term::{Name, Prefix, Term, TypeExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Par,
    Choice,
    Repl,
    Tau,
    Out,
    In,
    /// Missing annotations or environment entries.
    Env,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Par => "Par",
            Rule::Choice => "Choice",
            Rule::Repl => "Repl",
            Rule::Tau => "Tau",
            Rule::Out => "Out",
            Rule::In => "In",
            Rule::Env => "Env",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    /// Position in the normal form: `a2` is the third active, `b0` the first
    /// branch, joined by `/`.
    pub path: String,
    pub subterm: String,
    pub constraint: String,
    pub bases: Vec<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] at {}: {} in `{}`",
            self.rule,
            if self.path.is_empty() { "/" } else { &self.path },
            self.constraint,
            self.subterm
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TypingReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

pub fn typecheck(h: &Hierarchy, env: &TypeEnv, n: &NormalForm) -> TypingReport {
    let mut c = Checker { h, violations: Vec::new() };
    for x in n.free_names() {
        if !env.contains(&x) {
            c.report(Rule::Env, "", pretty_nf(n), format!("free name {} has no type", x.display()), vec![]);
        }
    }
    c.check_nf(env, n, "");
    TypingReport { ok: c.violations.is_empty(), violations: c.violations }
}

pub fn typecheck_term(h: &Hierarchy, env: &TypeEnv, t: &Term) -> TypingReport {
    typecheck(h, env, &nf(t))
}

struct Checker<'a> {
    h: &'a Hierarchy,
    violations: Vec<Violation>,
}

fn join(path: &str, step: String) -> String {
    if path.is_empty() {
        step
    } else {
        format!("{path}/{step}")
    }
}

fn bases_of(env: &TypeEnv, names: impl IntoIterator<Item = Name>) -> BTreeSet<BaseTypeRef> {
    names.into_iter().filter_map(|x| env.get(&x).map(|t| t.base().clone())).collect()
}

impl Checker<'_> {
    fn report(&mut self, rule: Rule, path: &str, subterm: String, constraint: String, bases: Vec<String>) {
        self.violations.push(Violation { rule, path: path.to_string(), subterm, constraint, bases });
    }

    /// Every base in `set` below `target`; returns the offending ones.
    fn not_below(&self, set: &BTreeSet<BaseTypeRef>, target: &BaseTypeRef) -> Vec<String> {
        set.iter().filter(|s| !self.h.lt(s, target)).map(|s| s.display().to_string()).collect()
    }

    fn check_nf(&mut self, gamma: &TypeEnv, n: &NormalForm, path: &str) {
        let mut inner = gamma.clone();
        let mut annotated = Vec::new();
        for b in &n.binders {
            match &b.ty {
                Some(ty) => {
                    inner.insert(b.name.clone(), ty.clone());
                    annotated.push((b.name.clone(), ty.clone()));
                }
                None => self.report(
                    Rule::Env,
                    path,
                    pretty_nf(n),
                    format!("restriction {} has no annotation", b.name.display()),
                    vec![],
                ),
            }
        }
        let rel = tied_relation(n);
        for (i, a) in n.actives.iter().enumerate() {
            let apath = join(path, format!("a{i}"));
            let outer = bases_of(gamma, rel.free_names_of(i).iter().cloned());
            for (x, tx) in &annotated {
                if !rel.name_tied(x, i) {
                    continue;
                }
                let bad = self.not_below(&outer, tx.base());
                if !bad.is_empty() {
                    let constraint = format!(
                        "bases of context names of the active must be below {} (base of {})",
                        tx.base(),
                        x.display()
                    );
                    let mut bases = bad;
                    bases.push(tx.base().display().to_string());
                    self.report(Rule::Par, &apath, pretty_seq(a), constraint, bases);
                }
            }
            self.check_seq(&inner, a, &apath);
        }
    }

    fn check_seq(&mut self, gamma: &TypeEnv, s: &Sequential, path: &str) {
        for (k, b) in s.branches.iter().enumerate() {
            let bpath = join(path, format!("b{k}"));
            match &b.prefix {
                Prefix::Tau => {}
                Prefix::Output { chan, msg } => match (gamma.get(chan), gamma.get(msg)) {
                    (Some(TypeExpr::BaseOnly(t)), _) => self.report(
                        Rule::Out,
                        &bpath,
                        pretty_seq(s),
                        format!("{} has base type {t} and cannot be used as a channel", chan.display()),
                        vec![t.display().to_string()],
                    ),
                    (Some(TypeExpr::Channel(_, payload)), Some(tm)) if **payload != *tm => self.report(
                        Rule::Out,
                        &bpath,
                        pretty_seq(s),
                        format!("{} carries {payload} but {} has type {tm}", chan.display(), msg.display()),
                        vec![payload.base().display().to_string(), tm.base().display().to_string()],
                    ),
                    _ => {}
                },
                Prefix::Input { chan, var } => match gamma.get(chan) {
                    Some(TypeExpr::BaseOnly(t)) => {
                        self.report(
                            Rule::In,
                            &bpath,
                            pretty_seq(s),
                            format!("{} has base type {t} and cannot be used as a channel", chan.display()),
                            vec![t.display().to_string()],
                        );
                        self.check_nf(gamma, &b.cont, &bpath);
                        continue;
                    }
                    Some(TypeExpr::Channel(ta, tx)) => {
                        if !self.h.lt(tx.base(), ta) {
                            let mig = migratable(var, &b.cont);
                            let fns: Vec<BTreeSet<Name>> = b.cont.actives.iter().map(|a| a.free_names()).collect();
                            let mut bad = BTreeSet::new();
                            for i in mig {
                                let set = bases_of(gamma, fns[i].iter().filter(|&y| y != chan).cloned());
                                bad.extend(self.not_below(&set, ta));
                            }
                            if !bad.is_empty() {
                                let constraint = format!(
                                    "neither {} < {ta} nor the context names of migratable actives below {ta}",
                                    tx.base()
                                );
                                let mut bases: Vec<String> = bad.into_iter().collect();
                                bases.push(ta.display().to_string());
                                self.report(Rule::In, &bpath, pretty_seq(s), constraint, bases);
                            }
                        }
                        let mut inner = gamma.clone();
                        inner.insert(var.clone(), (**tx).clone());
                        self.check_nf(&inner, &b.cont, &bpath);
                        continue;
                    }
                    None => {}
                },
            }
            self.check_nf(gamma, &b.cont, &bpath);
        }
    }
}

/// Annotates unannotated restrictions whose type is forced by being sent
/// on a channel of known type. Typically these are the names introduced by
/// the nullary output shorthand. Iterates to a fixpoint.
pub fn complete_annotations(t: &Term, env: &TypeEnv) -> Term {
    let mut cur = t.clone();
    loop {
        let mut found = BTreeMap::new();
        let scope: BTreeMap<Name, TypeExpr> = env.iter().map(|(x, t)| (x.clone(), t.clone())).collect();
        collect_forced(&cur, &scope, &mut found);
        if found.is_empty() {
            return cur;
        }
        cur = cur.annotate(&found);
    }
}

fn collect_forced(t: &Term, scope: &BTreeMap<Name, TypeExpr>, found: &mut BTreeMap<Name, TypeExpr>) {
    match t {
        Term::Nil => {}
        Term::Par(l, r) => {
            collect_forced(l, scope, found);
            collect_forced(r, scope, found);
        }
        Term::Restrict { name, ty, body } => {
            let mut inner = scope.clone();
            match ty {
                Some(ty) => {
                    inner.insert(name.clone(), ty.clone());
                }
                None => {
                    inner.remove(name);
                    if let Some(ty) = forced_type(name, body, &inner) {
                        found.insert(name.clone(), ty);
                    }
                }
            }
            collect_forced(body, &inner, found);
        }
        Term::Choice(bs) | Term::Repl(bs) => {
            for b in bs {
                let mut inner = scope.clone();
                if let Prefix::Input { chan, var } = &b.prefix {
                    match scope.get(chan).and_then(|t| t.payload()) {
                        Some(p) => inner.insert(var.clone(), p.clone()),
                        None => inner.remove(var),
                    };
                }
                collect_forced(&b.cont, &inner, found);
            }
        }
    }
}

/// Payload type of the first typed channel `x` is sent on.
fn forced_type(x: &Name, t: &Term, scope: &BTreeMap<Name, TypeExpr>) -> Option<TypeExpr> {
    match t {
        Term::Nil => None,
        Term::Par(l, r) => forced_type(x, l, scope).or_else(|| forced_type(x, r, scope)),
        Term::Restrict { name, ty, body } => {
            let mut inner = scope.clone();
            match ty {
                Some(ty) => inner.insert(name.clone(), ty.clone()),
                None => inner.remove(name),
            };
            forced_type(x, body, &inner)
        }
        Term::Choice(bs) | Term::Repl(bs) => bs.iter().find_map(|b| {
            let mut inner = scope.clone();
            match &b.prefix {
                Prefix::Output { chan, msg } if msg == x => {
                    if let Some(p) = scope.get(chan).and_then(|t| t.payload()) {
                        return Some(p.clone());
                    }
                }
                Prefix::Input { chan, var } => {
                    match scope.get(chan).and_then(|t| t.payload()) {
                        Some(p) => inner.insert(var.clone(), p.clone()),
                        None => inner.remove(var),
                    };
                }
                _ => {}
            }
            forced_type(x, &b.cont, &inner)
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn h(src: &str) -> Hierarchy {
        Hierarchy::parse(src).unwrap()
    }

    fn client_server() -> Term {
        parse("new s : s[m[d]]. new c : c[m[d]]. (!s(x).(new d : d. x<d>) | !c(m).(s<m> | m(y).c<m>) | !tau.new m : m[d]. c<m>)")
            .unwrap()
    }

    #[test]
    fn client_server_types() {
        let r = typecheck_term(&h("s < c < m < d"), &TypeEnv::new(), &client_server());
        assert!(r.ok, "{:?}", r.violations);
    }

    #[test]
    fn zero_types() {
        assert!(typecheck_term(&h("a"), &TypeEnv::new(), &Term::Nil).ok);
    }

    #[test]
    fn inverted_edge_is_a_violation() {
        let r = typecheck_term(&h("s < m < c < d"), &TypeEnv::new(), &client_server());
        assert!(!r.ok);
        assert!(r.violations.iter().any(|v| v.rule == Rule::Par));
    }

    #[test]
    fn ring_fails_under_every_chain() {
        let src =
            "new m : m[s[u]]. new s0 : s[u]. (!m(n).s0?().(new s : s[u]. (!s?().n!() | m<s> | s!())) | m<s0> | s0!())";
        let t = complete_annotations(&parse(src).unwrap(), &TypeEnv::new());
        assert!(t.is_fully_annotated());
        for order in
            [["m", "s", "u"], ["m", "u", "s"], ["s", "m", "u"], ["s", "u", "m"], ["u", "m", "s"], ["u", "s", "m"]]
        {
            let r = typecheck_term(&h(&order.join(" < ")), &TypeEnv::new(), &t);
            assert!(!r.ok);
            // the active using n and s needs base(n) < base(s), both s
            assert!(
                r.violations.iter().any(|v| v.rule == Rule::Par && v.bases.iter().filter(|b| *b == "s").count() == 2),
                "{order:?}: {:#?}",
                r.violations
            );
        }
    }

    #[test]
    fn non_channel_use_is_reported() {
        let t = parse("new a : a. new b : b. a<b>").unwrap();
        let r = typecheck_term(&h("a < b"), &TypeEnv::new(), &t);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, Rule::Out);
    }

    #[test]
    fn payload_mismatch_is_reported() {
        let t = parse("new a : a[b]. new c : c. a<c>").unwrap();
        let r = typecheck_term(&h("a < b\na < c"), &TypeEnv::new(), &t);
        assert!(r.violations.iter().any(|v| v.rule == Rule::Out));
    }

    #[test]
    fn free_names_need_types() {
        let t = parse("a<b>").unwrap();
        let r = typecheck_term(&h("a"), &TypeEnv::new(), &t);
        assert_eq!(r.violations.iter().filter(|v| v.rule == Rule::Env).count(), 2);
        let env = TypeEnv::parse("a : a[b]\nb : b").unwrap();
        assert!(typecheck_term(&h("a\nb"), &env, &t).ok);
    }

    #[test]
    fn missing_annotation_is_a_violation() {
        let r = typecheck_term(&h("a"), &TypeEnv::new(), &parse("new x. x<x>").unwrap());
        assert!(r.violations.iter().any(|v| v.rule == Rule::Env));
    }

    #[test]
    fn in_rule_accepts_lower_message() {
        // the message is above the channel but nothing migrates with context names
        let t = parse("new a : a[b]. (a(x).0 | (new b : b. a<b>))").unwrap();
        let ok = typecheck_term(&h("a < b"), &TypeEnv::new(), &t);
        assert!(ok.ok, "{:?}", ok.violations);
        // a migrating active that mentions a context name not below the channel
        let env = TypeEnv::parse("k : k[b]").unwrap();
        let t = parse("new a : a[b]. a(x).k<x>").unwrap();
        let r = typecheck_term(&h("a < b\nk"), &env, &t);
        assert!(r.violations.iter().any(|v| v.rule == Rule::In), "{:?}", r.violations);
    }

    #[test]
    fn crossed_pools_is_untypable() {
        let src = "(!tau.new a : a[b]. p<a>) | (!tau.new b : b. q<b>) | !(p(x).!q(y).x<y> + q(x).!p(y).x<y>)";
        let t = parse(src).unwrap();
        for hs in ["a < b", "b < a", "a\nb"] {
            let env = TypeEnv::parse("p : p[a[b]]\nq : q[b]").unwrap();
            let hier = Hierarchy::parse(&format!("{hs}\np\nq")).unwrap();
            assert!(!typecheck_term(&hier, &env, &t).ok);
        }
    }
}
