//! Abstract syntax of (optionally annotated) π-terms.
//!
//! Names carry a process-wide unique id and a display string. Free names
//! written in source text are interned by display, so two parses of `a<b>`
//! talk about the same `a` and `b`; every binder gets a fresh id.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::hierarchy::BaseTypeRef;

static NEXT_NAME: AtomicU64 = AtomicU64::new(1);

fn name_interner() -> &'static Mutex<HashMap<Arc<str>, Name>> {
    static INTERNER: OnceLock<Mutex<HashMap<Arc<str>, Name>>> = OnceLock::new();
    INTERNER.get_or_init(|| Mutex::new(HashMap::new()))
}

#[derive(Clone)]
pub struct Name {
    id: u64,
    display: Arc<str>,
}

impl Name {
    /// A name never seen before.
    pub fn fresh(display: &str) -> Name {
        Name { id: NEXT_NAME.fetch_add(1, Ordering::Relaxed), display: Arc::from(display) }
    }

    /// The global name with this display, used for free names of source text.
    pub fn global(display: &str) -> Name {
        let mut table = name_interner().lock().expect("name interner poisoned");
        if let Some(n) = table.get(display) {
            return n.clone();
        }
        let n = Name::fresh(display);
        table.insert(n.display.clone(), n.clone());
        n
    }

    /// A fresh name with the same display.
    pub fn refresh(&self) -> Name {
        Name { id: NEXT_NAME.fetch_add(1, Ordering::Relaxed), display: self.display.clone() }
    }

    pub fn with_display(&self, display: &str) -> Name {
        Name { id: self.id, display: Arc::from(display) }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn display(&self) -> &str {
        &self.display
    }
}

impl PartialEq for Name {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Name {}
impl std::hash::Hash for Name {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}
impl PartialOrd for Name {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Name {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}
impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.display, self.id)
    }
}
impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display)
    }
}

/// `t` or `t[τ]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum TypeExpr {
    BaseOnly(BaseTypeRef),
    Channel(BaseTypeRef, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn only(b: BaseTypeRef) -> TypeExpr {
        TypeExpr::BaseOnly(b)
    }

    pub fn channel(b: BaseTypeRef, payload: TypeExpr) -> TypeExpr {
        TypeExpr::Channel(b, Box::new(payload))
    }

    pub fn base(&self) -> &BaseTypeRef {
        match self {
            TypeExpr::BaseOnly(b) | TypeExpr::Channel(b, _) => b,
        }
    }

    pub fn payload(&self) -> Option<&TypeExpr> {
        match self {
            TypeExpr::BaseOnly(_) => None,
            TypeExpr::Channel(_, p) => Some(p),
        }
    }

    /// Every base occurring in the type, outermost first.
    pub fn bases(&self) -> Vec<BaseTypeRef> {
        let mut out = vec![self.base().clone()];
        let mut cur = self;
        while let Some(p) = cur.payload() {
            out.push(p.base().clone());
            cur = p;
        }
        out
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::BaseOnly(b) => write!(f, "{b}"),
            TypeExpr::Channel(b, p) => write!(f, "{b}[{p}]"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Prefix {
    Input { chan: Name, var: Name },
    Output { chan: Name, msg: Name },
    Tau,
}

impl Prefix {
    pub fn channel(&self) -> Option<&Name> {
        match self {
            Prefix::Input { chan, .. } | Prefix::Output { chan, .. } => Some(chan),
            Prefix::Tau => None,
        }
    }

    /// Names the prefix uses freely (its bound input variable excluded).
    pub fn free_names(&self) -> Vec<&Name> {
        match self {
            Prefix::Input { chan, .. } => vec![chan],
            Prefix::Output { chan, msg } => vec![chan, msg],
            Prefix::Tau => vec![],
        }
    }

    pub fn bound_var(&self) -> Option<&Name> {
        match self {
            Prefix::Input { var, .. } => Some(var),
            _ => None,
        }
    }

    fn rename_free(&self, s: &Substitution) -> Prefix {
        match self {
            Prefix::Input { chan, var } => Prefix::Input { chan: s.apply(chan), var: var.clone() },
            Prefix::Output { chan, msg } => Prefix::Output { chan: s.apply(chan), msg: s.apply(msg) },
            Prefix::Tau => Prefix::Tau,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Branch {
    pub prefix: Prefix,
    pub cont: Term,
}

impl Branch {
    pub fn new(prefix: Prefix, cont: Term) -> Branch {
        Branch { prefix, cont }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub enum Term {
    #[default]
    Nil,
    Restrict {
        name: Name,
        ty: Option<TypeExpr>,
        body: Box<Term>,
    },
    Par(Box<Term>, Box<Term>),
    Choice(Vec<Branch>),
    Repl(Vec<Branch>),
}

/// A finite renaming of names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(BTreeMap<Name, Name>);

impl Substitution {
    pub fn new() -> Substitution {
        Substitution(BTreeMap::new())
    }

    pub fn single(from: Name, to: Name) -> Substitution {
        let mut s = Substitution::new();
        s.insert(from, to);
        s
    }

    pub fn insert(&mut self, from: Name, to: Name) {
        self.0.insert(from, to);
    }

    pub fn apply(&self, n: &Name) -> Name {
        self.0.get(n).cloned().unwrap_or_else(|| n.clone())
    }

    pub fn get(&self, n: &Name) -> Option<&Name> {
        self.0.get(n)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Name)> {
        self.0.iter()
    }

    fn without(&self, n: &Name) -> Substitution {
        let mut s = self.clone();
        s.0.remove(n);
        s
    }

    fn hits_range(&self, n: &Name) -> bool {
        self.0.values().any(|v| v == n)
    }
}

impl FromIterator<(Name, Name)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Name, Name)>>(iter: I) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

impl Term {
    pub fn restrict(name: Name, ty: Option<TypeExpr>, body: Term) -> Term {
        Term::Restrict { name, ty, body: Box::new(body) }
    }

    pub fn par(left: Term, right: Term) -> Term {
        Term::Par(Box::new(left), Box::new(right))
    }

    /// Right-nested parallel composition; `Nil` for an empty list.
    pub fn par_all(terms: impl IntoIterator<Item = Term>) -> Term {
        let mut items: Vec<Term> = terms.into_iter().collect();
        let Some(mut acc) = items.pop() else { return Term::Nil };
        while let Some(t) = items.pop() {
            acc = Term::par(t, acc);
        }
        acc
    }

    pub fn prefixed(prefix: Prefix, cont: Term) -> Term {
        Term::Choice(vec![Branch::new(prefix, cont)])
    }

    pub fn is_sequential(&self) -> bool {
        matches!(self, Term::Choice(_) | Term::Repl(_))
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Term::Nil => {}
            Term::Restrict { name, body, .. } => {
                bound.push(name.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Term::Par(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            Term::Choice(bs) | Term::Repl(bs) => {
                for b in bs {
                    for n in b.prefix.free_names() {
                        if !bound.contains(n) {
                            out.insert(n.clone());
                        }
                    }
                    let pushed = b.prefix.bound_var().cloned();
                    if let Some(v) = &pushed {
                        bound.push(v.clone());
                    }
                    b.cont.collect_free(bound, out);
                    if pushed.is_some() {
                        bound.pop();
                    }
                }
            }
        }
    }

    /// Restriction binders and input variables.
    pub fn bound_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit_binders(&mut |n, _| {
            out.insert(n.clone());
        });
        out
    }

    /// All restriction binders (active or not) with their annotations, in
    /// syntactic order.
    pub fn restriction_names(&self) -> Vec<(Name, Option<TypeExpr>)> {
        let mut out = Vec::new();
        self.visit_binders(&mut |n, ty| {
            if let Some(ty) = ty {
                out.push((n.clone(), ty.cloned()));
            }
        });
        out
    }

    /// Visits every binder; restrictions report `Some(annotation)`, input
    /// variables report `None`.
    fn visit_binders(&self, f: &mut dyn FnMut(&Name, Option<Option<&TypeExpr>>)) {
        match self {
            Term::Nil => {}
            Term::Restrict { name, ty, body } => {
                f(name, Some(ty.as_ref()));
                body.visit_binders(f);
            }
            Term::Par(l, r) => {
                l.visit_binders(f);
                r.visit_binders(f);
            }
            Term::Choice(bs) | Term::Repl(bs) => {
                for b in bs {
                    if let Some(v) = b.prefix.bound_var() {
                        f(v, None);
                    }
                    b.cont.visit_binders(f);
                }
            }
        }
    }

    pub fn active_restrictions(&self) -> Vec<(Name, Option<TypeExpr>)> {
        let mut out = Vec::new();
        self.visit_active(&mut |t| {
            if let Term::Restrict { name, ty, .. } = t {
                out.push((name.clone(), ty.clone()));
            }
        });
        out
    }

    pub fn active_sequentials(&self) -> Vec<Term> {
        let mut out = Vec::new();
        self.visit_active(&mut |t| {
            if t.is_sequential() {
                out.push(t.clone());
            }
        });
        out
    }

    fn visit_active(&self, f: &mut dyn FnMut(&Term)) {
        f(self);
        match self {
            Term::Restrict { body, .. } => body.visit_active(f),
            Term::Par(l, r) => {
                l.visit_active(f);
                r.visit_active(f);
            }
            _ => {}
        }
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Nil => 1,
            Term::Restrict { body, .. } => 1 + body.size(),
            Term::Par(l, r) => 1 + l.size() + r.size(),
            Term::Choice(bs) | Term::Repl(bs) => 1 + bs.iter().map(|b| 1 + b.cont.size()).sum::<usize>(),
        }
    }

    /// Capture-avoiding substitution. Annotations are left untouched.
    pub fn substitute(&self, s: &Substitution) -> Term {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Term::Nil => Term::Nil,
            Term::Par(l, r) => Term::par(l.substitute(s), r.substitute(s)),
            Term::Restrict { name, ty, body } => {
                let (name, body) = subst_under_binder(name, body, s);
                Term::Restrict { name, ty: ty.clone(), body: Box::new(body) }
            }
            Term::Choice(bs) => Term::Choice(bs.iter().map(|b| subst_branch(b, s)).collect()),
            Term::Repl(bs) => Term::Repl(bs.iter().map(|b| subst_branch(b, s)).collect()),
        }
    }

    /// Renames every binder to a fresh name. Displays are made unique across
    /// the term (free names keep theirs); the renaming is returned.
    pub fn alpha_rename_fresh(&self) -> (Term, Substitution) {
        let mut used: BTreeSet<String> = self.free_names().iter().map(|n| n.display().to_string()).collect();
        let mut renaming = Substitution::new();
        let t = self.fresh_rec(&Substitution::new(), &mut used, &mut renaming);
        (t, renaming)
    }

    fn fresh_rec(&self, env: &Substitution, used: &mut BTreeSet<String>, out: &mut Substitution) -> Term {
        match self {
            Term::Nil => Term::Nil,
            Term::Par(l, r) => {
                let l = l.fresh_rec(env, used, out);
                Term::par(l, r.fresh_rec(env, used, out))
            }
            Term::Restrict { name, ty, body } => {
                let fresh = Name::fresh(&unique_display(name.display(), used));
                out.insert(name.clone(), fresh.clone());
                let mut inner = env.clone();
                inner.insert(name.clone(), fresh.clone());
                Term::Restrict { name: fresh, ty: ty.clone(), body: Box::new(body.fresh_rec(&inner, used, out)) }
            }
            Term::Choice(bs) | Term::Repl(bs) => {
                let bs = bs
                    .iter()
                    .map(|b| match &b.prefix {
                        Prefix::Input { chan, var } => {
                            let fresh = Name::fresh(&unique_display(var.display(), used));
                            out.insert(var.clone(), fresh.clone());
                            let mut inner = env.clone();
                            inner.insert(var.clone(), fresh.clone());
                            Branch::new(
                                Prefix::Input { chan: env.apply(chan), var: fresh },
                                b.cont.fresh_rec(&inner, used, out),
                            )
                        }
                        p => Branch::new(p.rename_free(env), b.cont.fresh_rec(env, used, out)),
                    })
                    .collect();
                if matches!(self, Term::Repl(_)) {
                    Term::Repl(bs)
                } else {
                    Term::Choice(bs)
                }
            }
        }
    }

    /// Structural equality up to consistent renaming of bound names.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        alpha_eq_rec(self, other, &mut Vec::new())
    }

    /// Checks the name-uniqueness convention: no name bound twice and no
    /// name both free and bound.
    pub fn is_name_unique(&self) -> bool {
        let free = self.free_names();
        let mut seen = BTreeSet::new();
        let mut ok = true;
        self.visit_binders(&mut |n, _| {
            if free.contains(n) || !seen.insert(n.clone()) {
                ok = false;
            }
        });
        ok
    }

    /// Drops every annotation.
    pub fn strip_annotations(&self) -> Term {
        self.map_annotations(&|_, _| None)
    }

    /// Replaces annotations: `f(name, current)` gives the new one.
    pub fn map_annotations(&self, f: &dyn Fn(&Name, Option<&TypeExpr>) -> Option<TypeExpr>) -> Term {
        match self {
            Term::Nil => Term::Nil,
            Term::Par(l, r) => Term::par(l.map_annotations(f), r.map_annotations(f)),
            Term::Restrict { name, ty, body } => {
                Term::Restrict { name: name.clone(), ty: f(name, ty.as_ref()), body: Box::new(body.map_annotations(f)) }
            }
            Term::Choice(bs) => Term::Choice(map_branches(bs, f)),
            Term::Repl(bs) => Term::Repl(map_branches(bs, f)),
        }
    }

    /// Installs annotations from a map, keeping existing ones for names the
    /// map does not mention.
    pub fn annotate(&self, ann: &BTreeMap<Name, TypeExpr>) -> Term {
        self.map_annotations(&|n, cur| ann.get(n).cloned().or_else(|| cur.cloned()))
    }

    pub fn is_fully_annotated(&self) -> bool {
        self.restriction_names().iter().all(|(_, t)| t.is_some())
    }
}

fn map_branches(bs: &[Branch], f: &dyn Fn(&Name, Option<&TypeExpr>) -> Option<TypeExpr>) -> Vec<Branch> {
    bs.iter().map(|b| Branch::new(b.prefix.clone(), b.cont.map_annotations(f))).collect()
}

/// `display` if unused, else `display1`, `display2`, ...
pub(crate) fn unique_display(display: &str, used: &mut BTreeSet<String>) -> String {
    if used.insert(display.to_string()) {
        return display.to_string();
    }
    let mut k = 1;
    loop {
        let cand = format!("{display}{k}");
        if used.insert(cand.clone()) {
            return cand;
        }
        k += 1;
    }
}

fn subst_under_binder(binder: &Name, body: &Term, s: &Substitution) -> (Name, Term) {
    let inner = s.without(binder);
    if inner.is_empty() {
        return (binder.clone(), body.clone());
    }
    if inner.hits_range(binder) {
        let fresh = binder.refresh();
        let renamed = body.substitute(&Substitution::single(binder.clone(), fresh.clone()));
        (fresh, renamed.substitute(&inner))
    } else {
        (binder.clone(), body.substitute(&inner))
    }
}

fn subst_branch(b: &Branch, s: &Substitution) -> Branch {
    match &b.prefix {
        Prefix::Input { chan, var } => {
            let (var, cont) = subst_under_binder(var, &b.cont, s);
            Branch::new(Prefix::Input { chan: s.apply(chan), var }, cont)
        }
        p => Branch::new(p.rename_free(s), b.cont.substitute(s)),
    }
}

fn alpha_eq_rec(a: &Term, b: &Term, bound: &mut Vec<(Name, Name)>) -> bool {
    match (a, b) {
        (Term::Nil, Term::Nil) => true,
        (Term::Par(l1, r1), Term::Par(l2, r2)) => alpha_eq_rec(l1, l2, bound) && alpha_eq_rec(r1, r2, bound),
        (Term::Restrict { name: n1, ty: t1, body: b1 }, Term::Restrict { name: n2, ty: t2, body: b2 }) => {
            if t1 != t2 {
                return false;
            }
            bound.push((n1.clone(), n2.clone()));
            let ok = alpha_eq_rec(b1, b2, bound);
            bound.pop();
            ok
        }
        (Term::Choice(x), Term::Choice(y)) | (Term::Repl(x), Term::Repl(y)) => {
            x.len() == y.len()
                && x.iter().zip(y).all(|(p, q)| match (&p.prefix, &q.prefix) {
                    (Prefix::Tau, Prefix::Tau) => alpha_eq_rec(&p.cont, &q.cont, bound),
                    (Prefix::Output { chan: c1, msg: m1 }, Prefix::Output { chan: c2, msg: m2 }) => {
                        same_name(c1, c2, bound) && same_name(m1, m2, bound) && alpha_eq_rec(&p.cont, &q.cont, bound)
                    }
                    (Prefix::Input { chan: c1, var: v1 }, Prefix::Input { chan: c2, var: v2 }) => {
                        if !same_name(c1, c2, bound) {
                            return false;
                        }
                        bound.push((v1.clone(), v2.clone()));
                        let ok = alpha_eq_rec(&p.cont, &q.cont, bound);
                        bound.pop();
                        ok
                    }
                    _ => false,
                })
        }
        _ => false,
    }
}

fn same_name(a: &Name, b: &Name, bound: &[(Name, Name)]) -> bool {
    for (x, y) in bound.iter().rev() {
        if x == a || y == b {
            return x == a && y == b;
        }
    }
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn n(s: &str) -> Name {
        Name::global(s)
    }

    #[test]
    fn free_names_of_output() {
        let t = Term::prefixed(Prefix::Output { chan: n("a"), msg: n("b") }, Term::Nil);
        assert_eq!(t.free_names(), [n("a"), n("b")].into_iter().collect());
    }

    #[test]
    fn active_restrictions_in_binding_order() {
        let t = parse("new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | !tau.new m. c<m>)").unwrap();
        let names: Vec<String> = t.active_restrictions().iter().map(|(x, _)| x.display().to_string()).collect();
        assert_eq!(names, ["s", "c"]);
        assert_eq!(t.active_sequentials().len(), 3);
    }

    #[test]
    fn substitution_examples() {
        let x = Name::fresh("x");
        let t = Term::prefixed(Prefix::Output { chan: x.clone(), msg: n("c") }, Term::Nil);
        let u = t.substitute(&Substitution::single(x, n("b")));
        assert_eq!(u, Term::prefixed(Prefix::Output { chan: n("b"), msg: n("c") }, Term::Nil));
        assert_eq!(t.substitute(&Substitution::single(n("zz"), n("b"))), t);
    }

    #[test]
    fn substitution_avoids_capture() {
        // x(y).y<x>, substitute x -> y where y is the global free y
        let y_bound = Name::fresh("y");
        let x = n("x");
        let t = Term::prefixed(
            Prefix::Input { chan: x.clone(), var: y_bound.clone() },
            Term::prefixed(Prefix::Output { chan: y_bound.clone(), msg: x.clone() }, Term::Nil),
        );
        let s = Substitution::single(x, y_bound.clone());
        let got = t.substitute(&s);
        // oracle: rename the binder first, then substitute naively
        let z = Name::fresh("z");
        let expect = Term::prefixed(
            Prefix::Input { chan: y_bound.clone(), var: z.clone() },
            Term::prefixed(Prefix::Output { chan: z, msg: y_bound }, Term::Nil),
        );
        assert!(got.alpha_eq(&expect), "{got:?}");
    }

    #[test]
    fn fresh_renaming_disambiguates() {
        let x1 = Name::fresh("x");
        let x2 = Name::fresh("x");
        let t = Term::par(
            Term::restrict(x1.clone(), None, Term::prefixed(Prefix::Output { chan: x1, msg: n("a") }, Term::Nil)),
            Term::restrict(x2.clone(), None, Term::prefixed(Prefix::Output { chan: x2, msg: n("a") }, Term::Nil)),
        );
        let (u, ren) = t.alpha_rename_fresh();
        let displays: Vec<String> = u.active_restrictions().iter().map(|(x, _)| x.display().to_string()).collect();
        assert_eq!(displays, ["x", "x1"]);
        assert_eq!(ren.len(), 2);
        assert!(u.alpha_eq(&t));
        let (v, _) = u.alpha_rename_fresh();
        assert!(v.alpha_eq(&u));
        assert_eq!(format!("{}", crate::pretty::pretty(&v)), format!("{}", crate::pretty::pretty(&u)));
        assert_eq!(Term::Nil.alpha_rename_fresh(), (Term::Nil, Substitution::new()));
    }

    #[test]
    fn name_uniqueness_check() {
        let x = Name::fresh("x");
        let bad = Term::par(Term::restrict(x.clone(), None, Term::Nil), Term::restrict(x, None, Term::Nil));
        assert!(!bad.is_name_unique());
        assert!(bad.alpha_rename_fresh().0.is_name_unique());
    }
}
