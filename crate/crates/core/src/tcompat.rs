//! T-compatibility: the canonical forest Φ, the membership check that
//! decides compatibility, T-shapedness and forest insertion.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::forest::{ForestLabel, LabelledForest};
use crate::hierarchy::{min_t, BaseTypeRef, Hierarchy};
use crate::normal_form::{nf, tied_relation, NormalForm};
use crate::pretty::pretty_nf;
use crate::term::{Name, Term, TypeExpr};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TcompatError {
    #[error("restriction `{0}` has no type annotation")]
    Unannotated(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiFailureKind {
    /// Two minimal names claim the same active.
    SharedActives { first: String, second: String, actives: Vec<usize> },
    /// Two minimal names claim the same non-minimal name.
    SharedNames { first: String, second: String, names: Vec<String> },
    /// A name scoped under a minimal name does not have a greater base.
    NotAbove { min: String, name: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhiFailure {
    /// Pre-order index of the recursive step over a non-empty binder set.
    pub step: usize,
    /// The normal form at that step; active indexes refer to it.
    pub context: String,
    #[serde(flatten)]
    pub kind: PhiFailureKind,
}

impl std::fmt::Display for PhiFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "step {} on `{}`: ", self.step, self.context)?;
        match &self.kind {
            PhiFailureKind::SharedActives { first, second, actives } => {
                write!(f, "actives {actives:?} are tied to both {first} and {second}")
            }
            PhiFailureKind::SharedNames { first, second, names } => {
                write!(f, "names {} are needed under both {first} and {second}", names.join(", "))
            }
            PhiFailureKind::NotAbove { min, name } => {
                write!(f, "{name} must be scoped under {min} but its base is not greater")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct PhiOutcome {
    pub forest: LabelledForest,
    pub ok: bool,
    pub failure: Option<PhiFailure>,
}

/// Builds the canonical forest of an annotated normal form. The forest is
/// T-compatible in every case; `ok` tells whether it belongs to the
/// congruence class of `n`.
pub fn phi(h: &Hierarchy, n: &NormalForm) -> Result<PhiOutcome, TcompatError> {
    let mut st = PhiState { h, forest: LabelledForest::new(), step: 0, failure: None };
    st.run(n, None)?;
    let ok = st.failure.is_none();
    Ok(PhiOutcome { forest: st.forest, ok, failure: st.failure })
}

struct PhiState<'a> {
    h: &'a Hierarchy,
    forest: LabelledForest,
    step: usize,
    failure: Option<PhiFailure>,
}

impl PhiState<'_> {
    fn fail(&mut self, step: usize, n: &NormalForm, kind: PhiFailureKind) {
        if self.failure.is_none() {
            self.failure = Some(PhiFailure { step, context: pretty_nf(n), kind });
        }
    }

    fn run(&mut self, n: &NormalForm, parent: Option<usize>) -> Result<(), TcompatError> {
        if n.binders.is_empty() {
            for a in &n.actives {
                self.forest.add_leaf(parent, a.clone());
            }
            return Ok(());
        }
        let step = self.step;
        self.step += 1;
        let mut slice = Vec::with_capacity(n.binders.len());
        for b in &n.binders {
            let ty = b.ty.clone().ok_or_else(|| TcompatError::Unannotated(b.name.display().to_string()))?;
            slice.push((b.name.clone(), ty));
        }
        let mut mins = min_t(self.h, &slice);
        mins.sort_by_key(|(x, _)| x.id());
        let min_names: BTreeSet<Name> = mins.iter().map(|(x, _)| x.clone()).collect();
        let rel = tied_relation(n);

        let mut active_owner: Vec<Option<usize>> = vec![None; n.actives.len()];
        let mut name_owner: BTreeMap<Name, usize> = BTreeMap::new();
        let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for (k, (x, tx)) in mins.iter().enumerate() {
            let ix = rel.tied_to_name(x);
            let mut own_actives = Vec::new();
            let mut shared = BTreeMap::<usize, Vec<usize>>::new();
            for &i in &ix {
                match active_owner[i] {
                    Some(o) => shared.entry(o).or_default().push(i),
                    None => {
                        active_owner[i] = Some(k);
                        own_actives.push(i);
                    }
                }
            }
            for (o, actives) in shared {
                let kind = PhiFailureKind::SharedActives {
                    first: mins[o].0.display().to_string(),
                    second: x.display().to_string(),
                    actives,
                };
                self.fail(step, n, kind);
            }
            let mut own_names = Vec::new();
            let mut shared = BTreeMap::<usize, Vec<String>>::new();
            for (bi, (y, ty)) in slice.iter().enumerate() {
                if min_names.contains(y) || !ix.iter().any(|&i| rel.free_names_of(i).contains(y)) {
                    continue;
                }
                if let Some(&o) = name_owner.get(y) {
                    shared.entry(o).or_default().push(y.display().to_string());
                } else if !self.h.lt(tx.base(), ty.base()) {
                    let kind = PhiFailureKind::NotAbove { min: x.display().to_string(), name: y.display().to_string() };
                    self.fail(step, n, kind);
                } else {
                    name_owner.insert(y.clone(), k);
                    own_names.push(bi);
                }
            }
            for (o, names) in shared {
                let kind = PhiFailureKind::SharedNames {
                    first: mins[o].0.display().to_string(),
                    second: x.display().to_string(),
                    names,
                };
                self.fail(step, n, kind);
            }
            groups.push((own_names, own_actives));
        }

        for ((x, tx), (names, actives)) in mins.iter().zip(&groups) {
            let node = self.forest.add_name(parent, x.clone(), Some(tx.base().clone()));
            self.run(&n.restrict_to(names, actives), Some(node))?;
        }
        let z: Vec<usize> = (0..slice.len())
            .filter(|&bi| !min_names.contains(&slice[bi].0) && !name_owner.contains_key(&slice[bi].0))
            .collect();
        let r: Vec<usize> = (0..n.actives.len()).filter(|&i| active_owner[i].is_none()).collect();
        self.run(&n.restrict_to(&z, &r), parent)
    }
}

pub fn is_tcompat(h: &Hierarchy, t: &Term) -> Result<bool, TcompatError> {
    Ok(phi(h, &nf(t))?.ok)
}

pub fn is_tcompat_nf(h: &Hierarchy, n: &NormalForm) -> Result<bool, TcompatError> {
    Ok(phi(h, n)?.ok)
}

/// The first subterm found not T-compatible.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TshapeFailure {
    pub subterm: String,
    pub failure: PhiFailure,
}

impl std::fmt::Display for TshapeFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "subterm `{}` is not T-compatible: {}", self.subterm, self.failure)
    }
}

pub fn is_tshaped(h: &Hierarchy, t: &Term) -> Result<bool, TcompatError> {
    Ok(tshape_failure(h, t)?.is_none())
}

pub fn tshape_failure(h: &Hierarchy, t: &Term) -> Result<Option<TshapeFailure>, TcompatError> {
    tshape_failure_nf(h, &nf(t))
}

/// Checks the normal form and, recursively, every prefix continuation.
pub fn tshape_failure_nf(h: &Hierarchy, n: &NormalForm) -> Result<Option<TshapeFailure>, TcompatError> {
    let out = phi(h, n)?;
    if let Some(failure) = out.failure {
        return Ok(Some(TshapeFailure { subterm: pretty_nf(n), failure }));
    }
    for a in &n.actives {
        for b in &a.branches {
            if let Some(f) = tshape_failure_nf(h, &b.cont)? {
                return Ok(Some(f));
            }
        }
    }
    Ok(None)
}

/// Inserts the trees of `r` into `f`. A name root goes under the deepest
/// node of `path` whose base is below its own; a leaf root goes under the
/// deepest node of `path` whose name is free in it. Roots without such a
/// node stay roots. `path` is a root-first list of node indexes of `f`.
pub fn ins(f: &LabelledForest, path: &[usize], r: &LabelledForest, h: &Hierarchy) -> LabelledForest {
    let mut out = f.clone();
    let anchor = |label: &ForestLabel| -> Option<usize> {
        path.iter().rev().copied().find(|&m| match (&f.node(m).label, label) {
            (ForestLabel::Name { base: Some(tm), .. }, ForestLabel::Name { base: Some(ty), .. }) => h.lt(tm, ty),
            (ForestLabel::Name { name, .. }, ForestLabel::Leaf(s)) => s.free_names().contains(name),
            _ => false,
        })
    };
    let offset = out.graft(r, None);
    for root in r.roots() {
        let at = anchor(&r.node(root).label);
        out.set_parent(root + offset, at);
    }
    out
}

/// Gives every unannotated restriction of `t` its own base type, named
/// after the binder, and returns the discrete hierarchy over those bases
/// together with the bases already used by annotations.
pub fn discrete_annotation(t: &Term) -> (Hierarchy, Term) {
    let mut used = BTreeSet::new();
    let mut bases: BTreeSet<BaseTypeRef> = BTreeSet::new();
    let mut ann = BTreeMap::new();
    for (x, ty) in t.restriction_names() {
        match ty {
            Some(ty) => bases.extend(ty.bases()),
            None => {
                let b = BaseTypeRef::named(&format!("_{}", crate::term::unique_display(x.display(), &mut used)));
                bases.insert(b.clone());
                ann.insert(x, TypeExpr::only(b));
            }
        }
    }
    (Hierarchy::discrete(bases), t.annotate(&ann))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::enumerate_congruent_forests;
    use crate::parser::parse;

    fn h(src: &str) -> Hierarchy {
        Hierarchy::parse(src).unwrap()
    }

    fn exists_compatible(h: &Hierarchy, n: &NormalForm) -> bool {
        enumerate_congruent_forests(n, 1 << 22).unwrap().any(|f| f.is_tcompatible(h))
    }

    #[test]
    fn linked_names_phi_nests_two_levels() {
        let t = parse("new a : a. new b : b. new c : c. (a(x) | b(x) | c(x) | a<b>)").unwrap();
        let n = nf(&t);
        let out = phi(&h("a < b\nc"), &n).unwrap();
        assert!(out.ok);
        let f = &out.forest;
        let ids: Vec<_> = n.binder_names();
        let mut e = LabelledForest::new();
        let ra = e.add_name(None, ids[0].clone(), Some(BaseTypeRef::named("a")));
        e.add_leaf(Some(ra), n.actives[0].clone());
        let rb = e.add_name(Some(ra), ids[1].clone(), Some(BaseTypeRef::named("b")));
        e.add_leaf(Some(rb), n.actives[1].clone());
        e.add_leaf(Some(rb), n.actives[3].clone());
        let rc = e.add_name(None, ids[2].clone(), Some(BaseTypeRef::named("c")));
        e.add_leaf(Some(rc), n.actives[2].clone());
        assert!(f.isomorphic(&e), "{}", f.to_text());
        assert!(f.is_tcompatible(&h("a < b\nc")));
    }

    #[test]
    fn zero_is_trivially_compatible() {
        let out = phi(&h("a"), &NormalForm::default()).unwrap();
        assert!(out.ok && out.forest.is_empty());
    }

    #[test]
    fn shared_actives_fail() {
        let t = parse("new x : a. new y : b. (x<v> | y<v> | x<y>)").unwrap();
        let hier = h("a\nb");
        let n = nf(&t);
        let out = phi(&hier, &n).unwrap();
        assert!(!out.ok);
        assert!(matches!(out.failure.unwrap().kind, PhiFailureKind::SharedActives { .. }));
        assert!(out.forest.is_tcompatible(&hier));
        assert!(!exists_compatible(&hier, &n));
    }

    #[test]
    fn names_not_above_their_minimum_stay_compatible() {
        let hier = h("a < b\nd < e");
        let n = nf(&parse("new a : a. new d : d. new e : e. (a<e> | d<v>)").unwrap());
        let out = phi(&hier, &n).unwrap();
        assert!(!out.ok);
        assert!(out.forest.is_tcompatible(&hier));
        assert!(!exists_compatible(&hier, &n));
    }

    #[test]
    fn client_server_is_tshaped() {
        let t = parse(
            "new s : s[m[d]]. new c : c[m[d]]. (!s(x).(new d : d. x<d>) | !c(m).(s<m> | m(y).c<m>) | !tau.new m : m[d]. c<m>)",
        )
        .unwrap();
        let hier = h("s < c < m < d");
        assert!(is_tshaped(&hier, &t).unwrap());
        assert!(is_tcompat(&hier, &t).unwrap());
    }

    #[test]
    fn qijk_are_compatible() {
        let hier = h("s < c < m < d");
        let t = parse(
            "new s : s. new c : c. (!s(x).(new d : d. x<d>) | !c(m).(s<m> | m(y).c<m>) | (!tau.new m : m. c<m>) \
             | (new m : m. c<m>) | (new m : m. (s<m> | m(y).c<m>)) | (new m : m. ((new d : d. m<d>) | m(y).c<m>)))",
        )
        .unwrap();
        assert!(is_tcompat(&hier, &t).unwrap());
        assert!(is_tshaped(&hier, &t).unwrap());
    }

    #[test]
    fn incompatible_under_prefix() {
        let hier = h("a\nb");
        let t = parse("tau.new x : a. new y : b. (x<v> | y<v> | x<y>)").unwrap();
        assert!(is_tcompat(&hier, &t).unwrap());
        assert!(!is_tshaped(&hier, &t).unwrap());
        let fail = tshape_failure(&hier, &t).unwrap().unwrap();
        assert!(fail.subterm.contains("new"));
        assert!(is_tshaped(&hier, &Term::Nil).unwrap());
    }

    #[test]
    fn single_restriction_is_compatible() {
        let t = parse("new x : a. (x<y> | x(z).z<x>)").unwrap();
        assert!(is_tcompat(&h("a"), &t).unwrap());
    }

    #[test]
    fn unannotated_is_an_error() {
        let t = parse("new x. x<y>").unwrap();
        assert!(matches!(is_tcompat(&h("a"), &t), Err(TcompatError::Unannotated(_))));
        let (hier, ann) = discrete_annotation(&t);
        assert!(is_tcompat(&hier, &ann).unwrap());
    }

    #[test]
    fn ins_into_empty_keeps_forest() {
        let t = parse("new a : a. new b : b. (a<b> | b(x))").unwrap();
        let f = crate::forest::forest_of(&t);
        let g = ins(&f, &f.path_to(0), &LabelledForest::new(), &h("a < b"));
        assert!(g.isomorphic(&f));
    }

    #[test]
    fn ins_places_near_root() {
        // the non-migrating continuation of the server reaction
        let hier = h("b < a < t");
        let t = parse("new a : a[t]. new b : b[t]. new c : t. (!a(x).(new d : t. (a<d> | b<x>)) | a<c>)").unwrap();
        let n = nf(&t);
        let out = phi(&hier, &n).unwrap();
        assert!(out.ok);
        let f = out.forest;
        // path to the sender leaf a<c>
        let sender = f
            .leaves()
            .into_iter()
            .find(|&i| matches!(&f.node(i).label, ForestLabel::Leaf(s) if !s.replicated))
            .unwrap();
        let path: Vec<usize> = f.path_to(sender).into_iter().filter(|&i| f.name_of(i).is_some()).collect();
        let names: Vec<&str> = path.iter().map(|&i| f.name_of(i).unwrap().display()).collect();
        assert_eq!(names, ["b", "a", "c"]);
        let d = Name::fresh("d");
        let mut r = LabelledForest::new();
        let rd = r.add_name(None, d.clone(), Some(BaseTypeRef::named("t")));
        let a_name = f.name_of(path[1]).unwrap().clone();
        let cont = nf(&Term::prefixed(crate::term::Prefix::Output { chan: a_name, msg: d }, Term::Nil));
        r.add_leaf(Some(rd), cont.actives[0].clone());
        let g = ins(&f, &path, &r, &hier);
        assert!(g.is_tcompatible(&hier));
        // d lands under a, not under c
        let dn = g.len() - 2;
        assert_eq!(g.node(dn).parent, Some(path[1]));
    }
}
