//! Inference of a hierarchy, annotations and an environment for a plain
//! term.
//!
//! Constraints are generated by a symbolic run of the checker, the dataflow
//! part is unified, and the order part is solved for a chain of base types.
//! Each candidate chain is accepted only if the annotated term is T-shaped
//! under it. A successful result is re-checked with the type checker and the
//! P-safety test before it is returned.

mod constraints;
mod solve;
mod unify;

pub use constraints::{generate_constraints, Atom, Clause, ClauseSource, ConstraintSet, Dataflow};
pub use solve::{solve_order, solve_order_with, unsat_core, SolveOutcome, UnsatCore};
pub use unify::{unify_dataflow, OccursFailure, Solved};

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;

use crate::hierarchy::{p_safe, BaseTypeRef, Hierarchy, TypeEnv};
use crate::tcompat::tshape_failure;
use crate::term::{Name, Term, TypeExpr};
use crate::typing::{typecheck_term, Violation};

pub const DEFAULT_MAX_BACKTRACKS: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InferOptions {
    pub max_backtracks: u64,
}

impl Default for InferOptions {
    fn default() -> Self {
        InferOptions { max_backtracks: DEFAULT_MAX_BACKTRACKS }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceStatus {
    Ok,
    Unsat,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InferenceFailure {
    /// A name would need a recursive type.
    Occurs(OccursFailure),
    /// The order clauses admit no chain.
    Cycle {
        atoms: Vec<String>,
        clauses: Vec<String>,
        merged: Vec<(String, Vec<String>)>,
    },
    /// Chains exist but the term is T-shaped under none of them.
    NotTShaped {
        candidates: u64,
        last: String,
    },
    Inconclusive {
        backtracks: u64,
    },
    /// Internal: a found solution failed re-validation.
    SelfCheck {
        violations: Vec<Violation>,
        safe: bool,
    },
}

impl std::fmt::Display for InferenceFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InferenceFailure::Occurs(o) => {
                write!(f, "occurs check: {} from `{}`; cycle through {}", o.equation, o.origin, o.cycle.join(" -> "))
            }
            InferenceFailure::Cycle { atoms, clauses, merged } => {
                writeln!(f, "order constraints are cyclic: {}", atoms.join(", "))?;
                for c in clauses {
                    writeln!(f, "  clause {c}")?;
                }
                for (v, names) in merged {
                    writeln!(f, "  {v} is shared by {}", names.join(", "))?;
                }
                Ok(())
            }
            InferenceFailure::NotTShaped { candidates, last } => {
                write!(f, "no chain keeps the term T-shaped ({candidates} candidates); last: {last}")
            }
            InferenceFailure::Inconclusive { backtracks } => {
                write!(f, "search budget exhausted after {backtracks} steps")
            }
            InferenceFailure::SelfCheck { violations, safe } => {
                write!(f, "internal: solution failed re-validation (safe: {safe})")?;
                for v in violations {
                    write!(f, "\n  {v}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct InferenceResult {
    pub ok: bool,
    pub status: InferenceStatus,
    /// A chain; empty on failure.
    pub hierarchy: Hierarchy,
    /// Types of the restricted names.
    pub annotation: BTreeMap<Name, TypeExpr>,
    /// Types of the free names.
    pub env: TypeEnv,
    /// The input with the inferred annotations installed (alpha-renamed
    /// first if it was not name-unique).
    pub term: Term,
    pub constraints: ConstraintSet,
    pub failure: Option<InferenceFailure>,
}

impl InferenceResult {
    pub fn to_json(&self) -> serde_json::Value {
        let label = |x: &Name| {
            self.constraints.index_of(x).map_or_else(|| x.display().to_string(), |i| self.constraints.labels[i].clone())
        };
        let annotations: BTreeMap<String, String> =
            self.annotation.iter().map(|(x, t)| (label(x), t.to_string())).collect();
        let env: BTreeMap<String, String> = self.env.iter().map(|(x, t)| (label(x), t.to_string())).collect();
        json!({
            "status": self.status,
            "hierarchy": self.hierarchy.to_json(),
            "annotations": annotations,
            "env": env,
            "constraints": self.constraints.to_json(),
            "core": self.failure,
        })
    }
}

pub fn infer(t: &Term) -> InferenceResult {
    infer_with(t, InferOptions::default())
}

pub fn infer_with(t: &Term, opts: InferOptions) -> InferenceResult {
    let mut t = t.strip_annotations();
    if !t.is_name_unique() {
        t = t.alpha_rename_fresh().0;
    }
    let c = generate_constraints(&t);
    let fail = |c: ConstraintSet, t: Term, status, f| InferenceResult {
        ok: false,
        status,
        hierarchy: Hierarchy::default(),
        annotation: BTreeMap::new(),
        env: TypeEnv::new(),
        term: t,
        constraints: c,
        failure: Some(f),
    };
    let solved = match unify_dataflow(&c) {
        Ok(s) => s,
        Err(e) => return fail(c, t, InferenceStatus::Unsat, InferenceFailure::Occurs(e)),
    };
    let classes = solved.classes();
    let base: BTreeMap<usize, BaseTypeRef> = classes.iter().map(|&r| (r, BaseTypeRef::named(&c.base_var(r)))).collect();
    let ty = |i: usize| ground(&solved, &base, solved.rep(i));
    let annotation: BTreeMap<Name, TypeExpr> = c.restricted.iter().map(|&i| (c.names[i].clone(), ty(i))).collect();
    let env: TypeEnv = c.free.iter().map(|&i| (c.names[i].clone(), ty(i))).collect();
    let annotated = t.annotate(&annotation);

    let clauses: Vec<Vec<Atom>> =
        c.clauses.iter().map(|k| k.atoms.iter().map(|&a| solved.rewrite(a)).collect()).collect();
    let chain_of = |order: &[usize]| Hierarchy::chain(&order.iter().map(|r| base[r].clone()).collect::<Vec<_>>());
    let mut last = None;
    let outcome = solve_order_with(&clauses, &classes, opts.max_backtracks, &mut |order| match tshape_failure(
        &chain_of(order),
        &annotated,
    )
    .expect("every restriction is annotated")
    {
        None => true,
        Some(f) => {
            last = Some(f.to_string());
            false
        }
    });
    let order = match outcome {
        SolveOutcome::Chain(order) => order,
        SolveOutcome::Unsat(core) => {
            let f = InferenceFailure::Cycle {
                atoms: core
                    .cycle
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let w = core.cycle[(k + 1) % core.cycle.len()];
                        format!("{} < {}", c.base_var(v), c.base_var(w))
                    })
                    .collect(),
                clauses: core
                    .clauses
                    .iter()
                    .map(|&j| format!("{}  from {}", c.show_clause(&c.clauses[j]), c.clauses[j].origin))
                    .collect(),
                merged: merged_classes(&c, &solved, &core),
            };
            return fail(c, annotated, InferenceStatus::Unsat, f);
        }
        SolveOutcome::Rejected { candidates } => {
            let f = InferenceFailure::NotTShaped { candidates, last: last.unwrap_or_default() };
            return fail(c, annotated, InferenceStatus::Unsat, f);
        }
        SolveOutcome::Inconclusive { backtracks } => {
            return fail(c, annotated, InferenceStatus::Inconclusive, InferenceFailure::Inconclusive { backtracks });
        }
    };
    let hierarchy = chain_of(&order);
    let report = typecheck_term(&hierarchy, &env, &annotated);
    let safe = p_safe(&hierarchy, &env, &annotated).unwrap_or(false);
    if !report.ok || !safe {
        let f = InferenceFailure::SelfCheck { violations: report.violations, safe };
        return fail(c, annotated, InferenceStatus::Unsat, f);
    }
    InferenceResult {
        ok: true,
        status: InferenceStatus::Ok,
        hierarchy,
        annotation,
        env,
        term: annotated,
        constraints: c,
        failure: None,
    }
}

fn ground(s: &Solved, base: &BTreeMap<usize, BaseTypeRef>, r: usize) -> TypeExpr {
    match s.payload.get(&r) {
        Some(&p) => TypeExpr::channel(base[&r].clone(), ground(s, base, p)),
        None => TypeExpr::only(base[&r].clone()),
    }
}

/// Names sharing a base variable that appears in the core.
fn merged_classes(c: &ConstraintSet, s: &Solved, core: &UnsatCore) -> Vec<(String, Vec<String>)> {
    let mut vars: Vec<usize> =
        core.clauses.iter().flat_map(|&j| c.clauses[j].atoms.iter().flat_map(|a| [s.rep(a.lo), s.rep(a.hi)])).collect();
    vars.sort_unstable();
    vars.dedup();
    vars.into_iter()
        .map(|r| (c.base_var(r), s.members(r)))
        .filter(|(_, m)| m.len() > 1)
        .map(|(v, m)| (v, m.into_iter().map(|i| c.labels[i].clone()).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::tcompat::is_tshaped;

    fn base(r: &InferenceResult, label: &str) -> BaseTypeRef {
        let i = r.constraints.labels.iter().position(|l| l == label).unwrap();
        let x = &r.constraints.names[i];
        r.annotation
            .get(x)
            .or_else(|| r.env.get(x))
            .map(|t| t.base().clone())
            .unwrap_or_else(|| BaseTypeRef::named(&format!("t_{label}")))
    }

    fn check_sound(r: &InferenceResult) {
        assert!(r.ok, "{:?}", r.failure);
        assert!(typecheck_term(&r.hierarchy, &r.env, &r.term).ok);
        assert!(is_tshaped(&r.hierarchy, &r.term).unwrap());
        assert!(p_safe(&r.hierarchy, &r.env, &r.term).unwrap());
    }

    #[test]
    fn client_server_is_typable() {
        let t = parse("new s. new c. (!s(x).(new d. x<d>) | !c(z).(s<z> | z(y).c<z>) | !tau.new m. c<m>)").unwrap();
        let r = infer(&t);
        check_sound(&r);
        let h = &r.hierarchy;
        let (s, c, m, d) = (base(&r, "s"), base(&r, "c"), base(&r, "m"), base(&r, "d"));
        assert!(h.lt(&s, &c) && h.lt(&c, &m) && h.lt(&m, &d));
        assert_eq!(m.display(), "t_x");
        assert_eq!(r.hierarchy.to_text(), Hierarchy::chain(&[s, c, m, d]).to_text());
    }

    #[test]
    fn zero_is_trivially_typable() {
        let r = infer(&Term::Nil);
        check_sound(&r);
        assert!(r.hierarchy.nodes().is_empty());
    }

    #[test]
    fn ring_is_a_self_loop() {
        let t = parse("new m. new s0. (!m(n).s0?().(new s. (!s?().n!() | m<s> | s!())) | m<s0> | s0!())").unwrap();
        let r = infer(&t);
        assert_eq!(r.status, InferenceStatus::Unsat);
        let Some(InferenceFailure::Cycle { atoms, merged, .. }) = &r.failure else { panic!("{:?}", r.failure) };
        assert_eq!(atoms.len(), 1);
        assert!(merged.iter().any(|(_, m)| m.contains(&"n".to_string()) && m.contains(&"s".to_string())), "{merged:?}");
    }

    #[test]
    fn crossed_pools_is_not_typable() {
        let t = parse("(!tau.new a. p<a>) | (!tau.new b. q<b>) | !(p(x).!q(y).x<y> + q(x).!p(y).x<y>)").unwrap();
        let r = infer(&t);
        assert!(!r.ok);
        assert_eq!(r.status, InferenceStatus::Unsat, "{:?}", r.failure);
    }

    #[test]
    fn occurs_failure_is_reported() {
        let r = infer(&parse("new a. a<a>").unwrap());
        assert!(matches!(r.failure, Some(InferenceFailure::Occurs(_))));
    }

    #[test]
    fn free_names_go_below_restrictions() {
        let r = infer(&parse("new a. (b<a> | a(x))").unwrap());
        check_sound(&r);
        assert!(r.hierarchy.lt(&base(&r, "b"), &base(&r, "a")));
    }

    #[test]
    fn existing_annotations_are_replaced() {
        let r = infer(&parse("new a : q. new b : q. a<b>").unwrap());
        check_sound(&r);
        assert_ne!(base(&r, "a"), BaseTypeRef::named("q"));
    }

    #[test]
    fn deterministic() {
        let src = "new s. new c. (!s(x).(new d. x<d>) | !c(z).(s<z> | z(y).c<z>) | !tau.new m. c<m>)";
        let a = infer(&parse(src).unwrap()).to_json();
        let b = infer(&parse(src).unwrap()).to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn payload_used_as_channel() {
        let r = infer(&parse("new a. new b. (a<b> | a(x).x(y))").unwrap());
        check_sound(&r);
        assert!(r.annotation.values().any(|t| t.payload().is_some_and(|p| p.payload().is_some())));
    }
}
