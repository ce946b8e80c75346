//! Reduction semantics, bounded exploration, embedding and covering
//! queries, and the executable invariance check.

mod embed;
mod explore;
mod step;

pub use embed::{embeds, embeds_with_budget, EmbedResult, DEFAULT_EMBED_BUDGET};
pub use explore::{explore, explore_with, ExploreOptions, State, StateGraph};
pub use step::{fire_all, successors, Fired, Redex, RedexKind};

use std::collections::BTreeSet;

use serde::Serialize;

use crate::forest::{ForestLabel, LabelledForest};
use crate::hierarchy::{p_safe, Hierarchy, TypeEnv};
use crate::normal_form::{migratable, nf, NormalForm};
use crate::pretty::pretty_nf;
use crate::tcompat::{ins, phi, tshape_failure, tshape_failure_nf, TcompatError, TshapeFailure};
use crate::term::{Name, Prefix, Substitution, Term};
use crate::typing::{typecheck, typecheck_term, Violation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CoverVerdict {
    /// A reachable state embeds the query.
    Covered { state: usize, depth: usize, term: String },
    /// Exploration stopped at its bounds without a match.
    NotWithinBounds,
    /// Every reachable state was explored and none embeds the query.
    NotCoverable,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverReport {
    #[serde(flatten)]
    pub verdict: CoverVerdict,
    pub states: usize,
    /// Embedding checks that ran out of budget.
    pub inconclusive_checks: usize,
}

pub fn cover(t: &Term, query: &Term, opts: ExploreOptions) -> CoverReport {
    let q = nf(query);
    let mut hit = None;
    let mut inconclusive = 0;
    let g = explore_with(&nf(t), opts, &mut |id, s| match embeds(&q, &s.nf) {
        EmbedResult::Embeds => {
            hit = Some(CoverVerdict::Covered { state: id, depth: s.depth, term: pretty_nf(&s.nf) });
            false
        }
        EmbedResult::NotEmbeds => true,
        EmbedResult::Inconclusive => {
            inconclusive += 1;
            true
        }
    });
    let verdict = match hit {
        Some(v) => v,
        None if g.exact && inconclusive == 0 => CoverVerdict::NotCoverable,
        None => CoverVerdict::NotWithinBounds,
    };
    CoverReport { verdict, states: g.len(), inconclusive_checks: inconclusive }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceFailure {
    pub state: usize,
    pub depth: usize,
    pub term: String,
    pub typing: Vec<Violation>,
    pub tshape: Option<TshapeFailure>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    /// Unmet preconditions on the initial term; when non-empty nothing was
    /// explored.
    pub preconditions: Vec<String>,
    pub states_checked: usize,
    pub exact: bool,
    pub failure: Option<InvarianceFailure>,
}

impl InvarianceReport {
    pub fn ok(&self) -> bool {
        self.preconditions.is_empty() && self.failure.is_none()
    }
}

/// Explores from a typable, T-shaped term and checks that every state is
/// still typable and T-shaped.
pub fn check_invariance(
    h: &Hierarchy,
    env: &TypeEnv,
    t: &Term,
    opts: ExploreOptions,
) -> Result<InvarianceReport, TcompatError> {
    let mut pre = Vec::new();
    let report = typecheck_term(h, env, t);
    pre.extend(report.violations.iter().map(|v| format!("not typable: {v}")));
    if pre.is_empty() {
        if let Some(f) = tshape_failure(h, t)? {
            pre.push(format!("not T-shaped: {f}"));
        }
        match p_safe(h, env, t) {
            Ok(true) => {}
            Ok(false) => pre.push("environment is not safe for the term".into()),
            Err(e) => pre.push(e.to_string()),
        }
    }
    if !pre.is_empty() {
        return Ok(InvarianceReport { preconditions: pre, states_checked: 0, exact: false, failure: None });
    }
    let mut failure = None;
    let mut error = None;
    let mut checked = 0;
    let g = explore_with(&nf(t), opts, &mut |id, s| {
        checked += 1;
        let typing = typecheck(h, env, &s.nf);
        let tshape = match tshape_failure_nf(h, &s.nf) {
            Ok(f) => f,
            Err(e) => {
                error = Some(e);
                return false;
            }
        };
        if typing.ok && tshape.is_none() {
            return true;
        }
        failure = Some(InvarianceFailure {
            state: id,
            depth: s.depth,
            term: pretty_nf(&s.nf),
            typing: typing.violations,
            tshape,
        });
        false
    });
    if let Some(e) = error {
        return Err(e);
    }
    Ok(InvarianceReport { preconditions: vec![], states_checked: checked, exact: g.exact, failure })
}

/// Forest for the successor of a communication, assembled from the canonical
/// forest of the redex state by inserting the continuations next to the
/// paths of the sender and receiver. Returns the forest together with the
/// (unpruned) successor it should describe. `None` for tau steps.
pub fn comm_witness(
    h: &Hierarchy,
    n: &NormalForm,
    fired: &Fired,
) -> Result<Option<(LabelledForest, NormalForm)>, TcompatError> {
    let RedexKind::Comm { sender, receiver, .. } = fired.redex.kind else { return Ok(None) };
    let (Some((x, rcont)), Some(msg)) = (&fired.receiver, &fired.message) else { return Ok(None) };
    let base = phi(h, n)?.forest;
    // leaf nodes of Φ are created in active order within each subtree; find
    // them by identity of the active
    let leaf_of = |i: usize| {
        base.leaves()
            .into_iter()
            .find(|&l| matches!(&base.node(l).label, ForestLabel::Leaf(s) if *s == n.actives[i]))
            .expect("every active has a leaf")
    };
    let (ls, lr) = (leaf_of(sender), leaf_of(receiver));
    let names_on = |f: &LabelledForest, leaf: usize| -> Vec<usize> {
        f.path_to(leaf).into_iter().filter(|&i| f.name_of(i).is_some()).collect()
    };
    let ps = names_on(&base, ls);
    let pr = names_on(&base, lr);

    let phi_s = phi(h, &fired.sender_cont)?.forest;
    let f2 = ins(&base, &ps, &phi_s, h);

    // a message below the channel brings no new name into scope
    let msg_base = n.binder(msg).and_then(|b| b.ty.as_ref()).map(|t| t.base().clone());
    let f = match (msg_base, fired_channel_base(n, fired)) {
        (Some(tb), Some(ta)) if h.lt(&tb, &ta) => {
            let all = phi(h, &fired.receiver_substituted().expect("comm"))?.forest;
            ins(&f2, &pr, &all, h)
        }
        _ => {
            let mig = migratable(x, rcont);
            let non_mig: Vec<usize> = (0..rcont.actives.len()).filter(|j| !mig.contains(j)).collect();
            let mig: Vec<usize> = mig.into_iter().collect();
            let used: BTreeSet<Name> = non_mig.iter().flat_map(|&j| rcont.actives[j].free_names()).collect();
            let (yr_non, yr_mig): (Vec<usize>, Vec<usize>) =
                (0..rcont.binders.len()).partition(|&b| used.contains(&rcont.binders[b].name));
            let subst = Substitution::single(x.clone(), msg.clone());
            let phi_non = phi(h, &rcont.restrict_to(&yr_non, &non_mig))?.forest;
            let phi_mig = phi(h, &rcont.restrict_to(&yr_mig, &mig).substitute(&subst))?.forest;
            let f1 = ins(&f2, &pr, &phi_non, h);
            ins(&f1, &ps, &phi_mig, h)
        }
    };
    let mut drop = BTreeSet::new();
    if !n.actives[sender].replicated {
        drop.insert(ls);
    }
    if !n.actives[receiver].replicated {
        drop.insert(lr);
    }
    Ok(Some((f.without(&drop), fired.assemble(n))))
}

fn fired_channel_base(n: &NormalForm, fired: &Fired) -> Option<crate::hierarchy::BaseTypeRef> {
    let RedexKind::Comm { sender, sender_branch, .. } = fired.redex.kind else { return None };
    let Prefix::Output { chan, .. } = &n.actives[sender].branches[sender_branch].prefix else { return None };
    n.binder(chan).and_then(|b| b.ty.as_ref()).map(|t| t.base().clone())
}
