//! Embedding of a query into a state: `q ≡ ν X. Π A_i` embeds into
//! `p ≡ ν X Y. (Π A_i | R)`.
//!
//! Actives of the query are matched to actives of the state under an
//! injective renaming. Query binders go to state binders. A free name of the
//! query stays itself when it is free in the state and otherwise goes to a
//! state binder. A replicated state active can host any number of
//! non-replicated query actives (one unfolded copy each).

use std::collections::{BTreeSet, HashMap};

use crate::normal_form::{canonical_seq_with, prune, NormalForm, Sequential};
use crate::term::Name;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbedResult {
    Embeds,
    NotEmbeds,
    /// The search budget ran out.
    Inconclusive,
}

pub const DEFAULT_EMBED_BUDGET: u64 = 1_000_000;

pub fn embeds(q: &NormalForm, p: &NormalForm) -> EmbedResult {
    embeds_with_budget(q, p, DEFAULT_EMBED_BUDGET)
}

struct Side {
    nf: NormalForm,
    binders: BTreeSet<Name>,
    free: BTreeSet<Name>,
    fns: Vec<Vec<Name>>,
}

impl Side {
    fn new(n: &NormalForm) -> Side {
        let nf = prune(n);
        let binders = nf.binder_names().into_iter().collect();
        let free = nf.free_names();
        let fns = nf.actives.iter().map(|a| a.free_names().into_iter().collect()).collect();
        Side { nf, binders, free, fns }
    }
}

fn shape(s: &Sequential, replicated: bool) -> String {
    let labels: HashMap<Name, String> = s.free_names().into_iter().map(|x| (x, "#".to_string())).collect();
    let s = Sequential { replicated, branches: s.branches.clone() };
    canonical_seq_with(&s, &labels)
}

pub fn embeds_with_budget(q: &NormalForm, p: &NormalForm, budget: u64) -> EmbedResult {
    let q = Side::new(q);
    let p = Side::new(p);
    // candidate state actives for every query active
    let mut cands: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, qa) in q.nf.actives.iter().enumerate() {
        let qs = shape(qa, qa.replicated);
        let c: Vec<usize> = (0..p.nf.actives.len())
            .filter(|&j| {
                let pa = &p.nf.actives[j];
                if qa.replicated && !pa.replicated {
                    return false;
                }
                p.fns[j].len() == q.fns[i].len() && shape(pa, qa.replicated) == qs
            })
            .collect();
        if c.is_empty() {
            return EmbedResult::NotEmbeds;
        }
        cands.push((i, c));
    }
    cands.sort_by_key(|(i, c)| (c.len(), *i));
    let mut search = Search {
        q: &q,
        p: &p,
        cands: &cands,
        map: HashMap::new(),
        image: BTreeSet::new(),
        used: vec![false; p.nf.actives.len()],
        budget,
    };
    match search.go(0) {
        Some(true) => EmbedResult::Embeds,
        Some(false) => EmbedResult::NotEmbeds,
        None => EmbedResult::Inconclusive,
    }
}

struct Search<'a> {
    q: &'a Side,
    p: &'a Side,
    cands: &'a [(usize, Vec<usize>)],
    map: HashMap<Name, Name>,
    image: BTreeSet<Name>,
    used: Vec<bool>,
    budget: u64,
}

impl Search<'_> {
    /// `None` when the budget is exhausted.
    fn go(&mut self, k: usize) -> Option<bool> {
        if k == self.cands.len() {
            return Some(true);
        }
        let (i, ref cs) = self.cands[k];
        let qa = &self.q.nf.actives[i];
        for &j in cs {
            let pa = &self.p.nf.actives[j];
            // injective use of plain actives and of replicated-to-replicated matches
            let exclusive = !pa.replicated || qa.replicated;
            if exclusive && self.used[j] {
                continue;
            }
            if exclusive {
                self.used[j] = true;
            }
            let names = self.q.fns[i].clone();
            let found = self.bind(k, i, j, &names, 0);
            if exclusive {
                self.used[j] = false;
            }
            match found {
                Some(false) => {}
                other => return other,
            }
        }
        Some(false)
    }

    /// Extends the renaming over `names[at..]`, then compares the pair.
    fn bind(&mut self, k: usize, i: usize, j: usize, names: &[Name], at: usize) -> Option<bool> {
        if self.budget == 0 {
            return None;
        }
        self.budget -= 1;
        let target = &self.p.fns[j];
        if at == names.len() {
            if !self.matches(i, j) {
                return Some(false);
            }
            return self.go(k + 1);
        }
        let x = &names[at];
        if let Some(y) = self.map.get(x) {
            if !target.contains(y) {
                return Some(false);
            }
            return self.bind(k, i, j, names, at + 1);
        }
        let options: Vec<Name> = if self.q.binders.contains(x) {
            target.iter().filter(|y| self.p.binders.contains(y) && !self.image.contains(y)).cloned().collect()
        } else if self.p.free.contains(x) {
            if target.contains(x) && !self.image.contains(x) {
                vec![x.clone()]
            } else {
                vec![]
            }
        } else {
            target.iter().filter(|y| self.p.binders.contains(y) && !self.image.contains(y)).cloned().collect()
        };
        for y in options {
            self.map.insert(x.clone(), y.clone());
            self.image.insert(y.clone());
            let r = self.bind(k, i, j, names, at + 1);
            self.map.remove(x);
            self.image.remove(&y);
            match r {
                Some(false) => {}
                other => return other,
            }
        }
        Some(false)
    }

    fn matches(&self, i: usize, j: usize) -> bool {
        let qa = &self.q.nf.actives[i];
        let pa = &self.p.nf.actives[j];
        let mut ql = HashMap::new();
        let mut pl = HashMap::new();
        for (n, x) in self.q.fns[i].iter().enumerate() {
            let y = &self.map[x];
            ql.insert(x.clone(), format!("#{n}"));
            pl.insert(y.clone(), format!("#{n}"));
        }
        let pa = Sequential { replicated: qa.replicated, branches: pa.branches.clone() };
        canonical_seq_with(qa, &ql) == canonical_seq_with(&pa, &pl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::nf;
    use crate::parser::parse;

    fn e(q: &str, p: &str) -> EmbedResult {
        embeds(&nf(&parse(q).unwrap()), &nf(&parse(p).unwrap()))
    }

    #[test]
    fn reflexive() {
        let p = "new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | !tau.new m. c<m>)";
        assert_eq!(e(p, p), EmbedResult::Embeds);
        assert_eq!(e("0", "0"), EmbedResult::Embeds);
        assert_eq!(e("0", p), EmbedResult::Embeds);
    }

    #[test]
    fn sub_multiset_embeds() {
        assert_eq!(e("new a. a<b>", "new a. new c. (a<b> | c<a> | b(x))"), EmbedResult::Embeds);
        assert_eq!(e("new a. (a<b> | a<b>)", "new a. (a<b> | b(x))"), EmbedResult::NotEmbeds);
        assert_eq!(e("new a. new c. (a<b> | c<b>)", "new a. (a<b> | a<b>)"), EmbedResult::NotEmbeds);
    }

    #[test]
    fn free_names_are_fixed_when_free() {
        assert_eq!(e("a<b>", "a<b> | c<d>"), EmbedResult::Embeds);
        assert_eq!(e("a<b>", "a<c>"), EmbedResult::NotEmbeds);
        // a query name absent from the state's free names may denote a binder
        assert_eq!(e("k<b>", "new k. k<b>"), EmbedResult::Embeds);
    }

    #[test]
    fn replication_unfolds() {
        assert_eq!(e("a(x).x<x> | a(y).y<y>", "!a(x).x<x>"), EmbedResult::Embeds);
        assert_eq!(e("!a(x).x<x> | !a(y).y<y>", "!a(x).x<x>"), EmbedResult::NotEmbeds);
        assert_eq!(e("!a(x).x<x>", "a(x).x<x>"), EmbedResult::NotEmbeds);
    }

    #[test]
    fn one_pending_message_embeds_into_an_answer_state() {
        let q = "new s. new m. (!s(x).(new d. x<d>) | m(y).c<m> | (new d. m<d>))";
        let p = "new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | (!tau.new m. c<m>) \
                 | (new m. ((new d. m<d>) | m(y).c<m>)))";
        assert_eq!(e(q, p), EmbedResult::Embeds);
        let two = "new s. new m. (!s(x).(new d. x<d>) | m(y).c<m> | (new d. m<d>) | (new d. m<d>))";
        assert_eq!(e(two, p), EmbedResult::NotEmbeds);
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        let p = "new a. (a<b> | a<b> | a<b>)";
        assert_eq!(
            embeds_with_budget(&nf(&parse("new a. a(x)").unwrap()), &nf(&parse(p).unwrap()), 0),
            EmbedResult::NotEmbeds
        );
        assert_eq!(
            embeds_with_budget(&nf(&parse("new a. a<b>").unwrap()), &nf(&parse(p).unwrap()), 0),
            EmbedResult::Inconclusive
        );
    }
}
