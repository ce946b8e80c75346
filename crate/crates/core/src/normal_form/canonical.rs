//! Canonical keys for state deduplication.
//!
//! Binders are renumbered after a colour-refinement pass that separates them
//! by how they are used; actives are then sorted by their serialisation. Equal
//! keys imply structural congruence. The converse holds for α-renaming,
//! reordering of `|`, `+` and binders, and pruning, except on highly symmetric
//! terms that colour refinement cannot split.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::{prune, NormalForm, Sequential};
use crate::term::{Name, Prefix};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CanonicalKey(Arc<str>);

impl CanonicalKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

type Labels = HashMap<Name, String>;

pub fn canonical(n: &NormalForm) -> CanonicalKey {
    CanonicalKey(Arc::from(canon_nf(&prune(n), &Labels::new(), 0)))
}

/// Serialisation of a sequential term where the names in `labels` print as
/// the given labels. Used to compare actives under a candidate renaming.
pub fn canonical_seq_with(s: &Sequential, labels: &HashMap<Name, String>) -> String {
    canon_seq(s, labels, 0)
}

fn label(n: &Name, labels: &Labels) -> String {
    labels.get(n).cloned().unwrap_or_else(|| format!("'{}", n.id()))
}

fn hash_of<T: Hash>(v: &T) -> u64 {
    let mut h = DefaultHasher::new();
    v.hash(&mut h);
    h.finish()
}

fn canon_seq(s: &Sequential, labels: &Labels, depth: usize) -> String {
    let mut parts: Vec<String> = s
        .branches
        .iter()
        .map(|b| match &b.prefix {
            Prefix::Tau => format!("t.{}", canon_nf(&b.cont, labels, depth + 1)),
            Prefix::Output { chan, msg } => {
                format!("{}<{}>.{}", label(chan, labels), label(msg, labels), canon_nf(&b.cont, labels, depth + 1))
            }
            Prefix::Input { chan, var } => {
                let mut inner = labels.clone();
                inner.insert(var.clone(), format!("v{depth}"));
                format!("{}(v{depth}).{}", label(chan, labels), canon_nf(&b.cont, &inner, depth + 1))
            }
        })
        .collect();
    parts.sort();
    format!("{}[{}]", if s.replicated { "!" } else { "" }, parts.join("+"))
}

fn canon_nf(n: &NormalForm, labels: &Labels, depth: usize) -> String {
    if n.binders.is_empty() {
        let mut parts: Vec<String> = n.actives.iter().map(|a| canon_seq(a, labels, depth)).collect();
        parts.sort();
        return format!("({})", parts.join("|"));
    }
    let names: Vec<Name> = n.binder_names();
    let fns: Vec<HashSet<Name>> = n.actives.iter().map(|a| a.free_names().into_iter().collect()).collect();
    let ann: Vec<String> =
        n.binders.iter().map(|b| b.ty.as_ref().map(|t| t.to_string()).unwrap_or_else(|| "-".into())).collect();

    let with = |colours: &[u64], special: Option<usize>| -> Labels {
        let mut l = labels.clone();
        for (k, x) in names.iter().enumerate() {
            let s = if Some(k) == special { "@".to_string() } else { format!("c{:x}", colours[k]) };
            l.insert(x.clone(), s);
        }
        l
    };

    let mut colours: Vec<u64> = ann.iter().map(hash_of).collect();
    let distinct = |c: &[u64]| c.iter().collect::<HashSet<_>>().len();
    for _ in 0..=names.len() {
        let mut next = Vec::with_capacity(names.len());
        for (k, x) in names.iter().enumerate() {
            let l = with(&colours, Some(k));
            let mut ctx: Vec<String> = n
                .actives
                .iter()
                .zip(&fns)
                .filter(|(_, f)| f.contains(x))
                .map(|(a, _)| canon_seq(a, &l, depth))
                .collect();
            ctx.sort();
            next.push(hash_of(&(colours[k], ctx)));
        }
        let refined = distinct(&next) > distinct(&colours);
        colours = next;
        if !refined {
            break;
        }
    }

    let coloured = with(&colours, None);
    let active_keys: Vec<String> = n.actives.iter().map(|a| canon_seq(a, &coloured, depth)).collect();
    let mut order: Vec<usize> = (0..n.actives.len()).collect();
    order.sort_by(|&i, &j| active_keys[i].cmp(&active_keys[j]));
    let position: HashMap<usize, usize> = order.iter().enumerate().map(|(p, &i)| (i, p)).collect();

    // binders by colour, then by first active (in sorted order) using them
    let mut binder_order: Vec<usize> = (0..names.len()).collect();
    let first_use = |k: usize| -> usize {
        fns.iter()
            .enumerate()
            .filter(|(_, f)| f.contains(&names[k]))
            .map(|(i, _)| position[&i])
            .min()
            .unwrap_or(usize::MAX)
    };
    binder_order.sort_by_key(|&k| (colours[k], first_use(k), k));

    let mut final_labels = labels.clone();
    let mut head = Vec::new();
    for (rank, &k) in binder_order.iter().enumerate() {
        final_labels.insert(names[k].clone(), format!("b{depth}_{rank}"));
        head.push(ann[k].clone());
    }
    let mut parts: Vec<String> = n.actives.iter().map(|a| canon_seq(a, &final_labels, depth)).collect();
    parts.sort();
    format!("v[{}]({})", head.join(","), parts.join("|"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::nf;
    use crate::parser::parse;

    fn key(s: &str) -> CanonicalKey {
        canonical(&nf(&parse(s).unwrap()))
    }

    #[test]
    fn exchange_and_commutativity() {
        assert_eq!(key("new a. new b. (a<b> | b(x))"), key("new b. new a. (b(y) | a<b>)"));
        assert_eq!(key("new a. 0"), key("0"));
        assert_eq!(key("a(x) + b(y)"), key("b(z) + a(w)"));
        assert_ne!(key("new a. new b. (a<b> | b(x))"), key("new a. new b. (b<a> | b(x))"));
    }

    #[test]
    fn free_names_are_not_renamed() {
        assert_ne!(key("a<b>"), key("b<a>"));
        assert_eq!(key("a<b> | a<b>"), key("a<b> | a<b>"));
    }

    #[test]
    fn symmetric_tokens_collapse() {
        let a = key("new t. (p<t> | t!() | t!() | t!())");
        let b = key("new t. (t!() | t!() | p<t> | t!())");
        assert_eq!(a, b);
    }

    #[test]
    fn binder_structure_matters() {
        // two distinct names versus one shared name
        assert_ne!(key("new a. new b. (a<c> | b<c>)"), key("new a. (a<c> | a<c>)"));
    }
}
