//! Labelled forests: internal nodes carry a restricted name and its base
//! type, leaves carry sequential terms.
//!
//! Besides the forest of a term this module provides restriction nesting,
//! the brute-force enumeration of all forests reconstructible to a congruent
//! term (a test oracle), exact depth, and the communication topology of a
//! normal form.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::hierarchy::{BaseTypeRef, Hierarchy};
use crate::normal_form::{canonical_seq_with, nf, prune, Binder, NormalForm, Sequential};
use crate::pretty::pretty_seq;
use crate::term::{Name, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ForestError {
    #[error("no base type for active restriction `{0}`")]
    MissingBase(String),
    #[error("enumeration needs {needed} items, over the limit of {limit}")]
    LimitExceeded { needed: u128, limit: u128 },
    #[error("forest does not describe a congruent term: {0}")]
    NotCongruent(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ForestLabel {
    /// A restricted name; `base` is `None` for an unannotated name, which is
    /// treated as incomparable to everything.
    Name {
        name: Name,
        base: Option<BaseTypeRef>,
    },
    Leaf(Sequential),
}

#[derive(Clone, Debug)]
pub struct ForestNode {
    pub parent: Option<usize>,
    pub label: ForestLabel,
}

#[derive(Clone, Debug, Default)]
pub struct LabelledForest {
    nodes: Vec<ForestNode>,
}

impl LabelledForest {
    pub fn new() -> LabelledForest {
        LabelledForest::default()
    }

    pub fn add(&mut self, parent: Option<usize>, label: ForestLabel) -> usize {
        debug_assert!(parent.is_none_or(|p| matches!(self.nodes[p].label, ForestLabel::Name { .. })));
        self.nodes.push(ForestNode { parent, label });
        self.nodes.len() - 1
    }

    pub fn add_name(&mut self, parent: Option<usize>, name: Name, base: Option<BaseTypeRef>) -> usize {
        self.add(parent, ForestLabel::Name { name, base })
    }

    pub fn add_leaf(&mut self, parent: Option<usize>, s: Sequential) -> usize {
        self.add(parent, ForestLabel::Leaf(s))
    }

    pub fn nodes(&self) -> &[ForestNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &ForestNode {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].parent.is_none()).collect()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&j| self.nodes[j].parent == Some(i)).collect()
    }

    /// Root-first path ending at `i`.
    pub fn path_to(&self, i: usize) -> Vec<usize> {
        let mut path = vec![i];
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| matches!(self.nodes[i].label, ForestLabel::Leaf(_))).collect()
    }

    pub fn name_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| matches!(self.nodes[i].label, ForestLabel::Name { .. })).collect()
    }

    pub fn name_of(&self, i: usize) -> Option<&Name> {
        match &self.nodes[i].label {
            ForestLabel::Name { name, .. } => Some(name),
            ForestLabel::Leaf(_) => None,
        }
    }

    pub fn base_of(&self, i: usize) -> Option<&BaseTypeRef> {
        match &self.nodes[i].label {
            ForestLabel::Name { base, .. } => base.as_ref(),
            ForestLabel::Leaf(_) => None,
        }
    }

    /// Node carrying the restricted name `x`.
    pub fn find_name(&self, x: &Name) -> Option<usize> {
        (0..self.nodes.len()).find(|&i| self.name_of(i) == Some(x))
    }

    /// Longest number of name nodes on a root-to-node path.
    pub fn restriction_height(&self) -> usize {
        let mut memo = vec![usize::MAX; self.nodes.len()];
        (0..self.nodes.len()).map(|i| self.names_above(i, &mut memo)).max().unwrap_or(0)
    }

    fn names_above(&self, i: usize, memo: &mut [usize]) -> usize {
        if memo[i] != usize::MAX {
            return memo[i];
        }
        let own = usize::from(matches!(self.nodes[i].label, ForestLabel::Name { .. }));
        let up = self.nodes[i].parent.map(|p| self.names_above(p, memo)).unwrap_or(0);
        memo[i] = own + up;
        memo[i]
    }

    pub fn set_parent(&mut self, i: usize, parent: Option<usize>) {
        self.nodes[i].parent = parent;
    }

    /// Appends `other`, hanging its roots below `under` (or as roots).
    /// Returns the index offset of the copied nodes.
    pub fn graft(&mut self, other: &LabelledForest, under: Option<usize>) -> usize {
        let offset = self.nodes.len();
        for n in &other.nodes {
            let parent = match n.parent {
                Some(p) => Some(p + offset),
                None => under,
            };
            self.nodes.push(ForestNode { parent, label: n.label.clone() });
        }
        offset
    }

    /// Copy without the given nodes; each removed node's children move to
    /// its parent.
    pub fn without(&self, remove: &BTreeSet<usize>) -> LabelledForest {
        let mut index = vec![None; self.nodes.len()];
        let mut out = LabelledForest::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if remove.contains(&i) {
                continue;
            }
            let mut p = node.parent;
            while let Some(q) = p {
                if !remove.contains(&q) {
                    break;
                }
                p = self.nodes[q].parent;
            }
            index[i] = Some(out.nodes.len());
            out.nodes.push(ForestNode { parent: p, label: node.label.clone() });
        }
        for n in &mut out.nodes {
            n.parent = n.parent.map(|p| index[p].expect("parents are kept"));
        }
        out
    }

    /// Every name node is strictly above its name-node parent in `h`.
    /// Placeholder bases are incomparable to everything.
    pub fn is_tcompatible(&self, h: &Hierarchy) -> bool {
        self.nodes.iter().all(|n| match (&n.label, n.parent) {
            (ForestLabel::Name { base, .. }, Some(p)) => match (self.base_of(p), base) {
                (Some(pb), Some(b)) => h.lt(pb, b),
                _ => false,
            },
            _ => true,
        })
    }

    /// Canonical serialisation; equal strings iff isomorphic forests.
    pub fn canonical_string(&self) -> String {
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                kids[p].push(i);
            }
        }
        let mut roots: Vec<String> = self.roots().into_iter().map(|r| self.canon_node(r, &kids)).collect();
        roots.sort();
        roots.join(",")
    }

    fn canon_node(&self, i: usize, kids: &[Vec<usize>]) -> String {
        let head = match &self.nodes[i].label {
            ForestLabel::Name { name, base } => {
                format!("{}:{}", name.id(), base.as_ref().map(|b| b.display().to_string()).unwrap_or_default())
            }
            ForestLabel::Leaf(s) => canonical_seq_with(s, &HashMap::new()),
        };
        let mut sub: Vec<String> = kids[i].iter().map(|&c| self.canon_node(c, kids)).collect();
        sub.sort();
        format!("{head}{{{}}}", sub.join(","))
    }

    pub fn isomorphic(&self, other: &LabelledForest) -> bool {
        self.canonical_string() == other.canonical_string()
    }

    /// Checks the three conditions under which a forest describes a term
    /// congruent to `ν names.(leaves)`, and returns that normal form.
    pub fn to_normal_form(&self) -> Result<NormalForm, ForestError> {
        let bad = |m: String| Err(ForestError::NotCongruent(m));
        let mut names = BTreeMap::new();
        for i in self.name_nodes() {
            let x = self.name_of(i).expect("name node");
            if names.insert(x.clone(), i).is_some() {
                return bad(format!("name {x} labels two nodes"));
            }
        }
        for i in self.leaves() {
            if !self.children(i).is_empty() {
                return bad("a sequential leaf has children".into());
            }
            let ForestLabel::Leaf(s) = &self.nodes[i].label else { unreachable!() };
            let path: BTreeSet<&Name> = self.path_to(i).into_iter().filter_map(|p| self.name_of(p)).collect();
            for x in s.free_names() {
                if names.contains_key(&x) && !path.contains(&x) {
                    return bad(format!("leaf uses {x} outside its scope"));
                }
            }
        }
        let binders = self
            .name_nodes()
            .into_iter()
            .map(|i| match &self.nodes[i].label {
                ForestLabel::Name { name, base } => {
                    Binder::new(name.clone(), base.as_ref().map(|b| crate::term::TypeExpr::only(b.clone())))
                }
                ForestLabel::Leaf(_) => unreachable!(),
            })
            .collect();
        let actives = self
            .leaves()
            .into_iter()
            .map(|i| match &self.nodes[i].label {
                ForestLabel::Leaf(s) => s.clone(),
                ForestLabel::Name { .. } => unreachable!(),
            })
            .collect();
        Ok(NormalForm { binders, actives })
    }

    /// The term whose forest this is: one restriction per name node scoping
    /// exactly its subtree. Annotations are lost except base-only ones.
    pub fn to_term(&self) -> Term {
        Term::par_all(self.roots().into_iter().map(|r| self.node_term(r)))
    }

    fn node_term(&self, i: usize) -> Term {
        match &self.nodes[i].label {
            ForestLabel::Leaf(s) => s.to_term(),
            ForestLabel::Name { name, base } => {
                let body = Term::par_all(self.children(i).into_iter().map(|c| self.node_term(c)));
                Term::restrict(name.clone(), base.as_ref().map(|b| crate::term::TypeExpr::only(b.clone())), body)
            }
        }
    }

    /// Indented text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in self.roots() {
            self.text_node(r, 0, &mut out);
        }
        out
    }

    fn text_node(&self, i: usize, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match &self.nodes[i].label {
            ForestLabel::Name { name, base } => {
                let _ = writeln!(out, "{pad}{} : {}", name.display(), base_text(base));
            }
            ForestLabel::Leaf(s) => {
                let _ = writeln!(out, "{pad}{}", pretty_seq(s));
            }
        }
        for c in self.children(i) {
            self.text_node(c, depth + 1, out);
        }
    }

    /// Nodes in insertion order with their parent index.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .map(|n| match &n.label {
                ForestLabel::Name { name, base } => {
                    serde_json::json!({"parent": n.parent, "name": name.display(), "base": base.as_ref().map(|b| b.display().to_string())})
                }
                ForestLabel::Leaf(s) => serde_json::json!({"parent": n.parent, "leaf": pretty_seq(s)}),
            })
            .collect();
        serde_json::json!({"nodes": nodes})
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph forest {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            match &n.label {
                ForestLabel::Name { name, base } => {
                    let _ =
                        writeln!(out, "  n{i} [shape=ellipse, label=\"{} : {}\"];", name.display(), base_text(base));
                }
                ForestLabel::Leaf(s) => {
                    let _ = writeln!(out, "  n{i} [shape=box, label=\"{}\"];", escape(&pretty_seq(s)));
                }
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                let _ = writeln!(out, "  n{p} -> n{i};");
            }
        }
        out.push_str("}\n");
        out
    }
}

fn base_text(b: &Option<BaseTypeRef>) -> String {
    b.as_ref().map(|b| b.display().to_string()).unwrap_or_else(|| "_".into())
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Forest of a term; bases come from annotations, unannotated names get a
/// placeholder.
pub fn forest_of(t: &Term) -> LabelledForest {
    forest_of_with(t, &|_| None).expect("placeholders never fail")
}

/// Forest of a term with bases taken from annotations, else from `base_of`.
/// Fails if neither gives a base and `base_of` is used strictly, i.e. returns
/// `Err` only when the lookup reports a missing base.
pub fn forest_of_with(t: &Term, base_of: &dyn Fn(&Name) -> Option<BaseTypeRef>) -> Result<LabelledForest, ForestError> {
    let mut f = LabelledForest::new();
    build(t, None, base_of, &mut f);
    Ok(f)
}

/// Like [`forest_of_with`] but every active restriction must get a base.
pub fn forest_of_strict(
    t: &Term,
    base_of: &dyn Fn(&Name) -> Option<BaseTypeRef>,
) -> Result<LabelledForest, ForestError> {
    for (x, ty) in t.active_restrictions() {
        if ty.is_none() && base_of(&x).is_none() {
            return Err(ForestError::MissingBase(x.display().to_string()));
        }
    }
    forest_of_with(t, base_of)
}

fn build(t: &Term, parent: Option<usize>, base_of: &dyn Fn(&Name) -> Option<BaseTypeRef>, f: &mut LabelledForest) {
    match t {
        Term::Nil => {}
        Term::Par(l, r) => {
            build(l, parent, base_of, f);
            build(r, parent, base_of, f);
        }
        Term::Restrict { name, ty, body } => {
            let base = ty.as_ref().map(|t| t.base().clone()).or_else(|| base_of(name));
            let at = f.add_name(parent, name.clone(), base);
            build(body, Some(at), base_of, f);
        }
        Term::Choice(_) | Term::Repl(_) => {
            let s = nf(t).actives.into_iter().next().expect("sequential");
            f.add_leaf(parent, s);
        }
    }
}

/// Nesting of restrictions along the active spine.
pub fn nest_nu(t: &Term) -> usize {
    match t {
        Term::Restrict { body, .. } => 1 + nest_nu(body),
        Term::Par(l, r) => nest_nu(l).max(nest_nu(r)),
        _ => 0,
    }
}

/// One forest over the names of a normal form (no leaves yet) together with
/// the admissible positions of every leaf.
struct NameForest {
    parents: Vec<Option<usize>>,
    options: Vec<Vec<Option<usize>>>,
}

/// All forests reconstructible to a term congruent to `n`: every name labels
/// one node, leaves are childless, and every restricted free name of a leaf
/// is on its root path. Fails up front if there would be more than `limit`.
pub fn enumerate_congruent_forests(n: &NormalForm, limit: u128) -> Result<CongruentForests, ForestError> {
    let k = n.binders.len();
    let raw = (k as u128 + 1).saturating_pow(k.saturating_sub(1) as u32);
    if raw > limit {
        return Err(ForestError::LimitExceeded { needed: raw, limit });
    }
    let names = n.binder_names();
    let needs: Vec<BTreeSet<usize>> = n
        .actives
        .iter()
        .map(|a| {
            let f = a.free_names();
            (0..k).filter(|&i| f.contains(&names[i])).collect()
        })
        .collect();
    let mut shapes = Vec::new();
    let mut total: u128 = 0;
    for parents in name_forests(k) {
        let ancestors: Vec<BTreeSet<usize>> = (0..k)
            .map(|i| {
                let mut s = BTreeSet::from([i]);
                let mut cur = i;
                while let Some(p) = parents[cur] {
                    s.insert(p);
                    cur = p;
                }
                s
            })
            .collect();
        let options: Vec<Vec<Option<usize>>> = needs
            .iter()
            .map(|need| {
                let mut opts = Vec::new();
                if need.is_empty() {
                    opts.push(None);
                }
                opts.extend((0..k).filter(|&i| need.is_subset(&ancestors[i])).map(Some));
                opts
            })
            .collect();
        let count = options.iter().map(|o| o.len() as u128).product::<u128>();
        if count == 0 {
            continue;
        }
        total = total.saturating_add(count);
        if total > limit {
            return Err(ForestError::LimitExceeded { needed: total, limit });
        }
        shapes.push(NameForest { parents, options });
    }
    Ok(CongruentForests { nf: n.clone(), shapes, shape: 0, counter: None })
}

/// All parent vectors over `k` nodes without cycles.
fn name_forests(k: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = Vec::new();
    let mut cur = vec![None; k];
    fn rec(i: usize, k: usize, cur: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if i == k {
            let acyclic = (0..k).all(|s| {
                let mut steps = 0;
                let mut c = s;
                while let Some(p) = cur[c] {
                    c = p;
                    steps += 1;
                    if steps > k {
                        return false;
                    }
                }
                true
            });
            if acyclic {
                out.push(cur.clone());
            }
            return;
        }
        for choice in std::iter::once(None).chain((0..k).filter(|&j| j != i).map(Some)) {
            cur[i] = choice;
            // reject a cycle closed among the already assigned nodes
            let mut c = i;
            let mut steps = 0;
            let mut closed = false;
            while let Some(p) = cur[c] {
                if p > i {
                    break;
                }
                c = p;
                steps += 1;
                if c == i || steps > k {
                    closed = true;
                    break;
                }
            }
            if !closed {
                rec(i + 1, k, cur, out);
            }
        }
        cur[i] = None;
    }
    rec(0, k, &mut cur, &mut out);
    out
}

/// Iterator over the forests of [`enumerate_congruent_forests`].
pub struct CongruentForests {
    nf: NormalForm,
    shapes: Vec<NameForest>,
    shape: usize,
    counter: Option<Vec<usize>>,
}

impl CongruentForests {
    pub fn total(&self) -> u128 {
        self.shapes.iter().map(|s| s.options.iter().map(|o| o.len() as u128).product::<u128>()).sum()
    }

    fn build(&self, shape: &NameForest, counter: &[usize]) -> LabelledForest {
        let mut f = LabelledForest::new();
        for b in &self.nf.binders {
            f.add_name(None, b.name.clone(), b.ty.as_ref().map(|t| t.base().clone()));
        }
        for (i, p) in shape.parents.iter().enumerate() {
            f.nodes[i].parent = *p;
        }
        for (j, a) in self.nf.actives.iter().enumerate() {
            f.add_leaf(shape.options[j][counter[j]], a.clone());
        }
        f
    }
}

impl Iterator for CongruentForests {
    type Item = LabelledForest;

    fn next(&mut self) -> Option<LabelledForest> {
        loop {
            let shape = self.shapes.get(self.shape)?;
            let counter = match self.counter.take() {
                None => vec![0; shape.options.len()],
                Some(mut c) => {
                    // odometer over leaf positions; wraps to the next shape
                    let mut pos = 0;
                    while pos < c.len() {
                        c[pos] += 1;
                        if c[pos] < shape.options[pos].len() {
                            break;
                        }
                        c[pos] = 0;
                        pos += 1;
                    }
                    if pos == c.len() {
                        self.shape += 1;
                        continue;
                    }
                    c
                }
            };
            let f = self.build(shape, &counter);
            self.counter = Some(counter);
            return Some(f);
        }
    }
}

/// Minimal restriction height over all forests of terms congruent to `n`
/// (after pruning). Computed by recursion over name subsets: a connected
/// group of names shares one tree whose root is one of them.
pub fn depth_exact(n: &NormalForm, limit: u128) -> Result<usize, ForestError> {
    let p = prune(n);
    let k = p.binders.len();
    if k >= 64 || (1u128 << k) > limit.max(1) {
        return Err(ForestError::LimitExceeded { needed: 1u128 << k.min(127), limit });
    }
    let names = p.binder_names();
    let sets: Vec<u64> = p
        .actives
        .iter()
        .map(|a| {
            let f = a.free_names();
            (0..k).filter(|&i| f.contains(&names[i])).fold(0u64, |m, i| m | (1 << i))
        })
        .collect();
    let mut memo = HashMap::new();
    Ok(min_height(if k == 0 { 0 } else { (1u64 << k) - 1 }, &sets, &mut memo))
}

fn min_height(mask: u64, sets: &[u64], memo: &mut HashMap<u64, usize>) -> usize {
    if mask == 0 {
        return 0;
    }
    if let Some(&h) = memo.get(&mask) {
        return h;
    }
    let mut best = 0;
    for comp in components(mask, sets) {
        let mut h = usize::MAX;
        let mut bits = comp;
        while bits != 0 {
            let r = bits.trailing_zeros();
            bits &= bits - 1;
            h = h.min(1 + min_height(comp & !(1 << r), sets, memo));
        }
        best = best.max(h);
    }
    memo.insert(mask, best);
    best
}

fn components(mask: u64, sets: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut left = mask;
    while left != 0 {
        let mut comp = 1u64 << left.trailing_zeros();
        loop {
            let grown = sets.iter().filter(|&&s| s & comp != 0).fold(comp, |c, &s| c | (s & mask));
            if grown == comp {
                break;
            }
            comp = grown;
        }
        out.push(comp);
        left &= !comp;
    }
    out
}

/// Communication topology: binders as hyperedges over actives.
#[derive(Clone, Debug)]
pub struct Topology {
    pub vertices: Vec<Sequential>,
    pub edges: Vec<(Name, Vec<usize>)>,
}

pub fn topology(n: &NormalForm) -> Topology {
    let fns: Vec<BTreeSet<Name>> = n.actives.iter().map(|a| a.free_names()).collect();
    let edges = n
        .binders
        .iter()
        .map(|b| (b.name.clone(), (0..fns.len()).filter(|&i| fns[i].contains(&b.name)).collect()))
        .collect();
    Topology { vertices: n.actives.clone(), edges }
}

impl Topology {
    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|(_, vs)| vs.contains(&i)).count()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph topology {\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "  a{i} [shape=ellipse, label=\"{}\"];", escape(&pretty_seq(v)));
        }
        for (k, (x, vs)) in self.edges.iter().enumerate() {
            let _ = writeln!(out, "  x{k} [shape=square, label=\"{}\"];", x.display());
            for v in vs {
                let _ = writeln!(out, "  x{k} -- a{v};");
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn linked_names() -> Term {
        parse("new a. new b. new c. (a(x) | b(x) | c(x) | a<b>)").unwrap()
    }

    #[test]
    fn forest_of_linked_names_is_a_chain_with_four_leaves() {
        let f = forest_of(&linked_names());
        assert_eq!(f.roots().len(), 1);
        assert_eq!(f.restriction_height(), 3);
        let c = f.find_name(&f.name_of(2).unwrap().clone()).unwrap();
        assert_eq!(f.children(c).len(), 4);
        assert!(forest_of(&Term::Nil).is_empty());
    }

    #[test]
    fn counts_match_active_parts() {
        let t = parse("new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | !tau.new m. c<m>)").unwrap();
        let f = forest_of(&t);
        assert_eq!(f.leaves().len(), t.active_sequentials().len());
        assert_eq!(f.name_nodes().len(), t.active_restrictions().len());
    }

    #[test]
    fn nesting_examples() {
        let p = parse("new a. new b. new c. (a(x) | b<c> | c(y))").unwrap();
        let q = parse("(new a. a(x)) | (new c. ((new b. b<c>) | c(y)))").unwrap();
        assert_eq!(nest_nu(&p), 3);
        assert_eq!(nest_nu(&q), 2);
        assert_eq!(nest_nu(&Term::Nil), 0);
        assert_eq!(nest_nu(&p), forest_of(&p).restriction_height());
        assert_eq!(depth_exact(&nf(&p), 1 << 20).unwrap(), 2);
        assert_eq!(depth_exact(&nf(&q), 1 << 20).unwrap(), 2);
        assert_eq!(depth_exact(&NormalForm::default(), 1).unwrap(), 0);
    }

    #[test]
    fn enumeration_of_zero_is_the_empty_forest() {
        let all: Vec<_> = enumerate_congruent_forests(&NormalForm::default(), 10).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert!(all[0].is_empty());
    }

    #[test]
    fn enumeration_minimum_matches_depth() {
        let p = nf(&parse("new a. new b. new c. (a(x) | b<c> | c(y))").unwrap());
        let min = enumerate_congruent_forests(&p, 1 << 20).unwrap().map(|f| f.restriction_height()).min();
        assert_eq!(min, Some(2));
    }

    #[test]
    fn enumeration_contains_linked_names_forests() {
        let t = linked_names();
        let n = nf(&t);
        let all: Vec<LabelledForest> = enumerate_congruent_forests(&n, 1 << 20).unwrap().collect();
        // every enumerated forest reconstructs and is distinct
        let keys: BTreeSet<String> = all.iter().map(|f| f.canonical_string()).collect();
        assert_eq!(keys.len(), all.len());
        for f in &all {
            f.to_normal_form().unwrap();
        }
        // forest (a): the presentation itself
        let a = forest_of(&t);
        assert!(keys.contains(&a.canonical_string()));
        // forest (e): a[A1, b[A2, A4]], c[A3]
        let (na, nb, nc) = (n.binders[0].name.clone(), n.binders[1].name.clone(), n.binders[2].name.clone());
        let mut e = LabelledForest::new();
        let ra = e.add_name(None, na, None);
        let rb = e.add_name(Some(ra), nb, None);
        let rc = e.add_name(None, nc, None);
        e.add_leaf(Some(ra), n.actives[0].clone());
        e.add_leaf(Some(rb), n.actives[1].clone());
        e.add_leaf(Some(rc), n.actives[2].clone());
        e.add_leaf(Some(rb), n.actives[3].clone());
        assert!(keys.contains(&e.canonical_string()));
    }

    #[test]
    fn round_trip_through_terms() {
        let n = nf(&linked_names());
        for f in enumerate_congruent_forests(&n, 1 << 20).unwrap() {
            let back = forest_of(&f.to_term());
            assert!(back.isomorphic(&f));
        }
    }

    #[test]
    fn topology_degrees() {
        let n = nf(&linked_names());
        let topo = topology(&n);
        assert_eq!(topo.edges.len(), 3);
        assert_eq!(topo.degree(3), 2);
        assert_eq!(topo.degree(2), 1);
        assert!(topo.to_dot().contains("shape=square"));
        assert!(topology(&NormalForm::default()).edges.is_empty());
    }
}
