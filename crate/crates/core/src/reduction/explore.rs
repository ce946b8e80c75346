//! Bounded breadth-first exploration of the reachable states.
//!
//! States are deduplicated by canonical key. Each BFS layer is expanded in
//! parallel and merged in a fixed order, so the graph does not depend on
//! the number of worker threads.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::json;

use super::step::successors;
use crate::normal_form::{canonical, CanonicalKey, NormalForm};
use crate::pretty::{pretty_nf, PrettyMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    pub max_states: usize,
    pub max_depth: usize,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { max_states: 2000, max_depth: 12, jobs: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct State {
    pub key: CanonicalKey,
    pub nf: NormalForm,
    pub depth: usize,
}

#[derive(Clone, Debug, Default)]
pub struct StateGraph {
    pub states: Vec<State>,
    pub index: HashMap<CanonicalKey, usize>,
    /// `(from, redex summary, to)`.
    pub edges: Vec<(usize, String, usize)>,
    /// Every reachable state was found.
    pub exact: bool,
    /// The visitor asked to stop.
    pub stopped: bool,
    pub max_depth_reached: usize,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, key: &CanonicalKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let states: Vec<_> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| json!({"id": i, "depth": s.depth, "term": crate::pretty::pretty_with(&s.nf.to_term(), PrettyMode::Canonical)}))
            .collect();
        let edges: Vec<_> = self.edges.iter().map(|(a, r, b)| json!({"from": a, "to": b, "redex": r})).collect();
        json!({"exact": self.exact, "states": states, "edges": edges})
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph states {\n");
        for (i, s) in self.states.iter().enumerate() {
            let label = pretty_nf(&s.nf).replace('\\', "\\\\").replace('"', "\\\"");
            let _ = writeln!(out, "  s{i} [shape=box, label=\"{label}\"];");
        }
        for (a, r, b) in &self.edges {
            let _ = writeln!(out, "  s{a} -> s{b} [label=\"{}\"];", r.replace('"', "\\\""));
        }
        out.push_str("}\n");
        out
    }
}

pub fn explore(n: &NormalForm, opts: ExploreOptions) -> StateGraph {
    explore_with(n, opts, &mut |_, _| true)
}

/// Like [`explore`], calling `visit(id, state)` on each new state in
/// insertion order; returning `false` stops the search.
pub fn explore_with(n: &NormalForm, opts: ExploreOptions, visit: &mut dyn FnMut(usize, &State) -> bool) -> StateGraph {
    let pool = (opts.jobs > 0).then(|| rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build().ok()).flatten();
    run(n, opts, pool.as_ref(), visit)
}

type Expansion = Vec<(String, CanonicalKey, NormalForm)>;

fn expand(states: &[State], layer: &[usize]) -> Vec<Expansion> {
    layer
        .par_iter()
        .map(|&id| successors(&states[id].nf).into_iter().map(|(r, q)| (r.to_string(), canonical(&q), q)).collect())
        .collect()
}

fn run(
    n: &NormalForm,
    opts: ExploreOptions,
    pool: Option<&rayon::ThreadPool>,
    visit: &mut dyn FnMut(usize, &State) -> bool,
) -> StateGraph {
    let mut g = StateGraph { exact: true, ..StateGraph::default() };
    if opts.max_states == 0 {
        g.exact = false;
        return g;
    }
    let root = State { key: canonical(n), nf: n.clone(), depth: 0 };
    g.index.insert(root.key.clone(), 0);
    g.states.push(root);
    if !visit(0, &g.states[0]) {
        g.stopped = true;
        g.exact = false;
        return g;
    }
    let mut layer = vec![0usize];
    let mut depth = 0;
    while !layer.is_empty() {
        let expanded = match pool {
            Some(p) => p.install(|| expand(&g.states, &layer)),
            None => expand(&g.states, &layer),
        };
        if depth == opts.max_depth {
            if expanded.iter().any(|s| !s.is_empty()) {
                g.exact = false;
            }
            break;
        }
        let mut next = Vec::new();
        'merge: for (&from, succs) in layer.iter().zip(expanded) {
            for (summary, key, q) in succs {
                if let Some(&to) = g.index.get(&key) {
                    g.edges.push((from, summary, to));
                    continue;
                }
                if g.states.len() >= opts.max_states {
                    g.exact = false;
                    break 'merge;
                }
                let id = g.states.len();
                g.index.insert(key.clone(), id);
                g.states.push(State { key, nf: q, depth: depth + 1 });
                g.edges.push((from, summary, id));
                g.max_depth_reached = depth + 1;
                next.push(id);
                if !visit(id, &g.states[id]) {
                    g.stopped = true;
                    g.exact = false;
                    return g;
                }
            }
        }
        if !g.exact {
            break;
        }
        layer = next;
        depth += 1;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::depth_exact;
    use crate::normal_form::nf;
    use crate::parser::parse;

    fn opts(states: usize, depth: usize) -> ExploreOptions {
        ExploreOptions { max_states: states, max_depth: depth, jobs: 0 }
    }

    #[test]
    fn zero_is_one_exact_state() {
        let g = explore(&NormalForm::default(), opts(10, 10));
        assert_eq!(g.len(), 1);
        assert!(g.exact);
    }

    #[test]
    fn finite_system_is_exact() {
        let g = explore(&nf(&parse("a<b> | a(x).x<c> | b(y)").unwrap()), opts(100, 10));
        assert!(g.exact);
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn client_server_contains_q_states() {
        let src = "new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | !tau.new m. c<m>)";
        let g = explore(&nf(&parse(src).unwrap()), opts(2000, 4));
        assert!(!g.exact);
        let q = "new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | (!tau.new m. c<m>) \
                 | (new m. c<m>) | (new m. (s<m> | m(y).c<m>)))";
        assert!(g.contains(&canonical(&nf(&parse(q).unwrap()))));
        let q = "new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | (!tau.new m. c<m>) \
                 | (new m. ((new d. m<d>) | m(y).c<m>)))";
        assert!(g.contains(&canonical(&nf(&parse(q).unwrap()))));
    }

    #[test]
    fn parallel_matches_sequential() {
        let src = "new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | !tau.new m. c<m>)";
        let n = nf(&parse(src).unwrap());
        let a = explore(&n, ExploreOptions { jobs: 1, ..opts(300, 6) });
        let b = explore(&n, ExploreOptions { jobs: 4, ..opts(300, 6) });
        let ka: Vec<_> = a.states.iter().map(|s| s.key.clone()).collect();
        let kb: Vec<_> = b.states.iter().map(|s| s.key.clone()).collect();
        assert_eq!(ka, kb);
        assert_eq!(a.edges, b.edges);
    }

    #[test]
    fn ring_depth_grows() {
        let src = "new m. new s0. (!m(n).s0?().(new s. (!s?().n!() | m<s> | s!())) | m<s0> | s0!())";
        let g = explore(&nf(&parse(src).unwrap()), opts(400, 30));
        let deepest = g.states.iter().map(|s| depth_exact(&s.nf, 1 << 20).unwrap()).max().unwrap();
        assert!(deepest >= 4, "{deepest}");
    }

    #[test]
    fn visitor_can_stop() {
        let src = "!tau.new m. c<m>";
        let mut seen = 0;
        let g = explore_with(&nf(&parse(src).unwrap()), opts(100, 100), &mut |_, _| {
            seen += 1;
            seen < 3
        });
        assert!(g.stopped);
        assert_eq!(g.len(), 3);
    }
}
