//! Solving the order clauses for a linear chain of base variables.
//!
//! The search picks one atom from each clause, keeping the chosen atoms
//! acyclic, with unit propagation against the transitive closure. A full
//! choice yields the topological orders of its graph as candidate chains.
//! Candidates are handed to a caller-supplied check; a rejected candidate
//! sends the search on to the next order and then the next choice.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::constraints::Atom;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnsatCore {
    /// A minimal unsatisfiable subset of the clauses, by index.
    pub clauses: Vec<usize>,
    /// Shortest cycle through the single-atom clauses of the core, as base
    /// variables `v0 < v1 < .. < v0`; empty when the core needs disjunctions.
    pub cycle: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    /// Base variables from lowest to highest.
    Chain(Vec<usize>),
    /// The clauses have no acyclic choice at all.
    Unsat(UnsatCore),
    /// Every chain satisfying the clauses was rejected.
    Rejected { candidates: u64 },
    /// The backtrack budget ran out.
    Inconclusive { backtracks: u64 },
}

/// Any chain satisfying the clauses; `vars` lists every base variable.
pub fn solve_order(clauses: &[Vec<Atom>], vars: &[usize]) -> SolveOutcome {
    solve_order_with(clauses, vars, u64::MAX, &mut |_| true)
}

pub fn solve_order_with(
    clauses: &[Vec<Atom>],
    vars: &[usize],
    budget: u64,
    accept: &mut dyn FnMut(&[usize]) -> bool,
) -> SolveOutcome {
    let mut s = Search::new(clauses, vars, budget);
    let mut candidates = 0u64;
    let mut found = None;
    let r = s.run(&mut |chain: &[usize]| {
        candidates += 1;
        if accept(chain) {
            found = Some(chain.to_vec());
            true
        } else {
            false
        }
    });
    match (r, found) {
        (_, Some(chain)) => SolveOutcome::Chain(chain),
        (Err(()), None) => SolveOutcome::Inconclusive { backtracks: s.spent },
        (Ok(_), None) if candidates > 0 => SolveOutcome::Rejected { candidates },
        (Ok(_), None) => SolveOutcome::Unsat(unsat_core(clauses, vars)),
    }
}

fn satisfiable(clauses: &[Vec<Atom>], vars: &[usize]) -> bool {
    Search::new(clauses, vars, u64::MAX).run(&mut |_| true) == Ok(true)
}

/// Deletion-based minimisation, then the shortest cycle among unit clauses.
pub fn unsat_core(clauses: &[Vec<Atom>], vars: &[usize]) -> UnsatCore {
    let mut keep: Vec<usize> = (0..clauses.len()).collect();
    let mut k = 0;
    while k < keep.len() {
        let trial: Vec<usize> = keep.iter().copied().filter(|&j| j != keep[k]).collect();
        let sub: Vec<Vec<Atom>> = trial.iter().map(|&j| clauses[j].clone()).collect();
        if satisfiable(&sub, vars) {
            k += 1;
        } else {
            keep = trial;
        }
    }
    let units: Vec<Atom> = keep.iter().filter(|&&j| clauses[j].len() == 1).map(|&j| clauses[j][0]).collect();
    UnsatCore { clauses: keep, cycle: shortest_cycle(&units) }
}

fn shortest_cycle(edges: &[Atom]) -> Vec<usize> {
    let nodes: BTreeSet<usize> = edges.iter().flat_map(|a| [a.lo, a.hi]).collect();
    let mut best: Option<Vec<usize>> = None;
    for &start in &nodes {
        // BFS from the successors of start back to start
        let mut prev = std::collections::BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        let mut closed = None;
        while let Some(u) = queue.pop_front() {
            for a in edges.iter().filter(|a| a.lo == u) {
                if a.hi == start {
                    closed = Some(u);
                    break;
                }
                if let std::collections::btree_map::Entry::Vacant(e) = prev.entry(a.hi) {
                    e.insert(u);
                    queue.push_back(a.hi);
                }
            }
            if closed.is_some() {
                break;
            }
        }
        if let Some(mut u) = closed {
            let mut cycle = vec![u];
            while u != start {
                u = prev[&u];
                cycle.push(u);
            }
            cycle.reverse();
            if best.as_ref().is_none_or(|b| cycle.len() < b.len()) {
                best = Some(cycle);
            }
        }
    }
    best.unwrap_or_default()
}

struct Search<'a> {
    clauses: &'a [Vec<Atom>],
    vars: Vec<usize>,
    /// Variables mentioned by some clause come first in the chains.
    constrained: BTreeSet<usize>,
    succ: std::collections::BTreeMap<usize, Vec<usize>>,
    budget: u64,
    spent: u64,
}

type Step = Result<bool, ()>;

impl<'a> Search<'a> {
    fn new(clauses: &'a [Vec<Atom>], vars: &[usize], budget: u64) -> Search<'a> {
        let constrained = clauses.iter().flatten().flat_map(|a| [a.lo, a.hi]).collect();
        let mut vars: Vec<usize> = vars.to_vec();
        vars.sort_unstable();
        vars.dedup();
        Search { clauses, vars, constrained, succ: Default::default(), budget, spent: 0 }
    }

    fn tick(&mut self) -> Result<(), ()> {
        if self.spent >= self.budget {
            return Err(());
        }
        self.spent += 1;
        Ok(())
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            if u == to {
                return true;
            }
            for &v in self.succ.get(&u).into_iter().flatten() {
                if seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        false
    }

    fn holds(&self, a: Atom) -> bool {
        a.lo != a.hi && self.reaches(a.lo, a.hi)
    }

    fn possible(&self, a: Atom) -> bool {
        a.lo != a.hi && !self.reaches(a.hi, a.lo)
    }

    fn add(&mut self, a: Atom) {
        self.succ.entry(a.lo).or_default().push(a.hi);
    }

    fn remove(&mut self, a: Atom) {
        let v = self.succ.get_mut(&a.lo).expect("edge present");
        let k = v.iter().rposition(|&x| x == a.hi).expect("edge present");
        v.remove(k);
    }

    fn run(&mut self, accept: &mut dyn FnMut(&[usize]) -> bool) -> Step {
        let mut added = Vec::new();
        let r = self.go(accept, &mut added);
        for a in added.into_iter().rev() {
            self.remove(a);
        }
        r
    }

    fn go(&mut self, accept: &mut dyn FnMut(&[usize]) -> bool, added: &mut Vec<Atom>) -> Step {
        let clauses = self.clauses;
        // unit propagation
        loop {
            let mut changed = false;
            for c in clauses {
                if c.iter().any(|&a| self.holds(a)) {
                    continue;
                }
                let open: Vec<Atom> = c.iter().copied().filter(|&a| self.possible(a)).collect();
                match open.len() {
                    0 => return Ok(false),
                    1 => {
                        self.add(open[0]);
                        added.push(open[0]);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }
        let pick = clauses.iter().find(|c| !c.iter().any(|&a| self.holds(a)));
        let Some(c) = pick else {
            let mut chain = Vec::new();
            let mut placed = BTreeSet::new();
            return self.orders(accept, &mut chain, &mut placed);
        };
        let open: Vec<Atom> = c.iter().copied().filter(|&a| self.possible(a)).collect();
        for a in open {
            self.tick()?;
            self.add(a);
            let r = self.run(accept);
            self.remove(a);
            if r? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Enumerates topological orders, constrained variables first and then
    /// by index.
    fn orders(
        &mut self,
        accept: &mut dyn FnMut(&[usize]) -> bool,
        chain: &mut Vec<usize>,
        placed: &mut BTreeSet<usize>,
    ) -> Step {
        if chain.len() == self.vars.len() {
            self.tick()?;
            return Ok(accept(chain));
        }
        let mut ready: Vec<usize> = self
            .vars
            .iter()
            .copied()
            .filter(|v| !placed.contains(v))
            .filter(|&v| !self.succ.iter().any(|(&u, out)| !placed.contains(&u) && out.contains(&v)))
            .collect();
        ready.sort_by_key(|v| (!self.constrained.contains(v), *v));
        for v in ready {
            chain.push(v);
            placed.insert(v);
            let r = self.orders(accept, chain, placed);
            chain.pop();
            placed.remove(&v);
            if r? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(lo: usize, hi: usize) -> Atom {
        Atom::new(lo, hi)
    }

    /// Oracle: does the chain satisfy every clause?
    fn satisfies(chain: &[usize], clauses: &[Vec<Atom>]) -> bool {
        let pos = |v: usize| chain.iter().position(|&x| x == v).unwrap();
        clauses.iter().all(|c| c.iter().any(|a| pos(a.lo) < pos(a.hi)))
    }

    #[test]
    fn client_server_chain() {
        // s=0, c=1, x=2, d=3
        let cl = vec![vec![at(0, 1), at(2, 1)], vec![at(1, 2)], vec![at(2, 3)]];
        let SolveOutcome::Chain(ch) = solve_order(&cl, &[0, 1, 2, 3]) else { panic!() };
        assert_eq!(ch, vec![0, 1, 2, 3]);
    }

    #[test]
    fn no_clauses_single_var() {
        assert_eq!(solve_order(&[], &[7]), SolveOutcome::Chain(vec![7]));
        assert_eq!(solve_order(&[], &[]), SolveOutcome::Chain(vec![]));
    }

    #[test]
    fn self_loop_core() {
        let cl = vec![vec![at(0, 1)], vec![at(4, 4)]];
        let SolveOutcome::Unsat(core) = solve_order(&cl, &[0, 1, 4]) else { panic!() };
        assert_eq!(core, UnsatCore { clauses: vec![1], cycle: vec![4] });
    }

    #[test]
    fn core_of_a_triangle_with_noise() {
        let cl = vec![vec![at(0, 1)], vec![at(5, 6), at(6, 5)], vec![at(1, 2)], vec![at(2, 0)]];
        let SolveOutcome::Unsat(core) = solve_order(&cl, &[0, 1, 2, 5, 6]) else { panic!() };
        assert_eq!(core.clauses, vec![0, 2, 3]);
        assert_eq!(core.cycle, vec![0, 1, 2]);
    }

    #[test]
    fn disjunctive_core_has_no_unit_cycle() {
        let cl = vec![vec![at(0, 1), at(0, 2)], vec![at(1, 0)], vec![at(2, 0)]];
        let SolveOutcome::Unsat(core) = solve_order(&cl, &[0, 1, 2]) else { panic!() };
        assert_eq!(core.clauses, vec![0, 1, 2]);
        assert!(core.cycle.is_empty());
    }

    #[test]
    fn rejection_moves_to_other_orders() {
        let mut seen = Vec::new();
        let out = solve_order_with(&[vec![at(0, 1)]], &[0, 1, 2], 1000, &mut |c| {
            seen.push(c.to_vec());
            c[0] == 2
        });
        assert_eq!(out, SolveOutcome::Chain(vec![2, 0, 1]));
        assert_eq!(seen[0], vec![0, 1, 2]);
        let out = solve_order_with(&[vec![at(0, 1)]], &[0, 1], 1000, &mut |_| false);
        assert_eq!(out, SolveOutcome::Rejected { candidates: 1 });
        let out = solve_order_with(&[vec![at(0, 1)]], &[0, 1, 2, 3], 2, &mut |_| false);
        assert!(matches!(out, SolveOutcome::Inconclusive { .. }));
    }

    #[test]
    fn chains_satisfy_random_clause_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..6);
            let cl: Vec<Vec<Atom>> = (0..rng.gen_range(0..6))
                .map(|_| (0..rng.gen_range(1..3)).map(|_| at(rng.gen_range(0..n), rng.gen_range(0..n))).collect())
                .collect();
            let vars: Vec<usize> = (0..n).collect();
            // brute force over all permutations
            let mut any = false;
            permute(&mut vars.clone(), 0, &mut |p| any |= satisfies(p, &cl));
            match solve_order(&cl, &vars) {
                SolveOutcome::Chain(ch) => assert!(any && satisfies(&ch, &cl)),
                SolveOutcome::Unsat(core) => {
                    assert!(!any);
                    let sub: Vec<Vec<Atom>> = core.clauses.iter().map(|&j| cl[j].clone()).collect();
                    let mut sub_any = false;
                    permute(&mut vars.clone(), 0, &mut |p| sub_any |= satisfies(p, &sub));
                    assert!(!sub_any);
                }
                other => panic!("{other:?}"),
            }
        }
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }
}
