//! Union-find unification of the dataflow equations, with an occurs check.

use std::collections::BTreeMap;

use serde::Serialize;

use super::constraints::{Atom, ConstraintSet};

/// Type variables after unification. Classes are identified by their
/// smallest member, which also names the class's base variable.
#[derive(Clone, Debug)]
pub struct Solved {
    rep: Vec<usize>,
    /// Payload class of each channel class.
    pub payload: BTreeMap<usize, usize>,
}

impl Solved {
    pub fn rep(&self, i: usize) -> usize {
        self.rep[i]
    }

    /// Class representatives in increasing order.
    pub fn classes(&self) -> Vec<usize> {
        (0..self.rep.len()).filter(|&i| self.rep[i] == i).collect()
    }

    pub fn members(&self, r: usize) -> Vec<usize> {
        (0..self.rep.len()).filter(|&i| self.rep[i] == r).collect()
    }

    pub fn rewrite(&self, a: Atom) -> Atom {
        Atom::new(self.rep[a.lo], self.rep[a.hi])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OccursFailure {
    /// The equation that closes the cycle.
    pub equation: String,
    pub origin: String,
    /// Classes along the cycle, by base variable.
    pub cycle: Vec<String>,
}

fn find(p: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while p[r] != r {
        r = p[r];
    }
    let mut c = i;
    while p[c] != r {
        let next = p[c];
        p[c] = r;
        c = next;
    }
    r
}

pub fn unify_dataflow(c: &ConstraintSet) -> Result<Solved, OccursFailure> {
    let n = c.names.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut payload: Vec<Option<usize>> = vec![None; n];
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for d in &c.dataflow {
        let a = find(&mut parent, d.chan);
        match payload[a] {
            Some(p) => pending.push((p, d.payload)),
            None => payload[a] = Some(d.payload),
        }
        while let Some((x, y)) = pending.pop() {
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            if rx == ry {
                continue;
            }
            let (keep, gone) = if rx < ry { (rx, ry) } else { (ry, rx) };
            parent[gone] = keep;
            match (payload[keep], payload[gone]) {
                (Some(p), Some(q)) => pending.push((p, q)),
                (None, Some(q)) => payload[keep] = Some(q),
                _ => {}
            }
        }
    }
    let rep: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let payload: BTreeMap<usize, usize> =
        (0..n).filter(|&i| rep[i] == i).filter_map(|i| payload[i].map(|p| (i, rep[p]))).collect();
    let solved = Solved { rep, payload };
    occurs_check(c, &solved)?;
    Ok(solved)
}

/// The payload graph must be acyclic: types are finite.
fn occurs_check(c: &ConstraintSet, s: &Solved) -> Result<(), OccursFailure> {
    for start in s.classes() {
        let mut path = vec![start];
        let mut cur = start;
        while let Some(&next) = s.payload.get(&cur) {
            if let Some(k) = path.iter().position(|&v| v == next) {
                let cycle: Vec<usize> = path[k..].to_vec();
                // report an original equation on the last edge of the cycle
                let d = c
                    .dataflow
                    .iter()
                    .find(|d| s.rep(d.chan) == cur && s.rep(d.payload) == next)
                    .expect("payload edges come from equations");
                return Err(OccursFailure {
                    equation: format!(
                        "{} = {}[{}]",
                        c.type_var(s.rep(d.chan)),
                        c.base_var(s.rep(d.chan)),
                        c.type_var(s.rep(d.payload))
                    ),
                    origin: d.origin.clone(),
                    cycle: cycle.into_iter().map(|v| c.base_var(v)).collect(),
                });
            }
            path.push(next);
            cur = next;
        }
    }
    Ok(())
}
