//! Constraint generation. Every name owns a type variable `α_x` whose base
//! is `t_x`; both are indexed by the name's position in [`ConstraintSet::names`].

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::normal_form::{migratable, nf, tied_relation, NormalForm, Sequential};
use crate::pretty::pretty_seq;
use crate::term::{unique_display, Name, Prefix, Term};

/// `α_chan = t_chan[α_payload]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Dataflow {
    pub chan: usize,
    pub payload: usize,
    pub origin: String,
}

/// `t_lo < t_hi` over base variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Atom {
    pub lo: usize,
    pub hi: usize,
}

impl Atom {
    pub fn new(lo: usize, hi: usize) -> Atom {
        Atom { lo, hi }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseSource {
    Par,
    In,
    Safety,
}

/// A disjunction of atoms; alternatives are tried in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Clause {
    pub atoms: Vec<Atom>,
    pub source: ClauseSource,
    pub origin: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConstraintSet {
    #[serde(skip)]
    pub names: Vec<Name>,
    /// Distinct display labels, parallel to `names`.
    pub labels: Vec<String>,
    pub dataflow: Vec<Dataflow>,
    pub clauses: Vec<Clause>,
    #[serde(skip)]
    pub free: Vec<usize>,
    #[serde(skip)]
    pub restricted: Vec<usize>,
}

impl ConstraintSet {
    pub fn index_of(&self, x: &Name) -> Option<usize> {
        self.names.iter().position(|y| y == x)
    }

    pub fn type_var(&self, i: usize) -> String {
        format!("α_{}", self.labels[i])
    }

    pub fn base_var(&self, i: usize) -> String {
        format!("t_{}", self.labels[i])
    }

    pub fn show_dataflow(&self, d: &Dataflow) -> String {
        format!("{} = {}[{}]", self.type_var(d.chan), self.base_var(d.chan), self.type_var(d.payload))
    }

    pub fn show_atom(&self, a: Atom) -> String {
        format!("{} < {}", self.base_var(a.lo), self.base_var(a.hi))
    }

    pub fn show_clause(&self, c: &Clause) -> String {
        c.atoms.iter().map(|&a| self.show_atom(a)).collect::<Vec<_>>().join(" ∨ ")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dataflow": self.dataflow.iter().map(|d| self.show_dataflow(d)).collect::<Vec<_>>(),
            "order": self.clauses.iter().map(|c| self.show_clause(c)).collect::<Vec<_>>(),
        })
    }
}

/// Collects dataflow equations and order clauses for an unannotated,
/// name-unique term. Annotations are ignored.
pub fn generate_constraints(t: &Term) -> ConstraintSet {
    let n = nf(t);
    let mut g = Gen { c: ConstraintSet::default(), index: HashMap::new(), used: BTreeSet::new() };
    let free: Vec<Name> = t.free_names().into_iter().collect();
    for x in &free {
        let i = g.var(x);
        g.c.free.push(i);
    }
    g.nf(&free.iter().cloned().collect(), &n);
    for (y, _) in t.restriction_names() {
        let j = g.var(&y);
        g.c.restricted.push(j);
        for &i in &g.c.free.clone() {
            let origin = format!("{} is free and {} is restricted", g.c.labels[i], g.c.labels[j]);
            g.c.clauses.push(Clause { atoms: vec![Atom::new(i, j)], source: ClauseSource::Safety, origin });
        }
    }
    g.c
}

struct Gen {
    c: ConstraintSet,
    index: HashMap<Name, usize>,
    used: BTreeSet<String>,
}

impl Gen {
    fn var(&mut self, x: &Name) -> usize {
        if let Some(&i) = self.index.get(x) {
            return i;
        }
        let i = self.c.names.len();
        self.c.names.push(x.clone());
        self.c.labels.push(unique_display(x.display(), &mut self.used));
        self.index.insert(x.clone(), i);
        i
    }

    fn nf(&mut self, gamma: &BTreeSet<Name>, n: &NormalForm) {
        let mut inner = gamma.clone();
        for b in &n.binders {
            self.var(&b.name);
            inner.insert(b.name.clone());
        }
        let rel = tied_relation(n);
        for (i, a) in n.actives.iter().enumerate() {
            let outer: Vec<Name> = rel.free_names_of(i).iter().filter(|y| gamma.contains(*y)).cloned().collect();
            for b in &n.binders {
                if !rel.name_tied(&b.name, i) {
                    continue;
                }
                let hi = self.var(&b.name);
                for y in &outer {
                    let lo = self.var(y);
                    let clause =
                        Clause { atoms: vec![Atom::new(lo, hi)], source: ClauseSource::Par, origin: pretty_seq(a) };
                    if !self.c.clauses.contains(&clause) {
                        self.c.clauses.push(clause);
                    }
                }
            }
            self.seq(&inner, a);
        }
    }

    fn seq(&mut self, gamma: &BTreeSet<Name>, s: &Sequential) {
        for b in &s.branches {
            match &b.prefix {
                Prefix::Tau => self.nf(gamma, &b.cont),
                Prefix::Output { chan, msg } => {
                    let (a, m) = (self.var(chan), self.var(msg));
                    self.c.dataflow.push(Dataflow { chan: a, payload: m, origin: pretty_seq(s) });
                    self.nf(gamma, &b.cont);
                }
                Prefix::Input { chan, var } => {
                    let (a, x) = (self.var(chan), self.var(var));
                    self.c.dataflow.push(Dataflow { chan: a, payload: x, origin: pretty_seq(s) });
                    let mut ys = BTreeSet::new();
                    for i in migratable(var, &b.cont) {
                        ys.extend(
                            b.cont.actives[i].free_names().into_iter().filter(|y| y != chan && gamma.contains(y)),
                        );
                    }
                    for y in ys {
                        let lo = self.var(&y);
                        // the migratable alternative first, the payload one last
                        let atoms = vec![Atom::new(lo, a), Atom::new(x, a)];
                        self.c.clauses.push(Clause { atoms, source: ClauseSource::In, origin: pretty_seq(s) });
                    }
                    let mut inner = gamma.clone();
                    inner.insert(var.clone());
                    self.nf(&inner, &b.cont);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn shown(c: &ConstraintSet) -> Vec<String> {
        c.clauses.iter().map(|k| c.show_clause(k)).collect()
    }

    #[test]
    fn zero_has_no_constraints() {
        let c = generate_constraints(&Term::Nil);
        assert!(c.dataflow.is_empty() && c.clauses.is_empty() && c.names.is_empty());
    }

    #[test]
    fn client_server_clauses() {
        let t = parse("new s. new c. (!s(x).(new d. x<d>) | !c(z).(s<z> | z(y).c<z>) | !tau.new m. c<m>)").unwrap();
        let c = generate_constraints(&t);
        let mut got = shown(&c);
        got.sort();
        assert_eq!(got, vec!["t_c < t_m", "t_s < t_c ∨ t_z < t_c", "t_x < t_d"]);
        let flows: Vec<String> = c.dataflow.iter().map(|d| c.show_dataflow(d)).collect();
        assert!(flows.contains(&"α_s = t_s[α_x]".to_string()));
        assert!(flows.contains(&"α_z = t_z[α_y]".to_string()));
        assert_eq!(flows.len(), 7);
    }

    #[test]
    fn free_names_get_safety_atoms() {
        let c = generate_constraints(&parse("new a. b<a>").unwrap());
        assert_eq!(shown(&c), vec!["t_b < t_a", "t_b < t_a"]);
        assert_eq!(c.clauses[1].source, ClauseSource::Safety);
    }

    #[test]
    fn duplicate_displays_get_distinct_labels() {
        let c = generate_constraints(&parse("(new d. a<d>) | (new d. a<d>)").unwrap());
        let mut labels = c.labels.clone();
        labels.sort();
        assert_eq!(labels, vec!["a", "d", "d1"]);
    }
}
