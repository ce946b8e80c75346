//! Reset nets and Minsky machines as terms.
//!
//! Place (or counter) `i` is a resettable counter process listening on
//! `p{i}`; its value is the number of pending `t!()` messages on the name
//! it holds. Transitions take the global lock `valid`, decrement, increment,
//! reset, and release it. Generated terms use the nullary shorthand and go
//! through the parser.
//!
//! Indices in nets and machines are 1-based. Every encoding comes with a
//! chain hierarchy and an environment under which it type checks. A
//! nullary channel `x` carries its own payload base `x_u`, placed at the top
//! of the chain: a choice may hoist two dummies side by side, and equal
//! bases there would break T-shapedness.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{BaseTypeRef, Hierarchy, TypeEnv};
use crate::parser::parse;
use crate::term::{Name, Term, TypeExpr};
use crate::typing::complete_annotations;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("transition {index}: update vector has length {len}, expected {places}")]
    UpdateLength { index: usize, len: usize, places: usize },
    #[error("transition {index}: update entry {value} is not -1, 0 or 1")]
    UpdateValue { index: usize, value: i8 },
    #[error("transition {index}: reset place {place} is out of range 1..={places}")]
    ResetRange { index: usize, place: usize, places: usize },
    #[error("marking has length {len}, expected {places}")]
    MarkingLength { len: usize, places: usize },
    #[error("instruction {index}: counter {counter} is out of range 1..={counters}")]
    CounterRange { index: usize, counter: usize, counters: usize },
    #[error("instruction {index}: jump target {target} is out of range 1..={len}")]
    JumpRange { index: usize, target: usize, len: usize },
    #[error("entry {entry} is out of range 1..={len}")]
    EntryRange { entry: usize, len: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub update: Vec<i8>,
    #[serde(default)]
    pub reset: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetNet {
    pub places: usize,
    #[serde(default)]
    pub transitions: Vec<Transition>,
    pub initial: Vec<u32>,
}

impl ResetNet {
    pub fn validate(&self) -> Result<(), EncodingError> {
        let n = self.places;
        for (index, t) in self.transitions.iter().enumerate() {
            if t.update.len() != n {
                return Err(EncodingError::UpdateLength { index, len: t.update.len(), places: n });
            }
            if let Some(&value) = t.update.iter().find(|v| !(-1..=1).contains(*v)) {
                return Err(EncodingError::UpdateValue { index, value });
            }
            if let Some(&place) = t.reset.iter().find(|&&r| r == 0 || r > n) {
                return Err(EncodingError::ResetRange { index, place, places: n });
            }
        }
        self.check_marking(&self.initial)
    }

    fn check_marking(&self, m: &[u32]) -> Result<(), EncodingError> {
        if m.len() != self.places {
            return Err(EncodingError::MarkingLength { len: m.len(), places: self.places });
        }
        Ok(())
    }

    /// Markings reachable in one transition.
    pub fn successors(&self, m: &[u32]) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for t in &self.transitions {
            if m.iter().zip(&t.update).any(|(&v, &u)| i64::from(v) + i64::from(u) < 0) {
                continue;
            }
            let mut next: Vec<u32> =
                m.iter().zip(&t.update).map(|(&v, &u)| (i64::from(v) + i64::from(u)) as u32).collect();
            for &r in &t.reset {
                next[r - 1] = 0;
            }
            out.push(next);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Instruction {
    Inc { counter: usize, next: usize },
    Dec { counter: usize, next: usize, zero: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinskyMachine {
    pub counters: usize,
    pub instructions: Vec<Instruction>,
    pub entry: usize,
}

impl MinskyMachine {
    pub fn validate(&self) -> Result<(), EncodingError> {
        let len = self.instructions.len();
        for (i, ins) in self.instructions.iter().enumerate() {
            let index = i + 1;
            let (counter, targets) = match *ins {
                Instruction::Inc { counter, next } => (counter, vec![next]),
                Instruction::Dec { counter, next, zero } => (counter, vec![next, zero]),
            };
            if counter == 0 || counter > self.counters {
                return Err(EncodingError::CounterRange { index, counter, counters: self.counters });
            }
            if let Some(&target) = targets.iter().find(|&&j| j == 0 || j > len) {
                return Err(EncodingError::JumpRange { index, target, len });
            }
        }
        if len > 0 && (self.entry == 0 || self.entry > len) {
            return Err(EncodingError::EntryRange { entry: self.entry, len });
        }
        Ok(())
    }

    /// One step of the machine from `(registers, at)`.
    pub fn step(&self, regs: &[u32], at: usize) -> Option<(Vec<u32>, usize)> {
        let mut r = regs.to_vec();
        match *self.instructions.get(at.checked_sub(1)?)? {
            Instruction::Inc { counter, next } => {
                r[counter - 1] += 1;
                Some((r, next))
            }
            Instruction::Dec { counter, next, zero } => {
                if r[counter - 1] > 0 {
                    r[counter - 1] -= 1;
                    Some((r, next))
                } else {
                    Some((r, zero))
                }
            }
        }
    }
}

/// A generated term with a hierarchy and environment that type it.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub term: Term,
    pub hierarchy: Hierarchy,
    pub env: TypeEnv,
}

fn counter_process(i: usize) -> String {
    format!("!p{i}(t).(inc{i}?().(t!() | p{i}<t>) + dec{i}?().t?().p{i}<t> + rst{i}?().(new r{i}. p{i}<r{i}>))")
}

fn counter_value(i: usize, v: u32) -> String {
    let mut s = format!("(new t{i}. (p{i}<t{i}>");
    for _ in 0..v {
        let _ = write!(s, " | t{i}!()");
    }
    s.push_str("))");
    s
}

fn sends(chans: impl IntoIterator<Item = String>) -> String {
    chans.into_iter().map(|c| format!("{c}!().")).collect()
}

fn transition_process(t: &Transition) -> String {
    let dec = (0..t.update.len()).filter(|&j| t.update[j] < 0).map(|j| format!("dec{}", j + 1));
    let inc = (0..t.update.len()).filter(|&j| t.update[j] > 0).map(|j| format!("inc{}", j + 1));
    let rst = t.reset.iter().map(|r| format!("rst{r}"));
    format!("!valid?().{}valid!()", sends(dec.chain(inc).chain(rst)))
}

fn b(s: &str) -> BaseTypeRef {
    BaseTypeRef::named(s)
}

fn unit(chan: &str) -> TypeExpr {
    TypeExpr::only(b(&format!("{chan}_u")))
}

fn nullary(name: &str) -> (Name, TypeExpr) {
    (Name::global(name), TypeExpr::channel(b(name), unit(name)))
}

/// Payload bases of the nullary channels `chans`, in order.
fn units(chans: &[String]) -> impl Iterator<Item = BaseTypeRef> + '_ {
    chans.iter().map(|c| b(&format!("{c}_u")))
}

/// Chain and environment for the free nullary channels `lead` followed by
/// `n` counters.
fn types(lead: Vec<String>, n: usize) -> (Vec<BaseTypeRef>, TypeEnv) {
    let mut nullaries = lead.clone();
    let mut chain: Vec<BaseTypeRef> = lead.iter().map(|x| b(x)).collect();
    let mut env: TypeEnv = lead.iter().map(|x| nullary(x)).collect();
    for i in 1..=n {
        for ch in ["inc", "dec", "rst"] {
            let name = format!("{ch}{i}");
            chain.push(b(&name));
            env.insert(Name::global(&name), nullary(&name).1);
            nullaries.push(name);
        }
        let (p, t) = (format!("p{i}"), format!("t{i}"));
        chain.push(b(&p));
        env.insert(Name::global(&p), TypeExpr::channel(b(&p), TypeExpr::channel(b(&t), unit(&t))));
    }
    chain.extend((1..=n).map(|i| b(&format!("t{i}"))));
    nullaries.extend((1..=n).map(|i| format!("t{i}")));
    chain.extend(units(&nullaries));
    (chain, env)
}

fn finish(src: &str, chain: Vec<BaseTypeRef>, env: TypeEnv) -> Encoded {
    let t = parse(src).expect("generated text parses");
    Encoded { term: complete_annotations(&t, &env), hierarchy: Hierarchy::chain(&chain), env }
}

/// The net started at its initial marking.
pub fn encode_reset_net(net: &ResetNet) -> Result<Encoded, EncodingError> {
    encode_marking(net, &net.initial)
}

/// The net at marking `m`.
pub fn encode_marking(net: &ResetNet, m: &[u32]) -> Result<Encoded, EncodingError> {
    net.validate()?;
    net.check_marking(m)?;
    let mut parts = vec!["valid!()".to_string()];
    for i in 1..=net.places {
        parts.push(counter_value(i, m[i - 1]));
        parts.push(counter_process(i));
    }
    parts.extend(net.transitions.iter().map(transition_process));
    let (chain, env) = types(vec!["valid".to_string()], net.places);
    Ok(finish(&parts.join(" | "), chain, env))
}

/// The machine at its entry with all counters zero.
pub fn encode_minsky(m: &MinskyMachine) -> Result<Encoded, EncodingError> {
    encode_configuration(m, &vec![0; m.counters], m.entry)
}

/// The machine at instruction `at` with the given register values.
pub fn encode_configuration(m: &MinskyMachine, regs: &[u32], at: usize) -> Result<Encoded, EncodingError> {
    m.validate()?;
    if regs.len() != m.counters {
        return Err(EncodingError::MarkingLength { len: regs.len(), places: m.counters });
    }
    let len = m.instructions.len();
    let mut parts = Vec::new();
    for i in 1..=m.counters {
        parts.push(counter_value(i, regs[i - 1]));
        parts.push(counter_process(i));
    }
    if len > 0 {
        if at == 0 || at > len {
            return Err(EncodingError::EntryRange { entry: at, len });
        }
        parts.push(format!("ins{at}!()"));
    }
    for (k, ins) in m.instructions.iter().enumerate() {
        let here = k + 1;
        parts.push(match *ins {
            Instruction::Inc { counter, next } => format!("!ins{here}?().inc{counter}!().ins{next}!()"),
            Instruction::Dec { counter, next, zero } => {
                format!("!ins{here}?().(dec{counter}!().ins{next}!() + rst{counter}!().ins{zero}!())")
            }
        });
    }
    let src = if parts.is_empty() { "0".to_string() } else { parts.join(" | ") };
    let (chain, env) = types((1..=len).map(|k| format!("ins{k}")).collect(), m.counters);
    Ok(finish(&src, chain, env))
}
