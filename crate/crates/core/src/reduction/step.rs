//! One-step reduction on normal forms.

use std::fmt;

use serde::Serialize;

use crate::normal_form::{prune, NfBranch, NormalForm, Sequential};
use crate::term::{Name, Prefix, Substitution};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RedexKind {
    Tau {
        active: usize,
        branch: usize,
    },
    Comm {
        sender: usize,
        sender_branch: usize,
        receiver: usize,
        receiver_branch: usize,
        channel: String,
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Redex {
    #[serde(flatten)]
    pub kind: RedexKind,
    /// Displays of the restrictions the step activates.
    pub activated: Vec<String>,
}

impl fmt::Display for Redex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RedexKind::Tau { active, branch } => write!(f, "tau@{active}.{branch}")?,
            RedexKind::Comm { sender, receiver, channel, message, .. } => {
                write!(f, "{channel}<{message}>@{sender}->{receiver}")?
            }
        }
        if !self.activated.is_empty() {
            write!(f, " new {}", self.activated.join(" "))?;
        }
        Ok(())
    }
}

/// The pieces of a fired redex before they are assembled into the successor.
#[derive(Clone, Debug)]
pub struct Fired {
    pub redex: Redex,
    /// Actives of the context, in order, with replicated redex actives kept.
    pub context: Vec<usize>,
    /// Sender (or tau) continuation, freshened if it came from a replication.
    pub sender_cont: NormalForm,
    /// Receiver continuation before substitution, with its input variable.
    pub receiver: Option<(Name, NormalForm)>,
    pub message: Option<Name>,
}

impl Fired {
    /// Successor state, unpruned.
    pub fn assemble(&self, n: &NormalForm) -> NormalForm {
        let mut binders = n.binders.clone();
        let mut actives: Vec<Sequential> = self.context.iter().map(|&i| n.actives[i].clone()).collect();
        binders.extend(self.sender_cont.binders.iter().cloned());
        actives.extend(self.sender_cont.actives.iter().cloned());
        if let Some(r) = self.receiver_substituted() {
            binders.extend(r.binders);
            actives.extend(r.actives);
        }
        NormalForm { binders, actives }
    }

    pub fn receiver_substituted(&self) -> Option<NormalForm> {
        let (x, cont) = self.receiver.as_ref()?;
        let b = self.message.as_ref()?;
        Some(cont.substitute(&Substitution::single(x.clone(), b.clone())))
    }
}

fn instance(s: &Sequential, k: usize) -> NfBranch {
    if s.replicated {
        s.branches[k].freshen()
    } else {
        s.branches[k].clone()
    }
}

fn context_without(n: &NormalForm, used: &[usize]) -> Vec<usize> {
    (0..n.actives.len()).filter(|i| !used.contains(i) || n.actives[*i].replicated).collect()
}

/// Every redex of `n` together with its unassembled result.
pub fn fire_all(n: &NormalForm) -> Vec<Fired> {
    let mut out = Vec::new();
    for (i, a) in n.actives.iter().enumerate() {
        for (k, b) in a.branches.iter().enumerate() {
            if b.prefix == Prefix::Tau {
                let inst = instance(a, k);
                let activated = inst.cont.binders.iter().map(|b| b.name.display().to_string()).collect();
                out.push(Fired {
                    redex: Redex { kind: RedexKind::Tau { active: i, branch: k }, activated },
                    context: context_without(n, &[i]),
                    sender_cont: inst.cont,
                    receiver: None,
                    message: None,
                });
            }
        }
    }
    for (i, s) in n.actives.iter().enumerate() {
        for (ks, sb) in s.branches.iter().enumerate() {
            let Prefix::Output { chan, msg } = &sb.prefix else { continue };
            for (j, r) in n.actives.iter().enumerate() {
                if i == j && !s.replicated {
                    continue;
                }
                for (kr, rb) in r.branches.iter().enumerate() {
                    match &rb.prefix {
                        Prefix::Input { chan: c, .. } if c == chan => {}
                        _ => continue,
                    }
                    let si = instance(s, ks);
                    let ri = instance(r, kr);
                    let Prefix::Input { var, .. } = &ri.prefix else { unreachable!() };
                    let activated =
                        si.cont.binders.iter().chain(&ri.cont.binders).map(|b| b.name.display().to_string()).collect();
                    out.push(Fired {
                        redex: Redex {
                            kind: RedexKind::Comm {
                                sender: i,
                                sender_branch: ks,
                                receiver: j,
                                receiver_branch: kr,
                                channel: chan.display().to_string(),
                                message: msg.display().to_string(),
                            },
                            activated,
                        },
                        context: context_without(n, &[i, j]),
                        sender_cont: si.cont,
                        receiver: Some((var.clone(), ri.cont)),
                        message: Some(msg.clone()),
                    });
                }
            }
        }
    }
    out
}

/// All one-step successors, pruned.
pub fn successors(n: &NormalForm) -> Vec<(Redex, NormalForm)> {
    fire_all(n).into_iter().map(|f| (f.redex.clone(), prune(&f.assemble(n)))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::{canonical, nf};
    use crate::parser::parse;
    use std::collections::BTreeSet;

    fn succ_keys(src: &str) -> BTreeSet<String> {
        successors(&nf(&parse(src).unwrap())).into_iter().map(|(_, q)| canonical(&q).to_string()).collect()
    }

    #[test]
    fn zero_has_no_successors() {
        assert!(successors(&NormalForm::default()).is_empty());
    }

    #[test]
    fn two_taus() {
        let n = nf(&parse("tau.0 | tau.0").unwrap());
        let s = successors(&n);
        assert_eq!(s.len(), 2);
        let keys: BTreeSet<_> = s.iter().map(|(_, q)| canonical(q)).collect();
        assert_eq!(keys.len(), 1);
    }

    #[test]
    fn communication_substitutes() {
        let expect: BTreeSet<String> = [canonical(&nf(&parse("b<b>").unwrap())).to_string()].into();
        assert_eq!(succ_keys("a<b> | a(x).x<x>"), expect);
    }

    #[test]
    fn client_server_single_class() {
        let src = "new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | !tau.new m. c<m>)";
        let keys = succ_keys(src);
        assert_eq!(keys.len(), 1);
        let expect =
            "new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | (!tau.new m. c<m>) | (new m. c<m>))";
        assert_eq!(keys.into_iter().next().unwrap(), canonical(&nf(&parse(expect).unwrap())).to_string());
    }

    #[test]
    fn replication_talks_to_itself() {
        let n = nf(&parse("!(a<b> + a(x).x<x>)").unwrap());
        let s = successors(&n);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].1.actives.len(), 2);
    }

    #[test]
    fn annotations_survive_instantiation() {
        let n = nf(&parse("!tau.new m : m. c<m>").unwrap());
        let (_, q) = &successors(&n)[0];
        assert_eq!(q.binders.len(), 1);
        assert!(q.binders[0].ty.is_some());
        assert_ne!(q.binders[0].name, n.actives[0].branches[0].cont.binders[0].name);
    }
}
