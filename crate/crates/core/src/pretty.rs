//! Printing terms back into the concrete syntax.
//!
//! Output re-parses to an α-equivalent term. Binders whose display clashes
//! with another name are printed with a numeric suffix.

use std::collections::{BTreeSet, HashMap};

use crate::normal_form::{NormalForm, Sequential};
use crate::term::{unique_display, Branch, Name, Prefix, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrettyMode {
    /// Annotations omitted.
    Canonical,
    /// Restrictions printed as `new x : TY.`.
    Annotated,
}

pub fn pretty(t: &Term) -> String {
    pretty_with(t, PrettyMode::Annotated)
}

pub fn pretty_with(t: &Term, mode: PrettyMode) -> String {
    let names = display_map(t);
    let mut out = String::new();
    Printer { names: &names, mode }.process(t, Ctx::Top, &mut out);
    out
}

pub fn pretty_nf(nf: &NormalForm) -> String {
    pretty(&nf.to_term())
}

pub fn pretty_seq(s: &Sequential) -> String {
    pretty(&s.to_term())
}

/// Assigns every name of `t` a printable, clash-free display.
pub fn display_map(t: &Term) -> HashMap<Name, String> {
    let mut used = BTreeSet::new();
    let mut map = HashMap::new();
    for x in t.free_names() {
        let d = unique_display(x.display(), &mut used);
        map.insert(x, d);
    }
    assign_binders(t, &mut used, &mut map);
    map
}

fn assign_binders(t: &Term, used: &mut BTreeSet<String>, map: &mut HashMap<Name, String>) {
    match t {
        Term::Nil => {}
        Term::Restrict { name, body, .. } => {
            if !map.contains_key(name) {
                let d = unique_display(name.display(), used);
                map.insert(name.clone(), d);
            }
            assign_binders(body, used, map);
        }
        Term::Par(l, r) => {
            assign_binders(l, used, map);
            assign_binders(r, used, map);
        }
        Term::Choice(bs) | Term::Repl(bs) => {
            for b in bs {
                if let Some(v) = b.prefix.bound_var() {
                    if !map.contains_key(v) {
                        let d = unique_display(v.display(), used);
                        map.insert(v.clone(), d);
                    }
                }
                assign_binders(&b.cont, used, map);
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    /// Extends to the end of the enclosing text.
    Top,
    /// An operand of `|`.
    ParOperand,
    /// After a prefix dot.
    Cont,
}

struct Printer<'a> {
    names: &'a HashMap<Name, String>,
    mode: PrettyMode,
}

impl Printer<'_> {
    fn name(&self, n: &Name) -> String {
        self.names.get(n).cloned().unwrap_or_else(|| n.display().to_string())
    }

    fn process(&self, t: &Term, ctx: Ctx, out: &mut String) {
        match t {
            Term::Nil => out.push('0'),
            Term::Par(..) => {
                let mut items = Vec::new();
                flatten_par(t, &mut items);
                let wrap = ctx == Ctx::Cont;
                if wrap {
                    out.push('(');
                }
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" | ");
                    }
                    self.process(item, Ctx::ParOperand, out);
                }
                if wrap {
                    out.push(')');
                }
            }
            Term::Restrict { name, ty, body } => {
                let wrap = ctx != Ctx::Top;
                if wrap {
                    out.push('(');
                }
                out.push_str("new ");
                out.push_str(&self.name(name));
                if let (Some(ty), PrettyMode::Annotated) = (ty, self.mode) {
                    out.push_str(&format!(" : {ty}"));
                }
                out.push_str(". ");
                self.process(body, Ctx::Top, out);
                if wrap {
                    out.push(')');
                }
            }
            Term::Choice(bs) => {
                let wrap = ctx == Ctx::Cont && bs.len() > 1;
                if wrap {
                    out.push('(');
                }
                self.branches(bs, out);
                if wrap {
                    out.push(')');
                }
            }
            Term::Repl(bs) => {
                let wrap = ctx == Ctx::Cont;
                if wrap {
                    out.push('(');
                }
                out.push('!');
                if bs.len() > 1 {
                    out.push('(');
                    self.branches(bs, out);
                    out.push(')');
                } else {
                    self.branches(bs, out);
                }
                if wrap {
                    out.push(')');
                }
            }
        }
    }

    fn branches(&self, bs: &[Branch], out: &mut String) {
        for (i, b) in bs.iter().enumerate() {
            if i > 0 {
                out.push_str(" + ");
            }
            match &b.prefix {
                Prefix::Tau => out.push_str("tau"),
                Prefix::Input { chan, var } => out.push_str(&format!("{}({})", self.name(chan), self.name(var))),
                Prefix::Output { chan, msg } => out.push_str(&format!("{}<{}>", self.name(chan), self.name(msg))),
            }
            if b.cont != Term::Nil {
                out.push('.');
                self.process(&b.cont, Ctx::Cont, out);
            }
        }
    }
}

fn flatten_par<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
    match t {
        Term::Par(l, r) => {
            flatten_par(l, out);
            flatten_par(r, out);
        }
        other => out.push(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn round_trip(src: &str) {
        let t = parse(src).unwrap();
        let text = pretty(&t);
        let back = parse(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert!(back.alpha_eq(&t), "{src}\n{text}");
    }

    #[test]
    fn round_trips() {
        round_trip("new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | !tau.new m. c<m>)");
        round_trip("a(x).(b<x> + c(y).0) | (new z : t[u]. z<q>)");
        round_trip("!(p(x).!q(y).x<y> + q(x).!p(y).x<y>)");
        round_trip("a(x).new y. y<x> + b(z)");
        round_trip("new a. a!() + a?().b!()");
        round_trip("tau.!a(x) | 0");
    }

    #[test]
    fn canonical_mode_drops_annotations() {
        let t = parse("new z : t[u]. z<q>").unwrap();
        assert_eq!(pretty_with(&t, PrettyMode::Canonical), "new z. z<q>");
        assert_eq!(pretty(&t), "new z : t[u]. z<q>");
    }

    #[test]
    fn clashing_displays_get_suffixes() {
        let x1 = Name::fresh("x");
        let x2 = Name::fresh("x");
        let t = Term::par(
            Term::restrict(
                x1.clone(),
                None,
                Term::prefixed(Prefix::Tau, Term::prefixed(Prefix::Output { chan: x1.clone(), msg: x1 }, Term::Nil)),
            ),
            Term::restrict(x2.clone(), None, Term::prefixed(Prefix::Output { chan: x2.clone(), msg: x2 }, Term::Nil)),
        );
        assert_eq!(pretty(&t), "(new x. tau.x<x>) | (new x1. x1<x1>)");
    }
}
