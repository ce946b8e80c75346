//! Built-in example terms and coverability queries, with the outcomes the
//! analyses are expected to produce on them.

use serde::Serialize;

use crate::parser::parse;
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Process,
    /// A coverability query against [`CorpusEntry::query_for`].
    Query,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthClass {
    Bounded,
    Unbounded,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
    pub kind: EntryKind,
    /// Whether inference succeeds.
    pub typable: Option<bool>,
    pub depth: DepthClass,
    pub query_for: Option<&'static str>,
    /// Whether the query is coverable from its process.
    pub coverable: Option<bool>,
}

impl CorpusEntry {
    pub fn term(&self) -> Term {
        parse(self.source).expect("corpus entries parse")
    }
}

const fn process(
    name: &'static str,
    description: &'static str,
    source: &'static str,
    typable: bool,
    depth: DepthClass,
) -> CorpusEntry {
    CorpusEntry {
        name,
        description,
        source,
        kind: EntryKind::Process,
        typable: Some(typable),
        depth,
        query_for: None,
        coverable: None,
    }
}

const fn query(name: &'static str, description: &'static str, source: &'static str, coverable: bool) -> CorpusEntry {
    CorpusEntry {
        name,
        description,
        source,
        kind: EntryKind::Query,
        typable: None,
        depth: DepthClass::Unknown,
        query_for: Some("client_server"),
        coverable: Some(coverable),
    }
}

pub fn corpus() -> Vec<CorpusEntry> {
    use DepthClass::*;
    vec![
        process(
            "client_server",
            "a server on s answering each request with a fresh datum; unboundedly many clients, each with a private mailbox",
            "new s. new c. (!s(x).(new d. x<d>) | !c(m).(s<m> | m(y).c<m>) | !tau.new m. c<m>)",
            true,
            Bounded,
        ),
        process(
            "counter",
            "two resettable counters, each holding its value as pending messages on a private name",
            "(new p1. new t1. (!p1(t).(inc1?().(t!() | p1<t>) + dec1?().t?().p1<t> + rst1?().(new r1. p1<r1>)) | p1<t1>)) \
             | (new p2. new t2. (!p2(t).(inc2?().(t!() | p2<t>) + dec2?().t?().p2<t> + rst2?().(new r2. p2<r2>)) | p2<t2>))",
            true,
            Bounded,
        ),
        process(
            "ring",
            "a ring of processes that grows by one node per round",
            "new m. new s0. (!m(n).s0?().(new s. (!s?().n!() | m<s> | s!())) | m<s0> | s0!())",
            false,
            Unbounded,
        ),
        process(
            "crossed_pools",
            "depth-bounded but with no hierarchy that keeps it compatible",
            "(!tau.new a. p<a>) | (!tau.new b. q<b>) | !(p(x).!q(y).x<y> + q(x).!p(y).x<y>)",
            false,
            Bounded,
        ),
        process("linked_names", "three restrictions, one message linking two of them", "new a. new b. new c. (a(x) | b(x) | c(x) | a<b>)", true, Bounded),
        process("depth_p", "three restrictions at top level", "new a. new b. new c. (a(x) | b<c> | c(y))", true, Bounded),
        process(
            "depth_q",
            "the same process with restrictions pushed inwards",
            "(new a. a(x)) | (new c. ((new b. b<c>) | c(y)))",
            true,
            Bounded,
        ),
        process(
            "migratable_example",
            "an input whose continuation has migratable and non-migratable parts",
            "new f. a(x).new c. new d. new e. (x<c> | c<d> | a<e>.e<f>)",
            false,
            Bounded,
        ),
        process(
            "forwarder",
            "a replicated receiver forwarding what it receives on a lower channel",
            "new a. new b. new c. (!a(x).(new d. (a<d> | b<x>)) | a<c>)",
            true,
            Bounded,
        ),
        query(
            "one_msg",
            "a server and a client whose mailbox holds one answer",
            "new s. new m. (!s(x).(new d. x<d>) | m(y).c<m> | (new d. m<d>))",
            true,
        ),
        query(
            "two_msgs",
            "a server and a client whose mailbox holds two answers",
            "new s. new m. (!s(x).(new d. x<d>) | m(y).c<m> | (new d. m<d>) | (new d2. m<d2>))",
            false,
        ),
        query(
            "secrecy",
            "two clients that received the same datum",
            "new s. new m. new m2. (!s(x).(new d. x<d>) | m(y).c<m> | m2(y).c<m2> | (new d. (m<d> | m2<d>)))",
            false,
        ),
    ]
}

pub fn entry(name: &str) -> Option<CorpusEntry> {
    corpus().into_iter().find(|e| e.name == name)
}
