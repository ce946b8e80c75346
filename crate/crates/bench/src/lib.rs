//! Benchmark inputs shared by the criterion benches.

use pi_hier_core::corpus::entry;
use pi_hier_core::gen::{random_annotation, random_hierarchy, random_net, random_term, rng, TermConfig};
use pi_hier_core::{encode_reset_net, Encoded, Hierarchy, Term};

/// Parsed corpus entry; panics on an unknown name.
pub fn corpus_term(name: &str) -> Term {
    entry(name).unwrap_or_else(|| panic!("no corpus entry {name}")).term()
}

/// Annotated random terms at the largest generator settings, each with its
/// hierarchy.
pub fn annotated_terms(seed: u64, count: usize) -> Vec<(Hierarchy, Term)> {
    let mut g = rng(seed);
    (0..count)
        .map(|_| {
            let t = random_term(&mut g, TermConfig::default());
            let h = random_hierarchy(&mut g, 3);
            let a = random_annotation(&mut g, &t, &h);
            (h, a)
        })
        .collect()
}

pub fn encoded_nets(seed: u64, count: usize) -> Vec<Encoded> {
    let mut g = rng(seed);
    (0..count).map(|_| encode_reset_net(&random_net(&mut g, 3, 3)).expect("generated nets are valid")).collect()
}
