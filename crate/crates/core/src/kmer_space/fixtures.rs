//! Bundled models: the seven-state jump-constrained example graph, a τ=2 toy
//! table and the alternating two-state chain.

use std::path::Path;

use super::{full_graph, parse_kmer_model, Base, ChannelMapping, KmerState, StateGraph};

/// Seven τ=5 states with their (rounded, z-scored) levels.
pub const FIG3_TSV: &str = "\
kmer\tlevel_mean
CTCGT\t0.19
TCGTC\t-1.3
CGTCT\t1.6
TCTCG\t1.6
GTCTC\t-0.031
CTCTC\t0.094
TCTCT\t1.5
";

pub const FIG3_JMIN: f64 = 1.38;

pub fn fig3_mapping() -> ChannelMapping {
    parse_kmer_model(FIG3_TSV, Path::new("<fixture:fig3>")).expect("bundled fixture parses")
}

/// Shift graph induced by the seven states; it has exactly nine edges, all
/// with jumping distance at least 1.38.
pub fn fig3_graph() -> StateGraph {
    StateGraph::induced(&fig3_mapping()).expect("bundled fixture is consistent")
}

/// Complete τ=2 table with distinct levels `-1.875 + 0.25 * ((7 i) mod 16)`.
pub fn tau2_toy_mapping() -> ChannelMapping {
    let mut m = ChannelMapping::new(2).unwrap();
    for k in KmerState::all(2).unwrap() {
        let level = -1.875 + 0.25 * ((7 * k.index()) % 16) as f64;
        m.insert(k, level, None).unwrap();
    }
    m
}

pub fn tau2_toy_graph() -> StateGraph {
    full_graph(&tau2_toy_mapping()).unwrap()
}

/// Two τ=1 states `A` (level 1.0) and `C` (level -1.0) that must alternate.
pub fn fig2_chain() -> StateGraph {
    let a: KmerState = "A".parse().unwrap();
    let c: KmerState = "C".parse().unwrap();
    StateGraph::from_parts(1, vec![(a, 1.0, None), (c, -1.0, None)], vec![(a, Base::C), (c, Base::A)]).unwrap()
}

pub fn fig2_mapping() -> ChannelMapping {
    let mut m = ChannelMapping::new(1).unwrap();
    m.insert("A".parse().unwrap(), 1.0, None).unwrap();
    m.insert("C".parse().unwrap(), -1.0, None).unwrap();
    m
}

/// Fixture ids accepted on the command line.
pub fn mapping_by_id(id: &str) -> Option<ChannelMapping> {
    match id {
        "fig3" => Some(fig3_mapping()),
        "tau2" => Some(tau2_toy_mapping()),
        "fig2" => Some(fig2_mapping()),
        _ => None,
    }
}
