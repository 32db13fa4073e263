//! K-mer state space of the nanopore: shift-register states, the level
//! mapping `f`, and the directed state graphs built from it.
//!
//! A [`KmerState`] packs τ bases into a base-4 integer with the oldest base
//! in the most significant position, so that canonical index order equals
//! lexicographic order under `A < C < G < T`.

mod calibrate;
mod debruijn;
mod entropy;
pub mod fixtures;
mod io;
mod reduce;
mod scc;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{NncError, Result};

pub use calibrate::{calibrate_mapping, CalibrationRecord, CoverageReport};
pub use debruijn::{de_bruijn_linear, de_bruijn_sequence};
pub use entropy::{max_entropy_component, perron_entropy, perron_root, PerronVector};
pub use io::{parse_kmer_model, read_kmer_model, write_edge_csv};
pub use reduce::jump_constrained_reduce;
pub use scc::{scc_partition, strongly_connected_components};

/// Largest supported memory constraint; 4^12 states is already far beyond
/// what the detectors can handle.
pub const MAX_TAU: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    A = 0,
    C = 1,
    G = 2,
    T = 3,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::T];

    pub fn from_code(code: u32) -> Base {
        Base::ALL[(code & 3) as usize]
    }

    pub fn code(self) -> u32 {
        self as u32
    }

    pub fn as_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::T => 'T',
        }
    }

    pub fn from_char(c: char) -> Option<Base> {
        match c {
            'A' => Some(Base::A),
            'C' => Some(Base::C),
            'G' => Some(Base::G),
            'T' => Some(Base::T),
            _ => None,
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Parses a string of uppercase bases.
pub fn parse_bases(s: &str) -> Result<Vec<Base>> {
    s.chars()
        .map(|c| Base::from_char(c).ok_or_else(|| NncError::InvalidKmer(s.to_string())))
        .collect()
}

/// A τ-mer held in the pore.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KmerState {
    tau: u8,
    code: u32,
}

impl KmerState {
    pub fn new(tau: usize, code: u32) -> Result<Self> {
        if tau == 0 || tau > MAX_TAU {
            return Err(NncError::InvalidKmer(format!("tau={tau}")));
        }
        if u64::from(code) >= 1u64 << (2 * tau) {
            return Err(NncError::InvalidKmer(format!("code {code} out of range for tau={tau}")));
        }
        Ok(KmerState { tau: tau as u8, code })
    }

    pub fn from_bases(bases: &[Base]) -> Result<Self> {
        let code = bases.iter().fold(0u32, |acc, b| (acc << 2) | b.code());
        KmerState::new(bases.len(), code)
    }

    pub fn tau(&self) -> usize {
        self.tau as usize
    }

    /// Canonical index in `[0, 4^τ)`.
    pub fn index(&self) -> usize {
        self.code as usize
    }

    pub fn bases(&self) -> Vec<Base> {
        (0..self.tau())
            .rev()
            .map(|i| Base::from_code(self.code >> (2 * i)))
            .collect()
    }

    /// Most recently shifted-in base.
    pub fn newest(&self) -> Base {
        Base::from_code(self.code)
    }

    /// Drops the oldest base and appends `b`.
    pub fn shift_successor(&self, b: Base) -> KmerState {
        let mask = (1u32 << (2 * self.tau())) - 1;
        KmerState {
            tau: self.tau,
            code: ((self.code << 2) | b.code()) & mask,
        }
    }

    pub fn all(tau: usize) -> Result<impl Iterator<Item = KmerState>> {
        KmerState::new(tau, 0)?;
        Ok((0..(1u32 << (2 * tau))).map(move |code| KmerState { tau: tau as u8, code }))
    }
}

impl fmt::Display for KmerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bases() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for KmerState {
    type Err = NncError;

    fn from_str(s: &str) -> Result<Self> {
        KmerState::from_bases(&parse_bases(s)?)
    }
}

/// Free function form of [`KmerState::shift_successor`].
pub fn shift_successor(s: KmerState, b: Base) -> KmerState {
    s.shift_successor(b)
}

/// The level map `f` (and optional per-state standard deviations) over τ-mers.
/// May be partial, e.g. when loaded from a table listing a subset of states.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMapping {
    tau: usize,
    levels: BTreeMap<KmerState, f64>,
    sds: BTreeMap<KmerState, f64>,
}

impl ChannelMapping {
    pub fn new(tau: usize) -> Result<Self> {
        KmerState::new(tau, 0)?;
        Ok(ChannelMapping { tau, levels: BTreeMap::new(), sds: BTreeMap::new() })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn insert(&mut self, kmer: KmerState, level: f64, sd: Option<f64>) -> Result<()> {
        if kmer.tau() != self.tau {
            return Err(NncError::InvalidModel(format!(
                "k-mer {kmer} has length {}, expected {}",
                kmer.tau(),
                self.tau
            )));
        }
        if !level.is_finite() {
            return Err(NncError::InvalidModel(format!("non-finite level for {kmer}")));
        }
        self.levels.insert(kmer, level);
        match sd {
            Some(sd) if !(sd > 0.0 && sd.is_finite()) => {
                return Err(NncError::InvalidModel(format!("non-positive sd for {kmer}")))
            }
            Some(sd) => {
                self.sds.insert(kmer, sd);
            }
            None => {
                self.sds.remove(&kmer);
            }
        }
        Ok(())
    }

    pub fn level(&self, kmer: &KmerState) -> Option<f64> {
        self.levels.get(kmer).copied()
    }

    pub fn sd(&self, kmer: &KmerState) -> Option<f64> {
        self.sds.get(kmer).copied()
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.levels.len() == 1 << (2 * self.tau)
    }

    /// Whether every mapped state also carries a standard deviation.
    pub fn has_all_sds(&self) -> bool {
        !self.levels.is_empty() && self.levels.keys().all(|k| self.sds.contains_key(k))
    }

    pub fn kmers(&self) -> impl Iterator<Item = KmerState> + '_ {
        self.levels.keys().copied()
    }

    /// Pairs of distinct states with bit-identical levels. `f` should be
    /// injective, but rounded tables routinely collide, so this is reported
    /// rather than rejected.
    pub fn level_collisions(&self) -> Vec<(KmerState, KmerState)> {
        let mut sorted: Vec<(f64, KmerState)> = self.levels.iter().map(|(k, v)| (*v, *k)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = Vec::new();
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                out.push((w[0].1, w[1].1));
            }
        }
        out
    }
}

/// A labelled directed edge of a [`StateGraph`]; `dst` is the shift successor
/// of `src` under `input`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub input: Base,
}

/// Directed graph over τ-mer states with their levels.
///
/// Nodes are kept in canonical k-mer order; edges are ordered by
/// `(src, input)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGraph {
    tau: usize,
    kmers: Vec<KmerState>,
    levels: Vec<f64>,
    sds: Option<Vec<f64>>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl StateGraph {
    /// Builds a graph from `(kmer, level, sd)` nodes and `(src, input)` edges.
    /// Every edge target must be one of the nodes.
    pub fn from_parts(
        tau: usize,
        nodes: Vec<(KmerState, f64, Option<f64>)>,
        edges: impl IntoIterator<Item = (KmerState, Base)>,
    ) -> Result<Self> {
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.0);
        nodes.dedup_by_key(|n| n.0);
        for (k, level, _) in &nodes {
            if k.tau() != tau {
                return Err(NncError::InvalidModel(format!("k-mer {k} does not have length {tau}")));
            }
            if !level.is_finite() {
                return Err(NncError::InvalidModel(format!("non-finite level for {k}")));
            }
        }
        let kmers: Vec<KmerState> = nodes.iter().map(|n| n.0).collect();
        let levels: Vec<f64> = nodes.iter().map(|n| n.1).collect();
        let sds = if !nodes.is_empty() && nodes.iter().all(|n| n.2.is_some()) {
            Some(nodes.iter().map(|n| n.2.unwrap()).collect())
        } else {
            None
        };
        let lookup = |k: &KmerState| kmers.binary_search(k).ok();
        let mut edge_list = Vec::new();
        for (src, input) in edges {
            let s = lookup(&src).ok_or_else(|| NncError::InvalidModel(format!("edge source {src} is not a node")))?;
            let dst = src.shift_successor(input);
            let d = lookup(&dst).ok_or_else(|| NncError::InvalidModel(format!("edge target {dst} is not a node")))?;
            edge_list.push(Edge { src: s, dst: d, input });
        }
        edge_list.sort_by_key(|e| (e.src, e.input));
        edge_list.dedup();
        Ok(Self::assemble(tau, kmers, levels, sds, edge_list))
    }

    fn assemble(tau: usize, kmers: Vec<KmerState>, levels: Vec<f64>, sds: Option<Vec<f64>>, edges: Vec<Edge>) -> Self {
        let n = kmers.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (e, edge) in edges.iter().enumerate() {
            out_edges[edge.src].push(e);
            in_edges[edge.dst].push(e);
        }
        StateGraph { tau, kmers, levels, sds, edges, out_edges, in_edges }
    }

    /// The subgraph of the shift graph induced by the states present in
    /// `mapping`: every shift edge between two mapped states is kept.
    pub fn induced(mapping: &ChannelMapping) -> Result<Self> {
        let nodes: Vec<_> = mapping
            .kmers()
            .map(|k| (k, mapping.level(&k).unwrap(), mapping.sd(&k)))
            .collect();
        let present: std::collections::BTreeSet<KmerState> = mapping.kmers().collect();
        let edges: Vec<(KmerState, Base)> = present
            .iter()
            .flat_map(|k| Base::ALL.iter().map(move |b| (*k, *b)))
            .filter(|(k, b)| present.contains(&k.shift_successor(*b)))
            .collect();
        StateGraph::from_parts(mapping.tau(), nodes, edges)
    }

    /// Same nodes, keeping only edges for which `keep` holds.
    pub fn filter_edges(&self, mut keep: impl FnMut(&Edge) -> bool) -> StateGraph {
        let edges: Vec<Edge> = self.edges.iter().copied().filter(|e| keep(e)).collect();
        Self::assemble(self.tau, self.kmers.clone(), self.levels.clone(), self.sds.clone(), edges)
    }

    /// Subgraph on the given node indices with only the edges among them.
    pub fn subgraph(&self, nodes: &[usize]) -> StateGraph {
        let mut sorted = nodes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut remap = vec![usize::MAX; self.kmers.len()];
        for (new, &old) in sorted.iter().enumerate() {
            remap[old] = new;
        }
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| remap[e.src] != usize::MAX && remap[e.dst] != usize::MAX)
            .map(|e| Edge { src: remap[e.src], dst: remap[e.dst], input: e.input })
            .collect();
        Self::assemble(
            self.tau,
            sorted.iter().map(|&i| self.kmers[i]).collect(),
            sorted.iter().map(|&i| self.levels[i]).collect(),
            self.sds.as_ref().map(|s| sorted.iter().map(|&i| s[i]).collect()),
            edges,
        )
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn node_count(&self) -> usize {
        self.kmers.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kmers(&self) -> &[KmerState] {
        &self.kmers
    }

    pub fn kmer(&self, node: usize) -> KmerState {
        self.kmers[node]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level(&self, node: usize) -> f64 {
        self.levels[node]
    }

    pub fn sds(&self) -> Option<&[f64]> {
        self.sds.as_deref()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge indices leaving `node`.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    /// Edge indices entering `node`.
    pub fn in_edges(&self, node: usize) -> &[usize] {
        &self.in_edges[node]
    }

    pub fn node_of(&self, kmer: &KmerState) -> Option<usize> {
        self.kmers.binary_search(kmer).ok()
    }

    pub fn edge_between(&self, src: usize, dst: usize) -> Option<usize> {
        self.out_edges[src].iter().copied().find(|&e| self.edges[e].dst == dst)
    }

    /// `|f(src) - f(dst)|` of an edge.
    pub fn jump(&self, edge: usize) -> f64 {
        let e = self.edges[edge];
        (self.levels[e.src] - self.levels[e.dst]).abs()
    }

    pub fn has_self_loops(&self) -> bool {
        self.edges.iter().any(|e| e.src == e.dst)
    }

    /// Smallest canonical k-mer index among the nodes; used to order components.
    pub fn min_kmer_index(&self) -> Option<usize> {
        self.kmers.first().map(|k| k.index())
    }
}

/// The complete shift graph: all 4^τ states, each with four outgoing edges.
pub fn full_graph(mapping: &ChannelMapping) -> Result<StateGraph> {
    let tau = mapping.tau();
    let mut nodes = Vec::with_capacity(1 << (2 * tau));
    for k in KmerState::all(tau)? {
        let level = mapping.level(&k).ok_or_else(|| NncError::MissingLevel(k.to_string()))?;
        nodes.push((k, level, mapping.sd(&k)));
    }
    let edges: Vec<(KmerState, Base)> = nodes
        .iter()
        .flat_map(|n| Base::ALL.iter().map(move |b| (n.0, *b)))
        .collect();
    StateGraph::from_parts(tau, nodes, edges)
}
