//! Markov sources on a state graph, dwell-time models, and the semi-Markov
//! kernel `Q(i, j, k) = P(i, j) * pmf(k)` they induce.

use std::io::Write;

use crate::error::{NncError, Result};
use crate::kmer_space::{PerronVector, StateGraph};

const ROW_TOLERANCE: f64 = 1e-12;
const STATIONARY_TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 1_000_000;

/// Transition kernel over the edges of a [`StateGraph`] together with its
/// initial and stationary distributions.
#[derive(Debug, Clone)]
pub struct MarkovSource {
    graph: StateGraph,
    probs: Vec<f64>,
    initial: Vec<f64>,
    stationary: Vec<f64>,
}

impl MarkovSource {
    /// `probs[e]` is the probability of edge `e`. Rows must sum to one; the
    /// initial distribution defaults to the stationary one.
    pub fn new(graph: StateGraph, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != graph.edge_count() {
            return Err(NncError::InvalidModel(format!(
                "{} edge probabilities for {} edges",
                probs.len(),
                graph.edge_count()
            )));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(NncError::InvalidModel("edge probability outside [0, 1]".into()));
        }
        for v in 0..graph.node_count() {
            let row: f64 = graph.out_edges(v).iter().map(|&e| probs[e]).sum();
            if (row - 1.0).abs() > ROW_TOLERANCE {
                return Err(NncError::InvalidModel(format!(
                    "row {} sums to {row}",
                    graph.kmer(v)
                )));
            }
        }
        let stationary = stationary_distribution(&graph, &probs)?;
        Ok(MarkovSource { initial: stationary.clone(), graph, probs, stationary })
    }

    /// Replaces the initial distribution `μ0`.
    pub fn with_initial(mut self, initial: Vec<f64>) -> Result<Self> {
        check_distribution(&initial, self.graph.node_count())?;
        self.initial = initial;
        Ok(self)
    }

    pub fn graph(&self) -> &StateGraph {
        &self.graph
    }

    pub fn state_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn edge_prob(&self, edge: usize) -> f64 {
        self.probs[edge]
    }

    /// `P(i, j)`; zero when `(i, j)` is not an edge.
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.graph.edge_between(i, j).map_or(0.0, |e| self.probs[e])
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Entropy rate `Σ μ(i) P(i,j) log2(1/P(i,j))` in bits per base.
    pub fn entropy_rate(&self) -> f64 {
        entropy_rate(self)
    }

    /// Writes `src_kmer,dst_kmer,prob` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "src_kmer,dst_kmer,prob")?;
        for (e, edge) in self.graph.edges().iter().enumerate() {
            writeln!(w, "{},{},{:.17e}", self.graph.kmer(edge.src), self.graph.kmer(edge.dst), self.probs[e])?;
        }
        Ok(())
    }
}

fn check_distribution(d: &[f64], n: usize) -> Result<()> {
    if d.len() != n {
        return Err(NncError::InvalidModel(format!("distribution over {} states, expected {n}", d.len())));
    }
    if d.iter().any(|p| !(*p >= 0.0)) || (d.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(NncError::InvalidModel("not a probability vector".into()));
    }
    Ok(())
}

/// `P(i, j) = 1 / outdeg(i)` on every edge.
pub fn uniform_kernel(g: &StateGraph) -> Result<MarkovSource> {
    let mut probs = vec![0.0; g.edge_count()];
    for v in 0..g.node_count() {
        let out = g.out_edges(v);
        if out.is_empty() {
            return Err(NncError::InvalidModel(format!("state {} has no outgoing edges", g.kmer(v))));
        }
        for &e in out {
            probs[e] = 1.0 / out.len() as f64;
        }
    }
    MarkovSource::new(g.clone(), probs)
}

/// Maxentropic (Parry) kernel `P(i, j) = v(j) / (λ v(i))` on edges, where
/// `λ, v` are the Perron root and right eigenvector of the adjacency matrix.
/// Its entropy rate equals `log2 λ`.
pub fn parry_kernel(g: &StateGraph) -> Result<MarkovSource> {
    let perron = PerronVector::compute(g)?;
    let v = &perron.right;
    let mut probs = vec![0.0; g.edge_count()];
    for i in 0..g.node_count() {
        let out = g.out_edges(i);
        for &e in out {
            probs[e] = v[g.edges()[e].dst] / (perron.root * v[i]);
        }
        // the eigenvector is only accurate to the iteration tolerance
        let row: f64 = out.iter().map(|&e| probs[e]).sum();
        for &e in out {
            probs[e] /= row;
        }
    }
    MarkovSource::new(g.clone(), probs)
}

/// Stationary distribution of the kernel `probs` on `g`, by power iteration
/// on the lazy chain `(P + I) / 2` (same fixed point, aperiodic) from the
/// uniform vector until the residual `max |μP - μ|` is at most 1e-12.
pub fn stationary_distribution(g: &StateGraph, probs: &[f64]) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n == 0 {
        return Err(NncError::InvalidModel("empty graph".into()));
    }
    let mut mu = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_ITERATIONS {
        apply_kernel(g, probs, &mu, &mut next);
        let residual = mu.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual <= STATIONARY_TOLERANCE {
            let total: f64 = mu.iter().sum();
            mu.iter_mut().for_each(|x| *x /= total);
            return Ok(mu);
        }
        for (m, x) in mu.iter_mut().zip(&next) {
            *m = 0.5 * (*m + x);
        }
    }
    Err(NncError::NoConvergence(MAX_ITERATIONS))
}

/// `out = μ P`.
fn apply_kernel(g: &StateGraph, probs: &[f64], mu: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (e, edge) in g.edges().iter().enumerate() {
        out[edge.dst] += mu[edge.src] * probs[e];
    }
}

pub fn entropy_rate(src: &MarkovSource) -> f64 {
    let mu = src.stationary();
    src.graph
        .edges()
        .iter()
        .zip(&src.probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(e, &p)| -mu[e.src] * p * p.log2())
        .sum()
}

/// Dwell-time distribution on a finite support `Λ ⊂ {1, 2, ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationModel {
    support: Vec<usize>,
    pmf: Vec<f64>,
}

impl DurationModel {
    /// General finite pmf given as `(k, probability)` pairs.
    pub fn new(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut pairs: Vec<(usize, f64)> = pairs.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        if pairs.is_empty() {
            return Err(NncError::InvalidModel("empty duration support".into()));
        }
        if pairs[0].0 == 0 {
            return Err(NncError::InvalidModel("duration 0 is not allowed".into()));
        }
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(NncError::InvalidModel("repeated duration".into()));
        }
        if pairs.iter().any(|p| !(p.1 > 0.0)) {
            return Err(NncError::InvalidModel("duration probabilities must be positive".into()));
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(NncError::InvalidModel(format!("duration pmf sums to {total}")));
        }
        Ok(DurationModel {
            support: pairs.iter().map(|p| p.0).collect(),
            pmf: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// `Uniform(Λ)`.
    pub fn uniform(support: &[usize]) -> Result<Self> {
        let p = 1.0 / support.len() as f64;
        Self::new(support.iter().map(|&k| (k, p)))
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.pmf
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.support.binary_search(&k).map_or(0.0, |i| self.pmf[i])
    }

    pub fn min(&self) -> usize {
        self.support[0]
    }

    pub fn max(&self) -> usize {
        *self.support.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.pmf).map(|(&k, p)| k as f64 * p).sum()
    }

    /// Compact textual form, e.g. `1..5` for a contiguous range or `{2,4}`.
    pub fn support_spec(&self) -> String {
        let contiguous = self.support.windows(2).all(|w| w[1] == w[0] + 1);
        if self.support.len() == 1 {
            self.support[0].to_string()
        } else if contiguous {
            format!("{}..{}", self.min(), self.max())
        } else {
            let items: Vec<String> = self.support.iter().map(|k| k.to_string()).collect();
            format!("{{{}}}", items.join(","))
        }
    }
}

/// Parses a duration support such as `1`, `1..5`, `{2,3}` or `1,2,4`.
pub fn parse_support(spec: &str) -> Result<Vec<usize>> {
    let bad = || NncError::Config(format!("invalid duration support {spec:?}"));
    let s = spec.trim().trim_start_matches('{').trim_end_matches('}').trim();
    let mut out = Vec::new();
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        out.extend(lo..=hi);
    } else {
        for item in s.split(',') {
            out.push(item.trim().parse().map_err(|_| bad())?);
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() || out[0] == 0 {
        return Err(bad());
    }
    Ok(out)
}

/// The pair (source, durations) viewed as a semi-Markov kernel.
#[derive(Debug, Clone)]
pub struct SemiMarkovKernel {
    pub source: MarkovSource,
    pub duration: DurationModel,
}

impl SemiMarkovKernel {
    pub fn new(source: MarkovSource, duration: DurationModel) -> Self {
        SemiMarkovKernel { source, duration }
    }

    /// `Q(i, j, k) = P(i, j) * pmf(k)`; zero off the edges and off `Λ`.
    pub fn q(&self, i: usize, j: usize, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.source.prob(i, j) * self.duration.pmf(k)
    }
}
