#![allow(dead_code)]

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nnc_core::channel::{simulate, NoiseModel, TraceSeed};
use nnc_core::kmer_space::{scc_partition, Base, ChannelMapping, KmerState, StateGraph};
use nnc_core::source::{DurationModel, MarkovSource};

pub mod classical;

/// One observation together with the model that produced it.
pub struct Instance {
    pub src: MarkovSource,
    pub dur: DurationModel,
    pub noise: NoiseModel,
    pub sigma: f64,
    pub initial: Vec<f64>,
    pub m: usize,
    pub samples: Vec<f64>,
    pub true_states: Vec<usize>,
}

pub struct InstanceSpec {
    pub max_states: usize,
    pub max_m: usize,
    /// Durations are a random non-empty subset of this set.
    pub durations: Vec<usize>,
    pub sigma: (f64, f64),
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random strongly connected graph on `n ≤ 4` single-base states with
/// random levels in [-2, 2].
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> StateGraph {
    let mut bases = Base::ALL.to_vec();
    bases.shuffle(rng);
    let mut mapping = ChannelMapping::new(1).unwrap();
    for b in &bases[..n] {
        mapping.insert(KmerState::from_bases(&[*b]).unwrap(), rng.random_range(-2.0..2.0), None).unwrap();
    }
    let full = StateGraph::induced(&mapping).unwrap();
    loop {
        let g = full.filter_edges(|_| rng.random_bool(0.6));
        let ok = (0..g.node_count()).all(|v| !g.out_edges(v).is_empty()) && scc_partition(&g).len() == 1;
        if ok {
            return g;
        }
    }
}

pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

pub fn random_source(rng: &mut ChaCha8Rng, g: StateGraph) -> MarkovSource {
    let mut probs = vec![0.0; g.edge_count()];
    for v in 0..g.node_count() {
        let out = g.out_edges(v).to_vec();
        for (e, p) in out.iter().zip(random_simplex(rng, out.len())) {
            probs[*e] = p;
        }
    }
    MarkovSource::new(g, probs).unwrap()
}

pub fn random_instance(rng: &mut ChaCha8Rng, spec: &InstanceSpec) -> Instance {
    let n = rng.random_range(1..=spec.max_states);
    let g = random_graph(rng, n);
    let src = random_source(rng, g);
    let initial = if rng.random_bool(0.3) {
        let mut v = vec![0.0; n];
        v[rng.random_range(0..n)] = 1.0;
        v
    } else {
        random_simplex(rng, n)
    };
    let src = src.with_initial(initial.clone()).unwrap();
    let mut support: Vec<usize> = spec.durations.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
    if support.is_empty() {
        support.push(*spec.durations.choose(rng).unwrap());
    }
    let pmf = random_simplex(rng, support.len());
    let dur = DurationModel::new(support.into_iter().zip(pmf)).unwrap();
    let sigma = rng.random_range(spec.sigma.0..=spec.sigma.1);
    let noise = NoiseModel::constant(sigma).unwrap();
    let m = rng.random_range(1..=spec.max_m);
    let trace = simulate(&src, &dur, &noise, m, TraceSeed::new(rng.random(), 0)).unwrap();
    Instance { src, dur, noise, sigma, initial, m, samples: trace.samples, true_states: trace.states }
}

/// `|a - b| <= tol * max(|a|, |b|)`, with an absolute floor for values
/// that underflow on one route.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()) || (a - b).abs() <= 1e-290
}
