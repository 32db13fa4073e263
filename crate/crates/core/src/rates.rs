//! Achievable information rates from simulated blocks.
//!
//! The rate splits into the source entropy `Σ μ(i) P(i,j) log2(1/P(i,j))`
//! and a T-value term `Σ μ(i) P(i,j) T(i,j)`, where the per-edge T-values
//! are averages over segments of
//! `(ψ_ℓ(i,j) / (μ(i) P(i,j))) log2 ψ_ℓ(i,j) - (ψ_{ℓ-1}(i) / μ(i)) log2 ψ_{ℓ-1}(i)`.
//! Weighted by `μP` these telescope to minus the average conditional entropy
//! `H(S_ℓ | S_{ℓ-1}, Y)`, so the T-value term is never positive.

use std::io::Write;

use rayon::prelude::*;

use crate::channel::{simulate, NoiseModel, TraceSeed};
use crate::detection::{forward_backward, point_mass, DetectorOptions, PosteriorSet, SegmentLikelihood};
use crate::error::{NncError, Result};
use crate::logspace::xlog2x;
use crate::source::{DurationModel, MarkovSource};

/// Per-edge running sums of T-value contributions.
#[derive(Debug, Clone)]
pub struct TValueAccumulator {
    mu: Vec<f64>,
    probs: Vec<f64>,
    edges: Vec<(usize, usize)>,
    entropy_term: f64,
    sums: Vec<f64>,
    segments: u64,
    channel_uses: u64,
    /// T-value term of each block, for the across-block standard error.
    block_t_terms: Vec<f64>,
}

impl TValueAccumulator {
    pub fn new(src: &MarkovSource) -> Self {
        let g = src.graph();
        TValueAccumulator {
            mu: src.stationary().to_vec(),
            probs: src.edge_probs().to_vec(),
            edges: g.edges().iter().map(|e| (e.src, e.dst)).collect(),
            entropy_term: src.entropy_rate(),
            sums: vec![0.0; g.edge_count()],
            segments: 0,
            channel_uses: 0,
            block_t_terms: Vec::new(),
        }
    }

    pub fn segments(&self) -> u64 {
        self.segments
    }

    pub fn blocks(&self) -> usize {
        self.block_t_terms.len()
    }

    /// Adds one block's posteriors (segments `ℓ = 2..=m`).
    pub fn accumulate(&mut self, post: &PosteriorSet) -> Result<()> {
        if post.edges() != self.edges.as_slice() {
            return Err(NncError::ModelMismatch("posteriors computed on a different graph".into()));
        }
        let m = post.segments();
        let mut block = vec![0.0; self.sums.len()];
        for l in 2..=m {
            let prev = post.states_at(l - 1);
            for (e, &psi) in post.pairs_at(l).iter().enumerate() {
                let (i, _) = self.edges[e];
                let weight = self.mu[i] * self.probs[e];
                if weight == 0.0 {
                    if psi > 0.0 {
                        return Err(NncError::ModelMismatch(format!(
                            "edge {e} has zero prior weight but posterior {psi}"
                        )));
                    }
                    continue;
                }
                block[e] += xlog2x(psi) / weight - xlog2x(prev[i]) / self.mu[i];
            }
        }
        let block_segments = m.saturating_sub(1) as u64;
        if block_segments > 0 {
            let t_term: f64 = block
                .iter()
                .enumerate()
                .map(|(e, s)| self.mu[self.edges[e].0] * self.probs[e] * s / block_segments as f64)
                .sum();
            self.block_t_terms.push(t_term);
        }
        for (acc, b) in self.sums.iter_mut().zip(&block) {
            *acc += b;
        }
        self.segments += block_segments;
        self.channel_uses += m as u64;
        Ok(())
    }

    /// Folds another accumulator (same source) into this one, after it.
    pub fn merge(&mut self, other: &TValueAccumulator) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        self.segments += other.segments;
        self.channel_uses += other.channel_uses;
        self.block_t_terms.extend_from_slice(&other.block_t_terms);
    }

    /// Per-edge T-value estimates (per-segment averages).
    pub fn t_values(&self) -> Vec<f64> {
        let n = self.segments.max(1) as f64;
        self.sums.iter().map(|s| s / n).collect()
    }

    /// `Σ μ(i) P(i,j) T(i,j)`.
    pub fn t_term(&self) -> f64 {
        self.t_values()
            .iter()
            .enumerate()
            .map(|(e, t)| self.mu[self.edges[e].0] * self.probs[e] * t)
            .sum()
    }
}

/// Free-function form of [`TValueAccumulator::accumulate`].
pub fn accumulate_t_values(acc: &mut TValueAccumulator, post: &PosteriorSet) -> Result<()> {
    acc.accumulate(post)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Bits per base.
    pub rate: f64,
    pub entropy_term: f64,
    pub t_term: f64,
    /// Channel uses simulated.
    pub m_total: u64,
    pub blocks: usize,
    /// Across-block standard error of the rate.
    pub stderr: f64,
}

/// `rate = entropy term + T-value term`.
pub fn achievable_rate(acc: &TValueAccumulator) -> Result<RateEstimate> {
    if acc.blocks() == 0 {
        return Err(NncError::Config("no blocks accumulated".into()));
    }
    let t_term = acc.t_term();
    let b = acc.block_t_terms.len();
    let stderr = if b > 1 {
        let mean = acc.block_t_terms.iter().sum::<f64>() / b as f64;
        let var = acc.block_t_terms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        (var / b as f64).sqrt()
    } else {
        0.0
    };
    Ok(RateEstimate {
        rate: acc.entropy_term + t_term,
        entropy_term: acc.entropy_term,
        t_term,
        m_total: acc.channel_uses,
        blocks: b,
        stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub m_total: usize,
    pub block_len: usize,
    pub seed: u64,
    pub detector: DetectorOptions,
    /// Replace every emission density by one (observations carry nothing).
    pub flat_emissions: bool,
    /// Decode with μ0 = point mass at the simulated `S_0`; otherwise the
    /// stationary distribution.
    pub known_s0: bool,
}

impl MonteCarloConfig {
    pub fn new(m_total: usize, block_len: usize, seed: u64) -> Self {
        MonteCarloConfig { m_total, block_len, seed, detector: DetectorOptions::default(), flat_emissions: false, known_s0: true }
    }

    pub fn blocks(&self) -> usize {
        self.m_total / self.block_len
    }
}

/// Smallest block length accepted; the first segment of every block is not
/// counted, so short blocks bias the estimate.
pub const MIN_BLOCK_LEN: usize = 20;

/// One row of a rate sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub lambda_spec: String,
    pub estimate: RateEstimate,
    pub seed: u64,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "sigma,lambda_spec,rate_bits_per_base,stderr,entropy_term,t_term,m_total,blocks,seed")?;
    for r in rows {
        let e = &r.estimate;
        writeln!(
            w,
            "{},\"{}\",{:.6},{:.6},{:.6},{:.6},{},{},{}",
            r.sigma, r.lambda_spec, e.rate, e.stderr, e.entropy_term, e.t_term, e.m_total, e.blocks, r.seed
        )?;
    }
    Ok(())
}

/// Runs one block: simulate from the stationary distribution, decode with
/// the realized `S_0` known, and accumulate its T-values.
pub fn rate_block(
    src: &MarkovSource,
    dur: &DurationModel,
    noise: &NoiseModel,
    cfg: &MonteCarloConfig,
    block: usize,
) -> Result<TValueAccumulator> {
    let trace = simulate(src, dur, noise, cfg.block_len, TraceSeed::new(cfg.seed, block as u64))?;
    let sl = if cfg.flat_emissions {
        SegmentLikelihood::flat(src, dur, trace.total_samples())
    } else {
        SegmentLikelihood::new(src, dur, noise, &trace.samples)
    };
    let initial = if cfg.known_s0 { point_mass(src.state_count(), trace.s0) } else { src.stationary().to_vec() };
    let post = forward_backward(&sl, &initial, trace.m(), &cfg.detector)?;
    let mut acc = TValueAccumulator::new(src);
    acc.accumulate(&post)?;
    Ok(acc)
}

/// Monte Carlo rate estimate over `m_total / block_len` independent blocks.
/// Blocks run in parallel on the current rayon pool and are merged in block
/// order, so the result does not depend on the number of workers.
pub fn monte_carlo_rate(
    src: &MarkovSource,
    dur: &DurationModel,
    noise: &NoiseModel,
    cfg: &MonteCarloConfig,
) -> Result<RateEstimate> {
    if cfg.block_len < MIN_BLOCK_LEN {
        return Err(NncError::Config(format!("block length must be at least {MIN_BLOCK_LEN}")));
    }
    if cfg.m_total < cfg.block_len || cfg.m_total % cfg.block_len != 0 {
        return Err(NncError::Config(format!(
            "m_total {} is not a positive multiple of block length {}",
            cfg.m_total, cfg.block_len
        )));
    }
    let blocks: Vec<TValueAccumulator> = (0..cfg.blocks())
        .into_par_iter()
        .map(|b| rate_block(src, dur, noise, cfg, b))
        .collect::<Result<_>>()?;
    let mut acc = TValueAccumulator::new(src);
    for b in &blocks {
        acc.merge(b);
    }
    achievable_rate(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmer_space::fixtures;
    use crate::source::{parry_kernel, uniform_kernel};

    #[test]
    fn deterministic_noiseless_rate_is_zero() {
        let src = uniform_kernel(&fixtures::fig2_chain()).unwrap();
        let dur = DurationModel::uniform(&[1]).unwrap();
        let noise = NoiseModel::constant(1e-3).unwrap();
        let est = monte_carlo_rate(&src, &dur, &noise, &MonteCarloConfig::new(40, 20, 1)).unwrap();
        assert_eq!(est.entropy_term, 0.0);
        assert!(est.t_term.abs() < 1e-12);
        assert!(est.rate.abs() < 1e-12);
        assert_eq!(est.blocks, 2);
        assert_eq!(est.m_total, 40);
    }

    #[test]
    fn block_config_validated() {
        let src = parry_kernel(&fixtures::fig3_graph()).unwrap();
        let dur = DurationModel::uniform(&[1]).unwrap();
        let noise = NoiseModel::constant(0.2).unwrap();
        assert!(monte_carlo_rate(&src, &dur, &noise, &MonteCarloConfig::new(100, 10, 1)).is_err());
        assert!(monte_carlo_rate(&src, &dur, &noise, &MonteCarloConfig::new(110, 20, 1)).is_err());
    }

    #[test]
    fn rate_bounded_by_entropy() {
        let src = parry_kernel(&fixtures::fig3_graph()).unwrap();
        let dur = DurationModel::uniform(&[1, 2]).unwrap();
        let noise = NoiseModel::constant(0.4).unwrap();
        let est = monte_carlo_rate(&src, &dur, &noise, &MonteCarloConfig::new(400, 40, 3)).unwrap();
        assert!(est.t_term <= 1e-12);
        assert!(est.rate >= 0.0);
        assert!(est.rate <= est.entropy_term + 1e-9);
        assert!((est.rate - (est.entropy_term + est.t_term)).abs() < 1e-15);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let src = parry_kernel(&fixtures::fig3_graph()).unwrap();
        let dur = DurationModel::uniform(&[1, 2, 3]).unwrap();
        let noise = NoiseModel::constant(0.35).unwrap();
        let cfg = MonteCarloConfig::new(200, 40, 9);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo_rate(&src, &dur, &noise, &cfg).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
