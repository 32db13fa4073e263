//! MAP detection for the noisy nanopore channel when the number of segments
//! `m` and the final jump time `T_m` are known.
//!
//! All lattices are indexed by segment `ℓ`, sample index `t` and state `s`,
//! where a cell refers to segment `ℓ` *ending* at `t`: `α_{ℓ,t}(s)` is
//! `P(Y_1^t, S_ℓ = s, T_ℓ = t)` and `β_{ℓ,t}(s)` is
//! `P(Y_{t+1}^{T_m} | S_ℓ = s, T_ℓ = t)`. Everything is kept in natural-log
//! domain. Only the cells inside [`feasible_band`] are stored.

mod forward_backward;
mod report;
mod viterbi;

use crate::channel::{gaussian_log_density, NoiseModel};
use crate::error::{NncError, Result};
use crate::source::{DurationModel, MarkovSource};

pub use forward_backward::{
    backward, evidence_by_segment, forward, forward_backward, posteriors, BackwardLattice, ForwardLattice,
    PosteriorSet,
};
pub use report::{write_segmentation_csv, write_symbol_report};
pub use viterbi::{path_log_score, viterbi, ViterbiResult};

/// Knobs shared by the lattice algorithms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DetectorOptions {
    /// Drop lattice cells more than this many nats below the best cell of
    /// the same segment. Lossy; `None` keeps every feasible cell.
    pub prune_delta: Option<f64>,
}

/// Range of jump times `T_ℓ` consistent with `m` segments ending at `t_total`
/// given durations in `[min_k, max_k]`. Valid for `ℓ = 0` too, where it is `{0}`.
pub fn feasible_band(l: usize, m: usize, t_total: usize, min_k: usize, max_k: usize) -> Result<(usize, usize)> {
    if l > m {
        return Err(NncError::Infeasible(format!("segment {l} beyond m = {m}")));
    }
    let (l, m, t, min_k, max_k) = (l as i64, m as i64, t_total as i64, min_k as i64, max_k as i64);
    let lo = (l * min_k).max(t - (m - l) * max_k);
    let hi = (l * max_k).min(t - (m - l) * min_k);
    if lo > hi || lo < 0 {
        return Err(NncError::Infeasible(format!(
            "no jump time for segment {l} of {m} with T_m = {t} and durations in [{min_k}, {max_k}]"
        )));
    }
    Ok((lo as usize, hi as usize))
}

/// Evaluator of the log segment likelihood
/// `log γ_{t'+1}^{t}(i, j) = log Q(i, j, t - t') + Σ_{r=t'+1}^{t} log p(y_r | j)`
/// for one observation sequence. Per-state prefix sums of the emission
/// log-densities make each evaluation O(1).
#[derive(Debug, Clone)]
pub struct SegmentLikelihood {
    n: usize,
    t_total: usize,
    /// `(src, dst, ln P)` per edge of the source graph.
    edges: Vec<(usize, usize, f64)>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    /// `(k, ln pmf(k))` in increasing `k`.
    durations: Vec<(usize, f64)>,
    /// `prefix[s * (T + 1) + t] = Σ_{r <= t} ln p(y_r | s)`.
    prefix: Vec<f64>,
}

impl SegmentLikelihood {
    pub fn new(src: &MarkovSource, dur: &DurationModel, noise: &NoiseModel, samples: &[f64]) -> Self {
        let g = src.graph();
        let n = g.node_count();
        let width = samples.len() + 1;
        let mut prefix = vec![0.0; n * width];
        for s in 0..n {
            let (mean, sd) = (g.level(s), noise.sd(s));
            let row = &mut prefix[s * width..(s + 1) * width];
            for (t, &y) in samples.iter().enumerate() {
                row[t + 1] = row[t] + gaussian_log_density(y, mean, sd);
            }
        }
        Self::from_parts(src, dur, n, samples.len(), prefix)
    }

    /// Same as [`SegmentLikelihood::new`] but with every emission density set
    /// to one, i.e. observations carry no information.
    pub fn flat(src: &MarkovSource, dur: &DurationModel, t_total: usize) -> Self {
        let n = src.state_count();
        Self::from_parts(src, dur, n, t_total, vec![0.0; n * (t_total + 1)])
    }

    fn from_parts(src: &MarkovSource, dur: &DurationModel, n: usize, t_total: usize, prefix: Vec<f64>) -> Self {
        let g = src.graph();
        let edges = g
            .edges()
            .iter()
            .zip(src.edge_probs())
            .map(|(e, &p)| (e.src, e.dst, p.ln()))
            .collect();
        SegmentLikelihood {
            n,
            t_total,
            edges,
            in_edges: (0..n).map(|s| g.in_edges(s).to_vec()).collect(),
            out_edges: (0..n).map(|s| g.out_edges(s).to_vec()).collect(),
            durations: dur.support().iter().zip(dur.probs()).map(|(&k, &p)| (k, p.ln())).collect(),
            prefix,
        }
    }

    pub fn state_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `T_m`, the number of observed samples.
    pub fn total_samples(&self) -> usize {
        self.t_total
    }

    pub fn min_duration(&self) -> usize {
        self.durations[0].0
    }

    pub fn max_duration(&self) -> usize {
        self.durations.last().unwrap().0
    }

    pub fn duration_count(&self) -> usize {
        self.durations.len()
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        let (s, d, _) = self.edges[e];
        (s, d)
    }

    pub fn edge_log_prob(&self, e: usize) -> f64 {
        self.edges[e].2
    }

    pub(crate) fn in_edges(&self, s: usize) -> &[usize] {
        &self.in_edges[s]
    }

    pub(crate) fn out_edges(&self, s: usize) -> &[usize] {
        &self.out_edges[s]
    }

    pub(crate) fn durations(&self) -> &[(usize, f64)] {
        &self.durations
    }

    /// `Σ_{r=from+1}^{to} ln p(y_r | s)`.
    #[inline]
    pub fn emission_sum(&self, s: usize, from: usize, to: usize) -> f64 {
        let row = s * (self.t_total + 1);
        self.prefix[row + to] - self.prefix[row + from]
    }

    /// `ln pmf(k)`, `-inf` outside the support.
    pub fn log_duration(&self, k: usize) -> f64 {
        self.durations
            .binary_search_by_key(&k, |d| d.0)
            .map_or(f64::NEG_INFINITY, |i| self.durations[i].1)
    }

    /// `log γ_{t'+1}^{t}(i, j)`; `-inf` unless `(i, j)` is an edge and
    /// `t - t'` is an allowed duration.
    pub fn log_gamma(&self, i: usize, j: usize, t_prev: usize, t: usize) -> f64 {
        if t <= t_prev || t > self.t_total {
            return f64::NEG_INFINITY;
        }
        let Some(&e) = self.out_edges[i].iter().find(|&&e| self.edges[e].1 == j) else {
            return f64::NEG_INFINITY;
        };
        self.edges[e].2 + self.log_duration(t - t_prev) + self.emission_sum(j, t_prev, t)
    }

    fn bands(&self, m: usize) -> Result<Vec<(usize, usize)>> {
        if m == 0 {
            return Err(NncError::Infeasible("m must be at least 1".into()));
        }
        (0..=m)
            .map(|l| feasible_band(l, m, self.t_total, self.min_duration(), self.max_duration()))
            .collect()
    }
}

/// Log-domain values over `(ℓ, t, s)` restricted to per-segment bands.
#[derive(Debug, Clone)]
pub(crate) struct Lattice {
    n: usize,
    bands: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl Lattice {
    fn new(n: usize, bands: Vec<(usize, usize)>) -> Self {
        let mut offsets = Vec::with_capacity(bands.len());
        let mut total = 0;
        for &(lo, hi) in &bands {
            offsets.push(total);
            total += (hi - lo + 1) * n;
        }
        Lattice { n, bands, offsets, data: vec![f64::NEG_INFINITY; total] }
    }

    #[inline]
    fn index(&self, l: usize, t: usize, s: usize) -> Option<usize> {
        let (lo, hi) = *self.bands.get(l)?;
        if t < lo || t > hi {
            return None;
        }
        Some(self.offsets[l] + (t - lo) * self.n + s)
    }

    #[inline]
    fn get(&self, l: usize, t: usize, s: usize) -> f64 {
        self.index(l, t, s).map_or(f64::NEG_INFINITY, |i| self.data[i])
    }

    #[inline]
    fn set(&mut self, l: usize, t: usize, s: usize, v: f64) {
        let i = self.index(l, t, s).expect("cell outside band");
        self.data[i] = v;
    }

    fn band(&self, l: usize) -> (usize, usize) {
        self.bands[l]
    }

    fn segments(&self) -> usize {
        self.bands.len() - 1
    }

    fn slice_mut(&mut self, l: usize) -> &mut [f64] {
        let (lo, hi) = self.bands[l];
        let start = self.offsets[l];
        &mut self.data[start..start + (hi - lo + 1) * self.n]
    }

    /// Lossy pruning of one segment slice.
    fn prune(&mut self, l: usize, delta: f64) {
        let slice = self.slice_mut(l);
        let max = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return;
        }
        for v in slice.iter_mut() {
            if *v < max - delta {
                *v = f64::NEG_INFINITY;
            }
        }
    }

    fn cells(&self) -> usize {
        self.data.len()
    }
}

fn check_initial(sl: &SegmentLikelihood, initial: &[f64]) -> Result<()> {
    if initial.len() != sl.state_count() {
        return Err(NncError::InvalidModel(format!(
            "initial distribution has {} entries for {} states",
            initial.len(),
            sl.state_count()
        )));
    }
    Ok(())
}

/// Point-mass initial distribution at `s0`.
pub fn point_mass(n: usize, s0: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[s0] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmer_space::fixtures;
    use crate::source::uniform_kernel;

    #[test]
    fn band_examples() {
        assert_eq!(feasible_band(3, 5, 5, 1, 1).unwrap(), (3, 3));
        assert_eq!(feasible_band(2, 4, 6, 1, 2).unwrap(), (2, 4));
        assert_eq!(feasible_band(4, 4, 6, 1, 2).unwrap(), (6, 6));
        assert_eq!(feasible_band(0, 4, 6, 1, 2).unwrap(), (0, 0));
        assert_eq!(feasible_band(1, 3, 9, 2, 5).unwrap(), (2, 5));
    }

    #[test]
    fn infeasible_band() {
        assert!(matches!(feasible_band(1, 4, 3, 1, 2), Err(NncError::Infeasible(_))));
        assert!(matches!(feasible_band(1, 2, 5, 1, 2), Err(NncError::Infeasible(_))));
    }

    #[test]
    fn segment_likelihood_matches_direct_sum() {
        let src = uniform_kernel(&fixtures::fig2_chain()).unwrap();
        let dur = DurationModel::uniform(&[1, 2]).unwrap();
        let noise = NoiseModel::constant(1.0).unwrap();
        let y = [1.0, -0.9, -1.1, 0.95, 1.2, -0.8];
        let sl = SegmentLikelihood::new(&src, &dur, &noise, &y);
        // γ_2^3(A, B): P(A,B) = 1, pmf(2) = 1/2, samples 2 and 3 around -1
        let direct = 0.5f64.ln() + gaussian_log_density(-0.9, -1.0, 1.0) + gaussian_log_density(-1.1, -1.0, 1.0);
        assert!((sl.log_gamma(0, 1, 1, 3) - direct).abs() < 1e-14);
        assert_eq!(sl.log_gamma(0, 0, 1, 3), f64::NEG_INFINITY);
        assert_eq!(sl.log_gamma(0, 1, 0, 3), f64::NEG_INFINITY);
        assert_eq!(sl.log_gamma(0, 1, 3, 3), f64::NEG_INFINITY);
    }
}
