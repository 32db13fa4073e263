use super::{check_initial, DetectorOptions, Lattice, SegmentLikelihood};
use crate::error::{NncError, Result};
use crate::logspace::log_sum_exp;

/// `ln α_{ℓ,t}(s)` for `ℓ = 0..=m`; `ℓ = 0` holds `ln μ0` at `t = 0`.
#[derive(Debug, Clone)]
pub struct ForwardLattice {
    lattice: Lattice,
    t_total: usize,
}

/// `ln β_{ℓ,t}(s)` for `ℓ = 0..=m`, with `β_{m,T_m} = 1`.
#[derive(Debug, Clone)]
pub struct BackwardLattice {
    lattice: Lattice,
}

impl ForwardLattice {
    pub fn log_alpha(&self, l: usize, t: usize, s: usize) -> f64 {
        self.lattice.get(l, t, s)
    }

    pub fn band(&self, l: usize) -> (usize, usize) {
        self.lattice.band(l)
    }

    pub fn segments(&self) -> usize {
        self.lattice.segments()
    }

    /// `ln P(Y_1^{T_m}) = ln Σ_s α_{m,T_m}(s)`.
    pub fn log_evidence(&self) -> f64 {
        let m = self.segments();
        let terms: Vec<f64> = (0..self.lattice.n).map(|s| self.log_alpha(m, self.t_total, s)).collect();
        log_sum_exp(&terms)
    }

    pub fn cells(&self) -> usize {
        self.lattice.cells()
    }
}

impl BackwardLattice {
    pub fn log_beta(&self, l: usize, t: usize, s: usize) -> f64 {
        self.lattice.get(l, t, s)
    }

    pub fn band(&self, l: usize) -> (usize, usize) {
        self.lattice.band(l)
    }
}

/// Generalized forward recursion:
/// `α_{ℓ,t}(s) = Σ_{s'} Σ_{k ∈ Λ} γ_{t-k+1}^{t}(s', s) α_{ℓ-1,t-k}(s')`.
pub fn forward(sl: &SegmentLikelihood, initial: &[f64], m: usize, opts: &DetectorOptions) -> Result<ForwardLattice> {
    check_initial(sl, initial)?;
    let n = sl.state_count();
    let mut lat = Lattice::new(n, sl.bands(m)?);
    for (s, &p) in initial.iter().enumerate() {
        lat.set(0, 0, s, p.ln());
    }
    let mut terms = Vec::with_capacity(4 * sl.duration_count());
    for l in 1..=m {
        let (lo, hi) = lat.band(l);
        for t in lo..=hi {
            for s in 0..n {
                terms.clear();
                for &e in sl.in_edges(s) {
                    let (src, _) = sl.edge(e);
                    let lp = sl.edge_log_prob(e);
                    if lp == f64::NEG_INFINITY {
                        continue;
                    }
                    for &(k, lk) in sl.durations() {
                        if k > t {
                            break;
                        }
                        let prev = lat.get(l - 1, t - k, src);
                        if prev == f64::NEG_INFINITY {
                            continue;
                        }
                        terms.push(prev + lp + lk + sl.emission_sum(s, t - k, t));
                    }
                }
                lat.set(l, t, s, log_sum_exp(&terms));
            }
        }
        if let Some(delta) = opts.prune_delta {
            lat.prune(l, delta);
        }
    }
    let fl = ForwardLattice { lattice: lat, t_total: sl.total_samples() };
    if fl.log_evidence() == f64::NEG_INFINITY {
        return Err(NncError::Infeasible("observation has zero likelihood under the model".into()));
    }
    Ok(fl)
}

/// Generalized backward recursion:
/// `β_{ℓ,t}(s) = Σ_{s'} Σ_{k ∈ Λ} γ_{t+1}^{t+k}(s, s') β_{ℓ+1,t+k}(s')`.
pub fn backward(sl: &SegmentLikelihood, m: usize, opts: &DetectorOptions) -> Result<BackwardLattice> {
    let n = sl.state_count();
    let t_total = sl.total_samples();
    let mut lat = Lattice::new(n, sl.bands(m)?);
    for s in 0..n {
        lat.set(m, t_total, s, 0.0);
    }
    let mut terms = Vec::with_capacity(4 * sl.duration_count());
    for l in (0..m).rev() {
        let (lo, hi) = lat.band(l);
        for t in lo..=hi {
            for s in 0..n {
                terms.clear();
                for &e in sl.out_edges(s) {
                    let (_, dst) = sl.edge(e);
                    let lp = sl.edge_log_prob(e);
                    if lp == f64::NEG_INFINITY {
                        continue;
                    }
                    for &(k, lk) in sl.durations() {
                        if t + k > t_total {
                            break;
                        }
                        let next = lat.get(l + 1, t + k, dst);
                        if next == f64::NEG_INFINITY {
                            continue;
                        }
                        terms.push(next + lp + lk + sl.emission_sum(dst, t, t + k));
                    }
                }
                lat.set(l, t, s, log_sum_exp(&terms));
            }
        }
        if let Some(delta) = opts.prune_delta {
            lat.prune(l, delta);
        }
    }
    Ok(BackwardLattice { lattice: lat })
}

/// `ln Σ_{s,t} α_{ℓ,t}(s) β_{ℓ,t}(s)` for `ℓ = 1..=m`; every entry equals
/// the log evidence.
pub fn evidence_by_segment(fl: &ForwardLattice, bl: &BackwardLattice) -> Vec<f64> {
    let n = fl.lattice.n;
    (1..=fl.segments())
        .map(|l| {
            let (lo, hi) = fl.band(l);
            let terms: Vec<f64> = (lo..=hi)
                .flat_map(|t| (0..n).map(move |s| (t, s)))
                .map(|(t, s)| fl.log_alpha(l, t, s) + bl.log_beta(l, t, s))
                .collect();
            log_sum_exp(&terms)
        })
        .collect()
}

/// Segment posteriors `ψ_ℓ(s) = P(S_ℓ = s | Y)` for `ℓ = 1..=m` and pair
/// posteriors `ψ_ℓ(s', s) = P(S_{ℓ-1} = s', S_ℓ = s | Y)` per edge for
/// `ℓ = 2..=m`.
#[derive(Debug, Clone)]
pub struct PosteriorSet {
    m: usize,
    n: usize,
    edges: Vec<(usize, usize)>,
    single: Vec<f64>,
    pair: Vec<f64>,
    log_evidence: f64,
}

impl PosteriorSet {
    /// Builds a posterior set from explicit tables; `single[ℓ-1][s]` and
    /// `pair[ℓ-2][e]`.
    pub fn from_tables(
        edges: Vec<(usize, usize)>,
        single: Vec<Vec<f64>>,
        pair: Vec<Vec<f64>>,
        log_evidence: f64,
    ) -> Self {
        let m = single.len();
        let n = single.first().map_or(0, |r| r.len());
        assert_eq!(pair.len(), m.saturating_sub(1));
        PosteriorSet {
            m,
            n,
            single: single.concat(),
            pair: pair.concat(),
            edges,
            log_evidence,
        }
    }

    pub fn segments(&self) -> usize {
        self.m
    }

    pub fn state_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `ψ_ℓ(s)`, `ℓ` in `1..=m`.
    pub fn state(&self, l: usize, s: usize) -> f64 {
        self.single[(l - 1) * self.n + s]
    }

    pub fn states_at(&self, l: usize) -> &[f64] {
        &self.single[(l - 1) * self.n..l * self.n]
    }

    /// `ψ_ℓ(src(e), dst(e))`, `ℓ` in `2..=m`.
    pub fn pair(&self, l: usize, e: usize) -> f64 {
        self.pair[(l - 2) * self.edges.len() + e]
    }

    pub fn pairs_at(&self, l: usize) -> &[f64] {
        let ne = self.edges.len();
        &self.pair[(l - 2) * ne..(l - 1) * ne]
    }

    /// `ψ_ℓ(i, j)` by endpoints; zero when `(i, j)` is not an edge.
    pub fn pair_states(&self, l: usize, i: usize, j: usize) -> f64 {
        self.edges
            .iter()
            .position(|&(a, b)| a == i && b == j)
            .map_or(0.0, |e| self.pair(l, e))
    }

    /// Natural-log evidence `ln P(Y_1^{T_m})`.
    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// Most probable state of segment `ℓ` and its posterior.
    pub fn argmax(&self, l: usize) -> (usize, f64) {
        self.states_at(l)
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (s, &p)| if p > best.1 { (s, p) } else { best })
    }

    /// Entropy of `ψ_ℓ` in bits.
    pub fn entropy_bits(&self, l: usize) -> f64 {
        (-self.states_at(l).iter().map(|&p| crate::logspace::xlog2x(p)).sum::<f64>()).max(0.0)
    }
}

/// Combines forward and backward lattices into segment and pair posteriors.
pub fn posteriors(fl: &ForwardLattice, bl: &BackwardLattice, sl: &SegmentLikelihood) -> PosteriorSet {
    let m = fl.segments();
    let n = sl.state_count();
    let ne = sl.edge_count();
    let log_z = fl.log_evidence();
    let mut single = vec![0.0; m * n];
    let mut pair = vec![0.0; m.saturating_sub(1) * ne];
    let mut terms = Vec::new();
    for l in 1..=m {
        let (lo, hi) = fl.band(l);
        for s in 0..n {
            terms.clear();
            terms.extend((lo..=hi).map(|t| fl.log_alpha(l, t, s) + bl.log_beta(l, t, s)));
            single[(l - 1) * n + s] = (log_sum_exp(&terms) - log_z).exp();
        }
        if l < 2 {
            continue;
        }
        for e in 0..ne {
            let (src, dst) = sl.edge(e);
            let lp = sl.edge_log_prob(e);
            terms.clear();
            if lp != f64::NEG_INFINITY {
                for t in lo..=hi {
                    let b = bl.log_beta(l, t, dst);
                    if b == f64::NEG_INFINITY {
                        continue;
                    }
                    for &(k, lk) in sl.durations() {
                        if k > t {
                            break;
                        }
                        let a = fl.log_alpha(l - 1, t - k, src);
                        if a == f64::NEG_INFINITY {
                            continue;
                        }
                        terms.push(a + lp + lk + sl.emission_sum(dst, t - k, t) + b);
                    }
                }
            }
            pair[(l - 2) * ne + e] = (log_sum_exp(&terms) - log_z).exp();
        }
    }
    PosteriorSet {
        m,
        n,
        edges: (0..ne).map(|e| sl.edge(e)).collect(),
        single,
        pair,
        log_evidence: log_z,
    }
}

/// Forward, backward and posteriors in one call.
pub fn forward_backward(sl: &SegmentLikelihood, initial: &[f64], m: usize, opts: &DetectorOptions) -> Result<PosteriorSet> {
    let fl = forward(sl, initial, m, opts)?;
    let bl = backward(sl, m, opts)?;
    Ok(posteriors(&fl, &bl, sl))
}
