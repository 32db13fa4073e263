use super::{check_initial, DetectorOptions, Lattice, SegmentLikelihood};
use crate::error::{NncError, Result};

/// Jointly most probable state path and segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiResult {
    pub s0: usize,
    /// `s_1..s_m`.
    pub states: Vec<usize>,
    /// `t_1..t_m`, with `t_m = T_m`.
    pub jump_times: Vec<usize>,
    /// `ln μ0(s_0) + Σ_ℓ ln γ_{t_{ℓ-1}+1}^{t_ℓ}(s_{ℓ-1}, s_ℓ)`.
    pub log_score: f64,
    /// Number of candidate transitions examined by the recursion.
    pub inner_ops: u64,
}

impl ViterbiResult {
    pub fn durations(&self) -> Vec<usize> {
        let mut prev = 0;
        self.jump_times
            .iter()
            .map(|&t| {
                let k = t - prev;
                prev = t;
                k
            })
            .collect()
    }
}

const NO_PARENT: (u32, u32) = (u32::MAX, u32::MAX);

/// Generalized Viterbi recursion
/// `V(ℓ, t, s) = max_{s', k} V(ℓ-1, t-k, s') + ln γ_{t-k+1}^{t}(s', s)`.
///
/// Ties are broken towards the smaller previous jump time, then the smaller
/// previous state index; the final state tie goes to the smaller index.
pub fn viterbi(sl: &SegmentLikelihood, initial: &[f64], m: usize, opts: &DetectorOptions) -> Result<ViterbiResult> {
    check_initial(sl, initial)?;
    let n = sl.state_count();
    let t_total = sl.total_samples();
    let bands = sl.bands(m)?;
    let mut score = Lattice::new(n, bands.clone());
    let mut parent = vec![Vec::new(); m + 1];
    for (s, &p) in initial.iter().enumerate() {
        score.set(0, 0, s, p.ln());
    }
    let mut inner_ops = 0u64;
    for l in 1..=m {
        let (lo, hi) = bands[l];
        let row = &mut parent[l];
        row.resize((hi - lo + 1) * n, NO_PARENT);
        for t in lo..=hi {
            for s in 0..n {
                let mut best = f64::NEG_INFINITY;
                let mut arg = NO_PARENT;
                // descending k visits previous jump times in ascending order
                for &(k, lk) in sl.durations().iter().rev() {
                    if k > t {
                        continue;
                    }
                    let tp = t - k;
                    for &e in sl.in_edges(s) {
                        inner_ops += 1;
                        let (src, _) = sl.edge(e);
                        let prev = score.get(l - 1, tp, src);
                        if prev == f64::NEG_INFINITY {
                            continue;
                        }
                        let v = prev + sl.edge_log_prob(e) + lk + sl.emission_sum(s, tp, t);
                        if v > best {
                            best = v;
                            arg = (tp as u32, src as u32);
                        }
                    }
                }
                score.set(l, t, s, best);
                row[(t - lo) * n + s] = arg;
            }
        }
        if let Some(delta) = opts.prune_delta {
            score.prune(l, delta);
        }
    }
    let (mut s_best, mut best) = (0, f64::NEG_INFINITY);
    for s in 0..n {
        let v = score.get(m, t_total, s);
        if v > best {
            best = v;
            s_best = s;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(NncError::Infeasible("no path explains the observation".into()));
    }
    let mut states = vec![0; m];
    let mut jump_times = vec![0; m];
    let (mut t, mut s) = (t_total, s_best);
    for l in (1..=m).rev() {
        states[l - 1] = s;
        jump_times[l - 1] = t;
        let (lo, _) = bands[l];
        let (tp, sp) = parent[l][(t - lo) * n + s];
        t = tp as usize;
        s = sp as usize;
    }
    Ok(ViterbiResult { s0: s, states, jump_times, log_score: best, inner_ops })
}

/// Re-evaluates the Viterbi objective on an explicit path.
pub fn path_log_score(sl: &SegmentLikelihood, initial: &[f64], s0: usize, states: &[usize], jump_times: &[usize]) -> f64 {
    let mut total = initial[s0].ln();
    let (mut prev_s, mut prev_t) = (s0, 0);
    for (&s, &t) in states.iter().zip(jump_times) {
        total += sl.log_gamma(prev_s, s, prev_t, t);
        prev_s = s;
        prev_t = t;
    }
    total
}
