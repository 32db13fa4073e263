//! Textbook hidden Markov model recursions (one sample per state) on dense
//! matrices with per-step scaling. Shares nothing with the segment lattice.

use std::f64::consts::PI;

use nnc_core::source::MarkovSource;

pub struct Hmm {
    pub n: usize,
    pub trans: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub sigma: f64,
    pub initial: Vec<f64>,
}

pub struct Smoothed {
    /// `gamma[t][s]` for `t = 1..=T` (index 0 is the first observation).
    pub gamma: Vec<Vec<f64>>,
    /// `xi[t][i][j] = P(X_t = i, X_{t+1} = j | y)` for `t = 1..T-1`.
    pub xi: Vec<Vec<Vec<f64>>>,
    pub log_evidence: f64,
}

impl Hmm {
    pub fn from_source(src: &MarkovSource, sigma: f64, initial: &[f64]) -> Self {
        let n = src.state_count();
        let trans = (0..n).map(|i| (0..n).map(|j| src.prob(i, j)).collect()).collect();
        Hmm { n, trans, means: src.graph().levels().to_vec(), sigma, initial: initial.to_vec() }
    }

    fn density(&self, s: usize, y: f64) -> f64 {
        let z = (y - self.means[s]) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }

    /// The initial distribution is over the state before the first sample.
    pub fn smooth(&self, y: &[f64]) -> Smoothed {
        let (n, len) = (self.n, y.len());
        let mut alpha = vec![vec![0.0; n]; len];
        let mut scale = vec![0.0; len];
        for t in 0..len {
            for j in 0..n {
                let prior: f64 = if t == 0 {
                    (0..n).map(|i| self.initial[i] * self.trans[i][j]).sum()
                } else {
                    (0..n).map(|i| alpha[t - 1][i] * self.trans[i][j]).sum()
                };
                alpha[t][j] = prior * self.density(j, y[t]);
            }
            scale[t] = alpha[t].iter().sum();
            for a in alpha[t].iter_mut() {
                *a /= scale[t];
            }
        }
        let mut beta = vec![vec![1.0; n]; len];
        for t in (0..len.saturating_sub(1)).rev() {
            for i in 0..n {
                beta[t][i] = (0..n)
                    .map(|j| self.trans[i][j] * self.density(j, y[t + 1]) * beta[t + 1][j])
                    .sum::<f64>()
                    / scale[t + 1];
            }
        }
        let gamma: Vec<Vec<f64>> =
            (0..len).map(|t| (0..n).map(|s| alpha[t][s] * beta[t][s]).collect()).collect();
        let xi = (0..len.saturating_sub(1))
            .map(|t| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                alpha[t][i] * self.trans[i][j] * self.density(j, y[t + 1]) * beta[t + 1][j]
                                    / scale[t + 1]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Smoothed { gamma, xi, log_evidence: scale.iter().map(|c| c.ln()).sum() }
    }

    /// Most likely state sequence (one state per sample) and its log joint
    /// probability, including the initial-state term.
    pub fn viterbi(&self, y: &[f64]) -> (Vec<usize>, f64) {
        let (n, len) = (self.n, y.len());
        let ln = |x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
        let mut delta = vec![vec![f64::NEG_INFINITY; n]; len];
        let mut back = vec![vec![0usize; n]; len];
        for j in 0..n {
            let best = (0..n)
                .map(|i| ln(self.initial[i]) + ln(self.trans[i][j]))
                .fold(f64::NEG_INFINITY, f64::max);
            delta[0][j] = best + ln(self.density(j, y[0]));
        }
        for t in 1..len {
            for j in 0..n {
                let (arg, best) = (0..n)
                    .map(|i| (i, delta[t - 1][i] + ln(self.trans[i][j])))
                    .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                delta[t][j] = best + ln(self.density(j, y[t]));
                back[t][j] = arg;
            }
        }
        let (mut s, score) = (0..n)
            .map(|j| (j, delta[len - 1][j]))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let mut path = vec![0; len];
        for t in (0..len).rev() {
            path[t] = s;
            s = back[t][s];
        }
        (path, score)
    }
}
