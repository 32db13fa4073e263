//! Exhaustive enumeration of every `(s_0, s_1..s_m, k_1..k_m)` consistent
//! with an observation, for tiny instances. Serves as ground truth for the
//! lattice algorithms; it shares no code with them beyond the Gaussian
//! density.

use std::io::Write;

use crate::channel::{gaussian_log_density, NoiseModel};
use crate::detection::PosteriorSet;
use crate::error::{NncError, Result};
use crate::source::{DurationModel, MarkovSource};

/// Refuse instances with more than this many candidate paths.
pub const MAX_PATHS: f64 = 1e7;

#[derive(Debug, Clone)]
pub struct EnumeratedPath {
    pub s0: usize,
    pub states: Vec<usize>,
    pub durations: Vec<usize>,
    pub log_joint: f64,
}

impl EnumeratedPath {
    pub fn jump_times(&self) -> Vec<usize> {
        self.durations
            .iter()
            .scan(0, |t, &k| {
                *t += k;
                Some(*t)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PathEnumeration {
    pub paths: Vec<EnumeratedPath>,
    pub log_evidence: f64,
    /// `single[ℓ-1][s]`.
    pub single: Vec<Vec<f64>>,
    /// `pair[ℓ-2][e]` over the source graph's edges.
    pub pair: Vec<Vec<f64>>,
    pub map_index: usize,
    edges: Vec<(usize, usize)>,
}

impl PathEnumeration {
    pub fn map_path(&self) -> &EnumeratedPath {
        &self.paths[self.map_index]
    }

    pub fn to_posterior_set(&self) -> PosteriorSet {
        PosteriorSet::from_tables(self.edges.clone(), self.single.clone(), self.pair.clone(), self.log_evidence)
    }

    /// Debug dump: one row per path.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s0,states,durations,log_joint")?;
        for p in &self.paths {
            let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            writeln!(w, "{},{},{},{:.17e}", p.s0, join(&p.states), join(&p.durations), p.log_joint)?;
        }
        Ok(())
    }
}

/// Neumaier compensated sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

struct Walker<'a> {
    src: &'a MarkovSource,
    dur: &'a DurationModel,
    noise: &'a NoiseModel,
    samples: &'a [f64],
    m: usize,
    states: Vec<usize>,
    durations: Vec<usize>,
    out: Vec<EnumeratedPath>,
}

impl Walker<'_> {
    fn segment_log_density(&self, s: usize, from: usize, k: usize) -> f64 {
        let g = self.src.graph();
        self.samples[from..from + k]
            .iter()
            .map(|&y| gaussian_log_density(y, g.level(s), self.noise.sd(s)))
            .sum()
    }

    fn walk(&mut self, s0: usize, prev: usize, t: usize, acc: f64) {
        let l = self.states.len();
        if l == self.m {
            if t == self.samples.len() {
                self.out.push(EnumeratedPath {
                    s0,
                    states: self.states.clone(),
                    durations: self.durations.clone(),
                    log_joint: acc,
                });
            }
            return;
        }
        let g = self.src.graph();
        for &e in g.out_edges(prev) {
            let p = self.src.edge_prob(e);
            if p == 0.0 {
                continue;
            }
            let next = g.edges()[e].dst;
            for (&k, &pk) in self.dur.support().iter().zip(self.dur.probs()) {
                if t + k > self.samples.len() {
                    break;
                }
                let v = acc + p.ln() + pk.ln() + self.segment_log_density(next, t, k);
                self.states.push(next);
                self.durations.push(k);
                self.walk(s0, next, t + k, v);
                self.states.pop();
                self.durations.pop();
            }
        }
    }
}

/// Enumerates every consistent path and derives exact posteriors, evidence
/// and the MAP path. Linear-domain sums are max-shifted and compensated.
pub fn enumerate(
    src: &MarkovSource,
    dur: &DurationModel,
    noise: &NoiseModel,
    initial: &[f64],
    m: usize,
    samples: &[f64],
) -> Result<PathEnumeration> {
    let n = src.state_count();
    let bound = (n as f64).powi(m as i32) * (dur.support().len() as f64).powi(m as i32);
    if bound > MAX_PATHS {
        return Err(NncError::InstanceTooLarge { paths: bound, bound: MAX_PATHS });
    }
    if initial.len() != n {
        return Err(NncError::InvalidModel("initial distribution length".into()));
    }
    let mut walker = Walker {
        src,
        dur,
        noise,
        samples,
        m,
        states: Vec::with_capacity(m),
        durations: Vec::with_capacity(m),
        out: Vec::new(),
    };
    for (s0, &p0) in initial.iter().enumerate() {
        if p0 > 0.0 {
            walker.walk(s0, s0, 0, p0.ln());
        }
    }
    let paths = walker.out;
    if paths.is_empty() {
        return Err(NncError::Infeasible("no consistent path".into()));
    }
    let shift = paths.iter().map(|p| p.log_joint).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = paths.iter().map(|p| (p.log_joint - shift).exp()).collect();

    let mut total = CompensatedSum::default();
    let mut single: Vec<Vec<CompensatedSum>> = (0..m).map(|_| (0..n).map(|_| CompensatedSum::default()).collect()).collect();
    let g = src.graph();
    let ne = g.edge_count();
    let mut pair: Vec<Vec<CompensatedSum>> =
        (1..m).map(|_| (0..ne).map(|_| CompensatedSum::default()).collect()).collect();
    for (p, &w) in paths.iter().zip(&weights) {
        total.add(w);
        for (l, &s) in p.states.iter().enumerate() {
            single[l][s].add(w);
            if l >= 1 {
                let e = g.edge_between(p.states[l - 1], s).expect("enumerated along edges");
                pair[l - 1][e].add(w);
            }
        }
    }
    let z = total.value();
    let norm = |rows: Vec<Vec<CompensatedSum>>| -> Vec<Vec<f64>> {
        rows.into_iter().map(|r| r.iter().map(|c| c.value() / z).collect()).collect()
    };
    let mut map_index = 0;
    for (i, p) in paths.iter().enumerate() {
        if p.log_joint > paths[map_index].log_joint {
            map_index = i;
        }
    }
    Ok(PathEnumeration {
        log_evidence: shift + z.ln(),
        single: norm(single),
        pair: norm(pair),
        map_index,
        edges: g.edges().iter().map(|e| (e.src, e.dst)).collect(),
        paths,
    })
}
