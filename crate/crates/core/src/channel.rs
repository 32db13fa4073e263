//! Simulation of the noisy nanopore channel: a Markov state path, i.i.d.
//! dwell times, and Gaussian samples around each state's level.

use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{NncError, Result};
use crate::kmer_space::{KmerState, StateGraph};
use crate::source::{DurationModel, MarkovSource};

/// Identifier of the sample generator recorded in every trace. Bump the
/// suffix if the sampling procedure changes.
pub const RNG_ALGORITHM: &str = "chacha8-stream/v1";

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Measurement noise `N_t ~ Normal(0, σ(s)^2)`.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Constant(f64),
    PerState(Vec<f64>),
}

impl NoiseModel {
    pub fn constant(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(NncError::InvalidModel(format!("sigma must be positive, got {sigma}")));
        }
        Ok(NoiseModel::Constant(sigma))
    }

    /// Uses the per-state standard deviations carried by `g`.
    pub fn per_state(g: &StateGraph) -> Result<Self> {
        let sds = g
            .sds()
            .ok_or_else(|| NncError::InvalidModel("model has no per-state standard deviations".into()))?;
        Ok(NoiseModel::PerState(sds.to_vec()))
    }

    pub fn sd(&self, state: usize) -> f64 {
        match self {
            NoiseModel::Constant(s) => *s,
            NoiseModel::PerState(v) => v[state],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            NoiseModel::Constant(s) => format!("{s}"),
            NoiseModel::PerState(_) => "per-state".to_string(),
        }
    }
}

/// Natural-log Gaussian density of `y` around `f(s)` with deviation `σ(s)`.
pub fn emission_log_density(noise: &NoiseModel, g: &StateGraph, state: usize, y: f64) -> f64 {
    gaussian_log_density(y, g.level(state), noise.sd(state))
}

#[inline]
pub fn gaussian_log_density(y: f64, mean: f64, sd: f64) -> f64 {
    let z = (y - mean) / sd;
    -LN_SQRT_2PI - sd.ln() - 0.5 * z * z
}

/// Master seed plus stream index; each stream is an independent ChaCha8
/// sequence, so blocks of a Monte Carlo run can be simulated in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceSeed {
    pub seed: u64,
    pub stream: u64,
}

impl TraceSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        TraceSeed { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One realization of `m` channel uses.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    pub s0: usize,
    /// `S_1..S_m` as node indices.
    pub states: Vec<usize>,
    /// `K_1..K_m`.
    pub durations: Vec<usize>,
    /// `T_0 = 0, T_1, ..., T_m`.
    pub jump_times: Vec<usize>,
    /// `Y_1..Y_{T_m}`.
    pub samples: Vec<f64>,
    pub seed: TraceSeed,
}

impl ChannelTrace {
    pub fn m(&self) -> usize {
        self.states.len()
    }

    pub fn total_samples(&self) -> usize {
        self.samples.len()
    }

    /// Hidden sample state `Z_t` for `t` in `1..=T_m`.
    pub fn sample_states(&self) -> Vec<usize> {
        self.states
            .iter()
            .zip(&self.durations)
            .flat_map(|(&s, &k)| std::iter::repeat(s).take(k))
            .collect()
    }

    /// Checks the structural invariants against a graph and duration model.
    pub fn validate(&self, g: &StateGraph, dur: &DurationModel) -> Result<()> {
        let m = self.m();
        let bad = |msg: String| Err(NncError::Infeasible(msg));
        if m == 0 || self.durations.len() != m || self.jump_times.len() != m + 1 || self.jump_times[0] != 0 {
            return bad("inconsistent segment arrays".into());
        }
        let mut prev = self.s0;
        for l in 0..m {
            if self.jump_times[l + 1] != self.jump_times[l] + self.durations[l] {
                return bad(format!("T_{} does not match K_{}", l + 1, l + 1));
            }
            if dur.pmf(self.durations[l]) == 0.0 {
                return bad(format!("duration K_{} = {} outside support", l + 1, self.durations[l]));
            }
            if g.edge_between(prev, self.states[l]).is_none() {
                return bad(format!("S_{} -> S_{} is not an edge", l, l + 1));
            }
            prev = self.states[l];
        }
        if self.samples.len() != self.jump_times[m] {
            return bad(format!("{} samples but T_m = {}", self.samples.len(), self.jump_times[m]));
        }
        Ok(())
    }
}

fn draw_index<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Simulates `m` channel uses. `S_0` is drawn from the source's initial
/// distribution; the result depends only on the inputs and `seed`.
pub fn simulate(src: &MarkovSource, dur: &DurationModel, noise: &NoiseModel, m: usize, seed: TraceSeed) -> Result<ChannelTrace> {
    if m == 0 {
        return Err(NncError::Config("m must be at least 1".into()));
    }
    let g = src.graph();
    let mut rng = seed.rng();
    let s0 = draw_index(&mut rng, src.initial().iter().copied());
    let mut states = Vec::with_capacity(m);
    let mut durations = Vec::with_capacity(m);
    let mut jump_times = Vec::with_capacity(m + 1);
    jump_times.push(0);
    let mut samples = Vec::new();
    let mut current = s0;
    for _ in 0..m {
        let out = g.out_edges(current);
        if out.is_empty() {
            return Err(NncError::InvalidModel(format!("state {} has no successors", g.kmer(current))));
        }
        let e = out[draw_index(&mut rng, out.iter().map(|&e| src.edge_prob(e)))];
        current = g.edges()[e].dst;
        let k = dur.support()[draw_index(&mut rng, dur.probs().iter().copied())];
        let level = g.level(current);
        let sd = noise.sd(current);
        for _ in 0..k {
            let n: f64 = StandardNormal.sample(&mut rng);
            samples.push(level + sd * n);
        }
        states.push(current);
        durations.push(k);
        jump_times.push(jump_times.last().unwrap() + k);
    }
    Ok(ChannelTrace { s0, states, durations, jump_times, samples, seed })
}

/// Writes a trace file: `#`-prefixed `key=value` header lines, then a
/// `segments` section (`l,kmer,k,t`) and a `samples` section (`t,y`).
/// Samples carry 17 significant digits so reloading is exact.
pub fn write_trace<W: Write>(trace: &ChannelTrace, g: &StateGraph, meta: &[(String, String)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# nnc-trace v1")?;
    writeln!(w, "# rng={RNG_ALGORITHM}")?;
    writeln!(w, "# seed={}", trace.seed.seed)?;
    writeln!(w, "# stream={}", trace.seed.stream)?;
    writeln!(w, "# m={}", trace.m())?;
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "# s0={}", g.kmer(trace.s0))?;
    writeln!(w, "segments")?;
    writeln!(w, "l,kmer,k,t")?;
    for l in 0..trace.m() {
        writeln!(w, "{},{},{},{}", l + 1, g.kmer(trace.states[l]), trace.durations[l], trace.jump_times[l + 1])?;
    }
    writeln!(w, "samples")?;
    writeln!(w, "t,y")?;
    let mut line = String::new();
    for (t, y) in trace.samples.iter().enumerate() {
        line.clear();
        let _ = write!(line, "{},{:.16e}", t + 1, y);
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// A parsed trace file, not yet tied to a graph.
#[derive(Debug, Clone)]
pub struct TraceFile {
    pub header: Vec<(String, String)>,
    pub s0: KmerState,
    pub segments: Vec<(KmerState, usize, usize)>,
    pub samples: Vec<f64>,
}

impl TraceFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            Header,
            Segments,
            Samples,
        }
        let err = |line: usize, msg: &str| NncError::Parse { path: "<trace>".into(), line, msg: msg.to_string() };
        let mut section = Section::Header;
        let mut header = Vec::new();
        let mut segments = Vec::new();
        let mut samples = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    header.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            match line {
                "segments" => {
                    section = Section::Segments;
                    continue;
                }
                "samples" => {
                    section = Section::Samples;
                    continue;
                }
                "l,kmer,k,t" | "t,y" => continue,
                _ => {}
            }
            let cols: Vec<&str> = line.split(',').collect();
            match section {
                Section::Header => return Err(err(n, "data before section marker")),
                Section::Segments => {
                    if cols.len() != 4 {
                        return Err(err(n, "expected l,kmer,k,t"));
                    }
                    let l: usize = cols[0].parse().map_err(|_| err(n, "bad segment index"))?;
                    if l != segments.len() + 1 {
                        return Err(err(n, "segments out of order"));
                    }
                    let kmer: KmerState = cols[1].parse().map_err(|_| err(n, "bad k-mer"))?;
                    let k = cols[2].parse().map_err(|_| err(n, "bad duration"))?;
                    let t = cols[3].parse().map_err(|_| err(n, "bad jump time"))?;
                    segments.push((kmer, k, t));
                }
                Section::Samples => {
                    if cols.len() != 2 {
                        return Err(err(n, "expected t,y"));
                    }
                    let t: usize = cols[0].parse().map_err(|_| err(n, "bad sample index"))?;
                    if t != samples.len() + 1 {
                        return Err(err(n, "samples out of order"));
                    }
                    samples.push(cols[1].parse().map_err(|_| err(n, "bad sample value"))?);
                }
            }
        }
        let s0 = header
            .iter()
            .find(|(k, _)| k == "s0")
            .ok_or_else(|| err(0, "missing s0"))?
            .1
            .parse()
            .map_err(|_| err(0, "bad s0"))?;
        if segments.is_empty() {
            return Err(err(0, "no segments"));
        }
        Ok(TraceFile { header, s0, segments, samples })
    }

    /// Resolves k-mers against `g` and rebuilds the trace.
    pub fn to_trace(&self, g: &StateGraph) -> Result<ChannelTrace> {
        let node = |k: &KmerState| {
            g.node_of(k)
                .ok_or_else(|| NncError::InvalidModel(format!("trace state {k} is not in the model graph")))
        };
        let parse_u64 = |key: &str| -> Result<u64> {
            self.get(key)
                .unwrap_or("0")
                .parse()
                .map_err(|_| NncError::Parse { path: "<trace>".into(), line: 0, msg: format!("bad {key}") })
        };
        let mut jump_times = vec![0];
        let mut states = Vec::new();
        let mut durations = Vec::new();
        for (kmer, k, t) in &self.segments {
            states.push(node(kmer)?);
            durations.push(*k);
            jump_times.push(*t);
        }
        Ok(ChannelTrace {
            s0: node(&self.s0)?,
            states,
            durations,
            jump_times,
            samples: self.samples.clone(),
            seed: TraceSeed::new(parse_u64("seed")?, parse_u64("stream")?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmer_space::fixtures;
    use crate::source::{parry_kernel, uniform_kernel};

    #[test]
    fn density_peak_and_one_sigma() {
        let g = fixtures::fig2_chain();
        let noise = NoiseModel::constant(1.0).unwrap();
        let peak = emission_log_density(&noise, &g, 0, 1.0);
        assert!((peak + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert!((emission_log_density(&noise, &g, 0, 2.0) - (peak - 0.5)).abs() < 1e-15);
        assert!((emission_log_density(&noise, &g, 0, 0.0) - (peak - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn density_reference_value() {
        // ln N(-0.9; 1.0, 0.4^2) = -ln(0.4 sqrt(2 pi)) - 1.9^2 / 0.32, evaluated
        // with mpmath at 30 digits
        let v = gaussian_log_density(-0.9, 1.0, 0.4);
        assert!((v - (-11.283_897_801_330_517_7)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn sigma_must_be_positive() {
        assert!(NoiseModel::constant(0.0).is_err());
        assert!(NoiseModel::constant(f64::NAN).is_err());
        assert!(NoiseModel::per_state(&fixtures::fig3_graph()).is_err());
    }

    #[test]
    fn simulation_is_reproducible() {
        let src = parry_kernel(&fixtures::fig3_graph()).unwrap();
        let dur = DurationModel::uniform(&[1, 2, 3]).unwrap();
        let noise = NoiseModel::constant(0.3).unwrap();
        let a = simulate(&src, &dur, &noise, 50, TraceSeed::new(7, 3)).unwrap();
        let b = simulate(&src, &dur, &noise, 50, TraceSeed::new(7, 3)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&src, &dur, &noise, 50, TraceSeed::new(7, 4)).unwrap();
        assert_ne!(a.samples, c.samples);
        a.validate(src.graph(), &dur).unwrap();
    }

    #[test]
    fn fixed_duration_gives_runs() {
        let src = uniform_kernel(&fixtures::fig2_chain()).unwrap();
        let dur = DurationModel::uniform(&[2]).unwrap();
        let noise = NoiseModel::constant(1e-12).unwrap();
        let tr = simulate(&src, &dur, &noise, 4, TraceSeed::new(1, 0)).unwrap();
        assert_eq!(tr.jump_times, vec![0, 2, 4, 6, 8]);
        for pair in tr.samples.chunks(2) {
            assert!((pair[0] - pair[1]).abs() < 1e-9);
        }
        for (z, y) in tr.sample_states().iter().zip(&tr.samples) {
            assert!((y - src.graph().level(*z)).abs() < 1e-9);
        }
    }

    #[test]
    fn fig2_shaped_trace() {
        let src = uniform_kernel(&fixtures::fig2_chain()).unwrap();
        let dur = DurationModel::uniform(&[1, 2]).unwrap();
        let noise = NoiseModel::constant(0.1).unwrap();
        let tr = simulate(&src, &dur, &noise, 4, TraceSeed::new(11, 0)).unwrap();
        assert_eq!(tr.m(), 4);
        assert_eq!(*tr.jump_times.last().unwrap(), tr.samples.len());
        for w in tr.states.windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn trace_round_trip_is_exact() {
        let src = parry_kernel(&fixtures::fig3_graph()).unwrap();
        let dur = DurationModel::uniform(&[1, 2]).unwrap();
        let noise = NoiseModel::constant(0.4).unwrap();
        let tr = simulate(&src, &dur, &noise, 30, TraceSeed::new(5, 2)).unwrap();
        let mut buf = Vec::new();
        let meta = vec![("lambda".to_string(), "1..2".to_string())];
        write_trace(&tr, src.graph(), &meta, &mut buf).unwrap();
        let file = TraceFile::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(file.get("lambda"), Some("1..2"));
        assert_eq!(file.get("rng"), Some(RNG_ALGORITHM));
        assert_eq!(file.to_trace(src.graph()).unwrap(), tr);
    }

    #[test]
    fn malformed_trace_rejected() {
        assert!(TraceFile::parse("# s0=A\nsegments\n1,A,1\n").is_err());
        assert!(TraceFile::parse("# s0=A\nsegments\n2,A,1,1\n").is_err());
        assert!(TraceFile::parse("segments\n1,A,1,1\n").is_err());
        assert!(TraceFile::parse("1,2\n").is_err());
    }
}
