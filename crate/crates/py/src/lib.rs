//! Python bindings for the noisy nanopore channel toolkit.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use nnc_core::channel::{simulate as simulate_trace, NoiseModel, TraceSeed};
use nnc_core::cli::select_component;
use nnc_core::detection::{self, point_mass, DetectorOptions, SegmentLikelihood};
use nnc_core::kmer_space::{self, fixtures, ChannelMapping, KmerState};
use nnc_core::rates::{self, MonteCarloConfig};
use nnc_core::source::{self, parse_support, DurationModel};
use nnc_core::NncError;

fn py_err(e: NncError) -> PyErr {
    match e {
        NncError::NoConvergence(_) | NncError::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn duration(spec: &str) -> PyResult<DurationModel> {
    DurationModel::uniform(&parse_support(spec).map_err(py_err)?).map_err(py_err)
}

fn noise(sigma: f64) -> PyResult<NoiseModel> {
    NoiseModel::constant(sigma).map_err(py_err)
}

/// k-mer state graph with per-state levels.
#[pyclass(name = "StateGraph", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyStateGraph {
    inner: kmer_space::StateGraph,
}

#[pymethods]
impl PyStateGraph {
    /// Shift graph induced by a bundled fixture ("fig3", "tau2", "fig2").
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        let inner = match name {
            "fig2" => fixtures::fig2_chain(),
            _ => {
                let mapping = fixtures::mapping_by_id(name)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown fixture '{name}'")))?;
                kmer_space::StateGraph::induced(&mapping).map_err(py_err)?
            }
        };
        Ok(PyStateGraph { inner })
    }

    /// Shift graph induced by a k-mer model table on disk.
    #[staticmethod]
    fn from_model(path: PathBuf) -> PyResult<Self> {
        let mapping = kmer_space::read_kmer_model(&path).map_err(py_err)?;
        Ok(PyStateGraph { inner: kmer_space::StateGraph::induced(&mapping).map_err(py_err)? })
    }

    /// Shift graph induced by a `{kmer: level}` dictionary.
    #[staticmethod]
    fn from_levels(levels: BTreeMap<String, f64>) -> PyResult<Self> {
        let tau = levels.keys().next().map_or(0, |k| k.len());
        let mut mapping = ChannelMapping::new(tau).map_err(py_err)?;
        for (k, level) in levels {
            let kmer: KmerState = k.parse().map_err(py_err)?;
            mapping.insert(kmer, level, None).map_err(py_err)?;
        }
        Ok(PyStateGraph { inner: kmer_space::StateGraph::induced(&mapping).map_err(py_err)? })
    }

    #[getter]
    fn tau(&self) -> usize {
        self.inner.tau()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn kmers(&self) -> Vec<String> {
        self.inner.kmers().iter().map(|k| k.to_string()).collect()
    }

    fn levels(&self) -> Vec<f64> {
        self.inner.levels().to_vec()
    }

    /// `(src, dst, input_base)` per edge, as node indices.
    fn edges(&self) -> Vec<(usize, usize, char)> {
        self.inner.edges().iter().map(|e| (e.src, e.dst, e.input.as_char())).collect()
    }

    /// Drops edges whose jump `|f(i) - f(j)|` is below `jmin`.
    fn reduce(&self, jmin: f64) -> Self {
        PyStateGraph { inner: kmer_space::jump_constrained_reduce(&self.inner, jmin) }
    }

    fn components(&self) -> Vec<PyStateGraph> {
        kmer_space::strongly_connected_components(&self.inner)
            .into_iter()
            .map(|inner| PyStateGraph { inner })
            .collect()
    }

    /// Largest Perron root over strongly connected components.
    fn perron_root(&self) -> PyResult<f64> {
        kmer_space::perron_root(&self.inner).map_err(py_err)
    }

    /// `log2` of the Perron root, in bits per base.
    fn perron_entropy(&self) -> PyResult<f64> {
        kmer_space::perron_entropy(&self.inner).map_err(py_err)
    }

    /// Reduce, split into components and keep the one of largest entropy.
    fn select(&self, jmin: f64) -> PyResult<Self> {
        let mut mapping = ChannelMapping::new(self.inner.tau()).map_err(py_err)?;
        for (k, level) in self.inner.kmers().iter().zip(self.inner.levels()) {
            mapping.insert(*k, *level, None).map_err(py_err)?;
        }
        let sel = select_component(&mapping, jmin, true).map_err(py_err)?;
        Ok(PyStateGraph { inner: sel.component().clone() })
    }

    fn __repr__(&self) -> String {
        format!("StateGraph(tau={}, nodes={}, edges={})", self.inner.tau(), self.inner.node_count(), self.inner.edge_count())
    }
}

/// Stationary Markov source on a strongly connected graph.
#[pyclass(name = "MarkovSource", frozen)]
pub struct PyMarkovSource {
    inner: source::MarkovSource,
}

#[pymethods]
impl PyMarkovSource {
    /// Equal probability on every outgoing edge.
    #[staticmethod]
    fn uniform(graph: &PyStateGraph) -> PyResult<Self> {
        Ok(PyMarkovSource { inner: source::uniform_kernel(&graph.inner).map_err(py_err)? })
    }

    /// Maxentropic kernel; its entropy rate equals the graph's Perron entropy.
    #[staticmethod]
    fn parry(graph: &PyStateGraph) -> PyResult<Self> {
        Ok(PyMarkovSource { inner: source::parry_kernel(&graph.inner).map_err(py_err)? })
    }

    #[getter]
    fn graph(&self) -> PyStateGraph {
        PyStateGraph { inner: self.inner.graph().clone() }
    }

    fn edge_probs(&self) -> Vec<f64> {
        self.inner.edge_probs().to_vec()
    }

    fn stationary(&self) -> Vec<f64> {
        self.inner.stationary().to_vec()
    }

    /// Bits per base.
    fn entropy_rate(&self) -> f64 {
        self.inner.entropy_rate()
    }
}

/// A simulated channel realization.
#[pyclass(name = "Trace", frozen, get_all)]
pub struct PyTrace {
    s0: usize,
    states: Vec<usize>,
    durations: Vec<usize>,
    /// `T_0 = 0, T_1, ..., T_m`.
    jump_times: Vec<usize>,
    samples: Vec<f64>,
}

/// Simulates `m` channel uses with durations uniform on `lam` (e.g. "1..2").
#[pyfunction]
#[pyo3(signature = (source, lam, sigma, m, seed, stream = 0))]
fn simulate(source: &PyMarkovSource, lam: &str, sigma: f64, m: usize, seed: u64, stream: u64) -> PyResult<PyTrace> {
    let t = simulate_trace(&source.inner, &duration(lam)?, &noise(sigma)?, m, TraceSeed::new(seed, stream))
        .map_err(py_err)?;
    Ok(PyTrace { s0: t.s0, states: t.states, durations: t.durations, jump_times: t.jump_times, samples: t.samples })
}

fn initial_for(source: &PyMarkovSource, s0: Option<usize>) -> PyResult<Vec<f64>> {
    match s0 {
        Some(s) if s < source.inner.state_count() => Ok(point_mass(source.inner.state_count(), s)),
        Some(s) => Err(PyValueError::new_err(format!("initial state {s} out of range"))),
        None => Ok(source.inner.stationary().to_vec()),
    }
}

/// Segment posteriors `psi[l-1][s]`, edge posteriors `pair[l-2][e]`, and the
/// log-evidence.
#[pyclass(name = "Posteriors", frozen, get_all)]
pub struct PyPosteriors {
    single: Vec<Vec<f64>>,
    pair: Vec<Vec<f64>>,
    log_evidence: f64,
}

/// Forward-backward over `m` segments. `s0` fixes the initial state;
/// otherwise the stationary distribution is used.
#[pyfunction]
#[pyo3(signature = (source, lam, sigma, samples, m, s0 = None))]
fn forward_backward(
    py: Python<'_>,
    source: &PyMarkovSource,
    lam: &str,
    sigma: f64,
    samples: Vec<f64>,
    m: usize,
    s0: Option<usize>,
) -> PyResult<PyPosteriors> {
    let dur = duration(lam)?;
    let nm = noise(sigma)?;
    let initial = initial_for(source, s0)?;
    let post = py
        .detach(|| {
            let sl = SegmentLikelihood::new(&source.inner, &dur, &nm, &samples);
            detection::forward_backward(&sl, &initial, m, &DetectorOptions::default())
        })
        .map_err(py_err)?;
    Ok(PyPosteriors {
        single: (1..=m).map(|l| post.states_at(l).to_vec()).collect(),
        pair: (2..=m).map(|l| post.pairs_at(l).to_vec()).collect(),
        log_evidence: post.log_evidence(),
    })
}

#[pyclass(name = "ViterbiPath", frozen, get_all)]
pub struct PyViterbiPath {
    s0: usize,
    states: Vec<usize>,
    /// `T_1, ..., T_m`.
    jump_times: Vec<usize>,
    log_score: f64,
}

/// MAP state and segmentation sequence.
#[pyfunction]
#[pyo3(signature = (source, lam, sigma, samples, m, s0 = None))]
fn viterbi(
    py: Python<'_>,
    source: &PyMarkovSource,
    lam: &str,
    sigma: f64,
    samples: Vec<f64>,
    m: usize,
    s0: Option<usize>,
) -> PyResult<PyViterbiPath> {
    let dur = duration(lam)?;
    let nm = noise(sigma)?;
    let initial = initial_for(source, s0)?;
    let v = py
        .detach(|| {
            let sl = SegmentLikelihood::new(&source.inner, &dur, &nm, &samples);
            detection::viterbi(&sl, &initial, m, &DetectorOptions::default())
        })
        .map_err(py_err)?;
    Ok(PyViterbiPath { s0: v.s0, states: v.states, jump_times: v.jump_times, log_score: v.log_score })
}

#[pyclass(name = "RateEstimate", frozen, get_all)]
pub struct PyRateEstimate {
    rate: f64,
    entropy_term: f64,
    t_term: f64,
    m_total: u64,
    blocks: usize,
    stderr: f64,
}

/// Achievable rate in bits per base from `m_total / block_len` simulated blocks.
#[pyfunction]
#[pyo3(signature = (source, lam, sigma, m_total = 10_000, block_len = 200, seed = 1))]
fn monte_carlo_rate(
    py: Python<'_>,
    source: &PyMarkovSource,
    lam: &str,
    sigma: f64,
    m_total: usize,
    block_len: usize,
    seed: u64,
) -> PyResult<PyRateEstimate> {
    let dur = duration(lam)?;
    let nm = noise(sigma)?;
    let cfg = MonteCarloConfig::new(m_total, block_len, seed);
    let e = py.detach(|| rates::monte_carlo_rate(&source.inner, &dur, &nm, &cfg)).map_err(py_err)?;
    Ok(PyRateEstimate {
        rate: e.rate,
        entropy_term: e.entropy_term,
        t_term: e.t_term,
        m_total: e.m_total,
        blocks: e.blocks,
        stderr: e.stderr,
    })
}

#[pymodule]
fn nnc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStateGraph>()?;
    m.add_class::<PyMarkovSource>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyPosteriors>()?;
    m.add_class::<PyViterbiPath>()?;
    m.add_class::<PyRateEstimate>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(forward_backward, m)?)?;
    m.add_function(wrap_pyfunction!(viterbi, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_rate, m)?)?;
    Ok(())
}
