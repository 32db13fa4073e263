//! Perron root and maxentropic rate of constrained state graphs.

use super::{scc_partition, StateGraph};
use crate::error::{NncError, Result};

const TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 1_000_000;

/// Perron root and positive right eigenvector of a strongly connected graph's
/// adjacency matrix. The vector is normalized to sum to one.
#[derive(Debug, Clone)]
pub struct PerronVector {
    pub root: f64,
    pub right: Vec<f64>,
}

impl PerronVector {
    /// Power iteration on `A + I` from the uniform vector. The shift keeps the
    /// iteration convergent on periodic graphs without changing the eigenvector;
    /// convergence is tested with Collatz-Wielandt bounds.
    pub fn compute(g: &StateGraph) -> Result<Self> {
        let n = g.node_count();
        if n == 0 {
            return Err(NncError::UndefinedEntropy("empty graph".into()));
        }
        if scc_partition(g).len() != 1 {
            return Err(NncError::NotStronglyConnected);
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut y = vec![0.0; n];
        for _ in 0..MAX_ITERATIONS {
            shifted_product(g, &x, &mut y);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for (xi, yi) in x.iter().zip(&y) {
                let r = yi / xi;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let total: f64 = y.iter().sum();
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / total;
            }
            if hi - lo <= TOLERANCE * hi {
                let root = 0.5 * (hi + lo) - 1.0;
                return Ok(PerronVector { root, right: x });
            }
        }
        Err(NncError::NoConvergence(MAX_ITERATIONS))
    }
}

fn shifted_product(g: &StateGraph, x: &[f64], y: &mut [f64]) {
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = x[i] + g.out_edges(i).iter().map(|&e| x[g.edges()[e].dst]).sum::<f64>();
    }
}

/// Spectral radius of the adjacency matrix of any graph: the largest Perron
/// root over its strongly connected components.
pub fn perron_root(g: &StateGraph) -> Result<f64> {
    if g.edge_count() == 0 {
        return Err(NncError::UndefinedEntropy("graph has no edges".into()));
    }
    let mut best = 0.0f64;
    for comp in scc_partition(g) {
        let sub = g.subgraph(&comp);
        if sub.edge_count() == 0 {
            continue;
        }
        best = best.max(PerronVector::compute(&sub)?.root);
    }
    Ok(best)
}

/// `log2` of the Perron root, in bits per base.
pub fn perron_entropy(g: &StateGraph) -> Result<f64> {
    let root = perron_root(g)?;
    if root <= 0.0 {
        return Err(NncError::UndefinedEntropy("graph has no cycles".into()));
    }
    Ok(root.log2())
}

/// The component with the largest Perron entropy; ties go to the component
/// listed first (smallest node index). Edgeless components are skipped.
pub fn max_entropy_component(components: &[StateGraph]) -> Result<StateGraph> {
    let mut best: Option<(f64, &StateGraph)> = None;
    for comp in components {
        let Ok(h) = perron_entropy(comp) else { continue };
        if best.map_or(true, |(bh, _)| h > bh) {
            best = Some((h, comp));
        }
    }
    best.map(|(_, g)| g.clone())
        .ok_or_else(|| NncError::UndefinedEntropy("all components are edgeless".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmer_space::{fixtures, full_graph, strongly_connected_components, Base, ChannelMapping, KmerState};

    fn cycle(len: usize) -> StateGraph {
        // ring over the first `len` order-1 states
        let bases = &Base::ALL[..len];
        let nodes = bases.iter().map(|b| (KmerState::from_bases(&[*b]).unwrap(), 0.0, None)).collect();
        let edges: Vec<_> = (0..len)
            .map(|i| (KmerState::from_bases(&[bases[i]]).unwrap(), bases[(i + 1) % len]))
            .collect();
        StateGraph::from_parts(1, nodes, edges).unwrap()
    }

    #[test]
    fn cycle_has_zero_entropy() {
        for len in 1..=4 {
            assert!(perron_entropy(&cycle(len)).unwrap().abs() < 1e-9, "len={len}");
        }
    }

    #[test]
    fn complete_order_one_graph_has_two_bits() {
        let mut m = ChannelMapping::new(1).unwrap();
        for k in KmerState::all(1).unwrap() {
            m.insert(k, 0.0, None).unwrap();
        }
        let h = perron_entropy(&full_graph(&m).unwrap()).unwrap();
        assert!((h - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fig3_entropy() {
        let h = perron_entropy(&fixtures::fig3_graph()).unwrap();
        assert!((h - 0.3063).abs() < 5e-4, "{h}");
    }

    #[test]
    fn edgeless_is_an_error() {
        let g = fixtures::fig3_graph().filter_edges(|_| false);
        assert!(matches!(perron_entropy(&g), Err(NncError::UndefinedEntropy(_))));
        let comps = strongly_connected_components(&g);
        assert!(max_entropy_component(&comps).is_err());
    }

    #[test]
    fn picks_positive_entropy_component() {
        // component 1: A<->C plus C self-loop (entropy > 0); component 2: G<->T cycle
        let nodes = ['A', 'C', 'G', 'T']
            .iter()
            .map(|c| (c.to_string().parse::<KmerState>().unwrap(), 0.0, None))
            .collect();
        let edges: Vec<(KmerState, Base)> = [("A", Base::C), ("C", Base::A), ("C", Base::C), ("G", Base::T), ("T", Base::G)]
            .iter()
            .map(|(s, b)| (s.parse().unwrap(), *b))
            .collect();
        let g = StateGraph::from_parts(1, nodes, edges).unwrap();
        let comps = strongly_connected_components(&g);
        assert_eq!(comps.len(), 2);
        let best = max_entropy_component(&comps).unwrap();
        assert_eq!(best, comps[0]);
        // swapping the order does not change the winner
        let best = max_entropy_component(&[comps[1].clone(), comps[0].clone()]).unwrap();
        assert_eq!(best, comps[0]);
        assert_eq!(max_entropy_component(&comps[1..]).unwrap(), comps[1]);
    }

    #[test]
    fn perron_vector_requires_strong_connectivity() {
        let g = fixtures::tau2_toy_graph().filter_edges(|e| e.src < e.dst);
        assert!(matches!(PerronVector::compute(&g), Err(NncError::NotStronglyConnected)));
    }
}
