use super::StateGraph;

/// Keeps exactly the edges whose jumping distance `|f(i) - f(j)|` is at least
/// `j_min`. All nodes are retained, possibly isolated.
pub fn jump_constrained_reduce(g: &StateGraph, j_min: f64) -> StateGraph {
    let levels = g.levels();
    g.filter_edges(|e| (levels[e.src] - levels[e.dst]).abs() >= j_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmer_space::fixtures;

    #[test]
    fn zero_threshold_keeps_everything() {
        let g = fixtures::tau2_toy_graph();
        assert_eq!(jump_constrained_reduce(&g, 0.0), g);
    }

    #[test]
    fn infinite_threshold_drops_everything() {
        let g = fixtures::tau2_toy_graph();
        let r = jump_constrained_reduce(&g, f64::INFINITY);
        assert_eq!(r.edge_count(), 0);
        assert_eq!(r.node_count(), g.node_count());
    }

    #[test]
    fn positive_threshold_removes_self_loops() {
        let r = jump_constrained_reduce(&fixtures::tau2_toy_graph(), 1e-9);
        assert!(!r.has_self_loops());
    }
}
