use super::StateGraph;

/// Tarjan's algorithm, iterative. Returns the node sets of the strongly
/// connected components, each sorted, ordered by smallest node index.
pub fn scc_partition(g: &StateGraph) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = g.node_count();
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut components = Vec::new();
    // (node, position in its out-edge list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let out = g.out_edges(v);
            if *pos < out.len() {
                let w = g.edges()[out[*pos]].dst;
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }
    components.sort_by_key(|c| c[0]);
    components
}

/// Strongly connected components as subgraphs carrying only intra-component edges.
pub fn strongly_connected_components(g: &StateGraph) -> Vec<StateGraph> {
    scc_partition(g).iter().map(|c| g.subgraph(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmer_space::{fixtures, Base, KmerState, StateGraph};

    fn tau1_graph(edges: &[(char, char)]) -> StateGraph {
        let nodes = ['A', 'C', 'G', 'T']
            .iter()
            .enumerate()
            .map(|(i, c)| (c.to_string().parse::<KmerState>().unwrap(), i as f64, None))
            .collect();
        let edges: Vec<_> = edges
            .iter()
            .map(|(s, d)| (s.to_string().parse().unwrap(), Base::from_char(*d).unwrap()))
            .collect();
        StateGraph::from_parts(1, nodes, edges).unwrap()
    }

    #[test]
    fn single_cycle_is_one_component() {
        let g = tau1_graph(&[('A', 'C'), ('C', 'G'), ('G', 'T'), ('T', 'A')]);
        assert_eq!(scc_partition(&g), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn two_disjoint_cycles() {
        let g = tau1_graph(&[('A', 'G'), ('G', 'A'), ('C', 'T'), ('T', 'C')]);
        assert_eq!(scc_partition(&g), vec![vec![0, 2], vec![1, 3]]);
        let comps = strongly_connected_components(&g);
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().all(|c| c.edge_count() == 2));
    }

    #[test]
    fn bridge_edge_is_dropped_from_components() {
        let g = tau1_graph(&[('A', 'C'), ('C', 'A'), ('C', 'G'), ('G', 'G')]);
        let comps = strongly_connected_components(&g);
        assert_eq!(comps.len(), 3);
        assert_eq!(comps[0].edge_count(), 2);
        assert_eq!(comps[1].edge_count(), 1); // G self-loop
        assert_eq!(comps[2].edge_count(), 0); // isolated T
    }

    #[test]
    fn fig3_graph_is_strongly_connected() {
        let g = fixtures::fig3_graph();
        let parts = scc_partition(&g);
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].len(), 7);
    }
}
