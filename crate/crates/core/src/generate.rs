//! Synthetic graph generators used by benchmarks and tests: planted-partition
//! stochastic block models and near-regular random graphs.

use rand::Rng;

use crate::graph::{Graph, NodeId};
use crate::rng::substream;

/// Stochastic block model with equally likely edges inside each block
/// (`p_intra`) and between blocks (`p_inter`). Returns the graph and the
/// planted block id of each node.
pub fn stochastic_block_model(
    block_sizes: &[usize],
    p_intra: f64,
    p_inter: f64,
    seed: u64,
) -> (Graph, Vec<u32>) {
    assert!((0.0..=1.0).contains(&p_intra) && (0.0..=1.0).contains(&p_inter));
    let n: usize = block_sizes.iter().sum();
    let mut blocks = Vec::with_capacity(n);
    for (b, &size) in block_sizes.iter().enumerate() {
        blocks.extend(std::iter::repeat(b as u32).take(size));
    }
    let mut rng = substream(seed, "sbm", 0, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if blocks[i] == blocks[j] { p_intra } else { p_inter };
            if rng.random::<f64>() < p {
                edges.push((i as NodeId, j as NodeId));
            }
        }
    }
    let graph = Graph::from_edges(n, &edges).expect("planted graph has edges");
    (graph, blocks)
}

/// Random graph where every node has degree `degree` up to a handful of
/// leftovers: repeated stub pairing with a few reshuffle rounds, dropping
/// whatever still collides. Good enough for scaling benchmarks.
pub fn random_regular_graph(n: usize, degree: usize, seed: u64) -> Graph {
    assert!(n > degree && (n * degree) % 2 == 0);
    let mut rng = substream(seed, "regular", 0, 0);
    let mut stubs: Vec<NodeId> = (0..n as NodeId).flat_map(|v| std::iter::repeat(v).take(degree)).collect();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(n * degree / 2);
    let mut seen = std::collections::HashSet::with_capacity(n * degree / 2);
    for _round in 0..20 {
        // Fisher-Yates shuffle.
        for i in (1..stubs.len()).rev() {
            let j = rng.random_range(0..=i);
            stubs.swap(i, j);
        }
        let mut leftovers = Vec::new();
        for pair in stubs.chunks(2) {
            if pair.len() < 2 {
                leftovers.extend_from_slice(pair);
                continue;
            }
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                leftovers.push(pair[0]);
                leftovers.push(pair[1]);
            } else {
                edges.push((a, b));
            }
        }
        if leftovers.len() < 2 {
            break;
        }
        stubs = leftovers;
    }
    Graph::from_edges(n, &edges).expect("regular graph has edges")
}
