//! Undirected graph storage and the edge-list file format.
//!
//! Node ids in input files may be arbitrary non-negative integers; they are
//! remapped to a dense `[0, |V|)` range so every table in the pipeline can be
//! array-backed. The remap is kept alongside the graph and every on-disk
//! artifact speaks original ids.

use std::io::{BufRead, Write};

use thiserror::Error;

/// Dense node index in `[0, |V|)`.
pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("empty graph: no edges survived loading")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable undirected graph as sorted adjacency lists plus the edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
}

impl Graph {
    /// Build from deduplicated intent: edges may repeat, appear in either
    /// orientation or contain self-loops; all of that is normalized away.
    /// `node_count` may exceed the largest endpoint to keep isolated nodes.
    pub fn from_edges(node_count: usize, raw_edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let mut edges: Vec<(NodeId, NodeId)> = raw_edges
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        if edges.is_empty() {
            return Err(GraphError::Empty);
        }
        let max_id = edges.iter().map(|&(_, b)| b).max().unwrap() as usize;
        assert!(
            max_id < node_count,
            "edge endpoint {max_id} outside node range {node_count}"
        );

        let mut degrees = vec![0usize; node_count];
        for &(a, b) in &edges {
            degrees[a as usize] += 1;
            degrees[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for d in &degrees {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor = offsets.clone();
        let mut neighbors = vec![0 as NodeId; acc];
        for &(a, b) in &edges {
            neighbors[cursor[a as usize]] = b;
            cursor[a as usize] += 1;
            neighbors[cursor[b as usize]] = a;
            cursor[b as usize] += 1;
        }
        for v in 0..node_count {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Ok(Graph { offsets, neighbors, edges })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    /// Undirected edges, each listed once with the smaller endpoint first.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Σ_v degree(v) = 2·|E|.
    pub fn total_degree(&self) -> usize {
        self.neighbors.len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }
}

/// Mapping between dense node ids and the original ids from the input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMap {
    dense_to_original: Vec<u64>,
}

impl IdMap {
    /// Identity map for synthetic graphs built directly on dense ids.
    pub fn identity(node_count: usize) -> Self {
        IdMap { dense_to_original: (0..node_count as u64).collect() }
    }

    pub fn from_sorted(dense_to_original: Vec<u64>) -> Self {
        debug_assert!(dense_to_original.windows(2).all(|w| w[0] < w[1]));
        IdMap { dense_to_original }
    }

    pub fn original(&self, dense: NodeId) -> u64 {
        self.dense_to_original[dense as usize]
    }

    pub fn dense(&self, original: u64) -> Option<NodeId> {
        self.dense_to_original
            .binary_search(&original)
            .ok()
            .map(|i| i as NodeId)
    }

    pub fn len(&self) -> usize {
        self.dense_to_original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dense_to_original.is_empty()
    }
}

/// What got cleaned up during loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
}

#[derive(Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub ids: IdMap,
    pub report: LoadReport,
}

/// Parse a whitespace-separated edge list: two integer tokens per line,
/// `#`-prefixed comment lines and blank lines skipped. A third token is a
/// hard error — weighted input must be rejected, not silently truncated.
///
/// Self-loop lines are dropped (counted in the report) but still register
/// their node, so a node mentioned only via self-loops stays in the graph
/// as an isolated node.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<LoadedGraph, GraphError> {
    let mut raw: Vec<(u64, u64)> = Vec::new();
    let mut ids: Vec<u64> = Vec::new();
    let mut self_loops = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(a), Some(b)) = (tokens.next(), tokens.next()) else {
            return Err(GraphError::Malformed {
                line: line_no,
                reason: format!("expected two integer tokens, found {trimmed:?}"),
            });
        };
        if let Some(extra) = tokens.next() {
            return Err(GraphError::Malformed {
                line: line_no,
                reason: format!("unexpected extra token {extra:?} (weighted input is not supported)"),
            });
        }
        let parse = |tok: &str| {
            tok.parse::<u64>().map_err(|e| GraphError::Malformed {
                line: line_no,
                reason: format!("invalid node id {tok:?}: {e}"),
            })
        };
        let (u, v) = (parse(a)?, parse(b)?);
        ids.push(u);
        ids.push(v);
        if u == v {
            self_loops += 1;
        } else {
            raw.push((u, v));
        }
    }
    if raw.is_empty() {
        return Err(GraphError::Empty);
    }
    ids.sort_unstable();
    ids.dedup();
    let id_map = IdMap::from_sorted(ids);

    let mut dense_edges: Vec<(NodeId, NodeId)> = raw
        .iter()
        .map(|&(u, v)| {
            let a = id_map.dense(u).expect("id registered above");
            let b = id_map.dense(v).expect("id registered above");
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    let before = dense_edges.len();
    dense_edges.sort_unstable();
    dense_edges.dedup();
    let duplicates = before - dense_edges.len();

    let graph = Graph::from_edges(id_map.len(), &dense_edges)?;
    Ok(LoadedGraph {
        graph,
        ids: id_map,
        report: LoadReport { self_loops_dropped: self_loops, duplicate_edges_dropped: duplicates },
    })
}

/// Write the graph back out as an edge list in original ids, one undirected
/// edge per line, smaller dense endpoint first, sorted. Loading the output
/// reproduces the same graph, and re-serializing is byte-stable.
pub fn write_edge_list<W: Write>(graph: &Graph, ids: &IdMap, mut writer: W) -> std::io::Result<()> {
    for &(a, b) in graph.edges() {
        writeln!(writer, "{} {}", ids.original(a), ids.original(b))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn load(text: &str) -> Result<LoadedGraph, GraphError> {
        load_edge_list(Cursor::new(text))
    }

    #[test]
    fn builds_small_line_graph() {
        let loaded = load("0 1\n1 2\n").unwrap();
        let g = &loaded.graph;
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        let degrees: Vec<usize> = (0..3).map(|v| g.degree(v as NodeId)).collect();
        assert_eq!(degrees, vec![1, 2, 1]);
    }

    #[test]
    fn dedups_and_symmetrizes() {
        let loaded = load("0 1\n1 0\n0 1\n").unwrap();
        assert_eq!(loaded.graph.edge_count(), 1);
        assert_eq!(loaded.report.duplicate_edges_dropped, 2);
    }

    #[test]
    fn drops_self_loops_but_keeps_the_node() {
        let loaded = load("0 1\n2 2\n").unwrap();
        assert_eq!(loaded.report.self_loops_dropped, 1);
        assert_eq!(loaded.graph.node_count(), 3);
        assert_eq!(loaded.graph.degree(2), 0);
        assert_eq!(loaded.graph.edge_count(), 1);
    }

    #[test]
    fn karate_club_has_34_nodes_and_78_edges() {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/karate.edges"
        ))
        .unwrap();
        let loaded = load(&text).unwrap();
        assert_eq!(loaded.graph.node_count(), 34);
        assert_eq!(loaded.graph.edge_count(), 78);
        assert_eq!(loaded.graph.total_degree(), 156);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load("0 1\nnot numbers\n").unwrap_err();
        match err {
            GraphError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn weighted_input_is_rejected() {
        let err = load("0 1 0.5\n").unwrap_err();
        match err {
            GraphError::Malformed { line, reason } => {
                assert_eq!(line, 1);
                assert!(reason.contains("weighted"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(load(""), Err(GraphError::Empty)));
        assert!(matches!(load("# only comments\n"), Err(GraphError::Empty)));
        assert!(matches!(load("3 3\n"), Err(GraphError::Empty)));
    }

    #[test]
    fn sparse_original_ids_are_remapped_densely() {
        let loaded = load("100 7\n7 2000000000\n").unwrap();
        assert_eq!(loaded.graph.node_count(), 3);
        assert_eq!(loaded.ids.original(0), 7);
        assert_eq!(loaded.ids.original(1), 100);
        assert_eq!(loaded.ids.original(2), 2000000000);
        assert_eq!(loaded.ids.dense(100), Some(1));
        assert_eq!(loaded.ids.dense(3), None);
    }

    #[test]
    fn save_load_is_idempotent() {
        let text = "5 1\n1 9\n9 5\n5 1\n3 3\n";
        let first = load(text).unwrap();
        let mut out1 = Vec::new();
        write_edge_list(&first.graph, &first.ids, &mut out1).unwrap();
        let second = load(std::str::from_utf8(&out1).unwrap()).unwrap();
        let mut out2 = Vec::new();
        write_edge_list(&second.graph, &second.ids, &mut out2).unwrap();
        assert_eq!(out1, out2);
    }

    proptest! {
        #[test]
        fn adjacency_is_symmetric_and_degrees_sum_to_twice_edges(
            edges in proptest::collection::vec((0u32..40, 0u32..40), 1..120)
        ) {
            let Ok(g) = Graph::from_edges(40, &edges) else { return Ok(()); };
            for v in 0..g.node_count() as NodeId {
                for &u in g.neighbors(v) {
                    prop_assert!(g.neighbors(u).contains(&v));
                    prop_assert_ne!(u, v);
                }
            }
            let degree_sum: usize = (0..g.node_count() as NodeId).map(|v| g.degree(v)).sum();
            prop_assert_eq!(degree_sum, 2 * g.edge_count());
        }
    }
}
