//! Random-walk corpus: uniform-neighbor walks and skip-gram context pairs.
//!
//! The corpus is sampled once and replayed for every training pass. Each
//! walk draws from its own RNG substream keyed by (seed, start node, repeat),
//! so the corpus is byte-identical no matter how many workers sample it.

use std::io::{BufRead, Write};

use rand::seq::IndexedRandom;
use rayon::prelude::*;

use crate::graph::{Graph, GraphError, NodeId};
use crate::rng::substream;

/// All walks of one run. Exactly `gamma` walks start at every non-isolated
/// node; isolated nodes produce none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<NodeId>>,
    pub gamma: usize,
    pub ell: usize,
    pub seed: u64,
}

/// Uniform random-neighbor walks, `gamma` per non-isolated start node, each
/// of length `ell` (shorter only if the start is isolated, which yields no
/// walk at all on an undirected graph since there are no other dead ends).
pub fn sample_paths(graph: &Graph, gamma: usize, ell: usize, seed: u64) -> WalkCorpus {
    assert!(gamma >= 1 && ell >= 1);
    let starts: Vec<NodeId> = (0..graph.node_count() as NodeId)
        .filter(|&v| graph.degree(v) > 0)
        .collect();
    let walks: Vec<Vec<NodeId>> = starts
        .par_iter()
        .flat_map_iter(|&v| (0..gamma).map(move |r| (v, r)))
        .map(|(v, r)| {
            let mut rng = substream(seed, "walk", u64::from(v), r as u64);
            let mut walk = Vec::with_capacity(ell);
            walk.push(v);
            let mut current = v;
            for _ in 1..ell {
                let neighbors = graph.neighbors(current);
                current = *neighbors.choose(&mut rng).expect("non-isolated start");
                walk.push(current);
            }
            walk
        })
        .collect();
    WalkCorpus { walks, gamma, ell, seed }
}

/// Skip-gram pairs of one walk: for every position t, every other position u
/// with |u − t| ≤ zeta yields (walk[t], walk[u]). The window shrinks at walk
/// boundaries. A node revisited inside the window pairs with itself.
pub fn context_pairs(walk: &[NodeId], zeta: usize) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
    assert!(zeta >= 1);
    let len = walk.len();
    (0..len).flat_map(move |t| {
        let lo = t.saturating_sub(zeta);
        let hi = (t + zeta).min(len.saturating_sub(1));
        (lo..=hi).filter(move |&u| u != t).map(move |u| (walk[t], walk[u]))
    })
}

/// Number of pairs `context_pairs` yields for a walk of length `len`.
pub fn context_pair_count(len: usize, zeta: usize) -> usize {
    (0..len)
        .map(|t| t.min(zeta) + (len - 1 - t).min(zeta))
        .sum()
}

impl WalkCorpus {
    /// Total context pairs across all walks, used to budget SGD schedules.
    pub fn total_pairs(&self, zeta: usize) -> usize {
        self.walks.iter().map(|w| context_pair_count(w.len(), zeta)).sum()
    }

    /// Cache format: a header recording the sampling parameters, then one
    /// walk per line as space-separated dense node ids.
    pub fn save<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(writer, "gamma={} ell={} seed={}", self.gamma, self.ell, self.seed)?;
        for walk in &self.walks {
            let mut first = true;
            for v in walk {
                if first {
                    write!(writer, "{v}")?;
                    first = false;
                } else {
                    write!(writer, " {v}")?;
                }
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self, GraphError> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.ok_or(GraphError::Malformed {
            line: 1,
            reason: "missing corpus header".into(),
        })?;
        let mut gamma = None;
        let mut ell = None;
        let mut seed = None;
        for token in header.split_whitespace() {
            let Some((key, value)) = token.split_once('=') else {
                return Err(GraphError::Malformed {
                    line: 1,
                    reason: format!("bad header token {token:?}"),
                });
            };
            let parsed: u64 = value.parse().map_err(|e| GraphError::Malformed {
                line: 1,
                reason: format!("bad header value {value:?}: {e}"),
            })?;
            match key {
                "gamma" => gamma = Some(parsed as usize),
                "ell" => ell = Some(parsed as usize),
                "seed" => seed = Some(parsed),
                other => {
                    return Err(GraphError::Malformed {
                        line: 1,
                        reason: format!("unknown header key {other:?}"),
                    })
                }
            }
        }
        let (Some(gamma), Some(ell), Some(seed)) = (gamma, ell, seed) else {
            return Err(GraphError::Malformed {
                line: 1,
                reason: "header must define gamma, ell and seed".into(),
            });
        };
        let mut walks = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let walk: Result<Vec<NodeId>, _> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<NodeId>().map_err(|e| GraphError::Malformed {
                        line: idx + 2,
                        reason: format!("bad node id {tok:?}: {e}"),
                    })
                })
                .collect();
            walks.push(walk?);
        }
        Ok(WalkCorpus { walks, gamma, ell, seed })
    }
}
