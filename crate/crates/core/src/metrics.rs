//! Community quality metrics: conductance against the graph structure and
//! normalized mutual information against ground-truth labels.

use std::collections::HashMap;

use crate::graph::{Graph, NodeId};

/// Hard community assignment, one dense community id per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    communities: Vec<u32>,
    count: usize,
}

impl Partition {
    /// Build from arbitrary (possibly sparse) community ids; ids are
    /// densified preserving first-appearance order of the sorted id set.
    pub fn new(raw: &[u32]) -> Self {
        let mut ids: Vec<u32> = raw.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let remap: HashMap<u32, u32> =
            ids.iter().enumerate().map(|(dense, &orig)| (orig, dense as u32)).collect();
        Partition {
            communities: raw.iter().map(|c| remap[c]).collect(),
            count: ids.len(),
        }
    }

    pub fn community(&self, v: NodeId) -> u32 {
        self.communities[v as usize]
    }

    pub fn community_count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }
}

/// Ground-truth labels; a node may carry several on multi-label data sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<Vec<u32>>,
}

impl LabelSet {
    pub fn new(labels: Vec<Vec<u32>>) -> Self {
        LabelSet { labels }
    }

    pub fn labels(&self, v: NodeId) -> &[u32] {
        &self.labels[v as usize]
    }

    pub fn is_single_label(&self) -> bool {
        self.labels.iter().all(|l| l.len() <= 1)
    }

    /// Single-label data only: the per-node label as a partition.
    pub fn to_partition(&self) -> Option<Partition> {
        let raw: Option<Vec<u32>> =
            self.labels.iter().map(|l| if l.len() == 1 { Some(l[0]) } else { None }).collect();
        raw.map(|r| Partition::new(&r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConductanceAggregation {
    /// Mean of per-community conductance (the reported default).
    #[default]
    Mean,
    /// Worst community.
    Max,
    /// Sum over communities.
    Sum,
}

/// Per-community cut-to-volume ratio cut(S) / min(vol(S), vol(V∖S)),
/// aggregated over communities. A community with a zero denominator counts
/// as 1, the worst case. Lower is better.
pub fn conductance(graph: &Graph, partition: &Partition) -> f64 {
    conductance_with(graph, partition, ConductanceAggregation::Mean)
}

pub fn conductance_with(
    graph: &Graph,
    partition: &Partition,
    aggregation: ConductanceAggregation,
) -> f64 {
    assert_eq!(partition.len(), graph.node_count(), "partition must cover the graph");
    let k = partition.community_count();
    let mut cut = vec![0usize; k];
    let mut volume = vec![0usize; k];
    for v in 0..graph.node_count() as NodeId {
        volume[partition.community(v) as usize] += graph.degree(v);
    }
    for &(a, b) in graph.edges() {
        let (ca, cb) = (partition.community(a), partition.community(b));
        if ca != cb {
            cut[ca as usize] += 1;
            cut[cb as usize] += 1;
        }
    }
    let total = graph.total_degree();
    let per_community = (0..k).map(|c| {
        let denom = volume[c].min(total - volume[c]);
        if denom == 0 {
            1.0
        } else {
            cut[c] as f64 / denom as f64
        }
    });
    match aggregation {
        ConductanceAggregation::Mean => per_community.sum::<f64>() / k as f64,
        ConductanceAggregation::Max => per_community.fold(0.0, f64::max),
        ConductanceAggregation::Sum => per_community.sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmiNormalization {
    /// 2·I / (H(a) + H(b)).
    #[default]
    ArithmeticMean,
    /// I / max(H(a), H(b)).
    Max,
    /// I / sqrt(H(a)·H(b)).
    Sqrt,
}

/// Normalized mutual information between two partitions of the same nodes,
/// in [0, 1]. Identical partitions (up to relabeling) score 1; by convention
/// two single-cluster partitions also score 1.
pub fn nmi(a: &Partition, b: &Partition) -> f64 {
    nmi_with(a, b, NmiNormalization::ArithmeticMean)
}

pub fn nmi_with(a: &Partition, b: &Partition, normalization: NmiNormalization) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions must cover the same node set");
    let n = a.len();
    assert!(n > 0);
    let ka = a.community_count();
    let kb = b.community_count();
    let mut joint = vec![0usize; ka * kb];
    let mut count_a = vec![0usize; ka];
    let mut count_b = vec![0usize; kb];
    for v in 0..n as NodeId {
        let (ca, cb) = (a.community(v) as usize, b.community(v) as usize);
        joint[ca * kb + cb] += 1;
        count_a[ca] += 1;
        count_b[cb] += 1;
    }
    let nf = n as f64;
    let entropy = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / nf;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&count_a);
    let hb = entropy(&count_b);
    // The multiset of cell contributions is the same regardless of argument
    // order; summing them in sorted order makes nmi(a, b) == nmi(b, a) exact.
    let mut terms = Vec::with_capacity(ka * kb);
    for ca in 0..ka {
        for cb in 0..kb {
            let c = joint[ca * kb + cb];
            if c == 0 {
                continue;
            }
            let p = c as f64 / nf;
            let pa = count_a[ca] as f64 / nf;
            let pb = count_b[cb] as f64 / nf;
            terms.push(p * (p / (pa * pb)).ln());
        }
    }
    terms.sort_by(|x, y| x.total_cmp(y));
    let information = terms.iter().sum::<f64>().max(0.0); // round-off can dip below zero
    let denom = match normalization {
        NmiNormalization::ArithmeticMean => (ha + hb) / 2.0,
        NmiNormalization::Max => ha.max(hb),
        NmiNormalization::Sqrt => (ha * hb).sqrt(),
    };
    if denom == 0.0 {
        // Both partitions are single clusters: identical by convention.
        return 1.0;
    }
    (information / denom).min(1.0)
}
