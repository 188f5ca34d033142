//! Degree-biased noise distribution for negative sampling.
//!
//! Negative contexts are drawn with probability proportional to degree^¾.
//! The draw sits in the innermost training loop, so the distribution is
//! compiled once into an alias table and sampled in O(1).

use rand::Rng;

use crate::graph::{Graph, NodeId};
use thiserror::Error;

/// Negatives equal to the excluded node are redrawn at most this many times.
/// With more than one node in the support the bound is unreachable in
/// practice; it exists so a single-support distribution fails loudly.
const MAX_RESAMPLE_ATTEMPTS: usize = 1024;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("no node has positive sampling weight")]
    EmptySupport,
    #[error("resample bound exceeded: every draw hit the excluded node {exclude}")]
    ExcludedSupport { exclude: NodeId },
}

/// Alias-method table over nodes with weights degree^¾, normalized.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    probabilities: Vec<f64>,
    // Alias layout: accept[i] is the probability (scaled to [0,1]) of keeping
    // column i, alias[i] the donor used otherwise.
    accept: Vec<f64>,
    alias: Vec<u32>,
    support_size: usize,
}

/// Distribution with P(v) ∝ degree(v)^0.75; isolated nodes get weight zero.
pub fn build_negative_sampler(graph: &Graph) -> Result<NoiseDistribution, SamplerError> {
    let weights: Vec<f64> = (0..graph.node_count() as NodeId)
        .map(|v| (graph.degree(v) as f64).powf(0.75))
        .collect();
    NoiseDistribution::from_weights(&weights)
}

impl NoiseDistribution {
    pub fn from_weights(weights: &[f64]) -> Result<Self, SamplerError> {
        assert!(weights.iter().all(|w| *w >= 0.0 && w.is_finite()));
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(SamplerError::EmptySupport);
        }
        let n = weights.len();
        let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let support_size = weights.iter().filter(|w| **w > 0.0).count();

        // Vose's alias construction.
        let mut accept: Vec<f64> = probabilities.iter().map(|p| p * n as f64).collect();
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, a) in accept.iter().enumerate() {
            if *a < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            alias[s] = l as u32;
            accept[l] -= 1.0 - accept[s];
            if accept[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Leftovers are 1.0 up to round-off.
        for i in small.into_iter().chain(large) {
            accept[i] = 1.0;
        }
        Ok(NoiseDistribution { probabilities, accept, alias, support_size })
    }

    /// Exact normalized probability of node `v` (before alias-table rounding).
    pub fn probability(&self, v: NodeId) -> f64 {
        self.probabilities[v as usize]
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> NodeId {
        let i = rng.random_range(0..self.probabilities.len());
        let coin: f64 = rng.random();
        if coin < self.accept[i] {
            i as NodeId
        } else {
            self.alias[i]
        }
    }

    /// Draw a node, redrawing while the result equals `exclude`.
    pub fn sample_excluding<R: Rng>(
        &self,
        rng: &mut R,
        exclude: NodeId,
    ) -> Result<NodeId, SamplerError> {
        if self.support_size == 1 && self.probabilities[exclude as usize] > 0.0 {
            return Err(SamplerError::ExcludedSupport { exclude });
        }
        for _ in 0..MAX_RESAMPLE_ATTEMPTS {
            let v = self.sample(rng);
            if v != exclude {
                return Ok(v);
            }
        }
        Err(SamplerError::ExcludedSupport { exclude })
    }
}
