//! Joint node embedding, community detection and community embedding for
//! undirected graphs.
//!
//! The model learns one embedding per node under three kinds of pressure:
//! directly linked nodes are pulled together, nodes sharing random-walk
//! contexts are pulled together (skip-gram with negative sampling), and nodes
//! are pulled towards the center of the Gaussian mixture component they most
//! likely belong to. The mixture components themselves — a mean and a
//! covariance per community — are the community embeddings, refitted by EM
//! between embedding passes.
//!
//! Typical batch usage goes through [`trainer::train`]; the individual pieces
//! (graph loading, walk sampling, SGD kernels, the mixture model, metrics)
//! are exposed for programmatic use and for testing each part against an
//! independent oracle.

pub mod embed;
pub mod generate;
pub mod gmm;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod sampling;
pub mod trainer;
pub mod walks;

mod hogwild;

pub use graph::{Graph, NodeId};
pub use trainer::{ComEModel, TrainConfig};
