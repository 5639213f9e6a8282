//! Temporal multigraph analytics for social-commerce networks.
//!
//! Models a marketplace as a three-layer multigraph (directed trades,
//! directed messages, undirected contacts) with per-edge event lists, and
//! implements a measurement pipeline on top of it:
//!
//! - [`graph`]: construction, ingestion, temporal snapshots, and node-level
//!   analytics (degrees, mutual neighbors, clustering, PageRank)
//! - [`census`]: the 16-way directed configuration census with closure
//!   probabilities, closing-type distributions, and surprise statistics
//! - [`infopass`]: information-passing measurement, modulating-factor
//!   curves, dyadic reports, and rewiring / seller-randomization null models
//! - [`trust`]: price deviation from product-cluster medians vs. seller
//!   rating, with a power-function fit
//! - [`choice`]: consumer-choice ranking — feature extraction with temporal
//!   snapshots, a pairwise max-margin linear ranker, baselines, evaluation
//! - [`syngen`]: seeded synthetic dataset generator with plantable effects
//! - [`io`]: the flat-file formats shared by all of the above

pub mod census;
pub mod choice;
pub mod error;
pub mod graph;
pub mod infopass;
pub mod io;
pub mod syngen;
pub mod trust;

pub use error::{Error, Result};
pub use graph::{
    EdgeEvent, EdgeId, EventKind, GraphView, Layer, NetworkStats, NodeId, TemporalMultigraph,
};
