//! Shared fixtures for the criterion benchmarks.

use triad_core::syngen::{generate, SynthConfig};
use triad_core::TemporalMultigraph;

/// Marketplace-shaped benchmark graph: `scale` multiplies a 1k-buyer base.
pub fn marketplace(scale: u64, seed: u64) -> TemporalMultigraph {
    let cfg = SynthConfig {
        n_buyers: 1_000 * scale,
        n_sellers: 50 * scale,
        seller_popularity_exponent: 0.8,
        trades_per_buyer: 4.0,
        base_message_rate: 1.5,
        bs_message_rate: 0.6,
        friends_per_buyer: 4,
        n_clusters: 0,
        seed,
        ..SynthConfig::default()
    };
    generate(&cfg)
        .expect("benchmark config is valid")
        .build_graph()
        .expect("benchmark dataset builds")
}
