//! Structural census pattern on marketplace-shaped data: hub sellers make
//! seller-middle configurations dominate raw instance counts while few
//! unique sellers supply them; buyer-middle configurations close far more
//! often; and closing trades are over-represented for buyer middles but
//! under-represented for seller middles (buyers rarely trade with each
//! other, so those wedges close by message).

use triad_core::census::{config_census, XRole};
use triad_core::syngen::{generate, SynthConfig};

#[test]
fn buyer_and_seller_middles_split_as_expected() {
    let mut w = [0.0f64; 23];
    w[7] = 1.0;
    let cfg = SynthConfig {
        n_buyers: 2_000,
        n_sellers: 50,
        seller_popularity_exponent: 1.0,
        trades_per_buyer: 4.0,
        base_message_rate: 2.0,
        bs_message_rate: 1.0,
        friends_per_buyer: 4,
        p_plant: 0.08,
        n_clusters: 0,
        seed: 17,
        ..SynthConfig::default()
    };
    let g = generate(&cfg).unwrap().build_graph().unwrap();
    let rows = config_census(&g);

    let seller_rows: Vec<_> = rows.iter().filter(|r| r.x_role == XRole::Seller).collect();
    let buyer_rows: Vec<_> = rows.iter().filter(|r| r.x_role == XRole::Buyer).collect();
    assert_eq!(seller_rows.len(), 5);
    assert_eq!(buyer_rows.len(), 5);

    // Hub sellers sit in the middle of vastly more wedges...
    let seller_instances: u64 = seller_rows.iter().map(|r| r.instances).sum();
    let buyer_instances: u64 = buyer_rows.iter().map(|r| r.instances).sum();
    assert!(
        seller_instances > 10 * buyer_instances,
        "seller-middle {seller_instances} vs buyer-middle {buyer_instances}"
    );

    // ...while far fewer distinct sellers supply them.
    let max_seller_unique = seller_rows.iter().map(|r| r.unique_x).max().unwrap();
    let max_buyer_unique = buyer_rows.iter().map(|r| r.unique_x).max().unwrap();
    assert!(
        max_buyer_unique > 4 * max_seller_unique,
        "unique middles: buyers {max_buyer_unique} vs sellers {max_seller_unique}"
    );

    // Buyer-middle wedges close much more often: the third edge is a
    // buyer-seller edge rather than a buyer-buyer edge.
    let mean_close = |rows: &[&triad_core::census::CensusRow]| {
        let with_instances: Vec<_> = rows.iter().filter(|r| r.instances > 0).collect();
        with_instances.iter().map(|r| r.p_close_x100).sum::<f64>() / with_instances.len() as f64
    };
    let buyer_close = mean_close(&buyer_rows);
    let seller_close = mean_close(&seller_rows);
    assert!(
        buyer_close > 5.0 * seller_close,
        "closure probabilities: buyer {buyer_close:.3} vs seller {seller_close:.3}"
    );

    // Closing-trade surprises: positive for well-supported buyer middles,
    // negative for well-supported seller middles.
    for r in &buyer_rows {
        if r.closures >= 100 {
            let s = r.s_t_o.unwrap().max(r.s_t_i.unwrap());
            assert!(
                s > 2.0,
                "buyer-middle {:?} lacks a positive trade surprise ({s:.2})",
                r.config
            );
        }
    }
    for r in &seller_rows {
        if r.closures >= 100 {
            assert!(
                r.s_t_o.unwrap() < 0.0 && r.s_t_i.unwrap() < 0.0,
                "seller-middle {:?} trade surprises not negative",
                r.config
            );
        }
    }
}
