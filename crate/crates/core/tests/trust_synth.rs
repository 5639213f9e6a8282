//! End-to-end trust recovery: the generator plants d(r) = a (r/100)^b + c
//! into listing prices; deviations around realized cluster medians, bucketed
//! and refit, recover the planted parameters.

use triad_core::syngen::{generate, SynthConfig};
use triad_core::trust::{bucket_deviations, fit_power, price_deviations, seller_deviation_profile};

#[test]
fn planted_trust_curve_is_recoverable_from_clusters() {
    let cfg = SynthConfig {
        n_buyers: 100,
        n_sellers: 400,
        n_clusters: 900,
        listings_per_cluster: 8,
        trust_a: 5.0,
        trust_b: 80.0,
        trust_c: -2.0,
        trust_noise: 0.5,
        rating_spread: 2.0,
        trades_per_buyer: 0.5,
        base_message_rate: 0.0,
        seed: 41,
        ..SynthConfig::default()
    };
    let generated = generate(&cfg).unwrap();
    let report = price_deviations(&generated.listings, &generated.ratings);
    assert!(report.points.len() > 3000);
    assert_eq!(report.skipped_missing_rating, 0);

    let buckets = bucket_deviations(&report.points);
    let fit = fit_power(&buckets).unwrap();
    assert!(
        (fit.b - cfg.trust_b).abs() / cfg.trust_b <= 0.10,
        "planted b {} recovered as {:.2}",
        cfg.trust_b,
        fit.b
    );
    assert!(
        fit.r_squared > 0.85,
        "bucketed fit R^2 = {:.3}",
        fit.r_squared
    );
    let planted_crossing = cfg.trust_zero_crossing().unwrap();
    let got = fit.zero_crossing.expect("crossing in range");
    assert!(
        (got - planted_crossing).abs() <= 0.3,
        "crossing {got:.2} vs planted {planted_crossing:.2}"
    );
    assert!(
        fit.elasticity_at_median > 0.0,
        "price of trust should be positive"
    );
}

#[test]
fn per_seller_profile_fits_at_least_as_cleanly() {
    let cfg = SynthConfig {
        n_buyers: 100,
        n_sellers: 150,
        n_clusters: 1_200,
        listings_per_cluster: 8,
        trust_a: 5.0,
        trust_b: 80.0,
        trust_c: -2.0,
        trust_noise: 0.5,
        rating_spread: 2.0,
        trades_per_buyer: 0.5,
        base_message_rate: 0.0,
        seed: 43,
        ..SynthConfig::default()
    };
    let generated = generate(&cfg).unwrap();

    // Per-seller averaging suppresses the per-item noise, so the seller fit
    // should be at least as tight as the item fit.
    let item_fit = fit_power(&bucket_deviations(
        &price_deviations(&generated.listings, &generated.ratings).points,
    ))
    .unwrap();
    let profile = seller_deviation_profile(&generated.listings, &generated.ratings, 15);
    assert!(
        profile.len() > 50,
        "only {} sellers pass min_items",
        profile.len()
    );
    let seller_fit = fit_power(&profile).unwrap();
    assert!(seller_fit.r_squared > 0.85);
    assert!(seller_fit.r_squared >= item_fit.r_squared - 0.05);
}
