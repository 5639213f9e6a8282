//! Seeded generator of desk-scale marketplace datasets with plantable
//! effects: an information-passing plant (message then same-seller purchase
//! within two days), between-purchase message bursts, a trust plant driving
//! listing prices through d(r) = a (r/100)^b + c, and a choice plant drawing
//! buyers' sellers from exp(w . features).
//!
//! The same (config, seed) always produces byte-identical files; truth.json
//! records every planted parameter.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::choice::{build_decisions, FeatureExtractor, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::graph::{RawEvent, RawPayload, TemporalMultigraph, SECONDS_PER_DAY};
use crate::io::{ChoiceRow, ListingRow, RatingRow};

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub n_buyers: u64,
    pub n_sellers: u64,
    /// Power-law exponent of seller popularity: weight(j) ~ j^(-alpha).
    pub seller_popularity_exponent: f64,
    /// Mean organic purchases per buyer over the window.
    pub trades_per_buyer: f64,
    /// Mean message events per messaging pair over the window.
    pub base_message_rate: f64,
    /// Ring-lattice friends per buyer (homophilous message/contact graph).
    pub friends_per_buyer: u32,
    /// Extra non-contact messaging pairs, as a fraction of contact pairs.
    pub extra_message_pair_frac: f64,
    /// Mean buyer-seller messages around each trade.
    pub bs_message_rate: f64,
    /// Probability that a messaged friend buys from the same seller within
    /// two days.
    pub p_plant: f64,
    /// Extra buyer-buyer messages between the two planted purchase dates.
    pub burst_messages: u32,
    /// Per-category overrides of p_plant.
    pub category_rates: BTreeMap<u32, f64>,
    pub n_categories: u32,
    /// Mean buyer-to-buyer trades per buyer (exercises ambiguous roles).
    pub buyer_buyer_trade_rate: f64,
    pub window_days: i64,
    pub n_clusters: u32,
    pub listings_per_cluster: u32,
    pub trust_a: f64,
    pub trust_b: f64,
    pub trust_c: f64,
    /// Deviation noise sigma in percent points.
    pub trust_noise: f64,
    /// Std of seller ratings around the planted zero crossing.
    pub rating_spread: f64,
    pub n_choice_decisions: u32,
    /// Mean pre-purchase browsing messages per (buyer, candidate) pair.
    pub browse_rate: f64,
    /// Choice plant weights over the raw 23-dim feature vector.
    pub choice_weights: [f64; NUM_FEATURES],
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_buyers: 400,
            n_sellers: 40,
            seller_popularity_exponent: 1.0,
            trades_per_buyer: 3.0,
            base_message_rate: 2.0,
            friends_per_buyer: 4,
            extra_message_pair_frac: 0.2,
            bs_message_rate: 1.0,
            p_plant: 0.0,
            burst_messages: 0,
            category_rates: BTreeMap::new(),
            n_categories: 10,
            buyer_buyer_trade_rate: 0.0,
            window_days: 60,
            n_clusters: 120,
            listings_per_cluster: 4,
            trust_a: 5.0,
            trust_b: 80.0,
            trust_c: -2.0,
            trust_noise: 0.5,
            rating_spread: 2.0,
            n_choice_decisions: 0,
            browse_rate: 1.5,
            choice_weights: [0.0; NUM_FEATURES],
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_buyers < 2 || self.n_sellers < 2 {
            return Err(Error::invalid("need at least 2 buyers and 2 sellers"));
        }
        if !(0.0..=1.0).contains(&self.p_plant) {
            return Err(Error::invalid("p_plant must lie in [0, 1]"));
        }
        for (&cat, &rate) in &self.category_rates {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::invalid(format!(
                    "category {cat} rate outside [0, 1]"
                )));
            }
        }
        if self.window_days < 3 {
            return Err(Error::invalid("window must cover at least 3 days"));
        }
        let has_message_pairs = self.friends_per_buyer > 0 || self.extra_message_pair_frac > 0.0;
        let any_plant = self.p_plant > 0.0 || self.category_rates.values().any(|&r| r > 0.0);
        if any_plant && !has_message_pairs {
            return Err(Error::invalid(
                "information-passing plant requires messaging pairs (friends_per_buyer or extra pairs)",
            ));
        }
        if self.listings_per_cluster > 10 {
            return Err(Error::invalid(
                "listings_per_cluster must stay within 10 sellers",
            ));
        }
        Ok(())
    }

    /// Planted rating at which the deviation crosses zero, when defined.
    pub fn trust_zero_crossing(&self) -> Option<f64> {
        if self.trust_a == 0.0 {
            return None;
        }
        let ratio = -self.trust_c / self.trust_a;
        if ratio <= 0.0 {
            return None;
        }
        let x = ratio.powf(1.0 / self.trust_b);
        (x > 0.0 && x <= 1.0).then_some(100.0 * x)
    }
}

/// Parses the flat `key=value` config format; `#` starts a comment. Unknown
/// keys are rejected. `choice_weights` takes 23 comma-separated numbers,
/// `category_rates` entries look like `3:0.2,7:0.05`.
pub fn parse_config(text: &str) -> Result<SynthConfig> {
    let mut cfg = SynthConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::invalid(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| {
            Error::invalid(format!("config line {}: bad {what}: {value:?}", lineno + 1))
        };
        match key {
            "n_buyers" => cfg.n_buyers = value.parse().map_err(|_| bad("integer"))?,
            "n_sellers" => cfg.n_sellers = value.parse().map_err(|_| bad("integer"))?,
            "seller_popularity_exponent" => {
                cfg.seller_popularity_exponent = value.parse().map_err(|_| bad("number"))?
            }
            "trades_per_buyer" => {
                cfg.trades_per_buyer = value.parse().map_err(|_| bad("number"))?
            }
            "base_message_rate" => {
                cfg.base_message_rate = value.parse().map_err(|_| bad("number"))?
            }
            "friends_per_buyer" => {
                cfg.friends_per_buyer = value.parse().map_err(|_| bad("integer"))?
            }
            "extra_message_pair_frac" => {
                cfg.extra_message_pair_frac = value.parse().map_err(|_| bad("number"))?
            }
            "bs_message_rate" => cfg.bs_message_rate = value.parse().map_err(|_| bad("number"))?,
            "p_plant" => cfg.p_plant = value.parse().map_err(|_| bad("number"))?,
            "burst_messages" => cfg.burst_messages = value.parse().map_err(|_| bad("integer"))?,
            "n_categories" => cfg.n_categories = value.parse().map_err(|_| bad("integer"))?,
            "buyer_buyer_trade_rate" => {
                cfg.buyer_buyer_trade_rate = value.parse().map_err(|_| bad("number"))?
            }
            "window_days" => cfg.window_days = value.parse().map_err(|_| bad("integer"))?,
            "n_clusters" => cfg.n_clusters = value.parse().map_err(|_| bad("integer"))?,
            "listings_per_cluster" => {
                cfg.listings_per_cluster = value.parse().map_err(|_| bad("integer"))?
            }
            "trust_a" => cfg.trust_a = value.parse().map_err(|_| bad("number"))?,
            "trust_b" => cfg.trust_b = value.parse().map_err(|_| bad("number"))?,
            "trust_c" => cfg.trust_c = value.parse().map_err(|_| bad("number"))?,
            "trust_noise" => cfg.trust_noise = value.parse().map_err(|_| bad("number"))?,
            "rating_spread" => cfg.rating_spread = value.parse().map_err(|_| bad("number"))?,
            "n_choice_decisions" => {
                cfg.n_choice_decisions = value.parse().map_err(|_| bad("integer"))?
            }
            "browse_rate" => cfg.browse_rate = value.parse().map_err(|_| bad("number"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad("integer"))?,
            "choice_weights" => {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != NUM_FEATURES {
                    return Err(bad("choice_weights (need 23 comma-separated numbers)"));
                }
                for (i, part) in parts.iter().enumerate() {
                    cfg.choice_weights[i] = part.trim().parse().map_err(|_| bad("number"))?;
                }
            }
            "category_rates" => {
                cfg.category_rates.clear();
                if !value.is_empty() {
                    for entry in value.split(',') {
                        let (cat, rate) = entry
                            .split_once(':')
                            .ok_or_else(|| bad("category_rates entry (cat:rate)"))?;
                        cfg.category_rates.insert(
                            cat.trim().parse().map_err(|_| bad("category id"))?,
                            rate.trim().parse().map_err(|_| bad("rate"))?,
                        );
                    }
                }
            }
            other => {
                return Err(Error::invalid(format!(
                    "config line {}: unknown key {other:?}",
                    lineno + 1
                )))
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug, Serialize)]
pub struct TruthCounts {
    pub events: u64,
    pub trades: u64,
    pub messages: u64,
    pub contacts: u64,
    pub listings: u64,
    pub clusters: u64,
    pub choice_rows: u64,
    pub planted_triples: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruthRecord {
    pub seed: u64,
    pub window_days: i64,
    pub n_buyers: u64,
    pub n_sellers: u64,
    pub seller_popularity_exponent: f64,
    pub p_plant: f64,
    pub category_rates: BTreeMap<u32, f64>,
    pub burst_messages: u32,
    pub trust_a: f64,
    pub trust_b: f64,
    pub trust_c: f64,
    pub trust_noise: f64,
    pub trust_zero_crossing: Option<f64>,
    pub choice_weights: Vec<f64>,
    pub counts: TruthCounts,
}

/// In-memory generated dataset; `write_to_dir` materializes the six files.
pub struct Generated {
    pub window: (i64, i64),
    pub events: Vec<RawEvent>,
    pub contacts: Vec<(u64, u64)>,
    pub listings: Vec<ListingRow>,
    pub ratings: Vec<RatingRow>,
    pub choice_rows: Vec<ChoiceRow>,
    pub truth: TruthRecord,
}

impl Generated {
    pub fn build_graph(&self) -> Result<TemporalMultigraph> {
        TemporalMultigraph::build(self.events.clone(), self.contacts.clone(), self.window)
    }

    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut events =
            String::from("kind,src,dst,timestamp,product_id,category_id,price,quantity\n");
        for ev in &self.events {
            match &ev.payload {
                RawPayload::Message => events.push_str(&format!(
                    "message,{},{},{},,,,\n",
                    ev.src, ev.dst, ev.timestamp
                )),
                RawPayload::Trade {
                    product_id,
                    category_id,
                    price,
                    quantity,
                } => events.push_str(&format!(
                    "trade,{},{},{},{product_id},{category_id},{price},{quantity}\n",
                    ev.src, ev.dst, ev.timestamp
                )),
            }
        }
        fs::write(dir.join("events.csv"), events)?;

        let mut contacts = String::from("u,v\n");
        for &(u, v) in &self.contacts {
            contacts.push_str(&format!("{u},{v}\n"));
        }
        fs::write(dir.join("contacts.csv"), contacts)?;

        let mut clusters = String::from("cluster_id,seller,item_id,price\n");
        for l in &self.listings {
            clusters.push_str(&format!(
                "{},{},{},{}\n",
                l.cluster_id, l.seller, l.item_id, l.price
            ));
        }
        fs::write(dir.join("clusters.csv"), clusters)?;

        let mut ratings = String::from("seller,rating_percent\n");
        for r in &self.ratings {
            ratings.push_str(&format!("{},{}\n", r.seller, r.rating_percent));
        }
        fs::write(dir.join("ratings.csv"), ratings)?;

        let mut choice = String::from(
            "cluster_id,buyer,seller,purchase_date,price,rating_percent,historical_sold,inventory_sold,insurance\n",
        );
        for row in &self.choice_rows {
            choice.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.cluster_id,
                row.buyer,
                row.seller,
                row.purchase_date,
                row.price,
                row.rating_percent,
                row.historical_sold,
                row.inventory_sold,
                u8::from(row.insurance),
            ));
        }
        fs::write(dir.join("choice_clusters.csv"), choice)?;

        fs::write(
            dir.join("truth.json"),
            serde_json::to_string_pretty(&self.truth).map_err(|e| Error::invalid(e.to_string()))?,
        )?;
        Ok(())
    }
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    // Inversion by multiplication; fine for the small rates used here.
    let l = (-lambda).exp();
    let mut k = 0u64;
    let mut p = 1.0;
    loop {
        p *= rng.random::<f64>();
        if p <= l {
            return k;
        }
        k += 1;
        if k > 10_000 {
            return k;
        }
    }
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

struct Plan {
    cfg: SynthConfig,
    rng: ChaCha8Rng,
    end: i64,
    seller_ids: Vec<u64>,
    seller_cum: Vec<f64>,
}

impl Plan {
    fn pick_seller(&mut self) -> usize {
        let x: f64 = self.rng.random();
        self.seller_cum
            .partition_point(|&c| c < x)
            .min(self.seller_ids.len() - 1)
    }

    fn uniform_time(&mut self) -> i64 {
        self.rng.random_range(0..=self.end)
    }
}

/// Generates the dataset. Buyers get external ids 1..=n_buyers and sellers
/// n_buyers+1..=n_buyers+n_sellers.
pub fn generate(cfg: &SynthConfig) -> Result<Generated> {
    cfg.validate()?;
    let end = cfg.window_days * SECONDS_PER_DAY;
    let mut weights: Vec<f64> = (1..=cfg.n_sellers)
        .map(|j| (j as f64).powf(-cfg.seller_popularity_exponent))
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut cum = 0.0;
    let seller_cum: Vec<f64> = weights
        .iter()
        .map(|w| {
            cum += w;
            cum
        })
        .collect();
    let mut plan = Plan {
        cfg: cfg.clone(),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        end,
        seller_ids: (1..=cfg.n_sellers).map(|j| cfg.n_buyers + j).collect(),
        seller_cum,
    };

    let mut events: Vec<RawEvent> = Vec::new();
    let mut planted_triples = 0u64;

    // Contacts: ring lattice over buyers (index locality = homophily).
    let mut contacts: Vec<(u64, u64)> = Vec::new();
    let half = (cfg.friends_per_buyer / 2).max(if cfg.friends_per_buyer > 0 { 1 } else { 0 });
    for i in 1..=cfg.n_buyers {
        for step in 1..=half as u64 {
            let j = (i - 1 + step) % cfg.n_buyers + 1;
            if i != j {
                contacts.push((i.min(j), i.max(j)));
            }
        }
    }
    contacts.sort_unstable();
    contacts.dedup();

    // Messaging pairs: contacts plus extra random buyer pairs.
    let mut message_pairs: Vec<(u64, u64)> = contacts.clone();
    let extra = (contacts.len() as f64 * cfg.extra_message_pair_frac) as usize;
    let mut pair_set: HashSet<(u64, u64)> = contacts.iter().copied().collect();
    let mut added = 0usize;
    let mut guard = 0usize;
    while added < extra && guard < extra * 20 + 100 {
        guard += 1;
        let a = plan.rng.random_range(1..=cfg.n_buyers);
        let b = plan.rng.random_range(1..=cfg.n_buyers);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if pair_set.insert(pair) {
            message_pairs.push(pair);
            added += 1;
        }
    }

    // Friend lists feed the information-passing plant.
    let mut friends: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &(a, b) in &message_pairs {
        friends.entry(a).or_default().push(b);
        friends.entry(b).or_default().push(a);
    }

    // Background messaging, uniform over the window.
    for &(a, b) in &message_pairs {
        let n = poisson(&mut plan.rng, cfg.base_message_rate);
        for _ in 0..n {
            let t = plan.uniform_time();
            let (src, dst) = if plan.rng.random_bool(0.5) {
                (a, b)
            } else {
                (b, a)
            };
            events.push(RawEvent {
                src,
                dst,
                timestamp: t,
                payload: RawPayload::Message,
            });
        }
    }

    // Organic purchases, buyer-seller chatter, and the plant.
    let empty: Vec<u64> = Vec::new();
    for buyer in 1..=cfg.n_buyers {
        let n_trades = poisson(&mut plan.rng, cfg.trades_per_buyer);
        for _ in 0..n_trades {
            let sidx = plan.pick_seller();
            let seller = plan.seller_ids[sidx];
            let t1 = plan.uniform_time();
            let category = plan.rng.random_range(0..cfg.n_categories);
            let price = (plan.rng.random_range(0.0f64..1.0) * (250.0f64.ln() - 1.0f64.ln())
                + 1.0f64.ln())
            .exp();
            let product = format!("p{category}-{seller}");
            events.push(RawEvent {
                src: buyer,
                dst: seller,
                timestamp: t1,
                payload: RawPayload::Trade {
                    product_id: product.clone(),
                    category_id: category,
                    price,
                    quantity: 1 + poisson(&mut plan.rng, 0.3) as u32,
                },
            });

            // Buyer-seller chatter skewed toward and after the trade day.
            let n_msgs = poisson(&mut plan.rng, cfg.bs_message_rate);
            for _ in 0..n_msgs {
                const OFFSETS: [i64; 8] = [-2, -1, 0, 0, 0, 1, 2, 3];
                let off = OFFSETS[plan.rng.random_range(0..OFFSETS.len())];
                let t = (t1 + off * SECONDS_PER_DAY + plan.rng.random_range(0..SECONDS_PER_DAY))
                    .clamp(0, end);
                let (src, dst) = if plan.rng.random_bool(0.6) {
                    (buyer, seller)
                } else {
                    (seller, buyer)
                };
                events.push(RawEvent {
                    src,
                    dst,
                    timestamp: t,
                    payload: RawPayload::Message,
                });
            }

            // Information-passing plant.
            let rate = plan
                .cfg
                .category_rates
                .get(&category)
                .copied()
                .unwrap_or(cfg.p_plant);
            if rate > 0.0 {
                let friend_list = friends.get(&buyer).unwrap_or(&empty).clone();
                for b2 in friend_list {
                    if !plan.rng.random_bool(rate) {
                        continue;
                    }
                    let t2 = t1 + plan.rng.random_range(600..SECONDS_PER_DAY);
                    let t3 = t2 + plan.rng.random_range(600..2 * SECONDS_PER_DAY);
                    if t3 > end {
                        continue;
                    }
                    events.push(RawEvent {
                        src: buyer,
                        dst: b2,
                        timestamp: t2,
                        payload: RawPayload::Message,
                    });
                    events.push(RawEvent {
                        src: b2,
                        dst: seller,
                        timestamp: t3,
                        payload: RawPayload::Trade {
                            product_id: product.clone(),
                            category_id: category,
                            price,
                            quantity: 1,
                        },
                    });
                    planted_triples += 1;
                    for _ in 0..cfg.burst_messages {
                        let t = plan.rng.random_range(t1..=t3);
                        let (src, dst) = if plan.rng.random_bool(0.5) {
                            (buyer, b2)
                        } else {
                            (b2, buyer)
                        };
                        events.push(RawEvent {
                            src,
                            dst,
                            timestamp: t,
                            payload: RawPayload::Message,
                        });
                    }
                }
            }
        }

        // Occasional buyer-to-buyer purchases.
        let n_bb = poisson(&mut plan.rng, cfg.buyer_buyer_trade_rate);
        for _ in 0..n_bb {
            let mut other = plan.rng.random_range(1..=cfg.n_buyers);
            while other == buyer {
                other = plan.rng.random_range(1..=cfg.n_buyers);
            }
            let category = plan.rng.random_range(0..cfg.n_categories);
            events.push(RawEvent {
                src: buyer,
                dst: other,
                timestamp: plan.uniform_time(),
                payload: RawPayload::Trade {
                    product_id: format!("bb-{category}"),
                    category_id: category,
                    price: plan.rng.random_range(1.0..50.0),
                    quantity: 1,
                },
            });
        }
    }

    // Seller ratings centered on the planted zero crossing.
    let center = cfg.trust_zero_crossing().unwrap_or(97.0);
    let ratings: Vec<RatingRow> = (0..cfg.n_sellers)
        .map(|j| RatingRow {
            seller: plan.seller_ids[j as usize],
            rating_percent: (center + cfg.rating_spread * std_normal(&mut plan.rng))
                .clamp(80.0, 100.0),
        })
        .collect();
    let rating_of: BTreeMap<u64, f64> = ratings
        .iter()
        .map(|r| (r.seller, r.rating_percent))
        .collect();

    // Trust-planted product clusters: (cluster id, category, members as
    // (seller, price)).
    type ClusterPlan = (String, u32, Vec<(u64, f64)>);
    let mut listings: Vec<ListingRow> = Vec::new();
    let mut cluster_sellers: Vec<ClusterPlan> = Vec::new();
    for ci in 0..cfg.n_clusters {
        let cluster_id = format!("c{ci:05}");
        let category = plan.rng.random_range(0..cfg.n_categories);
        let base: f64 = (plan.rng.random_range(0.0f64..1.0) * (200.0f64.ln() - 5.0f64.ln())
            + 5.0f64.ln())
        .exp();
        let k = plan
            .rng
            .random_range(2..=cfg.listings_per_cluster.max(2))
            .min(cfg.n_sellers as u32) as usize;
        let mut chosen: Vec<usize> = Vec::new();
        let mut guard = 0;
        while chosen.len() < k && guard < 50 * k {
            guard += 1;
            let s = plan.rng.random_range(0..cfg.n_sellers as usize);
            if !chosen.contains(&s) {
                chosen.push(s);
            }
        }
        let mut members = Vec::new();
        for (li, &sidx) in chosen.iter().enumerate() {
            let seller = plan.seller_ids[sidx];
            let r = rating_of[&seller];
            let deviation = cfg.trust_a * (r / 100.0).powf(cfg.trust_b)
                + cfg.trust_c
                + cfg.trust_noise * std_normal(&mut plan.rng);
            let price = (base * (1.0 + deviation / 100.0)).max(0.01);
            listings.push(ListingRow {
                cluster_id: cluster_id.clone(),
                seller,
                item_id: format!("{cluster_id}-i{li}"),
                price,
            });
            members.push((seller, price));
        }
        cluster_sellers.push((cluster_id, category, members));
    }

    // Choice decisions drawn from exp(w . raw features) on the graph built
    // so far; the chosen purchases are appended to the event stream.
    let mut choice_rows: Vec<ChoiceRow> = Vec::new();
    if cfg.n_choice_decisions > 0 && !cluster_sellers.is_empty() {
        let mut seller_sales: BTreeMap<u64, u64> = BTreeMap::new();
        for ev in &events {
            if matches!(ev.payload, RawPayload::Trade { .. }) {
                *seller_sales.entry(ev.dst).or_insert(0) += 1;
            }
        }
        let mut listing_meta: BTreeMap<(String, u64), (u64, bool)> = BTreeMap::new();
        for (cluster_id, _, members) in &cluster_sellers {
            for &(seller, _) in members {
                listing_meta.insert(
                    (cluster_id.clone(), seller),
                    (poisson(&mut plan.rng, 10.0), plan.rng.random_bool(0.3)),
                );
            }
        }

        // Browsing messages strictly before each decision's snapshot cutoff.
        struct PendingDecision {
            cluster_idx: usize,
            buyer: u64,
            date: i64,
        }
        let mut pending: Vec<PendingDecision> = Vec::new();
        let mut used: HashSet<(usize, u64, i64)> = HashSet::new();
        let mut guard = 0;
        while pending.len() < cfg.n_choice_decisions as usize
            && guard < 50 * cfg.n_choice_decisions as usize
        {
            guard += 1;
            let cluster_idx = plan.rng.random_range(0..cluster_sellers.len());
            let buyer = plan.rng.random_range(1..=cfg.n_buyers);
            let day = plan.rng.random_range(2..cfg.window_days);
            let date = day * SECONDS_PER_DAY + SECONDS_PER_DAY / 2;
            if !used.insert((cluster_idx, buyer, date)) {
                continue;
            }
            for &(seller, _) in &cluster_sellers[cluster_idx].2 {
                let n = poisson(&mut plan.rng, cfg.browse_rate);
                for _ in 0..n {
                    let t = plan.rng.random_range(0..date - SECONDS_PER_DAY);
                    let (src, dst) = if plan.rng.random_bool(0.7) {
                        (buyer, seller)
                    } else {
                        (seller, buyer)
                    };
                    events.push(RawEvent {
                        src,
                        dst,
                        timestamp: t,
                        payload: RawPayload::Message,
                    });
                }
            }
            pending.push(PendingDecision {
                cluster_idx,
                buyer,
                date,
            });
        }

        let pre_graph = TemporalMultigraph::build(events.clone(), contacts.clone(), (0, end))?;
        let mut extractor = FeatureExtractor::new(&pre_graph);
        for p in &pending {
            let (cluster_id, category, members) = &cluster_sellers[p.cluster_idx];
            let candidates: Vec<crate::choice::CandidateMeta> = members
                .iter()
                .map(|&(seller, price)| {
                    let (inventory, insurance) = listing_meta[&(cluster_id.clone(), seller)];
                    crate::choice::CandidateMeta {
                        seller,
                        price,
                        rating: rating_of[&seller],
                        historical_sold: seller_sales.get(&seller).copied().unwrap_or(0),
                        inventory_sold: inventory,
                        insurance,
                    }
                })
                .collect();
            let decision = crate::choice::DecisionInstance {
                cluster_id: cluster_id.clone(),
                buyer: p.buyer,
                purchase_date: p.date,
                candidates: candidates.clone(),
                true_sellers: vec![0],
                category: Some(*category),
            };
            let rows = extractor.features(&decision);
            let scores: Vec<f64> = rows
                .iter()
                .map(|x| {
                    x.iter()
                        .zip(cfg.choice_weights.iter())
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                })
                .collect();
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            let draw: f64 = plan.rng.random_range(0.0..1.0) * total;
            let mut acc = 0.0;
            let mut chosen = 0usize;
            for (i, e) in exps.iter().enumerate() {
                acc += e;
                if draw <= acc {
                    chosen = i;
                    break;
                }
            }
            let cand = &candidates[chosen];
            choice_rows.push(ChoiceRow {
                cluster_id: cluster_id.clone(),
                buyer: p.buyer,
                seller: cand.seller,
                purchase_date: p.date,
                price: cand.price,
                rating_percent: cand.rating,
                historical_sold: cand.historical_sold,
                inventory_sold: cand.inventory_sold,
                insurance: cand.insurance,
            });
            events.push(RawEvent {
                src: p.buyer,
                dst: cand.seller,
                timestamp: p.date,
                payload: RawPayload::Trade {
                    product_id: cluster_id.clone(),
                    category_id: *category,
                    price: cand.price,
                    quantity: 1,
                },
            });
        }
    }

    let trades = events
        .iter()
        .filter(|e| matches!(e.payload, RawPayload::Trade { .. }))
        .count() as u64;
    let truth = TruthRecord {
        seed: cfg.seed,
        window_days: cfg.window_days,
        n_buyers: cfg.n_buyers,
        n_sellers: cfg.n_sellers,
        seller_popularity_exponent: cfg.seller_popularity_exponent,
        p_plant: cfg.p_plant,
        category_rates: cfg.category_rates.clone(),
        burst_messages: cfg.burst_messages,
        trust_a: cfg.trust_a,
        trust_b: cfg.trust_b,
        trust_c: cfg.trust_c,
        trust_noise: cfg.trust_noise,
        trust_zero_crossing: cfg.trust_zero_crossing(),
        choice_weights: cfg.choice_weights.to_vec(),
        counts: TruthCounts {
            events: events.len() as u64,
            trades,
            messages: events.len() as u64 - trades,
            contacts: contacts.len() as u64,
            listings: listings.len() as u64,
            clusters: cfg.n_clusters as u64,
            choice_rows: choice_rows.len() as u64,
            planted_triples,
        },
    };

    Ok(Generated {
        window: (0, end),
        events,
        contacts,
        listings,
        ratings,
        choice_rows,
        truth,
    })
}

/// Convenience wrapper used by tests that want analysis-ready decisions.
pub fn decisions_from(gen: &Generated) -> Vec<crate::choice::BuyerSellerCluster> {
    let categories: std::collections::HashMap<String, u32> = gen
        .events
        .iter()
        .filter_map(|e| match &e.payload {
            RawPayload::Trade {
                product_id,
                category_id,
                ..
            } if product_id.starts_with('c') => Some((product_id.clone(), *category_id)),
            _ => None,
        })
        .collect();
    build_decisions(&gen.choice_rows, Some(&categories))
}
