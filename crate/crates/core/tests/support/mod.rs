//! Shared helpers for the integration and acceptance suites: a seeded raw
//! dataset generator and a deliberately naive triple-loop census oracle that
//! never touches the library's adjacency structures.

use std::collections::{BTreeSet, HashMap};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use triad_core::census::CensusRow;
use triad_core::graph::{RawEvent, RawPayload, TemporalMultigraph, SECONDS_PER_DAY};

pub const DAY: i64 = SECONDS_PER_DAY;

#[derive(Clone)]
pub struct RawDataset {
    pub events: Vec<RawEvent>,
    pub contacts: Vec<(u64, u64)>,
    pub window: (i64, i64),
}

impl RawDataset {
    pub fn graph(&self) -> TemporalMultigraph {
        TemporalMultigraph::build(self.events.clone(), self.contacts.clone(), self.window)
            .expect("random dataset is valid")
    }
}

/// Random multigraph over at most `n` nodes with `n_events` trade/message
/// events. Timestamps sit on a quarter-day grid so leg ties and closing-time
/// ties genuinely occur.
pub fn random_dataset(seed: u64, n: u64, n_events: usize) -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let days = 30i64;
    let mut events = Vec::with_capacity(n_events);
    for _ in 0..n_events {
        let src = rng.random_range(0..n);
        let mut dst = rng.random_range(0..n);
        while dst == src {
            dst = rng.random_range(0..n);
        }
        let timestamp = rng.random_range(0..=days * 4) * (DAY / 4);
        let payload = if rng.random_bool(0.5) {
            RawPayload::Trade {
                product_id: format!("p{}", rng.random_range(0..20)),
                category_id: rng.random_range(0..5),
                price: rng.random_range(1.0..200.0),
                quantity: 1,
            }
        } else {
            RawPayload::Message
        };
        events.push(RawEvent {
            src,
            dst,
            timestamp,
            payload,
        });
    }
    let mut contacts = Vec::new();
    for _ in 0..n_events / 4 {
        let u = rng.random_range(0..n);
        let mut v = rng.random_range(0..n);
        while v == u {
            v = rng.random_range(0..n);
        }
        contacts.push((u, v));
    }
    RawDataset {
        events,
        contacts,
        window: (0, days * DAY),
    }
}

/// Census fields the oracle reproduces (everything except surprises).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleRow {
    pub instances: u64,
    pub unique_x: u64,
    pub closures: u64,
    pub closed_by_trade: u64,
}

/// Naive O(n^3 * 16) census over the raw event list. Aggregation happens via
/// plain hash maps; closure resolution mirrors the documented tie rule
/// (earlier time, then trade before message, then lower source id).
pub fn census_oracle(data: &RawDataset) -> [OracleRow; 16] {
    let mut nodes: BTreeSet<u64> = BTreeSet::new();
    // (is_trade, src, dst) -> first event time
    let mut first_time: HashMap<(bool, u64, u64), i64> = HashMap::new();
    // unordered pair -> (t, msg_rank, src) events, sorted
    type PairEvents = HashMap<(u64, u64), Vec<(i64, u8, u64)>>;
    let mut pair_events: PairEvents = HashMap::new();
    for ev in &data.events {
        nodes.insert(ev.src);
        nodes.insert(ev.dst);
        let is_trade = matches!(ev.payload, RawPayload::Trade { .. });
        let slot = first_time
            .entry((is_trade, ev.src, ev.dst))
            .or_insert(i64::MAX);
        *slot = (*slot).min(ev.timestamp);
        let key = (ev.src.min(ev.dst), ev.src.max(ev.dst));
        pair_events
            .entry(key)
            .or_default()
            .push((ev.timestamp, u8::from(!is_trade), ev.src));
    }
    for list in pair_events.values_mut() {
        list.sort_unstable();
    }
    for &(u, v) in &data.contacts {
        nodes.insert(u);
        nodes.insert(v);
    }
    let nodes: Vec<u64> = nodes.into_iter().collect();

    // Leg codes: 0 trade outer->x, 1 trade x->outer, 2 msg outer->x,
    // 3 msg x->outer.
    let leg_time = |code: u8, outer: u64, x: u64| -> Option<i64> {
        let (is_trade, src, dst) = match code {
            0 => (true, outer, x),
            1 => (true, x, outer),
            2 => (false, outer, x),
            _ => (false, x, outer),
        };
        first_time.get(&(is_trade, src, dst)).copied()
    };

    let mut rows: [OracleRow; 16] = Default::default();
    let mut unique_x: [BTreeSet<u64>; 16] = Default::default();
    for &x in &nodes {
        for &u in &nodes {
            if u == x {
                continue;
            }
            for &v in &nodes {
                if v == x || v == u {
                    continue;
                }
                for config in 0u8..16 {
                    let Some(t1) = leg_time(config / 4, u, x) else {
                        continue;
                    };
                    let Some(t2) = leg_time(config % 4, v, x) else {
                        continue;
                    };
                    if t2 <= t1 {
                        continue;
                    }
                    let row = &mut rows[config as usize];
                    row.instances += 1;
                    unique_x[config as usize].insert(x);
                    let key = (u.min(v), u.max(v));
                    if let Some(events) = pair_events.get(&key) {
                        if let Some(&(_, msg_rank, _)) = events.iter().find(|&&(t, _, _)| t > t2) {
                            row.closures += 1;
                            if msg_rank == 0 {
                                row.closed_by_trade += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    for (row, xs) in rows.iter_mut().zip(unique_x) {
        row.unique_x = xs.len() as u64;
    }
    rows
}

/// Compares every non-surprise census field against the oracle.
pub fn assert_census_matches_oracle(rows: &[CensusRow], oracle: &[OracleRow; 16], seed: u64) {
    assert_eq!(rows.len(), 16);
    for (row, expect) in rows.iter().zip(oracle.iter()) {
        let id = row.config;
        assert_eq!(
            row.instances, expect.instances,
            "seed {seed} config {id:?} instances"
        );
        assert_eq!(
            row.unique_x, expect.unique_x,
            "seed {seed} config {id:?} unique_x"
        );
        assert_eq!(
            row.closures, expect.closures,
            "seed {seed} config {id:?} closures"
        );
        assert_eq!(
            row.closed_by_trade, expect.closed_by_trade,
            "seed {seed} config {id:?} closed_by_trade"
        );
        let p_close = if expect.instances == 0 {
            0.0
        } else {
            100.0 * expect.closures as f64 / expect.instances as f64
        };
        assert_eq!(
            row.p_close_x100, p_close,
            "seed {seed} config {id:?} p_close"
        );
        if expect.closures > 0 {
            assert_eq!(
                row.p_trade_given_close,
                expect.closed_by_trade as f64 / expect.closures as f64,
                "seed {seed} config {id:?} p_trade_given_close"
            );
            assert!((row.p_trade_given_close + row.p_msg_given_close - 1.0).abs() < 1e-12);
        }
        // Role re-derivation straight from the leg semantics.
        let buys = id.0 / 4 == 1 || id.0 % 4 == 1;
        let sells = id.0 / 4 == 0 || id.0 % 4 == 0;
        let expect_role = match (buys, sells) {
            (true, false) => "buyer",
            (false, true) => "seller",
            _ => "ambiguous",
        };
        assert_eq!(
            row.x_role.label(),
            expect_role,
            "seed {seed} config {id:?} role"
        );
    }
}
