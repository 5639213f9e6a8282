//! Directed configuration census over the trade/message layers.
//!
//! A wedge is an ordered node triple (U, X, V): an aggregated edge between U
//! and X forms at time t1 (its first event), then an edge between V and X at
//! t2 > t1. The kind and direction of the two legs relative to X define 16
//! configurations. An instance is closed when any trade/message event occurs
//! between U and V at t3 > t2; the earliest such event fixes the closing-edge
//! type. Closing-type counts are compared against a per-node generative
//! baseline via signed z-style surprise statistics.
//!
//! Enumeration is split into two passes so hub nodes stay cheap: a per-middle
//! time sweep counts instances in O(deg log deg), and a per-connected-pair
//! pass finds closures without touching wedges that cannot close. Both passes
//! accumulate integers only, so parallel runs merge exactly and results are
//! identical for any thread count.

use rayon::prelude::*;

use crate::graph::{EdgeId, EventKind, NodeId, TemporalMultigraph};

/// One of the four leg shapes between an outer node and the middle node X.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Leg {
    /// Trade from the outer node to X (X sells).
    TradeToX,
    /// Trade from X to the outer node (X buys).
    TradeFromX,
    /// Message from the outer node to X.
    MsgToX,
    /// Message from X to the outer node.
    MsgFromX,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::TradeToX, Leg::TradeFromX, Leg::MsgToX, Leg::MsgFromX];

    #[inline]
    pub fn code(self) -> u8 {
        match self {
            Leg::TradeToX => 0,
            Leg::TradeFromX => 1,
            Leg::MsgToX => 2,
            Leg::MsgFromX => 3,
        }
    }

    pub fn from_code(code: u8) -> Leg {
        Self::ALL[code as usize]
    }

    pub fn label(self) -> &'static str {
        match self {
            Leg::TradeToX => "trade_to_x",
            Leg::TradeFromX => "trade_from_x",
            Leg::MsgToX => "msg_to_x",
            Leg::MsgFromX => "msg_from_x",
        }
    }

    #[inline]
    fn of(kind: EventKind, from_outer: bool) -> Leg {
        match (kind, from_outer) {
            (EventKind::Trade, true) => Leg::TradeToX,
            (EventKind::Trade, false) => Leg::TradeFromX,
            (EventKind::Message, true) => Leg::MsgToX,
            (EventKind::Message, false) => Leg::MsgFromX,
        }
    }
}

/// One of the 16 directed configuration sets, encoded as
/// `first_leg.code() * 4 + second_leg.code()`.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ConfigId(pub u8);

impl ConfigId {
    pub fn new(first: Leg, second: Leg) -> ConfigId {
        ConfigId(first.code() * 4 + second.code())
    }

    pub fn all() -> impl Iterator<Item = ConfigId> {
        (0u8..16).map(ConfigId)
    }

    pub fn first_leg(self) -> Leg {
        Leg::from_code(self.0 / 4)
    }

    pub fn second_leg(self) -> Leg {
        Leg::from_code(self.0 % 4)
    }
}

/// Hypothesized buyer/seller role of the middle node.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum XRole {
    Buyer,
    Seller,
    Ambiguous,
}

impl XRole {
    pub fn label(self) -> &'static str {
        match self {
            XRole::Buyer => "buyer",
            XRole::Seller => "seller",
            XRole::Ambiguous => "ambiguous",
        }
    }
}

/// Role of X within a configuration: a trade edge's source is the buyer and
/// its destination the seller, so X buys on a `TradeFromX` leg and sells on a
/// `TradeToX` leg.
pub fn role_of_x(config: ConfigId) -> XRole {
    let legs = [config.first_leg(), config.second_leg()];
    let buys = legs.contains(&Leg::TradeFromX);
    let sells = legs.contains(&Leg::TradeToX);
    match (buys, sells) {
        (true, false) => XRole::Buyer,
        (false, true) => XRole::Seller,
        _ => XRole::Ambiguous,
    }
}

/// Type of the triad-closing edge; `o` denotes direction U -> V, `i` the
/// direction V -> U.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum ClosingEdgeType {
    TradeOut,
    TradeIn,
    MsgOut,
    MsgIn,
}

impl ClosingEdgeType {
    pub fn is_trade(self) -> bool {
        matches!(self, ClosingEdgeType::TradeOut | ClosingEdgeType::TradeIn)
    }

    /// True for the U -> V direction.
    pub fn is_out(self) -> bool {
        matches!(self, ClosingEdgeType::TradeOut | ClosingEdgeType::MsgOut)
    }
}

/// One wedge occurrence.
#[derive(Copy, Clone, Debug)]
pub struct WedgeInstance {
    pub u: NodeId,
    pub x: NodeId,
    pub v: NodeId,
    pub t1: i64,
    pub t2: i64,
}

/// A closed wedge with its closing edge, reported by the detailed census.
#[derive(Copy, Clone, Debug)]
pub struct ClosureRecord {
    pub config: ConfigId,
    pub wedge: WedgeInstance,
    pub closing: ClosingEdgeType,
    pub t3: i64,
}

/// Per-node probability that a generated out-edge is a trade, at aggregated
/// edge level; `None` for nodes with no out-edges.
#[derive(Copy, Clone, Debug)]
pub struct GenerativeBaseline {
    pub node: NodeId,
    pub p_t: Option<f64>,
}

pub fn generative_baseline(g: &TemporalMultigraph, node: NodeId) -> GenerativeBaseline {
    let trades = g.out_edges(node, EventKind::Trade).len();
    let msgs = g.out_edges(node, EventKind::Message).len();
    let p_t = if trades + msgs == 0 {
        None
    } else {
        Some(trades as f64 / (trades + msgs) as f64)
    };
    GenerativeBaseline { node, p_t }
}

/// Baselines for every node.
pub fn generative_baselines(g: &TemporalMultigraph) -> Vec<Option<f64>> {
    (0..g.num_nodes() as u32)
        .map(|v| generative_baseline(g, NodeId(v)).p_t)
        .collect()
}

/// Surprise: signed standard deviations between the observed closing-trade
/// count and its Bernoulli expectation. With zero variance the surprise is 0
/// when observed equals expected and undefined (`None`) otherwise.
pub fn surprise(observed_trades: u64, sum_p: f64, sum_var: f64) -> Option<f64> {
    if sum_var > 0.0 {
        Some((observed_trades as f64 - sum_p) / sum_var.sqrt())
    } else if (observed_trades as f64 - sum_p).abs() < 1e-9 {
        Some(0.0)
    } else {
        None
    }
}

/// One row of the 16-way census.
#[derive(Clone, Debug)]
pub struct CensusRow {
    pub config: ConfigId,
    pub instances: u64,
    pub unique_x: u64,
    pub closures: u64,
    pub closed_by_trade: u64,
    /// 100 x closure probability; 0 when there are no instances.
    pub p_close_x100: f64,
    pub p_trade_given_close: f64,
    pub p_msg_given_close: f64,
    pub s_t_o: Option<f64>,
    pub s_t_i: Option<f64>,
    pub x_role: XRole,
}

/// Census result; `closures` is populated only by the detailed entry point.
pub struct CensusReport {
    pub rows: Vec<CensusRow>,
    pub closures: Vec<ClosureRecord>,
}

const N_CONFIG: usize = 16;

#[derive(Clone)]
struct SweepAcc {
    instances: [i64; N_CONFIG],
    unique_x: [u64; N_CONFIG],
}

impl SweepAcc {
    fn zero() -> Self {
        SweepAcc {
            instances: [0; N_CONFIG],
            unique_x: [0; N_CONFIG],
        }
    }

    fn merge(mut self, other: SweepAcc) -> Self {
        for c in 0..N_CONFIG {
            self.instances[c] += other.instances[c];
            self.unique_x[c] += other.unique_x[c];
        }
        self
    }
}

struct ClosureAcc {
    closures: [u64; N_CONFIG],
    closed_by_trade: [u64; N_CONFIG],
    /// Observed closing trades per (config, direction o=0/i=1).
    obs_trade: [[u64; 2]; N_CONFIG],
    /// Count of closures per (config, direction, creator node), flattened as
    /// `(config * 2 + dir) * n + node`.
    creator_counts: Vec<u32>,
}

impl ClosureAcc {
    fn zero(n: usize) -> Self {
        ClosureAcc {
            closures: [0; N_CONFIG],
            closed_by_trade: [0; N_CONFIG],
            obs_trade: [[0; 2]; N_CONFIG],
            creator_counts: vec![0; N_CONFIG * 2 * n],
        }
    }

    fn merge(mut self, other: ClosureAcc) -> Self {
        for c in 0..N_CONFIG {
            self.closures[c] += other.closures[c];
            self.closed_by_trade[c] += other.closed_by_trade[c];
            self.obs_trade[c][0] += other.obs_trade[c][0];
            self.obs_trade[c][1] += other.obs_trade[c][1];
        }
        for (a, b) in self.creator_counts.iter_mut().zip(other.creator_counts) {
            *a += b;
        }
        self
    }
}

/// Incident trade/message aggregated edges per node, both directions, sorted
/// by neighbor. Entries are `(neighbor, edge id)`.
struct UnionAdjacency {
    offsets: Vec<u32>,
    entries: Vec<(u32, u32)>,
}

impl UnionAdjacency {
    fn build(g: &TemporalMultigraph) -> Self {
        let n = g.num_nodes();
        let mut items: Vec<(u32, u32, u32)> = Vec::with_capacity(g.edges().len() * 2);
        for (i, e) in g.edges().iter().enumerate() {
            items.push((e.src.0, e.dst.0, i as u32));
            items.push((e.dst.0, e.src.0, i as u32));
        }
        items.sort_unstable();
        let mut offsets = vec![0u32; n + 1];
        for &(node, _, _) in &items {
            offsets[node as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let entries = items.into_iter().map(|(_, nbr, e)| (nbr, e)).collect();
        UnionAdjacency { offsets, entries }
    }

    #[inline]
    fn row(&self, node: u32) -> &[(u32, u32)] {
        &self.entries
            [self.offsets[node as usize] as usize..self.offsets[node as usize + 1] as usize]
    }
}

/// Full census: 16 rows in ConfigId order.
pub fn config_census(g: &TemporalMultigraph) -> Vec<CensusRow> {
    run_census(g, false).rows
}

/// Census plus the individual closure records (direction, creator, timing),
/// for calibration studies. Runs the closure pass sequentially.
pub fn config_census_detailed(g: &TemporalMultigraph) -> CensusReport {
    run_census(g, true)
}

fn run_census(g: &TemporalMultigraph, detailed: bool) -> CensusReport {
    let n = g.num_nodes();

    // Pass 1: instance counts and unique middles, partitioned by middle node.
    let sweep = (0..n as u32)
        .into_par_iter()
        .fold(SweepAcc::zero, |mut acc, x| {
            sweep_node(g, NodeId(x), &mut acc);
            acc
        })
        .reduce(SweepAcc::zero, SweepAcc::merge);

    // Pass 2: closures, partitioned by connected pair.
    let union = UnionAdjacency::build(g);
    let mut pairs: Vec<(u32, u32)> = g
        .edges()
        .iter()
        .map(|e| (e.src.0.min(e.dst.0), e.src.0.max(e.dst.0)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();

    let mut records = Vec::new();
    let closure = if detailed {
        let mut acc = ClosureAcc::zero(n);
        for &pair in &pairs {
            close_pair(g, &union, pair, &mut acc, Some(&mut records));
        }
        acc
    } else {
        // Few large chunks: each carries a dense creator-count matrix, so
        // live accumulators stay bounded.
        let chunk = (pairs.len() / (rayon::current_num_threads() * 2).max(1)).max(256);
        pairs
            .par_chunks(chunk)
            .map(|chunk| {
                let mut acc = ClosureAcc::zero(n);
                for &pair in chunk {
                    close_pair(g, &union, pair, &mut acc, None);
                }
                acc
            })
            .reduce(|| ClosureAcc::zero(n), ClosureAcc::merge)
    };

    // Deterministic finalization: fixed node order for the f64 sums.
    let baselines = generative_baselines(g);
    let mut rows = Vec::with_capacity(N_CONFIG);
    for c in 0..N_CONFIG {
        let instances = sweep.instances[c].max(0) as u64;
        debug_assert!(sweep.instances[c] >= 0);
        let closures = closure.closures[c];
        debug_assert!(closures <= instances);
        let mut s = [None, None];
        for (dir, slot) in s.iter_mut().enumerate() {
            let mut sum_p = 0.0;
            let mut sum_var = 0.0;
            let counts = &closure.creator_counts[(c * 2 + dir) * n..(c * 2 + dir + 1) * n];
            for (cnt, baseline) in counts.iter().zip(baselines.iter()) {
                if *cnt > 0 {
                    // The creator of a closing edge necessarily has at least
                    // that out-edge, so its baseline is always defined.
                    if let Some(p) = baseline {
                        sum_p += *cnt as f64 * p;
                        sum_var += *cnt as f64 * p * (1.0 - p);
                    } else {
                        debug_assert!(false, "closing-edge creator without out-edges");
                    }
                }
            }
            *slot = surprise(closure.obs_trade[c][dir], sum_p, sum_var);
        }
        rows.push(CensusRow {
            config: ConfigId(c as u8),
            instances,
            unique_x: sweep.unique_x[c],
            closures,
            closed_by_trade: closure.closed_by_trade[c],
            p_close_x100: if instances == 0 {
                0.0
            } else {
                100.0 * closures as f64 / instances as f64
            },
            p_trade_given_close: if closures == 0 {
                0.0
            } else {
                closure.closed_by_trade[c] as f64 / closures as f64
            },
            p_msg_given_close: if closures == 0 {
                0.0
            } else {
                (closures - closure.closed_by_trade[c]) as f64 / closures as f64
            },
            s_t_o: s[0],
            s_t_i: s[1],
            x_role: role_of_x(ConfigId(c as u8)),
        });
    }
    CensusReport {
        rows,
        closures: records,
    }
}

/// Counts wedge instances with middle `x` via a time sweep over incident
/// edges; pairs sharing the outer endpoint are subtracted exactly, and ties
/// t1 == t2 never count.
fn sweep_node(g: &TemporalMultigraph, x: NodeId, acc: &mut SweepAcc) {
    // (first_time, leg code, neighbor)
    let mut legs: Vec<(i64, u8, u32)> = Vec::new();
    for (kind, from_outer, row) in [
        (EventKind::Trade, false, g.out_edges(x, EventKind::Trade)),
        (EventKind::Trade, true, g.in_edges(x, EventKind::Trade)),
        (
            EventKind::Message,
            false,
            g.out_edges(x, EventKind::Message),
        ),
        (EventKind::Message, true, g.in_edges(x, EventKind::Message)),
    ] {
        let code = Leg::of(kind, from_outer).code();
        for &(nbr, eid) in row {
            legs.push((g.edge(EdgeId(eid)).first_time, code, nbr));
        }
    }
    if legs.len() < 2 {
        return;
    }

    let mut counts = [0i64; N_CONFIG];
    legs.sort_unstable();
    let mut seen = [0i64; 4];
    let mut i = 0;
    while i < legs.len() {
        let mut j = i;
        while j < legs.len() && legs[j].0 == legs[i].0 {
            j += 1;
        }
        for &(_, code, _) in &legs[i..j] {
            for first in 0..4u8 {
                counts[(first * 4 + code) as usize] += seen[first as usize];
            }
        }
        for &(_, code, _) in &legs[i..j] {
            seen[code as usize] += 1;
        }
        i = j;
    }

    // Remove pairs whose outer endpoints coincide (u must differ from v).
    legs.sort_unstable_by_key(|&(t, code, nbr)| (nbr, t, code));
    let mut i = 0;
    while i < legs.len() {
        let mut j = i;
        while j < legs.len() && legs[j].2 == legs[i].2 {
            j += 1;
        }
        let group = &legs[i..j];
        for (a, &(t1, c1, _)) in group.iter().enumerate() {
            for &(t2, c2, _) in &group[a + 1..] {
                if t2 > t1 {
                    counts[(c1 * 4 + c2) as usize] -= 1;
                } else if t1 > t2 {
                    counts[(c2 * 4 + c1) as usize] -= 1;
                }
            }
        }
        i = j;
    }

    for (c, &count) in counts.iter().enumerate() {
        debug_assert!(count >= 0);
        if count > 0 {
            acc.instances[c] += count;
            acc.unique_x[c] += 1;
        }
    }
}

/// Processes one connected unordered pair {a, b}: enumerates wedges whose
/// outer endpoints are a and b through the common neighborhood, and resolves
/// closure against the merged a-b event list.
fn close_pair(
    g: &TemporalMultigraph,
    union: &UnionAdjacency,
    (a, b): (u32, u32),
    acc: &mut ClosureAcc,
    mut records: Option<&mut Vec<ClosureRecord>>,
) {
    // Merged events between a and b: (t, trade-first rank, src). The sort
    // order makes the "earliest closing event" deterministic under ties:
    // earlier time, then trade before message, then lower source id.
    let mut events: Vec<(i64, u8, u32)> = Vec::new();
    for kind in [EventKind::Trade, EventKind::Message] {
        let rank = if kind == EventKind::Trade { 0u8 } else { 1u8 };
        for (src, dst) in [(a, b), (b, a)] {
            if let Some(e) = g.find_edge(kind, NodeId(src), NodeId(dst)) {
                for ev in g.events_of(e) {
                    events.push((ev.timestamp, rank, src));
                }
            }
        }
    }
    if events.is_empty() {
        return;
    }
    events.sort_unstable();

    let n = g.num_nodes();
    let row_a = union.row(a);
    let row_b = union.row(b);
    let (mut i, mut j) = (0usize, 0usize);
    while i < row_a.len() && j < row_b.len() {
        let xa = row_a[i].0;
        let xb = row_b[j].0;
        if xa < xb {
            i += 1;
            continue;
        }
        if xb < xa {
            j += 1;
            continue;
        }
        let x = xa;
        let mut ia = i;
        while ia < row_a.len() && row_a[ia].0 == x {
            ia += 1;
        }
        let mut jb = j;
        while jb < row_b.len() && row_b[jb].0 == x {
            jb += 1;
        }
        if x != a && x != b {
            for &(_, ea) in &row_a[i..ia] {
                for &(_, eb) in &row_b[j..jb] {
                    let edge_a = g.edge(EdgeId(ea));
                    let edge_b = g.edge(EdgeId(eb));
                    let (ta, tb) = (edge_a.first_time, edge_b.first_time);
                    // Leg codes relative to the wedge's outer nodes.
                    let leg_a = Leg::of(edge_a.kind, edge_a.src.0 == a).code();
                    let leg_b = Leg::of(edge_b.kind, edge_b.src.0 == b).code();
                    let (u, v, config, t1, t2) = if ta < tb {
                        (a, b, ConfigId(leg_a * 4 + leg_b), ta, tb)
                    } else if tb < ta {
                        (b, a, ConfigId(leg_b * 4 + leg_a), tb, ta)
                    } else {
                        continue;
                    };
                    let idx = events.partition_point(|&(t, _, _)| t <= t2);
                    if idx == events.len() {
                        continue;
                    }
                    let (t3, rank, src) = events[idx];
                    let is_trade = rank == 0;
                    let dir_out = src == u;
                    let c = config.0 as usize;
                    acc.closures[c] += 1;
                    if is_trade {
                        acc.closed_by_trade[c] += 1;
                    }
                    let dir = if dir_out { 0 } else { 1 };
                    if is_trade {
                        acc.obs_trade[c][dir] += 1;
                    }
                    acc.creator_counts[(c * 2 + dir) * n + src as usize] += 1;
                    if let Some(recs) = records.as_deref_mut() {
                        let closing = match (is_trade, dir_out) {
                            (true, true) => ClosingEdgeType::TradeOut,
                            (true, false) => ClosingEdgeType::TradeIn,
                            (false, true) => ClosingEdgeType::MsgOut,
                            (false, false) => ClosingEdgeType::MsgIn,
                        };
                        recs.push(ClosureRecord {
                            config,
                            wedge: WedgeInstance {
                                u: NodeId(u),
                                x: NodeId(x),
                                v: NodeId(v),
                                t1,
                                t2,
                            },
                            closing,
                            t3,
                        });
                    }
                }
            }
        }
        i = ia;
        j = jb;
    }
}
