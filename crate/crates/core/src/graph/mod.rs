//! Three-layer temporal multigraph: directed trade edges, directed message
//! edges, and undirected contact edges over a shared node set.
//!
//! Multiple events between the same ordered pair aggregate into a single
//! directed edge carrying a time-sorted event list, so a node pair holds at
//! most 5 aggregated edges (2 trades + 2 messages + 1 contact). The graph is
//! immutable after construction; temporal queries go through [`GraphView`]
//! snapshots.

mod view;

pub use view::{GraphView, NetworkStats};

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Day index of `t` relative to the window start.
pub fn day_index(window_start: i64, t: i64) -> i64 {
    (t - window_start).div_euclid(SECONDS_PER_DAY)
}

/// Dense internal node identifier, stable across all three layers.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Index of an aggregated trade/message edge within the graph.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EdgeId(pub u32);

#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum EventKind {
    Trade,
    Message,
}

/// One of the three edge-type networks.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub enum Layer {
    Trade,
    Message,
    Contact,
}

impl Layer {
    pub fn name(self) -> &'static str {
        match self {
            Layer::Trade => "trade",
            Layer::Message => "message",
            Layer::Contact => "contact",
        }
    }
}

/// Trade payload; the edge source is the buyer, the destination the seller.
#[derive(Clone, Debug, PartialEq)]
pub struct TradeInfo {
    /// Interned product identifier; resolve with [`TemporalMultigraph::product_name`].
    pub product: u32,
    pub category: u32,
    pub price: f64,
    pub quantity: u32,
}

/// One timestamped trade or message occurrence.
#[derive(Clone, Debug)]
pub struct EdgeEvent {
    pub kind: EventKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub timestamp: i64,
    /// Present exactly when `kind == Trade`.
    pub trade: Option<TradeInfo>,
}

/// A directed trade/message edge aggregating all events between one ordered
/// node pair.
#[derive(Clone, Debug)]
pub struct AggregatedEdge {
    pub kind: EventKind,
    pub src: NodeId,
    pub dst: NodeId,
    /// Timestamp of the earliest event on this edge.
    pub first_time: i64,
    events: Range<u32>,
}

/// Pre-remap input event carrying external (file-level) node ids.
#[derive(Clone, Debug)]
pub struct RawEvent {
    pub src: u64,
    pub dst: u64,
    pub timestamp: i64,
    pub payload: RawPayload,
}

#[derive(Clone, Debug)]
pub enum RawPayload {
    Message,
    Trade {
        product_id: String,
        category_id: u32,
        price: f64,
        quantity: u32,
    },
}

/// Compressed adjacency: entries per node are `(neighbor, edge index)` pairs
/// sorted by neighbor id.
#[derive(Clone, Debug, Default)]
struct Csr {
    offsets: Vec<u32>,
    entries: Vec<(u32, u32)>,
}

impl Csr {
    fn from_sorted(n: usize, items: Vec<(u32, u32, u32)>) -> Csr {
        // items: (node, neighbor, edge index), sorted by (node, neighbor).
        let mut offsets = vec![0u32; n + 1];
        for &(node, _, _) in &items {
            offsets[node as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let entries = items.into_iter().map(|(_, nbr, e)| (nbr, e)).collect();
        Csr { offsets, entries }
    }

    #[inline]
    fn row(&self, node: u32) -> &[(u32, u32)] {
        let lo = self.offsets[node as usize] as usize;
        let hi = self.offsets[node as usize + 1] as usize;
        &self.entries[lo..hi]
    }
}

/// Immutable three-layer temporal multigraph.
#[derive(Debug)]
pub struct TemporalMultigraph {
    window: (i64, i64),
    /// internal id -> external id, ascending.
    external_ids: Vec<u64>,
    /// Product intern table for trade events.
    products: Vec<String>,
    /// All trade/message events, grouped by aggregated edge and time-sorted
    /// within each group.
    events: Vec<EdgeEvent>,
    /// Aggregated edges sorted by (kind, src, dst).
    edges: Vec<AggregatedEdge>,
    trade_out: Csr,
    trade_in: Csr,
    msg_out: Csr,
    msg_in: Csr,
    contact: Csr,
    /// Canonical (min, max) contact pairs, sorted.
    contact_pairs: Vec<(NodeId, NodeId)>,
}

impl TemporalMultigraph {
    /// Builds a graph from raw events and contact pairs, remapping external
    /// ids to a dense range (ascending external-id order).
    pub fn build(
        events: Vec<RawEvent>,
        contacts: Vec<(u64, u64)>,
        window: (i64, i64),
    ) -> Result<Self> {
        if window.0 > window.1 {
            return Err(Error::invalid(format!(
                "window start {} after end {}",
                window.0, window.1
            )));
        }
        for ev in &events {
            if ev.src == ev.dst {
                return Err(Error::invalid(format!(
                    "self-loop event on node {}",
                    ev.src
                )));
            }
            if ev.timestamp < window.0 || ev.timestamp > window.1 {
                return Err(Error::invalid(format!(
                    "event timestamp {} outside window [{}, {}]",
                    ev.timestamp, window.0, window.1
                )));
            }
            if let RawPayload::Trade {
                price, quantity, ..
            } = &ev.payload
            {
                if !price.is_finite() || *price <= 0.0 {
                    return Err(Error::invalid(format!("trade price {price} must be > 0")));
                }
                if *quantity < 1 {
                    return Err(Error::invalid("trade quantity must be >= 1".to_string()));
                }
            }
        }
        for &(u, v) in &contacts {
            if u == v {
                return Err(Error::invalid(format!("self-loop contact on node {u}")));
            }
        }

        // Dense remap in ascending external-id order.
        let mut ids: Vec<u64> = events
            .iter()
            .flat_map(|e| [e.src, e.dst])
            .chain(contacts.iter().flat_map(|&(u, v)| [u, v]))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<u64, u32> = ids
            .iter()
            .enumerate()
            .map(|(i, &ext)| (ext, i as u32))
            .collect();

        let mut products: Vec<String> = Vec::new();
        let mut product_index: HashMap<String, u32> = HashMap::new();

        let mut internal: Vec<EdgeEvent> = Vec::with_capacity(events.len());
        for ev in events {
            let src = NodeId(index[&ev.src]);
            let dst = NodeId(index[&ev.dst]);
            let (kind, trade) = match ev.payload {
                RawPayload::Message => (EventKind::Message, None),
                RawPayload::Trade {
                    product_id,
                    category_id,
                    price,
                    quantity,
                } => {
                    let product = *product_index.entry(product_id.clone()).or_insert_with(|| {
                        products.push(product_id);
                        (products.len() - 1) as u32
                    });
                    (
                        EventKind::Trade,
                        Some(TradeInfo {
                            product,
                            category: category_id,
                            price,
                            quantity,
                        }),
                    )
                }
            };
            internal.push(EdgeEvent {
                kind,
                src,
                dst,
                timestamp: ev.timestamp,
                trade,
            });
        }

        let mut pairs: Vec<(NodeId, NodeId)> = contacts
            .into_iter()
            .map(|(u, v)| {
                let a = index[&u].min(index[&v]);
                let b = index[&u].max(index[&v]);
                (NodeId(a), NodeId(b))
            })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();

        Self::from_internal(internal, pairs, ids, products, window)
    }

    /// Assembles the graph from already-remapped events. Events may arrive in
    /// any order; they are sorted into canonical (kind, src, dst, time) order.
    pub(crate) fn from_internal(
        mut events: Vec<EdgeEvent>,
        contact_pairs: Vec<(NodeId, NodeId)>,
        external_ids: Vec<u64>,
        products: Vec<String>,
        window: (i64, i64),
    ) -> Result<Self> {
        let n = external_ids.len();
        assert!(n <= u32::MAX as usize, "node count exceeds u32 range");
        assert!(
            events.len() <= u32::MAX as usize,
            "event count exceeds u32 range"
        );

        // Stable sort keeps equal-timestamp events in input order.
        events.sort_by_key(|e| (e.kind, e.src, e.dst, e.timestamp));

        let mut edges: Vec<AggregatedEdge> = Vec::new();
        let mut start = 0usize;
        while start < events.len() {
            let key = (events[start].kind, events[start].src, events[start].dst);
            let mut end = start + 1;
            while end < events.len() && (events[end].kind, events[end].src, events[end].dst) == key
            {
                end += 1;
            }
            edges.push(AggregatedEdge {
                kind: key.0,
                src: key.1,
                dst: key.2,
                first_time: events[start].timestamp,
                events: start as u32..end as u32,
            });
            start = end;
        }

        let build_dir = |kind: EventKind, by_dst: bool| -> Csr {
            let mut items: Vec<(u32, u32, u32)> = edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.kind == kind)
                .map(|(i, e)| {
                    if by_dst {
                        (e.dst.0, e.src.0, i as u32)
                    } else {
                        (e.src.0, e.dst.0, i as u32)
                    }
                })
                .collect();
            items.sort_unstable();
            Csr::from_sorted(n, items)
        };

        let trade_out = build_dir(EventKind::Trade, false);
        let trade_in = build_dir(EventKind::Trade, true);
        let msg_out = build_dir(EventKind::Message, false);
        let msg_in = build_dir(EventKind::Message, true);

        let mut citems: Vec<(u32, u32, u32)> = Vec::with_capacity(contact_pairs.len() * 2);
        for (i, &(u, v)) in contact_pairs.iter().enumerate() {
            citems.push((u.0, v.0, i as u32));
            citems.push((v.0, u.0, i as u32));
        }
        citems.sort_unstable();
        let contact = Csr::from_sorted(n, citems);

        Ok(TemporalMultigraph {
            window,
            external_ids,
            products,
            events,
            edges,
            trade_out,
            trade_in,
            msg_out,
            msg_in,
            contact,
            contact_pairs,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.external_ids.len()
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn day_of(&self, t: i64) -> i64 {
        day_index(self.window.0, t)
    }

    pub fn edges(&self) -> &[AggregatedEdge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &AggregatedEdge {
        &self.edges[id.0 as usize]
    }

    /// Time-sorted events of one aggregated edge.
    pub fn events_of(&self, id: EdgeId) -> &[EdgeEvent] {
        let e = &self.edges[id.0 as usize];
        &self.events[e.events.start as usize..e.events.end as usize]
    }

    pub fn all_events(&self) -> &[EdgeEvent] {
        &self.events
    }

    pub fn contact_pairs(&self) -> &[(NodeId, NodeId)] {
        &self.contact_pairs
    }

    /// Out-adjacency of `node` in a directed layer: `(neighbor, edge)` sorted
    /// by neighbor.
    pub fn out_edges(&self, node: NodeId, kind: EventKind) -> &[(u32, u32)] {
        match kind {
            EventKind::Trade => self.trade_out.row(node.0),
            EventKind::Message => self.msg_out.row(node.0),
        }
    }

    pub fn in_edges(&self, node: NodeId, kind: EventKind) -> &[(u32, u32)] {
        match kind {
            EventKind::Trade => self.trade_in.row(node.0),
            EventKind::Message => self.msg_in.row(node.0),
        }
    }

    /// Contact adjacency: `(neighbor, pair index)` sorted by neighbor.
    pub fn contact_neighbors(&self, node: NodeId) -> &[(u32, u32)] {
        self.contact.row(node.0)
    }

    pub fn find_edge(&self, kind: EventKind, src: NodeId, dst: NodeId) -> Option<EdgeId> {
        self.edges
            .binary_search_by_key(&(kind, src, dst), |e| (e.kind, e.src, e.dst))
            .ok()
            .map(|i| EdgeId(i as u32))
    }

    pub fn has_contact(&self, u: NodeId, v: NodeId) -> bool {
        let pair = (u.min(v), u.max(v));
        self.contact_pairs.binary_search(&pair).is_ok()
    }

    pub fn external_id(&self, node: NodeId) -> u64 {
        self.external_ids[node.index()]
    }

    pub fn external_ids(&self) -> &[u64] {
        &self.external_ids
    }

    pub fn internal_id(&self, external: u64) -> Option<NodeId> {
        self.external_ids
            .binary_search(&external)
            .ok()
            .map(|i| NodeId(i as u32))
    }

    pub fn product_name(&self, product: u32) -> &str {
        &self.products[product as usize]
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    /// Number of aggregated edges (all layers) between an unordered pair;
    /// bounded by 5 per construction.
    pub fn aggregated_edges_between(&self, a: NodeId, b: NodeId) -> usize {
        let mut count = 0;
        for kind in [EventKind::Trade, EventKind::Message] {
            if self.find_edge(kind, a, b).is_some() {
                count += 1;
            }
            if self.find_edge(kind, b, a).is_some() {
                count += 1;
            }
        }
        if self.has_contact(a, b) {
            count += 1;
        }
        count
    }

    /// Snapshot view exposing only events with `timestamp <= cutoff`.
    pub fn snapshot_at(&self, cutoff: i64) -> Result<GraphView<'_>> {
        if cutoff < self.window.0 || cutoff > self.window.1 {
            return Err(Error::CutoffOutOfWindow {
                cutoff,
                start: self.window.0,
                end: self.window.1,
            });
        }
        Ok(GraphView::new(self, cutoff))
    }

    /// View of the full observation window.
    pub fn full_view(&self) -> GraphView<'_> {
        GraphView::new(self, self.window.1)
    }

    /// View at an arbitrary cutoff, including cutoffs before the window
    /// start (every event invisible, contacts still present). Snapshot-based
    /// feature extraction uses this for day-prior cutoffs that precede the
    /// observation window.
    pub(crate) fn view_unchecked(&self, cutoff: i64) -> GraphView<'_> {
        GraphView::new(self, cutoff)
    }

    /// Copy of the graph keeping only events with `timestamp < before`, on
    /// the identical node universe (contacts and id map untouched). Used by
    /// temporal-hygiene audits.
    pub fn censor_events_from(&self, before: i64) -> TemporalMultigraph {
        let kept: Vec<EdgeEvent> = self
            .events
            .iter()
            .filter(|e| e.timestamp < before)
            .cloned()
            .collect();
        TemporalMultigraph::from_internal(
            kept,
            self.contact_pairs.clone(),
            self.external_ids.clone(),
            self.products.clone(),
            self.window,
        )
        .expect("censoring preserves validity")
    }

    /// Per-node aggregated out/in degree sequences for a directed layer, or
    /// (degree, degree) for the contact layer.
    pub fn degree_sequences(&self, layer: Layer) -> (Vec<u32>, Vec<u32>) {
        let n = self.num_nodes();
        let mut out = vec![0u32; n];
        let mut inn = vec![0u32; n];
        match layer {
            Layer::Trade | Layer::Message => {
                let kind = if layer == Layer::Trade {
                    EventKind::Trade
                } else {
                    EventKind::Message
                };
                for e in self.edges.iter().filter(|e| e.kind == kind) {
                    out[e.src.index()] += 1;
                    inn[e.dst.index()] += 1;
                }
            }
            Layer::Contact => {
                for &(u, v) in &self.contact_pairs {
                    out[u.index()] += 1;
                    out[v.index()] += 1;
                }
                inn = out.clone();
            }
        }
        (out, inn)
    }

    /// Sorted multiset of event timestamps for a directed layer.
    pub fn layer_event_times(&self, kind: EventKind) -> Vec<i64> {
        let mut times: Vec<i64> = self
            .events
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.timestamp)
            .collect();
        times.sort_unstable();
        times
    }
}
