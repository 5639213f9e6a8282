use super::{EdgeEvent, EdgeId, EventKind, Layer, NodeId, TemporalMultigraph};
use crate::error::{Error, Result};

/// Temporal snapshot of a [`TemporalMultigraph`]: only events with
/// `timestamp <= cutoff` are visible. Contact edges carry no timestamps and
/// are always visible.
#[derive(Copy, Clone)]
pub struct GraphView<'g> {
    g: &'g TemporalMultigraph,
    cutoff: i64,
}

/// Aggregate statistics of one layer viewed as a separate network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkStats {
    pub nodes: u64,
    /// Directed aggregated-edge count for trade/message; undirected pair
    /// count for contact.
    pub edges: u64,
    pub avg_degree: f64,
    pub avg_clustering: f64,
}

impl<'g> GraphView<'g> {
    pub(super) fn new(g: &'g TemporalMultigraph, cutoff: i64) -> Self {
        GraphView { g, cutoff }
    }

    pub fn graph(&self) -> &'g TemporalMultigraph {
        self.g
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    #[inline]
    pub fn edge_visible(&self, edge: EdgeId) -> bool {
        self.g.edge(edge).first_time <= self.cutoff
    }

    /// Visible prefix of an edge's time-sorted event list.
    pub fn visible_events(&self, edge: EdgeId) -> &'g [EdgeEvent] {
        let events = self.g.events_of(edge);
        let end = events.partition_point(|e| e.timestamp <= self.cutoff);
        &events[..end]
    }

    /// Visible out-adjacency `(neighbor, edge)` of a directed layer.
    pub fn visible_out(
        &self,
        node: NodeId,
        kind: EventKind,
    ) -> impl Iterator<Item = (NodeId, EdgeId)> + '_ {
        self.g
            .out_edges(node, kind)
            .iter()
            .filter(move |&&(_, e)| self.edge_visible(EdgeId(e)))
            .map(|&(nbr, e)| (NodeId(nbr), EdgeId(e)))
    }

    pub fn visible_in(
        &self,
        node: NodeId,
        kind: EventKind,
    ) -> impl Iterator<Item = (NodeId, EdgeId)> + '_ {
        self.g
            .in_edges(node, kind)
            .iter()
            .filter(move |&&(_, e)| self.edge_visible(EdgeId(e)))
            .map(|&(nbr, e)| (NodeId(nbr), EdgeId(e)))
    }

    /// Neighbors of `node` on the layer's undirected projection, sorted and
    /// deduplicated.
    pub fn proj_neighbors(&self, layer: Layer, node: NodeId) -> Vec<NodeId> {
        match layer {
            Layer::Contact => self
                .g
                .contact_neighbors(node)
                .iter()
                .map(|&(nbr, _)| NodeId(nbr))
                .collect(),
            Layer::Trade | Layer::Message => {
                let kind = layer_kind(layer);
                let mut nbrs: Vec<NodeId> = self
                    .visible_out(node, kind)
                    .map(|(n, _)| n)
                    .chain(self.visible_in(node, kind).map(|(n, _)| n))
                    .collect();
                nbrs.sort_unstable();
                nbrs.dedup();
                nbrs
            }
        }
    }

    /// True when the undirected projection of `layer` links `u` and `v`.
    pub fn proj_connected(&self, layer: Layer, u: NodeId, v: NodeId) -> bool {
        match layer {
            Layer::Contact => self.g.has_contact(u, v),
            Layer::Trade | Layer::Message => {
                let kind = layer_kind(layer);
                [(u, v), (v, u)].iter().any(|&(a, b)| {
                    self.g
                        .find_edge(kind, a, b)
                        .map(|e| self.edge_visible(e))
                        .unwrap_or(false)
                })
            }
        }
    }

    /// Size of the intersection of the two nodes' projection neighborhoods.
    pub fn mutual_neighbors(&self, layer: Layer, u: NodeId, v: NodeId) -> Result<usize> {
        let n = self.g.num_nodes();
        for node in [u, v] {
            if node.index() >= n {
                return Err(Error::UnknownNode(node.0 as u64));
            }
        }
        if u == v {
            return Err(Error::invalid("mutual_neighbors requires u != v"));
        }
        Ok(self.mutual_neighbor_set(layer, u, v).len())
    }

    /// The intersection itself, sorted.
    pub fn mutual_neighbor_set(&self, layer: Layer, u: NodeId, v: NodeId) -> Vec<NodeId> {
        let a = self.proj_neighbors(layer, u);
        let b = self.proj_neighbors(layer, v);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if a[i] != u && a[i] != v {
                        out.push(a[i]);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }

    /// Local clustering coefficient on the layer's undirected projection;
    /// nodes of projection degree < 2 score 0.
    pub fn clustering_coefficient(&self, layer: Layer, node: NodeId) -> f64 {
        let nbrs = self.proj_neighbors(layer, node);
        let d = nbrs.len();
        if d < 2 {
            return 0.0;
        }
        let mut links = 0u64;
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if self.proj_connected(layer, a, b) {
                    links += 1;
                }
            }
        }
        2.0 * links as f64 / (d as f64 * (d - 1) as f64)
    }

    /// PageRank over the full node set. Directed layers follow edge
    /// direction; each contact edge acts as two directed edges. Dangling mass
    /// is redistributed uniformly. Deterministic; at most `max_iter`
    /// iterations of power iteration until the L1 step delta drops below
    /// `tol`. Scores are normalized to sum to 1.
    pub fn pagerank(&self, layer: Layer, damping: f64, tol: f64, max_iter: usize) -> Vec<f64> {
        let n = self.g.num_nodes();
        if n == 0 {
            return Vec::new();
        }
        let nf = n as f64;

        // Visible out-degree per node under the layer's direction convention.
        let mut out_deg = vec![0u32; n];
        match layer {
            Layer::Trade | Layer::Message => {
                let kind = layer_kind(layer);
                for e in self.g.edges() {
                    if e.kind == kind && e.first_time <= self.cutoff {
                        out_deg[e.src.index()] += 1;
                    }
                }
            }
            Layer::Contact => {
                for &(u, v) in self.g.contact_pairs() {
                    out_deg[u.index()] += 1;
                    out_deg[v.index()] += 1;
                }
            }
        }

        let mut rank = vec![1.0 / nf; n];
        let mut next = vec![0.0f64; n];
        for _ in 0..max_iter {
            let mut dangling = 0.0;
            for (deg, r) in out_deg.iter().zip(rank.iter()) {
                if *deg == 0 {
                    dangling += r;
                }
            }
            let base = (1.0 - damping) / nf + damping * dangling / nf;
            next.iter_mut().for_each(|x| *x = base);
            match layer {
                Layer::Trade | Layer::Message => {
                    let kind = layer_kind(layer);
                    for e in self.g.edges() {
                        if e.kind == kind && e.first_time <= self.cutoff {
                            next[e.dst.index()] +=
                                damping * rank[e.src.index()] / out_deg[e.src.index()] as f64;
                        }
                    }
                }
                Layer::Contact => {
                    for &(u, v) in self.g.contact_pairs() {
                        next[v.index()] += damping * rank[u.index()] / out_deg[u.index()] as f64;
                        next[u.index()] += damping * rank[v.index()] / out_deg[v.index()] as f64;
                    }
                }
            }
            let delta: f64 = rank
                .iter()
                .zip(next.iter())
                .map(|(a, b)| (a - b).abs())
                .sum();
            std::mem::swap(&mut rank, &mut next);
            if delta < tol {
                break;
            }
        }
        let total: f64 = rank.iter().sum();
        if total > 0.0 {
            rank.iter_mut().for_each(|x| *x /= total);
        }
        rank
    }

    /// Layer statistics over nodes incident to at least one visible edge of
    /// the layer. Average degree divides by the layer's node count under the
    /// directed (m/n) or undirected (2m/n) convention; average clustering is
    /// the mean local coefficient over the layer's nodes.
    pub fn network_stats(&self, layer: Layer) -> NetworkStats {
        let n = self.g.num_nodes();
        let mut present = vec![false; n];
        let mut edges = 0u64;
        match layer {
            Layer::Trade | Layer::Message => {
                let kind = layer_kind(layer);
                for e in self.g.edges() {
                    if e.kind == kind && e.first_time <= self.cutoff {
                        edges += 1;
                        present[e.src.index()] = true;
                        present[e.dst.index()] = true;
                    }
                }
            }
            Layer::Contact => {
                for &(u, v) in self.g.contact_pairs() {
                    edges += 1;
                    present[u.index()] = true;
                    present[v.index()] = true;
                }
            }
        }
        let nodes = present.iter().filter(|&&p| p).count() as u64;
        if nodes == 0 {
            return NetworkStats {
                nodes: 0,
                edges: 0,
                avg_degree: 0.0,
                avg_clustering: 0.0,
            };
        }
        let avg_degree = match layer {
            Layer::Contact => 2.0 * edges as f64 / nodes as f64,
            _ => edges as f64 / nodes as f64,
        };
        let mut cc_sum = 0.0;
        for (v, here) in present.iter().enumerate() {
            if *here {
                cc_sum += self.clustering_coefficient(layer, NodeId(v as u32));
            }
        }
        NetworkStats {
            nodes,
            edges,
            avg_degree,
            avg_clustering: cc_sum / nodes as f64,
        }
    }
}

#[inline]
pub(crate) fn layer_kind(layer: Layer) -> EventKind {
    match layer {
        Layer::Trade => EventKind::Trade,
        Layer::Message => EventKind::Message,
        Layer::Contact => unreachable!("contact layer has no event kind"),
    }
}
