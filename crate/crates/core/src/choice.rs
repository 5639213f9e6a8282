//! Consumer-choice prediction: given a buyer and the 2..10 sellers offering
//! the same product, rank the sellers so the one actually chosen comes first.
//!
//! Features are computed on the network snapshot of the day before the
//! purchase, so nothing at or after the trade date can leak into a decision.
//! The model is a pairwise max-margin linear ranker trained by seeded
//! subgradient descent; Random / MinPrice / MostMsg orderings serve as
//! baselines, and experiments slice the 23 features into named subsets.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{EventKind, GraphView, Layer, NodeId, TemporalMultigraph, SECONDS_PER_DAY};
use crate::io::ChoiceRow;

pub const NUM_FEATURES: usize = 23;

/// Fixed feature order; fractional ranks are (rank-1)/(k-1) with average
/// ranks on ties.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "frac_price_rank",
    "frac_rating_rank",
    "frac_hist_sold_rank",
    "log_hist_sold",
    "inventory_sold",
    "insurance",
    "bs_trade_volume",
    "bs_msg_volume",
    "bs_contact",
    "days_since_last_trade",
    "days_since_last_msg",
    "frac_msg_rank",
    "buyer_trade_volume",
    "seller_trade_volume",
    "mutual_partners_msg",
    "mutual_partners_contact",
    "seller_clustering_msg",
    "seller_clustering_contact",
    "mutual_density_msg",
    "mutual_density_contact",
    "seller_pagerank_trade",
    "seller_pagerank_msg",
    "seller_pagerank_contact",
];

/// Which network a feature reads, if any.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum FeatureTag {
    Meta,
    Trade,
    Message,
    Contact,
}

pub const FEATURE_TAGS: [FeatureTag; NUM_FEATURES] = [
    FeatureTag::Meta,    // frac_price_rank
    FeatureTag::Meta,    // frac_rating_rank
    FeatureTag::Meta,    // frac_hist_sold_rank
    FeatureTag::Meta,    // log_hist_sold
    FeatureTag::Meta,    // inventory_sold
    FeatureTag::Meta,    // insurance
    FeatureTag::Trade,   // bs_trade_volume
    FeatureTag::Message, // bs_msg_volume
    FeatureTag::Contact, // bs_contact
    FeatureTag::Trade,   // days_since_last_trade
    FeatureTag::Message, // days_since_last_msg
    FeatureTag::Message, // frac_msg_rank
    FeatureTag::Trade,   // buyer_trade_volume
    FeatureTag::Trade,   // seller_trade_volume
    FeatureTag::Message, // mutual_partners_msg
    FeatureTag::Contact, // mutual_partners_contact
    FeatureTag::Message, // seller_clustering_msg
    FeatureTag::Contact, // seller_clustering_contact
    FeatureTag::Message, // mutual_density_msg
    FeatureTag::Contact, // mutual_density_contact
    FeatureTag::Trade,   // seller_pagerank_trade
    FeatureTag::Message, // seller_pagerank_msg
    FeatureTag::Contact, // seller_pagerank_contact
];

const DIRECT_RANGE: std::ops::Range<usize> = 6..14;
const INDIRECT_RANGE: std::ops::Range<usize> = 14..23;

/// Named feature subsets matching the experiment grid.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum FeatureSubset {
    All,
    OnlyNetwork,
    OnlyMeta,
    MetaMsgs,
    MetaTrades,
    MetaContacts,
    MetaDirect,
    MetaIndirect,
}

impl FeatureSubset {
    pub const ALL_SUBSETS: [FeatureSubset; 8] = [
        FeatureSubset::All,
        FeatureSubset::OnlyNetwork,
        FeatureSubset::OnlyMeta,
        FeatureSubset::MetaMsgs,
        FeatureSubset::MetaTrades,
        FeatureSubset::MetaContacts,
        FeatureSubset::MetaDirect,
        FeatureSubset::MetaIndirect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSubset::All => "all",
            FeatureSubset::OnlyNetwork => "only-network",
            FeatureSubset::OnlyMeta => "only-meta",
            FeatureSubset::MetaMsgs => "meta-msgs",
            FeatureSubset::MetaTrades => "meta-trades",
            FeatureSubset::MetaContacts => "meta-contacts",
            FeatureSubset::MetaDirect => "meta-direct",
            FeatureSubset::MetaIndirect => "meta-indirect",
        }
    }

    pub fn parse(name: &str) -> Result<FeatureSubset> {
        Self::ALL_SUBSETS
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown feature subset {name:?}")))
    }

    pub fn mask(self) -> [bool; NUM_FEATURES] {
        let mut mask = [false; NUM_FEATURES];
        for (i, tag) in FEATURE_TAGS.iter().enumerate() {
            let meta = *tag == FeatureTag::Meta;
            mask[i] = match self {
                FeatureSubset::All => true,
                FeatureSubset::OnlyNetwork => !meta,
                FeatureSubset::OnlyMeta => meta,
                FeatureSubset::MetaMsgs => meta || *tag == FeatureTag::Message,
                FeatureSubset::MetaTrades => meta || *tag == FeatureTag::Trade,
                FeatureSubset::MetaContacts => meta || *tag == FeatureTag::Contact,
                FeatureSubset::MetaDirect => meta || DIRECT_RANGE.contains(&i),
                FeatureSubset::MetaIndirect => meta || INDIRECT_RANGE.contains(&i),
            };
        }
        mask
    }
}

/// Listing metadata of one candidate seller within a cluster.
#[derive(Clone, Debug)]
pub struct CandidateMeta {
    pub seller: u64,
    pub price: f64,
    pub rating: f64,
    pub historical_sold: u64,
    pub inventory_sold: u64,
    pub insurance: bool,
}

/// One buyer's choice among the cluster's candidate sellers.
#[derive(Clone, Debug)]
pub struct DecisionInstance {
    pub cluster_id: String,
    pub buyer: u64,
    pub purchase_date: i64,
    pub candidates: Vec<CandidateMeta>,
    /// Indices into `candidates` the buyer actually bought from.
    pub true_sellers: Vec<usize>,
    pub category: Option<u32>,
}

/// Bipartite decision structure derived from one product cluster.
#[derive(Clone, Debug)]
pub struct BuyerSellerCluster {
    pub cluster_id: String,
    pub sellers: Vec<CandidateMeta>,
    pub decisions: Vec<DecisionInstance>,
}

/// Groups transactions into buyer-seller clusters, dropping clusters outside
/// 2..10 sellers. One decision per (buyer, purchase date); buyers purchasing
/// from several sellers that day get all of them as true sellers. Candidate
/// metadata comes from each seller's first row in the cluster.
pub fn build_decisions(
    rows: &[ChoiceRow],
    categories: Option<&HashMap<String, u32>>,
) -> Vec<BuyerSellerCluster> {
    let mut by_cluster: BTreeMap<&str, Vec<&ChoiceRow>> = BTreeMap::new();
    for row in rows {
        by_cluster.entry(&row.cluster_id).or_default().push(row);
    }
    let mut clusters = Vec::new();
    for (cluster_id, members) in by_cluster {
        let mut sellers: Vec<CandidateMeta> = Vec::new();
        for row in &members {
            if !sellers.iter().any(|c| c.seller == row.seller) {
                sellers.push(CandidateMeta {
                    seller: row.seller,
                    price: row.price,
                    rating: row.rating_percent,
                    historical_sold: row.historical_sold,
                    inventory_sold: row.inventory_sold,
                    insurance: row.insurance,
                });
            }
        }
        if sellers.len() < 2 || sellers.len() > 10 {
            continue;
        }
        sellers.sort_by_key(|c| c.seller);
        let index_of: HashMap<u64, usize> = sellers
            .iter()
            .enumerate()
            .map(|(i, c)| (c.seller, i))
            .collect();

        let mut by_decision: BTreeMap<(u64, i64), Vec<usize>> = BTreeMap::new();
        for row in &members {
            let entry = by_decision
                .entry((row.buyer, row.purchase_date))
                .or_default();
            let idx = index_of[&row.seller];
            if !entry.contains(&idx) {
                entry.push(idx);
            }
        }
        let category = categories.and_then(|m| m.get(cluster_id).copied());
        let decisions = by_decision
            .into_iter()
            .map(|((buyer, date), mut true_sellers)| {
                true_sellers.sort_unstable();
                DecisionInstance {
                    cluster_id: cluster_id.to_string(),
                    buyer,
                    purchase_date: date,
                    candidates: sellers.clone(),
                    true_sellers,
                    category,
                }
            })
            .collect();
        clusters.push(BuyerSellerCluster {
            cluster_id: cluster_id.to_string(),
            sellers,
            decisions,
        });
    }
    clusters
}

/// Fractional ranks in [0, 1]: (rank - 1) / (k - 1), ascending or descending,
/// with tied values receiving their average rank.
fn fractional_ranks(values: &[f64], ascending: bool) -> Vec<f64> {
    let k = values.len();
    if k <= 1 {
        return vec![0.0; k];
    }
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| {
        let ord = values[a].partial_cmp(&values[b]).unwrap();
        if ascending {
            ord
        } else {
            ord.reverse()
        }
    });
    let mut ranks = vec![0.0; k];
    let mut i = 0;
    while i < k {
        let mut j = i;
        while j < k && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        // positions i..j share the average of ranks i+1 ..= j.
        let avg = (i + 1 + j) as f64 / 2.0;
        for &orig in &idx[i..j] {
            ranks[orig] = (avg - 1.0) / (k - 1) as f64;
        }
        i = j;
    }
    ranks
}

/// Snapshot-aware feature extraction with per-cutoff PageRank memoization.
pub struct FeatureExtractor<'g> {
    g: &'g TemporalMultigraph,
    pagerank_cache: HashMap<(Layer, i64), std::rc::Rc<Vec<f64>>>,
}

impl<'g> FeatureExtractor<'g> {
    pub fn new(g: &'g TemporalMultigraph) -> Self {
        FeatureExtractor {
            g,
            pagerank_cache: HashMap::new(),
        }
    }

    fn pagerank(&mut self, layer: Layer, cutoff: i64) -> std::rc::Rc<Vec<f64>> {
        if let Some(cached) = self.pagerank_cache.get(&(layer, cutoff)) {
            return cached.clone();
        }
        let view = self.g.view_unchecked(cutoff);
        let scores = std::rc::Rc::new(view.pagerank(layer, 0.85, 1e-10, 100));
        self.pagerank_cache.insert((layer, cutoff), scores.clone());
        scores
    }

    /// Raw (unstandardized) feature vectors, one per candidate, computed on
    /// the snapshot of the day before the purchase. Candidates or buyers
    /// absent from the graph take the no-history defaults: zero volumes,
    /// window-length time gaps, zero indirect scores.
    pub fn features(&mut self, d: &DecisionInstance) -> Vec<[f64; NUM_FEATURES]> {
        let k = d.candidates.len();
        let cutoff = d.purchase_date - SECONDS_PER_DAY;
        let view = self.g.view_unchecked(cutoff);
        let window_days = (self.g.window().1 - self.g.window().0) as f64 / SECONDS_PER_DAY as f64;
        let buyer = self.g.internal_id(d.buyer);

        let prices: Vec<f64> = d.candidates.iter().map(|c| c.price).collect();
        let ratings: Vec<f64> = d.candidates.iter().map(|c| c.rating).collect();
        let hist: Vec<f64> = d
            .candidates
            .iter()
            .map(|c| c.historical_sold as f64)
            .collect();
        let price_rank = fractional_ranks(&prices, true);
        let rating_rank = fractional_ranks(&ratings, false);
        let hist_rank = fractional_ranks(&hist, false);

        let pr_trade = self.pagerank(Layer::Trade, cutoff);
        let pr_msg = self.pagerank(Layer::Message, cutoff);
        let pr_contact = self.pagerank(Layer::Contact, cutoff);

        let mut rows = vec![[0.0f64; NUM_FEATURES]; k];
        let mut msg_volumes = vec![0.0f64; k];
        for (i, cand) in d.candidates.iter().enumerate() {
            let seller = self.g.internal_id(cand.seller);
            let row = &mut rows[i];
            row[0] = price_rank[i];
            row[1] = rating_rank[i];
            row[2] = hist_rank[i];
            row[3] = (1.0 + cand.historical_sold as f64).ln();
            row[4] = cand.inventory_sold as f64;
            row[5] = if cand.insurance { 1.0 } else { 0.0 };

            let (trade_vol, trade_last) = match (buyer, seller) {
                (Some(b), Some(s)) => pair_events(&view, EventKind::Trade, b, s),
                _ => (0, None),
            };
            let (msg_vol, msg_last) = match (buyer, seller) {
                (Some(b), Some(s)) => pair_events(&view, EventKind::Message, b, s),
                _ => (0, None),
            };
            row[6] = trade_vol as f64;
            row[7] = msg_vol as f64;
            msg_volumes[i] = msg_vol as f64;
            row[8] = match (buyer, seller) {
                (Some(b), Some(s)) if self.g.has_contact(b, s) => 1.0,
                _ => 0.0,
            };
            row[9] = gap_days(cutoff, trade_last, window_days);
            row[10] = gap_days(cutoff, msg_last, window_days);
            // row[11] (frac_msg_rank) filled below once all volumes exist.
            row[12] = buyer.map_or(0.0, |b| nodal_trade_volume(&view, b));
            row[13] = seller.map_or(0.0, |s| nodal_trade_volume(&view, s));

            for (slot, layer) in [(14usize, Layer::Message), (15, Layer::Contact)] {
                let (partners, density) = match (buyer, seller) {
                    (Some(b), Some(s)) => mutual_partners_and_density(&view, layer, b, s),
                    _ => (0.0, 0.0),
                };
                row[slot] = partners;
                row[slot + 4] = density; // 18, 19
            }
            row[16] = seller.map_or(0.0, |s| view.clustering_coefficient(Layer::Message, s));
            row[17] = seller.map_or(0.0, |s| view.clustering_coefficient(Layer::Contact, s));
            row[20] = seller.map_or(0.0, |s| pr_trade[s.index()]);
            row[21] = seller.map_or(0.0, |s| pr_msg[s.index()]);
            row[22] = seller.map_or(0.0, |s| pr_contact[s.index()]);
        }
        let msg_rank = fractional_ranks(&msg_volumes, false);
        for (row, r) in rows.iter_mut().zip(msg_rank) {
            row[11] = r;
        }
        rows
    }

    /// Message volume between buyer and candidate strictly before the
    /// purchase date (the MostMsg baseline's ordering key).
    pub fn pre_date_msg_volume(&self, d: &DecisionInstance) -> Vec<u64> {
        let Some(buyer) = self.g.internal_id(d.buyer) else {
            return vec![0; d.candidates.len()];
        };
        d.candidates
            .iter()
            .map(|cand| {
                let Some(seller) = self.g.internal_id(cand.seller) else {
                    return 0;
                };
                let mut count = 0u64;
                for (src, dst) in [(buyer, seller), (seller, buyer)] {
                    if let Some(e) = self.g.find_edge(EventKind::Message, src, dst) {
                        count += self
                            .g
                            .events_of(e)
                            .partition_point(|ev| ev.timestamp < d.purchase_date)
                            as u64;
                    }
                }
                count
            })
            .collect()
    }
}

/// Visible event count and latest visible timestamp between a pair (both
/// directions) in one layer.
fn pair_events(view: &GraphView<'_>, kind: EventKind, a: NodeId, b: NodeId) -> (u64, Option<i64>) {
    let mut count = 0u64;
    let mut last: Option<i64> = None;
    for (src, dst) in [(a, b), (b, a)] {
        if let Some(e) = view.graph().find_edge(kind, src, dst) {
            let events = view.visible_events(e);
            count += events.len() as u64;
            if let Some(ev) = events.last() {
                last = Some(last.map_or(ev.timestamp, |t: i64| t.max(ev.timestamp)));
            }
        }
    }
    (count, last)
}

fn gap_days(cutoff: i64, last: Option<i64>, window_days: f64) -> f64 {
    match last {
        Some(t) => (cutoff - t) as f64 / SECONDS_PER_DAY as f64,
        None => window_days,
    }
}

fn nodal_trade_volume(view: &GraphView<'_>, node: NodeId) -> f64 {
    let mut count = 0usize;
    for (_, e) in view.visible_out(node, EventKind::Trade) {
        count += view.visible_events(e).len();
    }
    for (_, e) in view.visible_in(node, EventKind::Trade) {
        count += view.visible_events(e).len();
    }
    count as f64
}

/// Number of common projection neighbors and the edge density among them.
fn mutual_partners_and_density(
    view: &GraphView<'_>,
    layer: Layer,
    a: NodeId,
    b: NodeId,
) -> (f64, f64) {
    let mutual = view.mutual_neighbor_set(layer, a, b);
    let m = mutual.len();
    if m < 2 {
        return (m as f64, 0.0);
    }
    let mut links = 0u64;
    for (i, &x) in mutual.iter().enumerate() {
        for &y in &mutual[i + 1..] {
            if view.proj_connected(layer, x, y) {
                links += 1;
            }
        }
    }
    let density = 2.0 * links as f64 / (m as f64 * (m - 1) as f64);
    (m as f64, density)
}

/// Pairwise max-margin linear ranking model.
#[derive(Clone, Debug)]
pub struct RankModel {
    pub weights: [f64; NUM_FEATURES],
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
}

impl RankModel {
    pub fn score(&self, x: &[f64; NUM_FEATURES]) -> f64 {
        self.weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum()
    }

    /// Candidate indices ordered best-first; ties broken by candidate index.
    pub fn rank(&self, features: &[[f64; NUM_FEATURES]]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..features.len()).collect();
        let scores: Vec<f64> = features.iter().map(|x| self.score(x)).collect();
        idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
        idx
    }
}

/// One training group: the candidate features of a decision plus the truth
/// mask.
#[derive(Clone, Debug)]
pub struct TrainGroup {
    pub features: Vec<[f64; NUM_FEATURES]>,
    pub is_true: Vec<bool>,
}

impl TrainGroup {
    fn has_both_sides(&self) -> bool {
        self.is_true.iter().any(|&t| t) && self.is_true.iter().any(|&t| !t)
    }
}

/// Minimizes sum over groups of pairwise hinge(1 - w . (x+ - x-)) plus
/// lambda * |w|^2 by seeded subgradient descent: groups are reshuffled each
/// epoch, pairs within a group run in fixed order, and the step size decays
/// as eta_t = eta0 / (1 + lambda * eta0 * t).
pub fn train_ranker(
    groups: &[TrainGroup],
    lambda: f64,
    epochs: u32,
    seed: u64,
) -> Result<RankModel> {
    const ETA0: f64 = 0.1;
    let usable: Vec<&TrainGroup> = groups.iter().filter(|g| g.has_both_sides()).collect();
    if usable.is_empty() {
        return Err(Error::invalid(
            "training set has no group with both a true and a false candidate",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = [0.0f64; NUM_FEATURES];
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut t = 0u64;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &gi in &order {
            let group = usable[gi];
            for (pi, pos) in group.features.iter().enumerate() {
                if !group.is_true[pi] {
                    continue;
                }
                for (ni, neg) in group.features.iter().enumerate() {
                    if group.is_true[ni] {
                        continue;
                    }
                    t += 1;
                    let eta = ETA0 / (1.0 + lambda * ETA0 * t as f64);
                    let margin: f64 = (0..NUM_FEATURES).map(|f| w[f] * (pos[f] - neg[f])).sum();
                    let shrink = 1.0 - eta * lambda;
                    for f in 0..NUM_FEATURES {
                        w[f] *= shrink;
                        if margin < 1.0 {
                            w[f] += eta * (pos[f] - neg[f]);
                        }
                    }
                }
            }
        }
    }
    Ok(RankModel {
        weights: w,
        lambda,
        epochs,
        seed,
    })
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum BaselineKind {
    Random,
    MinPrice,
    MostMsg,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::MinPrice => "min-price",
            BaselineKind::MostMsg => "most-msg",
        }
    }
}

/// Baseline orderings. MostMsg sorts by descending pre-purchase-date message
/// volume and falls back to Random (same seed, same order) when no candidate
/// has a message edge with the buyer; ties everywhere break by seeded
/// shuffle.
pub fn baseline_rank(
    g: &TemporalMultigraph,
    kind: BaselineKind,
    d: &DecisionInstance,
    seed: u64,
) -> Vec<usize> {
    let k = d.candidates.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        BaselineKind::Random => {
            let mut idx: Vec<usize> = (0..k).collect();
            idx.shuffle(&mut rng);
            idx
        }
        BaselineKind::MinPrice => {
            let tiebreak: Vec<u64> = (0..k).map(|_| rng.random()).collect();
            let mut idx: Vec<usize> = (0..k).collect();
            idx.sort_by(|&a, &b| {
                d.candidates[a]
                    .price
                    .partial_cmp(&d.candidates[b].price)
                    .unwrap()
                    .then(tiebreak[a].cmp(&tiebreak[b]))
            });
            idx
        }
        BaselineKind::MostMsg => {
            let volumes = FeatureExtractor::new(g).pre_date_msg_volume(d);
            if volumes.iter().all(|&v| v == 0) {
                return baseline_rank(g, BaselineKind::Random, d, seed);
            }
            let tiebreak: Vec<u64> = (0..k).map(|_| rng.random()).collect();
            let mut idx: Vec<usize> = (0..k).collect();
            idx.sort_by(|&a, &b| {
                volumes[b]
                    .cmp(&volumes[a])
                    .then(tiebreak[a].cmp(&tiebreak[b]))
            });
            idx
        }
    }
}

/// Per-candidate-count slice of the metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct KMetrics {
    pub decisions: u64,
    pub p_at_1: f64,
    pub mean_rank: f64,
    pub mrr: f64,
}

/// P@1, mean rank, and mean reciprocal rank of the best-ranked true seller.
#[derive(Clone, Debug)]
pub struct RankMetrics {
    pub decisions: u64,
    pub p_at_1: f64,
    pub mean_rank: f64,
    pub mrr: f64,
    pub per_k: BTreeMap<usize, KMetrics>,
}

/// Evaluates orderings against decisions; the rank of a decision is the best
/// position of any true seller (1-based).
pub fn evaluate(rankings: &[Vec<usize>], decisions: &[&DecisionInstance]) -> RankMetrics {
    assert_eq!(rankings.len(), decisions.len());
    let mut agg: BTreeMap<usize, (u64, u64, f64, f64)> = BTreeMap::new();
    let (mut hits, mut rank_sum, mut rr_sum) = (0u64, 0.0f64, 0.0f64);
    for (ranking, d) in rankings.iter().zip(decisions.iter()) {
        let rank = ranking
            .iter()
            .position(|i| d.true_sellers.contains(i))
            .expect("every decision has a true seller among candidates")
            + 1;
        let k = d.candidates.len();
        let entry = agg.entry(k).or_insert((0, 0, 0.0, 0.0));
        entry.0 += 1;
        if rank == 1 {
            hits += 1;
            entry.1 += 1;
        }
        rank_sum += rank as f64;
        rr_sum += 1.0 / rank as f64;
        entry.2 += rank as f64;
        entry.3 += 1.0 / rank as f64;
    }
    let n = decisions.len() as f64;
    let per_k = agg
        .into_iter()
        .map(|(k, (count, k_hits, k_rank, k_rr))| {
            (
                k,
                KMetrics {
                    decisions: count,
                    p_at_1: k_hits as f64 / count as f64,
                    mean_rank: k_rank / count as f64,
                    mrr: k_rr / count as f64,
                },
            )
        })
        .collect();
    RankMetrics {
        decisions: decisions.len() as u64,
        p_at_1: hits as f64 / n,
        mean_rank: rank_sum / n,
        mrr: rr_sum / n,
        per_k,
    }
}

/// Experiment parameters; `train_seed` feeds the optimizer, `split_seed` the
/// cluster-level 75/25 split and the baseline tie-breaking.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub subset: FeatureSubset,
    pub split_seed: u64,
    pub train_seed: u64,
    pub lambda: f64,
    pub epochs: u32,
    pub per_category: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            subset: FeatureSubset::All,
            split_seed: 1,
            train_seed: 1,
            lambda: 1e-4,
            epochs: 50,
            per_category: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub subset: FeatureSubset,
    pub model: RankMetrics,
    pub baselines: BTreeMap<&'static str, RankMetrics>,
    pub train_decisions: u64,
    pub test_decisions: u64,
    pub weights: Vec<f64>,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable across runs and platforms: FNV-1a over the id mixed with the seed.
fn stable_cluster_hash(cluster_id: &str, seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for byte in cluster_id.bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    splitmix(h ^ splitmix(seed))
}

/// True when the cluster lands in the 75% training side.
pub fn in_train_split(cluster_id: &str, split_seed: u64) -> bool {
    // Top 2 bits of the hash give a uniform draw over 4 quarters.
    stable_cluster_hash(cluster_id, split_seed) >> 62 != 3
}

/// Feature standardization fitted on training candidates only.
#[derive(Clone, Debug)]
pub struct Standardizer {
    pub mean: [f64; NUM_FEATURES],
    pub std: [f64; NUM_FEATURES],
}

impl Standardizer {
    pub fn fit(rows: &[[f64; NUM_FEATURES]]) -> Standardizer {
        let n = rows.len().max(1) as f64;
        let mut mean = [0.0f64; NUM_FEATURES];
        for row in rows {
            for f in 0..NUM_FEATURES {
                mean[f] += row[f];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0f64; NUM_FEATURES];
        for row in rows {
            for f in 0..NUM_FEATURES {
                var[f] += (row[f] - mean[f]).powi(2);
            }
        }
        let mut std = [0.0f64; NUM_FEATURES];
        for f in 0..NUM_FEATURES {
            std[f] = (var[f] / n).sqrt();
            if std[f] < 1e-12 {
                std[f] = 1.0;
            }
        }
        Standardizer { mean, std }
    }

    pub fn apply(
        &self,
        row: &[f64; NUM_FEATURES],
        mask: &[bool; NUM_FEATURES],
    ) -> [f64; NUM_FEATURES] {
        let mut out = [0.0f64; NUM_FEATURES];
        for f in 0..NUM_FEATURES {
            if mask[f] {
                out[f] = (row[f] - self.mean[f]) / self.std[f];
            }
        }
        out
    }
}

/// Full experiment: split by cluster, standardize on train, train the masked
/// ranker (per category when asked), evaluate on test alongside the three
/// baselines.
pub fn run_experiment(
    g: &TemporalMultigraph,
    clusters: &[BuyerSellerCluster],
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let mask = cfg.subset.mask();
    let mut extractor = FeatureExtractor::new(g);

    struct Prepared<'a> {
        decision: &'a DecisionInstance,
        raw: Vec<[f64; NUM_FEATURES]>,
        train: bool,
    }
    let mut prepared = Vec::new();
    for cluster in clusters {
        let train = in_train_split(&cluster.cluster_id, cfg.split_seed);
        for d in &cluster.decisions {
            prepared.push(Prepared {
                decision: d,
                raw: extractor.features(d),
                train,
            });
        }
    }
    let train_rows: Vec<[f64; NUM_FEATURES]> = prepared
        .iter()
        .filter(|p| p.train)
        .flat_map(|p| p.raw.iter().copied())
        .collect();
    if train_rows.is_empty() {
        return Err(Error::invalid("empty training split"));
    }
    let standardizer = Standardizer::fit(&train_rows);

    let to_group = |p: &Prepared| -> TrainGroup {
        TrainGroup {
            features: p.raw.iter().map(|r| standardizer.apply(r, &mask)).collect(),
            is_true: (0..p.decision.candidates.len())
                .map(|i| p.decision.true_sellers.contains(&i))
                .collect(),
        }
    };

    // Train one model per category (falling back to the global model for
    // unseen categories) or a single global model.
    let train_groups: Vec<TrainGroup> = prepared.iter().filter(|p| p.train).map(to_group).collect();
    let global = train_ranker(&train_groups, cfg.lambda, cfg.epochs, cfg.train_seed)?;

    let mut per_category: HashMap<u32, RankModel> = HashMap::new();
    if cfg.per_category {
        let mut by_cat: BTreeMap<u32, Vec<TrainGroup>> = BTreeMap::new();
        for p in prepared.iter().filter(|p| p.train) {
            if let Some(cat) = p.decision.category {
                by_cat.entry(cat).or_default().push(to_group(p));
            }
        }
        for (cat, groups) in by_cat {
            if let Ok(model) = train_ranker(&groups, cfg.lambda, cfg.epochs, cfg.train_seed) {
                per_category.insert(cat, model);
            }
        }
    }

    let test: Vec<&Prepared> = prepared.iter().filter(|p| !p.train).collect();
    if test.is_empty() {
        return Err(Error::invalid("empty test split"));
    }
    let test_decisions: Vec<&DecisionInstance> = test.iter().map(|p| p.decision).collect();

    let model_rankings: Vec<Vec<usize>> = test
        .iter()
        .map(|p| {
            let model = p
                .decision
                .category
                .and_then(|c| per_category.get(&c))
                .unwrap_or(&global);
            let std_rows: Vec<[f64; NUM_FEATURES]> =
                p.raw.iter().map(|r| standardizer.apply(r, &mask)).collect();
            model.rank(&std_rows)
        })
        .collect();
    let model_metrics = evaluate(&model_rankings, &test_decisions);

    let mut baselines = BTreeMap::new();
    for kind in [
        BaselineKind::Random,
        BaselineKind::MinPrice,
        BaselineKind::MostMsg,
    ] {
        let rankings: Vec<Vec<usize>> = test
            .iter()
            .enumerate()
            .map(|(i, p)| baseline_rank(g, kind, p.decision, splitmix(cfg.split_seed ^ i as u64)))
            .collect();
        baselines.insert(kind.name(), evaluate(&rankings, &test_decisions));
    }

    Ok(ExperimentResult {
        subset: cfg.subset,
        model: model_metrics,
        baselines,
        train_decisions: prepared.iter().filter(|p| p.train).count() as u64,
        test_decisions: test.len() as u64,
        weights: global.weights.to_vec(),
    })
}

/// Writes the raw per-candidate feature matrix for audits:
/// `decision_id,cluster_id,buyer,purchase_date,candidate_seller,is_true,<23 features>`.
pub fn write_features_csv<W: Write>(
    mut w: W,
    g: &TemporalMultigraph,
    clusters: &[BuyerSellerCluster],
) -> Result<()> {
    write!(
        w,
        "decision_id,cluster_id,buyer,purchase_date,candidate_seller,is_true"
    )?;
    for name in FEATURE_NAMES {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    let mut extractor = FeatureExtractor::new(g);
    let mut decision_id = 0u64;
    for cluster in clusters {
        for d in &cluster.decisions {
            let rows = extractor.features(d);
            for (i, row) in rows.iter().enumerate() {
                write!(
                    w,
                    "{decision_id},{},{},{},{},{}",
                    cluster.cluster_id,
                    d.buyer,
                    d.purchase_date,
                    d.candidates[i].seller,
                    u8::from(d.true_sellers.contains(&i)),
                )?;
                for value in row {
                    write!(w, ",{value}")?;
                }
                writeln!(w)?;
            }
            decision_id += 1;
        }
    }
    Ok(())
}
