use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Temporal-multigraph analytics for social-commerce data: ingestion,
/// network statistics, the directed configuration census, information
/// passing with null models, price-of-trust fitting, consumer-choice
/// ranking, synthetic data generation, and report bundling.
///
/// Set TRIAD_LOG=error|info|debug to control logging. Every run writes a
/// manifest.json recording inputs, seeds, and output digests.
#[derive(Parser, Debug)]
#[command(name = "triad", version, max_term_width = 100)]
pub struct Cli {
    /// Cap analysis parallelism; results are identical for any value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct DatasetArgs {
    /// events.csv: kind,src,dst,timestamp,product_id,category_id,price,quantity
    #[arg(long)]
    pub events: PathBuf,
    /// contacts.csv: u,v
    #[arg(long)]
    pub contacts: PathBuf,
    /// Observation window start (seconds). Derived from the data if omitted.
    #[arg(long)]
    pub t_start: Option<i64>,
    /// Observation window end (seconds). Derived from the data if omitted.
    #[arg(long)]
    pub t_end: Option<i64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutArg {
    /// Output directory (created if missing); outputs land atomically.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate and load a dataset, emitting the external->internal id map.
    Ingest {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Per-layer node/edge counts, average degree, and average clustering.
    Stats {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// The 16-way directed configuration census with surprise statistics.
    Census {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Information-passing measurements and null models.
    Infopass {
        #[command(subcommand)]
        command: InfopassCommand,
    },
    /// Price deviation vs. seller rating with a power fit.
    Trust {
        /// clusters.csv: cluster_id,seller,item_id,price
        #[arg(long)]
        clusters: PathBuf,
        /// ratings.csv: seller,rating_percent
        #[arg(long)]
        ratings: PathBuf,
        /// Sellers with fewer rated items are excluded from the profile.
        #[arg(long, default_value_t = 15)]
        min_items: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Consumer-choice experiment: features, ranker, baselines, metrics.
    Choice {
        /// choice_clusters.csv transactions.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        graph: DatasetArgs,
        /// Feature subset: all, only-network, only-meta, meta-msgs,
        /// meta-trades, meta-contacts, meta-direct, meta-indirect.
        #[arg(long, default_value = "all")]
        subset: String,
        /// Train one model per product category and aggregate.
        #[arg(long)]
        per_category: bool,
        #[arg(long, default_value_t = 1)]
        split_seed: u64,
        #[arg(long, default_value_t = 1)]
        train_seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        lambda: f64,
        #[arg(long, default_value_t = 50)]
        epochs: u32,
        #[command(flatten)]
        out: OutArg,
    },
    /// Generate a synthetic dataset with planted effects.
    Syngen {
        /// Flat key=value config file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Collate previously computed outputs into a report bundle.
    Report {
        /// Directory holding stats.csv, census.csv, bba.csv, metrics.json.
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand, Debug)]
pub enum InfopassCommand {
    /// Information-passing success rate (triples and deduplicated pairs).
    Rate {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        params: IpParams,
        #[command(flatten)]
        out: OutArg,
    },
    /// Closure probability bucketed along one axis.
    Curve {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        params: IpParams,
        #[arg(long, value_enum)]
        axis: CurveAxisArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Messages between two buyers before/between/after their purchases.
    Bba {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long, default_value_t = 5)]
        max_delta: u32,
        #[command(flatten)]
        out: OutArg,
    },
    /// Dyad-level reports (trade vs message volume, messages vs price or
    /// trade-date offset).
    Dyads {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long, value_enum)]
        which: DyadArg,
        /// For trade-vs-msg: restrict to pairs with at least one trade.
        #[arg(long)]
        require_trade: bool,
        /// For msgs-vs-offset: day-offset range.
        #[arg(long, default_value_t = 7)]
        max_offset: i64,
        #[arg(long, default_value_t = 30)]
        min_support: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Degree-preserving rewiring null model; re-emits the dataset files.
    Rewire {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Seller-randomization null model; re-emits the dataset files.
    RandomizeSellers {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args, Debug, Clone)]
pub struct IpParams {
    /// Max days between message and follow-up purchase.
    #[arg(long, default_value_t = 2)]
    pub delta_days: i64,
    /// Half-width (days) of the message-strength window.
    #[arg(long, default_value_t = 3)]
    pub window_days: i64,
    #[arg(long, value_enum, default_value = "standard")]
    pub variant: VariantArg,
    /// Buckets with fewer instances are suppressed in curve output.
    #[arg(long, default_value_t = 30)]
    pub min_support: u64,
}

#[derive(ValueEnum, Copy, Clone, Debug)]
pub enum VariantArg {
    Standard,
    Firstbuy,
    Msgreq,
    Random,
}

#[derive(ValueEnum, Copy, Clone, Debug)]
pub enum CurveAxisArg {
    MsgStrength,
    TimeDiff,
    Price,
    Category,
    MutualContacts,
    DirectContact,
}

#[derive(ValueEnum, Copy, Clone, Debug)]
pub enum DyadArg {
    TradeVsMsg,
    MsgsVsPrice,
    MsgsVsOffset,
}
