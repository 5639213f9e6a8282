use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::{info, warn};
use serde_json::json;

use triad_core::choice::{self, build_decisions, run_experiment, ExperimentConfig, FeatureSubset};
use triad_core::infopass::{self, BucketedCurve, CurveAxis, DyadReport, IpQuery, IpVariant};
use triad_core::syngen;
use triad_core::trust;
use triad_core::{census, io, Error, Layer, Result, TemporalMultigraph};

use crate::args::{CurveAxisArg, DatasetArgs, DyadArg, InfopassCommand, IpParams, VariantArg};
use crate::output::{sha256_file, OutDir};

const DAY: i64 = triad_core::graph::SECONDS_PER_DAY;

fn derive_window(events: &Path) -> Result<(i64, i64)> {
    let evs = io::read_events(events, (i64::MIN / 2, i64::MAX / 2))?;
    if evs.is_empty() {
        return Ok((0, 0));
    }
    let lo = evs.iter().map(|e| e.timestamp).min().unwrap();
    let hi = evs.iter().map(|e| e.timestamp).max().unwrap();
    Ok((lo, hi))
}

fn load(data: &DatasetArgs) -> Result<TemporalMultigraph> {
    let window = match (data.t_start, data.t_end) {
        (Some(s), Some(e)) => (s, e),
        (None, None) => derive_window(&data.events)?,
        _ => {
            return Err(Error::invalid(
                "provide both --t-start and --t-end, or neither",
            ))
        }
    };
    let g = io::load_dataset(&data.events, &data.contacts, window)?;
    info!(
        "loaded {} nodes, {} events, {} contact pairs, window [{}, {}]",
        g.num_nodes(),
        g.num_events(),
        g.contact_pairs().len(),
        window.0,
        window.1
    );
    Ok(g)
}

fn record_dataset(out: &mut OutDir, data: &DatasetArgs) -> Result<()> {
    out.record_input(&data.events)?;
    out.record_input(&data.contacts)?;
    Ok(())
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn curve_csv(curve: &BucketedCurve) -> String {
    let mut s = String::from("bucket,numerator,denominator,rate\n");
    for b in &curve.buckets {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            b.label,
            b.result.numerator,
            b.result.denominator,
            fmt_opt(b.result.rate)
        );
    }
    s
}

pub fn ingest(data: &DatasetArgs, out_dir: &Path) -> Result<()> {
    let mut out = OutDir::create(out_dir, "ingest")?;
    record_dataset(&mut out, data)?;
    let g = load(data)?;
    let mut id_map = Vec::new();
    io::write_id_map(&mut id_map, &g)?;
    out.write("id_map.csv", &id_map)?;
    out.record_config("nodes", g.num_nodes());
    out.record_config("events", g.num_events());
    out.commit()
}

pub fn stats(data: &DatasetArgs, out_dir: &Path) -> Result<()> {
    let mut out = OutDir::create(out_dir, "stats")?;
    record_dataset(&mut out, data)?;
    let g = load(data)?;
    let view = g.full_view();
    let mut csv = String::from("layer,nodes,edges,avg_degree,avg_clustering\n");
    for layer in [Layer::Contact, Layer::Message, Layer::Trade] {
        let s = view.network_stats(layer);
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            layer.name(),
            s.nodes,
            s.edges,
            s.avg_degree,
            s.avg_clustering
        );
    }
    out.write("stats.csv", csv.as_bytes())?;
    out.commit()
}

pub fn census_cmd(data: &DatasetArgs, out_dir: &Path) -> Result<()> {
    let mut out = OutDir::create(out_dir, "census")?;
    record_dataset(&mut out, data)?;
    let g = load(data)?;
    let rows = census::config_census(&g);
    let mut csv = String::from(
        "config_id,leg1,leg2,instances,unique_x,p_close_x100,p_trade_given_close,p_msg_given_close,s_t_o,s_t_i,x_role\n",
    );
    for row in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.config.0,
            row.config.first_leg().label(),
            row.config.second_leg().label(),
            row.instances,
            row.unique_x,
            row.p_close_x100,
            row.p_trade_given_close,
            row.p_msg_given_close,
            fmt_opt(row.s_t_o),
            fmt_opt(row.s_t_i),
            row.x_role.label()
        );
    }
    out.write("census.csv", csv.as_bytes())?;
    out.commit()
}

fn ip_query(params: &IpParams) -> IpQuery {
    IpQuery {
        delta_max: params.delta_days * DAY,
        window_delta: params.window_days * DAY,
        variant: match params.variant {
            VariantArg::Standard => IpVariant::Standard,
            VariantArg::Firstbuy => IpVariant::FirstBuyReq,
            VariantArg::Msgreq => IpVariant::MsgReq,
            VariantArg::Random => IpVariant::Random,
        },
        min_support: params.min_support,
    }
}

pub fn infopass_cmd(cmd: &InfopassCommand) -> Result<()> {
    match cmd {
        InfopassCommand::Rate { data, params, out } => {
            let mut dir = OutDir::create(&out.out, "infopass rate")?;
            record_dataset(&mut dir, data)?;
            let g = load(data)?;
            let report = infopass::ip_success_report(&g, &ip_query(params));
            let mut csv = String::from("tally,numerator,denominator,rate\n");
            for (name, r) in [
                ("triples", report.triples),
                ("unique_pairs", report.unique_pairs),
            ] {
                let _ = writeln!(
                    csv,
                    "{name},{},{},{}",
                    r.numerator,
                    r.denominator,
                    fmt_opt(r.rate)
                );
            }
            dir.write("rate.csv", csv.as_bytes())?;
            dir.record_config("delta_days", params.delta_days);
            dir.record_config("variant", format!("{:?}", params.variant));
            dir.commit()
        }
        InfopassCommand::Curve {
            data,
            params,
            axis,
            out,
        } => {
            let mut dir = OutDir::create(&out.out, "infopass curve")?;
            record_dataset(&mut dir, data)?;
            let g = load(data)?;
            let q = ip_query(params);
            let curve = match axis {
                CurveAxisArg::MsgStrength => {
                    infopass::closure_rate_by(&g, CurveAxis::MsgStrength, &q)?
                }
                CurveAxisArg::TimeDiff => {
                    infopass::closure_rate_by(&g, CurveAxis::TimeDiffDays, &q)?
                }
                CurveAxisArg::Price => infopass::closure_rate_by(&g, CurveAxis::PriceCny, &q)?,
                CurveAxisArg::Category => infopass::closure_rate_by(&g, CurveAxis::Category, &q)?,
                CurveAxisArg::MutualContacts => {
                    infopass::mutual_contact_trade_curve(&g, q.variant, q.min_support)
                }
                CurveAxisArg::DirectContact => {
                    let r = infopass::direct_contact_trade_rate(&g);
                    let mut csv = String::from("bucket,numerator,denominator,rate\n");
                    let _ = writeln!(
                        csv,
                        "direct,{},{},{}",
                        r.numerator,
                        r.denominator,
                        fmt_opt(r.rate)
                    );
                    dir.write("curve.csv", csv.as_bytes())?;
                    dir.record_config("axis", "direct-contact");
                    return dir.commit();
                }
            };
            dir.write("curve.csv", curve_csv(&curve).as_bytes())?;
            dir.record_config("axis", curve.axis.name());
            dir.record_config("suppressed_buckets", curve.suppressed);
            dir.record_config("delta_days", params.delta_days);
            dir.record_config("window_days", params.window_days);
            dir.record_config("variant", format!("{:?}", params.variant));
            dir.record_config(
                "firstbuy_applies_to",
                "denominator (dropped before counting)",
            );
            dir.commit()
        }
        InfopassCommand::Bba {
            data,
            max_delta,
            out,
        } => {
            let mut dir = OutDir::create(&out.out, "infopass bba")?;
            record_dataset(&mut dir, data)?;
            let g = load(data)?;
            let table = infopass::before_between_after(&g, *max_delta);
            let mut csv = String::from(
                "delta_days,instances,avg_before,avg_between,avg_after,std_before,std_between,std_after\n",
            );
            for row in &table.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    row.delta_days,
                    row.instances,
                    row.avg_before,
                    row.avg_between,
                    row.avg_after,
                    row.std_before,
                    row.std_between,
                    row.std_after
                );
            }
            dir.write("bba.csv", csv.as_bytes())?;
            dir.commit()
        }
        InfopassCommand::Dyads {
            data,
            which,
            require_trade,
            max_offset,
            min_support,
            out,
        } => {
            let mut dir = OutDir::create(&out.out, "infopass dyads")?;
            record_dataset(&mut dir, data)?;
            let g = load(data)?;
            let report = match which {
                DyadArg::TradeVsMsg => DyadReport::TradeVsMsgVolume {
                    require_trade: *require_trade,
                },
                DyadArg::MsgsVsPrice => DyadReport::MsgsVsPrice,
                DyadArg::MsgsVsOffset => DyadReport::MsgsVsTradeDateOffset {
                    max_offset_days: *max_offset,
                },
            };
            let curve = infopass::dyad_report(&g, report, *min_support);
            dir.write("dyads.csv", curve_csv(&curve).as_bytes())?;
            dir.record_config("which", format!("{which:?}"));
            dir.commit()
        }
        InfopassCommand::Rewire { data, seed, out } => {
            let mut dir = OutDir::create(&out.out, "infopass rewire")?;
            record_dataset(&mut dir, data)?;
            dir.record_seed("rewire", *seed);
            let g = load(data)?;
            let (rewired, report) = infopass::rewire(&g, *seed);
            for layer in report.skipped_layers() {
                warn!("layer {:?} too small to rewire; left unchanged", layer);
            }
            for l in &report.layers {
                dir.record_config(
                    &format!("swaps_{}", l.layer.name()),
                    format!(
                        "{}/{} in {} attempts{}",
                        l.successful_swaps,
                        l.target_swaps,
                        l.attempts,
                        if l.skipped { " (skipped)" } else { "" }
                    ),
                );
            }
            write_graph_files(&mut dir, &rewired)?;
            dir.commit()
        }
        InfopassCommand::RandomizeSellers { data, seed, out } => {
            let mut dir = OutDir::create(&out.out, "infopass randomize-sellers")?;
            record_dataset(&mut dir, data)?;
            dir.record_seed("randomize_sellers", *seed);
            let g = load(data)?;
            let randomized = infopass::randomize_sellers(&g, *seed);
            write_graph_files(&mut dir, &randomized)?;
            dir.commit()
        }
    }
}

fn write_graph_files(dir: &mut OutDir, g: &TemporalMultigraph) -> Result<()> {
    let mut events = Vec::new();
    io::write_events(&mut events, g)?;
    dir.write("events.csv", &events)?;
    let mut contacts = Vec::new();
    io::write_contacts(&mut contacts, g)?;
    dir.write("contacts.csv", &contacts)?;
    Ok(())
}

fn fit_json(fit: &trust::PowerFit) -> serde_json::Value {
    json!({
        "a": fit.a,
        "b": fit.b,
        "c": fit.c,
        "r_squared": fit.r_squared,
        "zero_crossing": fit.zero_crossing,
        "elasticity": fit.elasticity_at_median,
        "elasticity_loglog": fit.elasticity_loglog,
    })
}

pub fn trust_cmd(clusters: &Path, ratings: &Path, min_items: usize, out_dir: &Path) -> Result<()> {
    let mut out = OutDir::create(out_dir, "trust")?;
    out.record_input(clusters)?;
    out.record_input(ratings)?;
    let listings = io::read_listings(clusters)?;
    let rating_rows = io::read_ratings(ratings)?;

    let report = trust::price_deviations(&listings, &rating_rows);
    let item_buckets = trust::bucket_deviations(&report.points);
    let profile = trust::seller_deviation_profile(&listings, &rating_rows, min_items);

    let mut csv = String::from("scope,rating,deviation,weight\n");
    for p in &item_buckets {
        let _ = writeln!(csv, "item,{},{},{}", p.rating, p.deviation, p.weight);
    }
    for p in &profile {
        let _ = writeln!(csv, "seller,{},{},{}", p.rating, p.deviation, p.weight);
    }
    out.write("deviations.csv", csv.as_bytes())?;
    out.record_config(
        "items_skipped_missing_rating",
        report.skipped_missing_rating,
    );
    out.record_config(
        "singleton_clusters_dropped",
        report.dropped_singleton_clusters,
    );
    out.record_config("min_items", min_items);

    // Headline object: per-item fit (the zero-crossing reference figure);
    // the per-seller fit rides along.
    let item_fit = trust::fit_power(&item_buckets)?;
    let mut payload = fit_json(&item_fit);
    payload["scope"] = json!("per_item");
    match trust::fit_power(&profile) {
        Ok(seller_fit) => payload["per_seller"] = fit_json(&seller_fit),
        Err(e) => {
            warn!("per-seller fit unavailable: {e}");
            payload["per_seller"] = serde_json::Value::Null;
        }
    }
    out.write(
        "fit.json",
        serde_json::to_string_pretty(&payload)
            .map_err(|e| Error::invalid(e.to_string()))?
            .as_bytes(),
    )?;
    out.commit()
}

#[allow(clippy::too_many_arguments)]
pub fn choice_cmd(
    data_path: &Path,
    graph: &DatasetArgs,
    subset: &str,
    per_category: bool,
    split_seed: u64,
    train_seed: u64,
    lambda: f64,
    epochs: u32,
    out_dir: &Path,
) -> Result<()> {
    let mut out = OutDir::create(out_dir, "choice")?;
    out.record_input(data_path)?;
    record_dataset(&mut out, graph)?;
    out.record_seed("split", split_seed);
    out.record_seed("train", train_seed);

    let subset = FeatureSubset::parse(subset)?;
    let rows = io::read_choice_rows(data_path)?;
    let g = load(graph)?;

    // Cluster categories come from trade events whose product id equals the
    // cluster id (the generator emits decision trades that way).
    let cluster_ids: std::collections::HashSet<&str> =
        rows.iter().map(|r| r.cluster_id.as_str()).collect();
    let mut categories: HashMap<String, u32> = HashMap::new();
    for ev in g.all_events() {
        if let Some(t) = &ev.trade {
            let name = g.product_name(t.product);
            if cluster_ids.contains(name) && !categories.contains_key(name) {
                categories.insert(name.to_string(), t.category);
            }
        }
    }
    let clusters = build_decisions(&rows, Some(&categories));
    if clusters.is_empty() {
        return Err(Error::invalid(
            "no buyer-seller cluster with 2..=10 sellers in the input",
        ));
    }

    let cfg = ExperimentConfig {
        subset,
        split_seed,
        train_seed,
        lambda,
        epochs,
        per_category,
    };
    let result = run_experiment(&g, &clusters, &cfg)?;

    let metrics_of = |m: &choice::RankMetrics| {
        json!({
            "decisions": m.decisions,
            "p_at_1": m.p_at_1,
            "mrr": m.mrr,
            "mean_rank": m.mean_rank,
            "per_k": m.per_k.iter().map(|(k, v)| {
                (k.to_string(), json!({
                    "decisions": v.decisions,
                    "p_at_1": v.p_at_1,
                    "mrr": v.mrr,
                    "mean_rank": v.mean_rank,
                }))
            }).collect::<serde_json::Map<_, _>>(),
        })
    };
    let mut metrics = metrics_of(&result.model);
    metrics["subset"] = json!(subset.name());
    metrics["per_category"] = json!(per_category);
    metrics["train_decisions"] = json!(result.train_decisions);
    metrics["test_decisions"] = json!(result.test_decisions);
    metrics["weights"] = json!(result.weights);
    metrics["rank_convention"] = json!("fractional rank (rank-1)/(k-1), ties averaged");
    metrics["split"] = json!("75/25 by cluster hash");
    metrics["baselines"] = result
        .baselines
        .iter()
        .map(|(name, m)| (name.to_string(), metrics_of(m)))
        .collect::<serde_json::Map<_, _>>()
        .into();
    out.write(
        "metrics.json",
        serde_json::to_string_pretty(&metrics)
            .map_err(|e| Error::invalid(e.to_string()))?
            .as_bytes(),
    )?;

    let mut features = Vec::new();
    choice::write_features_csv(&mut features, &g, &clusters)?;
    out.write("features.csv", &features)?;
    out.commit()
}

pub fn syngen_cmd(config: &Path, seed: u64, out_dir: &Path) -> Result<()> {
    let mut out = OutDir::create(out_dir, "syngen")?;
    out.record_input(config)?;
    out.record_seed("generate", seed);
    let text = fs::read_to_string(config)?;
    let mut cfg = syngen::parse_config(&text)?;
    cfg.seed = seed;
    let generated = syngen::generate(&cfg)?;

    // Stage through a scratch dir so the outputs land atomically with the
    // rest of the run.
    let scratch = out_dir.join(".tmp.syngen");
    generated.write_to_dir(&scratch)?;
    for name in [
        "events.csv",
        "contacts.csv",
        "clusters.csv",
        "ratings.csv",
        "choice_clusters.csv",
        "truth.json",
    ] {
        let bytes = fs::read(scratch.join(name))?;
        out.write(name, &bytes)?;
    }
    fs::remove_dir_all(&scratch)?;
    info!(
        "generated {} events, {} contacts, {} listings, {} choice rows",
        generated.truth.counts.events,
        generated.truth.counts.contacts,
        generated.truth.counts.listings,
        generated.truth.counts.choice_rows
    );
    out.commit()
}

pub fn report_cmd(input: &Path, out_dir: &Path) -> Result<()> {
    let mut out = OutDir::create(out_dir, "report")?;
    let mut included: Vec<&str> = Vec::new();
    let mut skipped: Vec<&str> = Vec::new();

    // Pure collation: copy tables into their report names and checksum them.
    let mut checksums = serde_json::Map::new();
    let mut collate = |src: &'static str, dst: &'static str, out: &mut OutDir| -> Result<bool> {
        let path = input.join(src);
        if !path.exists() {
            return Ok(false);
        }
        let bytes = fs::read(&path)?;
        checksums.insert(dst.to_string(), json!(sha256_file(&path)?));
        out.write(dst, &bytes)?;
        Ok(true)
    };
    for (src, dst) in [
        ("stats.csv", "network_stats.csv"),
        ("bba.csv", "messages_between_buyers.csv"),
        ("census.csv", "directed_configurations.csv"),
    ] {
        if collate(src, dst, &mut out)? {
            included.push(src);
        } else {
            skipped.push(src);
        }
    }

    // Choice results: one row per feature set / baseline.
    let metrics_path = input.join("metrics.json");
    if metrics_path.exists() {
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&metrics_path)?)
            .map_err(|e| Error::invalid(format!("metrics.json: {e}")))?;
        let mut csv = String::from("feature_set,p_at_1,mrr,mean_rank\n");
        let row = |v: &serde_json::Value| {
            (
                v["p_at_1"].as_f64().unwrap_or(f64::NAN),
                v["mrr"].as_f64().unwrap_or(f64::NAN),
                v["mean_rank"].as_f64().unwrap_or(f64::NAN),
            )
        };
        let (p, mrr, mr) = row(&value);
        let _ = writeln!(
            csv,
            "{},{p},{mrr},{mr}",
            value["subset"].as_str().unwrap_or("model")
        );
        if let Some(baselines) = value["baselines"].as_object() {
            for (name, v) in baselines {
                let (p, mrr, mr) = row(v);
                let _ = writeln!(csv, "{name},{p},{mrr},{mr}");
            }
        }
        checksums.insert(
            "choice_results.csv".to_string(),
            json!(sha256_file(&metrics_path)?),
        );
        out.write("choice_results.csv", csv.as_bytes())?;
        included.push("metrics.json");
    } else {
        skipped.push("metrics.json");
    }

    if included.is_empty() {
        return Err(Error::invalid(format!(
            "nothing to collate under {}",
            input.display()
        )));
    }
    out.write(
        "checksums.json",
        serde_json::to_string_pretty(&serde_json::Value::Object(checksums))
            .map_err(|e| Error::invalid(e.to_string()))?
            .as_bytes(),
    )?;
    out.record_config("included", included.join(","));
    out.record_config("skipped", skipped.join(","));
    out.commit()
}
