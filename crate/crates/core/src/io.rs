//! Flat-file formats: events.csv, contacts.csv, id_map.csv, clusters.csv,
//! ratings.csv, choice_clusters.csv. All files are UTF-8 comma-separated with
//! a header row and no quoting of numeric fields.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{EventKind, RawEvent, RawPayload, TemporalMultigraph};

/// One product listing belonging to a product cluster.
#[derive(Clone, Debug)]
pub struct ListingRow {
    pub cluster_id: String,
    pub seller: u64,
    pub item_id: String,
    pub price: f64,
}

/// Share of positive reviews a seller has received, in percent.
#[derive(Clone, Debug)]
pub struct RatingRow {
    pub seller: u64,
    pub rating_percent: f64,
}

/// One transaction inside a buyer-seller cluster, with listing metadata.
#[derive(Clone, Debug)]
pub struct ChoiceRow {
    pub cluster_id: String,
    pub buyer: u64,
    pub seller: u64,
    pub purchase_date: i64,
    pub price: f64,
    pub rating_percent: f64,
    pub historical_sold: u64,
    pub inventory_sold: u64,
    pub insurance: bool,
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

fn malformed(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Malformed {
        file: file_name(path),
        line,
        msg: msg.into(),
    }
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse<T: std::str::FromStr>(path: &Path, line: u64, field: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| malformed(path, line, format!("cannot parse {field} from {raw:?}")))
}

/// Reads events.csv. Header: `kind,src,dst,timestamp,product_id,category_id,price,quantity`;
/// trade rows fill all columns, message rows leave the last four empty.
pub fn read_events(path: &Path, window: (i64, i64)) -> Result<Vec<RawEvent>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let mut events = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if rec.len() != 8 {
            return Err(malformed(
                path,
                line,
                format!("expected 8 fields, got {}", rec.len()),
            ));
        }
        let src: u64 = parse(path, line, "src", &rec[1])?;
        let dst: u64 = parse(path, line, "dst", &rec[2])?;
        if src == dst {
            return Err(Error::SelfLoop {
                file: file_name(path),
                line,
                node: src,
            });
        }
        let timestamp: i64 = parse(path, line, "timestamp", &rec[3])?;
        if timestamp < window.0 || timestamp > window.1 {
            return Err(Error::OutOfWindow {
                file: file_name(path),
                line,
                t: timestamp,
                start: window.0,
                end: window.1,
            });
        }
        let payload = match rec[0].trim() {
            "trade" => {
                let product_id = rec[4].trim();
                if product_id.is_empty() {
                    return Err(malformed(path, line, "trade row with empty product_id"));
                }
                let price: f64 = parse(path, line, "price", &rec[6])?;
                if !price.is_finite() || price <= 0.0 {
                    return Err(malformed(
                        path,
                        line,
                        format!("trade price {price} must be > 0"),
                    ));
                }
                let quantity: u32 = parse(path, line, "quantity", &rec[7])?;
                if quantity < 1 {
                    return Err(malformed(path, line, "trade quantity must be >= 1"));
                }
                RawPayload::Trade {
                    product_id: product_id.to_string(),
                    category_id: parse(path, line, "category_id", &rec[5])?,
                    price,
                    quantity,
                }
            }
            "message" => {
                if rec.iter().skip(4).any(|f| !f.trim().is_empty()) {
                    return Err(malformed(path, line, "message row with trade fields set"));
                }
                RawPayload::Message
            }
            other => {
                return Err(malformed(path, line, format!("unknown kind {other:?}")));
            }
        };
        events.push(RawEvent {
            src,
            dst,
            timestamp,
            payload,
        });
    }
    Ok(events)
}

/// Reads contacts.csv (`u,v`); pairs are unordered and deduplicated on load.
pub fn read_contacts(path: &Path) -> Result<Vec<(u64, u64)>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let mut pairs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if rec.len() != 2 {
            return Err(malformed(
                path,
                line,
                format!("expected 2 fields, got {}", rec.len()),
            ));
        }
        let u: u64 = parse(path, line, "u", &rec[0])?;
        let v: u64 = parse(path, line, "v", &rec[1])?;
        if u == v {
            return Err(Error::SelfLoop {
                file: file_name(path),
                line,
                node: u,
            });
        }
        pairs.push((u, v));
    }
    Ok(pairs)
}

/// Loads a graph from the two dataset files, validating every row and
/// remapping node ids densely.
pub fn load_dataset(
    event_file: &Path,
    contact_file: &Path,
    window: (i64, i64),
) -> Result<TemporalMultigraph> {
    let events = read_events(event_file, window)?;
    let contacts = read_contacts(contact_file)?;
    TemporalMultigraph::build(events, contacts, window)
}

/// Writes the external -> internal id map produced by ingestion.
pub fn write_id_map<W: Write>(mut w: W, g: &TemporalMultigraph) -> Result<()> {
    writeln!(w, "external_id,internal_id")?;
    for (internal, external) in g.external_ids().iter().enumerate() {
        writeln!(w, "{external},{internal}")?;
    }
    Ok(())
}

/// Re-emits a graph's events in events.csv format (external ids).
pub fn write_events<W: Write>(mut w: W, g: &TemporalMultigraph) -> Result<()> {
    writeln!(
        w,
        "kind,src,dst,timestamp,product_id,category_id,price,quantity"
    )?;
    for ev in g.all_events() {
        let src = g.external_id(ev.src);
        let dst = g.external_id(ev.dst);
        match (ev.kind, &ev.trade) {
            (EventKind::Trade, Some(t)) => writeln!(
                w,
                "trade,{src},{dst},{},{},{},{},{}",
                ev.timestamp,
                g.product_name(t.product),
                t.category,
                t.price,
                t.quantity
            )?,
            _ => writeln!(w, "message,{src},{dst},{},,,,", ev.timestamp)?,
        }
    }
    Ok(())
}

pub fn write_contacts<W: Write>(mut w: W, g: &TemporalMultigraph) -> Result<()> {
    writeln!(w, "u,v")?;
    for &(u, v) in g.contact_pairs() {
        writeln!(w, "{},{}", g.external_id(u), g.external_id(v))?;
    }
    Ok(())
}

/// Reads clusters.csv (`cluster_id,seller,item_id,price`).
pub fn read_listings(path: &Path) -> Result<Vec<ListingRow>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if rec.len() != 4 {
            return Err(malformed(
                path,
                line,
                format!("expected 4 fields, got {}", rec.len()),
            ));
        }
        let price: f64 = parse(path, line, "price", &rec[3])?;
        if !price.is_finite() || price <= 0.0 {
            return Err(malformed(
                path,
                line,
                format!("listing price {price} must be > 0"),
            ));
        }
        rows.push(ListingRow {
            cluster_id: rec[0].trim().to_string(),
            seller: parse(path, line, "seller", &rec[1])?,
            item_id: rec[2].trim().to_string(),
            price,
        });
    }
    Ok(rows)
}

/// Reads ratings.csv (`seller,rating_percent`).
pub fn read_ratings(path: &Path) -> Result<Vec<RatingRow>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let rating: f64 = parse(path, line, "rating_percent", &rec[1])?;
        if !(0.0..=100.0).contains(&rating) {
            return Err(malformed(
                path,
                line,
                format!("rating {rating} outside [0, 100]"),
            ));
        }
        rows.push(RatingRow {
            seller: parse(path, line, "seller", &rec[0])?,
            rating_percent: rating,
        });
    }
    Ok(rows)
}

/// Reads choice_clusters.csv
/// (`cluster_id,buyer,seller,purchase_date,price,rating_percent,historical_sold,inventory_sold,insurance`).
pub fn read_choice_rows(path: &Path) -> Result<Vec<ChoiceRow>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        if rec.len() != 9 {
            return Err(malformed(
                path,
                line,
                format!("expected 9 fields, got {}", rec.len()),
            ));
        }
        let insurance = match rec[8].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(malformed(
                    path,
                    line,
                    format!("insurance must be 0/1, got {other:?}"),
                ));
            }
        };
        rows.push(ChoiceRow {
            cluster_id: rec[0].trim().to_string(),
            buyer: parse(path, line, "buyer", &rec[1])?,
            seller: parse(path, line, "seller", &rec[2])?,
            purchase_date: parse(path, line, "purchase_date", &rec[3])?,
            price: parse(path, line, "price", &rec[4])?,
            rating_percent: parse(path, line, "rating_percent", &rec[5])?,
            historical_sold: parse(path, line, "historical_sold", &rec[6])?,
            inventory_sold: parse(path, line, "inventory_sold", &rec[7])?,
            insurance,
        });
    }
    Ok(rows)
}
