//! Price of trust: per-item and per-seller price deviation from product
//! cluster medians versus seller rating, fitted with a shifted power
//! function d(r) = a * (r/100)^b + c.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::io::{ListingRow, RatingRow};

/// One (rating, deviation) observation; `weight` is the item count behind it.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DeviationPoint {
    /// Seller rating in percent.
    pub rating: f64,
    /// 100 * (price - cluster median) / cluster median.
    pub deviation: f64,
    pub weight: u64,
}

/// Per-item deviations plus bookkeeping about dropped inputs.
#[derive(Clone, Debug)]
pub struct DeviationReport {
    pub points: Vec<DeviationPoint>,
    /// Items skipped because their seller has no rating.
    pub skipped_missing_rating: u64,
    /// Clusters dropped for having fewer than 2 listings.
    pub dropped_singleton_clusters: u64,
}

/// Least-squares fit of d(r) = a * (r/100)^b + c.
#[derive(Clone, Debug)]
pub struct PowerFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_squared: f64,
    /// Rating at which the fitted deviation crosses zero, when it does so
    /// within (0, 100].
    pub zero_crossing: Option<f64>,
    /// Local elasticity of price with respect to rating, evaluated at the
    /// weighted median rating of the input points.
    pub elasticity_at_median: f64,
    /// Log-log slope of the fitted relative price across the data's rating
    /// range; `None` when the fitted price index is not positive throughout.
    pub elasticity_loglog: Option<f64>,
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn rating_map(ratings: &[RatingRow]) -> HashMap<u64, f64> {
    ratings
        .iter()
        .map(|r| (r.seller, r.rating_percent))
        .collect()
}

/// Per-item deviation from the cluster median price. Clusters with a single
/// listing are dropped; items whose seller lacks a rating are skipped and
/// counted.
pub fn price_deviations(listings: &[ListingRow], ratings: &[RatingRow]) -> DeviationReport {
    let ratings = rating_map(ratings);
    let mut clusters: HashMap<&str, Vec<&ListingRow>> = HashMap::new();
    for row in listings {
        clusters.entry(&row.cluster_id).or_default().push(row);
    }
    let mut cluster_ids: Vec<&str> = clusters.keys().copied().collect();
    cluster_ids.sort_unstable();

    let mut report = DeviationReport {
        points: Vec::new(),
        skipped_missing_rating: 0,
        dropped_singleton_clusters: 0,
    };
    for id in cluster_ids {
        let members = &clusters[id];
        if members.len() < 2 {
            report.dropped_singleton_clusters += 1;
            continue;
        }
        let mut prices: Vec<f64> = members.iter().map(|m| m.price).collect();
        prices.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = median_of_sorted(&prices);
        for m in members {
            let Some(&rating) = ratings.get(&m.seller) else {
                report.skipped_missing_rating += 1;
                continue;
            };
            report.points.push(DeviationPoint {
                rating,
                deviation: 100.0 * (m.price - median) / median,
                weight: 1,
            });
        }
    }
    report
}

/// Per-seller average of the seller's per-item deviations across all
/// clusters; sellers with fewer than `min_items` rated items are excluded.
pub fn seller_deviation_profile(
    listings: &[ListingRow],
    ratings: &[RatingRow],
    min_items: usize,
) -> Vec<DeviationPoint> {
    let rating_of = rating_map(ratings);
    let mut clusters: HashMap<&str, Vec<&ListingRow>> = HashMap::new();
    for row in listings {
        clusters.entry(&row.cluster_id).or_default().push(row);
    }
    let mut cluster_ids: Vec<&str> = clusters.keys().copied().collect();
    cluster_ids.sort_unstable();
    let mut per_seller: HashMap<u64, (f64, u64)> = HashMap::new();
    for id in cluster_ids {
        let members = &clusters[id];
        if members.len() < 2 {
            continue;
        }
        let mut prices: Vec<f64> = members.iter().map(|m| m.price).collect();
        prices.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = median_of_sorted(&prices);
        for m in members {
            if !rating_of.contains_key(&m.seller) {
                continue;
            }
            let d = 100.0 * (m.price - median) / median;
            let entry = per_seller.entry(m.seller).or_insert((0.0, 0));
            entry.0 += d;
            entry.1 += 1;
        }
    }
    let mut sellers: Vec<u64> = per_seller.keys().copied().collect();
    sellers.sort_unstable();
    sellers
        .into_iter()
        .filter_map(|s| {
            let (sum, count) = per_seller[&s];
            if (count as usize) < min_items {
                return None;
            }
            Some(DeviationPoint {
                rating: rating_of[&s],
                deviation: sum / count as f64,
                weight: count,
            })
        })
        .collect()
}

/// Groups points into rating bins (0.1 percentage points over [90, 100],
/// 1.0 below) and returns the weighted mean deviation per bin. The figures
/// and the fit both run on these bucketed averages.
pub fn bucket_deviations(points: &[DeviationPoint]) -> Vec<DeviationPoint> {
    let bin_of = |rating: f64| -> i64 {
        if rating >= 90.0 {
            900 + ((rating - 90.0) * 10.0).floor() as i64
        } else {
            rating.floor() as i64
        }
    };
    let center_of = |bin: i64| -> f64 {
        if bin >= 900 {
            90.0 + (bin - 900) as f64 / 10.0 + 0.05
        } else {
            bin as f64 + 0.5
        }
    };
    let mut bins: HashMap<i64, (f64, u64)> = HashMap::new();
    for p in points {
        let entry = bins.entry(bin_of(p.rating)).or_insert((0.0, 0));
        entry.0 += p.deviation * p.weight as f64;
        entry.1 += p.weight;
    }
    let mut keys: Vec<i64> = bins.keys().copied().collect();
    keys.sort_unstable();
    keys.into_iter()
        .map(|k| {
            let (sum, w) = bins[&k];
            DeviationPoint {
                rating: center_of(k),
                deviation: sum / w as f64,
                weight: w,
            }
        })
        .collect()
}

/// Weighted least squares of (a, c) for a fixed exponent; returns
/// (a, c, residual sum of squares).
fn solve_fixed_b(points: &[DeviationPoint], b: f64) -> Option<(f64, f64, f64)> {
    let (mut sww, mut swx, mut swxx, mut swd, mut swxd) = (0.0f64, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let w = p.weight as f64;
        let x = (p.rating / 100.0).powf(b);
        sww += w;
        swx += w * x;
        swxx += w * x * x;
        swd += w * p.deviation;
        swxd += w * x * p.deviation;
    }
    let det = swxx * sww - swx * swx;
    if det.abs() < 1e-12 {
        return None;
    }
    let a = (swxd * sww - swx * swd) / det;
    let c = (swxx * swd - swx * swxd) / det;
    let mut rss = 0.0;
    for p in points {
        let w = p.weight as f64;
        let x = (p.rating / 100.0).powf(b);
        rss += w * (p.deviation - (a * x + c)).powi(2);
    }
    Some((a, c, rss))
}

fn weighted_median_rating(points: &[DeviationPoint]) -> f64 {
    let mut sorted: Vec<(f64, u64)> = points.iter().map(|p| (p.rating, p.weight)).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: u64 = sorted.iter().map(|(_, w)| w).sum();
    let mut acc = 0u64;
    for (rating, w) in &sorted {
        acc += w;
        if acc * 2 >= total {
            return *rating;
        }
    }
    sorted.last().map(|(r, _)| *r).unwrap_or(0.0)
}

fn finish_fit(points: &[DeviationPoint], a: f64, b: f64, c: f64, rss: f64) -> PowerFit {
    let total_w: f64 = points.iter().map(|p| p.weight as f64).sum();
    let mean_d: f64 = points
        .iter()
        .map(|p| p.weight as f64 * p.deviation)
        .sum::<f64>()
        / total_w;
    let ss_tot: f64 = points
        .iter()
        .map(|p| p.weight as f64 * (p.deviation - mean_d).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - rss / ss_tot
    } else {
        1.0
    };

    let zero_crossing = if a != 0.0 {
        let ratio = -c / a;
        if ratio > 0.0 {
            let x = ratio.powf(1.0 / b);
            (x > 0.0 && x <= 1.0).then_some(100.0 * x)
        } else {
            None
        }
    } else {
        None
    };

    let r_med = weighted_median_rating(points);
    let x_med = (r_med / 100.0).powf(b);
    let elasticity_at_median = b * a * x_med / (a * x_med + c + 100.0);

    // Log-log slope of the fitted relative price 1 + d(r)/100 across the
    // observed rating range.
    let r_lo = points
        .iter()
        .map(|p| p.rating)
        .fold(f64::INFINITY, f64::min);
    let r_hi = points
        .iter()
        .map(|p| p.rating)
        .fold(f64::NEG_INFINITY, f64::max);
    let price_index = |r: f64| 100.0 + a * (r / 100.0).powf(b) + c;
    let elasticity_loglog = if price_index(r_lo) > 0.0 && price_index(r_hi) > 0.0 && r_hi > r_lo {
        Some((price_index(r_hi).ln() - price_index(r_lo).ln()) / (r_hi.ln() - r_lo.ln()))
    } else {
        None
    };

    PowerFit {
        a,
        b,
        c,
        r_squared,
        zero_crossing,
        elasticity_at_median,
        elasticity_loglog,
    }
}

/// Fit restricted to the given exponent grid (no local refinement).
pub fn fit_power_on_grid(points: &[DeviationPoint], grid: &[f64]) -> Result<PowerFit> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.rating).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid(format!(
            "power fit needs >= 3 distinct rating values, got {}",
            distinct.len()
        )));
    }
    let mut best: Option<(f64, f64, f64, f64)> = None; // (b, a, c, rss)
    for &b in grid {
        if let Some((a, c, rss)) = solve_fixed_b(points, b) {
            if best.is_none() || rss < best.unwrap().3 {
                best = Some((b, a, c, rss));
            }
        }
    }
    let (b, a, c, rss) =
        best.ok_or_else(|| Error::invalid("power fit degenerate on every grid exponent"))?;
    Ok(finish_fit(points, a, b, c, rss))
}

/// Default exponent grid: 200 log-spaced values over [1, 400].
pub fn default_exponent_grid() -> Vec<f64> {
    let steps = 200;
    let (lo, hi) = (1.0f64.ln(), 400.0f64.ln());
    (0..steps)
        .map(|i| (lo + (hi - lo) * i as f64 / (steps - 1) as f64).exp())
        .collect()
}

/// Grid search over the default exponent grid followed by local ternary
/// refinement of b; only improvements are accepted, so the result is at
/// least as good as the grid optimum.
pub fn fit_power(points: &[DeviationPoint]) -> Result<PowerFit> {
    let grid = default_exponent_grid();
    let coarse = fit_power_on_grid(points, &grid)?;

    let idx = grid
        .iter()
        .position(|&b| (b - coarse.b).abs() < 1e-12)
        .unwrap_or(0);
    let mut lo = if idx == 0 { grid[0] } else { grid[idx - 1] };
    let mut hi = if idx + 1 >= grid.len() {
        grid[grid.len() - 1]
    } else {
        grid[idx + 1]
    };
    let rss_at = |b: f64| solve_fixed_b(points, b).map(|(_, _, rss)| rss);
    let mut best_b = coarse.b;
    let mut best_rss = match rss_at(coarse.b) {
        Some(r) => r,
        None => return Ok(coarse),
    };
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        let r1 = rss_at(m1).unwrap_or(f64::INFINITY);
        let r2 = rss_at(m2).unwrap_or(f64::INFINITY);
        if r1 < r2 {
            hi = m2;
            if r1 < best_rss {
                best_rss = r1;
                best_b = m1;
            }
        } else {
            lo = m1;
            if r2 < best_rss {
                best_rss = r2;
                best_b = m2;
            }
        }
    }
    let (a, c, rss) = solve_fixed_b(points, best_b).expect("refined exponent stays solvable");
    Ok(finish_fit(points, a, best_b, c, rss))
}
