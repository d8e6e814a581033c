//! Market summary statistics and plot-ready figure tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;

use rust_decimal::Decimal;
use serde::Serialize;

use crate::graph::CollectorArtistNetwork;
use crate::ingest::EventLog;
use crate::profiling::{Metric, UserMetrics, UserProfile};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("histogram base must be greater than 1, got {0}")]
    InvalidBase(f64),
    #[error("failed to write output: {0}")]
    Io(String),
}

/// A count with its share of active users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Share {
    pub count: usize,
    /// Exact fraction of active users (0 when there are none).
    pub fraction: f64,
    /// Rounded integer percent for display.
    pub percent: u32,
}

impl Share {
    fn of(count: usize, active: usize) -> Share {
        let fraction = if active == 0 {
            0.0
        } else {
            count as f64 / active as f64
        };
        Share {
            count,
            fraction,
            percent: (fraction * 100.0).round() as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketSummary {
    /// Distinct artwork ids among sales. A sales-only log cannot see
    /// unsold mints, so this is a lower bound on tokenized artworks.
    pub tokenized_count: usize,
    pub tokenized_is_lower_bound: bool,
    pub sold_count: usize,
    #[serde(serialize_with = "decimal_str")]
    pub sale_volume_usd: Decimal,
    #[serde(serialize_with = "decimal_str")]
    pub sale_volume_eth: Decimal,
    pub active_users: usize,
    pub creators: Share,
    pub sellers: Share,
    pub buyers: Share,
    pub dropped_buybacks: usize,
}

fn decimal_str<S: serde::Serializer>(d: &Decimal, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(d)
}

pub fn summarize(log: &EventLog, net: &CollectorArtistNetwork) -> MarketSummary {
    let nodes = net.nodes();
    let active = nodes.len();
    let count =
        |f: fn(crate::graph::RoleFlags) -> bool| (0..active).filter(|&i| f(nodes.roles(i))).count();
    let artworks: BTreeSet<&str> = log
        .events
        .iter()
        .filter_map(|e| e.artwork_id.as_deref())
        .collect();
    MarketSummary {
        tokenized_count: artworks.len(),
        tokenized_is_lower_bound: true,
        sold_count: log.len(),
        sale_volume_usd: log.events.iter().filter_map(|e| e.price_usd).sum(),
        sale_volume_eth: log.events.iter().filter_map(|e| e.price_eth).sum(),
        active_users: active,
        creators: Share::of(count(|r| r.minted), active),
        sellers: Share::of(count(|r| r.sold), active),
        buyers: Share::of(count(|r| r.bought), active),
        dropped_buybacks: net.dropped_buybacks(),
    }
}

impl MarketSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let bound = if self.tokenized_is_lower_bound {
            " (lower bound)"
        } else {
            ""
        };
        let _ = writeln!(
            s,
            "number of tokenized artworks: {}{bound}",
            self.tokenized_count
        );
        let _ = writeln!(s, "number of sold artworks: {}", self.sold_count);
        let _ = writeln!(
            s,
            "sale volume: {} ETH or {} USD",
            self.sale_volume_eth.round_dp(2),
            self.sale_volume_usd.round_dp(0)
        );
        let _ = writeln!(s, "number of active users: {}", self.active_users);
        for (label, share) in [
            ("created", self.creators),
            ("sold", self.sellers),
            ("bought", self.buyers),
        ] {
            let _ = writeln!(
                s,
                "number of users that {label} at least one artwork: {} ({}%)",
                share.count, share.percent
            );
        }
        if self.dropped_buybacks > 0 {
            let _ = writeln!(
                s,
                "buy-back sales left out of the network: {}",
                self.dropped_buybacks
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramDimension {
    /// Sales per user (in-degree).
    Sales,
    /// Purchases per user (out-degree).
    Purchases,
}

impl HistogramDimension {
    fn metric(self) -> Metric {
        match self {
            HistogramDimension::Sales => Metric::InDegree,
            HistogramDimension::Purchases => Metric::OutDegree,
        }
    }
}

/// Half-open bin `[lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Log-spaced histogram of the positive values of one count dimension.
/// Edges are `min · baseᵏ`; zero counts (users outside the dimension) are
/// not binned.
pub fn histogram_data(
    metrics: &[UserMetrics],
    dimension: HistogramDimension,
    base: f64,
) -> Result<Vec<Bin>, ReportError> {
    if !(base > 1.0 && base.is_finite()) {
        return Err(ReportError::InvalidBase(base));
    }
    let values: Vec<f64> = metrics
        .iter()
        .map(|u| u.get(dimension.metric()))
        .filter(|&v| v > 0.0)
        .collect();
    let Some(min) = values.iter().copied().reduce(f64::min) else {
        return Ok(Vec::new());
    };
    let max = values.iter().copied().fold(min, f64::max);
    let mut bins = Vec::new();
    let mut lower = min;
    loop {
        let upper = lower * base;
        bins.push(Bin {
            lower,
            upper,
            count: 0,
        });
        if upper > max {
            break;
        }
        lower = upper;
    }
    for v in values {
        let k = bins.partition_point(|b| b.upper <= v);
        let last = bins.len() - 1;
        bins[k.min(last)].count += 1;
    }
    Ok(bins)
}

pub fn write_histogram_csv<W: Write>(bins: &[Bin], out: W) -> Result<(), ReportError> {
    let err = |e: csv::Error| ReportError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lower", "upper", "count"]).map_err(err)?;
    for b in bins {
        w.write_record([
            b.lower.to_string(),
            b.upper.to_string(),
            b.count.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| ReportError::Io(e.to_string()))
}

/// One line per user across in-degree, authority, hub and out-degree,
/// each max-normalised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure5Row {
    pub user_id: String,
    pub in_degree: f64,
    pub authority: f64,
    pub hub: f64,
    pub out_degree: f64,
}

pub fn figure5_data(profiles: &[UserProfile]) -> Vec<Figure5Row> {
    profiles
        .iter()
        .map(|p| Figure5Row {
            user_id: p.user_id.clone(),
            in_degree: p.normalized[Metric::InDegree as usize],
            authority: p.normalized[Metric::Authority as usize],
            hub: p.normalized[Metric::Hub as usize],
            out_degree: p.normalized[Metric::OutDegree as usize],
        })
        .collect()
}

pub fn write_figure5_csv<W: Write>(rows: &[Figure5Row], out: W) -> Result<(), ReportError> {
    let err = |e: csv::Error| ReportError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "in_degree", "authority", "hub", "out_degree"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.user_id.clone(),
            r.in_degree.to_string(),
            r.authority.to_string(),
            r.hub.to_string(),
            r.out_degree.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| ReportError::Io(e.to_string()))
}
