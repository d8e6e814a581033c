//! Summary counts, degree histograms and the per-user figure table.
//!
//! cargo run --example market_report

use artrank::centrality::{rank_users, RankConfig};
use artrank::graph::build_network;
use artrank::profiling::{build_profiles, ProfileConfig};
use artrank::report::{figure5_data, histogram_data, summarize, HistogramDimension};
use artrank::synthetic::{two_sided_market, MarketConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = two_sided_market(&MarketConfig::default(), 6);
    let net = build_network(&log)?;
    print!("{}", summarize(&log, &net).to_text());

    let rankings = rank_users(&net, &RankConfig::default())?;
    let metrics = rankings.metrics();
    for dim in [HistogramDimension::Sales, HistogramDimension::Purchases] {
        println!("{dim:?}:");
        for bin in histogram_data(&metrics, dim, 2.0)? {
            println!(
                "  [{:>5}, {:>5})  {}",
                bin.lower,
                bin.upper,
                "#".repeat(bin.count.div_ceil(5))
            );
        }
    }

    let profiles = build_profiles(&rankings, &ProfileConfig::default())?;
    let mut rows = figure5_data(&profiles);
    rows.sort_by(|a, b| b.authority.total_cmp(&a.authority));
    for r in rows.iter().take(5) {
        println!(
            "{:<16} in {:.2}  auth {:.2}  hub {:.2}  out {:.2}",
            r.user_id, r.in_degree, r.authority, r.hub, r.out_degree
        );
    }
    Ok(())
}
