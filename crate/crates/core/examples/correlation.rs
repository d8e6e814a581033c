//! Kendall tau-b between all eight user metrics.
//!
//! cargo run --example correlation

use artrank::centrality::{rank_users, RankConfig};
use artrank::econometrics::correlation_matrix;
use artrank::graph::build_network;
use artrank::profiling::Metric;
use artrank::synthetic::{two_sided_market, MarketConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = two_sided_market(&MarketConfig::default(), 4);
    let metrics = rank_users(&build_network(&log)?, &RankConfig::default())?.metrics();
    let m = correlation_matrix(&metrics)?;

    print!("{:>13}", "");
    for b in Metric::ALL {
        print!("{:>13}", b.label());
    }
    println!();
    for a in Metric::ALL {
        print!("{:>13}", a.label());
        for b in Metric::ALL {
            match m.get(a, b) {
                Some(t) => print!("{t:>13.3}"),
                None => print!("{:>13}", "NA"),
            }
        }
        println!();
    }
    Ok(())
}
