//! Authority and hub scores on a synthetic market, weighted and unweighted,
//! plus the trader score.
//!
//! cargo run --example hits_rankings

use artrank::centrality::{rank_users, write_rankings_csv, RankConfig, SortKey};
use artrank::graph::build_network;
use artrank::synthetic::{two_sided_market, MarketConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MarketConfig {
        artists: 40,
        collectors: 120,
        traders: 8,
        events: 600,
        ..MarketConfig::default()
    };
    let log = two_sided_market(&cfg, 42);
    let net = build_network(&log)?;
    let rankings = rank_users(&net, &RankConfig::default())?;
    for (label, run) in [
        ("weighted", rankings.weighted_run),
        ("unweighted", rankings.unweighted_run),
    ] {
        if let Some(run) = run {
            println!(
                "{label}: {:?} after {} iterations, residual {:.2e}",
                run.status, run.iterations_used, run.residual
            );
        }
    }

    let mut by_trader: Vec<_> = rankings.rows.iter().collect();
    by_trader.sort_by(|a, b| b.trader_score.total_cmp(&a.trader_score));
    println!("top traders:");
    for row in by_trader.iter().take(5) {
        println!(
            "  {:<16} w_auth {:.4}  w_hub {:.4}  score {:.5}",
            row.metrics.user_id, row.metrics.w_authority, row.metrics.w_hub, row.trader_score
        );
    }

    let mut out = Vec::new();
    write_rankings_csv(&rankings, SortKey::WAuthority, &mut out)?;
    println!("top artists by weighted authority:");
    for line in String::from_utf8(out)?.lines().take(6) {
        println!("  {line}");
    }
    Ok(())
}
