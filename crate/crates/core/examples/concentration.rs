//! Lorenz curves, Gini indices and top shares for seller and buyer volumes.
//!
//! cargo run --example concentration

use artrank::centrality::{rank_users, RankConfig};
use artrank::econometrics::{buyer_volumes, lorenz, seller_volumes, top_share};
use artrank::graph::build_network;
use artrank::synthetic::{
    pareto_volumes, two_sided_market, uniform_volumes, volume_market, MarketConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = two_sided_market(&MarketConfig::default(), 1);
    let metrics = rank_users(&build_network(&log)?, &RankConfig::default())?.metrics();
    for (label, volumes) in [
        ("sellers", seller_volumes(&metrics)),
        ("buyers", buyer_volumes(&metrics)),
    ] {
        let curve = lorenz(&volumes)?;
        println!(
            "{label}: n = {}, gini {:.3}, 80% of volume held by top {:.1}%",
            curve.n,
            curve.gini,
            100.0 * top_share(&volumes, 0.8)?
        );
        let deciles: Vec<String> = (0..=10)
            .map(|k| curve.points[k * curve.n / 10])
            .map(|(p, v)| format!("{p:.2}:{v:.3}"))
            .collect();
        println!("  lorenz {}", deciles.join(" "));
    }

    for (label, volumes) in [
        ("pareto", pareto_volumes(3000, 1.16, 100.0, 3)),
        ("uniform", uniform_volumes(3000, 100.0, 110.0, 3)),
    ] {
        let metrics = rank_users(
            &build_network(&volume_market(&volumes, 500, 3))?,
            &RankConfig::default(),
        )?
        .metrics();
        println!(
            "{label} seller gini {:.3}",
            lorenz(&seller_volumes(&metrics))?.gini
        );
    }
    Ok(())
}
