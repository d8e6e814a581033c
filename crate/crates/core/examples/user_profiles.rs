//! Roles, A/B/C codes and pattern queries.
//!
//! cargo run --example user_profiles

use std::collections::BTreeMap;

use artrank::centrality::{rank_users, RankConfig};
use artrank::graph::build_network;
use artrank::profiling::{
    build_profiles, match_code, patterns, top_traders, CodeScope, ProfileConfig,
};
use artrank::synthetic::{planted_table, two_sided_market, MarketConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = two_sided_market(&MarketConfig::default(), 5);
    let rankings = rank_users(&build_network(&log)?, &RankConfig::default())?;
    let profiles = build_profiles(&rankings, &ProfileConfig::default())?;

    let mut roles = BTreeMap::new();
    for p in &profiles {
        *roles.entry(p.role.as_str()).or_insert(0) += 1;
    }
    println!("roles: {roles:?}");

    for (name, pattern, scope) in [
        ("blue chip", patterns::BLUE_CHIP, CodeScope::Artist),
        ("rising star", patterns::RISING_STAR, CodeScope::Artist),
        ("volume seller", patterns::VOLUME_SELLER, CodeScope::Artist),
        (
            "selective collector",
            patterns::SELECTIVE_COLLECTOR,
            CodeScope::Collector,
        ),
        (
            "bulk collector",
            patterns::BULK_COLLECTOR,
            CodeScope::Collector,
        ),
        ("small trader", patterns::SMALL_TRADER, CodeScope::Full),
    ] {
        let hits = match_code(&profiles, pattern, scope)?;
        let sample: Vec<&str> = hits.iter().take(3).map(|p| p.user_id.as_str()).collect();
        println!("{name:<20} {pattern:<9} {:>4}  {sample:?}", hits.len());
    }
    println!("top traders: {}", top_traders(&profiles).len());

    let planted = planted_table(0);
    let profiles = build_profiles(&planted.rankings, &ProfileConfig::default())?;
    let found: Vec<&str> = match_code(&profiles, patterns::RISING_STAR, CodeScope::Artist)?
        .iter()
        .map(|p| p.user_id.as_str())
        .collect();
    println!(
        "planted rising stars {:?}, found {found:?}",
        planted.rising_star
    );
    Ok(())
}
