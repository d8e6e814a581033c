//! Seeded synthetic markets for demos, tests and benchmarks.
//!
//! Every generator takes an explicit seed and is deterministic for it.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Pareto};
use rust_decimal::prelude::FromPrimitive;
use rust_decimal::Decimal;

use crate::centrality::{RankingRow, Rankings};
use crate::ingest::{EventLog, Market, SaleEvent};
use crate::profiling::{Level, Metric, Role, UserMetrics};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap()
}

/// Fixed conversion used to fill `price_eth` on synthetic events.
pub const SYNTHETIC_USD_PER_ETH: u32 = 2000;

fn usd(x: f64) -> Decimal {
    Decimal::from_f64(x).unwrap_or_default().round_dp(2)
}

fn event(
    seller: &str,
    buyer: &str,
    creator: &str,
    price_usd: Decimal,
    timestamp: DateTime<Utc>,
    artwork: String,
) -> SaleEvent {
    SaleEvent {
        seller_id: seller.to_string(),
        buyer_id: buyer.to_string(),
        creator_id: creator.to_string(),
        price_eth: Some((price_usd / Decimal::from(SYNTHETIC_USD_PER_ETH)).round_dp(6)),
        price_usd: Some(price_usd),
        timestamp,
        artwork_id: Some(artwork),
        market: if seller == creator {
            Market::Primary
        } else {
            Market::Secondary
        },
    }
}

/// Shape of a two-sided art market.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketConfig {
    /// Users who only create.
    pub artists: usize,
    /// Users who only buy (and may resell).
    pub collectors: usize,
    /// Users who both create and buy.
    pub traders: usize,
    pub events: usize,
    /// Probability that a sale resells an already-sold artwork.
    pub secondary_share: f64,
    pub median_price_usd: f64,
    /// Log-scale spread of prices.
    pub price_sigma: f64,
    /// Pareto shape of user activity weights; smaller is more skewed.
    pub activity_alpha: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            artists: 300,
            collectors: 800,
            traders: 30,
            events: 5_000,
            secondary_share: 0.2,
            median_price_usd: 1_500.0,
            price_sigma: 1.2,
            activity_alpha: 1.16,
        }
    }
}

/// Generates a market where buyers and creators are picked with
/// Pareto-distributed activity and prices are log-normal, scaled up for
/// popular artists.
pub fn two_sided_market(cfg: &MarketConfig, seed: u64) -> EventLog {
    let mut rng = rng(seed);
    let creators: Vec<String> = (0..cfg.artists)
        .map(|i| format!("artist-{i:05}"))
        .chain((0..cfg.traders).map(|i| format!("trader-{i:05}")))
        .collect();
    let buyers: Vec<String> = (0..cfg.collectors)
        .map(|i| format!("collector-{i:05}"))
        .chain((0..cfg.traders).map(|i| format!("trader-{i:05}")))
        .collect();
    if creators.is_empty() || buyers.is_empty() || cfg.events == 0 {
        return EventLog::from_events("synthetic", Vec::new());
    }
    let activity = Pareto::new(1.0, cfg.activity_alpha).expect("valid Pareto");
    let creator_w: Vec<f64> = (0..creators.len())
        .map(|_| activity.sample(&mut rng))
        .collect();
    let buyer_w: Vec<f64> = (0..buyers.len())
        .map(|_| activity.sample(&mut rng))
        .collect();
    let pick_creator = WeightedIndex::new(&creator_w).expect("positive weights");
    let pick_buyer = WeightedIndex::new(&buyer_w).expect("positive weights");
    let price = LogNormal::new(cfg.median_price_usd.ln(), cfg.price_sigma).expect("valid");

    // (artwork id, creator index, current owner)
    let mut sold: Vec<(String, usize, String)> = Vec::new();
    let mut events = Vec::with_capacity(cfg.events);
    let mut t = epoch();
    while events.len() < cfg.events {
        t += Duration::seconds(rng.random_range(30..600));
        let buyer = &buyers[pick_buyer.sample(&mut rng)];
        let resale = !sold.is_empty() && rng.random_bool(cfg.secondary_share);
        if resale {
            let k = rng.random_range(0..sold.len());
            let (art, c, owner) = &sold[k];
            let creator = &creators[*c];
            if owner == buyer || creator == buyer {
                continue;
            }
            let p = price.sample(&mut rng) * creator_w[*c].sqrt() * 1.5;
            events.push(event(owner, buyer, creator, usd(p), t, art.clone()));
            sold[k].2 = buyer.clone();
        } else {
            let c = pick_creator.sample(&mut rng);
            let creator = &creators[c];
            if creator == buyer {
                continue;
            }
            let art = format!("token-{:06}", sold.len());
            let p = price.sample(&mut rng) * creator_w[c].sqrt();
            events.push(event(creator, buyer, creator, usd(p), t, art.clone()));
            sold.push((art, c, buyer.clone()));
        }
    }
    EventLog::from_events("synthetic", events)
}

/// Heavy-tailed per-user volumes, Pareto with minimum `scale`.
pub fn pareto_volumes(n: usize, alpha: f64, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    let d = Pareto::new(scale, alpha).expect("valid Pareto");
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

/// Near-equal per-user volumes drawn uniformly from `[lo, hi)`.
pub fn uniform_volumes(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// A primary-market log in which artist `i` earns exactly `volumes[i]`
/// (to the cent), split over one to three sales to random collectors.
pub fn volume_market(volumes: &[f64], collectors: usize, seed: u64) -> EventLog {
    let mut rng = rng(seed);
    let collectors = collectors.max(1);
    let mut events = Vec::new();
    let mut t = epoch();
    for (i, &v) in volumes.iter().enumerate() {
        let artist = format!("artist-{i:05}");
        let total = usd(v);
        let parts = rng.random_range(1..=3u32);
        let mut left = total;
        for p in 0..parts {
            let amount = if p + 1 == parts {
                left
            } else {
                (total / Decimal::from(parts)).round_dp(2)
            };
            left -= amount;
            t += Duration::seconds(60);
            let buyer = format!("collector-{:05}", rng.random_range(0..collectors));
            let art = format!("token-{i:05}-{p}");
            events.push(event(&artist, &buyer, &artist, amount, t, art));
        }
    }
    EventLog::from_events("synthetic-volume", events)
}

/// Metric table with known roles and artist codes.
#[derive(Debug, Clone)]
pub struct PlantedTable {
    pub rankings: Rankings,
    pub roles: Vec<Role>,
    /// Artist code `AAAA`.
    pub blue_chip: Vec<String>,
    /// Artist code `CCAB`.
    pub rising_star: Vec<String>,
    /// Artist code `AC**`.
    pub volume_seller: Vec<String>,
}

const PLANTED_USERS: usize = 100;

/// 100 users with planted quadrants and codes.
///
/// Each metric column holds distinct values, so its ECDF levels split
/// exactly into 10 A, 40 B and 50 C users. Users 0–2 are blue-chip, 3–5
/// rising stars and 6–8 volume sellers. The five largest in-degrees belong
/// to users {0, 1, 2, 6, 7} and the five largest out-degrees to
/// {0, 1, 9, 10, 11}, giving traders {0, 1}, pure sellers {2, 6, 7}, pure
/// buyers {9, 10, 11} at the 0.95 threshold. No other user matches the
/// three artist patterns.
pub fn planted_table(seed: u64) -> PlantedTable {
    use Level::{A, B, C};
    let n = PLANTED_USERS;
    let mut rng = rng(seed);
    // planted[metric][user]
    let mut planted: Vec<Vec<Option<Level>>> = vec![vec![None; n]; 8];
    let mut plant = |users: &[usize], metrics: &[Metric], levels: &[Level]| {
        for &u in users {
            for (&m, &l) in metrics.iter().zip(levels) {
                planted[m as usize][u] = Some(l);
            }
        }
    };
    plant(&[0, 1, 2], &Metric::ARTIST, &[A, A, A, A]);
    plant(&[3, 4, 5], &Metric::ARTIST, &[C, C, A, B]);
    plant(&[6, 7, 8], &Metric::ARTIST, &[A, C, B, B]);
    plant(&[0, 1, 9, 10, 11], &[Metric::OutDegree], &[A]);

    let top_sellers = [0usize, 1, 2, 6, 7];
    let top_buyers = [0usize, 1, 9, 10, 11];
    let artist_planted = 9;

    let levels = loop {
        let filled: Vec<Vec<Level>> = planted
            .iter()
            .map(|col| fill_levels(col, &mut rng))
            .collect();
        let artist_code = |u: usize| Metric::ARTIST.map(|m| filled[m as usize][u]);
        let clash = (artist_planted..n).any(|u| {
            let c = artist_code(u);
            c == [A, A, A, A] || c == [C, C, A, B] || (c[0] == A && c[1] == C)
        });
        if !clash {
            break filled;
        }
    };

    // ranks 1..=n per metric, consistent with levels
    let mut ranks = vec![vec![0usize; n]; 8];
    for m in Metric::ALL {
        let col = &levels[m as usize];
        let priority: &[usize] = match m {
            Metric::InDegree => &top_sellers,
            Metric::OutDegree => &top_buyers,
            _ => &[],
        };
        let mut next = 1;
        for level in [C, B, A] {
            let mut members: Vec<usize> = (0..n).filter(|&u| col[u] == level).collect();
            members.shuffle(&mut rng);
            // priority users take the highest ranks of their level
            members.sort_by_key(|u| priority.contains(u));
            for u in members {
                ranks[m as usize][u] = next;
                next += 1;
            }
        }
    }

    let value = |m: Metric, rank: usize| -> f64 {
        let r = rank as f64;
        match m {
            Metric::InDegree | Metric::OutDegree => r,
            Metric::InStrength | Metric::OutStrength => 25.0 * r * r,
            _ => r / n as f64,
        }
    };
    let rows = (0..n)
        .map(|u| {
            let vals = Metric::ALL.map(|m| value(m, ranks[m as usize][u]));
            let metrics = UserMetrics::from_values(format!("user-{u:03}"), vals);
            RankingRow {
                trader_score: metrics.w_authority * metrics.w_hub,
                metrics,
            }
        })
        .collect();
    let roles = (0..n)
        .map(
            |u| match (top_sellers.contains(&u), top_buyers.contains(&u)) {
                (true, true) => Role::Trader,
                (true, false) => Role::PureSeller,
                (false, true) => Role::PureBuyer,
                (false, false) => Role::ByStander,
            },
        )
        .collect();
    let ids = |r: std::ops::Range<usize>| r.map(|u| format!("user-{u:03}")).collect();
    PlantedTable {
        rankings: Rankings {
            rows,
            weighted_run: None,
            unweighted_run: None,
        },
        roles,
        blue_chip: ids(0..3),
        rising_star: ids(3..6),
        volume_seller: ids(6..9),
    }
}

/// Completes a column to exactly 10% A, 40% B, 50% C.
fn fill_levels(col: &[Option<Level>], rng: &mut ChaCha8Rng) -> Vec<Level> {
    let n = col.len();
    let quota = [
        (Level::A, n / 10),
        (Level::B, 4 * n / 10),
        (Level::C, n / 2),
    ];
    let mut pool: Vec<Level> = Vec::new();
    for (level, q) in quota {
        let used = col.iter().filter(|l| **l == Some(level)).count();
        pool.extend(std::iter::repeat_n(level, q - used));
    }
    pool.shuffle(rng);
    let mut pool = pool.into_iter();
    col.iter()
        .map(|l| l.unwrap_or_else(|| pool.next().expect("quota covers every slot")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let cfg = MarketConfig {
            events: 300,
            ..MarketConfig::default()
        };
        assert_eq!(two_sided_market(&cfg, 7), two_sided_market(&cfg, 7));
        assert_ne!(two_sided_market(&cfg, 7), two_sided_market(&cfg, 8));
        assert_eq!(
            pareto_volumes(10, 1.16, 1.0, 3),
            pareto_volumes(10, 1.16, 1.0, 3)
        );
    }

    #[test]
    fn market_events_are_valid() {
        let cfg = MarketConfig {
            events: 2_000,
            ..MarketConfig::default()
        };
        let log = two_sided_market(&cfg, 1);
        assert_eq!(log.len(), 2_000);
        assert!(log.events.iter().all(|e| e.buyer_id != e.seller_id));
        assert!(log.events.iter().all(|e| e.buyer_id != e.creator_id));
        assert!(log.events.iter().any(|e| e.market == Market::Secondary));
        assert!(log
            .events
            .windows(2)
            .all(|w| w[0].timestamp <= w[1].timestamp));
    }

    #[test]
    fn volume_market_preserves_volumes() {
        let vols = [10.0, 250.55, 3.01];
        let log = volume_market(&vols, 5, 2);
        for (i, v) in vols.iter().enumerate() {
            let id = format!("artist-{i:05}");
            let total: Decimal = log
                .events
                .iter()
                .filter(|e| e.creator_id == id)
                .filter_map(|e| e.price_usd)
                .sum();
            assert_eq!(total, usd(*v));
        }
    }

    #[test]
    fn planted_levels_have_exact_quotas() {
        let t = planted_table(11);
        assert_eq!(t.rankings.len(), 100);
        for m in Metric::ALL {
            let mut col = t.rankings.column(m);
            col.sort_by(f64::total_cmp);
            col.dedup();
            assert_eq!(col.len(), 100, "{m:?} has ties");
        }
    }
}
