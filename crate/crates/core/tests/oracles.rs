mod common;

use std::collections::HashMap;

use artrank::centrality::{degree_metrics, hits, rank_users, HitsConfig, HitsStatus, RankConfig};
use artrank::econometrics::{correlation_matrix, gini, kendall_tau, lorenz, top_share};
use artrank::graph::{adjacency, build_network, AdjacencyView, Weighting};
use artrank::ingest::{
    convert_currency, parse_events, write_events_csv, FieldMap, InputFormat, RateTable,
};
use artrank::profiling::{build_profiles, Metric, ProfileConfig, Role, UserMetrics};
use artrank::report::{figure5_data, histogram_data, HistogramDimension};
use artrank::synthetic::{pareto_volumes, two_sided_market, MarketConfig};
use chrono::NaiveDate;
use proptest::prelude::*;
use rand::Rng;
use rust_decimal::Decimal;

use common::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn hits_small_fixture_matches_eigendecomposition() {
    // c1 -> a1 (2), c1 -> a2 (1), c2 -> a1 (1); nodes c1, c2, a1, a2
    let edges = [(0, 2, 2.0), (0, 3, 1.0), (1, 2, 1.0)];
    let s = hits(
        &AdjacencyView::from_triplets(4, &edges).unwrap(),
        &HitsConfig::default(),
    )
    .unwrap();
    let (auth, hub) = hits_oracle(&dense(4, &edges));
    assert_eq!(s.status, HitsStatus::Converged);
    assert!(1.0 - cosine(&s.authority, &auth) <= 1e-8);
    assert!(1.0 - cosine(&s.hub, &hub) <= 1e-8);
    assert!(s.authority[2] > s.authority[3]);
    assert!(s.hub[0] > s.hub[1]);
    assert_eq!((s.authority[0], s.hub[2]), (0.0, 0.0));
}

#[test]
fn hits_star() {
    let edges: Vec<_> = (1..=4).map(|a| (0, a, 1.0)).collect();
    let s = hits(
        &AdjacencyView::from_triplets(5, &edges).unwrap(),
        &HitsConfig::default(),
    )
    .unwrap();
    assert!(close(&s.authority, &[0.0, 0.5, 0.5, 0.5, 0.5], 1e-12));
    assert!(close(&s.hub, &[1.0, 0.0, 0.0, 0.0, 0.0], 1e-12));
}

#[test]
fn hits_on_network_agrees_with_dense_oracle() {
    let log = two_sided_market(
        &MarketConfig {
            artists: 20,
            collectors: 40,
            traders: 5,
            events: 300,
            ..MarketConfig::default()
        },
        11,
    );
    let net = build_network(&log).unwrap();
    let cfg = HitsConfig {
        max_iterations: 100_000,
        ..HitsConfig::default()
    };
    for weighting in [
        Weighting::WeightedUsd,
        Weighting::UnweightedBinary,
        Weighting::UnweightedMultiplicity,
    ] {
        let view = adjacency(&net, weighting);
        let edges: Vec<_> = view.triplets().collect();
        let s = hits(&view, &cfg).unwrap();
        let (auth, hub) = hits_oracle(&dense(view.n(), &edges));
        assert!(1.0 - cosine(&s.authority, &auth) <= 1e-8, "{weighting:?}");
        assert!(1.0 - cosine(&s.hub, &hub) <= 1e-8, "{weighting:?}");
    }
}

#[test]
fn degree_metrics_recount_events() {
    let log = two_sided_market(
        &MarketConfig {
            events: 800,
            ..MarketConfig::default()
        },
        5,
    );
    let net = build_network(&log).unwrap();
    let d = degree_metrics(&net);
    let mut in_deg: HashMap<&str, u64> = HashMap::new();
    let mut out_str: HashMap<&str, Decimal> = HashMap::new();
    for e in &log.events {
        if e.buyer_id == e.creator_id {
            continue;
        }
        *in_deg.entry(&e.creator_id).or_default() += 1;
        *out_str.entry(&e.buyer_id).or_default() += e.price_usd.unwrap();
    }
    for (i, id) in net.nodes().ids().iter().enumerate() {
        assert_eq!(
            d.in_degree[i],
            in_deg.get(id.as_str()).copied().unwrap_or(0),
            "{id}"
        );
        assert_eq!(
            d.out_strength[i],
            out_str.get(id.as_str()).copied().unwrap_or_default(),
            "{id}"
        );
    }
    let in_total: Decimal = d.in_strength.iter().sum();
    let all: Decimal = log.events.iter().map(|e| e.price_usd.unwrap()).sum();
    assert_eq!(in_total, all - net.dropped_usd());
    assert_eq!(in_total, net.total_usd());
}

#[test]
fn rankings_do_not_depend_on_event_order_within_a_timestamp() {
    let log = two_sided_market(
        &MarketConfig {
            events: 500,
            ..MarketConfig::default()
        },
        8,
    );
    let mut same_time = log.clone();
    let t = same_time.events[0].timestamp;
    same_time.events.iter_mut().for_each(|e| e.timestamp = t);
    let mut reversed = same_time.clone();
    reversed.events.reverse();
    let by_id = |log: &artrank::EventLog| {
        let r = rank_users(&build_network(log).unwrap(), &RankConfig::default()).unwrap();
        let mut rows: Vec<_> = r
            .rows
            .into_iter()
            .map(|row| {
                (
                    row.metrics.user_id.clone(),
                    row.metrics.values(),
                    row.trader_score,
                )
            })
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        rows
    };
    assert_eq!(by_id(&same_time), by_id(&reversed));
}

#[test]
fn gini_against_pairwise_and_known_values() {
    assert_eq!(gini(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
    assert!((gini(&[0.0, 0.0, 0.0, 10.0]).unwrap() - 0.75).abs() < 1e-15);
    let mut r = rng(30);
    for _ in 0..20 {
        let n = r.random_range(1..300);
        let xs: Vec<f64> = (0..n).map(|_| r.random_range(0.0..50.0)).collect();
        assert!((gini(&xs).unwrap() - gini_pairwise(&xs)).abs() <= 1e-12);
        let c = lorenz(&xs).unwrap();
        assert!((c.gini - (1.0 - 2.0 * c.area())).abs() <= 1e-9);
    }
}

#[test]
fn top_share_brute_force() {
    let mut r = rng(31);
    for _ in 0..50 {
        let n = r.random_range(1..200);
        let xs: Vec<f64> = (0..n).map(|_| r.random_range(1..1000) as f64).collect();
        let mut desc = xs.clone();
        desc.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = xs.iter().sum();
        let k = (1..=n)
            .find(|&k| desc[..k].iter().sum::<f64>() >= 0.8 * total)
            .unwrap();
        assert_eq!(top_share(&xs, 0.8).unwrap(), k as f64 / n as f64);
    }
}

#[test]
fn kendall_against_pair_counting() {
    let mut r = rng(40);
    for _ in 0..30 {
        let n = r.random_range(2..120);
        let xs = tied_vector(&mut r, n, 6);
        let ys = tied_vector(&mut r, n, 6);
        match tau_b_pairs(&xs, &ys) {
            Some(want) => assert!((kendall_tau(&xs, &ys).unwrap() - want).abs() <= 1e-12),
            None => assert!(kendall_tau(&xs, &ys).is_err()),
        }
    }
}

#[test]
fn correlation_matrix_entries_match_pair_counting() {
    let log = two_sided_market(
        &MarketConfig {
            artists: 15,
            collectors: 30,
            traders: 5,
            events: 200,
            ..MarketConfig::default()
        },
        3,
    );
    let metrics = rank_users(&build_network(&log).unwrap(), &RankConfig::default())
        .unwrap()
        .metrics();
    assert!(metrics.len() >= 40);
    let m = correlation_matrix(&metrics).unwrap();
    for a in Metric::ALL {
        for b in Metric::ALL {
            let xs: Vec<f64> = metrics.iter().map(|u| u.get(a)).collect();
            let ys: Vec<f64> = metrics.iter().map(|u| u.get(b)).collect();
            let want = tau_b_pairs(&xs, &ys);
            match (m.get(a, b), want) {
                (Some(got), Some(want)) => assert!((got - want).abs() <= 1e-12, "{a:?} {b:?}"),
                (None, None) => {}
                other => panic!("{a:?} {b:?}: {other:?}"),
            }
        }
    }
}

#[test]
fn pareto_histograms_decrease_beyond_mode() {
    // sparse tail bins (under 1% of users) are sampling noise and not checked
    let mut decreasing = 0;
    for seed in 0..10 {
        let users: Vec<UserMetrics> = pareto_volumes(3000, 1.16, 1.0, seed)
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let mut vals = [0.0; 8];
                vals[Metric::InDegree as usize] = v.floor();
                UserMetrics::from_values(format!("u{i}"), vals)
            })
            .collect();
        let bins = histogram_data(&users, HistogramDimension::Sales, 2.0).unwrap();
        let counts: Vec<usize> = bins.iter().map(|b| b.count).collect();
        let mode = (0..counts.len())
            .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
            .unwrap();
        let dense_end = counts
            .iter()
            .rposition(|&c| c * 100 >= users.len())
            .unwrap();
        if counts[mode..=dense_end.max(mode)]
            .windows(2)
            .all(|w| w[0] >= w[1])
        {
            decreasing += 1;
        }
    }
    assert_eq!(decreasing, 10, "{decreasing}/10 seeds decreasing");
}

#[test]
fn figure5_pure_roles() {
    let text = "seller,buyer,creator,price_usd,timestamp\n\
                art,col,art,100,2021-01-01\n\
                art,col,art,50,2021-01-02\n\
                art,fan,art,10,2021-01-03\n";
    let (log, _) =
        parse_events(text.as_bytes(), InputFormat::Csv, &FieldMap::default(), "t").unwrap();
    let rankings = rank_users(&build_network(&log).unwrap(), &RankConfig::default()).unwrap();
    // with three users the 0.95 quantile is the maximum itself
    let cfg = ProfileConfig {
        role_threshold: 0.5,
        ..ProfileConfig::default()
    };
    let profiles = build_profiles(&rankings, &cfg).unwrap();
    let rows = figure5_data(&profiles);
    let art = rows.iter().find(|r| r.user_id == "art").unwrap();
    assert_eq!(
        (art.in_degree, art.authority, art.hub, art.out_degree),
        (1.0, 1.0, 0.0, 0.0)
    );
    let col = rows.iter().find(|r| r.user_id == "col").unwrap();
    assert_eq!(
        (col.in_degree, col.authority, col.out_degree),
        (0.0, 0.0, 1.0)
    );
    assert!(col.hub > 0.0);
    let roles: HashMap<&str, Role> = profiles
        .iter()
        .map(|p| (p.user_id.as_str(), p.role))
        .collect();
    assert_eq!(roles["art"], Role::PureSeller);
    assert_eq!(roles["col"], Role::PureBuyer);
}

fn csv_row() -> impl Strategy<Value = String> {
    (0u8..6, 0u8..6, 0u8..6, 0u32..5000, 0u32..4, any::<bool>()).prop_map(
        |(s, b, c, cents, day, eth)| {
            let b = if b == s { (b + 1) % 6 } else { b };
            let price = format!("{}.{:02}", cents / 100, cents % 100);
            let (pe, pu) = if eth {
                (price, String::new())
            } else {
                (String::new(), price)
            };
            format!("u{s},u{b},u{c},{pe},{pu},2021-04-{:02}T10:00:00Z", 18 + day)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ingest_is_deterministic_and_conversion_idempotent(rows in prop::collection::vec(csv_row(), 0..40)) {
        let text = format!("seller,buyer,creator,price_eth,price_usd,timestamp\n{}\n", rows.join("\n"));
        let parse = || parse_events(text.as_bytes(), InputFormat::Csv, &FieldMap::default(), "p").unwrap();
        let (a, ra) = parse();
        let (b, rb) = parse();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(ra, rb);
        let rates = RateTable::from_pairs((18..=21).map(|d| {
            (NaiveDate::from_ymd_opt(2021, 4, d).unwrap(), Decimal::from(2000 + d))
        })).unwrap();
        let once = convert_currency(&a, &rates).unwrap();
        let twice = convert_currency(&once, &rates).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.events.iter().all(|e| e.price_usd.is_some()));
        let mut x = Vec::new();
        let mut y = Vec::new();
        write_events_csv(&once, &mut x).unwrap();
        write_events_csv(&twice, &mut y).unwrap();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn network_conserves_volume(rows in prop::collection::vec(csv_row(), 1..40)) {
        let text = format!("seller,buyer,creator,price_eth,price_usd,timestamp\n{}\n", rows.join("\n"));
        let (log, _) = parse_events(text.as_bytes(), InputFormat::Csv, &FieldMap::default(), "p").unwrap();
        let rates = RateTable::from_pairs((18..=21).map(|d| {
            (NaiveDate::from_ymd_opt(2021, 4, d).unwrap(), Decimal::from(3000))
        })).unwrap();
        let log = convert_currency(&log, &rates).unwrap();
        let net = build_network(&log).unwrap();
        let all: Decimal = log.events.iter().map(|e| e.price_usd.unwrap()).sum();
        prop_assert_eq!(net.total_usd() + net.dropped_usd(), all);
        let sales: u64 = net.edges().map(|(_, e)| e.sale_count).sum();
        prop_assert_eq!(sales as usize + net.dropped_buybacks(), log.len());
    }
}
