//! HITS authority/hub scores, degree and strength, and the trader score.

use std::io::{Read, Write};
use std::str::FromStr;

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use serde::Serialize;

use crate::graph::{adjacency, sorted_sum, AdjacencyView, CollectorArtistNetwork, Weighting};
use crate::profiling::{Metric, UserMetrics};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CentralityError {
    #[error("invalid HITS configuration: {0}")]
    Config(&'static str),
    #[error("authority and hub vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("rankings file: {0}")]
    Rankings(String),
}

/// Power-iteration settings. Vectors are L2-normalised after each
/// half-step, so the proportionality constants of the HITS recursion never
/// appear explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HitsConfig {
    /// Stop once the L1 change of the concatenated (authority, hub) vector
    /// drops to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for HitsConfig {
    fn default() -> Self {
        HitsConfig {
            tolerance: 1e-10,
            max_iterations: 1000,
        }
    }
}

impl HitsConfig {
    pub fn validate(&self) -> Result<(), CentralityError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(CentralityError::Config("tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(CentralityError::Config("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HitsStatus {
    Converged,
    MaxIterations,
    /// No edges: every score is zero.
    EmptyNetwork,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitsScores {
    pub authority: Vec<f64>,
    pub hub: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    pub residual: f64,
    pub status: HitsStatus,
}

/// Runs HITS on `view`.
///
/// Starting from the uniform vector, alternates `x ← Aᵀy` and `y ← Ax`,
/// normalising each to unit L2 norm. At the fixed point `x` is the
/// dominant eigenvector of `AᵀA` and `y` that of `AAᵀ`. Nodes without
/// incident edges end at zero. Hitting `max_iterations` is not an error:
/// the last iterate is returned with `converged == false`.
pub fn hits(view: &AdjacencyView, cfg: &HitsConfig) -> Result<HitsScores, CentralityError> {
    cfg.validate()?;
    let n = view.n();
    if view.nnz() == 0 {
        return Ok(HitsScores {
            authority: vec![0.0; n],
            hub: vec![0.0; n],
            iterations_used: 0,
            converged: true,
            residual: 0.0,
            status: HitsStatus::EmptyNetwork,
        });
    }

    let start = 1.0 / (n as f64).sqrt();
    let mut auth = vec![start; n];
    let mut hub = vec![start; n];
    let mut next_auth = vec![0.0; n];
    let mut next_hub = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        view.tr_mul_vec(&hub, &mut next_auth);
        normalize_l2(&mut next_auth);
        view.mul_vec(&next_auth, &mut next_hub);
        normalize_l2(&mut next_hub);

        residual = l1_distance(&auth, &next_auth) + l1_distance(&hub, &next_hub);
        std::mem::swap(&mut auth, &mut next_auth);
        std::mem::swap(&mut hub, &mut next_hub);
        if residual <= cfg.tolerance {
            break;
        }
    }

    let converged = residual <= cfg.tolerance;
    Ok(HitsScores {
        authority: auth,
        hub,
        iterations_used: iterations,
        converged,
        residual,
        status: if converged {
            HitsStatus::Converged
        } else {
            HitsStatus::MaxIterations
        },
    })
}

fn normalize_l2(v: &mut [f64]) {
    let mut squares: Vec<f64> = v.iter().map(|x| x * x).collect();
    let norm = sorted_sum(&mut squares).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    sorted_sum(&mut diffs)
}

/// In/out degree count sales (multiplicity); strengths sum USD.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeMetrics {
    pub in_degree: Vec<u64>,
    pub out_degree: Vec<u64>,
    pub in_strength: Vec<Decimal>,
    pub out_strength: Vec<Decimal>,
}

pub fn degree_metrics(net: &CollectorArtistNetwork) -> DegreeMetrics {
    let n = net.node_count();
    let mut m = DegreeMetrics {
        in_degree: vec![0; n],
        out_degree: vec![0; n],
        in_strength: vec![Decimal::ZERO; n],
        out_strength: vec![Decimal::ZERO; n],
    };
    for ((collector, artist), e) in net.edges() {
        m.out_degree[collector] += e.sale_count;
        m.out_strength[collector] += e.total_usd;
        m.in_degree[artist] += e.sale_count;
        m.in_strength[artist] += e.total_usd;
    }
    m
}

/// Element-wise authority × hub: high for users who both sell to and buy
/// from prominent counterparts.
pub fn trader_score(scores: &HitsScores) -> Result<Vec<f64>, CentralityError> {
    if scores.authority.len() != scores.hub.len() {
        return Err(CentralityError::LengthMismatch(
            scores.authority.len(),
            scores.hub.len(),
        ));
    }
    Ok(scores
        .authority
        .iter()
        .zip(&scores.hub)
        .map(|(a, h)| a * h)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RankConfig {
    pub hits: HitsConfig,
    /// Use sale counts instead of {0,1} for the unweighted HITS view.
    pub multiplicity: bool,
}

/// Convergence record of one HITS run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HitsRun {
    pub iterations_used: usize,
    pub converged: bool,
    pub residual: f64,
    pub status: HitsStatus,
}

impl From<&HitsScores> for HitsRun {
    fn from(s: &HitsScores) -> Self {
        HitsRun {
            iterations_used: s.iterations_used,
            converged: s.converged,
            residual: s.residual,
            status: s.status,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub metrics: UserMetrics,
    pub trader_score: f64,
}

/// The full per-user metric table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rankings {
    pub rows: Vec<RankingRow>,
    pub weighted_run: Option<HitsRun>,
    pub unweighted_run: Option<HitsRun>,
}

impl Rankings {
    pub fn metrics(&self) -> Vec<UserMetrics> {
        self.rows.iter().map(|r| r.metrics.clone()).collect()
    }

    pub fn column(&self, metric: Metric) -> Vec<f64> {
        self.rows.iter().map(|r| r.metrics.get(metric)).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Computes every metric for every node, in node-index order. The trader
/// score uses the weighted HITS run.
pub fn rank_users(
    net: &CollectorArtistNetwork,
    cfg: &RankConfig,
) -> Result<Rankings, CentralityError> {
    let weighted = hits(&adjacency(net, Weighting::WeightedUsd), &cfg.hits)?;
    let unweighted_kind = if cfg.multiplicity {
        Weighting::UnweightedMultiplicity
    } else {
        Weighting::UnweightedBinary
    };
    let unweighted = hits(&adjacency(net, unweighted_kind), &cfg.hits)?;
    let degrees = degree_metrics(net);
    let trader = trader_score(&weighted)?;
    let rows = (0..net.node_count())
        .map(|i| RankingRow {
            metrics: UserMetrics {
                user_id: net.nodes().id(i).to_string(),
                authority: unweighted.authority[i],
                w_authority: weighted.authority[i],
                in_strength: degrees.in_strength[i].to_f64().unwrap_or(0.0),
                in_degree: degrees.in_degree[i] as f64,
                hub: unweighted.hub[i],
                w_hub: weighted.hub[i],
                out_strength: degrees.out_strength[i].to_f64().unwrap_or(0.0),
                out_degree: degrees.out_degree[i] as f64,
            },
            trader_score: trader[i],
        })
        .collect();
    Ok(Rankings {
        rows,
        weighted_run: Some(HitsRun::from(&weighted)),
        unweighted_run: Some(HitsRun::from(&unweighted)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortKey {
    Authority,
    #[default]
    WAuthority,
    Hub,
    WHub,
    InDegree,
    OutDegree,
    InStrength,
    OutStrength,
    TraderScore,
}

impl FromStr for SortKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "authority" => SortKey::Authority,
            "w_authority" => SortKey::WAuthority,
            "hub" => SortKey::Hub,
            "w_hub" => SortKey::WHub,
            "in_degree" => SortKey::InDegree,
            "out_degree" => SortKey::OutDegree,
            "in_strength" => SortKey::InStrength,
            "out_strength" => SortKey::OutStrength,
            "trader_score" => SortKey::TraderScore,
            other => return Err(format!("unknown sort key `{other}`")),
        })
    }
}

impl SortKey {
    fn value(self, row: &RankingRow) -> f64 {
        let m = &row.metrics;
        match self {
            SortKey::Authority => m.authority,
            SortKey::WAuthority => m.w_authority,
            SortKey::Hub => m.hub,
            SortKey::WHub => m.w_hub,
            SortKey::InDegree => m.in_degree,
            SortKey::OutDegree => m.out_degree,
            SortKey::InStrength => m.in_strength,
            SortKey::OutStrength => m.out_strength,
            SortKey::TraderScore => row.trader_score,
        }
    }
}

pub const RANKING_COLUMNS: [&str; 10] = [
    "user",
    "authority",
    "w_authority",
    "hub",
    "w_hub",
    "in_degree",
    "out_degree",
    "in_strength",
    "out_strength",
    "trader_score",
];

/// Writes the rankings CSV, descending by `key`, ties broken by user id.
pub fn write_rankings_csv<W: Write>(
    rankings: &Rankings,
    key: SortKey,
    out: W,
) -> Result<(), CentralityError> {
    let err = |e: csv::Error| CentralityError::Rankings(e.to_string());
    let mut rows: Vec<&RankingRow> = rankings.rows.iter().collect();
    rows.sort_by(|a, b| {
        key.value(b)
            .total_cmp(&key.value(a))
            .then_with(|| a.metrics.user_id.cmp(&b.metrics.user_id))
    });
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RANKING_COLUMNS).map_err(err)?;
    for r in rows {
        let m = &r.metrics;
        let nums = [
            m.authority,
            m.w_authority,
            m.hub,
            m.w_hub,
            m.in_degree,
            m.out_degree,
            m.in_strength,
            m.out_strength,
            r.trader_score,
        ];
        let mut record = vec![m.user_id.clone()];
        record.extend(nums.iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(err)?;
    }
    w.flush()
        .map_err(|e| CentralityError::Rankings(e.to_string()))
}

/// Loads a rankings CSV written by [`write_rankings_csv`]. Rows come back
/// in file order.
pub fn read_rankings_csv<R: Read>(input: R) -> Result<Rankings, CentralityError> {
    let err = |e: csv::Error| CentralityError::Rankings(e.to_string());
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(err)?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CentralityError::Rankings(format!("missing column `{name}`")))
    };
    let cols: Vec<usize> = RANKING_COLUMNS
        .iter()
        .map(|c| position(c))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(err)?;
        let num = |k: usize| -> Result<f64, CentralityError> {
            let text = rec.get(cols[k]).unwrap_or("");
            text.parse::<f64>().map_err(|_| {
                CentralityError::Rankings(format!(
                    "line {}: invalid number `{text}` in `{}`",
                    line + 2,
                    RANKING_COLUMNS[k]
                ))
            })
        };
        rows.push(RankingRow {
            metrics: UserMetrics {
                user_id: rec.get(cols[0]).unwrap_or("").to_string(),
                authority: num(1)?,
                w_authority: num(2)?,
                hub: num(3)?,
                w_hub: num(4)?,
                in_degree: num(5)?,
                out_degree: num(6)?,
                in_strength: num(7)?,
                out_strength: num(8)?,
            },
            trader_score: num(9)?,
        });
    }
    Ok(Rankings {
        rows,
        weighted_run: None,
        unweighted_run: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_network;
    use crate::ingest::{parse_events, FieldMap, InputFormat};

    fn view(n: usize, edges: &[(usize, usize, f64)]) -> AdjacencyView {
        AdjacencyView::from_triplets(n, edges).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn single_edge() {
        let s = hits(&view(3, &[(0, 1, 1.0)]), &HitsConfig::default()).unwrap();
        assert!(s.converged);
        assert_eq!(s.status, HitsStatus::Converged);
        assert!(close(s.authority[1], 1.0) && close(s.hub[0], 1.0));
        assert!(close(s.authority[0], 0.0) && close(s.authority[2], 0.0));
        assert!(close(s.hub[1], 0.0) && close(s.hub[2], 0.0));
    }

    #[test]
    fn star_collector_spreads_authority_evenly() {
        let edges: Vec<_> = (1..=4).map(|a| (0, a, 1.0)).collect();
        let s = hits(&view(5, &edges), &HitsConfig::default()).unwrap();
        for a in 1..=4 {
            assert!(close(s.authority[a], 0.5));
        }
        assert!(close(s.hub[0], 1.0));
    }

    #[test]
    fn empty_network_is_flagged() {
        let s = hits(&view(4, &[]), &HitsConfig::default()).unwrap();
        assert_eq!(s.status, HitsStatus::EmptyNetwork);
        assert!(s.converged);
        assert!(s.authority.iter().chain(&s.hub).all(|&v| v == 0.0));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let cfg = HitsConfig {
            tolerance: 1e-300,
            max_iterations: 3,
        };
        let s = hits(&view(4, &[(0, 2, 2.0), (0, 3, 1.0), (1, 2, 1.0)]), &cfg).unwrap();
        assert!(!s.converged);
        assert_eq!(s.status, HitsStatus::MaxIterations);
        assert_eq!(s.iterations_used, 3);
    }

    #[test]
    fn bad_config_is_rejected() {
        let v = view(2, &[(0, 1, 1.0)]);
        for cfg in [
            HitsConfig {
                tolerance: 0.0,
                max_iterations: 10,
            },
            HitsConfig {
                tolerance: f64::NAN,
                max_iterations: 10,
            },
            HitsConfig {
                tolerance: 1e-6,
                max_iterations: 0,
            },
        ] {
            assert!(hits(&v, &cfg).is_err());
        }
    }

    #[test]
    fn trader_score_products() {
        let scores = HitsScores {
            authority: vec![0.9, 0.0, 0.3],
            hub: vec![0.0, 0.8, 0.4],
            iterations_used: 1,
            converged: true,
            residual: 0.0,
            status: HitsStatus::Converged,
        };
        let t = trader_score(&scores).unwrap();
        assert_eq!(t[0], 0.0);
        assert_eq!(t[1], 0.0);
        assert!(close(t[2], 0.12));
    }

    fn net(rows: &str) -> CollectorArtistNetwork {
        let text = format!("seller,buyer,creator,price_usd,timestamp\n{rows}");
        let (log, _) =
            parse_events(text.as_bytes(), InputFormat::Csv, &FieldMap::default(), "t").unwrap();
        build_network(&log).unwrap()
    }

    #[test]
    fn degree_metrics_sum_counts_and_usd() {
        let n = net("a,b,a,100,0\na,b,a,50,1\nb,c,a,50,2\nz,y,z,0,3\nq,w,m,5,4\n");
        let d = degree_metrics(&n);
        let a = n.nodes().index_of("a").unwrap();
        assert_eq!(d.in_degree[a], 3);
        assert_eq!(d.in_strength[a], Decimal::from(200));
        // `q` only resold someone else's work
        let q = n.nodes().index_of("q").unwrap();
        assert_eq!((d.in_degree[q], d.out_degree[q]), (0, 0));
        assert_eq!(d.in_strength[q], Decimal::ZERO);
        let total: Decimal = d.in_strength.iter().sum();
        assert_eq!(total, d.out_strength.iter().sum::<Decimal>());
        assert_eq!(total, n.total_usd());
    }

    #[test]
    fn rankings_csv_round_trip() {
        let n = net("a,b,a,100,0\na,c,a,50,1\nb,c,b,10,2\n");
        let r = rank_users(&n, &RankConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_rankings_csv(&r, SortKey::InStrength, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("user,authority,w_authority,hub,w_hub,in_degree,"));
        assert!(text.lines().nth(1).unwrap().starts_with("a,"));
        let back = read_rankings_csv(&buf[..]).unwrap();
        let mut want = r.rows.clone();
        want.sort_by(|x, y| y.metrics.in_strength.total_cmp(&x.metrics.in_strength));
        assert_eq!(back.rows, want);
    }
}
