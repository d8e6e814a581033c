//! User typology: role quadrants, A/B/C percentile codes, max-normalised
//! metric vectors, and code pattern queries.
//!
//! Each metric column is cut by its empirical CDF into C = `[0, 0.5]`,
//! B = `(0.5, 0.9]` and A = `(0.9, 1]`. An artist code reads the levels of
//! (in-degree, in-strength, authority, weighted authority); a collector
//! code reads (out-degree, out-strength, hub, weighted hub). The full code
//! is the artist code followed by the collector code.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::centrality::Rankings;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProfileError {
    #[error("malformed code pattern `{0}`: use 4 (role) or 8 (full) symbols from A, B, C, *")]
    MalformedPattern(String),
    #[error("pattern `{pattern}` has {len} symbols but {scope:?} codes have {expected}")]
    PatternLength {
        pattern: String,
        len: usize,
        scope: CodeScope,
        expected: usize,
    },
    #[error("role threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("no users to profile")]
    Empty,
    #[error("failed to write output: {0}")]
    Io(String),
}

/// The eight metrics, in correlation-plot order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Authority = 0,
    WAuthority = 1,
    InStrength = 2,
    InDegree = 3,
    Hub = 4,
    WHub = 5,
    OutStrength = 6,
    OutDegree = 7,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Authority,
        Metric::WAuthority,
        Metric::InStrength,
        Metric::InDegree,
        Metric::Hub,
        Metric::WHub,
        Metric::OutStrength,
        Metric::OutDegree,
    ];

    /// Artist code positions.
    pub const ARTIST: [Metric; 4] = [
        Metric::InDegree,
        Metric::InStrength,
        Metric::Authority,
        Metric::WAuthority,
    ];

    /// Collector code positions.
    pub const COLLECTOR: [Metric; 4] = [
        Metric::OutDegree,
        Metric::OutStrength,
        Metric::Hub,
        Metric::WHub,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Authority => "auth",
            Metric::WAuthority => "w-auth",
            Metric::InStrength => "in-str",
            Metric::InDegree => "in-deg",
            Metric::Hub => "hub",
            Metric::WHub => "w-hub",
            Metric::OutStrength => "out-str",
            Metric::OutDegree => "out-deg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserMetrics {
    pub user_id: String,
    pub authority: f64,
    pub w_authority: f64,
    pub in_strength: f64,
    pub in_degree: f64,
    pub hub: f64,
    pub w_hub: f64,
    pub out_strength: f64,
    pub out_degree: f64,
}

impl UserMetrics {
    /// `values` in [`Metric::ALL`] order.
    pub fn from_values(user_id: impl Into<String>, values: [f64; 8]) -> Self {
        UserMetrics {
            user_id: user_id.into(),
            authority: values[0],
            w_authority: values[1],
            in_strength: values[2],
            in_degree: values[3],
            hub: values[4],
            w_hub: values[5],
            out_strength: values[6],
            out_degree: values[7],
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Authority => self.authority,
            Metric::WAuthority => self.w_authority,
            Metric::InStrength => self.in_strength,
            Metric::InDegree => self.in_degree,
            Metric::Hub => self.hub,
            Metric::WHub => self.w_hub,
            Metric::OutStrength => self.out_strength,
            Metric::OutDegree => self.out_degree,
        }
    }

    pub fn values(&self) -> [f64; 8] {
        Metric::ALL.map(|m| self.get(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Level {
    A,
    B,
    C,
}

impl Level {
    pub fn symbol(self) -> char {
        match self {
            Level::A => 'A',
            Level::B => 'B',
            Level::C => 'C',
        }
    }

    fn from_symbol(c: char) -> Option<Level> {
        match c {
            'A' => Some(Level::A),
            'B' => Some(Level::B),
            'C' => Some(Level::C),
            _ => None,
        }
    }

    /// Level of an ECDF rank `rank` out of `n`, with exact integer cuts.
    fn from_rank(rank: usize, n: usize) -> Level {
        if 2 * rank <= n {
            Level::C
        } else if 10 * rank <= 9 * n {
            Level::B
        } else {
            Level::A
        }
    }

    /// Level of a value already scaled to `[0, 1]`, using the same cuts.
    pub fn from_share(share: f64) -> Level {
        if share <= 0.5 {
            Level::C
        } else if share <= 0.9 {
            Level::B
        } else {
            Level::A
        }
    }
}

/// How tied scores share a percentile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieConvention {
    /// Tied users take the highest rank of the tie group (the ECDF).
    #[default]
    Max,
    /// Tied users take the lowest rank of the tie group.
    Min,
}

impl FromStr for TieConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(TieConvention::Max),
            "min" => Ok(TieConvention::Min),
            other => Err(format!("unknown tie convention `{other}` (use max or min)")),
        }
    }
}

/// Percentile level of every score.
pub fn percentile_levels(scores: &[f64], ties: TieConvention) -> Vec<Level> {
    let n = scores.len();
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    scores
        .iter()
        .map(|&s| {
            let rank = match ties {
                TieConvention::Max => sorted.partition_point(|&x| x.total_cmp(&s).is_le()),
                TieConvention::Min => sorted.partition_point(|&x| x.total_cmp(&s).is_lt()) + 1,
            };
            Level::from_rank(rank, n)
        })
        .collect()
}

/// A stored code: levels only, no wildcards.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LevelCode(Vec<Level>);

impl LevelCode {
    pub fn levels(&self) -> &[Level] {
        &self.0
    }

    pub fn concat(&self, other: &LevelCode) -> LevelCode {
        LevelCode(self.0.iter().chain(&other.0).copied().collect())
    }

    /// Code of a max-normalised vector, cutting each share at 0.5 and 0.9.
    /// `(0.99, 0.98, 0.95, 0.96)` reads `AAAA`.
    pub fn from_shares(shares: &[f64]) -> LevelCode {
        LevelCode(shares.iter().map(|&s| Level::from_share(s)).collect())
    }
}

impl fmt::Display for LevelCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|l| write!(f, "{}", l.symbol()))
    }
}

impl Serialize for LevelCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for LevelCode {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(Level::from_symbol)
            .collect::<Option<Vec<_>>>()
            .map(LevelCode)
            .ok_or_else(|| ProfileError::MalformedPattern(s.to_string()))
    }
}

/// A query code; `None` positions are wildcards (`*`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodePattern(Vec<Option<Level>>);

impl FromStr for CodePattern {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let symbols: Option<Vec<Option<Level>>> = s
            .chars()
            .map(|c| match c {
                '*' => Some(None),
                other => Level::from_symbol(other).map(Some),
            })
            .collect();
        match symbols {
            Some(v) if v.len() == 4 || v.len() == 8 => Ok(CodePattern(v)),
            _ => Err(ProfileError::MalformedPattern(s.to_string())),
        }
    }
}

impl fmt::Display for CodePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0
            .iter()
            .try_for_each(|l| write!(f, "{}", l.map_or('*', Level::symbol)))
    }
}

impl CodePattern {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn matches(&self, code: &LevelCode) -> bool {
        self.0.len() == code.0.len()
            && self
                .0
                .iter()
                .zip(&code.0)
                .all(|(p, c)| p.is_none_or(|p| p == *c))
    }
}

/// Well-known patterns.
pub mod patterns {
    /// Artist: top level in every artist metric.
    pub const BLUE_CHIP: &str = "AAAA";
    /// Artist: few, cheap sales, but to prominent collectors.
    pub const RISING_STAR: &str = "CCAB";
    /// Artist: sells a lot at low prices.
    pub const VOLUME_SELLER: &str = "AC**";
    /// Artist: sells little at high prices.
    pub const PREMIUM_SELLER: &str = "CA**";
    /// Artist: sells often, to minor collectors.
    pub const BUSY_PERIPHERAL: &str = "A*CC";
    /// Artist: sells rarely, to major collectors.
    pub const SCARCE_CENTRAL: &str = "C*AA";
    /// Collector: few expensive purchases from central artists.
    pub const SELECTIVE_COLLECTOR: &str = "CABA";
    /// Collector: many cheap purchases from peripheral artists.
    pub const BULK_COLLECTOR: &str = "ACCC";
    /// Full code: high in/out degree, low authority and hub.
    pub const SMALL_TRADER: &str = "A*C*A*C*";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    ByStander,
    PureSeller,
    PureBuyer,
    Trader,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::ByStander => "by_stander",
            Role::PureSeller => "pure_seller",
            Role::PureBuyer => "pure_buyer",
            Role::Trader => "trader",
        }
    }
}

/// Artist and collector codes per user.
pub fn role_codes(metrics: &[UserMetrics], ties: TieConvention) -> Vec<(LevelCode, LevelCode)> {
    let levels = |set: [Metric; 4]| -> Vec<Vec<Level>> {
        set.iter()
            .map(|&m| {
                let col: Vec<f64> = metrics.iter().map(|u| u.get(m)).collect();
                percentile_levels(&col, ties)
            })
            .collect()
    };
    let artist = levels(Metric::ARTIST);
    let collector = levels(Metric::COLLECTOR);
    (0..metrics.len())
        .map(|i| {
            (
                LevelCode(artist.iter().map(|c| c[i]).collect()),
                LevelCode(collector.iter().map(|c| c[i]).collect()),
            )
        })
        .collect()
}

/// Empirical `threshold`-quantile (inverse ECDF) of `values`.
fn quantile(values: &[f64], threshold: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = ((threshold * n as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[k.min(n) - 1]
}

/// Sales-vs-purchases quadrant of each user.
///
/// A user is high on a dimension when its count (in-degree for sales,
/// out-degree for purchases) is strictly above the `threshold` quantile.
pub fn classify_role(metrics: &[UserMetrics], threshold: f64) -> Result<Vec<Role>, ProfileError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(ProfileError::InvalidThreshold(threshold));
    }
    if metrics.is_empty() {
        return Ok(Vec::new());
    }
    let sells: Vec<f64> = metrics.iter().map(|u| u.in_degree).collect();
    let buys: Vec<f64> = metrics.iter().map(|u| u.out_degree).collect();
    let sell_cut = quantile(&sells, threshold);
    let buy_cut = quantile(&buys, threshold);
    Ok(metrics
        .iter()
        .map(|u| match (u.in_degree > sell_cut, u.out_degree > buy_cut) {
            (true, true) => Role::Trader,
            (true, false) => Role::PureSeller,
            (false, true) => Role::PureBuyer,
            (false, false) => Role::ByStander,
        })
        .collect())
}

/// Column-wise division by the column maximum; an all-zero column stays
/// zero.
pub fn normalize_metrics(metrics: &[UserMetrics]) -> Vec<[f64; 8]> {
    let mut max = [0.0f64; 8];
    for u in metrics {
        for (m, v) in max.iter_mut().zip(u.values()) {
            *m = m.max(v);
        }
    }
    metrics
        .iter()
        .map(|u| {
            let mut out = u.values();
            for (v, m) in out.iter_mut().zip(max) {
                *v = if m > 0.0 { *v / m } else { 0.0 };
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserProfile {
    pub user_id: String,
    pub role: Role,
    pub artist_code: LevelCode,
    pub collector_code: LevelCode,
    /// Max-normalised metrics in [`Metric::ALL`] order.
    pub normalized: [f64; 8],
    pub trader_score: f64,
    pub trader_level: Level,
}

impl UserProfile {
    pub fn full_code(&self) -> LevelCode {
        self.artist_code.concat(&self.collector_code)
    }

    pub fn code(&self, scope: CodeScope) -> LevelCode {
        match scope {
            CodeScope::Artist => self.artist_code.clone(),
            CodeScope::Collector => self.collector_code.clone(),
            CodeScope::Full => self.full_code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConfig {
    /// Quantile used for the role quadrants.
    pub role_threshold: f64,
    pub ties: TieConvention,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            role_threshold: 0.95,
            ties: TieConvention::Max,
        }
    }
}

pub fn build_profiles(
    rankings: &Rankings,
    cfg: &ProfileConfig,
) -> Result<Vec<UserProfile>, ProfileError> {
    let metrics = rankings.metrics();
    if metrics.is_empty() {
        return Err(ProfileError::Empty);
    }
    let roles = classify_role(&metrics, cfg.role_threshold)?;
    let codes = role_codes(&metrics, cfg.ties);
    let normalized = normalize_metrics(&metrics);
    let trader: Vec<f64> = rankings.rows.iter().map(|r| r.trader_score).collect();
    let trader_levels = percentile_levels(&trader, cfg.ties);
    Ok(metrics
        .into_iter()
        .zip(roles)
        .zip(codes)
        .zip(normalized)
        .zip(trader.iter().zip(trader_levels))
        .map(
            |((((m, role), (artist_code, collector_code)), normalized), (&ts, tl))| UserProfile {
                user_id: m.user_id,
                role,
                artist_code,
                collector_code,
                normalized,
                trader_score: ts,
                trader_level: tl,
            },
        )
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeScope {
    Artist,
    Collector,
    Full,
}

impl CodeScope {
    pub fn code_len(self) -> usize {
        match self {
            CodeScope::Artist | CodeScope::Collector => 4,
            CodeScope::Full => 8,
        }
    }
}

impl FromStr for CodeScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "artist" => Ok(CodeScope::Artist),
            "collector" => Ok(CodeScope::Collector),
            "full" => Ok(CodeScope::Full),
            other => Err(format!("unknown code scope `{other}`")),
        }
    }
}

/// Profiles whose `scope` code matches `pattern`, in input order.
pub fn match_code<'a>(
    profiles: &'a [UserProfile],
    pattern: &str,
    scope: CodeScope,
) -> Result<Vec<&'a UserProfile>, ProfileError> {
    let parsed: CodePattern = pattern.parse()?;
    if parsed.len() != scope.code_len() {
        return Err(ProfileError::PatternLength {
            pattern: pattern.to_string(),
            len: parsed.len(),
            scope,
            expected: scope.code_len(),
        });
    }
    Ok(profiles
        .iter()
        .filter(|p| parsed.matches(&p.code(scope)))
        .collect())
}

/// Users whose trader score sits in the top (A) level.
pub fn top_traders(profiles: &[UserProfile]) -> Vec<&UserProfile> {
    profiles
        .iter()
        .filter(|p| p.trader_level == Level::A && p.trader_score > 0.0)
        .collect()
}

/// One JSON object per line.
pub fn write_profiles_jsonl<W: Write>(
    profiles: &[UserProfile],
    mut out: W,
) -> Result<(), ProfileError> {
    for p in profiles {
        let line = serde_json::json!({
            "user": p.user_id,
            "role": p.role,
            "artist_code": p.artist_code,
            "collector_code": p.collector_code,
            "normalized": p.normalized,
            "trader_score": p.trader_score,
            "trader_level": p.trader_level,
        });
        writeln!(out, "{line}").map_err(|e| ProfileError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Query result as `user,role,artist_code,collector_code`.
pub fn write_matches_csv<W: Write>(matches: &[&UserProfile], out: W) -> Result<(), ProfileError> {
    let err = |e: csv::Error| ProfileError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "role", "artist_code", "collector_code"])
        .map_err(err)?;
    for p in matches {
        w.write_record([
            p.user_id.as_str(),
            p.role.as_str(),
            &p.artist_code.to_string(),
            &p.collector_code.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| ProfileError::Io(e.to_string()))
}
