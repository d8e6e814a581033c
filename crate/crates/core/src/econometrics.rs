//! Concentration and rank-correlation analytics.

use std::io::Write;

use serde::Serialize;

use crate::profiling::{Metric, UserMetrics};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EconError {
    #[error("no volume: values are empty or sum to zero")]
    NoVolume,
    #[error("values must be finite and non-negative")]
    InvalidValue,
    #[error("volume fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {0} observations")]
    TooShort(usize),
    #[error("degenerate ranking: a constant series has no rank correlation")]
    DegenerateRanking,
    #[error("failed to write output: {0}")]
    Io(String),
}

/// Poorest-first Lorenz curve. The first point is `(0, 0)`, the last
/// `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorenzCurve {
    pub points: Vec<(f64, f64)>,
    pub gini: f64,
    pub n: usize,
    pub total: f64,
}

fn checked_total(values: &[f64]) -> Result<f64, EconError> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(EconError::InvalidValue);
    }
    let total: f64 = values.iter().sum();
    if values.is_empty() || total <= 0.0 {
        return Err(EconError::NoVolume);
    }
    Ok(total)
}

fn sorted_ascending(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn lorenz(values: &[f64]) -> Result<LorenzCurve, EconError> {
    let total = checked_total(values)?;
    let sorted = sorted_ascending(values);
    let n = sorted.len();
    let mut points = Vec::with_capacity(n + 1);
    points.push((0.0, 0.0));
    let mut cum = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cum += v;
        let share = if k + 1 == n {
            1.0
        } else {
            (cum / total).min(1.0)
        };
        points.push(((k + 1) as f64 / n as f64, share));
    }
    Ok(LorenzCurve {
        points,
        gini: gini_sorted(&sorted, total),
        n,
        total,
    })
}

/// Population Gini index `Σᵢ Σⱼ |xᵢ − xⱼ| / (2 n² μ)`, evaluated in
/// O(n log n) as `Σᵢ (2i − n − 1) x₍ᵢ₎ / (n Σx)` over the ascending order.
pub fn gini(values: &[f64]) -> Result<f64, EconError> {
    let total = checked_total(values)?;
    Ok(gini_sorted(&sorted_ascending(values), total))
}

fn gini_sorted(sorted: &[f64], total: f64) -> f64 {
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    (weighted / (n * total)).clamp(0.0, 1.0)
}

/// Smallest population share, richest first, holding at least
/// `volume_fraction` of the total. Users are not split: the share is `k/n`.
pub fn top_share(values: &[f64], volume_fraction: f64) -> Result<f64, EconError> {
    if !(volume_fraction > 0.0 && volume_fraction <= 1.0) {
        return Err(EconError::InvalidFraction(volume_fraction));
    }
    let total = checked_total(values)?;
    let mut sorted = sorted_ascending(values);
    sorted.reverse();
    let target = volume_fraction * total * (1.0 - 1e-12);
    let mut cum = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cum += v;
        if cum >= target {
            return Ok((k + 1) as f64 / sorted.len() as f64);
        }
    }
    Ok(1.0)
}

/// USD received for the creations of every user with at least one sale.
pub fn seller_volumes(metrics: &[UserMetrics]) -> Vec<f64> {
    metrics
        .iter()
        .filter(|u| u.in_degree > 0.0)
        .map(|u| u.in_strength)
        .collect()
}

/// USD spent by every user with at least one purchase.
pub fn buyer_volumes(metrics: &[UserMetrics]) -> Vec<f64> {
    metrics
        .iter()
        .filter(|u| u.out_degree > 0.0)
        .map(|u| u.out_strength)
        .collect()
}

/// Kendall tau-b with tie correction, by Knight's O(n log n) algorithm.
///
/// Errors when either series is constant, since the tie-corrected
/// denominator is then zero.
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> Result<f64, EconError> {
    if xs.len() != ys.len() {
        return Err(EconError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(EconError::TooShort(2));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(EconError::InvalidValue);
    }

    let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let tied_x = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let tied_xy = tied_pairs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);

    let mut ys_sorted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_sort_count(&mut ys_sorted);
    let tied_y = tied_pairs(&ys_sorted, |a, b| a == b);

    let total = (n as u64) * (n as u64 - 1) / 2;
    let denom = ((total - tied_x) as f64) * ((total - tied_y) as f64);
    if denom == 0.0 {
        return Err(EconError::DegenerateRanking);
    }
    // concordant − discordant
    let diff = total as i64 - tied_x as i64 - tied_y as i64 + tied_xy as i64 - 2 * swaps as i64;
    Ok((diff as f64 / denom.sqrt()).clamp(-1.0, 1.0))
}

fn tied_pairs<T>(sorted: &[T], same: impl Fn(&T, &T) -> bool) -> u64 {
    let mut ties = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if same(&w[0], &w[1]) {
            run += 1;
        } else {
            ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties + run * (run - 1) / 2
}

/// Sorts ascending and returns the number of inversions (strictly
/// decreasing pairs).
fn merge_sort_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mut buf = vec![0.0; n];
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut k) = (start, mid, start);
            while i < mid && j < end {
                if v[j] < v[i] {
                    buf[k] = v[j];
                    swaps += (mid - i) as u64;
                    j += 1;
                } else {
                    buf[k] = v[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
            k += mid - i;
            buf[k..k + (end - j)].copy_from_slice(&v[j..end]);
            start = end;
        }
        v.copy_from_slice(&buf);
        width *= 2;
    }
    swaps
}

/// Pairwise Kendall tau-b over the eight metrics; `None` marks pairs
/// involving a constant column.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: [&'static str; 8],
    pub values: [[Option<f64>; 8]; 8],
}

pub fn correlation_matrix(metrics: &[UserMetrics]) -> Result<CorrelationMatrix, EconError> {
    if metrics.len() < 2 {
        return Err(EconError::TooShort(2));
    }
    let columns: Vec<Vec<f64>> = Metric::ALL
        .iter()
        .map(|&m| metrics.iter().map(|u| u.get(m)).collect())
        .collect();
    let mut values = [[None; 8]; 8];
    for i in 0..8 {
        for j in i..8 {
            let tau = match kendall_tau(&columns[i], &columns[j]) {
                Ok(t) if i == j => Some(t.round()),
                Ok(t) => Some(t),
                Err(EconError::DegenerateRanking) => None,
                Err(e) => return Err(e),
            };
            values[i][j] = tau;
            values[j][i] = tau;
        }
    }
    Ok(CorrelationMatrix {
        labels: Metric::ALL.map(Metric::label),
        values,
    })
}

impl CorrelationMatrix {
    pub fn get(&self, a: Metric, b: Metric) -> Option<f64> {
        self.values[a as usize][b as usize]
    }

    /// 8×8 CSV with labels on both axes; undefined entries are `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EconError> {
        let err = |e: csv::Error| EconError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().map(|l| l.to_string()));
        w.write_record(&header).map_err(err)?;
        for (label, row) in self.labels.iter().zip(&self.values) {
            let mut record = vec![label.to_string()];
            record.extend(row.iter().map(|v| match v {
                Some(t) => t.to_string(),
                None => "NA".to_string(),
            }));
            w.write_record(&record).map_err(err)?;
        }
        w.flush().map_err(|e| EconError::Io(e.to_string()))
    }
}

impl LorenzCurve {
    /// `pop_share,vol_share` rows including the origin.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EconError> {
        let err = |e: csv::Error| EconError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["pop_share", "vol_share"]).map_err(err)?;
        for (p, v) in &self.points {
            w.write_record([p.to_string(), v.to_string()])
                .map_err(err)?;
        }
        w.flush().map_err(|e| EconError::Io(e.to_string()))
    }

    /// Sidecar `{gini, n, total}`.
    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::json!({ "gini": self.gini, "n": self.n, "total": self.total })
    }

    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum()
    }
}
