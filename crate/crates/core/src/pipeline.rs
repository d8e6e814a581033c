//! Batch orchestration: ingest → network → rankings → concentration →
//! correlation → profiles → report.
//!
//! Every stage writes into an [`OutputDir`], which holds a lock file while
//! open and finishes with `manifest.json` listing each artifact and its
//! SHA-256. Outputs contain no timestamps or other run-dependent data, so
//! identical inputs and configuration give byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::centrality::{
    rank_users, read_rankings_csv, write_rankings_csv, CentralityError, HitsConfig, RankConfig,
    Rankings, SortKey,
};
use crate::econometrics::{
    buyer_volumes, correlation_matrix, lorenz, seller_volumes, top_share, EconError,
};
use crate::graph::{build_network, CollectorArtistNetwork, GraphError};
use crate::ingest::{
    convert_currency, parse_events, write_events_csv, EventLog, FieldMap, IngestError,
    IngestReport, InputFormat, RateTable,
};
use crate::profiling::{
    build_profiles, match_code, patterns, top_traders, write_matches_csv, write_profiles_jsonl,
    CodeScope, ProfileConfig, ProfileError, TieConvention, UserProfile,
};
use crate::report::{
    figure5_data, histogram_data, summarize, write_figure5_csv, write_histogram_csv,
    HistogramDimension, ReportError,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("output directory {0} is locked by another run (remove the lock file if stale)")]
    Locked(PathBuf),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("network: {0}")]
    Graph(#[from] GraphError),
    #[error("rankings: {0}")]
    Centrality(#[from] CentralityError),
    #[error("econometrics: {0}")]
    Econ(#[from] EconError),
    #[error("profiling: {0}")]
    Profile(#[from] ProfileError),
    #[error("report: {0}")]
    Report(#[from] ReportError),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Everything a run needs. Loadable from TOML; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Event files, all in `format`; merged and re-sorted by timestamp.
    pub inputs: Vec<PathBuf>,
    /// `csv` or `json`.
    pub format: String,
    /// Column overrides, `source=canonical`.
    pub map: Vec<String>,
    /// `date,usd_per_eth` CSV, required when events lack USD prices.
    pub rates: Option<PathBuf>,
    /// Rankings CSV for the stages that start from metrics.
    pub rankings: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub hits_tolerance: f64,
    pub hits_max_iterations: usize,
    /// Quantile for the sales/purchases role quadrants.
    pub role_threshold: f64,
    /// Count repeat sales in the unweighted HITS view.
    pub multiplicity: bool,
    /// Percentile tie convention, `max` or `min`.
    pub ties: String,
    /// Rankings CSV order.
    pub sort_key: String,
    /// Growth factor between histogram bin edges.
    pub histogram_base: f64,
    /// Volume share for the top-share concentration figure.
    pub top_share_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hits = HitsConfig::default();
        RunConfig {
            inputs: Vec::new(),
            format: "csv".into(),
            map: Vec::new(),
            rates: None,
            rankings: None,
            output_dir: PathBuf::from("artrank-out"),
            hits_tolerance: hits.tolerance,
            hits_max_iterations: hits.max_iterations,
            role_threshold: 0.95,
            multiplicity: false,
            ties: "max".into(),
            sort_key: "w_authority".into(),
            histogram_base: 2.0,
            top_share_fraction: 0.8,
        }
    }
}

/// Optional values layered over a [`RunConfig`] (flags and environment).
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub inputs: Vec<PathBuf>,
    pub format: Option<String>,
    pub map: Vec<String>,
    pub rates: Option<PathBuf>,
    pub rankings: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub hits_tolerance: Option<f64>,
    pub hits_max_iterations: Option<usize>,
    pub role_threshold: Option<f64>,
    pub multiplicity: Option<bool>,
    pub ties: Option<String>,
    pub sort_key: Option<String>,
    pub histogram_base: Option<f64>,
    pub top_share_fraction: Option<f64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Loads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.inputs.iter_mut().for_each(rebase);
        cfg.rates.iter_mut().for_each(rebase);
        cfg.rankings.iter_mut().for_each(rebase);
        rebase(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn apply(mut self, o: ConfigOverrides) -> Self {
        if !o.inputs.is_empty() {
            self.inputs = o.inputs;
        }
        self.map.extend(o.map);
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = o.$field { self.$field = v; } )* };
        }
        set!(
            format,
            output_dir,
            hits_tolerance,
            hits_max_iterations,
            role_threshold,
            multiplicity,
            ties,
            sort_key,
            histogram_base,
            top_share_fraction
        );
        if o.rates.is_some() {
            self.rates = o.rates;
        }
        if o.rankings.is_some() {
            self.rankings = o.rankings;
        }
        self
    }

    pub fn input_format(&self) -> Result<InputFormat, PipelineError> {
        self.format.parse().map_err(PipelineError::Config)
    }

    pub fn field_map(&self) -> Result<FieldMap, PipelineError> {
        Ok(FieldMap::from_overrides(&self.map)?)
    }

    pub fn rank_config(&self) -> RankConfig {
        RankConfig {
            hits: HitsConfig {
                tolerance: self.hits_tolerance,
                max_iterations: self.hits_max_iterations,
            },
            multiplicity: self.multiplicity,
        }
    }

    pub fn profile_config(&self) -> Result<ProfileConfig, PipelineError> {
        Ok(ProfileConfig {
            role_threshold: self.role_threshold,
            ties: self
                .ties
                .parse::<TieConvention>()
                .map_err(PipelineError::Config)?,
        })
    }

    pub fn sort_key(&self) -> Result<SortKey, PipelineError> {
        self.sort_key.parse().map_err(PipelineError::Config)
    }

    /// Checks numeric ranges, enum names and that input paths exist.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.input_format()?;
        self.field_map()?;
        self.profile_config()?;
        self.sort_key()?;
        self.rank_config().hits.validate()?;
        if !(self.role_threshold > 0.0 && self.role_threshold < 1.0) {
            return bad(format!(
                "role_threshold must lie in (0, 1), got {}",
                self.role_threshold
            ));
        }
        if !(self.histogram_base > 1.0 && self.histogram_base.is_finite()) {
            return bad(format!(
                "histogram_base must exceed 1, got {}",
                self.histogram_base
            ));
        }
        if !(self.top_share_fraction > 0.0 && self.top_share_fraction <= 1.0) {
            return bad(format!(
                "top_share_fraction must lie in (0, 1], got {}",
                self.top_share_fraction
            ));
        }
        for p in self.inputs.iter().chain(&self.rates).chain(&self.rankings) {
            if !p.is_file() {
                return bad(format!("{} does not exist", p.display()));
            }
        }
        Ok(())
    }

    fn require_inputs(&self) -> Result<(), PipelineError> {
        if self.inputs.is_empty() {
            return Err(PipelineError::Config("no input event files given".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".artrank.lock";

/// An output directory owned by one run.
#[derive(Debug)]
pub struct OutputDir {
    path: PathBuf,
    lock: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn open(path: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(path).map_err(io_err(path))?;
        let lock = path.join(LOCK_FILE);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
        {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(PipelineError::Locked(path.to_path_buf()))
            }
            Err(e) => return Err(io_err(&lock)(e)),
        }
        Ok(OutputDir {
            path: path.to_path_buf(),
            lock,
            entries: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Renders an artifact in memory, writes it, and records its hash.
    pub fn write<F>(&mut self, name: &str, render: F) -> Result<(), PipelineError>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<(), PipelineError>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        let target = self.path.join(name);
        fs::write(&target, &buf).map_err(io_err(&target))?;
        self.entries.retain(|e| e.file != name);
        self.entries.push(ManifestEntry {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(&buf)),
            bytes: buf.len(),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), PipelineError> {
        self.write(name, |b| {
            serde_json::to_writer_pretty(&mut *b, value)?;
            b.push(b'\n');
            Ok(())
        })
    }

    /// Writes `manifest.json` and releases the lock.
    pub fn finish(mut self) -> Result<Manifest, PipelineError> {
        self.entries.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = Manifest {
            files: self.entries.clone(),
        };
        let target = self.path.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&target, text).map_err(io_err(&target))?;
        Ok(manifest)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// Result of reading and converting every input file.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub log: EventLog,
    pub reports: Vec<IngestReport>,
    pub converted: usize,
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    total_records: usize,
    accepted: usize,
    rejected: usize,
    zero_price: usize,
    converted: usize,
    sources: &'a [IngestReport],
}

/// Parses every input, merges them by timestamp, and converts ETH-only
/// prices when a rate table is configured.
pub fn ingest(cfg: &RunConfig) -> Result<IngestOutcome, PipelineError> {
    cfg.require_inputs()?;
    let format = cfg.input_format()?;
    let map = cfg.field_map()?;
    let mut events = Vec::new();
    let mut reports = Vec::new();
    for path in &cfg.inputs {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let name = path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        let (log, rejects) = parse_events(std::io::BufReader::new(file), format, &map, &name)?;
        reports.push(IngestReport {
            meta: log.meta.clone(),
            rejects,
        });
        events.extend(log.events);
    }
    let names: Vec<&str> = reports.iter().map(|r| r.meta.source.as_str()).collect();
    let mut log = EventLog::from_events(&names.join(","), events);
    log.meta.total_records = reports.iter().map(|r| r.meta.total_records).sum();
    log.meta.rejected = reports.iter().map(|r| r.meta.rejected).sum();

    let pending = log.meta.needs_conversion;
    if pending > 0 {
        let Some(rates_path) = &cfg.rates else {
            return Err(PipelineError::Config(format!(
                "{pending} event(s) have only an ETH price; supply a rate table with `rates`"
            )));
        };
        let file = fs::File::open(rates_path).map_err(io_err(rates_path))?;
        let rates = RateTable::from_csv(std::io::BufReader::new(file))?;
        log = convert_currency(&log, &rates)?;
    }
    Ok(IngestOutcome {
        log,
        reports,
        converted: pending,
    })
}

pub fn write_ingest(out: &mut OutputDir, ingest: &IngestOutcome) -> Result<(), PipelineError> {
    out.write("events.csv", |b| Ok(write_events_csv(&ingest.log, b)?))?;
    let meta = &ingest.log.meta;
    out.write_json(
        "ingest_report.json",
        &IngestSummary {
            total_records: meta.total_records,
            accepted: meta.accepted,
            rejected: meta.rejected,
            zero_price: meta.zero_price,
            converted: ingest.converted,
            sources: &ingest.reports,
        },
    )
}

pub fn write_rank(
    out: &mut OutputDir,
    net: &CollectorArtistNetwork,
    rankings: &Rankings,
    key: SortKey,
) -> Result<(), PipelineError> {
    out.write("edges.csv", |b| Ok(net.write_edge_list(b)?))?;
    out.write("rankings.csv", |b| {
        Ok(write_rankings_csv(rankings, key, b)?)
    })?;
    out.write_json(
        "hits.json",
        &serde_json::json!({
            "nodes": net.node_count(),
            "edges": net.edge_count(),
            "dropped_buybacks": net.dropped_buybacks(),
            "weighted": rankings.weighted_run,
            "unweighted": rankings.unweighted_run,
        }),
    )
}

pub fn write_concentration(
    out: &mut OutputDir,
    rankings: &Rankings,
    fraction: f64,
) -> Result<(), PipelineError> {
    let metrics = rankings.metrics();
    let mut summary = serde_json::Map::new();
    for (side, volumes) in [
        ("sellers", seller_volumes(&metrics)),
        ("buyers", buyer_volumes(&metrics)),
    ] {
        let curve = lorenz(&volumes)?;
        let share = top_share(&volumes, fraction)?;
        out.write(&format!("lorenz_{side}.csv"), |b| Ok(curve.write_csv(b)?))?;
        out.write_json(&format!("lorenz_{side}.json"), &curve.sidecar_json())?;
        summary.insert(
            side.to_string(),
            serde_json::json!({
                "gini": curve.gini,
                "n": curve.n,
                "total": curve.total,
                "volume_fraction": fraction,
                "top_share": share,
            }),
        );
    }
    out.write_json("concentration.json", &summary)
}

pub fn write_correlation(out: &mut OutputDir, rankings: &Rankings) -> Result<(), PipelineError> {
    let matrix = correlation_matrix(&rankings.metrics())?;
    out.write("correlation.csv", |b| Ok(matrix.write_csv(b)?))
}

/// Named segments written to `segments.csv`.
pub fn segments(
    profiles: &[UserProfile],
) -> Result<Vec<(&'static str, Vec<&UserProfile>)>, PipelineError> {
    Ok(vec![
        (
            "blue_chip",
            match_code(profiles, patterns::BLUE_CHIP, CodeScope::Artist)?,
        ),
        (
            "rising_star",
            match_code(profiles, patterns::RISING_STAR, CodeScope::Artist)?,
        ),
        (
            "small_trader",
            match_code(profiles, patterns::SMALL_TRADER, CodeScope::Full)?,
        ),
        ("top_trader", top_traders(profiles)),
    ])
}

pub fn write_profiles(out: &mut OutputDir, profiles: &[UserProfile]) -> Result<(), PipelineError> {
    out.write("profiles.jsonl", |b| Ok(write_profiles_jsonl(profiles, b)?))?;
    let segs = segments(profiles)?;
    out.write("segments.csv", |b| {
        let err = |e: csv::Error| PipelineError::Config(e.to_string());
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["segment", "user", "role", "artist_code", "collector_code"])
            .map_err(err)?;
        for (name, members) in &segs {
            for p in members {
                w.write_record([
                    *name,
                    p.user_id.as_str(),
                    p.role.as_str(),
                    &p.artist_code.to_string(),
                    &p.collector_code.to_string(),
                ])
                .map_err(err)?;
            }
        }
        w.flush().map_err(|e| io_err(Path::new("segments.csv"))(e))
    })
}

pub fn write_query(
    out: &mut OutputDir,
    profiles: &[UserProfile],
    pattern: &str,
    scope: CodeScope,
) -> Result<usize, PipelineError> {
    let matches = match_code(profiles, pattern, scope)?;
    out.write("query.csv", |b| Ok(write_matches_csv(&matches, b)?))?;
    Ok(matches.len())
}

pub fn write_report(
    out: &mut OutputDir,
    log: &EventLog,
    net: &CollectorArtistNetwork,
    rankings: &Rankings,
    profiles: &[UserProfile],
    histogram_base: f64,
) -> Result<(), PipelineError> {
    let summary = summarize(log, net);
    out.write_json("summary.json", &summary)?;
    out.write("summary.txt", |b| {
        b.extend_from_slice(summary.to_text().as_bytes());
        Ok(())
    })?;
    let metrics = rankings.metrics();
    for (name, dim) in [
        ("histogram_sales.csv", HistogramDimension::Sales),
        ("histogram_purchases.csv", HistogramDimension::Purchases),
    ] {
        let bins = histogram_data(&metrics, dim, histogram_base)?;
        out.write(name, |b| Ok(write_histogram_csv(&bins, b)?))?;
    }
    let rows = figure5_data(profiles);
    out.write("figure5.csv", |b| Ok(write_figure5_csv(&rows, b)?))
}

/// Loads the rankings CSV named by `rankings`.
pub fn load_rankings(cfg: &RunConfig) -> Result<Rankings, PipelineError> {
    let path = cfg
        .rankings
        .as_ref()
        .ok_or_else(|| PipelineError::Config("no rankings file given".into()))?;
    let file = fs::File::open(path).map_err(io_err(path))?;
    Ok(read_rankings_csv(std::io::BufReader::new(file))?)
}

/// The full pipeline into `output_dir`.
pub fn run(cfg: &RunConfig) -> Result<Manifest, PipelineError> {
    cfg.validate()?;
    cfg.require_inputs()?;
    let mut out = OutputDir::open(&cfg.output_dir)?;
    let ingested = ingest(cfg)?;
    write_ingest(&mut out, &ingested)?;
    let net = build_network(&ingested.log)?;
    let rankings = rank_users(&net, &cfg.rank_config())?;
    write_rank(&mut out, &net, &rankings, cfg.sort_key()?)?;
    write_concentration(&mut out, &rankings, cfg.top_share_fraction)?;
    write_correlation(&mut out, &rankings)?;
    let profiles = build_profiles(&rankings, &cfg.profile_config()?)?;
    write_profiles(&mut out, &profiles)?;
    write_report(
        &mut out,
        &ingested.log,
        &net,
        &rankings,
        &profiles,
        cfg.histogram_base,
    )?;
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_keys_and_defaults() {
        let cfg = RunConfig::from_toml_str(
            "inputs = [\"a.csv\"]\nrole_threshold = 0.9\nmap = [\"from=seller\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.inputs, vec![PathBuf::from("a.csv")]);
        assert_eq!(cfg.role_threshold, 0.9);
        assert_eq!(cfg.hits_max_iterations, 1000);
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = RunConfig::default().apply(ConfigOverrides {
            hits_tolerance: Some(1e-6),
            ties: Some("min".into()),
            map: vec!["x=buyer".into()],
            ..Default::default()
        });
        assert_eq!(cfg.hits_tolerance, 1e-6);
        assert_eq!(cfg.ties, "min");
        assert_eq!(cfg.map, vec!["x=buyer".to_string()]);
    }

    #[test]
    fn validation_catches_bad_values() {
        let ok = RunConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            RunConfig {
                role_threshold: 1.0,
                ..ok.clone()
            },
            RunConfig {
                hits_tolerance: 0.0,
                ..ok.clone()
            },
            RunConfig {
                hits_max_iterations: 0,
                ..ok.clone()
            },
            RunConfig {
                ties: "median".into(),
                ..ok.clone()
            },
            RunConfig {
                format: "xml".into(),
                ..ok.clone()
            },
            RunConfig {
                sort_key: "fame".into(),
                ..ok.clone()
            },
            RunConfig {
                histogram_base: 1.0,
                ..ok.clone()
            },
            RunConfig {
                inputs: vec!["/definitely/not/here.csv".into()],
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let first = OutputDir::open(dir.path()).unwrap();
        assert!(matches!(
            OutputDir::open(dir.path()),
            Err(PipelineError::Locked(_))
        ));
        drop(first);
        let mut again = OutputDir::open(dir.path()).unwrap();
        again
            .write("x.txt", |b| {
                b.extend_from_slice(b"abc");
                Ok(())
            })
            .unwrap();
        let m = again.finish().unwrap();
        assert_eq!(
            m.files[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(!dir.path().join(LOCK_FILE).exists());
    }
}
