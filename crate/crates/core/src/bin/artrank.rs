use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use artrank::centrality::rank_users;
use artrank::graph::build_network;
use artrank::pipeline::{self, ConfigOverrides, OutputDir, PipelineError, RunConfig};
use artrank::profiling::{build_profiles, CodeScope};

/// Collector-artist network rankings and market analytics.
///
/// Every option can also be set in a TOML config file (same key names with
/// underscores) or through an `ARTRANK_*` environment variable. Precedence:
/// flag, environment, config file, built-in default.
#[derive(Parser)]
#[command(name = "artrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize event files into events.csv + ingest_report.json.
    Ingest(Opts),
    /// Build the network and write edges.csv, rankings.csv, hits.json.
    Rank(Opts),
    /// Lorenz curves, Gini and top share from a rankings CSV.
    Concentration(Opts),
    /// Kendall tau-b matrix of the eight metrics from a rankings CSV.
    Correlate(Opts),
    /// Roles, A/B/C codes and normalized vectors from a rankings CSV.
    Profile {
        #[command(flatten)]
        opts: Opts,
        /// Code pattern to query, e.g. CCAB or A*C*A*C*; writes query.csv.
        #[arg(long)]
        query: Option<String>,
        /// Which code the query applies to: artist, collector or full.
        #[arg(long, default_value = "artist")]
        scope: String,
    },
    /// Summary statistics, histograms and figure data from event files.
    Report(Opts),
    /// Every stage in one pass.
    Run(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML config file.
    #[arg(long, env = "ARTRANK_CONFIG")]
    config: Option<PathBuf>,
    /// Event file (repeatable).
    #[arg(
        long = "input",
        short = 'i',
        env = "ARTRANK_INPUTS",
        value_delimiter = ','
    )]
    inputs: Vec<PathBuf>,
    /// Input format: csv or json.
    #[arg(long, env = "ARTRANK_FORMAT")]
    format: Option<String>,
    /// Column mapping src=dst (repeatable), dst one of seller, buyer,
    /// creator, price_eth, price_usd, timestamp, artwork_id.
    #[arg(long = "map", env = "ARTRANK_MAP", value_delimiter = ',')]
    map: Vec<String>,
    /// ETH-USD rate table (`date,usd_per_eth`).
    #[arg(long, env = "ARTRANK_RATES")]
    rates: Option<PathBuf>,
    /// Rankings CSV (concentration, correlate, profile).
    #[arg(long, env = "ARTRANK_RANKINGS")]
    rankings: Option<PathBuf>,
    /// Output directory.
    #[arg(long = "out", short = 'o', env = "ARTRANK_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// HITS stopping tolerance (L1 change), default 1e-10.
    #[arg(long, env = "ARTRANK_HITS_TOLERANCE")]
    hits_tolerance: Option<f64>,
    /// HITS iteration cap, default 1000.
    #[arg(long, env = "ARTRANK_HITS_MAX_ITERATIONS")]
    hits_max_iterations: Option<usize>,
    /// Quantile for role quadrants, default 0.95.
    #[arg(long, env = "ARTRANK_ROLE_THRESHOLD")]
    role_threshold: Option<f64>,
    /// Count repeat sales in the unweighted HITS view.
    #[arg(long, env = "ARTRANK_MULTIPLICITY")]
    multiplicity: Option<bool>,
    /// Percentile ties: max (default) or min.
    #[arg(long, env = "ARTRANK_TIES")]
    ties: Option<String>,
    /// Rankings order: authority, w_authority (default), hub, w_hub,
    /// in_degree, out_degree, in_strength, out_strength, trader_score.
    #[arg(long, env = "ARTRANK_SORT_KEY")]
    sort_key: Option<String>,
    /// Histogram bin growth factor, default 2.
    #[arg(long, env = "ARTRANK_HISTOGRAM_BASE")]
    histogram_base: Option<f64>,
    /// Volume share for the top-share figure, default 0.8.
    #[arg(long, env = "ARTRANK_TOP_SHARE_FRACTION")]
    top_share_fraction: Option<f64>,
}

impl Opts {
    fn resolve(self) -> Result<RunConfig, PipelineError> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let cfg = base.apply(ConfigOverrides {
            inputs: self.inputs,
            format: self.format,
            map: self.map,
            rates: self.rates,
            rankings: self.rankings,
            output_dir: self.output_dir,
            hits_tolerance: self.hits_tolerance,
            hits_max_iterations: self.hits_max_iterations,
            role_threshold: self.role_threshold,
            multiplicity: self.multiplicity,
            ties: self.ties,
            sort_key: self.sort_key,
            histogram_base: self.histogram_base,
            top_share_fraction: self.top_share_fraction,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(manifest) => {
            for entry in &manifest.files {
                println!("{}  {}", entry.sha256, entry.file);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<pipeline::Manifest, PipelineError> {
    match command {
        Command::Run(opts) => pipeline::run(&opts.resolve()?),
        Command::Ingest(opts) => {
            let cfg = opts.resolve()?;
            let ingested = pipeline::ingest(&cfg)?;
            let mut out = OutputDir::open(&cfg.output_dir)?;
            pipeline::write_ingest(&mut out, &ingested)?;
            out.finish()
        }
        Command::Rank(opts) => {
            let cfg = opts.resolve()?;
            let ingested = pipeline::ingest(&cfg)?;
            let net = build_network(&ingested.log)?;
            let rankings = rank_users(&net, &cfg.rank_config())?;
            let mut out = OutputDir::open(&cfg.output_dir)?;
            pipeline::write_rank(&mut out, &net, &rankings, cfg.sort_key()?)?;
            out.finish()
        }
        Command::Concentration(opts) => {
            let cfg = opts.resolve()?;
            let rankings = pipeline::load_rankings(&cfg)?;
            let mut out = OutputDir::open(&cfg.output_dir)?;
            pipeline::write_concentration(&mut out, &rankings, cfg.top_share_fraction)?;
            out.finish()
        }
        Command::Correlate(opts) => {
            let cfg = opts.resolve()?;
            let rankings = pipeline::load_rankings(&cfg)?;
            let mut out = OutputDir::open(&cfg.output_dir)?;
            pipeline::write_correlation(&mut out, &rankings)?;
            out.finish()
        }
        Command::Profile { opts, query, scope } => {
            let cfg = opts.resolve()?;
            let scope: CodeScope = scope.parse().map_err(PipelineError::Config)?;
            let rankings = pipeline::load_rankings(&cfg)?;
            let profiles = build_profiles(&rankings, &cfg.profile_config()?)?;
            let mut out = OutputDir::open(&cfg.output_dir)?;
            pipeline::write_profiles(&mut out, &profiles)?;
            if let Some(pattern) = query {
                let n = pipeline::write_query(&mut out, &profiles, &pattern, scope)?;
                eprintln!("{n} user(s) match {pattern}");
            }
            out.finish()
        }
        Command::Report(opts) => {
            let cfg = opts.resolve()?;
            let ingested = pipeline::ingest(&cfg)?;
            let net = build_network(&ingested.log)?;
            let rankings = rank_users(&net, &cfg.rank_config())?;
            let profiles = build_profiles(&rankings, &cfg.profile_config()?)?;
            let mut out = OutputDir::open(&cfg.output_dir)?;
            pipeline::write_report(
                &mut out,
                &ingested.log,
                &net,
                &rankings,
                &profiles,
                cfg.histogram_base,
            )?;
            out.finish()
        }
    }
}
