//! Ranking engine for art marketplaces.
//!
//! Sale events are turned into a collector→artist network where every sale
//! adds weight to the edge from the buyer to the original creator of the
//! artwork. On that network the crate computes HITS authority (artists) and
//! hub (collectors) scores, degree and strength, volume concentration
//! (Lorenz curve, Gini index), Kendall tau-b correlations between all eight
//! metrics, and a percentile-based user typology.
//!
//! The typical flow:
//!
//! ```no_run
//! use artrank::centrality::{rank_users, RankConfig};
//! use artrank::graph::build_network;
//! use artrank::ingest::{parse_events, FieldMap, InputFormat};
//! use artrank::profiling::{build_profiles, ProfileConfig};
//!
//! let input = std::fs::File::open("sales.csv").unwrap();
//! let (log, _rejects) =
//!     parse_events(input, InputFormat::Csv, &FieldMap::default(), "sales.csv").unwrap();
//! let net = build_network(&log).unwrap();
//! let rankings = rank_users(&net, &RankConfig::default()).unwrap();
//! let profiles = build_profiles(&rankings, &ProfileConfig::default()).unwrap();
//! ```
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability, and the `artrank` binary for the batch pipeline.

pub mod centrality;
pub mod econometrics;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod profiling;
pub mod report;
pub mod synthetic;

pub use centrality::{hits, HitsConfig, HitsScores, Rankings};
pub use graph::{build_network, AdjacencyView, CollectorArtistNetwork, Weighting};
pub use ingest::{EventLog, SaleEvent};
pub use profiling::{Level, LevelCode, Role, UserMetrics, UserProfile};
