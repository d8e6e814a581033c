//! The batch pipeline driven from code: write a synthetic log, run every
//! stage into a directory, list the manifest.
//!
//! cargo run --example full_pipeline [output-dir]

use std::fs::File;
use std::path::PathBuf;

use artrank::ingest::write_events_csv;
use artrank::pipeline::{run, RunConfig};
use artrank::synthetic::{two_sided_market, MarketConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("artrank-example"));
    std::fs::create_dir_all(&out)?;
    let input = out.join("synthetic_events.csv");
    write_events_csv(
        &two_sided_market(&MarketConfig::default(), 7),
        File::create(&input)?,
    )?;

    let cfg = RunConfig {
        inputs: vec![input],
        output_dir: out.join("run"),
        ..RunConfig::default()
    };
    cfg.validate()?;
    let manifest = run(&cfg)?;
    for entry in &manifest.files {
        println!(
            "{:>9}  {}  {}",
            entry.bytes,
            &entry.sha256[..12],
            entry.file
        );
    }
    println!("written to {}", cfg.output_dir.display());
    Ok(())
}
