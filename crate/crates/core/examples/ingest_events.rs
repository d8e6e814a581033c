//! Parse the sample sale log, report rejects, and fill in USD prices from a
//! daily ETH-USD table.
//!
//! cargo run --example ingest_events

use std::fs::File;
use std::path::Path;

use artrank::ingest::{convert_currency, parse_events, FieldMap, InputFormat, RateTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");

    // the sample uses the canonical column names; a renamed export would add
    // overrides such as `.with_override("from=seller")?`
    let map = FieldMap::default();
    let (log, rejects) = parse_events(
        File::open(fixtures.join("sample_events.csv"))?,
        InputFormat::Csv,
        &map,
        "sample_events.csv",
    )?;
    println!(
        "{} of {} rows accepted, {} zero-price, {} need conversion",
        log.meta.accepted, log.meta.total_records, log.meta.zero_price, log.meta.needs_conversion
    );
    for r in &rejects {
        println!("rejected row {}: {}", r.row, r.reason);
    }

    let rates = RateTable::from_csv(File::open(fixtures.join("sample_rates.csv"))?)?;
    let priced = convert_currency(&log, &rates)?;
    for e in &priced.events {
        println!(
            "{}  {} -> {} (creator {})  {} USD",
            e.timestamp.format("%Y-%m-%d"),
            e.seller_id,
            e.buyer_id,
            e.creator_id,
            e.price_usd.unwrap_or_default()
        );
    }

    let short = RateTable::from_csv(File::open(fixtures.join("rates_missing_day.csv"))?)?;
    if let Err(e) = convert_currency(&log, &short) {
        println!("with an incomplete table: {e}");
    }
    Ok(())
}
