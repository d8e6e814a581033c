//! Turn sales into the collector→artist network and look at its adjacency
//! views.
//!
//! cargo run --example build_network

use artrank::graph::{adjacency, build_network, Weighting};
use artrank::ingest::{parse_events, FieldMap, InputFormat};

const SALES: &str = "\
seller,buyer,creator,price_usd,timestamp,artwork_id
ada,bo,ada,1200,2021-03-01T10:00:00Z,t1
ada,cy,ada,800,2021-03-02T10:00:00Z,t2
bo,cy,ada,2500,2021-03-05T10:00:00Z,t1
dee,bo,dee,300,2021-03-06T10:00:00Z,t3
cy,ada,ada,900,2021-03-07T10:00:00Z,t2
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (log, _) = parse_events(
        SALES.as_bytes(),
        InputFormat::Csv,
        &FieldMap::default(),
        "inline",
    )?;
    let net = build_network(&log)?;
    println!(
        "{} users, {} edges, {} buy-back(s) dropped ({} USD)",
        net.node_count(),
        net.edge_count(),
        net.dropped_buybacks(),
        net.dropped_usd()
    );

    // the resale bo -> cy still endorses the creator ada
    let e = net.edge("cy", "ada").expect("edge");
    println!("cy -> ada: {} USD over {} sales", e.total_usd, e.sale_count);

    for weighting in [
        Weighting::WeightedUsd,
        Weighting::UnweightedBinary,
        Weighting::UnweightedMultiplicity,
    ] {
        let view = adjacency(&net, weighting);
        println!("{weighting:?}:");
        for (r, c, w) in view.triplets() {
            println!("  {:>4} -> {:<4} {w}", net.nodes().id(r), net.nodes().id(c));
        }
    }

    net.write_edge_list(std::io::stdout().lock())?;
    Ok(())
}
