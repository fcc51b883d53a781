//! Runs one multidimensional query against a small corpus under every
//! scorer and prints the w5h-f term breakdown of the top hit.
//!
//!     cargo run --example search_traces

use std::path::PathBuf;

use w5h::freq::WeightConfig;
use w5h::ingest::load_corpus;
use w5h::resolve::{resolve_corpus, ErMode, GeocodeCache};
use w5h::search::ScoringConfig;
use w5h::{PersonRef, Query, Scorer, SearchIndex, TimePoint};

fn main() -> w5h::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/figure1.jsonl");
    let mut corpus = load_corpus(&path)?;
    resolve_corpus(&mut corpus, &GeocodeCache::default(), ErMode::Enabled);
    let index = SearchIndex::build(corpus, &WeightConfig::default(), ScoringConfig::default())?;

    let mut query = Query::default();
    query.dims.what = vec!["March for Science".into()];
    query.dims.who = vec![PersonRef::named("John Smith"), PersonRef::named("Anna Smith")];
    query.dims.when = vec![TimePoint::year(2017)];
    println!("query: {}\n", serde_json::to_string(&query)?);

    for scorer in Scorer::ALL {
        let hits = index.search(&query, scorer, 3);
        let line: Vec<String> = hits.iter().map(|r| format!("{} {:.3}", r.object_id, r.total_score)).collect();
        println!("{:>10}: {}", scorer.as_str(), line.join(", "));
    }

    if let Some(top) = index.search(&query, Scorer::W5hf, 1).first() {
        println!("\n{} under w5hf:", top.object_id);
        for (term, v) in &top.breakdown {
            println!("  {term:<36} {v:8.4}");
        }
        println!("  {:<36} {:8.4}", "total", top.total_score);
    }
    Ok(())
}
