//! Generates the default synthetic corpus and compares the four scorers on
//! one query group, with and without entity resolution.
//!
//!     cargo run --release --example compare_scorers -- [group] [seed]

use std::collections::BTreeMap;
use std::time::Instant;

use w5h::eval::{run_eval, summary_markdown, Method, QueryGroupSpec};
use w5h::freq::WeightConfig;
use w5h::resolve::{resolve_corpus, ErMode, GeocodeCache};
use w5h::search::{ScoringConfig, Scorer, SearchIndex};
use w5h::synth::{generate_corpus, SynthSpec};

fn main() -> w5h::Result<()> {
    let mut args = std::env::args().skip(1);
    let group: u8 = args.next().map_or(3, |a| a.parse().expect("group number"));
    let seed: u64 = args.next().map_or(42, |a| a.parse().expect("seed"));
    let started = Instant::now();

    let (raw, _truth) = generate_corpus(&SynthSpec::default())?;
    let cache = GeocodeCache::new(BTreeMap::new());
    let build = |mode| -> w5h::Result<SearchIndex> {
        let mut corpus = raw.clone();
        resolve_corpus(&mut corpus, &cache, mode);
        SearchIndex::build(corpus, &WeightConfig::default(), ScoringConfig::default())
    };
    let with_er = build(ErMode::Enabled)?;
    let without_er = build(ErMode::Disabled)?;

    let methods = [
        Method::new("w5hf", Scorer::W5hf, &with_er),
        Method::new("w5hf-no-er", Scorer::W5hf, &without_er),
        Method::new("fieldbm25", Scorer::FieldBm25, &with_er),
        Method::new("bm25", Scorer::Bm25, &with_er),
        Method::new("tfidf", Scorer::Tfidf, &with_er),
    ];
    let reports = run_eval(with_er.objects(), &[QueryGroupSpec::group(group)?], &methods, seed)?;
    print!("{}", summary_markdown(&reports));
    println!();
    for t in &reports[0].significance {
        println!("{:>10} vs {:<10} p = {:.3e}", t.method_a, t.method_b, t.test.p_value);
    }
    println!("\nfinished in {:.1?}", started.elapsed());
    Ok(())
}
