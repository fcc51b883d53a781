//! Known-item evaluation over all five query groups on a small synthetic
//! corpus, written as a report directory.
//!
//!     cargo run --release --example evaluate_scorers -- [report_dir] [scenarios]

use std::path::PathBuf;

use w5h::eval::{run_eval, summary_markdown, write_report, Method, QueryGroupSpec};
use w5h::freq::WeightConfig;
use w5h::resolve::{resolve_corpus, ErMode, GeocodeCache};
use w5h::search::ScoringConfig;
use w5h::synth::{generate_corpus, SynthSpec};
use w5h::{Scorer, SearchIndex};

fn main() -> w5h::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "eval-report".into()));
    let scenarios: usize = args.next().map_or(40, |a| a.parse().expect("scenario count"));

    let (mut corpus, _) = generate_corpus(&SynthSpec { objects: 2000, ..SynthSpec::default() })?;
    resolve_corpus(&mut corpus, &GeocodeCache::default(), ErMode::Enabled);
    let index = SearchIndex::build(corpus, &WeightConfig::default(), ScoringConfig::default())?;

    let methods: Vec<Method<'_>> = Scorer::ALL.iter().map(|&s| Method::new(s.as_str(), s, &index)).collect();
    let groups: Vec<QueryGroupSpec> =
        QueryGroupSpec::table().into_iter().map(|g| QueryGroupSpec { scenarios, ..g }).collect();
    let reports = run_eval(index.objects(), &groups, &methods, 7)?;
    write_report(&reports, &dir)?;
    print!("{}", summary_markdown(&reports));
    println!("\nreport written to {}", dir.display());
    Ok(())
}
