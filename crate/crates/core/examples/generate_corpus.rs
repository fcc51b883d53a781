//! Generates a synthetic trace corpus with planted groups and aliases and
//! writes it with its ground truth.
//!
//!     cargo run --release --example generate_corpus -- [out_dir] [objects] [seed]

use std::path::PathBuf;

use w5h::ingest::write_corpus;
use w5h::synth::{generate_corpus, SynthSpec};

fn main() -> w5h::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synth-out".into()));
    let defaults = SynthSpec::default();
    let spec = SynthSpec {
        objects: args.next().map_or(defaults.objects, |a| a.parse().expect("object count")),
        seed: args.next().map_or(defaults.seed, |a| a.parse().expect("seed")),
        ..defaults
    };
    let (corpus, truth) = generate_corpus(&spec)?;
    std::fs::create_dir_all(&out).map_err(|e| w5h::Error::Invalid(format!("{}: {e}", out.display())))?;
    write_corpus(&corpus, &out.join("corpus.jsonl"))?;
    truth.save(&out.join("truth.json"))?;

    println!("{} objects, {} people -> {}", corpus.len(), truth.entities.len(), out.display());
    for (dim, share) in &truth.population {
        println!("  {dim:>5} populated in {:5.1}% of objects", share * 100.0);
    }
    for g in &truth.groups {
        println!(
            "  group {:?} on {}: planted {:.3}, observed {:.3}",
            g.members, g.home_source, g.planted_rate, g.observed_rate
        );
    }
    let aliased = truth.entities.iter().filter(|e| e.surface_forms.len() > 1).count();
    println!("  {aliased} people appear under more than one surface form");
    Ok(())
}
