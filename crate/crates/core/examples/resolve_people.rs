//! Merges person mentions from several services into entities and picks
//! canonical places from a geocode cache.
//!
//!     cargo run --example resolve_people

use std::path::PathBuf;

use w5h::ingest::load_corpus;
use w5h::resolve::{resolve_corpus, rswoosh, ErMode, GeocodeCache};
use w5h::PersonRef;

fn main() -> w5h::Result<()> {
    let mentions = [
        PersonRef::named("Maria Lopez").with_email("maria@work.example"),
        PersonRef::named("Lopez, Maria"),
        PersonRef::named("").with_email("maria@work.example").with_email("ml@home.example"),
        PersonRef::named("Mario Lopez"),
        PersonRef::named("M. Lopez").with_email("ml@home.example"),
    ];
    println!("{} mentions -> people:", mentions.len());
    for e in rswoosh(&mentions) {
        println!("  {}  names {:?}  emails {:?}", e.entity_id, e.names, e.emails);
    }

    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let cache = GeocodeCache::load(&fixtures.join("geocache.json"))?;
    let mut corpus = load_corpus(&fixtures.join("geo_corpus.jsonl"))?;
    let res = resolve_corpus(&mut corpus, &cache, ErMode::Enabled);
    println!("\nplaces in {} objects:", corpus.len());
    for p in &res.places {
        let address = p.address.as_deref().unwrap_or("(no geocode)");
        println!("  {:<24} {:?} -> {address}", p.canonical_id, p.surface_forms);
    }
    Ok(())
}
