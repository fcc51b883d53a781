//! Converts raw service exports into canonical trace objects with a label
//! dictionary, then prints how many objects fill each dimension.
//!
//!     cargo run --example ingest_exports -- [records.jsonl] [dictionary.json]

use std::path::PathBuf;

use w5h::ingest::{load_raw_corpus, LabelDictionary};
use w5h::DimensionTag;

fn main() -> w5h::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let records = args.next().unwrap_or_else(|| fixtures.join("raw200.jsonl"));
    let dict = args.next().unwrap_or_else(|| fixtures.join("dictionary.json"));

    let dict = LabelDictionary::load(&dict)?;
    let report = load_raw_corpus(&[records.as_path()], &dict)?;
    println!("{} objects from {}", report.objects.len(), records.display());
    for tag in DimensionTag::ALL {
        let filled = report.objects.iter().filter(|o| !o.get(tag).is_empty()).count();
        let values: usize = report.objects.iter().map(|o| o.get(tag).len()).sum();
        println!("{:>6}: {filled:>4} objects, {values:>4} values", tag.as_str());
    }
    for (label, n) in &report.unmapped {
        println!("unmapped label {label:?} seen {n} times");
    }
    for w in report.warnings.iter().take(5) {
        println!("warning: {w}");
    }
    if let Some(o) = report.objects.first() {
        println!("\nfirst object:\n{}", serde_json::to_string_pretty(o)?);
    }
    Ok(())
}
