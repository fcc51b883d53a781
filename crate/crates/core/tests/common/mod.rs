//! Helpers shared by the integration test targets, including the oracles
//! that recompute results without going through the library code paths.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use w5h::freq::{FreqIndex, GroupKey, TimeKey};
use w5h::ingest::load_corpus;
use proptest::prelude::*;
use w5h::resolve::{resolve_corpus, ErMode, GeocodeCache, PersonEntity};
use w5h::synth::{generate_corpus, SynthSpec};
use w5h::TraceObject;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// The post with two tagged people plus four related traces.
pub fn figure1_corpus() -> Vec<TraceObject> {
    let mut corpus = load_corpus(&fixture("figure1.jsonl")).unwrap();
    resolve_corpus(&mut corpus, &GeocodeCache::default(), ErMode::Enabled);
    corpus
}

/// A small synthetic spec that keeps every structural feature of the default.
pub fn small_spec(objects: usize, seed: u64) -> SynthSpec {
    SynthSpec {
        objects,
        seed,
        entities: 20,
        vocabulary: 400,
        where_rate: 0.1,
        ..SynthSpec::default()
    }
}

pub fn resolved_synth(spec: &SynthSpec, mode: ErMode) -> Vec<TraceObject> {
    let (mut corpus, _) = generate_corpus(spec).unwrap();
    resolve_corpus(&mut corpus, &GeocodeCache::default(), mode);
    corpus
}

/// Counter families as plain integer maps with string keys.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Recount {
    pub user: BTreeMap<String, u64>,
    pub user_src: BTreeMap<String, u64>,
    pub group: BTreeMap<String, u64>,
    pub group_src: BTreeMap<String, u64>,
    pub user_time: BTreeMap<String, u64>,
    pub user_time_src: BTreeMap<String, u64>,
    pub group_time: BTreeMap<String, u64>,
    pub loc: BTreeMap<String, u64>,
    pub loc_src: BTreeMap<String, u64>,
}

fn inc(map: &mut BTreeMap<String, u64>, key: String) {
    *map.entry(key).or_insert(0) += 1;
}

fn time_strings(y: Option<i32>, m: Option<u8>, d: Option<u8>) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(y) = y {
        out.push(format!("{y:04}"));
        if let Some(m) = m {
            out.push(format!("{y:04}-{m:02}"));
            if let Some(d) = d {
                out.push(format!("{y:04}-{m:02}-{d:02}"));
            }
        }
    }
    if let Some(m) = m {
        out.push(format!("--{m:02}"));
    }
    out
}

/// Single pass over the corpus with unit weights, written without the
/// index builder's types.
pub fn naive_recount(corpus: &[TraceObject]) -> Recount {
    let mut r = Recount::default();
    for o in corpus {
        let s = &o.source;
        let people: BTreeSet<String> = o.dims.who.iter().map(|p| p.entity_id.clone().unwrap()).collect();
        let group = people.iter().cloned().collect::<Vec<_>>().join("+");
        let times: BTreeSet<String> = o
            .dims
            .when
            .iter()
            .flat_map(|t| time_strings(t.get_year(), t.get_month(), t.get_day()))
            .collect();
        for u in &people {
            inc(&mut r.user, u.clone());
            inc(&mut r.user_src, format!("{s}/{u}"));
            for t in &times {
                inc(&mut r.user_time, format!("{u}@{t}"));
                inc(&mut r.user_time_src, format!("{s}/{u}@{t}"));
            }
        }
        if !people.is_empty() {
            inc(&mut r.group, group.clone());
            inc(&mut r.group_src, format!("{s}/{group}"));
            for t in &times {
                inc(&mut r.group_time, format!("{group}@{t}"));
            }
        }
        for l in &o.dims.where_ {
            let key = l.key();
            inc(&mut r.loc, key.clone());
            inc(&mut r.loc_src, format!("{s}/{key}"));
        }
    }
    r
}

fn as_count(v: f64) -> u64 {
    assert!(v >= 0.0 && v.fract() == 0.0, "counter {v} is not a non-negative integer");
    v as u64
}

fn gk(g: &GroupKey) -> String {
    g.members().join("+")
}

fn tk(t: &TimeKey) -> String {
    t.to_string()
}

/// Converts a built index into the recount's shape.
pub fn flatten(idx: &FreqIndex) -> Recount {
    let mut r = Recount::default();
    for (k, &v) in &idx.f_user {
        r.user.insert(k.clone(), as_count(v));
    }
    for ((s, u), &v) in &idx.f_user_src {
        r.user_src.insert(format!("{s}/{u}"), as_count(v));
    }
    for (g, &v) in &idx.f_group {
        r.group.insert(gk(g), as_count(v));
    }
    for ((s, g), &v) in &idx.f_group_src {
        r.group_src.insert(format!("{s}/{}", gk(g)), as_count(v));
    }
    for ((u, t), &v) in &idx.f_user_time {
        r.user_time.insert(format!("{u}@{}", tk(t)), as_count(v));
    }
    for ((s, u, t), &v) in &idx.f_user_time_src {
        r.user_time_src.insert(format!("{s}/{u}@{}", tk(t)), as_count(v));
    }
    for ((g, t), &v) in &idx.f_group_time {
        r.group_time.insert(format!("{}@{}", gk(g), tk(t)), as_count(v));
    }
    for (k, &v) in &idx.f_loc {
        r.loc.insert(k.clone(), as_count(v));
    }
    for ((s, k), &v) in &idx.f_loc_src {
        r.loc_src.insert(format!("{s}/{k}"), as_count(v));
    }
    r
}

/// Lowercase alphanumeric runs.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Brute-force BM25 over raw document texts; the query is a bag of terms.
pub fn oracle_bm25(docs: &[String], doc: usize, query: &[&str], k1: f64, b: f64) -> f64 {
    let toks: Vec<Vec<String>> = docs.iter().map(|d| oracle_tokens(d)).collect();
    let n = docs.len() as f64;
    let avgdl = toks.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let dl = toks[doc].len() as f64;
    query
        .iter()
        .map(|q| {
            let tf = toks[doc].iter().filter(|t| t == q).count() as f64;
            let df = toks.iter().filter(|d| d.iter().any(|t| t == q)).count() as f64;
            if tf == 0.0 {
                return 0.0;
            }
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl))
        })
        .sum()
}

/// Brute-force raw-tf TFIDF with natural-log idf.
pub fn oracle_tfidf(docs: &[String], doc: usize, query: &[&str]) -> f64 {
    let toks: Vec<Vec<String>> = docs.iter().map(|d| oracle_tokens(d)).collect();
    let n = docs.len() as f64;
    query
        .iter()
        .map(|q| {
            let tf = toks[doc].iter().filter(|t| t == q).count() as f64;
            let df = toks.iter().filter(|d| d.iter().any(|t| t == q)).count() as f64;
            if tf == 0.0 {
                0.0
            } else {
                tf * (n / df).ln()
            }
        })
        .sum()
}

/// Rank of the target inside its tie block, found by sorting and scanning.
pub fn oracle_tie_rank(scores: &[f64], target: usize) -> f64 {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let t = scores[target];
    let same = |x: f64| (x - t).abs() <= 1e-9 * x.abs().max(t.abs()).max(1.0);
    let first = sorted.iter().position(|&x| same(x)).unwrap() + 1;
    let last = sorted.iter().rposition(|&x| same(x)).unwrap() + 1;
    (first + last) as f64 / 2.0
}

/// Random person mentions over a small population, mixing full mentions,
/// reversed names, initials and bare emails so that chains of matches occur.
pub fn random_refs(n: usize, seed: u64) -> Vec<w5h::PersonRef> {
    use rand::{Rng, SeedableRng};
    const FIRST: &[&str] = &["ann", "bob", "cy", "dee", "eli", "fay", "gus", "hal"];
    const LAST: &[&str] = &["ames", "bell", "cole", "dunn", "eddy"];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let f = FIRST[rng.random_range(0..FIRST.len())];
            let l = LAST[rng.random_range(0..LAST.len())];
            let email = format!("{f}.{l}{}@x.org", rng.random_range(0..2));
            let cap = |s: &str| s[..1].to_uppercase() + &s[1..];
            match rng.random_range(0..5) {
                0 => w5h::PersonRef::named(format!("{} {}", cap(f), cap(l))),
                1 => w5h::PersonRef::named(format!("{}, {}", cap(l), cap(f))).with_email(email),
                2 => w5h::PersonRef::named("").with_email(email.to_uppercase()),
                3 => w5h::PersonRef::named(format!("{}. {}", cap(f)[..1].to_string(), cap(l))).with_email(email),
                _ => w5h::PersonRef::named(format!("{} {}", cap(f), cap(l))).with_email(email),
            }
        })
        .collect()
}

/// One resolved person as plain sets: (names, lowercase emails, id).
pub type OracleEntity = (BTreeSet<String>, BTreeSet<String>, String);

fn oracle_key(name: &str) -> BTreeSet<String> {
    oracle_tokens(name).into_iter().filter(|t| t.chars().count() > 1).collect()
}

fn oracle_match(a: &OracleEntity, b: &OracleEntity) -> bool {
    if a.1.iter().any(|e| b.1.contains(e)) {
        return true;
    }
    let ka: BTreeSet<BTreeSet<String>> = a.0.iter().map(|n| oracle_key(n)).filter(|k| !k.is_empty()).collect();
    b.0.iter().map(|n| oracle_key(n)).any(|k| !k.is_empty() && ka.contains(&k))
}

/// Repeated full scans merging any matching pair until nothing changes.
pub fn naive_closure(refs: &[w5h::PersonRef]) -> Vec<OracleEntity> {
    let mut ents: Vec<OracleEntity> = refs
        .iter()
        .map(|r| {
            let names = [r.raw_name.trim().to_string()].into_iter().filter(|n| !n.is_empty()).collect();
            let emails = r.raw_emails.iter().map(|e| e.trim().to_lowercase()).collect();
            (names, emails, w5h::resolve::record_id(r))
        })
        .collect();
    loop {
        let mut merged = false;
        'scan: for i in 0..ents.len() {
            for j in 0..ents.len() {
                if i != j && oracle_match(&ents[i], &ents[j]) {
                    let b = ents.remove(i.max(j));
                    let a = &mut ents[i.min(j)];
                    a.0.extend(b.0);
                    a.1.extend(b.1);
                    a.2 = a.2.clone().min(b.2);
                    merged = true;
                    break 'scan;
                }
            }
        }
        if !merged {
            break;
        }
    }
    ents.sort_by(|a, b| a.2.cmp(&b.2));
    ents
}

pub fn as_oracle(entities: &[w5h::resolve::PersonEntity]) -> Vec<OracleEntity> {
    let mut out: Vec<OracleEntity> = entities
        .iter()
        .map(|e| (e.names.clone(), e.emails.clone(), e.entity_id.clone()))
        .collect();
    out.sort_by(|a, b| a.2.cmp(&b.2));
    out
}

/// Five short documents: (what, who names).
pub const TOY: [(&str, &[&str]); 5] = [
    ("March for Science march", &["John Smith", "Anna Smith"]),
    ("science fair at the science museum", &["Anna Lee"]),
    ("river picnic", &["John Smith"]),
    ("March of the penguins", &[]),
    ("budget review for science", &["Bob Stone"]),
];

pub fn toy_corpus() -> Vec<TraceObject> {
    TOY.iter()
        .enumerate()
        .map(|(i, (what, who))| {
            let mut o = TraceObject::new(format!("d{}", i + 1), "note");
            o.dims.what = vec![what.to_string()];
            o.dims.who = who.iter().map(|n| w5h::PersonRef::named(*n)).collect();
            o
        })
        .collect()
}

pub fn toy_what() -> Vec<String> {
    TOY.iter().map(|(w, _)| w.to_string()).collect()
}

pub fn toy_who() -> Vec<String> {
    TOY.iter().map(|(_, p)| p.join(" ")).collect()
}

/// Every field concatenated, the source name included.
pub fn toy_all() -> Vec<String> {
    TOY.iter().map(|(w, p)| format!("{w} {} note", p.join(" "))).collect()
}

pub fn ent(id: &str, names: &[&str], emails: &[&str]) -> PersonEntity {
    PersonEntity {
        entity_id: id.into(),
        names: names.iter().map(|s| s.to_string()).collect(),
        emails: emails.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn arb_entity(tag: &'static str) -> impl Strategy<Value = PersonEntity> {
    let names = prop::sample::subsequence(vec!["Ann Ames", "Ames, Ann", "Bob Bell", "B. Bell", "Cy"], 0..3);
    let emails = prop::sample::subsequence(vec!["a@x", "b@x", "c@x", "d@x"], 0..3);
    (names, emails, 0u8..50).prop_map(move |(n, e, k)| ent(&format!("{tag}{k:02}"), &n, &e))
}

/// Copies one name or email of `from` into `into` so the two match.
pub fn link(mut into: PersonEntity, from: &PersonEntity, pick: usize) -> PersonEntity {
    let items: Vec<(bool, &String)> =
        from.names.iter().map(|n| (true, n)).chain(from.emails.iter().map(|e| (false, e))).collect();
    if items.is_empty() {
        return into;
    }
    let (is_name, v) = items[pick % items.len()];
    if is_name {
        into.names.insert(v.clone());
    } else {
        into.emails.insert(v.clone());
    }
    into
}
