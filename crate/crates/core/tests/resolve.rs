mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use w5h::ingest::load_corpus;
use w5h::resolve::{
    match_person, merge_person, resolve_corpus, rswoosh, CorpusTermFreq, ErMode, GeocodeCache,
};
use w5h::synth::generate_corpus;
use w5h::PersonRef;

use common::ent;

#[test]
fn match_examples() {
    let a = PersonRef::named("John Smith").with_email("js@x.com");
    assert!(match_person(&a, &PersonRef::named("Smith, John")));
    let b = PersonRef::named("J. Smith").with_email("js@x.com");
    assert!(match_person(&b, &PersonRef::named("Jane Smith").with_email("js@x.com")));
    assert!(!match_person(&PersonRef::named("John Smith"), &PersonRef::named("John Smithe")));
}

#[test]
fn merge_examples() {
    let a = ent("a", &["John Smith"], &[]);
    let b = ent("b", &["Smith John"], &["js@x.com"]);
    let m = merge_person(&a, &b);
    assert_eq!(m, ent("a", &["John Smith", "Smith John"], &["js@x.com"]));
    assert_eq!(merge_person(&a, &a), a);
}

#[test]
fn three_aliases_across_two_sources() {
    let refs = [
        PersonRef::named("Maria Lopez").with_email("maria@work.com"),
        PersonRef::named("Lopez, Maria"),
        PersonRef::named("").with_email("maria@work.com").with_email("ml@home.net"),
    ];
    let out = rswoosh(&refs);
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].names.len(), 2);
    assert_eq!(out[0].emails.len(), 2);
    assert_eq!(common::as_oracle(&out), common::naive_closure(&refs));
}

#[test]
fn trivial_rswoosh_inputs() {
    assert!(rswoosh(&[]).is_empty());
    let refs: Vec<PersonRef> = ["Ann Ames", "Bob Bell", "Cy Cole"].iter().map(|n| PersonRef::named(*n)).collect();
    assert_eq!(rswoosh(&refs).len(), 3);
}

#[test]
fn rswoosh_equals_naive_closure() {
    for seed in 0..10 {
        let refs = common::random_refs(100, seed);
        let fast = rswoosh(&refs);
        assert_eq!(common::as_oracle(&fast), common::naive_closure(&refs), "seed {seed}");
        for (i, a) in fast.iter().enumerate() {
            for b in &fast[i + 1..] {
                assert!(!match_person(a, b), "{} and {} still match", a.entity_id, b.entity_id);
            }
        }
    }
}

#[test]
fn rswoosh_ignores_input_order() {
    let refs = common::random_refs(100, 99);
    let base = rswoosh(&refs);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let mut shuffled = refs.clone();
        shuffled.shuffle(&mut rng);
        assert_eq!(rswoosh(&shuffled), base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn merge_is_idempotent_commutative_associative(
        a in common::arb_entity("a"), b in common::arb_entity("b"), c in common::arb_entity("c"), p in 0usize..8, q in 0usize..8
    ) {
        let b = common::link(b, &a, p);
        let c = common::link(c, &b, q);
        prop_assert_eq!(merge_person(&a, &a), a.clone());
        if match_person(&a, &b) {
            prop_assert_eq!(merge_person(&a, &b), merge_person(&b, &a));
        }
        if match_person(&a, &b) && match_person(&b, &c) {
            let left = merge_person(&merge_person(&a, &b), &c);
            let right = merge_person(&a, &merge_person(&b, &c));
            prop_assert_eq!(left, right);
        }
    }
}

#[test]
fn geocache_merges_synonyms_and_ranks_by_corpus_tf() {
    let cache = GeocodeCache::load(&common::fixture("geocache.json")).unwrap();
    let mut corpus = load_corpus(&common::fixture("geo_corpus.jsonl")).unwrap();
    let before = corpus.clone();

    // direct scan: how often each candidate's address terms occur in the corpus
    let campos = cache.lookup("Campos");
    let scan = |addr: &str| -> usize {
        let terms: BTreeSet<String> = common::oracle_tokens(addr).into_iter().collect();
        corpus
            .iter()
            .flat_map(|o| {
                let mut text: Vec<String> = o.dims.what.clone();
                text.extend(o.dims.where_.iter().map(|l| l.raw_text.clone()));
                text.push(o.source.clone());
                text.extend(o.dims.how.clone());
                text
            })
            .flat_map(|t| common::oracle_tokens(&t))
            .filter(|t| terms.contains(t))
            .count()
    };
    let sums: Vec<usize> = campos.iter().map(|c| scan(&c.address)).collect();
    // "campos" itself occurs once and is shared by both addresses
    assert_eq!(sums, [41, 1]);
    let tf = CorpusTermFreq::build(&corpus);
    for (c, s) in campos.iter().zip(&sums) {
        assert_eq!(tf.score(&c.address) as usize, *s);
    }

    let res = resolve_corpus(&mut corpus, &cache, ErMode::Enabled);
    let place_of = |raw: &str| {
        corpus
            .iter()
            .flat_map(|o| &o.dims.where_)
            .find(|l| l.raw_text == raw)
            .and_then(|l| l.canonical_id.clone())
            .unwrap()
    };
    let brazil = res.places.iter().find(|e| e.canonical_id == place_of("Campos")).unwrap();
    assert!(brazil.address.as_deref().unwrap().contains("Brazil"));
    assert_eq!(place_of("Greece"), place_of("Hellas"));
    let hellas = res.places.iter().find(|e| e.canonical_id == place_of("Greece")).unwrap();
    assert_eq!(hellas.surface_forms, BTreeSet::from(["Greece".to_string(), "Hellas".to_string()]));
    let sc = res.places.iter().find(|e| e.canonical_id == place_of("Student Center")).unwrap();
    assert_eq!(sc.surface_forms, BTreeSet::from(["Student Center".to_string()]));
    assert_eq!(sc.address, None);
    assert_eq!(res.places.len(), 3);

    // only where changed
    for (a, b) in before.iter().zip(&corpus) {
        assert_eq!((&a.id, &a.source, &a.dims.what, &a.dims.when, &a.dims.how), (&b.id, &b.source, &b.dims.what, &b.dims.when, &b.dims.how));
    }
}

#[test]
fn tie_between_candidates_keeps_cache_order() {
    let cache = GeocodeCache::from_json(
        r#"{"Springfield":[{"address":"Springfield, Illinois","lat":39.78,"lon":-89.65},
                           {"address":"Springfield, Oregon","lat":44.05,"lon":-123.02}]}"#,
    )
    .unwrap();
    let tf = CorpusTermFreq::build(&[]);
    let best = w5h::resolve::rank_candidates(cache.lookup("Springfield"), &tf).unwrap();
    assert_eq!(best.address, "Springfield, Illinois");
}

#[test]
fn resolution_invariants_on_synthetic_corpus() {
    let (mut corpus, truth) = generate_corpus(&common::small_spec(600, 3)).unwrap();
    let before = corpus.clone();
    let res = resolve_corpus(&mut corpus, &GeocodeCache::default(), ErMode::Enabled);

    let ids: BTreeSet<&str> = res.people.iter().map(|e| e.entity_id.as_str()).collect();
    assert_eq!(ids.len(), res.people.len());
    let mut email_owner: BTreeMap<&str, &str> = BTreeMap::new();
    for e in &res.people {
        for m in &e.emails {
            assert!(email_owner.insert(m, &e.entity_id).is_none(), "{m} in two entities");
        }
    }
    for (a, b) in before.iter().zip(&corpus) {
        assert_eq!((&a.dims.what, &a.dims.when, &a.dims.how, &a.source), (&b.dims.what, &b.dims.when, &b.dims.how, &b.source));
        for p in &b.dims.who {
            let id = p.entity_id.as_deref().expect("resolved");
            assert!(ids.contains(id));
            for m in p.raw_emails.iter().map(|m| m.to_lowercase()) {
                assert_eq!(email_owner[m.as_str()], id);
            }
        }
    }

    // resolution recovers the planted identities exactly
    let mut partition: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for p in corpus.iter().flat_map(|o| &o.dims.who) {
        let truth_id = &truth.surface_to_entity[&p.surface_key()];
        partition.entry(truth_id).or_default().insert(p.entity_id.as_deref().unwrap());
    }
    assert!(partition.values().all(|s| s.len() == 1));
    let distinct: BTreeSet<_> = partition.values().flatten().collect();
    assert_eq!(distinct.len(), partition.len());
}

#[test]
fn disabled_resolution_keeps_surface_forms_apart() {
    let spec = common::small_spec(400, 5);
    let on = common::resolved_synth(&spec, ErMode::Enabled);
    let off = common::resolved_synth(&spec, ErMode::Disabled);
    let count = |c: &[w5h::TraceObject]| {
        c.iter().flat_map(|o| &o.dims.who).filter_map(|p| p.entity_id.clone()).collect::<BTreeSet<_>>().len()
    };
    assert!(count(&off) > count(&on));
    for p in off.iter().flat_map(|o| &o.dims.who) {
        assert_eq!(p.entity_id.as_deref(), Some(p.surface_key().as_str()));
    }
}
