mod common;

use std::collections::BTreeMap;

use w5h::ingest::{load_corpus, write_corpus};
use w5h::resolve::match_person;
use w5h::synth::{generate_corpus, GroupSpec, SynthSpec};
use w5h::{Error, PersonRef};

#[test]
fn zero_objects_gives_an_empty_corpus() {
    let (corpus, truth) = generate_corpus(&SynthSpec { objects: 0, ..SynthSpec::default() }).unwrap();
    assert!(corpus.is_empty());
    assert!(truth.groups.iter().all(|g| g.observed_rate == 0.0 || g.observed_rate.is_nan()));
}

#[test]
fn default_population_rates_are_within_two_points() {
    let spec = SynthSpec::default();
    let (corpus, truth) = generate_corpus(&spec).unwrap();
    assert_eq!(corpus.len(), 5000);
    assert_eq!(truth.entities.len(), 40);
    assert_eq!(truth.groups.len(), 3);
    // measured from the written file, not from the generator's own tally
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    write_corpus(&corpus, &path).unwrap();
    let back = load_corpus(&path).unwrap();
    let n = back.len() as f64;
    let rate = |f: &dyn Fn(&w5h::TraceObject) -> bool| back.iter().filter(|o| f(o)).count() as f64 / n;
    let measured = [
        ("who", rate(&|o| !o.dims.who.is_empty()), spec.who_rate),
        ("when", rate(&|o| !o.dims.when.is_empty()), spec.when_rate),
        ("what", rate(&|o| !o.dims.what.is_empty()), spec.what_rate),
        ("where", rate(&|o| !o.dims.where_.is_empty()), spec.where_rate),
    ];
    for (name, got, target) in measured {
        assert!((got - target).abs() <= 0.02, "{name}: {got} vs {target}");
        assert!((truth.population[name] - got).abs() < 1e-12);
    }
    for (g, planted) in truth.groups.iter().zip(&spec.groups) {
        assert!((g.observed_rate - planted.rate).abs() <= 0.02, "{g:?}");
    }
}

#[test]
fn every_alias_matches_its_canonical_mention() {
    let spec = common::small_spec(1500, 17);
    let (corpus, truth) = generate_corpus(&spec).unwrap();
    let canonical: BTreeMap<&str, PersonRef> = truth
        .entities
        .iter()
        .map(|e| {
            let c = PersonRef::named(e.name.clone()).with_email(e.email.clone()).with_email(e.handle.clone());
            (e.id.as_str(), c)
        })
        .collect();
    let mut aliases = 0;
    for p in corpus.iter().flat_map(|o| &o.dims.who) {
        let id = &truth.surface_to_entity[&p.surface_key()];
        let c = &canonical[id.as_str()];
        assert!(match_person(c, p), "{p:?} does not match {c:?}");
        aliases += usize::from(p.raw_name != c.raw_name || p.raw_emails != c.raw_emails);
    }
    assert!(aliases > 100, "{aliases}");
}

#[test]
fn regeneration_is_byte_identical() {
    let spec = common::small_spec(700, 23);
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for run in 0..2 {
        let (corpus, truth) = generate_corpus(&spec).unwrap();
        let c = dir.path().join(format!("c{run}.jsonl"));
        let t = dir.path().join(format!("t{run}.json"));
        write_corpus(&corpus, &c).unwrap();
        truth.save(&t).unwrap();
        bytes.push((std::fs::read(c).unwrap(), std::fs::read(t).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
    let (other, _) = generate_corpus(&SynthSpec { seed: 24, ..spec }).unwrap();
    let mut third = Vec::new();
    write_corpus(&other, &dir.path().join("c2.jsonl")).unwrap();
    third.extend(std::fs::read(dir.path().join("c2.jsonl")).unwrap());
    assert_ne!(bytes[0].0, third);
}

#[test]
fn no_aliases_gives_the_identity_mapping() {
    let spec = SynthSpec { alias_rate: 0.0, ..common::small_spec(800, 4) };
    let (corpus, truth) = generate_corpus(&spec).unwrap();
    let mut forms: BTreeMap<&str, std::collections::BTreeSet<String>> = BTreeMap::new();
    for p in corpus.iter().flat_map(|o| &o.dims.who) {
        forms.entry(truth.surface_to_entity[&p.surface_key()].as_str()).or_default().insert(p.surface_key());
    }
    assert!(forms.values().all(|s| s.len() == 1));
    let ids: std::collections::BTreeSet<_> = truth.surface_to_entity.values().collect();
    assert_eq!(ids.len(), truth.surface_to_entity.len());
}

#[test]
fn infeasible_specs_are_rejected() {
    let big_group = SynthSpec { groups: vec![GroupSpec { size: 41, rate: 0.1 }], ..SynthSpec::default() };
    assert!(matches!(generate_corpus(&big_group), Err(Error::Infeasible(_))));
    let mut bad_mix = SynthSpec::default();
    bad_mix.sources[0].weight = 0.9;
    assert!(matches!(generate_corpus(&bad_mix), Err(Error::Infeasible(_))));
    let bad_alias = SynthSpec { alias_rate: 1.5, ..SynthSpec::default() };
    assert!(matches!(generate_corpus(&bad_alias), Err(Error::Infeasible(_))));
}
