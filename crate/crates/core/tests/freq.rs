mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use w5h::freq::{compute_frequency, load_index, save_index, FreqIndex, GroupKey, TimeKey, WeightConfig};
use w5h::resolve::ErMode;
use w5h::{Error, LocationRef, PersonRef, TraceObject};

fn obj(id: &str, src: &str, who: &[&str], when: &[&str], places: &[&str]) -> TraceObject {
    let mut o = TraceObject::new(id, src);
    o.dims.who = who.iter().map(|w| PersonRef::named(*w).with_entity(*w)).collect();
    o.dims.when = when.iter().map(|t| t.parse().unwrap()).collect();
    o.dims.where_ = places.iter().map(|p| LocationRef::new(*p)).collect();
    o
}

#[test]
fn empty_corpus_has_empty_maps() {
    let idx = compute_frequency(&[], &WeightConfig::default()).unwrap();
    assert_eq!(idx, FreqIndex::default());
}

#[test]
fn one_object_one_increment_per_rule() {
    let idx = compute_frequency(&[obj("o", "fb", &["a", "b"], &["2017-04"], &[])], &WeightConfig::default()).unwrap();
    let g = GroupKey::new(["a", "b"]);
    for u in ["a", "b"] {
        assert_eq!(idx.user(u), 1.0);
        assert_eq!(idx.user_src("fb", u), 1.0);
        for t in ["2017", "2017-04", "--04"] {
            let k: TimeKey = t.parse().unwrap();
            assert_eq!(idx.user_time(u, k), 1.0);
            assert_eq!(idx.user_time_src("fb", u, k), 1.0);
            assert_eq!(idx.group_time(&g, k), 1.0);
        }
    }
    assert_eq!(idx.group(&g), 1.0);
    assert_eq!(idx.f_user_time.len(), 6);
    assert!(idx.f_loc.is_empty());
}

#[test]
fn unresolved_reference_names_the_object() {
    let mut o = obj("x9", "fb", &[], &[], &[]);
    o.dims.who.push(PersonRef::named("Nobody"));
    match compute_frequency(&[o], &WeightConfig::default()) {
        Err(Error::Unresolved(id)) => assert_eq!(id, "x9"),
        r => panic!("unexpected {r:?}"),
    }
}

#[test]
fn synthetic_corpus_matches_naive_recount() {
    let corpus = common::resolved_synth(&common::small_spec(50, 11), ErMode::Enabled);
    let idx = compute_frequency(&corpus, &WeightConfig::default()).unwrap();
    assert_eq!(common::flatten(&idx), common::naive_recount(&corpus));
}

#[test]
fn repeated_identical_times_count_once() {
    let idx = compute_frequency(
        &[obj("o", "fb", &["a"], &["2017-04-22", "2017-04-22T10:00"], &[])],
        &WeightConfig::default(),
    )
    .unwrap();
    assert_eq!(idx.user_time("a", "2017-04-22".parse().unwrap()), 1.0);
}

#[test]
fn role_weights_scale_counts() {
    let mut o = obj("o", "gmail", &["a", "b"], &["2017"], &[]);
    o.dims.who[0].role = Some("from".into());
    o.dims.who[1].role = Some("to".into());
    let weights = WeightConfig {
        role_weights: BTreeMap::from([("from".to_string(), 2.0), ("to".to_string(), 0.5)]),
    };
    let idx = compute_frequency(&[o], &weights).unwrap();
    assert_eq!(idx.user("a"), 2.0);
    assert_eq!(idx.user("b"), 0.5);
    assert_eq!(idx.group(&GroupKey::new(["a", "b"])), 1.0);
}

#[test]
fn persistence_round_trip_and_corruption() {
    let corpus = common::resolved_synth(&common::small_spec(50, 11), ErMode::Enabled);
    let idx = compute_frequency(&corpus, &WeightConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("freq.idx");
    save_index(&idx, &path, "c", "w").unwrap();
    assert_eq!(load_index(&path).unwrap(), idx);

    let bytes = std::fs::read(&path).unwrap();
    let truncated = dir.path().join("truncated.idx");
    std::fs::write(&truncated, &bytes[..bytes.len() * 2 / 3]).unwrap();
    assert!(matches!(load_index(&truncated), Err(Error::Checksum)));

    let text = String::from_utf8(bytes).unwrap();
    let future = dir.path().join("future.idx");
    std::fs::write(&future, text.replacen("\"format_version\":1", "\"format_version\":999", 1)).unwrap();
    assert!(matches!(load_index(&future), Err(Error::VersionMismatch { found: 999, .. })));
}

fn arb_corpus() -> impl Strategy<Value = Vec<TraceObject>> {
    let one = (
        prop::sample::select(vec!["fb", "gmail", "tw"]),
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 0..4),
        prop::collection::vec(prop::sample::select(vec!["2016", "2017-04", "2017-04-22", "--06", "2016-06-01"]), 0..3),
        prop::collection::vec(prop::sample::select(vec!["Paris", "Lima", "Oslo"]), 0..2),
    );
    prop::collection::vec(one, 0..25).prop_map(|objs| {
        objs.into_iter()
            .enumerate()
            .map(|(i, (s, who, when, wh))| obj(&format!("o{i}"), s, &who, &when, &wh))
            .collect()
    })
}

fn per_source_sums(idx: &FreqIndex) -> Vec<bool> {
    let mut user: BTreeMap<&str, f64> = BTreeMap::new();
    for ((_, u), v) in &idx.f_user_src {
        *user.entry(u).or_default() += v;
    }
    let mut group: BTreeMap<&GroupKey, f64> = BTreeMap::new();
    for ((_, g), v) in &idx.f_group_src {
        *group.entry(g).or_default() += v;
    }
    let mut ut: BTreeMap<(&str, TimeKey), f64> = BTreeMap::new();
    for ((_, u, t), v) in &idx.f_user_time_src {
        *ut.entry((u, *t)).or_default() += v;
    }
    let mut loc: BTreeMap<&str, f64> = BTreeMap::new();
    for ((_, l), v) in &idx.f_loc_src {
        *loc.entry(l).or_default() += v;
    }
    vec![
        user.len() == idx.f_user.len() && user.iter().all(|(u, v)| idx.user(u) == *v),
        group.len() == idx.f_group.len() && group.iter().all(|(g, v)| idx.group(g) == *v),
        ut.len() == idx.f_user_time.len() && ut.iter().all(|((u, t), v)| idx.user_time(u, *t) == *v),
        loc.len() == idx.f_loc.len() && loc.iter().all(|(l, v)| idx.loc(l) == *v),
    ]
}

proptest! {
    #[test]
    fn totals_are_sums_of_sources(corpus in arb_corpus()) {
        let idx = compute_frequency(&corpus, &WeightConfig::default()).unwrap();
        prop_assert!(per_source_sums(&idx).into_iter().all(|ok| ok));
        prop_assert_eq!(common::flatten(&idx), common::naive_recount(&corpus));
    }

    #[test]
    fn build_is_additive(corpus in arb_corpus(), extra in arb_corpus()) {
        let w = WeightConfig::default();
        let mut all = corpus.clone();
        all.extend(extra.iter().cloned().enumerate().map(|(i, mut o)| { o.id = format!("x{i}"); o }));
        let mut incremental = compute_frequency(&corpus, &w).unwrap();
        for o in &all[corpus.len()..] {
            incremental.add_object(o, &w).unwrap();
        }
        prop_assert_eq!(incremental, compute_frequency(&all, &w).unwrap());
    }

    #[test]
    fn supersets_never_credit_subgroups(corpus in arb_corpus()) {
        let w = WeightConfig::default();
        let base = compute_frequency(&corpus, &w).unwrap();
        let mut grown = corpus.clone();
        grown.push(obj("big", "fb", &["a", "b", "c"], &["2017-04"], &[]));
        let after = compute_frequency(&grown, &w).unwrap();
        for sub in [vec!["a", "b"], vec!["b", "c"], vec!["a"]] {
            let g = GroupKey::new(sub);
            prop_assert_eq!(after.group(&g), base.group(&g));
            prop_assert_eq!(after.group_time(&g, "2017".parse().unwrap()), base.group_time(&g, "2017".parse().unwrap()));
        }
        let abc = GroupKey::new(["a", "b", "c"]);
        prop_assert_eq!(after.group(&abc), base.group(&abc) + 1.0);
    }
}
