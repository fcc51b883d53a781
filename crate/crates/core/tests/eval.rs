mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use serde::Deserialize;
use w5h::eval::{
    evaluate_scenarios, generate_scenarios, mrr, ndcg_at_k, run_eval, target_rank, wilcoxon_signed_rank, write_report,
    Method, QueryGroupSpec,
};
use w5h::freq::WeightConfig;
use w5h::model::time_matches;
use w5h::resolve::ErMode;
use w5h::search::{sort_results, ScoringConfig};
use w5h::{Error, Scorer, ScoredResult, SearchIndex};

fn res(id: String, s: f64) -> ScoredResult {
    ScoredResult { object_id: id, total_score: s, breakdown: BTreeMap::new() }
}

#[test]
fn metric_closed_forms() {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    assert!(close(mrr(&[1.0, 2.0, 4.0]).unwrap(), 1.75 / 3.0));
    assert!(close(mrr(&[2.5]).unwrap(), 0.4));
    assert!(matches!(mrr(&[]), Err(Error::Eval(_))));
    assert!(matches!(mrr(&[1.0, 0.0]), Err(Error::Eval(_))));
    assert!(close(ndcg_at_k(1.0, 10), 1.0));
    assert!(close(ndcg_at_k(3.0, 10), 0.5));
    assert!(close(ndcg_at_k(7.0, 10), 1.0 / 3.0));
    assert_eq!(ndcg_at_k(11.0, 10), 0.0);
    assert!(close(ndcg_at_k(10.0, 10), 1.0 / 11f64.log2()));
}

#[test]
fn tie_ranks_match_the_oracle() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    for _ in 0..1000 {
        let n = rng.random_range(1..40);
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let t = rng.random_range(0..n);
        let mut ranked: Vec<ScoredResult> =
            scores.iter().enumerate().map(|(i, &s)| res(format!("o{i:02}"), s)).collect();
        sort_results(&mut ranked);
        let got = target_rank(&ranked, &format!("o{t:02}"), n);
        assert!(got.found);
        assert_eq!(got.rank, common::oracle_tie_rank(&scores, t), "{scores:?} target {t}");
    }
}

#[test]
fn missing_target_ranks_after_the_corpus() {
    let ranked = vec![res("a".into(), 2.0), res("b".into(), 1.0)];
    let r = target_rank(&ranked, "z", 50);
    assert!(!r.found);
    assert_eq!(r.rank, 51.0);
}

#[derive(Deserialize)]
struct Reference {
    name: String,
    a: Vec<f64>,
    b: Vec<f64>,
    statistic: f64,
    p_value: f64,
}

#[test]
fn wilcoxon_matches_reference_values() {
    let refs: Vec<Reference> = serde_json::from_str(&common::read_fixture("wilcoxon_reference.json")).unwrap();
    assert_eq!(refs.len(), 4);
    for r in refs {
        let got = wilcoxon_signed_rank(&r.a, &r.b).unwrap();
        assert!((got.statistic - r.statistic).abs() < 1e-6, "{}: {} vs {}", r.name, got.statistic, r.statistic);
        assert!((got.p_value - r.p_value).abs() < 1e-6, "{}: {} vs {}", r.name, got.p_value, r.p_value);
        assert_eq!(got.exact, r.a.len() <= 25, "{}", r.name);
    }
}

#[test]
fn wilcoxon_rejects_bad_input() {
    let a = vec![1.0; 12];
    assert!(matches!(wilcoxon_signed_rank(&a, &a[..11]), Err(Error::Eval(_))));
    assert!(matches!(wilcoxon_signed_rank(&a[..9], &a[..9]), Err(Error::Eval(_))));
    let same = wilcoxon_signed_rank(&a, &a).unwrap();
    assert_eq!(same.n, 0);
    assert_eq!(same.p_value, 1.0);
}

fn small_setup() -> (Vec<w5h::TraceObject>, SearchIndex) {
    let corpus = common::resolved_synth(&common::small_spec(800, 12), ErMode::Enabled);
    let idx = SearchIndex::build(corpus.clone(), &WeightConfig::default(), ScoringConfig::default()).unwrap();
    (corpus, idx)
}

fn small_groups(scenarios: usize) -> Vec<QueryGroupSpec> {
    QueryGroupSpec::table().into_iter().map(|g| QueryGroupSpec { scenarios, ..g }).collect()
}

#[test]
fn generated_queries_come_from_their_target() {
    let (corpus, idx) = small_setup();
    for spec in small_groups(25) {
        let scenarios = generate_scenarios(&corpus, &spec, 5).unwrap();
        assert_eq!(scenarios.len(), 25);
        let targets: std::collections::BTreeSet<_> = scenarios.iter().map(|s| &s.target_id).collect();
        assert_eq!(targets.len(), 25, "distinct targets");
        for s in &scenarios {
            let t = idx.object(&s.target_id).unwrap();
            assert_eq!(s.queries.len(), 6);
            for q in &s.queries {
                for (tag, n) in &spec.values {
                    assert_eq!(q.get(*tag).len(), *n, "group {} {tag}", spec.group_id);
                }
                let what = t.dims.what.join(" ").to_lowercase();
                assert!(q.dims.what.iter().all(|w| what.contains(w.as_str())));
                assert!(q.dims.when.iter().all(|w| t.dims.when.iter().any(|o| time_matches(w, o))));
                assert!(q.dims.how.iter().all(|h| *h == t.source));
                let prepared = idx.prepare(q);
                for p in &prepared.dims.who {
                    let id = p.entity_id.as_deref().expect("query names resolve");
                    assert!(t.dims.who.iter().any(|o| o.entity_id.as_deref() == Some(id)));
                }
                assert!(idx.candidate_set(&prepared).iter().any(|o| o.id == t.id));
            }
        }
    }
}

#[test]
fn eval_is_deterministic_and_complete() {
    let (corpus, idx) = small_setup();
    let methods = [Method::new("w5hf", Scorer::W5hf, &idx), Method::new("bm25", Scorer::Bm25, &idx)];
    let groups = small_groups(12);
    let a = run_eval(&corpus, &groups, &methods, 77).unwrap();
    let b = run_eval(&corpus, &groups, &methods, 77).unwrap();
    assert_eq!(a, b);
    for (rep, spec) in a.iter().zip(&groups) {
        assert_eq!(rep.outcomes.len(), spec.total_queries() * methods.len());
        for m in &methods {
            let rr = rep.rr(m.label);
            assert_eq!(rr.len(), spec.total_queries());
            let s = rep.summary(m.label).unwrap();
            assert!((s.mrr - rr.iter().sum::<f64>() / rr.len() as f64).abs() < 1e-12);
        }
        assert!(rep.test("w5hf", "bm25").is_some());
    }

    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    write_report(&a, d1.path()).unwrap();
    write_report(&b, d2.path()).unwrap();
    let mut names = Vec::new();
    for entry in std::fs::read_dir(d1.path()).unwrap() {
        let name = entry.unwrap().file_name();
        let x = std::fs::read(d1.path().join(&name)).unwrap();
        let y = std::fs::read(d2.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
        names.push(name.into_string().unwrap());
    }
    names.sort();
    assert_eq!(names, ["group1.csv", "group2.csv", "group3.csv", "group4.csv", "group5.csv", "significance.csv", "summary.md"]);
    let g1 = std::fs::read_to_string(d1.path().join("group1.csv")).unwrap();
    assert_eq!(g1.lines().count(), 1 + groups[0].total_queries() * methods.len());
}

#[test]
fn evaluating_fixed_scenarios_reuses_them() {
    let (corpus, idx) = small_setup();
    let spec = QueryGroupSpec { scenarios: 10, ..QueryGroupSpec::group(3).unwrap() };
    let scenarios = generate_scenarios(&corpus, &spec, 2).unwrap();
    let methods = [Method::new("w5hf", Scorer::W5hf, &idx)];
    let rep = evaluate_scenarios(3, &scenarios, &methods).unwrap();
    for o in &rep.outcomes {
        let s = &scenarios[o.scenario];
        assert_eq!(o.target_id, s.target_id);
        assert!(o.found && o.rank >= 1.0);
        assert_eq!(o.rr, 1.0 / o.rank);
    }
}
