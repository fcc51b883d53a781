//! Known-item evaluation: query generation, rank metrics and paired
//! significance tests.

mod metrics;
mod report;
mod scenarios;
mod wilcoxon;

pub use metrics::{mrr, ndcg_at_k, reciprocal_rank, target_rank, TargetRank, TIE_TOLERANCE};
pub use report::{significance_csv, summary_markdown, write_group_csv, write_report};
pub use scenarios::{
    display_names, generate_scenarios, QueryGroupSpec, Scenario, QUERIES_PER_SCENARIO, SCENARIOS_PER_GROUP,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N, MIN_PAIRS};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::TraceObject;
use crate::search::{Scorer, SearchIndex};

/// One ranking method under evaluation: a scorer over a particular index.
#[derive(Clone, Copy)]
pub struct Method<'a> {
    pub label: &'a str,
    pub scorer: Scorer,
    pub index: &'a SearchIndex,
}

impl<'a> Method<'a> {
    pub fn new(label: &'a str, scorer: Scorer, index: &'a SearchIndex) -> Self {
        Method { label, scorer, index }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: String,
    pub scenario: usize,
    pub method: String,
    pub target_id: String,
    pub rank: f64,
    pub found: bool,
    pub rr: f64,
    pub ndcg10: f64,
    pub ndcg20: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub queries: usize,
    pub mrr: f64,
    pub ndcg10: f64,
    pub ndcg20: f64,
    /// Queries whose target was not retrieved.
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub method_a: String,
    pub method_b: String,
    pub mrr_a: f64,
    pub mrr_b: f64,
    pub test: WilcoxonResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub group_id: u8,
    /// Method-major: all queries of the first method, then the next.
    pub outcomes: Vec<QueryOutcome>,
    pub summaries: Vec<MethodSummary>,
    pub significance: Vec<PairedTest>,
}

impl GroupReport {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn rr(&self, method: &str) -> Vec<f64> {
        self.outcomes.iter().filter(|o| o.method == method).map(|o| o.rr).collect()
    }

    pub fn test(&self, a: &str, b: &str) -> Option<&PairedTest> {
        self.significance.iter().find(|t| t.method_a == a && t.method_b == b)
    }
}

fn summarize(method: &str, rows: &[QueryOutcome]) -> Result<MethodSummary> {
    let ranks: Vec<f64> = rows.iter().map(|o| o.rank).collect();
    let n = rows.len() as f64;
    Ok(MethodSummary {
        method: method.to_string(),
        queries: rows.len(),
        mrr: mrr(&ranks)?,
        ndcg10: rows.iter().map(|o| o.ndcg10).sum::<f64>() / n,
        ndcg20: rows.iter().map(|o| o.ndcg20).sum::<f64>() / n,
        missing: rows.iter().filter(|o| !o.found).count(),
    })
}

/// Ranks every scenario query with every method.
pub fn evaluate_scenarios(group_id: u8, scenarios: &[Scenario], methods: &[Method<'_>]) -> Result<GroupReport> {
    let jobs: Vec<(usize, usize)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(si, s)| (0..s.queries.len()).map(move |qi| (si, qi)))
        .collect();

    let mut outcomes = Vec::with_capacity(jobs.len() * methods.len());
    let mut summaries = Vec::new();
    for m in methods {
        let corpus_size = m.index.objects().len();
        let rows: Vec<QueryOutcome> = jobs
            .par_iter()
            .map(|&(si, qi)| {
                let s = &scenarios[si];
                let ranking = m.index.rank(&s.queries[qi], m.scorer);
                let t = target_rank(&ranking.results, &s.target_id, corpus_size);
                QueryOutcome {
                    query_id: s.query_id(qi),
                    scenario: s.index,
                    method: m.label.to_string(),
                    target_id: s.target_id.clone(),
                    rank: t.rank,
                    found: t.found,
                    rr: reciprocal_rank(t.rank),
                    ndcg10: ndcg_at_k(t.rank, 10),
                    ndcg20: ndcg_at_k(t.rank, 20),
                }
            })
            .collect();
        summaries.push(summarize(m.label, &rows)?);
        outcomes.extend(rows);
    }

    let mut report = GroupReport {
        group_id,
        outcomes,
        summaries,
        significance: Vec::new(),
    };
    for (i, a) in methods.iter().enumerate() {
        for b in &methods[i + 1..] {
            let test = wilcoxon_signed_rank(&report.rr(a.label), &report.rr(b.label))?;
            report.significance.push(PairedTest {
                method_a: a.label.to_string(),
                method_b: b.label.to_string(),
                mrr_a: report.summary(a.label).map_or(0.0, |s| s.mrr),
                mrr_b: report.summary(b.label).map_or(0.0, |s| s.mrr),
                test,
            });
        }
    }
    Ok(report)
}

/// Generates scenarios for each group from `corpus` (entity-resolved) and
/// evaluates every method on them. Group `g` draws from seed `seed` on its
/// own stream, so adding a group leaves the others unchanged.
pub fn run_eval(
    corpus: &[TraceObject],
    groups: &[QueryGroupSpec],
    methods: &[Method<'_>],
    seed: u64,
) -> Result<Vec<GroupReport>> {
    groups
        .iter()
        .map(|g| {
            let scenarios = generate_scenarios(corpus, g, seed)?;
            evaluate_scenarios(g.group_id, &scenarios, methods)
        })
        .collect()
}
