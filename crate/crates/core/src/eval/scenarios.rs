//! Known-item query generation.
//!
//! A scenario picks a target object and builds several queries whose values
//! are all taken from that target, so the target is always retrievable.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DimensionTag, Dimensions, PersonRef, Query, TimePoint, TraceObject};
use crate::text::{english_stopwords, tokenize_without};

pub const SCENARIOS_PER_GROUP: usize = 250;
pub const QUERIES_PER_SCENARIO: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryGroupSpec {
    pub group_id: u8,
    /// Dimensions to fill and how many values each gets.
    pub values: BTreeMap<DimensionTag, usize>,
    pub scenarios: usize,
    pub queries_per_scenario: usize,
}

impl QueryGroupSpec {
    fn with(group_id: u8, values: &[(DimensionTag, usize)]) -> Self {
        QueryGroupSpec {
            group_id,
            values: values.iter().copied().collect(),
            scenarios: SCENARIOS_PER_GROUP,
            queries_per_scenario: QUERIES_PER_SCENARIO,
        }
    }

    /// The five standard query groups.
    pub fn table() -> Vec<QueryGroupSpec> {
        use DimensionTag::*;
        vec![
            Self::with(1, &[(What, 1)]),
            Self::with(2, &[(What, 1), (Who, 1)]),
            Self::with(3, &[(What, 1), (Who, 1), (When, 1)]),
            Self::with(4, &[(What, 1), (Who, 1), (When, 1), (How, 1)]),
            Self::with(5, &[(What, 2), (Who, 2), (When, 1), (How, 1)]),
        ]
    }

    pub fn group(id: u8) -> Result<QueryGroupSpec> {
        Self::table()
            .into_iter()
            .find(|g| g.group_id == id)
            .ok_or_else(|| Error::Eval(format!("no query group {id}; groups are 1 to 5")))
    }

    pub fn total_queries(&self) -> usize {
        self.scenarios * self.queries_per_scenario
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub group_id: u8,
    pub index: usize,
    pub target_id: String,
    pub seed: u64,
    pub queries: Vec<Query>,
}

impl Scenario {
    pub fn query_id(&self, q: usize) -> String {
        format!("g{}-s{:03}-q{}", self.group_id, self.index, q)
    }
}

/// How precisely a generated query remembers a date.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Recall {
    Year,
    Month,
    Day,
}

fn recall(tp: &TimePoint, level: Recall) -> TimePoint {
    match level {
        Recall::Year => tp.to_year(),
        Recall::Month => tp.to_month(),
        Recall::Day => tp.date_only(),
    }
}

/// Display names per entity: the most frequent non-empty raw name, else the
/// most frequent email. Ties go to the lexicographically smaller form.
pub fn display_names(corpus: &[TraceObject]) -> BTreeMap<String, PersonRef> {
    let mut names: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut emails: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for p in corpus.iter().flat_map(|o| &o.dims.who) {
        let Some(id) = p.entity_id.as_deref() else { continue };
        if !p.raw_name.trim().is_empty() {
            *names.entry(id).or_default().entry(p.raw_name.trim()).or_default() += 1;
        }
        for e in &p.raw_emails {
            *emails.entry(id).or_default().entry(e.trim()).or_default() += 1;
        }
    }
    let best = |m: &BTreeMap<&str, usize>| -> Option<String> {
        m.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(k, _)| k.to_string())
    };
    let ids: BTreeSet<&str> = names.keys().chain(emails.keys()).copied().collect();
    ids.into_iter()
        .filter_map(|id| {
            let p = match names.get(id).and_then(best) {
                Some(n) => PersonRef::named(n),
                None => PersonRef::named("").with_email(emails.get(id).and_then(best)?),
            };
            Some((id.to_string(), p))
        })
        .collect()
}

/// Distinct candidate values of one target dimension.
struct Pools<'a> {
    terms: Vec<String>,
    people: Vec<&'a str>,
    times: Vec<&'a TimePoint>,
}

impl<'a> Pools<'a> {
    fn of(obj: &'a TraceObject, stop: &BTreeSet<&str>) -> Self {
        let terms: BTreeSet<String> = obj.dims.what.iter().flat_map(|t| tokenize_without(t, stop)).collect();
        let people: BTreeSet<&str> = obj.dims.who.iter().filter_map(|p| p.entity_id.as_deref()).collect();
        let mut times: Vec<&TimePoint> = Vec::new();
        for t in &obj.dims.when {
            if !times.contains(&t) {
                times.push(t);
            }
        }
        Pools {
            terms: terms.into_iter().collect(),
            people: people.into_iter().collect(),
            times,
        }
    }

    fn size(&self, tag: DimensionTag) -> usize {
        match tag {
            DimensionTag::What => self.terms.len(),
            DimensionTag::Who => self.people.len(),
            DimensionTag::When => self.times.len(),
            DimensionTag::How => 1,
            DimensionTag::Where | DimensionTag::Why => 0,
        }
    }
}

fn build_query(
    obj: &TraceObject,
    pools: &Pools<'_>,
    spec: &QueryGroupSpec,
    names: &BTreeMap<String, PersonRef>,
    rng: &mut ChaCha8Rng,
) -> Result<Query> {
    let mut dims = Dimensions::default();
    for (&tag, &v) in &spec.values {
        match tag {
            DimensionTag::What => {
                dims.what = pools.terms.choose_multiple(rng, v).cloned().collect();
            }
            DimensionTag::Who => {
                for id in pools.people.choose_multiple(rng, v) {
                    let p = names.get(*id).ok_or_else(|| Error::Eval(format!("entity {id} has no surface form")))?;
                    dims.who.push(p.clone());
                }
            }
            DimensionTag::When => {
                for tp in pools.times.choose_multiple(rng, v) {
                    let level = *[Recall::Year, Recall::Month, Recall::Day].choose(rng).expect("non-empty");
                    dims.when.push(recall(tp, level));
                }
            }
            DimensionTag::How => dims.how.push(obj.source.clone()),
            DimensionTag::Where | DimensionTag::Why => {
                return Err(Error::Eval(format!("query generation does not support the {tag} dimension")))
            }
        }
    }
    Query::new(dims)
}

/// Generates `spec.scenarios` scenarios over an entity-resolved corpus.
/// Targets are distinct objects with enough values in every requested
/// dimension.
pub fn generate_scenarios(corpus: &[TraceObject], spec: &QueryGroupSpec, seed: u64) -> Result<Vec<Scenario>> {
    let stop = english_stopwords();
    let qualifying: Vec<(&TraceObject, Pools<'_>)> = corpus
        .iter()
        .map(|o| (o, Pools::of(o, &stop)))
        .filter(|(_, p)| spec.values.iter().all(|(&t, &v)| p.size(t) >= v))
        .collect();
    if qualifying.len() < spec.scenarios {
        return Err(Error::Eval(format!(
            "group {} needs {} target objects but only {} of {} qualify",
            spec.group_id,
            spec.scenarios,
            qualifying.len(),
            corpus.len()
        )));
    }
    let names = display_names(corpus);
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    master.set_stream(spec.group_id as u64);
    let mut order: Vec<usize> = (0..qualifying.len()).collect();
    order.shuffle(&mut master);

    order
        .into_iter()
        .take(spec.scenarios)
        .enumerate()
        .map(|(index, i)| {
            let (obj, pools) = &qualifying[i];
            let scenario_seed: u64 = master.random();
            let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed);
            let queries = (0..spec.queries_per_scenario)
                .map(|_| build_query(obj, pools, spec, &names, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            Ok(Scenario {
                group_id: spec.group_id,
                index,
                target_id: obj.id.clone(),
                seed: scenario_seed,
                queries,
            })
        })
        .collect()
}
