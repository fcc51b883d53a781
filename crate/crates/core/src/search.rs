//! Candidate retrieval and ranking.
//!
//! An object is a candidate when it matches at least one populated query
//! dimension. Candidates are ranked by one of four scorers: the
//! frequency-based w5h-f score or one of the keyword baselines.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::{FreqIndex, GroupKey, TimeKey, WeightConfig};
use crate::persist;
use crate::model::{time_matches, DimensionTag, PersonRef, Query, TimePoint, TraceObject};
use crate::resolve::{name_tokens, PersonLike, QueryResolver};
use crate::text::{query_terms, tokenize, Bm25Params, Field, FieldWeights, TextIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scorer {
    #[serde(rename = "w5hf")]
    W5hf,
    #[serde(rename = "tfidf")]
    Tfidf,
    #[serde(rename = "bm25")]
    Bm25,
    #[serde(rename = "fieldbm25")]
    FieldBm25,
}

impl Scorer {
    pub const ALL: [Scorer; 4] = [Scorer::W5hf, Scorer::FieldBm25, Scorer::Bm25, Scorer::Tfidf];

    pub fn as_str(self) -> &'static str {
        match self {
            Scorer::W5hf => "w5hf",
            Scorer::Tfidf => "tfidf",
            Scorer::Bm25 => "bm25",
            Scorer::FieldBm25 => "fieldbm25",
        }
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase().replace(['-', '_'], "");
        Scorer::ALL
            .into_iter()
            .find(|sc| sc.as_str() == norm)
            .ok_or_else(|| Error::UnknownScorer(s.to_string()))
    }
}

/// Multipliers for each term family of the w5h-f score. All default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TermWeights {
    pub group: f64,
    pub user: f64,
    pub user_src: f64,
    pub user_time: f64,
    pub user_time_src: f64,
    pub group_time: f64,
    pub location: f64,
    pub when: f64,
    pub how: f64,
    pub what: f64,
}

impl Default for TermWeights {
    fn default() -> Self {
        TermWeights {
            group: 1.0,
            user: 1.0,
            user_src: 1.0,
            user_time: 1.0,
            user_time_src: 1.0,
            group_time: 1.0,
            location: 1.0,
            when: 1.0,
            how: 1.0,
            what: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub bm25: Bm25Params,
    pub field_weights: FieldWeights,
    pub term_weights: TermWeights,
}

/// Names of the term families in a w5h-f breakdown.
pub mod family {
    pub const GROUP: &str = "f[g]";
    pub const USER: &str = "f[u]";
    pub const USER_SRC: &str = "f_s[u]";
    pub const USER_TIME: &str = "f[u][dt]";
    pub const USER_TIME_SRC: &str = "f_s[u][dt]";
    pub const GROUP_TIME: &str = "f[g][dt]";
    pub const LOCATION: &str = "f[addr]";
    pub const WHEN: &str = "score_when";
    pub const HOW: &str = "score_how";
    pub const WHAT: &str = "score_what";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredResult {
    pub object_id: String,
    pub total_score: f64,
    /// Term name -> contribution. Names are `family` or `family:key`.
    pub breakdown: BTreeMap<String, f64>,
}

impl ScoredResult {
    fn from_breakdown(object_id: &str, breakdown: BTreeMap<String, f64>) -> Self {
        ScoredResult {
            object_id: object_id.to_string(),
            total_score: breakdown.values().sum(),
            breakdown,
        }
    }

    pub fn family_of(term: &str) -> &str {
        term.split_once(':').map_or(term, |(f, _)| f)
    }

    /// Number of breakdown terms per family.
    pub fn family_counts(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for k in self.breakdown.keys() {
            *out.entry(Self::family_of(k)).or_insert(0) += 1;
        }
        out
    }
}

fn person_matches(q: &PersonRef, o: &PersonRef) -> bool {
    if let (Some(a), Some(b)) = (&q.entity_id, &o.entity_id) {
        return a == b;
    }
    if q.entity_id.is_some() {
        return false;
    }
    // unresolved query reference: shared email or a name contained in the
    // object's name
    let qe = q.email_set();
    if !qe.is_empty() && o.email_set().iter().any(|e| qe.contains(e)) {
        return true;
    }
    let qn = name_tokens(&q.raw_name);
    !qn.is_empty() && qn.is_subset(&name_tokens(&o.raw_name))
}

fn how_matches(q: &str, obj: &TraceObject) -> bool {
    let q = q.trim().to_lowercase();
    obj.source.to_lowercase() == q || obj.dims.how.iter().any(|h| h.trim().to_lowercase() == q)
}

/// Whether `obj` matches the query on one dimension.
pub fn dimension_matches(query: &Query, obj: &TraceObject, tag: DimensionTag) -> bool {
    match tag {
        DimensionTag::Who => query
            .dims
            .who
            .iter()
            .any(|q| obj.dims.who.iter().any(|o| person_matches(q, o))),
        DimensionTag::When => query
            .dims
            .when
            .iter()
            .any(|q| obj.dims.when.iter().any(|o| time_matches(q, o))),
        DimensionTag::Where => {
            let keys: BTreeSet<String> = obj.dims.where_.iter().map(|l| l.key()).collect();
            query.dims.where_.iter().any(|l| keys.contains(&l.key()))
        }
        DimensionTag::How => query.dims.how.iter().any(|h| how_matches(h, obj)),
        DimensionTag::What => {
            let terms: BTreeSet<String> = obj.dims.what.iter().flat_map(|t| tokenize(t)).collect();
            query.dims.what.iter().flat_map(|t| tokenize(t)).any(|t| terms.contains(&t))
        }
        DimensionTag::Why => false,
    }
}

pub fn is_candidate(query: &Query, obj: &TraceObject) -> bool {
    query.active_dimensions().into_iter().any(|t| dimension_matches(query, obj, t))
}

/// Object ordinals keyed by dimension value.
#[derive(Debug, Default, Clone)]
struct DimensionIndex {
    who: HashMap<String, Vec<u32>>,
    when: HashMap<TimeKey, Vec<u32>>,
    where_: HashMap<String, Vec<u32>>,
    how: HashMap<String, Vec<u32>>,
}

fn post<K: std::hash::Hash + Eq>(map: &mut HashMap<K, Vec<u32>>, k: K, ord: u32) {
    let v = map.entry(k).or_default();
    if v.last() != Some(&ord) {
        v.push(ord);
    }
}

impl DimensionIndex {
    fn build(objects: &[TraceObject]) -> Self {
        let mut idx = DimensionIndex::default();
        for (i, o) in objects.iter().enumerate() {
            let i = i as u32;
            for p in &o.dims.who {
                if let Some(id) = &p.entity_id {
                    post(&mut idx.who, id.clone(), i);
                }
            }
            for k in crate::freq::object_time_keys(o) {
                post(&mut idx.when, k, i);
            }
            for l in &o.dims.where_ {
                post(&mut idx.where_, l.key(), i);
            }
            post(&mut idx.how, o.source.trim().to_lowercase(), i);
            for h in &o.dims.how {
                post(&mut idx.how, h.trim().to_lowercase(), i);
            }
        }
        idx
    }
}

/// Everything needed to answer queries over one resolved corpus.
pub struct SearchIndex {
    objects: Vec<TraceObject>,
    pos: HashMap<String, usize>,
    freq: FreqIndex,
    text: TextIndex,
    dims: DimensionIndex,
    resolver: QueryResolver,
    config: ScoringConfig,
}

/// A full ranking; `top(k)` gives the first `k` results.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ranking {
    pub results: Vec<ScoredResult>,
}

impl Ranking {
    pub fn top(&self, k: usize) -> &[ScoredResult] {
        &self.results[..k.min(self.results.len())]
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }
}

/// Descending score, then ascending id.
pub fn sort_results(results: &mut [ScoredResult]) {
    results.sort_by(|a, b| {
        b.total_score
            .total_cmp(&a.total_score)
            .then_with(|| a.object_id.cmp(&b.object_id))
    });
}

impl SearchIndex {
    /// `objects` must be entity-resolved, and `freq`/`text` built over them.
    pub fn new(objects: Vec<TraceObject>, freq: FreqIndex, text: TextIndex, config: ScoringConfig) -> Self {
        let pos = objects.iter().enumerate().map(|(i, o)| (o.id.clone(), i)).collect();
        let dims = DimensionIndex::build(&objects);
        let resolver = QueryResolver::from_corpus(&objects);
        SearchIndex {
            objects,
            pos,
            freq,
            text,
            dims,
            resolver,
            config,
        }
    }

    /// Builds both indexes from a resolved corpus.
    pub fn build(objects: Vec<TraceObject>, weights: &WeightConfig, config: ScoringConfig) -> Result<Self> {
        let freq = crate::freq::compute_frequency(&objects, weights)?;
        let text = TextIndex::build(&objects, config.bm25);
        Ok(SearchIndex::new(objects, freq, text, config))
    }

    pub fn objects(&self) -> &[TraceObject] {
        &self.objects
    }

    pub fn object(&self, id: &str) -> Option<&TraceObject> {
        self.pos.get(id).map(|&i| &self.objects[i])
    }

    pub fn freq(&self) -> &FreqIndex {
        &self.freq
    }

    pub fn text(&self) -> &TextIndex {
        &self.text
    }

    pub fn config(&self) -> &ScoringConfig {
        &self.config
    }

    /// Fills entity and place ids the query leaves open.
    pub fn prepare(&self, query: &Query) -> Query {
        self.resolver.resolve_query(query)
    }

    fn dimension_ordinals(&self, query: &Query, tag: DimensionTag) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        let mut add = |v: Option<&Vec<u32>>| out.extend(v.into_iter().flatten().copied());
        match tag {
            DimensionTag::Who => {
                for p in &query.dims.who {
                    match &p.entity_id {
                        Some(id) => add(self.dims.who.get(id)),
                        None => {
                            for (i, o) in self.objects.iter().enumerate() {
                                if o.dims.who.iter().any(|r| person_matches(p, r)) {
                                    add(Some(&vec![i as u32]));
                                }
                            }
                        }
                    }
                }
            }
            DimensionTag::When => {
                for q in &query.dims.when {
                    let Some(key) = TimeKey::for_query(q) else { continue };
                    for &i in self.dims.when.get(&key).into_iter().flatten() {
                        if self.objects[i as usize].dims.when.iter().any(|o| time_matches(q, o)) {
                            out.insert(i);
                        }
                    }
                }
            }
            DimensionTag::Where => {
                for l in &query.dims.where_ {
                    add(self.dims.where_.get(&l.key()));
                }
            }
            DimensionTag::How => {
                for h in &query.dims.how {
                    add(self.dims.how.get(&h.trim().to_lowercase()));
                }
            }
            DimensionTag::What => {
                let terms = query_terms(query, Field::What);
                for id in self.text.matching_docs(Field::What, &terms) {
                    out.insert(self.pos[id] as u32);
                }
            }
            DimensionTag::Why => {}
        }
        out
    }

    /// Union over populated query dimensions of the matching objects.
    pub fn candidate_set(&self, query: &Query) -> Vec<&TraceObject> {
        let mut ords = BTreeSet::new();
        for t in query.active_dimensions() {
            ords.extend(self.dimension_ordinals(query, t));
        }
        ords.into_iter().map(|i| &self.objects[i as usize]).collect()
    }

    /// The w5h-f score of one candidate with its per-term breakdown.
    pub fn f_score(&self, query: &Query, obj: &TraceObject) -> Result<ScoredResult> {
        if !is_candidate(query, obj) {
            return Err(Error::NotCandidate(obj.id.clone()));
        }
        Ok(self.f_score_unchecked(query, obj))
    }

    fn f_score_unchecked(&self, query: &Query, obj: &TraceObject) -> ScoredResult {
        self.score_planned(&Plan::new(query), obj, Scorer::W5hf)
    }

    fn w5hf_terms(&self, plan: &Plan<'_>, obj: &TraceObject) -> BTreeMap<String, f64> {
        let query = plan.query;
        let w = &self.config.term_weights;
        let fi = &self.freq;
        let src = obj.source.as_str();
        let mut terms: BTreeMap<String, f64> = BTreeMap::new();

        let obj_people: BTreeSet<&str> = obj.dims.who.iter().filter_map(|p| p.entity_id.as_deref()).collect();
        let matched_people: Vec<&str> = plan.people.intersection(&obj_people).copied().collect();
        let group_present = plan.group.as_ref().filter(|g| g.is_subset_of(&obj_people));

        let matched_times: BTreeSet<TimeKey> = plan
            .times
            .iter()
            .filter(|(q, _)| obj.dims.when.iter().any(|o| time_matches(q, o)))
            .filter_map(|(_, k)| *k)
            .collect();

        if let Some(g) = group_present {
            terms.insert(family::GROUP.into(), w.group * fi.group(g));
        }
        for u in &matched_people {
            terms.insert(format!("{}:{u}", family::USER), w.user * fi.user(u));
            terms.insert(format!("{}:{u}", family::USER_SRC), w.user_src * fi.user_src(src, u));
            for &dt in &matched_times {
                terms.insert(format!("{}:{u}@{dt}", family::USER_TIME), w.user_time * fi.user_time(u, dt));
                terms.insert(
                    format!("{}:{u}@{dt}", family::USER_TIME_SRC),
                    w.user_time_src * fi.user_time_src(src, u, dt),
                );
            }
        }
        if let Some(g) = group_present {
            for &dt in &matched_times {
                terms.insert(format!("{}:{dt}", family::GROUP_TIME), w.group_time * fi.group_time(g, dt));
            }
        }

        for key in &plan.places {
            if obj.dims.where_.iter().any(|l| l.key() == *key) {
                terms.insert(format!("{}:{key}", family::LOCATION), w.location * fi.loc(key));
            }
        }

        if !query.dims.when.is_empty() {
            let hit = if matched_times.is_empty() { 0.0 } else { 1.0 };
            terms.insert(family::WHEN.into(), w.when * hit);
        }
        if !query.dims.how.is_empty() {
            let hit = query.dims.how.iter().any(|h| h.trim().eq_ignore_ascii_case(obj.source.trim()));
            terms.insert(family::HOW.into(), w.how * if hit { 1.0 } else { 0.0 });
        }
        if !query.dims.what.is_empty() {
            let q = plan.terms(Field::What);
            terms.insert(family::WHAT.into(), w.what * self.text.bm25_field(q, &obj.id, Field::What));
        }
        terms
    }

    fn score_planned(&self, plan: &Plan<'_>, obj: &TraceObject, scorer: Scorer) -> ScoredResult {
        let mut terms = BTreeMap::new();
        match scorer {
            Scorer::Tfidf => {
                terms.insert("tfidf".to_string(), self.text.tfidf_score(plan.terms(Field::All), &obj.id));
            }
            Scorer::Bm25 => {
                terms.insert("bm25".to_string(), self.text.bm25_score(plan.terms(Field::All), &obj.id));
            }
            Scorer::FieldBm25 => {
                for f in Field::DIMENSIONS {
                    let q = plan.terms(f);
                    if !q.is_empty() {
                        let s = self.config.field_weights.get(f) * self.text.bm25_field(q, &obj.id, f);
                        terms.insert(format!("bm25[{}]", field_name(f)), s);
                    }
                }
            }
            Scorer::W5hf => terms = self.w5hf_terms(plan, obj),
        }
        ScoredResult::from_breakdown(&obj.id, terms)
    }

    /// Score of `obj` under any scorer, without the candidate check.
    pub fn score(&self, query: &Query, obj: &TraceObject, scorer: Scorer) -> ScoredResult {
        self.score_planned(&Plan::new(query), obj, scorer)
    }

    /// Objects each scorer retrieves: dimension matches for w5h-f, term
    /// matches in the scored fields for the keyword scorers.
    pub fn retrieve(&self, query: &Query, scorer: Scorer) -> Vec<&TraceObject> {
        self.retrieve_planned(&Plan::new(query), scorer)
    }

    fn retrieve_planned(&self, plan: &Plan<'_>, scorer: Scorer) -> Vec<&TraceObject> {
        let query = plan.query;
        match scorer {
            Scorer::W5hf => self.candidate_set(query),
            Scorer::Tfidf | Scorer::Bm25 => self
                .text
                .matching_docs(Field::All, plan.terms(Field::All))
                .into_iter()
                .map(|id| &self.objects[self.pos[id]])
                .collect(),
            Scorer::FieldBm25 => {
                let mut ords = BTreeSet::new();
                for f in Field::DIMENSIONS {
                    for id in self.text.matching_docs(f, plan.terms(f)) {
                        ords.insert(self.pos[id]);
                    }
                }
                ords.into_iter().map(|i| &self.objects[i]).collect()
            }
        }
    }

    /// Ranks every retrieved object. The query is resolved first.
    pub fn rank(&self, query: &Query, scorer: Scorer) -> Ranking {
        let query = self.prepare(query);
        let plan = Plan::new(&query);
        let candidates = self.retrieve_planned(&plan, scorer);
        let mut results: Vec<ScoredResult> = candidates
            .par_iter()
            .map(|o| self.score_planned(&plan, o, scorer))
            .collect();
        sort_results(&mut results);
        Ranking { results }
    }

    /// Top-`k` results under `scorer`.
    pub fn search(&self, query: &Query, scorer: Scorer, k: usize) -> Vec<ScoredResult> {
        if k == 0 {
            return Vec::new();
        }
        let mut r = self.rank(query, scorer).results;
        r.truncate(k);
        r
    }
}

pub const INDEX_KIND: &str = "index";

/// Both indexes of one corpus, stored together in one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexBundle {
    pub freq: FreqIndex,
    pub text: TextIndex,
}

/// Hash of every setting baked into a stored index.
pub fn settings_hash(weights: &WeightConfig, bm25: &Bm25Params) -> String {
    let both = serde_json::json!({ "weights": weights, "bm25": bm25 });
    persist::sha256_hex(both.to_string().as_bytes())
}

impl IndexBundle {
    pub fn build(corpus: &[TraceObject], weights: &WeightConfig, bm25: Bm25Params) -> Result<Self> {
        Ok(IndexBundle {
            freq: crate::freq::compute_frequency(corpus, weights)?,
            text: TextIndex::build(corpus, bm25),
        })
    }

    pub fn save(&self, path: &Path, corpus: &[TraceObject], settings_hash: &str) -> Result<()> {
        persist::save(path, INDEX_KIND, &persist::corpus_hash(corpus), settings_hash, self)
    }

    /// Loads an index and checks that it was built from `corpus` with the
    /// given settings.
    pub fn load(path: &Path, corpus: &[TraceObject], settings_hash: &str) -> Result<Self> {
        let (header, bundle): (_, IndexBundle) = persist::load(path, INDEX_KIND)?;
        if header.corpus_hash != persist::corpus_hash(corpus) {
            return Err(Error::Corrupt(format!("{} was built from a different corpus", path.display())));
        }
        if header.weights_hash != settings_hash {
            return Err(Error::Corrupt(format!(
                "{} was built with different weights or BM25 parameters",
                path.display()
            )));
        }
        Ok(bundle)
    }
}

/// Query-level values shared by every candidate.
struct Plan<'q> {
    query: &'q Query,
    terms: Vec<Vec<String>>,
    people: BTreeSet<&'q str>,
    group: Option<GroupKey>,
    times: Vec<(&'q TimePoint, Option<TimeKey>)>,
    places: Vec<String>,
}

impl<'q> Plan<'q> {
    fn new(query: &'q Query) -> Self {
        let mut terms = vec![Vec::new(); Field::COUNT];
        for f in Field::DIMENSIONS.into_iter().chain([Field::All]) {
            terms[f.idx()] = query_terms(query, f);
        }
        let people: BTreeSet<&str> = query.dims.who.iter().filter_map(|p| p.entity_id.as_deref()).collect();
        let group = (!people.is_empty()).then(|| GroupKey::new(people.iter().copied()));
        let mut times: Vec<(&TimePoint, Option<TimeKey>)> = Vec::new();
        for t in &query.dims.when {
            if !times.iter().any(|(x, _)| *x == t) {
                times.push((t, TimeKey::for_query(t)));
            }
        }
        let mut places: Vec<String> = query.dims.where_.iter().map(|l| l.key()).collect();
        places.sort();
        places.dedup();
        Plan {
            query,
            terms,
            people,
            group,
            times,
            places,
        }
    }

    fn terms(&self, f: Field) -> &[String] {
        &self.terms[f.idx()]
    }
}

fn field_name(f: Field) -> &'static str {
    match f {
        Field::What => "what",
        Field::Who => "who",
        Field::When => "when",
        Field::Where => "where",
        Field::How => "how",
        Field::All => "all",
    }
}
