//! Inverted index with one field per dimension plus a catch-all field, and
//! the three keyword scorers used as baselines: TFIDF, BM25 and field-based
//! BM25.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{DimensionTag, Query, TraceObject};

/// Casefold, split on anything that is not alphanumeric, drop empty tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn tokenize_without(text: &str, stopwords: &BTreeSet<&str>) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !stopwords.contains(t.as_str()))
        .collect()
}

const ENGLISH_STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "been",
    "but", "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he",
    "her", "here", "him", "his", "how", "i", "if", "in", "into", "is", "it", "its", "just", "me",
    "my", "no", "not", "of", "on", "or", "our", "out", "she", "so", "than", "that", "the", "their",
    "them", "then", "there", "these", "they", "this", "to", "up", "us", "was", "we", "were",
    "what", "when", "where", "which", "who", "why", "will", "with", "would", "you", "your",
];

pub fn english_stopwords() -> BTreeSet<&'static str> {
    ENGLISH_STOPWORDS.iter().copied().collect()
}

/// Indexed fields. `All` concatenates every dimension, mirroring a single
/// unified keyword collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    What,
    Who,
    When,
    Where,
    How,
    All,
}

impl Field {
    pub const COUNT: usize = 6;
    pub const DIMENSIONS: [Field; 5] = [Field::What, Field::Who, Field::When, Field::Where, Field::How];

    pub(crate) fn idx(self) -> usize {
        self as usize
    }

    pub fn for_dimension(tag: DimensionTag) -> Option<Field> {
        match tag {
            DimensionTag::What => Some(Field::What),
            DimensionTag::Who => Some(Field::Who),
            DimensionTag::When => Some(Field::When),
            DimensionTag::Where => Some(Field::Where),
            DimensionTag::How => Some(Field::How),
            DimensionTag::Why => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

/// Per-field multipliers for field-based BM25.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldWeights {
    pub what: f64,
    pub who: f64,
    pub when: f64,
    #[serde(rename = "where")]
    pub where_: f64,
    pub how: f64,
}

impl Default for FieldWeights {
    fn default() -> Self {
        FieldWeights {
            what: 1.0,
            who: 1.0,
            when: 1.0,
            where_: 1.0,
            how: 1.0,
        }
    }
}

impl FieldWeights {
    pub fn get(&self, f: Field) -> f64 {
        match f {
            Field::What => self.what,
            Field::Who => self.who,
            Field::When => self.when,
            Field::Where => self.where_,
            Field::How => self.how,
            Field::All => 1.0,
        }
    }
}

/// Text of `obj` for one field. `how` also carries the source name.
pub fn field_text(obj: &TraceObject, field: Field) -> String {
    let dim_text = |tag: DimensionTag| obj.get(tag).texts().join(" ");
    match field {
        Field::What => dim_text(DimensionTag::What),
        Field::Who => dim_text(DimensionTag::Who),
        Field::When => dim_text(DimensionTag::When),
        Field::Where => dim_text(DimensionTag::Where),
        Field::How => format!("{} {}", obj.source, dim_text(DimensionTag::How)),
        Field::All => Field::DIMENSIONS
            .iter()
            .map(|&f| field_text(obj, f))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

/// Query terms for one field; `All` gathers every populated dimension.
pub fn query_terms(query: &Query, field: Field) -> Vec<String> {
    let dim = |tag: DimensionTag| -> Vec<String> {
        query.get(tag).texts().iter().flat_map(|t| tokenize(t)).collect()
    };
    match field {
        Field::What => dim(DimensionTag::What),
        Field::Who => dim(DimensionTag::Who),
        Field::When => dim(DimensionTag::When),
        Field::Where => dim(DimensionTag::Where),
        Field::How => dim(DimensionTag::How),
        Field::All => Field::DIMENSIONS.iter().flat_map(|&f| query_terms(query, f)).collect(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct DocEntry {
    id: String,
    tf: Vec<BTreeMap<String, u32>>,
    len: Vec<u32>,
}

/// Corpus-level statistics for one field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub df: BTreeMap<String, u32>,
    pub total_len: u64,
}

/// Statistics shared by all scorers.
#[derive(Debug, Clone, PartialEq)]
pub struct TextIndexStats<'a> {
    pub n: usize,
    pub avgdl: f64,
    pub df: &'a BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextIndex {
    params: Bm25Params,
    docs: Vec<DocEntry>,
    by_id: BTreeMap<String, usize>,
    fields: Vec<FieldStats>,
    /// term -> sorted document ordinals, per field
    postings: Vec<BTreeMap<String, Vec<u32>>>,
}

impl Default for TextIndex {
    fn default() -> Self {
        TextIndex::new(Bm25Params::default())
    }
}

impl TextIndex {
    pub fn new(params: Bm25Params) -> Self {
        TextIndex {
            params,
            docs: Vec::new(),
            by_id: BTreeMap::new(),
            fields: vec![FieldStats::default(); Field::COUNT],
            postings: vec![BTreeMap::new(); Field::COUNT],
        }
    }

    pub fn build<'a>(objects: impl IntoIterator<Item = &'a TraceObject>, params: Bm25Params) -> Self {
        let mut idx = TextIndex::new(params);
        for o in objects {
            idx.add(o);
        }
        idx
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// Adds one document. Re-adding an existing id replaces nothing and is
    /// ignored.
    pub fn add(&mut self, obj: &TraceObject) {
        if self.by_id.contains_key(&obj.id) {
            return;
        }
        let ord = self.docs.len() as u32;
        let mut entry = DocEntry {
            id: obj.id.clone(),
            tf: vec![BTreeMap::new(); Field::COUNT],
            len: vec![0; Field::COUNT],
        };
        for f in Field::DIMENSIONS.into_iter().chain([Field::All]) {
            let terms = tokenize(&field_text(obj, f));
            entry.len[f.idx()] = terms.len() as u32;
            let tf = &mut entry.tf[f.idx()];
            for t in terms {
                *tf.entry(t).or_default() += 1;
            }
            let stats = &mut self.fields[f.idx()];
            stats.total_len += entry.len[f.idx()] as u64;
            for t in tf.keys() {
                *stats.df.entry(t.clone()).or_default() += 1;
                self.postings[f.idx()].entry(t.clone()).or_default().push(ord);
            }
        }
        self.by_id.insert(obj.id.clone(), ord as usize);
        self.docs.push(entry);
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn stats(&self, field: Field) -> TextIndexStats<'_> {
        let s = &self.fields[field.idx()];
        let n = self.docs.len();
        TextIndexStats {
            n,
            avgdl: if n == 0 { 0.0 } else { s.total_len as f64 / n as f64 },
            df: &s.df,
        }
    }

    pub fn df(&self, field: Field, term: &str) -> u32 {
        self.fields[field.idx()].df.get(term).copied().unwrap_or(0)
    }

    pub fn tf(&self, doc_id: &str, field: Field, term: &str) -> u32 {
        self.by_id
            .get(doc_id)
            .and_then(|&d| self.docs[d].tf[field.idx()].get(term).copied())
            .unwrap_or(0)
    }

    pub fn doc_len(&self, doc_id: &str, field: Field) -> u32 {
        self.by_id.get(doc_id).map_or(0, |&d| self.docs[d].len[field.idx()])
    }

    /// Ids of documents containing any of `terms` in `field`, in index order.
    pub fn matching_docs(&self, field: Field, terms: &[String]) -> Vec<&str> {
        let mut ords: Vec<u32> = terms
            .iter()
            .filter_map(|t| self.postings[field.idx()].get(t))
            .flatten()
            .copied()
            .collect();
        ords.sort_unstable();
        ords.dedup();
        ords.into_iter().map(|o| self.docs[o as usize].id.as_str()).collect()
    }

    /// Σ tf(t,d)·ln(N/df(t)) over the `All` field.
    pub fn tfidf_score(&self, q_terms: &[String], doc_id: &str) -> f64 {
        let n = self.docs.len() as f64;
        q_terms
            .iter()
            .map(|t| {
                let tf = self.tf(doc_id, Field::All, t);
                if tf == 0 {
                    return 0.0;
                }
                tf as f64 * (n / self.df(Field::All, t) as f64).ln()
            })
            .sum()
    }

    /// BM25 with Robertson idf `ln((N-df+0.5)/(df+0.5)+1)` within one field.
    pub fn bm25_field(&self, q_terms: &[String], doc_id: &str, field: Field) -> f64 {
        let Some(&d) = self.by_id.get(doc_id) else {
            return 0.0;
        };
        let stats = self.stats(field);
        let doc = &self.docs[d];
        let dl = doc.len[field.idx()] as f64;
        let Bm25Params { k1, b } = self.params;
        let n = stats.n as f64;
        q_terms
            .iter()
            .map(|t| {
                let tf = doc.tf[field.idx()].get(t).copied().unwrap_or(0) as f64;
                if tf == 0.0 {
                    return 0.0;
                }
                let df = stats.df.get(t).copied().unwrap_or(0) as f64;
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / stats.avgdl))
            })
            .sum()
    }

    pub fn bm25_score(&self, q_terms: &[String], doc_id: &str) -> f64 {
        self.bm25_field(q_terms, doc_id, Field::All)
    }

    /// Sum over the query's dimensions of BM25 within that dimension's field.
    pub fn field_bm25_score(&self, query: &Query, doc_id: &str, weights: &FieldWeights) -> f64 {
        Field::DIMENSIONS
            .iter()
            .map(|&f| {
                let terms = query_terms(query, f);
                if terms.is_empty() {
                    0.0
                } else {
                    weights.get(f) * self.bm25_field(&terms, doc_id, f)
                }
            })
            .sum()
    }
}
