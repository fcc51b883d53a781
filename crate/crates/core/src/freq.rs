//! Frequency counters over entities, groups, times and places.
//!
//! For every object the builder extracts the group (the full set of resolved
//! people in `who`), its times and its places, then increments:
//!
//! - `f[g][dt]` and `f[u][dt]` for every time key of the object,
//! - `f[u]` for every person and `f[g]` once,
//! - `f[addr]` for every place,
//!
//! both in total and per source. Increments are weighted by role weight,
//! which is 1 unless configured otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PersonRef, TimePoint, TraceObject};
use crate::persist::{self, entries};

/// One generalization of a time point: `(Y)`, `(Y,M)`, `(Y,M,D)` or `(M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeKey {
    Year(i32),
    YearMonth(i32, u8),
    YearMonthDay(i32, u8, u8),
    Month(u8),
}

impl TimeKey {
    /// Every generalization a stored time point contributes to.
    pub fn generalizations(tp: &TimePoint) -> Vec<TimeKey> {
        let mut out = Vec::with_capacity(4);
        if let Some(y) = tp.get_year() {
            out.push(TimeKey::Year(y));
            if let Some(m) = tp.get_month() {
                out.push(TimeKey::YearMonth(y, m));
                if let Some(d) = tp.get_day() {
                    out.push(TimeKey::YearMonthDay(y, m, d));
                }
            }
        }
        if let Some(m) = tp.get_month() {
            out.push(TimeKey::Month(m));
        }
        out
    }

    /// The key a query time is looked up under: its most specific
    /// generalization. Hour and minute are ignored.
    pub fn for_query(tp: &TimePoint) -> Option<TimeKey> {
        match (tp.get_year(), tp.get_month(), tp.get_day()) {
            (Some(y), Some(m), Some(d)) => Some(TimeKey::YearMonthDay(y, m, d)),
            (Some(y), Some(m), None) => Some(TimeKey::YearMonth(y, m)),
            (Some(y), None, _) => Some(TimeKey::Year(y)),
            (None, Some(m), _) => Some(TimeKey::Month(m)),
            (None, None, _) => None,
        }
    }
}

impl fmt::Display for TimeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeKey::Year(y) => write!(f, "{y:04}"),
            TimeKey::YearMonth(y, m) => write!(f, "{y:04}-{m:02}"),
            TimeKey::YearMonthDay(y, m, d) => write!(f, "{y:04}-{m:02}-{d:02}"),
            TimeKey::Month(m) => write!(f, "--{m:02}"),
        }
    }
}

impl FromStr for TimeKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tp: TimePoint = s.parse()?;
        let key = TimeKey::for_query(&tp).ok_or_else(|| Error::InvalidTime(s.into()))?;
        if key.to_string() != s {
            return Err(Error::InvalidTime(s.into()));
        }
        Ok(key)
    }
}

impl Serialize for TimeKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Sorted, duplicate-free set of entity ids credited as one group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupKey(Vec<String>);

impl GroupKey {
    pub fn new<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = ids.into_iter().map(Into::into).collect();
        GroupKey(set.into_iter().collect())
    }

    pub fn members(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether every member of `self` is in `ids`.
    pub fn is_subset_of(&self, ids: &BTreeSet<&str>) -> bool {
        self.0.iter().all(|m| ids.contains(m.as_str()))
    }
}

/// Role weights applied to interactions. Roles not listed keep the weight
/// stored on the reference.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub role_weights: BTreeMap<String, f64>,
}

impl WeightConfig {
    pub fn weight_of(&self, p: &PersonRef) -> f64 {
        p.role
            .as_ref()
            .and_then(|r| self.role_weights.get(&r.to_lowercase()))
            .copied()
            .unwrap_or(p.role_weight)
    }

    pub fn hash(&self) -> String {
        persist::sha256_hex(&serde_json::to_vec(self).expect("weights serialize"))
    }
}

/// Participants of one object: entity id -> weight, after deduplication.
pub fn participants(obj: &TraceObject, weights: &WeightConfig) -> Result<BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for p in &obj.dims.who {
        let id = p.entity_id.as_ref().ok_or_else(|| Error::Unresolved(obj.id.clone()))?;
        let w = weights.weight_of(p);
        out.entry(id.clone()).and_modify(|x| *x = x.max(w)).or_insert(w);
    }
    Ok(out)
}

/// Deduplicated time keys of one object.
pub fn object_time_keys(obj: &TraceObject) -> BTreeSet<TimeKey> {
    obj.dims.when.iter().flat_map(TimeKey::generalizations).collect()
}

type SrcKey = (String, String);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FreqIndex {
    pub f_user: BTreeMap<String, f64>,
    #[serde(with = "entries")]
    pub f_user_src: BTreeMap<SrcKey, f64>,
    #[serde(with = "entries")]
    pub f_group: BTreeMap<GroupKey, f64>,
    #[serde(with = "entries")]
    pub f_group_src: BTreeMap<(String, GroupKey), f64>,
    #[serde(with = "entries")]
    pub f_user_time: BTreeMap<(String, TimeKey), f64>,
    #[serde(with = "entries")]
    pub f_user_time_src: BTreeMap<(String, String, TimeKey), f64>,
    #[serde(with = "entries")]
    pub f_group_time: BTreeMap<(GroupKey, TimeKey), f64>,
    pub f_loc: BTreeMap<String, f64>,
    #[serde(with = "entries")]
    pub f_loc_src: BTreeMap<SrcKey, f64>,
}

fn bump<K: Ord>(map: &mut BTreeMap<K, f64>, key: K, by: f64) {
    *map.entry(key).or_insert(0.0) += by;
}

fn absorb<K: Ord>(into: &mut BTreeMap<K, f64>, from: BTreeMap<K, f64>) {
    for (k, v) in from {
        bump(into, k, v);
    }
}

impl FreqIndex {
    /// Applies every increment one object contributes.
    pub fn add_object(&mut self, obj: &TraceObject, weights: &WeightConfig) -> Result<()> {
        let people = participants(obj, weights)?;
        let src = &obj.source;
        // an object without people has no group to credit
        let group = (!people.is_empty()).then(|| GroupKey::new(people.keys().cloned()));
        let group_w: f64 = people.values().product();

        for t in object_time_keys(obj) {
            if let Some(g) = &group {
                bump(&mut self.f_group_time, (g.clone(), t), group_w);
            }
            for (u, &w) in &people {
                bump(&mut self.f_user_time, (u.clone(), t), w);
                bump(&mut self.f_user_time_src, (src.clone(), u.clone(), t), w);
            }
        }
        for (u, &w) in &people {
            bump(&mut self.f_user, u.clone(), w);
            bump(&mut self.f_user_src, (src.clone(), u.clone()), w);
        }
        if let Some(g) = group {
            bump(&mut self.f_group_src, (src.clone(), g.clone()), group_w);
            bump(&mut self.f_group, g, group_w);
        }
        for l in &obj.dims.where_ {
            let key = l.key();
            bump(&mut self.f_loc_src, (src.clone(), key.clone()), 1.0);
            bump(&mut self.f_loc, key, 1.0);
        }
        Ok(())
    }

    /// Adds all counters of `other` into `self`.
    pub fn merge(&mut self, other: FreqIndex) {
        absorb(&mut self.f_user, other.f_user);
        absorb(&mut self.f_user_src, other.f_user_src);
        absorb(&mut self.f_group, other.f_group);
        absorb(&mut self.f_group_src, other.f_group_src);
        absorb(&mut self.f_user_time, other.f_user_time);
        absorb(&mut self.f_user_time_src, other.f_user_time_src);
        absorb(&mut self.f_group_time, other.f_group_time);
        absorb(&mut self.f_loc, other.f_loc);
        absorb(&mut self.f_loc_src, other.f_loc_src);
    }

    pub fn user(&self, u: &str) -> f64 {
        self.f_user.get(u).copied().unwrap_or(0.0)
    }

    pub fn user_src(&self, src: &str, u: &str) -> f64 {
        self.f_user_src.get(&(src.to_string(), u.to_string())).copied().unwrap_or(0.0)
    }

    pub fn group(&self, g: &GroupKey) -> f64 {
        self.f_group.get(g).copied().unwrap_or(0.0)
    }

    pub fn user_time(&self, u: &str, t: TimeKey) -> f64 {
        self.f_user_time.get(&(u.to_string(), t)).copied().unwrap_or(0.0)
    }

    pub fn user_time_src(&self, src: &str, u: &str, t: TimeKey) -> f64 {
        self.f_user_time_src
            .get(&(src.to_string(), u.to_string(), t))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn group_time(&self, g: &GroupKey, t: TimeKey) -> f64 {
        self.f_group_time.get(&(g.clone(), t)).copied().unwrap_or(0.0)
    }

    pub fn loc(&self, addr: &str) -> f64 {
        self.f_loc.get(addr).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.f_user.is_empty() && self.f_group.is_empty() && self.f_loc.is_empty() && self.f_user_time.is_empty()
    }
}

/// Builds every counter for a resolved corpus. Sources are processed as
/// independent shards and merged in source order.
pub fn compute_frequency(corpus: &[TraceObject], weights: &WeightConfig) -> Result<FreqIndex> {
    let mut by_source: BTreeMap<&str, Vec<&TraceObject>> = BTreeMap::new();
    for o in corpus {
        by_source.entry(o.source.as_str()).or_default().push(o);
    }
    let shards: Vec<FreqIndex> = by_source
        .into_par_iter()
        .map(|(_, objs)| {
            let mut idx = FreqIndex::default();
            for o in objs {
                idx.add_object(o, weights)?;
            }
            Ok(idx)
        })
        .collect::<Result<_>>()?;
    let mut total = FreqIndex::default();
    for s in shards {
        total.merge(s);
    }
    Ok(total)
}

pub const FREQ_KIND: &str = "freq";

pub fn save_index(index: &FreqIndex, path: &Path, corpus_hash: &str, weights_hash: &str) -> Result<()> {
    persist::save(path, FREQ_KIND, corpus_hash, weights_hash, index)
}

pub fn load_index(path: &Path) -> Result<FreqIndex> {
    persist::load(path, FREQ_KIND).map(|(_, idx)| idx)
}
