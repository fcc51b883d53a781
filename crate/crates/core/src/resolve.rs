//! Entity resolution for the `who` and `where` dimensions.
//!
//! People are resolved with R-Swoosh over a match rule of *shared email* or
//! *equal normalized name token set*. Places are resolved through an offline
//! geocode cache; ambiguous cache entries are ranked by how often their
//! address terms occur in the corpus, then places sharing an address or
//! coordinates are merged.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_text, LocationRef, PersonRef, Query, TraceObject};
use crate::text::tokenize;

/// Two coordinates closer than this on both axes denote the same place.
pub const COORD_TOLERANCE: f64 = 1e-4;

/// Casefold, strip punctuation, drop single-letter tokens.
pub fn name_tokens(name: &str) -> BTreeSet<String> {
    tokenize(name).into_iter().filter(|t| t.chars().count() > 1).collect()
}

fn normalize_email(e: &str) -> String {
    e.trim().to_lowercase()
}

/// Anything that exposes names and emails can take part in person matching.
pub trait PersonLike {
    fn name_keys(&self) -> Vec<BTreeSet<String>>;
    fn email_set(&self) -> BTreeSet<String>;
}

impl PersonLike for PersonRef {
    fn name_keys(&self) -> Vec<BTreeSet<String>> {
        let k = name_tokens(&self.raw_name);
        if k.is_empty() {
            Vec::new()
        } else {
            vec![k]
        }
    }

    fn email_set(&self) -> BTreeSet<String> {
        self.raw_emails
            .iter()
            .map(|e| normalize_email(e))
            .filter(|e| !e.is_empty())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonEntity {
    pub entity_id: String,
    pub names: BTreeSet<String>,
    pub emails: BTreeSet<String>,
}

impl PersonLike for PersonEntity {
    fn name_keys(&self) -> Vec<BTreeSet<String>> {
        self.names.iter().map(|n| name_tokens(n)).filter(|k| !k.is_empty()).collect()
    }

    fn email_set(&self) -> BTreeSet<String> {
        self.emails.clone()
    }
}

/// Identifier of the record a reference denotes before any merging.
pub fn record_id(r: &PersonRef) -> String {
    let emails = r.email_set();
    if emails.is_empty() {
        r.surface_key()
    } else {
        format!("{}|{}", r.surface_key(), emails.into_iter().collect::<Vec<_>>().join(","))
    }
}

impl PersonEntity {
    pub fn from_ref(r: &PersonRef) -> Self {
        let name = r.raw_name.trim();
        PersonEntity {
            entity_id: record_id(r),
            names: if name.is_empty() {
                BTreeSet::new()
            } else {
                BTreeSet::from([name.to_string()])
            },
            emails: r.email_set(),
        }
    }
}

/// Shared email (case-insensitive) or equal normalized name token sets.
pub fn match_person(a: &impl PersonLike, b: &impl PersonLike) -> bool {
    let ea = a.email_set();
    if !ea.is_empty() && b.email_set().iter().any(|e| ea.contains(e)) {
        return true;
    }
    let ka = a.name_keys();
    !ka.is_empty() && b.name_keys().iter().any(|k| ka.contains(k))
}

/// Union of names and emails; the smaller id survives.
pub fn merge_person(a: &PersonEntity, b: &PersonEntity) -> PersonEntity {
    PersonEntity {
        entity_id: a.entity_id.clone().min(b.entity_id.clone()),
        names: a.names.union(&b.names).cloned().collect(),
        emails: a.emails.union(&b.emails).cloned().collect(),
    }
}

/// Working record for R-Swoosh with its match keys precomputed.
struct Candidate {
    entity: PersonEntity,
    keys: BTreeSet<BTreeSet<String>>,
}

impl Candidate {
    fn new(entity: PersonEntity) -> Self {
        let keys = entity.name_keys().into_iter().collect();
        Candidate { entity, keys }
    }

    fn matches(&self, other: &Candidate) -> bool {
        self.entity.emails.iter().any(|e| other.entity.emails.contains(e))
            || self.keys.iter().any(|k| other.keys.contains(k))
    }
}

/// Computes the match/merge fixpoint with R-Swoosh. The result is sorted by
/// entity id and independent of input order.
pub fn rswoosh(refs: &[PersonRef]) -> Vec<PersonEntity> {
    let mut distinct: BTreeMap<String, PersonEntity> = BTreeMap::new();
    for r in refs {
        let e = PersonEntity::from_ref(r);
        match distinct.get_mut(&e.entity_id) {
            Some(existing) => *existing = merge_person(existing, &e),
            None => {
                distinct.insert(e.entity_id.clone(), e);
            }
        }
    }
    rswoosh_entities(distinct.into_values().collect())
}

pub fn rswoosh_entities(records: Vec<PersonEntity>) -> Vec<PersonEntity> {
    let mut input: Vec<Candidate> = records.into_iter().map(Candidate::new).collect();
    let mut resolved: Vec<Candidate> = Vec::new();
    while let Some(r) = input.pop() {
        match resolved.iter().position(|o| o.matches(&r)) {
            Some(pos) => {
                let o = resolved.swap_remove(pos);
                input.push(Candidate::new(merge_person(&o.entity, &r.entity)));
            }
            None => resolved.push(r),
        }
    }
    let mut out: Vec<PersonEntity> = resolved.into_iter().map(|c| c.entity).collect();
    out.sort_by(|a, b| a.entity_id.cmp(&b.entity_id));
    out
}

/// Whether people are merged across surface forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErMode {
    #[default]
    Enabled,
    /// Every literal name (or bare email) is its own entity.
    Disabled,
}

/// Lookup from a reference to the entity that absorbed it.
#[derive(Debug, Default)]
struct PersonDirectory {
    by_email: HashMap<String, String>,
    by_name: HashMap<BTreeSet<String>, String>,
}

impl PersonDirectory {
    fn new(entities: &[PersonEntity]) -> Self {
        let mut dir = PersonDirectory::default();
        for e in entities {
            for m in &e.emails {
                dir.by_email.insert(m.clone(), e.entity_id.clone());
            }
            for k in e.name_keys() {
                dir.by_name.insert(k, e.entity_id.clone());
            }
        }
        dir
    }

    fn find(&self, r: &PersonRef) -> Option<&String> {
        r.email_set()
            .iter()
            .find_map(|m| self.by_email.get(m))
            .or_else(|| r.name_keys().first().and_then(|k| self.by_name.get(k)))
    }
}

/// Resolves every person mention in `corpus` in place and returns the
/// entity set.
pub fn resolve_people(corpus: &mut [TraceObject], mode: ErMode) -> Vec<PersonEntity> {
    match mode {
        ErMode::Enabled => {
            let refs: Vec<PersonRef> = corpus.iter().flat_map(|o| o.dims.who.iter().cloned()).collect();
            let entities = rswoosh(&refs);
            let dir = PersonDirectory::new(&entities);
            for r in corpus.iter_mut().flat_map(|o| o.dims.who.iter_mut()) {
                let id = dir.find(r).expect("every reference belongs to its own fixpoint entity");
                r.entity_id = Some(id.clone());
            }
            entities
        }
        ErMode::Disabled => {
            let mut entities: BTreeMap<String, PersonEntity> = BTreeMap::new();
            for r in corpus.iter_mut().flat_map(|o| o.dims.who.iter_mut()) {
                let key = r.surface_key();
                let mut e = PersonEntity::from_ref(r);
                e.entity_id = key.clone();
                entities
                    .entry(key.clone())
                    .and_modify(|x| *x = merge_person(x, &e))
                    .or_insert(e);
                r.entity_id = Some(key);
            }
            entities.into_values().collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeocodeCandidate {
    pub address: String,
    pub lat: f64,
    pub lon: f64,
}

/// Offline replacement for a geocoding service: raw place text to an ordered
/// list of candidate addresses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeocodeCache {
    entries: BTreeMap<String, Vec<GeocodeCandidate>>,
    normalized: HashMap<String, String>,
}

impl GeocodeCache {
    pub fn new(entries: BTreeMap<String, Vec<GeocodeCandidate>>) -> Self {
        let normalized = entries.keys().map(|k| (normalize_text(k), k.clone())).collect();
        GeocodeCache { entries, normalized }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(GeocodeCache::new(serde_json::from_str(text)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn lookup(&self, raw: &str) -> &[GeocodeCandidate] {
        self.entries
            .get(raw)
            .or_else(|| self.normalized.get(&normalize_text(raw)).and_then(|k| self.entries.get(k)))
            .map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Term counts over all text of a corpus.
#[derive(Debug, Clone, Default)]
pub struct CorpusTermFreq(HashMap<String, u64>);

impl CorpusTermFreq {
    pub fn build(corpus: &[TraceObject]) -> Self {
        let mut tf = HashMap::new();
        for o in corpus {
            for t in tokenize(&crate::text::field_text(o, crate::text::Field::All)) {
                *tf.entry(t).or_insert(0u64) += 1;
            }
        }
        CorpusTermFreq(tf)
    }

    pub fn get(&self, term: &str) -> u64 {
        self.0.get(term).copied().unwrap_or(0)
    }

    /// Sum of corpus frequencies over the distinct terms of `text`.
    pub fn score(&self, text: &str) -> u64 {
        tokenize(text).into_iter().collect::<BTreeSet<_>>().iter().map(|t| self.get(t)).sum()
    }
}

/// Picks the candidate whose address terms are most frequent in the corpus;
/// ties keep cache order.
pub fn rank_candidates<'a>(cands: &'a [GeocodeCandidate], tf: &CorpusTermFreq) -> Option<&'a GeocodeCandidate> {
    let mut best: Option<(&GeocodeCandidate, u64)> = None;
    for c in cands {
        let s = tf.score(&c.address);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((c, s));
        }
    }
    best.map(|(c, _)| c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationEntity {
    pub canonical_id: String,
    pub surface_forms: BTreeSet<String>,
    pub address: Option<String>,
    pub coords: Option<(f64, f64)>,
}

struct PlaceNode {
    key: String,
    address: Option<String>,
    coords: Option<(f64, f64)>,
    surfaces: BTreeSet<String>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn coords_close(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() <= COORD_TOLERANCE && (a.1 - b.1).abs() <= COORD_TOLERANCE
}

/// Resolves place mentions into entities and returns the rewritten refs in
/// input order.
pub fn resolve_where(
    refs: &[LocationRef],
    cache: &GeocodeCache,
    tf: &CorpusTermFreq,
) -> (Vec<LocationEntity>, Vec<LocationRef>) {
    // one node per distinct normalized surface form
    let mut nodes: Vec<PlaceNode> = Vec::new();
    let mut node_of: BTreeMap<String, usize> = BTreeMap::new();
    for r in refs {
        let surface = normalize_text(&r.raw_text);
        if let Some(&i) = node_of.get(&surface) {
            nodes[i].surfaces.insert(r.raw_text.trim().to_string());
            if nodes[i].coords.is_none() {
                nodes[i].coords = r.coords;
            }
            continue;
        }
        let chosen = rank_candidates(cache.lookup(&r.raw_text), tf);
        let node = match chosen {
            Some(c) => PlaceNode {
                key: format!("addr:{}", normalize_text(&c.address)),
                address: Some(c.address.clone()),
                coords: Some((c.lat, c.lon)),
                surfaces: BTreeSet::from([r.raw_text.trim().to_string()]),
            },
            None => PlaceNode {
                key: format!("loc:{surface}"),
                address: None,
                coords: r.coords,
                surfaces: BTreeSet::from([r.raw_text.trim().to_string()]),
            },
        };
        node_of.insert(surface, nodes.len());
        nodes.push(node);
    }

    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let same_addr = matches!((&nodes[i].address, &nodes[j].address),
                (Some(a), Some(b)) if normalize_text(a) == normalize_text(b));
            let same_coords = matches!((nodes[i].coords, nodes[j].coords),
                (Some(a), Some(b)) if coords_close(a, b));
            if same_addr || same_coords {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..nodes.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut entity_of_node = vec![String::new(); nodes.len()];
    let mut entities = Vec::new();
    for members in groups.values() {
        let mut sorted = members.clone();
        sorted.sort_by(|&a, &b| nodes[a].key.cmp(&nodes[b].key));
        let id = nodes[sorted[0]].key.clone();
        let mut e = LocationEntity {
            canonical_id: id.clone(),
            surface_forms: BTreeSet::new(),
            address: None,
            coords: None,
        };
        for &m in &sorted {
            entity_of_node[m] = id.clone();
            e.surface_forms.extend(nodes[m].surfaces.iter().cloned());
            e.address = e.address.take().or_else(|| nodes[m].address.clone());
            e.coords = e.coords.or(nodes[m].coords);
        }
        entities.push(e);
    }
    entities.sort_by(|a, b| a.canonical_id.cmp(&b.canonical_id));

    let rewritten = refs
        .iter()
        .map(|r| {
            let i = node_of[&normalize_text(&r.raw_text)];
            let entity = &entities[entities
                .binary_search_by(|e| e.canonical_id.as_str().cmp(&entity_of_node[i]))
                .expect("entity exists")];
            LocationRef {
                raw_text: r.raw_text.clone(),
                canonical_id: Some(entity.canonical_id.clone()),
                coords: r.coords.or(entity.coords),
            }
        })
        .collect();
    (entities, rewritten)
}

/// Both entity sets produced by one resolution pass.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub people: Vec<PersonEntity>,
    pub places: Vec<LocationEntity>,
}

impl Resolution {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Resolves `who` and `where` of every object in place. Other dimensions are
/// left untouched.
pub fn resolve_corpus(corpus: &mut [TraceObject], cache: &GeocodeCache, mode: ErMode) -> Resolution {
    let people = resolve_people(corpus, mode);
    let tf = CorpusTermFreq::build(corpus);
    let refs: Vec<LocationRef> = corpus.iter().flat_map(|o| o.dims.where_.iter().cloned()).collect();
    let (places, rewritten) = resolve_where(&refs, cache, &tf);
    let mut it = rewritten.into_iter();
    for o in corpus.iter_mut() {
        for l in o.dims.where_.iter_mut() {
            *l = it.next().expect("one rewritten ref per input ref");
        }
    }
    Resolution { people, places }
}

/// Maps free-standing query references onto the entities of a resolved
/// corpus.
#[derive(Debug, Default, Clone)]
pub struct QueryResolver {
    by_surface: HashMap<String, String>,
    by_email: HashMap<String, String>,
    by_name: HashMap<BTreeSet<String>, BTreeSet<String>>,
    places: HashMap<String, String>,
}

impl QueryResolver {
    pub fn from_corpus(corpus: &[TraceObject]) -> Self {
        let mut qr = QueryResolver::default();
        for o in corpus {
            for p in &o.dims.who {
                let Some(id) = &p.entity_id else { continue };
                qr.by_surface.entry(p.surface_key()).or_insert_with(|| id.clone());
                for m in p.email_set() {
                    qr.by_email.entry(m).or_insert_with(|| id.clone());
                }
                if let Some(k) = p.name_keys().into_iter().next() {
                    qr.by_name.entry(k).or_default().insert(id.clone());
                }
            }
            for l in &o.dims.where_ {
                qr.places.entry(normalize_text(&l.raw_text)).or_insert_with(|| l.key());
            }
        }
        qr
    }

    /// Fills missing entity ids: literal name first, then email, then a
    /// unique name-token match. References that stay ambiguous are left
    /// unresolved.
    pub fn resolve_person(&self, r: &PersonRef) -> Option<String> {
        if let Some(id) = &r.entity_id {
            return Some(id.clone());
        }
        if let Some(id) = self.by_surface.get(&r.surface_key()) {
            return Some(id.clone());
        }
        if let Some(id) = r.email_set().iter().find_map(|m| self.by_email.get(m)) {
            return Some(id.clone());
        }
        let key = r.name_keys().into_iter().next()?;
        match self.by_name.get(&key) {
            Some(ids) if ids.len() == 1 => ids.iter().next().cloned(),
            _ => None,
        }
    }

    pub fn resolve_query(&self, q: &Query) -> Query {
        let mut out = q.clone();
        for p in out.dims.who.iter_mut() {
            p.entity_id = self.resolve_person(p);
        }
        for l in out.dims.where_.iter_mut() {
            if l.canonical_id.is_none() {
                l.canonical_id = self.places.get(&normalize_text(&l.raw_text)).cloned();
            }
        }
        out
    }
}
