//! Reproducible synthetic personal-trace corpora.
//!
//! People interact mostly through a preferred service, a few groups of people
//! meet in bursts, and some mentions use an alternate surface form. Text is
//! drawn from a Zipfian made-up vocabulary, with names and years sprinkled in
//! so that keyword matching on the whole object is noisy.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LocationRef, PersonRef, TimePoint, TraceObject};

const FIRST_NAMES: &[&str] = &[
    "Aaron", "Alice", "Anna", "Ashley", "Brian", "Carla", "Chris", "Daniel", "Diana", "Elena", "Emma", "Frank",
    "Grace", "Hannah", "Ivan", "Jack", "James", "John", "Julia", "Karen", "Kevin", "Laura", "Lucas", "Maria",
    "Mark", "Nina", "Oscar", "Paula", "Peter", "Rachel", "Sam", "Sofia", "Tom", "Victor", "Wendy", "Zoe",
];

const LAST_NAMES: &[&str] = &[
    "Adams", "Baker", "Brown", "Carter", "Clark", "Davis", "Evans", "Garcia", "Green", "Hall", "Harris", "Hill",
    "Jones", "King", "Lee", "Lewis", "Lopez", "Martin", "Miller", "Moore", "Nelson", "Parker", "Perez", "Reed",
    "Scott", "Smith", "Taylor", "Turner", "Walker", "White", "Wilson", "Young",
];

const PLACES: &[&str] = &[
    "Washington", "Boston", "Chicago", "Denver", "Seattle", "Austin", "Portland", "Phoenix", "Atlanta", "Miami",
    "Paris", "London", "Berlin", "Madrid", "Lisbon", "Rome", "Athens", "Dublin", "Oslo", "Vienna",
];

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ren", "tu", "sa", "vo", "ne", "pri", "dal", "shi", "gor", "fe", "bal", "ti", "mun", "qua",
    "xe", "zor", "el", "an", "ru", "po", "ke", "wil", "ja", "hu", "ost", "dra", "ly",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub name: String,
    /// Record type, stored in `how` as "<name> <kind>".
    pub kind: String,
    pub weight: f64,
    /// Inclusive bounds of the text length in tokens; lengths are drawn
    /// log-uniformly, so long texts are rare.
    pub min_len: usize,
    pub max_len: usize,
}

impl SourceSpec {
    fn new(name: &str, kind: &str, weight: f64, min_len: usize, max_len: usize) -> Self {
        SourceSpec {
            name: name.into(),
            kind: kind.into(),
            weight,
            min_len,
            max_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub size: usize,
    /// Fraction of all objects whose `who` is exactly this group.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub objects: usize,
    pub seed: u64,
    pub sources: Vec<SourceSpec>,
    pub entities: usize,
    pub groups: Vec<GroupSpec>,
    /// Probability that a mention uses an alternate name or a bare email.
    pub alias_rate: f64,
    /// Probability that a person prefers their home service for a given
    /// interaction.
    pub home_affinity: f64,
    /// How much more likely a person is to be picked on their home service.
    pub home_boost: f64,
    /// Probability that a group object falls inside one of the group's
    /// bursts.
    pub burst_rate: f64,
    pub first_year: i32,
    pub years: u32,
    pub vocabulary: usize,
    pub zipf_exponent: f64,
    /// Probability that a text mentions a person name or a year.
    pub confound_rate: f64,
    pub who_rate: f64,
    pub when_rate: f64,
    pub what_rate: f64,
    pub where_rate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            objects: 5000,
            seed: 42,
            sources: vec![
                SourceSpec::new("gmail", "email", 0.30, 20, 300),
                SourceSpec::new("facebook", "post", 0.22, 6, 60),
                SourceSpec::new("twitter", "tweet", 0.18, 4, 20),
                SourceSpec::new("dropbox", "file", 0.12, 2, 8),
                SourceSpec::new("calendar", "event", 0.10, 3, 12),
                SourceSpec::new("foursquare", "checkin", 0.08, 2, 10),
            ],
            entities: 40,
            groups: vec![
                GroupSpec { size: 3, rate: 0.08 },
                GroupSpec { size: 2, rate: 0.06 },
                GroupSpec { size: 4, rate: 0.04 },
            ],
            alias_rate: 0.3,
            home_affinity: 0.9,
            home_boost: 20.0,
            burst_rate: 0.7,
            first_year: 2015,
            years: 3,
            vocabulary: 3000,
            zipf_exponent: 1.0,
            confound_rate: 0.3,
            who_rate: 0.949,
            when_rate: 0.957,
            what_rate: 0.999,
            where_rate: 0.015,
        }
    }
}

fn check_rate(name: &str, r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::Infeasible(format!("{name} = {r} is not in [0, 1]")))
    }
}

impl SynthSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (n, r) in [
            ("alias_rate", self.alias_rate),
            ("home_affinity", self.home_affinity),
            ("burst_rate", self.burst_rate),
            ("confound_rate", self.confound_rate),
            ("who_rate", self.who_rate),
            ("when_rate", self.when_rate),
            ("what_rate", self.what_rate),
            ("where_rate", self.where_rate),
        ] {
            check_rate(n, r)?;
        }
        if !(self.home_boost > 0.0 && self.home_boost.is_finite()) {
            return Err(Error::Infeasible(format!("home_boost = {} must be positive", self.home_boost)));
        }
        if self.sources.is_empty() {
            return Err(Error::Infeasible("no sources".into()));
        }
        let total: f64 = self.sources.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-9 || self.sources.iter().any(|s| !(s.weight >= 0.0)) {
            return Err(Error::Infeasible(format!("source weights sum to {total}, not 1")));
        }
        let names: BTreeSet<&str> = self.sources.iter().map(|s| s.name.as_str()).collect();
        if names.len() != self.sources.len() || names.iter().any(|n| n.trim().is_empty()) {
            return Err(Error::Infeasible("source names must be distinct and non-empty".into()));
        }
        if let Some(s) = self.sources.iter().find(|s| s.min_len == 0 || s.min_len > s.max_len) {
            return Err(Error::Infeasible(format!("source {} has text length bounds {}..{}", s.name, s.min_len, s.max_len)));
        }
        let pool = FIRST_NAMES.len() * LAST_NAMES.len();
        if self.entities > pool {
            return Err(Error::Infeasible(format!("{} entities exceed the {pool} available names", self.entities)));
        }
        if self.who_rate > 0.0 && self.entities == 0 {
            return Err(Error::Infeasible("who_rate is positive but there are no entities".into()));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.size == 0 || g.size > self.entities {
                return Err(Error::Infeasible(format!(
                    "group {i} has {} members but the pool holds {} entities",
                    g.size, self.entities
                )));
            }
            check_rate("group rate", g.rate)?;
        }
        let group_total: f64 = self.groups.iter().map(|g| g.rate).sum();
        if group_total > self.who_rate + 1e-12 {
            return Err(Error::Infeasible(format!(
                "group rates sum to {group_total}, above who_rate {}",
                self.who_rate
            )));
        }
        if self.years == 0 {
            return Err(Error::Infeasible("time span must cover at least one year".into()));
        }
        if self.vocabulary == 0 {
            return Err(Error::Infeasible("vocabulary is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueEntity {
    pub id: String,
    pub name: String,
    pub email: String,
    /// Personal address used alongside `email` and alone in some aliases.
    pub handle: String,
    pub home_source: String,
    /// Surface keys under which the entity actually appears.
    pub surface_forms: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueGroup {
    pub members: Vec<String>,
    pub home_source: String,
    pub planted_rate: f64,
    pub observed_rate: f64,
    /// Burst windows as (first day, last day).
    pub bursts: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub entities: Vec<TrueEntity>,
    /// Surface key of every mention -> true entity id.
    pub surface_to_entity: BTreeMap<String, String>,
    pub groups: Vec<TrueGroup>,
    /// Observed share of objects with a non-empty dimension.
    pub population: BTreeMap<String, f64>,
}

impl GroundTruth {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

struct Person {
    first: &'static str,
    last: &'static str,
    email: String,
    /// Personal address that shares no token with the name.
    handle: String,
    home: usize,
}

impl Person {
    fn canonical(&self) -> PersonRef {
        PersonRef::named(format!("{} {}", self.first, self.last))
            .with_email(self.email.clone())
            .with_email(self.handle.clone())
    }

    fn alias(&self, rng: &mut ChaCha8Rng) -> PersonRef {
        if rng.random_bool(0.5) {
            PersonRef::named(format!("{}, {}", self.last, self.first))
        } else {
            PersonRef::named("").with_email(self.handle.clone())
        }
    }
}

fn make_vocabulary(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let reserved: BTreeSet<String> = FIRST_NAMES
        .iter()
        .chain(LAST_NAMES)
        .chain(PLACES)
        .map(|s| s.to_lowercase())
        .chain(crate::text::english_stopwords().into_iter().map(String::from))
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let k = rng.random_range(2..=4);
        let w: String = (0..k).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect();
        if !reserved.contains(&w) && seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn zipf(n: usize, s: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / (r as f64).powf(s))).expect("positive weights")
}

struct Calendar {
    start: NaiveDate,
    days: i64,
}

impl Calendar {
    fn random_day(&self, rng: &mut ChaCha8Rng) -> NaiveDate {
        self.start + Duration::days(rng.random_range(0..self.days))
    }

    fn stamp(day: NaiveDate, rng: &mut ChaCha8Rng) -> NaiveDateTime {
        day.and_hms_opt(rng.random_range(7..23), rng.random_range(0..60), 0)
            .expect("valid time of day")
    }
}

fn to_point(t: NaiveDateTime) -> TimePoint {
    TimePoint::new(
        Some(t.year()),
        Some(t.month() as u8),
        Some(t.day() as u8),
        Some(t.hour() as u8),
        Some(t.minute() as u8),
    )
    .expect("calendar dates are valid")
}

struct Group {
    members: Vec<usize>,
    home: usize,
    bursts: Vec<(NaiveDate, i64)>,
}

const BURSTS_PER_GROUP: usize = 2;
const BURST_DAYS: i64 = 30;

/// Generates a corpus and its ground truth. The same spec always yields the
/// same output.
pub fn generate_corpus(spec: &SynthSpec) -> Result<(Vec<TraceObject>, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_src = spec.sources.len();
    let source_pick = WeightedIndex::new(spec.sources.iter().map(|s| s.weight))
        .map_err(|e| Error::Infeasible(format!("source weights: {e}")))?;

    // people, each with a preferred service
    let mut pairs: Vec<(&'static str, &'static str)> =
        FIRST_NAMES.iter().flat_map(|f| LAST_NAMES.iter().map(move |l| (*f, *l))).collect();
    pairs.shuffle(&mut rng);
    let people: Vec<Person> = pairs
        .into_iter()
        .take(spec.entities)
        .map(|(first, last)| Person {
            first,
            last,
            email: format!("{}.{}@example.com", first.to_lowercase(), last.to_lowercase()),
            handle: format!(
                "{}{}{}@mail.example.org",
                &first[..1].to_lowercase(),
                last.to_lowercase(),
                rng.random_range(10..100)
            ),
            home: source_pick.sample(&mut rng),
        })
        .collect();
    let popularity: Vec<f64> = (1..=people.len()).map(|r| 1.0 / (r as f64).sqrt()).collect();
    let by_source: Vec<Option<WeightedIndex<f64>>> = (0..n_src)
        .map(|s| {
            WeightedIndex::new(
                people
                    .iter()
                    .zip(&popularity)
                    .map(|(p, w)| if p.home == s { w * spec.home_boost } else { *w }),
            )
            .ok()
        })
        .collect();

    let cal = Calendar {
        start: NaiveDate::from_ymd_opt(spec.first_year, 1, 1)
            .ok_or_else(|| Error::Infeasible(format!("year {} out of range", spec.first_year)))?,
        days: (0..spec.years as i32)
            .map(|y| if NaiveDate::from_ymd_opt(spec.first_year + y, 2, 29).is_some() { 366 } else { 365 })
            .sum(),
    };

    let groups: Vec<Group> = spec
        .groups
        .iter()
        .map(|g| {
            // a group mostly gathers people who share its service
            let home = source_pick.sample(&mut rng);
            let weight = |i: usize| if people[i].home == home { spec.home_boost } else { 1.0 };
            let mut members: Vec<usize> = rand::seq::index::sample_weighted(&mut rng, people.len(), weight, g.size)
                .map_err(|e| Error::Infeasible(format!("group members: {e}")))?
                .into_vec();
            members.sort_unstable();
            let bursts = (0..BURSTS_PER_GROUP)
                .map(|_| (cal.start + Duration::days(rng.random_range(0..(cal.days - BURST_DAYS).max(1))), BURST_DAYS))
                .collect();
            Ok(Group { members, home, bursts })
        })
        .collect::<Result<_>>()?;
    let group_rates: Vec<f64> = spec.groups.iter().map(|g| g.rate).collect();
    let group_total: f64 = group_rates.iter().sum();
    let group_pick = WeightedIndex::new(&group_rates).ok();

    let vocab = make_vocabulary(spec.vocabulary, &mut rng);
    let word_pick = zipf(vocab.len(), spec.zipf_exponent);

    let mut surface_to_entity = BTreeMap::new();
    let mut group_hits = vec![0usize; groups.len()];
    let mut objects = Vec::with_capacity(spec.objects);

    for i in 0..spec.objects {
        let mut source = source_pick.sample(&mut rng);
        let mut members: Vec<usize> = Vec::new();
        let mut burst: Option<(NaiveDate, i64)> = None;

        if rng.random_bool(spec.who_rate) {
            let u: f64 = rng.random::<f64>() * spec.who_rate;
            match &group_pick {
                Some(gp) if u < group_total => {
                    let gi = gp.sample(&mut rng);
                    let g = &groups[gi];
                    group_hits[gi] += 1;
                    members = g.members.clone();
                    if rng.random_bool(spec.home_affinity) {
                        source = g.home;
                    }
                    if rng.random_bool(spec.burst_rate) {
                        burst = Some(*g.bursts.choose(&mut rng).expect("bursts"));
                    }
                }
                _ => {
                    let k = *[1usize, 1, 1, 2, 2, 3].choose(&mut rng).expect("non-empty");
                    let first = by_source[source].as_ref().expect("entities exist").sample(&mut rng);
                    // the first person decides the service most of the time
                    if people[first].home != source && rng.random_bool(spec.home_affinity) {
                        source = people[first].home;
                    }
                    members.push(first);
                    let pick = by_source[source].as_ref().expect("entities exist");
                    let mut guard = 0;
                    while members.len() < k.min(people.len()) && guard < 100 {
                        let p = pick.sample(&mut rng);
                        if !members.contains(&p) {
                            members.push(p);
                        }
                        guard += 1;
                    }
                    // a planted group must stay exact, so drop a chance
                    // collision with one
                    let mut sorted = members.clone();
                    sorted.sort_unstable();
                    if groups.iter().any(|g| g.members == sorted) && members.len() > 1 {
                        members.pop();
                    }
                }
            }
        }

        let src = &spec.sources[source];
        let mut obj = TraceObject::new(format!("{}-{:05}", src.name, i), src.name.clone());
        obj.dims.how.push(format!("{} {}", src.name, src.kind));

        for (pos, &m) in members.iter().enumerate() {
            let p = &people[m];
            let mut r = if rng.random_bool(spec.alias_rate) { p.alias(&mut rng) } else { p.canonical() };
            if src.kind == "email" {
                r = r.with_role(if pos == 0 { "from" } else { "to" });
            }
            surface_to_entity.insert(r.surface_key(), format!("p{m:02}"));
            obj.dims.who.push(r);
        }

        if rng.random_bool(spec.when_rate) {
            let day = match burst {
                Some((start, len)) => start + Duration::days(rng.random_range(0..len)),
                None => cal.random_day(&mut rng),
            };
            let t = Calendar::stamp(day, &mut rng);
            obj.dims.when.push(to_point(t));
            if src.kind == "event" {
                // an event also records when it was created
                let created = t - Duration::days(rng.random_range(1..30));
                obj.dims.when.push(to_point(created));
            }
        }

        if rng.random_bool(spec.what_rate) {
            let lo = (src.min_len as f64).ln();
            let hi = (src.max_len as f64 + 1.0).ln();
            let len = (rng.random_range(lo..hi).exp().floor() as usize).clamp(src.min_len, src.max_len);
            let mut words: Vec<String> = (0..len).map(|_| vocab[word_pick.sample(&mut rng)].clone()).collect();
            if rng.random_bool(spec.confound_rate) && !people.is_empty() {
                let p = &people[rng.random_range(0..people.len())];
                let at = rng.random_range(0..=words.len());
                let mention = if rng.random_bool(0.5) { p.first } else { p.last };
                words.insert(at, mention.to_string());
            }
            if rng.random_bool(spec.confound_rate) {
                let at = rng.random_range(0..=words.len());
                let y = spec.first_year + rng.random_range(0..spec.years as i32);
                words.insert(at, y.to_string());
            }
            obj.dims.what.push(words.join(" "));
        }

        if rng.random_bool(spec.where_rate) {
            obj.dims.where_.push(LocationRef::new(*PLACES.choose(&mut rng).expect("non-empty")));
        }
        objects.push(obj);
    }

    let mut forms: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (k, id) in &surface_to_entity {
        forms.entry(id.clone()).or_default().insert(k.clone());
    }
    let entities = people
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let id = format!("p{i:02}");
            TrueEntity {
                surface_forms: forms.remove(&id).unwrap_or_default(),
                id,
                name: format!("{} {}", p.first, p.last),
                email: p.email.clone(),
                handle: p.handle.clone(),
                home_source: spec.sources[p.home].name.clone(),
            }
        })
        .collect();
    let n = spec.objects.max(1) as f64;
    let truth_groups = groups
        .iter()
        .zip(&spec.groups)
        .zip(&group_hits)
        .map(|((g, gs), &hits)| TrueGroup {
            members: g.members.iter().map(|m| format!("p{m:02}")).collect(),
            home_source: spec.sources[g.home].name.clone(),
            planted_rate: gs.rate,
            observed_rate: hits as f64 / n,
            bursts: g
                .bursts
                .iter()
                .map(|(s, len)| (s.to_string(), (*s + Duration::days(len - 1)).to_string()))
                .collect(),
        })
        .collect();
    let share = |f: &dyn Fn(&TraceObject) -> bool| objects.iter().filter(|o| f(o)).count() as f64 / n;
    let population = BTreeMap::from([
        ("who".to_string(), share(&|o| !o.dims.who.is_empty())),
        ("when".to_string(), share(&|o| !o.dims.when.is_empty())),
        ("what".to_string(), share(&|o| !o.dims.what.is_empty())),
        ("where".to_string(), share(&|o| !o.dims.where_.is_empty())),
    ]);
    let truth = GroundTruth {
        seed: spec.seed,
        entities,
        surface_to_entity,
        groups: truth_groups,
        population,
    };
    Ok((objects, truth))
}
