//! The w5h object model: six dimension slots per trace, and queries with the
//! same shape.
//!
//! Everything here is an immutable value once constructed. The serde
//! representation is the canonical JSON Lines corpus format:
//!
//! ```text
//! {"id":"fb-1","source":"Facebook","what":["..."],
//!  "who":[{"name":"John Smith","emails":[],"role":"from","weight":1.0}],
//!  "when":["2017-04-22T16:58"],"where":[{"text":"Washington"}],
//!  "why":[],"how":["Facebook post"]}
//! ```

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionTag {
    What,
    Who,
    When,
    Where,
    Why,
    How,
}

impl DimensionTag {
    pub const ALL: [DimensionTag; 6] = [
        DimensionTag::What,
        DimensionTag::Who,
        DimensionTag::When,
        DimensionTag::Where,
        DimensionTag::Why,
        DimensionTag::How,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DimensionTag::What => "what",
            DimensionTag::Who => "who",
            DimensionTag::When => "when",
            DimensionTag::Where => "where",
            DimensionTag::Why => "why",
            DimensionTag::How => "how",
        }
    }
}

impl fmt::Display for DimensionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DimensionTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DimensionTag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Invalid(format!("unknown dimension {s:?}")))
    }
}

/// A possibly partial point in time. Granularity is implied by which fields
/// are present, so `2017`, `2017-04` and `--06` are all valid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimePoint {
    year: Option<i32>,
    month: Option<u8>,
    day: Option<u8>,
    hour: Option<u8>,
    minute: Option<u8>,
}

impl TimePoint {
    pub fn new(
        year: Option<i32>,
        month: Option<u8>,
        day: Option<u8>,
        hour: Option<u8>,
        minute: Option<u8>,
    ) -> Result<Self> {
        let tp = TimePoint {
            year,
            month,
            day,
            hour,
            minute,
        };
        tp.validate()?;
        Ok(tp)
    }

    pub fn year(year: i32) -> Self {
        TimePoint {
            year: Some(year),
            ..Default::default()
        }
    }

    pub fn year_month(year: i32, month: u8) -> Result<Self> {
        TimePoint::new(Some(year), Some(month), None, None, None)
    }

    pub fn month_only(month: u8) -> Result<Self> {
        TimePoint::new(None, Some(month), None, None, None)
    }

    pub fn ymd(year: i32, month: u8, day: u8) -> Result<Self> {
        TimePoint::new(Some(year), Some(month), Some(day), None, None)
    }

    pub fn get_year(&self) -> Option<i32> {
        self.year
    }

    pub fn get_month(&self) -> Option<u8> {
        self.month
    }

    pub fn get_day(&self) -> Option<u8> {
        self.day
    }

    pub fn get_hour(&self) -> Option<u8> {
        self.hour
    }

    pub fn get_minute(&self) -> Option<u8> {
        self.minute
    }

    fn validate(&self) -> Result<()> {
        let bad = || Error::InvalidTime(format!("{self:?}"));
        if self.year.is_none()
            && self.month.is_none()
            && self.day.is_none()
            && self.hour.is_none()
            && self.minute.is_none()
        {
            return Err(bad());
        }
        if let Some(m) = self.month {
            if !(1..=12).contains(&m) {
                return Err(bad());
            }
        }
        if let Some(d) = self.day {
            let m = self.month.ok_or_else(bad)?;
            let valid = match self.year {
                Some(y) => NaiveDate::from_ymd_opt(y, m as u32, d as u32).is_some(),
                // leap year is the most permissive choice without a year
                None => NaiveDate::from_ymd_opt(2000, m as u32, d as u32).is_some(),
            };
            if !valid {
                return Err(bad());
            }
        }
        if let Some(h) = self.hour {
            if h > 23 || self.day.is_none() {
                return Err(bad());
            }
        }
        if let Some(min) = self.minute {
            if min > 59 || self.hour.is_none() {
                return Err(bad());
            }
        }
        Ok(())
    }

    /// Keeps the calendar part and drops the time of day.
    pub fn date_only(&self) -> TimePoint {
        TimePoint {
            hour: None,
            minute: None,
            ..*self
        }
    }

    /// Coarsens the point to `(year, month)`; a no-op when month is absent.
    pub fn to_month(&self) -> TimePoint {
        TimePoint {
            day: None,
            hour: None,
            minute: None,
            ..*self
        }
    }

    /// Coarsens the point to its year when one is present.
    pub fn to_year(&self) -> TimePoint {
        match self.year {
            Some(y) => TimePoint::year(y),
            None => *self,
        }
    }

    /// Text rendering used by the keyword indexes: `2017-04-22 16:58`.
    pub fn search_text(&self) -> String {
        self.to_string().replace('T', " ")
    }
}

/// True iff every field present in `query_dt` equals the same field of `obj_dt`.
pub fn time_matches(query_dt: &TimePoint, obj_dt: &TimePoint) -> bool {
    fn field<T: PartialEq>(q: Option<T>, o: Option<T>) -> bool {
        match q {
            None => true,
            Some(q) => o == Some(q),
        }
    }
    field(query_dt.year, obj_dt.year)
        && field(query_dt.month, obj_dt.month)
        && field(query_dt.day, obj_dt.day)
        && field(query_dt.hour, obj_dt.hour)
        && field(query_dt.minute, obj_dt.minute)
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.year {
            Some(y) => write!(f, "{y:04}")?,
            None => f.write_str("-")?,
        }
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
        }
        if let Some(d) = self.day {
            write!(f, "-{d:02}")?;
        }
        if let (Some(h), Some(min)) = (self.hour, self.minute) {
            write!(f, "T{h:02}:{min:02}")?;
        } else if let Some(h) = self.hour {
            write!(f, "T{h:02}")?;
        }
        Ok(())
    }
}

impl FromStr for TimePoint {
    type Err = Error;

    /// Accepts `YYYY[-MM[-DD[THH[:MM]]]]`, `--MM` and `--MM-DD`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidTime(s.to_string());
        let s = s.trim();
        let num = |part: &str, len: usize| -> Result<u32> {
            if part.len() != len || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            part.parse().map_err(|_| bad())
        };

        let (date, time) = match s.split_once(['T', ' ']) {
            Some((d, t)) => (d, Some(t)),
            None => (s, None),
        };

        let (year, rest) = if let Some(rest) = date.strip_prefix("--") {
            (None, rest)
        } else {
            let (y, rest) = date.split_once('-').unwrap_or((date, ""));
            (Some(num(y, 4)? as i32), rest)
        };

        let mut parts = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split('-').collect::<Vec<_>>()
        };
        if parts.len() > 2 || (year.is_none() && parts.is_empty()) {
            return Err(bad());
        }
        let day = if parts.len() == 2 {
            Some(num(parts.pop().unwrap(), 2)? as u8)
        } else {
            None
        };
        let month = match parts.pop() {
            Some(p) => Some(num(p, 2)? as u8),
            None => None,
        };

        let (hour, minute) = match time {
            None => (None, None),
            Some(t) => {
                let t = t.trim_end_matches('Z');
                let mut hm = t.split(':');
                let h = num(hm.next().ok_or_else(bad)?, 2)? as u8;
                let m = match hm.next() {
                    Some(m) => Some(num(m, 2)? as u8),
                    None => None,
                };
                // seconds are accepted and ignored
                if let Some(sec) = hm.next() {
                    num(sec.get(..2).ok_or_else(bad)?, 2)?;
                }
                (Some(h), m)
            }
        };

        TimePoint::new(year, month, day, hour, minute).map_err(|_| bad())
    }
}

impl Serialize for TimePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimePoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_weight() -> f64 {
    1.0
}

/// One mention of a person inside a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonRef {
    #[serde(rename = "name", default)]
    pub raw_name: String,
    #[serde(rename = "emails", default)]
    pub raw_emails: Vec<String>,
    #[serde(default)]
    pub role: Option<String>,
    #[serde(rename = "weight", default = "default_weight")]
    pub role_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_id: Option<String>,
}

impl PersonRef {
    pub fn named(name: impl Into<String>) -> Self {
        PersonRef {
            raw_name: name.into(),
            raw_emails: Vec::new(),
            role: None,
            role_weight: 1.0,
            entity_id: None,
        }
    }

    pub fn with_email(mut self, email: impl Into<String>) -> Self {
        self.raw_emails.push(email.into());
        self
    }

    pub fn with_role(mut self, role: impl Into<String>) -> Self {
        self.role = Some(role.into());
        self
    }

    pub fn with_entity(mut self, id: impl Into<String>) -> Self {
        self.entity_id = Some(id.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.raw_name.trim().is_empty() && self.raw_emails.iter().all(|e| e.trim().is_empty()) {
            return Err(Error::Invalid("person reference has neither name nor email".into()));
        }
        if !(self.role_weight >= 0.0 && self.role_weight.is_finite()) {
            return Err(Error::Invalid(format!(
                "role weight {} must be a non-negative number",
                self.role_weight
            )));
        }
        Ok(())
    }

    /// The literal identity of this mention: its casefolded name, or its
    /// first email when the name is blank.
    pub fn surface_key(&self) -> String {
        let name = normalize_text(&self.raw_name);
        if !name.is_empty() {
            return format!("n:{name}");
        }
        let mut emails: Vec<String> = self.raw_emails.iter().map(|e| normalize_text(e)).collect();
        emails.sort();
        format!("e:{}", emails.first().map(String::as_str).unwrap_or(""))
    }

    pub fn search_text(&self) -> String {
        let mut out = self.raw_name.clone();
        for e in &self.raw_emails {
            out.push(' ');
            out.push_str(e);
        }
        out
    }
}

/// One mention of a place inside a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationRef {
    pub raw_text: String,
    pub canonical_id: Option<String>,
    pub coords: Option<(f64, f64)>,
}

impl LocationRef {
    pub fn new(text: impl Into<String>) -> Self {
        LocationRef {
            raw_text: text.into(),
            canonical_id: None,
            coords: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.raw_text.trim().is_empty() {
            return Err(Error::Invalid("location with empty text".into()));
        }
        if let Some((lat, lon)) = self.coords {
            if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
                return Err(Error::Invalid(format!("coordinates out of range: ({lat}, {lon})")));
            }
        }
        Ok(())
    }

    /// Canonical id when resolved, otherwise the normalized surface form.
    pub fn key(&self) -> String {
        match &self.canonical_id {
            Some(id) => id.clone(),
            None => format!("loc:{}", normalize_text(&self.raw_text)),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LocationRepr {
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LocationInput {
    Bare(String),
    Full(LocationRepr),
}

impl Serialize for LocationRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LocationRepr {
            text: self.raw_text.clone(),
            id: self.canonical_id.clone(),
            lat: self.coords.map(|c| c.0),
            lon: self.coords.map(|c| c.1),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocationRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match LocationInput::deserialize(d)? {
            LocationInput::Bare(text) => LocationRef::new(text),
            LocationInput::Full(r) => LocationRef {
                raw_text: r.text,
                canonical_id: r.id,
                coords: match (r.lat, r.lon) {
                    (Some(a), Some(b)) => Some((a, b)),
                    (None, None) => None,
                    _ => return Err(serde::de::Error::custom("lat and lon must appear together")),
                },
            },
        })
    }
}

/// Borrowed view of one dimension slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimensionItems<'a> {
    Text(&'a [String]),
    People(&'a [PersonRef]),
    Times(&'a [TimePoint]),
    Places(&'a [LocationRef]),
}

impl DimensionItems<'_> {
    pub fn len(&self) -> usize {
        match self {
            DimensionItems::Text(v) => v.len(),
            DimensionItems::People(v) => v.len(),
            DimensionItems::Times(v) => v.len(),
            DimensionItems::Places(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Text of each item as it would be indexed.
    pub fn texts(&self) -> Vec<String> {
        match self {
            DimensionItems::Text(v) => v.to_vec(),
            DimensionItems::People(v) => v.iter().map(PersonRef::search_text).collect(),
            DimensionItems::Times(v) => v.iter().map(TimePoint::search_text).collect(),
            DimensionItems::Places(v) => v.iter().map(|l| l.raw_text.clone()).collect(),
        }
    }
}

/// The six dimension slots shared by objects and queries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dimensions {
    #[serde(default)]
    pub what: Vec<String>,
    #[serde(default)]
    pub who: Vec<PersonRef>,
    #[serde(default)]
    pub when: Vec<TimePoint>,
    #[serde(rename = "where", default)]
    pub where_: Vec<LocationRef>,
    #[serde(default)]
    pub why: Vec<String>,
    #[serde(default)]
    pub how: Vec<String>,
}

impl Dimensions {
    pub fn get(&self, tag: DimensionTag) -> DimensionItems<'_> {
        match tag {
            DimensionTag::What => DimensionItems::Text(&self.what),
            DimensionTag::Who => DimensionItems::People(&self.who),
            DimensionTag::When => DimensionItems::Times(&self.when),
            DimensionTag::Where => DimensionItems::Places(&self.where_),
            DimensionTag::Why => DimensionItems::Text(&self.why),
            DimensionTag::How => DimensionItems::Text(&self.how),
        }
    }

    fn validate(&self) -> Result<()> {
        self.who.iter().try_for_each(PersonRef::validate)?;
        self.where_.iter().try_for_each(LocationRef::validate)
    }
}

/// A single digital trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceObject {
    pub id: String,
    pub source: String,
    #[serde(flatten)]
    pub dims: Dimensions,
}

impl TraceObject {
    pub fn new(id: impl Into<String>, source: impl Into<String>) -> Self {
        TraceObject {
            id: id.into(),
            source: source.into(),
            dims: Dimensions::default(),
        }
    }

    pub fn get(&self, tag: DimensionTag) -> DimensionItems<'_> {
        self.dims.get(tag)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::Invalid("object with empty id".into()));
        }
        if self.source.trim().is_empty() {
            return Err(Error::Invalid(format!("object {:?} has an empty source", self.id)));
        }
        self.dims.validate()
    }
}

/// Returns the stored list for `tag`; `why` is always present, usually empty.
pub fn get_dimension(obj: &TraceObject, tag: DimensionTag) -> DimensionItems<'_> {
    obj.get(tag)
}

/// A structured query: an object without identity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Query {
    #[serde(flatten)]
    pub dims: Dimensions,
}

impl Query {
    pub fn new(dims: Dimensions) -> Result<Self> {
        let q = Query { dims };
        q.validate()?;
        Ok(q)
    }

    pub fn get(&self, tag: DimensionTag) -> DimensionItems<'_> {
        self.dims.get(tag)
    }

    /// Dimensions with at least one item, excluding `why`.
    pub fn active_dimensions(&self) -> Vec<DimensionTag> {
        DimensionTag::ALL
            .into_iter()
            .filter(|&t| t != DimensionTag::Why && !self.get(t).is_empty())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.active_dimensions().is_empty() {
            return Err(Error::EmptyQuery);
        }
        Ok(())
    }
}

/// Casefold and collapse internal whitespace.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}
