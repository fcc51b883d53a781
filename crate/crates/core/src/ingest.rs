//! Dictionary-driven ingestion of heterogeneous source records.
//!
//! A raw record is a source name plus an ordered list of `(label, value)`
//! pairs. Each label is classified into a dimension through a
//! [`LabelDictionary`]; values are then parsed according to that dimension.
//!
//! Raw records are read from JSON Lines:
//!
//! ```text
//! {"id":"m1","source":"gmail","type":"message",
//!  "fields":[["From","John Smith <js@x.com>"],["To",["anna@y.org"]],["Subject","hi"]]}
//! ```
//!
//! Multi-valued fields must be JSON arrays; strings are never split.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{DimensionTag, LocationRef, PersonRef, TimePoint, TraceObject};

/// Maps field labels to dimensions, per source and with a source-agnostic
/// fallback. Labels and sources are matched case-insensitively.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelDictionary {
    sources: HashMap<String, SourceRules>,
    fallback: HashMap<String, DimensionTag>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct SourceRules {
    labels: HashMap<String, DimensionTag>,
    date_formats: Vec<String>,
}

/// Outcome of classifying one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Mapped(DimensionTag),
    Unmapped,
}

impl LabelDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, source: &str, label: &str, tag: DimensionTag) {
        self.sources
            .entry(source.to_lowercase())
            .or_default()
            .labels
            .insert(label.to_lowercase(), tag);
    }

    pub fn insert_fallback(&mut self, label: &str, tag: DimensionTag) {
        self.fallback.insert(label.to_lowercase(), tag);
    }

    pub fn add_date_format(&mut self, source: &str, format: &str) {
        self.sources
            .entry(source.to_lowercase())
            .or_default()
            .date_formats
            .push(format.to_string());
    }

    pub fn knows_source(&self, source: &str) -> bool {
        self.sources.contains_key(&source.to_lowercase())
    }

    pub fn classify(&self, source: &str, label: &str) -> Classification {
        let label = label.trim().to_lowercase();
        self.sources
            .get(&source.to_lowercase())
            .and_then(|r| r.labels.get(&label))
            .or_else(|| self.fallback.get(&label))
            .map_or(Classification::Unmapped, |&t| Classification::Mapped(t))
    }

    fn date_formats(&self, source: &str) -> &[String] {
        self.sources
            .get(&source.to_lowercase())
            .map_or(&[], |r| r.date_formats.as_slice())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            #[serde(default)]
            sources: BTreeMap<String, BTreeMap<String, Value>>,
            #[serde(default)]
            fallback: BTreeMap<String, String>,
        }

        let repr: Repr = serde_json::from_str(text)?;
        let mut dict = LabelDictionary::new();
        for (source, labels) in repr.sources {
            dict.sources.entry(source.to_lowercase()).or_default();
            for (label, value) in labels {
                if label == "_dates" {
                    let formats: Vec<String> = serde_json::from_value(value)?;
                    for f in formats {
                        dict.add_date_format(&source, &f);
                    }
                    continue;
                }
                let tag = value
                    .as_str()
                    .ok_or_else(|| Error::Invalid(format!("label {label:?} must map to a dimension name")))?
                    .parse()?;
                dict.insert(&source, &label, tag);
            }
        }
        for (label, tag) in repr.fallback {
            dict.insert_fallback(&label, tag.parse()?);
        }
        Ok(dict)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Source-specific label wins over the fallback; unknown labels are reported,
/// never guessed.
pub fn classify_label(dict: &LabelDictionary, source: &str, label: &str) -> Classification {
    dict.classify(source, label)
}

/// A raw field value: one string or a list of strings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    One(String),
    Many(Vec<String>),
}

impl RawValue {
    fn items(&self) -> Vec<&str> {
        match self {
            RawValue::One(s) => vec![s.as_str()],
            RawValue::Many(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

impl From<&str> for RawValue {
    fn from(s: &str) -> Self {
        RawValue::One(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RawRecord {
    #[serde(default)]
    pub id: Option<String>,
    pub source: String,
    /// Record type such as `post` or `message`; feeds the `how` dimension.
    #[serde(rename = "type", default)]
    pub kind: Option<String>,
    pub fields: Vec<(String, RawValue)>,
}

impl RawRecord {
    pub fn new(source: impl Into<String>) -> Self {
        RawRecord {
            id: None,
            source: source.into(),
            kind: None,
            fields: Vec::new(),
        }
    }

    pub fn field(mut self, label: &str, value: impl Into<RawValue>) -> Self {
        self.fields.push((label.to_string(), value.into()));
        self
    }

    pub fn record_type(&self) -> String {
        match &self.kind {
            Some(k) if !k.trim().is_empty() => format!("{} {}", self.source, k.trim()),
            _ => self.source.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRecord {
    pub object: TraceObject,
    pub unmapped: Vec<String>,
    pub warnings: Vec<String>,
}

/// Splits `John Smith <js@x.com>`, `js@x.com` and `John Smith` into name and
/// email parts.
pub fn parse_person(value: &str) -> Option<PersonRef> {
    let value = value.trim();
    if value.is_empty() {
        return None;
    }
    if let (Some(open), Some(close)) = (value.find('<'), value.rfind('>')) {
        if open < close {
            let name = value[..open].trim().trim_matches('"').trim();
            let email = value[open + 1..close].trim();
            let mut p = PersonRef::named(name);
            if !email.is_empty() {
                p.raw_emails.push(email.to_string());
            }
            return (!name.is_empty() || !email.is_empty()).then_some(p);
        }
    }
    if value.contains('@') && !value.contains(char::is_whitespace) {
        return Some(PersonRef::named("").with_email(value));
    }
    Some(PersonRef::named(value))
}

fn parse_coords(text: &str) -> Option<(f64, f64)> {
    let (a, b) = text.split_once(',')?;
    let lat: f64 = a.trim().parse().ok()?;
    let lon: f64 = b.trim().parse().ok()?;
    ((-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)).then_some((lat, lon))
}

/// ISO-like prefixes first, then the source's own formats.
pub fn parse_date(value: &str, formats: &[String]) -> Option<TimePoint> {
    let value = value.trim();
    if let Ok(tp) = value.parse::<TimePoint>() {
        return Some(tp);
    }
    let full = |dt: NaiveDateTime| {
        TimePoint::new(
            Some(dt.year()),
            Some(dt.month() as u8),
            Some(dt.day() as u8),
            Some(dt.hour() as u8),
            Some(dt.minute() as u8),
        )
        .ok()
    };
    for f in formats {
        if let Ok(dt) = DateTime::parse_from_str(value, f) {
            return full(dt.naive_local());
        }
        if let Ok(dt) = NaiveDateTime::parse_from_str(value, f) {
            return full(dt);
        }
        if let Ok(d) = NaiveDate::parse_from_str(value, f) {
            return TimePoint::ymd(d.year(), d.month() as u8, d.day() as u8).ok();
        }
    }
    None
}

/// Parses one raw record into a trace object. Values under unmapped labels
/// are dropped and their labels reported; unparseable dates are dropped with
/// a warning.
pub fn parse_record(dict: &LabelDictionary, rec: &RawRecord) -> Result<ParsedRecord> {
    let id = rec.id.clone().unwrap_or_else(|| format!("{}-unnamed", rec.source));
    if rec.source.trim().is_empty() {
        return Err(Error::Invalid(format!("record {id:?} has an empty source")));
    }
    if rec.fields.is_empty() {
        return Err(Error::EmptyRecord(id));
    }
    if !dict.knows_source(&rec.source) && dict.fallback.is_empty() {
        return Err(Error::Invalid(format!("no dictionary coverage for source {:?}", rec.source)));
    }

    let mut obj = TraceObject::new(id, rec.source.clone());
    obj.dims.how.push(rec.record_type());
    let mut unmapped = Vec::new();
    let mut warnings = Vec::new();
    let formats = dict.date_formats(&rec.source);

    for (label, value) in &rec.fields {
        let tag = match dict.classify(&rec.source, label) {
            Classification::Mapped(t) => t,
            Classification::Unmapped => {
                if !unmapped.contains(label) {
                    unmapped.push(label.clone());
                }
                continue;
            }
        };
        for item in value.items() {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            match tag {
                DimensionTag::What => obj.dims.what.push(item.to_string()),
                DimensionTag::Why => obj.dims.why.push(item.to_string()),
                DimensionTag::How => obj.dims.how.push(item.to_string()),
                DimensionTag::Who => {
                    if let Some(p) = parse_person(item) {
                        obj.dims.who.push(p.with_role(label.to_lowercase()));
                    }
                }
                DimensionTag::When => match parse_date(item, formats) {
                    Some(tp) => obj.dims.when.push(tp),
                    None => {
                        let w = format!("{}: dropped malformed date {item:?} under {label:?}", obj.id);
                        log::warn!("{w}");
                        warnings.push(w);
                    }
                },
                DimensionTag::Where => {
                    let mut loc = LocationRef::new(item);
                    loc.coords = parse_coords(item);
                    obj.dims.where_.push(loc);
                }
            }
        }
    }
    Ok(ParsedRecord {
        object: obj,
        unmapped,
        warnings,
    })
}

/// Warning collector that tolerates concurrent appends.
#[derive(Debug, Default)]
pub struct WarningSink {
    inner: Mutex<Vec<String>>,
}

impl WarningSink {
    pub fn push(&self, w: String) {
        self.inner.lock().expect("warning sink poisoned").push(w);
    }

    pub fn extend(&self, ws: impl IntoIterator<Item = String>) {
        self.inner.lock().expect("warning sink poisoned").extend(ws);
    }

    pub fn into_inner(self) -> Vec<String> {
        self.inner.into_inner().expect("warning sink poisoned")
    }
}

/// Result of ingesting raw files.
#[derive(Debug, Default)]
pub struct IngestReport {
    pub objects: Vec<TraceObject>,
    /// Label -> number of occurrences without a mapping.
    pub unmapped: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn check_unique(objects: &[TraceObject]) -> Result<()> {
    let mut seen = HashSet::with_capacity(objects.len());
    for o in objects {
        if !seen.insert(o.id.as_str()) {
            return Err(Error::DuplicateId(o.id.clone()));
        }
    }
    Ok(())
}

/// Reads a canonical JSON Lines corpus.
pub fn load_corpus(path: &Path) -> Result<Vec<TraceObject>> {
    let mut objects = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let obj: TraceObject = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        obj.validate().map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        objects.push(obj);
    }
    check_unique(&objects)?;
    Ok(objects)
}

fn parse_raw_file(path: &Path, dict: &LabelDictionary, sink: &WarningSink) -> Result<Vec<ParsedRecord>> {
    let mut out = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let mut rec: RawRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if rec.id.is_none() {
            rec.id = Some(format!("{}-{line_no}", rec.source.to_lowercase()));
        }
        let parsed = parse_record(dict, &rec)?;
        sink.extend(parsed.warnings.iter().cloned());
        out.push(parsed);
    }
    Ok(out)
}

/// Parses raw-record files, one worker per file; object order follows the
/// order of `paths` and of lines within each file.
pub fn load_raw_corpus(paths: &[&Path], dict: &LabelDictionary) -> Result<IngestReport> {
    let sink = WarningSink::default();
    let per_file: Vec<Vec<ParsedRecord>> = paths
        .par_iter()
        .map(|p| parse_raw_file(p, dict, &sink))
        .collect::<Result<_>>()?;

    let mut report = IngestReport::default();
    for parsed in per_file.into_iter().flatten() {
        for label in parsed.unmapped {
            *report.unmapped.entry(label).or_default() += 1;
        }
        report.objects.push(parsed.object);
    }
    check_unique(&report.objects)?;
    report.warnings = sink.into_inner();
    Ok(report)
}

pub fn write_corpus(objects: &[TraceObject], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for o in objects {
        serde_json::to_writer(&mut w, o)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
