//! Shared configuration file.
//!
//! A JSON object; every key is optional and unknown keys are rejected.
//!
//! ```json
//! {
//!   "paths":   { "corpus": "corpus.jsonl", "index": "corpus.idx",
//!                "geocache": "geocache.json", "dictionary": "labels.json" },
//!   "scoring": { "bm25": { "k1": 1.2, "b": 0.75 },
//!                "field_weights": { "what": 1.0, "who": 1.0, "when": 1.0, "where": 1.0, "how": 1.0 },
//!                "term_weights": { "group": 1.0, "user": 1.0, "user_src": 1.0, "user_time": 1.0,
//!                                  "user_time_src": 1.0, "group_time": 1.0, "location": 1.0,
//!                                  "when": 1.0, "how": 1.0, "what": 1.0 } },
//!   "weights": { "role_weights": { "from": 1.0, "to": 1.0 } },
//!   "entity_resolution": "enabled",
//!   "eval":    { "groups": [1, 2, 3, 4, 5], "seed": 42,
//!                "scorers": ["w5hf", "fieldbm25", "bm25", "tfidf"] }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::WeightConfig;
use crate::resolve::ErMode;
use crate::search::{settings_hash, Scorer, ScoringConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub geocache: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub groups: Vec<u8>,
    pub seed: u64,
    pub scorers: Vec<Scorer>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            groups: vec![1, 2, 3, 4, 5],
            seed: 42,
            scorers: Scorer::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub paths: Paths,
    pub scoring: ScoringConfig,
    pub weights: WeightConfig,
    pub entity_resolution: ErMode,
    pub eval: EvalSettings,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.scoring.bm25;
        if !(b.k1 >= 0.0 && b.k1.is_finite()) || !(0.0..=1.0).contains(&b.b) {
            return Err(Error::Invalid(format!("BM25 parameters k1 = {}, b = {} are out of range", b.k1, b.b)));
        }
        if let Some((r, w)) = self.weights.role_weights.iter().find(|(_, w)| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Invalid(format!("role weight for {r:?} is {w}")));
        }
        if let Some(g) = self.eval.groups.iter().find(|g| !(1..=5).contains(*g)) {
            return Err(Error::Invalid(format!("query group {g} does not exist; groups are 1 to 5")));
        }
        Ok(())
    }

    /// Hash of the settings that shape a stored index.
    pub fn index_hash(&self) -> String {
        settings_hash(&self.weights, &self.scoring.bm25)
    }
}
