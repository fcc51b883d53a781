//! Versioned, checksummed index files.
//!
//! Layout: one JSON header line, then the JSON body.
//!
//! ```text
//! {"format_version":1,"kind":"freq","corpus_hash":"..","weights_hash":"..","checksum":"<sha256 of body>"}
//! {...body...}
//! ```

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::TraceObject;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexHeader {
    pub format_version: u32,
    pub kind: String,
    pub corpus_hash: String,
    pub weights_hash: String,
    pub checksum: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON Lines rendering of a corpus.
pub fn corpus_hash(corpus: &[TraceObject]) -> String {
    let mut h = Sha256::new();
    for o in corpus {
        h.update(serde_json::to_vec(o).expect("trace objects serialize"));
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

pub fn save<T: Serialize>(
    path: &Path,
    kind: &str,
    corpus_hash: &str,
    weights_hash: &str,
    body: &T,
) -> Result<()> {
    let body = serde_json::to_vec(body)?;
    let header = IndexHeader {
        format_version: FORMAT_VERSION,
        kind: kind.to_string(),
        corpus_hash: corpus_hash.to_string(),
        weights_hash: weights_hash.to_string(),
        checksum: sha256_hex(&body),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.extend_from_slice(&body);
    out.push(b'\n');
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<(IndexHeader, T)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Corrupt("missing header line".into()))?;

    // the version is checked before anything else so old or future files
    // fail with a clear message
    let raw: serde_json::Value =
        serde_json::from_slice(&bytes[..split]).map_err(|e| Error::Corrupt(format!("bad header: {e}")))?;
    let version = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Corrupt("header without format_version".into()))? as u32;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let header: IndexHeader =
        serde_json::from_value(raw).map_err(|e| Error::Corrupt(format!("bad header: {e}")))?;
    if header.kind != kind {
        return Err(Error::Corrupt(format!("expected a {kind:?} file, found {:?}", header.kind)));
    }

    let mut body = &bytes[split + 1..];
    if body.last() == Some(&b'\n') {
        body = &body[..body.len() - 1];
    }
    if sha256_hex(body) != header.checksum {
        return Err(Error::Checksum);
    }
    let value = serde_json::from_slice(body).map_err(|e| Error::Corrupt(e.to_string()))?;
    Ok((header, value))
}

/// Serializes an ordered map with composite keys as a list of entries, since
/// JSON objects only allow string keys.
pub(crate) mod entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(
        map: &BTreeMap<K, V>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}
