//! Entry-line encoding and the digest chain.
//!
//! A change-set file and a journal entry line share one schema: the compact
//! JSON of the [`ChangeSet`], optionally followed by `prev_digest` and
//! `digest`. Hashing covers the set alone:
//!
//! ```text
//! digest(k) = hex(SHA-256(prev_digest(k) ++ "\n" ++ json(set(k))))
//! prev_digest(0) = hex(SHA-256(bytes of baseline.bpmn))
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::taxonomy::ChangeSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryLine {
    #[serde(flatten)]
    pub set: ChangeSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prev_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Canonical JSON of a change set: compact, fields in declaration order,
/// maps sorted by key.
pub fn canonical_set_json(set: &ChangeSet) -> String {
    serde_json::to_string(set).expect("change sets always serialize")
}

pub fn genesis_digest(baseline_bytes: &[u8]) -> String {
    sha256_hex(baseline_bytes)
}

pub fn entry_digest(prev_digest: &str, set: &ChangeSet) -> String {
    let mut h = Sha256::new();
    h.update(prev_digest.as_bytes());
    h.update(b"\n");
    h.update(canonical_set_json(set).as_bytes());
    hex::encode(h.finalize())
}

/// One line, without the trailing newline.
pub fn encode_line(line: &EntryLine) -> String {
    serde_json::to_string(line).expect("entry lines always serialize")
}

/// A bare change set in entry-line form, as written by `diff`.
pub fn encode_set(set: &ChangeSet) -> String {
    encode_line(&EntryLine { set: set.clone(), prev_digest: None, digest: None })
}

pub fn decode_line(text: &str) -> Result<EntryLine, serde_json::Error> {
    serde_json::from_str(text)
}
