//! Append-only, hash-chained store of change sets.
//!
//! A journal lives in one directory:
//!
//! | file            | contents                                                  |
//! |-----------------|-----------------------------------------------------------|
//! | `baseline.bpmn` | canonical XML of version `v0`                             |
//! | `acl.txt`       | authorized agent names, one per line, sorted              |
//! | `entries.jsonl` | one change set per line, each carrying its chain digests  |
//! | `head.bpmn`     | cache: canonical XML of the head version                  |
//! | `head.digest`   | cache: `<tag> <last entry digest> <sha256 of head.bpmn>`  |
//! | `.lock`         | advisory lock taken by writers                            |
//!
//! Entry `k` (zero based) takes `v{k}` to `v{k+1}`. Nothing is ever rewritten
//! in place: a commit replaces `entries.jsonl` with its old bytes plus one
//! line, via a temp file and a rename. Reverting commits the inverse sets as a
//! new entry.
//!
//! Unauthorized agents are not rejected at commit time. [`verify`] reports
//! them afterwards, along with any break in the version chain or the digest
//! chain.

mod digest;
mod store;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bpmn::{parse_bpmn, serialize_bpmn};
use crate::clock::Clock;
use crate::ids::derive_id;
use crate::model::{ModelError, ProcessModel};
use crate::patch::{apply, invert_with, replay, ApplyError};
use crate::taxonomy::{
    validate_record, ChangeCategory, ChangeSet, Provenance, TaskKind, Timestamp, VersionTag, Violation,
};

pub use digest::{
    canonical_set_json, decode_line, encode_line, encode_set, entry_digest, genesis_digest, sha256_hex, EntryLine,
};
pub use store::{ACL_FILE, BASELINE_FILE, ENTRIES_FILE, HEAD_DIGEST_FILE, HEAD_FILE, LOCK_FILE};

use store::{write_atomic, DirLock};

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0} already holds a journal")]
    AlreadyExists(PathBuf),
    #[error("invalid agent name {0:?}")]
    InvalidAgent(String),
    #[error("invalid baseline: {0}")]
    InvalidBaseline(ModelError),
    #[error("corrupt journal: {0}")]
    CorruptJournal(String),
    #[error("version mismatch: journal head is {expected}, change set starts at {found}")]
    VersionMismatch { expected: VersionTag, found: VersionTag },
    #[error("unknown version {0}")]
    UnknownVersion(VersionTag),
    #[error("nothing to revert: {0} is the head")]
    NothingToRevert(VersionTag),
    #[error("change set has no records")]
    EmptySet,
    #[error("record {record_id} is invalid: {}", join_violations(.violations))]
    InvalidRecord { record_id: String, violations: Vec<Violation> },
    #[error("record {record_id} at {at} predates the journal's last entry at {last}")]
    TimestampRegression { record_id: String, at: Timestamp, last: Timestamp },
    #[error(transparent)]
    Conflict(#[from] ApplyError),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> JournalError + '_ {
    move |source| JournalError::Io { path: path.to_path_buf(), source }
}

/// A committed change set with its place in the digest chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub set: ChangeSet,
    pub prev_digest: String,
    pub digest: String,
}

/// Something `verify` found wrong. Findings are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    UnauthorizedAgent {
        version: VersionTag,
        record_id: String,
        agent_name: String,
    },
    /// Version tags, timestamps or `prev_digest` links out of order. `line` is 1-based.
    ChainBroken {
        line: usize,
        reason: String,
    },
    /// A stored digest disagrees with the recomputed one. `line` is `None` for the head cache.
    ReplayMismatch {
        line: Option<usize>,
        reason: String,
    },
    ReplayFailed {
        version: VersionTag,
        reason: String,
    },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::UnauthorizedAgent { version, record_id, agent_name } => {
                write!(f, "UnauthorizedAgent {version} record={record_id} agent={agent_name}")
            }
            Finding::ChainBroken { line, reason } => write!(f, "ChainBroken line={line} {reason}"),
            Finding::ReplayMismatch { line: Some(line), reason } => write!(f, "ReplayMismatch line={line} {reason}"),
            Finding::ReplayMismatch { line: None, reason } => {
                write!(f, "ReplayMismatch head-cache {reason}")
            }
            Finding::ReplayFailed { version, reason } => {
                write!(f, "ReplayFailed {version} {reason}")
            }
        }
    }
}

impl Finding {
    /// True for findings that mean the stored history cannot be trusted.
    pub fn is_integrity(&self) -> bool {
        !matches!(self, Finding::UnauthorizedAgent { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitRole {
    /// The record changes the element itself.
    Subject,
    /// The record adds, removes or rewires a flow attached to the element.
    Endpoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHit {
    pub version: VersionTag,
    pub record_id: String,
    pub category: ChangeCategory,
    pub task_kind: Option<TaskKind>,
    pub role: HitRole,
    pub provenance: Provenance,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceResult {
    pub element_id: String,
    pub hits: Vec<TraceHit>,
}

impl TraceResult {
    /// Distinct versions that touched the element, ascending.
    pub fn versions(&self) -> Vec<VersionTag> {
        let mut v: Vec<_> = self.hits.iter().map(|h| h.version).collect();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRow {
    pub version: VersionTag,
    pub set_id: String,
    pub provenance: Provenance,
    pub timestamp: Timestamp,
    pub record_count: usize,
}

#[derive(Debug, Clone)]
pub struct Journal {
    dir: PathBuf,
    baseline: ProcessModel,
    genesis: String,
    acl: BTreeSet<String>,
    entries: Vec<Entry>,
    entries_bytes: Vec<u8>,
    head: ProcessModel,
}

impl Journal {
    /// Creates a journal in `dir` (created if missing) with `baseline` as `v0`.
    pub fn init<I, S>(dir: impl AsRef<Path>, baseline: &ProcessModel, acl: I) -> Result<Journal, JournalError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let dir = dir.as_ref();
        baseline.validate().map_err(JournalError::InvalidBaseline)?;
        let acl: BTreeSet<String> = acl.into_iter().map(Into::into).collect();
        if let Some(bad) = acl.iter().find(|a| a.is_empty() || a.trim() != *a || a.contains('\n')) {
            return Err(JournalError::InvalidAgent(bad.clone()));
        }
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let _lock = DirLock::acquire(dir).map_err(io_err(dir))?;
        if dir.join(BASELINE_FILE).exists() {
            return Err(JournalError::AlreadyExists(dir.to_path_buf()));
        }
        let acl_text: String = acl.iter().map(|a| format!("{a}\n")).collect();
        write_file(&dir.join(ACL_FILE), acl_text.as_bytes())?;
        write_file(&dir.join(ENTRIES_FILE), b"")?;
        let xml = serialize_bpmn(baseline);
        write_file(&dir.join(BASELINE_FILE), xml.as_bytes())?;
        let journal = Journal {
            dir: dir.to_path_buf(),
            baseline: baseline.clone().canonicalized(),
            genesis: genesis_digest(xml.as_bytes()),
            acl,
            entries: Vec::new(),
            entries_bytes: Vec::new(),
            head: baseline.clone().canonicalized(),
        };
        journal.write_head_cache()?;
        Ok(journal)
    }

    /// Loads the journal in `dir`.
    ///
    /// The head comes from the cache when the cache matches the last entry,
    /// and from replay otherwise. Digests are not checked here; see [`verify`].
    pub fn open(dir: impl AsRef<Path>) -> Result<Journal, JournalError> {
        let dir = dir.as_ref();
        let baseline_bytes = read_file(&dir.join(BASELINE_FILE))?;
        let baseline = parse_stored_model(&baseline_bytes, BASELINE_FILE)?;
        let acl = read_acl(dir)?;
        let entries_bytes = read_file(&dir.join(ENTRIES_FILE))?;
        let mut entries = Vec::new();
        for (i, raw) in split_lines(&entries_bytes).into_iter().enumerate() {
            let text = std::str::from_utf8(raw)
                .map_err(|_| JournalError::CorruptJournal(format!("line {} is not UTF-8", i + 1)))?;
            let line = decode_line(text).map_err(|e| JournalError::CorruptJournal(format!("line {}: {e}", i + 1)))?;
            let (Some(prev_digest), Some(digest)) = (line.prev_digest, line.digest) else {
                return Err(JournalError::CorruptJournal(format!("line {} has no digests", i + 1)));
            };
            let k = i as u64;
            if line.set.base_version != VersionTag(k) || line.set.result_version != VersionTag(k + 1) {
                return Err(JournalError::CorruptJournal(format!(
                    "line {} holds {} -> {}, expected v{k} -> v{}",
                    i + 1,
                    line.set.base_version,
                    line.set.result_version,
                    k + 1
                )));
            }
            entries.push(Entry { set: line.set, prev_digest, digest });
        }
        let mut journal = Journal {
            dir: dir.to_path_buf(),
            genesis: genesis_digest(&baseline_bytes),
            head: baseline.clone(),
            baseline,
            acl,
            entries,
            entries_bytes,
        };
        journal.head = match journal.cached_head() {
            Some(head) => head,
            None => journal.replay_to(journal.entries.len())?,
        };
        Ok(journal)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn baseline(&self) -> &ProcessModel {
        &self.baseline
    }

    pub fn acl(&self) -> &BTreeSet<String> {
        &self.acl
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn head(&self) -> &ProcessModel {
        &self.head
    }

    pub fn head_version(&self) -> VersionTag {
        VersionTag(self.entries.len() as u64)
    }

    fn last_digest(&self) -> &str {
        self.entries.last().map_or(&self.genesis, |e| &e.digest)
    }

    fn last_timestamp(&self) -> Option<Timestamp> {
        self.entries.iter().flat_map(|e| &e.set.records).map(|r| r.timestamp).max()
    }

    fn check_tag(&self, tag: VersionTag) -> Result<usize, JournalError> {
        if tag > self.head_version() {
            return Err(JournalError::UnknownVersion(tag));
        }
        Ok(tag.0 as usize)
    }

    fn replay_to(&self, k: usize) -> Result<ProcessModel, JournalError> {
        replay(self.entries[..k].iter().map(|e| &e.set), &self.baseline)
            .map_err(|e| JournalError::CorruptJournal(e.to_string()))
    }

    /// The model at `tag`. The head is served from memory; older versions are replayed.
    pub fn version(&self, tag: VersionTag) -> Result<ProcessModel, JournalError> {
        let k = self.check_tag(tag)?;
        if k == self.entries.len() {
            return Ok(self.head.clone());
        }
        self.replay_to(k)
    }

    /// The model at `tag`, always replayed from the baseline.
    pub fn version_uncached(&self, tag: VersionTag) -> Result<ProcessModel, JournalError> {
        let k = self.check_tag(tag)?;
        self.replay_to(k)
    }

    /// Appends `set` as the next version and returns its tag.
    ///
    /// The journal is reloaded from disk under the directory lock first, so a
    /// stale handle cannot overwrite another writer's entry.
    pub fn commit(&mut self, mut set: ChangeSet) -> Result<VersionTag, JournalError> {
        let _lock = DirLock::acquire(&self.dir).map_err(io_err(&self.dir))?;
        *self = Journal::open(&self.dir)?;
        let head_tag = self.head_version();
        if set.base_version != head_tag {
            return Err(JournalError::VersionMismatch { expected: head_tag, found: set.base_version });
        }
        if set.is_empty() {
            return Err(JournalError::EmptySet);
        }
        let mut last = self.last_timestamp();
        for r in &set.records {
            let violations = validate_record(r);
            if !violations.is_empty() {
                return Err(JournalError::InvalidRecord { record_id: r.record_id.clone(), violations });
            }
            if let Some(prev) = last.filter(|prev| r.timestamp < *prev) {
                return Err(JournalError::TimestampRegression {
                    record_id: r.record_id.clone(),
                    at: r.timestamp,
                    last: prev,
                });
            }
            last = Some(r.timestamp);
        }
        let new_head = apply(&set, &self.head)?;
        set.result_version = head_tag.next();
        let prev_digest = self.last_digest().to_string();
        let digest = entry_digest(&prev_digest, &set);
        let line = encode_line(&EntryLine {
            set: set.clone(),
            prev_digest: Some(prev_digest.clone()),
            digest: Some(digest.clone()),
        });
        let mut bytes = self.entries_bytes.clone();
        bytes.extend_from_slice(line.as_bytes());
        bytes.push(b'\n');
        write_file(&self.dir.join(ENTRIES_FILE), &bytes)?;
        self.entries_bytes = bytes;
        self.entries.push(Entry { set, prev_digest, digest });
        self.head = new_head;
        self.write_head_cache()?;
        Ok(self.head_version())
    }

    /// Commits one compensating set that takes the head back to `tag`.
    pub fn revert_to(
        &mut self,
        tag: VersionTag,
        provenance: &Provenance,
        clock: &dyn Clock,
    ) -> Result<VersionTag, JournalError> {
        let k = self.check_tag(tag)?;
        if k == self.entries.len() {
            return Err(JournalError::NothingToRevert(tag));
        }
        let at = clock.now();
        let head = self.head_version();
        let set_id = derive_id(
            at,
            &[b"revert", tag.to_string().as_bytes(), head.to_string().as_bytes(), self.last_digest().as_bytes()],
        );
        let records =
            self.entries[k..].iter().rev().flat_map(|e| invert_with(&e.set, provenance, at).records).collect();
        self.commit(ChangeSet { set_id, base_version: head, result_version: head.next(), records })
    }

    /// Every record that references `element_id`, oldest first.
    pub fn trace(&self, element_id: &str) -> TraceResult {
        let mut hits = Vec::new();
        for entry in &self.entries {
            for r in &entry.set.records {
                let role = if r.change.element_id() == element_id {
                    HitRole::Subject
                } else if r.change.flow_endpoints().contains(&element_id) {
                    HitRole::Endpoint
                } else {
                    continue;
                };
                hits.push(TraceHit {
                    version: entry.set.result_version,
                    record_id: r.record_id.clone(),
                    category: r.change.category(),
                    task_kind: r.change.task_kind(),
                    role,
                    provenance: r.provenance.clone(),
                    timestamp: r.timestamp,
                });
            }
        }
        TraceResult { element_id: element_id.to_string(), hits }
    }

    /// One row per entry, oldest first; provenance and time come from the first record.
    pub fn log(&self) -> Vec<LogRow> {
        self.entries
            .iter()
            .filter_map(|e| {
                let first = e.set.records.first()?;
                Some(LogRow {
                    version: e.set.result_version,
                    set_id: e.set.set_id.clone(),
                    provenance: first.provenance.clone(),
                    timestamp: first.timestamp,
                    record_count: e.set.records.len(),
                })
            })
            .collect()
    }

    /// Audits the journal's directory; see [`verify`].
    pub fn verify(&self) -> Result<Vec<Finding>, JournalError> {
        verify(&self.dir)
    }

    fn cached_head(&self) -> Option<ProcessModel> {
        let stamp = fs::read_to_string(self.dir.join(HEAD_DIGEST_FILE)).ok()?;
        let xml = fs::read(self.dir.join(HEAD_FILE)).ok()?;
        let (tag, chain, model_digest) = parse_head_stamp(&stamp)?;
        if tag != self.head_version() || chain != self.last_digest() || model_digest != sha256_hex(&xml) {
            return None;
        }
        parse_bpmn(std::str::from_utf8(&xml).ok()?).ok()
    }

    fn write_head_cache(&self) -> Result<(), JournalError> {
        let xml = serialize_bpmn(&self.head);
        write_file(&self.dir.join(HEAD_FILE), xml.as_bytes())?;
        let stamp = format!("{} {} {}\n", self.head_version(), self.last_digest(), sha256_hex(xml.as_bytes()));
        write_file(&self.dir.join(HEAD_DIGEST_FILE), stamp.as_bytes())
    }
}

fn parse_head_stamp(text: &str) -> Option<(VersionTag, &str, &str)> {
    let mut parts = text.trim_end_matches('\n').split(' ');
    let tag = parts.next()?.parse().ok()?;
    let chain = parts.next()?;
    let model = parts.next()?;
    parts.next().is_none().then_some((tag, chain, model))
}

fn read_file(path: &Path) -> Result<Vec<u8>, JournalError> {
    fs::read(path).map_err(io_err(path))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), JournalError> {
    write_atomic(path, bytes).map_err(io_err(path))
}

fn read_acl(dir: &Path) -> Result<BTreeSet<String>, JournalError> {
    let path = dir.join(ACL_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

fn parse_stored_model(bytes: &[u8], name: &str) -> Result<ProcessModel, JournalError> {
    let text = std::str::from_utf8(bytes).map_err(|_| JournalError::CorruptJournal(format!("{name} is not UTF-8")))?;
    parse_bpmn(text).map_err(|e| JournalError::CorruptJournal(format!("{name}: {e}")))
}

/// Splits newline-terminated lines. A trailing fragment without its newline
/// is returned as a line of its own.
fn split_lines(bytes: &[u8]) -> Vec<&[u8]> {
    let mut lines: Vec<&[u8]> = bytes.split(|b| *b == b'\n').collect();
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
}

/// Audits the journal in `dir` without trusting any cache.
///
/// Reads the raw entry lines and reports, per line: bytes that are not the
/// canonical encoding of what they decode to, a stored digest that differs
/// from the recomputed one, a `prev_digest` that does not match the preceding
/// line, out-of-sequence version tags or timestamps, and agents outside the
/// ACL. If every line decodes, the sets are replayed and the head cache, when
/// present, is checked against the result.
///
/// Errors only when the baseline, ACL or entries file cannot be read.
pub fn verify(dir: impl AsRef<Path>) -> Result<Vec<Finding>, JournalError> {
    let dir = dir.as_ref();
    let baseline_bytes = read_file(&dir.join(BASELINE_FILE))?;
    let acl = read_acl(dir)?;
    let entries_bytes = read_file(&dir.join(ENTRIES_FILE))?;
    let mut findings = Vec::new();
    let mut sets = Vec::new();
    let mut all_decoded = true;
    let mut expected_prev = Some(genesis_digest(&baseline_bytes));
    let mut last_ts: Option<Timestamp> = None;
    let raw_lines = split_lines(&entries_bytes);
    if !entries_bytes.is_empty() && !entries_bytes.ends_with(b"\n") {
        findings.push(Finding::ReplayMismatch {
            line: Some(raw_lines.len()),
            reason: "line is not newline-terminated".into(),
        });
    }
    for (i, raw) in raw_lines.into_iter().enumerate() {
        let line_no = i + 1;
        let mismatch = |reason: String| Finding::ReplayMismatch { line: Some(line_no), reason };
        let decoded = match std::str::from_utf8(raw) {
            Err(_) => Err("line is not UTF-8".to_string()),
            Ok(text) => decode_line(text).map_err(|e| format!("line does not decode: {e}")).and_then(|line| {
                if encode_line(&line).as_bytes() == raw {
                    Ok(line)
                } else {
                    Err("line is not in canonical form".to_string())
                }
            }),
        };
        let line = match decoded {
            Ok(line) => line,
            Err(reason) => {
                findings.push(mismatch(reason));
                all_decoded = false;
                expected_prev = None;
                continue;
            }
        };
        match (&line.prev_digest, &line.digest) {
            (Some(prev), Some(stored)) => {
                let recomputed = entry_digest(prev, &line.set);
                if &recomputed != stored {
                    findings.push(mismatch(format!("stored digest {stored}, recomputed {recomputed}")));
                }
                if expected_prev.as_ref().is_some_and(|e| e != prev) {
                    findings.push(Finding::ChainBroken {
                        line: line_no,
                        reason: "prev_digest does not match the preceding entry".into(),
                    });
                }
                expected_prev = Some(stored.clone());
            }
            _ => {
                findings.push(mismatch("digests missing".into()));
                expected_prev = None;
            }
        }
        let k = i as u64;
        if line.set.base_version != VersionTag(k) || line.set.result_version != VersionTag(k + 1) {
            findings.push(Finding::ChainBroken {
                line: line_no,
                reason: format!(
                    "holds {} -> {}, expected v{k} -> v{}",
                    line.set.base_version,
                    line.set.result_version,
                    k + 1
                ),
            });
        }
        for r in &line.set.records {
            if let Some(prev) = last_ts.filter(|prev| r.timestamp < *prev) {
                findings.push(Finding::ChainBroken {
                    line: line_no,
                    reason: format!("record {} at {} precedes {prev}", r.record_id, r.timestamp),
                });
            }
            last_ts = Some(last_ts.map_or(r.timestamp, |p| p.max(r.timestamp)));
            if !acl.contains(&r.provenance.agent_name) {
                findings.push(Finding::UnauthorizedAgent {
                    version: line.set.result_version,
                    record_id: r.record_id.clone(),
                    agent_name: r.provenance.agent_name.clone(),
                });
            }
        }
        sets.push(line);
    }
    if !all_decoded {
        return Ok(findings);
    }
    let baseline = match parse_stored_model(&baseline_bytes, BASELINE_FILE) {
        Ok(m) => m,
        Err(e) => {
            findings.push(Finding::ReplayFailed { version: VersionTag::BASELINE, reason: e.to_string() });
            return Ok(findings);
        }
    };
    let mut head = baseline;
    for line in &sets {
        match apply(&line.set, &head) {
            Ok(next) => head = next,
            Err(e) => {
                findings.push(Finding::ReplayFailed { version: line.set.result_version, reason: e.to_string() });
                return Ok(findings);
            }
        }
    }
    if let Ok(stamp) = fs::read_to_string(dir.join(HEAD_DIGEST_FILE)) {
        let tag = VersionTag(sets.len() as u64);
        let chain = sets.last().and_then(|l| l.digest.clone()).unwrap_or_else(|| genesis_digest(&baseline_bytes));
        let replayed = sha256_hex(serialize_bpmn(&head).as_bytes());
        let cached = fs::read(dir.join(HEAD_FILE)).map(|b| sha256_hex(&b)).ok();
        let reason = match parse_head_stamp(&stamp) {
            None => Some("head.digest does not parse".to_string()),
            Some((t, _, _)) if t != tag => Some(format!("cache is at {t}, journal at {tag}")),
            Some((_, c, _)) if c != chain => Some("cache was built from a different chain".to_string()),
            Some((_, _, m)) if m != replayed => Some("cached head differs from replay".to_string()),
            Some(_) if cached.as_deref() != Some(replayed.as_str()) => {
                Some("head.bpmn differs from replay".to_string())
            }
            Some(_) => None,
        };
        if let Some(reason) = reason {
            findings.push(Finding::ReplayMismatch { line: None, reason });
        }
    }
    Ok(findings)
}
