//! Capture, store and replay changes to BPMN 2.0 process models.
//!
//! The crate turns the difference between two versions of a process into a
//! list of typed change records, applies and inverts those records as patches,
//! keeps them in an append-only journal with provenance, and exports them as
//! N-Triples individuals of a change ontology.
//!
//! ```
//! use bpcm::{diff, apply, invert, model_equals, DiffRequest, Provenance};
//! use bpcm::fixtures::{create_quote, user_task_mut};
//!
//! let before = create_quote();
//! let mut after = before.clone();
//! user_task_mut(&mut after, "ut1").assignee = Some("bob".into());
//!
//! let set = diff(&DiffRequest::new(&before, &after, Provenance::new("alice", "reassign", ""))).unwrap();
//! assert_eq!(set.records.len(), 1);
//!
//! let patched = apply(&set, &before).unwrap();
//! assert!(model_equals(&patched, &after));
//! assert!(model_equals(&apply(&invert(&set), &patched).unwrap(), &before));
//! ```

#[cfg(doctest)]
mod book;
pub mod bpmn;
pub mod clock;
pub mod diff;
pub mod fixtures;
pub mod ids;
pub mod journal;
pub mod model;
pub mod ontology;
pub mod patch;
pub mod synth;
pub mod taxonomy;

pub use bpmn::{parse_bpmn, serialize_bpmn, ParseError};
pub use clock::{Clock, FixedClock, SystemClock};
pub use diff::{diff, field_diff_service_task, field_diff_user_task, DiffError, DiffRequest};
pub use journal::{Finding, Journal, JournalError, TraceResult};
pub use model::{model_equals, ProcessModel};
pub use patch::{apply, invert, invert_with, replay, ApplyError, ReplayError};
pub use taxonomy::{
    classify, validate_record, ChangeCategory, ChangeRecord, ChangeSet, ConstructChange, Provenance, Timestamp,
    VersionTag,
};
