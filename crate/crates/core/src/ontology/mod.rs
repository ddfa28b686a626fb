//! Change records as individuals of the change ontology, in N-Triples.
//!
//! [`export_schema`] emits the class hierarchy: one `rdf:type owl:Class`
//! triple per class and one `rdfs:subClassOf` triple per non-root class.
//! [`export_record`] emits one individual per record, typed with the class
//! chosen by [`class_of`], with provenance, time and payload as literals.
//! [`import_records`] reads those triples back into records.
//!
//! ```
//! use bpcm::ontology::{export_schema, to_ntriples, OntClass};
//!
//! let schema = export_schema();
//! assert_eq!(schema.len(), 2 * OntClass::ALL.len() - 3);
//! assert!(to_ntriples(&schema).contains(
//!     "<http://example.org/bpcmont#UserTask_Change> \
//!      <http://www.w3.org/2000/01/rdf-schema#subClassOf> \
//!      <http://example.org/bpcmont#TaskLevel_Change> .\n"
//! ));
//! ```

mod classes;
mod import;

use std::collections::BTreeSet;
use std::fmt;

use crate::journal::{Journal, JournalError};
use crate::taxonomy::{
    ChangeRecord, ConstructChange, FlowChange, GenericOp, JavaServiceTaskModification, TaskOp, UserTaskModification,
};

pub use classes::{class_of, OntClass};
pub use import::{import_records, parse_ntriples, ImportError};

pub const NS: &str = "http://example.org/bpcmont#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
pub const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";

/// Local names of the datatype properties, in the order a record emits them.
pub const PROPERTIES: [&str; 16] = [
    "hasRecordId",
    "hasAgentName",
    "hasCause",
    "hasDescription",
    "hasTimestamp",
    "hasElementId",
    "hasOperation",
    "hasChangedField",
    "hasFieldName",
    "hasOldCallType",
    "hasNewCallType",
    "hasOldValueKind",
    "hasNewValueKind",
    "hasOldValue",
    "hasNewValue",
    "hasSnapshot",
];

pub fn property_iri(local: &str) -> String {
    format!("{NS}{local}")
}

pub fn record_iri(record_id: &str) -> String {
    format!("{NS}record-{record_id}")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Iri(String),
    Literal { value: String, datatype: Option<String> },
}

impl Term {
    pub fn literal(value: impl Into<String>) -> Term {
        Term::Literal { value: value.into(), datatype: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OntologyTriple {
    pub subject: String,
    pub predicate: String,
    pub object: Term,
}

/// One N-Triples statement, without the line break.
impl fmt::Display for OntologyTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> <{}> ", self.subject, self.predicate)?;
        match &self.object {
            Term::Iri(iri) => write!(f, "<{iri}>")?,
            Term::Literal { value, datatype } => {
                f.write_str("\"")?;
                for c in value.chars() {
                    match c {
                        '\\' => f.write_str("\\\\")?,
                        '"' => f.write_str("\\\"")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if let Some(dt) = datatype {
                    write!(f, "^^<{dt}>")?;
                }
            }
        }
        f.write_str(" .")
    }
}

pub fn to_ntriples(triples: &[OntologyTriple]) -> String {
    let mut out = String::new();
    for t in triples {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

/// The class hierarchy, parents before children.
pub fn export_schema() -> Vec<OntologyTriple> {
    let mut out = Vec::with_capacity(2 * OntClass::ALL.len());
    for c in OntClass::ALL {
        out.push(OntologyTriple { subject: c.iri(), predicate: RDF_TYPE.into(), object: Term::Iri(OWL_CLASS.into()) });
        if let Some(p) = c.parent() {
            out.push(OntologyTriple {
                subject: c.iri(),
                predicate: RDFS_SUBCLASS_OF.into(),
                object: Term::Iri(p.iri()),
            });
        }
    }
    out
}

struct Emitter {
    subject: String,
    out: Vec<OntologyTriple>,
}

impl Emitter {
    fn lit(&mut self, prop: &str, value: impl Into<String>) {
        self.out.push(OntologyTriple {
            subject: self.subject.clone(),
            predicate: property_iri(prop),
            object: Term::literal(value),
        });
    }

    fn opt(&mut self, prop: &str, value: &Option<String>) {
        if let Some(v) = value {
            self.lit(prop, v.clone());
        }
    }

    fn old_new(&mut self, old: &Option<String>, new: &Option<String>) {
        self.opt("hasOldValue", old);
        self.opt("hasNewValue", new);
    }

    fn set(&mut self, prop: &str, set: &BTreeSet<String>) {
        if !set.is_empty() {
            self.lit(prop, set.iter().map(String::as_str).collect::<Vec<_>>().join(","));
        }
    }

    fn snapshot<T: serde::Serialize>(&mut self, value: &T) {
        self.lit("hasSnapshot", serde_json::to_string(value).expect("snapshots serialize"));
    }
}

/// The triples of one record. The record is expected to pass
/// [`validate_record`](crate::taxonomy::validate_record).
pub fn export_record(record: &ChangeRecord) -> Vec<OntologyTriple> {
    let subject = record_iri(&record.record_id);
    let mut e = Emitter { subject: subject.clone(), out: Vec::new() };
    e.out.push(OntologyTriple {
        subject,
        predicate: RDF_TYPE.into(),
        object: Term::Iri(class_of(&record.change).iri()),
    });
    e.lit("hasRecordId", record.record_id.clone());
    e.lit("hasAgentName", record.provenance.agent_name.clone());
    e.lit("hasCause", record.provenance.cause.clone());
    e.lit("hasDescription", record.provenance.description.clone());
    e.out.push(OntologyTriple {
        subject: e.subject.clone(),
        predicate: property_iri("hasTimestamp"),
        object: Term::Literal { value: record.timestamp.to_string(), datatype: Some(XSD_DATETIME.into()) },
    });
    e.lit("hasElementId", record.change.element_id().to_string());
    match &record.change {
        ConstructChange::TaskLevelChange(t) => match &t.op {
            TaskOp::Add(node) => {
                e.lit("hasOperation", "add");
                e.snapshot(node);
            }
            TaskOp::Delete(node) => {
                e.lit("hasOperation", "delete");
                e.snapshot(node);
            }
            TaskOp::Rename { old, new } => {
                e.lit("hasOperation", "rename");
                e.lit("hasChangedField", "name");
                e.old_new(old, new);
            }
            TaskOp::ModifyUserTask(m) => {
                e.lit("hasOperation", "modify");
                e.lit("hasChangedField", m.field());
                match m {
                    UserTaskModification::AssigneeChange { old, new }
                    | UserTaskModification::DueDateChange { old, new }
                    | UserTaskModification::DescriptionChange { old, new }
                    | UserTaskModification::FormKeyChange { old, new } => e.old_new(old, new),
                    UserTaskModification::CandidateUsersChange { old, new }
                    | UserTaskModification::CandidateGroupsChange { old, new } => {
                        e.set("hasOldValue", old);
                        e.set("hasNewValue", new);
                    }
                }
            }
            TaskOp::ModifyJavaServiceTask(m) => {
                e.lit("hasOperation", "modify");
                export_java(&mut e, m);
            }
            TaskOp::ModifyGeneric { attribute, old, new } => {
                e.lit("hasOperation", "modify");
                e.lit("hasChangedField", attribute.clone());
                e.old_new(old, new);
            }
        },
        ConstructChange::SequenceFlowChange(f) => match f {
            FlowChange::FlowAdded(flow) => {
                e.lit("hasOperation", "add");
                e.snapshot(flow);
            }
            FlowChange::FlowRemoved(flow) => {
                e.lit("hasOperation", "delete");
                e.snapshot(flow);
            }
            FlowChange::FlowModified { attribute, old, new, .. } => {
                e.lit("hasOperation", "modify");
                e.lit("hasChangedField", attribute.as_str());
                e.old_new(old, new);
            }
        },
        other => match &other.as_generic().expect("generic category").op {
            GenericOp::Added(snap) => {
                e.lit("hasOperation", "add");
                e.snapshot(snap);
            }
            GenericOp::Removed(snap) => {
                e.lit("hasOperation", "delete");
                e.snapshot(snap);
            }
            GenericOp::Modified { attribute, old, new } => {
                e.lit("hasOperation", "modify");
                e.lit("hasChangedField", attribute.clone());
                e.old_new(old, new);
            }
        },
    }
    e.out
}

fn export_java(e: &mut Emitter, m: &JavaServiceTaskModification) {
    match m {
        JavaServiceTaskModification::CallTypeChange { old_call, old_target, new_call, new_target } => {
            e.lit("hasChangedField", "call_type");
            e.lit("hasOldCallType", old_call.as_str());
            e.lit("hasNewCallType", new_call.as_str());
            e.lit("hasOldValue", old_target.clone());
            e.lit("hasNewValue", new_target.clone());
        }
        JavaServiceTaskModification::FieldInjectionAdded(f) => {
            e.lit("hasChangedField", "field_injection_added");
            e.lit("hasFieldName", f.field_name.clone());
            e.lit("hasNewValueKind", f.value_kind.as_str());
            e.lit("hasNewValue", f.value.clone());
        }
        JavaServiceTaskModification::FieldInjectionRemoved(f) => {
            e.lit("hasChangedField", "field_injection_removed");
            e.lit("hasFieldName", f.field_name.clone());
            e.lit("hasOldValueKind", f.value_kind.as_str());
            e.lit("hasOldValue", f.value.clone());
        }
        JavaServiceTaskModification::FieldInjectionModified {
            field_name,
            old_kind,
            old_value,
            new_kind,
            new_value,
        } => {
            e.lit("hasChangedField", "field_injection_modified");
            e.lit("hasFieldName", field_name.clone());
            e.lit("hasOldValueKind", old_kind.as_str());
            e.lit("hasNewValueKind", new_kind.as_str());
            e.lit("hasOldValue", old_value.clone());
            e.lit("hasNewValue", new_value.clone());
        }
        JavaServiceTaskModification::ResultVariableChange { old, new } => {
            e.lit("hasChangedField", "result_variable");
            e.old_new(old, new);
        }
    }
}

/// Schema followed by every record of every entry, as N-Triples text.
///
/// Refuses journals whose history fails the integrity part of
/// [`verify`](crate::journal::verify); unauthorized agents do not block export.
pub fn export_journal(journal: &Journal) -> Result<String, JournalError> {
    if let Some(f) = journal.verify()?.into_iter().find(|f| f.is_integrity()) {
        return Err(JournalError::CorruptJournal(f.to_string()));
    }
    let mut triples = export_schema();
    for entry in journal.entries() {
        for r in &entry.set.records {
            triples.extend(export_record(r));
        }
    }
    Ok(to_ntriples(&triples))
}
