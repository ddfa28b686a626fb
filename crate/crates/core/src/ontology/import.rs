//! Reading exported triples back into change records.

use std::collections::{BTreeMap, BTreeSet};

use rio_api::model::{Literal, Subject, Term as RioTerm};
use rio_api::parser::TriplesParser;
use rio_turtle::{NTriplesParser, TurtleError};
use thiserror::Error;

use crate::model::{CallType, FieldInjection, FlowAttribute, FlowNode, SequenceFlow, ValueKind};
use crate::taxonomy::{
    ChangeCategory, ChangeRecord, ConstructChange, FlowChange, GenericChange, GenericOp, JavaServiceTaskModification,
    Provenance, TaskChange, TaskKind, TaskOp, UserTaskModification,
};

use super::{OntClass, OntologyTriple, Term, NS, RDF_TYPE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImportError {
    #[error("not N-Triples: {0}")]
    Syntax(String),
    #[error("{subject}: missing {property}")]
    Missing { subject: String, property: String },
    #[error("{subject}: {property} given more than once")]
    Duplicate { subject: String, property: String },
    #[error("{subject}: {reason}")]
    Invalid { subject: String, reason: String },
}

/// Parses N-Triples text. Blank nodes and quoted triples are rejected since
/// the exporter never writes them.
pub fn parse_ntriples(text: &str) -> Result<Vec<OntologyTriple>, ImportError> {
    let mut out = Vec::new();
    let mut parser = NTriplesParser::new(text.as_bytes());
    parser
        .parse_all(&mut |t| -> Result<(), TurtleError> {
            let subject = match t.subject {
                Subject::NamedNode(n) => n.iri.to_string(),
                other => return Err(unsupported(&other.to_string())),
            };
            let object = match t.object {
                RioTerm::NamedNode(n) => Term::Iri(n.iri.to_string()),
                RioTerm::Literal(Literal::Simple { value }) => Term::literal(value),
                RioTerm::Literal(Literal::Typed { value, datatype }) => {
                    Term::Literal { value: value.to_string(), datatype: Some(datatype.iri.to_string()) }
                }
                other => return Err(unsupported(&other.to_string())),
            };
            out.push(OntologyTriple { subject, predicate: t.predicate.iri.to_string(), object });
            Ok(())
        })
        .map_err(|e| ImportError::Syntax(e.to_string()))?;
    Ok(out)
}

fn unsupported(what: &str) -> TurtleError {
    TurtleError::from(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("unsupported term {what}")))
}

/// Rebuilds every record individual in `triples`, in order of first
/// appearance. Triples about other subjects (the schema) are skipped.
pub fn import_records(triples: &[OntologyTriple]) -> Result<Vec<ChangeRecord>, ImportError> {
    let prefix = format!("{NS}record-");
    let mut order: Vec<&str> = Vec::new();
    let mut by_subject: BTreeMap<&str, Vec<&OntologyTriple>> = BTreeMap::new();
    for t in triples.iter().filter(|t| t.subject.starts_with(&prefix)) {
        let group = by_subject.entry(&t.subject).or_default();
        if group.is_empty() {
            order.push(&t.subject);
        }
        group.push(t);
    }
    order.into_iter().map(|s| Individual::new(s, &by_subject[s])?.record()).collect()
}

struct Individual<'a> {
    subject: &'a str,
    class: OntClass,
    props: BTreeMap<String, &'a Term>,
}

impl<'a> Individual<'a> {
    fn new(subject: &'a str, triples: &[&'a OntologyTriple]) -> Result<Self, ImportError> {
        let mut class = None;
        let mut props = BTreeMap::new();
        for t in triples {
            if t.predicate == RDF_TYPE {
                let Term::Iri(iri) = &t.object else {
                    return Err(invalid(subject, "rdf:type object is a literal"));
                };
                let c = OntClass::from_iri(iri).ok_or_else(|| invalid(subject, format!("unknown class <{iri}>")))?;
                if class.replace(c).is_some() {
                    return Err(ImportError::Duplicate { subject: subject.into(), property: "rdf:type".into() });
                }
                continue;
            }
            let local = t
                .predicate
                .strip_prefix(NS)
                .ok_or_else(|| invalid(subject, format!("unknown predicate <{}>", t.predicate)))?;
            if props.insert(local.to_string(), &t.object).is_some() {
                return Err(ImportError::Duplicate { subject: subject.into(), property: local.into() });
            }
        }
        let class =
            class.ok_or_else(|| ImportError::Missing { subject: subject.into(), property: "rdf:type".into() })?;
        Ok(Individual { subject, class, props })
    }

    fn opt(&self, prop: &str) -> Result<Option<String>, ImportError> {
        match self.props.get(prop) {
            None => Ok(None),
            Some(Term::Literal { value, .. }) => Ok(Some(value.clone())),
            Some(Term::Iri(_)) => Err(invalid(self.subject, format!("{prop} is not a literal"))),
        }
    }

    fn req(&self, prop: &str) -> Result<String, ImportError> {
        self.opt(prop)?.ok_or_else(|| ImportError::Missing { subject: self.subject.into(), property: prop.into() })
    }

    fn set(&self, prop: &str) -> Result<BTreeSet<String>, ImportError> {
        Ok(self.opt(prop)?.map(|v| v.split(',').map(str::to_string).collect()).unwrap_or_default())
    }

    fn parsed<T>(&self, prop: &str, parse: impl Fn(&str) -> Option<T>) -> Result<T, ImportError> {
        let v = self.req(prop)?;
        parse(&v).ok_or_else(|| invalid(self.subject, format!("{prop} has unknown value {v:?}")))
    }

    fn snapshot<T: serde::de::DeserializeOwned>(&self) -> Result<T, ImportError> {
        serde_json::from_str(&self.req("hasSnapshot")?).map_err(|e| invalid(self.subject, format!("hasSnapshot: {e}")))
    }

    fn record(&self) -> Result<ChangeRecord, ImportError> {
        if let Some(Term::Literal { datatype, .. }) = self.props.get("hasTimestamp") {
            if datatype.as_deref() != Some(super::XSD_DATETIME) {
                return Err(invalid(self.subject, "hasTimestamp is not an xsd:dateTime"));
            }
        }
        let timestamp = self.req("hasTimestamp")?.parse().map_err(|e| invalid(self.subject, format!("{e}")))?;
        let record_id = self.req("hasRecordId")?;
        if self.subject != super::record_iri(&record_id) {
            return Err(invalid(self.subject, "hasRecordId does not match the subject"));
        }
        Ok(ChangeRecord {
            record_id,
            timestamp,
            provenance: Provenance {
                agent_name: self.req("hasAgentName")?,
                cause: self.req("hasCause")?,
                description: self.req("hasDescription")?,
            },
            change: self.change()?,
        })
    }

    fn change(&self) -> Result<ConstructChange, ImportError> {
        let element_id = self.req("hasElementId")?;
        let op = self.req("hasOperation")?;
        let category = self
            .class
            .category()
            .ok_or_else(|| invalid(self.subject, format!("{} is not a change class", self.class.local_name())))?;
        match category {
            ChangeCategory::TaskLevelChange => {
                let task_kind = self
                    .class
                    .task_kind()
                    .ok_or_else(|| invalid(self.subject, "TaskLevel_Change needs a task-kind class"))?;
                Ok(ConstructChange::TaskLevelChange(TaskChange {
                    task_kind,
                    element_id,
                    op: self.task_op(task_kind, &op)?,
                }))
            }
            ChangeCategory::SequenceFlowChange => {
                let change = match op.as_str() {
                    "add" => FlowChange::FlowAdded(self.snapshot::<SequenceFlow>()?),
                    "delete" => FlowChange::FlowRemoved(self.snapshot::<SequenceFlow>()?),
                    "modify" => FlowChange::FlowModified {
                        flow_id: element_id,
                        attribute: self.parsed("hasChangedField", FlowAttribute::from_name)?,
                        old: self.opt("hasOldValue")?,
                        new: self.opt("hasNewValue")?,
                    },
                    other => return Err(self.bad_op(other)),
                };
                Ok(ConstructChange::SequenceFlowChange(change))
            }
            category => {
                let op = match op.as_str() {
                    "add" => GenericOp::Added(self.snapshot()?),
                    "delete" => GenericOp::Removed(self.snapshot()?),
                    "modify" => GenericOp::Modified {
                        attribute: self.req("hasChangedField")?,
                        old: self.opt("hasOldValue")?,
                        new: self.opt("hasNewValue")?,
                    },
                    other => return Err(self.bad_op(other)),
                };
                Ok(ConstructChange::generic(category, GenericChange { element_id, op }).expect("generic category"))
            }
        }
    }

    fn task_op(&self, kind: TaskKind, op: &str) -> Result<TaskOp, ImportError> {
        let old = || self.opt("hasOldValue");
        let new = || self.opt("hasNewValue");
        Ok(match op {
            "add" => TaskOp::Add(self.snapshot::<FlowNode>()?),
            "delete" => TaskOp::Delete(self.snapshot::<FlowNode>()?),
            "rename" => TaskOp::Rename { old: old()?, new: new()? },
            "modify" if self.class == OntClass::ModificationInUserTask => {
                let field = self.req("hasChangedField")?;
                TaskOp::ModifyUserTask(match field.as_str() {
                    "assignee" => UserTaskModification::AssigneeChange { old: old()?, new: new()? },
                    "due_date" => UserTaskModification::DueDateChange { old: old()?, new: new()? },
                    "description" => UserTaskModification::DescriptionChange { old: old()?, new: new()? },
                    "form_key" => UserTaskModification::FormKeyChange { old: old()?, new: new()? },
                    "candidate_users" => UserTaskModification::CandidateUsersChange {
                        old: self.set("hasOldValue")?,
                        new: self.set("hasNewValue")?,
                    },
                    "candidate_groups" => UserTaskModification::CandidateGroupsChange {
                        old: self.set("hasOldValue")?,
                        new: self.set("hasNewValue")?,
                    },
                    other => return Err(invalid(self.subject, format!("unknown user-task field {other:?}"))),
                })
            }
            "modify" if kind == TaskKind::JavaServiceTask => TaskOp::ModifyJavaServiceTask(self.java()?),
            "modify" => TaskOp::ModifyGeneric { attribute: self.req("hasChangedField")?, old: old()?, new: new()? },
            other => return Err(self.bad_op(other)),
        })
    }

    fn java(&self) -> Result<JavaServiceTaskModification, ImportError> {
        let field = self.req("hasChangedField")?;
        let kind = |p| self.parsed(p, ValueKind::from_name);
        Ok(match field.as_str() {
            "call_type" => JavaServiceTaskModification::CallTypeChange {
                old_call: self.parsed("hasOldCallType", CallType::from_name)?,
                old_target: self.req("hasOldValue")?,
                new_call: self.parsed("hasNewCallType", CallType::from_name)?,
                new_target: self.req("hasNewValue")?,
            },
            "field_injection_added" => JavaServiceTaskModification::FieldInjectionAdded(FieldInjection {
                field_name: self.req("hasFieldName")?,
                value_kind: kind("hasNewValueKind")?,
                value: self.req("hasNewValue")?,
            }),
            "field_injection_removed" => JavaServiceTaskModification::FieldInjectionRemoved(FieldInjection {
                field_name: self.req("hasFieldName")?,
                value_kind: kind("hasOldValueKind")?,
                value: self.req("hasOldValue")?,
            }),
            "field_injection_modified" => JavaServiceTaskModification::FieldInjectionModified {
                field_name: self.req("hasFieldName")?,
                old_kind: kind("hasOldValueKind")?,
                old_value: self.req("hasOldValue")?,
                new_kind: kind("hasNewValueKind")?,
                new_value: self.req("hasNewValue")?,
            },
            "result_variable" => JavaServiceTaskModification::ResultVariableChange {
                old: self.opt("hasOldValue")?,
                new: self.opt("hasNewValue")?,
            },
            other => return Err(invalid(self.subject, format!("unknown service-task field {other:?}"))),
        })
    }

    fn bad_op(&self, op: &str) -> ImportError {
        invalid(self.subject, format!("operation {op:?} does not fit {}", self.class.local_name()))
    }
}

fn invalid(subject: &str, reason: impl Into<String>) -> ImportError {
    ImportError::Invalid { subject: subject.into(), reason: reason.into() }
}
