//! The closed family of typed change records.
//!
//! Every change is a [`ChangeRecord`]: who made it and why ([`Provenance`]),
//! when ([`Timestamp`]), and a [`ConstructChange`] payload saying which BPMN
//! construct changed and how. Payloads always carry both the old and the new
//! side, so any record can be inverted without looking at a model.
//!
//! ```
//! use bpcm::taxonomy::{classify, ChangeCategory};
//! use bpcm::model::NodeKind;
//!
//! assert_eq!(classify(NodeKind::UserTask), ChangeCategory::TaskLevelChange);
//! assert_eq!(classify(NodeKind::ExclusiveGateway), ChangeCategory::GatewaysChange);
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{
    CallType, FieldInjection, FlowAttribute, FlowNode, GenericDetail, ModelError, NodeDetail, NodeKind, SequenceFlow,
    ValueKind,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub agent_name: String,
    pub cause: String,
    pub description: String,
}

impl Provenance {
    pub fn new(agent_name: impl Into<String>, cause: impl Into<String>, description: impl Into<String>) -> Self {
        Provenance { agent_name: agent_name.into(), cause: cause.into(), description: description.into() }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.agent_name.is_empty() {
            v.push(Violation::EmptyAgentName);
        }
        if self.cause.is_empty() {
            v.push(Violation::EmptyCause);
        }
        v
    }
}

/// A UTC instant with second precision; its text form is RFC 3339 with a `Z`
/// suffix, e.g. `2024-05-01T10:00:00Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(DateTime<Utc>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimestampError {
    #[error("not an RFC 3339 date-time: {0}")]
    Syntax(String),
    #[error("timestamps carry whole seconds only: {0}")]
    SubSecond(String),
}

impl Timestamp {
    pub fn from_datetime(dt: DateTime<Utc>) -> Self {
        Timestamp(dt.with_nanosecond(0).expect("zero nanoseconds is always valid"))
    }

    pub fn from_unix(secs: i64) -> Self {
        Timestamp(DateTime::from_timestamp(secs, 0).expect("timestamp in chrono range"))
    }

    pub fn now() -> Self {
        Timestamp::from_datetime(Utc::now())
    }

    pub fn datetime(&self) -> DateTime<Utc> {
        self.0
    }

    pub fn unix_millis(&self) -> u64 {
        self.0.timestamp_millis().max(0) as u64
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_rfc3339_opts(SecondsFormat::Secs, true))
    }
}

impl FromStr for Timestamp {
    type Err = TimestampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dt = DateTime::parse_from_rfc3339(s).map_err(|_| TimestampError::Syntax(s.to_string()))?;
        if dt.nanosecond() != 0 {
            return Err(TimestampError::SubSecond(s.to_string()));
        }
        Ok(Timestamp(dt.with_timezone(&Utc)))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Version tag `v{k}`; `v0` is a journal's baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VersionTag(pub u64);

impl VersionTag {
    pub const BASELINE: VersionTag = VersionTag(0);

    pub fn next(self) -> VersionTag {
        VersionTag(self.0 + 1)
    }
}

impl fmt::Display for VersionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a version tag: {0:?} (expected v0, v1, ...)")]
pub struct VersionTagError(pub String);

impl FromStr for VersionTag {
    type Err = VersionTagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || VersionTagError(s.to_string());
        let digits = s.strip_prefix('v').ok_or_else(err)?;
        if digits.is_empty()
            || !digits.bytes().all(|b| b.is_ascii_digit())
            || (digits.len() > 1 && digits.starts_with('0'))
        {
            return Err(err());
        }
        digits.parse().map(VersionTag).map_err(|_| err())
    }
}

impl Serialize for VersionTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VersionTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The nine construct-level change categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeCategory {
    DeclarationChange,
    ProcessInitializationChange,
    SequenceFlowChange,
    TaskLevelChange,
    CustomExtensionChange,
    DataObjectChange,
    GatewaysChange,
    TransactionConcurrencyChange,
    EventChange,
}

impl ChangeCategory {
    pub const ALL: [ChangeCategory; 9] = [
        ChangeCategory::DeclarationChange,
        ChangeCategory::ProcessInitializationChange,
        ChangeCategory::SequenceFlowChange,
        ChangeCategory::TaskLevelChange,
        ChangeCategory::CustomExtensionChange,
        ChangeCategory::DataObjectChange,
        ChangeCategory::GatewaysChange,
        ChangeCategory::TransactionConcurrencyChange,
        ChangeCategory::EventChange,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChangeCategory::DeclarationChange => "DeclarationChange",
            ChangeCategory::ProcessInitializationChange => "ProcessInitializationChange",
            ChangeCategory::SequenceFlowChange => "SequenceFlowChange",
            ChangeCategory::TaskLevelChange => "TaskLevelChange",
            ChangeCategory::CustomExtensionChange => "CustomExtensionChange",
            ChangeCategory::DataObjectChange => "DataObjectChange",
            ChangeCategory::GatewaysChange => "GatewaysChange",
            ChangeCategory::TransactionConcurrencyChange => "TransactionConcurrencyChange",
            ChangeCategory::EventChange => "EventChange",
        }
    }

    /// Categories whose generic payload targets a flow node of the model.
    pub fn is_node_category(self) -> bool {
        matches!(self, ChangeCategory::DataObjectChange | ChangeCategory::GatewaysChange | ChangeCategory::EventChange)
    }

    /// Categories that can be recorded and exported but have no model
    /// counterpart to apply to.
    pub fn is_placeholder(self) -> bool {
        matches!(
            self,
            ChangeCategory::ProcessInitializationChange
                | ChangeCategory::CustomExtensionChange
                | ChangeCategory::TransactionConcurrencyChange
        )
    }
}

impl fmt::Display for ChangeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps a node kind to the category its changes are filed under.
pub fn classify(node_kind: NodeKind) -> ChangeCategory {
    match node_kind {
        NodeKind::StartEvent | NodeKind::EndEvent | NodeKind::IntermediateEvent => ChangeCategory::EventChange,
        NodeKind::ExclusiveGateway | NodeKind::ParallelGateway => ChangeCategory::GatewaysChange,
        NodeKind::DataObject => ChangeCategory::DataObjectChange,
        _ => ChangeCategory::TaskLevelChange,
    }
}

/// The eleven task kinds distinguished at the task level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    UserTask,
    JavaServiceTask,
    WebServiceTask,
    ScriptTask,
    EmailTask,
    JavaReceiveTask,
    BusinessRuleTask,
    MuleTask,
    ManualTask,
    ShellTask,
    CamelTask,
}

impl TaskKind {
    pub const ALL: [TaskKind; 11] = [
        TaskKind::UserTask,
        TaskKind::JavaServiceTask,
        TaskKind::WebServiceTask,
        TaskKind::ScriptTask,
        TaskKind::EmailTask,
        TaskKind::JavaReceiveTask,
        TaskKind::BusinessRuleTask,
        TaskKind::MuleTask,
        TaskKind::ManualTask,
        TaskKind::ShellTask,
        TaskKind::CamelTask,
    ];

    pub fn from_node_kind(kind: NodeKind) -> Option<TaskKind> {
        TaskKind::ALL.into_iter().find(|t| NodeKind::from(*t) == kind)
    }

    pub fn as_str(self) -> &'static str {
        NodeKind::from(self).as_str()
    }
}

impl From<TaskKind> for NodeKind {
    fn from(t: TaskKind) -> NodeKind {
        match t {
            TaskKind::UserTask => NodeKind::UserTask,
            TaskKind::JavaServiceTask => NodeKind::JavaServiceTask,
            TaskKind::WebServiceTask => NodeKind::WebServiceTask,
            TaskKind::ScriptTask => NodeKind::ScriptTask,
            TaskKind::EmailTask => NodeKind::EmailTask,
            TaskKind::JavaReceiveTask => NodeKind::JavaReceiveTask,
            TaskKind::BusinessRuleTask => NodeKind::BusinessRuleTask,
            TaskKind::MuleTask => NodeKind::MuleTask,
            TaskKind::ManualTask => NodeKind::ManualTask,
            TaskKind::ShellTask => NodeKind::ShellTask,
            TaskKind::CamelTask => NodeKind::CamelTask,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UserTaskModification {
    AssigneeChange { old: Option<String>, new: Option<String> },
    DueDateChange { old: Option<String>, new: Option<String> },
    DescriptionChange { old: Option<String>, new: Option<String> },
    CandidateUsersChange { old: BTreeSet<String>, new: BTreeSet<String> },
    CandidateGroupsChange { old: BTreeSet<String>, new: BTreeSet<String> },
    FormKeyChange { old: Option<String>, new: Option<String> },
}

impl UserTaskModification {
    pub fn field(&self) -> &'static str {
        match self {
            UserTaskModification::AssigneeChange { .. } => "assignee",
            UserTaskModification::DueDateChange { .. } => "due_date",
            UserTaskModification::DescriptionChange { .. } => "description",
            UserTaskModification::CandidateUsersChange { .. } => "candidate_users",
            UserTaskModification::CandidateGroupsChange { .. } => "candidate_groups",
            UserTaskModification::FormKeyChange { .. } => "form_key",
        }
    }

    pub fn is_noop(&self) -> bool {
        match self {
            UserTaskModification::AssigneeChange { old, new }
            | UserTaskModification::DueDateChange { old, new }
            | UserTaskModification::DescriptionChange { old, new }
            | UserTaskModification::FormKeyChange { old, new } => old == new,
            UserTaskModification::CandidateUsersChange { old, new }
            | UserTaskModification::CandidateGroupsChange { old, new } => old == new,
        }
    }

    pub fn inverse(&self) -> Self {
        use UserTaskModification::*;
        match self.clone() {
            AssigneeChange { old, new } => AssigneeChange { old: new, new: old },
            DueDateChange { old, new } => DueDateChange { old: new, new: old },
            DescriptionChange { old, new } => DescriptionChange { old: new, new: old },
            CandidateUsersChange { old, new } => CandidateUsersChange { old: new, new: old },
            CandidateGroupsChange { old, new } => CandidateGroupsChange { old: new, new: old },
            FormKeyChange { old, new } => FormKeyChange { old: new, new: old },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JavaServiceTaskModification {
    /// Also covers a shifted endpoint: same call type, different target.
    CallTypeChange {
        old_call: CallType,
        old_target: String,
        new_call: CallType,
        new_target: String,
    },
    FieldInjectionAdded(FieldInjection),
    FieldInjectionRemoved(FieldInjection),
    FieldInjectionModified {
        field_name: String,
        old_kind: ValueKind,
        old_value: String,
        new_kind: ValueKind,
        new_value: String,
    },
    ResultVariableChange {
        old: Option<String>,
        new: Option<String>,
    },
}

impl JavaServiceTaskModification {
    pub fn is_noop(&self) -> bool {
        match self {
            JavaServiceTaskModification::CallTypeChange { old_call, old_target, new_call, new_target } => {
                old_call == new_call && old_target == new_target
            }
            JavaServiceTaskModification::FieldInjectionModified {
                old_kind, old_value, new_kind, new_value, ..
            } => old_kind == new_kind && old_value == new_value,
            JavaServiceTaskModification::ResultVariableChange { old, new } => old == new,
            JavaServiceTaskModification::FieldInjectionAdded(_)
            | JavaServiceTaskModification::FieldInjectionRemoved(_) => false,
        }
    }

    pub fn inverse(&self) -> Self {
        use JavaServiceTaskModification::*;
        match self.clone() {
            CallTypeChange { old_call, old_target, new_call, new_target } => CallTypeChange {
                old_call: new_call,
                old_target: new_target,
                new_call: old_call,
                new_target: old_target,
            },
            FieldInjectionAdded(f) => FieldInjectionRemoved(f),
            FieldInjectionRemoved(f) => FieldInjectionAdded(f),
            FieldInjectionModified { field_name, old_kind, old_value, new_kind, new_value } => FieldInjectionModified {
                field_name,
                old_kind: new_kind,
                old_value: new_value,
                new_kind: old_kind,
                new_value: old_value,
            },
            ResultVariableChange { old, new } => ResultVariableChange { old: new, new: old },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskOp {
    Add(FlowNode),
    Delete(FlowNode),
    Rename { old: Option<String>, new: Option<String> },
    ModifyUserTask(UserTaskModification),
    ModifyJavaServiceTask(JavaServiceTaskModification),
    ModifyGeneric { attribute: String, old: Option<String>, new: Option<String> },
}

impl TaskOp {
    pub fn inverse(&self) -> Self {
        match self.clone() {
            TaskOp::Add(n) => TaskOp::Delete(n),
            TaskOp::Delete(n) => TaskOp::Add(n),
            TaskOp::Rename { old, new } => TaskOp::Rename { old: new, new: old },
            TaskOp::ModifyUserTask(m) => TaskOp::ModifyUserTask(m.inverse()),
            TaskOp::ModifyJavaServiceTask(m) => TaskOp::ModifyJavaServiceTask(m.inverse()),
            TaskOp::ModifyGeneric { attribute, old, new } => TaskOp::ModifyGeneric { attribute, old: new, new: old },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskChange {
    pub task_kind: TaskKind,
    pub element_id: String,
    pub op: TaskOp,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowChange {
    FlowAdded(SequenceFlow),
    FlowRemoved(SequenceFlow),
    FlowModified { flow_id: String, attribute: FlowAttribute, old: Option<String>, new: Option<String> },
}

impl FlowChange {
    pub fn flow_id(&self) -> &str {
        match self {
            FlowChange::FlowAdded(f) | FlowChange::FlowRemoved(f) => &f.id,
            FlowChange::FlowModified { flow_id, .. } => flow_id,
        }
    }

    pub fn inverse(&self) -> Self {
        match self.clone() {
            FlowChange::FlowAdded(f) => FlowChange::FlowRemoved(f),
            FlowChange::FlowRemoved(f) => FlowChange::FlowAdded(f),
            FlowChange::FlowModified { flow_id, attribute, old, new } => {
                FlowChange::FlowModified { flow_id, attribute, old: new, new: old }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GenericOp {
    Added(BTreeMap<String, String>),
    Removed(BTreeMap<String, String>),
    Modified { attribute: String, old: Option<String>, new: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenericChange {
    pub element_id: String,
    pub op: GenericOp,
}

impl GenericChange {
    pub fn inverse(&self) -> Self {
        let (element_id, op) = match self.op.clone() {
            GenericOp::Added(a) => (self.element_id.clone(), GenericOp::Removed(a)),
            GenericOp::Removed(a) => (self.element_id.clone(), GenericOp::Added(a)),
            GenericOp::Modified { attribute, old, new } => {
                // Renaming the process moves its identity along with it.
                let element_id = match (&*attribute, &new) {
                    ("id", Some(new_id)) => new_id.clone(),
                    _ => self.element_id.clone(),
                };
                (element_id, GenericOp::Modified { attribute, old: new, new: old })
            }
        };
        GenericChange { element_id, op }
    }
}

/// Key under which a generic node snapshot records the node kind.
pub const SNAPSHOT_KIND_KEY: &str = "#kind";

/// Flattens an event, gateway or data-object node into an attribute snapshot.
///
/// The snapshot holds the node kind under [`SNAPSHOT_KIND_KEY`], the name
/// under `name` (when present) and every generic attribute verbatim.
pub fn node_snapshot(node: &FlowNode) -> BTreeMap<String, String> {
    let mut out = match &node.detail {
        NodeDetail::Generic(g) => g.attributes.clone(),
        _ => BTreeMap::new(),
    };
    out.insert(SNAPSHOT_KIND_KEY.to_string(), node.kind.as_str().to_string());
    if let Some(name) = &node.name {
        out.insert("name".to_string(), name.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnapshotError {
    #[error("snapshot lacks a valid `#kind` entry")]
    MissingKind,
    #[error("snapshot kind {0} has a typed detail payload and cannot travel as attributes")]
    TypedKind(NodeKind),
}

/// Inverse of [`node_snapshot`].
pub fn node_from_snapshot(element_id: &str, snapshot: &BTreeMap<String, String>) -> Result<FlowNode, SnapshotError> {
    let kind =
        snapshot.get(SNAPSHOT_KIND_KEY).and_then(|k| NodeKind::from_name(k)).ok_or(SnapshotError::MissingKind)?;
    if matches!(kind, NodeKind::UserTask | NodeKind::JavaServiceTask) {
        return Err(SnapshotError::TypedKind(kind));
    }
    let mut attributes = snapshot.clone();
    attributes.remove(SNAPSHOT_KIND_KEY);
    let name = attributes.remove("name");
    Ok(FlowNode { id: element_id.to_string(), name, kind, detail: NodeDetail::Generic(GenericDetail { attributes }) })
}

/// One construct-level change, filed under exactly one of the nine categories.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstructChange {
    DeclarationChange(GenericChange),
    ProcessInitializationChange(GenericChange),
    SequenceFlowChange(FlowChange),
    TaskLevelChange(TaskChange),
    CustomExtensionChange(GenericChange),
    DataObjectChange(GenericChange),
    GatewaysChange(GenericChange),
    TransactionConcurrencyChange(GenericChange),
    EventChange(GenericChange),
}

impl ConstructChange {
    pub fn category(&self) -> ChangeCategory {
        match self {
            ConstructChange::DeclarationChange(_) => ChangeCategory::DeclarationChange,
            ConstructChange::ProcessInitializationChange(_) => ChangeCategory::ProcessInitializationChange,
            ConstructChange::SequenceFlowChange(_) => ChangeCategory::SequenceFlowChange,
            ConstructChange::TaskLevelChange(_) => ChangeCategory::TaskLevelChange,
            ConstructChange::CustomExtensionChange(_) => ChangeCategory::CustomExtensionChange,
            ConstructChange::DataObjectChange(_) => ChangeCategory::DataObjectChange,
            ConstructChange::GatewaysChange(_) => ChangeCategory::GatewaysChange,
            ConstructChange::TransactionConcurrencyChange(_) => ChangeCategory::TransactionConcurrencyChange,
            ConstructChange::EventChange(_) => ChangeCategory::EventChange,
        }
    }

    /// Wraps a generic payload in the given category.
    ///
    /// Returns `None` for the two categories with typed payloads.
    pub fn generic(category: ChangeCategory, change: GenericChange) -> Option<ConstructChange> {
        Some(match category {
            ChangeCategory::DeclarationChange => ConstructChange::DeclarationChange(change),
            ChangeCategory::ProcessInitializationChange => ConstructChange::ProcessInitializationChange(change),
            ChangeCategory::CustomExtensionChange => ConstructChange::CustomExtensionChange(change),
            ChangeCategory::DataObjectChange => ConstructChange::DataObjectChange(change),
            ChangeCategory::GatewaysChange => ConstructChange::GatewaysChange(change),
            ChangeCategory::TransactionConcurrencyChange => ConstructChange::TransactionConcurrencyChange(change),
            ChangeCategory::EventChange => ConstructChange::EventChange(change),
            ChangeCategory::SequenceFlowChange | ChangeCategory::TaskLevelChange => return None,
        })
    }

    pub fn as_generic(&self) -> Option<&GenericChange> {
        match self {
            ConstructChange::DeclarationChange(g)
            | ConstructChange::ProcessInitializationChange(g)
            | ConstructChange::CustomExtensionChange(g)
            | ConstructChange::DataObjectChange(g)
            | ConstructChange::GatewaysChange(g)
            | ConstructChange::TransactionConcurrencyChange(g)
            | ConstructChange::EventChange(g) => Some(g),
            ConstructChange::SequenceFlowChange(_) | ConstructChange::TaskLevelChange(_) => None,
        }
    }

    pub fn task_kind(&self) -> Option<TaskKind> {
        match self {
            ConstructChange::TaskLevelChange(t) => Some(t.task_kind),
            _ => None,
        }
    }

    /// Id of the element the change is about.
    pub fn element_id(&self) -> &str {
        match self {
            ConstructChange::SequenceFlowChange(f) => f.flow_id(),
            ConstructChange::TaskLevelChange(t) => &t.element_id,
            other => &other.as_generic().expect("generic category").element_id,
        }
    }

    /// Node ids a flow change connects, on either side of the change.
    pub fn flow_endpoints(&self) -> Vec<&str> {
        let ConstructChange::SequenceFlowChange(f) = self else {
            return Vec::new();
        };
        match f {
            FlowChange::FlowAdded(s) | FlowChange::FlowRemoved(s) => {
                vec![&s.source_ref, &s.target_ref]
            }
            FlowChange::FlowModified {
                attribute: FlowAttribute::SourceRef | FlowAttribute::TargetRef,
                old,
                new,
                ..
            } => old.iter().chain(new.iter()).map(String::as_str).collect(),
            FlowChange::FlowModified { .. } => Vec::new(),
        }
    }

    pub fn inverse(&self) -> ConstructChange {
        match self {
            ConstructChange::SequenceFlowChange(f) => ConstructChange::SequenceFlowChange(f.inverse()),
            ConstructChange::TaskLevelChange(t) => ConstructChange::TaskLevelChange(TaskChange {
                task_kind: t.task_kind,
                element_id: t.element_id.clone(),
                op: t.op.inverse(),
            }),
            other => ConstructChange::generic(other.category(), other.as_generic().expect("generic").inverse())
                .expect("generic category"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub record_id: String,
    pub timestamp: Timestamp,
    pub provenance: Provenance,
    pub change: ConstructChange,
}

/// Ordered records that take one model version to the next.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChangeSet {
    pub set_id: String,
    pub base_version: VersionTag,
    pub result_version: VersionTag,
    pub records: Vec<ChangeRecord>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn changes(&self) -> impl Iterator<Item = &ConstructChange> {
        self.records.iter().map(|r| &r.change)
    }
}

/// A broken record invariant, as reported by [`validate_record`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("record id is empty")]
    EmptyRecordId,
    #[error("provenance agent name is empty")]
    EmptyAgentName,
    #[error("provenance cause is empty")]
    EmptyCause,
    #[error("element id is empty")]
    EmptyElementId,
    #[error("modification has identical old and new values")]
    NoOpModification,
    #[error("payload does not fit its kind: {0}")]
    KindPayloadMismatch(String),
    #[error("snapshot id `{snapshot}` differs from element id `{element}`")]
    SnapshotIdMismatch { element: String, snapshot: String },
    #[error("snapshot is not a valid element: {0}")]
    InvalidSnapshot(String),
    #[error("attribute `{0}` cannot be targeted by this change")]
    InvalidAttribute(String),
    #[error("sequence flow endpoint cannot be absent")]
    MissingFlowEndpoint,
}

impl From<ModelError> for Violation {
    fn from(e: ModelError) -> Self {
        Violation::InvalidSnapshot(e.to_string())
    }
}

/// Every invariant violation in `record`; an empty list means the record is valid.
pub fn validate_record(record: &ChangeRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if record.record_id.is_empty() {
        out.push(Violation::EmptyRecordId);
    }
    out.extend(record.provenance.violations());
    validate_change(&record.change, &mut out);
    out
}

pub(crate) fn validate_change(change: &ConstructChange, out: &mut Vec<Violation>) {
    if change.element_id().is_empty() {
        out.push(Violation::EmptyElementId);
    }
    match change {
        ConstructChange::TaskLevelChange(t) => validate_task(t, out),
        ConstructChange::SequenceFlowChange(f) => match f {
            FlowChange::FlowAdded(s) | FlowChange::FlowRemoved(s) => {
                if let Err(e) = s.validate() {
                    out.push(e.into());
                }
            }
            FlowChange::FlowModified { attribute, old, new, .. } => {
                if old == new {
                    out.push(Violation::NoOpModification);
                }
                if matches!(attribute, FlowAttribute::SourceRef | FlowAttribute::TargetRef)
                    && (old.as_deref().unwrap_or("").is_empty() || new.as_deref().unwrap_or("").is_empty())
                {
                    out.push(Violation::MissingFlowEndpoint);
                }
            }
        },
        generic => {
            let category = generic.category();
            let g = generic.as_generic().expect("generic category");
            match &g.op {
                GenericOp::Added(snap) | GenericOp::Removed(snap) if category.is_node_category() => {
                    match node_from_snapshot(&g.element_id, snap) {
                        Ok(node) => {
                            if classify(node.kind) != category {
                                out.push(Violation::KindPayloadMismatch(format!(
                                    "{} snapshot filed under {category}",
                                    node.kind
                                )));
                            }
                            if let Err(e) = node.validate() {
                                out.push(e.into());
                            }
                        }
                        Err(e) => out.push(Violation::InvalidSnapshot(e.to_string())),
                    }
                }
                GenericOp::Added(_) | GenericOp::Removed(_) => {}
                GenericOp::Modified { attribute, old, new } => {
                    if old == new {
                        out.push(Violation::NoOpModification);
                    }
                    if category == ChangeCategory::DeclarationChange {
                        let bad_id = attribute == "id" && (old.is_none() || new.as_deref().unwrap_or("").is_empty());
                        if (attribute != "id" && attribute != "name") || bad_id {
                            out.push(Violation::InvalidAttribute(attribute.clone()));
                        }
                    } else if category.is_node_category() && attribute == SNAPSHOT_KIND_KEY {
                        out.push(Violation::InvalidAttribute(attribute.clone()));
                    }
                }
            }
        }
    }
}

fn validate_task(t: &TaskChange, out: &mut Vec<Violation>) {
    let kind = NodeKind::from(t.task_kind);
    match &t.op {
        TaskOp::Add(node) | TaskOp::Delete(node) => {
            if node.id != t.element_id {
                out.push(Violation::SnapshotIdMismatch { element: t.element_id.clone(), snapshot: node.id.clone() });
            }
            if node.kind != kind {
                out.push(Violation::KindPayloadMismatch(format!(
                    "{} snapshot under task kind {}",
                    node.kind, t.task_kind
                )));
            }
            if let Err(e) = node.validate() {
                out.push(e.into());
            }
        }
        TaskOp::Rename { old, new } => {
            if old == new {
                out.push(Violation::NoOpModification);
            }
        }
        TaskOp::ModifyUserTask(m) => {
            if t.task_kind != TaskKind::UserTask {
                out.push(Violation::KindPayloadMismatch(format!("user-task modification on {}", t.task_kind)));
            }
            if m.is_noop() {
                out.push(Violation::NoOpModification);
            }
        }
        TaskOp::ModifyJavaServiceTask(m) => {
            if t.task_kind != TaskKind::JavaServiceTask {
                out.push(Violation::KindPayloadMismatch(format!("java-service-task modification on {}", t.task_kind)));
            }
            if m.is_noop() {
                out.push(Violation::NoOpModification);
            }
            match m {
                JavaServiceTaskModification::CallTypeChange { old_target, new_target, .. }
                    if old_target.is_empty() || new_target.is_empty() =>
                {
                    out.push(Violation::InvalidAttribute("target".into()))
                }
                JavaServiceTaskModification::FieldInjectionAdded(f)
                | JavaServiceTaskModification::FieldInjectionRemoved(f)
                    if f.field_name.is_empty() =>
                {
                    out.push(Violation::InvalidAttribute("field_name".into()))
                }
                JavaServiceTaskModification::FieldInjectionModified { field_name, .. } if field_name.is_empty() => {
                    out.push(Violation::InvalidAttribute("field_name".into()))
                }
                _ => {}
            }
        }
        TaskOp::ModifyGeneric { attribute, old, new } => {
            if matches!(t.task_kind, TaskKind::UserTask | TaskKind::JavaServiceTask) {
                out.push(Violation::KindPayloadMismatch(format!("generic modification on {}", t.task_kind)));
            }
            if !crate::model::generic_attribute_allowed(kind, attribute) {
                out.push(Violation::InvalidAttribute(attribute.clone()));
            }
            if old == new {
                out.push(Violation::NoOpModification);
            }
        }
    }
}
