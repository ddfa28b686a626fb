//! In-memory form of the supported BPMN 2.0 subset.
//!
//! A [`ProcessModel`] holds one process: its flow nodes keyed by id and its
//! sequence flows keyed by id. Element identity is always the XML `id`; nothing
//! in this crate matches elements by name or position.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every node kind the parser understands.
///
/// The eleven task kinds are the ones the change taxonomy distinguishes at the
/// task level; the remaining variants cover events, gateways and data objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    StartEvent,
    EndEvent,
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
    ExclusiveGateway,
    ParallelGateway,
    IntermediateEvent,
    DataObject,
}

impl NodeKind {
    pub const ALL: [NodeKind; 17] = [
        NodeKind::StartEvent,
        NodeKind::EndEvent,
        NodeKind::UserTask,
        NodeKind::JavaServiceTask,
        NodeKind::WebServiceTask,
        NodeKind::ScriptTask,
        NodeKind::EmailTask,
        NodeKind::JavaReceiveTask,
        NodeKind::BusinessRuleTask,
        NodeKind::MuleTask,
        NodeKind::ManualTask,
        NodeKind::ShellTask,
        NodeKind::CamelTask,
        NodeKind::ExclusiveGateway,
        NodeKind::ParallelGateway,
        NodeKind::IntermediateEvent,
        NodeKind::DataObject,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::StartEvent => "StartEvent",
            NodeKind::EndEvent => "EndEvent",
            NodeKind::UserTask => "UserTask",
            NodeKind::JavaServiceTask => "JavaServiceTask",
            NodeKind::WebServiceTask => "WebServiceTask",
            NodeKind::ScriptTask => "ScriptTask",
            NodeKind::EmailTask => "EmailTask",
            NodeKind::JavaReceiveTask => "JavaReceiveTask",
            NodeKind::BusinessRuleTask => "BusinessRuleTask",
            NodeKind::MuleTask => "MuleTask",
            NodeKind::ManualTask => "ManualTask",
            NodeKind::ShellTask => "ShellTask",
            NodeKind::CamelTask => "CamelTask",
            NodeKind::ExclusiveGateway => "ExclusiveGateway",
            NodeKind::ParallelGateway => "ParallelGateway",
            NodeKind::IntermediateEvent => "IntermediateEvent",
            NodeKind::DataObject => "DataObject",
        }
    }

    pub fn from_name(s: &str) -> Option<NodeKind> {
        NodeKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_task(self) -> bool {
        !matches!(
            self,
            NodeKind::StartEvent
                | NodeKind::EndEvent
                | NodeKind::IntermediateEvent
                | NodeKind::ExclusiveGateway
                | NodeKind::ParallelGateway
                | NodeKind::DataObject
        )
    }

    /// Kinds serialized as `<serviceTask>` with an `activiti:type` discriminator.
    pub(crate) fn activiti_type(self) -> Option<&'static str> {
        match self {
            NodeKind::EmailTask => Some("mail"),
            NodeKind::MuleTask => Some("mule"),
            NodeKind::ShellTask => Some("shell"),
            NodeKind::CamelTask => Some("camel"),
            _ => None,
        }
    }

    pub(crate) fn is_service_task_element(self) -> bool {
        matches!(self, NodeKind::JavaServiceTask | NodeKind::WebServiceTask) || self.activiti_type().is_some()
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a Java service task reaches its implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CallType {
    JavaClass,
    DelegateExpression,
    Expression,
}

impl CallType {
    pub const ALL: [CallType; 3] = [CallType::JavaClass, CallType::DelegateExpression, CallType::Expression];

    pub fn as_str(self) -> &'static str {
        match self {
            CallType::JavaClass => "JavaClass",
            CallType::DelegateExpression => "DelegateExpression",
            CallType::Expression => "Expression",
        }
    }

    pub fn from_name(s: &str) -> Option<CallType> {
        CallType::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for CallType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ValueKind {
    StringValue,
    ExpressionValue,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::StringValue => "StringValue",
            ValueKind::ExpressionValue => "ExpressionValue",
        }
    }

    pub fn from_name(s: &str) -> Option<ValueKind> {
        match s {
            "StringValue" => Some(ValueKind::StringValue),
            "ExpressionValue" => Some(ValueKind::ExpressionValue),
            _ => None,
        }
    }
}

/// A named value injected into a field of the service implementation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FieldInjection {
    pub field_name: String,
    pub value_kind: ValueKind,
    pub value: String,
}

impl FieldInjection {
    pub fn string(field_name: impl Into<String>, value: impl Into<String>) -> Self {
        FieldInjection { field_name: field_name.into(), value_kind: ValueKind::StringValue, value: value.into() }
    }

    pub fn expression(field_name: impl Into<String>, value: impl Into<String>) -> Self {
        FieldInjection { field_name: field_name.into(), value_kind: ValueKind::ExpressionValue, value: value.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UserTaskDetail {
    pub assignee: Option<String>,
    pub candidate_users: BTreeSet<String>,
    pub candidate_groups: BTreeSet<String>,
    pub due_date: Option<String>,
    /// Text of the `documentation` child, kept verbatim.
    pub description: Option<String>,
    pub form_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JavaServiceTaskDetail {
    pub call_type: CallType,
    pub target: String,
    /// Kept sorted by field name once a model is canonical.
    pub field_injections: Vec<FieldInjection>,
    pub result_variable: Option<String>,
}

impl JavaServiceTaskDetail {
    pub fn new(call_type: CallType, target: impl Into<String>) -> Self {
        JavaServiceTaskDetail { call_type, target: target.into(), field_injections: Vec::new(), result_variable: None }
    }

    pub fn injection(&self, field_name: &str) -> Option<&FieldInjection> {
        self.field_injections.iter().find(|f| f.field_name == field_name)
    }
}

/// Attribute bag for node kinds whose internals are not modelled field by field.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenericDetail {
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeDetail {
    UserTask(UserTaskDetail),
    JavaServiceTask(JavaServiceTaskDetail),
    Generic(GenericDetail),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlowNode {
    pub id: String,
    pub name: Option<String>,
    pub kind: NodeKind,
    pub detail: NodeDetail,
}

impl FlowNode {
    /// A node of `kind` with an empty detail payload of the matching variant.
    ///
    /// Java service tasks need a target, so they start as a `JavaClass` call with
    /// an empty target and must be filled in before the model validates.
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        let detail = match kind {
            NodeKind::UserTask => NodeDetail::UserTask(UserTaskDetail::default()),
            NodeKind::JavaServiceTask => {
                NodeDetail::JavaServiceTask(JavaServiceTaskDetail::new(CallType::JavaClass, ""))
            }
            _ => NodeDetail::Generic(GenericDetail::default()),
        };
        FlowNode { id: id.into(), name: None, kind, detail }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_detail(mut self, detail: NodeDetail) -> Self {
        self.detail = detail;
        self
    }

    pub fn user_task(&self) -> Option<&UserTaskDetail> {
        match &self.detail {
            NodeDetail::UserTask(d) => Some(d),
            _ => None,
        }
    }

    pub fn java_service_task(&self) -> Option<&JavaServiceTaskDetail> {
        match &self.detail {
            NodeDetail::JavaServiceTask(d) => Some(d),
            _ => None,
        }
    }

    pub fn generic(&self) -> Option<&GenericDetail> {
        match &self.detail {
            NodeDetail::Generic(d) => Some(d),
            _ => None,
        }
    }

    fn detail_matches_kind(&self) -> bool {
        match (&self.detail, self.kind) {
            (NodeDetail::UserTask(_), NodeKind::UserTask) => true,
            (NodeDetail::JavaServiceTask(_), NodeKind::JavaServiceTask) => true,
            (NodeDetail::Generic(_), k) => !matches!(k, NodeKind::UserTask | NodeKind::JavaServiceTask),
            _ => false,
        }
    }

    fn canonicalize(&mut self) {
        if let NodeDetail::JavaServiceTask(d) = &mut self.detail {
            d.field_injections.sort_by(|a, b| a.field_name.cmp(&b.field_name));
        }
    }

    /// Checks every node-local invariant.
    pub fn validate(&self) -> Result<(), ModelError> {
        check_text(&self.id, &self.id)?;
        if self.id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        if let Some(name) = &self.name {
            check_text(&self.id, name)?;
        }
        if !self.detail_matches_kind() {
            return Err(ModelError::DetailMismatch { id: self.id.clone(), kind: self.kind });
        }
        match &self.detail {
            NodeDetail::UserTask(d) => {
                for v in [&d.assignee, &d.due_date, &d.description, &d.form_key].into_iter().flatten() {
                    check_text(&self.id, v)?;
                }
                for c in d.candidate_users.iter().chain(&d.candidate_groups) {
                    if c.is_empty() || c.contains(',') || c.trim() != c {
                        return Err(ModelError::InvalidCandidate { id: self.id.clone(), value: c.clone() });
                    }
                    check_text(&self.id, c)?;
                }
            }
            NodeDetail::JavaServiceTask(d) => {
                if d.target.is_empty() {
                    return Err(ModelError::EmptyTarget { id: self.id.clone() });
                }
                check_text(&self.id, &d.target)?;
                if let Some(v) = &d.result_variable {
                    check_text(&self.id, v)?;
                }
                let mut seen = BTreeSet::new();
                for f in &d.field_injections {
                    if f.field_name.is_empty() {
                        return Err(ModelError::EmptyFieldName { id: self.id.clone() });
                    }
                    if !seen.insert(f.field_name.as_str()) {
                        return Err(ModelError::DuplicateField { id: self.id.clone(), field: f.field_name.clone() });
                    }
                    check_text(&self.id, &f.field_name)?;
                    check_text(&self.id, &f.value)?;
                }
            }
            NodeDetail::Generic(d) => {
                for (k, v) in &d.attributes {
                    if !generic_attribute_allowed(self.kind, k) {
                        return Err(ModelError::InvalidAttribute { id: self.id.clone(), attribute: k.clone() });
                    }
                    check_text(&self.id, v)?;
                }
            }
        }
        Ok(())
    }
}

/// Keys a generic attribute bag may hold for `kind`.
///
/// Plain or `activiti:`-prefixed XML names are allowed, minus those the
/// serializer owns. `documentation` and (for script tasks) `script` name the
/// text of the corresponding child element.
pub fn generic_attribute_allowed(kind: NodeKind, key: &str) -> bool {
    const RESERVED: &[&str] = &["id", "name", "isExecutable"];
    const SERVICE_RESERVED: &[&str] = &[
        "activiti:type",
        "activiti:class",
        "activiti:delegateExpression",
        "activiti:expression",
        "activiti:resultVariableName",
        "activiti:resultVariable",
    ];
    if key == "documentation" {
        return true;
    }
    if key == "script" {
        return kind == NodeKind::ScriptTask;
    }
    if RESERVED.contains(&key) || key.starts_with("xmlns") {
        return false;
    }
    if kind.is_service_task_element() && SERVICE_RESERVED.contains(&key) {
        return false;
    }
    let local = key.strip_prefix("activiti:").unwrap_or(key);
    is_xml_name(local)
}

pub(crate) fn is_xml_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn check_text(id: &str, s: &str) -> Result<(), ModelError> {
    let ok =
        s.chars().all(|c| matches!(c, '\t' | '\n' | '\r') || (c >= '\u{20}' && c != '\u{FFFE}' && c != '\u{FFFF}'));
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidChar { id: id.to_string() })
    }
}

/// The attributes a sequence flow carries that a change record can target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowAttribute {
    Name,
    SourceRef,
    TargetRef,
    ConditionExpression,
}

impl FlowAttribute {
    /// Fixed field order used when a single flow has several differences.
    pub const ORDER: [FlowAttribute; 4] =
        [FlowAttribute::Name, FlowAttribute::SourceRef, FlowAttribute::TargetRef, FlowAttribute::ConditionExpression];

    pub fn as_str(self) -> &'static str {
        match self {
            FlowAttribute::Name => "name",
            FlowAttribute::SourceRef => "source_ref",
            FlowAttribute::TargetRef => "target_ref",
            FlowAttribute::ConditionExpression => "condition_expression",
        }
    }

    pub fn from_name(s: &str) -> Option<FlowAttribute> {
        FlowAttribute::ORDER.into_iter().find(|a| a.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SequenceFlow {
    pub id: String,
    pub name: Option<String>,
    pub source_ref: String,
    pub target_ref: String,
    pub condition_expression: Option<String>,
}

impl SequenceFlow {
    pub fn new(id: impl Into<String>, source_ref: impl Into<String>, target_ref: impl Into<String>) -> Self {
        SequenceFlow {
            id: id.into(),
            name: None,
            source_ref: source_ref.into(),
            target_ref: target_ref.into(),
            condition_expression: None,
        }
    }

    pub fn get(&self, attribute: FlowAttribute) -> Option<&str> {
        match attribute {
            FlowAttribute::Name => self.name.as_deref(),
            FlowAttribute::SourceRef => Some(&self.source_ref),
            FlowAttribute::TargetRef => Some(&self.target_ref),
            FlowAttribute::ConditionExpression => self.condition_expression.as_deref(),
        }
    }

    pub(crate) fn set(&mut self, attribute: FlowAttribute, value: Option<String>) {
        match attribute {
            FlowAttribute::Name => self.name = value,
            FlowAttribute::SourceRef => self.source_ref = value.unwrap_or_default(),
            FlowAttribute::TargetRef => self.target_ref = value.unwrap_or_default(),
            FlowAttribute::ConditionExpression => self.condition_expression = value,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        if self.source_ref.is_empty() || self.target_ref.is_empty() {
            return Err(ModelError::EmptyFlowEndpoint { flow_id: self.id.clone() });
        }
        for s in [Some(&self.id), self.name.as_ref(), Some(&self.source_ref), Some(&self.target_ref)]
            .into_iter()
            .flatten()
            .chain(self.condition_expression.as_ref())
        {
            check_text(&self.id, s)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("empty element id")]
    EmptyId,
    #[error("map key `{key}` does not match element id `{id}`")]
    KeyMismatch { key: String, id: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("sequence flow `{flow_id}` references missing node `{node_id}`")]
    DanglingFlowRef { flow_id: String, node_id: String },
    #[error("sequence flow `{flow_id}` has an empty endpoint")]
    EmptyFlowEndpoint { flow_id: String },
    #[error("node `{id}` carries a detail payload that does not match kind {kind}")]
    DetailMismatch { id: String, kind: NodeKind },
    #[error("node `{id}` has invalid candidate entry {value:?}")]
    InvalidCandidate { id: String, value: String },
    #[error("java service task `{id}` has an empty target")]
    EmptyTarget { id: String },
    #[error("java service task `{id}` has a field injection with an empty name")]
    EmptyFieldName { id: String },
    #[error("java service task `{id}` injects field `{field}` twice")]
    DuplicateField { id: String, field: String },
    #[error("node `{id}` has disallowed attribute `{attribute}`")]
    InvalidAttribute { id: String, attribute: String },
    #[error("element `{id}` contains a character that XML 1.0 cannot carry")]
    InvalidChar { id: String },
}

/// One BPMN process in canonical in-memory form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcessModel {
    pub process_id: String,
    pub process_name: Option<String>,
    pub nodes: BTreeMap<String, FlowNode>,
    pub flows: BTreeMap<String, SequenceFlow>,
}

impl ProcessModel {
    pub fn new(process_id: impl Into<String>) -> Self {
        ProcessModel {
            process_id: process_id.into(),
            process_name: None,
            nodes: BTreeMap::new(),
            flows: BTreeMap::new(),
        }
    }

    pub fn with_node(mut self, node: FlowNode) -> Self {
        self.insert_node(node);
        self
    }

    pub fn with_flow(mut self, flow: SequenceFlow) -> Self {
        self.insert_flow(flow);
        self
    }

    pub fn insert_node(&mut self, mut node: FlowNode) {
        node.canonicalize();
        self.nodes.insert(node.id.clone(), node);
    }

    pub fn insert_flow(&mut self, flow: SequenceFlow) {
        self.flows.insert(flow.id.clone(), flow);
    }

    pub fn node(&self, id: &str) -> Option<&FlowNode> {
        self.nodes.get(id)
    }

    pub fn flow(&self, id: &str) -> Option<&SequenceFlow> {
        self.flows.get(id)
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.nodes.contains_key(id) || self.flows.contains_key(id)
    }

    /// Flows whose source or target is `node_id`.
    pub fn flows_touching<'a>(&'a self, node_id: &'a str) -> impl Iterator<Item = &'a SequenceFlow> + 'a {
        self.flows.values().filter(move |f| f.source_ref == node_id || f.target_ref == node_id)
    }

    /// Sorts order-insensitive collections so that structural equality
    /// coincides with [`model_equals`].
    pub fn canonicalize(&mut self) {
        for node in self.nodes.values_mut() {
            node.canonicalize();
        }
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.process_id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        check_text(&self.process_id, &self.process_id)?;
        if let Some(name) = &self.process_name {
            check_text(&self.process_id, name)?;
        }
        for (key, node) in &self.nodes {
            if key != &node.id {
                return Err(ModelError::KeyMismatch { key: key.clone(), id: node.id.clone() });
            }
            node.validate()?;
        }
        for (key, flow) in &self.flows {
            if key != &flow.id {
                return Err(ModelError::KeyMismatch { key: key.clone(), id: flow.id.clone() });
            }
            flow.validate()?;
            if self.nodes.contains_key(key) || key == &self.process_id {
                return Err(ModelError::DuplicateId(key.clone()));
            }
            for end in [&flow.source_ref, &flow.target_ref] {
                if !self.nodes.contains_key(end) {
                    return Err(ModelError::DanglingFlowRef { flow_id: flow.id.clone(), node_id: end.clone() });
                }
            }
        }
        if self.nodes.contains_key(&self.process_id) {
            return Err(ModelError::DuplicateId(self.process_id.clone()));
        }
        Ok(())
    }
}

/// Field-by-field equality after canonical normalization.
///
/// Sets and maps compare as sets and maps, field injections compare by field
/// name regardless of list order, and text is compared verbatim.
pub fn model_equals(a: &ProcessModel, b: &ProcessModel) -> bool {
    if a.process_id != b.process_id
        || a.process_name != b.process_name
        || a.flows != b.flows
        || a.nodes.len() != b.nodes.len()
    {
        return false;
    }
    a.nodes.iter().zip(&b.nodes).all(|((ka, na), (kb, nb))| ka == kb && node_equals(na, nb))
}

pub(crate) fn node_equals(a: &FlowNode, b: &FlowNode) -> bool {
    if a.kind == NodeKind::JavaServiceTask && b.kind == NodeKind::JavaServiceTask {
        let mut ca = a.clone();
        let mut cb = b.clone();
        ca.canonicalize();
        cb.canonicalize();
        ca == cb
    } else {
        a == b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quote() -> ProcessModel {
        crate::fixtures::create_quote()
    }

    #[test]
    fn fixture_is_valid() {
        quote().validate().unwrap();
    }

    #[test]
    fn equals_is_reflexive_and_sensitive_to_assignee() {
        let a = quote();
        assert!(model_equals(&a, &a));
        let mut b = a.clone();
        if let NodeDetail::UserTask(d) = &mut b.nodes.get_mut("ut1").unwrap().detail {
            d.assignee = Some("bob".into());
        }
        assert!(!model_equals(&a, &b));
    }

    #[test]
    fn injection_order_is_irrelevant_for_equality() {
        let mut a = quote();
        let st = a.nodes.get_mut("st1").unwrap();
        if let NodeDetail::JavaServiceTask(d) = &mut st.detail {
            d.field_injections = vec![FieldInjection::string("b", "1"), FieldInjection::string("a", "2")];
        }
        let b = a.clone().canonicalized();
        assert_ne!(a, b);
        assert!(model_equals(&a, &b));
    }

    #[test]
    fn dangling_flow_is_rejected() {
        let m = quote().with_flow(SequenceFlow::new("f9", "ut1", "ghost"));
        assert_eq!(m.validate(), Err(ModelError::DanglingFlowRef { flow_id: "f9".into(), node_id: "ghost".into() }));
    }

    #[test]
    fn node_and_flow_ids_share_one_namespace() {
        let m = quote().with_flow(SequenceFlow::new("ut1", "start1", "end1"));
        assert_eq!(m.validate(), Err(ModelError::DuplicateId("ut1".into())));
    }

    #[test]
    fn detail_must_match_kind() {
        let mut n = FlowNode::new("x", NodeKind::ScriptTask);
        n.detail = NodeDetail::UserTask(UserTaskDetail::default());
        assert!(matches!(n.validate(), Err(ModelError::DetailMismatch { .. })));
    }

    #[test]
    fn java_target_must_be_non_empty() {
        let n = FlowNode::new("x", NodeKind::JavaServiceTask);
        assert_eq!(n.validate(), Err(ModelError::EmptyTarget { id: "x".into() }));
    }

    #[test]
    fn candidates_reject_commas_and_blanks() {
        for bad in ["", "a,b", " a"] {
            let mut d = UserTaskDetail::default();
            d.candidate_users.insert(bad.to_string());
            let n = FlowNode::new("u", NodeKind::UserTask).with_detail(NodeDetail::UserTask(d));
            assert!(matches!(n.validate(), Err(ModelError::InvalidCandidate { .. })), "{bad:?}");
        }
    }

    #[test]
    fn generic_keys_respect_reserved_names() {
        assert!(generic_attribute_allowed(NodeKind::ScriptTask, "script"));
        assert!(!generic_attribute_allowed(NodeKind::ManualTask, "script"));
        assert!(!generic_attribute_allowed(NodeKind::WebServiceTask, "activiti:class"));
        assert!(generic_attribute_allowed(NodeKind::ExclusiveGateway, "default"));
        assert!(generic_attribute_allowed(NodeKind::WebServiceTask, "implementation"));
        assert!(!generic_attribute_allowed(NodeKind::WebServiceTask, "name"));
        assert!(!generic_attribute_allowed(NodeKind::DataObject, "bad key"));
    }

    #[test]
    fn control_characters_are_rejected() {
        let n = FlowNode::new("x", NodeKind::ManualTask).named("a\u{1}b");
        assert_eq!(n.validate(), Err(ModelError::InvalidChar { id: "x".into() }));
    }
}
