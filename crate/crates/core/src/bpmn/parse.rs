use std::collections::BTreeSet;

use roxmltree::{Document, Node};
use thiserror::Error;

use super::{ACTIVITI_NS, BPMNDI_NS, BPMN_NS, XSI_NS};
use crate::model::{
    generic_attribute_allowed, CallType, FieldInjection, FlowNode, GenericDetail, JavaServiceTaskDetail, ModelError,
    NodeDetail, NodeKind, ProcessModel, SequenceFlow, UserTaskDetail, ValueKind,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("unsupported construct(s): {}", .0.join(", "))]
    UnsupportedConstruct(Vec<String>),
    #[error("sequence flow `{0}` references a node that does not exist")]
    DanglingFlowRef(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("`{element}` is missing required attribute `{attribute}`")]
    MissingAttribute { element: String, attribute: String },
    #[error("element `{element}`: {reason}")]
    InvalidValue { element: String, reason: String },
    #[error("document must contain exactly one process, found {0}")]
    ProcessCount(usize),
    #[error("invalid model: {0}")]
    InvalidModel(ModelError),
}

/// Parses a BPMN document holding exactly one process.
///
/// Parsing is strict: every element or attribute outside the supported subset
/// is collected and reported in a single [`ParseError::UnsupportedConstruct`].
/// Diagram-interchange content at the document root is skipped.
pub fn parse_bpmn(xml_text: &str) -> Result<ProcessModel, ParseError> {
    let doc = Document::parse(xml_text).map_err(|e| ParseError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    let mut cx = Cx::default();
    if !is_bpmn(root, "definitions") {
        return Err(ParseError::UnsupportedConstruct(vec![qualified(root)]));
    }
    let mut processes = Vec::new();
    for child in root.children().filter(Node::is_element) {
        if is_bpmn(child, "process") {
            processes.push(child);
        } else if child.tag_name().namespace() == Some(BPMNDI_NS) {
            continue;
        } else {
            cx.unsupported(qualified(child));
        }
    }
    if processes.len() != 1 {
        cx.finish()?;
        return Err(ParseError::ProcessCount(processes.len()));
    }
    let model = cx.process(processes[0])?;
    cx.finish()?;
    model.validate().map_err(|e| match e {
        ModelError::DanglingFlowRef { flow_id, .. } => ParseError::DanglingFlowRef(flow_id),
        ModelError::DuplicateId(id) => ParseError::DuplicateId(id),
        other => ParseError::InvalidModel(other),
    })?;
    Ok(model)
}

#[derive(Default)]
struct Cx {
    unsupported: Vec<String>,
}

impl Cx {
    fn unsupported(&mut self, what: String) {
        if !self.unsupported.contains(&what) {
            self.unsupported.push(what);
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if self.unsupported.is_empty() {
            Ok(())
        } else {
            Err(ParseError::UnsupportedConstruct(std::mem::take(&mut self.unsupported)))
        }
    }

    fn process(&mut self, el: Node) -> Result<ProcessModel, ParseError> {
        let mut model = ProcessModel::new(required(el, "id")?);
        let mut seen = BTreeSet::from([model.process_id.clone()]);
        for attr in el.attributes() {
            match (attr.namespace(), attr.name()) {
                (None, "id") | (None, "isExecutable") => {}
                (None, "name") => model.process_name = Some(attr.value().to_string()),
                _ => self.unsupported(format!("process/@{}", attr_key(&attr))),
            }
        }
        for child in el.children().filter(Node::is_element) {
            if child.tag_name().namespace() != Some(BPMN_NS) {
                self.unsupported(qualified(child));
                continue;
            }
            let tag = child.tag_name().name();
            if tag == "sequenceFlow" {
                let flow = self.sequence_flow(child)?;
                if !seen.insert(flow.id.clone()) {
                    return Err(ParseError::DuplicateId(flow.id));
                }
                model.flows.insert(flow.id.clone(), flow);
                continue;
            }
            let Some(node) = self.flow_node(child)? else {
                continue;
            };
            if !seen.insert(node.id.clone()) {
                return Err(ParseError::DuplicateId(node.id));
            }
            model.insert_node(node);
        }
        Ok(model)
    }

    fn flow_node(&mut self, el: Node) -> Result<Option<FlowNode>, ParseError> {
        let tag = el.tag_name().name();
        let kind = match tag {
            "startEvent" => NodeKind::StartEvent,
            "endEvent" => NodeKind::EndEvent,
            "intermediateThrowEvent" => NodeKind::IntermediateEvent,
            "userTask" => NodeKind::UserTask,
            "serviceTask" => match self.service_kind(el)? {
                Some(kind) => kind,
                None => return Ok(None),
            },
            "scriptTask" => NodeKind::ScriptTask,
            "receiveTask" => NodeKind::JavaReceiveTask,
            "businessRuleTask" => NodeKind::BusinessRuleTask,
            "manualTask" => NodeKind::ManualTask,
            "exclusiveGateway" => NodeKind::ExclusiveGateway,
            "parallelGateway" => NodeKind::ParallelGateway,
            "dataObject" => NodeKind::DataObject,
            _ => {
                self.unsupported(tag.to_string());
                return Ok(None);
            }
        };
        let id = required(el, "id")?;
        let name = el.attribute("name").map(str::to_string);
        let detail = match kind {
            NodeKind::UserTask => NodeDetail::UserTask(self.user_task(el, &id)?),
            NodeKind::JavaServiceTask => NodeDetail::JavaServiceTask(self.java_service_task(el, &id)?),
            _ => NodeDetail::Generic(self.generic(el, kind)?),
        };
        Ok(Some(FlowNode { id, name, kind, detail }))
    }

    fn service_kind(&mut self, el: Node) -> Result<Option<NodeKind>, ParseError> {
        if let Some(t) = el.attribute((ACTIVITI_NS, "type")) {
            let kind = NodeKind::ALL.into_iter().find(|k| k.activiti_type() == Some(t));
            if kind.is_none() {
                self.unsupported(format!("serviceTask[activiti:type={t}]"));
            }
            return Ok(kind);
        }
        let java =
            ["class", "delegateExpression", "expression"].iter().any(|a| el.attribute((ACTIVITI_NS, *a)).is_some());
        Ok(Some(if java { NodeKind::JavaServiceTask } else { NodeKind::WebServiceTask }))
    }

    fn user_task(&mut self, el: Node, id: &str) -> Result<UserTaskDetail, ParseError> {
        let mut d = UserTaskDetail::default();
        for attr in el.attributes() {
            let value = attr.value().to_string();
            match (attr.namespace(), attr.name()) {
                (None, "id") | (None, "name") => {}
                (Some(ACTIVITI_NS), "assignee") => d.assignee = Some(value),
                (Some(ACTIVITI_NS), "candidateUsers") => d.candidate_users = candidates(id, "candidateUsers", &value)?,
                (Some(ACTIVITI_NS), "candidateGroups") => {
                    d.candidate_groups = candidates(id, "candidateGroups", &value)?
                }
                (Some(ACTIVITI_NS), "dueDate") => d.due_date = Some(value),
                (Some(ACTIVITI_NS), "formKey") => d.form_key = Some(value),
                _ => self.unsupported(format!("userTask/@{}", attr_key(&attr))),
            }
        }
        for child in el.children().filter(Node::is_element) {
            if is_bpmn(child, "documentation") && d.description.is_none() {
                d.description = Some(self.text_of(child));
            } else {
                self.unsupported(format!("userTask/{}", qualified(child)));
            }
        }
        Ok(d)
    }

    fn java_service_task(&mut self, el: Node, id: &str) -> Result<JavaServiceTaskDetail, ParseError> {
        let mut call: Option<(CallType, String)> = None;
        let mut result_variable = None;
        for attr in el.attributes() {
            let value = attr.value().to_string();
            let call_type = match (attr.namespace(), attr.name()) {
                (None, "id") | (None, "name") => continue,
                (Some(ACTIVITI_NS), "class") => CallType::JavaClass,
                (Some(ACTIVITI_NS), "delegateExpression") => CallType::DelegateExpression,
                (Some(ACTIVITI_NS), "expression") => CallType::Expression,
                (Some(ACTIVITI_NS), "resultVariableName") | (Some(ACTIVITI_NS), "resultVariable") => {
                    if result_variable.replace(value).is_some() {
                        return Err(invalid(id, "result variable given twice"));
                    }
                    continue;
                }
                _ => {
                    self.unsupported(format!("serviceTask/@{}", attr_key(&attr)));
                    continue;
                }
            };
            if call.replace((call_type, value)).is_some() {
                return Err(invalid(id, "more than one of class, delegateExpression, expression"));
            }
        }
        let (call_type, target) = call.expect("java kind implies a call attribute");
        let mut detail = JavaServiceTaskDetail { call_type, target, field_injections: Vec::new(), result_variable };
        for child in el.children().filter(Node::is_element) {
            if !is_bpmn(child, "extensionElements") {
                self.unsupported(format!("serviceTask/{}", qualified(child)));
                continue;
            }
            for ext in child.children().filter(Node::is_element) {
                if ext.tag_name().namespace() == Some(ACTIVITI_NS) && ext.tag_name().name() == "field" {
                    if let Some(f) = self.field(ext, id)? {
                        detail.field_injections.push(f);
                    }
                } else {
                    self.unsupported(format!("extensionElements/{}", qualified(ext)));
                }
            }
        }
        Ok(detail)
    }

    fn field(&mut self, el: Node, id: &str) -> Result<Option<FieldInjection>, ParseError> {
        let field_name = el
            .attribute("name")
            .ok_or_else(|| ParseError::MissingAttribute {
                element: format!("{id}/activiti:field"),
                attribute: "name".into(),
            })?
            .to_string();
        let mut value: Option<(ValueKind, String)> = None;
        let mut set = |v: (ValueKind, String)| {
            if value.replace(v).is_some() {
                Err(invalid(id, &format!("field `{field_name}` has more than one value")))
            } else {
                Ok(())
            }
        };
        let mut extra = Vec::new();
        for attr in el.attributes() {
            match (attr.namespace(), attr.name()) {
                (None, "name") => {}
                (None, "stringValue") => set((ValueKind::StringValue, attr.value().to_string()))?,
                (None, "expression") => set((ValueKind::ExpressionValue, attr.value().to_string()))?,
                _ => extra.push(format!("activiti:field/@{}", attr_key(&attr))),
            }
        }
        for child in el.children().filter(Node::is_element) {
            match (child.tag_name().namespace(), child.tag_name().name()) {
                (Some(ACTIVITI_NS), "string") => set((ValueKind::StringValue, text_content(child)))?,
                (Some(ACTIVITI_NS), "expression") => set((ValueKind::ExpressionValue, text_content(child)))?,
                _ => extra.push(format!("activiti:field/{}", qualified(child))),
            }
        }
        for e in extra {
            self.unsupported(e);
        }
        let Some((value_kind, value)) = value else {
            return Err(invalid(id, &format!("field `{field_name}` has no value")));
        };
        Ok(Some(FieldInjection { field_name, value_kind, value }))
    }

    fn generic(&mut self, el: Node, kind: NodeKind) -> Result<GenericDetail, ParseError> {
        let tag = el.tag_name().name();
        let mut d = GenericDetail::default();
        for attr in el.attributes() {
            let key = match attr.namespace() {
                None => attr.name().to_string(),
                Some(ACTIVITI_NS) => format!("activiti:{}", attr.name()),
                Some(_) => {
                    self.unsupported(format!("{tag}/@{}", attr_key(&attr)));
                    continue;
                }
            };
            if key == "id" || key == "name" || (key == "activiti:type" && kind.activiti_type().is_some()) {
                continue;
            }
            if key == "documentation" || key == "script" || !generic_attribute_allowed(kind, &key) {
                self.unsupported(format!("{tag}/@{key}"));
                continue;
            }
            d.attributes.insert(key, attr.value().to_string());
        }
        for child in el.children().filter(Node::is_element) {
            let key = if is_bpmn(child, "documentation") {
                "documentation"
            } else if kind == NodeKind::ScriptTask && is_bpmn(child, "script") {
                "script"
            } else {
                self.unsupported(format!("{tag}/{}", qualified(child)));
                continue;
            };
            if d.attributes.contains_key(key) {
                self.unsupported(format!("{tag}/{key}"));
                continue;
            }
            let text = self.text_of(child);
            d.attributes.insert(key.to_string(), text);
        }
        Ok(d)
    }

    fn sequence_flow(&mut self, el: Node) -> Result<SequenceFlow, ParseError> {
        let id = required(el, "id")?;
        let mut flow = SequenceFlow::new(id, required(el, "sourceRef")?, required(el, "targetRef")?);
        for attr in el.attributes() {
            match (attr.namespace(), attr.name()) {
                (None, "id") | (None, "sourceRef") | (None, "targetRef") => {}
                (None, "name") => flow.name = Some(attr.value().to_string()),
                _ => self.unsupported(format!("sequenceFlow/@{}", attr_key(&attr))),
            }
        }
        for child in el.children().filter(Node::is_element) {
            if is_bpmn(child, "conditionExpression") && flow.condition_expression.is_none() {
                for attr in child.attributes() {
                    if !(attr.namespace() == Some(XSI_NS) && attr.name() == "type") {
                        self.unsupported(format!("conditionExpression/@{}", attr_key(&attr)));
                    }
                }
                flow.condition_expression = Some(self.text_of(child));
            } else {
                self.unsupported(format!("sequenceFlow/{}", qualified(child)));
            }
        }
        Ok(flow)
    }

    /// Text content of a leaf element; nested elements are unsupported.
    fn text_of(&mut self, el: Node) -> String {
        for child in el.children().filter(Node::is_element) {
            self.unsupported(format!("{}/{}", el.tag_name().name(), qualified(child)));
        }
        text_content(el)
    }
}

fn text_content(el: Node) -> String {
    el.children().filter(Node::is_text).filter_map(|n| n.text()).collect()
}

fn is_bpmn(el: Node, local: &str) -> bool {
    el.tag_name().namespace() == Some(BPMN_NS) && el.tag_name().name() == local
}

fn qualified(el: Node) -> String {
    match el.tag_name().namespace() {
        Some(BPMN_NS) | None => el.tag_name().name().to_string(),
        Some(ACTIVITI_NS) => format!("activiti:{}", el.tag_name().name()),
        Some(ns) => format!("{{{ns}}}{}", el.tag_name().name()),
    }
}

fn attr_key(attr: &roxmltree::Attribute) -> String {
    match attr.namespace() {
        None => attr.name().to_string(),
        Some(ACTIVITI_NS) => format!("activiti:{}", attr.name()),
        Some(ns) => format!("{{{ns}}}{}", attr.name()),
    }
}

fn required(el: Node, attribute: &str) -> Result<String, ParseError> {
    el.attribute(attribute).map(str::to_string).ok_or_else(|| ParseError::MissingAttribute {
        element: el.tag_name().name().to_string(),
        attribute: attribute.to_string(),
    })
}

fn invalid(element: &str, reason: &str) -> ParseError {
    ParseError::InvalidValue { element: element.to_string(), reason: reason.to_string() }
}

fn candidates(id: &str, attribute: &str, value: &str) -> Result<BTreeSet<String>, ParseError> {
    if value.trim().is_empty() {
        return Ok(BTreeSet::new());
    }
    let mut out = BTreeSet::new();
    for part in value.split(',').map(str::trim) {
        if part.is_empty() || !out.insert(part.to_string()) {
            return Err(invalid(id, &format!("{attribute} has an empty or repeated entry")));
        }
    }
    Ok(out)
}
