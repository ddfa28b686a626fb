use std::fmt::Write as _;

use super::{ACTIVITI_NS, BPMN_NS, XSI_NS};
use crate::model::{CallType, FlowNode, NodeDetail, NodeKind, ProcessModel, SequenceFlow, ValueKind};

/// Emits the canonical XML text for `model`.
///
/// Elements are grouped (events, tasks, gateways, data objects, flows) and
/// sorted by id inside each group; attribute order is fixed per element kind.
/// The output depends on nothing but the model, so equal models serialize to
/// identical bytes.
pub fn serialize_bpmn(model: &ProcessModel) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<definitions xmlns=\"{BPMN_NS}\" xmlns:activiti=\"{ACTIVITI_NS}\" xmlns:xsi=\"{XSI_NS}\" targetNamespace=\"http://activiti.org/bpmn\">"
    );
    out.push_str("  <process");
    attr(&mut out, "id", &model.process_id);
    if let Some(name) = &model.process_name {
        attr(&mut out, "name", name);
    }
    attr(&mut out, "isExecutable", "true");
    if model.nodes.is_empty() && model.flows.is_empty() {
        out.push_str("/>\n");
    } else {
        out.push_str(">\n");
        let mut nodes: Vec<&FlowNode> = model.nodes.values().collect();
        // BTreeMap iteration is already id-ordered; the stable sort keeps it within groups.
        nodes.sort_by_key(|n| group(n.kind));
        for node in nodes {
            write_node(&mut out, node);
        }
        for flow in model.flows.values() {
            write_flow(&mut out, flow);
        }
        out.push_str("  </process>\n");
    }
    out.push_str("</definitions>\n");
    out
}

fn group(kind: NodeKind) -> u8 {
    match kind {
        NodeKind::StartEvent | NodeKind::IntermediateEvent | NodeKind::EndEvent => 0,
        NodeKind::ExclusiveGateway | NodeKind::ParallelGateway => 2,
        NodeKind::DataObject => 3,
        _ => 1,
    }
}

fn element_name(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::StartEvent => "startEvent",
        NodeKind::EndEvent => "endEvent",
        NodeKind::IntermediateEvent => "intermediateThrowEvent",
        NodeKind::UserTask => "userTask",
        NodeKind::JavaServiceTask
        | NodeKind::WebServiceTask
        | NodeKind::EmailTask
        | NodeKind::MuleTask
        | NodeKind::ShellTask
        | NodeKind::CamelTask => "serviceTask",
        NodeKind::ScriptTask => "scriptTask",
        NodeKind::JavaReceiveTask => "receiveTask",
        NodeKind::BusinessRuleTask => "businessRuleTask",
        NodeKind::ManualTask => "manualTask",
        NodeKind::ExclusiveGateway => "exclusiveGateway",
        NodeKind::ParallelGateway => "parallelGateway",
        NodeKind::DataObject => "dataObject",
    }
}

fn write_node(out: &mut String, node: &FlowNode) {
    let tag = element_name(node.kind);
    let _ = write!(out, "    <{tag}");
    attr(out, "id", &node.id);
    if let Some(name) = &node.name {
        attr(out, "name", name);
    }
    let mut children = String::new();
    match &node.detail {
        NodeDetail::UserTask(d) => {
            opt_attr(out, "activiti:assignee", d.assignee.as_deref());
            if !d.candidate_users.is_empty() {
                attr(out, "activiti:candidateUsers", &join(&d.candidate_users));
            }
            if !d.candidate_groups.is_empty() {
                attr(out, "activiti:candidateGroups", &join(&d.candidate_groups));
            }
            opt_attr(out, "activiti:dueDate", d.due_date.as_deref());
            opt_attr(out, "activiti:formKey", d.form_key.as_deref());
            if let Some(text) = &d.description {
                text_element(&mut children, 6, "documentation", text);
            }
        }
        NodeDetail::JavaServiceTask(d) => {
            let key = match d.call_type {
                CallType::JavaClass => "activiti:class",
                CallType::DelegateExpression => "activiti:delegateExpression",
                CallType::Expression => "activiti:expression",
            };
            attr(out, key, &d.target);
            opt_attr(out, "activiti:resultVariableName", d.result_variable.as_deref());
            if !d.field_injections.is_empty() {
                let mut fields: Vec<_> = d.field_injections.iter().collect();
                fields.sort_by(|a, b| a.field_name.cmp(&b.field_name));
                children.push_str("      <extensionElements>\n");
                for f in fields {
                    children.push_str("        <activiti:field");
                    attr(&mut children, "name", &f.field_name);
                    children.push_str(">\n");
                    let inner = match f.value_kind {
                        ValueKind::StringValue => "activiti:string",
                        ValueKind::ExpressionValue => "activiti:expression",
                    };
                    text_element(&mut children, 10, inner, &f.value);
                    children.push_str("        </activiti:field>\n");
                }
                children.push_str("      </extensionElements>\n");
            }
        }
        NodeDetail::Generic(d) => {
            if let Some(t) = node.kind.activiti_type() {
                attr(out, "activiti:type", t);
            }
            for (k, v) in &d.attributes {
                if k != "documentation" && k != "script" {
                    attr(out, k, v);
                }
            }
            if let Some(text) = d.attributes.get("documentation") {
                text_element(&mut children, 6, "documentation", text);
            }
            if node.kind == NodeKind::ScriptTask {
                if let Some(text) = d.attributes.get("script") {
                    text_element(&mut children, 6, "script", text);
                }
            }
        }
    }
    close(out, tag, &children);
}

fn write_flow(out: &mut String, flow: &SequenceFlow) {
    out.push_str("    <sequenceFlow");
    attr(out, "id", &flow.id);
    opt_attr(out, "name", flow.name.as_deref());
    attr(out, "sourceRef", &flow.source_ref);
    attr(out, "targetRef", &flow.target_ref);
    let mut children = String::new();
    if let Some(cond) = &flow.condition_expression {
        children.push_str("      <conditionExpression xsi:type=\"tFormalExpression\">");
        escape_text(&mut children, cond);
        children.push_str("</conditionExpression>\n");
    }
    close(out, "sequenceFlow", &children);
}

fn close(out: &mut String, tag: &str, children: &str) {
    if children.is_empty() {
        out.push_str("/>\n");
    } else {
        out.push_str(">\n");
        out.push_str(children);
        let _ = writeln!(out, "    </{tag}>");
    }
}

fn join(set: &std::collections::BTreeSet<String>) -> String {
    set.iter().map(String::as_str).collect::<Vec<_>>().join(",")
}

fn text_element(out: &mut String, indent: usize, tag: &str, text: &str) {
    let _ = write!(out, "{:indent$}<{tag}>", "");
    escape_text(out, text);
    let _ = writeln!(out, "</{tag}>");
}

fn opt_attr(out: &mut String, key: &str, value: Option<&str>) {
    if let Some(v) = value {
        attr(out, key, v);
    }
}

fn attr(out: &mut String, key: &str, value: &str) {
    let _ = write!(out, " {key}=\"");
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn escape_text(out: &mut String, text: &str) {
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
}
