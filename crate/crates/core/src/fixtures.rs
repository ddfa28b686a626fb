//! The Create Quote process used throughout the tests and the book.
//!
//! Four constructs in a line: a start event, the user task "Enter Quotation",
//! the Java service task "Register Demand", and an end event. Only the two
//! task names are given by the scenario; every other value here is a fixture
//! constant.

use crate::model::{
    CallType, FlowNode, JavaServiceTaskDetail, NodeDetail, NodeKind, ProcessModel, SequenceFlow, UserTaskDetail,
};

pub const CREATE_QUOTE_XML: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL" xmlns:activiti="http://activiti.org/bpmn" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" targetNamespace="http://activiti.org/bpmn">
  <process id="createQuote" name="Create Quote" isExecutable="true">
    <endEvent id="end1"/>
    <startEvent id="start1"/>
    <serviceTask id="st1" name="Register Demand" activiti:class="com.acme.RegisterDemand"/>
    <userTask id="ut1" name="Enter Quotation" activiti:assignee="alice"/>
    <sequenceFlow id="f1" sourceRef="start1" targetRef="ut1"/>
    <sequenceFlow id="f2" sourceRef="ut1" targetRef="st1"/>
    <sequenceFlow id="f3" sourceRef="st1" targetRef="end1"/>
  </process>
</definitions>
"#;

pub fn create_quote() -> ProcessModel {
    let mut model = ProcessModel::new("createQuote");
    model.process_name = Some("Create Quote".into());
    model
        .with_node(FlowNode::new("start1", NodeKind::StartEvent))
        .with_node(
            FlowNode::new("ut1", NodeKind::UserTask).named("Enter Quotation").with_detail(NodeDetail::UserTask(
                UserTaskDetail { assignee: Some("alice".into()), ..Default::default() },
            )),
        )
        .with_node(FlowNode::new("st1", NodeKind::JavaServiceTask).named("Register Demand").with_detail(
            NodeDetail::JavaServiceTask(JavaServiceTaskDetail::new(CallType::JavaClass, "com.acme.RegisterDemand")),
        ))
        .with_node(FlowNode::new("end1", NodeKind::EndEvent))
        .with_flow(SequenceFlow::new("f1", "start1", "ut1"))
        .with_flow(SequenceFlow::new("f2", "ut1", "st1"))
        .with_flow(SequenceFlow::new("f3", "st1", "end1"))
}

/// Mutable access to a user task's detail, for building variants of a fixture.
pub fn user_task_mut<'a>(model: &'a mut ProcessModel, id: &str) -> &'a mut UserTaskDetail {
    match &mut model.nodes.get_mut(id).expect("node exists").detail {
        NodeDetail::UserTask(d) => d,
        _ => panic!("{id} is not a user task"),
    }
}

/// Mutable access to a Java service task's detail.
pub fn java_task_mut<'a>(model: &'a mut ProcessModel, id: &str) -> &'a mut JavaServiceTaskDetail {
    match &mut model.nodes.get_mut(id).expect("node exists").detail {
        NodeDetail::JavaServiceTask(d) => d,
        _ => panic!("{id} is not a java service task"),
    }
}
