use bpcm::bpmn::ParseError;
use bpcm::fixtures::{create_quote, CREATE_QUOTE_XML};
use bpcm::model::{CallType, NodeKind, ValueKind};
use bpcm::{model_equals, parse_bpmn, serialize_bpmn};

fn wrap(body: &str) -> String {
    format!(
        r#"<?xml version="1.0" encoding="UTF-8"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL" xmlns:activiti="http://activiti.org/bpmn" xmlns:bpmndi="http://www.omg.org/spec/BPMN/20100524/DI">
  <process id="p">{body}</process>
  <bpmndi:BPMNDiagram id="d"/>
</definitions>"#
    )
}

#[test]
fn fixture_text_is_canonical() {
    assert!(model_equals(&parse_bpmn(CREATE_QUOTE_XML).unwrap(), &create_quote()));
    assert_eq!(serialize_bpmn(&create_quote()), CREATE_QUOTE_XML);
}

#[test]
fn vendor_attributes_and_children() {
    let m = parse_bpmn(&wrap(
        r#"
        <userTask id="u" activiti:candidateUsers=" bob , alice" activiti:dueDate="P2D" activiti:formKey="k">
          <documentation>Check &amp; approve</documentation>
        </userTask>
        <serviceTask id="s" activiti:delegateExpression="${x}" activiti:resultVariable="out">
          <extensionElements>
            <activiti:field name="url"><activiti:string>http://a</activiti:string></activiti:field>
            <activiti:field name="body"><activiti:expression>${b}</activiti:expression></activiti:field>
          </extensionElements>
        </serviceTask>
        <serviceTask id="m" activiti:type="mail"/>
        <serviceTask id="w" implementation="WebService"/>
        <scriptTask id="sc" scriptFormat="groovy"><script>x = 1</script></scriptTask>"#,
    ))
    .unwrap();
    let u = m.node("u").unwrap().user_task().unwrap();
    assert_eq!(u.candidate_users.iter().collect::<Vec<_>>(), ["alice", "bob"]);
    assert_eq!(u.description.as_deref(), Some("Check & approve"));
    let s = m.node("s").unwrap().java_service_task().unwrap();
    assert_eq!((s.call_type, s.target.as_str()), (CallType::DelegateExpression, "${x}"));
    assert_eq!(s.result_variable.as_deref(), Some("out"));
    assert_eq!(s.injection("body").unwrap().value_kind, ValueKind::ExpressionValue);
    assert_eq!(m.node("m").unwrap().kind, NodeKind::EmailTask);
    assert_eq!(m.node("w").unwrap().kind, NodeKind::WebServiceTask);
    assert_eq!(m.node("sc").unwrap().generic().unwrap().attributes["script"], "x = 1");
    assert!(model_equals(&parse_bpmn(&serialize_bpmn(&m)).unwrap(), &m));
}

#[test]
fn every_unsupported_construct_is_named_once() {
    let err = parse_bpmn(&wrap(
        r#"
        <subProcess id="sp"/>
        <userTask id="u" foo="1"/>
        <subProcess id="sp2"/>
        <serviceTask id="x" activiti:type="dmn"/>"#,
    ))
    .unwrap_err();
    assert_eq!(
        err,
        ParseError::UnsupportedConstruct(vec![
            "subProcess".into(),
            "userTask/@foo".into(),
            "serviceTask[activiti:type=dmn]".into(),
        ])
    );
}

#[test]
fn structural_errors() {
    assert!(matches!(parse_bpmn("<definitions"), Err(ParseError::MalformedXml(_))));
    assert_eq!(
        parse_bpmn(&wrap(r#"<startEvent id="a"/><sequenceFlow id="f" sourceRef="a" targetRef="b"/>"#)),
        Err(ParseError::DanglingFlowRef("f".into()))
    );
    assert_eq!(
        parse_bpmn(&wrap(r#"<startEvent id="a"/><endEvent id="a"/>"#)),
        Err(ParseError::DuplicateId("a".into()))
    );
    assert!(matches!(
        parse_bpmn(&wrap(r#"<startEvent id="a"/><sequenceFlow id="f" targetRef="a"/>"#)),
        Err(ParseError::MissingAttribute { attribute, .. }) if attribute == "sourceRef"
    ));
    let two = wrap("").replace("</definitions>", r#"<process id="q"/></definitions>"#);
    assert_eq!(parse_bpmn(&two), Err(ParseError::ProcessCount(2)));
}

#[test]
fn escaping_survives_round_trip() {
    let mut m = create_quote();
    m.process_name = Some("a\"b<c>&d\te\nf\rg".into());
    bpcm::fixtures::user_task_mut(&mut m, "ut1").description = Some(" spaced\r\n text ".into());
    let xml = serialize_bpmn(&m);
    assert!(model_equals(&parse_bpmn(&xml).unwrap(), &m));
}
