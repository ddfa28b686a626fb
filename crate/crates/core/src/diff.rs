//! Two-way semantic diff between process models.
//!
//! Elements are matched by id only. Records come out in apply order:
//!
//! 1. flow removals
//! 2. node deletions
//! 3. node additions
//! 4. flow additions
//! 5. node modifications
//! 6. flow modifications
//! 7. process-level changes
//!
//! Ids are sorted lexicographically inside each group. Within one element the
//! field order is: rename, then the detail fields in the order listed by
//! [`field_diff_user_task`] / [`field_diff_service_task`], or sorted attribute
//! keys for generic nodes; for flows it is [`FlowAttribute::ORDER`]; at process
//! level it is `name` then `id`.
//!
//! A node whose kind changes under the same id is reported as a deletion plus
//! an addition. Any surviving flow attached to a deleted or replaced node is
//! removed and re-added around it, so no intermediate model ever holds a
//! dangling flow.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bpmn::serialize_bpmn;
use crate::clock::{Clock, SystemClock};
use crate::ids::derive_id;
use crate::model::{
    FlowAttribute, FlowNode, JavaServiceTaskDetail, ModelError, NodeDetail, ProcessModel, UserTaskDetail,
};
use crate::taxonomy::{
    classify, node_snapshot, ChangeRecord, ChangeSet, ConstructChange, FlowChange, GenericChange, GenericOp,
    JavaServiceTaskModification, Provenance, TaskChange, TaskKind, TaskOp, UserTaskModification, VersionTag, Violation,
};

static SYSTEM_CLOCK: SystemClock = SystemClock;

pub struct DiffRequest<'a> {
    pub old_model: &'a ProcessModel,
    pub new_model: &'a ProcessModel,
    pub provenance: Provenance,
    pub clock: &'a dyn Clock,
    /// Version the old model is known as; the set's result version is the next one.
    pub base_version: VersionTag,
}

impl<'a> DiffRequest<'a> {
    pub fn new(old_model: &'a ProcessModel, new_model: &'a ProcessModel, provenance: Provenance) -> Self {
        DiffRequest { old_model, new_model, provenance, clock: &SYSTEM_CLOCK, base_version: VersionTag::BASELINE }
    }

    pub fn with_clock(mut self, clock: &'a dyn Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_base(mut self, base_version: VersionTag) -> Self {
        self.base_version = base_version;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("{side} model is invalid: {error}")]
    InvalidModel { side: &'static str, error: ModelError },
    #[error("invalid provenance: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidProvenance(Vec<Violation>),
}

/// Computes the change set that turns `old_model` into `new_model`.
///
/// All records share the provenance of the request and one timestamp read once
/// from its clock. Record and set ids are derived from the inputs, so the same
/// request at the same instant yields a byte-identical set.
pub fn diff(request: &DiffRequest<'_>) -> Result<ChangeSet, DiffError> {
    request.old_model.validate().map_err(|error| DiffError::InvalidModel { side: "old", error })?;
    request.new_model.validate().map_err(|error| DiffError::InvalidModel { side: "new", error })?;
    let violations = request.provenance.violations();
    if !violations.is_empty() {
        return Err(DiffError::InvalidProvenance(violations));
    }
    let changes = diff_changes(request.old_model, request.new_model);
    let at = request.clock.now();
    let base = request.base_version.to_string();
    let provenance = serde_json::to_vec(&request.provenance).expect("provenance serializes");
    let set_id = derive_id(
        at,
        &[
            b"set",
            serialize_bpmn(request.old_model).as_bytes(),
            serialize_bpmn(request.new_model).as_bytes(),
            base.as_bytes(),
            &provenance,
        ],
    );
    let records = changes
        .into_iter()
        .enumerate()
        .map(|(i, change)| {
            let payload = serde_json::to_vec(&change).expect("change serializes");
            ChangeRecord {
                record_id: derive_id(at, &[b"record", set_id.as_bytes(), &(i as u64).to_be_bytes(), &payload]),
                timestamp: at,
                provenance: request.provenance.clone(),
                change,
            }
        })
        .collect();
    Ok(ChangeSet { set_id, base_version: request.base_version, result_version: request.base_version.next(), records })
}

/// The ordered change payloads between two models, without provenance.
pub fn diff_changes(old: &ProcessModel, new: &ProcessModel) -> Vec<ConstructChange> {
    let mut replaced = BTreeSet::new();
    let mut deleted = Vec::new();
    let mut added = Vec::new();
    let mut modified = Vec::new();
    for (id, old_node) in &old.nodes {
        match new.nodes.get(id) {
            None => deleted.push(old_node),
            Some(new_node) if new_node.kind != old_node.kind => {
                replaced.insert(id.as_str());
                deleted.push(old_node);
                added.push(new_node);
            }
            Some(new_node) => modified.push((old_node, new_node)),
        }
    }
    for (id, new_node) in &new.nodes {
        if !old.nodes.contains_key(id) {
            added.push(new_node);
        }
    }
    added.sort_by(|a, b| a.id.cmp(&b.id));
    let vanishing: BTreeSet<&str> = deleted.iter().map(|n| n.id.as_str()).collect();

    let mut flows_removed = Vec::new();
    let mut flows_added = Vec::new();
    let mut flow_mods = Vec::new();
    for (id, old_flow) in &old.flows {
        match new.flows.get(id) {
            None => flows_removed.push(old_flow.clone()),
            Some(new_flow)
                if vanishing.contains(old_flow.source_ref.as_str())
                    || vanishing.contains(old_flow.target_ref.as_str()) =>
            {
                flows_removed.push(old_flow.clone());
                flows_added.push(new_flow.clone());
            }
            Some(new_flow) => {
                for attribute in FlowAttribute::ORDER {
                    let (o, n) = (old_flow.get(attribute), new_flow.get(attribute));
                    if o != n {
                        flow_mods.push(FlowChange::FlowModified {
                            flow_id: id.clone(),
                            attribute,
                            old: o.map(str::to_string),
                            new: n.map(str::to_string),
                        });
                    }
                }
            }
        }
    }
    for (id, new_flow) in &new.flows {
        if !old.flows.contains_key(id) {
            flows_added.push(new_flow.clone());
        }
    }
    flows_added.sort_by(|a, b| a.id.cmp(&b.id));

    let mut out: Vec<ConstructChange> = Vec::new();
    out.extend(flows_removed.into_iter().map(|f| ConstructChange::SequenceFlowChange(FlowChange::FlowRemoved(f))));
    out.extend(deleted.into_iter().map(|n| node_presence(n, false)));
    out.extend(added.into_iter().map(|n| node_presence(n, true)));
    out.extend(flows_added.into_iter().map(|f| ConstructChange::SequenceFlowChange(FlowChange::FlowAdded(f))));
    for (o, n) in modified {
        node_modifications(o, n, &mut out);
    }
    out.extend(flow_mods.into_iter().map(ConstructChange::SequenceFlowChange));
    if old.process_name != new.process_name {
        out.push(declaration(old, "name", old.process_name.clone(), new.process_name.clone()));
    }
    if old.process_id != new.process_id {
        out.push(declaration(old, "id", Some(old.process_id.clone()), Some(new.process_id.clone())));
    }
    out
}

fn declaration(old: &ProcessModel, attribute: &str, o: Option<String>, n: Option<String>) -> ConstructChange {
    ConstructChange::DeclarationChange(GenericChange {
        element_id: old.process_id.clone(),
        op: GenericOp::Modified { attribute: attribute.to_string(), old: o, new: n },
    })
}

fn node_presence(node: &FlowNode, add: bool) -> ConstructChange {
    match TaskKind::from_node_kind(node.kind) {
        Some(task_kind) => ConstructChange::TaskLevelChange(TaskChange {
            task_kind,
            element_id: node.id.clone(),
            op: if add { TaskOp::Add(node.clone()) } else { TaskOp::Delete(node.clone()) },
        }),
        None => {
            let snap = node_snapshot(node);
            let op = if add { GenericOp::Added(snap) } else { GenericOp::Removed(snap) };
            ConstructChange::generic(classify(node.kind), GenericChange { element_id: node.id.clone(), op })
                .expect("non-task nodes file under generic categories")
        }
    }
}

fn node_modifications(old: &FlowNode, new: &FlowNode, out: &mut Vec<ConstructChange>) {
    let id = &old.id;
    match TaskKind::from_node_kind(old.kind) {
        Some(task_kind) => {
            let task = |op| ConstructChange::TaskLevelChange(TaskChange { task_kind, element_id: id.clone(), op });
            if old.name != new.name {
                out.push(task(TaskOp::Rename { old: old.name.clone(), new: new.name.clone() }));
            }
            match (&old.detail, &new.detail) {
                (NodeDetail::UserTask(a), NodeDetail::UserTask(b)) => {
                    out.extend(field_diff_user_task(a, b).into_iter().map(|m| task(TaskOp::ModifyUserTask(m))));
                }
                (NodeDetail::JavaServiceTask(a), NodeDetail::JavaServiceTask(b)) => {
                    out.extend(
                        field_diff_service_task(a, b).into_iter().map(|m| task(TaskOp::ModifyJavaServiceTask(m))),
                    );
                }
                (NodeDetail::Generic(a), NodeDetail::Generic(b)) => {
                    for (attribute, o, n) in attribute_diff(&a.attributes, &b.attributes) {
                        out.push(task(TaskOp::ModifyGeneric { attribute, old: o, new: n }));
                    }
                }
                _ => unreachable!("valid nodes of one kind carry the same detail variant"),
            }
        }
        None => {
            let category = classify(old.kind);
            let push = |out: &mut Vec<ConstructChange>, attribute: String, o, n| {
                let change =
                    GenericChange { element_id: id.clone(), op: GenericOp::Modified { attribute, old: o, new: n } };
                out.push(ConstructChange::generic(category, change).expect("generic category"));
            };
            if old.name != new.name {
                push(out, "name".into(), old.name.clone(), new.name.clone());
            }
            if let (NodeDetail::Generic(a), NodeDetail::Generic(b)) = (&old.detail, &new.detail) {
                for (attribute, o, n) in attribute_diff(&a.attributes, &b.attributes) {
                    push(out, attribute, o, n);
                }
            }
        }
    }
}

type AttrDelta = (String, Option<String>, Option<String>);

fn attribute_diff(a: &BTreeMap<String, String>, b: &BTreeMap<String, String>) -> Vec<AttrDelta> {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .filter_map(|k| {
            let (o, n) = (a.get(k), b.get(k));
            (o != n).then(|| (k.clone(), o.cloned(), n.cloned()))
        })
        .collect()
}

/// One modification per differing user-task field, in the order assignee,
/// due date, description, candidate users, candidate groups, form key.
pub fn field_diff_user_task(old: &UserTaskDetail, new: &UserTaskDetail) -> Vec<UserTaskModification> {
    let mut out = Vec::new();
    if old.assignee != new.assignee {
        out.push(UserTaskModification::AssigneeChange { old: old.assignee.clone(), new: new.assignee.clone() });
    }
    if old.due_date != new.due_date {
        out.push(UserTaskModification::DueDateChange { old: old.due_date.clone(), new: new.due_date.clone() });
    }
    if old.description != new.description {
        out.push(UserTaskModification::DescriptionChange {
            old: old.description.clone(),
            new: new.description.clone(),
        });
    }
    if old.candidate_users != new.candidate_users {
        out.push(UserTaskModification::CandidateUsersChange {
            old: old.candidate_users.clone(),
            new: new.candidate_users.clone(),
        });
    }
    if old.candidate_groups != new.candidate_groups {
        out.push(UserTaskModification::CandidateGroupsChange {
            old: old.candidate_groups.clone(),
            new: new.candidate_groups.clone(),
        });
    }
    if old.form_key != new.form_key {
        out.push(UserTaskModification::FormKeyChange { old: old.form_key.clone(), new: new.form_key.clone() });
    }
    out
}

/// Call type and target first, then field injections by field name, then the
/// result variable.
pub fn field_diff_service_task(
    old: &JavaServiceTaskDetail,
    new: &JavaServiceTaskDetail,
) -> Vec<JavaServiceTaskModification> {
    let mut out = Vec::new();
    if (old.call_type, &old.target) != (new.call_type, &new.target) {
        out.push(JavaServiceTaskModification::CallTypeChange {
            old_call: old.call_type,
            old_target: old.target.clone(),
            new_call: new.call_type,
            new_target: new.target.clone(),
        });
    }
    let names: BTreeSet<&str> =
        old.field_injections.iter().chain(&new.field_injections).map(|f| f.field_name.as_str()).collect();
    for name in names {
        match (old.injection(name), new.injection(name)) {
            (Some(o), None) => out.push(JavaServiceTaskModification::FieldInjectionRemoved(o.clone())),
            (None, Some(n)) => out.push(JavaServiceTaskModification::FieldInjectionAdded(n.clone())),
            (Some(o), Some(n)) if o != n => out.push(JavaServiceTaskModification::FieldInjectionModified {
                field_name: name.to_string(),
                old_kind: o.value_kind,
                old_value: o.value.clone(),
                new_kind: n.value_kind,
                new_value: n.value.clone(),
            }),
            _ => {}
        }
    }
    if old.result_variable != new.result_variable {
        out.push(JavaServiceTaskModification::ResultVariableChange {
            old: old.result_variable.clone(),
            new: new.result_variable.clone(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::FixedClock;
    use crate::fixtures::{create_quote, java_task_mut, user_task_mut};
    use crate::model::{CallType, FieldInjection, SequenceFlow};
    use crate::patch::apply;

    fn prov() -> Provenance {
        Provenance::new("alice", "reassign", "")
    }

    fn run(old: &ProcessModel, new: &ProcessModel) -> ChangeSet {
        let clock = FixedClock("2024-05-01T10:00:00Z".parse().unwrap());
        diff(&DiffRequest::new(old, new, prov()).with_clock(&clock)).unwrap()
    }

    #[test]
    fn identity_has_no_records() {
        let m = create_quote();
        let set = run(&m, &m);
        assert!(set.records.is_empty());
        assert_eq!((set.base_version, set.result_version), (VersionTag(0), VersionTag(1)));
    }

    #[test]
    fn assignee_replacement_is_one_user_task_record() {
        let a = create_quote();
        let mut b = a.clone();
        user_task_mut(&mut b, "ut1").assignee = Some("bob".into());
        let set = run(&a, &b);
        assert_eq!(
            set.changes().cloned().collect::<Vec<_>>(),
            vec![ConstructChange::TaskLevelChange(TaskChange {
                task_kind: TaskKind::UserTask,
                element_id: "ut1".into(),
                op: TaskOp::ModifyUserTask(UserTaskModification::AssigneeChange {
                    old: Some("alice".into()),
                    new: Some("bob".into()),
                }),
            })]
        );
    }

    #[test]
    fn endpoint_shift_is_call_type_change_with_same_kind() {
        let a = create_quote();
        let mut b = a.clone();
        java_task_mut(&mut b, "st1").target = "com.acme.RegisterDemandV2".into();
        let set = run(&a, &b);
        assert_eq!(set.records.len(), 1);
        assert_eq!(
            set.records[0].change,
            ConstructChange::TaskLevelChange(TaskChange {
                task_kind: TaskKind::JavaServiceTask,
                element_id: "st1".into(),
                op: TaskOp::ModifyJavaServiceTask(JavaServiceTaskModification::CallTypeChange {
                    old_call: CallType::JavaClass,
                    old_target: "com.acme.RegisterDemand".into(),
                    new_call: CallType::JavaClass,
                    new_target: "com.acme.RegisterDemandV2".into(),
                }),
            })
        );
    }

    #[test]
    fn removing_the_service_task_orders_removals_first() {
        let a = create_quote();
        let mut b = a.clone();
        b.nodes.remove("st1");
        b.flows.remove("f2");
        b.flows.remove("f3");
        b.insert_flow(SequenceFlow::new("f2p", "ut1", "end1"));
        let set = run(&a, &b);
        let st1 = a.nodes["st1"].clone();
        assert_eq!(
            set.changes().cloned().collect::<Vec<_>>(),
            vec![
                ConstructChange::SequenceFlowChange(FlowChange::FlowRemoved(a.flows["f2"].clone())),
                ConstructChange::SequenceFlowChange(FlowChange::FlowRemoved(a.flows["f3"].clone())),
                ConstructChange::TaskLevelChange(TaskChange {
                    task_kind: TaskKind::JavaServiceTask,
                    element_id: "st1".into(),
                    op: TaskOp::Delete(st1),
                }),
                ConstructChange::SequenceFlowChange(FlowChange::FlowAdded(SequenceFlow::new("f2p", "ut1", "end1"))),
            ]
        );
        // apply-oracle
        assert!(crate::model_equals(&apply(&set, &a).unwrap(), &b));
    }

    #[test]
    fn kind_change_is_delete_plus_add_and_reattaches_flows() {
        let a = create_quote();
        let mut b = a.clone();
        b.insert_node(crate::model::FlowNode::new("ut1", crate::model::NodeKind::ManualTask).named("Enter Quotation"));
        let set = run(&a, &b);
        let kinds: Vec<_> = set
            .changes()
            .map(|c| match c {
                ConstructChange::SequenceFlowChange(FlowChange::FlowRemoved(f)) => {
                    format!("-{}", f.id)
                }
                ConstructChange::SequenceFlowChange(FlowChange::FlowAdded(f)) => {
                    format!("+{}", f.id)
                }
                ConstructChange::TaskLevelChange(TaskChange { op: TaskOp::Delete(n), .. }) => format!("-{}", n.id),
                ConstructChange::TaskLevelChange(TaskChange { op: TaskOp::Add(n), .. }) => format!("+{}", n.id),
                other => format!("{other:?}"),
            })
            .collect();
        assert_eq!(kinds, ["-f1", "-f2", "-ut1", "+ut1", "+f1", "+f2"]);
        assert!(crate::model_equals(&apply(&set, &a).unwrap(), &b));
    }

    #[test]
    fn due_date_extension() {
        let old = UserTaskDetail::default();
        let new = UserTaskDetail { due_date: Some("2024-07-01".into()), ..Default::default() };
        assert_eq!(
            field_diff_user_task(&old, &new),
            vec![UserTaskModification::DueDateChange { old: None, new: Some("2024-07-01".into()) }]
        );
        assert!(field_diff_user_task(&new, &new).is_empty());
    }

    #[test]
    fn removed_injection() {
        let mut old = JavaServiceTaskDetail::new(CallType::JavaClass, "com.acme.RegisterDemand");
        old.field_injections.push(FieldInjection::string("endpoint", "http://a"));
        let new = JavaServiceTaskDetail::new(CallType::JavaClass, "com.acme.RegisterDemand");
        assert_eq!(
            field_diff_service_task(&old, &new),
            vec![JavaServiceTaskModification::FieldInjectionRemoved(FieldInjection::string("endpoint", "http://a"))]
        );
        assert!(field_diff_service_task(&old, &old).is_empty());
    }

    #[test]
    fn class_to_delegate_expression() {
        let old = JavaServiceTaskDetail::new(CallType::JavaClass, "com.acme.RegisterDemand");
        let new = JavaServiceTaskDetail::new(CallType::DelegateExpression, "${registerDemandDelegate}");
        assert_eq!(
            field_diff_service_task(&old, &new),
            vec![JavaServiceTaskModification::CallTypeChange {
                old_call: CallType::JavaClass,
                old_target: "com.acme.RegisterDemand".into(),
                new_call: CallType::DelegateExpression,
                new_target: "${registerDemandDelegate}".into(),
            }]
        );
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let a = create_quote();
        let mut bad = a.clone();
        bad.flows.insert("fx".into(), SequenceFlow::new("fx", "ut1", "nowhere"));
        assert!(matches!(diff(&DiffRequest::new(&a, &bad, prov())), Err(DiffError::InvalidModel { side: "new", .. })));
        assert_eq!(
            diff(&DiffRequest::new(&a, &a, Provenance::new("", "x", ""))).unwrap_err(),
            DiffError::InvalidProvenance(vec![Violation::EmptyAgentName])
        );
    }

    #[test]
    fn all_records_share_one_timestamp_and_ids_are_stable() {
        let a = create_quote();
        let mut b = a.clone();
        let ut = user_task_mut(&mut b, "ut1");
        ut.assignee = Some("bob".into());
        ut.description = Some("check stock".into());
        let s1 = run(&a, &b);
        let s2 = run(&a, &b);
        assert_eq!(s1, s2);
        assert_eq!(s1.records.len(), 2);
        assert!(s1.records.iter().all(|r| r.timestamp == s1.records[0].timestamp));
        assert_ne!(s1.records[0].record_id, s1.records[1].record_id);
    }
}
