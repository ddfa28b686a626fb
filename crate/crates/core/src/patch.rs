//! Applying, inverting and replaying change sets.
//!
//! [`apply`] is all-or-nothing and optimistic: every record states the value it
//! expects to replace, and the first record whose expectation does not hold
//! aborts the whole set with an [`ApplyError`] naming it. The input model is
//! never touched.

use std::fmt::Debug;

use thiserror::Error;

use crate::ids::derive_id;
use crate::model::{node_equals, FlowAttribute, FlowNode, ModelError, NodeDetail, ProcessModel, UserTaskDetail};
use crate::taxonomy::{
    classify, node_from_snapshot, ChangeCategory, ChangeRecord, ChangeSet, ConstructChange, FlowChange, GenericChange,
    GenericOp, JavaServiceTaskModification, Provenance, TaskChange, TaskOp, Timestamp, UserTaskModification,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("record {record_index} on `{element_id}`: expected {expected}, found {found}")]
    Conflict { record_index: usize, element_id: String, expected: String, found: String },
    #[error("record {record_index}: element `{element_id}` does not exist")]
    MissingElement { record_index: usize, element_id: String },
    #[error("record {record_index}: element `{element_id}` already exists")]
    DuplicateAdd { record_index: usize, element_id: String },
    #[error("record {record_index}: flow `{flow_id}` would reference missing node `{node_id}`")]
    DanglingFlow { record_index: usize, flow_id: String, node_id: String },
    #[error("record {record_index}: {category} has no model counterpart and cannot be applied")]
    Placeholder { record_index: usize, category: ChangeCategory },
    #[error("record {record_index}: {reason}")]
    Malformed { record_index: usize, reason: String },
    #[error("record {record_index} leaves an invalid model: {error}")]
    InvalidResult { record_index: usize, error: ModelError },
}

impl ApplyError {
    pub fn record_index(&self) -> usize {
        match self {
            ApplyError::Conflict { record_index, .. }
            | ApplyError::MissingElement { record_index, .. }
            | ApplyError::DuplicateAdd { record_index, .. }
            | ApplyError::DanglingFlow { record_index, .. }
            | ApplyError::Placeholder { record_index, .. }
            | ApplyError::Malformed { record_index, .. }
            | ApplyError::InvalidResult { record_index, .. } => *record_index,
        }
    }
}

/// Applies every record of `set` to a copy of `model`, in order.
pub fn apply(set: &ChangeSet, model: &ProcessModel) -> Result<ProcessModel, ApplyError> {
    apply_changes(set.changes(), model)
}

pub fn apply_changes<'a>(
    changes: impl IntoIterator<Item = &'a ConstructChange>,
    model: &ProcessModel,
) -> Result<ProcessModel, ApplyError> {
    let mut work = model.clone();
    for (index, change) in changes.into_iter().enumerate() {
        apply_one(&mut work, index, change)?;
        debug_assert!(no_dangling_flows(&work), "record {index} left a dangling flow");
        if let Err(error) = work.validate() {
            return Err(ApplyError::InvalidResult { record_index: index, error });
        }
    }
    Ok(work)
}

fn no_dangling_flows(m: &ProcessModel) -> bool {
    m.flows.values().all(|f| m.nodes.contains_key(&f.source_ref) && m.nodes.contains_key(&f.target_ref))
}

fn show<T: Debug>(v: &Option<T>) -> String {
    match v {
        Some(v) => format!("{v:?}"),
        None => "<absent>".to_string(),
    }
}

struct Ctx<'a> {
    index: usize,
    id: &'a str,
}

impl Ctx<'_> {
    fn conflict(&self, expected: impl Into<String>, found: impl Into<String>) -> ApplyError {
        ApplyError::Conflict {
            record_index: self.index,
            element_id: self.id.to_string(),
            expected: expected.into(),
            found: found.into(),
        }
    }

    fn missing(&self) -> ApplyError {
        ApplyError::MissingElement { record_index: self.index, element_id: self.id.to_string() }
    }

    fn duplicate(&self) -> ApplyError {
        ApplyError::DuplicateAdd { record_index: self.index, element_id: self.id.to_string() }
    }

    fn malformed(&self, reason: impl Into<String>) -> ApplyError {
        ApplyError::Malformed { record_index: self.index, reason: reason.into() }
    }

    /// Swaps `slot` from `old` to `new`, or reports what was there instead.
    fn swap<T>(&self, slot: &mut T, old: &T, new: &T) -> Result<(), ApplyError>
    where
        T: PartialEq + Clone + Debug + ShowValue,
    {
        if slot != old {
            return Err(self.conflict(old.show(), slot.show()));
        }
        *slot = new.clone();
        Ok(())
    }

    fn add_node(&self, m: &mut ProcessModel, node: &FlowNode) -> Result<(), ApplyError> {
        if node.id != self.id {
            return Err(self.malformed(format!("snapshot id `{}` differs from element id", node.id)));
        }
        if m.contains_id(&node.id) {
            return Err(self.duplicate());
        }
        m.insert_node(node.clone());
        Ok(())
    }

    fn delete_node(&self, m: &mut ProcessModel, snapshot: &FlowNode) -> Result<(), ApplyError> {
        let current = m.nodes.get(self.id).ok_or_else(|| self.missing())?;
        if !node_equals(current, snapshot) {
            return Err(self.conflict(format!("{snapshot:?}"), format!("{current:?}")));
        }
        if let Some(f) = m.flows_touching(self.id).next() {
            return Err(ApplyError::DanglingFlow {
                record_index: self.index,
                flow_id: f.id.clone(),
                node_id: self.id.to_string(),
            });
        }
        m.nodes.remove(self.id);
        Ok(())
    }
}

trait ShowValue {
    fn show(&self) -> String;
}

impl<T: Debug> ShowValue for Option<T> {
    fn show(&self) -> String {
        show(self)
    }
}

impl ShowValue for std::collections::BTreeSet<String> {
    fn show(&self) -> String {
        format!("{self:?}")
    }
}

fn apply_one(m: &mut ProcessModel, index: usize, change: &ConstructChange) -> Result<(), ApplyError> {
    let cx = Ctx { index, id: change.element_id() };
    match change {
        ConstructChange::TaskLevelChange(t) => apply_task(m, &cx, t),
        ConstructChange::SequenceFlowChange(f) => apply_flow(m, &cx, f),
        ConstructChange::DeclarationChange(g) => apply_declaration(m, &cx, g),
        other if other.category().is_placeholder() => {
            Err(ApplyError::Placeholder { record_index: index, category: other.category() })
        }
        other => apply_generic_node(m, &cx, other.category(), other.as_generic().expect("generic category")),
    }
}

fn apply_task(m: &mut ProcessModel, cx: &Ctx, t: &TaskChange) -> Result<(), ApplyError> {
    let kind = t.task_kind.into();
    match &t.op {
        TaskOp::Add(node) => {
            if node.kind != kind {
                return Err(cx.malformed(format!("{} snapshot under task kind {}", node.kind, t.task_kind)));
            }
            return cx.add_node(m, node);
        }
        TaskOp::Delete(node) => return cx.delete_node(m, node),
        _ => {}
    }
    let node = m.nodes.get_mut(cx.id).ok_or_else(|| cx.missing())?;
    if node.kind != kind {
        return Err(cx.conflict(format!("kind {kind}"), format!("kind {}", node.kind)));
    }
    match &t.op {
        TaskOp::Add(_) | TaskOp::Delete(_) => unreachable!(),
        TaskOp::Rename { old, new } => cx.swap(&mut node.name, old, new),
        TaskOp::ModifyUserTask(modification) => match &mut node.detail {
            NodeDetail::UserTask(d) => apply_user_task(cx, d, modification),
            _ => Err(cx.malformed("user task without user-task detail")),
        },
        TaskOp::ModifyJavaServiceTask(modification) => match &mut node.detail {
            NodeDetail::JavaServiceTask(d) => apply_java(cx, d, modification),
            _ => Err(cx.malformed("java service task without its detail")),
        },
        TaskOp::ModifyGeneric { attribute, old, new } => match &mut node.detail {
            NodeDetail::Generic(d) => swap_attribute(cx, &mut d.attributes, attribute, old, new),
            _ => Err(cx.malformed(format!("generic modification on {}", node.kind))),
        },
    }
}

fn apply_user_task(cx: &Ctx, d: &mut UserTaskDetail, m: &UserTaskModification) -> Result<(), ApplyError> {
    match m {
        UserTaskModification::AssigneeChange { old, new } => cx.swap(&mut d.assignee, old, new),
        UserTaskModification::DueDateChange { old, new } => cx.swap(&mut d.due_date, old, new),
        UserTaskModification::DescriptionChange { old, new } => cx.swap(&mut d.description, old, new),
        UserTaskModification::FormKeyChange { old, new } => cx.swap(&mut d.form_key, old, new),
        UserTaskModification::CandidateUsersChange { old, new } => cx.swap(&mut d.candidate_users, old, new),
        UserTaskModification::CandidateGroupsChange { old, new } => cx.swap(&mut d.candidate_groups, old, new),
    }
}

fn apply_java(
    cx: &Ctx,
    d: &mut crate::model::JavaServiceTaskDetail,
    m: &JavaServiceTaskModification,
) -> Result<(), ApplyError> {
    match m {
        JavaServiceTaskModification::CallTypeChange { old_call, old_target, new_call, new_target } => {
            if (d.call_type, &d.target) != (*old_call, old_target) {
                return Err(
                    cx.conflict(format!("{old_call} {old_target:?}"), format!("{} {:?}", d.call_type, d.target))
                );
            }
            d.call_type = *new_call;
            d.target = new_target.clone();
        }
        JavaServiceTaskModification::FieldInjectionAdded(f) => {
            if let Some(existing) = d.injection(&f.field_name) {
                return Err(cx.conflict(format!("no field `{}`", f.field_name), format!("{existing:?}")));
            }
            d.field_injections.push(f.clone());
            d.field_injections.sort_by(|a, b| a.field_name.cmp(&b.field_name));
        }
        JavaServiceTaskModification::FieldInjectionRemoved(f) => {
            let pos = d
                .field_injections
                .iter()
                .position(|x| x.field_name == f.field_name)
                .ok_or_else(|| cx.conflict(format!("{f:?}"), format!("no field `{}`", f.field_name)))?;
            if &d.field_injections[pos] != f {
                return Err(cx.conflict(format!("{f:?}"), format!("{:?}", d.field_injections[pos])));
            }
            d.field_injections.remove(pos);
        }
        JavaServiceTaskModification::FieldInjectionModified {
            field_name,
            old_kind,
            old_value,
            new_kind,
            new_value,
        } => {
            let slot = d
                .field_injections
                .iter_mut()
                .find(|x| &x.field_name == field_name)
                .ok_or_else(|| cx.conflict(format!("field `{field_name}`"), "<absent>"))?;
            if (slot.value_kind, &slot.value) != (*old_kind, old_value) {
                return Err(cx.conflict(
                    format!("{} {old_value:?}", old_kind.as_str()),
                    format!("{} {:?}", slot.value_kind.as_str(), slot.value),
                ));
            }
            slot.value_kind = *new_kind;
            slot.value = new_value.clone();
        }
        JavaServiceTaskModification::ResultVariableChange { old, new } => cx.swap(&mut d.result_variable, old, new)?,
    }
    Ok(())
}

fn swap_attribute(
    cx: &Ctx,
    attrs: &mut std::collections::BTreeMap<String, String>,
    attribute: &str,
    old: &Option<String>,
    new: &Option<String>,
) -> Result<(), ApplyError> {
    let mut slot = attrs.get(attribute).cloned();
    cx.swap(&mut slot, old, new)?;
    match slot {
        Some(v) => attrs.insert(attribute.to_string(), v),
        None => attrs.remove(attribute),
    };
    Ok(())
}

fn apply_flow(m: &mut ProcessModel, cx: &Ctx, f: &FlowChange) -> Result<(), ApplyError> {
    let dangling = |flow_id: &str, node_id: &str| ApplyError::DanglingFlow {
        record_index: cx.index,
        flow_id: flow_id.to_string(),
        node_id: node_id.to_string(),
    };
    match f {
        FlowChange::FlowAdded(flow) => {
            if m.contains_id(&flow.id) {
                return Err(cx.duplicate());
            }
            for end in [&flow.source_ref, &flow.target_ref] {
                if !m.nodes.contains_key(end) {
                    return Err(dangling(&flow.id, end));
                }
            }
            m.insert_flow(flow.clone());
        }
        FlowChange::FlowRemoved(flow) => {
            let current = m.flows.get(&flow.id).ok_or_else(|| cx.missing())?;
            if current != flow {
                return Err(cx.conflict(format!("{flow:?}"), format!("{current:?}")));
            }
            m.flows.remove(&flow.id);
        }
        FlowChange::FlowModified { flow_id, attribute, old, new } => {
            let current = m.flows.get(flow_id).ok_or_else(|| cx.missing())?;
            let found = current.get(*attribute).map(str::to_string);
            if &found != old {
                return Err(cx.conflict(show(old), show(&found)));
            }
            if matches!(attribute, FlowAttribute::SourceRef | FlowAttribute::TargetRef) {
                match new {
                    Some(node) if m.nodes.contains_key(node) => {}
                    Some(node) => return Err(dangling(flow_id, node)),
                    None => return Err(cx.malformed("flow endpoint cannot be removed")),
                }
            }
            m.flows.get_mut(flow_id).expect("checked above").set(*attribute, new.clone());
        }
    }
    Ok(())
}

fn apply_declaration(m: &mut ProcessModel, cx: &Ctx, g: &GenericChange) -> Result<(), ApplyError> {
    let GenericOp::Modified { attribute, old, new } = &g.op else {
        return Err(cx.malformed("process declarations can only be modified"));
    };
    if g.element_id != m.process_id {
        return Err(cx.conflict(format!("process `{}`", g.element_id), format!("process `{}`", m.process_id)));
    }
    match attribute.as_str() {
        "name" => cx.swap(&mut m.process_name, old, new),
        "id" => {
            let mut slot = Some(m.process_id.clone());
            cx.swap(&mut slot, old, new)?;
            m.process_id =
                slot.filter(|s| !s.is_empty()).ok_or_else(|| cx.malformed("process id cannot be removed"))?;
            Ok(())
        }
        other => Err(cx.malformed(format!("unknown process attribute `{other}`"))),
    }
}

fn apply_generic_node(
    m: &mut ProcessModel,
    cx: &Ctx,
    category: ChangeCategory,
    g: &GenericChange,
) -> Result<(), ApplyError> {
    let snapshot_node = |snap| {
        let node = node_from_snapshot(&g.element_id, snap).map_err(|e| cx.malformed(e.to_string()))?;
        if classify(node.kind) != category {
            return Err(cx.malformed(format!("{} snapshot filed under {category}", node.kind)));
        }
        Ok(node)
    };
    match &g.op {
        GenericOp::Added(snap) => cx.add_node(m, &snapshot_node(snap)?),
        GenericOp::Removed(snap) => cx.delete_node(m, &snapshot_node(snap)?),
        GenericOp::Modified { attribute, old, new } => {
            let node = m.nodes.get_mut(cx.id).ok_or_else(|| cx.missing())?;
            if classify(node.kind) != category {
                return Err(cx.conflict(category.as_str(), format!("kind {}", node.kind)));
            }
            if attribute == "name" {
                return cx.swap(&mut node.name, old, new);
            }
            match &mut node.detail {
                NodeDetail::Generic(d) => swap_attribute(cx, &mut d.attributes, attribute, old, new),
                _ => Err(cx.malformed("typed detail under a generic category")),
            }
        }
    }
}

/// The set that undoes `set`.
///
/// Records come in reverse order with every payload swapped; base and result
/// versions trade places. Each inverse record keeps the original agent and
/// timestamp and gets cause `revert of <set_id>`.
pub fn invert(set: &ChangeSet) -> ChangeSet {
    invert_inner(set, None)
}

/// Like [`invert`], but every inverse record carries `provenance` and `at`.
pub fn invert_with(set: &ChangeSet, provenance: &Provenance, at: Timestamp) -> ChangeSet {
    invert_inner(set, Some((provenance, at)))
}

fn invert_inner(set: &ChangeSet, stamp: Option<(&Provenance, Timestamp)>) -> ChangeSet {
    let set_at = stamp.map(|(_, at)| at).or_else(|| set.records.iter().map(|r| r.timestamp).max());
    let set_id = derive_id(set_at.unwrap_or(Timestamp::from_unix(0)), &[b"invert", set.set_id.as_bytes()]);
    let records = set
        .records
        .iter()
        .rev()
        .map(|r| {
            let (provenance, timestamp) = match stamp {
                Some((p, at)) => (p.clone(), at),
                None => (
                    Provenance {
                        agent_name: r.provenance.agent_name.clone(),
                        cause: format!("revert of {}", set.set_id),
                        description: format!("inverse of record {}", r.record_id),
                    },
                    r.timestamp,
                ),
            };
            ChangeRecord {
                record_id: derive_id(timestamp, &[b"invert", set_id.as_bytes(), r.record_id.as_bytes()]),
                timestamp,
                provenance,
                change: r.change.inverse(),
            }
        })
        .collect();
    ChangeSet { set_id, base_version: set.result_version, result_version: set.base_version, records }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("change set {set_id} does not apply: {source}")]
    Conflict { set_id: String, source: ApplyError },
    #[error("version chain broken: expected base {expected}, found {found}")]
    VersionChainBroken { expected: String, found: String },
}

/// Left fold of [`apply`] over `sets`, checking that each set starts where the
/// previous one ended.
pub fn replay<'a>(
    sets: impl IntoIterator<Item = &'a ChangeSet>,
    initial: &ProcessModel,
) -> Result<ProcessModel, ReplayError> {
    let mut model = initial.clone();
    let mut expected = None;
    for set in sets {
        if let Some(expected) = expected {
            if set.base_version != expected {
                return Err(ReplayError::VersionChainBroken {
                    expected: expected.to_string(),
                    found: set.base_version.to_string(),
                });
            }
        }
        model = apply(set, &model).map_err(|source| ReplayError::Conflict { set_id: set.set_id.clone(), source })?;
        expected = Some(set.result_version);
    }
    Ok(model)
}
