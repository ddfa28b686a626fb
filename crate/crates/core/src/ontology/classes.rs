//! The change-ontology class hierarchy and the map from payloads to classes.

use crate::model::CallType;
use crate::taxonomy::{ChangeCategory, ConstructChange, JavaServiceTaskModification, TaskKind, TaskOp};

use super::NS;

macro_rules! classes {
    ($($variant:ident = $local:literal under $parent:expr;)*) => {
        /// A class of the change ontology. Local names are the IRI fragments.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum OntClass {
            $($variant,)*
        }

        impl OntClass {
            /// Every class, parents before children.
            pub const ALL: &'static [OntClass] = &[$(OntClass::$variant,)*];

            pub fn local_name(self) -> &'static str {
                match self {
                    $(OntClass::$variant => $local,)*
                }
            }

            /// Direct superclass; `None` for the three roots.
            pub fn parent(self) -> Option<OntClass> {
                match self {
                    $(OntClass::$variant => $parent,)*
                }
            }
        }
    };
}

use OntClass as C;

classes! {
    BpmnConstructChange = "BPMN_Construct_Change" under None;
    ProvenanceSpecs = "Provenance_Specs" under None;
    Timestamp = "Timestamp" under None;

    AgentName = "AgentName" under Some(C::ProvenanceSpecs);
    Cause = "Cause" under Some(C::ProvenanceSpecs);
    Description = "Description" under Some(C::ProvenanceSpecs);

    DeclarationChange = "Declaration_Change" under Some(C::BpmnConstructChange);
    ProcessInitializationChange = "Process_Initialization_Change" under Some(C::BpmnConstructChange);
    SequenceFlowChange = "Sequence_Flow_Change" under Some(C::BpmnConstructChange);
    TaskLevelChange = "TaskLevel_Change" under Some(C::BpmnConstructChange);
    CustomExtensionChange = "Custom_Extension_Change" under Some(C::BpmnConstructChange);
    DataObjectChange = "Data_Object_Change" under Some(C::BpmnConstructChange);
    GatewaysChange = "Gateways_Change" under Some(C::BpmnConstructChange);
    TransactionConcurrencyChange = "Transaction_Concurrency_Change" under Some(C::BpmnConstructChange);
    EventChange = "Event_Change" under Some(C::BpmnConstructChange);

    UserTaskChange = "UserTask_Change" under Some(C::TaskLevelChange);
    JavaServiceTaskChange = "Java_Service_Task_Change" under Some(C::TaskLevelChange);
    WebServiceTaskChange = "Web_Service_Task_Change" under Some(C::TaskLevelChange);
    ScriptTaskChange = "Script_Task_Change" under Some(C::TaskLevelChange);
    EmailTaskChange = "Email_Task_Change" under Some(C::TaskLevelChange);
    JavaReceiveTaskChange = "Java_Receive_Task_Change" under Some(C::TaskLevelChange);
    BusinessRuleTaskChange = "Business_Rule_Task_Change" under Some(C::TaskLevelChange);
    MuleTaskChange = "Mule_Task_Change" under Some(C::TaskLevelChange);
    ManualTaskChange = "Manual_Task_Change" under Some(C::TaskLevelChange);
    ShellTaskChange = "Shell_Task_Change" under Some(C::TaskLevelChange);
    CamelTaskChange = "Camel_Task_Change" under Some(C::TaskLevelChange);

    UserTaskAddition = "UserTask_Addition" under Some(C::UserTaskChange);
    UserTaskDeletion = "UserTask_Deletion" under Some(C::UserTaskChange);
    UserTaskRename = "UserTask_Rename" under Some(C::UserTaskChange);
    ModificationInUserTask = "Modification_in_UserTask" under Some(C::UserTaskChange);

    JavaServiceTaskAddition = "Java_Service_Task_Addition" under Some(C::JavaServiceTaskChange);
    JavaServiceTaskDeletion = "Java_Service_Task_Deletion" under Some(C::JavaServiceTaskChange);
    JavaServiceTaskRename = "Java_Service_Task_Rename" under Some(C::JavaServiceTaskChange);
    CallTypeChange = "CallType_Change" under Some(C::JavaServiceTaskChange);
    FieldInjectionChange = "Field_Injection_Change" under Some(C::JavaServiceTaskChange);
    ResultVariableChange = "ResultVariable_Change" under Some(C::JavaServiceTaskChange);

    JavaClassCallType = "JavaClass_CallType" under Some(C::CallTypeChange);
    DelegateExpressionCallType = "DelegateExpression_CallType" under Some(C::CallTypeChange);
    ExpressionCallType = "Expression_CallType" under Some(C::CallTypeChange);
}

impl OntClass {
    pub fn iri(self) -> String {
        format!("{NS}{}", self.local_name())
    }

    pub fn from_local_name(name: &str) -> Option<OntClass> {
        OntClass::ALL.iter().copied().find(|c| c.local_name() == name)
    }

    pub fn from_iri(iri: &str) -> Option<OntClass> {
        iri.strip_prefix(NS).and_then(OntClass::from_local_name)
    }

    /// Superclasses from the direct parent up to a root.
    pub fn ancestors(self) -> impl Iterator<Item = OntClass> {
        std::iter::successors(self.parent(), |c| c.parent())
    }

    pub fn of_category(category: ChangeCategory) -> OntClass {
        match category {
            ChangeCategory::DeclarationChange => C::DeclarationChange,
            ChangeCategory::ProcessInitializationChange => C::ProcessInitializationChange,
            ChangeCategory::SequenceFlowChange => C::SequenceFlowChange,
            ChangeCategory::TaskLevelChange => C::TaskLevelChange,
            ChangeCategory::CustomExtensionChange => C::CustomExtensionChange,
            ChangeCategory::DataObjectChange => C::DataObjectChange,
            ChangeCategory::GatewaysChange => C::GatewaysChange,
            ChangeCategory::TransactionConcurrencyChange => C::TransactionConcurrencyChange,
            ChangeCategory::EventChange => C::EventChange,
        }
    }

    pub fn of_task_kind(kind: TaskKind) -> OntClass {
        match kind {
            TaskKind::UserTask => C::UserTaskChange,
            TaskKind::JavaServiceTask => C::JavaServiceTaskChange,
            TaskKind::WebServiceTask => C::WebServiceTaskChange,
            TaskKind::ScriptTask => C::ScriptTaskChange,
            TaskKind::EmailTask => C::EmailTaskChange,
            TaskKind::JavaReceiveTask => C::JavaReceiveTaskChange,
            TaskKind::BusinessRuleTask => C::BusinessRuleTaskChange,
            TaskKind::MuleTask => C::MuleTaskChange,
            TaskKind::ManualTask => C::ManualTaskChange,
            TaskKind::ShellTask => C::ShellTaskChange,
            TaskKind::CamelTask => C::CamelTaskChange,
        }
    }

    pub fn of_call_type(call: CallType) -> OntClass {
        match call {
            CallType::JavaClass => C::JavaClassCallType,
            CallType::DelegateExpression => C::DelegateExpressionCallType,
            CallType::Expression => C::ExpressionCallType,
        }
    }

    /// The task kind a task-level class belongs to, if any.
    pub fn task_kind(self) -> Option<TaskKind> {
        let mut c = Some(self);
        while let Some(cur) = c {
            if let Some(k) = TaskKind::ALL.into_iter().find(|k| OntClass::of_task_kind(*k) == cur) {
                return Some(k);
            }
            c = cur.parent();
        }
        None
    }

    /// The change category a class files under, if it is a construct-change class.
    pub fn category(self) -> Option<ChangeCategory> {
        let mut c = Some(self);
        while let Some(cur) = c {
            if let Some(cat) = ChangeCategory::ALL.into_iter().find(|k| OntClass::of_category(*k) == cur) {
                return Some(cat);
            }
            c = cur.parent();
        }
        None
    }
}

/// The one class a change payload is typed with.
///
/// User-task and Java-service-task changes get the most specific class of
/// their subtree; a call-type change is typed by its new call type. Other
/// task kinds use their kind class, and every other payload its category
/// class.
pub fn class_of(change: &ConstructChange) -> OntClass {
    let ConstructChange::TaskLevelChange(t) = change else {
        return OntClass::of_category(change.category());
    };
    match (t.task_kind, &t.op) {
        (TaskKind::UserTask, TaskOp::Add(_)) => C::UserTaskAddition,
        (TaskKind::UserTask, TaskOp::Delete(_)) => C::UserTaskDeletion,
        (TaskKind::UserTask, TaskOp::Rename { .. }) => C::UserTaskRename,
        (TaskKind::UserTask, TaskOp::ModifyUserTask(_)) => C::ModificationInUserTask,
        (TaskKind::JavaServiceTask, TaskOp::Add(_)) => C::JavaServiceTaskAddition,
        (TaskKind::JavaServiceTask, TaskOp::Delete(_)) => C::JavaServiceTaskDeletion,
        (TaskKind::JavaServiceTask, TaskOp::Rename { .. }) => C::JavaServiceTaskRename,
        (TaskKind::JavaServiceTask, TaskOp::ModifyJavaServiceTask(m)) => match m {
            JavaServiceTaskModification::CallTypeChange { new_call, .. } => OntClass::of_call_type(*new_call),
            JavaServiceTaskModification::FieldInjectionAdded(_)
            | JavaServiceTaskModification::FieldInjectionRemoved(_)
            | JavaServiceTaskModification::FieldInjectionModified { .. } => C::FieldInjectionChange,
            JavaServiceTaskModification::ResultVariableChange { .. } => C::ResultVariableChange,
        },
        (kind, _) => OntClass::of_task_kind(kind),
    }
}
