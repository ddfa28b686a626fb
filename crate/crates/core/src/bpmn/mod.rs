//! BPMN 2.0 XML input and canonical output for the supported subset.
//!
//! The element and attribute grammar is described in the book's *Formats*
//! chapter. Vendor attributes live in the Activiti extension namespace.

mod parse;
mod write;

pub use parse::{parse_bpmn, ParseError};
pub use write::serialize_bpmn;

/// BPMN 2.0 model namespace.
pub const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";
/// Diagram-interchange namespace; DI content is skipped on input.
pub const BPMNDI_NS: &str = "http://www.omg.org/spec/BPMN/20100524/DI";
/// Extension namespace for assignee, call type, field injection and friends.
pub const ACTIVITI_NS: &str = "http://activiti.org/bpmn";
pub const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";
