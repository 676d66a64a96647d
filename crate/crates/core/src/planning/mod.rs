//! Lifted STRIPS tasks: PDDL-subset ingestion, grounding and transitions.

pub mod pddl;
mod sexpr;
mod task;

use thiserror::Error;

pub use pddl::{
    parse_domain, ActionSchema, Domain, Fact, Predicate, Problem, SchemaAtom, Term, TypeId, Types,
    OBJECT,
};
pub use task::{is_goal, AtomId, GroundAction, GroundAtom, ObjId, State, Task};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanningError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("unsupported PDDL feature `{keyword}` at {line}:{col}")]
    Unsupported {
        keyword: String,
        line: usize,
        col: usize,
    },
    #[error("undeclared {kind} `{name}`")]
    Undeclared { kind: &'static str, name: String },
    #[error("predicate `{pred}` takes {expected} arguments, got {found}")]
    Arity {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("object `{object}` has type {found}, expected {expected}")]
    TypeMismatch {
        object: String,
        expected: String,
        found: String,
    },
    #[error("object `{name}` declared twice")]
    Duplicate { name: String },
    #[error("action {action} is not applicable")]
    Inapplicable { action: String },
}

/// Parses a problem file against `domain`.
pub fn parse_problem(src: &str, domain: std::sync::Arc<Domain>) -> Result<Task, PlanningError> {
    Task::parse(domain, src)
}
