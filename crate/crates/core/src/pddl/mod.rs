//! Reader and writer for the `.bpddl` dialect: a typed STRIPS subset of
//! PDDL with `:belief-predicates`, `(unknown ...)` and `:observe` clauses.

mod parse;
mod sexpr;
mod write;

use thiserror::Error;

pub use parse::{parse_domain, parse_formula, parse_goal, parse_ground_atom, parse_problem};
pub use sexpr::{read_all, Pos, Sexp};
pub use write::{write_domain, write_problem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("{pos}: expected {expected}, found {found}")]
    Parse { pos: Pos, expected: String, found: String },
    #[error("{pos}: undeclared {kind} `{name}`")]
    Undeclared { pos: Pos, kind: &'static str, name: String },
    #[error("{pos}: goal error: {message}")]
    GoalType { pos: Pos, message: String },
    #[error("{pos}: {message}")]
    Invalid { pos: Pos, message: String },
}

impl PddlError {
    pub fn pos(&self) -> Pos {
        match self {
            PddlError::Parse { pos, .. }
            | PddlError::Undeclared { pos, .. }
            | PddlError::GoalType { pos, .. }
            | PddlError::Invalid { pos, .. } => *pos,
        }
    }
}
