use std::fmt;

use thiserror::Error;

use super::ast::Loc;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("duplicate mode {0}")]
    DuplicateMode(u32),
    #[error("unknown mode {0}")]
    UnknownMode(u32),
    #[error("missing init block")]
    MissingInit,
    #[error("missing goal block")]
    MissingGoal,
    #[error("cyclic macro definition involving `{0}`")]
    CyclicMacro(String),
    #[error("macro `{0}` defined more than once")]
    RedefinedMacro(String),
    #[error("invalid declaration: {0}")]
    InvalidDeclaration(String),
    #[error("unknown test `{0}`")]
    UnknownTestName(String),
    #[error("`{name}` expects {expected} parameters, got {found}")]
    ArityError {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("parameter out of range: {0}")]
    ParameterRangeError(String),
}

/// A diagnostic anchored at the position where the offending token begins.
#[derive(Debug, Clone, PartialEq)]
pub struct DslError {
    pub origin: String,
    pub loc: Loc,
    pub kind: DslErrorKind,
}

impl DslError {
    pub fn new(origin: &str, loc: Loc, kind: DslErrorKind) -> Self {
        DslError {
            origin: origin.to_string(),
            loc,
            kind,
        }
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.origin, self.loc, self.kind)
    }
}

impl std::error::Error for DslError {}
