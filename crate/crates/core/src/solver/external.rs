//! Delegation to an external δ-decision procedure.

use std::io::Write;
use std::process::Command;

use thiserror::Error;

use super::Verdict;
use crate::dsl::pretty_print;
use crate::model::ConcreteModel;

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("could not run `{program}`: {source}")]
    Spawn { program: String, source: std::io::Error },
    #[error("could not write the model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("`{program}` answered neither delta-sat nor unsat: {output}")]
    UnrecognizedAnswer { program: String, output: String },
}

/// Command invoked as `program [args..] <model-file> <k> <delta>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalSolver {
    pub fn new(program: impl Into<String>) -> ExternalSolver {
        ExternalSolver { program: program.into(), args: Vec::new() }
    }

    pub fn solve(&self, m: &ConcreteModel, k: usize, delta: f64) -> Result<Verdict, ExternalError> {
        let mut file = tempfile::Builder::new().suffix(".drh").tempfile()?;
        file.write_all(pretty_print(&m.to_ast()).content.as_bytes())?;
        file.flush()?;
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(file.path())
            .arg(k.to_string())
            .arg(delta.to_string())
            .output()
            .map_err(|source| ExternalError::Spawn { program: self.program.clone(), source })?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        if stdout.contains("delta-sat") {
            Ok(Verdict::DeltaSat(Vec::new()))
        } else if stdout.contains("unsat") {
            Ok(Verdict::Unsat)
        } else {
            let stderr = String::from_utf8_lossy(&out.stderr);
            Err(ExternalError::UnrecognizedAnswer { program: self.program.clone(), output: format!("{}{}", stdout.trim(), stderr.trim()) })
        }
    }
}
