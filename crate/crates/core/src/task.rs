//! A verification task: program, its CFA and the properties to check.

use std::path::Path;

use thiserror::Error;

use crate::frontend::{
    extract_property, parse_with_width, Cfa, FrontendError, Program, SafetyProperty,
};

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Frontend(#[from] FrontendError),
}

#[derive(Clone, Debug)]
pub struct Task {
    pub program: Program,
    pub cfa: Cfa,
    pub properties: Vec<SafetyProperty>,
}

impl Task {
    pub fn new(program: Program, width: u32) -> Result<Task, TaskError> {
        let cfa = parse_with_width(&program, width)?;
        let properties = extract_property(&cfa)?;
        Ok(Task {
            program,
            cfa,
            properties,
        })
    }

    pub fn from_text(name: &str, text: &str, width: u32) -> Result<Task, TaskError> {
        Task::new(Program::new(name, text), width)
    }

    pub fn load(path: &Path, width: u32) -> Result<Task, TaskError> {
        let program = Program::load(path).map_err(|source| TaskError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Task::new(program, width)
    }

    pub fn width(&self) -> u32 {
        self.cfa.width()
    }
}
