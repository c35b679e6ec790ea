//! Bundled verification tasks and their expected verdicts.
//!
//! A corpus is a directory of `.mc` programs plus `manifest.csv`:
//!
//! ```text
//! file,expected
//! countdown.mc,true
//! countdown_mutant.mc,false
//! ```

use std::path::{Path, PathBuf};

use coop_core::semantics::brute_force_all;
use coop_core::task::{Task, TaskError};
use coop_core::VerdictKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MANIFEST: &str = "manifest.csv";

/// States the oracle may visit per property.
pub const ORACLE_BUDGET: usize = 1 << 22;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("bad manifest: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub file: String,
    pub expected: VerdictKind,
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub dir: PathBuf,
    pub entries: Vec<CorpusEntry>,
}

/// One line of a `corpus check`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckRow {
    pub file: String,
    pub expected: VerdictKind,
    pub oracle: VerdictKind,
}

impl CheckRow {
    pub fn agrees(&self) -> bool {
        self.expected == self.oracle
    }
}

/// The corpus shipped with this crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest, CorpusError> {
        let path = dir.join(MANIFEST);
        let file = std::fs::File::open(&path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut rd = csv::Reader::from_reader(file);
        let entries = rd.deserialize().collect::<Result<Vec<CorpusEntry>, _>>()?;
        Ok(Manifest {
            dir: dir.to_path_buf(),
            entries,
        })
    }

    pub fn bundled() -> Result<Manifest, CorpusError> {
        Manifest::load(&bundled_dir())
    }

    pub fn write(&self) -> Result<(), CorpusError> {
        let mut wr = csv::Writer::from_path(self.dir.join(MANIFEST))?;
        for e in &self.entries {
            wr.serialize(e)?;
        }
        wr.flush().map_err(|source| CorpusError::Io {
            path: self.dir.join(MANIFEST).display().to_string(),
            source,
        })?;
        Ok(())
    }

    pub fn path(&self, e: &CorpusEntry) -> PathBuf {
        self.dir.join(&e.file)
    }

    pub fn task(&self, e: &CorpusEntry, width: u32) -> Result<Task, CorpusError> {
        Ok(Task::load(&self.path(e), width)?)
    }

    /// Re-derives every expected verdict with the explicit-state oracle.
    pub fn check(&self, width: u32) -> Result<Vec<CheckRow>, CorpusError> {
        self.entries
            .iter()
            .map(|e| {
                let t = self.task(e, width)?;
                Ok(CheckRow {
                    file: e.file.clone(),
                    expected: e.expected,
                    oracle: oracle(&t),
                })
            })
            .collect()
    }
}

pub fn oracle(task: &Task) -> VerdictKind {
    brute_force_all(&task.cfa, &task.properties, ORACLE_BUDGET).kind()
}
