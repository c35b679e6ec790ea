//! Built-in invariant generators.
//!
//! Interval and affine results are sound by construction; template results are guesses
//! screened only by concrete sampling. Masters treat all of them as candidates.

pub mod affine;
pub mod interval;
pub mod template;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::AtomicBool;
use std::time::Instant;

use crate::frontend::LocId;
use crate::logic::BExp;
use crate::task::Task;
use crate::witness::{LocatedInvariant, Witness};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HelperStatus {
    Completed,
    TimedOut,
    Failed(String),
    Stopped,
}

impl std::fmt::Display for HelperStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HelperStatus::Completed => f.write_str("completed"),
            HelperStatus::TimedOut => f.write_str("timed-out"),
            HelperStatus::Failed(why) => write!(f, "failed ({why})"),
            HelperStatus::Stopped => f.write_str("stopped"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HelperResult {
    pub invariants: Vec<LocatedInvariant>,
    /// Seconds.
    pub elapsed: f64,
    pub status: HelperStatus,
    pub witness: Option<Witness>,
    pub diagnostics: Vec<String>,
}

impl HelperResult {
    pub fn failed(why: impl Into<String>, elapsed: f64) -> Self {
        HelperResult {
            invariants: Vec::new(),
            elapsed,
            status: HelperStatus::Failed(why.into()),
            witness: None,
            diagnostics: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Technique {
    Interval,
    Affine,
    Template,
}

impl Technique {
    pub const ALL: [Technique; 3] = [Technique::Interval, Technique::Affine, Technique::Template];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Interval => "interval",
            Technique::Affine => "affine",
            Technique::Template => "template",
        }
    }

    /// Abbreviation used in run names.
    pub fn short(self) -> &'static str {
        match self {
            Technique::Interval => "int",
            Technique::Affine => "aff",
            Technique::Template => "tpl",
        }
    }
}

impl std::str::FromStr for Technique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Technique::ALL
            .into_iter()
            .find(|t| t.name() == s || t.short() == s)
            .ok_or_else(|| format!("unknown helper technique `{s}`"))
    }
}

/// Invariants of one technique, or a failure message.
pub fn invariants_of(
    technique: Technique,
    task: &Task,
    stop: &AtomicBool,
) -> Result<Vec<LocatedInvariant>, String> {
    match technique {
        Technique::Interval => Ok(interval::loop_head_invariants(&task.cfa)),
        Technique::Affine => Ok(affine::loop_head_invariants::<num_rational::Rational64>(&task.cfa)),
        Technique::Template => {
            let out = template::template_guess_check(
                &task.cfa,
                &task.properties,
                &template::TemplateOptions::default(),
                stop,
            );
            match out.violation {
                Some(msg) => Err(msg),
                None => Ok(out.invariants),
            }
        }
    }
}

/// Runs a built-in technique in the calling thread and packages its output as a witness.
pub fn run_builtin(technique: Technique, task: &Task, stop: &AtomicBool) -> HelperResult {
    let start = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(|| invariants_of(technique, task, stop)));
    let elapsed = start.elapsed().as_secs_f64();
    if stop.load(std::sync::atomic::Ordering::SeqCst) {
        return HelperResult {
            status: HelperStatus::Stopped,
            ..HelperResult::failed("", elapsed)
        };
    }
    match r {
        Ok(Ok(invariants)) => {
            let witness = witness_for(task, &invariants, technique.name());
            HelperResult {
                invariants,
                elapsed,
                status: HelperStatus::Completed,
                witness: Some(witness),
                diagnostics: Vec::new(),
            }
        }
        Ok(Err(msg)) => HelperResult::failed(msg, elapsed),
        Err(_) => HelperResult::failed("analysis panicked", elapsed),
    }
}

/// Conjoins invariants per loop head into a skeleton witness of the task's CFA.
pub fn witness_for(task: &Task, invariants: &[LocatedInvariant], producer: &str) -> Witness {
    let mut map: BTreeMap<LocId, Vec<BExp>> = BTreeMap::new();
    for li in invariants {
        let list = map.entry(li.loop_head).or_default();
        if !list.contains(&li.invariant) {
            list.push(li.invariant.clone());
        }
    }
    let map = map.into_iter().map(|(l, v)| (l, BExp::conj(v))).collect();
    Witness::from_cfa(&task.cfa, &map, producer)
}
