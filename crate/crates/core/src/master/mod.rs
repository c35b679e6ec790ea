//! Master verifiers and the control channel shared with the orchestrator.

pub mod kind;
pub mod predabs;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::frontend::Cfa;
use crate::logic::{is_trivial, split_conjunctions, Checker};
use crate::task::Task;
use crate::verdict::Verdict;
use crate::witness::{match_to_cfa, LocatedInvariant, Witness};

pub use kind::{KInduction, KindOptions};
pub use predabs::{PredAbs, PredAbsOptions};

/// Cross-worker entry points of a running master.
#[derive(Clone, Debug)]
pub struct Control {
    pub stop: Arc<AtomicBool>,
    pub inbox: Arc<Mutex<Vec<Witness>>>,
    /// While set, a master that has run out of ideas waits for injected witnesses
    /// instead of giving up.
    pub help_open: Arc<AtomicBool>,
    /// Raised by the master itself when it wants help before its timer elapses.
    pub help_wanted: Arc<AtomicBool>,
    pub deadline: Option<Instant>,
    pub log: Arc<Mutex<Vec<String>>>,
}

impl Control {
    pub fn standalone(timeout: Option<Duration>) -> Control {
        Control {
            stop: Arc::new(AtomicBool::new(false)),
            inbox: Arc::new(Mutex::new(Vec::new())),
            help_open: Arc::new(AtomicBool::new(false)),
            help_wanted: Arc::new(AtomicBool::new(false)),
            deadline: timeout.map(|t| Instant::now() + t),
            log: Arc::new(Mutex::new(Vec::new())),
        }
    }

    pub fn stopped(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub fn help_open(&self) -> bool {
        self.help_open.load(Ordering::SeqCst)
    }

    pub fn inject(&self, ws: impl IntoIterator<Item = Witness>) {
        self.inbox.lock().expect("inbox").extend(ws);
    }

    pub fn take_inbox(&self) -> Vec<Witness> {
        std::mem::take(&mut *self.inbox.lock().expect("inbox"))
    }

    pub fn inbox_empty(&self) -> bool {
        self.inbox.lock().expect("inbox").is_empty()
    }

    pub fn note(&self, line: String) {
        log::debug!("{line}");
        self.log.lock().expect("log").push(line);
    }

    pub fn checker(&self) -> Checker {
        Checker::new()
            .with_stop(self.stop.clone())
            .with_deadline(self.deadline)
    }

    /// Verdict to report when interrupted.
    pub fn interrupted_verdict(&self) -> Verdict {
        if self.stopped() {
            Verdict::Unknown("stopped".into())
        } else {
            Verdict::Timeout
        }
    }
}

/// A master verification technique.
pub trait Engine: Send {
    fn name(&self) -> &'static str;
    fn run(&mut self, ctl: &Control) -> Verdict;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MasterKind {
    KInduction,
    PredAbs,
}

impl MasterKind {
    pub fn short(self) -> &'static str {
        match self {
            MasterKind::KInduction => "kInd",
            MasterKind::PredAbs => "predAbs",
        }
    }

    pub fn engine(self, task: &Task) -> Box<dyn Engine> {
        self.engine_with(task, false)
    }

    pub fn engine_with(self, task: &Task, request_on_stall: bool) -> Box<dyn Engine> {
        match self {
            MasterKind::KInduction => Box::new(KInduction::new(
                task,
                KindOptions {
                    request_on_stall,
                    ..KindOptions::default()
                },
            )),
            MasterKind::PredAbs => Box::new(PredAbs::new(
                task,
                PredAbsOptions {
                    request_on_stall,
                    ..PredAbsOptions::default()
                },
            )),
        }
    }
}

impl std::str::FromStr for MasterKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kind" | "k-induction" | "kinduction" => Ok(MasterKind::KInduction),
            "predabs" | "pred" | "predicate-abstraction" => Ok(MasterKind::PredAbs),
            _ => Err(format!("unknown master `{s}` (expected kind or predabs)")),
        }
    }
}

impl std::fmt::Display for MasterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short())
    }
}

/// Matches witnesses to the CFA and splits their invariants into non-trivial conjuncts.
pub fn witness_conjuncts(cfa: &Cfa, ws: &[Witness], ctl: &Control) -> Vec<LocatedInvariant> {
    let mut out: Vec<LocatedInvariant> = Vec::new();
    for w in ws {
        let m = match_to_cfa(w, cfa, false);
        for d in m.diagnostics {
            ctl.note(format!("witness from {}: {d}", w.metadata.producer));
        }
        for li in m.invariants {
            for c in split_conjunctions(&li.invariant) {
                if is_trivial(&c) {
                    continue;
                }
                let item = LocatedInvariant {
                    loop_head: li.loop_head,
                    invariant: c,
                    source: li.source.clone(),
                };
                if !out
                    .iter()
                    .any(|o| o.loop_head == item.loop_head && o.invariant == item.invariant)
                {
                    out.push(item);
                }
            }
        }
    }
    out
}
