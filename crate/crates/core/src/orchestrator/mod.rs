//! The cooperation loop: master first, helpers on request, injection, restart or continue.

pub mod clock;
pub mod config;
pub mod handles;

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::helpers::{HelperResult, HelperStatus};
use crate::task::Task;
use crate::verdict::{Verdict, VerdictKind};
use crate::witness::{is_trivial_witness, Witness};

pub use clock::{cpu_seconds, Clock, VirtualClock, WallClock};
pub use config::{ConfigError, CoopConfig, ExternalEntry, HelperChoice};
pub use handles::{
    BuiltinHelper, EngineMaster, ExternalHelper, HelperHandle, MasterHandle, Script,
    ScriptedHelper, ScriptedMaster,
};

/// Coordinator options, with times in clock seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct Options {
    pub restart_master: bool,
    pub term_after_first_inv: bool,
    pub timer_m: f64,
    pub timeout_h: f64,
    pub timeout: Option<f64>,
}

impl From<&CoopConfig> for Options {
    fn from(c: &CoopConfig) -> Self {
        Options {
            restart_master: c.restart_master,
            term_after_first_inv: c.term_after_first_inv,
            timer_m: c.timer_m,
            timeout_h: c.timeout_h,
            timeout: Some(c.timeout),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    MasterStarted { timer: Option<f64> },
    HelpRequested,
    HelperStarted(String),
    HelperFinished { helper: String, status: String },
    TrivialIgnored(String),
    WitnessCollected(String),
    HelperStopped(String),
    HelperTimedOut(String),
    MasterFinished(VerdictKind),
    MasterStopped,
    Injected(usize),
    MasterRestarted,
    HelpClosed,
    TimedOut,
    Cancelled,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::MasterStarted { timer: Some(t) } => write!(f, "master started (timer {t}s)"),
            EventKind::MasterStarted { timer: None } => write!(f, "master started"),
            EventKind::HelpRequested => write!(f, "master requests help"),
            EventKind::HelperStarted(h) => write!(f, "helper {h} started"),
            EventKind::HelperFinished { helper, status } => write!(f, "helper {helper} {status}"),
            EventKind::TrivialIgnored(h) => write!(f, "trivial result of {h} ignored"),
            EventKind::WitnessCollected(h) => write!(f, "witness of {h} collected"),
            EventKind::HelperStopped(h) => write!(f, "helper {h} stopped"),
            EventKind::HelperTimedOut(h) => write!(f, "helper {h} timed out"),
            EventKind::MasterFinished(k) => write!(f, "master finished: {k}"),
            EventKind::MasterStopped => write!(f, "master stopped"),
            EventKind::Injected(n) => write!(f, "{n} witnesses injected"),
            EventKind::MasterRestarted => write!(f, "master restarted"),
            EventKind::HelpClosed => write!(f, "help closed"),
            EventKind::TimedOut => write!(f, "task timeout"),
            EventKind::Cancelled => write!(f, "cancelled"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub run_name: String,
    pub verdict: Verdict,
    /// Until help was requested or the master finished.
    pub master_solo: f64,
    pub helper_phase: f64,
    pub post_injection: f64,
    pub helpers: Vec<(String, HelperResult)>,
    pub witnesses_used: Vec<Witness>,
    pub events: Vec<Event>,
    pub wall: f64,
    pub cpu: f64,
    pub master_log: Vec<String>,
}

impl RunReport {
    pub fn event_lines(&self) -> Vec<String> {
        self.events
            .iter()
            .map(|e| format!("{:>8.3} {}", e.time, e.kind))
            .collect()
    }
}

/// Cancels a running cooperation from another thread.
#[derive(Clone, Debug, Default)]
pub struct StopHandle(Arc<AtomicBool>);

impl StopHandle {
    pub fn stop(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_stopped(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

struct Slot {
    handle: Box<dyn HelperHandle>,
    started: f64,
    timeout: f64,
    result: Option<HelperResult>,
}

pub struct Cooperation<'a> {
    task: Task,
    opts: Options,
    run_name: String,
    master: Box<dyn MasterHandle>,
    helpers: Vec<Box<dyn HelperHandle>>,
    clock: &'a dyn Clock,
    stop: StopHandle,
    events: Vec<Event>,
}

enum Phase {
    Go,
    End(Verdict),
}

impl<'a> Cooperation<'a> {
    pub fn new(
        task: &Task,
        opts: Options,
        master: Box<dyn MasterHandle>,
        helpers: Vec<Box<dyn HelperHandle>>,
        clock: &'a dyn Clock,
    ) -> Self {
        Cooperation {
            task: task.clone(),
            opts,
            run_name: String::new(),
            master,
            helpers,
            clock,
            stop: StopHandle::default(),
            events: Vec::new(),
        }
    }

    /// Real master and helpers as listed in `config`.
    pub fn from_config(
        task: &Task,
        config: &CoopConfig,
        clock: &'a dyn Clock,
    ) -> Result<Self, ConfigError> {
        let kind = config.master_kind()?;
        let request_on_stall = config.request_on_stall;
        let master = EngineMaster::with_factory(task, kind.short(), move |t| {
            kind.engine_with(t, request_on_stall)
        });
        let helpers: Vec<Box<dyn HelperHandle>> = config
            .helper_roster()?
            .into_iter()
            .map(|h| -> Box<dyn HelperHandle> {
                match h {
                    HelperChoice::Builtin(t) => Box::new(BuiltinHelper::new(t)),
                    HelperChoice::External(s) => Box::new(ExternalHelper::new(s)),
                }
            })
            .collect();
        let mut c = Cooperation::new(task, config.into(), Box::new(master), helpers, clock);
        c.run_name = config.run_name();
        Ok(c)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.run_name = name.into();
        self
    }

    pub fn stop_handle(&self) -> StopHandle {
        self.stop.clone()
    }

    fn log(&mut self, kind: EventKind) {
        let time = self.clock.now();
        log::info!("{time:.3} {kind}");
        self.events.push(Event { time, kind });
    }

    fn remaining(&self) -> Option<f64> {
        self.opts.timeout.map(|t| (t - self.clock.now()).max(0.0))
    }

    /// Checks global limits; on expiry everything is stopped.
    fn interrupted(&mut self, slots: &mut [Slot]) -> Option<Verdict> {
        let cancelled = self.stop.is_stopped();
        let expired = self.remaining().is_some_and(|r| r <= 0.0);
        if !cancelled && !expired {
            return None;
        }
        let now = self.clock.now();
        for s in slots.iter_mut().filter(|s| s.result.is_none()) {
            s.handle.stop();
            let name = s.handle.name();
            s.result = Some(HelperResult {
                status: HelperStatus::Stopped,
                ..HelperResult::failed("", now - s.started)
            });
            self.log(EventKind::HelperStopped(name));
        }
        self.master.stop(now);
        if cancelled {
            self.log(EventKind::Cancelled);
            Some(Verdict::Unknown("stopped".into()))
        } else {
            self.log(EventKind::TimedOut);
            Some(Verdict::Timeout)
        }
    }

    fn master_done(&mut self) -> Option<Verdict> {
        let now = self.clock.now();
        let v = self.master.poll(now)?;
        self.log(EventKind::MasterFinished(v.kind()));
        Some(v)
    }

    pub fn run(mut self) -> RunReport {
        let cpu0 = cpu_seconds();
        let t0 = self.clock.now();
        let mut slots: Vec<Slot> = Vec::new();
        let mut witnesses: Vec<Witness> = Vec::new();
        let (mut solo_end, mut helpers_end) = (None, None);
        let verdict = self.drive(&mut slots, &mut witnesses, &mut solo_end, &mut helpers_end);
        let end = self.clock.now();
        let solo_end = solo_end.unwrap_or(end);
        let helpers_end = helpers_end.unwrap_or(end.max(solo_end));
        RunReport {
            run_name: self.run_name.clone(),
            verdict,
            master_solo: solo_end - t0,
            helper_phase: helpers_end - solo_end,
            post_injection: end - helpers_end,
            helpers: slots
                .into_iter()
                .map(|s| {
                    let name = s.handle.name();
                    (name, s.result.unwrap_or_else(|| HelperResult::failed("no result", 0.0)))
                })
                .collect(),
            witnesses_used: witnesses,
            events: self.events,
            wall: end - t0,
            cpu: cpu_seconds() - cpu0,
            master_log: self.master.log(),
        }
    }

    fn drive(
        &mut self,
        slots: &mut Vec<Slot>,
        witnesses: &mut Vec<Witness>,
        solo_end: &mut Option<f64>,
        helpers_end: &mut Option<f64>,
    ) -> Verdict {
        let has_helpers = !self.helpers.is_empty();
        let timer = has_helpers.then_some(self.opts.timer_m);
        let now = self.clock.now();
        let budget = self.remaining();
        self.master.start(now, timer, has_helpers, budget);
        self.log(EventKind::MasterStarted { timer });
        // wait for a solution or a request for help
        let mut early: Option<Verdict> = None;
        loop {
            if let Some(v) = self.interrupted(slots) {
                return v;
            }
            if let Some(v) = self.master_done() {
                if v.is_conclusive() || !has_helpers {
                    *solo_end = Some(self.clock.now());
                    return v;
                }
                early = Some(v);
                break;
            }
            if self.master.requests_help(self.clock.now()) {
                break;
            }
            self.clock.tick();
        }
        *solo_end = Some(self.clock.now());
        self.log(EventKind::HelpRequested);
        for h in std::mem::take(&mut self.helpers) {
            slots.push(Slot {
                handle: h,
                started: 0.0,
                timeout: 0.0,
                result: None,
            });
        }
        for i in 0..slots.len() {
            let now = self.clock.now();
            let timeout = match self.remaining() {
                Some(r) => self.opts.timeout_h.min(r),
                None => self.opts.timeout_h,
            };
            slots[i].started = now;
            slots[i].timeout = timeout;
            slots[i].handle.start(&self.task, now, timeout);
            let name = slots[i].handle.name();
            self.log(EventKind::HelperStarted(name));
        }
        match self.helper_phase(slots, witnesses, &mut early) {
            Phase::End(v) => return v,
            Phase::Go => {}
        }
        *helpers_end = Some(self.clock.now());
        let now = self.clock.now();
        if witnesses.is_empty() {
            self.master.close_help();
            self.log(EventKind::HelpClosed);
            if let Some(v) = early {
                return v;
            }
        } else if self.opts.restart_master || early.is_some() {
            if early.is_none() {
                self.master.stop(now);
                self.log(EventKind::MasterStopped);
            }
            self.master.inject(now, witnesses.clone());
            self.log(EventKind::Injected(witnesses.len()));
            let budget = self.remaining();
            self.master.start(now, None, false, budget);
            self.log(EventKind::MasterRestarted);
        } else {
            self.master.inject(now, witnesses.clone());
            self.log(EventKind::Injected(witnesses.len()));
            self.master.close_help();
            self.log(EventKind::HelpClosed);
        }
        loop {
            if let Some(v) = self.interrupted(slots) {
                return v;
            }
            if let Some(v) = self.master_done() {
                return v;
            }
            self.clock.tick();
        }
    }

    fn helper_phase(
        &mut self,
        slots: &mut [Slot],
        witnesses: &mut Vec<Witness>,
        early: &mut Option<Verdict>,
    ) -> Phase {
        loop {
            if let Some(v) = self.interrupted(slots) {
                return Phase::End(v);
            }
            let mut first_found = false;
            for i in 0..slots.len() {
                if slots[i].result.is_some() {
                    continue;
                }
                let now = self.clock.now();
                let name = slots[i].handle.name();
                if let Some(r) = slots[i].handle.poll(now) {
                    self.log(EventKind::HelperFinished {
                        helper: name.clone(),
                        status: r.status.to_string(),
                    });
                    if r.status == HelperStatus::Completed {
                        match &r.witness {
                            Some(w) if !is_trivial_witness(w) && !r.invariants.is_empty() => {
                                witnesses.push(w.clone());
                                self.log(EventKind::WitnessCollected(name));
                                first_found = true;
                            }
                            _ => self.log(EventKind::TrivialIgnored(name)),
                        }
                    }
                    slots[i].result = Some(r);
                } else if now - slots[i].started >= slots[i].timeout {
                    slots[i].handle.stop();
                    slots[i].result = Some(HelperResult {
                        status: HelperStatus::TimedOut,
                        ..HelperResult::failed("", now - slots[i].started)
                    });
                    self.log(EventKind::HelperTimedOut(name));
                }
                if first_found && self.opts.term_after_first_inv {
                    break;
                }
            }
            if first_found && self.opts.term_after_first_inv {
                let now = self.clock.now();
                for s in slots.iter_mut().filter(|s| s.result.is_none()) {
                    s.handle.stop();
                    let name = s.handle.name();
                    s.result = Some(HelperResult {
                        status: HelperStatus::Stopped,
                        ..HelperResult::failed("", now - s.started)
                    });
                    self.log(EventKind::HelperStopped(name));
                }
            }
            if early.is_none() {
                if let Some(v) = self.master_done() {
                    if v.is_conclusive() {
                        let now = self.clock.now();
                        for s in slots.iter_mut().filter(|s| s.result.is_none()) {
                            s.handle.stop();
                            let name = s.handle.name();
                            s.result = Some(HelperResult {
                                status: HelperStatus::Stopped,
                                ..HelperResult::failed("", now - s.started)
                            });
                            self.log(EventKind::HelperStopped(name));
                        }
                        return Phase::End(v);
                    }
                    *early = Some(v);
                }
            }
            if slots.iter().all(|s| s.result.is_some()) {
                return Phase::Go;
            }
            self.clock.tick();
        }
    }
}

/// Runs `task` under `config` on the wall clock.
pub fn run_cooperative(task: &Task, config: &CoopConfig) -> Result<RunReport, ConfigError> {
    let clock = WallClock::new();
    Ok(Cooperation::from_config(task, config, &clock)?.run())
}
