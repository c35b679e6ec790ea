//! Master and helper workers as seen by the coordinator.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{channel, Receiver, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::exchange::{run_external_helper, ExternalHelperSpec};
use crate::frontend::LocId;
use crate::helpers::{run_builtin, witness_for, HelperResult, HelperStatus, Technique};
use crate::logic::BExp;
use crate::master::{Control, Engine, MasterKind};
use crate::task::Task;
use crate::verdict::Verdict;
use crate::witness::{match_to_cfa, LocatedInvariant, Witness};

pub trait MasterHandle: Send {
    fn name(&self) -> String;
    /// Starts (or restarts) the master. `timer` is the help timer in clock seconds;
    /// `budget` the remaining task time.
    fn start(&mut self, now: f64, timer: Option<f64>, help_open: bool, budget: Option<f64>);
    /// The verdict once the master has finished.
    fn poll(&mut self, now: f64) -> Option<Verdict>;
    fn requests_help(&self, now: f64) -> bool;
    fn inject(&mut self, now: f64, ws: Vec<Witness>);
    /// No more witnesses will come.
    fn close_help(&mut self);
    fn stop(&mut self, now: f64);
    /// Log lines of the current or last run.
    fn log(&self) -> Vec<String> {
        Vec::new()
    }
}

pub trait HelperHandle: Send {
    fn name(&self) -> String;
    fn start(&mut self, task: &Task, now: f64, timeout: f64);
    fn poll(&mut self, now: f64) -> Option<HelperResult>;
    fn stop(&mut self);
}

/// A master engine on its own thread.
pub struct EngineMaster {
    task: Task,
    make: Box<dyn Fn(&Task) -> Box<dyn Engine> + Send>,
    label: String,
    ctl: Option<Control>,
    pending: Vec<Witness>,
    started_at: f64,
    timer: Option<f64>,
    thread: Option<JoinHandle<()>>,
    rx: Option<Receiver<Verdict>>,
    done: Option<Verdict>,
    log: Arc<Mutex<Vec<String>>>,
}

impl EngineMaster {
    pub fn new(task: &Task, kind: MasterKind) -> Self {
        Self::with_factory(task, kind.short(), move |t| kind.engine(t))
    }

    pub fn with_factory(
        task: &Task,
        label: &str,
        make: impl Fn(&Task) -> Box<dyn Engine> + Send + 'static,
    ) -> Self {
        EngineMaster {
            task: task.clone(),
            make: Box::new(make),
            label: label.to_string(),
            ctl: None,
            pending: Vec::new(),
            started_at: 0.0,
            timer: None,
            thread: None,
            rx: None,
            done: None,
            log: Arc::new(Mutex::new(Vec::new())),
        }
    }
}

impl MasterHandle for EngineMaster {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn start(&mut self, now: f64, timer: Option<f64>, help_open: bool, budget: Option<f64>) {
        self.halt();
        let mut ctl = Control::standalone(budget.map(Duration::from_secs_f64));
        ctl.log = self.log.clone();
        ctl.help_open.store(help_open, Ordering::SeqCst);
        ctl.inject(std::mem::take(&mut self.pending));
        let mut engine = (self.make)(&self.task);
        let (tx, rx) = channel();
        let c = ctl.clone();
        self.thread = Some(std::thread::spawn(move || {
            let v = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| engine.run(&c)))
                .unwrap_or_else(|_| Verdict::Unknown("master crashed".into()));
            let _ = tx.send(v);
        }));
        self.rx = Some(rx);
        self.ctl = Some(ctl);
        self.started_at = now;
        self.timer = timer;
        self.done = None;
    }

    fn poll(&mut self, _now: f64) -> Option<Verdict> {
        if self.done.is_none() {
            if let Some(rx) = &self.rx {
                match rx.try_recv() {
                    Ok(v) => self.done = Some(v),
                    Err(TryRecvError::Disconnected) => {
                        self.done = Some(Verdict::Unknown("master vanished".into()))
                    }
                    Err(TryRecvError::Empty) => {}
                }
                if self.done.is_some() {
                    if let Some(t) = self.thread.take() {
                        let _ = t.join();
                    }
                }
            }
        }
        self.done.clone()
    }

    fn requests_help(&self, now: f64) -> bool {
        let Some(ctl) = &self.ctl else {
            return false;
        };
        let timer = self.timer.is_some_and(|t| now - self.started_at >= t);
        self.timer.is_some() && (timer || ctl.help_wanted.load(Ordering::SeqCst))
    }

    fn inject(&mut self, _now: f64, ws: Vec<Witness>) {
        match (&self.ctl, &self.done) {
            (Some(ctl), None) => ctl.inject(ws),
            _ => self.pending.extend(ws),
        }
    }

    fn close_help(&mut self) {
        self.timer = None;
        if let Some(ctl) = &self.ctl {
            ctl.help_open.store(false, Ordering::SeqCst);
        }
    }

    fn stop(&mut self, _now: f64) {
        self.halt();
    }

    fn log(&self) -> Vec<String> {
        self.log.lock().expect("log").clone()
    }
}

impl EngineMaster {
    fn halt(&mut self) {
        if let Some(ctl) = &self.ctl {
            ctl.stop.store(true, Ordering::SeqCst);
            // witnesses not yet consumed survive a restart
            self.pending.extend(ctl.take_inbox());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
        self.rx = None;
    }
}

impl Drop for EngineMaster {
    fn drop(&mut self) {
        self.halt();
    }
}

/// Scripted master for exercising the coordinator: it never solves on its own, and
/// reports `True` once it runs with an injected witness carrying `target`.
pub struct ScriptedMaster {
    target: BExp,
    task: Task,
    running: bool,
    started_at: f64,
    timer: Option<f64>,
    help_open: bool,
    inbox: Vec<Witness>,
    /// Seconds the master needs once it has the invariant.
    pub solve_delay: f64,
    have_target_since: Option<f64>,
    /// `(time, what)` for each start, stop and injection.
    pub history: Arc<Mutex<Vec<(f64, String)>>>,
    done: Option<Verdict>,
}

impl ScriptedMaster {
    pub fn new(task: &Task, target: BExp) -> Self {
        ScriptedMaster {
            target,
            task: task.clone(),
            running: false,
            started_at: 0.0,
            timer: None,
            help_open: false,
            inbox: Vec::new(),
            solve_delay: 1.0,
            have_target_since: None,
            history: Arc::new(Mutex::new(Vec::new())),
            done: None,
        }
    }

    fn note(&self, t: f64, what: String) {
        self.history.lock().expect("history").push((t, what));
    }

    fn has_target(&self) -> bool {
        self.inbox.iter().any(|w| {
            match_to_cfa(w, &self.task.cfa, true)
                .invariants
                .iter()
                .any(|li| crate::logic::split_conjunctions(&li.invariant).contains(&self.target))
        })
    }
}

impl MasterHandle for ScriptedMaster {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn start(&mut self, now: f64, timer: Option<f64>, help_open: bool, _budget: Option<f64>) {
        self.running = true;
        self.started_at = now;
        self.timer = timer;
        self.help_open = help_open;
        self.done = None;
        self.have_target_since = self.has_target().then_some(now);
        self.note(now, "start".into());
    }

    fn poll(&mut self, now: f64) -> Option<Verdict> {
        if self.running && self.done.is_none() {
            if let Some(t) = self.have_target_since {
                if now - t >= self.solve_delay {
                    self.done = Some(Verdict::True(None));
                    self.running = false;
                    self.note(now, "solved".into());
                }
            } else if !self.help_open && self.timer.is_none() {
                self.done = Some(Verdict::Unknown("no invariant".into()));
                self.running = false;
            }
        }
        self.done.clone()
    }

    fn requests_help(&self, now: f64) -> bool {
        self.running && self.timer.is_some_and(|t| now - self.started_at >= t)
    }

    fn inject(&mut self, now: f64, ws: Vec<Witness>) {
        self.inbox.extend(ws);
        if self.running && self.has_target() && self.have_target_since.is_none() {
            self.have_target_since = Some(now);
        }
        self.note(now, format!("inject {}", self.inbox.len()));
    }

    fn close_help(&mut self) {
        self.timer = None;
        self.help_open = false;
    }

    fn stop(&mut self, now: f64) {
        if self.running {
            self.running = false;
            self.note(now, "stop".into());
        }
    }
}

/// A built-in technique on its own thread; stopping abandons the thread.
pub struct BuiltinHelper {
    technique: Technique,
    stop: Arc<AtomicBool>,
    rx: Option<Receiver<HelperResult>>,
}

impl BuiltinHelper {
    pub fn new(technique: Technique) -> Self {
        BuiltinHelper {
            technique,
            stop: Arc::new(AtomicBool::new(false)),
            rx: None,
        }
    }
}

impl HelperHandle for BuiltinHelper {
    fn name(&self) -> String {
        self.technique.name().to_string()
    }

    fn start(&mut self, task: &Task, _now: f64, _timeout: f64) {
        let (tx, rx) = channel();
        let (t, task, stop) = (self.technique, task.clone(), self.stop.clone());
        std::thread::spawn(move || {
            let _ = tx.send(run_builtin(t, &task, &stop));
        });
        self.rx = Some(rx);
    }

    fn poll(&mut self, _now: f64) -> Option<HelperResult> {
        self.rx.as_ref().and_then(|rx| rx.try_recv().ok())
    }

    fn stop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.rx = None;
    }
}

/// An external helper process, supervised from a thread.
pub struct ExternalHelper {
    spec: ExternalHelperSpec,
    stop: Arc<AtomicBool>,
    rx: Option<Receiver<HelperResult>>,
    thread: Option<JoinHandle<()>>,
}

impl ExternalHelper {
    pub fn new(spec: ExternalHelperSpec) -> Self {
        ExternalHelper {
            spec,
            stop: Arc::new(AtomicBool::new(false)),
            rx: None,
            thread: None,
        }
    }
}

impl HelperHandle for ExternalHelper {
    fn name(&self) -> String {
        self.spec.name.clone()
    }

    fn start(&mut self, task: &Task, _now: f64, timeout: f64) {
        let mut spec = self.spec.clone();
        spec.timeout = spec.timeout.min(Duration::from_secs_f64(timeout.max(0.001)));
        let (tx, rx) = channel();
        let (task, stop) = (task.clone(), self.stop.clone());
        self.thread = Some(std::thread::spawn(move || {
            let _ = tx.send(run_external_helper(&spec, &task, &stop));
        }));
        self.rx = Some(rx);
    }

    fn poll(&mut self, _now: f64) -> Option<HelperResult> {
        let r = self.rx.as_ref().and_then(|rx| rx.try_recv().ok());
        if r.is_some() {
            if let Some(t) = self.thread.take() {
                let _ = t.join();
            }
        }
        r
    }

    fn stop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
        self.rx = None;
    }
}

impl Drop for ExternalHelper {
    fn drop(&mut self) {
        self.stop();
    }
}

/// What a scripted helper delivers.
#[derive(Clone, Debug)]
pub enum Script {
    /// Invariants (at the first loop head) after the delay.
    Invariants(Vec<BExp>),
    Fail(String),
    /// Never answers.
    Silent,
}

/// Helper that answers on the coordinator's clock after a fixed delay.
pub struct ScriptedHelper {
    label: String,
    delay: f64,
    script: Script,
    started: Option<(f64, Task)>,
    pub starts: Arc<Mutex<usize>>,
}

impl ScriptedHelper {
    pub fn new(label: &str, delay: f64, script: Script) -> Self {
        ScriptedHelper {
            label: label.to_string(),
            delay,
            script,
            started: None,
            starts: Arc::new(Mutex::new(0)),
        }
    }
}

impl HelperHandle for ScriptedHelper {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn start(&mut self, task: &Task, now: f64, _timeout: f64) {
        *self.starts.lock().expect("starts") += 1;
        self.started = Some((now, task.clone()));
    }

    fn poll(&mut self, now: f64) -> Option<HelperResult> {
        let (t0, task) = self.started.as_ref()?;
        if now - t0 < self.delay {
            return None;
        }
        let elapsed = now - t0;
        let r = match &self.script {
            Script::Silent => return None,
            Script::Fail(why) => HelperResult::failed(why.clone(), elapsed),
            Script::Invariants(list) => {
                let head: Option<LocId> = task.cfa.loop_heads.iter().next().copied();
                let invariants: Vec<LocatedInvariant> = head
                    .map(|h| {
                        list.iter()
                            .map(|b| LocatedInvariant {
                                loop_head: h,
                                invariant: b.clone(),
                                source: self.label.clone(),
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                let witness = witness_for(task, &invariants, &self.label);
                HelperResult {
                    invariants,
                    elapsed,
                    status: HelperStatus::Completed,
                    witness: Some(witness),
                    diagnostics: Vec::new(),
                }
            }
        };
        self.started = None;
        Some(r)
    }

    fn stop(&mut self) {
        self.started = None;
    }
}
