//! Helpers run as black-box subprocesses.
//!
//! Invocation: `<exe> [args..] --task <file> --property <encoding> --output <path>
//! --timeout <secs> --width <bits>`. The helper writes a witness or raw invariants to the
//! output path and exits with status 0.

use std::fs::File;
use std::os::unix::fs::PermissionsExt;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::frontend::PropertyEncoding;
use crate::helpers::{run_builtin, witness_for, HelperResult, HelperStatus, Technique};
use crate::task::Task;
use crate::witness::{match_to_cfa, read_graphml, write_graphml};

use super::{adapt, map_property, parse_raw, render_raw, ExchangeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputKind {
    Witness,
    Raw,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Witness => "witness",
            OutputKind::Raw => "raw",
        }
    }
}

impl std::str::FromStr for OutputKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "witness" | "graphml" => Ok(OutputKind::Witness),
            "raw" => Ok(OutputKind::Raw),
            _ => Err(format!("unknown output kind `{s}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExternalHelperSpec {
    pub name: String,
    pub executable: PathBuf,
    /// Passed before the protocol arguments.
    pub args: Vec<String>,
    pub encoding: PropertyEncoding,
    pub output: OutputKind,
    pub timeout: Duration,
}

impl ExternalHelperSpec {
    pub fn new(
        name: impl Into<String>,
        executable: impl Into<PathBuf>,
        encoding: PropertyEncoding,
        output: OutputKind,
        timeout: Duration,
    ) -> Result<Self, ExchangeError> {
        let executable = executable.into();
        let runnable = std::fs::metadata(&executable)
            .map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
            .unwrap_or(false);
        if !runnable {
            return Err(ExchangeError::NotExecutable(executable.display().to_string()));
        }
        Ok(ExternalHelperSpec {
            name: name.into(),
            executable,
            args: Vec::new(),
            encoding,
            output,
            timeout,
        })
    }

    pub fn with_args(mut self, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.args = args.into_iter().map(Into::into).collect();
        self
    }
}

fn kill_group(child: &mut Child) {
    // SAFETY: plain syscall on a process group we created.
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let _ = child.kill();
    let _ = child.wait();
}

fn tail(path: &Path) -> String {
    let s = std::fs::read_to_string(path).unwrap_or_default();
    let lines: Vec<&str> = s.lines().collect();
    lines[lines.len().saturating_sub(20)..].join("\n")
}

/// Runs one external helper on `task`, enforcing its wall-clock timeout.
pub fn run_external_helper(
    spec: &ExternalHelperSpec,
    task: &Task,
    stop: &AtomicBool,
) -> HelperResult {
    let start = Instant::now();
    let fail = |why: String, diags: Vec<String>| HelperResult {
        diagnostics: diags,
        ..HelperResult::failed(why, start.elapsed().as_secs_f64())
    };
    let needs_map = task.cfa.sites.iter().any(|s| s.style != spec.encoding);
    let program = if needs_map {
        match map_property(&task.program, spec.encoding) {
            Ok(p) => p,
            Err(e) => return fail(format!("mapper: {e}"), Vec::new()),
        }
    } else {
        task.program.clone()
    };
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return fail(format!("tempdir: {e}"), Vec::new()),
    };
    let task_path = dir.path().join("task.mc");
    let out_path = dir.path().join(match spec.output {
        OutputKind::Witness => "witness.graphml",
        OutputKind::Raw => "invariants.txt",
    });
    let (stdout_path, stderr_path) = (dir.path().join("stdout"), dir.path().join("stderr"));
    let io = std::fs::write(&task_path, &program.text)
        .and_then(|_| Ok((File::create(&stdout_path)?, File::create(&stderr_path)?)));
    let (so, se) = match io {
        Ok(f) => f,
        Err(e) => return fail(format!("preparing task: {e}"), Vec::new()),
    };
    let mut cmd = Command::new(&spec.executable);
    cmd.args(&spec.args)
        .arg("--task")
        .arg(&task_path)
        .arg("--property")
        .arg(spec.encoding.name())
        .arg("--output")
        .arg(&out_path)
        .arg("--timeout")
        .arg(format!("{}", spec.timeout.as_secs_f64()))
        .arg("--width")
        .arg(task.width().to_string())
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(so)
        .stderr(se)
        .process_group(0);
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => return fail(format!("spawn {}: {e}", spec.executable.display()), Vec::new()),
    };
    let status = loop {
        match child.try_wait() {
            Ok(Some(st)) => break st,
            Ok(None) => {}
            Err(e) => {
                kill_group(&mut child);
                return fail(format!("wait: {e}"), Vec::new());
            }
        }
        let stopped = stop.load(Ordering::SeqCst);
        if stopped || start.elapsed() >= spec.timeout {
            kill_group(&mut child);
            return HelperResult {
                status: if stopped {
                    HelperStatus::Stopped
                } else {
                    HelperStatus::TimedOut
                },
                ..HelperResult::failed("", start.elapsed().as_secs_f64())
            };
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    // SAFETY: as above; clears members that outlived the leader.
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let captured = vec![
        format!("stdout: {}", tail(&stdout_path)),
        format!("stderr: {}", tail(&stderr_path)),
    ];
    if !status.success() {
        return fail(format!("exit status {status}"), captured);
    }
    let text = match std::fs::read_to_string(&out_path) {
        Ok(t) => t,
        Err(e) => return fail(format!("no output: {e}"), captured),
    };
    match spec.output {
        OutputKind::Witness => {
            let mut w = match read_graphml(&text) {
                Ok(w) => w,
                Err(e) => return fail(format!("malformed witness: {e}"), captured),
            };
            w.metadata.program_hash = task.program.hash();
            let m = match_to_cfa(&w, &task.cfa, false);
            let invariants = m
                .invariants
                .into_iter()
                .map(|mut li| {
                    li.source = spec.name.clone();
                    li
                })
                .collect();
            HelperResult {
                invariants,
                elapsed,
                status: HelperStatus::Completed,
                witness: Some(w),
                diagnostics: m.diagnostics,
            }
        }
        OutputKind::Raw => {
            let raw = match parse_raw(&text) {
                Ok(r) => r,
                Err(e) => return fail(format!("malformed output: {e}"), captured),
            };
            let mut diagnostics = Vec::new();
            if let Err(e) = raw.map.validate(&task.cfa) {
                diagnostics.push(e.to_string());
            }
            let out = adapt(&raw.entries, &raw.map, &task.cfa, &spec.name);
            diagnostics.extend(out.diagnostics);
            HelperResult {
                invariants: out.invariants,
                elapsed,
                status: HelperStatus::Completed,
                witness: Some(out.witness),
                diagnostics,
            }
        }
    }
}

/// What a helper process computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServeTechnique {
    Builtin(Technique),
    /// Reports no invariants at all.
    Trivial,
}

impl std::str::FromStr for ServeTechnique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "trivial" {
            Ok(ServeTechnique::Trivial)
        } else {
            s.parse().map(ServeTechnique::Builtin)
        }
    }
}

#[derive(Clone, Debug)]
pub struct ServeRequest {
    pub task: PathBuf,
    pub encoding: PropertyEncoding,
    pub output: PathBuf,
    pub timeout: Duration,
    pub width: u32,
    pub technique: ServeTechnique,
    pub format: OutputKind,
}

/// Helper side of the protocol.
pub fn serve(req: &ServeRequest) -> Result<HelperStatus, ExchangeError> {
    let task = Task::load(&req.task, req.width).map_err(|e| match e {
        crate::task::TaskError::Io { source, .. } => ExchangeError::Io(source),
        crate::task::TaskError::Frontend(f) => ExchangeError::Frontend(f),
    })?;
    if let Some(s) = task.cfa.sites.iter().find(|s| s.style != req.encoding) {
        return Ok(HelperStatus::Failed(format!(
            "line {} uses {} but {} was declared",
            s.line,
            s.style.name(),
            req.encoding.name()
        )));
    }
    let stop = Arc::new(AtomicBool::new(false));
    let timer = {
        let stop = stop.clone();
        let t = req.timeout;
        std::thread::spawn(move || {
            let end = Instant::now() + t;
            while Instant::now() < end && !stop.load(Ordering::SeqCst) {
                std::thread::sleep(Duration::from_millis(10));
            }
            stop.store(true, Ordering::SeqCst);
        })
    };
    let (producer, result) = match req.technique {
        ServeTechnique::Builtin(t) => (t.name(), run_builtin(t, &task, &stop)),
        ServeTechnique::Trivial => (
            "trivial",
            HelperResult {
                status: HelperStatus::Completed,
                ..HelperResult::failed("", 0.0)
            },
        ),
    };
    let timed_out = stop.swap(true, Ordering::SeqCst);
    let _ = timer.join();
    if timed_out && result.status != HelperStatus::Completed {
        return Ok(HelperStatus::TimedOut);
    }
    if result.status != HelperStatus::Completed {
        return Ok(result.status);
    }
    let body = match req.format {
        OutputKind::Witness => write_graphml(&witness_for(&task, &result.invariants, producer))
            .map_err(|e| ExchangeError::Raw {
                line: 0,
                message: e.to_string(),
            })?,
        OutputKind::Raw => render_raw(&task.cfa, &result.invariants),
    };
    std::fs::write(&req.output, body)?;
    Ok(HelperStatus::Completed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_bexp;
    use crate::testing::COUNTDOWN;

    fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
        p
    }

    fn task() -> Task {
        Task::from_text("fig.mc", COUNTDOWN, 8).unwrap()
    }

    fn spec(exe: PathBuf, out: OutputKind, secs: f64) -> ExternalHelperSpec {
        ExternalHelperSpec::new("ext", exe, PropertyEncoding::ErrorLabel, out, Duration::from_secs_f64(secs))
            .unwrap()
    }

    #[test]
    fn registration_checks_the_executable() {
        let r = ExternalHelperSpec::new(
            "x",
            "/nonexistent/helper",
            PropertyEncoding::ErrorLabel,
            OutputKind::Witness,
            Duration::from_secs(1),
        );
        assert!(matches!(r, Err(ExchangeError::NotExecutable(_))));
    }

    #[test]
    fn sleeping_helper_times_out_and_is_killed() {
        let d = tempfile::tempdir().unwrap();
        let marker = d.path().join("child.pid");
        let exe = script(
            d.path(),
            "slow.sh",
            &format!("sleep 30 &\necho $! > {}\nwait", marker.display()),
        );
        let start = Instant::now();
        let r = run_external_helper(&spec(exe, OutputKind::Witness, 0.3), &task(), &AtomicBool::new(false));
        assert_eq!(r.status, HelperStatus::TimedOut);
        assert!(start.elapsed() < Duration::from_secs(5));
        std::thread::sleep(Duration::from_millis(100));
        let pid: i32 = std::fs::read_to_string(&marker).unwrap().trim().parse().unwrap();
        let stat = std::fs::read_to_string(format!("/proc/{pid}/stat")).unwrap_or_default();
        let alive = stat
            .rsplit(')')
            .next()
            .and_then(|r| r.split_whitespace().next())
            .is_some_and(|state| state != "Z" && state != "X");
        assert!(!alive, "grandchild {pid} survived");
    }

    #[test]
    fn nonzero_exit_and_garbage_fail() {
        let d = tempfile::tempdir().unwrap();
        let exe = script(d.path(), "bad.sh", "echo oops >&2\nexit 3");
        let r = run_external_helper(&spec(exe, OutputKind::Witness, 5.0), &task(), &AtomicBool::new(false));
        assert!(matches!(r.status, HelperStatus::Failed(_)));
        assert!(r.diagnostics.iter().any(|d| d.contains("oops")));
        let exe = script(
            d.path(),
            "garbage.sh",
            "while [ $# -gt 0 ]; do if [ \"$1\" = --output ]; then echo '<graphml' > \"$2\"; fi; shift; done",
        );
        let r = run_external_helper(&spec(exe, OutputKind::Witness, 5.0), &task(), &AtomicBool::new(false));
        assert!(matches!(r.status, HelperStatus::Failed(ref m) if m.contains("malformed")));
    }

    #[test]
    fn raw_output_is_adapted() {
        let d = tempfile::tempdir().unwrap();
        let exe = script(
            d.path(),
            "raw.sh",
            "while [ $# -gt 0 ]; do if [ \"$1\" = --output ]; then printf '_bb\\tv1 - v4 - v3 == 0\\nMAP\\nvar\\tv1\\tn\\nvar\\tv4\\tx\\nvar\\tv3\\ty\\nloc\\t_bb\\t4\\n' > \"$2\"; fi; shift; done",
        );
        let r = run_external_helper(&spec(exe, OutputKind::Raw, 5.0), &task(), &AtomicBool::new(false));
        assert_eq!(r.status, HelperStatus::Completed, "{:?}", r.diagnostics);
        assert_eq!(r.invariants.len(), 1);
        assert_eq!(r.invariants[0].invariant, parse_bexp("n - x - y == 0").unwrap());
    }

    #[test]
    fn mapped_task_reaches_the_helper() {
        let d = tempfile::tempdir().unwrap();
        let seen = d.path().join("seen.mc");
        let exe = script(
            d.path(),
            "cat.sh",
            &format!(
                "while [ $# -gt 0 ]; do if [ \"$1\" = --task ]; then cp \"$2\" {}; fi; shift; done\nexit 1",
                seen.display()
            ),
        );
        let mut s = spec(exe, OutputKind::Witness, 5.0);
        s.encoding = PropertyEncoding::AssertStmt;
        let _ = run_external_helper(&s, &task(), &AtomicBool::new(false));
        let text = std::fs::read_to_string(&seen).unwrap();
        assert!(text.contains("assert(n == y);"));
        assert_eq!(text.lines().count(), COUNTDOWN.lines().count());
    }

    #[test]
    fn serve_writes_both_formats() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("fig.mc");
        std::fs::write(&p, COUNTDOWN).unwrap();
        let mut req = ServeRequest {
            task: p,
            encoding: PropertyEncoding::ErrorLabel,
            output: d.path().join("w.graphml"),
            timeout: Duration::from_secs(10),
            width: 8,
            technique: ServeTechnique::Builtin(Technique::Affine),
            format: OutputKind::Witness,
        };
        assert_eq!(serve(&req).unwrap(), HelperStatus::Completed);
        let w = read_graphml(&std::fs::read_to_string(&req.output).unwrap()).unwrap();
        let m = match_to_cfa(&w, &task().cfa, false);
        assert_eq!(m.invariants[0].invariant, parse_bexp("n - x - y == 0").unwrap());
        req.format = OutputKind::Raw;
        req.output = d.path().join("raw.txt");
        assert_eq!(serve(&req).unwrap(), HelperStatus::Completed);
        let raw = parse_raw(&std::fs::read_to_string(&req.output).unwrap()).unwrap();
        assert_eq!(raw.entries.len(), 1);
        req.encoding = PropertyEncoding::AssertStmt;
        assert!(matches!(serve(&req).unwrap(), HelperStatus::Failed(_)));
    }
}
