use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use coop_cli::bench::{limit_memory, run_bench, RunSpec};
use coop_cli::corpus::{bundled_dir, Manifest};
use coop_core::exchange::{adapt, map_property, parse_raw};
use coop_core::frontend::{parse_with_width, Program, PropertyEncoding, DEFAULT_WIDTH};
use coop_core::orchestrator::{run_cooperative, CoopConfig};
use coop_core::semantics::{replay, trace_from_text, trace_to_text};
use coop_core::task::Task;
use coop_core::witness::{match_to_cfa, read_graphml, write_graphml};
use coop_core::Verdict;

const EXIT_TRUE: u8 = 0;
const EXIT_FALSE: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "coopv", version, about = "Cooperative verifier with invariant-generating helpers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify one program.
    Verify(VerifyArgs),
    /// Run configurations over a corpus and write CSV tables.
    Bench(BenchArgs),
    /// Corpus maintenance.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Witness utilities.
    Witness {
        #[command(subcommand)]
        command: WitnessCommand,
    },
    /// Turn raw helper output into a witness.
    Adapt {
        raw: PathBuf,
        #[arg(long)]
        program: PathBuf,
        #[arg(long, default_value = "adapter")]
        producer: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_WIDTH)]
        width: u32,
    },
    /// Rewrite the property encoding of a program.
    MapProperty {
        program: PathBuf,
        /// error_label, verifier_error_call or assert_stmt.
        #[arg(long)]
        to: PropertyEncoding,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum CorpusCommand {
    /// Re-derive expected verdicts with the explicit-state oracle.
    Check {
        dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_WIDTH)]
        width: u32,
    },
}

#[derive(Subcommand, Debug)]
enum WitnessCommand {
    /// Print a witness, optionally matched against a program.
    Inspect {
        file: PathBuf,
        #[arg(long)]
        program: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_WIDTH)]
        width: u32,
    },
}

/// Cooperation options; names follow the configuration file keys.
#[derive(Args, Debug, Default)]
struct CoopFlags {
    /// TOML configuration; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// kind or predabs.
    #[arg(long)]
    master: Option<String>,
    /// Comma-separated built-in helpers: interval, affine, template.
    #[arg(long, value_delimiter = ',')]
    helpers: Option<Vec<String>>,
    #[arg(long = "restartMaster", num_args = 0..=1, default_missing_value = "true")]
    restart_master: Option<bool>,
    #[arg(long = "termAfterFirstInv", num_args = 0..=1, default_missing_value = "true")]
    term_after_first_inv: Option<bool>,
    #[arg(long = "timerM")]
    timer_m: Option<f64>,
    #[arg(long = "timeoutH")]
    timeout_h: Option<f64>,
    /// Whole-task budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long = "requestOnStall", num_args = 0..=1, default_missing_value = "true")]
    request_on_stall: Option<bool>,
    #[arg(long)]
    width: Option<u32>,
}

impl CoopFlags {
    fn config(&self) -> Result<CoopConfig> {
        let mut c = match &self.config {
            Some(p) => CoopConfig::load(p)?,
            None => CoopConfig::default(),
        };
        if let Some(m) = &self.master {
            c.master = m.clone();
        }
        if let Some(h) = &self.helpers {
            c.helpers = h.iter().filter(|s| !s.is_empty()).cloned().collect();
        }
        if let Some(v) = self.restart_master {
            c.restart_master = v;
        }
        if let Some(v) = self.term_after_first_inv {
            c.term_after_first_inv = v;
        }
        if let Some(v) = self.timer_m {
            c.timer_m = v;
        }
        if let Some(v) = self.timeout_h {
            c.timeout_h = v;
        }
        if let Some(v) = self.timeout {
            c.timeout = v;
        }
        if let Some(v) = self.request_on_stall {
            c.request_on_stall = v;
        }
        if let Some(v) = self.width {
            c.width = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    program: PathBuf,
    #[command(flatten)]
    coop: CoopFlags,
    /// Write the correctness witness of a `true` verdict here.
    #[arg(long)]
    emit_witness: Option<PathBuf>,
    /// Write the counterexample of a `false` verdict here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Check a counterexample instead of verifying.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Print the coordinator's event log.
    #[arg(long)]
    events: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Corpus directory with a manifest.csv; the bundled corpus by default.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Configurations as `<master>[+<helper>,..][@<timerM>]`.
    #[arg(long = "run", default_values_t = ["kind".to_string(), "kind+affine".to_string()])]
    runs: Vec<String>,
    /// Also run each cooperative configuration with these timers.
    #[arg(long, value_delimiter = ',')]
    timers: Vec<f64>,
    #[command(flatten)]
    coop: CoopFlags,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Best-effort address-space cap for the whole sweep.
    #[arg(long)]
    memory_mb: Option<u64>,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a),
        Command::Corpus {
            command: CorpusCommand::Check { dir, width },
        } => corpus_check(&dir.unwrap_or_else(bundled_dir), width),
        Command::Witness {
            command: WitnessCommand::Inspect { file, program, width },
        } => inspect(&file, program.as_deref(), width),
        Command::Adapt {
            raw,
            program,
            producer,
            output,
            width,
        } => adapt_cmd(&raw, &program, &producer, output.as_deref(), width),
        Command::MapProperty { program, to, output } => {
            let p = Program::load(&program).with_context(|| format!("reading {}", program.display()))?;
            let mapped = map_property(&p, to)?;
            emit(output.as_deref(), &mapped.text)?;
            Ok(0)
        }
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verify(a: VerifyArgs) -> Result<u8> {
    let config = a.coop.config()?;
    let task = Task::load(&a.program, config.width)?;
    if let Some(trace) = &a.replay {
        let text = std::fs::read_to_string(trace).with_context(|| format!("reading {}", trace.display()))?;
        let cex = trace_from_text(&task.cfa, &text)?;
        return Ok(if replay(&task.cfa, &cex) {
            println!("trace confirmed: property violated");
            EXIT_FALSE
        } else {
            println!("trace rejected");
            EXIT_UNKNOWN
        });
    }
    let report = run_cooperative(&task, &config)?;
    if a.events {
        for l in report.event_lines() {
            eprintln!("{l}");
        }
    }
    println!("{}: {}", config.run_name(), report.verdict);
    println!(
        "wall {:.3}s (master {:.3}s, helpers {:.3}s, after injection {:.3}s), cpu {:.3}s",
        report.wall, report.master_solo, report.helper_phase, report.post_injection, report.cpu
    );
    for (name, r) in &report.helpers {
        println!("helper {name}: {} ({} invariants)", r.status, r.invariants.len());
    }
    match &report.verdict {
        Verdict::True(w) => {
            if let Some(path) = &a.emit_witness {
                let w = w.as_ref().ok_or_else(|| anyhow!("the master produced no witness"))?;
                std::fs::write(path, write_graphml(w)?)?;
            }
            Ok(EXIT_TRUE)
        }
        Verdict::False(cex) => {
            let text = trace_to_text(&task.cfa, cex);
            match &a.trace {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(EXIT_FALSE)
        }
        Verdict::Unknown(_) | Verdict::Timeout => Ok(EXIT_UNKNOWN),
    }
}

fn bench(a: BenchArgs) -> Result<u8> {
    let base = a.coop.config()?;
    let manifest = Manifest::load(&a.corpus.clone().unwrap_or_else(bundled_dir))?;
    let mut specs: Vec<RunSpec> = Vec::new();
    for r in &a.runs {
        let s = RunSpec::parse(r, &base)?;
        if !a.timers.is_empty() && !s.is_standalone() {
            for &t in &a.timers {
                let config = CoopConfig {
                    timer_m: t,
                    ..s.config.clone()
                };
                config.validate()?;
                specs.push(RunSpec::new(config));
            }
        } else {
            specs.push(s);
        }
    }
    let mut seen = std::collections::HashSet::new();
    specs.retain(|s| seen.insert(s.name.clone()));
    let mut notes = vec!["runs share one process; per-task memory is not isolated".to_string()];
    if let Some(mb) = a.memory_mb {
        match limit_memory(mb) {
            Ok(()) => notes.push(format!("address space capped at {mb} MB for the whole sweep")),
            Err(e) => notes.push(format!("memory cap of {mb} MB not applied: {e}")),
        }
    }
    let mut result = run_bench(&manifest, &specs, a.workers);
    result.notes = notes;
    result.write_all(&a.out)?;
    println!(
        "{:<32} {:>7} {:>5} {:>5} {:>5} {:>10}",
        "config", "correct", "true", "false", "wrong", "additional"
    );
    for s in result.summary() {
        println!(
            "{:<32} {:>7} {:>5} {:>5} {:>5} {:>10}",
            s.config, s.correct, s.correct_true, s.correct_false, s.wrong, s.additional
        );
    }
    println!("tables written to {}", a.out.display());
    Ok(0)
}

fn corpus_check(dir: &Path, width: u32) -> Result<u8> {
    let manifest = Manifest::load(dir)?;
    let rows = manifest.check(width)?;
    let mut bad = 0;
    for r in &rows {
        let mark = if r.agrees() { "ok" } else { "MISMATCH" };
        println!("{:<28} expected {:<7} oracle {:<7} {mark}", r.file, r.expected, r.oracle);
        bad += usize::from(!r.agrees());
    }
    println!("{} tasks, {bad} mismatches", rows.len());
    Ok(if bad == 0 { 0 } else { 1 })
}

fn inspect(file: &Path, program: Option<&Path>, width: u32) -> Result<u8> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let w = read_graphml(&text)?;
    println!("producer: {}", w.metadata.producer);
    println!("programhash: {}", w.metadata.program_hash);
    println!("states: {}, transitions: {}", w.states.len(), w.transitions.len());
    for (id, inv) in w.invariants() {
        println!("  {id}: {}", inv.expr);
    }
    if let Some(p) = program {
        let prog = Program::load(p).with_context(|| format!("reading {}", p.display()))?;
        let cfa = parse_with_width(&prog, width)?;
        if prog.hash() != w.metadata.program_hash {
            println!("note: program hash differs");
        }
        let m = match_to_cfa(&w, &cfa, true);
        for li in &m.invariants {
            println!("line {}: {}", cfa.line(li.loop_head), li.invariant);
        }
        for d in &m.diagnostics {
            println!("diagnostic: {d}");
        }
    }
    Ok(0)
}

fn adapt_cmd(raw: &Path, program: &Path, producer: &str, output: Option<&Path>, width: u32) -> Result<u8> {
    let text = std::fs::read_to_string(raw).with_context(|| format!("reading {}", raw.display()))?;
    let parsed = parse_raw(&text)?;
    let prog = Program::load(program).with_context(|| format!("reading {}", program.display()))?;
    let cfa = parse_with_width(&prog, width)?;
    parsed.map.validate(&cfa)?;
    let out = adapt(&parsed.entries, &parsed.map, &cfa, producer);
    for d in &out.diagnostics {
        eprintln!("{d}");
    }
    if out.invariants.is_empty() {
        bail!("no invariant could be placed");
    }
    emit(output, &write_graphml(&out.witness)?)?;
    Ok(0)
}
