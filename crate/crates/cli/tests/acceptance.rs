//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use coop_cli::bench::{run_bench, BenchResult, RunSpec};
use coop_cli::corpus::Manifest;
use coop_core::exchange::map_property;
use coop_core::frontend::{parse, Program, PropertyEncoding};
use coop_core::helpers::witness_for;
use coop_core::logic::{parse_bexp, split_conjunctions, BExp, Checker};
use coop_core::master::Control;
use coop_core::orchestrator::{
    run_cooperative, Cooperation, CoopConfig, EventKind, HelperHandle, Options, Script,
    ScriptedHelper, ScriptedMaster, VirtualClock,
};
use coop_core::semantics::{brute_force_all, holds_at, replay};
use coop_core::task::Task;
use coop_core::testing::{COUNTDOWN, COUNTDOWN_WITNESS};
use coop_core::witness::{match_to_cfa, read_graphml, write_graphml, LocatedInvariant};
use coop_core::{MasterKind, Verdict, VerdictKind};
use proptest::test_runner::{Config, TestRunner};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FLAGSHIP_LIMIT: f64 = 10.0;
const RANDOM_PROGRAMS: usize = 200;
const RANDOM_WIDTH: u32 = 4;
const SUITE_LIMIT: f64 = 600.0;
const ROBUST_SAFE_TASKS: usize = 20;
const FALSE_CANDIDATES: usize = 50;
const BENCH_BUDGET: f64 = 60.0;
const SLOWDOWN: f64 = 1.5;
const ROUND_TRIPS: u32 = 1000;
const MAPPER_TASKS: usize = 20;
const ORACLE_BUDGET: usize = 1 << 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn equivalent(a: &BExp, b: &BExp, task: &Task) -> bool {
    let iff = BExp::And(
        Box::new(BExp::Implies(Box::new(a.clone()), Box::new(b.clone()))),
        Box::new(BExp::Implies(Box::new(b.clone()), Box::new(a.clone()))),
    );
    Checker::new().is_valid(&iff, &task.cfa.symbols)
}

fn flagship() -> Outcome {
    let task = Task::from_text("countdown.mc", COUNTDOWN, 8).unwrap();
    let config = CoopConfig {
        master: "kind".into(),
        helpers: vec!["affine".into()],
        timer_m: 1.0,
        timeout: 60.0,
        width: 8,
        ..CoopConfig::default()
    };
    let t0 = Instant::now();
    let report = run_cooperative(&task, &config).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let target = parse_bexp("n - x - y == 0").unwrap();
    let injected: Vec<BExp> = report
        .witnesses_used
        .iter()
        .flat_map(|w| match_to_cfa(w, &task.cfa, true).invariants)
        .flat_map(|li| split_conjunctions(&li.invariant))
        .collect();
    let found = injected.iter().any(|c| equivalent(c, &target, &task));
    outcome(
        report.verdict.is_true() && found && secs < FLAGSHIP_LIMIT,
        format!(
            "verdict {}, n - x - y == 0 injected: {found}, {secs:.2}s (limit {FLAGSHIP_LIMIT}s)",
            report.verdict.kind()
        ),
    )
}

fn random_tasks(seed: u64, n: usize, want: impl Fn(VerdictKind) -> bool) -> Vec<(Task, VerdictKind)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut i = 0;
    while out.len() < n {
        let text = common::random_program(&mut rng);
        i += 1;
        let Ok(task) = Task::from_text(&format!("r{i}.mc"), &text, RANDOM_WIDTH) else {
            continue;
        };
        let oracle = brute_force_all(&task.cfa, &task.properties, ORACLE_BUDGET).kind();
        if want(oracle) {
            out.push((task, oracle));
        }
    }
    out
}

fn random_configs() -> Vec<CoopConfig> {
    let mut out = Vec::new();
    for master in ["kind", "predabs"] {
        let base = CoopConfig {
            master: master.into(),
            timer_m: 0.05,
            timeout_h: 1.0,
            timeout: 3.0,
            request_on_stall: true,
            width: RANDOM_WIDTH,
            ..CoopConfig::default()
        };
        out.push(base.clone());
        for restart_master in [true, false] {
            for term_after_first_inv in [true, false] {
                out.push(CoopConfig {
                    helpers: vec!["interval".into(), "affine".into(), "template".into()],
                    restart_master,
                    term_after_first_inv,
                    ..base.clone()
                });
            }
        }
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let t0 = Instant::now();
    let tasks = random_tasks(0xacce55, RANDOM_PROGRAMS, |k| k != VerdictKind::Unknown);
    let configs = random_configs();
    let (mut runs, mut conclusive, mut disagreements) = (0, 0, Vec::new());
    for (task, oracle) in &tasks {
        for c in &configs {
            let report = run_cooperative(task, c).unwrap();
            runs += 1;
            let ok = match &report.verdict {
                Verdict::True(_) => *oracle == VerdictKind::True,
                Verdict::False(cex) => *oracle == VerdictKind::False && replay(&task.cfa, cex),
                _ => true,
            };
            conclusive += usize::from(report.verdict.is_conclusive());
            if !ok {
                disagreements.push(format!("{} under {}", task.program.path, c.run_name()));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    for d in &disagreements {
        eprintln!("  disagreement: {d}");
    }
    outcome(
        disagreements.is_empty() && secs < SUITE_LIMIT && tasks.len() >= RANDOM_PROGRAMS,
        format!(
            "{} programs, {runs} runs, {conclusive} conclusive, {} disagreements, {secs:.0}s (limit {SUITE_LIMIT}s)",
            tasks.len(),
            disagreements.len()
        ),
    )
}

fn false_candidates(task: &Task, rng: &mut ChaCha8Rng, n: usize) -> Vec<LocatedInvariant> {
    let vars = task.cfa.variables();
    let heads: Vec<_> = task.cfa.loop_heads.iter().copied().collect();
    let ops = ["<", "<=", ">", ">=", "==", "!="];
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < n && tries < 5000 {
        tries += 1;
        let v = vars.choose(rng).unwrap();
        let w = vars.choose(rng).unwrap();
        let text = match rng.random_range(0..4) {
            0 => format!("{v} {} {}", ops.choose(rng).unwrap(), rng.random_range(-3..9)),
            1 => format!("{v} {} {w}", ops.choose(rng).unwrap()),
            2 => format!("{v} - {w} == {}", rng.random_range(-4..5)),
            _ => format!(
                "{v} {} {} && {w} != {}",
                ops.choose(rng).unwrap(),
                rng.random_range(0..8),
                rng.random_range(0..8)
            ),
        };
        let inv = parse_bexp(&text).unwrap();
        let head = *heads.choose(rng).unwrap();
        if holds_at(&task.cfa, &inv, head, ORACLE_BUDGET) == Some(false) {
            out.push(LocatedInvariant {
                loop_head: head,
                invariant: inv,
                source: "noise".into(),
            });
        }
    }
    out
}

/// Tasks with the wanted oracle verdict that admit `FALSE_CANDIDATES` false invariants.
fn noisy_tasks(
    seed: u64,
    n: usize,
    want: VerdictKind,
    rng: &mut ChaCha8Rng,
) -> Vec<(Task, Vec<LocatedInvariant>)> {
    random_tasks(seed, 3 * n, |k| k == want)
        .into_iter()
        .filter_map(|(t, _)| {
            let c = false_candidates(&t, rng, FALSE_CANDIDATES);
            (c.len() == FALSE_CANDIDATES).then_some((t, c))
        })
        .take(n)
        .collect()
}

fn robustness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbad1);
    let safe = noisy_tasks(0x5afe, ROBUST_SAFE_TASKS, VerdictKind::True, &mut rng);
    let unsafe_ = noisy_tasks(0xf00d, ROBUST_SAFE_TASKS / 2, VerdictKind::False, &mut rng);
    let (mut problems, mut runs, mut injected) = (Vec::new(), 0, 0);
    for (set, (tasks, expected)) in [(&safe, VerdictKind::True), (&unsafe_, VerdictKind::False)]
        .into_iter()
        .enumerate()
    {
        for (task, cands) in tasks {
            injected += cands.len();
            let witness = witness_for(task, cands, "noise");
            for kind in [MasterKind::KInduction, MasterKind::PredAbs] {
                let plain = kind.engine(task).run(&Control::standalone(Some(Duration::from_secs(10))));
                let ctl = Control::standalone(Some(Duration::from_secs(10)));
                ctl.inject([witness.clone()]);
                let with = kind.engine(task).run(&ctl);
                runs += 1;
                let wrong = with.is_conclusive() && with.kind() != expected;
                // on safe tasks nothing may change; on unsafe ones extra predicates may only help
                if wrong || (set == 0 && plain.kind() != with.kind()) {
                    problems.push(format!("{} {kind}: {} -> {}", task.program.path, plain.kind(), with.kind()));
                }
            }
        }
    }
    for p in &problems {
        eprintln!("  changed: {p}");
    }
    outcome(
        problems.is_empty() && safe.len() == ROBUST_SAFE_TASKS,
        format!(
            "{} safe tasks (+{} unsafe), {injected} certified-false candidates, {runs} paired runs, {} changed or wrong verdicts",
            safe.len(),
            unsafe_.len(),
            problems.len()
        ),
    )
}

fn example_run(term_after_first_inv: bool) -> (Vec<(f64, EventKind)>, VerdictKind) {
    let task = Task::from_text("countdown.mc", COUNTDOWN, 8).unwrap();
    let master = ScriptedMaster::new(&task, parse_bexp("n == x + y").unwrap());
    let helpers: Vec<Box<dyn HelperHandle>> = vec![
        Box::new(ScriptedHelper::new("H1", 10.0, Script::Invariants(vec![BExp::True]))),
        Box::new(ScriptedHelper::new("H2", 50.0, Script::Invariants(vec![parse_bexp("n >= y").unwrap()]))),
        Box::new(ScriptedHelper::new("H3", 100.0, Script::Invariants(vec![parse_bexp("n == x + y").unwrap()]))),
        Box::new(ScriptedHelper::new("H4", 500.0, Script::Silent)),
    ];
    let clock = VirtualClock::new(1.0);
    let opts = Options {
        restart_master: true,
        term_after_first_inv,
        timer_m: 5.0,
        timeout_h: 300.0,
        timeout: Some(900.0),
    };
    let r = Cooperation::new(&task, opts, Box::new(master), helpers, &clock).run();
    (r.events.into_iter().map(|e| (e.time, e.kind)).collect(), r.verdict.kind())
}

fn algorithm_conformance() -> Outcome {
    use EventKind::*;
    let done = |h: &str, s: &str| HelperFinished {
        helper: h.into(),
        status: s.into(),
    };
    let start: Vec<(f64, EventKind)> = vec![
        (0.0, MasterStarted { timer: Some(5.0) }),
        (5.0, HelpRequested),
        (5.0, HelperStarted("H1".into())),
        (5.0, HelperStarted("H2".into())),
        (5.0, HelperStarted("H3".into())),
        (5.0, HelperStarted("H4".into())),
        (15.0, done("H1", "completed")),
        (15.0, TrivialIgnored("H1".into())),
        (55.0, done("H2", "completed")),
        (55.0, WitnessCollected("H2".into())),
    ];
    let mut wait = start.clone();
    wait.extend([
        (105.0, done("H3", "completed")),
        (105.0, WitnessCollected("H3".into())),
        (305.0, HelperTimedOut("H4".into())),
        (305.0, MasterStopped),
        (305.0, Injected(2)),
        (305.0, MasterRestarted),
        (306.0, MasterFinished(VerdictKind::True)),
    ]);
    let mut first = start;
    first.extend([
        (55.0, HelperStopped("H3".into())),
        (55.0, HelperStopped("H4".into())),
        (55.0, MasterStopped),
        (55.0, Injected(1)),
        (55.0, MasterRestarted),
        (55.0, MasterFinished(VerdictKind::Unknown)),
    ]);
    let (a, va) = example_run(false);
    let (b, vb) = example_run(true);
    let repeat = example_run(false).0 == a && example_run(true).0 == b;
    let ok_wait = a == wait && va == VerdictKind::True;
    let ok_first = b == first && vb == VerdictKind::Unknown;
    if !ok_wait {
        eprintln!("  wait-for-all log: {a:#?}");
    }
    if !ok_first {
        eprintln!("  first-witness log: {b:#?}");
    }
    outcome(
        ok_wait && ok_first && repeat,
        format!("wait-for-all log as narrated: {ok_wait}, first-witness log: {ok_first}, deterministic: {repeat}"),
    )
}

fn bench_specs() -> Vec<RunSpec> {
    let base = CoopConfig {
        timeout: BENCH_BUDGET,
        ..CoopConfig::default()
    };
    ["kind", "kind+affine@5", "predabs", "predabs+affine,interval,template@5"]
        .iter()
        .map(|s| RunSpec::parse(s, &base).unwrap())
        .collect()
}

fn cooperative_gain(r: &BenchResult) -> Outcome {
    let summary = r.summary();
    let coop: Vec<_> = summary.iter().filter(|s| s.baseline != "-").collect();
    let strict = coop.iter().any(|s| s.additional > 0 && {
        let base = summary.iter().find(|b| b.config == s.baseline).unwrap();
        s.correct > base.correct
    });
    let no_false = coop.iter().all(|s| s.additional_false == 0);
    let no_wrong = summary.iter().all(|s| s.wrong == 0);
    let table: Vec<String> = summary
        .iter()
        .map(|s| format!("{} {} (+{} true, +{} false)", s.config, s.correct, s.additional_true, s.additional_false))
        .collect();
    outcome(
        strict && no_false && no_wrong,
        format!("{} tasks; {}", r.rows.len() / r.specs.len(), table.join("; ")),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn efficiency(r: &BenchResult) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for spec in r.specs.iter().filter(|s| !s.is_standalone()) {
        let base = r.baseline_of(spec).unwrap();
        let (mut s, mut c) = (Vec::new(), Vec::new());
        for row in r.rows.iter().filter(|x| x.config == spec.name && x.solved()) {
            if let Some(b) = r.rows.iter().find(|b| b.config == base.name && b.task == row.task && b.solved()) {
                s.push(b.wall);
                c.push(row.wall);
            }
        }
        let n = s.len();
        let (ms, mc) = (median(s), median(c));
        pass &= n > 0 && mc <= SLOWDOWN * ms;
        parts.push(format!("{} vs {}: {n} tasks, median {mc:.4}s vs {ms:.4}s", spec.name, base.name));
    }
    outcome(pass, format!("{} (limit {SLOWDOWN}x)", parts.join("; ")))
}

fn witness_interchange() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: ROUND_TRIPS,
        failure_persistence: None,
        ..Config::default()
    });
    let round_trips = runner
        .run(&common::arb_witness(), |w| {
            let first = write_graphml(&w).unwrap();
            let second = write_graphml(&read_graphml(&first).unwrap()).unwrap();
            proptest::prop_assert_eq!(&first, &second);
            Ok(())
        })
        .map_err(|e| e.to_string());
    let cfa = parse(&Program::new("countdown.mc", COUNTDOWN)).unwrap();
    let golden = read_graphml(COUNTDOWN_WITNESS).map(|w| match_to_cfa(&w, &cfa, true).invariants);
    let head = *cfa.loop_heads.iter().next().unwrap();
    let want = parse_bexp("n == x+y").unwrap();
    let golden_ok = matches!(&golden, Ok(invs) if invs.len() == 1 && invs[0].loop_head == head && invs[0].invariant == want);
    outcome(
        round_trips.is_ok() && golden_ok,
        format!(
            "{ROUND_TRIPS} round trips: {}, golden file yields only `n == x+y` at the loop head: {golden_ok}",
            round_trips.as_ref().map_or_else(|e| e.clone(), |_| "byte-identical".into())
        ),
    )
}

fn mapper_fidelity() -> Outcome {
    let manifest = Manifest::bundled().unwrap();
    let mut problems = Vec::new();
    let mut checked = 0;
    for e in manifest.entries.iter().take(MAPPER_TASKS) {
        let task = manifest.task(e, 8).unwrap();
        let site_lines: BTreeSet<usize> =
            task.cfa.sites.iter().flat_map(|s| s.line..=s.end_line).collect();
        let original: Vec<&str> = task.program.text.split('\n').collect();
        let want = brute_force_all(&task.cfa, &task.properties, ORACLE_BUDGET).kind();
        for enc in PropertyEncoding::ALL {
            checked += 1;
            let mapped = match map_property(&task.program, enc) {
                Ok(p) => p,
                Err(err) => {
                    problems.push(format!("{} {}: {err}", e.file, enc.name()));
                    continue;
                }
            };
            let lines: Vec<&str> = mapped.text.split('\n').collect();
            let kept = lines.len() == original.len()
                && original
                    .iter()
                    .zip(&lines)
                    .enumerate()
                    .all(|(i, (a, b))| site_lines.contains(&(i + 1)) || a == b);
            let t = Task::new(mapped.clone(), 8).unwrap();
            let got = brute_force_all(&t.cfa, &t.properties, ORACLE_BUDGET).kind();
            if !kept || got != want {
                problems.push(format!("{} {}: lines kept {kept}, verdict {got} vs {want}", e.file, enc.name()));
            }
        }
    }
    for p in &problems {
        eprintln!("  mapper: {p}");
    }
    outcome(
        problems.is_empty(),
        format!("{checked} task/encoding pairs, {} problems", problems.len()),
    )
}

/// `ACCEPTANCE_ONLY=2,5` restricts the run to the listed criteria.
fn selected() -> Option<BTreeSet<u32>> {
    let v = std::env::var("ACCEPTANCE_ONLY").ok()?;
    Some(v.split(',').filter_map(|s| s.trim().parse().ok()).collect())
}

fn main() {
    let only = selected();
    let want = |n: u32| only.as_ref().is_none_or(|s| s.contains(&n));
    let mut failed: Vec<u32> = Vec::new();
    let mut report = |n: u32, name: &str, run: &dyn Fn() -> Outcome| {
        if !want(n) {
            return;
        }
        let o = run();
        println!("criterion {n} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(n);
        }
    };
    report(1, "flagship scenario", &flagship);
    report(2, "oracle equivalence", &oracle_equivalence);
    report(3, "wrong-invariant robustness", &robustness);
    report(4, "algorithm conformance", &algorithm_conformance);
    let bench = (want(5) || want(6)).then(|| run_bench(&Manifest::bundled().unwrap(), &bench_specs(), 1));
    if let Some(b) = &bench {
        report(5, "cooperative gain", &|| cooperative_gain(b));
        report(6, "efficiency non-regression", &|| efficiency(b));
    }
    report(7, "witness interchange", &witness_interchange);
    report(8, "mapper fidelity", &mapper_fidelity);
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
