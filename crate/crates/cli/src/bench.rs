//! Cross-product runs over a corpus and their CSV artifacts.
//!
//! | file | columns |
//! |------|---------|
//! | `results.csv` | task, config, expected, verdict, correct, wall, witnesses, note |
//! | `summary.csv` | config, baseline, correct, correct_true, correct_false, wrong, unsolved, additional, additional_true, additional_false |
//! | `quantile.csv` | config, n, wall (the n-th fastest correct result) |
//! | `scatter.csv` | task, standalone, cooperative, standalone_wall, cooperative_wall, standalone_verdict, cooperative_verdict |
//! | `timers.csv` | timer_m, config, correct |

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use coop_core::orchestrator::{run_cooperative, ConfigError, CoopConfig};
use coop_core::VerdictKind;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusEntry, Manifest};

/// A named configuration in a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub name: String,
    pub config: CoopConfig,
}

impl RunSpec {
    pub fn new(config: CoopConfig) -> Self {
        RunSpec {
            name: config.run_name(),
            config,
        }
    }

    /// `<master>[+<helper>,<helper>..][@<timerM>]`, other options taken from `base`.
    pub fn parse(text: &str, base: &CoopConfig) -> Result<RunSpec, ConfigError> {
        let (rest, timer) = match text.split_once('@') {
            Some((r, t)) => {
                let t: f64 = t
                    .parse()
                    .map_err(|_| ConfigError::Invalid(format!("bad timer in `{text}`")))?;
                (r, Some(t))
            }
            None => (text, None),
        };
        let (master, helpers) = match rest.split_once('+') {
            Some((m, h)) => (m, h.split(',').map(|s| s.trim().to_string()).collect()),
            None => (rest, Vec::new()),
        };
        let config = CoopConfig {
            master: master.trim().to_string(),
            helpers,
            external: Vec::new(),
            timer_m: timer.unwrap_or(base.timer_m),
            ..base.clone()
        };
        config.validate()?;
        Ok(RunSpec::new(config))
    }

    pub fn is_standalone(&self) -> bool {
        self.config.helpers.is_empty() && self.config.external.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub task: String,
    pub config: String,
    pub expected: VerdictKind,
    pub verdict: VerdictKind,
    pub correct: bool,
    pub wall: f64,
    pub witnesses: usize,
    pub note: String,
}

impl BenchRow {
    pub fn solved(&self) -> bool {
        self.correct && matches!(self.verdict, VerdictKind::True | VerdictKind::False)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: String,
    pub baseline: String,
    pub correct: usize,
    pub correct_true: usize,
    pub correct_false: usize,
    pub wrong: usize,
    pub unsolved: usize,
    pub additional: usize,
    pub additional_true: usize,
    pub additional_false: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub config: String,
    pub n: usize,
    pub wall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub task: String,
    pub standalone: String,
    pub cooperative: String,
    pub standalone_wall: f64,
    pub cooperative_wall: f64,
    pub standalone_verdict: VerdictKind,
    pub cooperative_verdict: VerdictKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimerRow {
    pub timer_m: f64,
    pub config: String,
    pub correct: usize,
}

#[derive(Clone, Debug, Default)]
pub struct BenchResult {
    pub specs: Vec<RunSpec>,
    pub rows: Vec<BenchRow>,
    /// Caveats about resource limits that could not be enforced.
    pub notes: Vec<String>,
}

impl BenchResult {
    fn rows_of<'a>(&'a self, config: &'a str) -> impl Iterator<Item = &'a BenchRow> + 'a {
        self.rows.iter().filter(move |r| r.config == config)
    }

    /// The standalone configuration sharing `spec`'s master.
    pub fn baseline_of(&self, spec: &RunSpec) -> Option<&RunSpec> {
        self.specs.iter().find(|s| {
            s.is_standalone()
                && s.config.master_kind().ok() == spec.config.master_kind().ok()
                && s.config.timeout == spec.config.timeout
        })
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        self.specs
            .iter()
            .map(|spec| {
                let rows: Vec<&BenchRow> = self.rows_of(&spec.name).collect();
                let solved = |r: &&BenchRow, k: VerdictKind| r.solved() && r.verdict == k;
                let baseline = self.baseline_of(spec).filter(|b| b.name != spec.name);
                let base_solved: BTreeMap<&str, bool> = baseline
                    .map(|b| self.rows_of(&b.name).map(|r| (r.task.as_str(), r.solved())).collect())
                    .unwrap_or_default();
                let extra: Vec<&&BenchRow> = if baseline.is_some() {
                    rows.iter()
                        .filter(|r| r.solved() && !base_solved.get(r.task.as_str()).copied().unwrap_or(false))
                        .collect()
                } else {
                    Vec::new()
                };
                SummaryRow {
                    config: spec.name.clone(),
                    baseline: baseline.map_or_else(|| "-".to_string(), |b| b.name.clone()),
                    correct: rows.iter().filter(|r| r.solved()).count(),
                    correct_true: rows.iter().filter(|r| solved(r, VerdictKind::True)).count(),
                    correct_false: rows.iter().filter(|r| solved(r, VerdictKind::False)).count(),
                    wrong: rows
                        .iter()
                        .filter(|r| {
                            matches!(r.verdict, VerdictKind::True | VerdictKind::False) && !r.correct
                        })
                        .count(),
                    unsolved: rows
                        .iter()
                        .filter(|r| matches!(r.verdict, VerdictKind::Unknown | VerdictKind::Timeout))
                        .count(),
                    additional: extra.len(),
                    additional_true: extra.iter().filter(|r| r.verdict == VerdictKind::True).count(),
                    additional_false: extra.iter().filter(|r| r.verdict == VerdictKind::False).count(),
                }
            })
            .collect()
    }

    pub fn quantiles(&self) -> Vec<QuantileRow> {
        let mut out = Vec::new();
        for spec in &self.specs {
            let mut times: Vec<f64> = self.rows_of(&spec.name).filter(|r| r.solved()).map(|r| r.wall).collect();
            times.sort_by(f64::total_cmp);
            out.extend(times.into_iter().enumerate().map(|(i, wall)| QuantileRow {
                config: spec.name.clone(),
                n: i + 1,
                wall,
            }));
        }
        out
    }

    pub fn scatter(&self) -> Vec<ScatterRow> {
        let mut out = Vec::new();
        for spec in self.specs.iter().filter(|s| !s.is_standalone()) {
            let Some(base) = self.baseline_of(spec) else { continue };
            for r in self.rows_of(&spec.name) {
                if let Some(b) = self.rows_of(&base.name).find(|b| b.task == r.task) {
                    out.push(ScatterRow {
                        task: r.task.clone(),
                        standalone: base.name.clone(),
                        cooperative: spec.name.clone(),
                        standalone_wall: b.wall,
                        cooperative_wall: r.wall,
                        standalone_verdict: b.verdict,
                        cooperative_verdict: r.verdict,
                    });
                }
            }
        }
        out
    }

    pub fn timers(&self) -> Vec<TimerRow> {
        let summary = self.summary();
        self.specs
            .iter()
            .zip(summary)
            .filter(|(s, _)| !s.is_standalone())
            .map(|(s, row)| TimerRow {
                timer_m: s.config.timer_m,
                config: s.name.clone(),
                correct: row.correct,
            })
            .collect()
    }

    /// Writes every artifact into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<(), csv::Error> {
        std::fs::create_dir_all(dir)?;
        write_csv(&dir.join("results.csv"), &self.rows)?;
        write_csv(&dir.join("summary.csv"), &self.summary())?;
        write_csv(&dir.join("quantile.csv"), &self.quantiles())?;
        write_csv(&dir.join("scatter.csv"), &self.scatter())?;
        write_csv(&dir.join("timers.csv"), &self.timers())?;
        if !self.notes.is_empty() {
            std::fs::write(dir.join("notes.txt"), self.notes.join("\n") + "\n")?;
        }
        Ok(())
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_path(path)?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn to_csv_string<T: Serialize>(rows: &[T]) -> Result<String, csv::Error> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    for r in rows {
        wr.serialize(r)?;
    }
    let bytes = wr.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

fn run_one(manifest: &Manifest, entry: &CorpusEntry, spec: &RunSpec) -> BenchRow {
    let t0 = Instant::now();
    let row = |verdict: VerdictKind, witnesses: usize, note: String| BenchRow {
        task: entry.file.clone(),
        config: spec.name.clone(),
        expected: entry.expected,
        verdict,
        correct: verdict == entry.expected,
        wall: t0.elapsed().as_secs_f64(),
        witnesses,
        note,
    };
    let task = match manifest.task(entry, spec.config.width) {
        Ok(t) => t,
        Err(e) => return row(VerdictKind::Unknown, 0, e.to_string()),
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        run_cooperative(&task, &spec.config)
    }));
    match outcome {
        Ok(Ok(report)) => {
            let note = match &report.verdict {
                coop_core::Verdict::Unknown(why) => why.clone(),
                _ => String::new(),
            };
            let mut r = row(report.verdict.kind(), report.witnesses_used.len(), note);
            r.wall = report.wall;
            r
        }
        Ok(Err(e)) => row(VerdictKind::Unknown, 0, e.to_string()),
        Err(_) => row(VerdictKind::Unknown, 0, "run panicked".into()),
    }
}

/// Runs every task under every spec with up to `workers` runs at a time.
/// A failing run is recorded in its row and never aborts the sweep.
pub fn run_bench(manifest: &Manifest, specs: &[RunSpec], workers: usize) -> BenchResult {
    let jobs: Vec<(usize, usize)> = (0..manifest.entries.len())
        .flat_map(|t| (0..specs.len()).map(move |s| (t, s)))
        .collect();
    let next = AtomicUsize::new(0);
    let done: Mutex<Vec<(usize, BenchRow)>> = Mutex::new(Vec::with_capacity(jobs.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(t, s)) = jobs.get(i) else { break };
                let row = run_one(manifest, &manifest.entries[t], &specs[s]);
                log::info!("{} {} -> {} ({:.2}s)", row.task, row.config, row.verdict, row.wall);
                done.lock().expect("bench rows").push((i, row));
            });
        }
    });
    let mut rows = done.into_inner().expect("bench rows");
    rows.sort_by_key(|(i, _)| *i);
    BenchResult {
        specs: specs.to_vec(),
        rows: rows.into_iter().map(|(_, r)| r).collect(),
        notes: Vec::new(),
    }
}

/// Caps the address space of the whole process. Runs share one process, so the limit
/// is global rather than per task; failure is reported, not fatal.
pub fn limit_memory(megabytes: u64) -> Result<(), String> {
    let bytes = megabytes.saturating_mul(1 << 20) as libc::rlim_t;
    let lim = libc::rlimit {
        rlim_cur: bytes,
        rlim_max: bytes,
    };
    // SAFETY: setrlimit only reads the struct we pass.
    let rc = unsafe { libc::setrlimit(libc::RLIMIT_AS, &lim) };
    if rc == 0 {
        Ok(())
    } else {
        Err(std::io::Error::last_os_error().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(task: &str, config: &str, expected: VerdictKind, verdict: VerdictKind, wall: f64) -> BenchRow {
        BenchRow {
            task: task.into(),
            config: config.into(),
            expected,
            verdict,
            correct: expected == verdict,
            wall,
            witnesses: 0,
            note: String::new(),
        }
    }

    fn result() -> BenchResult {
        use VerdictKind::*;
        let base = CoopConfig::default();
        let specs = vec![
            RunSpec::parse("kind", &base).unwrap(),
            RunSpec::parse("kind+affine@5", &base).unwrap(),
        ];
        let rows = vec![
            row("a", "kInd", True, True, 0.5),
            row("a", "kInd-aff-5-wait-20", True, True, 0.25),
            row("b", "kInd", True, Unknown, 3.0),
            row("b", "kInd-aff-5-wait-20", True, True, 6.0),
            row("c", "kInd", False, False, 0.1),
            row("c", "kInd-aff-5-wait-20", False, False, 0.125),
            row("d", "kInd", True, False, 0.1),
            row("d", "kInd-aff-5-wait-20", True, Timeout, 60.0),
        ];
        BenchResult {
            specs,
            rows,
            notes: Vec::new(),
        }
    }

    #[test]
    fn shorthand() {
        let base = CoopConfig::default();
        let s = RunSpec::parse("predabs+interval,template@10", &base).unwrap();
        assert_eq!(s.config.helpers, ["interval", "template"]);
        assert_eq!(s.config.timer_m, 10.0);
        assert_eq!(s.name, "predAbs-int-tpl-10-wait-20");
        assert!(RunSpec::parse("kind@x", &base).is_err());
        assert!(RunSpec::parse("kind+magic", &base).is_err());
        assert!(RunSpec::parse("kind", &base).unwrap().is_standalone());
    }

    #[test]
    fn summary_columns() {
        let s = result().summary();
        assert_eq!(s[0].baseline, "-");
        assert_eq!((s[0].correct, s[0].correct_true, s[0].correct_false), (2, 1, 1));
        assert_eq!((s[0].wrong, s[0].unsolved), (1, 1));
        assert_eq!(s[1].baseline, "kInd");
        assert_eq!((s[1].correct, s[1].additional, s[1].additional_true, s[1].additional_false), (3, 1, 1, 0));
    }

    #[test]
    fn quantiles_and_scatter() {
        let r = result();
        let q = r.quantiles();
        let coop: Vec<f64> = q.iter().filter(|q| q.config != "kInd").map(|q| q.wall).collect();
        assert_eq!(coop, [0.125, 0.25, 6.0]);
        assert_eq!(q.iter().filter(|q| q.config == "kInd").count(), 2);
        let sc = r.scatter();
        assert_eq!(sc.len(), 4);
        assert_eq!(sc[1].standalone_verdict, VerdictKind::Unknown);
        let t = r.timers();
        assert_eq!(t, [TimerRow { timer_m: 5.0, config: "kInd-aff-5-wait-20".into(), correct: 3 }]);
    }

    #[test]
    fn csv_round_trips() {
        let r = result();
        let text = to_csv_string(&r.rows).unwrap();
        assert!(text.starts_with("task,config,expected,verdict,correct,wall,witnesses,note\n"));
        let back: Vec<BenchRow> = read_csv(&text).unwrap();
        assert_eq!(back, r.rows);
        let s = r.summary();
        assert_eq!(read_csv::<SummaryRow>(&to_csv_string(&s).unwrap()).unwrap(), s);
        let sc = r.scatter();
        assert_eq!(read_csv::<ScatterRow>(&to_csv_string(&sc).unwrap()).unwrap(), sc);
    }
}
