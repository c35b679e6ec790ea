//! Guess-and-check: linear templates with small coefficients, screened on sampled runs.
//!
//! Survivors are reported without any proof.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frontend::{Cfa, LocId, Operation, SafetyProperty};
use crate::logic::{AExp, BExp, CmpOp};
use crate::semantics::{holds, initial_state, step, violates, State};
use crate::witness::LocatedInvariant;

#[derive(Clone, Debug)]
pub struct TemplateOptions {
    /// Coefficients range over `-coeff..=coeff`.
    pub coeff: i64,
    pub max_vars: usize,
    /// Number of sampled runs; zero disables screening.
    pub samples: usize,
    pub max_steps: usize,
    /// Distinct loop-head states kept per head.
    pub max_states: usize,
    /// Survivors reported per loop head.
    pub cap: Option<usize>,
    pub seed: u64,
}

impl Default for TemplateOptions {
    fn default() -> Self {
        TemplateOptions {
            coeff: 2,
            max_vars: 3,
            samples: 64,
            max_steps: 2_000,
            max_states: 2_000,
            cap: Some(32),
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct TemplateOutcome {
    pub invariants: Vec<LocatedInvariant>,
    /// Set when a sampled run reached a property violation.
    pub violation: Option<String>,
}

/// Ranking key: equalities first, then fewer variables, smaller coefficients.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Rank(u8, usize, i64, i64);

/// `Σ a_i v_i ⋈ d` with negative terms moved to the right-hand side.
fn render(vars: &[&str], coeffs: &[i64], op: CmpOp, d: i64) -> BExp {
    let term = |v: &str, a: i64| {
        if a == 1 {
            AExp::var(v)
        } else {
            AExp::mul(AExp::Const(a), AExp::var(v))
        }
    };
    let sum = |ts: Vec<AExp>| ts.into_iter().reduce(AExp::add);
    let pos: Vec<AExp> = vars
        .iter()
        .zip(coeffs)
        .filter(|(_, &a)| a > 0)
        .map(|(v, &a)| term(v, a))
        .collect();
    let neg: Vec<AExp> = vars
        .iter()
        .zip(coeffs)
        .filter(|(_, &a)| a < 0)
        .map(|(v, &a)| term(v, -a))
        .collect();
    let with_const = |side: Option<AExp>, c: i64| match (side, c) {
        (None, c) => AExp::Const(c),
        (Some(s), 0) => s,
        (Some(s), c) if c > 0 => AExp::add(s, AExp::Const(c)),
        (Some(s), c) => AExp::sub(s, AExp::Const(-c)),
    };
    match (sum(pos), sum(neg)) {
        (Some(l), r) => BExp::cmp(op, l, with_const(r, d)),
        (None, Some(r)) => BExp::cmp(op.flipped(), r, AExp::Const(-d)),
        (None, None) => BExp::cmp(op, AExp::Const(0), AExp::Const(d)),
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(i: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == k {
            return;
        }
        for j in i..n {
            cur.push(j);
            go(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

fn program_constants(cfa: &Cfa) -> BTreeSet<i64> {
    fn walk(a: &AExp, out: &mut BTreeSet<i64>) {
        match a {
            AExp::Const(c) => {
                out.insert(*c);
            }
            AExp::Var(_) => {}
            AExp::Neg(x) => walk(x, out),
            AExp::Bin(_, x, y) => {
                walk(x, out);
                walk(y, out);
            }
        }
    }
    fn walk_b(b: &BExp, out: &mut BTreeSet<i64>) {
        match b {
            BExp::True | BExp::False => {}
            BExp::Cmp(_, x, y) => {
                walk(x, out);
                walk(y, out);
            }
            BExp::Not(x) => walk_b(x, out),
            BExp::And(x, y) | BExp::Or(x, y) | BExp::Implies(x, y) => {
                walk_b(x, out);
                walk_b(y, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    for e in &cfa.edges {
        match &e.op {
            Operation::Assume(b) => walk_b(b, &mut out),
            Operation::Assign(_, a) => walk(a, &mut out),
            _ => {}
        }
    }
    out
}

/// All syntactic candidates, best-ranked first.
pub fn candidates(cfa: &Cfa, props: &[SafetyProperty], opts: &TemplateOptions) -> Vec<BExp> {
    let vars: Vec<&str> = cfa.symbols.names().collect();
    let mut consts: Vec<i64> = vec![0];
    for c in program_constants(cfa) {
        if c != 0 && c.abs() <= 8 && consts.len() < 4 {
            consts.push(c);
        }
    }
    let mut ranked: Vec<(Rank, BExp)> = Vec::new();
    let mut seen: HashSet<BExp> = HashSet::new();
    let mut push = |rank: Rank, b: BExp, ranked: &mut Vec<(Rank, BExp)>| {
        if seen.insert(b.clone()) {
            ranked.push((rank, b));
        }
    };
    for p in props {
        for a in p.condition.atoms() {
            push(Rank(0, 0, 0, 0), a, &mut ranked);
        }
    }
    for e in &cfa.edges {
        if let Operation::Assume(b) = &e.op {
            for a in b.atoms() {
                push(Rank(1, 0, 0, 0), a, &mut ranked);
            }
        }
    }
    let range: Vec<i64> = (-opts.coeff..=opts.coeff).filter(|&a| a != 0).collect();
    for sub in subsets(vars.len(), opts.max_vars) {
        let names: Vec<&str> = sub.iter().map(|&i| vars[i]).collect();
        let mut coeffs = vec![0i64; sub.len()];
        let total = range.len().pow(sub.len() as u32);
        for code in 0..total {
            let mut c = code;
            for slot in coeffs.iter_mut() {
                *slot = range[c % range.len()];
                c /= range.len();
            }
            if coeffs.iter().fold(0, |g, &x| gcd(g, x)) != 1 {
                continue;
            }
            let weight: i64 = coeffs.iter().map(|a| a.abs()).sum();
            for &d in &consts {
                if coeffs[0] > 0 {
                    push(
                        Rank(2, sub.len(), weight, d.abs()),
                        render(&names, &coeffs, CmpOp::Eq, d),
                        &mut ranked,
                    );
                }
                push(
                    Rank(3, sub.len(), weight, d.abs()),
                    render(&names, &coeffs, CmpOp::Ge, d),
                    &mut ranked,
                );
            }
        }
    }
    ranked.sort_by(|a, b| a.0.cmp(&b.0));
    ranked.into_iter().map(|(_, b)| b).collect()
}

struct Samples {
    heads: BTreeMap<LocId, Vec<State>>,
    violation: Option<String>,
}

fn sample(
    cfa: &Cfa,
    props: &[SafetyProperty],
    opts: &TemplateOptions,
    stop: &AtomicBool,
) -> Samples {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut heads: BTreeMap<LocId, Vec<State>> = BTreeMap::new();
    let mut seen: HashSet<(LocId, State)> = HashSet::new();
    let mut violation = None;
    for _ in 0..opts.samples {
        if stop.load(Ordering::Relaxed) {
            break;
        }
        let mut loc = cfa.initial;
        let mut state = initial_state(cfa);
        for _ in 0..opts.max_steps {
            if cfa.is_loop_head(loc) && seen.insert((loc, state.clone())) {
                let list = heads.entry(loc).or_default();
                if list.len() < opts.max_states {
                    list.push(state.clone());
                }
            }
            for p in props {
                if p.location == loc && violates(cfa, p, &state) && violation.is_none() {
                    violation = Some(format!(
                        "sampled run violates `{}` at line {}",
                        p.condition,
                        cfa.line(loc)
                    ));
                }
            }
            let mut succ: Vec<(LocId, State)> = Vec::new();
            for e in cfa.out_edges(loc) {
                let havoc = match &e.op {
                    Operation::Havoc(v) => {
                        let (lo, hi) = (cfa.symbols.min_value(v), cfa.symbols.max_value(v));
                        Some(if rng.random_bool(0.5) {
                            rng.random_range(lo..=hi)
                        } else {
                            rng.random_range(-3i64..=3).clamp(lo, hi)
                        })
                    }
                    _ => None,
                };
                if let Some(s) = step(cfa, &state, &e.op, havoc) {
                    succ.push((e.target, s));
                }
            }
            if succ.is_empty() {
                break;
            }
            let pick = rng.random_range(0..succ.len());
            (loc, state) = succ.swap_remove(pick);
        }
    }
    Samples { heads, violation }
}

/// Valuations drawn uniformly, to recognise candidates that hold everywhere.
fn random_states(cfa: &Cfa, n: usize, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a07);
    (0..n)
        .map(|_| {
            cfa.symbols
                .names()
                .map(|v| rng.random_range(cfa.symbols.min_value(v)..=cfa.symbols.max_value(v)))
                .collect()
        })
        .collect()
}

pub fn template_guess_check(
    cfa: &Cfa,
    props: &[SafetyProperty],
    opts: &TemplateOptions,
    stop: &AtomicBool,
) -> TemplateOutcome {
    let cands = candidates(cfa, props, opts);
    let samples = if opts.samples > 0 {
        Some(sample(cfa, props, opts, stop))
    } else {
        None
    };
    if let Some(msg) = samples.as_ref().and_then(|s| s.violation.clone()) {
        return TemplateOutcome {
            invariants: Vec::new(),
            violation: Some(msg),
        };
    }
    let noise = random_states(cfa, 64, opts.seed);
    let mut out = Vec::new();
    for &h in &cfa.loop_heads {
        let mut kept = Vec::new();
        for c in &cands {
            if stop.load(Ordering::Relaxed) {
                break;
            }
            if let Some(s) = &samples {
                let states = s.heads.get(&h).map(Vec::as_slice).unwrap_or(&[]);
                if states.iter().any(|st| !holds(cfa, c, st)) {
                    continue;
                }
                if noise.iter().all(|st| holds(cfa, c, st)) {
                    continue;
                }
            }
            kept.push(c.clone());
            if opts.cap.is_some_and(|cap| kept.len() >= cap) {
                break;
            }
        }
        out.extend(kept.into_iter().map(|c| LocatedInvariant {
            loop_head: h,
            invariant: c,
            source: "template".into(),
        }));
    }
    TemplateOutcome {
        invariants: out,
        violation: None,
    }
}
