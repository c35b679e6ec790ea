//! Concrete semantics of CFAs: states, steps, paths, explicit-state search and replay.
//!
//! A state holds one value per declared variable, in symbol-table order. Every run
//! starts at the initial location with all variables zero.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::frontend::{extract_property, Cfa, LocId, Operation, SafetyProperty};
use crate::logic::{eval_aexp, eval_bexp, parse_aexp, parse_bexp, BExp, SymbolTable, Valuation};
use crate::verdict::Verdict;

pub type State = Vec<i64>;

/// Evaluation environment over a state vector.
pub struct Env<'a> {
    pub symbols: &'a SymbolTable,
    pub state: &'a [i64],
}

impl Valuation for Env<'_> {
    fn value_of(&self, var: &str) -> Option<i64> {
        self.symbols.index_of(var).map(|i| self.state[i])
    }
}

pub fn initial_state(cfa: &Cfa) -> State {
    vec![0; cfa.symbols.len()]
}

/// Does `b` evaluate to `Ok(true)` in `state`?
pub fn holds(cfa: &Cfa, b: &BExp, state: &[i64]) -> bool {
    let env = Env {
        symbols: &cfa.symbols,
        state,
    };
    eval_bexp(b, &cfa.symbols, &env) == Ok(true)
}

/// The property is violated when its condition evaluates to `false` at its location.
pub fn violates(cfa: &Cfa, prop: &SafetyProperty, state: &[i64]) -> bool {
    let env = Env {
        symbols: &cfa.symbols,
        state,
    };
    eval_bexp(&prop.condition, &cfa.symbols, &env) == Ok(false)
}

/// Successor of `state` under `op`; `havoc` supplies the value for a havoc.
pub fn step(cfa: &Cfa, state: &[i64], op: &Operation, havoc: Option<i64>) -> Option<State> {
    let st = &cfa.symbols;
    match op {
        Operation::Assume(b) => holds(cfa, b, state).then(|| state.to_vec()),
        Operation::Assign(v, e) => {
            let idx = st.index_of(v)?;
            let env = Env { symbols: st, state };
            let w = eval_aexp(e, st, &env).ok()?;
            let mut next = state.to_vec();
            next[idx] = st.canonical(v, w.bits);
            Some(next)
        }
        Operation::Havoc(v) => {
            let idx = st.index_of(v)?;
            let mut next = state.to_vec();
            next[idx] = st.canonical(v, havoc? as u64);
            Some(next)
        }
        Operation::Call(_) | Operation::Return | Operation::ErrorLabel => Some(state.to_vec()),
    }
}

/// All values a havoc of `var` can produce.
pub fn havoc_values(st: &SymbolTable, var: &str) -> impl Iterator<Item = i64> {
    st.min_value(var)..=st.max_value(var)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathStep {
    pub location: LocId,
    pub state: State,
    /// Operation of the edge leaving this step; `None` on the last step.
    pub op: Option<Operation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Path {
    pub steps: Vec<PathStep>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub path: Path,
    pub violated_at: usize,
    pub property: SafetyProperty,
}

/// Explicit-state search over all havoc resolutions.
///
/// `budget` bounds the number of distinct (location, state) pairs explored.
pub fn brute_force_verify(cfa: &Cfa, prop: &SafetyProperty, budget: usize) -> Verdict {
    let init = (cfa.initial, initial_state(cfa));
    let mut parent: HashMap<(LocId, State), Option<((LocId, State), Operation)>> =
        HashMap::new();
    parent.insert(init.clone(), None);
    let mut queue = VecDeque::from([init]);
    while let Some(node) = queue.pop_front() {
        let (loc, state) = &node;
        if *loc == prop.location && violates(cfa, prop, state) {
            return Verdict::False(rebuild(&parent, node, prop));
        }
        for e in cfa.out_edges(*loc) {
            let mut push = |next: State| {
                let key = (e.target, next);
                if !parent.contains_key(&key) {
                    parent.insert(key.clone(), Some((node.clone(), e.op.clone())));
                    queue.push_back(key);
                }
            };
            match &e.op {
                Operation::Havoc(v) => {
                    for val in havoc_values(&cfa.symbols, v) {
                        if let Some(n) = step(cfa, state, &e.op, Some(val)) {
                            push(n);
                        }
                    }
                }
                op => {
                    if let Some(n) = step(cfa, state, op, None) {
                        push(n);
                    }
                }
            }
        }
        if parent.len() > budget {
            return Verdict::Unknown(format!("state budget of {budget} exceeded"));
        }
    }
    Verdict::True(None)
}

/// [`brute_force_verify`] over every property: `False` if any is violated, `Unknown`
/// if any search ran out of budget, `True` otherwise.
pub fn brute_force_all(cfa: &Cfa, props: &[SafetyProperty], budget: usize) -> Verdict {
    let mut unknown = None;
    for p in props {
        match brute_force_verify(cfa, p, budget) {
            Verdict::True(_) => {}
            v @ Verdict::False(_) => return v,
            v => unknown = Some(v),
        }
    }
    unknown.unwrap_or(Verdict::True(None))
}

fn rebuild(
    parent: &HashMap<(LocId, State), Option<((LocId, State), Operation)>>,
    last: (LocId, State),
    prop: &SafetyProperty,
) -> Counterexample {
    let mut steps = vec![PathStep {
        location: last.0,
        state: last.1.clone(),
        op: None,
    }];
    let mut cur = last;
    while let Some(Some((prev, op))) = parent.get(&cur) {
        steps.push(PathStep {
            location: prev.0,
            state: prev.1.clone(),
            op: Some(op.clone()),
        });
        cur = prev.clone();
    }
    steps.reverse();
    let violated_at = steps.len() - 1;
    Counterexample {
        path: Path { steps },
        violated_at,
        property: prop.clone(),
    }
}

/// All reachable states per location, or `None` when the budget is exceeded.
pub fn reachable_states(cfa: &Cfa, budget: usize) -> Option<HashMap<LocId, HashSet<State>>> {
    let mut seen: HashSet<(LocId, State)> = HashSet::new();
    let init = (cfa.initial, initial_state(cfa));
    seen.insert(init.clone());
    let mut queue = VecDeque::from([init]);
    while let Some((loc, state)) = queue.pop_front() {
        for e in cfa.out_edges(loc) {
            let succs: Vec<State> = match &e.op {
                Operation::Havoc(v) => havoc_values(&cfa.symbols, v)
                    .filter_map(|val| step(cfa, &state, &e.op, Some(val)))
                    .collect(),
                op => step(cfa, &state, op, None).into_iter().collect(),
            };
            for n in succs {
                let key = (e.target, n);
                if seen.insert(key.clone()) {
                    queue.push_back(key);
                }
            }
        }
        if seen.len() > budget {
            return None;
        }
    }
    let mut out: HashMap<LocId, HashSet<State>> = HashMap::new();
    for (l, s) in seen {
        out.entry(l).or_default().insert(s);
    }
    Some(out)
}

/// Is `inv` true in every reachable state at `loc`? `None` when the budget is exceeded.
pub fn holds_at(cfa: &Cfa, inv: &BExp, loc: LocId, budget: usize) -> Option<bool> {
    let states = reachable_states(cfa, budget)?;
    Some(
        states
            .get(&loc)
            .is_none_or(|set| set.iter().all(|s| holds(cfa, inv, s))),
    )
}

/// Checks that `cex` is a genuine path of `cfa` that ends in a violation of one of the
/// program's own properties.
pub fn replay(cfa: &Cfa, cex: &Counterexample) -> bool {
    if !extract_property(cfa).is_ok_and(|ps| ps.contains(&cex.property)) {
        return false;
    }
    let steps = &cex.path.steps;
    let n = cfa.symbols.len();
    if steps.is_empty() || cex.violated_at >= steps.len() {
        return false;
    }
    if steps.iter().any(|s| s.state.len() != n || s.location >= cfa.locations.len()) {
        return false;
    }
    if steps[0].location != cfa.initial || steps[0].state != initial_state(cfa) {
        return false;
    }
    for w in steps.windows(2) {
        let (cur, next) = (&w[0], &w[1]);
        let Some(op) = &cur.op else { return false };
        let has_edge = cfa
            .out_edges(cur.location)
            .any(|e| &e.op == op && e.target == next.location);
        if !has_edge {
            return false;
        }
        let havoc = match op {
            Operation::Havoc(v) => match cfa.symbols.index_of(v) {
                Some(i) => Some(next.state[i]),
                None => return false,
            },
            _ => None,
        };
        if step(cfa, &cur.state, op, havoc).as_ref() != Some(&next.state) {
            return false;
        }
    }
    let last = &steps[cex.violated_at];
    last.location == cex.property.location && violates(cfa, &cex.property, &last.state)
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("trace line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

/// Plain-text trace: header comments, then `location | operation | var=val,...` per step.
pub fn trace_to_text(cfa: &Cfa, cex: &Counterexample) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# property: {} | {}",
        cex.property.location, cex.property.condition
    );
    let _ = writeln!(s, "# violated_at: {}", cex.violated_at);
    for step in &cex.path.steps {
        let op = step
            .op
            .as_ref()
            .map_or_else(|| "-".to_string(), |o| o.to_string());
        let vals: Vec<String> = cfa
            .symbols
            .names()
            .zip(&step.state)
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        let _ = writeln!(s, "{} | {} | {}", step.location, op, vals.join(","));
    }
    s
}

fn parse_op(text: &str) -> Result<Option<Operation>, String> {
    let t = text.trim();
    let op = match t {
        "-" => return Ok(None),
        "return" => Operation::Return,
        "ERROR" => Operation::ErrorLabel,
        _ if t.starts_with("assume(") && t.ends_with(')') => {
            let inner = &t["assume(".len()..t.len() - 1];
            Operation::Assume(parse_bexp(inner).map_err(|e| e.to_string())?)
        }
        _ => {
            if let Some((lhs, rhs)) = t.split_once(" = ") {
                let var = lhs.trim().to_string();
                if rhs.trim() == "nondet()" {
                    Operation::Havoc(var)
                } else {
                    Operation::Assign(var, parse_aexp(rhs).map_err(|e| e.to_string())?)
                }
            } else if let Some(name) = t.strip_suffix("()") {
                Operation::Call(name.to_string())
            } else {
                return Err(format!("unrecognized operation `{t}`"));
            }
        }
    };
    Ok(Some(op))
}

pub fn trace_from_text(cfa: &Cfa, text: &str) -> Result<Counterexample, TraceError> {
    let err = |line: usize, message: String| TraceError { line, message };
    let mut property: Option<SafetyProperty> = None;
    let mut violated_at: Option<usize> = None;
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# property:") {
            let (loc, cond) = rest
                .split_once('|')
                .ok_or_else(|| err(ln, "expected `location | condition`".into()))?;
            let location = loc
                .trim()
                .parse()
                .map_err(|_| err(ln, "bad location".into()))?;
            let condition = parse_bexp(cond.trim()).map_err(|e| err(ln, e.to_string()))?;
            property = Some(SafetyProperty {
                location,
                condition,
            });
            continue;
        }
        if let Some(rest) = line.strip_prefix("# violated_at:") {
            violated_at = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| err(ln, "bad index".into()))?,
            );
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.splitn(3, " | ").collect();
        if parts.len() != 3 {
            return Err(err(ln, "expected `location | operation | state`".into()));
        }
        let location: LocId = parts[0]
            .trim()
            .parse()
            .map_err(|_| err(ln, "bad location".into()))?;
        let op = parse_op(parts[1]).map_err(|m| err(ln, m))?;
        let mut state = initial_state(cfa);
        for kv in parts[2].split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| err(ln, format!("bad assignment `{kv}`")))?;
            let idx = cfa
                .symbols
                .index_of(k.trim())
                .ok_or_else(|| err(ln, format!("unknown variable `{}`", k.trim())))?;
            state[idx] = v
                .trim()
                .parse()
                .map_err(|_| err(ln, format!("bad value `{v}`")))?;
        }
        steps.push(PathStep {
            location,
            state,
            op,
        });
    }
    let property = property.ok_or_else(|| err(0, "missing `# property:` header".into()))?;
    let violated_at = violated_at.unwrap_or(steps.len().saturating_sub(1));
    Ok(Counterexample {
        path: Path { steps },
        violated_at,
        property,
    })
}
