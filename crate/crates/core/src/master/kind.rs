//! k-induction over the block encoding, strengthened by validated auxiliary invariants.

use std::collections::BTreeMap;
use std::sync::atomic::Ordering;
use std::time::Duration;

use crate::blocks::{Blocks, SegEnd, Unrolling};
use crate::frontend::{Cfa, LocId, SafetyProperty};
use crate::logic::{holds_total, AExp, BExp, Checker, Satisfiability};
use crate::semantics::{holds, initial_state, Counterexample};
use crate::task::Task;
use crate::verdict::Verdict;
use crate::witness::{LocatedInvariant, Witness};

use super::{witness_conjuncts, Control, Engine};

#[derive(Clone, Debug)]
pub enum BmcOutcome {
    /// No violation within the bound.
    Safe(usize),
    Counterexample(Counterexample),
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InductionOutcome {
    Proven,
    NotInductive,
}

/// Looks for a violation on any path with at most `k` loop iterations, i.e. at most
/// `k + 1` block steps.
pub fn bmc_check(
    cfa: &Cfa,
    props: &[SafetyProperty],
    k: usize,
    checker: &Checker,
) -> BmcOutcome {
    match Blocks::new(cfa, props) {
        Ok(b) => bmc_range(cfa, &b, 0, k + 1, checker),
        Err(_) => BmcOutcome::Unknown,
    }
}

/// Violations after `lo..=hi` block steps from the initial state.
pub(crate) fn bmc_range(
    cfa: &Cfa,
    blocks: &Blocks,
    lo: usize,
    hi: usize,
    checker: &Checker,
) -> BmcOutcome {
    let mut u = Unrolling::new(cfa, blocks);
    let init = u.init();
    let steps: Vec<BExp> = (0..hi).map(|i| u.transition(i)).collect();
    let mut goal = u.violation(hi);
    for i in (0..hi).rev() {
        goal = BExp::and(steps[i].clone(), goal);
        if i >= lo {
            goal = BExp::or(u.violation(i), goal);
        }
    }
    match checker.sat(&BExp::and(init, goal), &u.symbols) {
        Satisfiability::Unsat => BmcOutcome::Safe(hi.saturating_sub(1)),
        Satisfiability::Sat(m) => match u.counterexample(&m) {
            Some(cex) => BmcOutcome::Counterexample(cex),
            None => BmcOutcome::Unknown,
        },
        Satisfiability::Unknown => BmcOutcome::Unknown,
    }
}

fn aux_by_cut(blocks: &Blocks, aux: &[LocatedInvariant]) -> BTreeMap<usize, Vec<BExp>> {
    let mut map: BTreeMap<usize, Vec<BExp>> = BTreeMap::new();
    for li in aux {
        if let Some(c) = blocks.cut_of(li.loop_head) {
            map.entry(c).or_default().push(li.invariant.clone());
        }
    }
    map
}

/// From `k + 1` consecutive loop-head states satisfying `aux`, the first `k` of them free
/// of violations, the last cannot violate the property.
pub fn induction_step(
    cfa: &Cfa,
    props: &[SafetyProperty],
    k: usize,
    aux: &[LocatedInvariant],
    checker: &Checker,
) -> InductionOutcome {
    match Blocks::new(cfa, props) {
        Ok(b) => induction_on(cfa, &b, k, aux, checker),
        Err(_) => InductionOutcome::NotInductive,
    }
}

pub(crate) fn induction_on(
    cfa: &Cfa,
    blocks: &Blocks,
    k: usize,
    aux: &[LocatedInvariant],
    checker: &Checker,
) -> InductionOutcome {
    let invs = aux_by_cut(blocks, aux);
    let heads = blocks.head_cuts(cfa);
    let mut u = Unrolling::new(cfa, blocks);
    let mut parts = vec![u.at_any(0, &heads)];
    for i in 0..=k {
        parts.push(u.assume_invariants(i, &invs));
    }
    for i in 0..k {
        parts.push(u.transition(i));
        parts.push(BExp::not(u.violation(i)));
    }
    parts.push(u.violation(k));
    match checker.sat(&BExp::conj(parts), &u.symbols) {
        Satisfiability::Unsat => InductionOutcome::Proven,
        _ => InductionOutcome::NotInductive,
    }
}

/// Is `li` established on loop entry and preserved by every block step into its loop
/// head, assuming `accepted` everywhere?
pub fn validate_invariant(
    cfa: &Cfa,
    li: &LocatedInvariant,
    accepted: &[LocatedInvariant],
    checker: &Checker,
) -> bool {
    match Blocks::new(cfa, &[]) {
        Ok(b) => validate_on(cfa, &b, li, accepted, checker),
        Err(_) => false,
    }
}

pub(crate) fn validate_on(
    cfa: &Cfa,
    blocks: &Blocks,
    li: &LocatedInvariant,
    accepted: &[LocatedInvariant],
    checker: &Checker,
) -> bool {
    if !cfa.is_loop_head(li.loop_head) {
        return false;
    }
    let Some(h) = blocks.cut_of(li.loop_head) else {
        return false;
    };
    if h == 0 && !holds(cfa, &li.invariant, &initial_state(cfa)) {
        return false;
    }
    let invs = aux_by_cut(blocks, accepted);
    let entry_is_head = cfa.is_loop_head(blocks.cuts[0]);
    for (seg, s) in blocks.segments.iter().enumerate() {
        if s.to != SegEnd::Cut(h) {
            continue;
        }
        let mut u = Unrolling::new(cfa, blocks);
        let xs = u.state(0);
        let mut hyp = Vec::new();
        if s.from == 0 && !entry_is_head {
            hyp.extend(xs.iter().map(|x| BExp::eq(x.clone(), AExp::Const(0))));
        } else {
            for b in invs.get(&s.from).into_iter().flatten() {
                hyp.push(holds_total(&u.rename_to(b, &xs)));
            }
            if s.from == h {
                hyp.push(holds_total(&u.rename_to(&li.invariant, &xs)));
            }
        }
        let img = u.image(seg, &xs, 0);
        let goal = holds_total(&u.rename_to(&li.invariant, &img.out));
        hyp.push(img.constraint);
        hyp.push(BExp::not(goal));
        if !checker.sat(&BExp::conj(hyp), &u.symbols).is_unsat() {
            return false;
        }
    }
    true
}

#[derive(Clone, Debug)]
pub struct KindOptions {
    /// Largest k tried before the master stalls.
    pub k_cap: usize,
    /// Seed the auxiliary invariants with the interval analysis.
    pub interval_aux: bool,
    /// Raise a help request when the k bound is reached.
    pub request_on_stall: bool,
    pub poll: Duration,
}

impl Default for KindOptions {
    fn default() -> Self {
        KindOptions {
            k_cap: 32,
            interval_aux: true,
            request_on_stall: false,
            poll: Duration::from_millis(10),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct KInductionState {
    pub current_k: usize,
    /// Largest k for which bounded model checking found no violation.
    pub proven_bound: usize,
    /// Validated auxiliary invariants in acceptance order.
    pub aux_invariants: Vec<LocatedInvariant>,
    pub rejected: Vec<LocatedInvariant>,
}

pub struct KInduction {
    cfa: Cfa,
    props: Vec<SafetyProperty>,
    opts: KindOptions,
    pub state: KInductionState,
}

impl KInduction {
    pub fn new(task: &Task, opts: KindOptions) -> Self {
        KInduction {
            cfa: task.cfa.clone(),
            props: task.properties.clone(),
            opts,
            state: KInductionState::default(),
        }
    }

    /// Validates candidates in arrival order, then retries the rejected ones once.
    fn absorb(
        &mut self,
        blocks: &Blocks,
        candidates: Vec<LocatedInvariant>,
        checker: &Checker,
        ctl: &Control,
    ) -> usize {
        let before = self.state.aux_invariants.len();
        let mut retry = Vec::new();
        for li in candidates {
            if self.known(&li) {
                continue;
            }
            if validate_on(&self.cfa, blocks, &li, &self.state.aux_invariants, checker) {
                ctl.note(format!("accepted `{}` from {}", li.invariant, li.source));
                self.state.aux_invariants.push(li);
            } else {
                retry.push(li);
            }
        }
        for li in retry {
            if validate_on(&self.cfa, blocks, &li, &self.state.aux_invariants, checker) {
                ctl.note(format!("accepted `{}` from {} on retry", li.invariant, li.source));
                self.state.aux_invariants.push(li);
            } else {
                ctl.note(format!("rejected `{}` from {}", li.invariant, li.source));
                self.state.rejected.push(li);
            }
        }
        self.state.aux_invariants.len() - before
    }

    fn known(&self, li: &LocatedInvariant) -> bool {
        self.state
            .aux_invariants
            .iter()
            .any(|a| a.loop_head == li.loop_head && a.invariant == li.invariant)
    }

    fn drain(&mut self, blocks: &Blocks, checker: &Checker, ctl: &Control) -> usize {
        let ws = ctl.take_inbox();
        if ws.is_empty() {
            return 0;
        }
        let cands = witness_conjuncts(&self.cfa, &ws, ctl);
        self.absorb(blocks, cands, checker, ctl)
    }

    fn proof(&self) -> Verdict {
        let mut map: BTreeMap<LocId, Vec<BExp>> = BTreeMap::new();
        for li in &self.state.aux_invariants {
            map.entry(li.loop_head).or_default().push(li.invariant.clone());
        }
        let map = map.into_iter().map(|(l, v)| (l, BExp::conj(v))).collect();
        Verdict::True(Some(Witness::from_cfa(&self.cfa, &map, "coop-kind")))
    }
}

impl Engine for KInduction {
    fn name(&self) -> &'static str {
        "kInd"
    }

    fn run(&mut self, ctl: &Control) -> Verdict {
        self.state = KInductionState {
            current_k: 1,
            ..KInductionState::default()
        };
        let blocks = match Blocks::new(&self.cfa, &self.props) {
            Ok(b) => b,
            Err(e) => return Verdict::Unknown(e.to_string()),
        };
        let checker = ctl.checker();
        self.drain(&blocks, &checker, ctl);
        if self.opts.interval_aux {
            let cands = crate::helpers::interval::loop_head_invariants(&self.cfa)
                .into_iter()
                .flat_map(|li| {
                    crate::logic::split_conjunctions(&li.invariant)
                        .into_iter()
                        .map(move |c| LocatedInvariant {
                            loop_head: li.loop_head,
                            invariant: c,
                            source: "intervals".into(),
                        })
                })
                .collect();
            self.absorb(&blocks, cands, &checker, ctl);
        }
        let mut checked_to = 0;
        let mut first = true;
        loop {
            if ctl.stopped() || ctl.expired() {
                return ctl.interrupted_verdict();
            }
            let k = self.state.current_k;
            if k <= self.opts.k_cap {
                let lo = if first { 0 } else { checked_to + 1 };
                match bmc_range(&self.cfa, &blocks, lo, k + 1, &checker) {
                    BmcOutcome::Counterexample(cex) => {
                        ctl.note(format!("k={k} status=counterexample"));
                        return Verdict::False(cex);
                    }
                    BmcOutcome::Unknown => {
                        if checker.interrupted() {
                            return ctl.interrupted_verdict();
                        }
                        return Verdict::Unknown(format!("bounded check inconclusive at k={k}"));
                    }
                    BmcOutcome::Safe(_) => {}
                }
                first = false;
                checked_to = k + 1;
                self.state.proven_bound = k;
                ctl.note(format!("k={k} status=bmc-safe"));
                self.drain(&blocks, &checker, ctl);
                if induction_on(&self.cfa, &blocks, k, &self.state.aux_invariants, &checker)
                    == InductionOutcome::Proven
                {
                    ctl.note(format!("k={k} status=proven"));
                    return self.proof();
                }
                if checker.interrupted() {
                    return ctl.interrupted_verdict();
                }
                ctl.note(format!("k={k} status=not-inductive"));
                self.state.current_k += 1;
                continue;
            }
            if self.opts.request_on_stall {
                ctl.help_wanted.store(true, Ordering::SeqCst);
            }
            if !ctl.inbox_empty() {
                if self.drain(&blocks, &checker, ctl) > 0 {
                    for j in 1..=self.opts.k_cap {
                        if induction_on(&self.cfa, &blocks, j, &self.state.aux_invariants, &checker)
                            == InductionOutcome::Proven
                        {
                            ctl.note(format!("k={j} status=proven"));
                            return self.proof();
                        }
                        if checker.interrupted() {
                            return ctl.interrupted_verdict();
                        }
                    }
                }
                continue;
            }
            if !ctl.help_open() && ctl.inbox_empty() {
                return Verdict::Unknown(format!("no proof up to k={}", self.opts.k_cap));
            }
            std::thread::sleep(self.opts.poll);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_with_width, extract_property, Program};
    use crate::logic::parse_bexp;
    use crate::semantics::{brute_force_verify, replay};
    use crate::testing::{countdown_witness, COUNTDOWN};

    fn task(text: &str, width: u32) -> Task {
        Task::from_text("t.mc", text, width).unwrap()
    }

    fn head(t: &Task) -> LocId {
        *t.cfa.loop_heads.iter().next().unwrap()
    }

    fn li(t: &Task, s: &str) -> LocatedInvariant {
        LocatedInvariant {
            loop_head: head(t),
            invariant: parse_bexp(s).unwrap(),
            source: "test".into(),
        }
    }

    #[test]
    fn bmc_on_countdown() {
        let t = task(COUNTDOWN, 4);
        let c = Checker::default();
        assert!(matches!(bmc_check(&t.cfa, &t.properties, 2, &c), BmcOutcome::Safe(2)));
        assert!(brute_force_verify(&t.cfa, &t.properties[0], 1 << 20).is_true());
        let m = task(&COUNTDOWN.replace("!(n == y)", "!(n == x)"), 4);
        let BmcOutcome::Counterexample(cex) = bmc_check(&m.cfa, &m.properties, 1, &c) else {
            panic!("expected counterexample");
        };
        assert!(replay(&m.cfa, &cex));
        assert_eq!(cex.path.steps[cex.violated_at].state[0], 1);
    }

    #[test]
    fn bmc_loop_free() {
        let t = task(
            "int main() {\n int a = 3;\n if (!(a == 3)) { Error: return 1; }\n return 0;\n}\n",
            8,
        );
        for k in 1..4 {
            assert!(matches!(bmc_check(&t.cfa, &t.properties, k, &Checker::default()), BmcOutcome::Safe(_)));
        }
    }

    #[test]
    fn induction_needs_the_invariant() {
        let t = task(COUNTDOWN, 8);
        let c = Checker::default();
        let aux = [li(&t, "n == x+y")];
        assert_eq!(induction_step(&t.cfa, &t.properties, 1, &aux, &c), InductionOutcome::Proven);
        assert_eq!(induction_step(&t.cfa, &t.properties, 1, &[], &c), InductionOutcome::NotInductive);
        assert_eq!(
            induction_step(&t.cfa, &t.properties, 1, &[li(&t, "true")], &c),
            InductionOutcome::NotInductive
        );
    }

    #[test]
    fn validation_examples() {
        let t = task(COUNTDOWN, 8);
        let c = Checker::default();
        assert!(validate_invariant(&t.cfa, &li(&t, "n == x+y"), &[], &c));
        assert!(!validate_invariant(&t.cfa, &li(&t, "n == y"), &[], &c));
        assert!(validate_invariant(&t.cfa, &li(&t, "x >= 0"), &[], &c));
        let mut not_head = li(&t, "x >= 0");
        not_head.loop_head = 0;
        assert!(!validate_invariant(&t.cfa, &not_head, &[], &c));
    }

    #[test]
    fn preservation_modulo_arithmetic() {
        let t = task(
            "int main() {\n int a = 0;\n int b = 0;\n int c = nondet();\n while (c != 0) {\n  c = nondet();\n  a = a + 1;\n  b = b + a - a + 1;\n }\n if (!(a == b)) { Error: return 1; }\n return 0;\n}\n",
            4,
        );
        let c = Checker::default();
        assert!(validate_invariant(&t.cfa, &li(&t, "a == b"), &[], &c));
    }

    #[test]
    fn standalone_small_width_proves() {
        let t = task(COUNTDOWN, 4);
        let mut k = KInduction::new(&t, KindOptions::default());
        let v = k.run(&Control::standalone(None));
        assert!(v.is_true(), "{v}");
    }

    #[test]
    fn standalone_mutant_fails() {
        let t = task(&COUNTDOWN.replace("!(n == y)", "!(n == x)"), 8);
        let mut k = KInduction::new(&t, KindOptions::default());
        let Verdict::False(cex) = k.run(&Control::standalone(None)) else {
            panic!("expected false");
        };
        assert!(replay(&t.cfa, &cex));
    }

    #[test]
    fn injected_witness_completes_proof() {
        let t = task(COUNTDOWN, 8);
        let opts = KindOptions {
            k_cap: 2,
            ..KindOptions::default()
        };
        let mut k = KInduction::new(&t, opts.clone());
        assert!(matches!(k.run(&Control::standalone(None)), Verdict::Unknown(_)));
        let ctl = Control::standalone(None);
        ctl.inject([countdown_witness(&t.cfa.source_hash)]);
        let mut k = KInduction::new(&t, opts);
        let Verdict::True(Some(w)) = k.run(&ctl) else {
            panic!("expected proof");
        };
        assert!(k
            .state
            .aux_invariants
            .iter()
            .any(|a| a.invariant == parse_bexp("n == x+y").unwrap()));
        assert!(w.invariants().count() == 1);
    }

    #[test]
    fn wrong_injection_is_filtered() {
        let t = task(COUNTDOWN, 8);
        let mut w = countdown_witness(&t.cfa.source_hash);
        for s in &mut w.states {
            if s.invariant.is_some() {
                s.invariant = Some(crate::witness::Invariant::parse("n == y").unwrap());
            }
        }
        let ctl = Control::standalone(None);
        ctl.inject([w]);
        let mut k = KInduction::new(
            &t,
            KindOptions {
                k_cap: 2,
                ..KindOptions::default()
            },
        );
        assert!(matches!(k.run(&ctl), Verdict::Unknown(_)));
        assert!(k.state.rejected.iter().any(|r| r.invariant == parse_bexp("n == y").unwrap()));
    }

    #[test]
    fn multiple_properties() {
        let p = Program::new(
            "t.mc",
            "int main() {\n int a = nondet();\n if (!(a != 7)) { Error: return 1; }\n if (!(a >= 0)) { verifier_error(); }\n return 0;\n}\n",
        );
        let cfa = parse_with_width(&p, 4).unwrap();
        let props = extract_property(&cfa).unwrap();
        assert_eq!(props.len(), 2);
        let BmcOutcome::Counterexample(cex) = bmc_check(&cfa, &props, 1, &Checker::default()) else {
            panic!("expected a violation");
        };
        assert!(replay(&cfa, &cex));
    }
}
