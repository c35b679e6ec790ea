//! Validity and satisfiability of fixed-width formulas.
//!
//! Small queries are decided by enumerating every assignment of the free variables.
//! Larger ones are bit-blasted and handed to the CDCL solver; when the conflict budget
//! runs out, or the deadline passes, or the stop flag is raised, the answer is `Unknown`.
//!
//! A formula *holds* in a state when it evaluates to `Ok(true)`; a faulting evaluation
//! counts as not holding.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use super::blast::Blaster;
use super::eval::eval_bexp;
use super::expr::{mask, BExp, SymbolTable};
use super::sat::SatResult;

pub type Model = BTreeMap<String, i64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    Valid,
    CounterModel(Model),
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Satisfiability {
    Sat(Model),
    Unsat,
    Unknown,
}

impl Satisfiability {
    pub fn is_sat(&self) -> bool {
        matches!(self, Satisfiability::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, Satisfiability::Unsat)
    }
}

#[derive(Clone, Debug)]
pub struct Checker {
    /// Largest number of assignments decided by enumeration.
    pub enum_budget: u64,
    pub conflict_budget: u64,
    pub deadline: Option<Instant>,
    pub stop: Option<Arc<AtomicBool>>,
}

impl Default for Checker {
    fn default() -> Self {
        Checker {
            enum_budget: 1 << 16,
            conflict_budget: 200_000,
            deadline: None,
            stop: None,
        }
    }
}

impl Checker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_stop(mut self, stop: Arc<AtomicBool>) -> Self {
        self.stop = Some(stop);
        self
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn interrupted(&self) -> bool {
        self.stop.as_ref().is_some_and(|s| s.load(Ordering::Relaxed))
            || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Is `e` true in every state?
    pub fn valid(&self, e: &BExp, st: &SymbolTable) -> Validity {
        match self.satisfiable(&BExp::not(e.clone()), st, true) {
            Satisfiability::Sat(m) => Validity::CounterModel(m),
            Satisfiability::Unsat => Validity::Valid,
            Satisfiability::Unknown => Validity::Unknown,
        }
    }

    /// Is there a state in which `e` holds?
    pub fn sat(&self, e: &BExp, st: &SymbolTable) -> Satisfiability {
        self.satisfiable(e, st, false)
    }

    /// With `negated`, `e` is `!(f)` and a model is any state where `f` does not hold
    /// (faulting states included).
    fn satisfiable(&self, e: &BExp, st: &SymbolTable, negated: bool) -> Satisfiability {
        let vars: Vec<String> = e.free_vars().into_iter().collect();
        let bits = st.width() as u64 * vars.len() as u64;
        if bits < 63 && (1u64 << bits) <= self.enum_budget {
            return self.enumerate(e, st, &vars, negated);
        }
        self.blast(e, st, negated)
    }

    fn enumerate(
        &self,
        e: &BExp,
        st: &SymbolTable,
        vars: &[String],
        negated: bool,
    ) -> Satisfiability {
        let inner = match (negated, e) {
            (true, BExp::Not(f)) => &**f,
            _ => e,
        };
        let w = st.width();
        let total = 1u64 << (w as u64 * vars.len() as u64);
        let mut model: Model = vars.iter().map(|v| (v.clone(), 0)).collect();
        for code in 0..total {
            if code % 4096 == 4095 && self.interrupted() {
                return Satisfiability::Unknown;
            }
            for (i, v) in vars.iter().enumerate() {
                let raw = (code >> (i as u64 * w as u64)) & mask(w);
                *model.get_mut(v).unwrap() = st.canonical(v, raw);
            }
            let r = eval_bexp(inner, st, &model);
            let hit = if negated { r != Ok(true) } else { r == Ok(true) };
            if hit {
                return Satisfiability::Sat(model);
            }
        }
        Satisfiability::Unsat
    }

    fn blast(&self, e: &BExp, st: &SymbolTable, negated: bool) -> Satisfiability {
        let mut b = Blaster::new(st);
        let goal = match (negated, e) {
            (true, BExp::Not(f)) => !b.holds(f),
            _ => b.holds(e),
        };
        b.assert_lit(goal);
        let interrupt = || self.interrupted();
        match b.solve(self.conflict_budget, &interrupt) {
            SatResult::Sat => {
                let mut m = b.model();
                for v in e.free_vars() {
                    m.entry(v).or_insert(0);
                }
                Satisfiability::Sat(m)
            }
            SatResult::Unsat => Satisfiability::Unsat,
            SatResult::Unknown => Satisfiability::Unknown,
        }
    }

    /// `valid` that maps `Unknown` to `false`.
    pub fn is_valid(&self, e: &BExp, st: &SymbolTable) -> bool {
        self.valid(e, st) == Validity::Valid
    }

    /// Decides `e` by the SAT route regardless of size.
    pub fn sat_by_solver(&self, e: &BExp, st: &SymbolTable) -> Satisfiability {
        self.blast(e, st, false)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::logic::expr::{AExp, ArithOp, CmpOp, Signedness};
    use crate::logic::parse_bexp;
    use proptest::prelude::*;

    fn table(width: u32, vars: &[(&str, Signedness)]) -> SymbolTable {
        let mut st = SymbolTable::new(width);
        for (v, s) in vars {
            st.declare(*v, *s);
        }
        st
    }

    fn solver_only() -> Checker {
        Checker {
            enum_budget: 0,
            ..Checker::default()
        }
    }

    #[test]
    fn unsigned_add_is_commutative() {
        let st = table(8, &[("a", Signedness::Unsigned), ("b", Signedness::Unsigned)]);
        let e = parse_bexp("a + b == b + a").unwrap();
        assert_eq!(solver_only().valid(&e, &st), Validity::Valid);
    }

    #[test]
    fn wraparound_counter_model() {
        let st = table(8, &[("x", Signedness::Signed)]);
        let e = parse_bexp("x + 1 > x").unwrap();
        match solver_only().valid(&e, &st) {
            Validity::CounterModel(m) => assert_eq!(m["x"], 127),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn division_fault_is_not_truth() {
        let st = table(4, &[("a", Signedness::Signed), ("b", Signedness::Signed)]);
        let e = parse_bexp("a / b == a / b").unwrap();
        for c in [Checker::default(), solver_only()] {
            match c.valid(&e, &st) {
                Validity::CounterModel(m) => assert_eq!(m["b"], 0),
                other => panic!("{other:?}"),
            }
        }
        let guarded = parse_bexp("b != 0 ==> a / b == a / b").unwrap();
        assert_eq!(solver_only().valid(&guarded, &st), Validity::Valid);
    }

    #[test]
    fn countdown_invariant_is_inductive_at_width_8() {
        let st = table(
            8,
            &[
                ("n", Signedness::Unsigned),
                ("x", Signedness::Unsigned),
                ("y", Signedness::Unsigned),
            ],
        );
        let step = parse_bexp("n == x + y && x > 0 ==> n == (x - 1) + (y + 1)").unwrap();
        assert_eq!(Checker::default().valid(&step, &st), Validity::Valid);
        let exit = parse_bexp("n == x + y && !(x > 0) ==> n == y").unwrap();
        assert_eq!(Checker::default().valid(&exit, &st), Validity::Valid);
        let weak = parse_bexp("n >= y && !(x > 0) ==> n == y").unwrap();
        assert!(matches!(
            Checker::default().valid(&weak, &st),
            Validity::CounterModel(_)
        ));
    }

    pub(crate) fn arb_aexp() -> impl Strategy<Value = AExp> {
        let leaf = prop_oneof![
            (-9i64..9).prop_map(AExp::Const),
            prop::sample::select(vec!["u", "s", "t"]).prop_map(AExp::var),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| AExp::Neg(Box::new(a))),
                (
                    prop::sample::select(vec![
                        ArithOp::Add,
                        ArithOp::Sub,
                        ArithOp::Mul,
                        ArithOp::Div,
                        ArithOp::Rem,
                    ]),
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, a, b)| AExp::bin(op, a, b)),
            ]
        })
    }

    pub(crate) fn arb_bexp() -> impl Strategy<Value = BExp> {
        let cmp = prop::sample::select(vec![
            CmpOp::Eq,
            CmpOp::Ne,
            CmpOp::Lt,
            CmpOp::Le,
            CmpOp::Gt,
            CmpOp::Ge,
        ]);
        let leaf = (cmp, arb_aexp(), arb_aexp()).prop_map(|(op, a, b)| BExp::Cmp(op, a, b));
        leaf.prop_recursive(2, 8, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(BExp::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| BExp::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| BExp::or(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| BExp::implies(a, b)),
            ]
        })
    }

    pub(crate) fn mixed_table(width: u32) -> SymbolTable {
        table(
            width,
            &[
                ("u", Signedness::Unsigned),
                ("s", Signedness::Signed),
                ("t", Signedness::Signed),
            ],
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn solver_agrees_with_enumeration(e in arb_bexp(), width in 2u32..5) {
            let st = mixed_table(width);
            let by_enum = Checker::default().sat(&e, &st);
            let by_sat = solver_only().sat_by_solver(&e, &st);
            prop_assert_eq!(by_enum.is_sat(), by_sat.is_sat());
            prop_assert!(!matches!(by_sat, Satisfiability::Unknown));
            if let Satisfiability::Sat(m) = by_sat {
                prop_assert_eq!(eval_bexp(&e, &st, &m), Ok(true));
            }
        }

        #[test]
        fn counter_models_falsify(e in arb_bexp()) {
            let st = mixed_table(3);
            for c in [Checker::default(), solver_only()] {
                if let Validity::CounterModel(m) = c.valid(&e, &st) {
                    prop_assert_ne!(eval_bexp(&e, &st, &m), Ok(true));
                }
            }
        }

        #[test]
        fn substitution_commutes_with_eval(
            e in arb_bexp(),
            by in arb_aexp(),
            u in 0i64..8,
            s in -4i64..4,
            t in -4i64..4,
        ) {
            let st = mixed_table(3);
            let env: Model = [("u", u), ("s", s), ("t", t)]
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect();
            let w = crate::logic::eval::eval_aexp(&by, &st, &env);
            if let Ok(word) = w {
                // substituting an unsigned-typed term for the signed `s` changes the
                // operation types, so compare only when signedness is preserved
                prop_assume!(!st.expr_unsigned(&by));
                let mut env2 = env.clone();
                env2.insert("s".into(), word.value(3));
                let lhs = eval_bexp(&e.substitute("s", &by), &st, &env);
                let rhs = eval_bexp(&e, &st, &env2);
                if e.mentions("s") {
                    prop_assert_eq!(lhs, rhs);
                }
            }
        }

        #[test]
        fn split_preserves_meaning(e in arb_bexp()) {
            let st = mixed_table(3);
            let parts = crate::logic::expr::split_conjunctions(&e);
            let conj = BExp::conj(parts);
            for u in 0..8i64 {
                for s in -4..4i64 {
                    let env: Model = [("u", u), ("s", s), ("t", 0)]
                        .iter()
                        .map(|(k, v)| (k.to_string(), *v))
                        .collect();
                    prop_assert_eq!(
                        eval_bexp(&e, &st, &env) == Ok(true),
                        eval_bexp(&conj, &st, &env) == Ok(true)
                    );
                }
            }
        }
    }
}
