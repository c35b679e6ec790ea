//! Generators and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use coop_core::witness::{
    GuardType, Invariant, Metadata, SourceCodeGuard, Transition, Witness, WitnessState,
};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

const VARS: [&str; 3] = ["a", "b", "c"];
const CMP: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

fn atom<R: Rng>(rng: &mut R, vars: &[&str]) -> String {
    let v = vars.choose(rng).unwrap();
    let op = CMP.choose(rng).unwrap();
    let rhs = match rng.random_range(0..3) {
        0 => rng.random_range(0..8).to_string(),
        1 => vars.choose(rng).unwrap().to_string(),
        _ => format!("{} + {}", vars.choose(rng).unwrap(), rng.random_range(1..4)),
    };
    format!("{v} {op} {rhs}")
}

fn assignment<R: Rng>(rng: &mut R, vars: &[&str]) -> String {
    let v = vars.choose(rng).unwrap();
    let w = vars.choose(rng).unwrap();
    match rng.random_range(0..10) {
        0 => format!("{v} = nondet();"),
        1..=3 => format!("{v} = {v} + {};", rng.random_range(1..4)),
        4..=5 => format!("{v} = {v} - {};", rng.random_range(1..3)),
        6 => format!("{v} = {w};"),
        7 => format!("{v} = {v} + {w};"),
        _ => format!("{v} = {w} + {};", rng.random_range(0..3)),
    }
}

/// A small program with at most three variables, one loop and one property.
pub fn random_program<R: Rng>(rng: &mut R) -> String {
    let n = rng.random_range(1..=3);
    let vars = &VARS[..n];
    let mut s = String::from("int main() {\n");
    for v in vars {
        let ty = if rng.random_bool(0.5) { "unsigned int" } else { "int" };
        if rng.random_bool(0.3) {
            s += &format!("  {ty} {v} = nondet();\n");
        } else {
            s += &format!("  {ty} {v} = {};\n", rng.random_range(0..6));
        }
    }
    if rng.random_bool(0.3) {
        s += &format!("  assume({});\n", atom(rng, vars));
    }
    s += &format!("  while ({}) {{\n", atom(rng, vars));
    for _ in 0..rng.random_range(1..=3) {
        if rng.random_bool(0.15) {
            s += &format!("    if ({}) {{\n      {}\n    }}\n", atom(rng, vars), assignment(rng, vars));
        } else {
            s += &format!("    {}\n", assignment(rng, vars));
        }
    }
    s += "  }\n";
    let p = atom(rng, vars);
    s += &match rng.random_range(0..3) {
        0 => format!("  if (!({p})) {{\n    Error: return 1;\n  }}\n"),
        1 => format!("  if (!({p})) {{\n    verifier_error();\n  }}\n"),
        _ => format!("  assert({p});\n"),
    };
    s += "  return 0;\n}\n";
    s
}

pub fn arb_witness() -> impl Strategy<Value = Witness> {
    let inv = prop::option::of(prop::sample::select(vec![
        "n == x+y",
        "x >= 0",
        "true",
        "a < b && b <= 7",
        "x - y * 2 != -3",
        "!(a == 1) || c > a",
    ]));
    let ty = prop_oneof![
        Just(GuardType::Then),
        Just(GuardType::Else),
        Just(GuardType::EnterLoopHead),
        Just(GuardType::Otherwise),
        Just(GuardType::EnterFunction("main".into())),
    ];
    (
        prop::collection::vec(inv, 1..7),
        prop::collection::vec((0usize..7, 0usize..7, ty, prop::option::of(1usize..60)), 0..10),
        "[a-zA-Z0-9 .<>&\"']{0,16}",
        "[0-9a-f]{0,64}",
    )
        .prop_map(|(invs, edges, producer, hash)| {
            let n = invs.len();
            let states = invs
                .into_iter()
                .enumerate()
                .map(|(i, inv)| WitnessState {
                    id: format!("N{i}"),
                    scope: inv.map(|_| "main".to_string()),
                    invariant: inv.map(|t| Invariant::parse(t).unwrap()),
                    extra: BTreeMap::new(),
                })
                .collect();
            let transitions = edges
                .into_iter()
                .map(|(s, t, ty, line)| Transition {
                    source: format!("N{}", s % n),
                    target: format!("N{}", t % n),
                    guard: SourceCodeGuard {
                        startline: line,
                        endline: line.map(|l| l + t % 3),
                        guard_type: ty,
                    },
                    extra: BTreeMap::new(),
                })
                .collect();
            Witness {
                states,
                initial: "N0".into(),
                transitions,
                metadata: Metadata {
                    producer,
                    program_hash: hash,
                    creation_time: "2025-06-01T12:00:00Z".into(),
                    ..Metadata::default()
                },
            }
        })
}
