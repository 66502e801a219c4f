//! Direct-style two-run testing: run both sides of each pair to their exit
//! and compare the final states.

use rayon::prelude::*;

use super::{
    enumerate_initial_pairs, merge, Counterexample, Divergence, DivergenceKind, EnumerationBudget, Frame,
    OracleReport, OracleVerdict, Witness,
};
use crate::logic::{low_equiv, IfcAssertTemplate, LogicalDecls, PostconditionTemplate};
use crate::program::RET_VAL;
use crate::semantics::{ExitKind, ExitOutcome};
use crate::types::{Continuation, Ident, MachineState, Stmt, Value};

/// How a single pair fared.
#[derive(Debug, Clone, PartialEq)]
pub enum PairOutcome {
    Pass,
    Fail(Divergence),
    OutOfFuel,
}

enum Side {
    Exited(ExitKind, MachineState),
    Stuck(String),
    OutOfFuel,
}

fn run_side(frame: &Frame<'_>, c: &Stmt, s: &MachineState, fuel: usize) -> Side {
    let start = MachineState::new(s.env.clone(), vec![Continuation::seq(c.clone()), Continuation::Stop], s.mem.clone());
    match frame.machine.run_until_exit(&start, fuel) {
        ExitOutcome::Exited { mut state, kind, value, .. } => {
            if kind == ExitKind::Ret {
                state.env.insert(Ident::new(RET_VAL), value.unwrap_or(Value::Undef));
            }
            Side::Exited(kind, state)
        }
        ExitOutcome::Stuck { reason, .. } => Side::Stuck(reason),
        ExitOutcome::FuelExhausted => Side::OutOfFuel,
    }
}

/// Run `c` from both states of a pair and compare the exits.
pub fn check_pair_direct(
    a: &Witness,
    b: &Witness,
    c: &Stmt,
    post: &PostconditionTemplate,
    frame: &Frame<'_>,
    budget: &EnumerationBudget,
) -> PairOutcome {
    let fail = |kind, detail: String| PairOutcome::Fail(Divergence { kind, step: None, detail });
    match (run_side(frame, c, &a.state, budget.fuel), run_side(frame, c, &b.state, budget.fuel)) {
        (Side::OutOfFuel, _) | (_, Side::OutOfFuel) => PairOutcome::OutOfFuel,
        (Side::Stuck(_), Side::Stuck(_)) => PairOutcome::Pass,
        (Side::Stuck(r), Side::Exited(ek, _)) => {
            fail(DivergenceKind::StuckMismatch, format!("left run is stuck ({r}), right exits {ek}"))
        }
        (Side::Exited(ek, _), Side::Stuck(r)) => {
            fail(DivergenceKind::StuckMismatch, format!("left run exits {ek}, right run is stuck ({r})"))
        }
        (Side::Exited(ek, _), Side::Exited(ek2, _)) if ek != ek2 => {
            fail(DivergenceKind::HeadEquiv, format!("left run exits {ek}, right exits {ek2}"))
        }
        (Side::Exited(ek, s), Side::Exited(_, s2)) => {
            let r: &IfcAssertTemplate = post.get(ek);
            let ground = |w: &Witness| Ok::<_, crate::types::EvalError>((r.stack.ground(&w.x)?, r.heap.ground(&w.x)?));
            match (ground(a), ground(b)) {
                (Ok((n, an)), Ok((n2, an2))) => {
                    if low_equiv(&s, &s2, &n, &n2, &an, &an2) {
                        PairOutcome::Pass
                    } else {
                        fail(DivergenceKind::FinalLowEquiv, describe_difference(&s, &s2, &n, &n2, &an, &an2, ek))
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    fail(DivergenceKind::FinalLowEquiv, format!("{ek} classification undefined: {e}"))
                }
            }
        }
    }
}

fn describe_difference(
    s: &MachineState,
    s2: &MachineState,
    n: &crate::logic::GroundStackClsf,
    n2: &crate::logic::GroundStackClsf,
    a: &crate::logic::GroundHeapClsf,
    a2: &crate::logic::GroundHeapClsf,
    ek: ExitKind,
) -> String {
    use crate::types::Label::Lo;
    let show = |v: Option<&Value>| v.map_or("missing".to_string(), |v| v.to_string());
    for id in s.env.keys().chain(s2.env.keys()) {
        let (v, v2) = (s.env.get(id), s2.env.get(id));
        if n.get(id) == Lo && n2.get(id) == Lo && !matches!((v, v2), (Some(v), Some(v2)) if v.low_eq(v2)) {
            return format!("after {ek} exit, Lo variable `{id}` is {} vs {}", show(v), show(v2));
        }
    }
    for l in 0..s.mem.len().max(s2.mem.len()) {
        let (v, v2) = (s.mem.get(l), s2.mem.get(l));
        if a.get(&l) == Lo && a2.get(&l) == Lo && !matches!((v, v2), (Some(v), Some(v2)) if v.low_eq(v2)) {
            return format!("after {ek} exit, Lo cell &{l} is {} vs {}", show(v), show(v2));
        }
    }
    format!("final states differ after {ek} exit")
}

/// Every enumerated pair must reach the same exit kind with low-equivalent
/// final states.
pub fn check_direct_ni(
    decls: &LogicalDecls,
    pre: &IfcAssertTemplate,
    c: &Stmt,
    post: &PostconditionTemplate,
    frame: &Frame<'_>,
    budget: &EnumerationBudget,
) -> OracleReport {
    let stream = enumerate_initial_pairs(decls, pre, frame, budget);
    let ws = &stream.witnesses;
    let results: Vec<OracleVerdict> = stream
        .pairs
        .par_iter()
        .map(|&(i, j)| match check_pair_direct(&ws[i], &ws[j], c, post, frame, budget) {
            PairOutcome::Pass => OracleVerdict::Pass,
            PairOutcome::Fail(d) => OracleVerdict::Counterexample(Box::new(Counterexample::new(&ws[i], &ws[j], d))),
            PairOutcome::OutOfFuel => OracleVerdict::Inconclusive(format!("fuel {} exhausted", budget.fuel)),
        })
        .collect();
    let verdict = if stream.truncated && stream.pairs.is_empty() {
        OracleVerdict::Inconclusive("state enumeration exceeds the pair budget".into())
    } else {
        merge(results)
    };
    OracleReport { verdict, pairs_checked: stream.pairs.len(), truncated: stream.truncated }
}
