//! Continuation equivalence, head-equivalence, sync and the IFC guard.

use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;

use super::{enumerate_pairs_with, merge, Counterexample, Divergence, DivergenceKind, EnumerationBudget, Frame};
use super::{OracleReport, OracleVerdict};
use crate::logic::{IfcAssertTemplate, LogicalDecls};
use crate::semantics::{Machine, StepResult};
use crate::types::{Continuation, Env, Ident, MachineState, Value};

/// Equal, or both resume the same function with the same destination.
pub fn cont_equiv(c1: &Continuation, c2: &Continuation) -> bool {
    match (c1, c2) {
        (
            Continuation::Kcall { fname, dest, .. },
            Continuation::Kcall { fname: fname2, dest: dest2, .. },
        ) => fname == fname2 && dest == dest2,
        _ => c1 == c2,
    }
}

pub fn head_equiv(s: &MachineState, s2: &MachineState) -> bool {
    heads_equiv(s.head(), s2.head())
}

fn heads_equiv(a: Option<&Continuation>, b: Option<&Continuation>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => cont_equiv(a, b),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyncOutcome {
    /// Both runs ended (empty stack or stuck) within the bound.
    Pass,
    /// No failure up to the bound, but at least one run was still going.
    PassUpToBound,
    FailAt { step: usize, reason: String },
}

enum End {
    Stuck,
    Done,
    Bound,
}

/// Heads of the first `bound + 1` states of a run and how it ended.
fn trajectory(m: &Machine, s: &MachineState, bound: usize) -> (Vec<Option<Continuation>>, End) {
    let mut heads = vec![s.head().cloned()];
    let mut cur = s.clone();
    for _ in 0..bound {
        match m.step(&cur) {
            StepResult::Next(next) => {
                heads.push(next.head().cloned());
                cur = next;
            }
            StepResult::Done(_) => return (heads, End::Done),
            StepResult::Stuck(_) => return (heads, End::Stuck),
        }
    }
    let end = if cur.is_final() { End::Done } else { End::Bound };
    (heads, end)
}

/// For every `n ≤ bound` at which both runs are defined, the states reached
/// after `n` steps are head-equivalent (up to `slack` steps of skew). A run
/// that is stuck while the other still steps fails at the step it could not
/// take.
pub fn check_sync(m: &Machine, s: &MachineState, s2: &MachineState, bound: usize, slack: usize) -> SyncOutcome {
    let (a, end_a) = trajectory(m, s, bound);
    let (b, end_b) = trajectory(m, s2, bound);
    let common = a.len().min(b.len());
    for n in 0..common {
        let lo = n.saturating_sub(slack);
        let ok = (lo..=(n + slack).min(b.len() - 1)).any(|k| heads_equiv(a[n].as_ref(), b[k].as_ref()));
        if !ok {
            let show = |h: &Option<Continuation>| h.as_ref().map_or("empty stack", |c| c.kind_name());
            return SyncOutcome::FailAt {
                step: n,
                reason: format!("heads differ after {n} steps ({} vs {})", show(&a[n]), show(&b[n])),
            };
        }
    }
    if a.len() != b.len() {
        let (short, end) = if a.len() < b.len() { ("left", &end_a) } else { ("right", &end_b) };
        if matches!(end, End::Stuck) {
            return SyncOutcome::FailAt { step: common, reason: format!("{short} run is stuck after {} steps", common - 1) };
        }
    }
    match (end_a, end_b) {
        (End::Bound, _) | (_, End::Bound) => SyncOutcome::PassUpToBound,
        _ => SyncOutcome::Pass,
    }
}

/// Enumerate pairs of `p` and require every pair to stay in sync when placed
/// by `build` (its flag marks the primed side). `None` from `build` means the
/// state has no defined successor, which makes the pair vacuous.
pub(crate) fn iguard_with(
    decls: &LogicalDecls,
    p: &IfcAssertTemplate,
    vars: &[Ident],
    initialized: &BTreeSet<Ident>,
    frame: &Frame<'_>,
    budget: &EnumerationBudget,
    build: impl Fn(&MachineState, bool) -> Option<MachineState> + Sync,
) -> OracleReport {
    let stream = enumerate_pairs_with(decls, p, vars, initialized, frame.heap_size, budget);
    let ws = &stream.witnesses;
    // Witnesses differing only in logical variables give the same runs.
    let mut ids: HashMap<(&Env, &Vec<Value>), usize> = HashMap::new();
    let state_id: Vec<usize> = ws
        .iter()
        .map(|w| {
            let n = ids.len();
            *ids.entry((&w.state.env, &w.state.mem)).or_insert(n)
        })
        .collect();
    let mut seen = HashSet::new();
    let distinct: Vec<(usize, usize)> =
        stream.pairs.iter().copied().filter(|&(i, j)| seen.insert((state_id[i], state_id[j]))).collect();
    let results: Vec<OracleVerdict> = distinct
        .par_iter()
        .map(|&(i, j)| {
            let (Some(s), Some(s2)) = (build(&ws[i].state, false), build(&ws[j].state, true)) else {
                return OracleVerdict::Pass;
            };
            match check_sync(frame.machine, &s, &s2, budget.sync_bound, budget.skew_slack) {
                SyncOutcome::Pass => OracleVerdict::Pass,
                SyncOutcome::PassUpToBound => {
                    OracleVerdict::Inconclusive(format!("sync bound {} reached", budget.sync_bound))
                }
                SyncOutcome::FailAt { step, reason } => OracleVerdict::Counterexample(Box::new(Counterexample::new(
                    &ws[i],
                    &ws[j],
                    Divergence { kind: DivergenceKind::HeadEquiv, step: Some(step), detail: reason },
                ))),
            }
        })
        .collect();
    let verdict = if stream.truncated && stream.pairs.is_empty() {
        OracleVerdict::Inconclusive("state enumeration exceeds the pair budget".into())
    } else {
        merge(results)
    };
    OracleReport { verdict, pairs_checked: stream.pairs.len(), truncated: stream.truncated }
}

/// `iguard p k k′`: every low-equivalent pair of `p`-states, placed on `k`
/// and `k′`, is in sync. All in-scope variables are taken as initialized.
pub fn check_iguard(
    decls: &LogicalDecls,
    p: &IfcAssertTemplate,
    k: &[Continuation],
    k2: &[Continuation],
    frame: &Frame<'_>,
    budget: &EnumerationBudget,
) -> OracleReport {
    let init: BTreeSet<Ident> = frame.vars.iter().cloned().collect();
    iguard_with(decls, p, frame.vars, &init, frame, budget, |s, primed| {
        Some(MachineState::new(s.env.clone(), if primed { k2 } else { k }.to_vec(), s.mem.clone()))
    })
}
