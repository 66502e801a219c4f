//! Two-run non-interference testing by exhaustive enumeration.
//!
//! All quantifiers over logical environments and states are instantiated by
//! enumerating finite domains, so every verdict is relative to an
//! [`EnumerationBudget`].

mod direct;
mod guard;
mod sync;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::logic::entail::public_env;
use crate::logic::{
    low_equiv, skolemize, witnesses, Fresh, GroundHeapClsf, GroundStackClsf, IfcAssertTemplate, LogicalDecls,
    LogicalEnv, Universe,
};
use crate::program::{FunctionDef, SourceProgram};
use crate::semantics::Machine;
use crate::types::{Env, HeapLoc, Ident, MachineState, Value};

pub use direct::{check_direct_ni, check_pair_direct, PairOutcome};
pub use guard::{canonical_tests, check_judgment_guard_style, GuardReport, TestContinuation};
pub use sync::{check_iguard, check_sync, cont_equiv, head_equiv, SyncOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationBudget {
    /// Range of every unconstrained slot.
    pub value_domain: Vec<Value>,
    /// Cap on enumerated state pairs.
    pub max_pairs: usize,
    pub fuel: usize,
    pub sync_bound: usize,
    /// Largest step-count skew tolerated by sync.
    pub skew_slack: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            value_domain: vec![Value::Int(0), Value::Int(1)],
            max_pairs: 250_000,
            fuel: 100_000,
            sync_bound: 20_000,
            skew_slack: 0,
        }
    }
}

impl EnumerationBudget {
    /// Integer domain `0..=k`.
    pub fn with_int_domain(mut self, k: i64) -> Self {
        self.value_domain = (0..=k).map(Value::Int).collect();
        self
    }
}

/// What the oracle needs besides a statement and its specification: the
/// machine that runs it and the shape of its frame.
#[derive(Debug, Clone, Copy)]
pub struct Frame<'a> {
    pub machine: &'a Machine,
    /// Stack identifiers in scope.
    pub vars: &'a [Ident],
    /// Identifiers holding a value on entry; the rest start uninitialized.
    pub initialized: &'a [Ident],
    pub heap_size: usize,
}

/// A witness state with its logical environment and ground classifications.
#[derive(Debug, Clone)]
pub struct Witness {
    pub x: LogicalEnv,
    pub state: MachineState,
    pub n: GroundStackClsf,
    pub a: GroundHeapClsf,
}

/// Enumerated initial pairs as indices into `witnesses`, in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct PairStream {
    pub witnesses: Vec<Witness>,
    pub pairs: Vec<(usize, usize)>,
    pub truncated: bool,
}

/// All `(x, x′, s, s′)` with both states satisfying `pre` at their own
/// logical environment and low-equivalent under the pair of ground
/// classifications.
pub fn enumerate_initial_pairs(
    decls: &LogicalDecls,
    pre: &IfcAssertTemplate,
    frame: &Frame<'_>,
    budget: &EnumerationBudget,
) -> PairStream {
    let initialized: BTreeSet<Ident> = frame.initialized.iter().cloned().collect();
    enumerate_pairs_with(decls, pre, frame.vars, &initialized, frame.heap_size, budget)
}

pub(crate) fn enumerate_pairs_with(
    decls: &LogicalDecls,
    pre: &IfcAssertTemplate,
    vars: &[Ident],
    initialized: &BTreeSet<Ident>,
    heap_size: usize,
    budget: &EnumerationBudget,
) -> PairStream {
    let u = Universe {
        vars: vars.to_vec(),
        heap_size,
        value_domain: budget.value_domain.clone(),
        witness_cap: budget.max_pairs.max(1),
    };
    let st = skolemize(decls, pre, &u, initialized, &mut Fresh::new());
    let ws = match witnesses(&st, &u) {
        Ok(ws) => ws,
        Err(_) => return PairStream { truncated: true, ..Default::default() },
    };
    let witnesses: Vec<Witness> = ws
        .into_iter()
        .filter_map(|(x, state)| {
            let n = pre.stack.ground(&x).ok()?;
            let a = pre.heap.ground(&x).ok()?;
            Some(Witness { x, state, n, a })
        })
        .collect();
    let mut pairs = Vec::new();
    let mut truncated = false;
    'outer: for (i, w) in witnesses.iter().enumerate() {
        for (j, w2) in witnesses.iter().enumerate() {
            if low_equiv(&w.state, &w2.state, &w.n, &w2.n, &w.a, &w2.a) {
                if pairs.len() == budget.max_pairs {
                    truncated = true;
                    break 'outer;
                }
                pairs.push((i, j));
            }
        }
    }
    PairStream { witnesses, pairs, truncated }
}

/// Concrete state in serializable form (the continuation stack is implied by
/// the statement under test).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateJson {
    pub env: Env,
    pub mem: Vec<Value>,
}

impl StateJson {
    pub fn of(s: &MachineState) -> Self {
        StateJson { env: s.env.clone(), mem: s.mem.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DivergenceKind {
    FinalLowEquiv,
    HeadEquiv,
    StuckMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub kind: DivergenceKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub step: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Counterexample {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub function: Option<Ident>,
    pub x: LogicalEnv,
    pub x_prime: LogicalEnv,
    pub s1: StateJson,
    pub s1_prime: StateJson,
    pub divergence_point: Divergence,
}

impl Counterexample {
    pub(crate) fn new(a: &Witness, b: &Witness, divergence_point: Divergence) -> Self {
        Counterexample {
            function: None,
            x: public_env(&a.x),
            x_prime: public_env(&b.x),
            s1: StateJson::of(&a.state),
            s1_prime: StateJson::of(&b.state),
            divergence_point,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleVerdict {
    Pass,
    Counterexample(Box<Counterexample>),
    /// Some pair ran out of fuel and none failed.
    Inconclusive(String),
}

impl OracleVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            OracleVerdict::Pass => "pass",
            OracleVerdict::Counterexample(_) => "counterexample",
            OracleVerdict::Inconclusive(_) => "inconclusive",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            OracleVerdict::Pass => 0,
            OracleVerdict::Inconclusive(_) => 1,
            OracleVerdict::Counterexample(_) => 2,
        }
    }

    /// The more severe of two verdicts; the earlier one on ties.
    pub fn worst(self, other: OracleVerdict) -> OracleVerdict {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub verdict: OracleVerdict,
    pub pairs_checked: usize,
    pub truncated: bool,
}

/// Fold per-pair results in enumeration order: the first counterexample wins,
/// then the first inconclusive pair.
pub(crate) fn merge<I: IntoIterator<Item = OracleVerdict>>(results: I) -> OracleVerdict {
    let mut out = OracleVerdict::Pass;
    for r in results {
        if let OracleVerdict::Counterexample(_) = r {
            return r;
        }
        out = out.worst(r);
    }
    out
}

/// Report for one program: every function under direct-style and
/// guard-style testing.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProgramReport {
    pub program: String,
    pub verdict: &'static str,
    pub pairs_checked: usize,
    pub truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(skip)]
    pub inconclusive: Option<String>,
}

/// Stack identifiers in scope and those set on entry.
pub fn frame_vars(f: &FunctionDef) -> (Vec<Ident>, Vec<Ident>) {
    (f.scope(), f.param_names())
}

pub fn test_function(
    p: &SourceProgram,
    machine: &Machine,
    f: &FunctionDef,
    budget: &EnumerationBudget,
    guard_style: bool,
) -> OracleReport {
    let (vars, init) = frame_vars(f);
    let frame = Frame { machine, vars: &vars, initialized: &init, heap_size: p.heap.size };
    let s = &f.spec;
    let direct = check_direct_ni(&s.logicals, &s.pre, &f.body, &s.post, &frame, budget);
    let mut report = direct;
    if guard_style && !matches!(report.verdict, OracleVerdict::Counterexample(_)) {
        let tests = canonical_tests(&s.logicals, &s.post, &frame);
        let g = check_judgment_guard_style(&s.logicals, &s.pre, &f.body, &s.post, &tests, &frame, budget);
        report.verdict = report.verdict.worst(g.verdict);
        report.truncated |= g.truncated;
    }
    if let OracleVerdict::Counterexample(c) = &mut report.verdict {
        c.function = Some(f.name.clone());
    }
    report
}

/// Test every function of `p`, in declaration order.
pub fn test_program(name: &str, p: &SourceProgram, budget: &EnumerationBudget, guard_style: bool) -> ProgramReport {
    let machine = p.machine();
    let mut verdict = OracleVerdict::Pass;
    let mut pairs_checked = 0;
    let mut truncated = false;
    for f in &p.functions {
        let r = test_function(p, &machine, f, budget, guard_style);
        pairs_checked += r.pairs_checked;
        truncated |= r.truncated;
        verdict = verdict.worst(r.verdict);
    }
    let (counterexample, inconclusive) = match &verdict {
        OracleVerdict::Counterexample(c) => (Some((**c).clone()), None),
        OracleVerdict::Inconclusive(why) => (None, Some(why.clone())),
        OracleVerdict::Pass => (None, None),
    };
    ProgramReport {
        program: name.to_string(),
        verdict: verdict.name(),
        pairs_checked,
        truncated,
        counterexample,
        inconclusive,
    }
}

/// Memory locations `0..heap_size` labelled `Lo` under every environment.
pub(crate) fn constant_lo_locs(decls: &LogicalDecls, t: &IfcAssertTemplate, heap_size: usize) -> Vec<HeapLoc> {
    (0..heap_size)
        .filter(|l| decls.envs().all(|x| t.heap.ground(&x).is_ok_and(|a| a.get(l) == crate::types::Label::Lo)))
        .collect()
}

pub(crate) fn constant_lo_vars(decls: &LogicalDecls, t: &IfcAssertTemplate, vars: &[Ident]) -> Vec<Ident> {
    vars.iter()
        .filter(|v| decls.envs().all(|x| t.stack.ground(&x).is_ok_and(|n| n.get(v) == crate::types::Label::Lo)))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests;
