//! Guard-style judgment: test continuations appended to the command must
//! stay in sync across every low-equivalent pair.

use std::collections::BTreeSet;

use super::sync::iguard_with;
use super::{constant_lo_locs, constant_lo_vars, EnumerationBudget, Frame, OracleVerdict};
use crate::logic::{IfcAssertTemplate, LogicalDecls, PostconditionTemplate};
use crate::program::RET_VAL;
use crate::semantics::{exit_cont, ExitKind, ExitTarget};
use crate::types::{BinOp, Continuation, Env, Expr, HeapLoc, Ident, MachineState, Stmt, Value};

/// A residual pair of stacks `(k, k′)` run after the command.
#[derive(Debug, Clone, PartialEq)]
pub struct TestContinuation {
    pub name: String,
    pub k: Vec<Continuation>,
    pub k_prime: Vec<Continuation>,
}

impl TestContinuation {
    fn same(name: String, k: Vec<Continuation>) -> Self {
        TestContinuation { name, k_prime: k.clone(), k }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuardReport {
    pub verdict: OracleVerdict,
    pub pairs_checked: usize,
    pub truncated: bool,
    /// Tests whose return-guard premise did not hold.
    pub skipped: Vec<String>,
    pub tested: Vec<String>,
}

const T: &str = "__t";
const MARK: &str = "__m";
const TEST_FN: &str = "__test";
const RESULT: &str = "__r";

fn mark(i: i64) -> Stmt {
    Stmt::set(MARK, Expr::int(i))
}

/// Read a value into `__t` with `load`, then branch so that any two distinct
/// values lead to different continuation heads: one branch per boolean and
/// pointer, and a countdown (or count-up) loop for integers.
fn observe(load: Stmt, heap_size: usize) -> Stmt {
    let t = || Expr::var(T);
    let inv = IfcAssertTemplate::default();
    let down = Stmt::while_loop(
        Expr::bin(BinOp::Lt, Expr::int(0), t()),
        Stmt::set(T, Expr::bin(BinOp::Sub, t(), Expr::int(1))),
        inv.clone(),
    );
    let up = Stmt::while_loop(
        Expr::bin(BinOp::Lt, t(), Expr::int(0)),
        Stmt::set(T, Expr::bin(BinOp::Add, t(), Expr::int(1))),
        inv,
    );
    let mut chain = Stmt::ite(
        Expr::bin(BinOp::Lt, Expr::int(0), t()),
        Stmt::seq(mark(1), down),
        Stmt::ite(Expr::bin(BinOp::Lt, t(), Expr::int(0)), Stmt::seq(mark(2), up), mark(3)),
    );
    let special: Vec<Value> =
        [Value::Bool(true), Value::Bool(false)].into_iter().chain((0..heap_size).map(Value::Ptr)).collect();
    for (i, v) in special.into_iter().enumerate().rev() {
        chain = Stmt::ite(Expr::bin(BinOp::Eq, t(), Expr::Const(v)), mark(10 + i as i64), chain);
    }
    Stmt::seq(load, chain)
}

fn observe_var(id: &Ident, heap_size: usize) -> Stmt {
    observe(Stmt::set(T, Expr::Var(id.clone())), heap_size)
}

fn observe_cell(loc: HeapLoc, heap_size: usize) -> Stmt {
    observe(Stmt::load(T, Expr::Const(Value::Ptr(loc))), heap_size)
}

fn call_frame(dest: Option<&str>) -> Continuation {
    Continuation::Kcall { fname: Ident::new(TEST_FN), dest: dest.map(Ident::new), saved_env: Env::new() }
}

/// The empty test, plus one bit test for each variable and cell that the
/// normal postcondition always classifies `Lo`, and for the return value and
/// cells the return postcondition always classifies `Lo` (run after a
/// function-return frame).
pub fn canonical_tests(decls: &LogicalDecls, post: &PostconditionTemplate, frame: &Frame<'_>) -> Vec<TestContinuation> {
    let hs = frame.heap_size;
    let mut out = vec![TestContinuation::same("empty".into(), Vec::new())];
    if !post.nrm.is_bottom() {
        for v in constant_lo_vars(decls, &post.nrm, frame.vars) {
            out.push(TestContinuation::same(format!("nrm var {v}"), vec![Continuation::seq(observe_var(&v, hs))]));
        }
        for l in constant_lo_locs(decls, &post.nrm, hs) {
            out.push(TestContinuation::same(format!("nrm cell &{l}"), vec![Continuation::seq(observe_cell(l, hs))]));
        }
    }
    if !post.ret.is_bottom() {
        if !constant_lo_vars(decls, &post.ret, &[Ident::new(RET_VAL)]).is_empty() {
            let k = vec![call_frame(Some(RESULT)), Continuation::seq(observe_var(&Ident::new(RESULT), hs))];
            out.push(TestContinuation::same("ret value".into(), k));
        }
        for l in constant_lo_locs(decls, &post.ret, hs) {
            let k = vec![call_frame(None), Continuation::seq(observe_cell(l, hs))];
            out.push(TestContinuation::same(format!("ret cell &{l}"), k));
        }
    }
    out
}

/// The state `exit_cont ek v k` resumes in, or `None` if the exit is stuck.
fn exit_state(s: &MachineState, ek: ExitKind, v: Option<Value>, k: &[Continuation]) -> Option<MachineState> {
    match exit_cont(ek, v.clone(), k).ok()? {
        ExitTarget::Stack(k) => Some(MachineState::new(s.env.clone(), k, s.mem.clone())),
        ExitTarget::Return { dest, mut saved_env, rest, .. } => {
            if let Some(d) = dest {
                saved_env.insert(d, v.unwrap_or(Value::Undef));
            }
            Some(MachineState::new(saved_env, rest, s.mem.clone()))
        }
    }
}

fn stack_reads(k: &[Continuation]) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    for c in k {
        match c {
            Continuation::Kseq(s) => s.reads(&mut out),
            Continuation::KloopIncr(l) | Continuation::KloopBody(l) => {
                l.incr.reads(&mut out);
                l.body.reads(&mut out);
            }
            Continuation::Kcall { .. } | Continuation::Stop | Continuation::Exited { .. } => {}
        }
    }
    out
}

/// `irguard post k k′`: for every exit kind and value, low-equivalent
/// post-states resumed on `exit_cont` of the stacks stay in sync.
fn return_guard(
    decls: &LogicalDecls,
    post: &PostconditionTemplate,
    t: &TestContinuation,
    frame: &Frame<'_>,
    budget: &EnumerationBudget,
) -> bool {
    let ret = Ident::new(RET_VAL);
    for ek in ExitKind::ALL {
        let p = post.get(ek);
        if p.is_bottom() {
            continue;
        }
        let mut vars = frame.vars.to_vec();
        if ek == ExitKind::Ret && !vars.contains(&ret) {
            vars.push(ret.clone());
        }
        // Variables the stacks never read cannot influence their runs.
        let mut init = stack_reads(&t.k);
        init.extend(stack_reads(&t.k_prime));
        if ek == ExitKind::Ret {
            init.insert(ret.clone());
        }
        let with_value = if ek == ExitKind::Ret { vec![true, false] } else { vec![false] };
        for take_value in with_value {
            let r = iguard_with(decls, p, &vars, &init, frame, budget, |s, primed| {
                let v = if take_value { s.env.get(&ret).cloned() } else { None };
                exit_state(s, ek, v, if primed { &t.k_prime } else { &t.k })
            });
            if !matches!(r.verdict, OracleVerdict::Pass) {
                return false;
            }
        }
    }
    true
}

/// For each supplied test whose return-guard premise holds, the command
/// followed by the test must keep every low-equivalent pair of
/// precondition states in sync.
pub fn check_judgment_guard_style(
    decls: &LogicalDecls,
    pre: &IfcAssertTemplate,
    c: &Stmt,
    post: &PostconditionTemplate,
    tests: &[TestContinuation],
    frame: &Frame<'_>,
    budget: &EnumerationBudget,
) -> GuardReport {
    let init: BTreeSet<Ident> = frame.initialized.iter().cloned().collect();
    let mut report = GuardReport {
        verdict: OracleVerdict::Pass,
        pairs_checked: 0,
        truncated: false,
        skipped: Vec::new(),
        tested: Vec::new(),
    };
    for t in tests {
        if !return_guard(decls, post, t, frame, budget) {
            report.skipped.push(t.name.clone());
            continue;
        }
        let r = iguard_with(decls, pre, frame.vars, &init, frame, budget, |s, primed| {
            let mut k = vec![Continuation::seq(c.clone())];
            k.extend_from_slice(if primed { &t.k_prime } else { &t.k });
            Some(MachineState::new(s.env.clone(), k, s.mem.clone()))
        });
        report.tested.push(t.name.clone());
        report.pairs_checked += r.pairs_checked;
        report.truncated |= r.truncated;
        let failed = matches!(r.verdict, OracleVerdict::Counterexample(_));
        report.verdict = std::mem::replace(&mut report.verdict, OracleVerdict::Pass).worst(r.verdict);
        if let OracleVerdict::Counterexample(cx) = &mut report.verdict {
            if failed {
                cx.divergence_point.detail = format!("{} (test: {})", cx.divergence_point.detail, t.name);
            }
            break;
        }
    }
    report
}
