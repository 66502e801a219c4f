//! Small-step continuation machine with premature exits.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::types::{
    apply_binop, apply_unop, truth, Continuation, Env, EvalError, Expr, Ident, MachineState, Stmt, StmtKind,
    Value,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitKind {
    Nrm,
    Brk,
    Cont,
    Ret,
}

impl ExitKind {
    pub const ALL: [ExitKind; 4] = [ExitKind::Nrm, ExitKind::Brk, ExitKind::Cont, ExitKind::Ret];

    pub fn name(self) -> &'static str {
        match self {
            ExitKind::Nrm => "nrm",
            ExitKind::Brk => "brk",
            ExitKind::Cont => "cont",
            ExitKind::Ret => "ret",
        }
    }
}

impl fmt::Display for ExitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn eval_expr(env: &Env, e: &Expr) -> Result<Value, EvalError> {
    match e {
        Expr::Const(v) => Ok(v.clone()),
        Expr::Var(id) => match env.get(id) {
            Some(Value::Undef) => Err(EvalError::Undef),
            Some(v) => Ok(v.clone()),
            None => Err(EvalError::Unbound(id.clone())),
        },
        Expr::UnOp(op, a) => apply_unop(*op, &eval_expr(env, a)?),
        Expr::BinOp(op, a, b) => apply_binop(*op, &eval_expr(env, a)?, &eval_expr(env, b)?),
        Expr::AddrOfDeref(a) => match eval_expr(env, a)? {
            p @ Value::Ptr(_) => Ok(p),
            v => Err(EvalError::Type(format!("&* applied to non-pointer {v}"))),
        },
    }
}

/// Where a premature exit leaves the machine.
#[derive(Debug, Clone, PartialEq)]
pub enum ExitTarget {
    /// Continue with this stack.
    Stack(Vec<Continuation>),
    /// A `Kcall` frame was popped; the caller resumes with `rest`.
    Return { fname: Ident, dest: Option<Ident>, saved_env: Env, rest: Vec<Continuation> },
}

impl ExitTarget {
    /// The continuation stack after the exit, ignoring the restored frame.
    pub fn stack(&self) -> &[Continuation] {
        match self {
            ExitTarget::Stack(k) => k,
            ExitTarget::Return { rest, .. } => rest,
        }
    }
}

/// Pop `k` according to exit kind `ek`.
///
/// A `Stop` marker met on the way is replaced by `Exited { ek, v }`, which
/// lets a caller observe how a command left. `Err` means the exit has no
/// target (break or continue with no enclosing loop in the current frame).
pub fn exit_cont(ek: ExitKind, v: Option<Value>, k: &[Continuation]) -> Result<ExitTarget, String> {
    if ek == ExitKind::Nrm {
        return Ok(ExitTarget::Stack(k.to_vec()));
    }
    let escaped = |i: usize| {
        let mut out = vec![Continuation::Exited { kind: ek, value: v.clone() }];
        out.extend_from_slice(&k[i + 1..]);
        Ok(ExitTarget::Stack(out))
    };
    for (i, c) in k.iter().enumerate() {
        match (ek, c) {
            (_, Continuation::Stop) => return escaped(i),
            (ExitKind::Brk, Continuation::KloopIncr(_) | Continuation::KloopBody(_)) => {
                return Ok(ExitTarget::Stack(k[i + 1..].to_vec()))
            }
            (ExitKind::Cont, Continuation::KloopIncr(_)) => return Ok(ExitTarget::Stack(k[i..].to_vec())),
            (ExitKind::Cont, Continuation::KloopBody(_)) => {
                return Err("continue inside a loop increment".into())
            }
            (ExitKind::Brk | ExitKind::Cont, Continuation::Kcall { .. }) => {
                return Err(format!("{ek} would cross a function frame"))
            }
            (ExitKind::Ret, Continuation::Kcall { fname, dest, saved_env }) => {
                return Ok(ExitTarget::Return {
                    fname: fname.clone(),
                    dest: dest.clone(),
                    saved_env: saved_env.clone(),
                    rest: k[i + 1..].to_vec(),
                })
            }
            _ => {}
        }
    }
    match ek {
        ExitKind::Ret => Ok(ExitTarget::Stack(Vec::new())),
        _ => Err(format!("{ek} outside of any loop")),
    }
}

/// Code of a function as seen by the machine.
#[derive(Debug, Clone, PartialEq)]
pub struct FnCode {
    pub params: Vec<Ident>,
    pub locals: Vec<Ident>,
    pub body: Arc<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepResult {
    Next(MachineState),
    /// The stack was already empty.
    Done(MachineState),
    Stuck(String),
}

/// The machine: a function table plus the transition relation.
#[derive(Debug, Clone, Default)]
pub struct Machine {
    pub funcs: BTreeMap<Ident, FnCode>,
}

fn push_front(conts: &mut Vec<Continuation>, items: impl IntoIterator<Item = Continuation>) {
    let items: Vec<_> = items.into_iter().collect();
    conts.splice(0..0, items);
}

impl Machine {
    pub fn new(funcs: BTreeMap<Ident, FnCode>) -> Self {
        Machine { funcs }
    }

    /// Initial environment for running `f` with the given arguments.
    pub fn entry_env(code: &FnCode, args: &[Value]) -> Env {
        let mut env: Env = code.params.iter().cloned().zip(args.iter().cloned()).collect();
        for l in &code.locals {
            env.insert(l.clone(), Value::Undef);
        }
        env
    }

    pub fn step(&self, s: &MachineState) -> StepResult {
        let Some(head) = s.conts.first() else {
            return StepResult::Done(s.clone());
        };
        let mut env = s.env.clone();
        let mut mem = s.mem.clone();
        let mut conts: Vec<Continuation> = s.conts[1..].to_vec();
        macro_rules! stuck {
            ($($arg:tt)*) => { return StepResult::Stuck(format!($($arg)*)) };
        }
        macro_rules! eval {
            ($e:expr) => {
                match eval_expr(&env, $e) {
                    Ok(v) => v,
                    Err(err) => stuck!("{err}"),
                }
            };
        }
        match head {
            Continuation::Stop | Continuation::Exited { .. } => {}
            Continuation::KloopIncr(l) => push_front(
                &mut conts,
                [Continuation::Kseq(l.incr.clone()), Continuation::KloopBody(l.clone())],
            ),
            Continuation::KloopBody(l) => push_front(
                &mut conts,
                [Continuation::Kseq(l.body.clone()), Continuation::KloopIncr(l.clone())],
            ),
            Continuation::Kcall { dest, saved_env, .. } => {
                env = saved_env.clone();
                if let Some(d) = dest {
                    env.insert(d.clone(), Value::Undef);
                }
            }
            Continuation::Kseq(stmt) => match &stmt.kind {
                StmtKind::Skip => {}
                StmtKind::Set(id, e) => {
                    let v = eval!(e);
                    env.insert(id.clone(), v);
                }
                StmtKind::Load(id, e) => {
                    let l = match eval!(e) {
                        Value::Ptr(l) if l < mem.len() => l,
                        Value::Ptr(l) => stuck!("load from out-of-bounds location &{l}"),
                        v => stuck!("load through non-pointer {v}"),
                    };
                    if mem[l].is_undef() {
                        stuck!("load of uninitialized cell &{l}");
                    }
                    env.insert(id.clone(), mem[l].clone());
                }
                StmtKind::Store(a, e) => {
                    let l = match eval!(a) {
                        Value::Ptr(l) if l < mem.len() => l,
                        Value::Ptr(l) => stuck!("store to out-of-bounds location &{l}"),
                        v => stuck!("store through non-pointer {v}"),
                    };
                    mem[l] = eval!(e);
                }
                StmtKind::Seq(a, b) => {
                    push_front(&mut conts, [Continuation::Kseq(a.clone()), Continuation::Kseq(b.clone())])
                }
                StmtKind::If(b, c1, c2) => {
                    let v = eval!(b);
                    let taken = match truth(&v) {
                        Ok(true) => c1,
                        Ok(false) => c2,
                        Err(err) => stuck!("{err}"),
                    };
                    push_front(&mut conts, [Continuation::Kseq(taken.clone())]);
                }
                StmtKind::Loop(l) => push_front(
                    &mut conts,
                    [Continuation::Kseq(l.body.clone()), Continuation::KloopIncr(l.clone())],
                ),
                StmtKind::Break | StmtKind::Continue | StmtKind::Return(_) => {
                    let (ek, v) = match &stmt.kind {
                        StmtKind::Break => (ExitKind::Brk, None),
                        StmtKind::Continue => (ExitKind::Cont, None),
                        StmtKind::Return(Some(e)) => (ExitKind::Ret, Some(eval!(e))),
                        StmtKind::Return(None) => (ExitKind::Ret, None),
                        _ => unreachable!(),
                    };
                    match exit_cont(ek, v.clone(), &conts) {
                        Err(reason) => stuck!("{reason}"),
                        Ok(ExitTarget::Stack(k)) => conts = k,
                        Ok(ExitTarget::Return { dest, saved_env, rest, .. }) => {
                            env = saved_env;
                            if let Some(d) = dest {
                                env.insert(d, v.unwrap_or(Value::Undef));
                            }
                            conts = rest;
                        }
                    }
                }
                StmtKind::Call(call) => {
                    let Some(code) = self.funcs.get(&call.fname) else {
                        stuck!("call to unknown function `{}`", call.fname)
                    };
                    if code.params.len() != call.args.len() {
                        stuck!("`{}` expects {} arguments, got {}", call.fname, code.params.len(), call.args.len());
                    }
                    let mut args = Vec::with_capacity(call.args.len());
                    for a in &call.args {
                        args.push(eval!(a));
                    }
                    let frame = Continuation::Kcall {
                        fname: call.fname.clone(),
                        dest: call.dest.clone(),
                        saved_env: std::mem::take(&mut env),
                    };
                    env = Machine::entry_env(code, &args);
                    push_front(&mut conts, [Continuation::Kseq(code.body.clone()), frame]);
                }
            },
        }
        StepResult::Next(MachineState { env, conts, mem })
    }

    /// At most `n` steps. Returns the reached state (or the stuck reason)
    /// and the number of steps taken.
    pub fn run_n(&self, s: &MachineState, n: usize) -> (Result<MachineState, String>, usize) {
        let mut cur = s.clone();
        for i in 0..n {
            match self.step(&cur) {
                StepResult::Next(next) => cur = next,
                StepResult::Done(done) => return (Ok(done), i),
                StepResult::Stuck(reason) => return (Err(reason), i),
            }
        }
        (Ok(cur), n)
    }

    pub fn run_to_completion(&self, s: &MachineState, fuel: usize) -> RunOutcome {
        let mut cur = s.clone();
        for i in 0..=fuel {
            if cur.is_final() {
                return RunOutcome::Done { state: cur, steps: i };
            }
            if i == fuel {
                break;
            }
            match self.step(&cur) {
                StepResult::Next(next) => cur = next,
                StepResult::Done(done) => return RunOutcome::Done { state: done, steps: i },
                StepResult::Stuck(reason) => return RunOutcome::Stuck { state: cur, steps: i, reason },
            }
        }
        RunOutcome::FuelExhausted { state: cur }
    }

    /// Run until the head is a `Stop` (normal exit) or `Exited` marker.
    pub fn run_until_exit(&self, s: &MachineState, fuel: usize) -> ExitOutcome {
        let mut cur = s.clone();
        for i in 0..=fuel {
            match cur.head() {
                Some(Continuation::Stop) => {
                    return ExitOutcome::Exited { state: cur, kind: ExitKind::Nrm, value: None, steps: i }
                }
                Some(Continuation::Exited { kind, value }) => {
                    let (kind, value) = (*kind, value.clone());
                    return ExitOutcome::Exited { state: cur, kind, value, steps: i };
                }
                None => {
                    return ExitOutcome::Stuck { steps: i, reason: "stack emptied without an exit marker".into() }
                }
                Some(_) => {}
            }
            if i == fuel {
                break;
            }
            match self.step(&cur) {
                StepResult::Next(next) => cur = next,
                StepResult::Done(_) => unreachable!("nonempty stack"),
                StepResult::Stuck(reason) => return ExitOutcome::Stuck { steps: i, reason },
            }
        }
        ExitOutcome::FuelExhausted
    }

    /// Step-by-step trace with environment and memory deltas.
    pub fn trace(&self, s: &MachineState, fuel: usize) -> (Vec<TraceStep>, RunOutcome) {
        let mut out = Vec::new();
        let mut cur = s.clone();
        for i in 0..fuel {
            let Some(head) = cur.head() else {
                return (out, RunOutcome::Done { state: cur, steps: i });
            };
            let kind = head.kind_name();
            match self.step(&cur) {
                StepResult::Next(next) => {
                    out.push(TraceStep::between(i, kind, &cur, &next));
                    cur = next;
                }
                StepResult::Done(done) => return (out, RunOutcome::Done { state: done, steps: i }),
                StepResult::Stuck(reason) => return (out, RunOutcome::Stuck { state: cur, steps: i, reason }),
            }
        }
        if cur.is_final() {
            return (out, RunOutcome::Done { state: cur, steps: fuel });
        }
        (out, RunOutcome::FuelExhausted { state: cur })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Done { state: MachineState, steps: usize },
    Stuck { state: MachineState, steps: usize, reason: String },
    FuelExhausted { state: MachineState },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExitOutcome {
    Exited { state: MachineState, kind: ExitKind, value: Option<Value>, steps: usize },
    Stuck { steps: usize, reason: String },
    FuelExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceStep {
    pub step_index: usize,
    pub head_continuation_kind: &'static str,
    /// Changed or added variables; `null` for removed ones.
    pub env_delta: BTreeMap<Ident, Option<Value>>,
    pub mem_delta: BTreeMap<usize, Value>,
}

impl TraceStep {
    fn between(i: usize, kind: &'static str, a: &MachineState, b: &MachineState) -> TraceStep {
        let mut env_delta = BTreeMap::new();
        for (k, v) in &b.env {
            if a.env.get(k) != Some(v) {
                env_delta.insert(k.clone(), Some(v.clone()));
            }
        }
        for k in a.env.keys() {
            if !b.env.contains_key(k) {
                env_delta.insert(k.clone(), None);
            }
        }
        let mem_delta = b
            .mem
            .iter()
            .enumerate()
            .filter(|(l, v)| a.mem.get(*l) != Some(v))
            .map(|(l, v)| (l, v.clone()))
            .collect();
        TraceStep { step_index: i, head_continuation_kind: kind, env_delta, mem_delta }
    }
}
