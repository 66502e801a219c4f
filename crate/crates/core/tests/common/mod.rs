#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vstflow::cli::corpus_files;
use vstflow::logic::IfcAssertTemplate;
use vstflow::oracle::{enumerate_initial_pairs, frame_vars, EnumerationBudget, Frame};
use vstflow::parser::{parse, pretty};
use vstflow::program::SourceProgram;
use vstflow::semantics::{exit_cont, ExitKind, ExitTarget, Machine};
use vstflow::types::{Continuation, Env, Expr, Ident, LoopStmt, MachineState, Stmt, StmtKind, Value};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus() -> Vec<(String, SourceProgram)> {
    corpus_files(&corpus_dir())
        .expect("corpus directory")
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let prog = parse(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (p.file_name().unwrap().to_string_lossy().into_owned(), prog)
        })
        .collect()
}

pub fn load(name: &str) -> SourceProgram {
    let text = std::fs::read_to_string(corpus_dir().join(name)).unwrap();
    parse(&text).unwrap()
}

/// Does some loop body contain a break, continue or return?
pub fn exits_loop_early(s: &Stmt) -> bool {
    fn has_exit(s: &Stmt) -> bool {
        match &s.kind {
            StmtKind::Break | StmtKind::Continue | StmtKind::Return(_) => true,
            StmtKind::Seq(a, b) | StmtKind::If(_, a, b) => has_exit(a) || has_exit(b),
            StmtKind::Loop(l) => has_exit(&l.body) || has_exit(&l.incr),
            _ => false,
        }
    }
    // `while (b) s` is `loop { if (b) s else break }`; that break is not the program's.
    let user_body = |b: &Stmt| match &b.kind {
        StmtKind::If(_, then, els) if matches!(els.kind, StmtKind::Break) => has_exit(then),
        _ => has_exit(b),
    };
    match &s.kind {
        StmtKind::Loop(l) => user_body(&l.body) || has_exit(&l.incr),
        StmtKind::Seq(a, b) | StmtKind::If(_, a, b) => exits_loop_early(a) || exits_loop_early(b),
        _ => false,
    }
}

fn lp(tag: i64) -> Arc<LoopStmt> {
    Arc::new(LoopStmt {
        incr: Arc::new(Stmt::set("i", Expr::int(tag))),
        body: Arc::new(Stmt::skip()),
        invariant: IfcAssertTemplate::default(),
        incr_invariant: IfcAssertTemplate::default(),
    })
}

fn kseq(n: i64) -> Continuation {
    Continuation::seq(Stmt::set("x", Expr::int(n)))
}

fn kcall(dest: Option<&str>) -> Continuation {
    Continuation::Kcall { fname: Ident::new("g"), dest: dest.map(Ident::new), saved_env: Env::new() }
}

fn exited(kind: ExitKind, value: Option<Value>) -> Continuation {
    Continuation::Exited { kind, value }
}

type Case = (&'static str, ExitKind, Option<Value>, Vec<Continuation>, Want);

enum Want {
    Stack(Vec<Continuation>),
    Return(Vec<Continuation>),
    Reject,
}

/// Run the exit_cont table; the number of cases on success.
pub fn exit_cont_table() -> Result<usize, String> {
    use Continuation::{KloopBody, KloopIncr, Stop};
    use ExitKind::*;
    let (inner, outer) = (lp(1), lp(2));
    let cases: Vec<Case> = vec![
        ("nrm keeps the stack", Nrm, None, vec![kseq(1), KloopIncr(inner.clone())], Want::Stack(vec![kseq(1), KloopIncr(inner.clone())])),
        ("break leaves the loop", Brk, None, vec![kseq(1), KloopIncr(inner.clone()), kseq(2)], Want::Stack(vec![kseq(2)])),
        ("continue resumes at the increment", Cont, None, vec![kseq(1), kseq(2), KloopIncr(inner.clone()), kseq(3)], Want::Stack(vec![KloopIncr(inner.clone()), kseq(3)])),
        (
            "break in nested loops leaves only the inner one",
            Brk,
            None,
            vec![kseq(1), KloopIncr(inner.clone()), kseq(2), KloopIncr(outer.clone())],
            Want::Stack(vec![kseq(2), KloopIncr(outer.clone())]),
        ),
        (
            "continue in nested loops targets the inner increment",
            Cont,
            None,
            vec![KloopIncr(inner.clone()), KloopIncr(outer.clone())],
            Want::Stack(vec![KloopIncr(inner.clone()), KloopIncr(outer.clone())]),
        ),
        ("break from an increment", Brk, None, vec![kseq(1), KloopBody(inner.clone()), kseq(2)], Want::Stack(vec![kseq(2)])),
        ("continue from an increment", Cont, None, vec![KloopBody(inner.clone())], Want::Reject),
        ("break inside a call", Brk, None, vec![kseq(1), kcall(None), KloopIncr(outer.clone())], Want::Reject),
        ("continue inside a call", Cont, None, vec![kcall(Some("r")), KloopIncr(outer.clone())], Want::Reject),
        ("break outside any loop", Brk, None, vec![kseq(1), kseq(2)], Want::Reject),
        ("continue outside any loop", Cont, None, vec![], Want::Reject),
        (
            "return crosses loops to the call frame",
            Ret,
            Some(Value::Int(7)),
            vec![kseq(1), KloopIncr(inner.clone()), KloopIncr(outer.clone()), kcall(Some("r")), kseq(9)],
            Want::Return(vec![kseq(9)]),
        ),
        ("return at top level empties the stack", Ret, None, vec![kseq(1), KloopIncr(inner.clone())], Want::Stack(vec![])),
        (
            "stop marker records a break",
            Brk,
            None,
            vec![kseq(1), Stop, KloopIncr(outer.clone())],
            Want::Stack(vec![exited(Brk, None), KloopIncr(outer.clone())]),
        ),
        ("stop marker records a return value", Ret, Some(Value::Int(3)), vec![Stop], Want::Stack(vec![exited(Ret, Some(Value::Int(3)))])),
        ("nrm passes a stop marker untouched", Nrm, None, vec![Stop], Want::Stack(vec![Stop])),
    ];
    let n = cases.len();
    for (name, ek, v, k, want) in cases {
        let got = exit_cont(ek, v, &k);
        match (want, got) {
            (Want::Stack(w), Ok(ExitTarget::Stack(g))) if g == w => {}
            (Want::Return(w), Ok(ExitTarget::Return { fname, dest, rest, .. }))
                if rest == w && fname.as_str() == "g" && dest == Some(Ident::new("r")) => {}
            (Want::Reject, Err(_)) => {}
            (_, got) => return Err(format!("{name}: unexpected {got:?}")),
        }
    }
    Ok(n)
}

fn random_reachable(rng: &mut StdRng, progs: &[(String, SourceProgram)], machines: &[Machine]) -> (usize, MachineState) {
    loop {
        let i = rng.gen_range(0..progs.len());
        let p = &progs[i].1;
        let f = &p.functions[rng.gen_range(0..p.functions.len())];
        let (vars, init) = frame_vars(f);
        let frame = Frame { machine: &machines[i], vars: &vars, initialized: &init, heap_size: p.heap.size };
        let budget = EnumerationBudget { max_pairs: 64, ..Default::default() };
        let stream = enumerate_initial_pairs(&f.spec.logicals, &f.spec.pre, &frame, &budget);
        if stream.witnesses.is_empty() {
            continue;
        }
        let w = &stream.witnesses[rng.gen_range(0..stream.witnesses.len())];
        let start = MachineState::new(w.state.env.clone(), vec![Continuation::seq(f.body.clone())], w.state.mem.clone());
        let n = rng.gen_range(0..40);
        if let (Ok(s), _) = machines[i].run_n(&start, n) {
            return (i, s);
        }
    }
}


/// Step every one of `n` random reachable corpus states twice and compare.
pub fn determinism(n: usize, seed: u64) -> Result<(), String> {
    let progs = corpus();
    let machines: Vec<Machine> = progs.iter().map(|(_, p)| p.machine()).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..n {
        let (i, s) = random_reachable(&mut rng, &progs, &machines);
        let m = &machines[i];
        if m.step(&s) != m.step(&s.clone()) || m.run_n(&s, 25) != m.run_n(&s, 25) {
            return Err(format!("{}: two steps from the same state differ", progs[i].0));
        }
    }
    Ok(())
}

/// Print and re-parse every corpus program; the number of programs.
pub fn round_trip() -> Result<usize, String> {
    let progs = corpus();
    for (name, p) in &progs {
        let text = pretty(p);
        let q = parse(&text).map_err(|e| format!("{name}: {e}"))?;
        if *p != q || pretty(&q) != text {
            return Err(format!("{name} changes after a round trip"));
        }
    }
    Ok(progs.len())
}
