//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vstflow::checker::{check_program, CheckConfig, Verdict};
use vstflow::cli::{corpus_files, soundness};
use vstflow::logic::assertion::clsf_expr;
use vstflow::logic::{glb, lle, low_equiv, lub, LabelMap};
use vstflow::oracle::{
    canonical_tests, check_direct_ni, check_judgment_guard_style, check_sync, frame_vars, test_program,
    EnumerationBudget, Frame, OracleVerdict, SyncOutcome,
};
use vstflow::program::SourceProgram;
use vstflow::semantics::{eval_expr, Machine};
use vstflow::types::{BinOp, Continuation, Env, Expr, Ident, Label, MachineState, Stmt, UnOp, Value};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rejected_at(p: &SourceProgram) -> Option<&'static str> {
    check_program(p, &p.specs(), &CheckConfig::default()).unwrap().into_iter().find_map(|v| match v.verdict {
        Verdict::Rejected(r) => Some(r.rule),
        Verdict::Accepted(_) => None,
    })
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let r = f()?;
    let dt = t.elapsed();
    if dt > limit {
        return Err(format!("{r}, but took {dt:.2?} (limit {limit:?})"));
    }
    Ok(format!("{r} in {dt:.2?}"))
}

fn leak() -> Outcome {
    timed(Duration::from_secs(1), || {
        let p = common::load("leak.c");
        let rule = rejected_at(&p).ok_or("leak accepted")?;
        if rule != "ifc-post" && rule != "ifc-set" {
            return Err(format!("rejected at {rule}"));
        }
        let r = test_program("leak.c", &p, &EnumerationBudget::default().with_int_domain(1), false);
        match r.counterexample {
            Some(_) => Ok(format!("rejected at {rule}, refuted over {{0,1}}")),
            None => Err(format!("oracle says {}", r.verdict)),
        }
    })
}

fn classify() -> Outcome {
    timed(Duration::from_secs(10), || {
        let p = common::load("classify_store.c");
        if let Some(rule) = rejected_at(&p) {
            return Err(format!("rejected at {rule}"));
        }
        let r = test_program("classify_store.c", &p, &EnumerationBudget::default(), true);
        if r.verdict != "pass" {
            return Err(format!("oracle says {}", r.verdict));
        }
        Ok(format!("accepted, {} pairs pass", r.pairs_checked))
    })
}

fn hi_guards() -> Outcome {
    let names: Vec<String> = common::corpus().into_iter().map(|(n, _)| n).filter(|n| n.starts_with("hi_guard_")).collect();
    if names.len() < 5 {
        return Err(format!("only {} hi-guard programs", names.len()));
    }
    for n in &names {
        match rejected_at(&common::load(n)) {
            Some("ifc-if") => {}
            other => return Err(format!("{n}: {other:?}")),
        }
    }
    Ok(format!("{} programs rejected at ifc-if", names.len()))
}

fn corpus_soundness() -> Outcome {
    timed(Duration::from_secs(300), || {
        let files = corpus_files(&common::corpus_dir()).map_err(|e| e.to_string())?;
        let report = soundness(&files, &CheckConfig::default(), &EnumerationBudget::default()).map_err(|e| e.to_string())?;
        if !report.violations.is_empty() {
            return Err(format!("accepted but refuted: {:?}", report.violations));
        }
        let count = |c: &str, o: &str| report.matrix.iter().filter(|r| r.checker_verdict == c && r.oracle_verdict == o).count();
        let (sa, ir, sr) = (count("accepted", "pass"), count("rejected", "counterexample"), count("rejected", "pass"));
        let loops = common::corpus().iter().filter(|(_, p)| p.functions.iter().any(|f| common::exits_loop_early(&f.body))).count();
        let line = format!("{} programs: {sa} secure+accepted, {ir} insecure+refuted, {sr} secure+rejected, {loops} with early loop exits", files.len());
        if files.len() >= 20 && sa >= 8 && ir >= 6 && sr >= 3 && loops >= 3 {
            Ok(line)
        } else {
            Err(line)
        }
    })
}

fn agreement() -> Outcome {
    let budget = EnumerationBudget::default();
    let mut compared = 0;
    for (name, p) in common::corpus() {
        let machine = p.machine();
        for f in &p.functions {
            let (vars, init) = frame_vars(f);
            let frame = Frame { machine: &machine, vars: &vars, initialized: &init, heap_size: p.heap.size };
            let s = &f.spec;
            let direct = check_direct_ni(&s.logicals, &s.pre, &f.body, &s.post, &frame, &budget).verdict;
            if matches!(direct, OracleVerdict::Inconclusive(_)) {
                continue;
            }
            let tests = canonical_tests(&s.logicals, &s.post, &frame);
            let guard = check_judgment_guard_style(&s.logicals, &s.pre, &f.body, &s.post, &tests, &frame, &budget).verdict;
            if direct.name() != guard.name() {
                return Err(format!("{name}::{}: direct {} vs guard-style {}", f.name, direct.name(), guard.name()));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} terminating functions agree"))
}

const VARS: [&str; 3] = ["a", "b", "c"];
const OPS: [BinOp; 8] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::And, BinOp::Or];

fn label(rng: &mut StdRng) -> Label {
    if rng.gen() { Label::Hi } else { Label::Lo }
}

fn label_map(rng: &mut StdRng) -> LabelMap<u8> {
    let entries = (0..rng.gen_range(0..4)).map(|_| (rng.gen_range(0..4), label(rng))).collect();
    LabelMap { entries, default: label(rng) }
}

fn value(rng: &mut StdRng, undef: bool) -> Value {
    match rng.gen_range(0..if undef { 4 } else { 3 }) {
        0 => Value::Int(rng.gen_range(0..3)),
        1 => Value::Bool(rng.gen()),
        2 => Value::Ptr(rng.gen_range(0..2)),
        _ => Value::Undef,
    }
}

fn state(rng: &mut StdRng, undef: bool) -> MachineState {
    let env: Env = VARS.iter().map(|v| (Ident::new(v), value(rng, undef))).collect();
    let mem = (0..2).map(|_| value(rng, undef)).collect();
    MachineState::new(env, vec![], mem)
}

fn stack_clsf(rng: &mut StdRng) -> LabelMap<Ident> {
    LabelMap { entries: VARS.iter().map(|v| (Ident::new(v), label(rng))).collect(), default: label(rng) }
}

fn heap_clsf(rng: &mut StdRng) -> LabelMap<usize> {
    LabelMap { entries: (0..2).map(|l| (l, label(rng))).collect(), default: label(rng) }
}

fn expr(rng: &mut StdRng, depth: usize) -> Expr {
    match if depth == 0 { rng.gen_range(0..2) } else { rng.gen_range(0..5) } {
        0 => Expr::int(rng.gen_range(0..3)),
        1 => Expr::var(VARS[rng.gen_range(0..3)]),
        2 => Expr::UnOp(UnOp::Not, Box::new(expr(rng, depth - 1))),
        _ => Expr::bin(OPS[rng.gen_range(0..OPS.len())], expr(rng, depth - 1), expr(rng, depth - 1)),
    }
}

/// Every environment over `{0,1,2}` for the three variables.
fn all_envs() -> Vec<Env> {
    (0..27)
        .map(|k| VARS.iter().enumerate().map(|(i, v)| (Ident::new(v), Value::Int(k / 3i64.pow(i as u32) % 3))).collect())
        .collect()
}

/// `e` evaluates alike on every pair of environments agreeing on `n`'s Lo variables.
fn lo_expr_agrees(n: &LabelMap<Ident>, e: &Expr) -> bool {
    let envs = all_envs();
    let agree = |a: &Env, b: &Env| VARS.iter().all(|v| {
        let id = Ident::new(v);
        n.get(&id) == Label::Hi || a[&id] == b[&id]
    });
    envs.iter().all(|a| envs.iter().filter(|b| agree(a, b)).all(|b| eval_expr(a, e) == eval_expr(b, e)))
}

fn randomized() -> Outcome {
    const N: usize = 1000;
    let mut rng = StdRng::seed_from_u64(0xacce);
    for i in 0..N {
        let (a, b, c) = (label(&mut rng), label(&mut rng), label(&mut rng));
        let ok = lub(a, b) == lub(b, a)
            && glb(a, b) == glb(b, a)
            && lub(a, lub(b, c)) == lub(lub(a, b), c)
            && glb(a, glb(b, c)) == glb(glb(a, b), c)
            && lub(a, glb(a, b)) == a
            && glb(a, lub(a, b)) == a
            && lle(a, b) == (lub(a, b) == b);
        let (m, m2, m3) = (label_map(&mut rng), label_map(&mut rng), label_map(&mut rng));
        let lifted = m.lub(&m2).same_function(&m2.lub(&m))
            && m.glb(&m2.glb(&m3)).same_function(&m.glb(&m2).glb(&m3))
            && m.lub(&m.glb(&m2)).same_function(&m)
            && m.lle(&m2) == m.lub(&m2).same_function(&m2);
        if !ok || !lifted {
            return Err(format!("lattice law fails on case {i}"));
        }
    }
    for i in 0..N {
        let (s, t) = (state(&mut rng, true), state(&mut rng, true));
        let (n, n2, a, a2) = (stack_clsf(&mut rng), stack_clsf(&mut rng), heap_clsf(&mut rng), heap_clsf(&mut rng));
        if low_equiv(&s, &t, &n, &n2, &a, &a2) != low_equiv(&t, &s, &n2, &n, &a2, &a) {
            return Err(format!("low_equiv not symmetric on case {i}"));
        }
        let d = state(&mut rng, false);
        if !low_equiv(&d, &d, &n, &n, &a, &a) {
            return Err(format!("low_equiv not reflexive on case {i}"));
        }
    }
    for i in 0..N {
        let depth = rng.gen_range(0..=3);
        let e = expr(&mut rng, depth);
        let n = stack_clsf(&mut rng);
        if clsf_expr(&n, &e) == Label::Lo && !lo_expr_agrees(&n, &e) {
            return Err(format!("clsf_expr unsound on case {i}: {e:?}"));
        }
    }
    Ok(format!("{N} cases each: lattice laws, low_equiv symmetry/reflexivity, clsf_expr soundness"))
}

fn semantics_suite() -> Outcome {
    let cases = common::exit_cont_table()?;
    if cases < 10 {
        return Err(format!("only {cases} exit_cont cases"));
    }
    common::determinism(500, 0xd07)?;
    let programs = common::round_trip()?;
    Ok(format!("{cases} exit_cont cases, 500 deterministic states, {programs} programs round-trip"))
}

/// Load cell `d` and branch on it; the two branches differ.
fn bit_test(d: usize) -> Vec<Continuation> {
    let s = Stmt::seq(
        Stmt::load("t", Expr::Const(Value::Ptr(d))),
        Stmt::ite(Expr::bin(BinOp::Eq, Expr::var("t"), Expr::int(1)), Stmt::set("x", Expr::int(1)), Stmt::set("x", Expr::int(0))),
    );
    vec![Continuation::seq(s)]
}

fn bit_sync() -> Outcome {
    let m = Machine::default();
    let mems: Vec<Vec<Value>> = (0..4).map(|b| vec![Value::Int(b & 1), Value::Int(b >> 1)]).collect();
    let env: Env = [("t", Value::Undef), ("x", Value::Int(0))].into_iter().map(|(k, v)| (Ident::new(k), v)).collect();
    let mut checked = 0;
    for d in 0..2 {
        for m1 in &mems {
            for m2 in &mems {
                let s = MachineState::new(env.clone(), bit_test(d), m1.clone());
                let s2 = MachineState::new(env.clone(), bit_test(d), m2.clone());
                let passes = check_sync(&m, &s, &s2, 50, 0) == SyncOutcome::Pass;
                if passes != (m1[d] == m2[d]) {
                    return Err(format!("cell {d}: {m1:?} vs {m2:?} gives sync {passes}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} memory pairs (16 per designated cell)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 leak rejected and refuted", leak),
        ("2 classify accepted and tested", classify),
        ("3 hi-guard sub-corpus rejected at ifc-if", hi_guards),
        ("4 corpus soundness", corpus_soundness),
        ("5 direct and guard-style agree", agreement),
        ("6 randomized properties", randomized),
        ("7 semantics suite", semantics_suite),
        ("8 bit-test sync", bit_sync),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
