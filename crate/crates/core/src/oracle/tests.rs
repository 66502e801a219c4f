use std::sync::Arc;

use super::*;
use crate::logic::{Assertion, LabelExpr, StackClsf};
use crate::parser::parse;
use crate::types::{Continuation, Expr, LoopStmt, Stmt};

const LEAK: &str = "
void leak(int sec, int pub)
//@ logical x.s in {0,1}, x.p in {0,1};
//@ pre PROP() LOCAL(sec = x.s, pub = x.p) SEP(), [sec: Hi, pub: Lo], [];
//@ post (nrm: true, [pub: Lo], []);
{ pub = sec; }
";

fn report(src: &str, budget: &EnumerationBudget) -> ProgramReport {
    test_program("t", &parse(src).unwrap(), budget, true)
}

#[test]
fn leak_is_refuted_with_secrets_differing() {
    let r = report(LEAK, &EnumerationBudget::default());
    assert_eq!(r.verdict, "counterexample");
    let c = r.counterexample.unwrap();
    assert_eq!(c.divergence_point.kind, DivergenceKind::FinalLowEquiv);
    let s = |x: &LogicalEnv| x.get(&Ident::new("s")).cloned();
    assert_ne!(s(&c.x), s(&c.x_prime));
    assert_eq!(c.s1.env[&Ident::new("pub")], c.s1_prime.env[&Ident::new("pub")]);
}

#[test]
fn tied_logical_environments_hide_the_leak() {
    let p = parse(LEAK).unwrap();
    let m = p.machine();
    let f = &p.functions[0];
    let (vars, init) = frame_vars(f);
    let frame = Frame { machine: &m, vars: &vars, initialized: &init, heap_size: 0 };
    let b = EnumerationBudget::default();
    let stream = enumerate_initial_pairs(&f.spec.logicals, &f.spec.pre, &frame, &b);
    let ws = &stream.witnesses;
    let fails = |tied: bool| {
        stream
            .pairs
            .iter()
            .filter(|(i, j)| !tied || ws[*i].x == ws[*j].x)
            .any(|&(i, j)| check_pair_direct(&ws[i], &ws[j], &f.body, &f.spec.post, &frame, &b) != PairOutcome::Pass)
    };
    assert!(!fails(true));
    assert!(fails(false));
}

#[test]
fn skip_passes() {
    let src = "
void s(int a)
//@ logical x.a in {0,1};
//@ pre PROP() LOCAL(a = x.a) SEP(), [a: Lo], [];
//@ post (nrm: true, [a: Lo], []);
{ skip; }
";
    assert_eq!(report(src, &EnumerationBudget::default()).verdict, "pass");
}

#[test]
fn classify_example_passes() {
    let r = report(crate::parser::parse::CLASSIFY, &EnumerationBudget::default());
    assert_eq!(r.verdict, "pass", "{r:?}");
    assert!(r.pairs_checked > 0);
}

#[test]
fn divergence_is_inconclusive() {
    let src = "
void d()
{
  //@ invariant true;
  while (1) { skip; }
}
";
    let b = EnumerationBudget { fuel: 50, sync_bound: 50, ..Default::default() };
    assert_eq!(report(src, &b).verdict, "inconclusive");
}

#[test]
fn continuation_equivalence() {
    let brk = Continuation::seq(Stmt::brk());
    assert!(cont_equiv(&brk, &brk.clone()));
    assert!(!cont_equiv(&brk, &Continuation::seq(Stmt::cont())));
    let call = |n: i64| Continuation::Kcall {
        fname: Ident::new("f"),
        dest: Some(Ident::new("d")),
        saved_env: [(Ident::new("a"), Value::Int(n))].into_iter().collect(),
    };
    assert!(cont_equiv(&call(1), &call(2)));
    let empty = MachineState::new(Env::new(), vec![], vec![]);
    let one = MachineState::new(Env::new(), vec![brk.clone()], vec![]);
    assert!(head_equiv(&empty, &empty));
    assert!(!head_equiv(&empty, &one));
    assert!(head_equiv(&one, &one.clone()));
}

fn bit_state(h: i64) -> MachineState {
    MachineState::new([(Ident::new("h"), Value::Int(h))].into_iter().collect(), vec![], vec![])
}

#[test]
fn sync_splits_on_a_branch() {
    let m = crate::semantics::Machine::default();
    let branch = Stmt::ite(Expr::var("h"), Stmt::set("h", Expr::int(5)), Stmt::skip());
    let on = |h| {
        let mut s = bit_state(h);
        s.conts = vec![Continuation::seq(branch.clone())];
        s
    };
    assert_eq!(check_sync(&m, &on(0), &on(0), 100, 0), SyncOutcome::Pass);
    match check_sync(&m, &on(0), &on(1), 100, 0) {
        SyncOutcome::FailAt { step, .. } => assert!(step <= 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn iguard_examples() {
    let m = crate::semantics::Machine::default();
    let vars = vec![Ident::new("h")];
    let frame = Frame { machine: &m, vars: &vars, initialized: &vars, heap_size: 0 };
    let b = EnumerationBudget::default();
    let decls = LogicalDecls::default();
    let hi_h = IfcAssertTemplate::new(Assertion::truth(), StackClsf::from_pairs([("h", LabelExpr::HI)]), Default::default());
    assert_eq!(check_iguard(&decls, &hi_h, &[], &[], &frame, &b).verdict, OracleVerdict::Pass);
    assert_eq!(
        check_iguard(&decls, &IfcAssertTemplate::bottom(), &[Continuation::seq(Stmt::brk())], &[], &frame, &b).verdict,
        OracleVerdict::Pass
    );
    let lp = Arc::new(LoopStmt {
        incr: Arc::new(Stmt::skip()),
        body: Arc::new(Stmt::skip()),
        invariant: IfcAssertTemplate::default(),
        incr_invariant: IfcAssertTemplate::default(),
    });
    let k = vec![Continuation::seq(Stmt::ite(Expr::var("h"), Stmt::brk(), Stmt::cont())), Continuation::KloopIncr(lp)];
    let r = check_iguard(&decls, &hi_h, &k, &k, &frame, &b);
    assert!(matches!(r.verdict, OracleVerdict::Counterexample(_)), "{r:?}");
}

#[test]
fn guard_style_agrees_on_leak() {
    let p = parse(LEAK).unwrap();
    let m = p.machine();
    let f = &p.functions[0];
    let (vars, init) = frame_vars(f);
    let frame = Frame { machine: &m, vars: &vars, initialized: &init, heap_size: 0 };
    let b = EnumerationBudget::default();
    let s = &f.spec;
    let tests = canonical_tests(&s.logicals, &s.post, &frame);
    assert_eq!(tests.len(), 2);
    let only_empty = check_judgment_guard_style(&s.logicals, &s.pre, &f.body, &s.post, &tests[..1], &frame, &b);
    assert_eq!(only_empty.verdict, OracleVerdict::Pass);
    let all = check_judgment_guard_style(&s.logicals, &s.pre, &f.body, &s.post, &tests, &frame, &b);
    assert!(matches!(all.verdict, OracleVerdict::Counterexample(_)), "{all:?}");
    assert!(all.skipped.is_empty());
}

#[test]
fn pair_enumeration_examples() {
    let p = parse(LEAK).unwrap();
    let m = p.machine();
    let f = &p.functions[0];
    let (vars, init) = frame_vars(f);
    let frame = Frame { machine: &m, vars: &vars, initialized: &init, heap_size: 0 };
    let b = EnumerationBudget::default();
    let st = enumerate_initial_pairs(&f.spec.logicals, &f.spec.pre, &frame, &b);
    // pub agrees (2 choices), sec free on both sides (2 × 2)
    assert_eq!(st.pairs.len(), 8);
    let unsat = IfcAssertTemplate::bottom();
    assert!(enumerate_initial_pairs(&f.spec.logicals, &unsat, &frame, &b).pairs.is_empty());
    let all_lo = IfcAssertTemplate::new(f.spec.pre.assertion.clone(), StackClsf::bottom(), Default::default());
    let st = enumerate_initial_pairs(&f.spec.logicals, &all_lo, &frame, &b);
    assert!(st.pairs.iter().all(|(i, j)| st.witnesses[*i].state == st.witnesses[*j].state));
}
