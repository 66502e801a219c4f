mod common;

use vstflow::parser::parse;
use vstflow::semantics::RunOutcome;
use vstflow::types::{Continuation, Env, MachineState};

#[test]
fn exit_cont_table() {
    let n = common::exit_cont_table().unwrap();
    assert!(n >= 10);
}

/// Break inside a called function is stuck at run time, not silently
/// propagated to the caller's loop.
#[test]
fn break_inside_call_is_stuck() {
    let src = "
void g()
{
  break;
}

void f()
{
  //@ invariant true, [], [];
  while (1) {
    g();
  }
}
";
    let p = parse(src).unwrap();
    let m = p.machine();
    let f = p.function("f").unwrap();
    let s = MachineState::new(Env::new(), vec![Continuation::seq(f.body.clone())], vec![]);
    assert!(matches!(m.run_to_completion(&s, 100), RunOutcome::Stuck { .. }));
}

#[test]
fn step_is_deterministic_on_reachable_states() {
    common::determinism(500, 0x5eed).unwrap();
}

#[test]
fn corpus_round_trips_through_the_printer() {
    common::round_trip().unwrap();
}
