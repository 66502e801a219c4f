//! Low-equivalence of machine states.

use std::collections::BTreeSet;

use crate::logic::assertion::{GroundHeapClsf, GroundStackClsf};
use crate::types::{Ident, Label, MachineState, Value};

/// Agreement on every location classified `Lo` by a single pair `(N, A)`.
pub fn low_equiv_simple(s: &MachineState, t: &MachineState, n: &GroundStackClsf, a: &GroundHeapClsf) -> bool {
    low_equiv(s, t, n, n, a, a)
}

/// Pairwise low-equivalence: equality is required exactly where both
/// classifications say `Lo`.
pub fn low_equiv(
    s: &MachineState,
    t: &MachineState,
    n: &GroundStackClsf,
    n2: &GroundStackClsf,
    a: &GroundHeapClsf,
    a2: &GroundHeapClsf,
) -> bool {
    let both_lo_var = |id: &Ident| n.get(id) == Label::Lo && n2.get(id) == Label::Lo;
    let vars: BTreeSet<&Ident> = s.env.keys().chain(t.env.keys()).collect();
    for id in vars {
        if both_lo_var(id) && !same(s.env.get(id), t.env.get(id)) {
            return false;
        }
    }
    let cells = s.mem.len().max(t.mem.len());
    for loc in 0..cells {
        if a.get(&loc) == Label::Lo && a2.get(&loc) == Label::Lo && !same(s.mem.get(loc), t.mem.get(loc)) {
            return false;
        }
    }
    true
}

fn same(a: Option<&Value>, b: Option<&Value>) -> bool {
    matches!((a, b), (Some(a), Some(b)) if a.low_eq(b))
}
