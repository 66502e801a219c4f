//! Symbolic states, canonical witness states and entailment by enumeration.
//!
//! A template is turned into a [`SymState`] by replacing every unconstrained
//! slot (an initialized variable without a LOCAL fact, a wildcard cell) with a
//! fresh logical variable ranging over the universe's value domain. Witness
//! states are then obtained by enumerating all logical variables.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::assertion::{satisfies, Assertion, HeapClsf, IfcAssertTemplate, PointsTo, StackClsf};
use crate::logic::term::{eval_term, holds, LogicalDecls, LogicalEnv, Pattern, Term};
use crate::types::{Env, HeapLoc, Ident, MachineState, Value};

/// Default number of witness environments an entailment may enumerate.
pub const DEFAULT_WITNESS_CAP: usize = 200_000;

/// Everything outside a template needed to build concrete states.
#[derive(Debug, Clone, PartialEq)]
pub struct Universe {
    /// Stack identifiers in scope (parameters then locals).
    pub vars: Vec<Ident>,
    pub heap_size: usize,
    /// Range of unconstrained slots.
    pub value_domain: Vec<Value>,
    pub witness_cap: usize,
}

impl Universe {
    pub fn new(vars: Vec<Ident>, heap_size: usize, value_domain: Vec<Value>) -> Self {
        Universe { vars, heap_size, value_domain, witness_cap: DEFAULT_WITNESS_CAP }
    }
}

/// Symbolic value of a stack variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymVal {
    Known(Term),
    Undef,
}

/// An owned heap cell with a symbolic address and contents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cell {
    pub addr: Term,
    pub val: Term,
}

/// Ground-ish symbolic state: every slot is a term over `decls`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymState {
    pub decls: LogicalDecls,
    pub props: Vec<Term>,
    pub locals: BTreeMap<Ident, SymVal>,
    pub cells: Vec<Cell>,
    pub stack: StackClsf,
    pub heap: HeapClsf,
}

/// Source of fresh logical variable names (`__k0`, `__k1`, ...). User
/// declarations may not start with a double underscore.
#[derive(Debug, Default)]
pub struct Fresh {
    next: usize,
}

impl Fresh {
    pub fn new() -> Self {
        Fresh::default()
    }

    pub fn name(&mut self) -> Ident {
        let id = Ident::new(&format!("__k{}", self.next));
        self.next += 1;
        id
    }
}

pub fn is_fresh_name(id: &Ident) -> bool {
    id.as_str().starts_with("__")
}

impl SymState {
    /// Introduce a fresh logical variable over `domain` and return it as a term.
    pub fn fresh_var(&mut self, fresh: &mut Fresh, domain: &[Value]) -> Term {
        let id = fresh.name();
        self.decls.push(id.clone(), domain.to_vec());
        Term::LVar(id)
    }

    pub fn is_initialized(&self, id: &Ident) -> bool {
        matches!(self.locals.get(id), Some(SymVal::Known(_)))
    }

    pub fn initialized(&self) -> BTreeSet<Ident> {
        self.locals
            .iter()
            .filter(|(_, v)| matches!(v, SymVal::Known(_)))
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Template view of this state. Uninitialized variables have no LOCAL fact.
    pub fn to_template(&self) -> IfcAssertTemplate {
        IfcAssertTemplate {
            assertion: Assertion {
                props: self.props.clone(),
                locals: self
                    .locals
                    .iter()
                    .filter_map(|(k, v)| match v {
                        SymVal::Known(t) => Some((k.clone(), t.clone())),
                        SymVal::Undef => None,
                    })
                    .collect(),
                seps: self
                    .cells
                    .iter()
                    .map(|c| PointsTo { addr: c.addr.clone(), val: Pattern::Exact(c.val.clone()) })
                    .collect(),
            },
            stack: self.stack.clone(),
            heap: self.heap.clone(),
        }
    }

    /// Concrete state for one assignment of all logical variables, or `None`
    /// if the assignment violates the state's facts.
    pub fn instantiate(&self, x: &LogicalEnv, heap_size: usize) -> Option<MachineState> {
        let mut env = Env::new();
        for (k, v) in &self.locals {
            let val = match v {
                SymVal::Known(t) => eval_term(x, t).ok()?,
                SymVal::Undef => Value::Undef,
            };
            env.insert(k.clone(), val);
        }
        let mut mem = vec![Value::Undef; heap_size];
        let mut seen = BTreeSet::new();
        for c in &self.cells {
            let loc = match eval_term(x, &c.addr).ok()? {
                Value::Ptr(l) if l < heap_size => l,
                _ => return None,
            };
            if !seen.insert(loc) {
                return None;
            }
            mem[loc] = eval_term(x, &c.val).ok()?;
        }
        if !self.props.iter().all(|p| holds(x, p)) {
            return None;
        }
        Some(MachineState::new(env, Vec::new(), mem))
    }

    /// Address of an owned cell under `x`.
    pub fn cell_loc(&self, x: &LogicalEnv, idx: usize) -> Option<HeapLoc> {
        match eval_term(x, &self.cells[idx].addr) {
            Ok(Value::Ptr(l)) => Some(l),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("witness enumeration needs {needed} environments, cap is {cap}")]
pub struct CapExceeded {
    pub needed: usize,
    pub cap: usize,
}

/// All canonical witnesses of `state`: every satisfying assignment of its
/// logical variables with the concrete state it determines.
pub fn witnesses(state: &SymState, u: &Universe) -> Result<Vec<(LogicalEnv, MachineState)>, CapExceeded> {
    let needed = state.decls.env_count();
    if needed > u.witness_cap {
        return Err(CapExceeded { needed, cap: u.witness_cap });
    }
    Ok(state
        .decls
        .envs()
        .filter_map(|x| state.instantiate(&x, u.heap_size).map(|s| (x, s)))
        .collect())
}

pub fn is_satisfiable(state: &SymState, u: &Universe) -> Result<bool, CapExceeded> {
    let needed = state.decls.env_count();
    if needed > u.witness_cap {
        return Err(CapExceeded { needed, cap: u.witness_cap });
    }
    Ok(state.decls.envs().any(|x| state.instantiate(&x, u.heap_size).is_some()))
}

pub(crate) fn pattern_term(p: &Pattern, st: &mut SymState, fresh: &mut Fresh, domain: &[Value]) -> Term {
    match p {
        Pattern::Wild => st.fresh_var(fresh, domain),
        Pattern::Exact(t) => t.clone(),
        Pattern::Cond(c, a, b) => {
            let a = pattern_term(a, st, fresh, domain);
            let b = pattern_term(b, st, fresh, domain);
            Term::ite(c.clone(), a, b)
        }
    }
}

/// Build the symbolic state described by template `t`. Variables in
/// `initialized` without a LOCAL fact get fresh values; other in-scope
/// variables are uninitialized.
pub fn skolemize(
    decls: &LogicalDecls,
    t: &IfcAssertTemplate,
    u: &Universe,
    initialized: &BTreeSet<Ident>,
    fresh: &mut Fresh,
) -> SymState {
    let mut st = SymState {
        decls: decls.clone(),
        props: t.assertion.props.clone(),
        locals: BTreeMap::new(),
        cells: Vec::new(),
        stack: t.stack.clone(),
        heap: t.heap.clone(),
    };
    let mut vars: Vec<Ident> = u.vars.clone();
    for (k, _) in &t.assertion.locals {
        if !vars.contains(k) {
            vars.push(k.clone());
        }
    }
    for v in vars {
        let val = if let Some(term) = t.assertion.local(&v) {
            SymVal::Known(term.clone())
        } else if initialized.contains(&v) {
            SymVal::Known(st.fresh_var(fresh, &u.value_domain))
        } else {
            SymVal::Undef
        };
        st.locals.insert(v, val);
    }
    for pt in &t.assertion.seps {
        let val = pattern_term(&pt.val, &mut st, fresh, &u.value_domain);
        st.cells.push(Cell { addr: pt.addr.clone(), val });
    }
    st
}

/// Outcome of an entailment check.
#[derive(Debug, Clone, PartialEq)]
pub enum Entailment {
    Holds,
    Fails { witness: LogicalEnv, reason: String },
    /// Enumeration exceeded its budget; callers must treat this as failure.
    Unknown(String),
}

impl Entailment {
    pub fn holds(&self) -> bool {
        matches!(self, Entailment::Holds)
    }
}

/// Drop fresh (`__`-prefixed) variables from a witness.
pub fn public_env(x: &LogicalEnv) -> LogicalEnv {
    LogicalEnv(x.0.iter().filter(|(k, _)| !is_fresh_name(k)).map(|(k, v)| (k.clone(), v.clone())).collect())
}

/// `a ⊢ (b ∧ N_a ⊑ N_b ∧ A_a ⊑ A_b)`, checked on every witness of `a`.
pub fn entails_state(a: &SymState, b: &IfcAssertTemplate, u: &Universe) -> Entailment {
    let ws = match witnesses(a, u) {
        Ok(ws) => ws,
        Err(e) => return Entailment::Unknown(e.to_string()),
    };
    for (x, s) in &ws {
        if !satisfies(x, &b.assertion, s) {
            return Entailment::Fails { witness: public_env(x), reason: "assertion not implied".into() };
        }
        let labels = (|| -> Result<Option<String>, crate::types::EvalError> {
            let (na, nb) = (a.stack.ground(x)?, b.stack.ground(x)?);
            if !na.lle(&nb) {
                let bad = na
                    .entries
                    .keys()
                    .chain(nb.entries.keys())
                    .find(|k| na.get(k) > nb.get(k))
                    .map(|k| format!("stack classification of `{k}`: {} is not below {}", na.get(k), nb.get(k)))
                    .unwrap_or_else(|| "stack classification default".into());
                return Ok(Some(bad));
            }
            let (ha, hb) = (a.heap.ground(x)?, b.heap.ground(x)?);
            if !ha.lle(&hb) {
                let bad = (0..u.heap_size.max(1))
                    .chain(ha.entries.keys().copied())
                    .chain(hb.entries.keys().copied())
                    .find(|k| ha.get(k) > hb.get(k))
                    .map(|k| format!("heap classification of &{k}: {} is not below {}", ha.get(&k), hb.get(&k)))
                    .unwrap_or_else(|| "heap classification default".into());
                return Ok(Some(bad));
            }
            Ok(None)
        })();
        match labels {
            Ok(None) => {}
            Ok(Some(reason)) => return Entailment::Fails { witness: public_env(x), reason },
            Err(e) => {
                return Entailment::Fails { witness: public_env(x), reason: format!("classification undefined: {e}") }
            }
        }
    }
    Entailment::Holds
}

/// Entailment between templates over the same declarations; every in-scope
/// variable of `a` is taken to be initialized.
pub fn entails(decls: &LogicalDecls, a: &IfcAssertTemplate, b: &IfcAssertTemplate, u: &Universe) -> Entailment {
    let init: BTreeSet<Ident> = u.vars.iter().cloned().collect();
    let sa = skolemize(decls, a, u, &init, &mut Fresh::new());
    entails_state(&sa, b, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::assertion::{nret, LabelExpr};
    use crate::types::Label;

    fn universe() -> Universe {
        Universe::new(vec![Ident::new("pub"), Ident::new("sec")], 0, vec![Value::Int(0), Value::Int(1)])
    }

    fn decls() -> LogicalDecls {
        let mut d = LogicalDecls::default();
        d.push(Ident::new("k"), vec![Value::Int(0), Value::Int(1)]);
        d
    }

    fn pub_is_k(label: Label) -> IfcAssertTemplate {
        IfcAssertTemplate::new(
            Assertion { locals: vec![(Ident::new("pub"), Term::lvar("k"))], ..Default::default() },
            StackClsf::from_pairs([("pub", LabelExpr::Lit(label))]),
            HeapClsf::default(),
        )
    }

    #[test]
    fn reflexive() {
        let a = pub_is_k(Label::Lo);
        assert!(entails(&decls(), &a, &a, &universe()).holds());
    }

    #[test]
    fn raising_a_label_is_allowed() {
        assert!(entails(&decls(), &pub_is_k(Label::Lo), &pub_is_k(Label::Hi), &universe()).holds());
    }

    #[test]
    fn lowering_a_label_fails() {
        let hi = pub_is_k(Label::Hi);
        let lo = pub_is_k(Label::Lo);
        match entails(&decls(), &hi, &lo, &universe()) {
            Entailment::Fails { reason, .. } => assert!(reason.contains("pub"), "{reason}"),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn unconstrained_variable_does_not_entail_equality() {
        let a = IfcAssertTemplate::default();
        assert!(!entails(&decls(), &a, &pub_is_k(Label::Hi), &universe()).holds());
    }

    #[test]
    fn false_entails_anything() {
        let bot = nret(IfcAssertTemplate::default()).brk;
        assert!(entails(&decls(), &bot, &pub_is_k(Label::Lo), &universe()).holds());
    }

    #[test]
    fn cap_gives_unknown() {
        let mut u = universe();
        u.witness_cap = 1;
        assert!(matches!(entails(&decls(), &pub_is_k(Label::Lo), &pub_is_k(Label::Lo), &u), Entailment::Unknown(_)));
    }

    #[test]
    fn unowned_cells_are_undefined_in_witnesses() {
        let u = Universe::new(vec![], 2, vec![Value::Int(0)]);
        let owns0 = IfcAssertTemplate::new(
            Assertion { seps: vec![PointsTo { addr: Term::ptr(0), val: Pattern::Wild }], ..Default::default() },
            StackClsf::default(),
            HeapClsf::default(),
        );
        let owns1 = IfcAssertTemplate::new(
            Assertion { seps: vec![PointsTo { addr: Term::ptr(1), val: Pattern::Wild }], ..Default::default() },
            StackClsf::default(),
            HeapClsf::default(),
        );
        let d = LogicalDecls::default();
        assert!(entails(&d, &owns0, &owns0, &u).holds());
        assert!(!entails(&d, &owns0, &owns1, &u).holds());
    }
}
