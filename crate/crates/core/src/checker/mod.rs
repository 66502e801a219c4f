//! Syntax-directed IFC Hoare rules.
//!
//! Midpoints are synthesized by forward symbolic execution; annotations are
//! only needed at loops and function boundaries. Every consequence step is an
//! entailment decided by enumeration and recorded in the [`Derivation`].

mod rules;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::logic::{
    entails_state, skolemize, Entailment, Fresh, IfcAssertTemplate, LogicalDecls, LogicalEnv, PostconditionTemplate,
    SymState, Universe,
};
use crate::program::{FuncSpec, SourceProgram};
use crate::semantics::ExitKind;
use crate::types::{Expr, Ident, Label, Span, Stmt, Value};

pub use rules::symbolic_post;

/// Deliberately broken rule variants, used to show that the soundness
/// harness catches a faulty checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// ifc-if accepts guards of any label.
    NoGuardCheck,
    /// ifc-set keeps the target's previous label.
    SetKeepsLabel,
    /// ifc-store always labels the cell `Lo`.
    StoreLo,
    /// ifc-load ignores the label of the cell read.
    LoadIgnoresHeap,
}

impl Mutation {
    pub const ALL: [Mutation; 4] =
        [Mutation::NoGuardCheck, Mutation::SetKeepsLabel, Mutation::StoreLo, Mutation::LoadIgnoresHeap];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::NoGuardCheck => "no-guard-check",
            Mutation::SetKeepsLabel => "set-keeps-label",
            Mutation::StoreLo => "store-lo",
            Mutation::LoadIgnoresHeap => "load-ignores-heap",
        }
    }

    pub fn from_name(s: &str) -> Option<Mutation> {
        Mutation::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    /// Range of fresh logical variables (unconstrained values).
    pub value_domain: Vec<Value>,
    pub witness_cap: usize,
    pub mutation: Option<Mutation>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            value_domain: vec![Value::Int(0), Value::Int(1), Value::Int(2)],
            witness_cap: crate::logic::entail::DEFAULT_WITNESS_CAP,
            mutation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleFailure {
    pub rule: &'static str,
    pub span: Span,
    pub premise: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<LogicalEnv>,
}

impl std::fmt::Display for RuleFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} at {}: {}", self.rule, self.span, self.premise)?;
        if let Some(w) = &self.witness {
            write!(f, " (witness {w})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Premise {
    Sub(Derivation),
    /// `lhs ⊢ rhs` including the label order side conditions.
    Entail { lhs: SymState, rhs: IfcAssertTemplate, what: String },
    /// The guard's label is `Lo` in every witness of `state`.
    GuardLo { state: SymState, guard: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub rule: &'static str,
    pub stmt: String,
    pub span: Span,
    pub premises: Vec<Premise>,
}

impl Derivation {
    pub fn size(&self) -> usize {
        1 + self
            .premises
            .iter()
            .map(|p| match p {
                Premise::Sub(d) => d.size(),
                _ => 1,
            })
            .sum::<usize>()
    }

    pub fn rules_used(&self, out: &mut BTreeSet<&'static str>) {
        out.insert(self.rule);
        for p in &self.premises {
            match p {
                Premise::Sub(d) => d.rules_used(out),
                Premise::Entail { .. } => {
                    out.insert("ifc-pre");
                }
                Premise::GuardLo { .. } => {}
            }
        }
    }

    /// Re-decide every recorded entailment and guard premise.
    pub fn replay(&self, u: &Universe) -> Result<usize, String> {
        let mut n = 0;
        for p in &self.premises {
            match p {
                Premise::Sub(d) => n += d.replay(u)?,
                Premise::Entail { lhs, rhs, what } => {
                    if let Entailment::Fails { reason, .. } | Entailment::Unknown(reason) = entails_state(lhs, rhs, u)
                    {
                        return Err(format!("{}: {what}: {reason}", self.rule));
                    }
                    n += 1;
                }
                Premise::GuardLo { state, guard } => {
                    let l = state.stack.label_of_expr(guard);
                    let ws = crate::logic::witnesses(state, u).map_err(|e| e.to_string())?;
                    if ws.iter().any(|(x, _)| l.eval(x) != Ok(Label::Lo)) {
                        return Err(format!("{}: guard not Lo", self.rule));
                    }
                    n += 1;
                }
            }
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accepted(Derivation),
    Rejected(RuleFailure),
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionVerdict {
    pub function: Ident,
    pub verdict: Verdict,
    /// Universe the verdict was computed in, for replay.
    pub universe: Universe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictJson {
    pub function: Ident,
    pub verdict: &'static str,
    pub rule: &'static str,
    pub span: Span,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub premise: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<LogicalEnv>,
}

impl FunctionVerdict {
    pub fn to_json(&self) -> VerdictJson {
        match &self.verdict {
            Verdict::Accepted(d) => VerdictJson {
                function: self.function.clone(),
                verdict: "accepted",
                rule: d.rule,
                span: d.span,
                premise: None,
                witness: None,
            },
            Verdict::Rejected(f) => VerdictJson {
                function: self.function.clone(),
                verdict: "rejected",
                rule: f.rule,
                span: f.span,
                premise: Some(f.premise.clone()),
                witness: f.witness.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("no specification for function `{0}`")]
    MissingSpec(Ident),
}

/// Functions reachable from each function through calls.
fn reachability(p: &SourceProgram) -> BTreeMap<Ident, BTreeSet<Ident>> {
    let direct: BTreeMap<Ident, BTreeSet<Ident>> = p
        .functions
        .iter()
        .map(|f| {
            let mut out = BTreeSet::new();
            f.body.callees(&mut out);
            (f.name.clone(), out)
        })
        .collect();
    direct
        .keys()
        .map(|f| {
            let mut seen = BTreeSet::new();
            let mut todo: Vec<Ident> = direct[f].iter().cloned().collect();
            while let Some(g) = todo.pop() {
                if seen.insert(g.clone()) {
                    if let Some(next) = direct.get(&g) {
                        todo.extend(next.iter().cloned());
                    }
                }
            }
            (f.clone(), seen)
        })
        .collect()
}

/// Check every function of `p` against its own specification, assuming the
/// specifications in `delta` for callees.
pub fn check_program(
    p: &SourceProgram,
    delta: &BTreeMap<Ident, FuncSpec>,
    cfg: &CheckConfig,
) -> Result<Vec<FunctionVerdict>, ConfigError> {
    for f in &p.functions {
        if !delta.contains_key(&f.name) {
            return Err(ConfigError::MissingSpec(f.name.clone()));
        }
        let mut callees = BTreeSet::new();
        f.body.callees(&mut callees);
        if let Some(g) = callees.into_iter().find(|g| !delta.contains_key(g)) {
            return Err(ConfigError::MissingSpec(g));
        }
    }
    let reach = reachability(p);
    Ok(p.functions
        .par_iter()
        .map(|f| {
            let spec = &delta[&f.name];
            let u = Universe {
                vars: f.scope(),
                heap_size: p.heap.size,
                value_domain: cfg.value_domain.clone(),
                witness_cap: cfg.witness_cap,
            };
            let init: BTreeSet<Ident> = f.param_names().into_iter().collect();
            let ctx = Context { specs: delta, cfg, reach: &reach, current: Some(f.name.clone()) };
            let verdict = match check_stmt(&ctx, &spec.logicals, &u, &init, &spec.pre, &f.body, &spec.post) {
                Ok(d) => Verdict::Accepted(d),
                Err(e) => Verdict::Rejected(e),
            };
            FunctionVerdict { function: f.name.clone(), verdict, universe: u }
        })
        .collect())
}

/// Whatever a rule needs besides the statement and the state.
pub struct Context<'a> {
    pub specs: &'a BTreeMap<Ident, FuncSpec>,
    pub cfg: &'a CheckConfig,
    pub reach: &'a BTreeMap<Ident, BTreeSet<Ident>>,
    /// Function being checked, for recursion detection.
    pub current: Option<Ident>,
}

/// `{pre} c {post}`: run `c` forward from `pre` and entail every exit into
/// the matching component of `post`.
pub fn check_stmt(
    ctx: &Context<'_>,
    decls: &LogicalDecls,
    u: &Universe,
    initialized: &BTreeSet<Ident>,
    pre: &IfcAssertTemplate,
    c: &Stmt,
    post: &PostconditionTemplate,
) -> Result<Derivation, RuleFailure> {
    let mut run = rules::Run { ctx, u, decls, fresh: Fresh::new() };
    let start = skolemize(decls, pre, u, initialized, &mut run.fresh);
    if !run.satisfiable(&start, c.span)? {
        return Ok(Derivation { rule: "ifc-pre", stmt: "unsatisfiable precondition".into(), span: c.span, premises: vec![] });
    }
    let (outs, mut d) = run.exec(start, c)?;
    for ek in ExitKind::ALL {
        for (st, span) in outs.get(ek) {
            let target = post.get(ek);
            run.entail(st, target, "ifc-post", *span, &format!("{ek} exit entails the postcondition"))?;
            d.premises.push(Premise::Entail { lhs: st.clone(), rhs: target.clone(), what: format!("{ek} exit") });
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests;
