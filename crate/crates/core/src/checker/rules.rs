//! Forward execution of statements over symbolic states, one rule per
//! statement form.

use std::collections::{BTreeMap, BTreeSet};

use super::{Context, Derivation, Mutation, Premise, RuleFailure};
use crate::logic::entail::{is_satisfiable, pattern_term, public_env, witnesses, Cell};
use crate::logic::{
    entails_state, satisfies, skolemize, Entailment, Fresh, IfcAssertTemplate, LabelExpr, LogicalDecls, LogicalEnv,
    Pattern, SymState, SymVal, Term, Universe,
};
use crate::parser::pretty::{pretty_expr, pretty_stmt};
use crate::program::RET_VAL;
use crate::semantics::{eval_expr, ExitKind};
use crate::types::{truth, CallStmt, Expr, Ident, Label, MachineState, Span, Stmt, StmtKind, Value};

type Witnesses = Vec<(LogicalEnv, MachineState)>;

/// Exit states of a statement, each with the span of the statement that
/// produced it.
#[derive(Debug, Default)]
pub struct Outcomes {
    pub nrm: Vec<(SymState, Span)>,
    pub brk: Vec<(SymState, Span)>,
    pub cont: Vec<(SymState, Span)>,
    pub ret: Vec<(SymState, Span)>,
}

impl Outcomes {
    pub fn get(&self, ek: ExitKind) -> &Vec<(SymState, Span)> {
        match ek {
            ExitKind::Nrm => &self.nrm,
            ExitKind::Brk => &self.brk,
            ExitKind::Cont => &self.cont,
            ExitKind::Ret => &self.ret,
        }
    }

    fn get_mut(&mut self, ek: ExitKind) -> &mut Vec<(SymState, Span)> {
        match ek {
            ExitKind::Nrm => &mut self.nrm,
            ExitKind::Brk => &mut self.brk,
            ExitKind::Cont => &mut self.cont,
            ExitKind::Ret => &mut self.ret,
        }
    }

    fn push(&mut self, ek: ExitKind, st: SymState, span: Span) {
        let v = self.get_mut(ek);
        if !v.iter().any(|(s, _)| *s == st) {
            v.push((st, span));
        }
    }

    fn only(ek: ExitKind, st: SymState, span: Span) -> Outcomes {
        let mut o = Outcomes::default();
        o.push(ek, st, span);
        o
    }

    fn absorb(&mut self, mut other: Outcomes) {
        for ek in ExitKind::ALL {
            for (st, span) in std::mem::take(other.get_mut(ek)) {
                self.push(ek, st, span);
            }
        }
    }
}

pub(super) struct Run<'a, 'c> {
    pub ctx: &'a Context<'c>,
    pub u: &'a Universe,
    pub decls: &'a LogicalDecls,
    pub fresh: Fresh,
}

fn fail(rule: &'static str, span: Span, premise: impl Into<String>, witness: Option<&LogicalEnv>) -> RuleFailure {
    RuleFailure { rule, span, premise: premise.into(), witness: witness.map(public_env) }
}

impl Run<'_, '_> {
    fn mutated(&self, m: Mutation) -> bool {
        self.ctx.cfg.mutation == Some(m)
    }

    fn witnesses(&self, st: &SymState, rule: &'static str, span: Span) -> Result<Witnesses, RuleFailure> {
        witnesses(st, self.u).map_err(|e| fail(rule, span, e.to_string(), None))
    }

    pub fn satisfiable(&self, st: &SymState, span: Span) -> Result<bool, RuleFailure> {
        is_satisfiable(st, self.u).map_err(|e| fail("ifc-pre", span, e.to_string(), None))
    }

    pub fn entail(
        &self,
        st: &SymState,
        target: &IfcAssertTemplate,
        rule: &'static str,
        span: Span,
        what: &str,
    ) -> Result<(), RuleFailure> {
        match entails_state(st, target, self.u) {
            Entailment::Holds => Ok(()),
            Entailment::Fails { witness, reason } => Err(RuleFailure {
                rule,
                span,
                premise: format!("{what}: {reason}"),
                witness: Some(witness),
            }),
            Entailment::Unknown(reason) => Err(fail(rule, span, format!("{what}: {reason}"), None)),
        }
    }

    /// Term for the value of `e` in `st`; every variable read must be
    /// initialized.
    fn expr_term(&self, st: &SymState, e: &Expr, rule: &'static str, span: Span) -> Result<Term, RuleFailure> {
        Ok(match e {
            Expr::Const(v) => Term::Lit(v.clone()),
            Expr::Var(id) => match st.locals.get(id) {
                Some(SymVal::Known(t)) => t.clone(),
                Some(SymVal::Undef) => {
                    return Err(fail(rule, span, format!("read of possibly uninitialized `{id}`"), None))
                }
                None => return Err(fail(rule, span, format!("`{id}` is not in scope"), None)),
            },
            Expr::UnOp(op, a) => Term::Un(*op, Box::new(self.expr_term(st, a, rule, span)?)),
            Expr::BinOp(op, a, b) => Term::bin(*op, self.expr_term(st, a, rule, span)?, self.expr_term(st, b, rule, span)?),
            Expr::AddrOfDeref(a) => self.expr_term(st, a, rule, span)?,
        })
    }

    /// `e` evaluates without error in every witness, and `ok` accepts the value.
    fn check_eval(
        &self,
        ws: &Witnesses,
        e: &Expr,
        rule: &'static str,
        span: Span,
        ok: impl Fn(&Value) -> Option<String>,
    ) -> Result<(), RuleFailure> {
        for (x, s) in ws {
            let problem = match eval_expr(&s.env, e) {
                Ok(v) => ok(&v),
                Err(err) => Some(err.to_string()),
            };
            if let Some(p) = problem {
                return Err(fail(rule, span, format!("`{}` may not evaluate: {p}", pretty_expr(e)), Some(x)));
            }
        }
        Ok(())
    }

    fn pointer_check(&self) -> impl Fn(&Value) -> Option<String> {
        let size = self.u.heap_size;
        move |v: &Value| match v {
            Value::Ptr(l) if *l < size => None,
            other => Some(format!("{other} is not a valid location")),
        }
    }

    /// Index of the owned cell at `addr`: syntactic match first, then a
    /// cell that holds the same location in every witness.
    fn resolve_cell(
        &self,
        st: &SymState,
        addr: &Term,
        ws: &Witnesses,
        rule: &'static str,
        span: Span,
    ) -> Result<usize, RuleFailure> {
        if let Some(i) = st.cells.iter().position(|c| &c.addr == addr) {
            return Ok(i);
        }
        let mut found: Option<usize> = None;
        for (x, _) in ws {
            let loc = crate::logic::eval_term(x, addr).ok();
            let idx = (0..st.cells.len()).find(|&i| st.cell_loc(x, i).map(Value::Ptr) == loc);
            match (idx, found) {
                (None, _) => {
                    return Err(fail(rule, span, "cannot resolve points-to: location not owned", Some(x)))
                }
                (Some(i), None) => found = Some(i),
                (Some(i), Some(j)) if i != j => {
                    return Err(fail(rule, span, "cannot resolve points-to: location depends on the witness", Some(x)))
                }
                _ => {}
            }
        }
        found.ok_or_else(|| fail(rule, span, "cannot resolve points-to", None))
    }

    fn leaf(rule: &'static str, s: &Stmt) -> Derivation {
        Derivation { rule, stmt: pretty_stmt(s), span: s.span, premises: Vec::new() }
    }

    pub fn exec(&mut self, st: SymState, s: &Stmt) -> Result<(Outcomes, Derivation), RuleFailure> {
        let span = s.span;
        match &s.kind {
            StmtKind::Skip => Ok((Outcomes::only(ExitKind::Nrm, st, span), Self::leaf("ifc-skip", s))),
            StmtKind::Break => Ok((Outcomes::only(ExitKind::Brk, st, span), Self::leaf("ifc-break", s))),
            StmtKind::Continue => Ok((Outcomes::only(ExitKind::Cont, st, span), Self::leaf("ifc-continue", s))),
            StmtKind::Set(id, e) => {
                let t = self.expr_term(&st, e, "ifc-set", span)?;
                let ws = self.witnesses(&st, "ifc-set", span)?;
                self.check_eval(&ws, e, "ifc-set", span, |_| None)?;
                let label =
                    if self.mutated(Mutation::SetKeepsLabel) { st.stack.at(id) } else { st.stack.label_of_expr(e) };
                let mut next = st;
                next.locals.insert(id.clone(), SymVal::Known(t));
                next.stack = next.stack.update(id.clone(), label);
                Ok((Outcomes::only(ExitKind::Nrm, next, span), Self::leaf("ifc-set", s)))
            }
            StmtKind::Load(id, a) => {
                let at = self.expr_term(&st, a, "ifc-load", span)?;
                let ws = self.witnesses(&st, "ifc-load", span)?;
                self.check_eval(&ws, a, "ifc-load", span, self.pointer_check())?;
                let i = self.resolve_cell(&st, &at, &ws, "ifc-load", span)?;
                let cell = st.cells[i].clone();
                let label = if self.mutated(Mutation::LoadIgnoresHeap) {
                    st.stack.label_of_expr(a)
                } else {
                    LabelExpr::join(st.stack.label_of_expr(a), st.heap.at(&cell.addr))
                };
                let mut next = st;
                next.locals.insert(id.clone(), SymVal::Known(cell.val));
                next.stack = next.stack.update(id.clone(), label);
                Ok((Outcomes::only(ExitKind::Nrm, next, span), Self::leaf("ifc-load", s)))
            }
            StmtKind::Store(a, e) => {
                let at = self.expr_term(&st, a, "ifc-store", span)?;
                let et = self.expr_term(&st, e, "ifc-store", span)?;
                let ws = self.witnesses(&st, "ifc-store", span)?;
                self.check_eval(&ws, a, "ifc-store", span, self.pointer_check())?;
                self.check_eval(&ws, e, "ifc-store", span, |_| None)?;
                let i = self.resolve_cell(&st, &at, &ws, "ifc-store", span)?;
                let label = if self.mutated(Mutation::StoreLo) {
                    LabelExpr::LO
                } else {
                    LabelExpr::join(st.stack.label_of_expr(a), st.stack.label_of_expr(e))
                };
                let mut next = st;
                next.cells[i].val = et;
                next.heap = next.heap.update(next.cells[i].addr.clone(), label);
                Ok((Outcomes::only(ExitKind::Nrm, next, span), Self::leaf("ifc-store", s)))
            }
            StmtKind::Seq(c1, c2) => {
                let (mut first, d1) = self.exec(st, c1)?;
                let mut d = Derivation { rule: "ifc-seq", stmt: pretty_stmt(s), span, premises: vec![Premise::Sub(d1)] };
                let mids = std::mem::take(&mut first.nrm);
                let mut outs = Outcomes::default();
                outs.absorb(first);
                for (mid, _) in mids {
                    let (rest, d2) = self.exec(mid, c2)?;
                    d.premises.push(Premise::Sub(d2));
                    outs.absorb(rest);
                }
                Ok((outs, d))
            }
            StmtKind::If(b, c1, c2) => {
                let bt = self.expr_term(&st, b, "ifc-if", span)?;
                let ws = self.witnesses(&st, "ifc-if", span)?;
                self.check_eval(&ws, b, "ifc-if", span, |v| truth(v).err().map(|e| e.to_string()))?;
                let mut d = Derivation { rule: "ifc-if", stmt: format!("if ({})", pretty_expr(b)), span, premises: vec![] };
                if !self.mutated(Mutation::NoGuardCheck) {
                    let label = st.stack.label_of_expr(b);
                    for (x, _) in &ws {
                        if label.eval(x) != Ok(Label::Lo) {
                            return Err(fail(
                                "ifc-if",
                                span,
                                format!("guard `{}` is not classified Lo", pretty_expr(b)),
                                Some(x),
                            ));
                        }
                    }
                    d.premises.push(Premise::GuardLo { state: st.clone(), guard: b.clone() });
                }
                let mut outs = Outcomes::default();
                for (prop, branch) in [(bt.clone(), c1), (Term::negate(bt), c2)] {
                    let mut bst = st.clone();
                    bst.props.push(prop);
                    if self.satisfiable(&bst, branch.span)? {
                        let (o, bd) = self.exec(bst, branch)?;
                        d.premises.push(Premise::Sub(bd));
                        outs.absorb(o);
                    }
                }
                Ok((outs, d))
            }
            StmtKind::Loop(l) => self.exec_loop(st, s, l),
            StmtKind::Return(e) => {
                let mut next = st;
                if let Some(e) = e {
                    let t = self.expr_term(&next, e, "ifc-return", span)?;
                    let ws = self.witnesses(&next, "ifc-return", span)?;
                    self.check_eval(&ws, e, "ifc-return", span, |_| None)?;
                    let label = next.stack.label_of_expr(e);
                    next.locals.insert(Ident::new(RET_VAL), SymVal::Known(t));
                    next.stack = next.stack.update(Ident::new(RET_VAL), label);
                }
                Ok((Outcomes::only(ExitKind::Ret, next, span), Self::leaf("ifc-return", s)))
            }
            StmtKind::Call(c) => self.exec_call(st, s, c),
        }
    }

    fn exec_loop(
        &mut self,
        st: SymState,
        s: &Stmt,
        l: &crate::types::LoopStmt,
    ) -> Result<(Outcomes, Derivation), RuleFailure> {
        const RULE: &str = "ifc-loop";
        let span = s.span;
        let mut d = Derivation { rule: RULE, stmt: "loop".into(), span, premises: vec![] };
        self.entail(&st, &l.invariant, RULE, span, "precondition entails the loop invariant")?;
        d.premises.push(Premise::Entail { lhs: st.clone(), rhs: l.invariant.clone(), what: "loop entry".into() });
        let init: BTreeSet<Ident> =
            st.initialized().into_iter().filter(|v| self.u.vars.contains(v)).collect();
        let keeps_init = |o: &SymState| -> Result<(), RuleFailure> {
            match init.iter().find(|v| !o.is_initialized(v)) {
                Some(v) => Err(fail(RULE, span, format!("loop iteration may leave `{v}` uninitialized"), None)),
                None => Ok(()),
            }
        };
        let mut outs = Outcomes::default();

        let body_start = skolemize(self.decls, &l.invariant, self.u, &init, &mut self.fresh);
        if self.satisfiable(&body_start, l.body.span)? {
            let (body, bd) = self.exec(body_start, &l.body)?;
            d.premises.push(Premise::Sub(bd));
            for ek in [ExitKind::Nrm, ExitKind::Cont] {
                for (o, ospan) in body.get(ek) {
                    keeps_init(o)?;
                    self.entail(o, &l.incr_invariant, RULE, *ospan, &format!("body {ek} exit entails the increment invariant"))?;
                    d.premises.push(Premise::Entail { lhs: o.clone(), rhs: l.incr_invariant.clone(), what: format!("body {ek}") });
                }
            }
            for (o, ospan) in body.brk {
                outs.push(ExitKind::Nrm, o, ospan);
            }
            for (o, ospan) in body.ret {
                outs.push(ExitKind::Ret, o, ospan);
            }
        }

        let incr_start = skolemize(self.decls, &l.incr_invariant, self.u, &init, &mut self.fresh);
        if self.satisfiable(&incr_start, l.incr.span)? {
            let (incr, id) = self.exec(incr_start, &l.incr)?;
            d.premises.push(Premise::Sub(id));
            for (o, ospan) in &incr.nrm {
                keeps_init(o)?;
                self.entail(o, &l.invariant, RULE, *ospan, "increment exit entails the loop invariant")?;
                d.premises.push(Premise::Entail { lhs: o.clone(), rhs: l.invariant.clone(), what: "increment nrm".into() });
            }
            if let Some((_, ospan)) = incr.brk.first().or(incr.cont.first()) {
                return Err(fail(RULE, *ospan, "break or continue inside a loop increment", None));
            }
            for (o, ospan) in incr.ret {
                outs.push(ExitKind::Ret, o, ospan);
            }
        }
        Ok((outs, d))
    }

    fn exec_call(&mut self, st: SymState, s: &Stmt, c: &CallStmt) -> Result<(Outcomes, Derivation), RuleFailure> {
        const RULE: &str = "ifc-call";
        let span = s.span;
        let ctx = self.ctx;
        if ctx.current.as_ref().is_some_and(|me| me == &c.fname || ctx.reach.get(&c.fname).is_some_and(|r| r.contains(me))) {
            return Err(fail(RULE, span, format!("recursive call to `{}` is not supported", c.fname), None));
        }
        let Some(spec) = ctx.specs.get(&c.fname) else {
            return Err(fail(RULE, span, format!("no specification for `{}`", c.fname), None));
        };
        if !spec.post.brk.is_bottom() || !spec.post.cont.is_bottom() {
            return Err(fail(RULE, span, "callee postcondition admits break or continue", None));
        }
        let ws = self.witnesses(&st, RULE, span)?;
        let mut args = Vec::new();
        for a in &c.args {
            args.push(self.expr_term(&st, a, RULE, span)?);
            self.check_eval(&ws, a, RULE, span, |_| None)?;
        }

        // instantiate the callee's logical variables
        let mut sigma: BTreeMap<Ident, Term> = c.with.iter().cloned().collect();
        loop {
            let before = sigma.len();
            for (p, t) in &spec.pre.assertion.locals {
                if let (Term::LVar(y), Some(j)) = (t, spec.params.iter().position(|q| q == p)) {
                    sigma.entry(y.clone()).or_insert_with(|| args[j].clone());
                }
            }
            for pt in &spec.pre.assertion.seps {
                let mut vs = Vec::new();
                pt.addr.lvars(&mut vs);
                if let (Pattern::Exact(Term::LVar(y)), true) = (&pt.val, vs.iter().all(|v| sigma.contains_key(v))) {
                    if !sigma.contains_key(y) {
                        let i = self.resolve_cell(&st, &pt.addr.subst(&sigma), &ws, RULE, span)?;
                        sigma.insert(y.clone(), st.cells[i].val.clone());
                    }
                }
            }
            if sigma.len() == before {
                break;
            }
        }
        if let Some(d) = spec.logicals.vars.iter().find(|d| !sigma.contains_key(&d.name)) {
            return Err(fail(
                RULE,
                span,
                format!("cannot instantiate x.{} of `{}`; give it with `//@ with`", d.name, c.fname),
                None,
            ));
        }
        for (x, _) in &ws {
            for d in &spec.logicals.vars {
                let v = crate::logic::eval_term(x, &sigma[&d.name]);
                if !v.as_ref().is_ok_and(|v| d.domain.contains(v)) {
                    return Err(fail(
                        RULE,
                        span,
                        format!("x.{} of `{}` instantiated outside its domain", d.name, c.fname),
                        Some(x),
                    ));
                }
            }
        }

        // the callee's precondition, argument labels and footprint labels
        let pre = spec.pre.subst(&sigma);
        for (x, s0) in &ws {
            let mut env = crate::types::Env::new();
            for (p, a) in spec.params.iter().zip(&c.args) {
                env.insert(p.clone(), eval_expr(&s0.env, a).unwrap_or(Value::Undef));
            }
            let view = MachineState::new(env, Vec::new(), s0.mem.clone());
            if !satisfies(x, &pre.assertion, &view) {
                return Err(fail(RULE, span, format!("precondition of `{}` not established", c.fname), Some(x)));
            }
            let labels = (|| {
                let nc = pre.stack.ground(x)?;
                let (ac, acaller) = (pre.heap.ground(x)?, st.heap.ground(x)?);
                for (p, a) in spec.params.iter().zip(&c.args) {
                    let la = st.stack.label_of_expr(a).eval(x)?;
                    if la > nc.get(p) {
                        return Ok(Some(format!("argument for `{p}` is {la} but `{}` expects {}", c.fname, nc.get(p))));
                    }
                }
                for pt in &pre.assertion.seps {
                    if let Value::Ptr(loc) = crate::logic::eval_term(x, &pt.addr)? {
                        if acaller.get(&loc) > ac.get(&loc) {
                            return Ok(Some(format!("cell &{loc} is {} but `{}` expects {}", acaller.get(&loc), c.fname, ac.get(&loc))));
                        }
                    }
                }
                Ok::<_, crate::types::EvalError>(None)
            })();
            match labels {
                Ok(None) => {}
                Ok(Some(msg)) => return Err(fail(RULE, span, msg, Some(x))),
                Err(e) => return Err(fail(RULE, span, format!("classification undefined: {e}"), Some(x))),
            }
        }
        let mut footprint = BTreeSet::new();
        for pt in &pre.assertion.seps {
            footprint.insert(self.resolve_cell(&st, &pt.addr, &ws, RULE, span)?);
        }
        let frame: Vec<Cell> =
            st.cells.iter().enumerate().filter(|(i, _)| !footprint.contains(i)).map(|(_, c)| c.clone()).collect();

        let mut d = Derivation { rule: RULE, stmt: pretty_stmt(s), span, premises: vec![] };
        let mut outs = Outcomes::default();
        for ek in [ExitKind::Nrm, ExitKind::Ret] {
            let r = spec.post.get(ek);
            if r.is_bottom() {
                continue;
            }
            let r = r.subst(&sigma);
            let mut next = st.clone();
            next.cells = frame.clone();
            next.props.extend(r.assertion.props.iter().cloned());
            for pt in &r.assertion.seps {
                let val = pattern_term(&pt.val, &mut next, &mut self.fresh, &self.u.value_domain);
                next.cells.push(Cell { addr: pt.addr.clone(), val });
                next.heap = next.heap.update(pt.addr.clone(), r.heap.at(&pt.addr));
            }
            if let Some(dest) = &c.dest {
                if ek == ExitKind::Nrm {
                    next.locals.insert(dest.clone(), SymVal::Undef);
                    next.stack = next.stack.update(dest.clone(), LabelExpr::HI);
                } else {
                    let ret = Ident::new(RET_VAL);
                    let t = match r.assertion.local(&ret) {
                        Some(t) => t.clone(),
                        None => next.fresh_var(&mut self.fresh, &self.u.value_domain),
                    };
                    let label = r.stack.at(&ret);
                    if !matches!(label, LabelExpr::Lit(_)) {
                        return Err(fail(RULE, span, format!("return label of `{}` must be constant", c.fname), None));
                    }
                    next.locals.insert(dest.clone(), SymVal::Known(t));
                    next.stack = next.stack.update(dest.clone(), label);
                }
            }
            if self.satisfiable(&next, span)? {
                outs.push(ExitKind::Nrm, next, span);
            }
        }
        d.premises.push(Premise::Entail { lhs: st, rhs: pre, what: format!("precondition of `{}`", c.fname) });
        Ok((outs, d))
    }
}

/// Strongest postcondition of a primitive statement (skip, set, load or
/// store) from `pre`, with every in-scope variable initialized.
pub fn symbolic_post(
    decls: &LogicalDecls,
    pre: &IfcAssertTemplate,
    c: &Stmt,
    u: &Universe,
    cfg: &super::CheckConfig,
) -> Result<IfcAssertTemplate, RuleFailure> {
    if !matches!(c.kind, StmtKind::Skip | StmtKind::Set(..) | StmtKind::Load(..) | StmtKind::Store(..)) {
        return Err(fail("ifc-pre", c.span, "symbolic_post only handles primitive statements", None));
    }
    let specs = BTreeMap::new();
    let reach = BTreeMap::new();
    let ctx = Context { specs: &specs, cfg, reach: &reach, current: None };
    let mut run = Run { ctx: &ctx, u, decls, fresh: Fresh::new() };
    let init = u.vars.iter().cloned().collect();
    let start = skolemize(decls, pre, u, &init, &mut run.fresh);
    let (outs, _) = run.exec(start, c)?;
    Ok(outs.nrm.into_iter().next().map(|(s, _)| s.to_template()).unwrap_or_else(IfcAssertTemplate::bottom))
}
