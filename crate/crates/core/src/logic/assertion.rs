//! PROP/LOCAL/SEP assertions, classification templates and IFC triples.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::label::{glb, lub, LabelMap};
use crate::logic::term::{eval_term, holds, LogicalEnv, Pattern, Term};
use crate::semantics::ExitKind;
use crate::types::{free_vars, truth, EvalError, Expr, HeapLoc, Ident, Label, MachineState, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointsTo {
    pub addr: Term,
    pub val: Pattern,
}

/// `PROP(props) LOCAL(locals) SEP(seps)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Assertion {
    pub props: Vec<Term>,
    pub locals: Vec<(Ident, Term)>,
    pub seps: Vec<PointsTo>,
}

impl Assertion {
    pub fn truth() -> Self {
        Assertion::default()
    }

    pub fn falsum() -> Self {
        Assertion { props: vec![Term::ff()], ..Default::default() }
    }

    pub fn is_syntactically_false(&self) -> bool {
        self.props.iter().any(Term::is_false_lit)
    }

    pub fn local(&self, id: &Ident) -> Option<&Term> {
        self.locals.iter().find(|(k, _)| k == id).map(|(_, t)| t)
    }

    pub fn subst(&self, map: &BTreeMap<Ident, Term>) -> Assertion {
        Assertion {
            props: self.props.iter().map(|t| t.subst(map)).collect(),
            locals: self.locals.iter().map(|(k, t)| (k.clone(), t.subst(map))).collect(),
            seps: self
                .seps
                .iter()
                .map(|p| PointsTo { addr: p.addr.subst(map), val: p.val.subst(map) })
                .collect(),
        }
    }

    pub fn lvars(&self) -> Vec<Ident> {
        let mut out = Vec::new();
        for p in &self.props {
            p.lvars(&mut out);
        }
        for (_, t) in &self.locals {
            t.lvars(&mut out);
        }
        for s in &self.seps {
            s.addr.lvars(&mut out);
            s.val.lvars(&mut out);
        }
        out
    }
}

/// Does state `s` satisfy assertion `a` under logical environment `x`?
pub fn satisfies(x: &LogicalEnv, a: &Assertion, s: &MachineState) -> bool {
    if !a.props.iter().all(|p| holds(x, p)) {
        return false;
    }
    for (id, t) in &a.locals {
        let Some(v) = s.env.get(id) else { return false };
        match eval_term(x, t) {
            Ok(w) if w.low_eq(v) => {}
            _ => return false,
        }
    }
    let mut seen = BTreeSet::new();
    for pt in &a.seps {
        let loc = match eval_term(x, &pt.addr) {
            Ok(Value::Ptr(l)) if l < s.mem.len() => l,
            _ => return false,
        };
        if !seen.insert(loc) || !pt.val.matches(x, &s.mem[loc]) {
            return false;
        }
    }
    true
}

/// Classification expression. `Join` and `Meet` arise when the checker
/// synthesizes labels; source annotations use literals and conditionals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LabelExpr {
    Lit(Label),
    Cond(Term, Box<LabelExpr>, Box<LabelExpr>),
    Join(Box<LabelExpr>, Box<LabelExpr>),
    Meet(Box<LabelExpr>, Box<LabelExpr>),
}

impl LabelExpr {
    pub const LO: LabelExpr = LabelExpr::Lit(Label::Lo);
    pub const HI: LabelExpr = LabelExpr::Lit(Label::Hi);

    pub fn cond(c: Term, a: LabelExpr, b: LabelExpr) -> LabelExpr {
        LabelExpr::Cond(c, Box::new(a), Box::new(b))
    }

    pub fn join(a: LabelExpr, b: LabelExpr) -> LabelExpr {
        match (a, b) {
            (LabelExpr::Lit(Label::Lo), e) | (e, LabelExpr::Lit(Label::Lo)) => e,
            (LabelExpr::Lit(Label::Hi), _) | (_, LabelExpr::Lit(Label::Hi)) => LabelExpr::HI,
            (a, b) if a == b => a,
            (a, b) => LabelExpr::Join(Box::new(a), Box::new(b)),
        }
    }

    pub fn meet(a: LabelExpr, b: LabelExpr) -> LabelExpr {
        match (a, b) {
            (LabelExpr::Lit(Label::Hi), e) | (e, LabelExpr::Lit(Label::Hi)) => e,
            (LabelExpr::Lit(Label::Lo), _) | (_, LabelExpr::Lit(Label::Lo)) => LabelExpr::LO,
            (a, b) if a == b => a,
            (a, b) => LabelExpr::Meet(Box::new(a), Box::new(b)),
        }
    }

    pub fn eval(&self, x: &LogicalEnv) -> Result<Label, EvalError> {
        match self {
            LabelExpr::Lit(l) => Ok(*l),
            LabelExpr::Cond(c, a, b) => {
                if truth(&eval_term(x, c)?)? {
                    a.eval(x)
                } else {
                    b.eval(x)
                }
            }
            LabelExpr::Join(a, b) => Ok(lub(a.eval(x)?, b.eval(x)?)),
            LabelExpr::Meet(a, b) => Ok(glb(a.eval(x)?, b.eval(x)?)),
        }
    }

    pub fn subst(&self, map: &BTreeMap<Ident, Term>) -> LabelExpr {
        match self {
            LabelExpr::Lit(_) => self.clone(),
            LabelExpr::Cond(c, a, b) => LabelExpr::cond(c.subst(map), a.subst(map), b.subst(map)),
            LabelExpr::Join(a, b) => LabelExpr::Join(Box::new(a.subst(map)), Box::new(b.subst(map))),
            LabelExpr::Meet(a, b) => LabelExpr::Meet(Box::new(a.subst(map)), Box::new(b.subst(map))),
        }
    }

    pub fn lvars(&self, out: &mut Vec<Ident>) {
        match self {
            LabelExpr::Lit(_) => {}
            LabelExpr::Cond(c, a, b) => {
                c.lvars(out);
                a.lvars(out);
                b.lvars(out);
            }
            LabelExpr::Join(a, b) | LabelExpr::Meet(a, b) => {
                a.lvars(out);
                b.lvars(out);
            }
        }
    }
}

pub type GroundStackClsf = LabelMap<Ident>;
pub type GroundHeapClsf = LabelMap<HeapLoc>;

/// Stack classification template `N`: explicit entries, `default` elsewhere
/// (`Hi` for source annotations).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StackClsf {
    pub entries: BTreeMap<Ident, LabelExpr>,
    pub default: Label,
}

impl Default for StackClsf {
    fn default() -> Self {
        StackClsf { entries: BTreeMap::new(), default: Label::Hi }
    }
}

impl StackClsf {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, LabelExpr)>) -> Self {
        StackClsf {
            entries: pairs.into_iter().map(|(k, v)| (Ident::new(k), v)).collect(),
            default: Label::Hi,
        }
    }

    pub fn bottom() -> Self {
        StackClsf { entries: BTreeMap::new(), default: Label::Lo }
    }

    pub fn at(&self, id: &Ident) -> LabelExpr {
        self.entries.get(id).cloned().unwrap_or(LabelExpr::Lit(self.default))
    }

    /// `N[id := l]`
    pub fn update(&self, id: Ident, l: LabelExpr) -> StackClsf {
        let mut out = self.clone();
        out.entries.insert(id, l);
        out
    }

    pub fn ground(&self, x: &LogicalEnv) -> Result<GroundStackClsf, EvalError> {
        let mut entries = BTreeMap::new();
        for (k, l) in &self.entries {
            entries.insert(k.clone(), l.eval(x)?);
        }
        Ok(LabelMap { entries, default: self.default })
    }

    /// Template form of `clsf_expr`: the join of the labels of the free
    /// variables of `e`.
    pub fn label_of_expr(&self, e: &Expr) -> LabelExpr {
        free_vars(e).into_iter().fold(LabelExpr::LO, |acc, v| LabelExpr::join(acc, self.at(&v)))
    }

    pub fn subst(&self, map: &BTreeMap<Ident, Term>) -> StackClsf {
        StackClsf {
            entries: self.entries.iter().map(|(k, l)| (k.clone(), l.subst(map))).collect(),
            default: self.default,
        }
    }
}

/// Heap classification template `A`, keyed by address terms. Later entries
/// take precedence when two keys denote the same location.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HeapClsf {
    pub entries: Vec<(Term, LabelExpr)>,
    pub default: Label,
}

impl Default for HeapClsf {
    fn default() -> Self {
        HeapClsf { entries: Vec::new(), default: Label::Hi }
    }
}

impl HeapClsf {
    pub fn bottom() -> Self {
        HeapClsf { entries: Vec::new(), default: Label::Lo }
    }

    /// `A[key := l]`
    pub fn update(&self, key: Term, l: LabelExpr) -> HeapClsf {
        let mut out = self.clone();
        out.entries.retain(|(k, _)| k != &key);
        out.entries.push((key, l));
        out
    }

    /// Label of the location denoted by `addr`, as a template.
    pub fn at(&self, addr: &Term) -> LabelExpr {
        self.entries.iter().fold(LabelExpr::Lit(self.default), |acc, (k, l)| {
            if k == addr {
                l.clone()
            } else {
                LabelExpr::cond(Term::eq(k.clone(), addr.clone()), l.clone(), acc)
            }
        })
    }

    pub fn ground(&self, x: &LogicalEnv) -> Result<GroundHeapClsf, EvalError> {
        let mut map = LabelMap { entries: BTreeMap::new(), default: self.default };
        for (k, l) in &self.entries {
            if let Value::Ptr(loc) = eval_term(x, k)? {
                map.set(loc, l.eval(x)?);
            }
        }
        Ok(map)
    }

    pub fn subst(&self, map: &BTreeMap<Ident, Term>) -> HeapClsf {
        HeapClsf {
            entries: self.entries.iter().map(|(k, l)| (k.subst(map), l.subst(map))).collect(),
            default: self.default,
        }
    }
}

/// `clsf_expr`: highest label of any variable occurring in `e`, `Lo` if closed.
pub fn clsf_expr(n: &GroundStackClsf, e: &Expr) -> Label {
    free_vars(e).iter().fold(Label::Lo, |acc, v| lub(acc, n.get(v)))
}

/// `clsf_lvalue` for the address expression of a store.
pub fn clsf_lvalue(n: &GroundStackClsf, addr: &Expr) -> Label {
    clsf_expr(n, addr)
}

pub fn clsf_exprs(n: &GroundStackClsf, es: &[Expr]) -> Vec<Label> {
    es.iter().map(|e| clsf_expr(n, e)).collect()
}

/// `(P, N, A)` with all three components possibly mentioning logical variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct IfcAssertTemplate {
    pub assertion: Assertion,
    pub stack: StackClsf,
    pub heap: HeapClsf,
}

impl IfcAssertTemplate {
    pub fn new(assertion: Assertion, stack: StackClsf, heap: HeapClsf) -> Self {
        IfcAssertTemplate { assertion, stack, heap }
    }

    /// `(⊥, ⊥, ⊥)`: false assertion with all-`Lo` classifications.
    pub fn bottom() -> Self {
        IfcAssertTemplate {
            assertion: Assertion::falsum(),
            stack: StackClsf::bottom(),
            heap: HeapClsf::bottom(),
        }
    }

    pub fn subst(&self, map: &BTreeMap<Ident, Term>) -> IfcAssertTemplate {
        IfcAssertTemplate {
            assertion: self.assertion.subst(map),
            stack: self.stack.subst(map),
            heap: self.heap.subst(map),
        }
    }

    pub fn is_bottom(&self) -> bool {
        self.assertion.is_syntactically_false()
    }

    pub fn lvars(&self) -> Vec<Ident> {
        let mut out = self.assertion.lvars();
        for l in self.stack.entries.values() {
            l.lvars(&mut out);
        }
        for (k, l) in &self.heap.entries {
            k.lvars(&mut out);
            l.lvars(&mut out);
        }
        out
    }
}

/// One IFC assertion per exit kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PostconditionTemplate {
    pub nrm: IfcAssertTemplate,
    pub brk: IfcAssertTemplate,
    pub cont: IfcAssertTemplate,
    pub ret: IfcAssertTemplate,
}

impl PostconditionTemplate {
    pub fn get(&self, ek: ExitKind) -> &IfcAssertTemplate {
        match ek {
            ExitKind::Nrm => &self.nrm,
            ExitKind::Brk => &self.brk,
            ExitKind::Cont => &self.cont,
            ExitKind::Ret => &self.ret,
        }
    }

    pub fn get_mut(&mut self, ek: ExitKind) -> &mut IfcAssertTemplate {
        match ek {
            ExitKind::Nrm => &mut self.nrm,
            ExitKind::Brk => &mut self.brk,
            ExitKind::Cont => &mut self.cont,
            ExitKind::Ret => &mut self.ret,
        }
    }

    /// The selector `(f1, f2, f3, f4)_ek`.
    pub fn select(
        nrm: IfcAssertTemplate,
        brk: IfcAssertTemplate,
        cont: IfcAssertTemplate,
        ret: IfcAssertTemplate,
    ) -> Self {
        PostconditionTemplate { nrm, brk, cont, ret }
    }
}

/// Postcondition asserting that a command exits normally with `p`.
pub fn nret(p: IfcAssertTemplate) -> PostconditionTemplate {
    PostconditionTemplate {
        nrm: p,
        brk: IfcAssertTemplate::bottom(),
        cont: IfcAssertTemplate::bottom(),
        ret: IfcAssertTemplate::bottom(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BinOp;
    use Label::*;

    fn ground(pairs: &[(&str, Label)]) -> GroundStackClsf {
        LabelMap::with_default_hi(pairs.iter().map(|(k, l)| (Ident::new(k), *l)))
    }

    #[test]
    fn clsf_expr_examples() {
        let n = ground(&[("sec", Hi), ("pub", Lo)]);
        assert_eq!(clsf_expr(&n, &Expr::bin(BinOp::Add, Expr::var("sec"), Expr::var("pub"))), Hi);
        assert_eq!(clsf_expr(&n, &Expr::int(5)), Lo);
        assert_eq!(clsf_expr(&ground(&[("pub", Lo)]), &Expr::var("pub")), Lo);
    }

    #[test]
    fn update_examples() {
        let f = StackClsf::from_pairs([("pub", LabelExpr::LO)]);
        let g = f.update(Ident::new("pub"), LabelExpr::HI);
        let x = LogicalEnv::new();
        assert_eq!(g.at(&Ident::new("pub")).eval(&x), Ok(Hi));
        assert_eq!(g.at(&Ident::new("sec")).eval(&x), Ok(Hi));
        let same = f.update(Ident::new("pub"), f.at(&Ident::new("pub")));
        assert!(same.ground(&x).unwrap().same_function(&f.ground(&x).unwrap()));
    }

    #[test]
    fn nret_shapes() {
        let p = IfcAssertTemplate::default();
        let post = nret(p.clone());
        assert_eq!(post.nrm, p);
        assert_eq!(post.brk, IfcAssertTemplate::bottom());
        assert!(post.brk.assertion.is_syntactically_false());
        assert_eq!(post.ret.stack.default, Lo);
    }

    #[test]
    fn empty_and_false_assertions() {
        let s = MachineState::new(Default::default(), vec![], vec![Value::Int(0)]);
        let x = LogicalEnv::new();
        assert!(satisfies(&x, &Assertion::truth(), &s));
        assert!(!satisfies(&x, &Assertion::falsum(), &s));
    }

    #[test]
    fn separation_is_checked() {
        let s = MachineState::new(Default::default(), vec![], vec![Value::Int(0)]);
        let a = Assertion {
            seps: vec![
                PointsTo { addr: Term::ptr(0), val: Pattern::Wild },
                PointsTo { addr: Term::ptr(0), val: Pattern::Wild },
            ],
            ..Default::default()
        };
        assert!(!satisfies(&LogicalEnv::new(), &a, &s));
    }

    #[test]
    fn heap_lookup_prefers_later_entries() {
        let mut x = LogicalEnv::new();
        x.insert(Ident::new("l"), Value::Ptr(1));
        let a = HeapClsf::default()
            .update(Term::lvar("l"), LabelExpr::LO)
            .update(Term::ptr(1), LabelExpr::HI);
        assert_eq!(a.ground(&x).unwrap().get(&1), Hi);
        assert_eq!(a.at(&Term::lvar("l")).eval(&x), Ok(Hi));
        assert_eq!(a.at(&Term::ptr(0)).eval(&x), Ok(Hi));
        let b = HeapClsf::default().update(Term::lvar("l"), LabelExpr::LO);
        assert_eq!(b.at(&Term::ptr(1)).eval(&x), Ok(Lo));
    }
}
