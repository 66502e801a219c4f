//! Shared vocabulary: identifiers, values, labels, the C-lite AST,
//! continuations and machine states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Element of the two-point security lattice. `Lo` is bottom, `Hi` is top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Lo,
    Hi,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Lo => f.write_str("Lo"),
            Label::Hi => f.write_str("Hi"),
        }
    }
}

/// A program or logical identifier.
///
/// Identifiers produced by the parser always match `[A-Za-z_][A-Za-z0-9_]*`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(Arc<str>);

impl Ident {
    pub fn new(name: &str) -> Self {
        Ident(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_valid(name: &str) -> bool {
        let mut chars = name.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Ident {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Ident {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if !Ident::is_valid(&s) {
            return Err(serde::de::Error::custom(format!("invalid identifier `{s}`")));
        }
        Ok(Ident::new(&s))
    }
}

/// Index into the flat heap.
pub type HeapLoc = usize;

/// Runtime value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Ptr(HeapLoc),
    Bool(bool),
    Undef,
}

impl Value {
    /// Equality used for low-equivalence: `Undef` equals nothing, itself included.
    pub fn low_eq(&self, other: &Value) -> bool {
        !matches!(self, Value::Undef) && self == other
    }

    pub fn is_undef(&self) -> bool {
        matches!(self, Value::Undef)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Ptr(l) => write!(f, "&{l}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Undef => f.write_str("undef"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }
}

/// Why an operator application failed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("uninitialized read")]
    Undef,
    #[error("unknown variable `{0}`")]
    Unbound(Ident),
    #[error("type mismatch: {0}")]
    Type(String),
    #[error("integer overflow")]
    Overflow,
}

fn truthy(v: &Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Int(n) => Ok(*n != 0),
        Value::Undef => Err(EvalError::Undef),
        Value::Ptr(_) => Err(EvalError::Type("pointer used as condition".into())),
    }
}

/// Truth value of a condition, C style: nonzero integers are true.
pub fn truth(v: &Value) -> Result<bool, EvalError> {
    truthy(v)
}

pub fn apply_unop(op: UnOp, v: &Value) -> Result<Value, EvalError> {
    match op {
        UnOp::Not => Ok(Value::Bool(!truthy(v)?)),
    }
}

pub fn apply_binop(op: BinOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    if a.is_undef() || b.is_undef() {
        return Err(EvalError::Undef);
    }
    let ints = |a: &Value, b: &Value| match (a, b) {
        (Value::Int(x), Value::Int(y)) => Ok((*x, *y)),
        _ => Err(EvalError::Type(format!("`{}` on {a} and {b}", op.symbol()))),
    };
    match op {
        BinOp::Add => {
            let (x, y) = ints(a, b)?;
            x.checked_add(y).map(Value::Int).ok_or(EvalError::Overflow)
        }
        BinOp::Sub => {
            let (x, y) = ints(a, b)?;
            x.checked_sub(y).map(Value::Int).ok_or(EvalError::Overflow)
        }
        BinOp::Mul => {
            let (x, y) = ints(a, b)?;
            x.checked_mul(y).map(Value::Int).ok_or(EvalError::Overflow)
        }
        BinOp::Lt => {
            let (x, y) = ints(a, b)?;
            Ok(Value::Bool(x < y))
        }
        // values of different kinds are simply unequal
        BinOp::Eq => Ok(Value::Bool(a == b)),
        BinOp::Ne => Ok(Value::Bool(a != b)),
        BinOp::And => Ok(Value::Bool(truthy(a)? && truthy(b)?)),
        BinOp::Or => Ok(Value::Bool(truthy(a)? || truthy(b)?)),
    }
}

/// Pure expression. Expressions never call functions or dereference memory;
/// heap access only happens through the `Load` and `Store` statements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Value),
    Var(Ident),
    UnOp(UnOp, Box<Expr>),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    /// `&*e`, the address denoted by the pointer `e`.
    AddrOfDeref(Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(Value::Int(n))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(Ident::new(name))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::BinOp(op, Box::new(a), Box::new(b))
    }

    pub fn negate(e: Expr) -> Expr {
        Expr::UnOp(UnOp::Not, Box::new(e))
    }
}

/// Identifiers syntactically occurring in `e`.
pub fn free_vars(e: &Expr) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    collect_vars(e, &mut out);
    out
}

fn collect_vars(e: &Expr, out: &mut BTreeSet<Ident>) {
    match e {
        Expr::Const(_) => {}
        Expr::Var(id) => {
            out.insert(id.clone());
        }
        Expr::UnOp(_, a) | Expr::AddrOfDeref(a) => collect_vars(a, out),
        Expr::BinOp(_, a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
    }
}

/// Source position of a statement. Spans are metadata: any two spans compare
/// equal so that AST equality stays structural.
#[derive(Debug, Clone, Copy, Default, Eq, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Span) -> bool {
        true
    }
}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _state: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Skip,
    Set(Ident, Expr),
    /// `id = *e`
    Load(Ident, Expr),
    /// `*e1 = e2`
    Store(Expr, Expr),
    Seq(Arc<Stmt>, Arc<Stmt>),
    If(Expr, Arc<Stmt>, Arc<Stmt>),
    Loop(Arc<LoopStmt>),
    Break,
    Continue,
    Return(Option<Expr>),
    Call(CallStmt),
}

/// `loop (incr) body` with its two annotated invariants: `invariant` holds
/// before each body run, `incr_invariant` before each increment run.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopStmt {
    pub incr: Arc<Stmt>,
    pub body: Arc<Stmt>,
    pub invariant: crate::logic::IfcAssertTemplate,
    pub incr_invariant: crate::logic::IfcAssertTemplate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallStmt {
    pub dest: Option<Ident>,
    pub fname: Ident,
    pub args: Vec<Expr>,
    /// Explicit instantiation of callee logical variables (`//@ with {...}`).
    pub with: Vec<(Ident, crate::logic::Term)>,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Stmt {
        Stmt { kind, span: Span::default() }
    }

    pub fn at(kind: StmtKind, span: Span) -> Stmt {
        Stmt { kind, span }
    }

    pub fn skip() -> Stmt {
        Stmt::new(StmtKind::Skip)
    }

    pub fn brk() -> Stmt {
        Stmt::new(StmtKind::Break)
    }

    pub fn cont() -> Stmt {
        Stmt::new(StmtKind::Continue)
    }

    pub fn set(id: &str, e: Expr) -> Stmt {
        Stmt::new(StmtKind::Set(Ident::new(id), e))
    }

    pub fn load(id: &str, addr: Expr) -> Stmt {
        Stmt::new(StmtKind::Load(Ident::new(id), addr))
    }

    pub fn store(addr: Expr, val: Expr) -> Stmt {
        Stmt::new(StmtKind::Store(addr, val))
    }

    pub fn ret(e: Option<Expr>) -> Stmt {
        Stmt::new(StmtKind::Return(e))
    }

    pub fn seq(a: Stmt, b: Stmt) -> Stmt {
        Stmt::new(StmtKind::Seq(Arc::new(a), Arc::new(b)))
    }

    /// Right-nested sequence; empty input is `Skip`.
    pub fn seq_all(mut stmts: Vec<Stmt>) -> Stmt {
        let Some(mut acc) = stmts.pop() else {
            return Stmt::skip();
        };
        while let Some(s) = stmts.pop() {
            acc = Stmt::seq(s, acc);
        }
        acc
    }

    pub fn ite(b: Expr, c1: Stmt, c2: Stmt) -> Stmt {
        Stmt::new(StmtKind::If(b, Arc::new(c1), Arc::new(c2)))
    }

    pub fn looped(incr: Stmt, body: Stmt, inv: crate::logic::IfcAssertTemplate, incr_inv: crate::logic::IfcAssertTemplate) -> Stmt {
        Stmt::new(StmtKind::Loop(Arc::new(LoopStmt {
            incr: Arc::new(incr),
            body: Arc::new(body),
            invariant: inv,
            incr_invariant: incr_inv,
        })))
    }

    /// `while (b) c` is `loop (skip) { if (b) c else break }`.
    pub fn while_loop(b: Expr, body: Stmt, inv: crate::logic::IfcAssertTemplate) -> Stmt {
        Stmt::looped(Stmt::skip(), Stmt::ite(b, body, Stmt::brk()), inv.clone(), inv)
    }

    pub fn call(dest: Option<&str>, fname: &str, args: Vec<Expr>) -> Stmt {
        Stmt::new(StmtKind::Call(CallStmt {
            dest: dest.map(Ident::new),
            fname: Ident::new(fname),
            args,
            with: Vec::new(),
        }))
    }

    /// Names of all functions called anywhere in this statement.
    pub fn callees(&self, out: &mut BTreeSet<Ident>) {
        match &self.kind {
            StmtKind::Call(c) => {
                out.insert(c.fname.clone());
            }
            StmtKind::Seq(a, b) | StmtKind::If(_, a, b) => {
                a.callees(out);
                b.callees(out);
            }
            StmtKind::Loop(l) => {
                l.incr.callees(out);
                l.body.callees(out);
            }
            _ => {}
        }
    }

    /// Every variable some expression of this statement mentions.
    pub fn reads(&self, out: &mut BTreeSet<Ident>) {
        match &self.kind {
            StmtKind::Skip | StmtKind::Break | StmtKind::Continue | StmtKind::Return(None) => {}
            StmtKind::Set(_, e) | StmtKind::Load(_, e) | StmtKind::Return(Some(e)) => collect_vars(e, out),
            StmtKind::Store(a, e) => {
                collect_vars(a, out);
                collect_vars(e, out);
            }
            StmtKind::Seq(a, b) => {
                a.reads(out);
                b.reads(out);
            }
            StmtKind::If(e, a, b) => {
                collect_vars(e, out);
                a.reads(out);
                b.reads(out);
            }
            StmtKind::Loop(l) => {
                l.incr.reads(out);
                l.body.reads(out);
            }
            StmtKind::Call(c) => c.args.iter().for_each(|e| collect_vars(e, out)),
        }
    }
}

pub type Env = BTreeMap<Ident, Value>;

/// One entry of the continuation stack.
///
/// `Stop` and `Exited` are marker frames used by the two-run tester to observe
/// how a command under test exits; they never arise from source programs.
#[derive(Debug, Clone, PartialEq)]
pub enum Continuation {
    Kseq(Arc<Stmt>),
    /// Loop to be resumed at its increment statement.
    KloopIncr(Arc<LoopStmt>),
    /// Loop to be resumed at its body.
    KloopBody(Arc<LoopStmt>),
    /// Function body to be resumed after a return.
    Kcall { fname: Ident, dest: Option<Ident>, saved_env: Env },
    Stop,
    Exited { kind: crate::semantics::ExitKind, value: Option<Value> },
}

impl Continuation {
    pub fn seq(s: Stmt) -> Continuation {
        Continuation::Kseq(Arc::new(s))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Continuation::Kseq(_) => "Kseq",
            Continuation::KloopIncr(_) => "KloopIncr",
            Continuation::KloopBody(_) => "KloopBody",
            Continuation::Kcall { .. } => "Kcall",
            Continuation::Stop => "Kstop",
            Continuation::Exited { .. } => "Kexited",
        }
    }
}

/// `⟨env, conts, mem⟩`. The head of `conts` (index 0) is the next work item.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineState {
    pub env: Env,
    pub conts: Vec<Continuation>,
    pub mem: Vec<Value>,
}

impl MachineState {
    pub fn new(env: Env, conts: Vec<Continuation>, mem: Vec<Value>) -> Self {
        MachineState { env, conts, mem }
    }

    pub fn head(&self) -> Option<&Continuation> {
        self.conts.first()
    }

    pub fn is_final(&self) -> bool {
        self.conts.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_of_constant_is_empty() {
        assert!(free_vars(&Expr::int(5)).is_empty());
    }

    #[test]
    fn free_vars_collects_both_operands() {
        let e = Expr::bin(BinOp::Add, Expr::var("sec"), Expr::var("pub"));
        let got: Vec<_> = free_vars(&e).into_iter().map(|i| i.to_string()).collect();
        assert_eq!(got, vec!["pub", "sec"]);
    }

    #[test]
    fn free_vars_under_negation() {
        let got = free_vars(&Expr::negate(Expr::var("b")));
        assert_eq!(got.len(), 1);
        assert!(got.contains(&Ident::new("b")));
    }

    #[test]
    fn undef_is_never_low_equal() {
        assert!(!Value::Undef.low_eq(&Value::Undef));
        assert!(Value::Int(3).low_eq(&Value::Int(3)));
        assert!(!Value::Int(3).low_eq(&Value::Bool(true)));
    }

    #[test]
    fn arithmetic_on_undef_fails() {
        assert_eq!(apply_binop(BinOp::Add, &Value::Undef, &Value::Int(1)), Err(EvalError::Undef));
        assert!(apply_binop(BinOp::Add, &Value::Bool(true), &Value::Int(1)).is_err());
    }

    #[test]
    fn seq_all_nests_to_the_right() {
        let s = Stmt::seq_all(vec![Stmt::brk(), Stmt::cont(), Stmt::skip()]);
        assert_eq!(s, Stmt::seq(Stmt::brk(), Stmt::seq(Stmt::cont(), Stmt::skip())));
        assert_eq!(Stmt::seq_all(vec![]), Stmt::skip());
    }

    #[test]
    fn spans_do_not_affect_equality() {
        let a = Stmt::at(StmtKind::Break, Span { line: 1, col: 1 });
        let b = Stmt::at(StmtKind::Break, Span { line: 9, col: 4 });
        assert_eq!(a, b);
    }
}
