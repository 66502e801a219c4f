//! Specification terms over logical variables.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::{apply_binop, apply_unop, truth, BinOp, EvalError, Ident, UnOp, Value};

/// Term of the assertion language. Terms only mention logical variables
/// (written `x.name`), never program variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Lit(Value),
    LVar(Ident),
    Un(UnOp, Box<Term>),
    Bin(BinOp, Box<Term>, Box<Term>),
    Ite(Box<Term>, Box<Term>, Box<Term>),
}

impl Term {
    pub fn lvar(name: &str) -> Term {
        Term::LVar(Ident::new(name))
    }

    pub fn int(n: i64) -> Term {
        Term::Lit(Value::Int(n))
    }

    pub fn ptr(l: usize) -> Term {
        Term::Lit(Value::Ptr(l))
    }

    pub fn tt() -> Term {
        Term::Lit(Value::Bool(true))
    }

    pub fn ff() -> Term {
        Term::Lit(Value::Bool(false))
    }

    pub fn bin(op: BinOp, a: Term, b: Term) -> Term {
        Term::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::bin(BinOp::Eq, a, b)
    }

    pub fn negate(a: Term) -> Term {
        Term::Un(UnOp::Not, Box::new(a))
    }

    pub fn ite(c: Term, a: Term, b: Term) -> Term {
        Term::Ite(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn is_false_lit(&self) -> bool {
        matches!(self, Term::Lit(Value::Bool(false)))
    }

    /// Replace logical variables according to `map`; unmapped ones stay.
    pub fn subst(&self, map: &BTreeMap<Ident, Term>) -> Term {
        match self {
            Term::Lit(_) => self.clone(),
            Term::LVar(id) => map.get(id).cloned().unwrap_or_else(|| self.clone()),
            Term::Un(op, a) => Term::Un(*op, Box::new(a.subst(map))),
            Term::Bin(op, a, b) => Term::Bin(*op, Box::new(a.subst(map)), Box::new(b.subst(map))),
            Term::Ite(c, a, b) => Term::Ite(
                Box::new(c.subst(map)),
                Box::new(a.subst(map)),
                Box::new(b.subst(map)),
            ),
        }
    }

    pub fn lvars(&self, out: &mut Vec<Ident>) {
        match self {
            Term::Lit(_) => {}
            Term::LVar(id) => {
                if !out.contains(id) {
                    out.push(id.clone())
                }
            }
            Term::Un(_, a) => a.lvars(out),
            Term::Bin(_, a, b) => {
                a.lvars(out);
                b.lvars(out);
            }
            Term::Ite(c, a, b) => {
                c.lvars(out);
                a.lvars(out);
                b.lvars(out);
            }
        }
    }
}

/// Assignment of values to logical variables (the record `x`).
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogicalEnv(pub BTreeMap<Ident, Value>);

impl LogicalEnv {
    pub fn new() -> Self {
        LogicalEnv::default()
    }

    pub fn get(&self, id: &Ident) -> Option<&Value> {
        self.0.get(id)
    }

    pub fn insert(&mut self, id: Ident, v: Value) {
        self.0.insert(id, v);
    }

    /// Keep only the variables declared in `decls`.
    pub fn restrict(&self, decls: &LogicalDecls) -> LogicalEnv {
        LogicalEnv(
            decls
                .vars
                .iter()
                .filter_map(|d| self.0.get(&d.name).map(|v| (d.name.clone(), v.clone())))
                .collect(),
        )
    }
}

impl fmt::Display for LogicalEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "x.{k} = {v}")?;
        }
        f.write_str("}")
    }
}

pub fn eval_term(x: &LogicalEnv, t: &Term) -> Result<Value, EvalError> {
    match t {
        Term::Lit(v) => Ok(v.clone()),
        Term::LVar(id) => x.get(id).cloned().ok_or_else(|| EvalError::Unbound(id.clone())),
        Term::Un(op, a) => apply_unop(*op, &eval_term(x, a)?),
        Term::Bin(op, a, b) => apply_binop(*op, &eval_term(x, a)?, &eval_term(x, b)?),
        Term::Ite(c, a, b) => {
            if truth(&eval_term(x, c)?)? {
                eval_term(x, a)
            } else {
                eval_term(x, b)
            }
        }
    }
}

/// A pure formula holds when its term evaluates to a true value. Evaluation
/// errors make the formula false.
pub fn holds(x: &LogicalEnv, t: &Term) -> bool {
    matches!(eval_term(x, t).and_then(|v| truth(&v)), Ok(true))
}

/// Value side of a points-to fact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// Any defined value.
    Wild,
    Exact(Term),
    Cond(Term, Box<Pattern>, Box<Pattern>),
}

impl Pattern {
    pub fn matches(&self, x: &LogicalEnv, v: &Value) -> bool {
        match self {
            Pattern::Wild => !v.is_undef(),
            Pattern::Exact(t) => eval_term(x, t).map(|w| w.low_eq(v)).unwrap_or(false),
            Pattern::Cond(c, a, b) => match eval_term(x, c).and_then(|c| truth(&c)) {
                Ok(true) => a.matches(x, v),
                Ok(false) => b.matches(x, v),
                Err(_) => false,
            },
        }
    }

    pub fn subst(&self, map: &BTreeMap<Ident, Term>) -> Pattern {
        match self {
            Pattern::Wild => Pattern::Wild,
            Pattern::Exact(t) => Pattern::Exact(t.subst(map)),
            Pattern::Cond(c, a, b) => {
                Pattern::Cond(c.subst(map), Box::new(a.subst(map)), Box::new(b.subst(map)))
            }
        }
    }

    pub fn lvars(&self, out: &mut Vec<Ident>) {
        match self {
            Pattern::Wild => {}
            Pattern::Exact(t) => t.lvars(out),
            Pattern::Cond(c, a, b) => {
                c.lvars(out);
                a.lvars(out);
                b.lvars(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LogicalVarDecl {
    pub name: Ident,
    pub domain: Vec<Value>,
}

/// Default cap on the size of a single logical variable's domain.
pub const DEFAULT_DOMAIN_CAP: usize = 16;

/// Declared logical variables with their finite domains.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LogicalDecls {
    pub vars: Vec<LogicalVarDecl>,
}

impl LogicalDecls {
    pub fn new(vars: Vec<LogicalVarDecl>) -> Self {
        LogicalDecls { vars }
    }

    pub fn push(&mut self, name: Ident, domain: Vec<Value>) {
        self.vars.push(LogicalVarDecl { name, domain });
    }

    pub fn get(&self, name: &Ident) -> Option<&LogicalVarDecl> {
        self.vars.iter().find(|d| &d.name == name)
    }

    pub fn contains(&self, name: &Ident) -> bool {
        self.get(name).is_some()
    }

    /// Number of logical environments, saturating.
    pub fn env_count(&self) -> usize {
        self.vars.iter().fold(1usize, |acc, d| acc.saturating_mul(d.domain.len()))
    }

    /// All logical environments in lexicographic order of the declarations.
    pub fn envs(&self) -> EnvIter<'_> {
        EnvIter {
            decls: self,
            idx: vec![0; self.vars.len()],
            done: self.vars.iter().any(|d| d.domain.is_empty()),
        }
    }

    pub fn admits(&self, x: &LogicalEnv) -> bool {
        self.vars.iter().all(|d| x.get(&d.name).is_some_and(|v| d.domain.contains(v)))
    }
}

pub struct EnvIter<'a> {
    decls: &'a LogicalDecls,
    idx: Vec<usize>,
    done: bool,
}

impl Iterator for EnvIter<'_> {
    type Item = LogicalEnv;

    fn next(&mut self) -> Option<LogicalEnv> {
        if self.done {
            return None;
        }
        let env = LogicalEnv(
            self.decls
                .vars
                .iter()
                .zip(&self.idx)
                .map(|(d, &i)| (d.name.clone(), d.domain[i].clone()))
                .collect(),
        );
        // odometer increment, last declaration fastest
        let mut pos = self.idx.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.idx[pos] += 1;
            if self.idx[pos] < self.decls.vars[pos].domain.len() {
                break;
            }
            self.idx[pos] = 0;
        }
        Some(env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decls() -> LogicalDecls {
        let mut d = LogicalDecls::default();
        d.push(Ident::new("b"), vec![Value::Int(0), Value::Int(1)]);
        d.push(Ident::new("v"), vec![Value::Int(0), Value::Int(1), Value::Int(2)]);
        d
    }

    #[test]
    fn env_enumeration_covers_product() {
        let d = decls();
        let all: Vec<_> = d.envs().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(d.env_count(), 6);
        let mut uniq = all.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 6);
        assert!(all.iter().all(|x| d.admits(x)));
    }

    #[test]
    fn empty_decls_have_one_env() {
        assert_eq!(LogicalDecls::default().envs().count(), 1);
    }

    #[test]
    fn ite_term_selects_branch() {
        let mut x = LogicalEnv::new();
        x.insert(Ident::new("b"), Value::Int(1));
        let t = Term::ite(Term::lvar("b"), Term::int(7), Term::int(9));
        assert_eq!(eval_term(&x, &t), Ok(Value::Int(7)));
    }

    #[test]
    fn conditional_pattern_with_wildcard() {
        let mut x = LogicalEnv::new();
        x.insert(Ident::new("b"), Value::Int(0));
        x.insert(Ident::new("v"), Value::Int(5));
        let p = Pattern::Cond(Term::lvar("b"), Box::new(Pattern::Exact(Term::lvar("v"))), Box::new(Pattern::Wild));
        assert!(p.matches(&x, &Value::Int(3)));
        assert!(!p.matches(&x, &Value::Undef));
        x.insert(Ident::new("b"), Value::Int(1));
        assert!(p.matches(&x, &Value::Int(5)));
        assert!(!p.matches(&x, &Value::Int(3)));
    }

    #[test]
    fn erroring_formula_does_not_hold() {
        let t = Term::bin(BinOp::Add, Term::tt(), Term::int(1));
        assert!(!holds(&LogicalEnv::new(), &t));
    }
}
