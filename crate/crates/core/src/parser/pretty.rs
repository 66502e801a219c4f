//! Printing programs back to source. `parse(pretty(p)) == p` structurally.

use std::fmt::Write as _;

use crate::logic::{
    Assertion, HeapClsf, IfcAssertTemplate, LabelExpr, LogicalDecls, Pattern, PostconditionTemplate, StackClsf, Term,
};
use crate::program::{HeapDecl, SourceProgram};
use crate::semantics::ExitKind;
use crate::types::{Expr, Label, Stmt, StmtKind, UnOp, Value};

pub fn pretty(p: &SourceProgram) -> String {
    Printer::new(&p.heap, false).program(p)
}

/// One-line rendering of a statement, e.g. `break; continue;`.
pub fn pretty_stmt(s: &Stmt) -> String {
    let heap = HeapDecl::default();
    let mut pr = Printer::new(&heap, true);
    pr.stmt_list(s, 0);
    pr.out.trim_end().to_string()
}

pub fn pretty_expr(e: &Expr) -> String {
    let heap = HeapDecl::default();
    Printer::new(&heap, true).expr(e)
}

pub fn pretty_term(t: &Term) -> String {
    let heap = HeapDecl::default();
    Printer::new(&heap, true).term(t)
}

pub fn pretty_label_expr(l: &LabelExpr) -> String {
    let heap = HeapDecl::default();
    Printer::new(&heap, true).label_expr(l)
}

pub fn pretty_template(t: &IfcAssertTemplate) -> String {
    let heap = HeapDecl::default();
    Printer::new(&heap, true).ifc_assert(t)
}

pub struct Printer<'h> {
    heap: &'h HeapDecl,
    compact: bool,
    out: String,
}

impl<'h> Printer<'h> {
    pub fn new(heap: &'h HeapDecl, compact: bool) -> Self {
        Printer { heap, compact, out: String::new() }
    }

    fn line(&mut self, indent: usize, text: &str) {
        if self.compact {
            self.out.push_str(text);
            self.out.push(' ');
        } else {
            for _ in 0..indent {
                self.out.push_str("  ");
            }
            self.out.push_str(text);
            self.out.push('\n');
        }
    }

    pub fn program(mut self, p: &SourceProgram) -> String {
        if p.heap.size > 0 || !p.heap.regions.is_empty() {
            let mut h = format!("//@ heap {}", p.heap.size);
            for (n, l) in &p.heap.regions {
                let _ = write!(h, " region {n} @ {l}");
            }
            h.push(';');
            self.line(0, &h);
            self.line(0, "");
        }
        for (i, f) in p.functions.iter().enumerate() {
            if i > 0 {
                self.line(0, "");
            }
            let params: Vec<String> = f.params.iter().map(|(t, n)| format!("{t} {n}")).collect();
            self.line(0, &format!("{} {}({})", f.ret_ty, f.name, params.join(", ")));
            if !f.spec.logicals.vars.is_empty() {
                let l = format!("//@ logical {};", self.decls(&f.spec.logicals));
                self.line(0, &l);
            }
            let pre = format!("//@ pre {};", self.ifc_assert(&f.spec.pre));
            self.line(0, &pre);
            let post = format!("//@ post {};", self.post(&f.spec.post));
            self.line(0, &post);
            self.line(0, "{");
            for (t, n) in &f.locals {
                self.line(1, &format!("{t} {n};"));
            }
            if !matches!(f.body.kind, StmtKind::Skip) {
                self.stmt_list(&f.body, 1);
            }
            self.line(0, "}");
        }
        self.out
    }

    fn decls(&self, d: &LogicalDecls) -> String {
        d.vars
            .iter()
            .map(|v| {
                let vals: Vec<String> = v.domain.iter().map(|x| self.value(x)).collect();
                format!("x.{} in {{{}}}", v.name, vals.join(", "))
            })
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn value(&self, v: &Value) -> String {
        match v {
            Value::Ptr(l) => match self.heap.region_name(*l) {
                Some(n) => format!("&{n}"),
                None => format!("&{l}"),
            },
            other => other.to_string(),
        }
    }

    pub fn post(&self, p: &PostconditionTemplate) -> String {
        let cases: Vec<String> =
            ExitKind::ALL.iter().map(|ek| format!("{ek}: {}", self.ifc_assert(p.get(*ek)))).collect();
        format!("({})", cases.join(", "))
    }

    pub fn ifc_assert(&self, t: &IfcAssertTemplate) -> String {
        if *t == IfcAssertTemplate::bottom() {
            return "false".into();
        }
        format!("{}, {}, {}", self.assertion(&t.assertion), self.stack_clsf(&t.stack), self.heap_clsf(&t.heap))
    }

    pub fn assertion(&self, a: &Assertion) -> String {
        let props: Vec<String> = a.props.iter().map(|t| self.term(t)).collect();
        let locals: Vec<String> = a.locals.iter().map(|(k, t)| format!("{k} = {}", self.term(t))).collect();
        let seps: Vec<String> =
            a.seps.iter().map(|p| format!("{} |-> {}", self.term(&p.addr), self.pattern(&p.val))).collect();
        format!("PROP({}) LOCAL({}) SEP({})", props.join(", "), locals.join(", "), seps.join(", "))
    }

    fn default_entry(l: Label, entries: &mut Vec<String>) {
        if l != Label::Hi {
            entries.push(format!("_: {l}"));
        }
    }

    pub fn stack_clsf(&self, n: &StackClsf) -> String {
        let mut entries: Vec<String> =
            n.entries.iter().map(|(k, l)| format!("{k}: {}", self.label_expr(l))).collect();
        Self::default_entry(n.default, &mut entries);
        format!("[{}]", entries.join(", "))
    }

    pub fn heap_clsf(&self, a: &HeapClsf) -> String {
        let mut entries: Vec<String> =
            a.entries.iter().map(|(k, l)| format!("{}: {}", self.term(k), self.label_expr(l))).collect();
        Self::default_entry(a.default, &mut entries);
        format!("[{}]", entries.join(", "))
    }

    pub fn label_expr(&self, l: &LabelExpr) -> String {
        match l {
            LabelExpr::Lit(l) => l.to_string(),
            LabelExpr::Cond(c, a, b) => {
                format!("({} ? {} : {})", self.term(c), self.label_expr(a), self.label_expr(b))
            }
            LabelExpr::Join(a, b) => format!("lub({}, {})", self.label_expr(a), self.label_expr(b)),
            LabelExpr::Meet(a, b) => format!("glb({}, {})", self.label_expr(a), self.label_expr(b)),
        }
    }

    fn pattern(&self, p: &Pattern) -> String {
        match p {
            Pattern::Wild => "_".into(),
            Pattern::Exact(t) => self.term(t),
            Pattern::Cond(c, a, b) => format!("({} ? {} : {})", self.term(c), self.pattern(a), self.pattern(b)),
        }
    }

    pub fn term(&self, t: &Term) -> String {
        match t {
            Term::Lit(v) => self.value(v),
            Term::LVar(id) => format!("x.{id}"),
            Term::Un(UnOp::Not, a) => format!("!{}", self.term_atom(a)),
            Term::Bin(op, a, b) => format!("{} {} {}", self.term_atom(a), op.symbol(), self.term_atom(b)),
            Term::Ite(c, a, b) => format!("({} ? {} : {})", self.term(c), self.term(a), self.term(b)),
        }
    }

    fn term_atom(&self, t: &Term) -> String {
        match t {
            Term::Bin(..) => format!("({})", self.term(t)),
            _ => self.term(t),
        }
    }

    pub fn expr(&self, e: &Expr) -> String {
        match e {
            Expr::Const(v) => self.value(v),
            Expr::Var(id) => id.to_string(),
            Expr::UnOp(UnOp::Not, a) => format!("!{}", self.expr_atom(a)),
            Expr::BinOp(op, a, b) => format!("{} {} {}", self.expr_atom(a), op.symbol(), self.expr_atom(b)),
            Expr::AddrOfDeref(a) => format!("&*{}", self.expr_atom(a)),
        }
    }

    fn expr_atom(&self, e: &Expr) -> String {
        match e {
            Expr::BinOp(..) => format!("({})", self.expr(e)),
            _ => self.expr(e),
        }
    }

    /// Print the right spine of a sequence as consecutive statements.
    pub fn stmt_list(&mut self, s: &Stmt, indent: usize) {
        let mut cur = s;
        while let StmtKind::Seq(a, b) = &cur.kind {
            if matches!(a.kind, StmtKind::Seq(..)) {
                self.line(indent, "{");
                self.stmt_list(a, indent + 1);
                self.line(indent, "}");
            } else {
                self.stmt(a, indent);
            }
            cur = b;
        }
        self.stmt(cur, indent);
    }

    fn block(&mut self, head: &str, s: &Stmt, indent: usize, tail: &str) {
        self.line(indent, &format!("{head}{{"));
        self.stmt_list(s, indent + 1);
        self.line(indent, &format!("}}{tail}"));
    }

    fn stmt(&mut self, s: &Stmt, indent: usize) {
        match &s.kind {
            StmtKind::Skip => self.line(indent, "skip;"),
            StmtKind::Break => self.line(indent, "break;"),
            StmtKind::Continue => self.line(indent, "continue;"),
            StmtKind::Return(None) => self.line(indent, "return;"),
            StmtKind::Return(Some(e)) => {
                let t = format!("return {};", self.expr(e));
                self.line(indent, &t)
            }
            StmtKind::Set(id, e) => {
                let t = format!("{id} = {};", self.expr(e));
                self.line(indent, &t)
            }
            StmtKind::Load(id, e) => {
                let t = format!("{id} = *{};", self.expr_atom(e));
                self.line(indent, &t)
            }
            StmtKind::Store(a, e) => {
                let t = format!("*{} = {};", self.expr_atom(a), self.expr(e));
                self.line(indent, &t)
            }
            StmtKind::Seq(..) => self.block("", s, indent, ""),
            StmtKind::If(b, c1, c2) => {
                let head = format!("if ({}) ", self.expr(b));
                self.line(indent, &format!("{head}{{"));
                self.stmt_list(c1, indent + 1);
                self.block("} else ", c2, indent, "");
            }
            StmtKind::Loop(l) => {
                let inv = format!("//@ invariant {};", self.ifc_assert(&l.invariant));
                self.line(indent, &inv);
                if l.incr_invariant != l.invariant {
                    let t = format!("//@ incr_invariant {};", self.ifc_assert(&l.incr_invariant));
                    self.line(indent, &t);
                }
                match (&l.incr.kind, &l.body.kind) {
                    (StmtKind::Skip, StmtKind::If(b, c, e)) if matches!(e.kind, StmtKind::Break) => {
                        let head = format!("while ({}) ", self.expr(b));
                        self.block(&head, c, indent, "");
                    }
                    _ => {
                        let mut inner = Printer::new(self.heap, true);
                        inner.stmt_list(&l.incr, 0);
                        let head = format!("loop ({}) ", inner.out.trim_end());
                        self.block(&head, &l.body, indent, "");
                    }
                }
            }
            StmtKind::Call(c) => {
                if !c.with.is_empty() {
                    let w: Vec<String> = c.with.iter().map(|(k, t)| format!("x.{k} = {}", self.term(t))).collect();
                    self.line(indent, &format!("//@ with {{{}}};", w.join(", ")));
                }
                let args: Vec<String> = c.args.iter().map(|a| self.expr(a)).collect();
                let call = format!("{}({});", c.fname, args.join(", "));
                let t = match &c.dest {
                    Some(d) => format!("{d} = {call}"),
                    None => call,
                };
                self.line(indent, &t)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    #[test]
    fn compact_examples() {
        assert_eq!(pretty_stmt(&Stmt::skip()), "skip;");
        assert_eq!(pretty_stmt(&Stmt::seq(Stmt::brk(), Stmt::cont())), "break; continue;");
    }

    #[test]
    fn round_trip_example() {
        let p = parse(crate::parser::parse::CLASSIFY).unwrap();
        let once = pretty(&p);
        let q = parse(&once).unwrap_or_else(|e| panic!("{e}\n{once}"));
        assert_eq!(p, q);
        assert_eq!(pretty(&q), once);
    }

    #[test]
    fn loops_and_nested_blocks_round_trip() {
        let src = r#"
int g(int a)
//@ post (ret: PROP() LOCAL() SEP(), [ret_val: Lo], []);
{
  int i;
  int s = 0;
  { i = 0; s = s + i; }
  //@ invariant PROP() LOCAL() SEP(), [i: Lo, _: Lo], [];
  //@ incr_invariant true, [], [];
  loop (i = i + 1; skip;) {
    if (i == 3) { break; } else { continue; }
  }
  //@ invariant true, [], [];
  while (!(i < 0)) { i = i - 1; }
  //@ with {};
  s = g(&*i);
  return -2;
}
"#;
        let p = parse(src).unwrap();
        let q = parse(&pretty(&p)).unwrap_or_else(|e| panic!("{e}\n{}", pretty(&p)));
        assert_eq!(p, q);
    }
}
