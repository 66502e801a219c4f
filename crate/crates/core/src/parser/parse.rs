//! Recursive-descent parser for programs and their annotations.

use std::collections::BTreeSet;

use super::lexer::{lex, ParseError, Tok, Token};
use crate::logic::{
    Assertion, HeapClsf, IfcAssertTemplate, LabelExpr, LogicalDecls, Pattern, PointsTo, PostconditionTemplate,
    StackClsf, Term,
};
use crate::logic::term::DEFAULT_DOMAIN_CAP;
use crate::program::{CType, FuncSpec, FunctionDef, HeapDecl, SourceProgram, RET_VAL};
use crate::semantics::ExitKind;
use crate::types::{BinOp, CallStmt, Expr, Ident, Label, Span, Stmt, StmtKind, UnOp, Value};

type PResult<T> = Result<T, ParseError>;

/// Options for [`parse_with`].
#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Largest admissible logical-variable domain.
    pub domain_cap: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { domain_cap: DEFAULT_DOMAIN_CAP }
    }
}

pub fn parse(text: &str) -> PResult<SourceProgram> {
    parse_with(text, ParseOptions::default())
}

pub fn parse_with(text: &str, opts: ParseOptions) -> PResult<SourceProgram> {
    let mut p = Parser { toks: lex(text)?, pos: 0, heap: HeapDecl::default(), locals: Vec::new(), opts };
    let prog = p.program()?;
    validate(&prog)?;
    Ok(prog)
}

const KEYWORDS: &[&str] =
    &["if", "else", "while", "loop", "break", "continue", "return", "skip", "true", "false", "int", "bool", "void"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    heap: HeapDecl,
    /// Locals collected while parsing the current function body.
    locals: Vec<(CType, Ident)>,
    opts: ParseOptions,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::new(msg, self.span()))
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Annot => "`//@`".into(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Ident::new(&s))
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => self.err(format!("expected integer, found {}", self.describe())),
        }
    }

    fn annot_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Annot) && matches!(self.peek_at(1), Tok::Ident(s) if s == kw)
    }

    // ---- program structure ----

    fn program(&mut self) -> PResult<SourceProgram> {
        if self.annot_kw("heap") {
            self.bump();
            self.bump();
            self.heap_decl()?;
        }
        let mut functions = Vec::new();
        while !matches!(self.peek(), Tok::Eof) {
            functions.push(self.function()?);
        }
        if functions.is_empty() {
            return self.err("expected at least one function");
        }
        Ok(SourceProgram { heap: self.heap.clone(), functions })
    }

    fn heap_decl(&mut self) -> PResult<()> {
        let size = self.int()?;
        if size < 0 {
            return self.err("negative heap size");
        }
        self.heap.size = size as usize;
        while self.eat_kw("region") {
            let span = self.span();
            let name = self.ident()?;
            self.expect_sym("@")?;
            let loc = self.int()?;
            if loc < 0 || loc as usize >= self.heap.size {
                return Err(ParseError::new(format!("region `{name}` lies outside the heap"), span));
            }
            if self.heap.region(name.as_str()).is_some() {
                return Err(ParseError::new(format!("duplicate region `{name}`"), span));
            }
            self.heap.regions.push((name, loc as usize));
        }
        self.expect_sym(";")
    }

    fn ctype(&mut self) -> PResult<CType> {
        let t = if self.eat_kw("void") {
            CType::Void
        } else if self.eat_kw("int") {
            if self.eat_sym("*") {
                CType::IntPtr
            } else {
                CType::Int
            }
        } else if self.eat_kw("bool") {
            CType::Bool
        } else {
            return self.err(format!("expected a type, found {}", self.describe()));
        };
        Ok(t)
    }

    fn at_type(&self) -> bool {
        self.is_kw("int") || self.is_kw("bool")
    }

    fn function(&mut self) -> PResult<FunctionDef> {
        let span = self.span();
        let ret_ty = self.ctype()?;
        if ret_ty == CType::IntPtr {
            return Err(ParseError::new("functions return int, bool or void", span));
        }
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                let ty = self.ctype()?;
                if ty == CType::Void {
                    return self.err("parameters cannot be void");
                }
                params.push((ty, self.ident()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let mut logicals = LogicalDecls::default();
        let mut pre = None;
        let mut post = None;
        while matches!(self.peek(), Tok::Annot) {
            let aspan = self.span();
            self.bump();
            if self.eat_kw("logical") {
                self.logical_decls(&mut logicals)?;
            } else if self.eat_kw("pre") {
                if pre.is_some() {
                    return Err(ParseError::new("duplicate precondition", aspan));
                }
                pre = Some(self.ifc_assert()?);
                self.expect_sym(";")?;
            } else if self.eat_kw("post") {
                if post.is_some() {
                    return Err(ParseError::new("duplicate postcondition", aspan));
                }
                post = Some(self.post()?);
            } else {
                return self.err(format!("expected `logical`, `pre` or `post`, found {}", self.describe()));
            }
        }
        self.locals.clear();
        let body = self.block()?;
        let spec = FuncSpec {
            name: name.clone(),
            params: params.iter().map(|(_, p)| p.clone()).collect(),
            logicals,
            pre: pre.unwrap_or_default(),
            post: post.unwrap_or_else(default_post),
        };
        Ok(FunctionDef { name, ret_ty, params, locals: std::mem::take(&mut self.locals), body, spec, span })
    }

    fn logical_decls(&mut self, decls: &mut LogicalDecls) -> PResult<()> {
        loop {
            let span = self.span();
            let name = self.lvar_name()?;
            if name.as_str().starts_with("__") {
                return Err(ParseError::new("logical names starting with `__` are reserved", span));
            }
            if decls.contains(&name) {
                return Err(ParseError::new(format!("duplicate logical variable x.{name}"), span));
            }
            self.expect_kw("in")?;
            let domain = self.domain()?;
            if domain.is_empty() {
                return Err(ParseError::new(format!("empty domain for x.{name}"), span));
            }
            if domain.len() > self.opts.domain_cap {
                return Err(ParseError::new(
                    format!("domain of x.{name} has {} values, cap is {}", domain.len(), self.opts.domain_cap),
                    span,
                ));
            }
            decls.push(name, domain);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")
    }

    fn lvar_name(&mut self) -> PResult<Ident> {
        if !self.is_kw("x") || !matches!(self.peek_at(1), Tok::Sym(".")) {
            return self.err(format!("expected logical variable `x.name`, found {}", self.describe()));
        }
        self.bump();
        self.bump();
        self.ident()
    }

    fn domain(&mut self) -> PResult<Vec<Value>> {
        self.expect_sym("{")?;
        let mut out: Vec<Value> = Vec::new();
        if !self.is_sym("}") {
            loop {
                let span = self.span();
                let v = self.literal_value()?;
                let mut vals = vec![v.clone()];
                if self.eat_sym("..") {
                    let hi = self.int()?;
                    let Value::Int(lo) = v else {
                        return Err(ParseError::new("ranges need integer bounds", span));
                    };
                    if hi < lo || hi - lo > 1 << 16 {
                        return Err(ParseError::new("bad range", span));
                    }
                    vals = (lo..=hi).map(Value::Int).collect();
                }
                for v in vals {
                    if out.contains(&v) {
                        return Err(ParseError::new(format!("duplicate domain value {v}"), span));
                    }
                    out.push(v);
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym("}")?;
        Ok(out)
    }

    /// Integer, boolean or pointer literal.
    fn literal_value(&mut self) -> PResult<Value> {
        if self.eat_kw("true") {
            return Ok(Value::Bool(true));
        }
        if self.eat_kw("false") {
            return Ok(Value::Bool(false));
        }
        if self.eat_sym("&") {
            return self.pointer();
        }
        Ok(Value::Int(self.int()?))
    }

    /// After `&`: a heap region name or a raw location.
    fn pointer(&mut self) -> PResult<Value> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                if n as usize >= self.heap.size || n < 0 {
                    return Err(ParseError::new(format!("location &{n} lies outside the heap"), span));
                }
                Ok(Value::Ptr(n as usize))
            }
            Tok::Ident(s) => match self.heap.region(&s) {
                Some(l) => {
                    self.bump();
                    Ok(Value::Ptr(l))
                }
                None => Err(ParseError::new(format!("unknown heap region `{s}`"), span)),
            },
            _ => self.err(format!("expected heap region after `&`, found {}", self.describe())),
        }
    }

    // ---- annotations ----

    fn post(&mut self) -> PResult<PostconditionTemplate> {
        self.expect_sym("(")?;
        let mut post = PostconditionTemplate::select(
            IfcAssertTemplate::bottom(),
            IfcAssertTemplate::bottom(),
            IfcAssertTemplate::bottom(),
            IfcAssertTemplate::bottom(),
        );
        let mut seen = BTreeSet::new();
        loop {
            let span = self.span();
            let ek = match self.ident()?.as_str() {
                "nrm" => ExitKind::Nrm,
                "brk" => ExitKind::Brk,
                "cont" => ExitKind::Cont,
                "ret" => ExitKind::Ret,
                other => return Err(ParseError::new(format!("unknown exit kind `{other}`"), span)),
            };
            if !seen.insert(ek) {
                return Err(ParseError::new(format!("exit kind `{ek}` given twice"), span));
            }
            self.expect_sym(":")?;
            *post.get_mut(ek) = self.ifc_assert()?;
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        self.expect_sym(";")?;
        Ok(post)
    }

    /// `assertion [, [stack], [heap]]`. A bare `false` is the bottom triple.
    fn ifc_assert(&mut self) -> PResult<IfcAssertTemplate> {
        let bare_false = self.is_kw("false");
        let assertion = self.assertion()?;
        let has_clsf = self.is_sym(",") && matches!(self.peek_at(1), Tok::Sym("["));
        if !has_clsf {
            if bare_false {
                return Ok(IfcAssertTemplate::bottom());
            }
            return Ok(IfcAssertTemplate::new(assertion, StackClsf::default(), HeapClsf::default()));
        }
        self.expect_sym(",")?;
        let stack = self.stack_clsf()?;
        self.expect_sym(",")?;
        let heap = self.heap_clsf()?;
        Ok(IfcAssertTemplate { assertion, stack, heap })
    }

    fn assertion(&mut self) -> PResult<Assertion> {
        if self.eat_kw("false") {
            return Ok(Assertion::falsum());
        }
        if self.eat_kw("true") {
            return Ok(Assertion::truth());
        }
        let mut a = Assertion::default();
        let mut any = false;
        if self.eat_kw("PROP") {
            any = true;
            self.expect_sym("(")?;
            if !self.is_sym(")") {
                loop {
                    a.props.push(self.term()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        if self.eat_kw("LOCAL") {
            any = true;
            self.expect_sym("(")?;
            if !self.is_sym(")") {
                loop {
                    let span = self.span();
                    let id = self.ident()?;
                    if a.local(&id).is_some() {
                        return Err(ParseError::new(format!("`{id}` bound twice in LOCAL"), span));
                    }
                    self.expect_sym("=")?;
                    a.locals.push((id, self.term()?));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        if self.eat_kw("SEP") {
            any = true;
            self.expect_sym("(")?;
            if !self.is_sym(")") {
                loop {
                    let addr = self.term()?;
                    self.expect_sym("|->")?;
                    let val = self.pattern()?;
                    a.seps.push(PointsTo { addr, val });
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        if !any {
            return self.err(format!("expected assertion, found {}", self.describe()));
        }
        Ok(a)
    }

    fn stack_clsf(&mut self) -> PResult<StackClsf> {
        self.expect_sym("[")?;
        let mut out = StackClsf::default();
        if !self.is_sym("]") {
            loop {
                let span = self.span();
                if self.eat_kw("_") {
                    self.expect_sym(":")?;
                    out.default = self.label_lit()?;
                } else {
                    let id = self.ident()?;
                    if out.entries.contains_key(&id) {
                        return Err(ParseError::new(format!("`{id}` classified twice"), span));
                    }
                    self.expect_sym(":")?;
                    out.entries.insert(id, self.label_expr()?);
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym("]")?;
        Ok(out)
    }

    fn heap_clsf(&mut self) -> PResult<HeapClsf> {
        self.expect_sym("[")?;
        let mut out = HeapClsf::default();
        if !self.is_sym("]") {
            loop {
                if self.eat_kw("_") {
                    self.expect_sym(":")?;
                    out.default = self.label_lit()?;
                } else {
                    let key = self.term()?;
                    self.expect_sym(":")?;
                    let l = self.label_expr()?;
                    out.entries.push((key, l));
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym("]")?;
        Ok(out)
    }

    fn label_lit(&mut self) -> PResult<Label> {
        if self.eat_kw("Lo") {
            Ok(Label::Lo)
        } else if self.eat_kw("Hi") {
            Ok(Label::Hi)
        } else {
            self.err(format!("expected `Lo` or `Hi`, found {}", self.describe()))
        }
    }

    fn label_expr(&mut self) -> PResult<LabelExpr> {
        for (kw, join) in [("lub", true), ("glb", false)] {
            if self.is_kw(kw) && matches!(self.peek_at(1), Tok::Sym("(")) {
                self.bump();
                self.bump();
                let a = self.label_expr()?;
                self.expect_sym(",")?;
                let b = self.label_expr()?;
                self.expect_sym(")")?;
                let (a, b) = (Box::new(a), Box::new(b));
                return Ok(if join { LabelExpr::Join(a, b) } else { LabelExpr::Meet(a, b) });
            }
        }
        if self.eat_sym("(") {
            let c = self.term()?;
            self.expect_sym("?")?;
            let a = self.label_expr()?;
            self.expect_sym(":")?;
            let b = self.label_expr()?;
            self.expect_sym(")")?;
            return Ok(LabelExpr::cond(c, a, b));
        }
        Ok(LabelExpr::Lit(self.label_lit()?))
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        if self.eat_kw("_") {
            return Ok(Pattern::Wild);
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.bump();
            let c = self.term()?;
            if self.eat_sym("?") {
                let a = self.pattern()?;
                self.expect_sym(":")?;
                let b = self.pattern()?;
                self.expect_sym(")")?;
                return Ok(Pattern::Cond(c, Box::new(a), Box::new(b)));
            }
            self.pos = save;
        }
        Ok(Pattern::Exact(self.term()?))
    }

    // ---- terms and expressions share operator precedence ----

    fn binop(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Sym("+") => Some(BinOp::Add),
            Tok::Sym("-") => Some(BinOp::Sub),
            Tok::Sym("*") => Some(BinOp::Mul),
            Tok::Sym("==") => Some(BinOp::Eq),
            Tok::Sym("!=") => Some(BinOp::Ne),
            Tok::Sym("<") => Some(BinOp::Lt),
            Tok::Sym("&&") => Some(BinOp::And),
            Tok::Sym("||") => Some(BinOp::Or),
            _ => None,
        }
    }

    fn term(&mut self) -> PResult<Term> {
        self.term_prec(0)
    }

    fn term_prec(&mut self, min: u8) -> PResult<Term> {
        let mut lhs = self.term_atom()?;
        while let Some(op) = self.binop().filter(|op| op.precedence() > min) {
            self.bump();
            let rhs = self.term_prec(op.precedence())?;
            lhs = Term::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term_atom(&mut self) -> PResult<Term> {
        if self.eat_sym("!") {
            return Ok(Term::negate(self.term_atom()?));
        }
        if self.eat_sym("(") {
            let t = self.term()?;
            if self.eat_sym("?") {
                let a = self.term()?;
                self.expect_sym(":")?;
                let b = self.term()?;
                self.expect_sym(")")?;
                return Ok(Term::ite(t, a, b));
            }
            self.expect_sym(")")?;
            return Ok(t);
        }
        if self.is_kw("x") && matches!(self.peek_at(1), Tok::Sym(".")) {
            return Ok(Term::LVar(self.lvar_name()?));
        }
        if let Tok::Ident(s) = self.peek() {
            if !matches!(s.as_str(), "true" | "false") {
                return self.err(format!(
                    "program variable `{s}` in an assertion term; terms mention logical variables `x.name`"
                ));
            }
        }
        Ok(Term::Lit(self.literal_value()?))
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.expr_prec(0)
    }

    fn expr_prec(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.expr_atom()?;
        while let Some(op) = self.binop().filter(|op| op.precedence() > min) {
            self.bump();
            let rhs = self.expr_prec(op.precedence())?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn expr_atom(&mut self) -> PResult<Expr> {
        if self.eat_sym("!") {
            return Ok(Expr::UnOp(UnOp::Not, Box::new(self.expr_atom()?)));
        }
        if self.eat_sym("(") {
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if self.is_sym("*") {
            return self.err("dereference is only allowed as a whole load or store statement");
        }
        if self.is_sym("&") && matches!(self.peek_at(1), Tok::Sym("*")) {
            self.bump();
            self.bump();
            return Ok(Expr::AddrOfDeref(Box::new(self.expr_atom()?)));
        }
        if let Tok::Ident(s) = self.peek() {
            if !matches!(s.as_str(), "true" | "false") {
                return Ok(Expr::Var(self.ident()?));
            }
        }
        Ok(Expr::Const(self.literal_value()?))
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Stmt> {
        let span = self.span();
        self.expect_sym("{")?;
        let mut items = Vec::new();
        while !self.is_sym("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.err("unterminated block");
            }
            if let Some(s) = self.item()? {
                items.push(s);
            }
        }
        self.expect_sym("}")?;
        let mut s = Stmt::seq_all(items);
        if matches!(s.kind, StmtKind::Skip) {
            s.span = span;
        }
        Ok(s)
    }

    /// A statement or a local declaration (which may produce no statement).
    fn item(&mut self) -> PResult<Option<Stmt>> {
        if !self.at_type() {
            return self.stmt().map(Some);
        }
        let span = self.span();
        let ty = self.ctype()?;
        let id = self.ident()?;
        if self.locals.iter().any(|(_, l)| l == &id) {
            return Err(ParseError::new(format!("local `{id}` declared twice"), span));
        }
        self.locals.push((ty, id.clone()));
        if self.eat_sym(";") {
            return Ok(None);
        }
        self.expect_sym("=")?;
        self.assign_rhs(id, Vec::new(), span).map(Some)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        if matches!(self.peek(), Tok::Annot) {
            return self.annotated_stmt();
        }
        if self.is_sym("{") {
            return self.block();
        }
        if self.eat_kw("skip") {
            self.expect_sym(";")?;
            return Ok(Stmt::at(StmtKind::Skip, span));
        }
        if self.eat_kw("break") {
            self.expect_sym(";")?;
            return Ok(Stmt::at(StmtKind::Break, span));
        }
        if self.eat_kw("continue") {
            self.expect_sym(";")?;
            return Ok(Stmt::at(StmtKind::Continue, span));
        }
        if self.eat_kw("return") {
            let e = if self.is_sym(";") { None } else { Some(self.expr()?) };
            self.expect_sym(";")?;
            return Ok(Stmt::at(StmtKind::Return(e), span));
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let b = self.expr()?;
            self.expect_sym(")")?;
            let c1 = self.stmt()?;
            let c2 = if self.eat_kw("else") { self.stmt()? } else { Stmt::at(StmtKind::Skip, self.span()) };
            let mut s = Stmt::ite(b, c1, c2);
            s.span = span;
            return Ok(s);
        }
        if self.is_kw("while") || self.is_kw("loop") {
            return self.err("loop without invariant");
        }
        if self.eat_sym("*") {
            let a = self.expr()?;
            self.expect_sym("=")?;
            let e = self.expr()?;
            self.expect_sym(";")?;
            return Ok(Stmt::at(StmtKind::Store(a, e), span));
        }
        let id = self.ident()?;
        if self.is_sym("(") {
            return self.call_rest(None, id, Vec::new(), span);
        }
        self.expect_sym("=")?;
        self.assign_rhs(id, Vec::new(), span)
    }

    /// Right-hand side after `id =`: a load, a call or an expression.
    fn assign_rhs(&mut self, id: Ident, with: Vec<(Ident, Term)>, span: Span) -> PResult<Stmt> {
        if self.eat_sym("*") {
            let a = self.expr_atom()?;
            self.expect_sym(";")?;
            return Ok(Stmt::at(StmtKind::Load(id, a), span));
        }
        if matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
            && matches!(self.peek_at(1), Tok::Sym("("))
        {
            let f = self.ident()?;
            return self.call_rest(Some(id), f, with, span);
        }
        if !with.is_empty() {
            return Err(ParseError::new("`with` annotation must precede a call", span));
        }
        let e = self.expr()?;
        self.expect_sym(";")?;
        Ok(Stmt::at(StmtKind::Set(id, e), span))
    }

    fn call_rest(&mut self, dest: Option<Ident>, fname: Ident, with: Vec<(Ident, Term)>, span: Span) -> PResult<Stmt> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym(";")?;
        Ok(Stmt::at(StmtKind::Call(CallStmt { dest, fname, args, with }), span))
    }

    fn annotated_stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        if self.annot_kw("with") {
            self.bump();
            self.bump();
            self.expect_sym("{")?;
            let mut with = Vec::new();
            if !self.is_sym("}") {
                loop {
                    let name = self.lvar_name()?;
                    self.expect_sym("=")?;
                    with.push((name, self.term()?));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym("}")?;
            self.expect_sym(";")?;
            let cspan = self.span();
            let first = self.ident()?;
            if self.is_sym("(") {
                return self.call_rest(None, first, with, cspan);
            }
            self.expect_sym("=")?;
            return self.assign_rhs(first, with, cspan);
        }
        if !self.annot_kw("invariant") {
            self.bump();
            return self.err(format!("unexpected annotation {}", self.describe()));
        }
        self.bump();
        self.bump();
        let inv = self.ifc_assert()?;
        self.expect_sym(";")?;
        let incr_inv = if self.annot_kw("incr_invariant") {
            self.bump();
            self.bump();
            let t = self.ifc_assert()?;
            self.expect_sym(";")?;
            t
        } else {
            inv.clone()
        };
        let mut s = if self.eat_kw("while") {
            self.expect_sym("(")?;
            let b = self.expr()?;
            self.expect_sym(")")?;
            let body = self.stmt()?;
            let mut brk = Stmt::brk();
            brk.span = span;
            Stmt::looped(Stmt::skip(), Stmt::ite(b, body, brk), inv, incr_inv)
        } else if self.eat_kw("loop") {
            self.expect_sym("(")?;
            let mut items = Vec::new();
            while !self.is_sym(")") {
                if matches!(self.peek(), Tok::Eof) {
                    return self.err("unterminated loop increment");
                }
                if let Some(s) = self.item()? {
                    items.push(s);
                }
            }
            self.expect_sym(")")?;
            let body = self.stmt()?;
            Stmt::looped(Stmt::seq_all(items), body, inv, incr_inv)
        } else {
            return self.err(format!("expected `while` or `loop` after invariant, found {}", self.describe()));
        };
        s.span = span;
        Ok(s)
    }
}

/// Without a `post` annotation a function may exit normally or return with
/// no constraint; break and continue are impossible.
pub fn default_post() -> PostconditionTemplate {
    PostconditionTemplate::select(
        IfcAssertTemplate::default(),
        IfcAssertTemplate::bottom(),
        IfcAssertTemplate::bottom(),
        IfcAssertTemplate::default(),
    )
}

fn templates_of(s: &Stmt, out: &mut Vec<(Span, IfcAssertTemplate)>) {
    match &s.kind {
        StmtKind::Seq(a, b) | StmtKind::If(_, a, b) => {
            templates_of(a, out);
            templates_of(b, out);
        }
        StmtKind::Loop(l) => {
            out.push((s.span, l.invariant.clone()));
            out.push((s.span, l.incr_invariant.clone()));
            templates_of(&l.incr, out);
            templates_of(&l.body, out);
        }
        _ => {}
    }
}

fn check_vars(s: &Stmt, scope: &BTreeSet<Ident>) -> PResult<()> {
    let check = |id: &Ident| {
        if scope.contains(id) {
            Ok(())
        } else {
            Err(ParseError::new(format!("undeclared variable `{id}`"), s.span))
        }
    };
    let check_e = |e: &Expr| crate::types::free_vars(e).iter().try_for_each(check);
    match &s.kind {
        StmtKind::Skip | StmtKind::Break | StmtKind::Continue | StmtKind::Return(None) => Ok(()),
        StmtKind::Set(id, e) | StmtKind::Load(id, e) => {
            check(id)?;
            check_e(e)
        }
        StmtKind::Store(a, e) => {
            check_e(a)?;
            check_e(e)
        }
        StmtKind::Return(Some(e)) => check_e(e),
        StmtKind::Seq(a, b) => {
            check_vars(a, scope)?;
            check_vars(b, scope)
        }
        StmtKind::If(e, a, b) => {
            check_e(e)?;
            check_vars(a, scope)?;
            check_vars(b, scope)
        }
        StmtKind::Loop(l) => {
            check_vars(&l.incr, scope)?;
            check_vars(&l.body, scope)
        }
        StmtKind::Call(c) => {
            if let Some(d) = &c.dest {
                check(d)?;
            }
            c.args.iter().try_for_each(check_e)
        }
    }
}

fn calls_of(s: &Stmt, out: &mut Vec<(Span, CallStmt)>) {
    match &s.kind {
        StmtKind::Call(c) => out.push((s.span, c.clone())),
        StmtKind::Seq(a, b) | StmtKind::If(_, a, b) => {
            calls_of(a, out);
            calls_of(b, out);
        }
        StmtKind::Loop(l) => {
            calls_of(&l.incr, out);
            calls_of(&l.body, out);
        }
        _ => {}
    }
}

fn validate(p: &SourceProgram) -> PResult<()> {
    let mut names = BTreeSet::new();
    for f in &p.functions {
        if !names.insert(f.name.clone()) {
            return Err(ParseError::new(format!("duplicate function `{}`", f.name), f.span));
        }
    }
    for f in &p.functions {
        let mut scope = BTreeSet::new();
        for id in f.scope() {
            if id.as_str().starts_with("__") || id.as_str() == RET_VAL {
                return Err(ParseError::new(format!("reserved identifier `{id}`"), f.span));
            }
            if !scope.insert(id.clone()) {
                return Err(ParseError::new(format!("`{id}` declared twice in `{}`", f.name), f.span));
            }
        }
        check_vars(&f.body, &scope)?;
        let decls = &f.spec.logicals;
        let mut templates = vec![(f.span, f.spec.pre.clone())];
        for ek in ExitKind::ALL {
            templates.push((f.span, f.spec.post.get(ek).clone()));
        }
        templates_of(&f.body, &mut templates);
        for (span, t) in &templates {
            if let Some(v) = t.lvars().into_iter().find(|v| !decls.contains(v)) {
                return Err(ParseError::new(format!("undeclared logical variable x.{v}"), *span));
            }
        }
        let mut calls = Vec::new();
        calls_of(&f.body, &mut calls);
        for (span, c) in calls {
            let Some(callee) = p.function(c.fname.as_str()) else {
                return Err(ParseError::new(format!("call to unspecified function `{}`", c.fname), span));
            };
            if callee.params.len() != c.args.len() {
                return Err(ParseError::new(
                    format!("`{}` takes {} arguments, {} given", c.fname, callee.params.len(), c.args.len()),
                    span,
                ));
            }
            for (k, t) in &c.with {
                if !callee.spec.logicals.contains(k) {
                    return Err(ParseError::new(format!("`{}` has no logical variable x.{k}", c.fname), span));
                }
                let mut vs = Vec::new();
                t.lvars(&mut vs);
                if let Some(v) = vs.into_iter().find(|v| !decls.contains(v)) {
                    return Err(ParseError::new(format!("undeclared logical variable x.{v}"), span));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) const CLASSIFY: &str = r#"
//@ heap 2 region hi @ 0 region lo @ 1;
void f(int v, bool b, int* highptr, int* lowptr)
//@ logical x.v in {0..3}, x.b in {0,1}, x.h in {&hi}, x.l in {&lo};
//@ pre PROP() LOCAL(v = x.v, b = x.b, highptr = x.h, lowptr = x.l) SEP(x.h |-> _, x.l |-> _),
//@     [b: Lo, highptr: Hi, lowptr: Lo, v: (x.b ? Hi : Lo)], [x.l: Lo, x.h: Hi];
//@ post (nrm: PROP() LOCAL() SEP(x.h |-> (x.b ? x.v : _), x.l |-> (x.b ? _ : x.v)), [], [x.l: Lo, x.h: Hi]);
{
  if (b) {
    *highptr = v;
  } else {
    *lowptr = v;
  }
}
"#;

#[cfg(test)]
mod tests {
    use super::*;


    #[test]
    fn classify_store_example() {
        let p = parse(CLASSIFY).unwrap();
        assert_eq!(p.functions.len(), 1);
        let f = &p.functions[0];
        assert_eq!(f.params.len(), 4);
        let StmtKind::If(Expr::Var(b), c1, c2) = &f.body.kind else { panic!("{:?}", f.body) };
        assert_eq!(b.as_str(), "b");
        assert!(matches!(c1.kind, StmtKind::Store(..)));
        assert!(matches!(c2.kind, StmtKind::Store(..)));
        assert_eq!(f.spec.logicals.env_count(), 8);
        assert!(f.spec.post.brk.is_bottom());
    }

    #[test]
    fn empty_body() {
        let p = parse("void g(){}").unwrap();
        assert_eq!(p.functions[0].body, Stmt::skip());
    }

    #[test]
    fn loop_without_invariant() {
        let e = parse("void h(){ while (1) {} }").unwrap_err();
        assert!(e.message.contains("loop without invariant"), "{e}");
        assert_eq!((e.span.line, e.span.col), (1, 11));
    }

    #[test]
    fn rejects_duplicates_and_unknown_calls() {
        assert!(parse("void a(){} void a(){}").unwrap_err().message.contains("duplicate function"));
        assert!(parse("void a(){ g(); }").unwrap_err().message.contains("unspecified function"));
        assert!(parse("void a(){ y = 1; }").unwrap_err().message.contains("undeclared variable"));
        assert!(parse("void a()\n//@ pre PROP(x.q == 1);\n{}").unwrap_err().message.contains("x.q"));
    }

    #[test]
    fn nested_deref_rejected() {
        assert!(parse("void a(int* p){ int y; y = *p + 1; }").is_err());
        assert!(parse("void a(int* p){ int y; y = 1 + *p; }").is_err());
    }

    #[test]
    fn while_desugars() {
        let p = parse("void a(int i)\n{ //@ invariant true;\n while (i < 3) { i = i + 1; } }").unwrap();
        let StmtKind::Loop(l) = &p.functions[0].body.kind else { panic!() };
        assert_eq!(*l.incr, Stmt::skip());
        let StmtKind::If(_, _, e) = &l.body.kind else { panic!() };
        assert_eq!(**e, Stmt::brk());
        assert_eq!(l.invariant, l.incr_invariant);
    }

    #[test]
    fn local_initializers_become_statements() {
        let p = parse("int a(){ int y = 2; return y; }").unwrap();
        let f = &p.functions[0];
        assert_eq!(f.local_names(), vec![Ident::new("y")]);
        assert_eq!(f.body, Stmt::seq(Stmt::set("y", Expr::int(2)), Stmt::ret(Some(Expr::var("y")))));
    }

    #[test]
    fn precedence() {
        let p = parse("void a(int i, int j){ i = i + j * 2 < 7 && j == 1; }").unwrap();
        let StmtKind::Set(_, e) = &p.functions[0].body.kind else { panic!() };
        let expect = Expr::bin(
            BinOp::And,
            Expr::bin(
                BinOp::Lt,
                Expr::bin(BinOp::Add, Expr::var("i"), Expr::bin(BinOp::Mul, Expr::var("j"), Expr::int(2))),
                Expr::int(7),
            ),
            Expr::bin(BinOp::Eq, Expr::var("j"), Expr::int(1)),
        );
        assert_eq!(e, &expect);
    }
}
