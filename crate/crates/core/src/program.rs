//! Parsed programs: functions, their specifications and the heap layout.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::logic::{IfcAssertTemplate, LogicalDecls, PostconditionTemplate};
use crate::semantics::{FnCode, Machine};
use crate::types::{HeapLoc, Ident, Span, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CType {
    Void,
    Int,
    Bool,
    IntPtr,
}

impl fmt::Display for CType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CType::Void => "void",
            CType::Int => "int",
            CType::Bool => "bool",
            CType::IntPtr => "int*",
        })
    }
}

/// `(name, params, logicals, pre, post)`. The post's `ret` entry may mention
/// the pseudo-variable `ret_val`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncSpec {
    pub name: Ident,
    pub params: Vec<Ident>,
    pub logicals: LogicalDecls,
    pub pre: IfcAssertTemplate,
    pub post: PostconditionTemplate,
}

pub const RET_VAL: &str = "ret_val";

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: Ident,
    pub ret_ty: CType,
    pub params: Vec<(CType, Ident)>,
    pub locals: Vec<(CType, Ident)>,
    pub body: Stmt,
    pub spec: FuncSpec,
    pub span: Span,
}

impl FunctionDef {
    pub fn param_names(&self) -> Vec<Ident> {
        self.params.iter().map(|(_, p)| p.clone()).collect()
    }

    pub fn local_names(&self) -> Vec<Ident> {
        self.locals.iter().map(|(_, l)| l.clone()).collect()
    }

    /// Parameters then locals.
    pub fn scope(&self) -> Vec<Ident> {
        let mut v = self.param_names();
        v.extend(self.local_names());
        v
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeapDecl {
    pub size: usize,
    pub regions: Vec<(Ident, HeapLoc)>,
}

impl HeapDecl {
    pub fn region(&self, name: &str) -> Option<HeapLoc> {
        self.regions.iter().find(|(n, _)| n.as_str() == name).map(|(_, l)| *l)
    }

    pub fn region_name(&self, loc: HeapLoc) -> Option<&Ident> {
        self.regions.iter().find(|(_, l)| *l == loc).map(|(n, _)| n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceProgram {
    pub heap: HeapDecl,
    pub functions: Vec<FunctionDef>,
}

impl SourceProgram {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name.as_str() == name)
    }

    pub fn specs(&self) -> BTreeMap<Ident, FuncSpec> {
        self.functions.iter().map(|f| (f.name.clone(), f.spec.clone())).collect()
    }

    pub fn machine(&self) -> Machine {
        Machine::new(
            self.functions
                .iter()
                .map(|f| {
                    let code = FnCode { params: f.param_names(), locals: f.local_names(), body: Arc::new(f.body.clone()) };
                    (f.name.clone(), code)
                })
                .collect(),
        )
    }
}
