//! Assertions, classifications, lattice operations, entailment and
//! low-equivalence.

pub mod assertion;
pub mod entail;
pub mod label;
pub mod lowequiv;
pub mod term;

pub use assertion::{
    clsf_expr, clsf_exprs, clsf_lvalue, nret, satisfies, Assertion, GroundHeapClsf, GroundStackClsf, HeapClsf,
    IfcAssertTemplate, LabelExpr, PointsTo, PostconditionTemplate, StackClsf,
};
pub use entail::{entails, entails_state, skolemize, witnesses, Entailment, Fresh, SymState, SymVal, Universe};
pub use label::{glb, lle, lub, LabelMap};
pub use lowequiv::{low_equiv, low_equiv_simple};
pub use term::{eval_term, holds, LogicalDecls, LogicalEnv, LogicalVarDecl, Pattern, Term};
