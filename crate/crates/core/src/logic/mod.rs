//! Second-order logic over finite structures: syntax, a textual DSL and a model checker.

pub(crate) mod ast;
pub(crate) mod eval;
pub(crate) mod native;
pub(crate) mod parse;
pub(crate) mod sexpr;

pub use ast::{Formula, NativeAtom, NativeKind, SetExpr, SoReplacement, Term};
pub use eval::{evaluate, CompiledFormula, Compiler, Env, Model};
pub use native::{
    check_native_agreement, component_count, component_size_census, covered_component_count, expand_natives, native_definition,
    native_predicate, rank, NativeAgreement, SetDomain,
};
pub use parse::{parse, FormulaParser};
pub use sexpr::{read_all, Pos, SExp};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::structures::{ElemId, IncidenceStructure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("parse error at {pos}: {message}")]
    Parse { pos: Pos, message: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("arity mismatch for `{symbol}`: expected {expected}, found {found}")]
    Arity { symbol: String, expected: usize, found: usize },
    #[error("unassigned free variable `{0}`")]
    Unassigned(String),
    #[error("element `{0}` is not in the universe")]
    NotInUniverse(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// A relation over the universe, used as the value of a relation variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Relation {
    pub arity: usize,
    pub tuples: BTreeSet<Vec<ElemId>>,
}

impl Relation {
    pub fn new(arity: usize) -> Self {
        Relation { arity, tuples: BTreeSet::new() }
    }

    /// A unary relation holding the given elements.
    pub fn unary(elems: impl IntoIterator<Item = ElemId>) -> Self {
        Relation { arity: 1, tuples: elems.into_iter().map(|x| vec![x]).collect() }
    }

    pub fn contains(&self, t: &[ElemId]) -> bool {
        self.tuples.contains(t)
    }
}

/// Values of individual variables (and context constants) and relation variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    pub fo: BTreeMap<String, ElemId>,
    pub so: BTreeMap<String, Relation>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fo(mut self, name: &str, x: ElemId) -> Self {
        self.fo.insert(name.to_string(), x);
        self
    }

    pub fn with_so(mut self, name: &str, r: Relation) -> Self {
        self.so.insert(name.to_string(), r);
        self
    }

    /// Assigns elements by name, looked up in `s`.
    pub fn with_fo_named(self, s: &IncidenceStructure, name: &str, elem: &str) -> Result<Self, LogicError> {
        let x = s.lookup(elem).ok_or_else(|| LogicError::NotInUniverse(elem.to_string()))?;
        Ok(self.with_fo(name, x))
    }

    /// Assigns a unary relation from element names.
    pub fn with_set_named(self, s: &IncidenceStructure, name: &str, elems: &[&str]) -> Result<Self, LogicError> {
        let ids = elems
            .iter()
            .map(|e| s.lookup(e).ok_or_else(|| LogicError::NotInUniverse(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.with_so(name, Relation::unary(ids)))
    }
}
