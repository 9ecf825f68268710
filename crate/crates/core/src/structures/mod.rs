//! Multigraphs, incidence structures over them, and the concrete graph surgeries.

mod graph;
mod incidence;
mod surgery;

pub use graph::{builtin_graph, builtin_names, Edge, GraphFormatError, MultiGraph};
pub use incidence::{
    to_incidence, ElemId, ElementKind, ElementTable, IncidenceStructure, OrderedContextStructure,
    RelSymbol, StructureKey, VocabTag, Vocabulary, ORDER_SYMBOL,
};
pub use surgery::{
    contract_directed_edge, contract_edge, delete_edge, delete_vertex, extract_edge,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
    #[error("element `{0}` is not in the universe")]
    NotInUniverse(String),
    #[error("element `{name}` is a {found}, expected a {expected}")]
    Kind { name: String, expected: &'static str, found: &'static str },
    #[error("cannot contract loop `{0}`")]
    LoopContraction(String),
    #[error("order is not a permutation of the universe: {0}")]
    BadOrder(String),
    #[error("unknown relation symbol `{0}`")]
    UnknownRelation(String),
    #[error("relation `{name}` has arity {expected}, got a tuple of length {found}")]
    Arity { name: String, expected: usize, found: usize },
}
