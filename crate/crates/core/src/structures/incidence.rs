use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::{MultiGraph, StructureError};

/// Index of an element in an [`ElementTable`]. Only meaningful together with its table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElemId(pub u32);

impl ElemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Vertex,
    Edge,
    Plain,
}

impl ElementKind {
    pub fn label(self) -> &'static str {
        match self {
            ElementKind::Vertex => "vertex",
            ElementKind::Edge => "edge",
            ElementKind::Plain => "element",
        }
    }
}

/// Names and kinds of every element that can ever appear in structures derived from one source.
/// Derived structures share the table, so ids stay stable under deletion.
#[derive(Debug, Clone, Default)]
pub struct ElementTable {
    names: Vec<String>,
    kinds: Vec<ElementKind>,
    index: HashMap<String, ElemId>,
}

impl ElementTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, kind: ElementKind) -> Result<ElemId, StructureError> {
        if self.index.contains_key(name) {
            return Err(StructureError::VocabularyMismatch(format!("duplicate element `{name}`")));
        }
        let id = ElemId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.kinds.push(kind);
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: ElemId) -> &str {
        &self.names[id.index()]
    }

    pub fn kind(&self, id: ElemId) -> ElementKind {
        self.kinds[id.index()]
    }

    pub fn lookup(&self, name: &str) -> Option<ElemId> {
        self.index.get(name).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VocabTag {
    /// Universe V with a symmetric edge relation `E`.
    Graph1,
    /// Universe V ∪ E with incidence `N ⊆ V × E`.
    Graph2,
    /// Universe V ∪ E with `NO ⊆ V × E` (tails) and `NI ⊆ E × V` (heads).
    Directed2,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelSymbol {
    pub name: String,
    pub arity: usize,
}

/// Relation and constant symbols. The order symbol `O` is implicit in every vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vocabulary {
    pub name: String,
    pub tag: VocabTag,
    pub relations: Vec<RelSymbol>,
    pub constants: Vec<String>,
}

pub const ORDER_SYMBOL: &str = "O";

impl Vocabulary {
    pub fn new(name: &str, tag: VocabTag, relations: &[(&str, usize)]) -> Result<Self, StructureError> {
        let mut seen = BTreeSet::new();
        for &(r, a) in relations {
            if a == 0 {
                return Err(StructureError::VocabularyMismatch(format!("relation `{r}` has arity 0")));
            }
            if r == ORDER_SYMBOL || !seen.insert(r) {
                return Err(StructureError::VocabularyMismatch(format!("relation name `{r}` is reserved or repeated")));
            }
        }
        Ok(Vocabulary {
            name: name.to_string(),
            tag,
            relations: relations.iter().map(|&(n, a)| RelSymbol { name: n.to_string(), arity: a }).collect(),
            constants: Vec::new(),
        })
    }

    pub fn graph1() -> Self {
        Self::new("graph1", VocabTag::Graph1, &[("E", 2)]).expect("valid")
    }

    pub fn graph2() -> Self {
        Self::new("graph2", VocabTag::Graph2, &[("N", 2)]).expect("valid")
    }

    pub fn directed2() -> Self {
        Self::new("directed2", VocabTag::Directed2, &[("NO", 2), ("NI", 2)]).expect("valid")
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "graph1" => Some(Self::graph1()),
            "graph2" => Some(Self::graph2()),
            "directed2" => Some(Self::directed2()),
            _ => None,
        }
    }

    pub fn with_constants<S: AsRef<str>>(mut self, constants: &[S]) -> Self {
        for c in constants {
            if !self.constants.iter().any(|k| k == c.as_ref()) {
                self.constants.push(c.as_ref().to_string());
            }
        }
        self
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.iter().find(|r| r.name == name).map(|r| r.arity)
    }

    /// Same relation symbols (constants are ignored).
    pub fn same_relations(&self, other: &Vocabulary) -> bool {
        self.relations == other.relations
    }
}

/// Identity of a structure for memoisation: ids in universe order plus sorted relation tuples.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructureKey {
    universe: Vec<ElemId>,
    relations: Vec<Vec<Vec<ElemId>>>,
}

/// A finite structure whose universe is kept in order `O`.
#[derive(Debug, Clone)]
pub struct IncidenceStructure {
    vocab: Arc<Vocabulary>,
    table: Arc<ElementTable>,
    universe: Vec<ElemId>,
    relations: Vec<BTreeSet<Vec<ElemId>>>,
}

/// Builds the incidence structure of `graph`; the universe lists vertices then edges.
pub fn to_incidence(graph: &MultiGraph, tag: VocabTag) -> Result<IncidenceStructure, StructureError> {
    IncidenceStructure::from_graph(graph, tag)
}

impl IncidenceStructure {
    pub fn from_graph(graph: &MultiGraph, tag: VocabTag) -> Result<Self, StructureError> {
        let mismatch = |m: &str| Err(StructureError::VocabularyMismatch(m.to_string()));
        let vocab = match tag {
            VocabTag::Graph1 => {
                if graph.is_directed() || !graph.is_simple() {
                    return mismatch("graph1 needs a simple undirected graph");
                }
                Vocabulary::graph1()
            }
            VocabTag::Graph2 => {
                if graph.is_directed() {
                    return mismatch("graph2 needs an undirected graph");
                }
                Vocabulary::graph2()
            }
            VocabTag::Directed2 => {
                if !graph.is_directed() {
                    return mismatch("directed2 needs a directed graph");
                }
                Vocabulary::directed2()
            }
            VocabTag::Custom => return mismatch("graphs have no custom vocabulary"),
        };
        let mut table = ElementTable::new();
        let mut universe = Vec::new();
        for v in graph.vertices() {
            universe.push(table.push(v, ElementKind::Vertex)?);
        }
        let ends = graph.endpoint_indices();
        let mut relations = vec![BTreeSet::new(); vocab.relations.len()];
        match tag {
            VocabTag::Graph1 => {
                for &(a, b) in &ends {
                    relations[0].insert(vec![universe[a], universe[b]]);
                    relations[0].insert(vec![universe[b], universe[a]]);
                }
            }
            _ => {
                let vs = universe.clone();
                for (e, &(a, b)) in graph.edges().iter().zip(&ends) {
                    let id = table.push(&e.id, ElementKind::Edge)?;
                    universe.push(id);
                    if tag == VocabTag::Graph2 {
                        relations[0].insert(vec![vs[a], id]);
                        relations[0].insert(vec![vs[b], id]);
                    } else {
                        relations[0].insert(vec![vs[a], id]);
                        relations[1].insert(vec![id, vs[b]]);
                    }
                }
            }
        }
        Ok(IncidenceStructure { vocab: Arc::new(vocab), table: Arc::new(table), universe, relations })
    }

    /// Builds a structure from named elements and named relation tuples.
    pub fn from_named(
        vocab: Vocabulary,
        elements: &[(&str, ElementKind)],
        relations: &[(&str, Vec<Vec<&str>>)],
    ) -> Result<Self, StructureError> {
        let mut table = ElementTable::new();
        let mut universe = Vec::new();
        for &(n, k) in elements {
            universe.push(table.push(n, k)?);
        }
        let mut rels = vec![BTreeSet::new(); vocab.relations.len()];
        for (name, tuples) in relations {
            let idx = vocab.relation_index(name).ok_or_else(|| StructureError::UnknownRelation(name.to_string()))?;
            for t in tuples {
                let ids = t
                    .iter()
                    .map(|n| table.lookup(n).ok_or_else(|| StructureError::NotInUniverse(n.to_string())))
                    .collect::<Result<Vec<_>, _>>()?;
                rels[idx].insert(ids);
            }
        }
        Self::new(Arc::new(vocab), Arc::new(table), universe, rels)
    }

    /// Checks arities and that every tuple lies inside the universe.
    pub fn new(
        vocab: Arc<Vocabulary>,
        table: Arc<ElementTable>,
        universe: Vec<ElemId>,
        relations: Vec<BTreeSet<Vec<ElemId>>>,
    ) -> Result<Self, StructureError> {
        if relations.len() != vocab.relations.len() {
            return Err(StructureError::VocabularyMismatch("relation count differs from vocabulary".into()));
        }
        let members: BTreeSet<ElemId> = universe.iter().copied().collect();
        if members.len() != universe.len() {
            return Err(StructureError::BadOrder("repeated element".into()));
        }
        for (sym, tuples) in vocab.relations.iter().zip(&relations) {
            for t in tuples {
                if t.len() != sym.arity {
                    return Err(StructureError::Arity { name: sym.name.clone(), expected: sym.arity, found: t.len() });
                }
                if let Some(x) = t.iter().find(|x| !members.contains(x)) {
                    return Err(StructureError::NotInUniverse(table.name(*x).to_string()));
                }
            }
        }
        Ok(IncidenceStructure { vocab, table, universe, relations })
    }

    /// A structure sharing this one's element table. Tuples outside `universe` are dropped.
    pub fn derive(
        &self,
        vocab: Arc<Vocabulary>,
        universe: Vec<ElemId>,
        relations: Vec<BTreeSet<Vec<ElemId>>>,
    ) -> Self {
        let mut member = vec![false; self.table.len()];
        for x in &universe {
            member[x.index()] = true;
        }
        let relations = relations
            .into_iter()
            .map(|ts| ts.into_iter().filter(|t| t.iter().all(|x| member[x.index()])).collect())
            .collect();
        IncidenceStructure { vocab, table: self.table.clone(), universe, relations }
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn table(&self) -> &Arc<ElementTable> {
        &self.table
    }

    /// Elements in order `O`.
    pub fn universe(&self) -> &[ElemId] {
        &self.universe
    }

    pub fn relations(&self) -> &[BTreeSet<Vec<ElemId>>] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&BTreeSet<Vec<ElemId>>> {
        self.vocab.relation_index(name).map(|i| &self.relations[i])
    }

    pub fn len(&self) -> usize {
        self.universe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.universe.is_empty()
    }

    pub fn contains(&self, id: ElemId) -> bool {
        self.universe.contains(&id)
    }

    pub fn position(&self, id: ElemId) -> Option<usize> {
        self.universe.iter().position(|&x| x == id)
    }

    pub fn name(&self, id: ElemId) -> &str {
        self.table.name(id)
    }

    pub fn kind(&self, id: ElemId) -> ElementKind {
        self.table.kind(id)
    }

    /// Looks up an element of the current universe by name.
    pub fn lookup(&self, name: &str) -> Option<ElemId> {
        self.table.lookup(name).filter(|id| self.contains(*id))
    }

    pub fn names(&self) -> Vec<&str> {
        self.universe.iter().map(|&x| self.name(x)).collect()
    }

    pub fn key(&self) -> StructureKey {
        StructureKey {
            universe: self.universe.clone(),
            relations: self.relations.iter().map(|r| r.iter().cloned().collect()).collect(),
        }
    }

    /// Keeps the elements satisfying `keep`, in their current order.
    pub fn restrict(&self, keep: impl Fn(ElemId) -> bool) -> Self {
        let universe = self.universe.iter().copied().filter(|&x| keep(x)).collect();
        self.derive(self.vocab.clone(), universe, self.relations.clone())
    }

    /// Same structure with the universe listed in `order`.
    pub fn reordered(&self, order: &[ElemId]) -> Result<Self, StructureError> {
        let mut a: Vec<ElemId> = order.to_vec();
        let mut b: Vec<ElemId> = self.universe.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(StructureError::BadOrder(format!(
                "{} elements given for a universe of {}",
                order.len(),
                self.universe.len()
            )));
        }
        let mut s = self.clone();
        s.universe = order.to_vec();
        Ok(s)
    }

    pub fn reordered_by_names<S: AsRef<str>>(&self, order: &[S]) -> Result<Self, StructureError> {
        let ids = order
            .iter()
            .map(|n| self.lookup(n.as_ref()).ok_or_else(|| StructureError::NotInUniverse(n.as_ref().to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        self.reordered(&ids)
    }

    /// The current universe stably partitioned into edges first, then everything else.
    pub fn edges_first_order(&self) -> Vec<ElemId> {
        let (mut e, v): (Vec<ElemId>, Vec<ElemId>) =
            self.universe.iter().partition(|&&x| self.kind(x) == ElementKind::Edge);
        e.extend(v);
        e
    }

    /// Readable listing, e.g. `[e u v] N={(u,e),(v,e)}`.
    pub fn describe(&self) -> String {
        let mut out = format!("[{}]", self.names().join(" "));
        for (sym, tuples) in self.vocab.relations.iter().zip(&self.relations) {
            let items: Vec<String> = tuples
                .iter()
                .map(|t| format!("({})", t.iter().map(|&x| self.name(x)).collect::<Vec<_>>().join(",")))
                .collect();
            let _ = write!(out, " {}={{{}}}", sym.name, items.join(","));
        }
        out
    }

    fn named_relations(&self) -> Vec<BTreeSet<Vec<&str>>> {
        self.relations
            .iter()
            .map(|r| r.iter().map(|t| t.iter().map(|&x| self.name(x)).collect()).collect())
            .collect()
    }
}

impl PartialEq for IncidenceStructure {
    fn eq(&self, other: &Self) -> bool {
        if !self.vocab.same_relations(&other.vocab) {
            return false;
        }
        if Arc::ptr_eq(&self.table, &other.table) {
            return self.universe == other.universe && self.relations == other.relations;
        }
        self.names() == other.names()
            && self.universe.iter().zip(&other.universe).all(|(&a, &b)| self.kind(a) == other.kind(b))
            && self.named_relations() == other.named_relations()
    }
}

impl Eq for IncidenceStructure {}

impl Hash for IncidenceStructure {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.names().hash(state);
        self.named_relations().hash(state);
    }
}

/// A structure together with its context arity; the order is the universe order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedContextStructure {
    structure: IncidenceStructure,
    context_arity: usize,
}

impl OrderedContextStructure {
    pub fn new(structure: &IncidenceStructure, order: &[ElemId], context_arity: usize) -> Result<Self, StructureError> {
        if context_arity == 0 {
            return Err(StructureError::VocabularyMismatch("context arity must be at least 1".into()));
        }
        Ok(OrderedContextStructure { structure: structure.reordered(order)?, context_arity })
    }

    pub fn structure(&self) -> &IncidenceStructure {
        &self.structure
    }

    pub fn context_arity(&self) -> usize {
        self.context_arity
    }

    /// The lexicographically least m-tuple, i.e. the first element repeated.
    pub fn context(&self) -> Option<Vec<ElemId>> {
        self.structure.universe().first().map(|&x| vec![x; self.context_arity])
    }

    /// Restriction keeps relative order.
    pub fn restrict(&self, keep: impl Fn(ElemId) -> bool) -> Self {
        OrderedContextStructure { structure: self.structure.restrict(keep), context_arity: self.context_arity }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::builtin_graph;

    fn ids(s: &IncidenceStructure, names: &[&str]) -> Vec<ElemId> {
        names.iter().map(|n| s.lookup(n).unwrap()).collect()
    }

    #[test]
    fn k2_incidence() {
        let g = builtin_graph("k2", false).unwrap();
        let s = IncidenceStructure::from_graph(&g, VocabTag::Graph2).unwrap();
        assert_eq!(s.names(), vec!["v1", "v2", "e1"]);
        assert_eq!(s.describe(), "[v1 v2 e1] N={(v1,e1),(v2,e1)}");
    }

    #[test]
    fn loop_has_one_pair() {
        let g = builtin_graph("loop1", false).unwrap();
        let s = IncidenceStructure::from_graph(&g, VocabTag::Graph2).unwrap();
        assert_eq!(s.relation("N").unwrap().len(), 1);
        let d = IncidenceStructure::from_graph(&builtin_graph("loop1", true).unwrap(), VocabTag::Directed2).unwrap();
        assert_eq!(d.describe(), "[v1 e1] NO={(v1,e1)} NI={(e1,v1)}");
    }

    #[test]
    fn empty_graph() {
        let s = IncidenceStructure::from_graph(&MultiGraph::new(false), VocabTag::Graph2).unwrap();
        assert!(s.is_empty());
        assert!(s.relation("N").unwrap().is_empty());
    }

    #[test]
    fn graph1_needs_simple_graph() {
        let k3 = builtin_graph("k3", false).unwrap();
        let s = IncidenceStructure::from_graph(&k3, VocabTag::Graph1).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.relation("E").unwrap().len(), 6);
        for bad in ["loop1", "k2-double"] {
            let g = builtin_graph(bad, false).unwrap();
            assert!(matches!(
                IncidenceStructure::from_graph(&g, VocabTag::Graph1),
                Err(StructureError::VocabularyMismatch(_))
            ));
        }
        assert!(IncidenceStructure::from_graph(&builtin_graph("k2", true).unwrap(), VocabTag::Graph2).is_err());
    }

    #[test]
    fn reorder_and_equality() {
        let g = builtin_graph("p3", false).unwrap();
        let s = IncidenceStructure::from_graph(&g, VocabTag::Graph2).unwrap();
        let order = ids(&s, &["e1", "e2", "v1", "v2", "v3"]);
        let r = s.reordered(&order).unwrap();
        assert_eq!(r.edges_first_order(), order);
        assert_eq!(s.edges_first_order(), order);
        assert_ne!(r, s);
        assert!(s.reordered(&order[..4]).is_err());
        let again = IncidenceStructure::from_graph(&g, VocabTag::Graph2).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn context_is_first_element() {
        let s = IncidenceStructure::from_graph(&builtin_graph("k2", false).unwrap(), VocabTag::Graph2).unwrap();
        let order = ids(&s, &["e1", "v1", "v2"]);
        let oc = OrderedContextStructure::new(&s, &order, 2).unwrap();
        assert_eq!(oc.context(), Some(vec![order[0], order[0]]));
        let rest = oc.restrict(|x| x != order[0]);
        assert_eq!(rest.structure().names(), vec!["v1", "v2"]);
        assert_eq!(rest.structure().relation("N").unwrap().len(), 0);
    }
}
