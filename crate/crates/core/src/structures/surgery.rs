use std::collections::BTreeSet;

use super::{ElemId, ElementKind, IncidenceStructure, StructureError, VocabTag};

fn require_kind(s: &IncidenceStructure, x: ElemId, kind: ElementKind) -> Result<(), StructureError> {
    if !s.contains(x) {
        return Err(StructureError::NotInUniverse(s.name(x).to_string()));
    }
    if s.kind(x) != kind {
        return Err(StructureError::Kind {
            name: s.name(x).to_string(),
            expected: kind.label(),
            found: s.kind(x).label(),
        });
    }
    Ok(())
}

fn require_tag(s: &IncidenceStructure, tag: VocabTag) -> Result<(), StructureError> {
    if s.vocab().tag != tag {
        return Err(StructureError::VocabularyMismatch(format!("expected a {tag:?} structure")));
    }
    Ok(())
}

/// Endpoints of `e` in universe order.
fn endpoints(s: &IncidenceStructure, e: ElemId) -> Vec<ElemId> {
    let n = &s.relations()[0];
    s.universe().iter().copied().filter(|&v| n.contains(&vec![v, e])).collect()
}

/// G − e: drops `e` and every tuple mentioning it.
pub fn delete_edge(s: &IncidenceStructure, e: ElemId) -> Result<IncidenceStructure, StructureError> {
    require_kind(s, e, ElementKind::Edge)?;
    Ok(s.restrict(|y| y != e))
}

/// G − v. The vertex need not be isolated; incident tuples disappear with it.
pub fn delete_vertex(s: &IncidenceStructure, v: ElemId) -> Result<IncidenceStructure, StructureError> {
    require_kind(s, v, ElementKind::Vertex)?;
    Ok(s.restrict(|y| y != v))
}

/// G/e for a non-loop edge: removes `e` and its earlier endpoint `u`; the later endpoint inherits
/// the incidences of `u`.
pub fn contract_edge(s: &IncidenceStructure, e: ElemId) -> Result<IncidenceStructure, StructureError> {
    require_tag(s, VocabTag::Graph2)?;
    require_kind(s, e, ElementKind::Edge)?;
    let ends = endpoints(s, e);
    if ends.len() != 2 {
        return Err(StructureError::LoopContraction(s.name(e).to_string()));
    }
    let (u, v) = (ends[0], ends[1]);
    let universe: Vec<ElemId> = s.universe().iter().copied().filter(|&y| y != e && y != u).collect();
    let mut n = BTreeSet::new();
    for t in &s.relations()[0] {
        if t[0] == u {
            n.insert(vec![v, t[1]]);
        } else {
            n.insert(t.clone());
        }
    }
    Ok(s.derive(s.vocab().clone(), universe, vec![n]))
}

/// G†e: removes `e`, its endpoints and every edge sharing an endpoint with it.
pub fn extract_edge(s: &IncidenceStructure, e: ElemId) -> Result<IncidenceStructure, StructureError> {
    require_tag(s, VocabTag::Graph2)?;
    require_kind(s, e, ElementKind::Edge)?;
    let ends = endpoints(s, e);
    let n = &s.relations()[0];
    let gone = |y: ElemId| y == e || ends.contains(&y) || ends.iter().any(|&u| n.contains(&vec![u, y]));
    Ok(s.restrict(|y| !gone(y)))
}

/// D/e for a directed edge. A non-loop ⟨u,v⟩ removes `u`, the out-edges of `u` and the in-edges
/// of `v`; in-edges of `u` are redirected to `v`. A loop is removed with its vertex and every edge
/// touching that vertex.
pub fn contract_directed_edge(s: &IncidenceStructure, e: ElemId) -> Result<IncidenceStructure, StructureError> {
    require_tag(s, VocabTag::Directed2)?;
    require_kind(s, e, ElementKind::Edge)?;
    let (no, ni) = (&s.relations()[0], &s.relations()[1]);
    let tail = no.iter().find(|t| t[1] == e).map(|t| t[0]);
    let head = ni.iter().find(|t| t[0] == e).map(|t| t[1]);
    let (Some(u), Some(v)) = (tail, head) else {
        return Err(StructureError::Kind { name: s.name(e).to_string(), expected: "edge", found: "dangling edge" });
    };
    if u == v {
        let gone = |y: ElemId| y == u || ni.contains(&vec![y, u]) || no.contains(&vec![u, y]);
        return Ok(s.restrict(|y| !gone(y)));
    }
    let gone = |y: ElemId| y == u || no.contains(&vec![u, y]) || ni.contains(&vec![y, v]);
    let universe: Vec<ElemId> = s.universe().iter().copied().filter(|&y| !gone(y)).collect();
    let mut new_ni = ni.clone();
    for t in ni {
        if t[1] == u {
            new_ni.insert(vec![t[0], v]);
        }
    }
    Ok(s.derive(s.vocab().clone(), universe, vec![no.clone(), new_ni]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{builtin_graph, MultiGraph};

    fn graph2(name: &str) -> IncidenceStructure {
        IncidenceStructure::from_graph(&builtin_graph(name, false).unwrap(), VocabTag::Graph2).unwrap()
    }

    fn directed(name: &str) -> IncidenceStructure {
        IncidenceStructure::from_graph(&builtin_graph(name, true).unwrap(), VocabTag::Directed2).unwrap()
    }

    fn id(s: &IncidenceStructure, n: &str) -> ElemId {
        s.lookup(n).unwrap()
    }

    #[test]
    fn deletions() {
        let k2 = graph2("k2");
        let e2 = graph2("e2");
        assert_eq!(delete_edge(&k2, id(&k2, "e1")).unwrap(), e2);
        let c3 = graph2("c3");
        let p = delete_edge(&c3, id(&c3, "e3")).unwrap();
        assert_eq!(p, graph2("p3"));
        let l = graph2("loop1");
        assert_eq!(delete_edge(&l, id(&l, "e1")).unwrap(), graph2("e1"));
        let e1 = graph2("e1");
        assert!(delete_vertex(&e1, id(&e1, "v1")).unwrap().is_empty());
        assert!(matches!(delete_edge(&k2, id(&k2, "v1")), Err(StructureError::Kind { .. })));
        assert!(matches!(delete_vertex(&k2, id(&k2, "e1")), Err(StructureError::Kind { .. })));
    }

    #[test]
    fn contraction() {
        let k2 = graph2("k2");
        let c = contract_edge(&k2, id(&k2, "e1")).unwrap();
        assert_eq!(c.describe(), "[v2] N={}");

        let c3 = graph2("c3");
        let c = contract_edge(&c3, id(&c3, "e1")).unwrap();
        // e2 = v2v3 stays, e3 = v3v1 is rewired to v3v2: two parallel edges.
        assert_eq!(c.describe(), "[v2 v3 e2 e3] N={(v2,e2),(v2,e3),(v3,e2),(v3,e3)}");

        let p3 = graph2("p3");
        let c = contract_edge(&p3, id(&p3, "e1")).unwrap();
        assert_eq!(c.describe(), "[v2 v3 e2] N={(v2,e2),(v3,e2)}");

        let d = graph2("k2-double");
        let c = contract_edge(&d, id(&d, "e1")).unwrap();
        assert_eq!(c.describe(), "[v2 e2] N={(v2,e2)}");

        let l = graph2("loop1");
        assert!(matches!(contract_edge(&l, id(&l, "e1")), Err(StructureError::LoopContraction(_))));
    }

    #[test]
    fn contraction_keeps_later_endpoint() {
        let k2 = graph2("k2");
        let order: Vec<ElemId> = ["e1", "v2", "v1"].iter().map(|n| id(&k2, n)).collect();
        let r = k2.reordered(&order).unwrap();
        assert_eq!(contract_edge(&r, id(&r, "e1")).unwrap().names(), vec!["v1"]);
    }

    #[test]
    fn extraction() {
        assert!(extract_edge(&graph2("k2"), ElemId(2)).unwrap().is_empty());
        let p3 = graph2("p3");
        assert_eq!(extract_edge(&p3, id(&p3, "e1")).unwrap().describe(), "[v3] N={}");
        let star = graph2("k13");
        for e in ["e1", "e2", "e3"] {
            let r = extract_edge(&star, id(&star, e)).unwrap();
            assert_eq!(r.len(), 2);
            assert!(r.relation("N").unwrap().is_empty());
        }
    }

    #[test]
    fn directed_contraction() {
        let c = directed("d2cycle");
        let r = contract_directed_edge(&c, id(&c, "e1")).unwrap();
        assert_eq!(r.describe(), "[v2 e2] NO={(v2,e2)} NI={(e2,v2)}");

        let l = directed("loop1");
        assert!(contract_directed_edge(&l, id(&l, "e1")).unwrap().is_empty());

        // a -> b -> c plus c -> a: contracting a->b keeps c->a rewired to c->b.
        let g = MultiGraph::from_pairs(3, true, &[(0, 1), (1, 2), (2, 0)]);
        let s = IncidenceStructure::from_graph(&g, VocabTag::Directed2).unwrap();
        let r = contract_directed_edge(&s, id(&s, "e1")).unwrap();
        assert_eq!(r.describe(), "[v2 v3 e2 e3] NO={(v2,e2),(v3,e3)} NI={(e2,v3),(e3,v2)}");
    }

    #[test]
    fn surgeries_shrink_and_keep_order() {
        let k4 = graph2("k4");
        let order = k4.edges_first_order();
        let s = k4.reordered(&order).unwrap();
        for &e in &order[..6] {
            for r in [delete_edge(&s, e).unwrap(), contract_edge(&s, e).unwrap(), extract_edge(&s, e).unwrap()] {
                assert!(r.len() < s.len());
                let pos: Vec<usize> = r.universe().iter().map(|&x| s.position(x).unwrap()).collect();
                assert!(pos.windows(2).all(|w| w[0] < w[1]));
                for &x in r.universe() {
                    if r.kind(x) == ElementKind::Edge {
                        let c = r.relation("N").unwrap().iter().filter(|t| t[1] == x).count();
                        assert!(c == 1 || c == 2);
                    }
                }
            }
        }
    }
}
