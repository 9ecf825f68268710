use std::collections::HashMap;
use std::sync::OnceLock;

use itertools::Itertools;

use super::ast::{Formula, NativeAtom, NativeKind, SetExpr, SoReplacement, Term};
use super::eval::{BitRel, CompiledFormula, Model};
use super::parse::FormulaParser;
use super::{Assignment, LogicError, Relation};
use crate::structures::{ElemId, ElementKind, IncidenceStructure, VocabTag, Vocabulary};

/// Incidence data of a graph-like structure, by universe position.
#[derive(Debug, Clone)]
pub(crate) struct GraphView {
    pub n: usize,
    pub is_edge: Vec<bool>,
    /// Vertices `v` with `inc(v, x)`.
    pub ends: Vec<Vec<usize>>,
    pub tails: Vec<Vec<usize>>,
    pub heads: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    /// False when `a` and `b` were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

impl GraphView {
    pub fn new(tag: VocabTag, n: usize, rels: &[BitRel]) -> Option<GraphView> {
        let mut g = GraphView {
            n,
            is_edge: vec![false; n],
            ends: vec![Vec::new(); n],
            tails: vec![Vec::new(); n],
            heads: vec![Vec::new(); n],
        };
        match tag {
            VocabTag::Graph2 => {
                for t in rels[0].tuples() {
                    g.ends[t[1]].push(t[0]);
                }
                for x in 0..n {
                    g.is_edge[x] = !g.ends[x].is_empty();
                }
            }
            VocabTag::Directed2 => {
                for t in rels[0].tuples() {
                    g.tails[t[1]].push(t[0]);
                }
                for t in rels[1].tuples() {
                    g.heads[t[0]].push(t[1]);
                }
                for x in 0..n {
                    g.is_edge[x] = !g.tails[x].is_empty() && !g.heads[x].is_empty();
                    let mut e = g.tails[x].clone();
                    e.extend(&g.heads[x]);
                    e.sort_unstable();
                    e.dedup();
                    g.ends[x] = e;
                }
            }
            VocabTag::Graph1 | VocabTag::Custom => return None,
        }
        Some(g)
    }

    fn is_vertex(&self, x: usize) -> bool {
        !self.is_edge[x]
    }

    fn is_loop(&self, e: usize) -> bool {
        self.is_edge[e] && self.ends[e].len() == 1
    }

    /// Joins the ends of every non-loop edge passing `allowed`.
    fn components(&self, allowed: impl Fn(usize) -> bool) -> UnionFind {
        let mut uf = UnionFind::new(self.n);
        for e in 0..self.n {
            if self.is_edge[e] && self.ends[e].len() >= 2 && allowed(e) {
                for w in self.ends[e].windows(2) {
                    uf.union(w[0], w[1]);
                }
            }
        }
        uf
    }

    /// Vertices standing for `x` in a connectivity query through `set`: a vertex stands for
    /// itself, an edge of the set for its ends.
    fn attach(&self, x: usize, set: &[bool]) -> Vec<usize> {
        if self.is_vertex(x) {
            vec![x]
        } else if set[x] {
            self.ends[x].clone()
        } else {
            Vec::new()
        }
    }

    fn connected(&self, uf: &mut UnionFind, set: &[bool], s: usize, t: usize) -> bool {
        if s == t {
            return true;
        }
        let (a, b) = (self.attach(s, set), self.attach(t, set));
        a.iter().any(|&x| b.iter().any(|&y| uf.find(x) == uf.find(y)))
    }

    fn set_components(&self, set: &[bool]) -> UnionFind {
        self.components(|e| set[e])
    }

    fn touching(&self, x: usize, set: &[bool]) -> bool {
        (0..self.n).any(|e| set[e] && (self.ends[e].contains(&x) || self.ends[e].iter().any(|u| self.ends[x].contains(u))))
    }

    fn spanning_forest(&self, f: &[bool]) -> bool {
        let in_f = |e: usize| f[e] && self.is_edge[e];
        if (0..self.n).any(|e| in_f(e) && self.ends[e].len() == 1) {
            return false;
        }
        let mut uf = UnionFind::new(self.n);
        for e in 0..self.n {
            if in_f(e) && self.ends[e].len() >= 2 {
                for w in self.ends[e].windows(2) {
                    if !uf.union(w[0], w[1]) {
                        return false;
                    }
                }
            }
        }
        let mut all = self.components(|_| true);
        let vertices: Vec<usize> = (0..self.n).filter(|&v| self.is_vertex(v)).collect();
        for (i, &u) in vertices.iter().enumerate() {
            for &w in &vertices[i + 1..] {
                if (all.find(u) == all.find(w)) != (uf.find(u) == uf.find(w)) {
                    return false;
                }
            }
        }
        true
    }

    fn on_cycle(&self, v: usize, set: &[bool]) -> bool {
        if !self.is_vertex(v) {
            return false;
        }
        let step = |a: usize| -> Vec<usize> {
            (0..self.n)
                .filter(|&e| set[e] && self.is_edge[e] && self.tails[e].contains(&a))
                .flat_map(|e| self.heads[e].clone())
                .collect()
        };
        let mut seen = vec![false; self.n];
        let mut stack = step(v);
        while let Some(a) = stack.pop() {
            if a == v {
                return true;
            }
            if !seen[a] {
                seen[a] = true;
                stack.extend(step(a));
            }
        }
        false
    }
}

pub(crate) fn eval_native(kind: NativeKind, g: &GraphView, t: &[usize], s: &[Vec<bool>]) -> bool {
    let n = g.n;
    match kind {
        NativeKind::ConnectedVia => {
            let mut uf = g.set_components(&s[0]);
            g.connected(&mut uf, &s[0], t[0], t[1])
        }
        NativeKind::Cycle => {
            let touched: Vec<usize> = (0..n).filter(|&u| g.is_vertex(u) && g.touching(u, &s[0])).collect();
            let degree = |u: usize| (0..n).filter(|&e| s[0][e] && g.ends[e].contains(&u)).count();
            let mut uf = g.set_components(&s[0]);
            touched.iter().all(|&u| degree(u) == 2)
                && touched.iter().all(|&u| touched.iter().all(|&w| g.connected(&mut uf, &s[0], u, w)))
        }
        NativeKind::Touching => s[0][t[0]] && g.touching(t[0], &s[1]),
        NativeKind::LastInComp => {
            let (x, d) = (t[0], &s[0]);
            let mut uf = g.set_components(&s[1]);
            d[x] && (x + 1..n).all(|y| !d[y] || !g.connected(&mut uf, &s[1], x, y))
        }
        NativeKind::OnCycle => g.on_cycle(t[0], &s[0]),
        NativeKind::Bridge => {
            let e = t[0];
            if !g.is_edge[e] || g.ends[e].len() < 2 {
                return false;
            }
            let mut uf = g.components(|f| f != e);
            let ends = &g.ends[e];
            ends.iter().any(|&y| ends.iter().any(|&z| y != z && uf.find(y) != uf.find(z)))
        }
        NativeKind::SpanningForest => g.spanning_forest(&s[0]),
        NativeKind::CyclePathCover => (0..n).filter(|&v| g.is_vertex(v)).all(|v| {
            let outs = (0..n).filter(|&f| s[0][f] && g.tails[f].contains(&v)).count();
            let ins = (0..n).filter(|&f| s[0][f] && g.heads[f].contains(&v)).count();
            outs <= 1 && ins <= 1
        }),
        NativeKind::InternallyActive => {
            let (e, f) = (t[0], &s[0]);
            if !f[e] || !g.is_edge[e] {
                return false;
            }
            (0..n).filter(|&h| g.is_edge[h] && h != e).all(|h| {
                let mut swapped = f.clone();
                swapped[e] = false;
                swapped[h] = true;
                !g.spanning_forest(&swapped) || e < h
            })
        }
        NativeKind::ExternallyActive => {
            let (e, f) = (t[0], &s[0]);
            if !g.is_edge[e] || f[e] {
                return false;
            }
            (0..n).filter(|&h| f[h] && g.is_edge[h]).all(|h| {
                let mut without = f.clone();
                without[h] = false;
                let mut uf = g.set_components(&without);
                let ends = &g.ends[e];
                let on_path = ends.iter().any(|&u| ends.iter().any(|&w| !g.connected(&mut uf, &without, u, w)));
                !on_path || e < h
            })
        }
        NativeKind::CyclomaticEdge => {
            let (e, a) = (t[0], &s[0]);
            if !a[e] || !g.is_edge[e] {
                return false;
            }
            if g.is_loop(e) {
                return true;
            }
            let earlier: Vec<bool> = (0..n).map(|h| a[h] && h < e).collect();
            let mut uf = g.set_components(&earlier);
            let ends = &g.ends[e];
            ends.iter().any(|&u| ends.iter().any(|&w| u != w && g.connected(&mut uf, &earlier, u, w)))
        }
        NativeKind::ComponentSize(k) => {
            let x = t[0];
            if !g.is_vertex(x) {
                return false;
            }
            let mut uf = g.set_components(&s[0]);
            (0..n).filter(|&u| g.is_vertex(u) && g.connected(&mut uf, &s[0], x, u)).count() == k
        }
    }
}

fn member_vec(m: &Model, set: &[ElemId]) -> Result<Vec<bool>, LogicError> {
    let mut v = vec![false; m.size()];
    for &x in set {
        let p = m.position(x).ok_or_else(|| LogicError::NotInUniverse(m.structure().name(x).to_string()))?;
        v[p] = true;
    }
    Ok(v)
}

/// Evaluates a native predicate directly on element arguments.
pub fn native_predicate(
    kind: NativeKind,
    s: &IncidenceStructure,
    terms: &[ElemId],
    sets: &[Vec<ElemId>],
) -> Result<bool, LogicError> {
    let sig = kind.signature();
    let want_t = sig.matches('t').count();
    let want_s = sig.matches('s').count();
    if terms.len() != want_t || sets.len() != want_s {
        return Err(LogicError::Arity { symbol: kind.name().into(), expected: want_t + want_s, found: terms.len() + sets.len() });
    }
    if kind.directed_only() && s.vocab().tag != VocabTag::Directed2 {
        return Err(LogicError::Unsupported(format!("`{}` over {}", kind.name(), s.vocab().name)));
    }
    let m = Model::new(s);
    let g = m.graph()?;
    let ts = terms
        .iter()
        .map(|&x| m.position(x).ok_or_else(|| LogicError::NotInUniverse(s.name(x).to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let ss = sets.iter().map(|set| member_vec(&m, set)).collect::<Result<Vec<_>, _>>()?;
    Ok(eval_native(kind, g, &ts, &ss))
}

/// Vertex classes of the spanning subgraph with edge set `edges`.
fn vertex_classes(s: &IncidenceStructure, edges: &[ElemId]) -> Result<Vec<Vec<usize>>, LogicError> {
    let m = Model::new(s);
    let g = m.graph()?;
    let member = member_vec(&m, edges)?;
    let mut uf = g.set_components(&member);
    let mut classes: HashMap<usize, Vec<usize>> = HashMap::new();
    for v in (0..g.n).filter(|&v| g.is_vertex(v)) {
        classes.entry(uf.find(v)).or_default().push(v);
    }
    let mut out: Vec<Vec<usize>> = classes.into_values().collect();
    out.sort();
    Ok(out)
}

/// k(A): connected components of (V, A), isolated vertices included.
pub fn component_count(s: &IncidenceStructure, edges: &[ElemId]) -> Result<usize, LogicError> {
    Ok(vertex_classes(s, edges)?.len())
}

/// k_cov(B): components of (V, B) that contain at least one edge of B.
pub fn covered_component_count(s: &IncidenceStructure, edges: &[ElemId]) -> Result<usize, LogicError> {
    let m = Model::new(s);
    let g = m.graph()?;
    let member = member_vec(&m, edges)?;
    let mut uf = g.set_components(&member);
    let mut roots: Vec<usize> = (0..g.n)
        .filter(|&e| member[e] && g.is_edge[e])
        .filter_map(|e| g.ends[e].first().copied())
        .map(|v| uf.find(v))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    Ok(roots.len())
}

/// s(i, A): components of (V, A) with exactly `i` vertices.
pub fn component_size_census(s: &IncidenceStructure, edges: &[ElemId], i: usize) -> Result<usize, LogicError> {
    Ok(vertex_classes(s, edges)?.iter().filter(|c| c.len() == i).count())
}

/// r(A) = |V| − k(A).
pub fn rank(s: &IncidenceStructure, edges: &[ElemId]) -> Result<usize, LogicError> {
    let classes = vertex_classes(s, edges)?;
    Ok(classes.iter().map(Vec::len).sum::<usize>() - classes.len())
}

const COMMON_DEFINITIONS: &str = include_str!("natives.sexp");
const DIRECTED_DEFINITIONS: &str = include_str!("natives_directed.sexp");

fn definition_parser(tag: VocabTag) -> Result<&'static FormulaParser, LogicError> {
    static GRAPH: OnceLock<FormulaParser> = OnceLock::new();
    static DIRECTED: OnceLock<FormulaParser> = OnceLock::new();
    let build = |vocab: Vocabulary, directed: bool| {
        let mut p = FormulaParser::new(&vocab);
        p.load_defs(COMMON_DEFINITIONS).expect("built-in definitions parse");
        if directed {
            p.load_defs(DIRECTED_DEFINITIONS).expect("built-in definitions parse");
        }
        p
    };
    match tag {
        VocabTag::Graph2 => Ok(GRAPH.get_or_init(|| build(Vocabulary::graph2(), false))),
        VocabTag::Directed2 => Ok(DIRECTED.get_or_init(|| build(Vocabulary::directed2(), true))),
        _ => Err(LogicError::Unsupported("graph predicates need an incidence vocabulary".into())),
    }
}

/// The second-order formula a native atom abbreviates. Nested natives are left in place.
pub fn native_definition(atom: &NativeAtom, vocab: &Vocabulary) -> Result<Formula, LogicError> {
    let p = definition_parser(vocab.tag)?;
    let params: Vec<&str> = atom
        .kind
        .signature()
        .chars()
        .filter(|&c| c != 'n')
        .zip(["p1", "p2", "p3"])
        .map(|(_, p)| p)
        .collect();
    let body = match atom.kind {
        NativeKind::ComponentSize(k) => p.parse_formula(&format!(
            "(and (PV p1) (exists-exactly {k} u (and (PV u) (connected-via p2 p1 u))))"
        ))?,
        kind => {
            let call = format!("(sol-{} {})", kind.name(), params.join(" "));
            p.parse_formula(&call)?
        }
    };
    let mut fo = HashMap::new();
    let mut so = HashMap::new();
    let (mut ti, mut si) = (0, 0);
    for (c, name) in atom.kind.signature().chars().filter(|&c| c != 'n').zip(&params) {
        if c == 't' {
            fo.insert(name.to_string(), atom.terms[ti].clone());
            ti += 1;
        } else {
            let r = match &atom.sets[si] {
                SetExpr::Var(w) => SoReplacement::Rename(w.clone()),
                other => SoReplacement::Set(other.clone()),
            };
            so.insert(name.to_string(), r);
            si += 1;
        }
    }
    body.substitute(&fo, &so, Some(vocab))
}

/// Replaces every native atom by its definition, recursively.
pub fn expand_natives(f: &Formula, vocab: &Vocabulary) -> Result<Formula, LogicError> {
    let go = |x: &Formula| expand_natives(x, vocab);
    Ok(match f {
        Formula::Native(atom) => go(&native_definition(atom, vocab)?)?,
        Formula::Not(a) => Formula::not(go(a)?),
        Formula::And(a, b) => Formula::and(go(a)?, go(b)?),
        Formula::Or(a, b) => Formula::or(go(a)?, go(b)?),
        Formula::Implies(a, b) => Formula::implies(go(a)?, go(b)?),
        Formula::Exists(v, a) => Formula::exists(v, go(a)?),
        Formula::Forall(v, a) => Formula::forall(v, go(a)?),
        Formula::ExistsRel(u, k, a) => Formula::ExistsRel(u.clone(), *k, Box::new(go(a)?)),
        Formula::ForallRel(u, k, a) => Formula::ForallRel(u.clone(), *k, Box::new(go(a)?)),
        other => other.clone(),
    })
}

/// Result of comparing a native predicate with its second-order definition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NativeAgreement {
    /// Number of argument choices tried.
    pub checked: usize,
    /// Argument choices where the three evaluations differ.
    pub mismatches: Vec<String>,
}

fn subsets(items: &[ElemId]) -> Vec<Vec<ElemId>> {
    (0..1u32 << items.len())
        .map(|mask| items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect())
        .collect()
}

/// Which sets the leading set arguments of a predicate range over in
/// [`check_native_agreement`]. The last set argument always ranges over edge sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetDomain {
    /// Every subset of the universe.
    All,
    /// Every set of vertices and every set of edges.
    Homogeneous,
}

/// Evaluates `kind` on every argument choice natively, through the model checker, and through
/// its second-order definition. Element arguments range over the universe.
pub fn check_native_agreement(
    kind: NativeKind,
    s: &IncidenceStructure,
    domain: SetDomain,
) -> Result<NativeAgreement, LogicError> {
    let all: Vec<ElemId> = s.universe().to_vec();
    let edges: Vec<ElemId> = all.iter().copied().filter(|&x| s.kind(x) == ElementKind::Edge).collect();
    let sig: Vec<char> = kind.signature().chars().filter(|&c| c != 'n').collect();
    let n_t = sig.iter().filter(|&&c| c == 't').count();
    let n_s = sig.len() - n_t;
    let terms: Vec<Term> = (0..n_t).map(|i| Term::Var(format!("x{i}"))).collect();
    let sets: Vec<SetExpr> = (0..n_s).map(|i| SetExpr::Var(format!("S{i}"))).collect();
    let atom = Formula::native(kind, terms, sets);
    let expanded = expand_natives(&atom, s.vocab())?;
    let native = CompiledFormula::new(&atom, s.vocab())?;
    let sol = CompiledFormula::new(&expanded, s.vocab())?;
    let model = Model::new(s);
    let edge_sets = subsets(&edges);
    let any_sets = match domain {
        SetDomain::All => subsets(&all),
        SetDomain::Homogeneous => {
            let vertices: Vec<ElemId> = all.iter().copied().filter(|&x| s.kind(x) == ElementKind::Vertex).collect();
            let mut sets = subsets(&vertices);
            sets.extend(edge_sets.iter().filter(|e| !e.is_empty()).cloned());
            sets
        }
    };
    let mut report = NativeAgreement::default();
    let term_choices = (0..n_t).map(|_| all.iter().copied()).multi_cartesian_product();
    let term_choices: Vec<Vec<ElemId>> = if n_t == 0 { vec![vec![]] } else { term_choices.collect() };
    let set_choices = (0..n_s).map(|i| if i + 1 == n_s { edge_sets.iter() } else { any_sets.iter() });
    let set_choices: Vec<Vec<&Vec<ElemId>>> =
        if n_s == 0 { vec![vec![]] } else { set_choices.multi_cartesian_product().collect() };
    for ts in &term_choices {
        for ss in &set_choices {
            let mut a = Assignment::new();
            for (i, &x) in ts.iter().enumerate() {
                a = a.with_fo(&format!("x{i}"), x);
            }
            for (i, set) in ss.iter().enumerate() {
                a = a.with_so(&format!("S{i}"), Relation::unary(set.iter().copied()));
            }
            let owned: Vec<Vec<ElemId>> = ss.iter().map(|x| (*x).clone()).collect();
            let direct = native_predicate(kind, s, ts, &owned)?;
            let via_eval = native.eval(&model, &a)?;
            let via_def = sol.eval(&model, &a)?;
            report.checked += 1;
            if direct != via_eval || direct != via_def {
                let names = |xs: &[ElemId]| xs.iter().map(|&x| s.name(x)).collect::<Vec<_>>().join(",");
                let sets: Vec<String> = owned.iter().map(|x| format!("{{{}}}", names(x))).collect();
                report.mismatches.push(format!(
                    "{} terms [{}] sets {} native={direct} checker={via_eval} definition={via_def}",
                    kind.name(),
                    names(ts),
                    sets.join(" ")
                ));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::builtin_graph;

    fn check_agreement(graph: &str, directed: bool, kinds: &[NativeKind]) {
        let tag = if directed { VocabTag::Directed2 } else { VocabTag::Graph2 };
        let s = IncidenceStructure::from_graph(&builtin_graph(graph, directed).unwrap(), tag).unwrap();
        for &kind in kinds {
            let report = check_native_agreement(kind, &s, SetDomain::All).unwrap();
            assert!(report.checked > 0);
            assert!(report.mismatches.is_empty(), "{graph}: {:?}", report.mismatches);
        }
    }

    const UNDIRECTED: [NativeKind; 11] = [
        NativeKind::ConnectedVia,
        NativeKind::Cycle,
        NativeKind::Touching,
        NativeKind::LastInComp,
        NativeKind::Bridge,
        NativeKind::SpanningForest,
        NativeKind::InternallyActive,
        NativeKind::ExternallyActive,
        NativeKind::CyclomaticEdge,
        NativeKind::ComponentSize(1),
        NativeKind::ComponentSize(2),
    ];

    #[test]
    fn definitions_agree_on_small_graphs() {
        for g in ["k2", "k2-double", "loop1", "p3", "two-edges"] {
            check_agreement(g, false, &UNDIRECTED);
        }
    }

    #[test]
    fn definitions_agree_on_triangle() {
        check_agreement("k3", false, &UNDIRECTED);
    }

    #[test]
    fn directed_definitions_agree() {
        let mut kinds = UNDIRECTED.to_vec();
        kinds.extend([NativeKind::OnCycle, NativeKind::CyclePathCover]);
        for g in ["d2cycle", "loop1", "p3", "k2-double"] {
            check_agreement(g, true, &kinds);
        }
    }

    #[test]
    fn counts_on_two_edges() {
        let s = IncidenceStructure::from_graph(&builtin_graph("p3", false).unwrap(), VocabTag::Graph2).unwrap();
        let e1 = s.lookup("e1").unwrap();
        assert_eq!(component_count(&s, &[]).unwrap(), 3);
        assert_eq!(component_count(&s, &[e1]).unwrap(), 2);
        assert_eq!(covered_component_count(&s, &[e1]).unwrap(), 1);
        assert_eq!(component_size_census(&s, &[e1], 2).unwrap(), 1);
        assert_eq!(rank(&s, &[e1]).unwrap(), 1);
    }
}
