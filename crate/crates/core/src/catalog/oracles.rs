//! Brute-force combinatorial oracles. They work on [`MultiGraph`] directly and share no code
//! with the logic engines.

use std::collections::BTreeMap;

use crate::polyring::Polynomial;
use crate::structures::MultiGraph;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

fn monomial(powers: &[(&str, u32)]) -> Polynomial {
    powers.iter().fold(Polynomial::one(), |acc, (x, k)| acc * Polynomial::var(x).pow(*k))
}

fn members(mask: u64, m: usize) -> impl Iterator<Item = usize> {
    (0..m).filter(move |i| mask >> i & 1 == 1)
}

fn subsets(m: usize) -> std::ops::Range<u64> {
    assert!(m < 32, "oracle enumeration limited to 31 edges");
    0..1u64 << m
}

/// Component sizes (vertex counts) of the spanning subgraph `(V, A)`, and for each component
/// the number of `A`-edges inside it.
fn components(n: usize, ends: &[(usize, usize)], mask: u64) -> Vec<(usize, usize)> {
    let mut uf = UnionFind::new(n);
    for i in members(mask, ends.len()) {
        uf.union(ends[i].0, ends[i].1);
    }
    let mut by_root: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for v in 0..n {
        by_root.entry(uf.find(v)).or_default().0 += 1;
    }
    for i in members(mask, ends.len()) {
        by_root.get_mut(&uf.find(ends[i].0)).expect("root").1 += 1;
    }
    by_root.into_values().collect()
}

/// Random cluster form of the Potts partition function: Σ_A q^k(A) v^|A|.
pub fn potts(g: &MultiGraph) -> Polynomial {
    let (n, ends) = (g.vertices().len(), g.endpoint_indices());
    subsets(ends.len())
        .map(|a| {
            let k = components(n, &ends, a).len() as u32;
            monomial(&[("q", k), ("v", a.count_ones())])
        })
        .sum()
}

/// Σ over matchings F of X^(uncovered vertices) Y^|F|. A loop is a matching edge covering one
/// vertex.
pub fn matching(g: &MultiGraph) -> Polynomial {
    let (n, ends) = (g.vertices().len(), g.endpoint_indices());
    let mut total = Polynomial::zero();
    for f in subsets(ends.len()) {
        let mut covered = vec![false; n];
        let mut ok = true;
        for i in members(f, ends.len()) {
            let (a, b) = ends[i];
            if covered[a] || covered[b] {
                ok = false;
                break;
            }
            covered[a] = true;
            covered[b] = true;
        }
        if ok {
            let free = covered.iter().filter(|c| !**c).count() as u32;
            total = total + monomial(&[("X", free), ("Y", f.count_ones())]);
        }
    }
    total
}

/// Tutte polynomial via spanning forests and activities relative to `edge_order`, a permutation
/// of edge indices listing edges from first to last.
pub fn tutte_with_order(g: &MultiGraph, edge_order: &[usize]) -> Polynomial {
    let (n, ends) = (g.vertices().len(), g.endpoint_indices());
    let m = ends.len();
    assert_eq!(edge_order.len(), m, "edge order must list every edge");
    let mut rank = vec![0; m];
    for (r, &e) in edge_order.iter().enumerate() {
        rank[e] = r;
    }
    let full = components(n, &ends, (1u64 << m) - 1).len();
    let mut total = Polynomial::zero();
    for f in subsets(m) {
        let mut uf = UnionFind::new(n);
        if !members(f, m).all(|i| uf.union(ends[i].0, ends[i].1)) {
            continue;
        }
        if components(n, &ends, f).len() != full {
            continue;
        }
        let (mut internal, mut external) = (0, 0);
        for e in 0..m {
            if f >> e & 1 == 1 {
                // Fundamental cut: edges leaving the side of F - e that holds one endpoint.
                let mut side = UnionFind::new(n);
                for i in members(f & !(1 << e), m) {
                    side.union(ends[i].0, ends[i].1);
                }
                let root = side.find(ends[e].0);
                let active = (0..m).all(|c| {
                    let crossing = (side.find(ends[c].0) == root) != (side.find(ends[c].1) == root);
                    !crossing || rank[c] >= rank[e]
                });
                internal += active as u32;
            } else {
                let active = match forest_path(n, &ends, f, ends[e].0, ends[e].1) {
                    Some(path) => path.iter().all(|&c| rank[c] > rank[e]),
                    None => unreachable!("F spans every component"),
                };
                external += active as u32;
            }
        }
        total = total + monomial(&[("X", internal), ("Y", external)]);
    }
    total
}

/// Edge indices on the path from `from` to `to` inside the forest `f`.
fn forest_path(n: usize, ends: &[(usize, usize)], f: u64, from: usize, to: usize) -> Option<Vec<usize>> {
    let mut via: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        for i in members(f, ends.len()) {
            let (a, b) = ends[i];
            let w = if a == v { b } else if b == v { a } else { continue };
            if !seen[w] {
                seen[w] = true;
                via[w] = Some((v, i));
                stack.push(w);
            }
        }
    }
    if !seen[to] {
        return None;
    }
    let mut path = Vec::new();
    let mut at = to;
    while let Some((prev, e)) = via[at] {
        path.push(e);
        at = prev;
    }
    Some(path)
}

/// Tutte polynomial with edges ordered as listed in the graph.
pub fn tutte(g: &MultiGraph) -> Polynomial {
    tutte_with_order(g, &(0..g.edges().len()).collect::<Vec<_>>())
}

/// ξ as a sum over ordered pairs (A, B) of vertex-disjoint edge sets:
/// X^(k(A ∪ B) - kcov(B)) Y^(|A| + |B| - kcov(B)) Z^kcov(B), where kcov(B) counts the
/// components of the subgraph formed by B's edges and endpoints.
pub fn xi(g: &MultiGraph) -> Polynomial {
    let (n, ends) = (g.vertices().len(), g.endpoint_indices());
    let m = ends.len();
    let touched = |s: u64| members(s, m).fold(0u64, |acc, i| acc | 1 << ends[i].0 | 1 << ends[i].1);
    let mut total = Polynomial::zero();
    for a in subsets(m) {
        let va = touched(a);
        for b in subsets(m) {
            if va & touched(b) != 0 {
                continue;
            }
            let k = components(n, &ends, a | b).len() as u32;
            let kcov = components(n, &ends, b).iter().filter(|c| c.1 > 0).count() as u32;
            let size = a.count_ones() + b.count_ones();
            total = total + monomial(&[("X", k - kcov), ("Y", size - kcov), ("Z", kcov)]);
        }
    }
    total
}

/// X(X-1)...(X-i+1).
pub fn falling(x: &str, i: u32) -> Polynomial {
    (0..i as i64).map(|k| Polynomial::var(x) - Polynomial::constant(k)).product()
}

/// Cover polynomial: Σ over edge sets covering the vertices by disjoint directed paths and
/// cycles (each vertex has in- and out-degree at most 1) of X^(falling #paths) Y^(#cycles).
/// A loop is a cycle; an isolated vertex is a path.
pub fn cover(g: &MultiGraph) -> Polynomial {
    let (n, ends) = (g.vertices().len(), g.endpoint_indices());
    let m = ends.len();
    let mut total = Polynomial::zero();
    for b in subsets(m) {
        let (mut outdeg, mut indeg) = (vec![0; n], vec![0; n]);
        for i in members(b, m) {
            outdeg[ends[i].0] += 1;
            indeg[ends[i].1] += 1;
        }
        if outdeg.iter().chain(&indeg).any(|&d| d > 1) {
            continue;
        }
        let comps = components(n, &ends, b);
        let cycles = comps.iter().filter(|(v, e)| v == e).count() as u32;
        let paths = comps.len() as u32 - cycles;
        total = total + falling("X", paths) * Polynomial::var("Y").pow(cycles);
    }
    total
}

/// Noble–Welsh U with component-size variables given as `(size, name)` pairs:
/// Σ_A ∏ name^s(size, A) · Y^(|A| - r(A)), where s(i, A) counts the components of (V, A) with
/// i vertices and r(A) = |V| - k(A). Sizes without a pair contribute no factor.
pub fn noble_welsh_with(g: &MultiGraph, pairs: &[(usize, String)]) -> Polynomial {
    let (n, ends) = (g.vertices().len(), g.endpoint_indices());
    let mut total = Polynomial::zero();
    for a in subsets(ends.len()) {
        let comps = components(n, &ends, a);
        let rank = (n - comps.len()) as u32;
        let mut term = Polynomial::var("Y").pow(a.count_ones() - rank);
        for (size, name) in pairs {
            let s = comps.iter().filter(|c| c.0 == *size).count() as u32;
            term = term * Polynomial::var(name).pow(s);
        }
        total = total + term;
    }
    total
}

/// The standard indexing X1..Xn for sizes 1..n.
pub fn noble_welsh_pairs(n: usize) -> Vec<(usize, String)> {
    (1..=n).map(|i| (i, format!("X{i}"))).collect()
}

pub fn noble_welsh(g: &MultiGraph) -> Polynomial {
    noble_welsh_with(g, &noble_welsh_pairs(g.vertices().len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::builtin_graph;

    fn p(s: &str) -> Polynomial {
        s.parse().unwrap()
    }

    fn g(name: &str) -> MultiGraph {
        builtin_graph(name, false).unwrap()
    }

    #[test]
    fn small_values() {
        assert_eq!(matching(&g("e1")), p("X"));
        assert_eq!(matching(&g("p3")), p("X^3 + 2*X*Y"));
        assert_eq!(matching(&g("k2-double")), p("X^2 + 2*Y"));
        assert_eq!(tutte(&g("e1")), p("1"));
        assert_eq!(tutte(&g("loop1")), p("Y"));
        assert_eq!(tutte(&g("k2")), p("X"));
        assert_eq!(tutte(&g("c3")), p("X^2 + X + Y"));
        assert_eq!(potts(&g("k2")), p("q^2 + q*v"));
        assert_eq!(xi(&g("k2")), p("X^2 + X*Y + Z"));
        assert_eq!(noble_welsh(&g("e2")), p("X1^2"));
        assert_eq!(cover(&builtin_graph("loop1", true).unwrap()), p("X + Y"));
    }

    #[test]
    fn cover_of_edgeless_is_falling_factorial() {
        for n in 0..=5 {
            assert_eq!(cover(&MultiGraph::edgeless(n, true)), falling("X", n as u32));
        }
        assert_eq!(falling("X", 3), p("X^3 - 3*X^2 + 2*X"));
    }

    #[test]
    fn tutte_of_k4_is_known() {
        assert_eq!(tutte(&g("k4")), p("X^3 + 3*X^2 + 2*X + 4*X*Y + 2*Y + 3*Y^2 + Y^3"));
    }

    #[test]
    fn tutte_is_edge_order_independent() {
        use itertools::Itertools;
        for name in ["k4", "c3", "k2-double", "p3"] {
            let graph = g(name);
            let base = tutte(&graph);
            for perm in (0..graph.edges().len()).permutations(graph.edges().len()) {
                assert_eq!(tutte_with_order(&graph, &perm), base, "{name} {perm:?}");
            }
        }
    }

    #[test]
    fn potts_at_v_minus_one_counts_colorings() {
        // q^n at v = -1 gives the chromatic polynomial; K3 has q(q-1)(q-2).
        let mut at = BTreeMap::new();
        at.insert("v".to_string(), Polynomial::constant(-1));
        at.insert("q".to_string(), Polynomial::var("q"));
        assert_eq!(potts(&g("k3")).compose(&at), falling("q", 3));
    }
}
