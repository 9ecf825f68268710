//! Exhaustive small-graph corpora and order sampling.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::structures::{ElemId, ElementKind, IncidenceStructure, MultiGraph};

/// Every labeled multigraph on `v1..vn` (n ≤ `max_vertices`) with at most `max_edges` edges,
/// loops and parallel edges included. Two graphs differing only by a permutation of edge ids
/// are the same labeled graph, so edges are generated as a sorted multiset of endpoint pairs.
pub fn multigraphs(max_vertices: usize, max_edges: usize, directed: bool) -> Vec<MultiGraph> {
    let mut out = Vec::new();
    for n in 0..=max_vertices {
        let slots: Vec<(usize, usize)> = if directed {
            (0..n).cartesian_product(0..n).collect()
        } else {
            (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect()
        };
        for k in 0..=max_edges {
            if slots.is_empty() && k > 0 {
                break;
            }
            for pick in (0..slots.len()).combinations_with_replacement(k) {
                let pairs: Vec<(usize, usize)> = pick.iter().map(|&i| slots[i]).collect();
                out.push(MultiGraph::from_pairs(n, directed, &pairs));
            }
        }
    }
    out
}

/// Undirected corpus: at most 4 vertices and 5 edges.
pub fn small_undirected() -> Vec<MultiGraph> {
    multigraphs(4, 5, false)
}

/// Directed corpus: at most 3 vertices and 4 edges.
pub fn small_directed() -> Vec<MultiGraph> {
    multigraphs(3, 4, true)
}

/// Universe orders with all edges before all vertices. When there are at most `limit` of them
/// all are returned in lexicographic order; otherwise `samples` seeded random ones.
pub fn edges_first_orders(s: &IncidenceStructure, limit: usize, samples: usize, seed: u64) -> Vec<Vec<ElemId>> {
    let (edges, vertices): (Vec<ElemId>, Vec<ElemId>) =
        s.universe().iter().partition(|&&x| s.kind(x) == ElementKind::Edge);
    let count = factorial(edges.len()).saturating_mul(factorial(vertices.len()));
    if count <= limit as u128 {
        let k = edges.len();
        let pv = vertices.len();
        return edges
            .iter()
            .copied()
            .permutations(k)
            .cartesian_product(vertices.iter().copied().permutations(pv).collect::<Vec<_>>())
            .map(|(mut e, v)| {
                e.extend(v);
                e
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let mut e = edges.clone();
            let mut v = vertices.clone();
            e.shuffle(&mut rng);
            v.shuffle(&mut rng);
            e.extend(v);
            e
        })
        .collect()
}

/// Every permutation of the universe when there are at most `limit`, else `samples` seeded ones.
pub fn any_orders(s: &IncidenceStructure, limit: usize, samples: usize, seed: u64) -> Vec<Vec<ElemId>> {
    let all = s.universe().to_vec();
    if factorial(all.len()) <= limit as u128 {
        let n = all.len();
        return all.into_iter().permutations(n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let mut o = all.clone();
            o.shuffle(&mut rng);
            o
        })
        .collect()
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{builtin_graph, VocabTag};

    #[test]
    fn corpus_sizes() {
        // Multisets of size ≤ k over the pair slots, summed over n = 0..=4.
        let binom = |n: u64, k: u64| (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1));
        let expect: u64 = (0..=4u64)
            .map(|n| {
                let slots = n * (n + 1) / 2;
                if slots == 0 {
                    1
                } else {
                    (0..=5).map(|k| binom(slots + k - 1, k)).sum()
                }
            })
            .sum();
        assert_eq!(small_undirected().len() as u64, expect);
        assert_eq!(expect, 3528);
        let d: u64 = (0..=3u64)
            .map(|n| if n == 0 { 1 } else { (0..=4).map(|k| binom(n * n + k - 1, k)).sum() })
            .sum();
        assert_eq!(small_directed().len() as u64, d);
    }

    #[test]
    fn orders_put_edges_first() {
        let s = IncidenceStructure::from_graph(&builtin_graph("k3", false).unwrap(), VocabTag::Graph2).unwrap();
        let orders = edges_first_orders(&s, 720, 20, 1);
        assert_eq!(orders.len(), 36);
        for o in &orders {
            assert!(o[..3].iter().all(|&x| s.kind(x) == ElementKind::Edge));
        }
        let big = IncidenceStructure::from_graph(&builtin_graph("k4", false).unwrap(), VocabTag::Graph2).unwrap();
        let sampled = edges_first_orders(&big, 720, 20, 1);
        assert_eq!(sampled.len(), 20);
        assert_eq!(sampled, edges_first_orders(&big, 720, 20, 1));
    }
}
