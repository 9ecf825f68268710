//! Property tests: ring identities and serialization of polynomials, and engine agreement,
//! order invariance and deletion monotonicity on random small multigraphs.

use std::collections::BTreeMap;

use gpk::budget::Budget;
use gpk::catalog::{catalog, entry, Engine};
use gpk::corpus::edges_first_orders;
use gpk::polyring::{Monomial, Polynomial};
use gpk::structures::MultiGraph;
use num_bigint::BigInt;
use proptest::prelude::*;

const VARS: [&str; 3] = ["X", "Y", "q"];

fn monomial() -> impl Strategy<Value = Monomial> {
    prop::collection::vec(0u32..3, VARS.len()).prop_map(|exps| {
        let mut m = Polynomial::one();
        for (name, e) in VARS.iter().zip(exps) {
            m = &m * &Polynomial::var(name).pow(e);
        }
        let first = m.terms().next().map(|(m, _)| m.clone());
        first.unwrap_or_else(Monomial::one)
    })
}

fn polynomial() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((-5i64..=5, monomial()), 0..5)
        .prop_map(|terms| terms.into_iter().map(|(c, m)| Polynomial::term(c, m)).sum())
}

fn graph(directed: bool) -> impl Strategy<Value = MultiGraph> {
    (1usize..=3)
        .prop_flat_map(move |n| (Just(n), prop::collection::vec((0..n, 0..n), 0..=3)))
        .prop_map(move |(n, pairs)| MultiGraph::from_pairs(n, directed, &pairs))
}

fn point() -> impl Strategy<Value = BTreeMap<String, BigInt>> {
    prop::collection::vec(-4i64..=4, VARS.len())
        .prop_map(|vals| VARS.iter().zip(vals).map(|(n, v)| (n.to_string(), BigInt::from(v))).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn addition_is_a_commutative_group(a in polynomial(), b in polynomial(), c in polynomial()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a + &Polynomial::zero(), a.clone());
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(&a + &(-&a), Polynomial::zero());
    }

    #[test]
    fn multiplication_is_commutative_associative_and_distributive(
        a in polynomial(), b in polynomial(), c in polynomial()
    ) {
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &Polynomial::one(), a.clone());
        prop_assert!((&a * &Polynomial::zero()).is_zero());
    }

    #[test]
    fn substitution_is_a_ring_homomorphism(a in polynomial(), b in polynomial(), at in point()) {
        let (va, vb) = (a.substitute(&at).unwrap(), b.substitute(&at).unwrap());
        prop_assert_eq!((&a + &b).substitute(&at).unwrap(), &va + &vb);
        prop_assert_eq!((&a * &b).substitute(&at).unwrap(), &va * &vb);
    }

    #[test]
    fn text_and_json_round_trip(a in polynomial()) {
        prop_assert_eq!(a.to_string().parse::<Polynomial>().unwrap(), a.clone());
        prop_assert_eq!(Polynomial::from_json(&a.to_json()).unwrap(), a.clone());
        prop_assert_eq!(Polynomial::from_machine(&a.to_machine()).unwrap(), a);
    }

    #[test]
    fn renaming_by_a_bijection_is_undone_by_its_inverse(a in polynomial()) {
        let fwd: BTreeMap<String, String> =
            [("X", "q"), ("Y", "X"), ("q", "Y")].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let back: BTreeMap<String, String> = fwd.iter().map(|(k, v)| (v.clone(), k.clone())).collect();
        let renamed = a.rename(&fwd).unwrap();
        prop_assert_eq!(renamed.len(), a.len());
        prop_assert_eq!(renamed.rename(&back).unwrap(), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_engine_agrees_on_random_undirected_graphs(g in graph(false)) {
        for e in catalog().iter().filter(|e| !e.is_directed() && e.recursive().is_some()) {
            let values = e.agreement(&g, Budget::unlimited()).unwrap();
            let synthesized = e.evaluate(&g, Engine::Synthesized, Budget::unlimited()).unwrap();
            for (engine, v) in &values {
                prop_assert_eq!(v, &synthesized, "{} {} on {}", e.name, engine, g.to_text());
            }
        }
    }

    #[test]
    fn cover_engines_agree_on_random_directed_graphs(g in graph(true)) {
        let e = entry("cover").unwrap();
        let oracle = e.evaluate(&g, Engine::Oracle, Budget::unlimited()).unwrap();
        for engine in [Engine::Recursive, Engine::Expansion, Engine::Synthesized] {
            prop_assert_eq!(e.evaluate(&g, engine, Budget::unlimited()).unwrap(), oracle.clone());
        }
    }

    #[test]
    fn recursive_value_ignores_the_admissible_order(g in graph(false), seed in any::<u64>()) {
        for name in ["tutte", "matching", "potts"] {
            let e = entry(name).unwrap();
            let s = e.structure(&g).unwrap();
            let base = e.evaluate_structure(&s, &g, Engine::Recursive, Budget::unlimited()).unwrap();
            for order in edges_first_orders(&s, 0, 3, seed) {
                let r = s.reordered(&order).unwrap();
                prop_assert_eq!(e.evaluate_structure(&r, &g, Engine::Recursive, Budget::unlimited()).unwrap(), base.clone());
            }
        }
    }

    #[test]
    fn matching_counts_do_not_grow_under_edge_deletion(g in graph(false)) {
        let e = entry("matching").unwrap();
        let ones: BTreeMap<String, BigInt> = [("X", 1), ("Y", 1)].iter().map(|(k, v)| (k.to_string(), BigInt::from(*v))).collect();
        let full = e.evaluate(&g, Engine::Oracle, Budget::unlimited()).unwrap().substitute(&ones).unwrap();
        let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (g.vertex_index(&e.tail).unwrap(), g.vertex_index(&e.head).unwrap())).collect();
        for skip in 0..pairs.len() {
            let rest: Vec<_> = pairs.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &p)| p).collect();
            let h = MultiGraph::from_pairs(g.vertices().len(), false, &rest);
            let fewer = e.evaluate(&h, Engine::Oracle, Budget::unlimited()).unwrap().substitute(&ones).unwrap();
            prop_assert!(fewer <= full);
        }
    }
}
