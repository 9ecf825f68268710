use gpk::corpus::{small_directed, small_undirected};
use gpk::logic::{Assignment, Formula};
use gpk::structures::{
    contract_directed_edge, contract_edge, delete_edge, delete_vertex, extract_edge, builtin_graph, ElementKind,
    IncidenceStructure, VocabTag, Vocabulary,
};
use gpk::translation::corpus::{exhaustive_fundamental, random_scheme, FormulaGen};
use gpk::translation::{
    contract_directed_scheme, contract_scheme, delete_directed_scheme, delete_scheme, extract_scheme, rank_bound,
    TranslationScheme,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn g2(name: &str) -> IncidenceStructure {
    IncidenceStructure::from_graph(&builtin_graph(name, false).unwrap(), VocabTag::Graph2).unwrap()
}

#[test]
fn surgeries_match_their_schemes_on_the_corpus() {
    let (del, con, ext) = (delete_scheme().compile().unwrap(), contract_scheme().compile().unwrap(), extract_scheme().compile().unwrap());
    for g in small_undirected() {
        let s = IncidenceStructure::from_graph(&g, VocabTag::Graph2).unwrap();
        for &x in s.universe() {
            let a = Assignment::new().with_fo("x", x);
            if s.kind(x) == ElementKind::Vertex {
                assert_eq!(del.apply(&s, &a).unwrap(), delete_vertex(&s, x).unwrap());
                continue;
            }
            let deleted = delete_edge(&s, x).unwrap();
            assert_eq!(del.apply(&s, &a).unwrap(), deleted);
            assert_eq!(ext.apply(&s, &a).unwrap(), extract_edge(&s, x).unwrap(), "{}", s.describe());
            let contracted = con.apply(&s, &a).unwrap();
            match contract_edge(&s, x) {
                Ok(c) => assert_eq!(contracted, c, "{}", s.describe()),
                // The scheme treats a loop like deletion.
                Err(_) => assert_eq!(contracted, deleted),
            }
            for out in [&deleted, &contracted] {
                assert!(out.len() < s.len());
                let order: Vec<_> = s.universe().iter().copied().filter(|y| out.contains(*y)).collect();
                assert_eq!(out.universe(), &order[..]);
            }
        }
    }
}

#[test]
fn directed_surgeries_match_their_schemes() {
    let (del, con) = (delete_directed_scheme().compile().unwrap(), contract_directed_scheme().compile().unwrap());
    for g in small_directed() {
        let s = IncidenceStructure::from_graph(&g, VocabTag::Directed2).unwrap();
        for &x in s.universe() {
            let a = Assignment::new().with_fo("x", x);
            assert_eq!(del.apply(&s, &a).unwrap(), s.restrict(|y| y != x));
            if s.kind(x) == ElementKind::Edge {
                assert_eq!(con.apply(&s, &a).unwrap(), contract_directed_edge(&s, x).unwrap(), "{}", s.describe());
            }
        }
    }
}

#[test]
fn fixed_suite_agrees_everywhere() {
    let report = exhaustive_fundamental().unwrap();
    assert!(report.passed(), "{} failures, first: {:?}", report.failures.len(), report.failures.first());
    assert!(report.checks > 10_000);
}

#[test]
fn composing_deletions_on_the_triangle() {
    let c3 = g2("c3");
    let d2 = delete_scheme().rename_params(&[("x", "x2")]).unwrap();
    let both = delete_scheme().compose(&d2).unwrap();
    let (e1, e2) = (c3.lookup("e1").unwrap(), c3.lookup("e2").unwrap());
    let a = Assignment::new().with_fo("x", e1).with_fo("x2", e2);
    let seq = delete_edge(&delete_edge(&c3, e1).unwrap(), e2).unwrap();
    assert_eq!(both.transduce(&c3, &a).unwrap(), seq);
}

#[test]
fn composing_deletion_and_contraction_on_p3() {
    let p3 = g2("p3");
    let c2 = contract_scheme().rename_params(&[("x", "x2")]).unwrap();
    let both = delete_scheme().compose(&c2).unwrap();
    let (e1, e2) = (p3.lookup("e1").unwrap(), p3.lookup("e2").unwrap());
    let a = Assignment::new().with_fo("x", e1).with_fo("x2", e2);
    let seq = contract_edge(&delete_edge(&p3, e1).unwrap(), e2).unwrap();
    assert_eq!(both.transduce(&p3, &a).unwrap(), seq);
}

#[test]
fn identity_composition_is_semantically_neutral() {
    let id = TranslationScheme::identity(&Vocabulary::graph2());
    for s in ["k3", "p3", "loop1", "k2-double"] {
        let s = g2(s);
        for &x in s.universe() {
            let a = Assignment::new().with_fo("x", x);
            let expect = extract_scheme().transduce(&s, &a).unwrap();
            assert_eq!(id.compose(&extract_scheme()).unwrap().transduce(&s, &a).unwrap(), expect);
            assert_eq!(extract_scheme().compose(&id).unwrap().transduce(&s, &a).unwrap(), expect);
        }
    }
}

#[test]
fn quantifier_rank_bound_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..300 {
        let param = if i % 2 == 0 { Some("x") } else { None };
        let scheme = random_scheme(&mut rng, "r", param);
        let theta: Formula = FormulaGen::new(&mut rng, i % 3 == 0).formula(4, &[], &[]);
        let translated = scheme.translate(&theta).unwrap();
        assert!(translated.quantifier_rank() <= rank_bound(&scheme, &theta), "{scheme} / {theta}");
    }
    for scheme in [delete_scheme(), contract_scheme(), extract_scheme()] {
        let theta = gpk::logic::parse("(exists a (forall b (rel N a b)))", &Vocabulary::graph2()).unwrap();
        let t = scheme.translate(&theta).unwrap();
        assert!(t.quantifier_rank() <= theta.quantifier_rank() + scheme.quantifier_rank() + scheme.params().len());
    }
}
