//! Fixed and seeded random suites linking Φ* and Φ♯.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    contract_scheme, delete_scheme, extract_scheme, surgery_parser, TranslationError, TranslationScheme,
};
use crate::corpus::multigraphs;
use crate::logic::{evaluate, expand_natives, Assignment, Formula, Term};
use crate::structures::{ElementKind, IncidenceStructure, VocabTag, Vocabulary};

/// Outcome of a batch of checks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkReport {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl LinkReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(detail());
        }
    }
}

const SCHEMES: &[&str] = &[
    "(scheme keep-vertices (domain (y) (PV y)) (relation N (y z) (rel N y z)))",
    "(scheme reverse (domain (y) true) (relation N (y z) (rel N z y)))",
    "(scheme around (params x) (domain (y) (or (= y x) (rel N y x) (rel N x y))) (relation N (y z) (rel N y z)))",
    "(scheme square (domain (y) true) (relation N (y z) (exists w (and (rel N y w) (rel N w z)))))",
    "(scheme drop-first (domain (y) (exists w (rel O w y))) (relation N (y z) (rel N y z)))",
    "(scheme complement (params x) (domain (y) (not (= y x))) (relation N (y z) (and (not (rel N y z)) (not (= y z)))))",
];

const FORMULAS: &[&str] = &[
    "(exists (a b) (rel N a b))",
    "(forall a (implies (PE a) (exists b (rel N b a))))",
    "(exists a (loop a))",
    "(forall (a b) (implies (rel O a b) (not (rel N b a))))",
    "(existsR U 1 (and (exists a (rvar U a)) (forall a (implies (rvar U a) (exists b (rel N a b))))))",
    "(forallR U 1 (implies (exists a (rvar U a)) (exists (a b) (and (rvar U a) (or (rel N a b) (rel N b a))))))",
    "(existsR R 2 (and (forall (a b) (implies (rvar R a b) (rel N a b))) (forall a (implies (exists b (rel N a b)) (exists b (rvar R a b)))) (forall (a b c) (implies (and (rvar R a b) (rvar R a c)) (= b c)))))",
    "(exists-exactly 2 a (PV a))",
    "(forall (a b) (implies (and (PV a) (PV b)) (connected-via E a b)))",
    "(exists a (and (PV a) (forall b (implies (not (= b a)) (rel O b a)))))",
];

/// The ten hand-written schemes of the fixed suite.
pub fn fundamental_schemes() -> Vec<TranslationScheme> {
    let vocab = Vocabulary::graph2();
    let p = surgery_parser(&vocab).expect("built-in definitions parse");
    let mut out = vec![TranslationScheme::identity(&vocab), delete_scheme(), contract_scheme(), extract_scheme()];
    out.extend(SCHEMES.iter().map(|t| TranslationScheme::parse(t, &p).expect("built-in scheme parses")));
    out
}

/// The ten sentences of the fixed suite.
pub fn fundamental_formulas() -> Vec<Formula> {
    let p = crate::logic::FormulaParser::new(&Vocabulary::graph2());
    FORMULAS.iter().map(|t| p.parse_formula(t).expect("built-in formula parses")).collect()
}

/// Every incidence structure of a multigraph with at most 4 elements, in declaration order and
/// reversed, followed by every structure with an arbitrary binary `N` on at most 3 elements.
pub fn fundamental_structures() -> Vec<IncidenceStructure> {
    let mut out = Vec::new();
    for g in multigraphs(4, 4, false) {
        if g.vertices().len() + g.edges().len() > 4 {
            continue;
        }
        let s = IncidenceStructure::from_graph(&g, VocabTag::Graph2).expect("undirected graph");
        let mut rev = s.universe().to_vec();
        rev.reverse();
        let r = s.reordered(&rev).expect("permutation");
        out.push(s);
        if rev.len() > 1 {
            out.push(r);
        }
    }
    for n in 0..=3usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
        for mask in 0u32..1 << pairs.len() {
            let chosen: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
            out.push(arbitrary_structure(n, &chosen));
        }
    }
    out
}

/// A {N}-structure on `a1..an` with the given pairs.
pub fn arbitrary_structure(n: usize, pairs: &[(usize, usize)]) -> IncidenceStructure {
    let names: Vec<String> = (1..=n).map(|i| format!("a{i}")).collect();
    let elements: Vec<(&str, ElementKind)> = names.iter().map(|s| (s.as_str(), ElementKind::Vertex)).collect();
    let tuples: Vec<Vec<&str>> = pairs.iter().map(|&(a, b)| vec![names[a].as_str(), names[b].as_str()]).collect();
    IncidenceStructure::from_named(Vocabulary::graph2(), &elements, &[("N", tuples)]).expect("valid structure")
}

/// `M ⊨ Φ♯(θ)` and `Φ*(M) ⊨ θ` for every assignment of the scheme's parameters.
pub fn check_link(
    scheme: &TranslationScheme,
    theta: &Formula,
    translated: &Formula,
    s: &IncidenceStructure,
    report: &mut LinkReport,
) -> Result<(), TranslationError> {
    let theta = expand_natives(theta, scheme.target())?;
    let compiled = scheme.compile()?;
    for a in parameter_assignments(scheme, s) {
        let image = compiled.apply(s, &a)?;
        let lhs = evaluate(s, &a, translated)?;
        let rhs = evaluate(&image, &Assignment::new(), &theta)?;
        report.record(lhs == rhs, || {
            let xs: Vec<String> = a.fo.iter().map(|(k, v)| format!("{k}={}", s.name(*v))).collect();
            format!("{} on {} [{}] with {theta}: translated {lhs}, transduced {rhs}", scheme.name(), s.describe(), xs.join(","))
        });
    }
    Ok(())
}

/// All assignments of parameters to universe elements.
fn parameter_assignments(scheme: &TranslationScheme, s: &IncidenceStructure) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for p in scheme.params() {
        out = out
            .into_iter()
            .flat_map(|a| s.universe().iter().map(move |&x| a.clone().with_fo(p, x)).collect::<Vec<_>>())
            .collect();
    }
    out
}

/// The fixed 10 × 10 suite over [`fundamental_structures`].
pub fn exhaustive_fundamental() -> Result<LinkReport, TranslationError> {
    let structures = fundamental_structures();
    let mut report = LinkReport::default();
    for scheme in fundamental_schemes() {
        for theta in fundamental_formulas() {
            let translated = scheme.translate(&theta)?;
            for s in &structures {
                check_link(&scheme, &theta, &translated, s, &mut report)?;
            }
        }
    }
    Ok(report)
}

/// Random formulas over `{N}` with order; terms come from `pool` plus the variables bound on
/// the way down.
pub struct FormulaGen<'r> {
    rng: &'r mut ChaCha8Rng,
    fresh: usize,
    so: bool,
}

impl<'r> FormulaGen<'r> {
    pub fn new(rng: &'r mut ChaCha8Rng, allow_relation_quantifiers: bool) -> Self {
        FormulaGen { rng, fresh: 0, so: allow_relation_quantifiers }
    }

    fn term(&mut self, pool: &[Term]) -> Term {
        pool.choose(self.rng).expect("non-empty pool").clone()
    }

    /// A formula of quantifier depth at most `depth` over the terms in `pool`, with unary
    /// relation variables from `sets` usable.
    pub fn formula(&mut self, depth: usize, pool: &[Term], sets: &[String]) -> Formula {
        let leaf = depth == 0 || (!pool.is_empty() && self.rng.gen_bool(0.3));
        if leaf {
            if pool.is_empty() {
                return if self.rng.gen_bool(0.5) { Formula::True } else { Formula::False };
            }
            let pick = self.rng.gen_range(0..if sets.is_empty() { 4 } else { 5 });
            return match pick {
                0 | 1 => Formula::Rel("N".into(), vec![self.term(pool), self.term(pool)]),
                2 => Formula::Eq(self.term(pool), self.term(pool)),
                3 => Formula::Less(self.term(pool), self.term(pool)),
                _ => Formula::RelVar(sets.choose(self.rng).expect("non-empty").clone(), vec![self.term(pool)]),
            };
        }
        let top = if self.so { 8 } else { 7 };
        // Without terms only binders make progress.
        let low = if pool.is_empty() { 4 } else { 0 };
        match self.rng.gen_range(low..top) {
            0 => Formula::not(self.formula(depth - 1, pool, sets)),
            1 => Formula::and(self.formula(depth - 1, pool, sets), self.formula(depth - 1, pool, sets)),
            2 => Formula::or(self.formula(depth - 1, pool, sets), self.formula(depth - 1, pool, sets)),
            3 => Formula::implies(self.formula(depth - 1, pool, sets), self.formula(depth - 1, pool, sets)),
            4..=6 => {
                self.fresh += 1;
                let v = format!("b{}", self.fresh);
                let mut inner = pool.to_vec();
                inner.push(Term::var(&v));
                let body = self.formula(depth - 1, &inner, sets);
                if self.rng.gen_bool(0.5) {
                    Formula::exists(&v, body)
                } else {
                    Formula::forall(&v, body)
                }
            }
            _ => {
                self.fresh += 1;
                let u = format!("U{}", self.fresh);
                let mut inner = sets.to_vec();
                inner.push(u.clone());
                let body = self.formula(depth - 1, pool, &inner);
                if self.rng.gen_bool(0.5) {
                    Formula::ExistsRel(u, 1, Box::new(body))
                } else {
                    Formula::ForallRel(u, 1, Box::new(body))
                }
            }
        }
    }
}

/// A random first-order scheme over `{N}`, with parameter `param` when given.
pub fn random_scheme(rng: &mut ChaCha8Rng, name: &str, param: Option<&str>) -> TranslationScheme {
    let vocab = Vocabulary::graph2();
    let extra: Vec<Term> = param.map(|p| Term::Const(p.to_string())).into_iter().collect();
    let mut g = FormulaGen::new(rng, false);
    let mut dpool = vec![Term::var("y")];
    dpool.extend(extra.iter().cloned());
    let domain = g.formula(2, &dpool, &[]);
    let mut rpool = vec![Term::var("y"), Term::var("z")];
    rpool.extend(extra.iter().cloned());
    let rel = g.formula(2, &rpool, &[]);
    let params: Vec<&str> = param.into_iter().collect();
    TranslationScheme::new(name, &vocab, &vocab, &params, ("y", domain), vec![(vec!["y".into(), "z".into()], rel)])
        .expect("generated scheme is well formed")
}

/// A random `{N}`-structure on at most `max_size` elements.
pub fn random_structure(rng: &mut ChaCha8Rng, max_size: usize) -> IncidenceStructure {
    let n = rng.gen_range(0..=max_size);
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|_| rng.gen_bool(0.35)).collect::<Vec<_>>();
    arbitrary_structure(n, &pairs)
}

/// `trials` seeded (scheme, sentence, structure) triples.
pub fn random_fundamental(trials: usize, max_size: usize, seed: u64) -> Result<LinkReport, TranslationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LinkReport::default();
    for i in 0..trials {
        let param = if rng.gen_bool(0.5) { Some("x") } else { None };
        let scheme = random_scheme(&mut rng, &format!("random{i}"), param);
        let theta = FormulaGen::new(&mut rng, true).formula(3, &[], &[]);
        let theta = if theta.free_fo().is_empty() { theta } else { Formula::True };
        let s = random_structure(&mut rng, max_size);
        let translated = scheme.translate(&theta)?;
        let mut one = LinkReport::default();
        check_link(&scheme, &theta, &translated, &s, &mut one)?;
        // A triple counts once, however many parameter values it was checked under.
        report.checks += 1;
        report.failures.extend(one.failures);
    }
    Ok(report)
}

/// `trials` seeded (Φ₁, Φ₂, structure) triples: transducing by the composition equals
/// transducing twice, for every parameter choice where both sides are defined.
pub fn random_composition(trials: usize, max_size: usize, seed: u64) -> Result<LinkReport, TranslationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fixed = fundamental_schemes();
    let mut report = LinkReport::default();
    for i in 0..trials {
        let pick = |rng: &mut ChaCha8Rng, tag: &str, param: &str| {
            if rng.gen_bool(0.5) {
                let p = if rng.gen_bool(0.5) { Some(param) } else { None };
                random_scheme(rng, &format!("{tag}{i}"), p)
            } else {
                let s = fixed.choose(rng).expect("non-empty").clone();
                s.rename_params(&[("x", param)]).expect("renaming keeps the scheme well formed")
            }
        };
        let first = pick(&mut rng, "first", "x1");
        let second = pick(&mut rng, "second", "x2");
        let composed = first.compose(&second)?;
        let s = if rng.gen_bool(0.5) {
            random_structure(&mut rng, max_size)
        } else {
            let gs = multigraphs(3, 2, false);
            let g = gs.choose(&mut rng).expect("non-empty");
            IncidenceStructure::from_graph(g, VocabTag::Graph2).expect("undirected graph")
        };
        let mut ok = true;
        let mut detail = String::new();
        for a in parameter_assignments(&first, &s) {
            let mid = first.transduce(&s, &a)?;
            for b in parameter_assignments(&second, &mid) {
                let mut both = a.clone();
                both.fo.extend(b.fo.clone());
                let direct = composed.transduce(&s, &both)?;
                let sequential = second.transduce(&mid, &b)?;
                if direct != sequential && ok {
                    ok = false;
                    detail = format!(
                        "{} then {} on {}: composed {} vs sequential {}",
                        first.name(),
                        second.name(),
                        s.describe(),
                        direct.describe(),
                        sequential.describe()
                    );
                }
            }
        }
        report.record(ok, || detail);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_shapes() {
        assert_eq!(fundamental_schemes().len(), 10);
        assert_eq!(fundamental_formulas().len(), 10);
        assert!(fundamental_formulas().iter().all(|f| f.free_fo().is_empty() && f.free_so().is_empty()));
    }

    #[test]
    fn random_triples_agree() {
        let r = random_fundamental(60, 3, 11).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert_eq!(r.checks, 60);
    }

    #[test]
    fn random_compositions_agree() {
        let r = random_composition(30, 3, 5).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
    }
}
