//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test -p gpk-core --test acceptance`.

use std::collections::BTreeMap;
use std::time::Instant;

use gpk::budget::Budget;
use gpk::catalog::{self, entry, index_shift, renaming_invariance};
use gpk::corpus::{edges_first_orders, multigraphs, small_directed, small_undirected};
use gpk::logic::{check_native_agreement, parse, Assignment, NativeKind, SetDomain};
use gpk::polyring::{eval_expr, factorial_of_card, falling_factorial, Polynomial};
use gpk::recurrence::check_order_invariance;
use gpk::structures::{IncidenceStructure, MultiGraph, VocabTag, Vocabulary};
use gpk::synthesis::{equivalence_check, ExpansionEvaluator, GuardMode};
use gpk::translation::corpus::{exhaustive_fundamental, random_composition, random_fundamental};

/// Exact equality everywhere: polynomials are compared term by term with integer coefficients.
const TOLERANCE: usize = 0;
const SEED: u64 = 2024;
const ORDER_LIMIT: usize = 720;
const ORDER_SAMPLES: usize = 20;
const FUNDAMENTAL_RANDOM_TRIALS: usize = 500;
const COMPOSITION_TRIALS: usize = 100;
const MAX_RANDOM_SIZE: usize = 4;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

#[allow(clippy::absurd_extreme_comparisons)]
fn outcome(failures: &[String], checked: usize, what: &str) -> Outcome {
    let pass = failures.len() <= TOLERANCE;
    let mut detail = format!("{checked} {what}, {} mismatches", failures.len());
    if let Some(first) = failures.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    Outcome { pass, detail }
}

/// Maps `f` over `items` on all cores, keeping input order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let chunk = items.len().div_ceil(threads).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| scope.spawn(|| c.iter().map(&f).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn label(g: &MultiGraph) -> String {
    g.to_text().lines().skip(1).collect::<Vec<_>>().join("; ")
}

fn criterion_1() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut check = |name: &str, g: MultiGraph, expected: Polynomial| {
        let e = entry(name).unwrap();
        for engine in e.engines() {
            checked += 1;
            match e.evaluate(&g, engine, Budget::unlimited()) {
                Ok(p) if p == expected => {}
                other => failures.push(format!("{name} on {} via {engine}: {other:?}", label(&g))),
            }
        }
    };
    let var = Polynomial::var;
    for (name, e1) in [("potts", var("q")), ("matching", var("X")), ("tutte", Polynomial::one()), ("xi", var("X"))] {
        check(name, MultiGraph::edgeless(1, false), e1);
        check(name, MultiGraph::edgeless(0, false), Polynomial::one());
    }
    check("cover", MultiGraph::edgeless(0, true), Polynomial::one());
    for n in 1..=5u32 {
        let expected: Polynomial = (0..n as i64).map(|k| var("X") - Polynomial::constant(k)).product();
        check("cover", MultiGraph::edgeless(n as usize, true), expected);
    }
    outcome(&failures, checked, "engine evaluations")
}

fn criterion_2() -> Outcome {
    let undirected = small_undirected();
    let directed = small_directed();
    let mut failures = Vec::new();
    let mut checked = 0;
    for name in ["matching", "tutte", "potts", "xi", "cover"] {
        let e = entry(name).unwrap();
        let corpus = if e.is_directed() { &directed } else { &undirected };
        let results = par_map(corpus, |g| match e.agreement(g, Budget::unlimited()) {
            Ok(values) if values.len() == 3 && values.iter().all(|v| v.1 == values[0].1) => None,
            Ok(values) => Some(format!("{name} on {}: {values:?}", label(g))),
            Err(err) => Some(format!("{name} on {}: {err}", label(g))),
        });
        checked += corpus.len();
        failures.extend(results.into_iter().flatten());
    }
    outcome(&failures, checked, "graphs (recursive = expansion = oracle)")
}

fn criterion_3() -> Outcome {
    let undirected = small_undirected();
    let directed = small_directed();
    let mut failures = Vec::new();
    let (mut graphs, mut orders) = (0, 0);
    for e in catalog::catalog().iter().filter(|e| e.compiled().is_some()) {
        let def = e.compiled().unwrap();
        let corpus = if e.is_directed() { &directed } else { &undirected };
        let results = par_map(corpus, |g| {
            let s = e.structure(g).unwrap();
            let sample = edges_first_orders(&s, ORDER_LIMIT, ORDER_SAMPLES, SEED);
            debug_assert!(sample.iter().all(|o| def.order_valid(&s, o).unwrap()));
            let report = check_order_invariance(def, &s, &sample);
            let bad = (!report.is_invariant()).then(|| {
                format!("{} on {}: {} distinct, failures {:?}", e.name, label(g), report.distinct.len(), report.failures)
            });
            (report.orders, bad)
        });
        graphs += corpus.len();
        for (n, bad) in results {
            orders += n;
            failures.extend(bad);
        }
    }
    outcome(&failures, graphs, &format!("graphs over {orders} valid orders"))
}

fn criterion_4() -> Outcome {
    let fixed = exhaustive_fundamental().unwrap();
    let random = random_fundamental(FUNDAMENTAL_RANDOM_TRIALS, MAX_RANDOM_SIZE, SEED).unwrap();
    let failures: Vec<String> = fixed.failures.iter().chain(&random.failures).cloned().collect();
    outcome(&failures, fixed.checks + random.checks, "fixed-suite checks and random triples")
}

fn criterion_5() -> Outcome {
    let report = random_composition(COMPOSITION_TRIALS, MAX_RANDOM_SIZE, SEED).unwrap();
    outcome(&report.failures, report.checks, "composition triples")
}

/// Every labeled multigraph with at most `max_size` vertices plus edges, as structures.
fn bounded_universe(max_size: usize, directed: bool, tag: VocabTag) -> Vec<IncidenceStructure> {
    (0..=max_size)
        .flat_map(|n| multigraphs(n, max_size - n, directed).into_iter().filter(move |g| g.vertices().len() == n))
        .map(|g| {
            let s = IncidenceStructure::from_graph(&g, tag).unwrap();
            s.reordered(&s.edges_first_order()).unwrap()
        })
        .collect()
}

fn synthesis_sweep(name: &str, corpus: &[IncidenceStructure]) -> (usize, Vec<String>) {
    let def = entry(name).unwrap().recursive().unwrap();
    let ev = ExpansionEvaluator::new(def, GuardMode::Direct).unwrap();
    let reports = par_map(&corpus.chunks(16).collect::<Vec<_>>(), |chunk| {
        equivalence_check(&ev, chunk, Budget::unlimited()).unwrap()
    });
    let failures = reports.iter().flat_map(|r| r.mismatches.iter().map(|m| format!("{name}: {m}"))).collect();
    (reports.iter().map(|r| r.instances).sum(), failures)
}

fn criterion_6() -> Outcome {
    let six = bounded_universe(6, false, VocabTag::Graph2);
    let five = bounded_universe(5, false, VocabTag::Graph2);
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, corpus) in [("potts", &six), ("matching", &six), ("xi", &five)] {
        let (n, f) = synthesis_sweep(name, corpus);
        checked += n;
        failures.extend(f);
    }
    outcome(&failures, checked, "instances (value and colorings = leaves)")
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut sweep = |name: &str, graphs: &[MultiGraph]| {
        let e = entry(name).unwrap();
        let ev = ExpansionEvaluator::new(e.recursive().unwrap(), GuardMode::Direct).unwrap();
        let results = par_map(graphs, |g| {
            let s = e.structure(g).unwrap();
            let got = ev.evaluate(&s).unwrap().value;
            let want = e.oracle(g);
            (got != want).then(|| format!("{name} on {}: synthesized {got}, oracle {want}", label(g)))
        });
        checked += graphs.len();
        failures.extend(results.into_iter().flatten());
    };
    sweep("xi", &multigraphs(3, 3, false));
    sweep("cover", &small_directed());
    let loop1 = MultiGraph::from_pairs(1, true, &[(0, 0)]);
    let e = entry("cover").unwrap();
    let ev = ExpansionEvaluator::new(e.recursive().unwrap(), GuardMode::Direct).unwrap();
    let got = ev.evaluate(&e.structure(&loop1).unwrap()).unwrap().value;
    checked += 1;
    if got != "X + Y".parse().unwrap() {
        failures.push(format!("cover on a single loop: {got}, expected X + Y"));
    }
    outcome(&failures, checked, "synthesized-vs-oracle instances")
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    let u = entry("noble-welsh").unwrap();
    for n in 1..=5 {
        let out = renaming_invariance(u, &MultiGraph::edgeless(n, false), &index_shift(n)).unwrap();
        checked += 1;
        if out.invariant() {
            failures.push(format!("U on E_{n} stayed invariant under the index shift: {}", out.original));
        }
    }
    let swap = |a: &str, b: &str| BTreeMap::from([(a.to_string(), b.to_string()), (b.to_string(), a.to_string())]);
    let corpus = small_undirected();
    for (name, map) in [("potts", swap("q", "v")), ("matching", swap("X", "Y"))] {
        let e = entry(name).unwrap();
        let results = par_map(&corpus, |g| {
            let out = renaming_invariance(e, g, &map).unwrap();
            (!out.invariant()).then(|| format!("{name} on {}: not invariant", label(g)))
        });
        checked += corpus.len();
        failures.extend(results.into_iter().flatten());
    }
    outcome(&failures, checked, "renaming instances")
}

fn criterion_9() -> Outcome {
    let mut failures = Vec::new();
    let guard = || parse("(PV w)", &Vocabulary::graph2()).unwrap();
    let ff = falling_factorial(Polynomial::var("X"), &["w"], guard());
    let fact = factorial_of_card(&["w"], guard());
    let expected_ff = ["1", "X", "X^2 - X", "X^3 - 3*X^2 + 2*X"];
    let expected_fact = [1, 1, 2, 6, 24];
    for (n, &want_fact) in expected_fact.iter().enumerate() {
        let s = IncidenceStructure::from_graph(&MultiGraph::edgeless(n, false), VocabTag::Graph2).unwrap();
        if let Some(want) = expected_ff.get(n) {
            let got = eval_expr(&ff, &s, &Assignment::new()).unwrap();
            if got != want.parse().unwrap() {
                failures.push(format!("falling factorial with census {n}: {got}, expected {want}"));
            }
        }
        let got = eval_expr(&fact, &s, &Assignment::new()).unwrap();
        if got != Polynomial::constant(want_fact) {
            failures.push(format!("factorial of census {n}: {got}, expected {want_fact}"));
        }
    }
    outcome(&failures, expected_ff.len() + expected_fact.len(), "builder evaluations")
}

fn criterion_10() -> Outcome {
    let undirected_kinds =
        [NativeKind::ConnectedVia, NativeKind::Cycle, NativeKind::Touching, NativeKind::LastInComp, NativeKind::Bridge];
    let structures = |directed: bool, tag: VocabTag| -> Vec<IncidenceStructure> {
        multigraphs(4, 4, directed).iter().map(|g| IncidenceStructure::from_graph(g, tag).unwrap()).collect()
    };
    let mut failures = Vec::new();
    let mut checked = 0;
    let runs: [(&[NativeKind], Vec<IncidenceStructure>); 2] = [
        (&undirected_kinds, structures(false, VocabTag::Graph2)),
        (&[NativeKind::CyclePathCover], structures(true, VocabTag::Directed2)),
    ];
    for (kinds, corpus) in &runs {
        let results = par_map(corpus, |s| {
            kinds.iter().map(|&k| check_native_agreement(k, s, SetDomain::Homogeneous).unwrap()).fold((0, Vec::new()), |(n, mut f), r| {
                f.extend(r.mismatches.into_iter().map(|m| format!("{}: {m}", s.describe())));
                (n + r.checked, f)
            })
        });
        for (n, f) in results {
            checked += n;
            failures.extend(f);
        }
    }
    outcome(&failures, checked, "argument choices")
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("initial conditions", criterion_1),
        ("three-way engine agreement", criterion_2),
        ("order invariance", criterion_3),
        ("fundamental property", criterion_4),
        ("composition of schemes", criterion_5),
        ("synthesized expansion equals recursion", criterion_6),
        ("synthesized xi and cover against oracles", criterion_7),
        ("renaming non-invariance of U", criterion_8),
        ("combinatorial builders", criterion_9),
        ("native and second-order predicates agree", criterion_10),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !filter.is_empty() && !filter.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {number:>2} {verdict}: {name} ({}; {:.1}s)", o.detail, start.elapsed().as_secs_f64());
        failed += !o.pass as usize;
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
