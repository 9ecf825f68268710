//! The shipped polynomials. Each has a subset expansion and a brute-force oracle; all but
//! Noble–Welsh U also have a recursive definition.

pub mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

use crate::budget::{Budget, BudgetExceeded};
use crate::logic::{read_all, Assignment};
use crate::polyring::{eval_expr, PolyError, PolyExpr, PolyParser, Polynomial};
use crate::recurrence::{CompiledDefinition, RecurrenceError, RecursiveDefinition, RecursiveEvaluator};
use crate::structures::{IncidenceStructure, MultiGraph, StructureError, VocabTag, Vocabulary};
use crate::synthesis::{ExpansionEvaluator, GuardMode, SynthesisError};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown polynomial `{0}` (known: matching, tutte, potts, xi, cover, noble-welsh)")]
    UnknownEntry(String),
    #[error("`{0}` has no recursive definition")]
    NoRecursive(String),
    #[error("unknown engine `{0}` (expected recursive, expansion, oracle or synthesized)")]
    UnknownEngine(String),
    #[error("`{name}` expects a {expected} graph")]
    Directedness { name: String, expected: &'static str },
    #[error("renaming is not injective on the indeterminates of `{0}`")]
    NotInjective(String),
    #[error("bad catalog source: {0}")]
    Source(String),
    #[error(transparent)]
    Recurrence(#[from] RecurrenceError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
}

type Result<T> = std::result::Result<T, CatalogError>;

/// The four ways to compute a catalog polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    /// Deconstruction tree of the recursive definition.
    Recursive,
    /// The hand-written subset expansion.
    Expansion,
    /// Direct enumeration on the graph.
    Oracle,
    /// The expansion synthesized from the recursive definition (marker colorings).
    Synthesized,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Recursive, Engine::Expansion, Engine::Oracle, Engine::Synthesized];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Recursive => "recursive",
            Engine::Expansion => "expansion",
            Engine::Oracle => "oracle",
            Engine::Synthesized => "synthesized",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| CatalogError::UnknownEngine(s.to_string()))
    }
}

/// How an entry's expansion is obtained.
#[derive(Debug, Clone)]
pub enum Expansion {
    Fixed(PolyExpr),
    /// One indeterminate per component size, so the expression depends on the vertex count.
    BySize,
}

pub struct PolynomialEntry {
    pub name: &'static str,
    pub tag: VocabTag,
    indeterminates: &'static [&'static str],
    recursive: Option<(RecursiveDefinition, CompiledDefinition)>,
    expansion: Expansion,
    oracle: fn(&MultiGraph) -> Polynomial,
    pub notes: &'static str,
}

impl fmt::Debug for PolynomialEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolynomialEntry").field("name", &self.name).field("tag", &self.tag).finish_non_exhaustive()
    }
}

const POTTS: &str = include_str!("definitions/potts.sexp");
const MATCHING: &str = include_str!("definitions/matching.sexp");
const TUTTE: &str = include_str!("definitions/tutte.sexp");
const XI: &str = include_str!("definitions/xi.sexp");
const COVER: &str = include_str!("definitions/cover.sexp");
const EXPANSIONS: &str = include_str!("expansions.sexp");

/// Source text of a shipped definition file, by entry name.
pub fn definition_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "potts" => POTTS,
        "matching" => MATCHING,
        "tutte" => TUTTE,
        "xi" => XI,
        "cover" => COVER,
        _ => return None,
    })
}

/// Parses the `(expansion NAME VOCAB expr)` forms of the shipped expansions file.
pub fn parse_expansions(text: &str) -> Result<BTreeMap<String, PolyExpr>> {
    let mut out = BTreeMap::new();
    for form in read_all(text).map_err(PolyError::from)? {
        let bad = || CatalogError::Source(format!("{}: expected (expansion NAME VOCAB expr)", form.pos()));
        match form.list() {
            Some([head, name, vocab, body]) if head.atom() == Some("expansion") => {
                let vocab = vocab.atom().and_then(Vocabulary::by_name).ok_or_else(bad)?;
                let name = name.atom().ok_or_else(bad)?;
                out.insert(name.to_string(), PolyParser::over(&vocab).expr(body)?);
            }
            _ => return Err(bad()),
        }
    }
    Ok(out)
}

/// The Noble–Welsh expansion with one `(size, indeterminate)` pair per tracked component size:
/// each component of (V, A) with that many vertices contributes the indeterminate, and every
/// edge of A closing a cycle contributes Y.
pub fn noble_welsh_expansion(pairs: &[(usize, String)]) -> Result<PolyExpr> {
    let mut factors: Vec<String> = pairs
        .iter()
        .map(|(i, x)| format!("(prod-over (w) (and (last-in-comp w V A) (component-size w A {i})) (const {x}))"))
        .collect();
    factors.push("(prod-over (e) (cyclomatic-edge e A) (const Y))".into());
    let text = format!("(sum-rel ((A 1)) (subset A E) (prod {}))", factors.join(" "));
    Ok(PolyParser::over(&Vocabulary::graph2()).parse(&text)?)
}

fn build() -> Result<Vec<PolynomialEntry>> {
    let mut expansions = parse_expansions(EXPANSIONS)?;
    let mut take = |name: &str| {
        expansions.remove(name).map(Expansion::Fixed).ok_or_else(|| CatalogError::Source(format!("no expansion for {name}")))
    };
    let rec = |text: &str| -> Result<_> {
        let def = RecursiveDefinition::parse(text)?;
        let compiled = def.compile()?;
        Ok(Some((def, compiled)))
    };
    Ok(vec![
        PolynomialEntry {
            name: "matching",
            tag: VocabTag::Graph2,
            indeterminates: &["X", "Y"],
            recursive: rec(MATCHING)?,
            expansion: take("matching")?,
            oracle: oracles::matching,
            notes: "bivariate matching polynomial; coefficient of X^(n-2i) Y^i counts i-matchings; M(E1) = X",
        },
        PolynomialEntry {
            name: "tutte",
            tag: VocabTag::Graph2,
            indeterminates: &["X", "Y"],
            recursive: rec(TUTTE)?,
            expansion: take("tutte")?,
            oracle: oracles::tutte,
            notes: "spanning-forest activity expansion; T(E1) = 1, T(loop) = Y, T(bridge) = X",
        },
        PolynomialEntry {
            name: "potts",
            tag: VocabTag::Graph2,
            indeterminates: &["q", "v"],
            recursive: rec(POTTS)?,
            expansion: take("potts")?,
            oracle: oracles::potts,
            notes: "random cluster form q^k(A) v^|A|; Z(E1) = q; v = -1 gives the chromatic polynomial",
        },
        PolynomialEntry {
            name: "xi",
            tag: VocabTag::Graph2,
            indeterminates: &["X", "Y", "Z"],
            recursive: rec(XI)?,
            expansion: take("xi")?,
            oracle: oracles::xi,
            notes: "universal edge elimination polynomial; its Z-free part is Potts with q = X, v = Y",
        },
        PolynomialEntry {
            name: "cover",
            tag: VocabTag::Directed2,
            indeterminates: &["X", "Y"],
            recursive: rec(COVER)?,
            expansion: take("cover")?,
            oracle: oracles::cover,
            notes: "cover polynomial of a digraph; C(E_n) = X(X-1)...(X-n+1), C(single loop) = X + Y",
        },
        PolynomialEntry {
            name: "noble-welsh",
            tag: VocabTag::Graph2,
            indeterminates: &["X1", "...", "Xn", "Y"],
            recursive: None,
            expansion: Expansion::BySize,
            oracle: oracles::noble_welsh,
            notes: "Noble-Welsh U with component-size indeterminates; not invariant under renaming, no recursion",
        },
    ])
}

/// Every shipped entry, parsed and compiled once.
pub fn catalog() -> &'static [PolynomialEntry] {
    static CATALOG: OnceLock<Vec<PolynomialEntry>> = OnceLock::new();
    CATALOG.get_or_init(|| build().expect("shipped catalog sources are valid"))
}

pub fn entry(name: &str) -> Result<&'static PolynomialEntry> {
    catalog().iter().find(|e| e.name == name).ok_or_else(|| CatalogError::UnknownEntry(name.to_string()))
}

impl PolynomialEntry {
    pub fn is_directed(&self) -> bool {
        self.tag == VocabTag::Directed2
    }

    pub fn recursive(&self) -> Option<&RecursiveDefinition> {
        self.recursive.as_ref().map(|r| &r.0)
    }

    pub fn compiled(&self) -> Option<&CompiledDefinition> {
        self.recursive.as_ref().map(|r| &r.1)
    }

    /// Indeterminates of the polynomial on a graph with `n` vertices.
    pub fn indeterminates(&self, n: usize) -> Vec<String> {
        match self.expansion {
            Expansion::Fixed(_) => self.indeterminates.iter().map(|s| s.to_string()).collect(),
            Expansion::BySize => {
                oracles::noble_welsh_pairs(n).into_iter().map(|p| p.1).chain(["Y".to_string()]).collect()
            }
        }
    }

    /// The expansion for a structure with `n` vertices.
    pub fn expansion(&self, n: usize) -> Result<PolyExpr> {
        match &self.expansion {
            Expansion::Fixed(e) => Ok(e.clone()),
            Expansion::BySize => noble_welsh_expansion(&oracles::noble_welsh_pairs(n)),
        }
    }

    pub fn engines(&self) -> Vec<Engine> {
        Engine::ALL.into_iter().filter(|e| self.supports(*e)).collect()
    }

    pub fn supports(&self, engine: Engine) -> bool {
        !matches!(engine, Engine::Recursive | Engine::Synthesized) || self.recursive.is_some()
    }

    /// The incidence structure of `graph`, with edges ordered before vertices.
    pub fn structure(&self, graph: &MultiGraph) -> Result<IncidenceStructure> {
        if graph.is_directed() != self.is_directed() {
            let expected = if self.is_directed() { "directed" } else { "undirected" };
            return Err(CatalogError::Directedness { name: self.name.to_string(), expected });
        }
        let s = IncidenceStructure::from_graph(graph, self.tag)?;
        Ok(s.reordered(&s.edges_first_order())?)
    }

    pub fn oracle(&self, graph: &MultiGraph) -> Polynomial {
        (self.oracle)(graph)
    }

    /// Evaluates on `graph` with the given engine, using the edges-first order.
    pub fn evaluate(&self, graph: &MultiGraph, engine: Engine, budget: Budget) -> Result<Polynomial> {
        let s = self.structure(graph)?;
        self.evaluate_structure(&s, graph, engine, budget)
    }

    /// Evaluates on a structure already built from `graph` (possibly reordered).
    pub fn evaluate_structure(
        &self,
        s: &IncidenceStructure,
        graph: &MultiGraph,
        engine: Engine,
        budget: Budget,
    ) -> Result<Polynomial> {
        let missing = || CatalogError::NoRecursive(self.name.to_string());
        Ok(match engine {
            Engine::Oracle => self.oracle(graph),
            Engine::Expansion => {
                budget.check()?;
                eval_expr(&self.expansion(graph.vertices().len())?, s, &Assignment::new())?
            }
            Engine::Recursive => {
                let def = self.compiled().ok_or_else(missing)?;
                RecursiveEvaluator::new(def).with_budget(budget).evaluate(s)?.value
            }
            Engine::Synthesized => {
                let def = self.recursive().ok_or_else(missing)?;
                ExpansionEvaluator::new(def, GuardMode::Direct)?.with_budget(budget).evaluate(s)?.value
            }
        })
    }

    /// Results of every engine except synthesis, which callers run separately because of its
    /// cost.
    pub fn agreement(&self, graph: &MultiGraph, budget: Budget) -> Result<Vec<(Engine, Polynomial)>> {
        let s = self.structure(graph)?;
        [Engine::Recursive, Engine::Expansion, Engine::Oracle]
            .into_iter()
            .filter(|e| self.supports(*e))
            .map(|e| Ok((e, self.evaluate_structure(&s, graph, e, budget)?)))
            .collect()
    }
}

/// Outcome of a renaming experiment on one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenamingOutcome {
    pub original: Polynomial,
    /// The polynomial computed with the renamed indeterminates.
    pub renamed_computation: Polynomial,
    /// The renaming applied to `original`.
    pub renamed_original: Polynomial,
}

impl RenamingOutcome {
    pub fn invariant(&self) -> bool {
        self.renamed_computation == self.renamed_original
    }
}

/// Index of an indexed indeterminate such as `X12`.
fn size_index(name: &str) -> Option<usize> {
    name.strip_prefix('X').and_then(|d| d.parse().ok()).filter(|&i| i > 0)
}

/// Compares computing with renamed indeterminates against renaming the result. For an
/// expansion with fixed indeterminates the renaming only relabels constants. For U an
/// indeterminate's index selects the component size it counts, so the renamed computation
/// attaches each new name to the size its index names.
pub fn renaming_invariance(
    entry: &PolynomialEntry,
    graph: &MultiGraph,
    map: &BTreeMap<String, String>,
) -> Result<RenamingOutcome> {
    let n = graph.vertices().len();
    let names = entry.indeterminates(n);
    let image = |x: &String| map.get(x).unwrap_or(x).clone();
    if names.iter().map(image).collect::<BTreeSet<_>>().len() != names.len() {
        return Err(CatalogError::NotInjective(entry.name.to_string()));
    }
    let s = entry.structure(graph)?;
    let original = eval_expr(&entry.expansion(n)?, &s, &Assignment::new())?;
    let renamed = match entry.expansion {
        Expansion::Fixed(ref e) => e.rename_indeterminates(map)?,
        Expansion::BySize => {
            let pairs: Vec<(usize, String)> = oracles::noble_welsh_pairs(n)
                .into_iter()
                .map(|(i, x)| {
                    let y = image(&x);
                    (size_index(&y).unwrap_or(i), y)
                })
                .collect();
            noble_welsh_expansion(&pairs)?.rename_indeterminates(
                &map.iter().filter(|(k, _)| size_index(k).is_none()).map(|(k, v)| (k.clone(), v.clone())).collect(),
            )?
        }
    };
    Ok(RenamingOutcome {
        renamed_computation: eval_expr(&renamed, &s, &Assignment::new())?,
        renamed_original: original.rename(map)?,
        original,
    })
}

/// The shift X_i -> X_(i+1) on the indexed indeterminates X1..Xn.
pub fn index_shift(n: usize) -> BTreeMap<String, String> {
    (1..=n).map(|i| (format!("X{i}"), format!("X{}", i + 1))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::builtin_graph;

    fn p(s: &str) -> Polynomial {
        s.parse().unwrap()
    }

    fn all_engines(name: &str, graph: &str) -> Vec<(Engine, Polynomial)> {
        let e = entry(name).unwrap();
        let g = builtin_graph(graph, e.is_directed()).unwrap();
        e.engines().into_iter().map(|x| (x, e.evaluate(&g, x, Budget::unlimited()).unwrap())).collect()
    }

    fn assert_all(name: &str, graph: &str, expected: &str) {
        for (engine, value) in all_engines(name, graph) {
            assert_eq!(value, p(expected), "{name} on {graph} via {engine}");
        }
    }

    #[test]
    fn catalog_builds() {
        assert_eq!(catalog().len(), 6);
        assert!(entry("noble-welsh").unwrap().recursive().is_none());
        assert!(matches!(entry("chromatic"), Err(CatalogError::UnknownEntry(_))));
        assert_eq!("oracle".parse::<Engine>().unwrap(), Engine::Oracle);
    }

    #[test]
    fn initial_conditions() {
        for (name, e1) in [("potts", "q"), ("matching", "X"), ("tutte", "1"), ("xi", "X")] {
            assert_all(name, "e1", e1);
            assert_all(name, "empty", "1");
        }
        assert_all("cover", "empty", "1");
        assert_all("cover", "e3", "X^3 - 3*X^2 + 2*X");
    }

    #[test]
    fn pinned_small_values() {
        assert_all("matching", "p3", "X^3 + 2*X*Y");
        assert_all("matching", "k2-double", "X^2 + 2*Y");
        assert_all("tutte", "c3", "X^2 + X + Y");
        assert_all("tutte", "loop1", "Y");
        assert_all("potts", "k2", "q^2 + q*v");
        assert_all("xi", "k2", "X^2 + X*Y + Z");
        assert_all("xi", "loop1", "X + X*Y + Z");
        assert_all("cover", "loop1", "X + Y");
        assert_all("cover", "d2cycle", "X^2 + X + Y");
        assert_all("noble-welsh", "e2", "X1^2");
    }

    #[test]
    fn directedness_is_checked() {
        let g = builtin_graph("k2", true).unwrap();
        assert!(matches!(
            entry("potts").unwrap().evaluate(&g, Engine::Oracle, Budget::unlimited()),
            Err(CatalogError::Directedness { .. })
        ));
    }

    #[test]
    fn definition_files_round_trip() {
        for e in catalog().iter().filter_map(|e| e.recursive()) {
            let again = RecursiveDefinition::parse(&e.to_string()).unwrap();
            assert_eq!(again.to_string(), e.to_string());
        }
    }

    #[test]
    fn noble_welsh_renaming_witness() {
        let u = entry("noble-welsh").unwrap();
        for n in 1..=3 {
            let g = MultiGraph::edgeless(n, false);
            let out = renaming_invariance(u, &g, &index_shift(n)).unwrap();
            assert_eq!(out.original, Polynomial::var("X1").pow(n as u32));
            assert_eq!(out.renamed_original, Polynomial::var("X2").pow(n as u32));
            assert_eq!(out.renamed_computation, Polynomial::one());
            assert!(!out.invariant());
        }
        let empty = MultiGraph::edgeless(0, false);
        assert!(renaming_invariance(u, &empty, &index_shift(0)).unwrap().invariant());
    }

    #[test]
    fn swaps_are_invariant_for_fixed_expansions() {
        let swap = |a: &str, b: &str| BTreeMap::from([(a.to_string(), b.to_string()), (b.to_string(), a.to_string())]);
        let g = builtin_graph("p3", false).unwrap();
        assert!(renaming_invariance(entry("potts").unwrap(), &g, &swap("q", "v")).unwrap().invariant());
        assert!(renaming_invariance(entry("matching").unwrap(), &g, &swap("X", "Y")).unwrap().invariant());
        let collapse = BTreeMap::from([("X".to_string(), "Y".to_string())]);
        assert!(matches!(
            renaming_invariance(entry("matching").unwrap(), &g, &collapse),
            Err(CatalogError::NotInjective(_))
        ));
    }
}
