//! What a command evaluates: a catalog entry or a user definition file, on a graph in some
//! universe order.

use std::path::Path;

use gpk::budget::Budget;
use gpk::catalog::{entry, CatalogError, Engine, PolynomialEntry};
use gpk::corpus::edges_first_orders;
use gpk::polyring::Polynomial;
use gpk::recurrence::{CompiledDefinition, RecursiveDefinition, RecursiveEvaluator};
use gpk::structures::{builtin_graph, ElemId, IncidenceStructure, MultiGraph, VocabTag};
use gpk::synthesis::{ExpansionEvaluator, GuardMode};

use crate::error::CliError;

pub enum Target {
    Catalog(&'static PolynomialEntry),
    Defined(Box<CompiledDefinition>),
}

impl Target {
    pub fn load(poly: Option<&str>, def: Option<&Path>) -> Result<Target, CliError> {
        match (poly, def) {
            (Some(name), None) => Ok(Target::Catalog(entry(name)?)),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                Ok(Target::Defined(Box::new(RecursiveDefinition::parse(&text)?.compile()?)))
            }
            _ => Err(CliError::Usage("give exactly one of --poly and --def".into())),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Target::Catalog(e) => e.name,
            Target::Defined(c) => c.definition().name(),
        }
    }

    pub fn tag(&self) -> VocabTag {
        match self {
            Target::Catalog(e) => e.tag,
            Target::Defined(c) => c.definition().vocab().tag,
        }
    }

    pub fn is_directed(&self) -> bool {
        self.tag() == VocabTag::Directed2
    }

    pub fn compiled(&self) -> Option<&CompiledDefinition> {
        match self {
            Target::Catalog(e) => e.compiled(),
            Target::Defined(c) => Some(c),
        }
    }

    pub fn engines(&self) -> Vec<Engine> {
        match self {
            Target::Catalog(e) => e.engines(),
            Target::Defined(_) => vec![Engine::Recursive, Engine::Synthesized],
        }
    }

    pub fn check_engine(&self, engine: Engine) -> Result<(), CliError> {
        if self.engines().contains(&engine) {
            Ok(())
        } else {
            Err(CliError::Usage(format!("engine `{engine}` is not available for `{}`", self.name())))
        }
    }

    /// Resolves `source` as a built-in graph name or else as a graph file.
    pub fn graph(&self, source: &str) -> Result<MultiGraph, CliError> {
        let path = Path::new(source);
        let g = if path.is_file() {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            MultiGraph::parse(&text)?
        } else {
            builtin_graph(source, self.is_directed())?
        };
        if g.is_directed() != self.is_directed() {
            let want = if self.is_directed() { "directed" } else { "undirected" };
            return Err(CliError::Usage(format!("`{}` needs a {want} graph", self.name())));
        }
        Ok(g)
    }

    pub fn structure(&self, g: &MultiGraph, order: &OrderSource) -> Result<IncidenceStructure, CliError> {
        let s = IncidenceStructure::from_graph(g, self.tag())?;
        Ok(s.reordered(&order.resolve(&s)?)?)
    }

    /// Checks the universe order of `s` against the definition's order formula when `engine`
    /// walks the deconstruction tree.
    pub fn validate_order(&self, s: &IncidenceStructure, engine: Engine) -> Result<(), CliError> {
        if !matches!(engine, Engine::Recursive | Engine::Synthesized) {
            return Ok(());
        }
        if let Some(def) = self.compiled() {
            if !def.order_valid(s, s.universe())? {
                let names: Vec<&str> = s.universe().iter().map(|&x| s.name(x)).collect();
                return Err(CliError::Infeasible(format!(
                    "order [{}] violates the order formula of `{}`",
                    names.join(" "),
                    self.name()
                )));
            }
        }
        Ok(())
    }

    pub fn evaluate(
        &self,
        s: &IncidenceStructure,
        g: &MultiGraph,
        engine: Engine,
        budget: Budget,
    ) -> Result<Evaluated, CliError> {
        self.check_engine(engine)?;
        let leaves_or_colorings;
        let value = match (self, engine) {
            (Target::Catalog(e), Engine::Oracle | Engine::Expansion) => {
                leaves_or_colorings = None;
                e.evaluate_structure(s, g, engine, budget)?
            }
            (_, Engine::Recursive) => {
                let def = self.compiled().expect("recursive engine implies a definition");
                let ev = RecursiveEvaluator::new(def).with_budget(budget).evaluate(s).map_err(CatalogError::from)?;
                leaves_or_colorings = Some(ev.leaves);
                ev.value
            }
            (_, Engine::Synthesized) => {
                let def = self.compiled().expect("synthesis implies a definition").definition();
                let ev = ExpansionEvaluator::new(def, GuardMode::Direct)
                    .map_err(CatalogError::from)?
                    .with_budget(budget)
                    .evaluate(s)
                    .map_err(CatalogError::from)?;
                leaves_or_colorings = Some(ev.valid_colorings);
                ev.value
            }
            (Target::Defined(_), _) => unreachable!("checked above"),
        };
        Ok(Evaluated { value, branches: leaves_or_colorings })
    }

    /// Number of colorings the synthesized engine would consider without pruning.
    pub fn coloring_space(&self, s: &IncidenceStructure) -> Option<u128> {
        let rules = self.compiled()?.definition().rules().len() as u128 + 1;
        Some((0..s.len()).try_fold(1u128, |t, _| t.checked_mul(rules)).unwrap_or(u128::MAX))
    }
}

pub struct Evaluated {
    pub value: Polynomial,
    /// Leaves of the deconstruction tree or valid colorings, for the engines that have them.
    pub branches: Option<u128>,
}

/// Where the universe order comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderSource {
    /// Edges before vertices, each in declaration order.
    Declaration,
    /// A seeded random order with edges before vertices.
    Random(u64),
    /// Element ids listed in a file, separated by whitespace.
    File(String),
}

impl std::str::FromStr for OrderSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "declaration" => Ok(OrderSource::Declaration),
            _ => match s.strip_prefix("random:") {
                Some(seed) => seed.parse().map(OrderSource::Random).map_err(|_| format!("bad seed in `{s}`")),
                None => Ok(OrderSource::File(s.to_string())),
            },
        }
    }
}

impl std::fmt::Display for OrderSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderSource::Declaration => f.write_str("declaration"),
            OrderSource::Random(seed) => write!(f, "random:{seed}"),
            OrderSource::File(p) => f.write_str(p),
        }
    }
}

impl OrderSource {
    fn resolve(&self, s: &IncidenceStructure) -> Result<Vec<ElemId>, CliError> {
        Ok(match self {
            OrderSource::Declaration => s.edges_first_order(),
            OrderSource::Random(seed) => edges_first_orders(s, 0, 1, *seed).remove(0),
            OrderSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(Path::new(path), e))?;
                text.split_whitespace()
                    .map(|n| s.lookup(n).ok_or_else(|| CliError::Usage(format!("order names unknown element `{n}`"))))
                    .collect::<Result<_, _>>()?
            }
        })
    }
}
