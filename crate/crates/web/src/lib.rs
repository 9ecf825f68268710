//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Graphs are given either as a built-in name (`k4`, `c3`, ...) or in the line format
//! (`directed: false`, then `vertex` and `edge` lines).

use wasm_bindgen::prelude::*;

use gpk::budget::Budget;
use gpk::catalog::{catalog, entry, Engine, PolynomialEntry};
use gpk::structures::{builtin_graph, MultiGraph};
use gpk::synthesis::{ExpansionEvaluator, GuardMode};

/// Larger universes make the slower engines stall the page.
pub const MAX_ELEMENTS: usize = 12;

fn fail(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn load(poly: &str, graph: &str) -> Result<(&'static PolynomialEntry, MultiGraph), JsError> {
    let e = entry(poly).map_err(fail)?;
    let text = graph.trim();
    let g = if text.lines().count() > 1 || text.starts_with("directed") {
        MultiGraph::parse(text).map_err(fail)?
    } else {
        builtin_graph(text, e.is_directed()).map_err(fail)?
    };
    let size = g.vertices().len() + g.edges().len();
    if size > MAX_ELEMENTS {
        return Err(JsError::new(&format!("{size} vertices plus edges; the demo allows at most {MAX_ELEMENTS}")));
    }
    Ok((e, g))
}

/// Names of the catalog polynomials, one per line.
#[wasm_bindgen]
pub fn polynomials() -> String {
    catalog().iter().map(|e| e.name).collect::<Vec<_>>().join("\n")
}

/// The line-format text of a built-in graph.
#[wasm_bindgen]
pub fn builtin(name: &str, directed: bool) -> Result<String, JsError> {
    builtin_graph(name, directed).map(|g| g.to_text()).map_err(fail)
}

/// Whether the polynomial expects a directed graph.
#[wasm_bindgen]
pub fn is_directed(poly: &str) -> Result<bool, JsError> {
    entry(poly).map(|e| e.is_directed()).map_err(fail)
}

/// Evaluates with one engine (`recursive`, `expansion`, `oracle` or `synthesized`).
#[wasm_bindgen]
pub fn evaluate(poly: &str, graph: &str, engine: &str) -> Result<String, JsError> {
    let (e, g) = load(poly, graph)?;
    let engine: Engine = engine.parse().map_err(fail)?;
    e.evaluate(&g, engine, Budget::unlimited()).map(|p| p.to_string()).map_err(fail)
}

/// One line per available engine with its result, then a verdict line.
#[wasm_bindgen]
pub fn compare(poly: &str, graph: &str) -> Result<String, JsError> {
    let (e, g) = load(poly, graph)?;
    let mut lines = Vec::new();
    let mut values = Vec::new();
    for engine in e.engines() {
        let p = e.evaluate(&g, engine, Budget::unlimited()).map_err(fail)?;
        lines.push(format!("{:<12} {p}", engine.name()));
        values.push(p);
    }
    let agree = values.windows(2).all(|w| w[0] == w[1]);
    lines.push(if agree { "all engines agree".into() } else { "ENGINES DISAGREE".into() });
    Ok(lines.join("\n"))
}

/// The valid marker colorings of the synthesized expansion with their contributions.
#[wasm_bindgen]
pub fn colorings(poly: &str, graph: &str) -> Result<String, JsError> {
    let (e, g) = load(poly, graph)?;
    let def = e.recursive().ok_or_else(|| JsError::new(&format!("`{poly}` has no recursive definition")))?;
    let ev = ExpansionEvaluator::new(def, GuardMode::Direct).map_err(fail)?;
    ev.dump(&e.structure(&g).map_err(fail)?).map_err(fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_listed() {
        assert!(polynomials().lines().any(|l| l == "cover"));
    }
}
