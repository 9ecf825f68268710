//! `gpk`: evaluate graph polynomials and run the consistency suites from the command line.

mod error;
mod target;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gpk::budget::Budget;
use gpk::catalog::{catalog, definition_source, renaming_invariance, Engine};
use gpk::corpus::{edges_first_orders, small_directed, small_undirected};
use gpk::polyring::Polynomial;
use gpk::recurrence::check_order_invariance;
use gpk::structures::{builtin_names, MultiGraph};
use gpk::translation::corpus::{exhaustive_fundamental, random_fundamental};

use error::{CliError, MISMATCH, PASS};
use target::{OrderSource, Target};

#[derive(Parser)]
#[command(name = "gpk", version, about = "Graph polynomials by recursion, subset expansion and enumeration")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Wall-clock cap in milliseconds (overrides GPK_BUDGET_MS).
    #[arg(long, global = true)]
    budget_ms: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a polynomial on one graph.
    Eval(EvalArgs),
    /// Compare engines on graphs or a corpus.
    Check(CheckArgs),
    /// Evaluate a recursive definition under many valid orders.
    Invariance(InvarianceArgs),
    /// Compare computing with renamed indeterminates against renaming the result.
    Renaming(RenamingArgs),
    /// Check that translating a formula and transducing a structure agree.
    Fundamental(FundamentalArgs),
    /// Time each engine.
    Bench(BenchArgs),
    /// List catalog entries, built-in graphs, or print a shipped definition file.
    List {
        /// Print the definition file of this entry instead.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Args)]
struct PolySource {
    /// Catalog entry: matching, tutte, potts, xi, cover, noble-welsh.
    #[arg(long, short)]
    poly: Option<String>,
    /// Recursive definition file instead of a catalog entry.
    #[arg(long = "def")]
    def: Option<PathBuf>,
}

impl PolySource {
    fn load(&self) -> Result<Target, CliError> {
        Target::load(self.poly.as_deref(), self.def.as_deref())
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    source: PolySource,
    /// Built-in graph name or graph file.
    #[arg(long, short)]
    graph: String,
    #[arg(long, short, default_value = "recursive", value_parser = parse_engine)]
    engine: Engine,
    /// `declaration`, `random:SEED`, or a file listing element ids.
    #[arg(long, default_value = "declaration")]
    order: OrderSource,
    /// Refuse structures with more elements than this.
    #[arg(long)]
    max_universe: Option<usize>,
    /// Refuse synthesized evaluation when the coloring space exceeds this.
    #[arg(long)]
    max_colorings: Option<u128>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    source: PolySource,
    /// Graphs to check (built-in names or files).
    #[arg(long, short)]
    graph: Vec<String>,
    /// `small`: every labeled multigraph with at most 4 vertices and 5 edges (3 and 4 when directed).
    #[arg(long)]
    corpus: Option<String>,
    /// Engines to compare; defaults to all available.
    #[arg(long, value_delimiter = ',', value_parser = parse_engine)]
    engines: Vec<Engine>,
}

#[derive(Args)]
struct InvarianceArgs {
    #[command(flatten)]
    source: PolySource,
    #[arg(long, short)]
    graph: Vec<String>,
    #[arg(long)]
    corpus: Option<String>,
    /// `all`, or a number of seeded random valid orders.
    #[arg(long, default_value = "all")]
    orders: String,
    /// With `all`, fall back to sampling when more orders than this exist.
    #[arg(long, default_value_t = 720)]
    limit: usize,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RenamingArgs {
    #[arg(long, short)]
    poly: String,
    #[arg(long, short)]
    graph: String,
    /// Renaming as `A=B,B=A`.
    #[arg(long, value_delimiter = ',')]
    map: Vec<String>,
    /// Use the index shift X_i -> X_(i+1) on X1..Xn.
    #[arg(long)]
    shift: bool,
}

#[derive(Args)]
struct FundamentalArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 4)]
    max_size: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Also run the fixed scheme × formula suite over every small structure.
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    source: PolySource,
    #[arg(long, short)]
    graph: String,
    #[arg(long, default_value_t = 3)]
    repeat: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_engine)]
    engines: Vec<Engine>,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse().map_err(|e: gpk::catalog::CatalogError| e.to_string())
}

/// What a command prints and how it exits.
struct Report {
    text: String,
    doc: Value,
    code: u8,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { error::USAGE } else { PASS });
        }
    };
    let budget = match cli.budget_ms {
        Some(ms) => Budget::millis(ms),
        None => Budget::from_env(),
    };
    let result = match &cli.command {
        Command::Eval(a) => cmd_eval(a, budget),
        Command::Check(a) => cmd_check(a, budget),
        Command::Invariance(a) => cmd_invariance(a),
        Command::Renaming(a) => cmd_renaming(a),
        Command::Fundamental(a) => cmd_fundamental(a),
        Command::Bench(a) => cmd_bench(a, budget),
        Command::List { show } => cmd_list(show.as_deref()),
    };
    // Write errors (a closed pipe) are ignored; the exit code still reports the outcome.
    let mut out = std::io::stdout().lock();
    let pretty = |doc: &Value| serde_json::to_string_pretty(doc).expect("json values serialize");
    match result {
        Ok(r) => {
            let _ = match cli.format {
                Format::Text => write!(out, "{}", r.text),
                Format::Machine => writeln!(out, "{}", pretty(&r.doc)),
            };
            ExitCode::from(r.code)
        }
        Err(e) => {
            let _ = match cli.format {
                Format::Text => writeln!(std::io::stderr(), "gpk: {}", e.message()),
                Format::Machine => writeln!(out, "{}", pretty(&json!({ "error": e.message(), "exit_code": e.code() }))),
            };
            ExitCode::from(e.code())
        }
    }
}

fn poly_json(p: &Polynomial) -> Value {
    json!({ "text": p.to_string(), "terms": serde_json::from_str::<Value>(&p.to_json()).expect("valid json") })
}

fn cmd_eval(a: &EvalArgs, budget: Budget) -> Result<Report, CliError> {
    let t = a.source.load()?;
    t.check_engine(a.engine)?;
    let g = t.graph(&a.graph)?;
    let s = t.structure(&g, &a.order)?;
    if let Some(max) = a.max_universe {
        if s.len() > max {
            return Err(CliError::Budget(format!("universe of {} elements exceeds --max-universe {max}", s.len())));
        }
    }
    if let (Engine::Synthesized, Some(max), Some(space)) = (a.engine, a.max_colorings, t.coloring_space(&s)) {
        if space > max {
            return Err(CliError::Budget(format!("{space} colorings exceed --max-colorings {max}")));
        }
    }
    t.validate_order(&s, a.engine)?;
    let out = t.evaluate(&s, &g, a.engine, budget)?;
    let order: Vec<&str> = s.universe().iter().map(|&x| s.name(x)).collect();
    let doc = json!({
        "command": "eval",
        "config": { "poly": t.name(), "graph": a.graph, "engine": a.engine.name(), "order": a.order.to_string() },
        "results": { "polynomial": poly_json(&out.value), "order": order, "branches": out.branches.map(|b| b.to_string()) },
        "provenance": format!("{} engine on {}", a.engine, s.describe()),
    });
    Ok(Report { text: format!("{}\n", out.value), doc, code: PASS })
}

fn corpus_graphs(t: &Target, graphs: &[String], corpus: Option<&str>) -> Result<Vec<(String, MultiGraph)>, CliError> {
    let mut out = Vec::new();
    match corpus {
        Some("small") => {
            let all = if t.is_directed() { small_directed() } else { small_undirected() };
            out.extend(all.into_iter().enumerate().map(|(i, g)| (format!("small#{i}"), g)));
        }
        Some(other) => return Err(CliError::Usage(format!("unknown corpus `{other}` (expected small)"))),
        None => {}
    }
    for source in graphs {
        out.push((source.clone(), t.graph(source)?));
    }
    if out.is_empty() {
        return Err(CliError::Usage("give --graph or --corpus".into()));
    }
    Ok(out)
}

fn cmd_check(a: &CheckArgs, budget: Budget) -> Result<Report, CliError> {
    let t = a.source.load()?;
    let engines = if a.engines.is_empty() { t.engines() } else { a.engines.clone() };
    for &e in &engines {
        t.check_engine(e)?;
    }
    let graphs = corpus_graphs(&t, &a.graph, a.corpus.as_deref())?;
    let mut instances = Vec::new();
    let mut mismatches = 0;
    let mut text = String::new();
    for (name, g) in &graphs {
        let s = t.structure(g, &OrderSource::Declaration)?;
        let mut values = Vec::new();
        for &e in &engines {
            let out = t.evaluate(&s, g, e, budget)?;
            values.push((e, out));
        }
        let agree = values.iter().all(|(_, v)| v.value == values[0].1.value);
        let branches: Vec<u128> = values.iter().filter_map(|(_, v)| v.branches).collect();
        let branches_agree = branches.windows(2).all(|w| w[0] == w[1]);
        if !(agree && branches_agree) {
            mismatches += 1;
            text.push_str(&format!("MISMATCH {name} ({})\n", s.describe()));
            for (e, v) in &values {
                text.push_str(&format!("  {e}: {}\n", v.value));
            }
        }
        instances.push(json!({
            "graph": name,
            "structure": s.describe(),
            "agree": agree && branches_agree,
            "values": values.iter().map(|(e, v)| json!({
                "engine": e.name(),
                "polynomial": v.value.to_string(),
                "branches": v.branches.map(|b| b.to_string()),
            })).collect::<Vec<_>>(),
        }));
    }
    let names: Vec<&str> = engines.iter().map(|e| e.name()).collect();
    text.push_str(&format!(
        "{}: {} instances, engines {}, {mismatches} mismatches\n",
        t.name(),
        graphs.len(),
        names.join(", ")
    ));
    let doc = json!({
        "command": "check",
        "config": { "poly": t.name(), "engines": names, "corpus": a.corpus, "graphs": a.graph },
        "results": { "instances": instances, "mismatches": mismatches },
        "provenance": "equal polynomials from every engine; equal leaf and valid-coloring counts",
    });
    Ok(Report { text, doc, code: if mismatches == 0 { PASS } else { MISMATCH } })
}

fn cmd_invariance(a: &InvarianceArgs) -> Result<Report, CliError> {
    let t = a.source.load()?;
    let def = t.compiled().ok_or_else(|| CliError::Usage(format!("`{}` has no recursive definition", t.name())))?;
    let graphs = corpus_graphs(&t, &a.graph, a.corpus.as_deref())?;
    let (limit, samples) = match a.orders.as_str() {
        "all" => (a.limit, a.samples),
        n => (0, n.parse().map_err(|_| CliError::Usage(format!("--orders expects `all` or a number, got `{n}`")))?),
    };
    let mut text = String::new();
    let mut instances = Vec::new();
    let (mut variant, mut infeasible) = (0, 0);
    for (name, g) in &graphs {
        let s = t.structure(g, &OrderSource::Declaration)?;
        let orders = edges_first_orders(&s, limit, samples, a.seed);
        let valid: Vec<Vec<_>> = orders
            .into_iter()
            .filter(|o| def.order_valid(&s, o).unwrap_or(false))
            .collect();
        let report = check_order_invariance(def, &s, &valid);
        if !report.failures.is_empty() {
            infeasible += 1;
        } else if report.distinct.len() > 1 {
            variant += 1;
        }
        text.push_str(&format!(
            "{name}: {} orders, {} distinct polynomial{}{}\n",
            report.orders,
            report.distinct.len(),
            if report.distinct.len() == 1 { "" } else { "s" },
            if report.failures.is_empty() { String::new() } else { format!(", {} infeasible", report.failures.len()) },
        ));
        for (p, n) in &report.distinct {
            if report.distinct.len() > 1 || graphs.len() == 1 {
                text.push_str(&format!("  {p}  ({n} orders)\n"));
            }
        }
        instances.push(json!({
            "graph": name,
            "orders": report.orders,
            "distinct": report.distinct.iter().map(|(p, n)| json!({ "polynomial": p.to_string(), "orders": n })).collect::<Vec<_>>(),
            "failures": report.failures.iter().map(|(i, m)| json!({ "order": i, "error": m })).collect::<Vec<_>>(),
        }));
    }
    let doc = json!({
        "command": "invariance",
        "config": { "poly": t.name(), "orders": a.orders, "limit": a.limit, "samples": a.samples, "seed": a.seed },
        "results": { "instances": instances, "order_dependent": variant, "infeasible": infeasible },
        "provenance": "one polynomial per graph across valid orders",
    });
    let code = if infeasible > 0 { error::INFEASIBLE } else if variant > 0 { MISMATCH } else { PASS };
    Ok(Report { text, doc, code })
}

fn cmd_renaming(a: &RenamingArgs) -> Result<Report, CliError> {
    let t = Target::load(Some(&a.poly), None)?;
    let Target::Catalog(e) = t else { unreachable!("loaded by name") };
    let g = t.graph(&a.graph)?;
    let mut map = if a.shift { gpk::catalog::index_shift(g.vertices().len()) } else { Default::default() };
    for pair in &a.map {
        let (k, v) = pair.split_once('=').ok_or_else(|| CliError::Usage(format!("expected A=B, got `{pair}`")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let out = renaming_invariance(e, &g, &map)?;
    let text = format!(
        "original:             {}\nrenamed computation:  {}\nrenamed original:     {}\n{}\n",
        out.original,
        out.renamed_computation,
        out.renamed_original,
        if out.invariant() { "invariant" } else { "not invariant" }
    );
    let doc = json!({
        "command": "renaming",
        "config": { "poly": e.name, "graph": a.graph, "map": map },
        "results": {
            "original": out.original.to_string(),
            "renamed_computation": out.renamed_computation.to_string(),
            "renamed_original": out.renamed_original.to_string(),
            "invariant": out.invariant(),
        },
        "provenance": "renamed computation compared with the renamed polynomial",
    });
    Ok(Report { text, doc, code: if out.invariant() { PASS } else { MISMATCH } })
}

fn cmd_fundamental(a: &FundamentalArgs) -> Result<Report, CliError> {
    let random = random_fundamental(a.trials, a.max_size, a.seed)?;
    let mut text = format!("{}/{} agree\n", random.checks - random.failures.len(), random.checks);
    let mut failures = random.failures.clone();
    let mut results = json!({ "random": { "checks": random.checks, "failures": random.failures } });
    if a.exhaustive {
        let fixed = exhaustive_fundamental()?;
        text.push_str(&format!("fixed suite: {}/{} agree\n", fixed.checks - fixed.failures.len(), fixed.checks));
        results["fixed"] = json!({ "checks": fixed.checks, "failures": fixed.failures });
        failures.extend(fixed.failures);
    }
    for f in &failures {
        text.push_str(&format!("FAIL {f}\n"));
    }
    let doc = json!({
        "command": "fundamental",
        "config": { "trials": a.trials, "max_size": a.max_size, "seed": a.seed, "exhaustive": a.exhaustive },
        "results": results,
        "provenance": "M satisfies the translated formula iff the transduced structure satisfies the formula",
    });
    Ok(Report { text, doc, code: if failures.is_empty() { PASS } else { MISMATCH } })
}

fn cmd_bench(a: &BenchArgs, budget: Budget) -> Result<Report, CliError> {
    let t = a.source.load()?;
    let engines = if a.engines.is_empty() { t.engines() } else { a.engines.clone() };
    let g = t.graph(&a.graph)?;
    let s = t.structure(&g, &OrderSource::Declaration)?;
    let mut rows = Vec::new();
    let mut text = format!("{} on {} ({} elements), {} runs each\n", t.name(), a.graph, s.len(), a.repeat.max(1));
    text.push_str(&format!("{:<12} {:>12} {:>8}\n", "engine", "mean ms", "terms"));
    for &e in &engines {
        let mut total = 0.0;
        let mut terms = 0;
        for _ in 0..a.repeat.max(1) {
            let start = Instant::now();
            let out = t.evaluate(&s, &g, e, budget)?;
            total += start.elapsed().as_secs_f64() * 1000.0;
            terms = out.value.len();
        }
        let mean = total / a.repeat.max(1) as f64;
        text.push_str(&format!("{:<12} {:>12.3} {:>8}\n", e.name(), mean, terms));
        rows.push(json!({ "engine": e.name(), "mean_ms": mean, "terms": terms }));
    }
    let doc = json!({
        "command": "bench",
        "config": { "poly": t.name(), "graph": a.graph, "repeat": a.repeat },
        "results": rows,
        "provenance": "wall-clock time per engine",
    });
    Ok(Report { text, doc, code: PASS })
}

fn cmd_list(show: Option<&str>) -> Result<Report, CliError> {
    if let Some(name) = show {
        let src = definition_source(name)
            .ok_or_else(|| CliError::Usage(format!("no shipped definition file for `{name}`")))?;
        let doc = json!({ "command": "list", "config": { "show": name }, "results": src });
        return Ok(Report { text: src.to_string(), doc, code: PASS });
    }
    let mut text = String::from("polynomials:\n");
    let mut entries = Vec::new();
    for e in catalog() {
        let engines: Vec<&str> = e.engines().iter().map(|x| x.name()).collect();
        text.push_str(&format!("  {:<12} {}\n  {:<12} engines: {}\n", e.name, e.notes, "", engines.join(", ")));
        entries.push(json!({ "name": e.name, "directed": e.is_directed(), "engines": engines, "notes": e.notes }));
    }
    text.push_str(&format!("graphs:\n  {}\n", builtin_names().join(" ")));
    let doc = json!({ "command": "list", "results": { "polynomials": entries, "graphs": builtin_names() } });
    Ok(Report { text, doc, code: PASS })
}
