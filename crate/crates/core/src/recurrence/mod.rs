//! Recursive definitions of graph polynomials: guarded deconstructions with coefficients, an
//! admissible-order formula, and evaluation of the linear recurrence over the deconstruction
//! tree.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::budget::{Budget, BudgetExceeded};
use crate::logic::{read_all, Assignment, CompiledFormula, Formula, FormulaParser, LogicError, Model, SExp};
use crate::polyring::{CompiledExpr, PolyError, PolyExpr, PolyParser, Polynomial};
use crate::structures::{ElemId, IncidenceStructure, StructureError, StructureKey, Vocabulary};
use crate::translation::{
    contract_directed_scheme, contract_scheme, delete_directed_scheme, delete_scheme, extract_scheme,
    surgery_parser, CompiledScheme, TranslationError, TranslationScheme,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecurrenceError {
    #[error("no deconstruction is enabled at context `{context}` of {structure}")]
    Infeasible { context: String, structure: String },
    #[error("rule `{rule}` misbehaves at `{context}`: {problem}")]
    BadStep { rule: String, context: String, problem: String },
    #[error("malformed recursive definition: {0}")]
    Malformed(String),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Translation(#[from] TranslationError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

type Result<T> = std::result::Result<T, RecurrenceError>;

/// One row of a recursion table: when `guard` holds at the context, the value gains
/// `coeff · P(scheme*(G))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GuardedDeconstruction {
    pub name: String,
    pub action: String,
    pub scheme: TranslationScheme,
    pub guard: Formula,
    pub coeff: PolyExpr,
}

/// A recursion table with its context arity and admissible-order formula.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveDefinition {
    name: String,
    vocab: Vocabulary,
    context: Vec<String>,
    order: Formula,
    rules: Vec<GuardedDeconstruction>,
}

/// Names of the context constants: `x` for arity one, else `x1..xm`.
pub fn context_names(m: usize) -> Vec<String> {
    if m == 1 {
        vec!["x".to_string()]
    } else {
        (1..=m).map(|i| format!("x{i}")).collect()
    }
}

/// Built-in surgery schemes addressable from definition files.
pub fn builtin_scheme(name: &str) -> Option<TranslationScheme> {
    Some(match name {
        "delete" => delete_scheme(),
        "contract" => contract_scheme(),
        "extract" => extract_scheme(),
        "delete-directed" => delete_directed_scheme(),
        "contract-directed" => contract_directed_scheme(),
        _ => return None,
    })
}

impl RecursiveDefinition {
    pub fn new(
        name: &str,
        vocab: &Vocabulary,
        context_arity: usize,
        order: Formula,
        rules: Vec<GuardedDeconstruction>,
    ) -> Result<Self> {
        let bad = |m: String| Err(RecurrenceError::Malformed(format!("{name}: {m}")));
        if context_arity == 0 {
            return bad("context arity must be at least 1".into());
        }
        if rules.is_empty() {
            return bad("at least one rule is needed".into());
        }
        let context = context_names(context_arity);
        let vocab = vocab.clone().with_constants(&context);
        if !order.free_fo().is_empty() || !order.free_so().is_empty() {
            return bad("the order formula must be a sentence".into());
        }
        for r in &rules {
            let mut params = r.scheme.params().to_vec();
            params.sort();
            let mut want = context.clone();
            want.sort();
            if params != want {
                return bad(format!("rule {}: scheme parameters {:?} differ from the context {:?}", r.name, params, want));
            }
            if !r.scheme.source().same_relations(&vocab) || !r.scheme.target().same_relations(&vocab) {
                return bad(format!("rule {}: scheme must map {} to itself", r.name, vocab.name));
            }
            if let Some(v) = r.guard.free_fo().into_iter().next() {
                return bad(format!("rule {}: guard has free variable `{v}`", r.name));
            }
            if let Some(v) = r.guard.free_so().into_keys().next() {
                return bad(format!("rule {}: guard has free relation variable `{v}`", r.name));
            }
            if !r.coeff.is_short() {
                return bad(format!("rule {}: coefficient sums over relations", r.name));
            }
            if !r.coeff.free_fo().is_empty() || !r.coeff.free_so().is_empty() {
                return bad(format!("rule {}: coefficient has free variables", r.name));
            }
        }
        Ok(RecursiveDefinition { name: name.to_string(), vocab, context, order, rules })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The vocabulary with the context constants added.
    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn context(&self) -> &[String] {
        &self.context
    }

    pub fn context_arity(&self) -> usize {
        self.context.len()
    }

    pub fn order(&self) -> &Formula {
        &self.order
    }

    pub fn rules(&self) -> &[GuardedDeconstruction] {
        &self.rules
    }

    /// The deconstruction enabling formula: the disjunction of all guards.
    pub fn enabled_formula(&self) -> Formula {
        Formula::disj(self.rules.iter().map(|r| r.guard.clone()).collect())
    }

    /// The same definition with one coefficient replaced (for experiments and tests).
    pub fn with_coeff(&self, rule: usize, coeff: PolyExpr) -> Result<Self> {
        let mut rules = self.rules.clone();
        rules.get_mut(rule).ok_or_else(|| RecurrenceError::Malformed(format!("no rule {rule}")))?.coeff = coeff;
        let base = Vocabulary { constants: Vec::new(), ..self.vocab.clone() };
        RecursiveDefinition::new(&self.name, &base, self.context.len(), self.order.clone(), rules)
    }

    /// Parses a definition file: any number of `(def ...)` entries followed by
    ///
    /// ```text
    /// (recursive-definition NAME (vocabulary graph2) (context-arity 1) (order form)
    ///   (rule NAME (guard form) (scheme-ref delete) (coeff expr)) ...)
    /// ```
    ///
    /// A rule may give its scheme inline as `(scheme ...)` instead, and an `(action LABEL)`
    /// (defaulting to the scheme's name). Surgery helper definitions are preloaded.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, "")
    }

    /// Like [`RecursiveDefinition::parse`], with extra definitions loaded first.
    pub fn parse_with(text: &str, prelude: &str) -> Result<Self> {
        let forms = read_all(text)?;
        let (defs, main) = match forms.split_last() {
            Some((main, defs)) if main.head() == Some("recursive-definition") => (defs, main),
            _ => return Err(RecurrenceError::Malformed("expected a final (recursive-definition ...) form".into())),
        };
        let items = main.list().unwrap_or(&[]);
        let name = items.get(1).and_then(SExp::atom).ok_or_else(|| main.error("definition needs a name"))?;
        let clause = |head: &str| items.iter().find(|c| c.head() == Some(head)).and_then(|c| c.list());
        let vocab = match clause("vocabulary") {
            Some([_, v]) => v.atom().and_then(Vocabulary::by_name).ok_or_else(|| v.error("unknown vocabulary"))?,
            Some(_) => return Err(main.error("expected (vocabulary NAME)").into()),
            None => Vocabulary::graph2(),
        };
        let m = match clause("context-arity") {
            Some([_, k]) => k.atom().and_then(|a| a.parse().ok()).ok_or_else(|| k.error("expected a number"))?,
            Some(_) => return Err(main.error("expected (context-arity K)").into()),
            None => 1,
        };
        let mut fp = surgery_parser(&vocab)?;
        fp.load_defs(prelude)?;
        for d in defs {
            fp.define(d)?;
        }
        for c in context_names(m) {
            fp.add_constant(&c);
        }
        let order = match clause("order") {
            Some([_, f]) => fp.formula(f)?,
            _ => return Err(main.error("expected (order form)").into()),
        };
        let pp = PolyParser::new(fp.clone());
        let mut rules = Vec::new();
        for c in &items[2..] {
            match c.head() {
                Some("vocabulary") | Some("context-arity") | Some("order") => {}
                Some("rule") => rules.push(parse_rule(c, &fp, &pp)?),
                _ => return Err(c.error("expected vocabulary, context-arity, order or rule").into()),
            }
        }
        RecursiveDefinition::new(name, &vocab, m, order, rules)
    }

    pub fn compile(&self) -> Result<CompiledDefinition> {
        let rules = self
            .rules
            .iter()
            .map(|r| {
                Ok(CompiledRule {
                    name: r.name.clone(),
                    scheme: r.scheme.compile()?,
                    guard: CompiledFormula::new(&r.guard, &self.vocab)?,
                    coeff: CompiledExpr::new(&r.coeff, &self.vocab)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(CompiledDefinition {
            def: Arc::new(self.clone()),
            order: CompiledFormula::new(&self.order, &self.vocab)?,
            rules,
        })
    }
}

fn parse_rule(c: &SExp, fp: &FormulaParser, pp: &PolyParser) -> Result<GuardedDeconstruction> {
    let items = c.list().unwrap_or(&[]);
    let name = items.get(1).and_then(SExp::atom).ok_or_else(|| c.error("rule needs a name"))?;
    let (mut guard, mut scheme, mut coeff, mut action) = (None, None, None, None);
    for part in &items[2..] {
        let args = part.list().map(|l| &l[1..]).unwrap_or(&[]);
        match (part.head(), args) {
            (Some("guard"), [f]) => guard = Some(fp.formula(f)?),
            (Some("coeff"), [e]) => coeff = Some(pp.expr(e)?),
            (Some("action"), [a]) => action = a.atom().map(str::to_string),
            (Some("scheme-ref"), [s]) => {
                let n = s.atom().ok_or_else(|| s.error("expected a scheme name"))?;
                let sch = builtin_scheme(n).ok_or_else(|| s.error(format!("unknown built-in scheme `{n}`")))?;
                scheme = Some(sch);
            }
            (Some("scheme"), _) => scheme = Some(TranslationScheme::from_sexp(part, fp)?),
            _ => return Err(part.error("expected guard, scheme, scheme-ref, coeff or action").into()),
        }
    }
    let missing = |what: &str| c.error(format!("rule {name} has no {what}"));
    let scheme = scheme.ok_or_else(|| missing("scheme"))?;
    Ok(GuardedDeconstruction {
        name: name.to_string(),
        action: action.unwrap_or_else(|| scheme.name().to_string()),
        guard: guard.ok_or_else(|| missing("guard"))?,
        coeff: coeff.ok_or_else(|| missing("coeff"))?,
        scheme,
    })
}

/// Prints a definition file that [`RecursiveDefinition::parse`] reads back.
impl fmt::Display for RecursiveDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(recursive-definition {}", self.name)?;
        writeln!(f, "  (vocabulary {})", self.vocab.name)?;
        writeln!(f, "  (context-arity {})", self.context.len())?;
        write!(f, "  (order {})", self.order)?;
        for r in &self.rules {
            write!(
                f,
                "\n  (rule {} (action {}) (guard {})\n    {}\n    (coeff {}))",
                r.name, r.action, r.guard, r.scheme, r.coeff
            )?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledRule {
    pub(crate) name: String,
    pub(crate) scheme: CompiledScheme,
    pub(crate) guard: CompiledFormula,
    pub(crate) coeff: CompiledExpr,
}

/// A definition with every formula and expression compiled.
#[derive(Debug, Clone)]
pub struct CompiledDefinition {
    def: Arc<RecursiveDefinition>,
    order: CompiledFormula,
    pub(crate) rules: Vec<CompiledRule>,
}

/// Result of a tree evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub value: Polynomial,
    /// Number of root-to-leaf branches of the deconstruction tree.
    pub leaves: u128,
}

impl CompiledDefinition {
    pub fn definition(&self) -> &RecursiveDefinition {
        &self.def
    }

    /// Assignment of every context constant to `x` (the least context tuple repeats the first
    /// element).
    pub fn context_assignment(&self, x: ElemId) -> Assignment {
        self.def.context.iter().fold(Assignment::new(), |a, c| a.with_fo(c, x))
    }

    /// `⟨G, O⟩ ⊨ φ_ord` where `O` lists the universe in `order`.
    pub fn order_valid(&self, s: &IncidenceStructure, order: &[ElemId]) -> Result<bool> {
        let s = s.reordered(order)?;
        Ok(self.order.eval(&Model::new(&s), &Assignment::new())?)
    }

    /// Indices (from 0) of the rules whose guard holds at the current context.
    pub fn enabled(&self, s: &IncidenceStructure) -> Result<Vec<usize>> {
        let Some(&x) = s.universe().first() else { return Ok(Vec::new()) };
        let m = Model::new(s);
        let a = self.context_assignment(x);
        let mut out = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            if r.guard.eval(&m, &a)? {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Applies rule `i` at the current context: its coefficient and the deconstructed
    /// structure, with the step's contract (context deleted, universe shrinks) checked.
    pub(crate) fn step(&self, i: usize, m: &Model, x: ElemId) -> Result<(Polynomial, IncidenceStructure)> {
        let r = &self.rules[i];
        let a = self.context_assignment(x);
        let sigma = r.coeff.eval(m, &a)?;
        let child = r.scheme.apply_in(m, &a)?;
        let s = m.structure();
        if child.contains(x) {
            return Err(RecurrenceError::BadStep {
                rule: r.name.clone(),
                context: s.name(x).to_string(),
                problem: "the context survives".into(),
            });
        }
        Ok((sigma, child))
    }

    /// Evaluates the recurrence on `s` in its current universe order.
    pub fn evaluate(&self, s: &IncidenceStructure) -> Result<Evaluation> {
        RecursiveEvaluator::new(self).evaluate(s)
    }

    /// Evaluates with the universe listed in `order`.
    pub fn evaluate_in_order(&self, s: &IncidenceStructure, order: &[ElemId]) -> Result<Evaluation> {
        self.evaluate(&s.reordered(order)?)
    }
}

/// Depth-first evaluation of the deconstruction tree with an optional memo on labeled
/// sub-structures (the key includes the residual order).
pub struct RecursiveEvaluator<'d> {
    def: &'d CompiledDefinition,
    memo: Option<HashMap<StructureKey, Evaluation>>,
    budget: Budget,
    nodes: u64,
}

impl<'d> RecursiveEvaluator<'d> {
    pub fn new(def: &'d CompiledDefinition) -> Self {
        RecursiveEvaluator { def, memo: Some(HashMap::new()), budget: Budget::unlimited(), nodes: 0 }
    }

    pub fn without_memo(mut self) -> Self {
        self.memo = None;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    /// Tree nodes expanded so far (memo hits excluded).
    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    pub fn evaluate(&mut self, s: &IncidenceStructure) -> Result<Evaluation> {
        if s.is_empty() {
            return Ok(Evaluation { value: Polynomial::one(), leaves: 1 });
        }
        let key = self.memo.as_ref().map(|_| s.key());
        if let (Some(memo), Some(k)) = (&self.memo, &key) {
            if let Some(hit) = memo.get(k) {
                return Ok(hit.clone());
            }
        }
        self.budget.check()?;
        self.nodes += 1;
        let x = s.universe()[0];
        let enabled = self.def.enabled(s)?;
        if enabled.is_empty() {
            return Err(RecurrenceError::Infeasible { context: s.name(x).to_string(), structure: s.describe() });
        }
        let m = Model::new(s);
        let mut value = Polynomial::zero();
        let mut leaves = 0u128;
        for i in enabled {
            let (sigma, child) = self.def.step(i, &m, x)?;
            let sub = self.evaluate(&child)?;
            value = &value + &(&sigma * &sub.value);
            leaves += sub.leaves;
        }
        let out = Evaluation { value, leaves };
        if let (Some(memo), Some(k)) = (&mut self.memo, key) {
            memo.insert(k, out.clone());
        }
        Ok(out)
    }
}

/// `P(G)` under the given order of the universe.
pub fn evaluate_recursive(def: &RecursiveDefinition, s: &IncidenceStructure, order: &[ElemId]) -> Result<Polynomial> {
    Ok(def.compile()?.evaluate_in_order(s, order)?.value)
}

pub fn check_order_valid(def: &RecursiveDefinition, s: &IncidenceStructure, order: &[ElemId]) -> Result<bool> {
    def.compile()?.order_valid(s, order)
}

/// Indices (from 0) of the rules enabled at the first element of `order`.
pub fn enabled_set(def: &RecursiveDefinition, s: &IncidenceStructure, order: &[ElemId]) -> Result<Vec<usize>> {
    def.compile()?.enabled(&s.reordered(order)?)
}

/// Outcome of evaluating one structure under several orders.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InvarianceReport {
    pub orders: usize,
    /// Distinct values with the number of orders producing each, in order of first appearance.
    pub distinct: Vec<(Polynomial, usize)>,
    /// Orders whose evaluation failed, by index into the sample, with the error text.
    pub failures: Vec<(usize, String)>,
}

impl InvarianceReport {
    pub fn is_invariant(&self) -> bool {
        self.failures.is_empty() && self.distinct.len() == 1
    }
}

/// Evaluates under every order of the sample and collects the distinct values. Errors are
/// recorded per order, not raised.
pub fn check_order_invariance(def: &CompiledDefinition, s: &IncidenceStructure, orders: &[Vec<ElemId>]) -> InvarianceReport {
    let mut report = InvarianceReport { orders: orders.len(), ..Default::default() };
    // One memo for all orders: its key carries the residual order, so hits are exact.
    let mut evaluator = RecursiveEvaluator::new(def);
    for (i, o) in orders.iter().enumerate() {
        match s.reordered(o).map_err(RecurrenceError::from).and_then(|r| evaluator.evaluate(&r)) {
            Ok(e) => match report.distinct.iter_mut().find(|(p, _)| *p == e.value) {
                Some((_, n)) => *n += 1,
                None => report.distinct.push((e.value, 1)),
            },
            Err(e) => report.failures.push((i, e.to_string())),
        }
    }
    report
}
