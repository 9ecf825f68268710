//! Subset expansions synthesized from recursive definitions: a sum over marker colorings of the
//! contexts, each coloring checked by simulating the world views it induces.
//!
//! A coloring marks every context with the rule applied there (`U_i`) or with `D` when an
//! earlier step already removed it. Walking the contexts in order from the input graph, a
//! coloring is valid when every `U_i` context is present in the current view with its guard
//! true, and every `D` context is absent. The view then advances by `T_i*`. The world views are
//! determined by the coloring, so they are computed rather than searched for.

use std::fmt::Write as _;

use thiserror::Error;

use crate::budget::{Budget, BudgetExceeded};
use crate::logic::{CompiledFormula, Formula, LogicError, Model, Relation, Term};
use crate::polyring::Polynomial;
use crate::recurrence::{CompiledDefinition, RecurrenceError, RecursiveDefinition, RecursiveEvaluator};
use crate::structures::{ElemId, IncidenceStructure, StructureError};
use crate::translation::{TranslationError, TranslationScheme};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("context arity {0} is not supported (only 1)")]
    UnsupportedArity(usize),
    #[error("{0} colorings exceed the enumeration limit of {1}")]
    TooManyColorings(u128, u128),
    #[error("coloring has {found} marks for {expected} contexts")]
    ColoringLength { expected: usize, found: usize },
    #[error(transparent)]
    Recurrence(#[from] RecurrenceError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Translation(#[from] TranslationError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
}

type Result<T> = std::result::Result<T, SynthesisError>;

/// Largest number of colorings [`ExpansionEvaluator::evaluate_exhaustive`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mark {
    /// Rule index from 0.
    Rule(usize),
    Deleted,
}

impl Mark {
    fn label(self) -> String {
        match self {
            Mark::Rule(i) => format!("U{}", i + 1),
            Mark::Deleted => "D".to_string(),
        }
    }
}

/// How guards and presence are decided during simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardMode {
    /// Evaluate guards on the world-view structure itself.
    Direct,
    /// Evaluate the guards translated through the world-view scheme on the input graph, with the
    /// view supplied as relation variables (`B` for the universe, `Q<R>` per relation `R`).
    Translated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simulation {
    pub valid: bool,
    /// Product of the coefficients; 1 when invalid.
    pub contribution: Polynomial,
    /// Why the coloring was rejected.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synthesized {
    pub value: Polynomial,
    pub valid_colorings: u128,
}

#[derive(Debug, Clone)]
struct WorldViewGuards {
    present: CompiledFormula,
    guards: Vec<CompiledFormula>,
    q_names: Vec<String>,
}

/// The world-view scheme: universe `B`, each relation `R` read from `Q<R>`.
pub fn world_view_scheme(def: &RecursiveDefinition) -> std::result::Result<TranslationScheme, TranslationError> {
    let vocab = def.vocab();
    let relations = vocab
        .relations
        .iter()
        .map(|r| {
            let vars: Vec<String> = (1..=r.arity).map(|i| format!("t{i}")).collect();
            let f = Formula::RelVar(format!("Q{}", r.name), vars.iter().map(|v| Term::var(v)).collect());
            (vars, f)
        })
        .collect();
    TranslationScheme::new(
        "world-view",
        vocab,
        vocab,
        &[],
        ("y", Formula::RelVar("B".into(), vec![Term::var("y")])),
        relations,
    )
}

/// Evaluator of the synthesized expansion of a recursive definition with context arity 1.
#[derive(Debug, Clone)]
pub struct ExpansionEvaluator {
    def: CompiledDefinition,
    mode: GuardMode,
    translated: Option<WorldViewGuards>,
    budget: Budget,
}

/// Builds the expansion evaluator with guards decided on the world views directly.
pub fn synthesize(def: &RecursiveDefinition) -> Result<ExpansionEvaluator> {
    ExpansionEvaluator::new(def, GuardMode::Direct)
}

impl ExpansionEvaluator {
    pub fn new(def: &RecursiveDefinition, mode: GuardMode) -> Result<Self> {
        if def.context_arity() != 1 {
            return Err(SynthesisError::UnsupportedArity(def.context_arity()));
        }
        let translated = match mode {
            GuardMode::Direct => None,
            GuardMode::Translated => {
                let wv = world_view_scheme(def)?;
                let vocab = def.vocab();
                let x = Term::Const(def.context()[0].clone());
                let present = CompiledFormula::new(&Formula::RelVar("B".into(), vec![x]), vocab)?;
                let guards = def
                    .rules()
                    .iter()
                    .map(|r| Ok(CompiledFormula::new(&wv.translate(&r.guard)?, vocab)?))
                    .collect::<Result<_>>()?;
                let q_names = vocab.relations.iter().map(|r| format!("Q{}", r.name)).collect();
                Some(WorldViewGuards { present, guards, q_names })
            }
        };
        Ok(ExpansionEvaluator { def: def.compile()?, mode, translated, budget: Budget::unlimited() })
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn mode(&self) -> GuardMode {
        self.mode
    }

    pub fn definition(&self) -> &CompiledDefinition {
        &self.def
    }

    fn rule_count(&self) -> usize {
        self.def.rules.len()
    }

    /// Whether `x` is in `view` and, if so, the rules whose guard holds there.
    fn status(&self, g: &IncidenceStructure, view: &IncidenceStructure, x: ElemId) -> Result<Option<Vec<usize>>> {
        match &self.translated {
            None => {
                if !view.contains(x) {
                    return Ok(None);
                }
                let m = Model::new(view);
                let a = self.def.context_assignment(x);
                let mut out = Vec::new();
                for (i, r) in self.def.rules.iter().enumerate() {
                    if r.guard.eval(&m, &a)? {
                        out.push(i);
                    }
                }
                Ok(Some(out))
            }
            Some(t) => {
                let mut a = self.def.context_assignment(x).with_so("B", Relation::unary(view.universe().iter().copied()));
                for (q, tuples) in t.q_names.iter().zip(view.relations()) {
                    a = a.with_so(q, Relation { arity: arity_of(view, q), tuples: tuples.clone() });
                }
                let m = Model::new(g);
                if !t.present.eval(&m, &a)? {
                    return Ok(None);
                }
                let mut out = Vec::new();
                for (i, guard) in t.guards.iter().enumerate() {
                    if guard.eval(&m, &a)? {
                        out.push(i);
                    }
                }
                Ok(Some(out))
            }
        }
    }

    /// Checks one coloring of the contexts of `s` (listed in its universe order).
    pub fn simulate(&self, s: &IncidenceStructure, coloring: &[Mark]) -> Result<Simulation> {
        if coloring.len() != s.len() {
            return Err(SynthesisError::ColoringLength { expected: s.len(), found: coloring.len() });
        }
        let invalid = |why: String| Ok(Simulation { valid: false, contribution: Polynomial::one(), reason: Some(why) });
        let mut view = s.clone();
        let mut contribution = Polynomial::one();
        for (&x, &mark) in s.universe().iter().zip(coloring) {
            let status = self.status(s, &view, x)?;
            match (mark, status) {
                (Mark::Deleted, None) => {}
                (Mark::Deleted, Some(_)) => return invalid(format!("{} is present but marked D", s.name(x))),
                (Mark::Rule(_), None) => {
                    return invalid(format!("{} is already deleted but marked {}", s.name(x), mark.label()))
                }
                (Mark::Rule(i), Some(enabled)) => {
                    if i >= self.rule_count() {
                        return invalid(format!("{} is marked with unknown rule {}", s.name(x), mark.label()));
                    }
                    if !enabled.contains(&i) {
                        return invalid(format!("guard of {} fails at {}", mark.label(), s.name(x)));
                    }
                    let (sigma, next) = self.def.step(i, &Model::new(&view), x)?;
                    contribution = &contribution * &sigma;
                    view = next;
                }
            }
        }
        if !view.is_empty() {
            return invalid(format!("final world view is not empty: {}", view.describe()));
        }
        Ok(Simulation { valid: true, contribution, reason: None })
    }

    /// Sum over all valid colorings, found depth-first with invalid prefixes cut off.
    pub fn evaluate(&self, s: &IncidenceStructure) -> Result<Synthesized> {
        let mut out = Synthesized { value: Polynomial::zero(), valid_colorings: 0 };
        self.walk(s, s.clone(), 0, Polynomial::one(), &mut Vec::new(), &mut |_, c| {
            out.value = &out.value + c;
            out.valid_colorings += 1;
        })?;
        Ok(out)
    }

    /// Evaluates with the universe listed in `order`.
    pub fn evaluate_in_order(&self, s: &IncidenceStructure, order: &[ElemId]) -> Result<Synthesized> {
        self.evaluate(&s.reordered(order)?)
    }

    fn walk(
        &self,
        g: &IncidenceStructure,
        view: IncidenceStructure,
        k: usize,
        acc: Polynomial,
        marks: &mut Vec<Mark>,
        emit: &mut impl FnMut(&[Mark], &Polynomial),
    ) -> Result<()> {
        self.budget.check()?;
        let Some(&x) = g.universe().get(k) else {
            assert!(view.is_empty(), "a complete valid coloring leaves an empty world view");
            emit(marks, &acc);
            return Ok(());
        };
        match self.status(g, &view, x)? {
            None => {
                marks.push(Mark::Deleted);
                self.walk(g, view, k + 1, acc, marks, emit)?;
                marks.pop();
            }
            Some(enabled) => {
                let m = Model::new(&view);
                for i in enabled {
                    let (sigma, next) = self.def.step(i, &m, x)?;
                    marks.push(Mark::Rule(i));
                    self.walk(g, next, k + 1, &acc * &sigma, marks, emit)?;
                    marks.pop();
                }
            }
        }
        Ok(())
    }

    /// Enumerates every coloring with an odometer and simulates each one.
    pub fn evaluate_exhaustive(&self, s: &IncidenceStructure) -> Result<Synthesized> {
        let base = self.rule_count() as u128 + 1;
        let total = (0..s.len()).try_fold(1u128, |t, _| t.checked_mul(base)).unwrap_or(u128::MAX);
        if total > EXHAUSTIVE_LIMIT {
            return Err(SynthesisError::TooManyColorings(total, EXHAUSTIVE_LIMIT));
        }
        let marks: Vec<Mark> = (0..self.rule_count()).map(Mark::Rule).chain([Mark::Deleted]).collect();
        let mut digits = vec![0usize; s.len()];
        let mut out = Synthesized { value: Polynomial::zero(), valid_colorings: 0 };
        loop {
            self.budget.check()?;
            let coloring: Vec<Mark> = digits.iter().map(|&d| marks[d]).collect();
            let sim = self.simulate(s, &coloring)?;
            if sim.valid {
                out.value = &out.value + &sim.contribution;
                out.valid_colorings += 1;
            }
            let mut i = digits.len();
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < marks.len() {
                    break;
                }
                digits[i] = 0;
            }
        }
    }

    /// One line per valid coloring, e.g. `e1:U2 v1:U1 v2:U1 => X^2`.
    pub fn dump(&self, s: &IncidenceStructure) -> Result<String> {
        let mut text = String::new();
        self.walk(s, s.clone(), 0, Polynomial::one(), &mut Vec::new(), &mut |marks, c| {
            let parts: Vec<String> =
                s.universe().iter().zip(marks).map(|(&x, m)| format!("{}:{}", s.name(x), m.label())).collect();
            let _ = writeln!(text, "{} => {}", parts.join(" "), c);
        })?;
        Ok(text)
    }
}

fn arity_of(view: &IncidenceStructure, q: &str) -> usize {
    view.vocab().arity(&q[1..]).unwrap_or(0)
}

/// Comparison of the synthesized expansion with the recursion on a set of ordered structures.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub instances: usize,
    pub mismatches: Vec<String>,
    /// Set when the budget ran out before every instance was checked.
    pub partial: bool,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && !self.partial
    }
}

/// Checks value equality and that the number of valid colorings equals the number of leaves of
/// the deconstruction tree, on every structure (each in its own universe order).
pub fn equivalence_check(ev: &ExpansionEvaluator, corpus: &[IncidenceStructure], budget: Budget) -> Result<EquivalenceReport> {
    let mut report = EquivalenceReport::default();
    let ev = ev.clone().with_budget(budget);
    for s in corpus {
        if budget.check().is_err() {
            report.partial = true;
            break;
        }
        let rec = match RecursiveEvaluator::new(&ev.def).with_budget(budget).evaluate(s) {
            Err(RecurrenceError::Budget(_)) => {
                report.partial = true;
                break;
            }
            other => other?,
        };
        let syn = match ev.evaluate(s) {
            Err(SynthesisError::Budget(_)) => {
                report.partial = true;
                break;
            }
            other => other?,
        };
        report.instances += 1;
        if syn.value != rec.value {
            report.mismatches.push(format!("{}: synthesized {} but recursive {}", s.describe(), syn.value, rec.value));
        } else if syn.valid_colorings != rec.leaves {
            report.mismatches.push(format!(
                "{}: {} valid colorings but {} leaves",
                s.describe(),
                syn.valid_colorings,
                rec.leaves
            ));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{builtin_graph, VocabTag};

    const MATCHING: &str = r#"
(recursive-definition matching-test
  (order (forall (a b) (implies (and (PE a) (PV b)) (rel O a b))))
  (rule isolated (guard (and (PV x) (not (exists e (inc x e))))) (scheme-ref delete) (coeff (const X)))
  (rule delete (guard (PE x)) (scheme-ref delete) (coeff (const 1)))
  (rule extract (guard (PE x)) (scheme-ref extract) (coeff (const Y))))
"#;

    fn k2() -> IncidenceStructure {
        let s = IncidenceStructure::from_graph(&builtin_graph("k2", false).unwrap(), VocabTag::Graph2).unwrap();
        s.reordered(&s.edges_first_order()).unwrap()
    }

    fn matching(mode: GuardMode) -> ExpansionEvaluator {
        ExpansionEvaluator::new(&RecursiveDefinition::parse(MATCHING).unwrap(), mode).unwrap()
    }

    #[test]
    fn matching_on_k2() {
        for mode in [GuardMode::Direct, GuardMode::Translated] {
            let ev = matching(mode);
            let out = ev.evaluate(&k2()).unwrap();
            assert_eq!(out.value.to_string(), "X^2 + Y");
            assert_eq!(out.valid_colorings, 2);
            assert_eq!(ev.evaluate_exhaustive(&k2()).unwrap(), out);
        }
    }

    #[test]
    fn single_colorings() {
        use Mark::*;
        let ev = matching(GuardMode::Direct);
        let s = k2();
        let ok = ev.simulate(&s, &[Rule(1), Rule(0), Rule(0)]).unwrap();
        assert!(ok.valid);
        assert_eq!(ok.contribution.to_string(), "X^2");
        assert!(ev.simulate(&s, &[Rule(2), Deleted, Deleted]).unwrap().valid);
        let bad = ev.simulate(&s, &[Rule(2), Rule(0), Rule(0)]).unwrap();
        assert!(!bad.valid);
        assert!(bad.contribution.is_one());
        assert!(!ev.simulate(&s, &[Rule(1), Deleted, Rule(0)]).unwrap().valid);
    }

    #[test]
    fn dump_lists_valid_colorings() {
        let text = matching(GuardMode::Direct).dump(&k2()).unwrap();
        assert_eq!(text, "e1:U2 v1:U1 v2:U1 => X^2\ne1:U3 v1:D v2:D => Y\n");
    }

    #[test]
    fn arity_two_is_rejected() {
        use crate::logic::FormulaParser;
        use crate::polyring::PolyExpr;
        use crate::recurrence::GuardedDeconstruction;
        use crate::structures::Vocabulary;
        let v = Vocabulary::graph2();
        let mut fp = FormulaParser::new(&v);
        fp.add_constant("x1");
        fp.add_constant("x2");
        let scheme =
            TranslationScheme::parse("(scheme d (params x1 x2) (domain (y) (not (= y x1))) (relation N (y z) (rel N y z)))", &fp)
                .unwrap();
        let rule = GuardedDeconstruction {
            name: "d".into(),
            action: "delete".into(),
            scheme,
            guard: Formula::True,
            coeff: PolyExpr::constant(1),
        };
        let def = RecursiveDefinition::new("pairs", &v, 2, Formula::True, vec![rule]).unwrap();
        assert_eq!(synthesize(&def).unwrap_err(), SynthesisError::UnsupportedArity(2));
    }
}
