//! Translation schemes: the transduction Φ* on structures, the translation Φ♯ on formulas, and
//! their composition.

pub mod corpus;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

use itertools::Itertools;
use thiserror::Error;

use crate::logic::ast::fresh_name;
use crate::logic::{
    expand_natives, read_all, CompiledFormula, Formula, FormulaParser, LogicError, Model, SExp, SoReplacement, Term,
};
use crate::logic::Assignment;
use crate::structures::{ElemId, IncidenceStructure, StructureError, VocabTag, Vocabulary};

const SURGERY_DEFINITIONS: &str = include_str!("surgery.sexp");
const DIRECTED_SURGERY_DEFINITIONS: &str = include_str!("surgery_directed.sexp");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslationError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("vocabulary mismatch: {0}")]
    Vocabulary(String),
    #[error("malformed scheme: {0}")]
    Malformed(String),
}

/// Φ = ⟨φ, ψ₁..ψ_k⟩ from a source to a target vocabulary. `φ` has one free variable; ψ_i has
/// one free variable per place of the i-th target relation. Parameters are constant symbols of
/// the source vocabulary, assigned at transduction time.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationScheme {
    name: String,
    source: Vocabulary,
    target: Arc<Vocabulary>,
    params: Vec<String>,
    domain: (String, Formula),
    relations: Vec<(Vec<String>, Formula)>,
}

impl TranslationScheme {
    pub fn new(
        name: &str,
        source: &Vocabulary,
        target: &Vocabulary,
        params: &[&str],
        domain: (&str, Formula),
        relations: Vec<(Vec<String>, Formula)>,
    ) -> Result<Self, TranslationError> {
        let malformed = |m: String| Err(TranslationError::Malformed(format!("{name}: {m}")));
        let params: Vec<String> = params.iter().map(|p| p.to_string()).collect();
        if relations.len() != target.relations.len() {
            return malformed(format!(
                "{} relation formulas for {} target relations",
                relations.len(),
                target.relations.len()
            ));
        }
        let check = |vars: &[String], f: &Formula, what: &str| -> Result<(), TranslationError> {
            if (1..vars.len()).any(|i| vars[..i].contains(&vars[i])) {
                return Err(TranslationError::Malformed(format!("{name}: repeated variable in {what}")));
            }
            if let Some(v) = vars.iter().find(|v| params.contains(v)) {
                return Err(TranslationError::Malformed(format!("{name}: `{v}` is both a variable and a parameter")));
            }
            if let Some(v) = f.free_fo().into_iter().find(|v| !vars.contains(v)) {
                return Err(TranslationError::Malformed(format!("{name}: {what} has stray free variable `{v}`")));
            }
            if let Some(c) = f.constants().into_iter().find(|c| !params.contains(c)) {
                return Err(TranslationError::Malformed(format!("{name}: {what} mentions undeclared parameter `{c}`")));
            }
            Ok(())
        };
        check(&[domain.0.to_string()], &domain.1, "domain")?;
        for (sym, (vars, f)) in target.relations.iter().zip(&relations) {
            if vars.len() != sym.arity {
                return malformed(format!("relation {} needs {} variables, got {}", sym.name, sym.arity, vars.len()));
            }
            check(vars, f, &format!("relation {}", sym.name))?;
        }
        let mut target = target.clone();
        target.constants.clear();
        Ok(TranslationScheme {
            name: name.to_string(),
            source: source.clone().with_constants(&params),
            target: Arc::new(target),
            params,
            domain: (domain.0.to_string(), domain.1),
            relations,
        })
    }

    /// The scheme leaving every structure unchanged.
    pub fn identity(vocab: &Vocabulary) -> Self {
        let relations = vocab
            .relations
            .iter()
            .map(|r| {
                let vars: Vec<String> = (1..=r.arity).map(|i| format!("v{i}")).collect();
                let f = Formula::Rel(r.name.clone(), vars.iter().map(|v| Term::var(v)).collect());
                (vars, f)
            })
            .collect();
        Self::new("identity", vocab, vocab, &[], ("y", Formula::True), relations).expect("identity is well formed")
    }

    /// Parses `(scheme NAME [(source V)] [(target V)] [(params p...)] (domain (y) φ) (relation R (v...) ψ)...)`.
    /// Formulas may use the definitions loaded into `parser`, whose vocabulary is the source.
    pub fn parse(text: &str, parser: &FormulaParser) -> Result<Self, TranslationError> {
        let es = read_all(text)?;
        match es.as_slice() {
            [e] => Self::from_sexp(e, parser),
            _ => Err(TranslationError::Malformed("expected exactly one (scheme ...) form".into())),
        }
    }

    pub fn from_sexp(e: &SExp, parser: &FormulaParser) -> Result<Self, TranslationError> {
        let items = e.list().filter(|_| e.head() == Some("scheme")).ok_or_else(|| e.error("expected (scheme NAME ...)"))?;
        let name = items.get(1).and_then(|n| n.atom()).ok_or_else(|| e.error("scheme needs a name"))?;
        let source = parser.vocab().clone();
        let mut target = source.clone();
        let mut params: Vec<String> = Vec::new();
        let mut clauses = Vec::new();
        for c in &items[2..] {
            let args = c.list().map(|l| &l[1..]).unwrap_or(&[]);
            match c.head() {
                Some("source") => {
                    let v = args.first().and_then(|a| a.atom()).and_then(Vocabulary::by_name);
                    if !v.is_some_and(|v| v.same_relations(&source)) {
                        return Err(c.error("source vocabulary differs from the parser's").into());
                    }
                }
                Some("target") => {
                    target = args
                        .first()
                        .and_then(|a| a.atom())
                        .and_then(Vocabulary::by_name)
                        .ok_or_else(|| c.error("unknown target vocabulary"))?;
                }
                Some("params") => {
                    for a in args {
                        params.push(a.atom().ok_or_else(|| a.error("parameter must be a symbol"))?.to_string());
                    }
                }
                Some("domain") | Some("relation") => clauses.push(c),
                _ => return Err(c.error("expected source, target, params, domain or relation").into()),
            }
        }
        let mut p = parser.clone();
        for q in &params {
            p.add_constant(q);
        }
        let vars_of = |x: &SExp| -> Result<Vec<String>, TranslationError> {
            let list = x.list().ok_or_else(|| x.error("expected a variable list"))?;
            Ok(list
                .iter()
                .map(|v| v.atom().map(str::to_string).ok_or_else(|| v.error("expected a variable")))
                .collect::<Result<_, _>>()?)
        };
        let mut domain = None;
        let mut relations: Vec<Option<(Vec<String>, Formula)>> = vec![None; target.relations.len()];
        for c in clauses {
            let args = &c.list().expect("list")[1..];
            if c.head() == Some("domain") {
                let (var, body) = match args {
                    [vars, body] => {
                        let vs = vars_of(vars)?;
                        if vs.len() != 1 {
                            return Err(vars.error("domain formula has exactly one variable").into());
                        }
                        (vs[0].clone(), body)
                    }
                    [body] => ("y".to_string(), body),
                    _ => return Err(c.error("expected (domain (y) form)").into()),
                };
                domain = Some((var, p.formula(body)?));
            } else {
                let sym = args.first().and_then(|s| s.atom()).ok_or_else(|| c.error("expected (relation SYM ...)"))?;
                let idx = target.relation_index(sym).ok_or_else(|| LogicError::UnknownSymbol(sym.to_string()))?;
                let arity = target.relations[idx].arity;
                let (vars, body) = match &args[1..] {
                    [vars, body] => (vars_of(vars)?, body),
                    [body] => (default_vars(arity), body),
                    _ => return Err(c.error("expected (relation SYM (vars) form)").into()),
                };
                if relations[idx].is_some() {
                    return Err(c.error(format!("relation {sym} defined twice")).into());
                }
                relations[idx] = Some((vars, p.formula(body)?));
            }
        }
        let (dvar, dform) = domain.ok_or_else(|| e.error("scheme needs a domain clause"))?;
        let relations = relations
            .into_iter()
            .zip(&target.relations)
            .map(|(r, sym)| r.ok_or_else(|| TranslationError::Malformed(format!("{name}: no formula for relation {}", sym.name))))
            .collect::<Result<Vec<_>, _>>()?;
        let prefs: Vec<&str> = params.iter().map(String::as_str).collect();
        Self::new(name, &source, &target, &prefs, (&dvar, dform), relations)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Source vocabulary, with the parameters as constants.
    pub fn source(&self) -> &Vocabulary {
        &self.source
    }

    pub fn target(&self) -> &Arc<Vocabulary> {
        &self.target
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn domain(&self) -> (&str, &Formula) {
        (&self.domain.0, &self.domain.1)
    }

    pub fn relations(&self) -> &[(Vec<String>, Formula)] {
        &self.relations
    }

    /// Renames the scheme.
    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// Renames parameters; names not in `map` are kept.
    pub fn rename_params(&self, map: &[(&str, &str)]) -> Result<Self, TranslationError> {
        let rename = |f: &Formula| -> Formula { rename_constants(f, map) };
        let params: Vec<String> =
            self.params.iter().map(|p| map.iter().find(|(a, _)| a == p).map_or(p.clone(), |(_, b)| b.to_string())).collect();
        let prefs: Vec<&str> = params.iter().map(String::as_str).collect();
        let mut source = self.source.clone();
        source.constants.clear();
        Self::new(
            &self.name,
            &source,
            &self.target,
            &prefs,
            (&self.domain.0, rename(&self.domain.1)),
            self.relations.iter().map(|(v, f)| (v.clone(), rename(f))).collect(),
        )
    }

    /// Largest quantifier rank among the scheme's formulas.
    pub fn quantifier_rank(&self) -> usize {
        self.relations.iter().map(|(_, f)| f.quantifier_rank()).fold(self.domain.1.quantifier_rank(), usize::max)
    }

    /// Compiles the formulas for repeated transduction.
    pub fn compile(&self) -> Result<CompiledScheme, TranslationError> {
        Ok(CompiledScheme {
            source: self.source.clone(),
            target: self.target.clone(),
            domain: (self.domain.0.clone(), CompiledFormula::new(&self.domain.1, &self.source)?),
            relations: self
                .relations
                .iter()
                .map(|(v, f)| Ok((v.clone(), CompiledFormula::new(f, &self.source)?)))
                .collect::<Result<_, TranslationError>>()?,
        })
    }

    /// Φ*(M): the elements satisfying φ, with each relation cut down to them. The order is the
    /// source order restricted to the new universe.
    pub fn transduce(&self, s: &IncidenceStructure, a: &Assignment) -> Result<IncidenceStructure, TranslationError> {
        self.compile()?.apply(s, a)
    }

    /// `φ(t)`.
    fn guard(&self, t: &Term) -> Formula {
        self.domain.1.substitute_fo(&self.domain.0, t)
    }

    fn guarded(&self, core: Formula, ts: &[Term]) -> Formula {
        let mut parts = vec![core];
        parts.extend(ts.iter().map(|t| self.guard(t)));
        Formula::conj(parts)
    }

    /// Φ♯(θ) for a formula over the target vocabulary. Native atoms of θ are first replaced by
    /// their second-order definitions.
    pub fn translate(&self, theta: &Formula) -> Result<Formula, TranslationError> {
        let theta = if theta.has_natives() { expand_natives(theta, &self.target)? } else { theta.clone() };
        let mut reserved: BTreeSet<String> = self.domain.1.free_so().into_keys().collect();
        for (_, f) in &self.relations {
            reserved.extend(f.free_so().into_keys());
        }
        self.tr(&theta, &reserved)
    }

    fn tr(&self, f: &Formula, reserved: &BTreeSet<String>) -> Result<Formula, TranslationError> {
        Ok(match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Eq(a, b) | Formula::Less(a, b) => self.guarded(f.clone(), &[a.clone(), b.clone()]),
            Formula::RelVar(_, ts) => self.guarded(f.clone(), ts),
            Formula::Rel(r, ts) => {
                let idx = self
                    .target
                    .relation_index(r)
                    .ok_or_else(|| TranslationError::Vocabulary(format!("`{r}` is not a relation of {}", self.target.name)))?;
                let (vars, psi) = &self.relations[idx];
                let map: HashMap<String, Term> = vars.iter().cloned().zip(ts.iter().cloned()).collect();
                self.guarded(psi.substitute(&map, &HashMap::new(), None)?, ts)
            }
            Formula::Not(a) => Formula::not(self.tr(a, reserved)?),
            Formula::And(a, b) => Formula::and(self.tr(a, reserved)?, self.tr(b, reserved)?),
            Formula::Or(a, b) => Formula::or(self.tr(a, reserved)?, self.tr(b, reserved)?),
            Formula::Implies(a, b) => Formula::implies(self.tr(a, reserved)?, self.tr(b, reserved)?),
            Formula::Exists(v, b) => Formula::exists(v, Formula::and(self.guard(&Term::var(v)), self.tr(b, reserved)?)),
            Formula::Forall(v, b) => {
                Formula::forall(v, Formula::implies(self.guard(&Term::var(v)), self.tr(b, reserved)?))
            }
            Formula::ExistsRel(u, k, b) | Formula::ForallRel(u, k, b) => {
                // A bound relation variable must not capture a free one of the scheme.
                let (u, body) = if reserved.contains(u) {
                    let mut avoid: Vec<String> = reserved.iter().cloned().collect();
                    avoid.extend(b.all_names());
                    let refs: Vec<&str> = avoid.iter().map(String::as_str).collect();
                    let u2 = fresh_name(u, &refs);
                    let mut so = HashMap::new();
                    so.insert(u.clone(), SoReplacement::Rename(u2.clone()));
                    (u2, b.substitute(&HashMap::new(), &so, None)?)
                } else {
                    (u.clone(), (**b).clone())
                };
                let inside = self.inside(&u, *k);
                let body = self.tr(&body, reserved)?;
                if matches!(f, Formula::ExistsRel(..)) {
                    Formula::ExistsRel(u, *k, Box::new(Formula::and(inside, body)))
                } else {
                    Formula::ForallRel(u, *k, Box::new(Formula::implies(inside, body)))
                }
            }
            Formula::Native(n) => {
                return Err(TranslationError::Malformed(format!("native atom {n} survived expansion")));
            }
        })
    }

    /// `∀v̄ (U(v̄) → φ(v₁) ∧ … ∧ φ(v_k))`: U lives inside the new universe.
    fn inside(&self, u: &str, k: usize) -> Formula {
        let vars: Vec<String> = (1..=k).map(|i| fresh_name(&format!("t{i}"), &[u])).collect();
        let ts: Vec<Term> = vars.iter().map(|v| Term::var(v)).collect();
        let body = Formula::implies(Formula::RelVar(u.to_string(), ts.clone()), Formula::conj(ts.iter().map(|t| self.guard(t)).collect()));
        vars.iter().rev().fold(body, |acc, v| Formula::forall(v, acc))
    }

    /// The scheme applying `self` and then `next`: domain `φ₁(y) ∧ Φ₁♯(φ₂)(y)`, relations
    /// `Φ₁♯(ψ₂)`. Parameters with the same name are the same constant.
    pub fn compose(&self, next: &TranslationScheme) -> Result<TranslationScheme, TranslationError> {
        if !self.target.same_relations(&next.source) {
            return Err(TranslationError::Vocabulary(format!(
                "{} produces {} structures but {} reads {}",
                self.name, self.target.name, next.name, next.source.name
            )));
        }
        let (y, phi2) = &next.domain;
        let domain = Formula::and(self.guard(&Term::var(y)), self.translate(phi2)?);
        let relations = next
            .relations
            .iter()
            .map(|(vars, psi)| Ok((vars.clone(), self.translate(psi)?)))
            .collect::<Result<Vec<_>, TranslationError>>()?;
        let mut params: Vec<&str> = self.params.iter().map(String::as_str).collect();
        for p in &next.params {
            if !params.contains(&p.as_str()) {
                params.push(p);
            }
        }
        let mut source = self.source.clone();
        source.constants.clear();
        Self::new(&format!("{}.{}", self.name, next.name), &source, &next.target, &params, (y, domain), relations)
    }
}

fn default_vars(arity: usize) -> Vec<String> {
    const NAMES: [&str; 4] = ["y", "z", "w", "u"];
    (0..arity).map(|i| NAMES.get(i).map_or_else(|| format!("y{i}"), |s| s.to_string())).collect()
}

fn rename_constants(f: &Formula, map: &[(&str, &str)]) -> Formula {
    let rt = |t: &Term| match t {
        Term::Const(c) => Term::Const(map.iter().find(|(a, _)| a == c).map_or(c.clone(), |(_, b)| b.to_string())),
        _ => t.clone(),
    };
    let go = |x: &Formula| rename_constants(x, map);
    match f {
        Formula::Eq(a, b) => Formula::Eq(rt(a), rt(b)),
        Formula::Less(a, b) => Formula::Less(rt(a), rt(b)),
        Formula::Rel(r, ts) => Formula::Rel(r.clone(), ts.iter().map(rt).collect()),
        Formula::RelVar(u, ts) => Formula::RelVar(u.clone(), ts.iter().map(rt).collect()),
        Formula::Native(n) => {
            let mut n = (**n).clone();
            n.terms = n.terms.iter().map(rt).collect();
            Formula::Native(Box::new(n))
        }
        Formula::Not(a) => Formula::not(go(a)),
        Formula::And(a, b) => Formula::and(go(a), go(b)),
        Formula::Or(a, b) => Formula::or(go(a), go(b)),
        Formula::Implies(a, b) => Formula::implies(go(a), go(b)),
        Formula::Exists(v, a) => Formula::exists(v, go(a)),
        Formula::Forall(v, a) => Formula::forall(v, go(a)),
        Formula::ExistsRel(u, k, a) => Formula::ExistsRel(u.clone(), *k, Box::new(go(a))),
        Formula::ForallRel(u, k, a) => Formula::ForallRel(u.clone(), *k, Box::new(go(a))),
        Formula::True | Formula::False => f.clone(),
    }
}

impl fmt::Display for TranslationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(scheme {} (source {}) (target {})", self.name, self.source.name, self.target.name)?;
        if !self.params.is_empty() {
            write!(f, " (params {})", self.params.join(" "))?;
        }
        write!(f, " (domain ({}) {})", self.domain.0, self.domain.1)?;
        for (sym, (vars, psi)) in self.target.relations.iter().zip(&self.relations) {
            write!(f, " (relation {} ({}) {})", sym.name, vars.join(" "), psi)?;
        }
        write!(f, ")")
    }
}

/// A scheme with its formulas compiled.
#[derive(Debug, Clone)]
pub struct CompiledScheme {
    source: Vocabulary,
    target: Arc<Vocabulary>,
    domain: (String, CompiledFormula),
    relations: Vec<(Vec<String>, CompiledFormula)>,
}

impl CompiledScheme {
    pub fn apply(&self, s: &IncidenceStructure, a: &Assignment) -> Result<IncidenceStructure, TranslationError> {
        self.apply_in(&Model::new(s), a)
    }

    /// Transduces the structure behind an already prepared model.
    pub fn apply_in(&self, m: &Model, a: &Assignment) -> Result<IncidenceStructure, TranslationError> {
        let s = m.structure();
        if !self.source.same_relations(s.vocab()) {
            return Err(TranslationError::Vocabulary(format!(
                "scheme over {} applied to a {} structure",
                self.source.name,
                s.vocab().name
            )));
        }
        let n = m.size();
        let (dvar, dform) = &self.domain;
        let (mut env, slots) = dform.layout().env_open(m, a, &[dvar.as_str()])?;
        let mut keep = Vec::new();
        for p in 0..n {
            if let Some(slot) = slots[0] {
                env.fo[slot] = p;
            }
            if dform.eval_env(m, &mut env)? {
                keep.push(p);
            }
        }
        let mut rels = Vec::with_capacity(self.relations.len());
        for (vars, psi) in &self.relations {
            let open: Vec<&str> = vars.iter().map(String::as_str).collect();
            let (mut env, slots) = psi.layout().env_open(m, a, &open)?;
            let mut tuples = BTreeSet::new();
            for t in (0..vars.len()).map(|_| keep.iter().copied()).multi_cartesian_product() {
                for (slot, &p) in slots.iter().zip(&t) {
                    if let Some(slot) = slot {
                        env.fo[*slot] = p;
                    }
                }
                if psi.eval_env(m, &mut env)? {
                    tuples.insert(t.iter().map(|&p| m.element(p)).collect::<Vec<ElemId>>());
                }
            }
            rels.push(tuples);
        }
        let universe = keep.iter().map(|&p| m.element(p)).collect();
        let target = if s.vocab().same_relations(&self.target) { s.vocab().clone() } else { self.target.clone() };
        Ok(s.derive(target, universe, rels))
    }
}

/// `quantifier_rank(θ)`: nesting depth of first- and second-order quantifiers.
pub fn quantifier_rank(f: &Formula) -> usize {
    f.quantifier_rank()
}

/// Upper bound on `quantifier_rank(Φ♯(θ))`: the rank of θ plus the rank of Φ plus its number
/// of parameters, plus the widest relation quantifier of θ (each one is relativized by a block
/// of that many universal quantifiers).
pub fn rank_bound(scheme: &TranslationScheme, theta: &Formula) -> usize {
    let mut widest = 0;
    theta.visit(&mut |f| {
        if let Formula::ExistsRel(_, k, _) | Formula::ForallRel(_, k, _) = f {
            widest = widest.max(*k);
        }
    });
    theta.quantifier_rank() + scheme.quantifier_rank() + scheme.params.len() + widest
}

/// A formula parser for `vocab` with the surgery helper definitions loaded.
pub fn surgery_parser(vocab: &Vocabulary) -> Result<FormulaParser, TranslationError> {
    let mut p = FormulaParser::new(vocab);
    match vocab.tag {
        VocabTag::Graph2 => {
            p.load_defs(SURGERY_DEFINITIONS)?;
        }
        VocabTag::Directed2 => {
            p.load_defs(DIRECTED_SURGERY_DEFINITIONS)?;
        }
        _ => {}
    }
    Ok(p)
}

/// Text of the surgery helper definitions for a vocabulary, for callers building their own parser.
pub fn surgery_definitions(tag: VocabTag) -> &'static str {
    match tag {
        VocabTag::Graph2 => SURGERY_DEFINITIONS,
        VocabTag::Directed2 => DIRECTED_SURGERY_DEFINITIONS,
        _ => "",
    }
}

fn builtin(cell: &'static OnceLock<TranslationScheme>, vocab: fn() -> Vocabulary, text: &str) -> TranslationScheme {
    cell.get_or_init(|| {
        let p = surgery_parser(&vocab()).expect("built-in definitions parse");
        TranslationScheme::parse(text, &p).expect("built-in scheme parses")
    })
    .clone()
}

/// G − x for an edge x (or a vertex x).
pub fn delete_scheme() -> TranslationScheme {
    static S: OnceLock<TranslationScheme> = OnceLock::new();
    builtin(&S, Vocabulary::graph2, "(scheme delete (params x) (domain (y) (not (= y x))) (relation N (y z) (rel N y z)))")
}

/// G/x: drops x and its earlier end; the later end inherits the incidences.
pub fn contract_scheme() -> TranslationScheme {
    static S: OnceLock<TranslationScheme> = OnceLock::new();
    builtin(
        &S,
        Vocabulary::graph2,
        "(scheme contract (params x) (domain (y) (and (not (= y x)) (not (Left x y)))) (relation N (y z) (PsiContract x y z)))",
    )
}

/// G†x.
pub fn extract_scheme() -> TranslationScheme {
    static S: OnceLock<TranslationScheme> = OnceLock::new();
    builtin(
        &S,
        Vocabulary::graph2,
        "(scheme extract (params x) (domain (y) (not (Extracted x y))) (relation N (y z) (rel N y z)))",
    )
}

/// D − x.
pub fn delete_directed_scheme() -> TranslationScheme {
    static S: OnceLock<TranslationScheme> = OnceLock::new();
    builtin(
        &S,
        Vocabulary::directed2,
        "(scheme delete-directed (params x) (domain (y) (not (= y x))) \
         (relation NO (y z) (and (rel NO y z) (not (= z x)))) (relation NI (y z) (and (rel NI y z) (not (= y x)))))",
    )
}

/// D/x for loops and non-loops alike.
pub fn contract_directed_scheme() -> TranslationScheme {
    static S: OnceLock<TranslationScheme> = OnceLock::new();
    builtin(
        &S,
        Vocabulary::directed2,
        "(scheme contract-directed (params x) \
         (domain (y) (or (and (DLoop x) (DLoopKeep x y)) (and (not (DLoop x)) (DContractKeep x y)))) \
         (relation NO (y z) (rel NO y z)) (relation NI (y z) (PsiDContractIn x y z)))",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::evaluate;
    use crate::structures::{builtin_graph, contract_edge, delete_edge, extract_edge};

    fn g2(name: &str) -> IncidenceStructure {
        IncidenceStructure::from_graph(&builtin_graph(name, false).unwrap(), VocabTag::Graph2).unwrap()
    }

    fn at(s: &IncidenceStructure, x: &str) -> Assignment {
        Assignment::new().with_fo_named(s, "x", x).unwrap()
    }

    #[test]
    fn identity_is_identity() {
        let s = g2("k3");
        let id = TranslationScheme::identity(s.vocab());
        assert_eq!(id.transduce(&s, &Assignment::new()).unwrap(), s);
    }

    #[test]
    fn deletion_scheme_on_k2() {
        let k2 = g2("k2");
        let out = delete_scheme().transduce(&k2, &at(&k2, "e1")).unwrap();
        assert_eq!(out, g2("e2"));
        assert_eq!(out, delete_edge(&k2, k2.lookup("e1").unwrap()).unwrap());
    }

    #[test]
    fn extraction_scheme_on_p3() {
        let p3 = g2("p3");
        let out = extract_scheme().transduce(&p3, &at(&p3, "e1")).unwrap();
        assert_eq!(out.describe(), "[v3] N={}");
        assert_eq!(out, extract_edge(&p3, p3.lookup("e1").unwrap()).unwrap());
    }

    #[test]
    fn contraction_scheme_matches_surgery() {
        let c3 = g2("c3");
        for e in ["e1", "e2", "e3"] {
            let out = contract_scheme().transduce(&c3, &at(&c3, e)).unwrap();
            assert_eq!(out, contract_edge(&c3, c3.lookup(e).unwrap()).unwrap());
        }
        // A loop is deleted.
        let l = g2("loop1");
        assert_eq!(contract_scheme().transduce(&l, &at(&l, "e1")).unwrap(), g2("e1"));
    }

    #[test]
    fn missing_parameter_is_an_error() {
        let k2 = g2("k2");
        assert_eq!(
            delete_scheme().transduce(&k2, &Assignment::new()),
            Err(TranslationError::Logic(LogicError::Unassigned("x".into())))
        );
    }

    #[test]
    fn translation_clauses() {
        let s = delete_scheme();
        let atom = crate::logic::parse("(rel N a b)", &Vocabulary::graph2()).unwrap();
        assert_eq!(
            s.translate(&atom).unwrap().to_string(),
            "(and (rel N a b) (and (not (= a x)) (not (= b x))))"
        );
        let ex = crate::logic::parse("(exists y (PE y))", &Vocabulary::graph2()).unwrap();
        assert_eq!(
            s.translate(&ex).unwrap().to_string(),
            "(exists y (and (not (= y x)) (exists y'1 (and (not (= y'1 x)) (and (rel N y'1 y) (and (not (= y'1 x)) (not (= y x))))))))"
        );
    }

    #[test]
    fn translated_sentence_agrees() {
        let k3 = g2("k3");
        let theta = crate::logic::parse("(exists (a b) (and (rel N a b) (rel N a b)))", &Vocabulary::graph2()).unwrap();
        for x in ["e1", "v1"] {
            let a = at(&k3, x);
            let image = extract_scheme().transduce(&k3, &a).unwrap();
            let lhs = evaluate(&k3, &a, &extract_scheme().translate(&theta).unwrap()).unwrap();
            assert_eq!(lhs, evaluate(&image, &Assignment::new(), &theta).unwrap());
        }
    }

    #[test]
    fn display_round_trips() {
        let p = surgery_parser(&Vocabulary::graph2()).unwrap();
        for s in [delete_scheme(), contract_scheme(), extract_scheme()] {
            let again = TranslationScheme::parse(&s.to_string(), &p).unwrap();
            assert_eq!(again, s);
        }
    }

    #[test]
    fn malformed_schemes() {
        let p = surgery_parser(&Vocabulary::graph2()).unwrap();
        let bad = [
            "(scheme s (domain (y) (rel N y w)) (relation N (y z) true))",
            "(scheme s (domain (y) true))",
            "(scheme s (domain (y) true) (relation N (y) true))",
            "(scheme s (domain (y z) true) (relation N (y z) true))",
            "(scheme s (params y) (domain (y) true) (relation N (y z) true))",
        ];
        for text in bad {
            assert!(TranslationScheme::parse(text, &p).is_err(), "{text}");
        }
    }

    #[test]
    fn composition_vocabulary_check() {
        let d = TranslationScheme::identity(&Vocabulary::directed2());
        assert!(matches!(delete_scheme().compose(&d), Err(TranslationError::Vocabulary(_))));
    }
}
