use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::LogicError;
use crate::structures::{VocabTag, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(n: &str) -> Term {
        Term::Var(n.to_string())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }
}

/// Set arguments of native predicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SetExpr {
    Var(String),
    Vertices,
    Edges,
    All,
    Union(Box<SetExpr>, Box<SetExpr>),
}

impl SetExpr {
    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            SetExpr::Var(v) => {
                out.insert(v.clone());
            }
            SetExpr::Union(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            _ => {}
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn substitute(&self, so: &HashMap<String, SoReplacement>) -> SetExpr {
        match self {
            SetExpr::Var(v) => match so.get(v) {
                Some(SoReplacement::Rename(w)) => SetExpr::Var(w.clone()),
                Some(SoReplacement::Set(s)) => s.clone(),
                None => self.clone(),
            },
            SetExpr::Union(a, b) => SetExpr::Union(Box::new(a.substitute(so)), Box::new(b.substitute(so))),
            other => other.clone(),
        }
    }

    /// The formula `t ∈ self` over `vocab`.
    pub fn membership(&self, t: &Term, vocab: &Vocabulary) -> Result<Formula, LogicError> {
        Ok(match self {
            SetExpr::Var(v) => Formula::RelVar(v.clone(), vec![t.clone()]),
            SetExpr::Vertices => Formula::is_vertex(t, vocab)?,
            SetExpr::Edges => Formula::is_edge(t, vocab)?,
            SetExpr::All => Formula::True,
            SetExpr::Union(a, b) => Formula::or(a.membership(t, vocab)?, b.membership(t, vocab)?),
        })
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Var(v) => write!(f, "{v}"),
            SetExpr::Vertices => write!(f, "V"),
            SetExpr::Edges => write!(f, "E"),
            SetExpr::All => write!(f, "ALL"),
            SetExpr::Union(a, b) => write!(f, "(union {a} {b})"),
        }
    }
}

/// Built-in graph predicates, each with an equivalent second-order definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NativeKind {
    /// `(connected-via S s t)`
    ConnectedVia,
    /// `(cycle S)`
    Cycle,
    /// `(touching x D S)`
    Touching,
    /// `(last-in-comp x D S)`: `x ∈ D` is the order-last D-element of its S-component.
    LastInComp,
    /// `(on-cycle v B)`, directed.
    OnCycle,
    /// `(bridge e)`
    Bridge,
    /// `(spanning-forest F)`
    SpanningForest,
    /// `(cycle-path-cover B)`, directed.
    CyclePathCover,
    /// `(internally-active e F)`
    InternallyActive,
    /// `(externally-active e F)`
    ExternallyActive,
    /// `(cyclomatic-edge e A)`: `e ∈ A` closes a cycle with earlier edges of A.
    CyclomaticEdge,
    /// `(component-size x S k)`: the S-component of vertex x has exactly k vertices.
    ComponentSize(usize),
}

impl NativeKind {
    pub const ALL: [NativeKind; 12] = [
        NativeKind::ConnectedVia,
        NativeKind::Cycle,
        NativeKind::Touching,
        NativeKind::LastInComp,
        NativeKind::OnCycle,
        NativeKind::Bridge,
        NativeKind::SpanningForest,
        NativeKind::CyclePathCover,
        NativeKind::InternallyActive,
        NativeKind::ExternallyActive,
        NativeKind::CyclomaticEdge,
        NativeKind::ComponentSize(0),
    ];

    pub fn name(self) -> &'static str {
        match self {
            NativeKind::ConnectedVia => "connected-via",
            NativeKind::Cycle => "cycle",
            NativeKind::Touching => "touching",
            NativeKind::LastInComp => "last-in-comp",
            NativeKind::OnCycle => "on-cycle",
            NativeKind::Bridge => "bridge",
            NativeKind::SpanningForest => "spanning-forest",
            NativeKind::CyclePathCover => "cycle-path-cover",
            NativeKind::InternallyActive => "internally-active",
            NativeKind::ExternallyActive => "externally-active",
            NativeKind::CyclomaticEdge => "cyclomatic-edge",
            NativeKind::ComponentSize(_) => "component-size",
        }
    }

    pub fn from_name(name: &str) -> Option<NativeKind> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Argument layout: `t` term, `s` set, `n` number.
    pub fn signature(self) -> &'static str {
        match self {
            NativeKind::ConnectedVia => "stt",
            NativeKind::Cycle | NativeKind::SpanningForest | NativeKind::CyclePathCover => "s",
            NativeKind::Touching | NativeKind::LastInComp => "tss",
            NativeKind::OnCycle
            | NativeKind::InternallyActive
            | NativeKind::ExternallyActive
            | NativeKind::CyclomaticEdge => "ts",
            NativeKind::Bridge => "t",
            NativeKind::ComponentSize(_) => "tsn",
        }
    }

    pub fn directed_only(self) -> bool {
        matches!(self, NativeKind::OnCycle | NativeKind::CyclePathCover)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NativeAtom {
    pub kind: NativeKind,
    pub terms: Vec<Term>,
    pub sets: Vec<SetExpr>,
}

impl fmt::Display for NativeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.kind.name())?;
        let (mut ti, mut si) = (0, 0);
        for c in self.kind.signature().chars() {
            match c {
                't' => {
                    write!(f, " {}", self.terms[ti].name())?;
                    ti += 1;
                }
                's' => {
                    write!(f, " {}", self.sets[si])?;
                    si += 1;
                }
                _ => {
                    if let NativeKind::ComponentSize(k) = self.kind {
                        write!(f, " {k}")?;
                    }
                }
            }
        }
        write!(f, ")")
    }
}

/// Second-order formulas. `Less` is the built-in order `O`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    Less(Term, Term),
    Rel(String, Vec<Term>),
    RelVar(String, Vec<Term>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    ExistsRel(String, usize, Box<Formula>),
    ForallRel(String, usize, Box<Formula>),
    Native(Box<NativeAtom>),
}

/// What a relation variable is replaced by during substitution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SoReplacement {
    Rename(String),
    /// Only for unary variables: `U(t)` becomes `t ∈ set`.
    Set(SetExpr),
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b, a))
    }

    pub fn exists(v: &str, f: Formula) -> Formula {
        Formula::Exists(v.to_string(), Box::new(f))
    }

    pub fn forall(v: &str, f: Formula) -> Formula {
        Formula::Forall(v.to_string(), Box::new(f))
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    /// Right-nested conjunction; `True` when empty.
    pub fn conj(parts: Vec<Formula>) -> Formula {
        let mut it = parts.into_iter().rev();
        match it.next() {
            None => Formula::True,
            Some(last) => it.fold(last, |acc, f| Formula::and(f, acc)),
        }
    }

    /// Right-nested disjunction; `False` when empty.
    pub fn disj(parts: Vec<Formula>) -> Formula {
        let mut it = parts.into_iter().rev();
        match it.next() {
            None => Formula::False,
            Some(last) => it.fold(last, |acc, f| Formula::or(f, acc)),
        }
    }

    pub fn native(kind: NativeKind, terms: Vec<Term>, sets: Vec<SetExpr>) -> Formula {
        Formula::Native(Box::new(NativeAtom { kind, terms, sets }))
    }

    /// `P_E(t)`: t is an edge.
    pub fn is_edge(t: &Term, vocab: &Vocabulary) -> Result<Formula, LogicError> {
        let y = fresh_name("y", &[t.name()]);
        let z = fresh_name("z", &[t.name()]);
        Ok(match vocab.tag {
            VocabTag::Graph2 => Formula::exists(&y, Formula::Rel("N".into(), vec![Term::Var(y.clone()), t.clone()])),
            VocabTag::Directed2 => Formula::exists(
                &y,
                Formula::exists(
                    &z,
                    Formula::and(
                        Formula::Rel("NO".into(), vec![Term::Var(y.clone()), t.clone()]),
                        Formula::Rel("NI".into(), vec![t.clone(), Term::Var(z.clone())]),
                    ),
                ),
            ),
            VocabTag::Graph1 => Formula::False,
            VocabTag::Custom => return Err(LogicError::Unsupported(format!("edges in vocabulary {}", vocab.name))),
        })
    }

    /// `P_V(t) = ¬P_E(t)`.
    pub fn is_vertex(t: &Term, vocab: &Vocabulary) -> Result<Formula, LogicError> {
        Ok(match vocab.tag {
            VocabTag::Graph1 => Formula::True,
            _ => Formula::not(Formula::is_edge(t, vocab)?),
        })
    }

    /// Vertex `v` is an end of edge `e`.
    pub fn incident(v: &Term, e: &Term, vocab: &Vocabulary) -> Result<Formula, LogicError> {
        Ok(match vocab.tag {
            VocabTag::Graph2 => Formula::Rel("N".into(), vec![v.clone(), e.clone()]),
            VocabTag::Directed2 => Formula::or(
                Formula::Rel("NO".into(), vec![v.clone(), e.clone()]),
                Formula::Rel("NI".into(), vec![e.clone(), v.clone()]),
            ),
            VocabTag::Graph1 => Formula::False,
            VocabTag::Custom => {
                return Err(LogicError::Unsupported(format!("incidence in vocabulary {}", vocab.name)))
            }
        })
    }

    /// `∃^k x φ`: exactly k distinct witnesses.
    pub fn exists_exactly(k: usize, x: &str, body: Formula) -> Formula {
        let mut avoid: Vec<String> = body.all_names().into_iter().collect();
        avoid.push(x.to_string());
        let avoid_refs: Vec<&str> = avoid.iter().map(|s| s.as_str()).collect();
        if k == 0 {
            return Formula::not(Formula::exists(x, body));
        }
        let witnesses: Vec<String> = if k == 1 {
            vec![x.to_string()]
        } else {
            (1..=k).map(|i| fresh_name(&format!("{x}{i}"), &avoid_refs)).collect()
        };
        let z = fresh_name("z", &avoid_refs);
        let at = |name: &str| body.substitute_fo(x, &Term::Var(name.to_string()));
        let mut parts = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                parts.push(Formula::not(Formula::eq(Term::Var(witnesses[i].clone()), Term::Var(witnesses[j].clone()))));
            }
        }
        for w in &witnesses {
            parts.push(at(w));
        }
        let only = Formula::disj(
            witnesses.iter().map(|w| Formula::eq(Term::Var(z.clone()), Term::Var(w.clone()))).collect(),
        );
        parts.push(Formula::forall(&z, Formula::implies(at(&z), only)));
        witnesses.iter().rev().fold(Formula::conj(parts), |acc, w| Formula::exists(w, acc))
    }

    /// Free individual variables (constants excluded).
    pub fn free_fo(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut Vec::new(), &mut out, &mut BTreeMap::new(), &mut BTreeSet::new());
        out
    }

    /// Free relation variables with their arities (set arguments of natives count as arity 1).
    pub fn free_so(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.collect_free(&mut Vec::new(), &mut Vec::new(), &mut BTreeSet::new(), &mut out, &mut BTreeSet::new());
        out
    }

    /// Constant symbols occurring in the formula.
    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut Vec::new(), &mut BTreeSet::new(), &mut BTreeMap::new(), &mut out);
        out
    }

    fn collect_free(
        &self,
        fo_bound: &mut Vec<String>,
        so_bound: &mut Vec<String>,
        fo: &mut BTreeSet<String>,
        so: &mut BTreeMap<String, usize>,
        consts: &mut BTreeSet<String>,
    ) {
        let term = |t: &Term, fo: &mut BTreeSet<String>, consts: &mut BTreeSet<String>| match t {
            Term::Var(v) if !fo_bound.contains(v) => {
                fo.insert(v.clone());
            }
            Term::Const(c) => {
                consts.insert(c.clone());
            }
            _ => {}
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) | Formula::Less(a, b) => {
                term(a, fo, consts);
                term(b, fo, consts);
            }
            Formula::Rel(_, ts) => ts.iter().for_each(|t| term(t, fo, consts)),
            Formula::RelVar(u, ts) => {
                ts.iter().for_each(|t| term(t, fo, consts));
                if !so_bound.contains(u) {
                    so.insert(u.clone(), ts.len());
                }
            }
            Formula::Native(n) => {
                n.terms.iter().for_each(|t| term(t, fo, consts));
                for s in &n.sets {
                    for v in s.vars() {
                        if !so_bound.contains(&v) {
                            so.insert(v, 1);
                        }
                    }
                }
            }
            Formula::Not(a) => a.collect_free(fo_bound, so_bound, fo, so, consts),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free(fo_bound, so_bound, fo, so, consts);
                b.collect_free(fo_bound, so_bound, fo, so, consts);
            }
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                fo_bound.push(v.clone());
                a.collect_free(fo_bound, so_bound, fo, so, consts);
                fo_bound.pop();
            }
            Formula::ExistsRel(u, _, a) | Formula::ForallRel(u, _, a) => {
                so_bound.push(u.clone());
                a.collect_free(fo_bound, so_bound, fo, so, consts);
                so_bound.pop();
            }
        }
    }

    /// Every identifier used as a variable, relation variable or constant, bound or free.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Eq(a, b) | Formula::Less(a, b) => {
                out.insert(a.name().to_string());
                out.insert(b.name().to_string());
            }
            Formula::Rel(_, ts) => out.extend(ts.iter().map(|t| t.name().to_string())),
            Formula::RelVar(u, ts) => {
                out.insert(u.clone());
                out.extend(ts.iter().map(|t| t.name().to_string()));
            }
            Formula::Native(n) => {
                out.extend(n.terms.iter().map(|t| t.name().to_string()));
                for s in &n.sets {
                    out.extend(s.vars());
                }
            }
            Formula::Exists(v, _) | Formula::Forall(v, _) | Formula::ExistsRel(v, _, _) | Formula::ForallRel(v, _, _) => {
                out.insert(v.clone());
            }
            _ => {}
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(a)
            | Formula::Exists(_, a)
            | Formula::Forall(_, a)
            | Formula::ExistsRel(_, _, a)
            | Formula::ForallRel(_, _, a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn has_natives(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::Native(_)));
        found
    }

    /// Nesting depth of first- and second-order quantifiers. Native atoms count as atoms.
    pub fn quantifier_rank(&self) -> usize {
        match self {
            Formula::Not(a) => a.quantifier_rank(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.quantifier_rank().max(b.quantifier_rank())
            }
            Formula::Exists(_, a) | Formula::Forall(_, a) | Formula::ExistsRel(_, _, a) | Formula::ForallRel(_, _, a) => {
                1 + a.quantifier_rank()
            }
            _ => 0,
        }
    }

    /// Number of second-order quantifiers.
    pub fn so_quantifier_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |f| n += matches!(f, Formula::ExistsRel(..) | Formula::ForallRel(..)) as usize);
        n
    }

    pub fn substitute_fo(&self, var: &str, t: &Term) -> Formula {
        let mut fo = HashMap::new();
        fo.insert(var.to_string(), t.clone());
        self.substitute(&fo, &HashMap::new(), None).expect("no vocabulary needed")
    }

    /// Simultaneous capture-avoiding substitution of free individual variables and free
    /// relation variables. Replacing a relation variable by a set expression needs `vocab`.
    pub fn substitute(
        &self,
        fo: &HashMap<String, Term>,
        so: &HashMap<String, SoReplacement>,
        vocab: Option<&Vocabulary>,
    ) -> Result<Formula, LogicError> {
        if fo.is_empty() && so.is_empty() {
            return Ok(self.clone());
        }
        let st = |t: &Term| match t {
            Term::Var(v) => fo.get(v).cloned().unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        };
        Ok(match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Eq(a, b) => Formula::Eq(st(a), st(b)),
            Formula::Less(a, b) => Formula::Less(st(a), st(b)),
            Formula::Rel(r, ts) => Formula::Rel(r.clone(), ts.iter().map(st).collect()),
            Formula::RelVar(u, ts) => {
                let ts: Vec<Term> = ts.iter().map(st).collect();
                match so.get(u) {
                    None => Formula::RelVar(u.clone(), ts),
                    Some(SoReplacement::Rename(w)) => Formula::RelVar(w.clone(), ts),
                    Some(SoReplacement::Set(s)) => {
                        if ts.len() != 1 {
                            return Err(LogicError::Arity { symbol: u.clone(), expected: 1, found: ts.len() });
                        }
                        let vocab = vocab.ok_or_else(|| LogicError::Unsupported("set substitution needs a vocabulary".into()))?;
                        s.membership(&ts[0], vocab)?
                    }
                }
            }
            Formula::Native(n) => Formula::Native(Box::new(NativeAtom {
                kind: n.kind,
                terms: n.terms.iter().map(st).collect(),
                sets: n.sets.iter().map(|s| s.substitute(so)).collect(),
            })),
            Formula::Not(a) => Formula::not(a.substitute(fo, so, vocab)?),
            Formula::And(a, b) => Formula::and(a.substitute(fo, so, vocab)?, b.substitute(fo, so, vocab)?),
            Formula::Or(a, b) => Formula::or(a.substitute(fo, so, vocab)?, b.substitute(fo, so, vocab)?),
            Formula::Implies(a, b) => Formula::implies(a.substitute(fo, so, vocab)?, b.substitute(fo, so, vocab)?),
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                let mut inner = fo.clone();
                inner.remove(v);
                let captured = inner.values().any(|t| matches!(t, Term::Var(w) if w == v));
                let (v2, body) = if captured {
                    let v2 = fresh_for(v, a, fo, so);
                    (v2.clone(), a.substitute_fo(v, &Term::Var(v2)))
                } else {
                    (v.clone(), (**a).clone())
                };
                let body = Box::new(body.substitute(&inner, so, vocab)?);
                match self {
                    Formula::Exists(..) => Formula::Exists(v2, body),
                    _ => Formula::Forall(v2, body),
                }
            }
            Formula::ExistsRel(u, k, a) | Formula::ForallRel(u, k, a) => {
                let mut inner = so.clone();
                inner.remove(u);
                let captured = inner.values().any(|r| match r {
                    SoReplacement::Rename(w) => w == u,
                    SoReplacement::Set(s) => s.vars().contains(u),
                });
                let (u2, body) = if captured {
                    let u2 = fresh_for(u, a, fo, so);
                    let mut ren = HashMap::new();
                    ren.insert(u.clone(), SoReplacement::Rename(u2.clone()));
                    (u2, a.substitute(&HashMap::new(), &ren, None)?)
                } else {
                    (u.clone(), (**a).clone())
                };
                let body = Box::new(body.substitute(fo, &inner, vocab)?);
                match self {
                    Formula::ExistsRel(..) => Formula::ExistsRel(u2, *k, body),
                    _ => Formula::ForallRel(u2, *k, body),
                }
            }
        })
    }
}

fn fresh_for(
    base: &str,
    body: &Formula,
    fo: &HashMap<String, Term>,
    so: &HashMap<String, SoReplacement>,
) -> String {
    let mut avoid = body.all_names();
    for (k, t) in fo {
        avoid.insert(k.clone());
        avoid.insert(t.name().to_string());
    }
    for (k, r) in so {
        avoid.insert(k.clone());
        match r {
            SoReplacement::Rename(w) => {
                avoid.insert(w.clone());
            }
            SoReplacement::Set(s) => avoid.extend(s.vars()),
        }
    }
    let refs: Vec<&str> = avoid.iter().map(|s| s.as_str()).collect();
    fresh_name(base, &refs)
}

/// `base` if unused, else `base'1`, `base'2`, ...
pub(crate) fn fresh_name(base: &str, avoid: &[&str]) -> String {
    if !avoid.contains(&base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}'{i}"))
        .find(|n| !avoid.contains(&n.as_str()))
        .expect("unbounded")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = |ts: &[Term]| ts.iter().map(|t| t.name().to_string()).collect::<Vec<_>>().join(" ");
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Eq(a, b) => write!(f, "(= {} {})", a.name(), b.name()),
            Formula::Less(a, b) => write!(f, "(rel O {} {})", a.name(), b.name()),
            Formula::Rel(r, ts) => write!(f, "(rel {r} {})", terms(ts)),
            Formula::RelVar(u, ts) => write!(f, "(rvar {u} {})", terms(ts)),
            Formula::Not(a) => write!(f, "(not {a})"),
            Formula::And(a, b) => write!(f, "(and {a} {b})"),
            Formula::Or(a, b) => write!(f, "(or {a} {b})"),
            Formula::Implies(a, b) => write!(f, "(implies {a} {b})"),
            Formula::Exists(v, a) => write!(f, "(exists {v} {a})"),
            Formula::Forall(v, a) => write!(f, "(forall {v} {a})"),
            Formula::ExistsRel(u, k, a) => write!(f, "(existsR {u} {k} {a})"),
            Formula::ForallRel(u, k, a) => write!(f, "(forallR {u} {k} {a})"),
            Formula::Native(n) => write!(f, "{n}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn free_variables() {
        let f = Formula::exists("y", Formula::and(Formula::Rel("N".into(), vec![v("y"), v("x")]), Formula::RelVar("U".into(), vec![v("y")])));
        assert_eq!(f.free_fo().into_iter().collect::<Vec<_>>(), vec!["x".to_string()]);
        assert_eq!(f.free_so().get("U"), Some(&1));
        let g = Formula::ExistsRel("U".into(), 1, Box::new(f.clone()));
        assert!(g.free_so().is_empty());
    }

    #[test]
    fn substitution_avoids_capture() {
        // ∃y N(y,x) with x := y must rename the binder.
        let f = Formula::exists("y", Formula::Rel("N".into(), vec![v("y"), v("x")]));
        let g = f.substitute_fo("x", &v("y"));
        match &g {
            Formula::Exists(b, body) => {
                assert_ne!(b, "y");
                assert_eq!(**body, Formula::Rel("N".into(), vec![Term::Var(b.clone()), v("y")]));
            }
            _ => panic!("shape"),
        }
        assert_eq!(g.free_fo().into_iter().collect::<Vec<_>>(), vec!["y".to_string()]);
    }

    #[test]
    fn so_substitution_avoids_capture() {
        let f = Formula::ExistsRel(
            "U".into(),
            1,
            Box::new(Formula::and(Formula::RelVar("U".into(), vec![v("x")]), Formula::RelVar("S".into(), vec![v("x")]))),
        );
        let mut so = HashMap::new();
        so.insert("S".to_string(), SoReplacement::Rename("U".into()));
        let g = f.substitute(&HashMap::new(), &so, None).unwrap();
        assert_eq!(g.free_so().keys().collect::<Vec<_>>(), vec!["U"]);
        match g {
            Formula::ExistsRel(b, _, _) => assert_ne!(b, "U"),
            _ => panic!("shape"),
        }
    }

    #[test]
    fn quantifier_rank_counts_nesting() {
        let atom = Formula::Rel("R".into(), vec![v("x"), v("y")]);
        assert_eq!(atom.quantifier_rank(), 0);
        let f = Formula::exists("x", Formula::forall("y", atom.clone()));
        assert_eq!(f.quantifier_rank(), 2);
        let g = Formula::and(f, Formula::ExistsRel("U".into(), 1, Box::new(atom)));
        assert_eq!(g.quantifier_rank(), 2);
    }

    #[test]
    fn conj_and_disj_edges() {
        assert_eq!(Formula::conj(vec![]), Formula::True);
        assert_eq!(Formula::disj(vec![]), Formula::False);
        assert_eq!(Formula::conj(vec![Formula::False]), Formula::False);
    }
}
