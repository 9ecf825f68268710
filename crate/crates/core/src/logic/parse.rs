use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::{Formula, NativeKind, SetExpr, SoReplacement, Term};
use super::sexpr::{read_all, SExp};
use super::LogicError;
use crate::structures::{Vocabulary, ORDER_SYMBOL};

const KEYWORDS: &[&str] = &[
    "true", "false", "=", "rel", "rvar", "before", "not", "and", "or", "implies", "iff", "exists", "forall",
    "existsR", "forallR", "exists-exactly", "subset", "in", "PE", "PV", "inc", "loop", "def", "union",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ParamKind {
    Term,
    Set,
    Rel(usize),
}

#[derive(Debug, Clone)]
struct Macro {
    params: Vec<String>,
    kinds: Vec<ParamKind>,
    body: Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bind {
    Fo,
    So(usize),
}

type Scope = Vec<(String, Bind)>;

/// Parses the formula DSL against a vocabulary, a set of constant symbols and user macros.
#[derive(Debug, Clone)]
pub struct FormulaParser {
    vocab: Vocabulary,
    constants: BTreeSet<String>,
    defs: BTreeMap<String, Macro>,
}

/// Parses a single formula over `vocab` (its constants are recognised as constant symbols).
pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Formula, LogicError> {
    FormulaParser::new(vocab).parse_formula(text)
}

impl FormulaParser {
    pub fn new(vocab: &Vocabulary) -> Self {
        FormulaParser { vocab: vocab.clone(), constants: vocab.constants.iter().cloned().collect(), defs: BTreeMap::new() }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn add_constant(&mut self, name: &str) {
        self.constants.insert(name.to_string());
    }

    pub fn constants(&self) -> &BTreeSet<String> {
        &self.constants
    }

    pub fn has_def(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn parse_formula(&self, text: &str) -> Result<Formula, LogicError> {
        let es = read_all(text)?;
        match es.as_slice() {
            [e] => self.formula(e),
            [] => Err(LogicError::Parse { pos: Default::default(), message: "empty input".into() }),
            [_, second, ..] => Err(second.error("expected a single formula")),
        }
    }

    pub fn formula(&self, e: &SExp) -> Result<Formula, LogicError> {
        let mut free_so = BTreeMap::new();
        self.form(e, &mut Vec::new(), &mut free_so)
    }

    /// Loads `(def NAME (params) body)` entries; returns their names.
    pub fn load_defs(&mut self, text: &str) -> Result<Vec<String>, LogicError> {
        read_all(text)?.iter().map(|e| self.define(e)).collect()
    }

    /// Registers one `(def NAME (params) body)` or `(def NAME body)` macro.
    pub fn define(&mut self, e: &SExp) -> Result<String, LogicError> {
        let items = e.list().filter(|_| e.head() == Some("def")).ok_or_else(|| e.error("expected (def NAME ...)"))?;
        let (name, params, body) = match items {
            [_, n, p, b] if p.list().is_some() => (n, p.list().unwrap_or(&[]), b),
            [_, n, b] => (n, &[][..], b),
            _ => return Err(e.error("expected (def NAME (params) body)")),
        };
        let name = name.atom().ok_or_else(|| name.error("definition name must be a symbol"))?.to_string();
        if KEYWORDS.contains(&name.as_str()) || NativeKind::from_name(&name).is_some() {
            return Err(e.error(format!("`{name}` is reserved")));
        }
        let params: Vec<String> = params
            .iter()
            .map(|p| p.atom().map(str::to_string).ok_or_else(|| p.error("parameter must be a symbol")))
            .collect::<Result<_, _>>()?;
        let body = self.formula(body)?;
        let free_so = body.free_so();
        let kinds = params
            .iter()
            .map(|p| match free_so.get(p) {
                Some(1) => ParamKind::Set,
                Some(&k) => ParamKind::Rel(k),
                None => ParamKind::Term,
            })
            .collect();
        self.defs.insert(name.clone(), Macro { params, kinds, body });
        Ok(name)
    }

    fn term(&self, e: &SExp, scope: &Scope) -> Result<Term, LogicError> {
        let a = e.atom().ok_or_else(|| e.error("expected a variable or constant"))?;
        if KEYWORDS.contains(&a) {
            return Err(e.error(format!("`{a}` cannot be used as a term")));
        }
        if scope.iter().rev().any(|(n, b)| n == a && *b == Bind::Fo) {
            return Ok(Term::Var(a.to_string()));
        }
        if self.constants.contains(a) {
            return Ok(Term::Const(a.to_string()));
        }
        Ok(Term::Var(a.to_string()))
    }

    fn terms(&self, es: &[SExp], scope: &Scope) -> Result<Vec<Term>, LogicError> {
        es.iter().map(|e| self.term(e, scope)).collect()
    }

    fn relvar(
        &self,
        e: &SExp,
        arity: usize,
        scope: &Scope,
        free_so: &mut BTreeMap<String, usize>,
    ) -> Result<String, LogicError> {
        let name = e.atom().ok_or_else(|| e.error("expected a relation variable"))?;
        let bound = scope.iter().rev().find_map(|(n, b)| match b {
            Bind::So(k) if n == name => Some(*k),
            _ => None,
        });
        let expected = match bound {
            Some(k) => k,
            None => *free_so.entry(name.to_string()).or_insert(arity),
        };
        if expected != arity {
            return Err(LogicError::Arity { symbol: name.to_string(), expected, found: arity });
        }
        Ok(name.to_string())
    }

    fn set_expr(
        &self,
        e: &SExp,
        scope: &Scope,
        free_so: &mut BTreeMap<String, usize>,
    ) -> Result<SetExpr, LogicError> {
        match e {
            SExp::Atom(a, _) => Ok(match a.as_str() {
                "V" => SetExpr::Vertices,
                "E" => SetExpr::Edges,
                "ALL" => SetExpr::All,
                _ => SetExpr::Var(self.relvar(e, 1, scope, free_so)?),
            }),
            SExp::List(items, _) if e.head() == Some("union") && items.len() >= 3 => {
                let mut sets = items[1..].iter().map(|x| self.set_expr(x, scope, free_so));
                let first = sets.next().expect("non-empty")?;
                sets.try_fold(first, |acc, s| Ok(SetExpr::Union(Box::new(acc), Box::new(s?))))
            }
            _ => Err(e.error("expected a set: V, E, ALL, a relation variable or (union ...)")),
        }
    }

    fn binder_names(&self, e: &SExp) -> Result<Vec<String>, LogicError> {
        let one = |x: &SExp| -> Result<String, LogicError> {
            let a = x.atom().ok_or_else(|| x.error("expected a variable name"))?;
            if KEYWORDS.contains(&a) {
                return Err(x.error(format!("`{a}` cannot be bound")));
            }
            Ok(a.to_string())
        };
        match e {
            SExp::List(items, _) if !items.is_empty() => items.iter().map(one).collect(),
            _ => Ok(vec![one(e)?]),
        }
    }

    fn number(e: &SExp) -> Result<usize, LogicError> {
        e.atom().and_then(|a| a.parse().ok()).ok_or_else(|| e.error("expected a non-negative integer"))
    }

    fn form(&self, e: &SExp, scope: &mut Scope, free_so: &mut BTreeMap<String, usize>) -> Result<Formula, LogicError> {
        let items = match e {
            SExp::Atom(a, _) => {
                return match a.as_str() {
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    _ => match self.defs.get(a.as_str()) {
                        Some(m) if m.params.is_empty() => Ok(m.body.clone()),
                        _ => Err(LogicError::UnknownSymbol(a.clone())),
                    },
                };
            }
            SExp::Str(..) => return Err(e.error("unexpected string")),
            SExp::List(items, _) => items,
        };
        let head = e.head().ok_or_else(|| e.error("expected an operator"))?;
        let args = &items[1..];
        let want = |n: usize| -> Result<(), LogicError> {
            if args.len() != n {
                return Err(e.error(format!("`{head}` takes {n} argument(s), got {}", args.len())));
            }
            Ok(())
        };
        let vocab = &self.vocab;
        match head {
            "=" => {
                want(2)?;
                Ok(Formula::Eq(self.term(&args[0], scope)?, self.term(&args[1], scope)?))
            }
            "before" => {
                want(2)?;
                Ok(Formula::Less(self.term(&args[0], scope)?, self.term(&args[1], scope)?))
            }
            "rel" => {
                let sym = args.first().and_then(|s| s.atom()).ok_or_else(|| e.error("expected (rel SYM t...)"))?;
                let ts = self.terms(&args[1..], scope)?;
                if sym == ORDER_SYMBOL {
                    if ts.len() != 2 {
                        return Err(LogicError::Arity { symbol: sym.into(), expected: 2, found: ts.len() });
                    }
                    return Ok(Formula::Less(ts[0].clone(), ts[1].clone()));
                }
                let arity = vocab.arity(sym).ok_or_else(|| LogicError::UnknownSymbol(sym.to_string()))?;
                if arity != ts.len() {
                    return Err(LogicError::Arity { symbol: sym.into(), expected: arity, found: ts.len() });
                }
                Ok(Formula::Rel(sym.to_string(), ts))
            }
            "rvar" => {
                let first = args.first().ok_or_else(|| e.error("expected (rvar VAR t...)"))?;
                let ts = self.terms(&args[1..], scope)?;
                if ts.is_empty() {
                    return Err(e.error("relation variable atom needs at least one term"));
                }
                let u = self.relvar(first, ts.len(), scope, free_so)?;
                Ok(Formula::RelVar(u, ts))
            }
            "not" => {
                want(1)?;
                Ok(Formula::not(self.form(&args[0], scope, free_so)?))
            }
            "and" | "or" => {
                if args.len() < 2 {
                    return Err(e.error(format!("`{head}` needs at least two operands")));
                }
                let parts = args.iter().map(|a| self.form(a, scope, free_so)).collect::<Result<Vec<_>, _>>()?;
                Ok(if head == "and" { Formula::conj(parts) } else { Formula::disj(parts) })
            }
            "implies" | "iff" => {
                want(2)?;
                let a = self.form(&args[0], scope, free_so)?;
                let b = self.form(&args[1], scope, free_so)?;
                Ok(if head == "implies" { Formula::implies(a, b) } else { Formula::iff(a, b) })
            }
            "exists" | "forall" => {
                want(2)?;
                let vars = self.binder_names(&args[0])?;
                let depth = scope.len();
                scope.extend(vars.iter().map(|v| (v.clone(), Bind::Fo)));
                let body = self.form(&args[1], scope, free_so);
                scope.truncate(depth);
                let body = body?;
                Ok(vars.iter().rev().fold(body, |acc, v| {
                    if head == "exists" {
                        Formula::exists(v, acc)
                    } else {
                        Formula::forall(v, acc)
                    }
                }))
            }
            "existsR" | "forallR" => {
                want(3)?;
                let u = args[0].atom().ok_or_else(|| args[0].error("expected a relation variable name"))?;
                let k = Self::number(&args[1])?;
                if k == 0 {
                    return Err(args[1].error("relation variables need arity at least 1"));
                }
                scope.push((u.to_string(), Bind::So(k)));
                let body = self.form(&args[2], scope, free_so);
                scope.pop();
                let body = Box::new(body?);
                Ok(if head == "existsR" {
                    Formula::ExistsRel(u.to_string(), k, body)
                } else {
                    Formula::ForallRel(u.to_string(), k, body)
                })
            }
            "exists-exactly" => {
                want(3)?;
                let k = Self::number(&args[0])?;
                let x = args[1].atom().ok_or_else(|| args[1].error("expected a variable name"))?;
                scope.push((x.to_string(), Bind::Fo));
                let body = self.form(&args[2], scope, free_so);
                scope.pop();
                Ok(Formula::exists_exactly(k, x, body?))
            }
            "subset" => {
                want(2)?;
                // Relations of higher arity are compared tuple-wise.
                let arity_of = |x: &SExp, free_so: &BTreeMap<String, usize>| {
                    x.atom().and_then(|n| {
                        scope
                            .iter()
                            .rev()
                            .find_map(|(m, b)| match b {
                                Bind::So(k) if m == n => Some(*k),
                                _ => None,
                            })
                            .or_else(|| free_so.get(n).copied())
                    })
                };
                let k = arity_of(&args[0], free_so).or_else(|| arity_of(&args[1], free_so)).unwrap_or(1);
                if k == 1 {
                    let a = self.set_expr(&args[0], scope, free_so)?;
                    let b = self.set_expr(&args[1], scope, free_so)?;
                    let z = Term::var("z");
                    return Ok(Formula::forall("z", Formula::implies(a.membership(&z, vocab)?, b.membership(&z, vocab)?)));
                }
                let a = self.relvar(&args[0], k, scope, free_so)?;
                let b = self.relvar(&args[1], k, scope, free_so)?;
                let vars: Vec<String> = (1..=k).map(|i| format!("z{i}")).collect();
                let ts: Vec<Term> = vars.iter().map(|v| Term::var(v)).collect();
                let body = Formula::implies(Formula::RelVar(a, ts.clone()), Formula::RelVar(b, ts));
                Ok(vars.iter().rev().fold(body, |acc, v| Formula::forall(v, acc)))
            }
            "in" => {
                want(2)?;
                let s = self.set_expr(&args[0], scope, free_so)?;
                s.membership(&self.term(&args[1], scope)?, vocab)
            }
            "PE" | "PV" => {
                want(1)?;
                let t = self.term(&args[0], scope)?;
                if head == "PE" {
                    Formula::is_edge(&t, vocab)
                } else {
                    Formula::is_vertex(&t, vocab)
                }
            }
            "inc" => {
                want(2)?;
                Formula::incident(&self.term(&args[0], scope)?, &self.term(&args[1], scope)?, vocab)
            }
            "loop" => {
                want(1)?;
                let t = self.term(&args[0], scope)?;
                let y = super::ast::fresh_name("y", &[t.name()]);
                Ok(Formula::and(
                    Formula::is_edge(&t, vocab)?,
                    Formula::exists_exactly(1, &y, Formula::incident(&Term::Var(y.clone()), &t, vocab)?),
                ))
            }
            _ => {
                if let Some(kind) = NativeKind::from_name(head) {
                    return self.native(e, kind, args, scope, free_so);
                }
                let m = self.defs.get(head).ok_or_else(|| LogicError::UnknownSymbol(head.to_string()))?;
                if args.len() != m.params.len() {
                    return Err(LogicError::Arity { symbol: head.into(), expected: m.params.len(), found: args.len() });
                }
                let mut fo = HashMap::new();
                let mut so = HashMap::new();
                for ((p, kind), a) in m.params.iter().zip(&m.kinds).zip(args) {
                    match kind {
                        ParamKind::Term => {
                            fo.insert(p.clone(), self.term(a, scope)?);
                        }
                        ParamKind::Set => {
                            let s = self.set_expr(a, scope, free_so)?;
                            let r = match s {
                                SetExpr::Var(w) => SoReplacement::Rename(w),
                                other => SoReplacement::Set(other),
                            };
                            so.insert(p.clone(), r);
                        }
                        ParamKind::Rel(k) => {
                            so.insert(p.clone(), SoReplacement::Rename(self.relvar(a, *k, scope, free_so)?));
                        }
                    }
                }
                m.body.substitute(&fo, &so, Some(vocab))
            }
        }
    }

    fn native(
        &self,
        e: &SExp,
        kind: NativeKind,
        args: &[SExp],
        scope: &Scope,
        free_so: &mut BTreeMap<String, usize>,
    ) -> Result<Formula, LogicError> {
        let sig = kind.signature();
        if args.len() != sig.len() {
            return Err(LogicError::Arity { symbol: kind.name().into(), expected: sig.len(), found: args.len() });
        }
        let (mut terms, mut sets, mut kind) = (Vec::new(), Vec::new(), kind);
        for (c, a) in sig.chars().zip(args) {
            match c {
                't' => terms.push(self.term(a, scope)?),
                's' => sets.push(self.set_expr(a, scope, free_so)?),
                _ => kind = NativeKind::ComponentSize(Self::number(a)?),
            }
        }
        if kind.directed_only() && self.vocab.tag != crate::structures::VocabTag::Directed2 {
            return Err(e.error(format!("`{}` needs a directed vocabulary", kind.name())));
        }
        Ok(Formula::native(kind, terms, sets))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{evaluate, Assignment};
    use crate::structures::{builtin_graph, IncidenceStructure, VocabTag};

    fn g2() -> Vocabulary {
        Vocabulary::graph2()
    }

    #[test]
    fn parses_pe() {
        let f = parse("(exists y (rel N y x))", &g2()).unwrap();
        assert_eq!(f.to_string(), "(exists y (rel N y x))");
        assert_eq!(f.free_fo().into_iter().collect::<Vec<_>>(), vec!["x"]);
    }

    #[test]
    fn exists_exactly_one_shape() {
        let f = parse("(exists-exactly 1 y (rel N y x))", &g2()).unwrap();
        assert_eq!(f.to_string(), "(exists y (and (rel N y x) (forall z (implies (rel N z x) (= z y)))))");
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("(and)", &g2()), Err(LogicError::Parse { .. })));
        assert!(matches!(parse("(and true)", &g2()), Err(LogicError::Parse { .. })));
        assert!(matches!(parse("(rel Q x)", &g2()), Err(LogicError::UnknownSymbol(_))));
        assert!(matches!(parse("(rel N x)", &g2()), Err(LogicError::Arity { .. })));
        assert!(matches!(parse("(and (rvar U x) (rvar U x y))", &g2()), Err(LogicError::Arity { .. })));
        assert!(matches!(parse("(existsR U 2 (rvar U x))", &g2()), Err(LogicError::Arity { .. })));
        assert!(matches!(parse("(frob x)", &g2()), Err(LogicError::UnknownSymbol(_))));
        assert!(matches!(parse("(exists y (rel N y x)", &g2()), Err(LogicError::Parse { .. })));
        assert!(matches!(parse("(on-cycle v B)", &g2()), Err(LogicError::Parse { .. })));
    }

    #[test]
    fn constants_resolve() {
        let v = g2().with_constants(&["x"]);
        let f = parse("(and (PE x) (exists x (PV x)))", &v).unwrap();
        assert!(f.free_fo().is_empty());
        assert_eq!(f.constants().into_iter().collect::<Vec<_>>(), vec!["x"]);
    }

    #[test]
    fn macros_are_hygienic() {
        let mut p = FormulaParser::new(&g2());
        p.load_defs("(def Adj (a b) (exists u (and (inc a u) (inc b u))))").unwrap();
        // The argument `u` must not be captured by the macro's own binder.
        let f = p.parse_formula("(Adj u w)").unwrap();
        assert_eq!(f.free_fo().into_iter().collect::<Vec<_>>(), vec!["u", "w"]);
        let s = IncidenceStructure::from_graph(&builtin_graph("p3", false).unwrap(), VocabTag::Graph2).unwrap();
        let a = Assignment::new().with_fo_named(&s, "u", "v1").unwrap().with_fo_named(&s, "w", "v2").unwrap();
        assert!(evaluate(&s, &a, &f).unwrap());
        let a = a.with_fo_named(&s, "w", "v3").unwrap();
        assert!(!evaluate(&s, &a, &f).unwrap());
    }

    #[test]
    fn set_macros() {
        let mut p = FormulaParser::new(&g2());
        p.load_defs("(def Sub (A) (subset A E))").unwrap();
        let f = p.parse_formula("(Sub V)").unwrap();
        assert!(f.free_so().is_empty());
        let g = p.parse_formula("(Sub F)").unwrap();
        assert_eq!(g.free_so().get("F"), Some(&1));
    }

    #[test]
    fn display_round_trips() {
        let text = "(forall a (implies (and (rvar F a) (PE a)) (not (exists w (and (inc w a) (rel O w a))))))";
        let f = parse(text, &g2()).unwrap();
        let again = parse(&f.to_string(), &g2()).unwrap();
        assert_eq!(f, again);
        let n = parse("(last-in-comp w V (union A B))", &g2()).unwrap();
        assert_eq!(n.to_string(), "(last-in-comp w V (union A B))");
        assert_eq!(parse(&n.to_string(), &g2()).unwrap(), n);
    }
}
