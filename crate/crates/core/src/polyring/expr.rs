use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::{PolyError, Polynomial};
use crate::logic::eval::{candidates, conjuncts, eval, find_bound, for_each_subset, Bound, Node};
use crate::logic::{read_all, Assignment, Compiler, Env, Formula, FormulaParser, Model, SExp, Term};
use crate::logic::eval::Layout;
use crate::structures::{IncidenceStructure, Vocabulary};

/// Default bound on the arity of relations summed over by [`PolyExpr::SumRel`].
pub const DEFAULT_ARITY_CAP: usize = 2;

/// A polynomial-valued expression over a structure: constants, truth values of formulas,
/// finite products and sums, products and sums over tuples of elements satisfying a guard, and
/// sums over relations satisfying a guard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyExpr {
    Const(Polynomial),
    Tv(Formula),
    Product(Vec<PolyExpr>),
    Sum(Vec<PolyExpr>),
    ProdOver { vars: Vec<String>, guard: Formula, body: Box<PolyExpr> },
    SumOver { vars: Vec<String>, guard: Formula, body: Box<PolyExpr> },
    SumRel { rels: Vec<(String, usize)>, guard: Formula, body: Box<PolyExpr> },
}

impl PolyExpr {
    pub fn constant(c: i64) -> PolyExpr {
        PolyExpr::Const(Polynomial::constant(c))
    }

    pub fn indeterminate(name: &str) -> PolyExpr {
        PolyExpr::Const(Polynomial::var(name))
    }

    pub fn prod_over(vars: &[&str], guard: Formula, body: PolyExpr) -> PolyExpr {
        PolyExpr::ProdOver { vars: vars.iter().map(|v| v.to_string()).collect(), guard, body: Box::new(body) }
    }

    pub fn sum_over(vars: &[&str], guard: Formula, body: PolyExpr) -> PolyExpr {
        PolyExpr::SumOver { vars: vars.iter().map(|v| v.to_string()).collect(), guard, body: Box::new(body) }
    }

    pub fn sum_rel(rels: &[(&str, usize)], guard: Formula, body: PolyExpr) -> PolyExpr {
        PolyExpr::SumRel { rels: rels.iter().map(|(r, k)| (r.to_string(), *k)).collect(), guard, body: Box::new(body) }
    }

    fn children(&self) -> Vec<&PolyExpr> {
        match self {
            PolyExpr::Const(_) | PolyExpr::Tv(_) => Vec::new(),
            PolyExpr::Product(xs) | PolyExpr::Sum(xs) => xs.iter().collect(),
            PolyExpr::ProdOver { body, .. } | PolyExpr::SumOver { body, .. } | PolyExpr::SumRel { body, .. } => {
                vec![body]
            }
        }
    }

    fn formulas(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.walk(&mut |e| match e {
            PolyExpr::Tv(f) => out.push(f),
            PolyExpr::ProdOver { guard, .. } | PolyExpr::SumOver { guard, .. } | PolyExpr::SumRel { guard, .. } => {
                out.push(guard)
            }
            _ => {}
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a PolyExpr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Free individual variables (constants excluded).
    pub fn free_fo(&self) -> BTreeSet<String> {
        match self {
            PolyExpr::Const(_) => BTreeSet::new(),
            PolyExpr::Tv(f) => f.free_fo(),
            PolyExpr::Product(xs) | PolyExpr::Sum(xs) => xs.iter().flat_map(|x| x.free_fo()).collect(),
            PolyExpr::ProdOver { vars, guard, body } | PolyExpr::SumOver { vars, guard, body } => {
                let mut out = guard.free_fo();
                out.extend(body.free_fo());
                out.retain(|v| !vars.contains(v));
                out
            }
            PolyExpr::SumRel { guard, body, .. } => {
                let mut out = guard.free_fo();
                out.extend(body.free_fo());
                out
            }
        }
    }

    /// Free relation variables with their arities.
    pub fn free_so(&self) -> BTreeMap<String, usize> {
        match self {
            PolyExpr::Const(_) => BTreeMap::new(),
            PolyExpr::Tv(f) => f.free_so(),
            PolyExpr::Product(xs) | PolyExpr::Sum(xs) => xs.iter().flat_map(|x| x.free_so()).collect(),
            PolyExpr::ProdOver { guard, body, .. } | PolyExpr::SumOver { guard, body, .. } => {
                let mut out = guard.free_so();
                out.extend(body.free_so());
                out
            }
            PolyExpr::SumRel { rels, guard, body } => {
                let mut out = guard.free_so();
                out.extend(body.free_so());
                out.retain(|u, _| !rels.iter().any(|(r, _)| r == u));
                out
            }
        }
    }

    /// Constant symbols used by the formulas inside.
    pub fn constants(&self) -> BTreeSet<String> {
        self.formulas().into_iter().flat_map(|f| f.constants()).collect()
    }

    /// Contains no sum over relations.
    pub fn is_short(&self) -> bool {
        let mut short = true;
        self.walk(&mut |e| short &= !matches!(e, PolyExpr::SumRel { .. }));
        short
    }

    /// Largest arity of a relation summed over (0 when short).
    pub fn max_rel_arity(&self) -> usize {
        let mut k = 0;
        self.walk(&mut |e| {
            if let PolyExpr::SumRel { rels, .. } = e {
                k = k.max(rels.iter().map(|r| r.1).max().unwrap_or(0));
            }
        });
        k
    }

    /// Some constant has a negative coefficient.
    pub fn has_negative_constants(&self) -> bool {
        let mut neg = false;
        self.walk(&mut |e| {
            if let PolyExpr::Const(p) = e {
                neg |= !p.is_zero() && !p.has_natural_coefficients();
            }
        });
        neg
    }

    /// Indeterminates occurring in constants.
    pub fn indeterminates(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let PolyExpr::Const(p) = e {
                out.extend(p.indeterminates());
            }
        });
        out
    }

    /// Renames indeterminates in every constant.
    pub fn rename_indeterminates(&self, map: &BTreeMap<String, String>) -> Result<PolyExpr, PolyError> {
        let rec = |x: &PolyExpr| x.rename_indeterminates(map);
        Ok(match self {
            PolyExpr::Const(p) => PolyExpr::Const(p.rename(map)?),
            PolyExpr::Tv(f) => PolyExpr::Tv(f.clone()),
            PolyExpr::Product(xs) => PolyExpr::Product(xs.iter().map(rec).collect::<Result<_, _>>()?),
            PolyExpr::Sum(xs) => PolyExpr::Sum(xs.iter().map(rec).collect::<Result<_, _>>()?),
            PolyExpr::ProdOver { vars, guard, body } => {
                PolyExpr::ProdOver { vars: vars.clone(), guard: guard.clone(), body: Box::new(rec(body)?) }
            }
            PolyExpr::SumOver { vars, guard, body } => {
                PolyExpr::SumOver { vars: vars.clone(), guard: guard.clone(), body: Box::new(rec(body)?) }
            }
            PolyExpr::SumRel { rels, guard, body } => {
                PolyExpr::SumRel { rels: rels.clone(), guard: guard.clone(), body: Box::new(rec(body)?) }
            }
        })
    }
}

fn write_binders(f: &mut fmt::Formatter<'_>, vars: &[String]) -> fmt::Result {
    write!(f, "({})", vars.join(" "))
}

/// Prints the DSL form accepted by [`PolyParser`].
impl fmt::Display for PolyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyExpr::Const(p) => match p.as_i64() {
                Some(c) => write!(f, "(const {c})"),
                None if p.len() == 1 && p.indeterminates().len() == 1 && Polynomial::var(&p.indeterminates()[0]) == *p => {
                    write!(f, "(const {p})")
                }
                None => write!(f, "(const \"{p}\")"),
            },
            PolyExpr::Tv(g) => write!(f, "(tv {g})"),
            PolyExpr::Product(xs) | PolyExpr::Sum(xs) => {
                write!(f, "({}", if matches!(self, PolyExpr::Product(_)) { "prod" } else { "sum" })?;
                for x in xs {
                    write!(f, " {x}")?;
                }
                write!(f, ")")
            }
            PolyExpr::ProdOver { vars, guard, body } | PolyExpr::SumOver { vars, guard, body } => {
                write!(f, "({} ", if matches!(self, PolyExpr::ProdOver { .. }) { "prod-over" } else { "sum-over" })?;
                write_binders(f, vars)?;
                write!(f, " {guard} {body})")
            }
            PolyExpr::SumRel { rels, guard, body } => {
                let rs: Vec<String> = rels.iter().map(|(r, k)| format!("({r} {k})")).collect();
                write!(f, "(sum-rel ({}) {guard} {body})", rs.join(" "))
            }
        }
    }
}

/// Parses the expression DSL. Formulas inside are read by the wrapped [`FormulaParser`], so its
/// constants and macros are available.
///
/// ```text
/// (const 3) (const X) (const "q^2 - 1") (tv form) (prod e...) (sum e...)
/// (prod-over (a b) form e) (sum-over (a) form e) (sum-rel ((A 1) (B 2)) form e)
/// (card-power X (a) form) (falling-factorial X (a) form) (factorial-card (a) form)
/// ```
#[derive(Debug, Clone)]
pub struct PolyParser {
    formulas: FormulaParser,
}

impl PolyParser {
    pub fn new(formulas: FormulaParser) -> Self {
        PolyParser { formulas }
    }

    pub fn over(vocab: &Vocabulary) -> Self {
        PolyParser { formulas: FormulaParser::new(vocab) }
    }

    pub fn formulas(&self) -> &FormulaParser {
        &self.formulas
    }

    pub fn parse(&self, text: &str) -> Result<PolyExpr, PolyError> {
        let es = read_all(text)?;
        match es.as_slice() {
            [e] => self.expr(e),
            [] => Err(PolyError::Parse("empty input".into())),
            [_, second, ..] => Err(second.error("expected a single expression").into()),
        }
    }

    fn binders(&self, e: &SExp) -> Result<Vec<String>, PolyError> {
        let names: Vec<&SExp> = match e {
            SExp::List(items, _) => items.iter().collect(),
            SExp::Atom(..) => vec![e],
            SExp::Str(..) => return Err(e.error("expected binder names").into()),
        };
        let mut out = Vec::new();
        for n in names {
            let a = n.atom().ok_or_else(|| n.error("binder must be a symbol"))?;
            if self.formulas.constants().contains(a) {
                return Err(n.error(format!("`{a}` is a constant and cannot be bound")).into());
            }
            if out.iter().any(|o| o == a) {
                return Err(n.error(format!("`{a}` bound twice")).into());
            }
            out.push(a.to_string());
        }
        if out.is_empty() {
            return Err(e.error("at least one binder expected").into());
        }
        Ok(out)
    }

    fn constant(&self, e: &SExp) -> Result<Polynomial, PolyError> {
        match e {
            SExp::Atom(a, _) | SExp::Str(a, _) => a.parse::<Polynomial>().map_err(|err| e.error(err.to_string()).into()),
            SExp::List(..) => Err(e.error("expected a constant").into()),
        }
    }

    pub fn expr(&self, e: &SExp) -> Result<PolyExpr, PolyError> {
        let items = e.list().ok_or_else(|| e.error("expected a parenthesized expression"))?;
        let head = e.head().ok_or_else(|| e.error("expected an operator"))?;
        let arity_err = |n: &str| -> PolyError { e.error(format!("`{head}` expects {n}")).into() };
        Ok(match head {
            "const" => match items {
                [_, c] => PolyExpr::Const(self.constant(c)?),
                _ => return Err(arity_err("one constant")),
            },
            "tv" => match items {
                [_, f] => PolyExpr::Tv(self.formulas.formula(f)?),
                _ => return Err(arity_err("one formula")),
            },
            "prod" | "sum" => {
                let xs = items[1..].iter().map(|x| self.expr(x)).collect::<Result<Vec<_>, _>>()?;
                if head == "prod" {
                    PolyExpr::Product(xs)
                } else {
                    PolyExpr::Sum(xs)
                }
            }
            "prod-over" | "sum-over" => match items {
                [_, vs, g, b] => {
                    let (vars, guard, body) = (self.binders(vs)?, self.formulas.formula(g)?, Box::new(self.expr(b)?));
                    if head == "prod-over" {
                        PolyExpr::ProdOver { vars, guard, body }
                    } else {
                        PolyExpr::SumOver { vars, guard, body }
                    }
                }
                _ => return Err(arity_err("binders, a guard and a body")),
            },
            "sum-rel" => match items {
                [_, rs, g, b] => {
                    let list = rs.list().ok_or_else(|| rs.error("expected ((NAME ARITY) ...)"))?;
                    let mut rels = Vec::new();
                    for r in list {
                        let (name, k) = match r.list() {
                            Some([n, k]) => (n, k),
                            _ => return Err(r.error("expected (NAME ARITY)").into()),
                        };
                        let name = name.atom().ok_or_else(|| name.error("relation name must be a symbol"))?;
                        let k: usize =
                            k.atom().and_then(|a| a.parse().ok()).ok_or_else(|| k.error("arity must be a number"))?;
                        if rels.iter().any(|(n, _)| n == name) {
                            return Err(r.error(format!("`{name}` bound twice")).into());
                        }
                        rels.push((name.to_string(), k));
                    }
                    if rels.is_empty() {
                        return Err(rs.error("at least one relation expected").into());
                    }
                    PolyExpr::SumRel { rels, guard: self.formulas.formula(g)?, body: Box::new(self.expr(b)?) }
                }
                _ => return Err(arity_err("relations, a guard and a body")),
            },
            "card-power" | "falling-factorial" => match items {
                [_, x, vs, g] => {
                    let (x, vars, guard) = (self.constant(x)?, self.binders(vs)?, self.formulas.formula(g)?);
                    let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
                    if head == "card-power" {
                        card_power(x, &vars, guard)
                    } else {
                        falling_factorial(x, &vars, guard)
                    }
                }
                _ => return Err(arity_err("an indeterminate, binders and a guard")),
            },
            "factorial-card" => match items {
                [_, vs, g] => {
                    let vars = self.binders(vs)?;
                    let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
                    factorial_of_card(&vars, self.formulas.formula(g)?)
                }
                _ => return Err(arity_err("binders and a guard")),
            },
            other => return Err(e.error(format!("unknown expression operator `{other}`")).into()),
        })
    }
}

/// `X^{#{v̄ : φ}}` as the product of `X` over the tuples satisfying `φ`.
pub fn card_power(x: Polynomial, vars: &[&str], guard: Formula) -> PolyExpr {
    PolyExpr::prod_over(vars, guard, PolyExpr::Const(x))
}

fn fresh(base: &str, taken: &BTreeSet<String>, used: &mut Vec<String>) -> String {
    let mut i = 1;
    loop {
        let name = format!("{base}{i}");
        if !taken.contains(&name) && !used.contains(&name) {
            used.push(name.clone());
            return name;
        }
        i += 1;
    }
}

fn rename(f: &Formula, from: &[&str], to: &[String]) -> Formula {
    let map: HashMap<String, Term> = from.iter().zip(to).map(|(a, b)| (a.to_string(), Term::Var(b.clone()))).collect();
    f.substitute(&map, &HashMap::new(), None).expect("no vocabulary needed")
}

/// `b̄ <lex ā` in the structure's order.
fn lex_less(b: &[String], a: &[String]) -> Formula {
    Formula::disj(
        (0..a.len())
            .map(|i| {
                let mut parts: Vec<Formula> =
                    (0..i).map(|j| Formula::eq(Term::Var(b[j].clone()), Term::Var(a[j].clone()))).collect();
                parts.push(Formula::Less(Term::Var(b[i].clone()), Term::Var(a[i].clone())));
                Formula::conj(parts)
            })
            .collect(),
    )
}

/// The falling factorial `X (X-1) ⋯ (X-n+1)` with `n = #{v̄ : φ}`, written as the product over
/// satisfying tuples `ā` of `X` minus the number of satisfying tuples lexicographically below `ā`.
pub fn falling_factorial(x: Polynomial, vars: &[&str], guard: Formula) -> PolyExpr {
    let taken = guard.all_names();
    let mut used = Vec::new();
    let below: Vec<String> = vars.iter().map(|_| fresh("ff_b", &taken, &mut used)).collect();
    let here: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
    let earlier = Formula::and(rename(&guard, vars, &below), lex_less(&below, &here));
    let below: Vec<&str> = below.iter().map(String::as_str).collect();
    let factor = PolyExpr::Sum(vec![PolyExpr::Const(x), PolyExpr::sum_over(&below, earlier, PolyExpr::constant(-1))]);
    PolyExpr::prod_over(vars, guard, factor)
}

/// `(#{v̄ : φ})!` as the number of bijections of the satisfying tuples onto themselves, each a
/// relation `π` of arity `2k` that is one-to-one and total on them.
pub fn factorial_of_card(vars: &[&str], guard: Formula) -> PolyExpr {
    let taken = guard.all_names();
    let mut used = Vec::new();
    let k = vars.len();
    let v: Vec<String> = (0..k).map(|_| fresh("fc_v", &taken, &mut used)).collect();
    let u: Vec<String> = (0..k).map(|_| fresh("fc_u", &taken, &mut used)).collect();
    let w: Vec<String> = (0..k).map(|_| fresh("fc_w", &taken, &mut used)).collect();
    let pi = fresh("Pi", &taken, &mut used);
    let at = |xs: &[&String], ys: &[&String]| {
        Formula::RelVar(pi.clone(), xs.iter().chain(ys).map(|n| Term::Var((*n).clone())).collect())
    };
    fn refs(xs: &[String]) -> Vec<&String> {
        xs.iter().collect()
    }
    let (vr, ur, wr) = (refs(&v), refs(&u), refs(&w));
    let differ = |a: &[String], b: &[String]| {
        Formula::not(Formula::conj(a.iter().zip(b).map(|(x, y)| Formula::eq(Term::Var(x.clone()), Term::Var(y.clone()))).collect()))
    };
    let forall_all = |names: &[&String], body: Formula| names.iter().rev().fold(body, |acc, n| Formula::forall(n, acc));
    let exists_all = |names: &[&String], body: Formula| names.iter().rev().fold(body, |acc, n| Formula::exists(n, acc));
    let vu: Vec<&String> = v.iter().chain(&u).collect();
    let inside = forall_all(
        &vu,
        Formula::implies(at(&vr, &ur), Formula::and(rename(&guard, vars, &v), rename(&guard, vars, &u))),
    );
    let clash = Formula::or(
        Formula::and(differ(&w, &v), at(&wr, &ur)),
        Formula::and(differ(&w, &u), at(&vr, &wr)),
    );
    let injective = forall_all(&vu, Formula::implies(at(&vr, &ur), Formula::not(exists_all(&wr, clash))));
    let total = forall_all(&vr, Formula::implies(rename(&guard, vars, &v), exists_all(&ur, at(&vr, &ur))));
    PolyExpr::sum_rel(&[(&pi, 2 * k)], Formula::conj(vec![inside, injective, total]), PolyExpr::constant(1))
}

#[derive(Debug, Clone)]
struct RelBinder {
    slot: usize,
    arity: usize,
    bound: Option<Bound>,
}

#[derive(Debug, Clone)]
enum ENode {
    Const(Polynomial),
    Tv(Node),
    Product(Vec<ENode>),
    Sum(Vec<ENode>),
    ProdOver { slots: Vec<usize>, guard: Node, body: Box<ENode> },
    SumOver { slots: Vec<usize>, guard: Node, body: Box<ENode> },
    SumRel { rels: Vec<RelBinder>, guard: Node, body: Box<ENode> },
}

fn compile(c: &mut Compiler, e: &PolyExpr, cap: usize) -> Result<ENode, PolyError> {
    Ok(match e {
        PolyExpr::Const(p) => ENode::Const(p.clone()),
        PolyExpr::Tv(f) => ENode::Tv(c.compile(f)?),
        PolyExpr::Product(xs) => ENode::Product(xs.iter().map(|x| compile(c, x, cap)).collect::<Result<_, _>>()?),
        PolyExpr::Sum(xs) => ENode::Sum(xs.iter().map(|x| compile(c, x, cap)).collect::<Result<_, _>>()?),
        PolyExpr::ProdOver { vars, guard, body } | PolyExpr::SumOver { vars, guard, body } => {
            let slots: Vec<usize> = vars.iter().map(|v| c.bind_fo(v)).collect();
            let guard = c.compile(guard);
            let body = compile(c, body, cap);
            c.unbind_fo(vars.len());
            let (guard, body) = (guard?, Box::new(body?));
            if matches!(e, PolyExpr::ProdOver { .. }) {
                ENode::ProdOver { slots, guard, body }
            } else {
                ENode::SumOver { slots, guard, body }
            }
        }
        PolyExpr::SumRel { rels, guard, body } => {
            if let Some((r, k)) = rels.iter().find(|(_, k)| *k > cap) {
                return Err(PolyError::Capacity(format!("sum over relation `{r}` of arity {k} (cap {cap})")));
            }
            let parts = conjuncts(guard);
            let mut binders = Vec::new();
            let result = (|| {
                for (i, (name, arity)) in rels.iter().enumerate() {
                    let later = &rels[i + 1..];
                    let bound = match find_bound(name, *arity, &parts) {
                        Some((vars, filter)) if !filter.free_so().keys().any(|u| later.iter().any(|(l, _)| l == u)) => {
                            Some(c.bound(&vars, &filter)?)
                        }
                        _ => None,
                    };
                    let slot = c.bind_so(name, *arity);
                    binders.push(RelBinder { slot, arity: *arity, bound });
                }
                Ok::<_, PolyError>((c.compile(guard)?, compile(c, body, cap)?))
            })();
            c.unbind_so(binders.len());
            let (guard, body) = result?;
            ENode::SumRel { rels: binders, guard, body: Box::new(body) }
        }
    })
}

/// Calls `visit` for every assignment of universe positions to `slots`.
fn for_each_tuple(
    slots: &[usize],
    n: usize,
    env: &mut Env,
    visit: &mut impl FnMut(&mut Env) -> Result<bool, PolyError>,
) -> Result<(), PolyError> {
    if n == 0 && !slots.is_empty() {
        return Ok(());
    }
    let mut idx = vec![0usize; slots.len()];
    loop {
        for (s, &p) in slots.iter().zip(&idx) {
            env.fo[*s] = p;
        }
        if !visit(env)? {
            return Ok(());
        }
        let mut i = slots.len();
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < n {
                break;
            }
            idx[i] = 0;
        }
    }
}

fn eval_node(node: &ENode, m: &Model, env: &mut Env) -> Result<Polynomial, PolyError> {
    Ok(match node {
        ENode::Const(p) => p.clone(),
        ENode::Tv(f) => Polynomial::constant(eval(f, m, env)? as i64),
        ENode::Product(xs) => {
            let mut acc = Polynomial::one();
            for x in xs {
                acc = &acc * &eval_node(x, m, env)?;
                if acc.is_zero() {
                    break;
                }
            }
            acc
        }
        ENode::Sum(xs) => {
            let mut acc = Polynomial::zero();
            for x in xs {
                acc = &acc + &eval_node(x, m, env)?;
            }
            acc
        }
        ENode::ProdOver { slots, guard, body } => {
            let mut acc = Polynomial::one();
            for_each_tuple(slots, m.size(), env, &mut |env| {
                if eval(guard, m, env)? {
                    acc = &acc * &eval_node(body, m, env)?;
                }
                Ok(!acc.is_zero())
            })?;
            acc
        }
        ENode::SumOver { slots, guard, body } => {
            let mut acc = Polynomial::zero();
            for_each_tuple(slots, m.size(), env, &mut |env| {
                if eval(guard, m, env)? {
                    acc = &acc + &eval_node(body, m, env)?;
                }
                Ok(true)
            })?;
            acc
        }
        ENode::SumRel { rels, guard, body } => {
            let mut acc = Polynomial::zero();
            sum_rels(rels, guard, body, m, env, &mut acc)?;
            acc
        }
    })
}

fn sum_rels(
    rels: &[RelBinder],
    guard: &Node,
    body: &ENode,
    m: &Model,
    env: &mut Env,
    acc: &mut Polynomial,
) -> Result<(), PolyError> {
    let Some((first, rest)) = rels.split_first() else {
        if eval(guard, m, env)? {
            *acc = &*acc + &eval_node(body, m, env)?;
        }
        return Ok(());
    };
    let cands = candidates(first.arity, first.bound.as_ref(), m, env)?;
    let mut failure = None;
    for_each_subset(first.slot, first.arity, &cands, m, env, |env| {
        if let Err(e) = sum_rels(rest, guard, body, m, env, acc) {
            failure = Some(e);
            return Ok(Some(()));
        }
        Ok(None)
    })?;
    failure.map_or(Ok(()), Err)
}

/// An expression compiled against a vocabulary.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: ENode,
    layout: Layout,
    vocab: Vocabulary,
}

impl CompiledExpr {
    pub fn new(e: &PolyExpr, vocab: &Vocabulary) -> Result<Self, PolyError> {
        Self::with_cap(e, vocab, DEFAULT_ARITY_CAP)
    }

    /// Compiles with a bound on the arity of relations summed over.
    pub fn with_cap(e: &PolyExpr, vocab: &Vocabulary, cap: usize) -> Result<Self, PolyError> {
        let mut c = Compiler::new(vocab);
        let root = compile(&mut c, e, cap)?;
        Ok(CompiledExpr { root, layout: c.layout(), vocab: vocab.clone() })
    }

    pub fn eval(&self, m: &Model, a: &Assignment) -> Result<Polynomial, PolyError> {
        if !self.vocab.same_relations(m.structure().vocab()) {
            return Err(PolyError::Logic(crate::logic::LogicError::Unsupported(format!(
                "expression over {} evaluated on a {} structure",
                self.vocab.name,
                m.structure().vocab().name
            ))));
        }
        let mut env = self.layout.env(m, a)?;
        eval_node(&self.root, m, &mut env)
    }
}

/// Value of `expr` on `structure` under `assignment`.
pub fn eval_expr(expr: &PolyExpr, structure: &IncidenceStructure, assignment: &Assignment) -> Result<Polynomial, PolyError> {
    CompiledExpr::new(expr, structure.vocab())?.eval(&Model::new(structure), assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{builtin_graph, VocabTag};

    fn g2(name: &str) -> IncidenceStructure {
        IncidenceStructure::from_graph(&builtin_graph(name, false).unwrap(), VocabTag::Graph2).unwrap()
    }

    fn parser() -> PolyParser {
        PolyParser::over(&Vocabulary::graph2())
    }

    /// The edgeless graph on `n` vertices, so `PV` has census `n`.
    fn empty(n: usize) -> IncidenceStructure {
        if n == 0 { g2("empty") } else { g2(&format!("e{n}")) }
    }

    #[test]
    fn falling_factorial_censuses() {
        let e = parser().parse("(falling-factorial X (a) (PV a))").unwrap();
        let expect = ["1", "X", "X^2 - X", "X^3 - 3*X^2 + 2*X"];
        for (n, want) in expect.iter().enumerate() {
            let got = eval_expr(&e, &empty(n), &Assignment::new()).unwrap();
            assert_eq!(got.to_string(), *want, "census {n}");
        }
    }

    #[test]
    fn factorial_of_card_censuses() {
        let e = parser().parse("(factorial-card (a) (PV a))").unwrap();
        for (n, want) in [1, 1, 2, 6, 24].into_iter().enumerate() {
            assert_eq!(eval_expr(&e, &empty(n), &Assignment::new()).unwrap(), Polynomial::constant(want), "census {n}");
        }
    }

    #[test]
    fn card_power_and_truth_values() {
        let p = parser();
        let k3 = g2("k3");
        assert_eq!(eval_expr(&p.parse("(card-power q (a) (PE a))").unwrap(), &k3, &Assignment::new()).unwrap().to_string(), "q^3");
        assert!(eval_expr(&p.parse("(tv false)").unwrap(), &k3, &Assignment::new()).unwrap().is_zero());
        assert!(eval_expr(&p.parse("(tv true)").unwrap(), &k3, &Assignment::new()).unwrap().is_one());
    }

    #[test]
    fn potts_expansion_on_small_graphs() {
        let e = parser()
            .parse(
                "(sum-rel ((A 1)) (subset A E)
                   (prod (prod-over (w) (last-in-comp w V A) (const q))
                         (prod-over (e) (in A e) (const v))))",
            )
            .unwrap();
        assert!(!e.is_short());
        assert_eq!(eval_expr(&e, &g2("e1"), &Assignment::new()).unwrap().to_string(), "q");
        assert_eq!(eval_expr(&e, &g2("k2"), &Assignment::new()).unwrap().to_string(), "q^2 + q*v");
    }

    #[test]
    fn free_variables_and_assignment() {
        let e = parser().parse("(sum-over (y) (rel N x y) (const 1))").unwrap();
        assert_eq!(e.free_fo(), ["x".to_string()].into());
        let k3 = g2("k3");
        let a = Assignment::new().with_fo_named(&k3, "x", "v1").unwrap();
        assert_eq!(eval_expr(&e, &k3, &a).unwrap(), Polynomial::constant(2));
        assert!(matches!(eval_expr(&e, &k3, &Assignment::new()), Err(PolyError::Logic(_))));
    }

    #[test]
    fn arity_cap() {
        let e = parser().parse("(sum-rel ((R 3)) true (const 1))").unwrap();
        let err = CompiledExpr::new(&e, &Vocabulary::graph2()).unwrap_err();
        assert!(matches!(err, PolyError::Capacity(_)));
        assert_eq!(e.max_rel_arity(), 3);
    }

    #[test]
    fn display_round_trips() {
        let p = parser();
        for text in [
            "(const 3)",
            "(const -1)",
            "(const X)",
            "(const \"q^2 + v\")",
            "(prod (const X) (tv (PE x)))",
            "(sum-over (a b) (rel N a b) (const 1))",
            "(sum-rel ((A 1) (B 2)) (subset A E) (const Y))",
            "(falling-factorial X (a) (PV a))",
            "(factorial-card (a) (PE a))",
        ] {
            let e = p.parse(text).unwrap();
            assert_eq!(p.parse(&e.to_string()).unwrap(), e, "{text}");
        }
    }

    #[test]
    fn parse_errors() {
        let mut fp = FormulaParser::new(&Vocabulary::graph2());
        fp.add_constant("x");
        let p = PolyParser::new(fp);
        for bad in ["(const)", "(prod-over (x) true (const 1))", "(sum-rel () true (const 1))", "(frob)", "3", "(const \"X +\")"] {
            assert!(p.parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn two_relations_with_bounds() {
        // Pairs of disjoint edge sets on K2: (∅,∅), (∅,{e}), ({e},∅).
        let e = parser()
            .parse("(sum-rel ((A 1) (B 1)) (and (subset A E) (subset B E) (forall z (not (and (rvar A z) (rvar B z))))) (const 1))")
            .unwrap();
        assert_eq!(eval_expr(&e, &g2("k2"), &Assignment::new()).unwrap(), Polynomial::constant(3));
    }
}
