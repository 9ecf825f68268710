use super::ast::{Formula, NativeKind, SetExpr, Term};
use super::native::{eval_native, GraphView};
use super::{Assignment, LogicError, Relation};
use crate::structures::{ElemId, IncidenceStructure, Vocabulary};

/// Largest number of candidate tuples a relation quantifier may range over.
const MAX_SO_BITS: usize = 40;

/// Relation over universe positions, stored as a bitset indexed by the tuple in base `n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitRel {
    arity: usize,
    n: usize,
    bits: Vec<u64>,
}

impl BitRel {
    pub fn new(arity: usize, n: usize) -> Self {
        let size = n.pow(arity as u32);
        BitRel { arity, n, bits: vec![0; size.div_ceil(64)] }
    }

    fn index(&self, t: &[usize]) -> usize {
        t.iter().fold(0, |acc, &p| acc * self.n + p)
    }

    pub fn contains(&self, t: &[usize]) -> bool {
        self.get(self.index(t))
    }

    fn get(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    fn clear(&mut self) {
        self.bits.iter_mut().for_each(|w| *w = 0);
    }

    pub fn insert(&mut self, t: &[usize]) {
        let i = self.index(t);
        self.set(i);
    }

    /// Tuple with the given base-`n` index.
    fn tuple(&self, mut i: usize) -> Vec<usize> {
        let mut t = vec![0; self.arity];
        for slot in t.iter_mut().rev() {
            *slot = i % self.n;
            i /= self.n;
        }
        t
    }

    pub fn tuples(&self) -> Vec<Vec<usize>> {
        (0..self.n.pow(self.arity as u32)).filter(|&i| self.get(i)).map(|i| self.tuple(i)).collect()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

/// A structure prepared for repeated model checking.
pub struct Model<'a> {
    structure: &'a IncidenceStructure,
    pos: Vec<u32>,
    rels: Vec<BitRel>,
    pub(crate) graph: Option<GraphView>,
}

const ABSENT: u32 = u32::MAX;

impl<'a> Model<'a> {
    pub fn new(structure: &'a IncidenceStructure) -> Self {
        let n = structure.len();
        let mut pos = vec![ABSENT; structure.table().len()];
        for (i, x) in structure.universe().iter().enumerate() {
            pos[x.index()] = i as u32;
        }
        let rels: Vec<BitRel> = structure
            .vocab()
            .relations
            .iter()
            .zip(structure.relations())
            .map(|(sym, tuples)| {
                let mut r = BitRel::new(sym.arity, n);
                for t in tuples {
                    let p: Vec<usize> = t.iter().map(|x| pos[x.index()] as usize).collect();
                    r.insert(&p);
                }
                r
            })
            .collect();
        let graph = GraphView::new(structure.vocab().tag, n, &rels);
        Model { structure, pos, rels, graph }
    }

    pub fn structure(&self) -> &'a IncidenceStructure {
        self.structure
    }

    pub fn size(&self) -> usize {
        self.structure.len()
    }

    pub fn position(&self, x: ElemId) -> Option<usize> {
        self.pos.get(x.index()).copied().filter(|&p| p != ABSENT).map(|p| p as usize)
    }

    pub fn element(&self, p: usize) -> ElemId {
        self.structure.universe()[p]
    }

    pub(crate) fn graph(&self) -> Result<&GraphView, LogicError> {
        self.graph
            .as_ref()
            .ok_or_else(|| LogicError::Unsupported(format!("graph predicates over {}", self.structure.vocab().name)))
    }

    /// Converts a relation over elements to one over positions.
    pub fn bitrel(&self, name: &str, r: &Relation) -> Result<BitRel, LogicError> {
        let mut b = BitRel::new(r.arity, self.size());
        for t in &r.tuples {
            if t.len() != r.arity {
                return Err(LogicError::Arity { symbol: name.to_string(), expected: r.arity, found: t.len() });
            }
            let p = t
                .iter()
                .map(|&x| self.position(x).ok_or_else(|| LogicError::NotInUniverse(self.structure.name(x).to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            b.insert(&p);
        }
        Ok(b)
    }

    /// Converts a relation over positions back to elements.
    pub fn relation_of(&self, b: &BitRel) -> Relation {
        Relation {
            arity: b.arity,
            tuples: b.tuples().into_iter().map(|t| t.into_iter().map(|p| self.element(p)).collect()).collect(),
        }
    }
}

/// Variable values during evaluation, indexed by compiled slots.
#[derive(Debug, Clone, Default)]
pub struct Env {
    pub(crate) fo: Vec<usize>,
    pub(crate) so: Vec<BitRel>,
}

#[derive(Debug, Clone)]
pub(crate) enum SetNode {
    Var(usize),
    Vertices,
    Edges,
    All,
    Union(Box<SetNode>, Box<SetNode>),
}

#[derive(Debug, Clone)]
pub(crate) struct Bound {
    vars: Vec<usize>,
    filter: Node,
}

#[derive(Debug, Clone)]
pub(crate) struct SoQuant {
    slot: usize,
    arity: usize,
    bound: Option<Bound>,
    body: Node,
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Bool(bool),
    Eq(usize, usize),
    Less(usize, usize),
    Rel(usize, Vec<usize>),
    RelVar(usize, Vec<usize>),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Implies(Box<Node>, Box<Node>),
    Exists(usize, Box<Node>),
    Forall(usize, Box<Node>),
    ExistsRel(Box<SoQuant>),
    ForallRel(Box<SoQuant>),
    Native(NativeKind, Vec<usize>, Vec<SetNode>),
}

/// Resolves names to slots. Shared by formulas and polynomial expressions so that binders of
/// both kinds live in one slot space.
pub struct Compiler<'v> {
    vocab: &'v Vocabulary,
    scope_fo: Vec<(String, usize)>,
    scope_so: Vec<(String, usize, usize)>,
    fo_inputs: Vec<(String, usize)>,
    so_inputs: Vec<(String, usize, usize)>,
    n_fo: usize,
    n_so: usize,
}

/// Slot layout of a compiled object: which names are read from the assignment.
#[derive(Debug, Clone, Default)]
pub struct Layout {
    fo_inputs: Vec<(String, usize)>,
    so_inputs: Vec<(String, usize, usize)>,
    n_fo: usize,
    n_so: usize,
}

impl Layout {
    /// Builds the initial environment from an assignment.
    pub fn env(&self, model: &Model, a: &Assignment) -> Result<Env, LogicError> {
        let mut env = Env { fo: vec![0; self.n_fo], so: vec![BitRel::default(); self.n_so] };
        for (name, slot) in &self.fo_inputs {
            let x = *a.fo.get(name).ok_or_else(|| LogicError::Unassigned(name.clone()))?;
            env.fo[*slot] = model
                .position(x)
                .ok_or_else(|| LogicError::NotInUniverse(model.structure.name(x).to_string()))?;
        }
        for (name, arity, slot) in &self.so_inputs {
            let r = a.so.get(name).ok_or_else(|| LogicError::Unassigned(name.clone()))?;
            if r.arity != *arity {
                return Err(LogicError::Arity { symbol: name.clone(), expected: *arity, found: r.arity });
            }
            env.so[*slot] = model.bitrel(name, r)?;
        }
        Ok(env)
    }

    /// Like [`Layout::env`], but leaves the names in `open` unassigned and returns their slots
    /// (`None` when the compiled object never reads the name).
    pub(crate) fn env_open(
        &self,
        model: &Model,
        a: &Assignment,
        open: &[&str],
    ) -> Result<(Env, Vec<Option<usize>>), LogicError> {
        let mut env = Env { fo: vec![0; self.n_fo], so: vec![BitRel::default(); self.n_so] };
        let mut slots = vec![None; open.len()];
        for (name, slot) in &self.fo_inputs {
            if let Some(i) = open.iter().position(|o| o == name) {
                slots[i] = Some(*slot);
                continue;
            }
            let x = *a.fo.get(name).ok_or_else(|| LogicError::Unassigned(name.clone()))?;
            env.fo[*slot] = model
                .position(x)
                .ok_or_else(|| LogicError::NotInUniverse(model.structure.name(x).to_string()))?;
        }
        for (name, arity, slot) in &self.so_inputs {
            let r = a.so.get(name).ok_or_else(|| LogicError::Unassigned(name.clone()))?;
            if r.arity != *arity {
                return Err(LogicError::Arity { symbol: name.clone(), expected: *arity, found: r.arity });
            }
            env.so[*slot] = model.bitrel(name, r)?;
        }
        Ok((env, slots))
    }

    pub fn fo_inputs(&self) -> impl Iterator<Item = &str> {
        self.fo_inputs.iter().map(|(n, _)| n.as_str())
    }

    pub fn so_inputs(&self) -> impl Iterator<Item = (&str, usize)> {
        self.so_inputs.iter().map(|(n, k, _)| (n.as_str(), *k))
    }
}

pub(crate) fn conjuncts(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::And(a, b) => {
            let mut v = conjuncts(a);
            v.extend(conjuncts(b));
            v
        }
        _ => vec![f],
    }
}

/// Finds conjuncts of the form `∀v̄ (… ∧ (U(v̄) → ψ) ∧ …)` with ψ free of `U`; the
/// relations worth enumerating for `U` are then subsets of `{v̄ : ψ}`.
pub(crate) fn find_bound(u: &str, arity: usize, parts: &[&Formula]) -> Option<(Vec<String>, Formula)> {
    let mut found: Option<(Vec<String>, Vec<Formula>)> = None;
    for part in parts {
        let mut vars = Vec::new();
        let mut inner = *part;
        while vars.len() < arity {
            match inner {
                Formula::Forall(v, b) => {
                    vars.push(v.clone());
                    inner = b;
                }
                _ => break,
            }
        }
        if vars.len() != arity || (1..vars.len()).any(|i| vars[..i].contains(&vars[i])) {
            continue;
        }
        for c in conjuncts(inner) {
            let Formula::Implies(ante, cons) = c else { continue };
            let Formula::RelVar(name, ts) = &**ante else { continue };
            let pattern = name == u && ts.iter().zip(&vars).all(|(t, v)| matches!(t, Term::Var(w) if w == v));
            if !pattern || cons.free_so().contains_key(u) {
                continue;
            }
            match &mut found {
                None => found = Some((vars.clone(), vec![(**cons).clone()])),
                Some((fv, list)) => {
                    let mut fo = std::collections::HashMap::new();
                    for (a, b) in vars.iter().zip(fv.iter()) {
                        fo.insert(a.clone(), Term::Var(b.clone()));
                    }
                    list.push(cons.substitute(&fo, &Default::default(), None).ok()?);
                }
            }
        }
    }
    found.map(|(v, list)| (v, Formula::conj(list)))
}

impl<'v> Compiler<'v> {
    pub fn new(vocab: &'v Vocabulary) -> Self {
        Compiler {
            vocab,
            scope_fo: Vec::new(),
            scope_so: Vec::new(),
            fo_inputs: Vec::new(),
            so_inputs: Vec::new(),
            n_fo: 0,
            n_so: 0,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.vocab
    }

    pub fn bind_fo(&mut self, name: &str) -> usize {
        let slot = self.n_fo;
        self.n_fo += 1;
        self.scope_fo.push((name.to_string(), slot));
        slot
    }

    pub fn unbind_fo(&mut self, count: usize) {
        let keep = self.scope_fo.len() - count;
        self.scope_fo.truncate(keep);
    }

    pub fn bind_so(&mut self, name: &str, arity: usize) -> usize {
        let slot = self.n_so;
        self.n_so += 1;
        self.scope_so.push((name.to_string(), arity, slot));
        slot
    }

    pub fn unbind_so(&mut self, count: usize) {
        let keep = self.scope_so.len() - count;
        self.scope_so.truncate(keep);
    }

    pub fn layout(&self) -> Layout {
        Layout {
            fo_inputs: self.fo_inputs.clone(),
            so_inputs: self.so_inputs.clone(),
            n_fo: self.n_fo,
            n_so: self.n_so,
        }
    }

    fn term(&mut self, t: &Term) -> usize {
        if let Term::Var(v) = t {
            if let Some((_, s)) = self.scope_fo.iter().rev().find(|(n, _)| n == v) {
                return *s;
            }
        }
        let name = t.name();
        if let Some((_, s)) = self.fo_inputs.iter().find(|(n, _)| n == name) {
            return *s;
        }
        let slot = self.n_fo;
        self.n_fo += 1;
        self.fo_inputs.push((name.to_string(), slot));
        slot
    }

    fn relvar(&mut self, u: &str, arity: usize) -> Result<usize, LogicError> {
        if let Some((_, k, s)) = self.scope_so.iter().rev().find(|(n, _, _)| n == u) {
            if *k != arity {
                return Err(LogicError::Arity { symbol: u.to_string(), expected: *k, found: arity });
            }
            return Ok(*s);
        }
        if let Some((_, k, s)) = self.so_inputs.iter().find(|(n, _, _)| n == u) {
            if *k != arity {
                return Err(LogicError::Arity { symbol: u.to_string(), expected: *k, found: arity });
            }
            return Ok(*s);
        }
        let slot = self.n_so;
        self.n_so += 1;
        self.so_inputs.push((u.to_string(), arity, slot));
        Ok(slot)
    }

    fn set(&mut self, s: &SetExpr) -> Result<SetNode, LogicError> {
        Ok(match s {
            SetExpr::Var(u) => SetNode::Var(self.relvar(u, 1)?),
            SetExpr::Vertices => SetNode::Vertices,
            SetExpr::Edges => SetNode::Edges,
            SetExpr::All => SetNode::All,
            SetExpr::Union(a, b) => SetNode::Union(Box::new(self.set(a)?), Box::new(self.set(b)?)),
        })
    }

    /// Compiles a bound filter `{v̄ : ψ}` in the current scope.
    pub(crate) fn bound(&mut self, vars: &[String], filter: &Formula) -> Result<Bound, LogicError> {
        let slots: Vec<usize> = vars.iter().map(|v| self.bind_fo(v)).collect();
        let filter = self.compile(filter);
        self.unbind_fo(vars.len());
        Ok(Bound { vars: slots, filter: filter? })
    }

    fn so_quant(&mut self, u: &str, arity: usize, body: &Formula, universal: bool) -> Result<SoQuant, LogicError> {
        let parts = if universal {
            match body {
                Formula::Implies(ante, _) => conjuncts(ante),
                _ => Vec::new(),
            }
        } else {
            conjuncts(body)
        };
        let bound = match find_bound(u, arity, &parts) {
            Some((vars, filter)) => Some(self.bound(&vars, &filter)?),
            None => None,
        };
        let slot = self.bind_so(u, arity);
        let body = self.compile(body);
        self.unbind_so(1);
        Ok(SoQuant { slot, arity, bound, body: body? })
    }

    pub(crate) fn compile(&mut self, f: &Formula) -> Result<Node, LogicError> {
        Ok(match f {
            Formula::True => Node::Bool(true),
            Formula::False => Node::Bool(false),
            Formula::Eq(a, b) => Node::Eq(self.term(a), self.term(b)),
            Formula::Less(a, b) => Node::Less(self.term(a), self.term(b)),
            Formula::Rel(r, ts) => {
                let idx = self.vocab.relation_index(r).ok_or_else(|| LogicError::UnknownSymbol(r.clone()))?;
                let arity = self.vocab.relations[idx].arity;
                if arity != ts.len() {
                    return Err(LogicError::Arity { symbol: r.clone(), expected: arity, found: ts.len() });
                }
                Node::Rel(idx, ts.iter().map(|t| self.term(t)).collect())
            }
            Formula::RelVar(u, ts) => {
                let slot = self.relvar(u, ts.len())?;
                Node::RelVar(slot, ts.iter().map(|t| self.term(t)).collect())
            }
            Formula::Not(a) => Node::Not(Box::new(self.compile(a)?)),
            Formula::And(..) => {
                let mut parts = Vec::new();
                flatten(f, true, &mut parts);
                Node::And(parts.into_iter().map(|p| self.compile(p)).collect::<Result<_, _>>()?)
            }
            Formula::Or(..) => {
                let mut parts = Vec::new();
                flatten(f, false, &mut parts);
                Node::Or(parts.into_iter().map(|p| self.compile(p)).collect::<Result<_, _>>()?)
            }
            Formula::Implies(a, b) => Node::Implies(Box::new(self.compile(a)?), Box::new(self.compile(b)?)),
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                let slot = self.bind_fo(v);
                let body = self.compile(a);
                self.unbind_fo(1);
                let body = Box::new(body?);
                if matches!(f, Formula::Exists(..)) {
                    Node::Exists(slot, body)
                } else {
                    Node::Forall(slot, body)
                }
            }
            Formula::ExistsRel(u, k, a) => Node::ExistsRel(Box::new(self.so_quant(u, *k, a, false)?)),
            Formula::ForallRel(u, k, a) => Node::ForallRel(Box::new(self.so_quant(u, *k, a, true)?)),
            Formula::Native(n) => {
                if n.kind.directed_only() && self.vocab.tag != crate::structures::VocabTag::Directed2 {
                    return Err(LogicError::Unsupported(format!("`{}` over {}", n.kind.name(), self.vocab.name)));
                }
                let terms = n.terms.iter().map(|t| self.term(t)).collect();
                let sets = n.sets.iter().map(|s| self.set(s)).collect::<Result<_, _>>()?;
                Node::Native(n.kind, terms, sets)
            }
        })
    }
}

fn flatten<'f>(f: &'f Formula, and: bool, out: &mut Vec<&'f Formula>) {
    match (f, and) {
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => {
            flatten(a, and, out);
            flatten(b, and, out);
        }
        _ => out.push(f),
    }
}

fn tuple_count(n: usize, arity: usize) -> Option<usize> {
    n.checked_pow(arity as u32)
}

/// Candidate tuple indices for a relation quantifier.
pub(crate) fn candidates(
    arity: usize,
    bound: Option<&Bound>,
    m: &Model,
    env: &mut Env,
) -> Result<Vec<usize>, LogicError> {
    let n = m.size();
    let total = tuple_count(n, arity).ok_or_else(|| LogicError::Capacity("relation space overflow".into()))?;
    let Some(b) = bound else {
        return Ok((0..total).collect());
    };
    let mut out = Vec::new();
    let probe = BitRel::new(arity, n);
    for i in 0..total {
        let t = probe.tuple(i);
        for (slot, p) in b.vars.iter().zip(&t) {
            env.fo[*slot] = *p;
        }
        if eval(&b.filter, m, env)? {
            out.push(i);
        }
    }
    Ok(out)
}

/// Calls `visit` with every subset of `cands` (as a relation), in binary-counter order, until it
/// returns `Some`.
pub(crate) fn for_each_subset<T>(
    slot: usize,
    arity: usize,
    cands: &[usize],
    m: &Model,
    env: &mut Env,
    mut visit: impl FnMut(&mut Env) -> Result<Option<T>, LogicError>,
) -> Result<Option<T>, LogicError> {
    if cands.len() > MAX_SO_BITS {
        return Err(LogicError::Capacity(format!(
            "relation quantifier over {} candidate tuples (limit {MAX_SO_BITS})",
            cands.len()
        )));
    }
    let mut rel = BitRel::new(arity, m.size());
    for mask in 0u64..(1u64 << cands.len()) {
        rel.clear();
        for (bit, &c) in cands.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                rel.set(c);
            }
        }
        env.so[slot] = rel.clone();
        if let Some(r) = visit(env)? {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

pub(crate) fn eval(node: &Node, m: &Model, env: &mut Env) -> Result<bool, LogicError> {
    Ok(match node {
        Node::Bool(b) => *b,
        Node::Eq(a, b) => env.fo[*a] == env.fo[*b],
        Node::Less(a, b) => env.fo[*a] < env.fo[*b],
        Node::Rel(r, ts) => {
            let t: Vec<usize> = ts.iter().map(|s| env.fo[*s]).collect();
            m.rels[*r].contains(&t)
        }
        Node::RelVar(u, ts) => {
            let t: Vec<usize> = ts.iter().map(|s| env.fo[*s]).collect();
            env.so[*u].contains(&t)
        }
        Node::Not(a) => !eval(a, m, env)?,
        Node::And(parts) => {
            for p in parts {
                if !eval(p, m, env)? {
                    return Ok(false);
                }
            }
            true
        }
        Node::Or(parts) => {
            for p in parts {
                if eval(p, m, env)? {
                    return Ok(true);
                }
            }
            false
        }
        Node::Implies(a, b) => !eval(a, m, env)? || eval(b, m, env)?,
        Node::Exists(slot, body) => {
            for p in 0..m.size() {
                env.fo[*slot] = p;
                if eval(body, m, env)? {
                    return Ok(true);
                }
            }
            false
        }
        Node::Forall(slot, body) => {
            for p in 0..m.size() {
                env.fo[*slot] = p;
                if !eval(body, m, env)? {
                    return Ok(false);
                }
            }
            true
        }
        Node::ExistsRel(q) => {
            let cands = candidates(q.arity, q.bound.as_ref(), m, env)?;
            for_each_subset(q.slot, q.arity, &cands, m, env, |env| {
                Ok(if eval(&q.body, m, env)? { Some(()) } else { None })
            })?
            .is_some()
        }
        Node::ForallRel(q) => {
            let cands = candidates(q.arity, q.bound.as_ref(), m, env)?;
            // Relations outside the bound falsify the antecedent, so skipping them is sound.
            for_each_subset(q.slot, q.arity, &cands, m, env, |env| {
                Ok(if eval(&q.body, m, env)? { None } else { Some(()) })
            })?
            .is_none()
        }
        Node::Native(kind, terms, sets) => {
            let g = m.graph()?;
            let ts: Vec<usize> = terms.iter().map(|s| env.fo[*s]).collect();
            let ss: Vec<Vec<bool>> = sets.iter().map(|s| members(s, g, env)).collect();
            eval_native(*kind, g, &ts, &ss)
        }
    })
}

fn members(s: &SetNode, g: &GraphView, env: &Env) -> Vec<bool> {
    match s {
        SetNode::Var(slot) => (0..g.n).map(|p| env.so[*slot].contains(&[p])).collect(),
        SetNode::Vertices => g.is_edge.iter().map(|e| !e).collect(),
        SetNode::Edges => g.is_edge.clone(),
        SetNode::All => vec![true; g.n],
        SetNode::Union(a, b) => members(a, g, env).into_iter().zip(members(b, g, env)).map(|(x, y)| x || y).collect(),
    }
}

/// A formula compiled against a vocabulary, reusable across structures and assignments.
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    root: Node,
    layout: Layout,
    vocab: Vocabulary,
}

impl CompiledFormula {
    pub fn new(f: &Formula, vocab: &Vocabulary) -> Result<Self, LogicError> {
        let mut c = Compiler::new(vocab);
        let root = c.compile(f)?;
        Ok(CompiledFormula { root, layout: c.layout(), vocab: vocab.clone() })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn eval(&self, m: &Model, a: &Assignment) -> Result<bool, LogicError> {
        self.check_vocab(m)?;
        let mut env = self.layout.env(m, a)?;
        eval(&self.root, m, &mut env)
    }

    pub(crate) fn check_vocab(&self, m: &Model) -> Result<(), LogicError> {
        if !self.vocab.same_relations(m.structure().vocab()) {
            return Err(LogicError::Unsupported(format!(
                "formula over {} evaluated on a {} structure",
                self.vocab.name,
                m.structure().vocab().name
            )));
        }
        Ok(())
    }

    /// Evaluates in a prepared environment (see [`Layout::env_open`]).
    pub(crate) fn eval_env(&self, m: &Model, env: &mut Env) -> Result<bool, LogicError> {
        eval(&self.root, m, env)
    }
}

/// `structure, assignment ⊨ formula`.
pub fn evaluate(structure: &IncidenceStructure, assignment: &Assignment, formula: &Formula) -> Result<bool, LogicError> {
    let m = Model::new(structure);
    CompiledFormula::new(formula, structure.vocab())?.eval(&m, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse;
    use crate::structures::{builtin_graph, VocabTag};

    fn s(name: &str) -> IncidenceStructure {
        IncidenceStructure::from_graph(&builtin_graph(name, false).unwrap(), VocabTag::Graph2).unwrap()
    }

    #[test]
    fn edge_predicate_on_k2() {
        let k2 = s("k2");
        let f = parse("(PE x)", k2.vocab()).unwrap();
        let a = Assignment::new().with_fo_named(&k2, "x", "e1").unwrap();
        assert!(evaluate(&k2, &a, &f).unwrap());
        let a = a.with_fo_named(&k2, "x", "v1").unwrap();
        assert!(!evaluate(&k2, &a, &f).unwrap());
    }

    #[test]
    fn unassigned_and_foreign_elements() {
        let k2 = s("k2");
        let f = parse("(PE x)", k2.vocab()).unwrap();
        assert_eq!(evaluate(&k2, &Assignment::new(), &f), Err(LogicError::Unassigned("x".into())));
        let small = k2.restrict(|x| k2.name(x) != "e1");
        let a = Assignment::new().with_fo_named(&k2, "x", "e1").unwrap();
        assert!(matches!(evaluate(&small, &a, &f), Err(LogicError::NotInUniverse(_))));
    }

    #[test]
    fn second_order_quantifiers() {
        let p3 = s("p3");
        // Some set of edges covers every vertex: true for P3 ({e1,e2}).
        let f = parse(
            "(existsR U 1 (and (subset U E) (forall v (implies (PV v) (exists e (and (rvar U e) (inc v e)))))))",
            p3.vocab(),
        )
        .unwrap();
        assert!(evaluate(&p3, &Assignment::new(), &f).unwrap());
        let e3 = s("e3");
        assert!(!evaluate(&e3, &Assignment::new(), &f).unwrap());
        // Every binary relation contained in N is contained in N.
        let g = parse("(forallR R 2 (implies (forall (a b) (implies (rvar R a b) (rel N a b))) (forall (a b) (implies (rvar R a b) (rel N a b)))))", p3.vocab()).unwrap();
        assert!(evaluate(&p3, &Assignment::new(), &g).unwrap());
    }

    #[test]
    fn bound_detection() {
        let f = parse("(and (subset U E) (exists x (rvar U x)))", &Vocabulary::graph2()).unwrap();
        let parts = conjuncts(&f);
        let (vars, filter) = find_bound("U", 1, &parts).unwrap();
        assert_eq!(vars, vec!["z".to_string()]);
        assert_eq!(filter.to_string(), "(exists y (rel N y z))");
        assert!(find_bound("W", 1, &parts).is_none());
    }

    #[test]
    fn bitrel_round_trip() {
        let mut r = BitRel::new(2, 3);
        r.insert(&[2, 1]);
        r.insert(&[0, 0]);
        assert_eq!(r.tuples(), vec![vec![0, 0], vec![2, 1]]);
    }
}
