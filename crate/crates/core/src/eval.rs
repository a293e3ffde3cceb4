//! Brute-force Tarskian evaluation, solution sets and counting.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::formula::{Formula, LevelOrdinal, Signature, Var};
use crate::structure::{ElemId, FinStructure, Tuple};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("free variable `{0}` has no value")]
    Unassigned(Var),
    #[error("unknown relation symbol `{0}`")]
    UnknownRelation(String),
    #[error("relation `{symbol}` expects {expected} argument(s), got {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("parameter element {0} is not in the structure")]
    MissingElement(ElemId),
    #[error("tuple lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone)]
enum Node {
    Rel(usize, Vec<usize>),
    Eq(usize, usize),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Exists {
        slots: Vec<usize>,
        domain: usize,
        body: Box<Node>,
    },
}

/// A formula with variables resolved to slot indices and relation symbols to
/// signature positions. The first `free` slots hold the free variables in the
/// order given to [`Compiled::new`].
#[derive(Debug, Clone)]
pub struct Compiled {
    node: Node,
    slots: usize,
    free: usize,
    guards: Vec<Option<LevelOrdinal>>,
}

impl Compiled {
    pub fn new(formula: &Formula, free: &[Var], signature: &Signature) -> Result<Self, EvalError> {
        let mut scope: HashMap<Var, Vec<usize>> = HashMap::new();
        for (i, v) in free.iter().enumerate() {
            scope.entry(v.clone()).or_default().push(i);
        }
        let mut c = Compiled {
            node: Node::Eq(0, 0),
            slots: free.len(),
            free: free.len(),
            guards: Vec::new(),
        };
        c.node = c.build(formula, &mut scope, signature)?;
        Ok(c)
    }

    fn lookup(scope: &HashMap<Var, Vec<usize>>, v: &Var) -> Result<usize, EvalError> {
        scope
            .get(v)
            .and_then(|s| s.last().copied())
            .ok_or_else(|| EvalError::Unassigned(v.clone()))
    }

    fn build(
        &mut self,
        f: &Formula,
        scope: &mut HashMap<Var, Vec<usize>>,
        sig: &Signature,
    ) -> Result<Node, EvalError> {
        Ok(match f {
            Formula::Rel { symbol, args } => {
                let idx = sig
                    .index_of(symbol)
                    .ok_or_else(|| EvalError::UnknownRelation(symbol.clone()))?;
                let arity = sig.arity(symbol).unwrap_or(0);
                if arity != args.len() {
                    return Err(EvalError::Arity {
                        symbol: symbol.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                let slots = args
                    .iter()
                    .map(|v| Self::lookup(scope, v))
                    .collect::<Result<_, _>>()?;
                Node::Rel(idx, slots)
            }
            Formula::Eq(a, b) => Node::Eq(Self::lookup(scope, a)?, Self::lookup(scope, b)?),
            Formula::Not(g) => Node::Not(Box::new(self.build(g, scope, sig)?)),
            Formula::And(a, b) => Node::And(
                Box::new(self.build(a, scope, sig)?),
                Box::new(self.build(b, scope, sig)?),
            ),
            Formula::Or(a, b) => Node::Or(
                Box::new(self.build(a, scope, sig)?),
                Box::new(self.build(b, scope, sig)?),
            ),
            Formula::Exists { vars, guard, body } => {
                let domain = match self.guards.iter().position(|g| g == guard) {
                    Some(d) => d,
                    None => {
                        self.guards.push(*guard);
                        self.guards.len() - 1
                    }
                };
                let mut slots = Vec::with_capacity(vars.len());
                for v in vars {
                    let s = self.slots;
                    self.slots += 1;
                    scope.entry(v.clone()).or_default().push(s);
                    slots.push(s);
                }
                let body = self.build(body, scope, sig)?;
                for v in vars {
                    scope.get_mut(v).map(Vec::pop);
                }
                Node::Exists {
                    slots,
                    domain,
                    body: Box::new(body),
                }
            }
        })
    }

    /// Attaches the structure, precomputing quantifier domains.
    pub fn bind<'a>(&'a self, m: &'a FinStructure) -> Bound<'a> {
        let domains = self
            .guards
            .iter()
            .map(|g| match g {
                None => m.elements(),
                Some(l) => m.v_set(*l),
            })
            .collect();
        Bound {
            compiled: self,
            m,
            domains,
        }
    }

    /// A slot vector of the right length, free slots first.
    pub fn scratch(&self) -> Vec<ElemId> {
        vec![ElemId(0); self.slots]
    }

    pub fn free_len(&self) -> usize {
        self.free
    }
}

/// A compiled formula bound to one structure.
pub struct Bound<'a> {
    compiled: &'a Compiled,
    m: &'a FinStructure,
    domains: Vec<Vec<ElemId>>,
}

impl Bound<'_> {
    /// Evaluates with the free slots of `slots` already filled.
    pub fn holds(&self, slots: &mut [ElemId]) -> bool {
        self.node(&self.compiled.node, slots)
    }

    /// Searches for values of the slots `from..from + count` in `domain`
    /// making the formula true, the other free slots being fixed. Returns the
    /// first solution in lexicographic order of domain positions.
    ///
    /// Quantifier-free parts are evaluated three-valued on partial
    /// assignments so that failing prefixes are pruned.
    pub fn find(
        &self,
        slots: &mut [ElemId],
        from: usize,
        count: usize,
        domain: &[ElemId],
    ) -> Option<Vec<ElemId>> {
        if count == 0 {
            return self.holds(slots).then(Vec::new);
        }
        if self.search(slots, from, from, from + count, domain) {
            Some(slots[from..from + count].to_vec())
        } else {
            None
        }
    }

    fn search(&self, slots: &mut [ElemId], from: usize, next: usize, end: usize, domain: &[ElemId]) -> bool {
        for &d in domain {
            slots[next] = d;
            if next + 1 == end {
                if self.holds(slots) {
                    return true;
                }
                continue;
            }
            let assigned = |s: usize| s < from || s >= end || s <= next;
            if self.partial(&self.compiled.node, slots, &assigned) == Some(false) {
                continue;
            }
            if self.search(slots, from, next + 1, end, domain) {
                return true;
            }
        }
        false
    }

    fn partial(&self, n: &Node, slots: &mut [ElemId], assigned: &dyn Fn(usize) -> bool) -> Option<bool> {
        match n {
            Node::Rel(_, args) => {
                if args.iter().all(|s| assigned(*s)) {
                    Some(self.node(n, slots))
                } else {
                    None
                }
            }
            Node::Eq(a, b) => (assigned(*a) && assigned(*b)).then(|| slots[*a] == slots[*b]),
            Node::Not(g) => self.partial(g, slots, assigned).map(|v| !v),
            Node::And(a, b) => match self.partial(a, slots, assigned) {
                Some(false) => Some(false),
                Some(true) => self.partial(b, slots, assigned),
                None => match self.partial(b, slots, assigned) {
                    Some(false) => Some(false),
                    _ => None,
                },
            },
            Node::Or(a, b) => match self.partial(a, slots, assigned) {
                Some(true) => Some(true),
                Some(false) => self.partial(b, slots, assigned),
                None => match self.partial(b, slots, assigned) {
                    Some(true) => Some(true),
                    _ => None,
                },
            },
            Node::Exists { .. } => None,
        }
    }

    fn node(&self, n: &Node, slots: &mut [ElemId]) -> bool {
        match n {
            Node::Rel(r, args) => {
                let mut key = [ElemId(0); 8];
                if args.len() <= key.len() {
                    for (k, s) in key.iter_mut().zip(args) {
                        *k = slots[*s];
                    }
                    self.m.holds_at(*r, &key[..args.len()])
                } else {
                    let key: Vec<ElemId> = args.iter().map(|s| slots[*s]).collect();
                    self.m.holds_at(*r, &key)
                }
            }
            Node::Eq(a, b) => slots[*a] == slots[*b],
            Node::Not(g) => !self.node(g, slots),
            Node::And(a, b) => self.node(a, slots) && self.node(b, slots),
            Node::Or(a, b) => self.node(a, slots) || self.node(b, slots),
            Node::Exists {
                slots: bound,
                domain,
                body,
            } => {
                let dom = &self.domains[*domain];
                if dom.is_empty() {
                    return false;
                }
                let mut idx = vec![0usize; bound.len()];
                loop {
                    for (s, i) in bound.iter().zip(&idx) {
                        slots[*s] = dom[*i];
                    }
                    if self.node(body, slots) {
                        return true;
                    }
                    if !crate::formula::odometer(&mut idx, dom.len()) {
                        return false;
                    }
                }
            }
        }
    }
}

/// Truth of `formula` in `m` under `assignment`.
pub fn eval(
    m: &FinStructure,
    formula: &Formula,
    assignment: &BTreeMap<Var, ElemId>,
) -> Result<bool, EvalError> {
    let free: Vec<Var> = formula.free_vars().into_iter().collect();
    let c = Compiled::new(formula, &free, m.signature())?;
    let mut slots = c.scratch();
    for (i, v) in free.iter().enumerate() {
        let e = *assignment
            .get(v)
            .ok_or_else(|| EvalError::Unassigned(v.clone()))?;
        if !m.contains(e) {
            return Err(EvalError::MissingElement(e));
        }
        slots[i] = e;
    }
    Ok(c.bind(m).holds(&mut slots))
}

/// `{ x̄ : φ(x̄, params) }`, optionally restricted to tuples inside `V_cap`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DefinableSet {
    pub formula: Formula,
    pub vars: Vec<Var>,
    pub params: BTreeMap<Var, ElemId>,
    pub level_cap: Option<LevelOrdinal>,
}

impl DefinableSet {
    pub fn new(formula: Formula, vars: Vec<Var>) -> Self {
        DefinableSet {
            formula,
            vars,
            params: BTreeMap::new(),
            level_cap: None,
        }
    }

    pub fn with_param(mut self, var: impl Into<Var>, e: ElemId) -> Self {
        self.params.insert(var.into(), e);
        self
    }

    pub fn with_params(mut self, params: impl IntoIterator<Item = (Var, ElemId)>) -> Self {
        self.params.extend(params);
        self
    }

    pub fn capped(mut self, cap: LevelOrdinal) -> Self {
        self.level_cap = Some(cap);
        self
    }

    /// The `V_ω` relativization.
    pub fn omega(self) -> Self {
        self.capped(LevelOrdinal::OMEGA)
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn params_present_in(&self, m: &FinStructure) -> bool {
        self.params.values().all(|e| m.contains(*e))
    }

    fn compile(&self, m: &FinStructure) -> Result<(Compiled, Vec<ElemId>), EvalError> {
        let mut free = self.vars.clone();
        let mut values = Vec::new();
        for (v, e) in &self.params {
            if !m.contains(*e) {
                return Err(EvalError::MissingElement(*e));
            }
            free.push(v.clone());
            values.push(*e);
        }
        Ok((Compiled::new(&self.formula, &free, m.signature())?, values))
    }

    /// Calls `visit` on every solution tuple in lexicographic id order.
    pub fn for_each_solution(
        &self,
        m: &FinStructure,
        mut visit: impl FnMut(&[ElemId]),
    ) -> Result<(), EvalError> {
        let (c, params) = self.compile(m)?;
        let bound = c.bind(m);
        let domain = match self.level_cap {
            Some(l) => m.v_set(l),
            None => m.elements(),
        };
        let k = self.vars.len();
        let mut slots = c.scratch();
        slots[k..k + params.len()].copy_from_slice(&params);
        if k == 0 {
            if bound.holds(&mut slots) {
                visit(&[]);
            }
            return Ok(());
        }
        if domain.is_empty() {
            return Ok(());
        }
        let mut idx = vec![0usize; k];
        let mut tuple = vec![ElemId(0); k];
        loop {
            for j in 0..k {
                tuple[j] = domain[idx[j]];
                slots[j] = tuple[j];
            }
            if bound.holds(&mut slots) {
                visit(&tuple);
            }
            if !crate::formula::odometer(&mut idx, domain.len()) {
                return Ok(());
            }
        }
    }
}

pub fn solutions(m: &FinStructure, set: &DefinableSet) -> Result<Vec<Tuple>, EvalError> {
    let mut out = Vec::new();
    set.for_each_solution(m, |t| out.push(t.to_vec()))?;
    Ok(out)
}

pub fn count(m: &FinStructure, set: &DefinableSet) -> Result<u64, EvalError> {
    let mut n = 0u64;
    set.for_each_solution(m, |_| n += 1)?;
    Ok(n)
}

/// The atomic diagram of a tuple: its equality pattern and, for every relation
/// and every argument pattern over the tuple's positions, whether the fact
/// holds. Two tuples have equal keys iff they satisfy the same atomic formulas.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicType {
    pattern: Vec<u8>,
    facts: Vec<bool>,
}

pub fn atomic_type(m: &FinStructure, tuple: &[ElemId]) -> AtomicType {
    let n = tuple.len();
    let pattern = tuple
        .iter()
        .map(|e| tuple.iter().position(|f| f == e).unwrap_or(0) as u8)
        .collect();
    let mut facts = Vec::new();
    let mut key = Vec::new();
    for (r, (_, arity)) in m.signature().relations().enumerate() {
        if n == 0 {
            break;
        }
        let mut idx = vec![0usize; arity];
        loop {
            key.clear();
            key.extend(idx.iter().map(|&i| tuple[i]));
            facts.push(m.holds_at(r, &key));
            if arity == 0 || !crate::formula::odometer(&mut idx, n) {
                break;
            }
        }
    }
    AtomicType { pattern, facts }
}

/// True iff `āb̄` and `āb̄#` satisfy the same atomic formulas, i.e. the map
/// fixing `ā` and sending `b̄` to `b̄#` is a partial isomorphism.
pub fn qf_type_equal(
    m: &FinStructure,
    b: &[ElemId],
    b_sharp: &[ElemId],
    a: &[ElemId],
) -> Result<bool, EvalError> {
    if b.len() != b_sharp.len() {
        return Err(EvalError::LengthMismatch(b.len(), b_sharp.len()));
    }
    for e in a.iter().chain(b).chain(b_sharp) {
        if !m.contains(*e) {
            return Err(EvalError::MissingElement(*e));
        }
    }
    let left: Vec<ElemId> = a.iter().chain(b).copied().collect();
    let right: Vec<ElemId> = a.iter().chain(b_sharp).copied().collect();
    Ok(atomic_type(m, &left) == atomic_type(m, &right))
}
