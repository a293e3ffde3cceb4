//! Model-complete theories with decidable extension oracles.
//!
//! Every bundled theory has free amalgamation over its universal part, so
//! whether `φ(ā, ȳ)` is realized in some model extending `M` depends only on
//! the atomic diagram of `ā`. The oracle therefore searches extensions of the
//! substructure on `ā` by at most `|ȳ|` new elements, one element at a time,
//! using the per-theory [`Theory::attachments`], and lifts the chosen witness
//! back to `M` with [`Theory::complete`].

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::eval::{atomic_type, AtomicType, Compiled, EvalError};
use crate::formula::{base_formula_stream, parse, Formula, LevelOrdinal, Signature, Split, Var};
use crate::structure::{ElemId, ExtensionDelta, FinStructure, Tuple};

mod plugins;

pub use plugins::{GenericEquivalence, HensonTriangleFree, InfiniteSet, RandomGraph};

/// `∀x̄ ∃ȳ matrix`, with `x̄`/`ȳ` given by `split`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Axiom {
    pub name: String,
    pub matrix: Formula,
    pub split: Split,
}

impl Axiom {
    /// Parses `matrix` against `signature`; parameters are the `x` variables
    /// and witnesses the `y` variables, each sorted by index.
    pub fn parse(name: &str, matrix: &str, signature: &Signature) -> Axiom {
        let matrix = parse(matrix, signature).expect("bundled axiom parses");
        let (mut xs, mut ys): (Vec<Var>, Vec<Var>) = matrix
            .free_vars()
            .into_iter()
            .partition(|v| v.name().starts_with('x'));
        let key = |v: &Var| v.name()[1..].parse::<usize>().unwrap_or(0);
        xs.sort_by_key(key);
        ys.sort_by_key(key);
        Axiom {
            name: name.to_string(),
            matrix,
            split: Split::new(xs, ys),
        }
    }

    pub fn is_universal(&self) -> bool {
        self.split.witnesses.is_empty()
    }
}

/// A universal axiom failing on a tuple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub axiom: String,
    pub tuple: Tuple,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t: Vec<String> = self.tuple.iter().map(ElemId::to_string).collect();
        write!(f, "{} fails at ({})", self.axiom, t.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("structure violates the universal theory: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    NotUniversalModel(Vec<Violation>),
    #[error("formula is not quantifier-free: {0}")]
    NotQuantifierFree(Formula),
    #[error("split does not partition the free variables of {0}")]
    BadSplit(Formula),
    #[error("expected {expected} parameter(s), got {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no one-element structure satisfies the universal theory of {0}")]
    NoSingleton(String),
    #[error("one-element structures of {0} are not determined by the universal theory")]
    AmbiguousSingleton(String),
}

/// One new element's facts: `(relation index, tuple)` pairs.
pub type Attachment = Vec<(usize, Tuple)>;

/// A model-complete theory in a finite relational signature.
pub trait Theory: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn signature(&self) -> &Signature;

    /// A finite fragment of a ∀∃ axiomatization, universal axioms included.
    fn axioms(&self) -> &[Axiom];

    /// Universal-axiom failures of `m`; empty iff `m` embeds in a model.
    fn validate_t_forall(&self, m: &FinStructure) -> Vec<Violation>;

    /// All ways, up to the facts that matter over the other elements of
    /// `local`, of attaching the element `new` (present in `local` with no
    /// facts yet) so that the result still satisfies the universal theory.
    /// Must be complete: any valid one-point extension agrees with one of the
    /// returned attachments on `local`.
    fn attachments(&self, local: &FinStructure, new: ElemId) -> Vec<Attachment>;

    /// Adds the facts `m` forces on a delta computed over a local
    /// substructure (for example closing an equivalence class).
    fn complete(&self, _m: &FinStructure, _delta: &mut ExtensionDelta) {}

    /// Upper bound on new elements needed to realize a formula with
    /// `witnesses` witness variables. One per variable suffices for every
    /// bundled theory.
    fn witness_bound(&self, witnesses: usize) -> usize {
        witnesses
    }
}

/// All bundled theories, by name.
pub fn available_plugins() -> Vec<&'static str> {
    vec![
        InfiniteSet::NAME,
        RandomGraph::NAME,
        GenericEquivalence::NAME,
        HensonTriangleFree::NAME,
    ]
}

pub fn plugin_by_name(name: &str) -> Option<Box<dyn Theory>> {
    let t: Box<dyn Theory> = match name {
        InfiniteSet::NAME => Box::new(InfiniteSet::new()),
        RandomGraph::NAME => Box::new(RandomGraph::new()),
        GenericEquivalence::NAME => Box::new(GenericEquivalence::new()),
        HensonTriangleFree::NAME => Box::new(HensonTriangleFree::new()),
        _ => return None,
    };
    Some(t)
}

/// The witness found by the oracle: applying `delta` gives a structure in
/// which `φ(ā, witness)` holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Realization {
    pub delta: ExtensionDelta,
    pub witness: Vec<ElemId>,
}

/// A minimal local witness pattern. Local ids `0..anchors` are the distinct
/// elements of `ā` in order of first occurrence; `anchors..anchors+new` are
/// the new elements.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct LocalPattern {
    new: usize,
    facts: Vec<(usize, Vec<u32>)>,
    witness: Vec<u32>,
}

impl LocalPattern {
    fn rank(&self) -> (usize, usize, &[(usize, Vec<u32>)], &[u32]) {
        (self.new, self.facts.len(), &self.facts, &self.witness)
    }
}

type CacheKey = (Split, AtomicType);

/// Extension oracle for one theory, with a realizability cache keyed by the
/// atomic diagram of the parameters.
pub struct Oracle<'t> {
    theory: &'t dyn Theory,
    cache: RefCell<HashMap<Formula, HashMap<CacheKey, Option<LocalPattern>>>>,
}

impl fmt::Debug for Oracle<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracle")
            .field("theory", &self.theory.name())
            .finish()
    }
}

impl<'t> Oracle<'t> {
    pub fn new(theory: &'t dyn Theory) -> Self {
        Oracle {
            theory,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn theory(&self) -> &'t dyn Theory {
        self.theory
    }

    fn check_query(formula: &Formula, split: &Split, a: &[ElemId]) -> Result<(), OracleError> {
        if !formula.is_quantifier_free() {
            return Err(OracleError::NotQuantifierFree(formula.clone()));
        }
        let mut vars = split.all_vars();
        vars.sort();
        vars.dedup();
        let free = formula.free_vars();
        if vars.len() != split.params.len() + split.witnesses.len()
            || !free.iter().all(|v| vars.contains(v))
        {
            return Err(OracleError::BadSplit(formula.clone()));
        }
        if split.params.len() != a.len() {
            return Err(OracleError::ParameterCount {
                expected: split.params.len(),
                found: a.len(),
            });
        }
        Ok(())
    }

    /// Whether some model extending `m` realizes `φ(ā, ȳ)`. Does not check
    /// that `m` satisfies the universal theory.
    pub fn realizable(
        &self,
        m: &FinStructure,
        formula: &Formula,
        split: &Split,
        a: &[ElemId],
    ) -> Result<bool, OracleError> {
        Ok(self.pattern(m, formula, split, a)?.is_some())
    }

    /// The minimal realization of `φ(ā, ȳ)`, new elements at `level_for_new`.
    /// Does not check that `m` satisfies the universal theory.
    pub fn realize(
        &self,
        m: &FinStructure,
        formula: &Formula,
        split: &Split,
        a: &[ElemId],
        level_for_new: LevelOrdinal,
    ) -> Result<Option<Realization>, OracleError> {
        let pattern = self.pattern(m, formula, split, a)?;
        Ok(pattern.map(|p| self.lift(m, &p, a, level_for_new)))
    }

    /// As [`Oracle::realize`] but bypassing the cache.
    pub fn realize_fresh(
        &self,
        m: &FinStructure,
        formula: &Formula,
        split: &Split,
        a: &[ElemId],
        level_for_new: LevelOrdinal,
    ) -> Result<Option<Realization>, OracleError> {
        Self::check_query(formula, split, a)?;
        for e in a {
            if !m.contains(*e) {
                return Err(EvalError::MissingElement(*e).into());
            }
        }
        let pattern = self.search(m, formula, split, a)?;
        Ok(pattern.map(|p| self.lift(m, &p, a, level_for_new)))
    }

    fn pattern(
        &self,
        m: &FinStructure,
        formula: &Formula,
        split: &Split,
        a: &[ElemId],
    ) -> Result<Option<LocalPattern>, OracleError> {
        for e in a {
            if !m.contains(*e) {
                return Err(EvalError::MissingElement(*e).into());
            }
        }
        let ty = atomic_type(m, a);
        if let Some(per) = self.cache.borrow().get(formula) {
            if let Some(hit) = per.get(&(split.clone(), ty.clone())) {
                return Ok(hit.clone());
            }
        }
        Self::check_query(formula, split, a)?;
        let found = self.search(m, formula, split, a)?;
        self.cache
            .borrow_mut()
            .entry(formula.clone())
            .or_default()
            .insert((split.clone(), ty), found.clone());
        Ok(found)
    }

    fn search(
        &self,
        m: &FinStructure,
        formula: &Formula,
        split: &Split,
        a: &[ElemId],
    ) -> Result<Option<LocalPattern>, OracleError> {
        let (local, params) = local_structure(m, a);
        let compiled = Compiled::new(formula, &split.all_vars(), m.signature())?;
        let q = split.witnesses.len();
        let bound = self.theory.witness_bound(q);
        let anchors = local.len();
        for r in 0..=bound {
            let mut best: Option<LocalPattern> = None;
            let mut added = Vec::new();
            self.extend_local(
                &local,
                anchors,
                r,
                &mut added,
                &compiled,
                &params,
                q,
                &mut best,
            );
            if best.is_some() {
                return Ok(best);
            }
        }
        Ok(None)
    }

    #[allow(clippy::too_many_arguments)]
    fn extend_local(
        &self,
        work: &FinStructure,
        anchors: usize,
        remaining: usize,
        added: &mut Vec<(usize, Tuple)>,
        compiled: &Compiled,
        params: &[ElemId],
        q: usize,
        best: &mut Option<LocalPattern>,
    ) {
        if remaining == 0 {
            let total = work.len();
            let new = total - anchors;
            let bound = compiled.bind(work);
            let mut slots = compiled.scratch();
            slots[..params.len()].copy_from_slice(params);
            let mut digits = vec![0usize; q];
            loop {
                if onto_in_order(&digits, anchors, new) {
                    for (j, d) in digits.iter().enumerate() {
                        slots[params.len() + j] = ElemId(*d as u32);
                    }
                    if bound.holds(&mut slots) {
                        let mut facts: Vec<(usize, Vec<u32>)> = added
                            .iter()
                            .map(|(r, t)| (*r, t.iter().map(|e| e.0).collect()))
                            .collect();
                        facts.sort();
                        let cand = LocalPattern {
                            new,
                            facts,
                            witness: digits.iter().map(|d| *d as u32).collect(),
                        };
                        if best.as_ref().map_or(true, |b| cand.rank() < b.rank()) {
                            *best = Some(cand);
                        }
                    }
                }
                if q == 0 || !crate::formula::odometer(&mut digits, total) {
                    break;
                }
            }
            return;
        }
        let id = ElemId(work.len() as u32);
        let mut base = work.clone();
        base.add_element(id, LevelOrdinal::Fin(0))
            .expect("local ids are dense");
        for att in self.theory.attachments(&base, id) {
            let mut next = base.clone();
            let mark = added.len();
            for (r, t) in &att {
                let sym = symbol_at(next.signature(), *r);
                next.add_fact(&sym, t).expect("attachment facts are well formed");
                added.push((*r, t.clone()));
            }
            self.extend_local(&next, anchors, remaining - 1, added, compiled, params, q, best);
            added.truncate(mark);
        }
    }

    fn lift(
        &self,
        m: &FinStructure,
        p: &LocalPattern,
        a: &[ElemId],
        level_for_new: LevelOrdinal,
    ) -> Realization {
        let mut distinct: Vec<ElemId> = Vec::new();
        for e in a {
            if !distinct.contains(e) {
                distinct.push(*e);
            }
        }
        let first_new = m.next_id().0;
        let k = distinct.len() as u32;
        let map = |i: u32| {
            if i < k {
                distinct[i as usize]
            } else {
                ElemId(first_new + i - k)
            }
        };
        let sig = m.signature();
        let mut delta = ExtensionDelta {
            new_elements: (0..p.new as u32)
                .map(|j| (ElemId(first_new + j), level_for_new))
                .collect(),
            new_tuples: p
                .facts
                .iter()
                .map(|(r, t)| (symbol_at(sig, *r), t.iter().map(|i| map(*i)).collect()))
                .collect(),
        };
        self.theory.complete(m, &mut delta);
        delta.canonicalize();
        Realization {
            delta,
            witness: p.witness.iter().map(|i| map(*i)).collect(),
        }
    }

    /// Number of cached (formula, parameter type) answers.
    pub fn cache_len(&self) -> usize {
        self.cache.borrow().values().map(HashMap::len).sum()
    }
}

fn symbol_at(sig: &Signature, r: usize) -> String {
    sig.relations()
        .nth(r)
        .map(|(s, _)| s.to_string())
        .expect("relation index in range")
}

/// True iff every new id `anchors..anchors+new` occurs in `digits`, first
/// occurrences in increasing order.
fn onto_in_order(digits: &[usize], anchors: usize, new: usize) -> bool {
    let mut next = anchors;
    for &d in digits {
        if d >= anchors {
            if d == next {
                next += 1;
            } else if d > next {
                return false;
            }
        }
    }
    next == anchors + new
}

/// The substructure on the distinct elements of `a`, relabelled `0..k` in
/// order of first occurrence, and `a` in the new labels.
fn local_structure(m: &FinStructure, a: &[ElemId]) -> (FinStructure, Vec<ElemId>) {
    let mut distinct: Vec<ElemId> = Vec::new();
    let params: Vec<ElemId> = a
        .iter()
        .map(|e| {
            let i = distinct.iter().position(|d| d == e).unwrap_or_else(|| {
                distinct.push(*e);
                distinct.len() - 1
            });
            ElemId(i as u32)
        })
        .collect();
    let mut local = FinStructure::new(m.signature().clone());
    for i in 0..distinct.len() {
        local
            .add_element(ElemId(i as u32), LevelOrdinal::Fin(0))
            .expect("dense ids");
    }
    let k = distinct.len();
    if k > 0 {
        let relations: Vec<(String, usize)> = m
            .signature()
            .relations()
            .map(|(s, a)| (s.to_string(), a))
            .collect();
        for (r, (sym, arity)) in relations.iter().enumerate() {
            let mut idx = vec![0usize; *arity];
            loop {
                let global: Vec<ElemId> = idx.iter().map(|&i| distinct[i]).collect();
                if m.holds_at(r, &global) {
                    let t: Vec<ElemId> = idx.iter().map(|&i| ElemId(i as u32)).collect();
                    local.add_fact(sym, &t).expect("local fact");
                }
                if *arity == 0 || !crate::formula::odometer(&mut idx, k) {
                    break;
                }
            }
        }
    }
    (local, params)
}

/// `Some(delta)` realizing `φ(ā, ȳ)` with new elements at `level_for_new`,
/// or `None` if no model extending `m` realizes it.
pub fn extends_with_witness(
    theory: &dyn Theory,
    m: &FinStructure,
    formula: &Formula,
    split: &Split,
    a: &[ElemId],
    level_for_new: LevelOrdinal,
) -> Result<Option<Realization>, OracleError> {
    let violations = theory.validate_t_forall(m);
    if !violations.is_empty() {
        return Err(OracleError::NotUniversalModel(violations));
    }
    Oracle::new(theory).realize_fresh(m, formula, split, a, level_for_new)
}

/// One formula of a family, with its non-shared variables bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub formula: Formula,
    pub bindings: BTreeMap<Var, ElemId>,
}

impl Constraint {
    pub fn new(formula: Formula, bindings: impl IntoIterator<Item = (Var, ElemId)>) -> Self {
        Constraint {
            formula,
            bindings: bindings.into_iter().collect(),
        }
    }
}

/// Conjoins the constraints with their bound variables renamed apart. The
/// result's split has the renamed parameters first and `shared` as witnesses.
pub fn conjoin(constraints: &[Constraint], shared: &[Var]) -> Option<(Formula, Split, Vec<ElemId>)> {
    let mut parts = Vec::new();
    let mut params = Vec::new();
    let mut values = Vec::new();
    for (i, c) in constraints.iter().enumerate() {
        let mut rename = BTreeMap::new();
        for (v, e) in &c.bindings {
            let fresh = Var::new(format!("p{}_{}", i, v.name()));
            rename.insert(v.clone(), fresh.clone());
            params.push(fresh);
            values.push(*e);
        }
        parts.push(c.formula.rename(&rename));
    }
    let f = Formula::conjunction(parts)?;
    Some((f, Split::new(params, shared.to_vec()), values))
}

/// Whether some model extending `m` has a single `x̄` satisfying every
/// constraint. An empty family is trivially realizable.
pub fn jointly_realizable(
    oracle: &Oracle<'_>,
    m: &FinStructure,
    constraints: &[Constraint],
    shared: &[Var],
) -> Result<bool, OracleError> {
    let Some((f, split, values)) = conjoin(constraints, shared) else {
        return Ok(true);
    };
    oracle.realizable(m, &f, &split, &values)
}

/// The forced one-element structure: the facts on a single element common to
/// every one-element model of the universal theory.
pub fn forced_singleton(theory: &dyn Theory, level: LevelOrdinal) -> Result<FinStructure, OracleError> {
    let sig = theory.signature().clone();
    let e = ElemId(0);
    let symbols: Vec<(String, usize)> = sig.relations().map(|(s, a)| (s.to_string(), a)).collect();
    let mut valid: Vec<FinStructure> = Vec::new();
    for mask in 0u64..(1u64 << symbols.len()) {
        let mut m = FinStructure::new(sig.clone());
        m.add_element(e, level).expect("fresh");
        for (i, (s, arity)) in symbols.iter().enumerate() {
            if mask >> i & 1 == 1 {
                m.add_fact(s, &vec![e; *arity]).expect("well formed");
            }
        }
        if theory.validate_t_forall(&m).is_empty() {
            valid.push(m);
        }
    }
    let mut forced = FinStructure::new(sig.clone());
    forced.add_element(e, level).expect("fresh");
    if valid.is_empty() {
        return Err(OracleError::NoSingleton(theory.name().to_string()));
    }
    for (s, arity) in &symbols {
        let t = vec![e; *arity];
        if valid.iter().all(|m| m.holds(s, &t)) {
            forced.add_fact(s, &t).expect("well formed");
        }
    }
    if !theory.validate_t_forall(&forced).is_empty() {
        return Err(OracleError::AmbiguousSingleton(theory.name().to_string()));
    }
    Ok(forced)
}

/// Atomic type equality refined by existential types: additionally compares,
/// for the first `formulas` base formulas with `|ā|+|b̄|` parameters and at
/// most `max_witnesses` witnesses, whether the oracle realizes them over
/// `āb̄` and over `āb̄#`.
pub fn existential_type_equal(
    oracle: &Oracle<'_>,
    m: &FinStructure,
    b: &[ElemId],
    b_sharp: &[ElemId],
    a: &[ElemId],
    formulas: usize,
    max_witnesses: usize,
) -> Result<bool, OracleError> {
    if !crate::eval::qf_type_equal(m, b, b_sharp, a)? {
        return Ok(false);
    }
    let p = a.len() + b.len();
    let left: Vec<ElemId> = a.iter().chain(b).copied().collect();
    let right: Vec<ElemId> = a.iter().chain(b_sharp).copied().collect();
    for (f, split) in base_formula_stream(oracle.theory().signature(), formulas) {
        if split.params.len() != p || split.witnesses.len() > max_witnesses {
            continue;
        }
        if oracle.realizable(m, &f, &split, &left)? != oracle.realizable(m, &f, &split, &right)? {
            return Ok(false);
        }
    }
    Ok(true)
}
