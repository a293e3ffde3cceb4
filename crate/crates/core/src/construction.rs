//! The staged construction `M₀ ⊆ M₁ ⊆ …` and its checks.
//!
//! Stage `n` processes the first `n · budget` schedule entries, sorted stably
//! by level. For an entry `(φ, α)` the tuples `ā` of the frozen set `V_α` are
//! visited in lexicographic id order and one of three cases fires:
//!
//! 1. a witness already exists in `V_{α+1}`;
//! 2. otherwise, if some model extending the current structure realizes
//!    `φ(ā, ȳ)`, the oracle's minimal extension is applied with its new
//!    elements at level `α+1`;
//! 3. otherwise nothing changes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::eval::{atomic_type, Compiled, EvalError};
use crate::formula::{Formula, LevelOrdinal, Schedule, ScheduleEntry, Split, Var};
use crate::structure::{ElemId, FinStructure, StructureDoc, StructureError, Tuple};
use crate::theory::{forced_singleton, plugin_by_name, Axiom, Oracle, OracleError, Theory, Violation};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstructionError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("oracle answered differently on identical calls for entry #{position} at {tuple:?}")]
    NondeterministicOracle { position: usize, tuple: Tuple },
    #[error("oracle witness does not satisfy entry #{position} at {tuple:?}")]
    UnsoundWitness { position: usize, tuple: Tuple },
    #[error("stage {stage} violates the universal theory: {violations:?}")]
    NotUniversalModel { stage: usize, violations: Vec<Violation> },
    #[error("unknown plugin `{0}`")]
    UnknownPlugin(String),
    #[error("malformed chain document: {0}")]
    Document(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditDetail {
    /// Per-entry case counts, `V_α` sizes and every case-2 event.
    #[default]
    Summary,
    /// Additionally the case of every processed tuple.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainParams {
    pub stages: usize,
    /// Schedule entries added per stage; stage `n` processes `n · budget`.
    pub schedule_budget: usize,
    pub audit: AuditDetail,
}

impl ChainParams {
    pub fn new(stages: usize) -> Self {
        ChainParams {
            stages,
            schedule_budget: 1,
            audit: AuditDetail::Summary,
        }
    }

    pub fn budget(mut self, b: usize) -> Self {
        self.schedule_budget = b.max(1);
        self
    }

    pub fn audit(mut self, detail: AuditDetail) -> Self {
        self.audit = detail;
        self
    }

    pub fn entries_at(&self, stage: usize) -> usize {
        stage * self.schedule_budget
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    WitnessPresent = 1,
    Extended = 2,
    Unrealizable = 3,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extension {
    pub tuple: Tuple,
    pub new_elements: Vec<ElemId>,
    pub witness: Vec<ElemId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryAudit {
    pub position: usize,
    pub level: LevelOrdinal,
    pub tuples: u64,
    pub case1: u64,
    pub case2: u64,
    pub case3: u64,
    /// `|V_α|` when the entry starts and when it ends.
    pub v_alpha_before: usize,
    pub v_alpha_after: usize,
    pub extensions: Vec<Extension>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<Vec<(Tuple, Case)>>,
}

impl EntryAudit {
    pub fn level_frozen(&self) -> bool {
        self.v_alpha_before == self.v_alpha_after
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageAudit {
    pub stage: usize,
    /// In processing order (sorted by level).
    pub entries: Vec<EntryAudit>,
}

impl StageAudit {
    pub fn freeze_violations(&self) -> impl Iterator<Item = &EntryAudit> {
        self.entries.iter().filter(|e| !e.level_frozen())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageChain {
    pub plugin: String,
    pub params: ChainParams,
    pub schedule: Vec<ScheduleEntry>,
    pub stages: Vec<FinStructure>,
    /// `audit[i]` describes the step from `stages[i]` to `stages[i + 1]`.
    pub audit: Vec<StageAudit>,
}

#[derive(Serialize, Deserialize)]
struct ChainDoc {
    plugin: String,
    params: ChainParams,
    #[serde(skip_deserializing)]
    schedule: Vec<EntryDoc>,
    stages: Vec<StructureDoc>,
    audit: Vec<StageAudit>,
}

#[derive(Serialize)]
struct EntryDoc {
    position: usize,
    level: LevelOrdinal,
    split: String,
    formula: String,
}

impl StageChain {
    pub fn final_stage(&self) -> &FinStructure {
        self.stages.last().expect("a chain has at least M0")
    }

    /// Number of stages after `M₀`.
    pub fn len(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The entries processed when building stage `n`.
    pub fn processed(&self, n: usize) -> &[ScheduleEntry] {
        &self.schedule[..self.params.entries_at(n).min(self.schedule.len())]
    }

    pub fn to_json(&self) -> String {
        let doc = ChainDoc {
            plugin: self.plugin.clone(),
            params: self.params,
            schedule: self
                .schedule
                .iter()
                .map(|e| EntryDoc {
                    position: e.position,
                    level: e.level,
                    split: e.split.to_string(),
                    formula: e.formula.to_string(),
                })
                .collect(),
            stages: self.stages.iter().map(FinStructure::to_document).collect(),
            audit: self.audit.clone(),
        };
        serde_json::to_string(&doc).expect("chain serializes")
    }

    /// Reads a chain written by [`StageChain::to_json`]; the schedule is
    /// regenerated from the plugin's signature.
    pub fn from_json(text: &str) -> Result<StageChain, ConstructionError> {
        let doc: ChainDoc =
            serde_json::from_str(text).map_err(|e| ConstructionError::Document(e.to_string()))?;
        let theory = plugin_by_name(&doc.plugin)
            .ok_or_else(|| ConstructionError::UnknownPlugin(doc.plugin.clone()))?;
        let stages = doc
            .stages
            .iter()
            .map(FinStructure::from_document)
            .collect::<Result<Vec<_>, _>>()?;
        if stages.is_empty() {
            return Err(ConstructionError::Document("no stages".into()));
        }
        let n = stages.len() - 1;
        let schedule = Schedule::new(theory.signature()).entries(doc.params.entries_at(n));
        Ok(StageChain {
            plugin: doc.plugin,
            params: doc.params,
            schedule,
            stages,
            audit: doc.audit,
        })
    }
}

/// One element at level `Fin(0)` with exactly the facts the universal theory
/// forces on a single element.
pub fn build_m0(theory: &dyn Theory) -> Result<FinStructure, ConstructionError> {
    Ok(forced_singleton(theory, LevelOrdinal::Fin(0))?)
}

/// All tuples of length `p` over `domain`, lexicographically.
fn for_each_tuple(domain: &[ElemId], p: usize, mut visit: impl FnMut(&[ElemId]) -> Result<bool, ConstructionError>) -> Result<(), ConstructionError> {
    if p > 0 && domain.is_empty() {
        return Ok(());
    }
    let mut idx = vec![0usize; p];
    let mut tuple = vec![ElemId(0); p];
    loop {
        for (t, i) in tuple.iter_mut().zip(&idx) {
            *t = domain[*i];
        }
        if !visit(&tuple)? {
            return Ok(());
        }
        if p == 0 || !crate::formula::odometer(&mut idx, domain.len()) {
            return Ok(());
        }
    }
}

/// A witness for `φ(ā, ȳ)` inside `domain`, if any.
pub fn internal_witness(
    m: &FinStructure,
    compiled: &Compiled,
    a: &[ElemId],
    q: usize,
    domain: &[ElemId],
) -> Option<Vec<ElemId>> {
    let bound = compiled.bind(m);
    let mut slots = compiled.scratch();
    slots[..a.len()].copy_from_slice(a);
    bound.find(&mut slots, a.len(), q, domain)
}

/// First tuple of `V_α` at which `m` fails to strongly satisfy the entry.
pub fn strong_satisfaction_failure(
    m: &FinStructure,
    entry: &ScheduleEntry,
    oracle: &Oracle<'_>,
) -> Result<Option<Tuple>, ConstructionError> {
    let compiled = Compiled::new(&entry.formula, &entry.split.all_vars(), m.signature())?;
    let p = entry.split.params.len();
    let q = entry.split.witnesses.len();
    let domain = m.v_set(entry.level);
    let witnesses = m.v_set(entry.level.successor());
    let mut failure = None;
    for_each_tuple(&domain, p, |a| {
        if oracle.realizable(m, &entry.formula, &entry.split, a)?
            && internal_witness(m, &compiled, a, q, &witnesses).is_none()
        {
            failure = Some(a.to_vec());
            return Ok(false);
        }
        Ok(true)
    })?;
    Ok(failure)
}

/// Whether every `ā ∈ V_α` for which some model extending `m` realizes
/// `φ(ā, ȳ)` already has a witness in `V_{α+1}`.
pub fn strongly_satisfies(
    m: &FinStructure,
    entry: &ScheduleEntry,
    theory: &dyn Theory,
) -> Result<bool, ConstructionError> {
    let oracle = Oracle::new(theory);
    Ok(strong_satisfaction_failure(m, entry, &oracle)?.is_none())
}

/// One stage: processes `entries` (sorted stably by level) starting from
/// `prev`.
pub fn build_stage(
    prev: &FinStructure,
    entries: &[ScheduleEntry],
    oracle: &Oracle<'_>,
    detail: AuditDetail,
    stage: usize,
) -> Result<(FinStructure, StageAudit), ConstructionError> {
    let mut order: Vec<&ScheduleEntry> = entries.iter().collect();
    order.sort_by_key(|e| e.level);
    let mut m = prev.clone();
    let mut audits = Vec::with_capacity(order.len());
    for entry in order {
        audits.push(process_entry(&mut m, entry, oracle, detail)?);
    }
    Ok((
        m,
        StageAudit {
            stage,
            entries: audits,
        },
    ))
}

fn process_entry(
    m: &mut FinStructure,
    entry: &ScheduleEntry,
    oracle: &Oracle<'_>,
    detail: AuditDetail,
) -> Result<EntryAudit, ConstructionError> {
    let alpha = entry.level;
    let cap = alpha.successor();
    let compiled = Compiled::new(&entry.formula, &entry.split.all_vars(), m.signature())?;
    let p = entry.split.params.len();
    let q = entry.split.witnesses.len();
    let frozen = m.v_set(alpha);
    let mut witnesses = m.v_set(cap);
    let mut audit = EntryAudit {
        position: entry.position,
        level: alpha,
        tuples: 0,
        case1: 0,
        case2: 0,
        case3: 0,
        v_alpha_before: frozen.len(),
        v_alpha_after: 0,
        extensions: Vec::new(),
        cases: (detail == AuditDetail::Full).then(Vec::new),
    };
    for_each_tuple(&frozen, p, |a| {
        audit.tuples += 1;
        let case = if !oracle.realizable(m, &entry.formula, &entry.split, a)? {
            Case::Unrealizable
        } else if internal_witness(m, &compiled, a, q, &witnesses).is_some() {
            Case::WitnessPresent
        } else {
            let fail = |kind: fn(usize, Tuple) -> ConstructionError| kind(entry.position, a.to_vec());
            let first = oracle.realize_fresh(m, &entry.formula, &entry.split, a, cap)?;
            let second = oracle.realize_fresh(m, &entry.formula, &entry.split, a, cap)?;
            let cached = oracle.realize(m, &entry.formula, &entry.split, a, cap)?;
            if first != second || first != cached {
                return Err(fail(|position, tuple| ConstructionError::NondeterministicOracle {
                    position,
                    tuple,
                }));
            }
            let r = first.expect("realizable entries have a realization");
            m.extend(&r.delta)?;
            let mut slots = compiled.scratch();
            slots[..p].copy_from_slice(a);
            slots[p..p + q].copy_from_slice(&r.witness);
            if !compiled.bind(m).holds(&mut slots) {
                return Err(fail(|position, tuple| ConstructionError::UnsoundWitness {
                    position,
                    tuple,
                }));
            }
            witnesses = m.v_set(cap);
            audit.extensions.push(Extension {
                tuple: a.to_vec(),
                new_elements: r.delta.new_elements.iter().map(|(e, _)| *e).collect(),
                witness: r.witness,
            });
            Case::Extended
        };
        match case {
            Case::WitnessPresent => audit.case1 += 1,
            Case::Extended => audit.case2 += 1,
            Case::Unrealizable => audit.case3 += 1,
        }
        if let Some(cases) = audit.cases.as_mut() {
            cases.push((a.to_vec(), case));
        }
        Ok(true)
    })?;
    audit.v_alpha_after = m.v_set(alpha).len();
    Ok(audit)
}

/// `M₀ … M_n` for the plugin's schedule.
pub fn build_chain(theory: &dyn Theory, params: ChainParams) -> Result<StageChain, ConstructionError> {
    let oracle = Oracle::new(theory);
    build_chain_with(&oracle, params, |_, _| {})
}

/// As [`build_chain`], reporting each finished stage to `progress`.
pub fn build_chain_with(
    oracle: &Oracle<'_>,
    params: ChainParams,
    mut progress: impl FnMut(usize, &FinStructure),
) -> Result<StageChain, ConstructionError> {
    let theory = oracle.theory();
    let schedule = Schedule::new(theory.signature()).entries(params.entries_at(params.stages));
    let m0 = build_m0(theory)?;
    let mut stages = vec![m0];
    let mut audit = Vec::with_capacity(params.stages);
    for n in 1..=params.stages {
        let prev = stages.last().expect("nonempty");
        let entries = &schedule[..params.entries_at(n)];
        let (next, a) = build_stage(prev, entries, oracle, params.audit, n)?;
        let violations = theory.validate_t_forall(&next);
        if !violations.is_empty() {
            return Err(ConstructionError::NotUniversalModel {
                stage: n,
                violations,
            });
        }
        progress(n, &next);
        stages.push(next);
        audit.push(a);
    }
    Ok(StageChain {
        plugin: theory.name().to_string(),
        params,
        schedule,
        stages,
        audit,
    })
}

/// Axioms whose matrix and split coincide (up to normal form) with a
/// processed schedule entry, paired with that entry's level.
pub fn processed_axioms(theory: &dyn Theory, processed: &[ScheduleEntry]) -> Vec<(Axiom, LevelOrdinal)> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for ax in theory.axioms() {
        let normal = ax.matrix.normalized();
        for e in processed {
            if e.split == ax.split && e.formula.normalized() == normal && seen.insert((ax.name.clone(), e.level)) {
                out.push((ax.clone(), e.level));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomFailure {
    pub axiom: String,
    pub level: LevelOrdinal,
    pub tuple: Tuple,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub checked: Vec<(String, LevelOrdinal)>,
    pub failures: Vec<AxiomFailure>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `∀x̄ ∈ V_α ∃ȳ ∈ V_{α+1} φ` in `m` for every given pair.
pub fn verify_axioms_on_levels(
    m: &FinStructure,
    processed: &[(Axiom, LevelOrdinal)],
) -> Result<AxiomReport, ConstructionError> {
    let mut report = AxiomReport::default();
    for (ax, alpha) in processed {
        report.checked.push((ax.name.clone(), *alpha));
        let compiled = Compiled::new(&ax.matrix, &ax.split.all_vars(), m.signature())?;
        let q = ax.split.witnesses.len();
        let domain = m.v_set(*alpha);
        let witnesses = m.v_set(alpha.successor());
        for_each_tuple(&domain, ax.split.params.len(), |a| {
            if internal_witness(m, &compiled, a, q, &witnesses).is_none() {
                report.failures.push(AxiomFailure {
                    axiom: ax.name.clone(),
                    level: *alpha,
                    tuple: a.to_vec(),
                });
            }
            Ok(true)
        })?;
    }
    Ok(report)
}

/// An embedding of a finite structure into (an extension of) a chain's last
/// stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    /// `a_i ↦ a′_i`, in the order of `A`'s ids.
    pub map: BTreeMap<ElemId, ElemId>,
    /// The chain, its last stage possibly extended by oracle witnesses.
    pub chain: StageChain,
    pub extended: bool,
}

/// The conjunction of literals describing `a_i` over `a_0 … a_{i-1}`: the
/// formula `φ(x0 … x{i-1}, y0)` whose solutions have `a_i`'s atomic type.
pub fn diagram_formula(a: &FinStructure, prefix: &[ElemId], next: ElemId) -> (Formula, Split) {
    let split = Split::canonical(prefix.len(), 1);
    let vars: Vec<Var> = split.all_vars();
    let elems: Vec<ElemId> = prefix.iter().copied().chain([next]).collect();
    let k = elems.len();
    let mut lits = Vec::new();
    for (r, (sym, arity)) in a.signature().relations().enumerate() {
        let mut idx = vec![0usize; arity];
        loop {
            if idx.contains(&(k - 1)) {
                let t: Vec<ElemId> = idx.iter().map(|&i| elems[i]).collect();
                let atom = Formula::rel(sym, idx.iter().map(|&i| vars[i].clone()).collect::<Vec<_>>());
                lits.push(if a.holds_at(r, &t) { atom } else { Formula::not(atom) });
            }
            if arity == 0 || !crate::formula::odometer(&mut idx, k) {
                break;
            }
        }
    }
    for v in &vars[..k - 1] {
        lits.push(Formula::not(Formula::Eq(v.clone(), vars[k - 1].clone())));
    }
    let f = Formula::conjunction(lits)
        .unwrap_or_else(|| Formula::Eq(vars[k - 1].clone(), vars[k - 1].clone()));
    (f, split)
}

/// Embeds `a` (elements taken in id order `a_0, a_1, …`) with `a_i` sent to
/// an element of level at most `Fin(i+1)`, preserving atomic types of every
/// initial segment. Missing elements are added with the oracle. `None` if
/// `a` violates the universal theory or the oracle finds no extension.
pub fn embed_model(
    theory: &dyn Theory,
    a: &FinStructure,
    chain: &StageChain,
) -> Result<Option<Embedding>, ConstructionError> {
    if a.signature() != theory.signature() || !theory.validate_t_forall(a).is_empty() {
        return Ok(None);
    }
    let oracle = Oracle::new(theory);
    let mut m = chain.final_stage().clone();
    let mut map = BTreeMap::new();
    let mut source: Vec<ElemId> = Vec::new();
    let mut image: Vec<ElemId> = Vec::new();
    let mut extended = false;
    for (i, ai) in a.universe().enumerate() {
        let level = LevelOrdinal::Fin(i as u32 + 1);
        source.push(ai);
        let want = atomic_type(a, &source);
        let mut found = None;
        for c in m.v_set(level) {
            image.push(c);
            let ok = atomic_type(&m, &image) == want;
            image.pop();
            if ok {
                found = Some(c);
                break;
            }
        }
        let c = match found {
            Some(c) => c,
            None => {
                let (f, split) = diagram_formula(a, &source[..i], ai);
                match oracle.realize(&m, &f, &split, &image, level)? {
                    Some(r) => {
                        m.extend(&r.delta)?;
                        extended = true;
                        r.witness[0]
                    }
                    None => return Ok(None),
                }
            }
        };
        image.push(c);
        map.insert(ai, c);
    }
    let mut chain = chain.clone();
    *chain.stages.last_mut().expect("nonempty") = m;
    Ok(Some(Embedding { map, chain, extended }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::theory::{GenericEquivalence, InfiniteSet, RandomGraph};

    fn e(i: u32) -> ElemId {
        ElemId(i)
    }

    fn entry(theory: &dyn Theory, text: &str, p: usize, q: usize, level: LevelOrdinal) -> ScheduleEntry {
        ScheduleEntry {
            position: 0,
            formula: parse(text, theory.signature()).unwrap(),
            split: Split::canonical(p, q),
            level,
        }
    }

    #[test]
    fn m0_examples() {
        let eq = build_m0(&GenericEquivalence::new()).unwrap();
        assert_eq!(eq.len(), 1);
        assert!(eq.holds("E", &[e(0), e(0)]));
        assert_eq!(eq.level(e(0)), Some(LevelOrdinal::Fin(0)));
        assert_eq!(build_m0(&RandomGraph::new()).unwrap().fact_count(), 0);
        assert_eq!(build_m0(&InfiniteSet::new()).unwrap().len(), 1);
    }

    #[test]
    fn strong_satisfaction_examples() {
        let t = GenericEquivalence::new();
        let m0 = build_m0(&t).unwrap();
        let f0 = LevelOrdinal::Fin(0);
        assert!(strongly_satisfies(&m0, &entry(&t, "E(x0,y0)", 1, 1, f0), &t).unwrap());
        assert!(!strongly_satisfies(&m0, &entry(&t, "E(x0,y0) & !(y0=x0)", 1, 1, f0), &t).unwrap());
        let g = RandomGraph::new();
        let m0 = build_m0(&g).unwrap();
        assert!(strongly_satisfies(&m0, &entry(&g, "R(y0,y0)", 0, 1, f0), &g).unwrap());
    }

    #[test]
    fn stage_adds_classmate_then_reuses_it() {
        let t = GenericEquivalence::new();
        let oracle = Oracle::new(&t);
        let m0 = build_m0(&t).unwrap();
        let entries = [entry(&t, "E(x0,y0) & !(y0=x0)", 1, 1, LevelOrdinal::Fin(0))];
        let (m1, audit) = build_stage(&m0, &entries, &oracle, AuditDetail::Full, 1).unwrap();
        assert_eq!(m1.len(), 2);
        assert_eq!(m1.level(e(1)), Some(LevelOrdinal::Fin(1)));
        assert!(m1.holds("E", &[e(0), e(1)]));
        assert_eq!(audit.entries[0].case2, 1);
        let (m2, audit) = build_stage(&m1, &entries, &oracle, AuditDetail::Full, 2).unwrap();
        assert_eq!(m2, m1);
        assert_eq!(audit.entries[0].cases.as_ref().unwrap()[0].1, Case::WitnessPresent);
    }

    #[test]
    fn unrealizable_entry_changes_nothing() {
        let g = RandomGraph::new();
        let oracle = Oracle::new(&g);
        let m0 = build_m0(&g).unwrap();
        let entries = [entry(&g, "R(x0,y0) & R(y0,y0)", 1, 1, LevelOrdinal::Fin(0))];
        let (m1, audit) = build_stage(&m0, &entries, &oracle, AuditDetail::Summary, 1).unwrap();
        assert_eq!(m1, m0);
        assert_eq!(audit.entries[0].case3, audit.entries[0].tuples);
    }

    #[test]
    fn zero_stages_is_m0() {
        let t = GenericEquivalence::new();
        let chain = build_chain(&t, ChainParams::new(0)).unwrap();
        assert_eq!(chain.stages, vec![build_m0(&t).unwrap()]);
    }

    #[test]
    fn corrupted_level_is_caught() {
        let t = GenericEquivalence::new();
        let chain = build_chain(&t, ChainParams::new(4).budget(32)).unwrap();
        let pairs: Vec<_> = processed_axioms(&t, chain.processed(4))
            .into_iter()
            .filter(|(a, l)| a.name == "new-class" && *l == LevelOrdinal::Fin(0))
            .collect();
        assert_eq!(pairs.len(), 1);
        let mut m = chain.final_stage().clone();
        assert!(verify_axioms_on_levels(&m, &pairs).unwrap().is_clean());
        for x in m.elements() {
            if x != e(0) {
                m.set_level(x, LevelOrdinal::OmegaPlus(3)).unwrap();
            }
        }
        assert!(!verify_axioms_on_levels(&m, &pairs).unwrap().is_clean());
        assert!(verify_axioms_on_levels(&m, &[]).unwrap().is_clean());
    }

    #[test]
    fn chain_json_round_trip() {
        let t = RandomGraph::new();
        let chain = build_chain(&t, ChainParams::new(3).budget(2)).unwrap();
        let back = StageChain::from_json(&chain.to_json()).unwrap();
        assert_eq!(back, chain);
        assert_eq!(back.to_json(), chain.to_json());
    }

    #[test]
    fn embeds_an_edge() {
        let g = RandomGraph::new();
        let chain = build_chain(&g, ChainParams::new(0)).unwrap();
        let mut a = FinStructure::new(g.signature().clone());
        a.add_element(e(0), LevelOrdinal::Fin(0)).unwrap();
        a.add_element(e(1), LevelOrdinal::Fin(0)).unwrap();
        a.add_fact("R", &[e(0), e(1)]).unwrap();
        a.add_fact("R", &[e(1), e(0)]).unwrap();
        let emb = embed_model(&g, &a, &chain).unwrap().unwrap();
        let m = emb.chain.final_stage();
        let (x, y) = (emb.map[&e(0)], emb.map[&e(1)]);
        assert!(m.holds("R", &[x, y]));
        assert!(m.level(y).unwrap() <= LevelOrdinal::Fin(2));
        assert!(emb.extended);
    }
}
