//! Dividing certificates, the search for a same-type parameter whose
//! instance has smaller dimension, and the covering lemma behind it.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::construction::StageChain;
use crate::dimension::{dim_compare, trend_from, DimError, LogDiff, Verdict, VerdictKind};
use crate::eval::{atomic_type, qf_type_equal, solutions, DefinableSet, EvalError};
use crate::formula::{Formula, LevelOrdinal, Split, Var};
use crate::structure::{ElemId, ExtensionDelta, FinStructure, StructureError, Tuple};
use crate::theory::{jointly_realizable, Constraint, Oracle, OracleError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DividingError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Dim(#[from] DimError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("φ(x̄, b̄) is not contained in ψ(x̄, ā) at stage {stage}")]
    NotImplied { stage: usize },
    #[error("{0}")]
    Invalid(String),
}

/// `φ(x̄; ȳ)`: `x̄` are the solution variables, `ȳ` the instance parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Family {
    pub formula: Formula,
    pub x: Vec<Var>,
    pub y: Vec<Var>,
}

impl Family {
    pub fn new(formula: Formula, x: Vec<Var>, y: Vec<Var>) -> Self {
        Family { formula, x, y }
    }

    fn constraint(&self, b: &[ElemId]) -> Constraint {
        Constraint::new(self.formula.clone(), self.y.iter().cloned().zip(b.iter().copied()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DividesWitness {
    pub family: Family,
    pub a: Tuple,
    pub instances: Vec<Tuple>,
    pub k: usize,
    /// `qf_type_equal(b̄ᵢ, b̄₀, ā)` for each instance.
    pub same_type: Vec<bool>,
    /// Every `k`-subset of instance indices, each jointly unrealizable.
    pub inconsistent_subsets: Vec<Vec<usize>>,
    /// Whether new elements had to be added to find enough instances.
    pub extended: bool,
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] < n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// All `n`-tuples over `m` with the atomic type of `b̄` over `ā`, in
/// lexicographic order.
fn same_type_tuples(m: &FinStructure, b: &[ElemId], a: &[ElemId]) -> Result<Vec<Tuple>, EvalError> {
    for e in a.iter().chain(b) {
        if !m.contains(*e) {
            return Err(EvalError::MissingElement(*e));
        }
    }
    let key = |t: &[ElemId]| {
        let full: Vec<ElemId> = a.iter().chain(t).copied().collect();
        atomic_type(m, &full)
    };
    let target = key(b);
    let universe = m.elements();
    let mut out = Vec::new();
    if b.is_empty() {
        return Ok(vec![Vec::new()]);
    }
    let mut idx = vec![0usize; b.len()];
    loop {
        let t: Tuple = idx.iter().map(|&i| universe[i]).collect();
        if key(&t) == target {
            out.push(t);
        }
        if !crate::formula::odometer(&mut idx, universe.len()) {
            return Ok(out);
        }
    }
}

/// Searches the structure for `L` instances of `b̄`'s type over `ā` whose
/// `φ`-instances are `k`-inconsistent: no `k` of them are realized together
/// in any model extending the structure. When the structure has too few
/// candidates, new same-type tuples are added through the oracle (at most
/// `L` times). Returns the witness and the possibly extended structure.
#[allow(clippy::too_many_arguments)]
pub fn certify_dividing(
    oracle: &Oracle<'_>,
    m: &FinStructure,
    family: &Family,
    a: &[ElemId],
    b: &[ElemId],
    k: usize,
    l: usize,
) -> Result<Option<(DividesWitness, FinStructure)>, DividingError> {
    if b.len() != family.y.len() {
        return Err(DividingError::Invalid(format!(
            "b̄ has {} elements but φ has {} instance variables",
            b.len(),
            family.y.len()
        )));
    }
    if k == 0 || l == 0 || k > l {
        return Ok(None);
    }
    let mut m = m.clone();
    let mut extended = false;
    let mut candidates = same_type_tuples(&m, b, a)?;
    for _ in 0..=l {
        let mut chosen = Vec::new();
        if search(oracle, &m, family, &candidates, k, l, 0, &mut chosen)? {
            let instances: Vec<Tuple> = chosen.iter().map(|&i| candidates[i].clone()).collect();
            let same_type = instances
                .iter()
                .map(|t| qf_type_equal(&m, t, &instances[0], a))
                .collect::<Result<_, _>>()?;
            return Ok(Some((
                DividesWitness {
                    family: family.clone(),
                    a: a.to_vec(),
                    instances,
                    k,
                    same_type,
                    inconsistent_subsets: k_subsets(l, k),
                    extended,
                },
                m,
            )));
        }
        // Add a fresh tuple of the same type, new elements only.
        let Some(fresh) = fresh_instance(oracle, &m, a, b)? else {
            return Ok(None);
        };
        m.extend(&fresh.0)?;
        candidates.push(fresh.1);
        extended = true;
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn search(
    oracle: &Oracle<'_>,
    m: &FinStructure,
    family: &Family,
    candidates: &[Tuple],
    k: usize,
    l: usize,
    from: usize,
    chosen: &mut Vec<usize>,
) -> Result<bool, DividingError> {
    if chosen.len() == l {
        return Ok(true);
    }
    if candidates.len() - from < l - chosen.len() {
        return Ok(false);
    }
    for c in from..candidates.len() {
        chosen.push(c);
        if new_subsets_inconsistent(oracle, m, family, candidates, chosen, k)?
            && search(oracle, m, family, candidates, k, l, c + 1, chosen)?
        {
            return Ok(true);
        }
        chosen.pop();
    }
    Ok(false)
}

/// Whether every `k`-subset of `chosen` containing its last element is
/// jointly unrealizable.
fn new_subsets_inconsistent(
    oracle: &Oracle<'_>,
    m: &FinStructure,
    family: &Family,
    candidates: &[Tuple],
    chosen: &[usize],
    k: usize,
) -> Result<bool, DividingError> {
    let (last, rest) = chosen.split_last().expect("nonempty");
    if rest.len() + 1 < k {
        return Ok(true);
    }
    for sub in k_subsets(rest.len(), k - 1) {
        let mut cs: Vec<Constraint> = sub.iter().map(|&i| family.constraint(&candidates[rest[i]])).collect();
        cs.push(family.constraint(&candidates[*last]));
        if jointly_realizable(oracle, m, &cs, &family.x)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn fresh_instance(
    oracle: &Oracle<'_>,
    m: &FinStructure,
    a: &[ElemId],
    b: &[ElemId],
) -> Result<Option<(ExtensionDelta, Tuple)>, DividingError> {
    let (formula, split) = fresh_diagram(m, a, b);
    let level = m
        .levels()
        .values()
        .filter(|l| l.is_finite())
        .max()
        .copied()
        .unwrap_or(LevelOrdinal::Fin(0))
        .successor();
    let params: Vec<ElemId> = a.iter().copied().chain(m.elements()).collect();
    Ok(oracle
        .realize(m, &formula, &split, &params, level)?
        .map(|r| (r.delta, r.witness)))
}

/// The atomic diagram of `b̄` over `ā` as `δ(x̄_a, ȳ)`, conjoined with
/// `yᵢ ≠ z` for every element `z` of the structure (passed as extra
/// parameters), so that its realizations use new elements only.
fn fresh_diagram(m: &FinStructure, a: &[ElemId], b: &[ElemId]) -> (Formula, Split) {
    let pa: Vec<Var> = (0..a.len()).map(|i| Var::indexed("a", i)).collect();
    let pz: Vec<Var> = (0..m.len()).map(|i| Var::indexed("z", i)).collect();
    let ys: Vec<Var> = (0..b.len()).map(|i| Var::indexed("y", i)).collect();
    let elems: Vec<ElemId> = a.iter().chain(b).copied().collect();
    let vars: Vec<Var> = pa.iter().chain(&ys).cloned().collect();
    let n = elems.len();
    let mut lits = Vec::new();
    for (r, (sym, arity)) in m.signature().relations().enumerate() {
        let mut idx = vec![0usize; arity];
        loop {
            if idx.iter().any(|&i| i >= a.len()) {
                let t: Vec<ElemId> = idx.iter().map(|&i| elems[i]).collect();
                let atom = Formula::rel(sym, idx.iter().map(|&i| vars[i].clone()).collect::<Vec<_>>());
                lits.push(if m.holds_at(r, &t) { atom } else { Formula::not(atom) });
            }
            if arity == 0 || !crate::formula::odometer(&mut idx, n) {
                break;
            }
        }
    }
    for (j, y) in ys.iter().enumerate() {
        for (i, v) in vars.iter().enumerate().take(a.len() + j) {
            let same = elems[i] == b[j];
            let eq = Formula::Eq(v.clone(), y.clone());
            lits.push(if same { eq } else { Formula::not(eq) });
        }
        for z in &pz {
            lits.push(Formula::not(Formula::Eq(z.clone(), y.clone())));
        }
    }
    let formula = Formula::conjunction(lits).unwrap_or_else(|| Formula::Eq(ys[0].clone(), ys[0].clone()));
    let params = pa.into_iter().chain(pz).collect();
    (formula, Split::new(params, ys))
}

/// Comparator settings and candidate sampling for [`find_dimension_drop`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DropParams {
    pub window: usize,
    pub bound: f64,
    pub seed: u64,
    /// Above this many candidates a seeded sample of this size is used.
    pub max_candidates: usize,
}

impl Default for DropParams {
    fn default() -> Self {
        DropParams {
            window: crate::dimension::DEFAULT_WINDOW,
            bound: crate::dimension::DEFAULT_BOUND,
            seed: 0,
            max_candidates: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub b: Tuple,
    pub counts: Vec<u64>,
    pub verdict: Verdict,
}

impl Candidate {
    fn last_diff(&self) -> f64 {
        match self.verdict.diffs.last() {
            Some(LogDiff::Finite(v)) => *v,
            Some(LogDiff::NegInfinity) => f64::NEG_INFINITY,
            Some(LogDiff::PosInfinity) | None => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DropReport {
    pub psi_counts: Vec<u64>,
    pub window_start: usize,
    /// Same-type tuples of the final stage.
    pub same_type: usize,
    /// Of those, the ones already present when the window starts.
    pub eligible: usize,
    pub sampled: bool,
    pub candidates: Vec<Candidate>,
    /// Index into `candidates` of the most negative verdict.
    pub best: Option<usize>,
}

impl DropReport {
    pub fn count(&self, kind: VerdictKind) -> usize {
        self.candidates.iter().filter(|c| c.verdict.kind == kind).count()
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.best.map(|i| &self.candidates[i])
    }
}

fn rank(kind: VerdictKind) -> u8 {
    match kind {
        VerdictKind::DivergesNeg => 0,
        VerdictKind::Inconclusive => 1,
        VerdictKind::Bounded => 2,
        VerdictKind::DivergesPos => 3,
    }
}

/// Compares `φ(x̄, b̄#)` against `ψ` for every `b̄#` of the final stage with
/// the atomic type of `b̄` over `ā`, where `b̄` is the value of `phi`'s
/// parameters `b_vars`. Candidates must exist from the first stage of the
/// comparison window on.
pub fn find_dimension_drop(
    chain: &StageChain,
    psi: &DefinableSet,
    phi: &DefinableSet,
    b_vars: &[Var],
    a: &[ElemId],
    params: DropParams,
) -> Result<DropReport, DividingError> {
    let b: Tuple = b_vars
        .iter()
        .map(|v| {
            phi.params
                .get(v)
                .copied()
                .ok_or_else(|| DividingError::Invalid(format!("φ has no parameter {v}")))
        })
        .collect::<Result<_, _>>()?;
    if phi.vars != psi.vars {
        return Err(DividingError::Invalid("φ and ψ must share solution variables".into()));
    }
    let last = chain.len();
    if params.window > last + 1 {
        return Err(DimError::WindowTooLong {
            window: params.window,
            len: last + 1,
        }
        .into());
    }
    let window_start = last + 1 - params.window;
    for (stage, m) in chain.stages.iter().enumerate() {
        if !phi.params_present_in(m) || !psi.params_present_in(m) {
            continue;
        }
        let inner: BTreeSet<Tuple> = solutions(m, phi)?.into_iter().collect();
        let outer: BTreeSet<Tuple> = solutions(m, psi)?.into_iter().collect();
        if !inner.is_subset(&outer) {
            return Err(DividingError::NotImplied { stage });
        }
    }
    if !psi.params_present_in(&chain.stages[window_start]) {
        return Err(DividingError::Invalid("ψ's parameters appear after the window starts".into()));
    }
    let psi_trend = trend_from(chain, psi, window_start)?;
    let final_stage = chain.final_stage();
    let all = same_type_tuples(final_stage, &b, a)?;
    let start = &chain.stages[window_start];
    let mut eligible: Vec<Tuple> = all
        .iter()
        .filter(|t| t.iter().all(|e| start.contains(*e)))
        .cloned()
        .collect();
    let same_type = all.len();
    let count_eligible = eligible.len();
    let sampled = eligible.len() > params.max_candidates;
    if sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        eligible.shuffle(&mut rng);
        eligible.truncate(params.max_candidates);
        eligible.sort();
    }
    let mut candidates = Vec::with_capacity(eligible.len());
    for cand in eligible {
        let mut set = phi.clone();
        for (v, e) in b_vars.iter().zip(&cand) {
            set.params.insert(v.clone(), *e);
        }
        let t = trend_from(chain, &set, window_start)?;
        let verdict = dim_compare(&t, &psi_trend, params.window, params.bound)?;
        candidates.push(Candidate {
            b: cand,
            counts: t.counts,
            verdict,
        });
    }
    let best = candidates
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| {
            rank(x.verdict.kind)
                .cmp(&rank(y.verdict.kind))
                .then(x.last_diff().total_cmp(&y.last_diff()))
        })
        .map(|(i, _)| i);
    Ok(DropReport {
        psi_counts: psi_trend.counts,
        window_start,
        same_type,
        eligible: count_eligible,
        sampled,
        candidates,
        best,
    })
}

/// The least `L` for which `L` sets, each of measure at least `1/K`, must
/// include `k` with a common point: `(k − 1)·K + 1`.
pub fn covering_bound(big_k: usize, k: usize) -> usize {
    assert!(big_k >= 1 && k >= 1, "covering_bound needs K, k >= 1");
    (k - 1) * big_k + 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoveringReport {
    pub s_size: usize,
    pub big_k: usize,
    pub k: usize,
    pub l: usize,
    /// `⌈S / K⌉`.
    pub min_size: usize,
    pub exhaustive: bool,
    /// No family of `L` large sets avoids a `k`-fold common point.
    pub verified: bool,
    /// Number of degree profiles (exhaustive) or families (sampled) examined.
    pub examined: u64,
    /// A family of `L − 1` large sets in which no point lies in `k` of them,
    /// when `K` divides `S`.
    pub sharpness: Option<Vec<Vec<usize>>>,
}

/// Checks the covering lemma on a ground set of `s_size` points: among any
/// `covering_bound(K, k)` subsets of size `≥ ⌈S/K⌉`, some `k` share a point.
///
/// Up to 12 points the check is exhaustive: sets are added one at a time
/// while tracking how many points are covered 0, 1, …, k−1 times, which is
/// exact because the question is invariant under permuting points (and
/// shrinking a set to exactly `⌈S/K⌉` points never creates a common point).
/// Above 12 points random families are sampled.
pub fn covering_check(s_size: usize, big_k: usize, k: usize, seed: u64, samples: usize) -> CoveringReport {
    assert!(s_size >= big_k && big_k >= 1 && k >= 1, "covering_check needs S >= K >= 1, k >= 1");
    let l = covering_bound(big_k, k);
    let min_size = s_size.div_ceil(big_k);
    let exhaustive = s_size <= 12;
    let (verified, examined) = if exhaustive {
        let (reachable, examined) = avoiding_family_exists(s_size, min_size, k, l);
        (!reachable, examined)
    } else {
        sample_families(s_size, min_size, k, l, seed, samples)
    };
    let sharpness = (s_size % big_k == 0).then(|| sharpness_family(s_size, big_k, k));
    CoveringReport {
        s_size,
        big_k,
        k,
        l,
        min_size,
        exhaustive,
        verified,
        examined,
        sharpness,
    }
}

/// Whether `count` sets of exactly `size` points can be placed with every
/// point in at most `k − 1` of them. States are the numbers of points of
/// each degree `0..k`.
fn avoiding_family_exists(s: usize, size: usize, k: usize, count: usize) -> (bool, u64) {
    if k == 1 {
        // Every point may lie in no set, so only an empty family avoids it.
        return (count == 0 || size == 0, 1);
    }
    let mut start = vec![0usize; k];
    start[0] = s;
    let mut layer: HashSet<Vec<usize>> = HashSet::from([start]);
    let mut examined = 1u64;
    for _ in 0..count {
        let mut next = HashSet::new();
        for state in &layer {
            let mut take = vec![0usize; k - 1];
            place(state, size, 0, &mut take, &mut next);
        }
        examined += next.len() as u64;
        if next.is_empty() {
            return (false, examined);
        }
        layer = next;
    }
    (true, examined)
}

/// Chooses `take[d]` points of degree `d` (for `d < k − 1`) totalling
/// `size` and records the resulting degree profile.
fn place(state: &[usize], left: usize, d: usize, take: &mut Vec<usize>, out: &mut HashSet<Vec<usize>>) {
    let k = state.len();
    if d == k - 1 {
        if left == 0 {
            let mut s = state.to_vec();
            for (deg, t) in take.iter().enumerate() {
                s[deg] -= t;
                s[deg + 1] += t;
            }
            out.insert(s);
        }
        return;
    }
    for t in 0..=left.min(state[d]) {
        take[d] = t;
        place(state, left - t, d + 1, take, out);
    }
    take[d] = 0;
}

fn sample_families(s: usize, size: usize, k: usize, l: usize, seed: u64, samples: usize) -> (bool, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<usize> = (0..s).collect();
    for _ in 0..samples {
        let mut degree = vec![0usize; s];
        for _ in 0..l {
            for p in points.choose_multiple(&mut rng, size) {
                degree[*p] += 1;
            }
        }
        if degree.iter().all(|d| *d < k) {
            return (false, samples as u64);
        }
    }
    (true, samples as u64)
}

/// `K` blocks partitioning the points, each repeated `k − 1` times.
fn sharpness_family(s: usize, big_k: usize, k: usize) -> Vec<Vec<usize>> {
    let block = s / big_k;
    let mut out = Vec::new();
    for b in 0..big_k {
        let set: Vec<usize> = (b * block..(b + 1) * block).collect();
        for _ in 0..k.saturating_sub(1) {
            out.push(set.clone());
        }
    }
    out
}

/// Largest number of sets in `family` sharing one point.
pub fn max_overlap(family: &[Vec<usize>]) -> usize {
    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for set in family {
        for p in set.iter().collect::<BTreeSet<_>>() {
            *degree.entry(*p).or_default() += 1;
        }
    }
    degree.values().copied().max().unwrap_or(0)
}

/// Some `k` of `sets` with a common solution, as `(indices, point)`.
pub fn common_point(m: &FinStructure, sets: &[DefinableSet], k: usize) -> Result<Option<(Vec<usize>, Tuple)>, EvalError> {
    let mut holders: BTreeMap<Tuple, Vec<usize>> = BTreeMap::new();
    for (i, s) in sets.iter().enumerate() {
        for t in solutions(m, s)? {
            holders.entry(t).or_default().push(i);
        }
    }
    Ok(holders
        .into_iter()
        .find(|(_, idx)| idx.len() >= k)
        .map(|(t, idx)| (idx[..k].to_vec(), t)))
}
