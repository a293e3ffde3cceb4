//! Per-stage counts of definable sets and a trend comparator standing in for
//! equality of log-cardinalities modulo bounded differences.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::construction::StageChain;
use crate::eval::{count, DefinableSet, EvalError};
use crate::formula::{Formula, Var};
use crate::structure::{ElemId, FinStructure};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DimError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("parameter {0} is missing from the final stage")]
    MissingParameter(ElemId),
    #[error("trends end at different stages ({0} vs {1})")]
    RangeMismatch(usize, usize),
    #[error("window of {window} stages exceeds a trend of {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("window must be at least 2 stages")]
    WindowTooShort,
    #[error("measure relative to an empty set")]
    DivisionByZero,
    #[error("incompatible sets: {0}")]
    VariableMismatch(String),
    #[error("trend CSV: {0}")]
    Csv(String),
}

/// `log|X|`, with `−∞` for the empty set kept apart from every float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogCount {
    NegInfinity,
    Finite(f64),
}

impl LogCount {
    pub fn of(count: u64) -> LogCount {
        if count == 0 {
            LogCount::NegInfinity
        } else {
            LogCount::Finite((count as f64).ln())
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            LogCount::Finite(v) => Some(v),
            LogCount::NegInfinity => None,
        }
    }
}

impl fmt::Display for LogCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogCount::NegInfinity => f.write_str("-inf"),
            LogCount::Finite(v) => write!(f, "{v:.6}"),
        }
    }
}

impl std::str::FromStr for LogCount {
    type Err = std::num::ParseFloatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "-inf" => Ok(LogCount::NegInfinity),
            t => t.parse().map(LogCount::Finite),
        }
    }
}

impl Serialize for LogCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LogCount::NegInfinity => s.serialize_str("-inf"),
            LogCount::Finite(v) => s.serialize_f64(*v),
        }
    }
}

/// Counts of one definable set along a chain, from `first_stage` to the end.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimTrend {
    pub set: DefinableSet,
    pub first_stage: usize,
    pub counts: Vec<u64>,
}

impl DimTrend {
    /// A trend from raw counts, for synthetic comparisons.
    pub fn synthetic(first_stage: usize, counts: Vec<u64>) -> DimTrend {
        DimTrend {
            set: DefinableSet::new(Formula::Eq(Var::new("x"), Var::new("x")), vec![Var::new("x")]),
            first_stage,
            counts,
        }
    }

    pub fn last_stage(&self) -> usize {
        self.first_stage + self.counts.len().saturating_sub(1)
    }

    pub fn logs(&self) -> Vec<LogCount> {
        self.counts.iter().map(|c| LogCount::of(*c)).collect()
    }

    /// Rows `(stage, count, log)`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, u64, LogCount)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.first_stage + i, *c, LogCount::of(*c)))
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), DimError> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| DimError::Csv(e.to_string());
        out.write_record(["stage", "count", "log_count"]).map_err(err)?;
        for (stage, c, l) in self.rows() {
            out.write_record([stage.to_string(), c.to_string(), l.to_string()])
                .map_err(err)?;
        }
        out.flush().map_err(|e| DimError::Csv(e.to_string()))
    }

    /// Reads `(stage, count)` rows written by [`DimTrend::write_csv`].
    pub fn read_csv<R: io::Read>(r: R) -> Result<Vec<(usize, u64, LogCount)>, DimError> {
        let mut rows = Vec::new();
        let mut rdr = csv::Reader::from_reader(r);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| DimError::Csv(e.to_string()))?;
            let field = |i: usize| rec.get(i).ok_or_else(|| DimError::Csv(format!("missing column {i}")));
            let bad = |e: &dyn fmt::Display| DimError::Csv(e.to_string());
            rows.push((
                field(0)?.parse().map_err(|e| bad(&e))?,
                field(1)?.parse().map_err(|e| bad(&e))?,
                field(2)?.parse().map_err(|e| bad(&e))?,
            ));
        }
        Ok(rows)
    }
}

/// Counts of `set` in every stage of `chain` that contains its parameters.
pub fn trend(chain: &StageChain, set: &DefinableSet) -> Result<DimTrend, DimError> {
    let last = chain.final_stage();
    if let Some(e) = set.params.values().find(|e| !last.contains(**e)) {
        return Err(DimError::MissingParameter(*e));
    }
    let first_stage = chain
        .stages
        .iter()
        .position(|m| set.params_present_in(m))
        .expect("the final stage has the parameters");
    trend_from(chain, set, first_stage)
}

/// Counts from `first_stage` on; the parameters must exist there.
pub fn trend_from(chain: &StageChain, set: &DefinableSet, first_stage: usize) -> Result<DimTrend, DimError> {
    let counts = chain.stages[first_stage..]
        .iter()
        .map(|m| count(m, set))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DimTrend {
        set: set.clone(),
        first_stage,
        counts,
    })
}

/// `log c₁ − log c₂` with the conventions for empty sets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogDiff {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl LogDiff {
    pub fn of(c1: u64, c2: u64) -> LogDiff {
        match (c1, c2) {
            (0, 0) => LogDiff::Finite(0.0),
            (_, 0) => LogDiff::PosInfinity,
            (0, _) => LogDiff::NegInfinity,
            (a, b) => LogDiff::Finite((a as f64).ln() - (b as f64).ln()),
        }
    }
}

impl Serialize for LogDiff {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LogDiff::Finite(v) => s.serialize_f64(*v),
            LogDiff::PosInfinity => s.serialize_str("+inf"),
            LogDiff::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    Bounded,
    DivergesPos,
    DivergesNeg,
    Inconclusive,
}

impl VerdictKind {
    pub fn flipped(self) -> VerdictKind {
        match self {
            VerdictKind::DivergesPos => VerdictKind::DivergesNeg,
            VerdictKind::DivergesNeg => VerdictKind::DivergesPos,
            k => k,
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// An advisory comparison of two trends over their last `window` stages.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub window: usize,
    pub bound: f64,
    /// First and last stage of the window.
    pub stages: (usize, usize),
    pub diffs: Vec<LogDiff>,
    /// `max |d_n|` over a window of finite differences.
    pub max_abs: Option<f64>,
    /// `max d_n − min d_n` over a window of finite differences.
    pub spread: Option<f64>,
    /// `(d_last − d_first) / (window − 1)` over a window of finite differences.
    pub slope: Option<f64>,
}

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_BOUND: f64 = 2.0;

/// Compares `log c(t1) − log c(t2)` over the final `window` stages.
///
/// * Any infinite difference decides the verdict by its sign (both signs:
///   inconclusive).
/// * `Bounded`: every `|d_n| ≤ bound` and the spread is at most `bound / 2`.
/// * `DivergesNeg`: `d_n` is nonincreasing, strictly lower at the end than at
///   the start, and ends below `−bound`. `DivergesPos` mirrors it.
/// * Otherwise `Inconclusive`.
pub fn dim_compare(t1: &DimTrend, t2: &DimTrend, window: usize, bound: f64) -> Result<Verdict, DimError> {
    if t1.last_stage() != t2.last_stage() || t1.counts.is_empty() || t2.counts.is_empty() {
        return Err(DimError::RangeMismatch(t1.last_stage(), t2.last_stage()));
    }
    if window < 2 {
        return Err(DimError::WindowTooShort);
    }
    let len = t1.counts.len().min(t2.counts.len());
    if window > len {
        return Err(DimError::WindowTooLong { window, len });
    }
    let a = &t1.counts[t1.counts.len() - window..];
    let b = &t2.counts[t2.counts.len() - window..];
    let diffs: Vec<LogDiff> = a.iter().zip(b).map(|(x, y)| LogDiff::of(*x, *y)).collect();
    let last = t1.last_stage();
    let mut verdict = Verdict {
        kind: VerdictKind::Inconclusive,
        window,
        bound,
        stages: (last + 1 - window, last),
        diffs: diffs.clone(),
        max_abs: None,
        spread: None,
        slope: None,
    };
    let pos = diffs.contains(&LogDiff::PosInfinity);
    let neg = diffs.contains(&LogDiff::NegInfinity);
    if pos || neg {
        verdict.kind = match (pos, neg) {
            (true, false) => VerdictKind::DivergesPos,
            (false, true) => VerdictKind::DivergesNeg,
            _ => VerdictKind::Inconclusive,
        };
        return Ok(verdict);
    }
    let d: Vec<f64> = diffs
        .iter()
        .map(|x| match x {
            LogDiff::Finite(v) => *v,
            _ => unreachable!("infinite differences handled above"),
        })
        .collect();
    let max_abs = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let hi = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let (first, end) = (d[0], d[window - 1]);
    verdict.max_abs = Some(max_abs);
    verdict.spread = Some(hi - lo);
    verdict.slope = Some((end - first) / (window - 1) as f64);
    let nonincreasing = d.windows(2).all(|w| w[1] <= w[0]);
    let nondecreasing = d.windows(2).all(|w| w[1] >= w[0]);
    verdict.kind = if max_abs <= bound && hi - lo <= bound / 2.0 {
        VerdictKind::Bounded
    } else if nonincreasing && end < first && end < -bound {
        VerdictKind::DivergesNeg
    } else if nondecreasing && end > first && end > bound {
        VerdictKind::DivergesPos
    } else {
        VerdictKind::Inconclusive
    };
    Ok(verdict)
}

/// `|Y| / |X|` at one stage.
pub fn mu(m: &FinStructure, x: &DefinableSet, y: &DefinableSet) -> Result<Ratio<u64>, DimError> {
    let cx = count(m, x)?;
    if cx == 0 {
        return Err(DimError::DivisionByZero);
    }
    Ok(Ratio::new(count(m, y)?, cx))
}

/// `μ_X(Y)` at every stage from the first containing both parameter sets;
/// `None` where `X` is empty.
pub fn mu_trend(chain: &StageChain, x: &DefinableSet, y: &DefinableSet) -> Result<Vec<(usize, Option<Ratio<u64>>)>, DimError> {
    let tx = trend(chain, x)?;
    let ty = trend(chain, y)?;
    let start = tx.first_stage.max(ty.first_stage);
    Ok((start..=tx.last_stage())
        .map(|s| {
            let cx = tx.counts[s - tx.first_stage];
            let cy = ty.counts[s - ty.first_stage];
            (s, (cx > 0).then(|| Ratio::new(cy, cx)))
        })
        .collect())
}

/// `X ∪ Y` for sets over the same variables and level cap.
pub fn union(x: &DefinableSet, y: &DefinableSet) -> Result<DefinableSet, DimError> {
    if x.vars != y.vars {
        return Err(DimError::VariableMismatch("union of sets over different variables".into()));
    }
    if x.level_cap != y.level_cap {
        return Err(DimError::VariableMismatch("union of sets with different level caps".into()));
    }
    let mut params = x.params.clone();
    for (v, e) in &y.params {
        if let Some(prev) = params.insert(v.clone(), *e) {
            if prev != *e {
                return Err(DimError::VariableMismatch(format!("parameter {v} bound twice")));
            }
        }
    }
    Ok(DefinableSet {
        formula: Formula::or(x.formula.clone(), y.formula.clone()),
        vars: x.vars.clone(),
        params,
        level_cap: x.level_cap,
    })
}

/// `X × Y` for sets over disjoint variables.
pub fn product(x: &DefinableSet, y: &DefinableSet) -> Result<DefinableSet, DimError> {
    if x.vars.iter().any(|v| y.vars.contains(v) || y.params.contains_key(v))
        || y.vars.iter().any(|v| x.params.contains_key(v))
    {
        return Err(DimError::VariableMismatch("product of sets sharing variables".into()));
    }
    if x.level_cap != y.level_cap {
        return Err(DimError::VariableMismatch("product of sets with different level caps".into()));
    }
    let mut params = x.params.clone();
    for (v, e) in &y.params {
        if let Some(prev) = params.insert(v.clone(), *e) {
            if prev != *e {
                return Err(DimError::VariableMismatch(format!("parameter {v} bound twice")));
            }
        }
    }
    Ok(DefinableSet {
        formula: Formula::and(x.formula.clone(), y.formula.clone()),
        vars: x.vars.iter().chain(&y.vars).cloned().collect(),
        params,
        level_cap: x.level_cap,
    })
}

/// A definable map from `X` to `Z`, given by its graph `θ(x̄, z̄)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fibration {
    pub domain: DefinableSet,
    pub graph: Formula,
    pub base: DefinableSet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnionRow {
    pub stage: usize,
    pub x: usize,
    pub y: usize,
    pub cx: u64,
    pub cy: u64,
    pub c_union: u64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberRow {
    pub stage: usize,
    pub c_domain: u64,
    pub max_fiber: u64,
    pub c_base: u64,
    /// Whether every point of the domain lies over some point of the base.
    pub total: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmptyRow {
    pub stage: usize,
    pub set: usize,
    pub count: u64,
    pub log: LogCount,
    pub holds: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct QuasiReport {
    pub empty: Vec<EmptyRow>,
    pub unions: Vec<UnionRow>,
    pub fibers: Vec<FiberRow>,
}

impl QuasiReport {
    pub fn violations(&self) -> usize {
        self.empty.iter().filter(|r| !r.holds).count()
            + self.unions.iter().filter(|r| !r.holds).count()
            + self.fibers.iter().filter(|r| !r.holds).count()
    }
}

/// Exact per-stage checks of the quasi-dimension axioms:
/// `c = 0 ⇔ log = −∞` for each set, `max(c(X), c(Y)) ≤ c(X∪Y) ≤ c(X)+c(Y)`
/// for every pair over the same variables, and for the fibration
/// `c(X) ≤ max_z c(f⁻¹(z)) · c(Z)`.
pub fn quasi_axiom_report(
    chain: &StageChain,
    sets: &[DefinableSet],
    fibered: Option<&Fibration>,
) -> Result<QuasiReport, DimError> {
    let mut report = QuasiReport::default();
    for (stage, m) in chain.stages.iter().enumerate() {
        let present: Vec<Option<u64>> = sets
            .iter()
            .map(|s| s.params_present_in(m).then(|| count(m, s)).transpose())
            .collect::<Result<_, _>>()?;
        for (i, c) in present.iter().enumerate() {
            if let Some(c) = c {
                let log = LogCount::of(*c);
                report.empty.push(EmptyRow {
                    stage,
                    set: i,
                    count: *c,
                    log,
                    holds: (*c == 0) == (log == LogCount::NegInfinity),
                });
            }
        }
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                let (Some(cx), Some(cy)) = (present[i], present[j]) else {
                    continue;
                };
                if sets[i].vars != sets[j].vars || sets[i].level_cap != sets[j].level_cap {
                    continue;
                }
                let c_union = count(m, &union(&sets[i], &sets[j])?)?;
                report.unions.push(UnionRow {
                    stage,
                    x: i,
                    y: j,
                    cx,
                    cy,
                    c_union,
                    holds: cx.max(cy) <= c_union && c_union <= cx + cy,
                });
            }
        }
        if let Some(f) = fibered {
            if let Some(row) = fiber_row(m, stage, f)? {
                report.fibers.push(row);
            }
        }
    }
    Ok(report)
}

fn fiber_row(m: &FinStructure, stage: usize, f: &Fibration) -> Result<Option<FiberRow>, DimError> {
    if !f.domain.params_present_in(m) || !f.base.params_present_in(m) {
        return Ok(None);
    }
    let xs = crate::eval::solutions(m, &f.domain)?;
    let zs = crate::eval::solutions(m, &f.base)?;
    let mut vars = f.domain.vars.clone();
    vars.extend(f.base.vars.iter().cloned());
    let mut params: BTreeMap<Var, ElemId> = f.domain.params.clone();
    params.extend(f.base.params.iter().map(|(v, e)| (v.clone(), *e)));
    let graph = DefinableSet {
        formula: f.graph.clone(),
        vars,
        params,
        level_cap: None,
    };
    let mut pairs = std::collections::BTreeSet::new();
    graph.for_each_solution(m, |t| {
        pairs.insert(t.to_vec());
    })?;
    let mut fibers: BTreeMap<&[ElemId], u64> = zs.iter().map(|z| (z.as_slice(), 0)).collect();
    let mut total = true;
    for x in &xs {
        let mut over = false;
        for z in &zs {
            let mut key = x.clone();
            key.extend(z.iter().copied());
            if pairs.contains(&key) {
                over = true;
                *fibers.get_mut(z.as_slice()).expect("z in base") += 1;
            }
        }
        total &= over;
    }
    let max_fiber = fibers.values().copied().max().unwrap_or(0);
    let c_domain = xs.len() as u64;
    let c_base = zs.len() as u64;
    Ok(Some(FiberRow {
        stage,
        c_domain,
        max_fiber,
        c_base,
        total,
        holds: !total || c_domain <= max_fiber * c_base,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(counts: &[u64]) -> DimTrend {
        DimTrend::synthetic(0, counts.to_vec())
    }

    #[test]
    fn identical_trends_are_bounded() {
        let t = synth(&[1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144]);
        let v = dim_compare(&t, &t, 10, 2.0).unwrap();
        assert_eq!(v.kind, VerdictKind::Bounded);
        assert_eq!(v.max_abs, Some(0.0));
    }

    #[test]
    fn linear_against_quadratic_diverges_negatively() {
        let n: Vec<u64> = (1..=25).collect();
        let n2: Vec<u64> = (1..=25u64).map(|k| k * k).collect();
        let v = dim_compare(&synth(&n), &synth(&n2), 10, 2.0).unwrap();
        assert_eq!(v.kind, VerdictKind::DivergesNeg);
        let w = dim_compare(&synth(&n2), &synth(&n), 10, 2.0).unwrap();
        assert_eq!(w.kind, VerdictKind::DivergesPos);
    }

    #[test]
    fn empty_against_nonempty() {
        let zeros = synth(&[0; 12]);
        let ones = synth(&[1; 12]);
        assert_eq!(dim_compare(&zeros, &ones, 10, 2.0).unwrap().kind, VerdictKind::DivergesNeg);
        assert_eq!(dim_compare(&ones, &zeros, 10, 2.0).unwrap().kind, VerdictKind::DivergesPos);
        assert_eq!(dim_compare(&zeros, &zeros, 10, 2.0).unwrap().kind, VerdictKind::Bounded);
        assert!(zeros.logs().iter().all(|l| *l == LogCount::NegInfinity));
    }

    #[test]
    fn constant_offset_beyond_bound_is_not_divergence() {
        let a = synth(&[1; 12]);
        let b = synth(&[100; 12]);
        assert_eq!(dim_compare(&a, &b, 10, 2.0).unwrap().kind, VerdictKind::Inconclusive);
    }

    #[test]
    fn window_and_range_errors() {
        let a = synth(&[1; 5]);
        assert!(matches!(dim_compare(&a, &a, 10, 2.0), Err(DimError::WindowTooLong { .. })));
        let b = DimTrend::synthetic(1, vec![1; 5]);
        assert!(matches!(dim_compare(&a, &b, 3, 2.0), Err(DimError::RangeMismatch(4, 5))));
    }

    #[test]
    fn csv_round_trip() {
        let t = synth(&[0, 1, 4, 9]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("stage,count,log_count\n0,0,-inf\n"));
        let rows = DimTrend::read_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0], (0, 0, LogCount::NegInfinity));
        assert_eq!(rows[3].1, 9);
    }
}
