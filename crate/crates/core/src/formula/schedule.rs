//! The fair schedule of (formula, variable split, level) triples.
//!
//! Position `i` of the schedule is decoded as follows.
//!
//! * The parity of `i` picks the block of the level: even positions carry a
//!   finite level `Fin(n)`, odd positions a level `OmegaPlus(n)`. Any prefix of
//!   length `2m` therefore contains `m` levels of each kind.
//! * `q = i / 2` is split as `q + 1 = 8^r * m` with `m` not divisible by 8.
//!   `r` is the repetition round and `t` is the index of `m` among the
//!   naturals not divisible by 8. Round 0 takes 7 of every 8 positions.
//! * `t + 1 = 2^n * (2u + 1)` gives the level index `n` and the base index `u`.
//!
//! Each `(u, kind, n)` triple occurs once per round `r`, so every triple
//! occurs infinitely often. Its next occurrence after position `i` is at
//! `16 * (i / 2) + 14 + (i % 2)`, which gives the bound [`recurrence_bound`].
//!
//! The base stream `u ↦ (formula, split)` interleaves two enumerations of
//! quantifier-free formulas over the variables `x0..x{p-1}` (parameters) and
//! `y0..y{q-1}` (witnesses), each using every one of its variables:
//!
//! * conjunctions of literals over distinct atoms, bucketed by
//!   (number of literals, variable count, split), and
//! * all formulas without double negation, bucketed by
//!   (node count, variable count, split).
//!
//! Buckets are visited along diagonals of `size + variable count`, then by
//! variable count, then by the number of parameters. Every quantifier-free
//! formula over such a variable set lands in exactly one bucket of the second
//! enumeration, so every formula with every split eventually appears.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Formula, LevelOrdinal, Signature, Var};

/// Partition of a formula's free variables into parameters `x̄` (bound to a
/// tuple of the structure) and witnesses `ȳ` (to be found).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Split {
    pub params: Vec<Var>,
    pub witnesses: Vec<Var>,
}

impl Split {
    pub fn new(params: Vec<Var>, witnesses: Vec<Var>) -> Self {
        Split { params, witnesses }
    }

    /// `x0..x{p-1}` and `y0..y{q-1}`.
    pub fn canonical(p: usize, q: usize) -> Self {
        Split {
            params: (0..p).map(|i| Var::indexed("x", i)).collect(),
            witnesses: (0..q).map(|i| Var::indexed("y", i)).collect(),
        }
    }

    /// All variables, parameters first.
    pub fn all_vars(&self) -> Vec<Var> {
        self.params.iter().chain(&self.witnesses).cloned().collect()
    }

    /// True iff the split is a partition of `formula`'s free variables.
    pub fn partitions(&self, formula: &Formula) -> bool {
        let all = self.all_vars();
        let set: BTreeSet<Var> = all.iter().cloned().collect();
        set.len() == all.len() && set == formula.free_vars()
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |vs: &[Var]| vs.iter().map(Var::to_string).collect::<Vec<_>>().join(",");
        write!(f, "{};{}", join(&self.params), join(&self.witnesses))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScheduleEntry {
    pub position: usize,
    pub formula: Formula,
    pub split: Split,
    pub level: LevelOrdinal,
}

impl fmt::Display for ScheduleEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#{} [{}] level {}: {}",
            self.position, self.split, self.level, self.formula
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScheduleCoordinates {
    pub round: usize,
    pub base: usize,
    pub level: LevelOrdinal,
}

const ROUND_BASE: usize = 8;

/// Decodes a schedule position; see the module docs.
pub fn schedule_coordinates(position: usize) -> ScheduleCoordinates {
    let finite = position % 2 == 0;
    let mut m = position / 2 + 1;
    let mut round = 0;
    while m % ROUND_BASE == 0 {
        m /= ROUND_BASE;
        round += 1;
    }
    let t = m - 1 - m / ROUND_BASE;
    let mut s = t + 1;
    let mut n = 0u32;
    while s % 2 == 0 {
        s /= 2;
        n += 1;
    }
    let base = (s - 1) / 2;
    let level = if finite {
        LevelOrdinal::Fin(n)
    } else {
        LevelOrdinal::OmegaPlus(n)
    };
    ScheduleCoordinates { round, base, level }
}

/// Any triple present in the first `n` entries occurs again within the first
/// `recurrence_bound(n)` entries.
pub fn recurrence_bound(n: usize) -> usize {
    8 * n + 16
}

/// The schedule for one signature, with the base formula stream cached.
#[derive(Debug)]
pub struct Schedule {
    stream: BaseStream,
    base: Vec<(Formula, Split)>,
}

impl Schedule {
    pub fn new(signature: &Signature) -> Self {
        Schedule {
            stream: BaseStream::new(signature.clone()),
            base: Vec::new(),
        }
    }

    fn base_item(&mut self, u: usize) -> &(Formula, Split) {
        while self.base.len() <= u {
            let item = self.stream.next_item();
            self.base.push(item);
        }
        &self.base[u]
    }

    pub fn entry(&mut self, position: usize) -> ScheduleEntry {
        let c = schedule_coordinates(position);
        let (formula, split) = self.base_item(c.base).clone();
        ScheduleEntry {
            position,
            formula,
            split,
            level: c.level,
        }
    }

    /// The first `count` entries.
    pub fn entries(&mut self, count: usize) -> Vec<ScheduleEntry> {
        (0..count).map(|i| self.entry(i)).collect()
    }
}

/// The first `count` entries of the schedule for `signature`.
pub fn enumerate_schedule(signature: &Signature, count: usize) -> Vec<ScheduleEntry> {
    Schedule::new(signature).entries(count)
}

/// The first `count` items of the base `(formula, split)` stream.
pub fn base_formula_stream(signature: &Signature, count: usize) -> Vec<(Formula, Split)> {
    let mut s = BaseStream::new(signature.clone());
    (0..count).map(|_| s.next_item()).collect()
}

#[derive(Debug)]
struct BaseStream {
    cubes: Bucketed,
    general: Bucketed,
    emitted: usize,
}

impl BaseStream {
    fn new(signature: Signature) -> Self {
        BaseStream {
            cubes: Bucketed::new(signature.clone(), BucketKind::Cube),
            general: Bucketed::new(signature, BucketKind::General),
            emitted: 0,
        }
    }

    fn next_item(&mut self) -> (Formula, Split) {
        let k = self.emitted;
        self.emitted += 1;
        if k % 2 == 0 {
            self.cubes.next_item()
        } else {
            self.general.next_item()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BucketKind {
    Cube,
    General,
}

/// Walks buckets `(size, vars, params)` along diagonals and yields their items.
#[derive(Debug)]
struct Bucketed {
    signature: Signature,
    kind: BucketKind,
    diagonal: usize,
    vars: usize,
    params: usize,
    pending: std::vec::IntoIter<Formula>,
    pending_split: Split,
    by_size: HashMap<(usize, usize), Vec<Vec<Formula>>>,
}

impl Bucketed {
    fn new(signature: Signature, kind: BucketKind) -> Self {
        Bucketed {
            signature,
            kind,
            diagonal: 2,
            vars: 0,
            params: 0,
            pending: Vec::new().into_iter(),
            pending_split: Split::canonical(0, 0),
            by_size: HashMap::new(),
        }
    }

    fn next_item(&mut self) -> (Formula, Split) {
        loop {
            if let Some(f) = self.pending.next() {
                return (f, self.pending_split.clone());
            }
            self.advance_bucket();
        }
    }

    fn advance_bucket(&mut self) {
        // Visit (vars, params) with 1 <= vars < diagonal and params < vars.
        if self.vars == 0 {
            self.vars = 1;
            self.params = 0;
        } else if self.params + 1 < self.vars {
            self.params += 1;
        } else if self.vars + 1 < self.diagonal {
            self.vars += 1;
            self.params = 0;
        } else {
            self.diagonal += 1;
            self.vars = 1;
            self.params = 0;
        }
        let size = self.diagonal - self.vars;
        let split = Split::canonical(self.params, self.vars - self.params);
        let vars = split.all_vars();
        let items = match self.kind {
            BucketKind::Cube => cube_bucket(&self.signature, &vars, size),
            BucketKind::General => self.general_bucket(&vars, self.params, size),
        };
        self.pending_split = split;
        self.pending = items.into_iter();
    }

    fn general_bucket(&mut self, vars: &[Var], params: usize, size: usize) -> Vec<Formula> {
        let sig = self.signature.clone();
        let table = self
            .by_size
            .entry((vars.len(), params))
            .or_insert_with(|| vec![Vec::new(), atoms(&sig, vars)]);
        while table.len() <= size {
            let s = table.len();
            let mut next = Vec::new();
            for f in &table[s - 1] {
                if !matches!(f, Formula::Not(_)) {
                    next.push(Formula::not(f.clone()));
                }
            }
            for left in 1..s - 1 {
                let right = s - 1 - left;
                for a in &table[left] {
                    for b in &table[right] {
                        next.push(Formula::and(a.clone(), b.clone()));
                        next.push(Formula::or(a.clone(), b.clone()));
                    }
                }
            }
            table.push(next);
        }
        table[size]
            .iter()
            .filter(|f| uses_all(f, vars))
            .cloned()
            .collect()
    }
}

fn uses_all(f: &Formula, vars: &[Var]) -> bool {
    f.free_vars().len() == vars.len()
}

/// Relation atoms in signature order over all argument tuples, then the
/// equalities `vi=vj` for `i < j`.
fn atoms(signature: &Signature, vars: &[Var]) -> Vec<Formula> {
    let mut out = Vec::new();
    for (sym, arity) in signature.relations() {
        let mut idx = vec![0usize; arity];
        loop {
            out.push(Formula::rel(sym, idx.iter().map(|&i| vars[i].clone()).collect::<Vec<_>>()));
            if !odometer(&mut idx, vars.len()) {
                break;
            }
        }
    }
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            out.push(Formula::Eq(vars[i].clone(), vars[j].clone()));
        }
    }
    out
}

/// Increments `digits` in base `radix` (last digit fastest); false on wrap.
pub(crate) fn odometer(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

fn cube_bucket(signature: &Signature, vars: &[Var], literals: usize) -> Vec<Formula> {
    let atoms = atoms(signature, vars);
    let mut out = Vec::new();
    if literals == 0 || literals > atoms.len() {
        return out;
    }
    let mut combo: Vec<usize> = (0..literals).collect();
    loop {
        for signs in 0u32..(1 << literals) {
            let lits = combo.iter().enumerate().map(|(k, &a)| {
                if signs >> (literals - 1 - k) & 1 == 1 {
                    Formula::not(atoms[a].clone())
                } else {
                    atoms[a].clone()
                }
            });
            let f = Formula::conjunction(lits).expect("nonempty cube");
            if uses_all(&f, vars) {
                out.push(f);
            }
        }
        if !next_combination(&mut combo, atoms.len()) {
            break;
        }
    }
    out
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn graph() -> Signature {
        Signature::new([("E", 2)])
    }

    type Triple = (Formula, Split, LevelOrdinal);

    fn triples(entries: &[ScheduleEntry]) -> Vec<Triple> {
        entries
            .iter()
            .map(|e| (e.formula.clone(), e.split.clone(), e.level))
            .collect()
    }

    #[test]
    fn empty_prefix() {
        assert!(enumerate_schedule(&graph(), 0).is_empty());
    }

    #[test]
    fn coordinates_are_a_bijection_on_a_prefix() {
        let mut seen = HashMap::new();
        for i in 0..20_000 {
            let c = schedule_coordinates(i);
            assert!(seen.insert(c, i).is_none(), "duplicate coordinates {c:?}");
        }
        // Round 0 occupies seven of every eight slots per level kind.
        let round0 = (0..1600).filter(|&i| schedule_coordinates(i).round == 0).count();
        assert_eq!(round0, 1400);
    }

    #[test]
    fn next_round_lands_where_documented() {
        for i in 0..5000 {
            let c = schedule_coordinates(i);
            let j = 16 * (i / 2) + 14 + i % 2;
            let d = schedule_coordinates(j);
            assert_eq!((d.round, d.base, d.level), (c.round + 1, c.base, c.level));
            assert!(j < recurrence_bound(i + 1));
        }
    }

    #[test]
    fn both_level_kinds_in_every_even_prefix() {
        // Reference: decode the first 2m positions independently of `Schedule`.
        let entries = enumerate_schedule(&graph(), 400);
        for m in 1..=200 {
            let prefix = &entries[..2 * m];
            assert!(prefix.iter().any(|e| e.level.is_finite()));
            assert!(prefix.iter().any(|e| !e.level.is_finite()));
        }
        assert_eq!(entries[0].level, LevelOrdinal::Fin(0));
        assert_eq!(entries[1].level, LevelOrdinal::OmegaPlus(0));
    }

    #[test]
    fn deterministic() {
        let a = enumerate_schedule(&graph(), 300);
        let b = enumerate_schedule(&graph(), 300);
        assert_eq!(a, b);
    }

    #[test]
    fn splits_partition_free_variables() {
        for e in enumerate_schedule(&graph(), 2000) {
            assert!(e.split.partitions(&e.formula), "{e}");
            assert!(e.formula.is_quantifier_free());
            assert!(!e.split.witnesses.is_empty());
        }
        for e in enumerate_schedule(&Signature::empty(), 200) {
            assert!(e.split.partitions(&e.formula), "{e}");
        }
    }

    #[test]
    fn empty_signature_yields_equalities() {
        let entries = enumerate_schedule(&Signature::empty(), 50);
        assert!(!entries.is_empty());
        assert!(entries
            .iter()
            .all(|e| !format!("{}", e.formula).contains('(') || format!("{}", e.formula).contains('=')));
    }

    #[test]
    fn recurrence_within_documented_bound() {
        let n = 300;
        let long = triples(&enumerate_schedule(&graph(), recurrence_bound(n)));
        for t in &long[..n] {
            let hits = long.iter().filter(|u| *u == t).count();
            assert!(hits >= 2, "{t:?} occurs once in the first {}", long.len());
        }
    }

    #[test]
    fn occurrence_counts_grow_with_prefix() {
        let long = triples(&enumerate_schedule(&graph(), 6000));
        let target = long[0].clone();
        let mut last = 0;
        let mut counts = Vec::new();
        for n in (0..=6000).step_by(500) {
            let c = long[..n].iter().filter(|u| **u == target).count();
            assert!(c >= last);
            last = c;
            counts.push(c);
        }
        assert!(counts.last().unwrap() > &counts[2]);
    }

    #[test]
    fn every_small_formula_appears() {
        // Every negated atom over x0;y0 eventually shows up at level Fin(0).
        let entries = enumerate_schedule(&graph(), 4000);
        let split = Split::canonical(1, 1);
        for atom in ["E(x0,y0)", "E(y0,x0)", "x0=y0"] {
            let f = crate::formula::parse(&format!("!{}", if atom.contains('=') { format!("({atom})") } else { atom.to_string() }), &graph()).unwrap();
            assert!(
                entries
                    .iter()
                    .any(|e| e.formula == f && e.split == split && e.level == LevelOrdinal::Fin(0)),
                "{f} missing"
            );
        }
    }

    #[test]
    fn general_buckets_cover_all_trees() {
        // Brute-force count of formulas with 3 nodes over {y0} with one
        // binary relation: atoms = {E(y0,y0)}; trees: And/Or of two atoms (2).
        let sig = graph();
        let mut b = Bucketed::new(sig, BucketKind::General);
        let vars = [Var::new("y0")];
        let f3 = b.general_bucket(&vars, 0, 3);
        assert_eq!(f3.len(), 2);
        let f4 = b.general_bucket(&vars, 0, 4);
        // Not(And/Or) (2) + And/Or over sizes (1,2),(2,1) = 2*2 = 4.
        assert_eq!(f4.len(), 6);
    }
}
