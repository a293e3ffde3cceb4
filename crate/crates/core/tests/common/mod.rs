//! Reference implementations for the integration tests. Nothing here calls
//! the evaluator or the oracle of the library: structures are read through
//! their public accessors and everything else is recomputed from scratch.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use pseudofin::eval::DefinableSet;
use pseudofin::formula::{Formula, LevelOrdinal, Signature, Split, Var};
use pseudofin::structure::{ElemId, FinStructure};

pub type Fact = (String, Vec<u32>);

/// A structure as plain sets.
#[derive(Clone, Debug)]
pub struct Plain {
    pub elems: Vec<u32>,
    pub levels: HashMap<u32, LevelOrdinal>,
    pub facts: BTreeSet<Fact>,
}

impl Plain {
    pub fn of(m: &FinStructure) -> Plain {
        let mut facts = BTreeSet::new();
        for (sym, _) in m.signature().relations() {
            for t in m.tuples(sym).into_iter().flatten() {
                facts.insert((sym.to_string(), t.iter().map(|e| e.0).collect()));
            }
        }
        Plain {
            elems: m.universe().map(|e| e.0).collect(),
            levels: m.levels().iter().map(|(e, l)| (e.0, *l)).collect(),
            facts,
        }
    }
}

pub fn holds(p: &Plain, f: &Formula, env: &HashMap<Var, u32>) -> bool {
    match f {
        Formula::Rel { symbol, args } => {
            let t: Vec<u32> = args.iter().map(|v| env[v]).collect();
            p.facts.contains(&(symbol.clone(), t))
        }
        Formula::Eq(a, b) => env[a] == env[b],
        Formula::Not(g) => !holds(p, g, env),
        Formula::And(a, b) => holds(p, a, env) && holds(p, b, env),
        Formula::Or(a, b) => holds(p, a, env) || holds(p, b, env),
        Formula::Exists { vars, guard, body } => {
            let domain: Vec<u32> = p
                .elems
                .iter()
                .copied()
                .filter(|e| guard.map_or(true, |g| p.levels.get(e).map_or(true, |l| *l <= g)))
                .collect();
            let mut env = env.clone();
            exists_rec(p, vars, &domain, body, &mut env)
        }
    }
}

fn exists_rec(p: &Plain, vars: &[Var], domain: &[u32], body: &Formula, env: &mut HashMap<Var, u32>) -> bool {
    let Some((v, rest)) = vars.split_first() else {
        return holds(p, body, env);
    };
    for &e in domain {
        env.insert(v.clone(), e);
        if exists_rec(p, rest, domain, body, env) {
            return true;
        }
    }
    false
}

/// All tuples of length `n` over `domain`, lexicographically.
pub fn tuples(domain: &[u32], n: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                domain.iter().map(move |&e| {
                    let mut t = t.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    out
}

/// Counts solutions by checking every tuple of the capped universe.
pub fn naive_count(m: &FinStructure, set: &DefinableSet) -> u64 {
    let p = Plain::of(m);
    let domain: Vec<u32> = p
        .elems
        .iter()
        .copied()
        .filter(|e| set.level_cap.map_or(true, |c| p.levels[e] <= c))
        .collect();
    let mut env: HashMap<Var, u32> = set.params.iter().map(|(v, e)| (v.clone(), e.0)).collect();
    let mut n = 0;
    for t in tuples(&domain, set.vars.len()) {
        for (v, e) in set.vars.iter().zip(&t) {
            env.insert(v.clone(), *e);
        }
        if holds(&p, &set.formula, &env) {
            n += 1;
        }
    }
    n
}

/// Least set of facts containing `facts` and closed under the Horn part of
/// the named theory's universal axioms.
pub fn horn_closure(theory: &str, elems: &[u32], facts: &BTreeSet<Fact>) -> BTreeSet<Fact> {
    let mut out = facts.clone();
    match theory {
        "generic-equivalence" => {
            for &e in elems {
                out.insert(("E".into(), vec![e, e]));
            }
            loop {
                let pairs: Vec<(u32, u32)> = out.iter().map(|(_, t)| (t[0], t[1])).collect();
                let mut added = false;
                for &(a, b) in &pairs {
                    added |= out.insert(("E".into(), vec![b, a]));
                    for &(c, d) in &pairs {
                        if b == c {
                            added |= out.insert(("E".into(), vec![a, d]));
                        }
                    }
                }
                if !added {
                    break;
                }
            }
        }
        "random-graph" | "henson-triangle-free" => {
            for (_, t) in facts {
                out.insert(("R".into(), vec![t[1], t[0]]));
            }
        }
        _ => {}
    }
    out
}

/// The non-Horn universal axioms: irreflexivity and, for the Henson graph,
/// no triangles.
pub fn denials_hold(theory: &str, facts: &BTreeSet<Fact>) -> bool {
    match theory {
        "random-graph" => facts.iter().all(|(_, t)| t[0] != t[1]),
        "henson-triangle-free" => {
            if facts.iter().any(|(_, t)| t[0] == t[1]) {
                return false;
            }
            let edge = |a: u32, b: u32| facts.contains(&("R".to_string(), vec![a, b]));
            for (_, t) in facts {
                for (_, u) in facts {
                    if t[1] == u[0] && u[1] != t[0] && edge(u[1], t[0]) {
                        return false;
                    }
                }
            }
            true
        }
        _ => true,
    }
}

/// A structure with binary relations only, as adjacency bitmasks:
/// `rows[r][a]` has bit `b` set iff `R_r(a, b)`.
#[derive(Clone, PartialEq, Eq)]
struct Small {
    n: usize,
    rows: Vec<[u32; 32]>,
}

impl Small {
    fn of(m: &FinStructure, relations: &[String]) -> Small {
        let n = m.len();
        assert!(n + 8 <= 32, "brute force supports at most 24 old elements");
        let mut rows = vec![[0u32; 32]; relations.len()];
        for (r, sym) in relations.iter().enumerate() {
            for t in m.tuples(sym).into_iter().flatten() {
                rows[r][t[0].0 as usize] |= 1 << t[1].0;
            }
        }
        Small { n, rows }
    }

    fn has(&self, r: usize, a: usize, b: usize) -> bool {
        self.rows[r][a] >> b & 1 == 1
    }

    fn close(&mut self, theory: &str) {
        let n = self.n;
        match theory {
            "generic-equivalence" => {
                let e = &mut self.rows[0];
                for a in 0..n {
                    e[a] |= 1 << a;
                }
                for a in 0..n {
                    for b in 0..n {
                        if e[a] >> b & 1 == 1 {
                            e[b] |= 1 << a;
                        }
                    }
                }
                for k in 0..n {
                    for a in 0..n {
                        if e[a] >> k & 1 == 1 {
                            e[a] |= e[k];
                        }
                    }
                }
            }
            "random-graph" | "henson-triangle-free" => {
                let r = &mut self.rows[0];
                for a in 0..n {
                    for b in 0..n {
                        if r[a] >> b & 1 == 1 {
                            r[b] |= 1 << a;
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn denials_hold(&self, theory: &str) -> bool {
        match theory {
            "random-graph" => (0..self.n).all(|a| !self.has(0, a, a)),
            "henson-triangle-free" => {
                let r = &self.rows[0];
                (0..self.n).all(|a| r[a] >> a & 1 == 0 && (0..self.n).all(|b| r[a] >> b & 1 == 0 || r[a] & r[b] == 0))
            }
            _ => true,
        }
    }
}

enum Qf {
    Rel(usize, usize, usize),
    Eq(usize, usize),
    Not(Box<Qf>),
    And(Box<Qf>, Box<Qf>),
    Or(Box<Qf>, Box<Qf>),
}

impl Qf {
    fn compile(f: &Formula, vars: &[Var], relations: &[String]) -> Qf {
        let at = |v: &Var| vars.iter().position(|w| w == v).expect("free variable in split");
        match f {
            Formula::Rel { symbol, args } => {
                assert_eq!(args.len(), 2, "brute force supports binary relations only");
                let r = relations.iter().position(|s| s == symbol).expect("relation");
                Qf::Rel(r, at(&args[0]), at(&args[1]))
            }
            Formula::Eq(a, b) => Qf::Eq(at(a), at(b)),
            Formula::Not(g) => Qf::Not(Box::new(Qf::compile(g, vars, relations))),
            Formula::And(a, b) => Qf::And(Box::new(Qf::compile(a, vars, relations)), Box::new(Qf::compile(b, vars, relations))),
            Formula::Or(a, b) => Qf::Or(Box::new(Qf::compile(a, vars, relations)), Box::new(Qf::compile(b, vars, relations))),
            Formula::Exists { .. } => panic!("brute force expects quantifier-free formulas"),
        }
    }

    fn holds(&self, s: &Small, env: &[usize]) -> bool {
        match self {
            Qf::Rel(r, i, j) => s.has(*r, env[*i], env[*j]),
            Qf::Eq(i, j) => env[*i] == env[*j],
            Qf::Not(g) => !g.holds(s, env),
            Qf::And(a, b) => a.holds(s, env) && b.holds(s, env),
            Qf::Or(a, b) => a.holds(s, env) || b.holds(s, env),
        }
    }

    fn atoms(&self, out: &mut Vec<(usize, usize, usize)>) {
        match self {
            Qf::Rel(r, i, j) => out.push((*r, *i, *j)),
            Qf::Eq(..) => {}
            Qf::Not(g) => g.atoms(out),
            Qf::And(a, b) | Qf::Or(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
        }
    }
}

/// Whether some model of the theory extending `m` has `ȳ` with `φ(ā, ȳ)`,
/// decided by trying every placement of the witnesses among old and at most
/// `q` new elements and every truth assignment to the atoms of `φ` that
/// mention a new element; the rest of the extension is the least one the
/// Horn axioms force, which must keep the old part unchanged and pass the
/// remaining universal axioms. Elements of `m` must be `e0..e{n-1}`.
pub fn brute_realizable(theory: &str, m: &FinStructure, f: &Formula, split: &Split, a: &[ElemId]) -> bool {
    let relations: Vec<String> = m.signature().relations().map(|(s, _)| s.to_string()).collect();
    let base = Small::of(m, &relations);
    let old = base.n;
    let old_mask: u32 = (1u64 << old).wrapping_sub(1) as u32;
    let vars = split.all_vars();
    let qf = Qf::compile(f, &vars, &relations);
    let mut atom_list = Vec::new();
    qf.atoms(&mut atom_list);
    let p = split.params.len();
    let q = split.witnesses.len();
    let mut env: Vec<usize> = a.iter().map(|e| e.0 as usize).collect();
    env.resize(p + q, 0);
    for r in 0..=q {
        let total = old + r;
        let mut image = vec![0usize; q];
        loop {
            // New elements are interchangeable: require them in order of first use.
            let mut next_new = old;
            let mut onto = true;
            for &e in &image {
                if e >= old {
                    if e > next_new {
                        onto = false;
                        break;
                    }
                    if e == next_new {
                        next_new += 1;
                    }
                }
            }
            onto &= next_new == total;
            if onto {
                env[p..].copy_from_slice(&image);
                let mut open: Vec<(usize, usize, usize)> = atom_list
                    .iter()
                    .map(|&(rel, i, j)| (rel, env[i], env[j]))
                    .filter(|&(_, x, y)| x >= old || y >= old)
                    .collect();
                open.sort_unstable();
                open.dedup();
                for mask in 0u32..(1 << open.len()) {
                    let mut s = Small {
                        n: total,
                        rows: base.rows.clone(),
                    };
                    for (i, &(rel, x, y)) in open.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            s.rows[rel][x] |= 1 << y;
                        }
                    }
                    s.close(theory);
                    let contradicts = open
                        .iter()
                        .enumerate()
                        .any(|(i, &(rel, x, y))| mask >> i & 1 == 0 && s.has(rel, x, y));
                    let old_changed = (0..relations.len())
                        .any(|rel| (0..old).any(|x| s.rows[rel][x] & old_mask != base.rows[rel][x]));
                    if !contradicts && !old_changed && s.denials_hold(theory) && qf.holds(&s, &env) {
                        return true;
                    }
                }
            }
            // Next image in odometer order.
            let mut k = 0;
            while k < q {
                image[k] += 1;
                if image[k] < total {
                    break;
                }
                image[k] = 0;
                k += 1;
            }
            if k == q {
                break;
            }
        }
    }
    false
}

/// Whether applying the oracle's realization to `m` gives a model of the
/// universal theory that keeps `m` unchanged and satisfies `φ(ā, w̄)`.
pub fn realization_sound(theory: &str, m: &FinStructure, ext: &FinStructure, f: &Formula, split: &Split, a: &[ElemId], witness: &[ElemId]) -> bool {
    let relations: Vec<String> = m.signature().relations().map(|(s, _)| s.to_string()).collect();
    let base = Small::of(m, &relations);
    let s = Small::of(ext, &relations);
    let old_mask: u32 = (1u64 << base.n).wrapping_sub(1) as u32;
    let mut closed = s.clone();
    closed.close(theory);
    let old_same = (0..relations.len()).all(|r| (0..base.n).all(|x| s.rows[r][x] & old_mask == base.rows[r][x]));
    let env: Vec<usize> = a.iter().chain(witness).map(|e| e.0 as usize).collect();
    let qf = Qf::compile(f, &split.all_vars(), &relations);
    closed == s && s.denials_hold(theory) && old_same && qf.holds(&s, &env)
}

/// Whether `facts` on `elems` satisfies the named theory's universal part.
pub fn is_universal_model(theory: &str, elems: &[u32], facts: &BTreeSet<Fact>) -> bool {
    horn_closure(theory, elems, facts) == *facts && denials_hold(theory, facts)
}

/// Canonical form of a structure on `0..n` under relabelling.
fn canonical(n: usize, facts: &BTreeSet<Fact>) -> BTreeSet<Fact> {
    let mut best: Option<BTreeSet<Fact>> = None;
    let mut perm: Vec<u32> = (0..n as u32).collect();
    permutations(&mut perm, 0, &mut |p| {
        let image: BTreeSet<Fact> = facts
            .iter()
            .map(|(s, t)| (s.clone(), t.iter().map(|e| p[*e as usize]).collect()))
            .collect();
        if best.as_ref().map_or(true, |b| image < *b) {
            best = Some(image);
        }
    });
    best.unwrap_or_default()
}

fn permutations(p: &mut Vec<u32>, k: usize, visit: &mut impl FnMut(&[u32])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Every model of the named theory's universal part on `n` elements, one
/// per isomorphism class, with all elements at level 0.
pub fn small_models(theory: &str, sig: &Signature, n: usize) -> Vec<FinStructure> {
    let mut layer: BTreeSet<BTreeSet<Fact>> = BTreeSet::from([BTreeSet::new()]);
    for size in 1..=n {
        let new = (size - 1) as u32;
        let elems: Vec<u32> = (0..size as u32).collect();
        let mut next = BTreeSet::new();
        for facts in &layer {
            for mask in 0u32..(1 << (size - 1)) {
                let mut f = facts.clone();
                for old in 0..new {
                    if mask >> old & 1 == 1 {
                        match theory {
                            "generic-equivalence" => {
                                f.insert(("E".into(), vec![old, new]));
                            }
                            "random-graph" | "henson-triangle-free" => {
                                f.insert(("R".into(), vec![old, new]));
                            }
                            _ => {}
                        }
                    }
                }
                let f = horn_closure(theory, &elems, &f);
                if !denials_hold(theory, &f) {
                    continue;
                }
                // Keep only extensions that leave the old part unchanged.
                if f.iter().any(|(s, t)| t.iter().all(|e| *e < new) && !facts.contains(&(s.clone(), t.clone()))) {
                    continue;
                }
                next.insert(canonical(size, &f));
            }
        }
        layer = next;
    }
    layer
        .into_iter()
        .map(|facts| {
            let mut m = FinStructure::new(sig.clone());
            for _ in 0..n {
                m.push_element(LevelOrdinal::Fin(0));
            }
            for (s, t) in facts {
                let t: Vec<ElemId> = t.into_iter().map(ElemId).collect();
                m.add_fact(&s, &t).unwrap();
            }
            m
        })
        .collect()
}

/// Facts of `m` restricted to elements other than those in `skip`.
pub fn facts_without(m: &FinStructure, skip: &BTreeSet<u32>) -> BTreeSet<Fact> {
    Plain::of(m)
        .facts
        .into_iter()
        .filter(|(_, t)| t.iter().all(|e| !skip.contains(e)))
        .collect()
}

/// Element-count by level, for quick sanity messages.
pub fn level_histogram(m: &FinStructure) -> BTreeMap<LevelOrdinal, usize> {
    let mut h = BTreeMap::new();
    for l in m.levels().values() {
        *h.entry(*l).or_default() += 1;
    }
    h
}

/// Distinct schedule `(formula, split)` pairs of at most `max_size` nodes,
/// read from the first `scan` items of the base stream.
pub fn small_schedule_formulas(sig: &Signature, max_size: usize, scan: usize) -> Vec<(Formula, Split)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (f, s) in pseudofin::formula::base_formula_stream(sig, scan) {
        if f.size() <= max_size && seen.insert((f.clone(), s.params.len(), s.witnesses.len())) {
            out.push((f, s));
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct Agreement {
    pub structures: usize,
    pub queries: u64,
    pub realizable: u64,
    pub disagreements: Vec<String>,
}

/// Compares `extends_with_witness` with [`brute_realizable`] on every model
/// of the universal theory with at most `max_elems` elements (up to
/// isomorphism), every formula of `formulas` and every parameter tuple.
/// Realizations the oracle returns are also checked directly.
pub fn oracle_agreement(
    theory: &dyn pseudofin::theory::Theory,
    max_elems: usize,
    formulas: &[(Formula, Split)],
) -> Agreement {
    let name = theory.name();
    let mut report = Agreement::default();
    for n in 1..=max_elems {
        for m in small_models(name, theory.signature(), n) {
            report.structures += 1;
            let elems: Vec<u32> = m.universe().map(|e| e.0).collect();
            for (f, split) in formulas {
                for a in tuples(&elems, split.params.len()) {
                    let a: Vec<ElemId> = a.into_iter().map(ElemId).collect();
                    let got = pseudofin::theory::extends_with_witness(theory, &m, f, split, &a, LevelOrdinal::Fin(1))
                        .expect("oracle answers");
                    let want = brute_realizable(name, &m, f, split, &a);
                    report.queries += 1;
                    if got.is_some() != want {
                        report
                            .disagreements
                            .push(format!("{name}: {f} [{split}] at {a:?} on {:?}: oracle {}, brute force {want}", Plain::of(&m).facts, got.is_some()));
                        continue;
                    }
                    if let Some(r) = got {
                        report.realizable += 1;
                        let ext = m.apply_delta(&r.delta).expect("delta applies");
                        if !realization_sound(name, &m, &ext, f, split, &a, &r.witness) {
                            report
                                .disagreements
                                .push(format!("{name}: {f} [{split}] at {a:?}: oracle realization is wrong"));
                        }
                    }
                }
            }
        }
    }
    report
}
