use std::collections::BTreeSet;

use super::{Attachment, Axiom, Theory, Violation};
use crate::formula::Signature;
use crate::structure::{ElemId, ExtensionDelta, FinStructure};

/// Pure equality; models are the infinite sets.
#[derive(Debug, Clone)]
pub struct InfiniteSet {
    signature: Signature,
    axioms: Vec<Axiom>,
}

impl InfiniteSet {
    pub const NAME: &'static str = "infinite-set";

    pub fn new() -> Self {
        let signature = Signature::empty();
        let axioms = vec![
            Axiom::parse("new-1", "!(x0=y0)", &signature),
            Axiom::parse("new-2", "!(x0=y0) & !(x1=y0)", &signature),
            Axiom::parse("new-3", "!(x0=y0) & !(x1=y0) & !(x2=y0)", &signature),
        ];
        InfiniteSet { signature, axioms }
    }
}

impl Default for InfiniteSet {
    fn default() -> Self {
        Self::new()
    }
}

impl Theory for InfiniteSet {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    fn validate_t_forall(&self, _m: &FinStructure) -> Vec<Violation> {
        Vec::new()
    }

    fn attachments(&self, _local: &FinStructure, _new: ElemId) -> Vec<Attachment> {
        vec![Vec::new()]
    }
}

fn graph_signature() -> Signature {
    Signature::new([("R", 2)])
}

fn graph_universal_axioms(sig: &Signature) -> Vec<Axiom> {
    vec![
        Axiom::parse("irreflexive", "!R(x0,x0)", sig),
        Axiom::parse("symmetric", "!R(x0,x1) | R(x1,x0)", sig),
    ]
}

/// Loops and one-directional edges.
fn graph_violations(m: &FinStructure) -> Vec<Violation> {
    let mut out = Vec::new();
    for t in m.relation_at(0) {
        if t[0] == t[1] {
            out.push(Violation {
                axiom: "irreflexive".into(),
                tuple: vec![t[0]],
            });
        } else if !m.holds_at(0, &[t[1], t[0]]) {
            out.push(Violation {
                axiom: "symmetric".into(),
                tuple: t.clone(),
            });
        }
    }
    out
}

fn neighbors(m: &FinStructure, e: ElemId) -> BTreeSet<ElemId> {
    m.relation_at(0)
        .range(vec![e]..)
        .take_while(|t| t[0] == e)
        .map(|t| t[1])
        .collect()
}

/// Edges between `new` and each element of `set`, both directions.
fn edges_to(new: ElemId, set: &[ElemId]) -> Attachment {
    set.iter()
        .flat_map(|&s| [(0, vec![new, s]), (0, vec![s, new])])
        .collect()
}

/// Subsets of the elements other than `new`, in bitmask order, filtered.
fn subsets(local: &FinStructure, new: ElemId, keep: impl Fn(&[ElemId]) -> bool) -> Vec<Attachment> {
    let others: Vec<ElemId> = local.universe().filter(|e| *e != new).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << others.len()) {
        let set: Vec<ElemId> = others
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, e)| *e)
            .collect();
        if keep(&set) {
            out.push(edges_to(new, &set));
        }
    }
    out
}

/// The Rado graph: an irreflexive symmetric relation with all extension
/// axioms.
#[derive(Debug, Clone)]
pub struct RandomGraph {
    signature: Signature,
    axioms: Vec<Axiom>,
}

impl RandomGraph {
    pub const NAME: &'static str = "random-graph";

    pub fn new() -> Self {
        let signature = graph_signature();
        let mut axioms = graph_universal_axioms(&signature);
        for (name, text) in [
            ("ext-1-0", "R(x0,y0)"),
            ("ext-0-1", "!R(x0,y0) & !(x0=y0)"),
            ("ext-2-0", "x0=x1 | R(x0,y0) & R(x1,y0)"),
            ("ext-1-1", "x0=x1 | R(x0,y0) & !R(x1,y0) & !(x1=y0)"),
            ("ext-0-2", "!R(x0,y0) & !R(x1,y0) & !(x0=y0) & !(x1=y0)"),
        ] {
            axioms.push(Axiom::parse(name, text, &signature));
        }
        RandomGraph { signature, axioms }
    }
}

impl Default for RandomGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl Theory for RandomGraph {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    fn validate_t_forall(&self, m: &FinStructure) -> Vec<Violation> {
        graph_violations(m)
    }

    fn attachments(&self, local: &FinStructure, new: ElemId) -> Vec<Attachment> {
        subsets(local, new, |_| true)
    }
}

/// The generic triangle-free graph.
#[derive(Debug, Clone)]
pub struct HensonTriangleFree {
    signature: Signature,
    axioms: Vec<Axiom>,
}

impl HensonTriangleFree {
    pub const NAME: &'static str = "henson-triangle-free";

    pub fn new() -> Self {
        let signature = graph_signature();
        let mut axioms = graph_universal_axioms(&signature);
        for (name, text) in [
            ("triangle-free", "!R(x0,x1) | !R(x1,x2) | !R(x0,x2)"),
            ("ext-1-0", "R(x0,y0)"),
            ("ext-0-1", "!R(x0,y0) & !(x0=y0)"),
            ("ext-2-0", "x0=x1 | R(x0,x1) | R(x0,y0) & R(x1,y0)"),
            ("ext-1-1", "x0=x1 | R(x0,y0) & !R(x1,y0) & !(x1=y0)"),
            ("ext-0-2", "!R(x0,y0) & !R(x1,y0) & !(x0=y0) & !(x1=y0)"),
        ] {
            axioms.push(Axiom::parse(name, text, &signature));
        }
        HensonTriangleFree { signature, axioms }
    }
}

impl Default for HensonTriangleFree {
    fn default() -> Self {
        Self::new()
    }
}

impl Theory for HensonTriangleFree {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    fn validate_t_forall(&self, m: &FinStructure) -> Vec<Violation> {
        let mut out = graph_violations(m);
        for t in m.relation_at(0) {
            let (a, b) = (t[0], t[1]);
            if a >= b {
                continue;
            }
            for c in neighbors(m, b) {
                if c > b && m.holds_at(0, &[a, c]) {
                    out.push(Violation {
                        axiom: "triangle-free".into(),
                        tuple: vec![a, b, c],
                    });
                }
            }
        }
        out
    }

    /// Neighbourhoods must be independent, otherwise a triangle appears.
    fn attachments(&self, local: &FinStructure, new: ElemId) -> Vec<Attachment> {
        subsets(local, new, |set| {
            set.iter()
                .enumerate()
                .all(|(i, a)| set[i + 1..].iter().all(|b| !local.holds_at(0, &[*a, *b])))
        })
    }
}

/// One equivalence relation with infinitely many classes, all infinite.
#[derive(Debug, Clone)]
pub struct GenericEquivalence {
    signature: Signature,
    axioms: Vec<Axiom>,
}

impl GenericEquivalence {
    pub const NAME: &'static str = "generic-equivalence";

    pub fn new() -> Self {
        let signature = Signature::new([("E", 2)]);
        let axioms = [
            ("reflexive", "E(x0,x0)"),
            ("symmetric", "!E(x0,x1) | E(x1,x0)"),
            ("transitive", "!E(x0,x1) | !E(x1,x2) | E(x0,x2)"),
            ("new-class", "!E(x0,y0)"),
            ("new-class-2", "!E(x0,y0) & !E(x1,y0)"),
            ("infinite-class", "E(x0,y0) & !(x0=y0)"),
            ("infinite-class-2", "E(x0,y0) & !(x0=y0) & !(x1=y0)"),
        ]
        .iter()
        .map(|(n, t)| Axiom::parse(n, t, &signature))
        .collect();
        GenericEquivalence { signature, axioms }
    }

    /// The class of `e` (its `E`-successors).
    pub fn class_of(m: &FinStructure, e: ElemId) -> BTreeSet<ElemId> {
        neighbors(m, e)
    }
}

impl Default for GenericEquivalence {
    fn default() -> Self {
        Self::new()
    }
}

impl Theory for GenericEquivalence {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    fn validate_t_forall(&self, m: &FinStructure) -> Vec<Violation> {
        let mut out = Vec::new();
        for e in m.universe() {
            if !m.holds_at(0, &[e, e]) {
                out.push(Violation {
                    axiom: "reflexive".into(),
                    tuple: vec![e],
                });
            }
        }
        for t in m.relation_at(0) {
            let (a, b) = (t[0], t[1]);
            if !m.holds_at(0, &[b, a]) {
                out.push(Violation {
                    axiom: "symmetric".into(),
                    tuple: t.clone(),
                });
            }
            for c in neighbors(m, b) {
                if !m.holds_at(0, &[a, c]) {
                    out.push(Violation {
                        axiom: "transitive".into(),
                        tuple: vec![a, b, c],
                    });
                }
            }
        }
        out
    }

    /// Join the class of one of the other elements, or start a new class.
    fn attachments(&self, local: &FinStructure, new: ElemId) -> Vec<Attachment> {
        let mut seen: BTreeSet<ElemId> = BTreeSet::new();
        let mut out = Vec::new();
        for e in local.universe().filter(|e| *e != new) {
            if seen.contains(&e) {
                continue;
            }
            let class: Vec<ElemId> = Self::class_of(local, e).into_iter().collect();
            seen.extend(class.iter().copied());
            let mut att = vec![(0, vec![new, new])];
            for c in &class {
                att.push((0, vec![new, *c]));
                att.push((0, vec![*c, new]));
            }
            out.push(att);
        }
        out.push(vec![(0, vec![new, new])]);
        out
    }

    /// A new element related to an old one joins that element's whole class.
    fn complete(&self, m: &FinStructure, delta: &mut ExtensionDelta) {
        let mut extra = Vec::new();
        for (_, t) in &delta.new_tuples {
            let (a, b) = (t[0], t[1]);
            if !m.contains(a) && m.contains(b) {
                for c in Self::class_of(m, b) {
                    extra.push(("E".to_string(), vec![a, c]));
                    extra.push(("E".to_string(), vec![c, a]));
                }
            }
        }
        delta.new_tuples.extend(extra);
    }
}
