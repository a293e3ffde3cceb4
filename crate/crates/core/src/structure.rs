//! Finite relational structures carrying a least-level map.
//!
//! An element `e` belongs to `V_α` iff `level(e) <= α`, so the level sets form
//! a chain by construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::formula::{LevelOrdinal, Signature};

/// Element identifier. Ids are assigned in increasing order and never reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElemId(pub u32);

impl fmt::Display for ElemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl std::str::FromStr for ElemId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().strip_prefix('e').unwrap_or(s.trim()).parse().map(ElemId)
    }
}

pub type Tuple = Vec<ElemId>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("unknown relation symbol `{0}`")]
    UnknownRelation(String),
    #[error("relation `{symbol}` has arity {expected}, got a tuple of length {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("element {0} is not in the universe")]
    UnknownElement(ElemId),
    #[error("element {0} already exists")]
    DuplicateElement(ElemId),
    #[error("delta tuple {symbol}{tuple:?} lies entirely in the old universe")]
    OldTuple { symbol: String, tuple: Tuple },
    #[error("malformed structure document: {0}")]
    Document(String),
}

/// A finite structure for a relational signature plus level predicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinStructure {
    signature: Signature,
    levels: BTreeMap<ElemId, LevelOrdinal>,
    /// Indexed by the signature's symbol order.
    relations: Vec<BTreeSet<Tuple>>,
}

impl FinStructure {
    pub fn new(signature: Signature) -> Self {
        let relations = vec![BTreeSet::new(); signature.len()];
        FinStructure {
            signature,
            levels: BTreeMap::new(),
            relations,
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Elements in increasing id order.
    pub fn universe(&self) -> impl Iterator<Item = ElemId> + '_ {
        self.levels.keys().copied()
    }

    pub fn elements(&self) -> Vec<ElemId> {
        self.universe().collect()
    }

    pub fn contains(&self, e: ElemId) -> bool {
        self.levels.contains_key(&e)
    }

    pub fn level(&self, e: ElemId) -> Option<LevelOrdinal> {
        self.levels.get(&e).copied()
    }

    pub fn levels(&self) -> &BTreeMap<ElemId, LevelOrdinal> {
        &self.levels
    }

    /// `V_α`: elements whose least level is at most `alpha`, in id order.
    pub fn v_set(&self, alpha: LevelOrdinal) -> Vec<ElemId> {
        self.levels
            .iter()
            .filter(|(_, l)| **l <= alpha)
            .map(|(e, _)| *e)
            .collect()
    }

    pub fn in_level(&self, e: ElemId, alpha: LevelOrdinal) -> bool {
        self.level(e).is_some_and(|l| l <= alpha)
    }

    /// The id the next new element receives.
    pub fn next_id(&self) -> ElemId {
        self.levels
            .keys()
            .next_back()
            .map_or(ElemId(0), |e| ElemId(e.0 + 1))
    }

    pub fn holds(&self, symbol: &str, tuple: &[ElemId]) -> bool {
        self.signature
            .index_of(symbol)
            .is_some_and(|i| self.relations[i].contains(tuple))
    }

    /// Membership by relation index (signature order).
    #[inline]
    pub fn holds_at(&self, relation: usize, tuple: &[ElemId]) -> bool {
        self.relations[relation].contains(tuple)
    }

    pub fn tuples(&self, symbol: &str) -> Option<&BTreeSet<Tuple>> {
        self.signature.index_of(symbol).map(|i| &self.relations[i])
    }

    pub fn relation_at(&self, relation: usize) -> &BTreeSet<Tuple> {
        &self.relations[relation]
    }

    pub fn fact_count(&self) -> usize {
        self.relations.iter().map(BTreeSet::len).sum()
    }

    pub fn add_element(&mut self, e: ElemId, level: LevelOrdinal) -> Result<(), StructureError> {
        if self.levels.insert(e, level).is_some() {
            return Err(StructureError::DuplicateElement(e));
        }
        Ok(())
    }

    /// Adds an element with the next free id.
    pub fn push_element(&mut self, level: LevelOrdinal) -> ElemId {
        let e = self.next_id();
        self.levels.insert(e, level);
        e
    }

    pub fn add_fact(&mut self, symbol: &str, tuple: &[ElemId]) -> Result<bool, StructureError> {
        let i = self.check_fact(symbol, tuple)?;
        Ok(self.relations[i].insert(tuple.to_vec()))
    }

    fn check_fact(&self, symbol: &str, tuple: &[ElemId]) -> Result<usize, StructureError> {
        let i = self
            .signature
            .index_of(symbol)
            .ok_or_else(|| StructureError::UnknownRelation(symbol.to_string()))?;
        let arity = self.signature.arity(symbol).unwrap_or(0);
        if arity != tuple.len() {
            return Err(StructureError::Arity {
                symbol: symbol.to_string(),
                expected: arity,
                found: tuple.len(),
            });
        }
        if let Some(e) = tuple.iter().find(|e| !self.contains(**e)) {
            return Err(StructureError::UnknownElement(*e));
        }
        Ok(i)
    }

    /// Overwrites the level of an existing element. Only for building test
    /// fixtures; extensions never change old levels.
    pub fn set_level(&mut self, e: ElemId, level: LevelOrdinal) -> Result<(), StructureError> {
        match self.levels.get_mut(&e) {
            Some(l) => {
                *l = level;
                Ok(())
            }
            None => Err(StructureError::UnknownElement(e)),
        }
    }

    /// Applies an extension delta, returning the extended structure.
    pub fn apply_delta(&self, delta: &ExtensionDelta) -> Result<FinStructure, StructureError> {
        let mut out = self.clone();
        out.extend(delta)?;
        Ok(out)
    }

    /// In-place form of [`FinStructure::apply_delta`]. On error the structure
    /// is left unchanged.
    pub fn extend(&mut self, delta: &ExtensionDelta) -> Result<(), StructureError> {
        let mut fresh = BTreeSet::new();
        for (e, _) in &delta.new_elements {
            if self.contains(*e) || !fresh.insert(*e) {
                return Err(StructureError::DuplicateElement(*e));
            }
        }
        let mut facts = Vec::with_capacity(delta.new_tuples.len());
        for (symbol, tuple) in &delta.new_tuples {
            if tuple.iter().all(|e| self.contains(*e)) {
                return Err(StructureError::OldTuple {
                    symbol: symbol.clone(),
                    tuple: tuple.clone(),
                });
            }
            let i = self
                .signature
                .index_of(symbol)
                .ok_or_else(|| StructureError::UnknownRelation(symbol.to_string()))?;
            let arity = self.signature.arity(symbol).unwrap_or(0);
            if arity != tuple.len() {
                return Err(StructureError::Arity {
                    symbol: symbol.clone(),
                    expected: arity,
                    found: tuple.len(),
                });
            }
            if let Some(e) = tuple.iter().find(|e| !self.contains(**e) && !fresh.contains(*e)) {
                return Err(StructureError::UnknownElement(*e));
            }
            facts.push((i, tuple.clone()));
        }
        self.levels.extend(delta.new_elements.iter().copied());
        for (i, t) in facts {
            self.relations[i].insert(t);
        }
        Ok(())
    }

    /// The induced substructure on `keep` (elements not present are ignored).
    pub fn restrict(&self, keep: &BTreeSet<ElemId>) -> FinStructure {
        let levels = self
            .levels
            .iter()
            .filter(|(e, _)| keep.contains(e))
            .map(|(e, l)| (*e, *l))
            .collect();
        let relations = self
            .relations
            .iter()
            .map(|r| {
                r.iter()
                    .filter(|t| t.iter().all(|e| keep.contains(e)))
                    .cloned()
                    .collect()
            })
            .collect();
        FinStructure {
            signature: self.signature.clone(),
            levels,
            relations,
        }
    }

    /// True iff `self` is an induced substructure of `other` with the same
    /// levels on the shared elements.
    pub fn is_substructure_of(&self, other: &FinStructure) -> bool {
        if self.signature != other.signature {
            return false;
        }
        if self
            .levels
            .iter()
            .any(|(e, l)| other.level(*e) != Some(*l))
        {
            return false;
        }
        let keep: BTreeSet<ElemId> = self.universe().collect();
        other.restrict(&keep).relations == self.relations
    }

    /// Copy without the level map: every element at level 0.
    pub fn flatten_levels(&self) -> FinStructure {
        let mut out = self.clone();
        for l in out.levels.values_mut() {
            *l = LevelOrdinal::Fin(0);
        }
        out
    }

    pub fn to_document(&self) -> StructureDoc {
        StructureDoc {
            signature: self.signature.clone(),
            elements: self
                .levels
                .iter()
                .map(|(e, l)| ElementDoc { id: *e, level: *l })
                .collect(),
            relations: self
                .signature
                .relations()
                .zip(&self.relations)
                .map(|((s, _), r)| (s.to_string(), r.iter().cloned().collect()))
                .collect(),
        }
    }

    pub fn from_document(doc: &StructureDoc) -> Result<FinStructure, StructureError> {
        let mut m = FinStructure::new(doc.signature.clone());
        for el in &doc.elements {
            m.add_element(el.id, el.level)?;
        }
        for (symbol, tuples) in &doc.relations {
            if doc.signature.arity(symbol).is_none() {
                return Err(StructureError::UnknownRelation(symbol.clone()));
            }
            for t in tuples {
                m.add_fact(symbol, t)?;
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("structure documents serialize")
    }

    pub fn from_json(text: &str) -> Result<FinStructure, StructureError> {
        let doc: StructureDoc =
            serde_json::from_str(text).map_err(|e| StructureError::Document(e.to_string()))?;
        FinStructure::from_document(&doc)
    }
}

/// Serialized form of a [`FinStructure`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureDoc {
    pub signature: Signature,
    pub elements: Vec<ElementDoc>,
    pub relations: BTreeMap<String, Vec<Tuple>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementDoc {
    pub id: ElemId,
    pub level: LevelOrdinal,
}

impl Serialize for FinStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_document().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FinStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = StructureDoc::deserialize(d)?;
        FinStructure::from_document(&doc).map_err(serde::de::Error::custom)
    }
}

/// New elements and the new facts that mention them.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExtensionDelta {
    pub new_elements: Vec<(ElemId, LevelOrdinal)>,
    pub new_tuples: Vec<(String, Tuple)>,
}

impl ExtensionDelta {
    pub fn is_empty(&self) -> bool {
        self.new_elements.is_empty() && self.new_tuples.is_empty()
    }

    /// Sorts tuples into a canonical order.
    pub fn canonicalize(&mut self) {
        self.new_elements.sort();
        self.new_tuples.sort();
        self.new_tuples.dedup();
    }
}
