//! Experiment files.
//!
//! An experiment is a TOML document naming a plugin, the chain to build,
//! the definable sets to count and what to do with them:
//!
//! ```toml
//! plugin = "generic-equivalence"
//! stages = 30
//! schedule_budget = 128
//!
//! [comparator]
//! window = 10
//! bound = 2.0
//!
//! [[sets]]
//! name = "all"
//! formula = "x0 = x0"
//! vars = ["x0"]
//! cap = "w"
//!
//! [[sets]]
//! name = "class"
//! formula = "E(x0, y0)"
//! vars = ["x0"]
//! cap = "w"
//! params = { y0 = "first@0" }
//!
//! [[comparisons]]
//! left = "class"
//! right = "all"
//! expect = "diverges-neg"
//!
//! [[dividing]]
//! name = "class-divides"
//! phi = "E(x0, y0)"
//! x = ["x0"]
//! y = ["y0"]
//! b = ["first@0"]
//! psi = "all"
//! k = 2
//! l = 3
//! expect = "divides"
//! ```
//!
//! Parameters are element anchors: `e7` names an element by id, and
//! `first@α` / `last@α` the least / greatest id whose level is exactly `α`
//! in the structure the anchor is resolved against.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::construction::{AuditDetail, ChainParams};
use crate::dimension::{VerdictKind, DEFAULT_BOUND, DEFAULT_WINDOW};
use crate::dividing::{DropParams, Family};
use crate::eval::DefinableSet;
use crate::formula::{parse, LevelOrdinal, ParseError, Signature, Var};
use crate::structure::{ElemId, FinStructure};
use crate::theory::{available_plugins, plugin_by_name, Theory};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown plugin `{name}`; available: {}", available.join(", "))]
    UnknownPlugin { name: String, available: Vec<String> },
    #[error("{context}: {source}")]
    Formula { context: String, source: ParseError },
    #[error("unknown set `{0}`")]
    UnknownSet(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("bad anchor `{0}`; expected eN, first@LEVEL or last@LEVEL")]
    BadAnchor(String),
    #[error("anchor `{0}` matches no element")]
    Unresolved(String),
    #[error("{0}")]
    Invalid(String),
}

fn default_budget() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plugin: String,
    pub stages: usize,
    #[serde(default = "default_budget")]
    pub schedule_budget: usize,
    #[serde(default)]
    pub audit: AuditDetail,
    #[serde(default)]
    pub comparator: ComparatorConfig,
    #[serde(default)]
    pub sets: Vec<SetConfig>,
    #[serde(default)]
    pub comparisons: Vec<ComparisonConfig>,
    #[serde(default)]
    pub dividing: Vec<DividingConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparatorConfig {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_bound")]
    pub bound: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

fn default_bound() -> f64 {
    DEFAULT_BOUND
}

impl Default for ComparatorConfig {
    fn default() -> Self {
        ComparatorConfig {
            window: DEFAULT_WINDOW,
            bound: DEFAULT_BOUND,
            seed: 0,
        }
    }
}

impl ComparatorConfig {
    pub fn drop_params(&self) -> DropParams {
        DropParams {
            window: self.window,
            bound: self.bound,
            seed: self.seed,
            ..DropParams::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    pub name: String,
    pub formula: String,
    pub vars: Vec<String>,
    /// A level such as `3`, `w` or `w+1`; absent means no cap.
    #[serde(default)]
    pub cap: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub left: String,
    pub right: String,
    #[serde(default)]
    pub expect: Option<VerdictKind>,
}

impl ComparisonConfig {
    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}-vs-{}", self.left, self.right))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DividingExpectation {
    /// A certificate and a `DivergesNeg` candidate.
    Divides,
    /// No certificate.
    NoCertificate,
    /// Every candidate `Bounded`.
    AllBounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DividingConfig {
    pub name: String,
    pub phi: String,
    pub x: Vec<String>,
    pub y: Vec<String>,
    #[serde(default)]
    pub a: Vec<String>,
    pub b: Vec<String>,
    /// Name of the set playing `ψ(x̄, ā)`; `φ(x̄, b̄)` is counted with its cap.
    pub psi: String,
    pub k: usize,
    pub l: usize,
    #[serde(default)]
    pub expect: Option<DividingExpectation>,
}

/// An element reference resolved against a structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Anchor {
    Id(ElemId),
    First(LevelOrdinal),
    Last(LevelOrdinal),
}

impl std::str::FromStr for Anchor {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ConfigError::BadAnchor(s.to_string());
        if let Some((head, level)) = s.split_once('@') {
            let level: LevelOrdinal = level.trim().parse().map_err(|_| bad())?;
            return match head.trim() {
                "first" => Ok(Anchor::First(level)),
                "last" => Ok(Anchor::Last(level)),
                _ => Err(bad()),
            };
        }
        s.parse::<ElemId>().map(Anchor::Id).map_err(|_| bad())
    }
}

impl Anchor {
    pub fn resolve(&self, m: &FinStructure) -> Option<ElemId> {
        match self {
            Anchor::Id(e) => m.contains(*e).then_some(*e),
            Anchor::First(l) => m.universe().find(|e| m.level(*e) == Some(*l)),
            Anchor::Last(l) => m.universe().filter(|e| m.level(*e) == Some(*l)).last(),
        }
    }
}

pub fn resolve_anchor(text: &str, m: &FinStructure) -> Result<ElemId, ConfigError> {
    text.parse::<Anchor>()?
        .resolve(m)
        .ok_or_else(|| ConfigError::Unresolved(text.to_string()))
}

fn vars(names: &[String]) -> Vec<Var> {
    names.iter().map(|v| Var::new(v.trim())).collect()
}

fn level(text: &str) -> Result<LevelOrdinal, ConfigError> {
    text.parse()
        .map_err(|_| ConfigError::Invalid(format!("bad level `{text}`")))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn theory(&self) -> Result<Box<dyn Theory>, ConfigError> {
        plugin_by_name(&self.plugin).ok_or_else(|| ConfigError::UnknownPlugin {
            name: self.plugin.clone(),
            available: available_plugins().into_iter().map(String::from).collect(),
        })
    }

    pub fn chain_params(&self) -> ChainParams {
        ChainParams::new(self.stages)
            .budget(self.schedule_budget)
            .audit(self.audit)
    }

    /// Checks every reference and formula without building anything.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let theory = self.theory()?;
        let sig = theory.signature();
        if self.schedule_budget == 0 {
            return Err(ConfigError::Invalid("schedule_budget must be at least 1".into()));
        }
        if self.comparator.window < 2 {
            return Err(ConfigError::Invalid("comparator window must be at least 2".into()));
        }
        let mut names = BTreeSet::new();
        for s in &self.sets {
            if !names.insert(s.name.as_str()) {
                return Err(ConfigError::Duplicate(s.name.clone()));
            }
            s.template(sig)?;
            for a in s.params.values() {
                a.parse::<Anchor>()?;
            }
        }
        for c in &self.comparisons {
            for side in [&c.left, &c.right] {
                if !names.contains(side.as_str()) {
                    return Err(ConfigError::UnknownSet(side.clone()));
                }
            }
        }
        let mut experiments = BTreeSet::new();
        for d in &self.dividing {
            if !experiments.insert(d.name.as_str()) {
                return Err(ConfigError::Duplicate(d.name.clone()));
            }
            if !names.contains(d.psi.as_str()) {
                return Err(ConfigError::UnknownSet(d.psi.clone()));
            }
            d.family(sig)?;
            if d.b.len() != d.y.len() {
                return Err(ConfigError::Invalid(format!(
                    "{}: b has {} anchors for {} instance variables",
                    d.name,
                    d.b.len(),
                    d.y.len()
                )));
            }
            for a in d.a.iter().chain(&d.b) {
                a.parse::<Anchor>()?;
            }
        }
        Ok(())
    }

    pub fn set(&self, name: &str) -> Result<&SetConfig, ConfigError> {
        self.sets
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ConfigError::UnknownSet(name.to_string()))
    }
}

impl SetConfig {
    /// The set with its parameters still unbound.
    pub fn template(&self, sig: &Signature) -> Result<DefinableSet, ConfigError> {
        let formula = parse(&self.formula, sig).map_err(|source| ConfigError::Formula {
            context: format!("set `{}`", self.name),
            source,
        })?;
        let mut set = DefinableSet::new(formula, vars(&self.vars));
        if let Some(cap) = &self.cap {
            set = set.capped(level(cap)?);
        }
        Ok(set)
    }

    pub fn resolve(&self, sig: &Signature, m: &FinStructure) -> Result<DefinableSet, ConfigError> {
        let mut set = self.template(sig)?;
        for (v, anchor) in &self.params {
            set = set.with_param(Var::new(v.trim()), resolve_anchor(anchor, m)?);
        }
        Ok(set)
    }
}

impl DividingConfig {
    pub fn family(&self, sig: &Signature) -> Result<Family, ConfigError> {
        let formula = parse(&self.phi, sig).map_err(|source| ConfigError::Formula {
            context: format!("dividing experiment `{}`", self.name),
            source,
        })?;
        Ok(Family::new(formula, vars(&self.x), vars(&self.y)))
    }

    pub fn resolve_a(&self, m: &FinStructure) -> Result<Vec<ElemId>, ConfigError> {
        self.a.iter().map(|t| resolve_anchor(t, m)).collect()
    }

    pub fn resolve_b(&self, m: &FinStructure) -> Result<Vec<ElemId>, ConfigError> {
        self.b.iter().map(|t| resolve_anchor(t, m)).collect()
    }
}
