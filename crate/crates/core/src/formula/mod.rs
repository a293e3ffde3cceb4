//! First-order formulas over a finite relational signature.
//!
//! The text syntax is deliberately small:
//!
//! ```text
//! formula  := disj
//! disj     := conj ('|' conj)*
//! conj     := unary ('&' unary)*
//! unary    := '!' unary | 'exists' var+ ['in' 'V' '(' level ')'] '.' formula | atom
//! atom     := '(' formula ')' | REL '(' var (',' var)* ')' | var '=' var
//! level    := N | 'w' | 'w+' N
//! ```
//!
//! `&` and `|` associate to the left and `exists` scopes as far right as
//! possible. The printer parenthesizes every compound operand, so printing and
//! re-parsing always yields the same tree.

mod gen;
mod level;
mod parse;
mod schedule;

pub use gen::random_qf;
pub use level::{LevelOrdinal, LevelParseError};
pub use parse::{parse, ParseError};
pub(crate) use schedule::odometer;
pub use schedule::{
    base_formula_stream, enumerate_schedule, recurrence_bound, schedule_coordinates, Schedule, ScheduleCoordinates,
    ScheduleEntry, Split,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Relation symbols with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature {
    relations: BTreeMap<String, usize>,
}

impl Signature {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<S: Into<String>>(relations: impl IntoIterator<Item = (S, usize)>) -> Self {
        Signature {
            relations: relations.into_iter().map(|(s, a)| (s.into(), a)).collect(),
        }
    }

    pub fn arity(&self, symbol: &str) -> Option<usize> {
        self.relations.get(symbol).copied()
    }

    /// Position of `symbol` in the (sorted) symbol order.
    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.relations.keys().position(|k| k == symbol)
    }

    /// Symbols and arities in sorted symbol order.
    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.relations.iter().map(|(s, a)| (s.as_str(), *a))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn max_arity(&self) -> usize {
        self.relations.values().copied().max().unwrap_or(0)
    }
}

/// A variable identifier such as `x0`, `y1` or `b`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn indexed(prefix: &str, index: usize) -> Self {
        Var(format!("{prefix}{index}"))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// Formula syntax tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Rel { symbol: String, args: Vec<Var> },
    Eq(Var, Var),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `guard` restricts the bound variables to a level of the chain; without
    /// a guard they range over the whole universe.
    Exists {
        vars: Vec<Var>,
        guard: Option<LevelOrdinal>,
        body: Box<Formula>,
    },
}

impl Formula {
    pub fn rel(symbol: impl Into<String>, args: impl IntoIterator<Item = Var>) -> Self {
        Formula::Rel {
            symbol: symbol.into(),
            args: args.into_iter().collect(),
        }
    }

    pub fn eq(a: impl Into<Var>, b: impl Into<Var>) -> Self {
        Formula::Eq(a.into(), b.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(vars: impl IntoIterator<Item = Var>, body: Formula) -> Self {
        Formula::Exists {
            vars: vars.into_iter().collect(),
            guard: None,
            body: Box::new(body),
        }
    }

    /// Left-nested conjunction; `None` for an empty iterator.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        parts.into_iter().reduce(Formula::and)
    }

    /// Number of syntax-tree nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Rel { .. } | Formula::Eq(..) => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
            Formula::Exists { body, .. } => 1 + body.size(),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Rel { .. } | Formula::Eq(..) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::Exists { .. } => false,
        }
    }

    /// An `exists` prefix (possibly empty) over a quantifier-free body.
    pub fn is_existential(&self) -> bool {
        match self {
            Formula::Exists { body, .. } => body.is_existential(),
            f => f.is_quantifier_free(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        let mut note = |v: &Var, bound: &Vec<Var>| {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        };
        match self {
            Formula::Rel { args, .. } => args.iter().for_each(|v| note(v, bound)),
            Formula::Eq(a, b) => {
                note(a, bound);
                note(b, bound);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists { vars, body, .. } => {
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// Checks every relation atom against the signature.
    pub fn check(&self, signature: &Signature) -> Result<(), ParseError> {
        match self {
            Formula::Rel { symbol, args } => match signature.arity(symbol) {
                None => Err(ParseError::UnknownRelation {
                    symbol: symbol.clone(),
                    pos: 0,
                }),
                Some(a) if a != args.len() => Err(ParseError::Arity {
                    symbol: symbol.clone(),
                    expected: a,
                    found: args.len(),
                    pos: 0,
                }),
                Some(_) => Ok(()),
            },
            Formula::Eq(..) => Ok(()),
            Formula::Not(f) => f.check(signature),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.check(signature)?;
                b.check(signature)
            }
            Formula::Exists { body, .. } => body.check(signature),
        }
    }

    /// Renames free occurrences of variables. Bound variables shadow the map.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Formula {
        let r = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
        match self {
            Formula::Rel { symbol, args } => Formula::Rel {
                symbol: symbol.clone(),
                args: args.iter().map(r).collect(),
            },
            Formula::Eq(a, b) => Formula::Eq(r(a), r(b)),
            Formula::Not(f) => Formula::not(f.rename(map)),
            Formula::And(a, b) => Formula::and(a.rename(map), b.rename(map)),
            Formula::Or(a, b) => Formula::or(a.rename(map), b.rename(map)),
            Formula::Exists { vars, guard, body } => {
                let mut inner = map.clone();
                for v in vars {
                    inner.remove(v);
                }
                Formula::Exists {
                    vars: vars.clone(),
                    guard: *guard,
                    body: Box::new(body.rename(&inner)),
                }
            }
        }
    }

    /// A normal form for syntactic comparison: nested `&`/`|` are flattened,
    /// operands sorted and deduplicated, and equalities oriented.
    pub fn normalized(&self) -> Normal {
        match self {
            Formula::Rel { symbol, args } => Normal::Rel(symbol.clone(), args.clone()),
            Formula::Eq(a, b) => {
                if a == b {
                    Normal::Eq(a.clone(), a.clone())
                } else if a < b {
                    Normal::Eq(a.clone(), b.clone())
                } else {
                    Normal::Eq(b.clone(), a.clone())
                }
            }
            Formula::Not(f) => Normal::Not(Box::new(f.normalized())),
            Formula::And(..) => {
                let mut parts = BTreeSet::new();
                self.flatten_and(&mut parts);
                Normal::And(parts)
            }
            Formula::Or(..) => {
                let mut parts = BTreeSet::new();
                self.flatten_or(&mut parts);
                Normal::Or(parts)
            }
            Formula::Exists { vars, guard, body } => {
                Normal::Exists(vars.clone(), *guard, Box::new(body.normalized()))
            }
        }
    }

    fn flatten_and(&self, out: &mut BTreeSet<Normal>) {
        match self {
            Formula::And(a, b) => {
                a.flatten_and(out);
                b.flatten_and(out);
            }
            f => {
                out.insert(f.normalized());
            }
        }
    }

    fn flatten_or(&self, out: &mut BTreeSet<Normal>) {
        match self {
            Formula::Or(a, b) => {
                a.flatten_or(out);
                b.flatten_or(out);
            }
            f => {
                out.insert(f.normalized());
            }
        }
    }
}

/// See [`Formula::normalized`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Normal {
    Rel(String, Vec<Var>),
    Eq(Var, Var),
    Not(Box<Normal>),
    And(BTreeSet<Normal>),
    Or(BTreeSet<Normal>),
    Exists(Vec<Var>, Option<LevelOrdinal>, Box<Normal>),
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(g: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match g {
                Formula::Rel { .. } | Formula::Eq(..) | Formula::Not(_) => write!(f, "{g}"),
                _ => write!(f, "({g})"),
            }
        }
        match self {
            Formula::Rel { symbol, args } => {
                write!(f, "{symbol}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Formula::Eq(a, b) => write!(f, "{a}={b}"),
            Formula::Not(g) => match **g {
                Formula::Rel { .. } | Formula::Not(_) => write!(f, "!{g}"),
                _ => write!(f, "!({g})"),
            },
            Formula::And(a, b) => {
                operand(a, f)?;
                f.write_str(" & ")?;
                operand(b, f)
            }
            Formula::Or(a, b) => {
                operand(a, f)?;
                f.write_str(" | ")?;
                operand(b, f)
            }
            Formula::Exists { vars, guard, body } => {
                f.write_str("exists")?;
                for v in vars {
                    write!(f, " {v}")?;
                }
                if let Some(g) = guard {
                    write!(f, " in V({g})")?;
                }
                write!(f, ". {body}")
            }
        }
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
