//! Indices of the level chain, i.e. ordinals below ω+ω.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// An ordinal below ω+ω: either a finite level `Fin(n)` or `OmegaPlus(n)` (ω+n).
///
/// The derived ordering is the ordinal ordering: every `Fin` level sits below
/// every `OmegaPlus` level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "tag", content = "index")]
pub enum LevelOrdinal {
    Fin(u32),
    OmegaPlus(u32),
}

impl LevelOrdinal {
    /// The level ω itself.
    pub const OMEGA: LevelOrdinal = LevelOrdinal::OmegaPlus(0);

    pub fn successor(self) -> LevelOrdinal {
        match self {
            LevelOrdinal::Fin(n) => LevelOrdinal::Fin(n + 1),
            LevelOrdinal::OmegaPlus(n) => LevelOrdinal::OmegaPlus(n + 1),
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, LevelOrdinal::Fin(_))
    }

    pub fn index(self) -> u32 {
        match self {
            LevelOrdinal::Fin(n) | LevelOrdinal::OmegaPlus(n) => n,
        }
    }
}

impl fmt::Display for LevelOrdinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelOrdinal::Fin(n) => write!(f, "{n}"),
            LevelOrdinal::OmegaPlus(0) => write!(f, "w"),
            LevelOrdinal::OmegaPlus(n) => write!(f, "w+{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid level `{0}` (expected a natural number, `w`, or `w+N`)")]
pub struct LevelParseError(pub String);

impl FromStr for LevelOrdinal {
    type Err = LevelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || LevelParseError(s.to_string());
        if let Some(rest) = t.strip_prefix('w') {
            let rest = rest.trim();
            if rest.is_empty() {
                return Ok(LevelOrdinal::OMEGA);
            }
            let n = rest
                .strip_prefix('+')
                .ok_or_else(err)?
                .trim()
                .parse()
                .map_err(|_| err())?;
            Ok(LevelOrdinal::OmegaPlus(n))
        } else {
            t.parse().map(LevelOrdinal::Fin).map_err(|_| err())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn level() -> impl Strategy<Value = LevelOrdinal> {
        prop_oneof![
            (0u32..50).prop_map(LevelOrdinal::Fin),
            (0u32..50).prop_map(LevelOrdinal::OmegaPlus)
        ]
    }

    #[test]
    fn finite_levels_sit_below_omega() {
        assert!(LevelOrdinal::Fin(1_000_000) < LevelOrdinal::OMEGA);
        assert!(LevelOrdinal::Fin(2) < LevelOrdinal::Fin(3));
        assert!(LevelOrdinal::OmegaPlus(1) < LevelOrdinal::OmegaPlus(4));
    }

    #[test]
    fn successor_stays_in_block() {
        assert_eq!(LevelOrdinal::Fin(4).successor(), LevelOrdinal::Fin(5));
        assert_eq!(LevelOrdinal::OMEGA.successor(), LevelOrdinal::OmegaPlus(1));
    }

    #[test]
    fn text_forms() {
        assert_eq!("7".parse::<LevelOrdinal>().unwrap(), LevelOrdinal::Fin(7));
        assert_eq!("w".parse::<LevelOrdinal>().unwrap(), LevelOrdinal::OMEGA);
        assert_eq!("w+3".parse::<LevelOrdinal>().unwrap(), LevelOrdinal::OmegaPlus(3));
        assert!("w3".parse::<LevelOrdinal>().is_err());
        assert!("-1".parse::<LevelOrdinal>().is_err());
    }

    #[test]
    fn serde_shape() {
        let s = serde_json::to_string(&LevelOrdinal::OmegaPlus(2)).unwrap();
        assert_eq!(s, r#"{"tag":"OmegaPlus","index":2}"#);
    }

    proptest! {
        #[test]
        fn successor_is_strictly_above(l in level()) {
            prop_assert!(l < l.successor());
            prop_assert_eq!(l.is_finite(), l.successor().is_finite());
        }

        #[test]
        fn display_parses_back(l in level()) {
            prop_assert_eq!(l.to_string().parse::<LevelOrdinal>().unwrap(), l);
        }
    }
}
