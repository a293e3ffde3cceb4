//! Recursive-descent parser for the formula text syntax.

use super::{Formula, LevelOrdinal, Signature, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown relation symbol `{symbol}` at byte {pos}")]
    UnknownRelation { symbol: String, pos: usize },
    #[error("relation `{symbol}` has arity {expected} but was applied to {found} argument(s) at byte {pos}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
        pos: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Amp,
    Bar,
    Bang,
    Eq,
    Plus,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some(t) = lx.next()? {
            out.push(t);
        }
        Ok(out)
    }

    fn next(&mut self) -> Result<Option<(Tok, usize)>, ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = bytes[start];
        let single = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            b'.' => Some(Tok::Dot),
            b'&' => Some(Tok::Amp),
            b'|' => Some(Tok::Bar),
            b'!' => Some(Tok::Bang),
            b'=' => Some(Tok::Eq),
            b'+' => Some(Tok::Plus),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok(Some((t, start)));
        }
        if c.is_ascii_alphanumeric() || c == b'_' {
            while self.pos < bytes.len()
                && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            return Ok(Some((Tok::Ident(self.src[start..self.pos].to_string()), start)));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseError::Syntax {
            pos: start,
            message: format!("unexpected character `{ch}`"),
        })
    }
}

struct Parser<'s> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    sig: &'s Signature,
}

/// Parses `text` and checks relation symbols and arities against `signature`.
pub fn parse(text: &str, signature: &Signature) -> Result<Formula, ParseError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        sig: signature,
    };
    let f = p.disj()?;
    if p.at < p.toks.len() {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(t) => format!("{t:?}"),
        };
        ParseError::Syntax {
            pos: self.pos(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expect(&mut self, t: Tok, wanted: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn ident(&mut self, wanted: &str) -> Result<(String, usize), ParseError> {
        match self.toks.get(self.at) {
            Some((Tok::Ident(s), p)) => {
                let out = (s.clone(), *p);
                self.at += 1;
                Ok(out)
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn var(&mut self) -> Result<Var, ParseError> {
        let (name, pos) = self.ident("a variable")?;
        if name == "exists" || name.as_bytes()[0].is_ascii_digit() {
            return Err(ParseError::Syntax {
                pos,
                message: format!("`{name}` is not a variable name"),
            });
        }
        Ok(Var::new(name))
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.conj()?;
        while self.peek() == Some(&Tok::Bar) {
            self.at += 1;
            f = Formula::or(f, self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.at += 1;
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.at += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Ident(s)) if s == "exists" => {
                self.at += 1;
                self.quantifier()
            }
            _ => self.atom(),
        }
    }

    fn quantifier(&mut self) -> Result<Formula, ParseError> {
        let mut vars = vec![self.var()?];
        let mut guard = None;
        loop {
            match self.peek() {
                Some(Tok::Dot) => {
                    self.at += 1;
                    break;
                }
                Some(Tok::Ident(s)) if s == "in" => {
                    self.at += 1;
                    let (v, pos) = self.ident("`V`")?;
                    if v != "V" {
                        return Err(ParseError::Syntax {
                            pos,
                            message: "expected `V` after `in`".into(),
                        });
                    }
                    self.expect(Tok::LParen, "`(`")?;
                    guard = Some(self.level()?);
                    self.expect(Tok::RParen, "`)`")?;
                    self.expect(Tok::Dot, "`.`")?;
                    break;
                }
                Some(Tok::Ident(_)) => vars.push(self.var()?),
                _ => return Err(self.unexpected("a bound variable or `.`")),
            }
        }
        let body = self.disj()?;
        Ok(Formula::Exists {
            vars,
            guard,
            body: Box::new(body),
        })
    }

    fn level(&mut self) -> Result<LevelOrdinal, ParseError> {
        let (word, pos) = self.ident("a level")?;
        let bad = || ParseError::Syntax {
            pos,
            message: format!("invalid level `{word}`"),
        };
        if word == "w" {
            if self.peek() == Some(&Tok::Plus) {
                self.at += 1;
                let (n, _) = self.ident("a natural number")?;
                let n = n.parse().map_err(|_| bad())?;
                return Ok(LevelOrdinal::OmegaPlus(n));
            }
            return Ok(LevelOrdinal::OMEGA);
        }
        word.parse().map(LevelOrdinal::Fin).map_err(|_| bad())
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.at += 1;
                let f = self.disj()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident(_)) => {
                let save = self.at;
                let (name, pos) = self.ident("an atom")?;
                match self.peek() {
                    Some(Tok::LParen) => {
                        self.at += 1;
                        let mut args = vec![self.var()?];
                        while self.peek() == Some(&Tok::Comma) {
                            self.at += 1;
                            args.push(self.var()?);
                        }
                        self.expect(Tok::RParen, "`,` or `)`")?;
                        match self.sig.arity(&name) {
                            None => Err(ParseError::UnknownRelation { symbol: name, pos }),
                            Some(a) if a != args.len() => Err(ParseError::Arity {
                                symbol: name,
                                expected: a,
                                found: args.len(),
                                pos,
                            }),
                            Some(_) => Ok(Formula::Rel { symbol: name, args }),
                        }
                    }
                    Some(Tok::Eq) => {
                        self.at = save;
                        let a = self.var()?;
                        self.expect(Tok::Eq, "`=`")?;
                        let b = self.var()?;
                        Ok(Formula::Eq(a, b))
                    }
                    _ => Err(self.unexpected("`(` or `=`")),
                }
            }
            _ => Err(self.unexpected("an atom, `!`, `exists` or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::random_qf;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig() -> Signature {
        Signature::new([("E", 2), ("P", 1), ("T", 3)])
    }

    fn v(s: &str) -> Var {
        Var::new(s)
    }

    #[test]
    fn conjunction_of_atom_and_equality() {
        let f = parse("E(x0,x1) & x0=x1", &sig()).unwrap();
        assert_eq!(
            f,
            Formula::and(
                Formula::rel("E", [v("x0"), v("x1")]),
                Formula::eq("x0", "x1")
            )
        );
    }

    #[test]
    fn arity_mismatch_reported() {
        let err = parse("E(x0)", &sig()).unwrap_err();
        assert!(matches!(err, ParseError::Arity { expected: 2, found: 1, pos: 0, .. }));
    }

    #[test]
    fn unknown_symbol_reported_with_position() {
        let err = parse("x=y & R(x)", &sig()).unwrap_err();
        assert_eq!(err, ParseError::UnknownRelation { symbol: "R".into(), pos: 6 });
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse("E(x,y) &", &sig()).unwrap_err() {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 8),
            e => panic!("{e:?}"),
        }
        assert!(matches!(parse("E(x,y))", &sig()), Err(ParseError::Syntax { pos: 6, .. })));
        assert!(matches!(parse("x # y", &sig()), Err(ParseError::Syntax { pos: 2, .. })));
    }

    #[test]
    fn precedence_and_scope() {
        let f = parse("!P(x) | P(y) & x=y", &sig()).unwrap();
        assert!(matches!(f, Formula::Or(..)));
        let g = parse("exists y z. E(x,y) & E(y,z)", &sig()).unwrap();
        match g {
            Formula::Exists { vars, guard: None, body } => {
                assert_eq!(vars.len(), 2);
                assert!(matches!(*body, Formula::And(..)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn guarded_quantifier() {
        let f = parse("exists y in V(w+2). E(x,y)", &sig()).unwrap();
        match &f {
            Formula::Exists { guard, .. } => assert_eq!(*guard, Some(LevelOrdinal::OmegaPlus(2))),
            _ => panic!(),
        }
        assert_eq!(f.to_string(), "exists y in V(w+2). E(x,y)");
    }

    #[test]
    fn printer_output_reparses() {
        for src in [
            "x0=x0",
            "!(x=y)",
            "(E(x,y) | x=y) & !P(x)",
            "E(x,y) & (E(y,x) & T(x,y,z))",
            "!(exists y. E(x,y)) | P(x)",
            "exists y. (exists z. E(y,z)) & P(y)",
        ] {
            let f = parse(src, &sig()).unwrap();
            let g = parse(&f.to_string(), &sig()).unwrap();
            assert_eq!(f, g, "{src} -> {f}");
        }
    }

    proptest! {
        #[test]
        fn round_trip_random(seed in any::<u64>(), size in 1usize..14) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vars = [v("x0"), v("x1"), v("y0")];
            let f = random_qf(&mut rng, &sig(), &vars, size);
            let text = f.to_string();
            let g = parse(&text, &sig()).unwrap();
            prop_assert_eq!(&f, &g);
            prop_assert_eq!(f.free_vars(), g.free_vars());
        }
    }
}
