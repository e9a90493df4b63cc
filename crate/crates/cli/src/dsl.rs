//! Text syntax for potentials and observables.
//!
//! ```text
//! poly   ::= term (('+' | '-') term)*
//! term   ::= coeff ('*'? factor ('*' factor)*)? | factor ('*' factor)*
//! coeff  ::= number ('/' number)? 'i'? | 'i'
//! factor ::= 'X' digit+ ('^' int)?
//! ```
//!
//! Whitespace between tokens is ignored. Decimals become exact rationals.

use std::fmt;

use mme_core::master::{MasterError, Potential, Word};
use mme_core::ncpoly::{Color, Monomial, NCPoly};
use mme_core::rational::{format_q, parse_rational};
use mme_core::Q;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("not trace self-adjoint: no matching term for {0}")]
    SelfAdjoint(String),
    #[error("coefficient of {0} is not real")]
    NotReal(String),
    #[error("color {color} outside 1..={d}")]
    Color { color: Color, d: usize },
}

/// A coefficient is purely real or purely imaginary; mixed values are written as two terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coeff {
    Real(Q),
    Imag(Q),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: Coeff,
    pub word: Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PotentialSpec {
    pub terms: Vec<Term>,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Parse { offset: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<Q, DslError> {
        self.skip_ws();
        let start = self.pos;
        let text = self.take_while(|c| c.is_ascii_digit() || c == '.');
        parse_rational(text).map_err(|e| DslError::Parse { offset: start, message: e.to_string() })
    }

    fn coeff(&mut self) -> Result<Option<Coeff>, DslError> {
        self.skip_ws();
        match self.peek() {
            Some('i') => {
                self.pos += 1;
                Ok(Some(Coeff::Imag(Q::one())))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let mut value = self.number()?;
                if self.eat('/') {
                    let at = self.pos;
                    let den = self.number()?;
                    if den.is_zero() {
                        return Err(DslError::Parse { offset: at, message: "zero denominator".into() });
                    }
                    value /= den;
                }
                self.skip_ws();
                if self.peek() == Some('i') {
                    self.pos += 1;
                    Ok(Some(Coeff::Imag(value)))
                } else {
                    Ok(Some(Coeff::Real(value)))
                }
            }
            _ => Ok(None),
        }
    }

    fn factor(&mut self, word: &mut Word) -> Result<(), DslError> {
        self.skip_ws();
        if self.peek() != Some('X') {
            return self.err("expected a factor X<digits>");
        }
        self.pos += 1;
        let at = self.pos;
        let digits = self.take_while(|c| c.is_ascii_digit());
        let color: Color = match digits.parse() {
            Ok(c) if c >= 1 => c,
            _ => return Err(DslError::Parse { offset: at, message: "expected a color index >= 1".into() }),
        };
        let mut power = 1usize;
        if self.eat('^') {
            self.skip_ws();
            let at = self.pos;
            power = self
                .take_while(|c| c.is_ascii_digit())
                .parse()
                .map_err(|_| DslError::Parse { offset: at, message: "expected an integer exponent".into() })?;
        }
        word.extend(std::iter::repeat_n(color, power));
        Ok(())
    }

    fn term(&mut self, negative: bool) -> Result<Term, DslError> {
        let coeff = self.coeff()?;
        let mut word = Word::new();
        self.skip_ws();
        let has_factor = match coeff {
            None => true,
            Some(_) => self.eat('*') || self.peek() == Some('X'),
        };
        if has_factor {
            self.factor(&mut word)?;
            while self.eat('*') {
                self.factor(&mut word)?;
            }
        }
        let mut coeff = coeff.unwrap_or(Coeff::Real(Q::one()));
        if negative {
            coeff = match coeff {
                Coeff::Real(c) => Coeff::Real(-c),
                Coeff::Imag(c) => Coeff::Imag(-c),
            };
        }
        Ok(Term { coeff, word })
    }

    fn poly(&mut self) -> Result<PotentialSpec, DslError> {
        let mut terms = Vec::new();
        let mut negative = self.eat('-') || self.eat('−');
        if !negative {
            self.eat('+');
        }
        loop {
            terms.push(self.term(negative)?);
            if self.eat('+') {
                negative = false;
            } else if self.eat('-') || self.eat('−') {
                negative = true;
            } else {
                break;
            }
        }
        self.skip_ws();
        if self.pos < self.src.len() {
            return self.err("unexpected trailing input");
        }
        Ok(PotentialSpec { terms })
    }
}

pub fn parse_potential(src: &str) -> Result<PotentialSpec, DslError> {
    Parser { src, pos: 0 }.poly()
}

fn word_string(w: &[Color]) -> String {
    let mut parts = Vec::new();
    let mut k = 0;
    while k < w.len() {
        let run = w[k..].iter().take_while(|&&c| c == w[k]).count();
        parts.push(if run == 1 { format!("X{}", w[k]) } else { format!("X{}^{run}", w[k]) });
        k += run;
    }
    parts.join("*")
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            let (c, imag) = match &t.coeff {
                Coeff::Real(c) => (c, ""),
                Coeff::Imag(c) => (c, "i"),
            };
            let sign = if c.is_negative() { "-" } else { "+" };
            match (k, sign) {
                (0, "-") => write!(f, "-")?,
                (0, _) => {}
                _ => write!(f, " {sign} ")?,
            }
            let mag = c.abs();
            let body = word_string(&t.word);
            match (mag.is_one() && imag.is_empty(), body.is_empty()) {
                (true, false) => write!(f, "{body}")?,
                (_, true) => write!(f, "{}{imag}", format_q(&mag))?,
                (false, false) => write!(f, "{}{imag}*{body}", format_q(&mag))?,
            }
        }
        Ok(())
    }
}

impl PotentialSpec {
    pub fn max_color(&self) -> usize {
        self.terms.iter().flat_map(|t| t.word.iter()).copied().max().unwrap_or(0) as usize
    }

    fn check_colors(&self, d: usize) -> Result<(), DslError> {
        match self.terms.iter().flat_map(|t| t.word.iter()).find(|&&c| c as usize > d) {
            Some(&color) => Err(DslError::Color { color, d }),
            None => Ok(()),
        }
    }

    /// The trace self-adjoint potential in `d` colours.
    pub fn to_potential(&self, d: usize) -> Result<Potential, DslError> {
        self.check_colors(d)?;
        let terms = self
            .terms
            .iter()
            .map(|t| match &t.coeff {
                Coeff::Real(c) => ((c.clone(), Q::zero()), t.word.clone()),
                Coeff::Imag(c) => ((Q::zero(), c.clone()), t.word.clone()),
            })
            .collect();
        Potential::from_complex(terms, d).map_err(|e| match e {
            MasterError::NotSelfAdjoint(m) => DslError::SelfAdjoint(m),
            MasterError::ComplexCoefficient(m) => DslError::NotReal(m),
            MasterError::BadColor { color, d } => DslError::Color { color, d },
            other => DslError::SelfAdjoint(other.to_string()),
        })
    }

    /// An observable with real coefficients.
    pub fn to_observable(&self, d: usize) -> Result<NCPoly, DslError> {
        self.check_colors(d)?;
        let mut terms = Vec::new();
        for t in &self.terms {
            match &t.coeff {
                Coeff::Real(c) => terms.push((c.clone(), Monomial::base_word(&t.word))),
                Coeff::Imag(_) => return Err(DslError::NotReal(word_string(&t.word))),
            }
        }
        Ok(NCPoly::from_rational_terms(terms))
    }

    pub fn real_terms(&self) -> Result<Vec<(Q, Word)>, DslError> {
        self.terms
            .iter()
            .map(|t| match &t.coeff {
                Coeff::Real(c) => Ok((c.clone(), t.word.clone())),
                Coeff::Imag(_) => Err(DslError::NotReal(word_string(&t.word))),
            })
            .collect()
    }
}
