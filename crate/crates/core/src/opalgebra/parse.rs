//! Operator-string grammar:
//!
//! ```text
//! expression := term (('+' | '-') term)*
//! term       := [complex-literal '*'] factor+
//! factor     := ('phi' | 'a' | 'adag') '[' ident ']'
//! ```
//!
//! Whitespace between tokens is ignored and a leading sign is accepted on the
//! first term. A complex literal is a real number (`2`, `-0.5e-3` after a
//! sign), an imaginary number (`2i`, `i`), or a parenthesised sum such as
//! `(1.5-2i)`. Function names register in order of first appearance.

use num_complex::Complex64;

use super::{FnIndex, FunctionRegistry, Letter, OperatorExpression, OperatorWord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Phi,
    A,
    Adag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub kind: FactorKind,
    pub index: FnIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTerm {
    pub coefficient: Complex64,
    pub factors: Vec<Factor>,
}

/// Syntax tree of an operator string, before expansion into words.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedExpression {
    pub terms: Vec<ParsedTerm>,
}

impl ParsedExpression {
    /// Expands products of binomials φ = a† + a into canonical words.
    pub fn to_expression(&self) -> OperatorExpression {
        let mut out = OperatorExpression::zero();
        for term in &self.terms {
            let mut partial: Vec<Vec<Letter>> = vec![Vec::new()];
            for f in &term.factors {
                let choices: &[Letter] = &match f.kind {
                    FactorKind::Phi => vec![Letter::create(f.index), Letter::annihilate(f.index)],
                    FactorKind::A => vec![Letter::annihilate(f.index)],
                    FactorKind::Adag => vec![Letter::create(f.index)],
                };
                partial = partial
                    .into_iter()
                    .flat_map(|w| {
                        choices.iter().map(move |&l| {
                            let mut w = w.clone();
                            w.push(l);
                            w
                        })
                    })
                    .collect();
            }
            for letters in partial {
                out.add_term(OperatorWord::new(letters), term.coefficient);
            }
        }
        out
    }

    pub fn max_factors(&self) -> usize {
        self.terms.iter().map(|t| t.factors.len()).max().unwrap_or(0)
    }
}

/// Parses `text` into a syntax tree, registering names in `registry`.
pub fn parse(text: &str, registry: &mut FunctionRegistry) -> Result<ParsedExpression> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        registry,
    };
    p.expression()
}

/// Parses and expands `text` into an operator expression.
pub fn parse_expression(text: &str, registry: &mut FunctionRegistry) -> Result<OperatorExpression> {
    Ok(parse(text, registry)?.to_expression())
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    registry: &'a mut FunctionRegistry,
}

impl Parser<'_> {
    fn err<T>(&self, at: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: at + 1,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Some(c) => format!("'{c}'"),
            None => "end of input".to_owned(),
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(self.pos, format!("expected '{c}', found {}", self.describe()))
        }
    }

    fn expression(&mut self) -> Result<ParsedExpression> {
        let mut terms = Vec::new();
        self.skip_ws();
        let mut sign = 1.0;
        if let Some(c @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            if c == '-' {
                sign = -1.0;
            }
        }
        loop {
            let mut t = self.term()?;
            t.coefficient *= sign;
            terms.push(t);
            self.skip_ws();
            match self.peek() {
                None => break,
                Some('+') => sign = 1.0,
                Some('-') => sign = -1.0,
                Some(_) => {
                    return self.err(self.pos, format!("expected '+', '-' or end of input, found {}", self.describe()))
                }
            }
            self.pos += 1;
        }
        Ok(ParsedExpression { terms })
    }

    fn term(&mut self) -> Result<ParsedTerm> {
        self.skip_ws();
        let mut coefficient = Complex64::new(1.0, 0.0);
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' || c == '(' => {
                coefficient = self.literal()?;
                self.expect('*')?;
            }
            Some('i') => {
                let save = self.pos;
                self.pos += 1;
                let word_continues = self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_');
                self.skip_ws();
                if !word_continues && self.peek() == Some('*') {
                    self.pos += 1;
                    coefficient = Complex64::new(0.0, 1.0);
                } else {
                    self.pos = save;
                }
            }
            _ => {}
        }
        let mut factors = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(c) if c.is_alphabetic() => factors.push(self.factor()?),
                _ => break,
            }
        }
        if factors.is_empty() {
            return self.err(self.pos, format!("expected a factor (phi, a or adag), found {}", self.describe()));
        }
        Ok(ParsedTerm { coefficient, factors })
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn factor(&mut self) -> Result<Factor> {
        let start = self.pos;
        let kw = self.word();
        let kind = match kw.as_str() {
            "phi" => FactorKind::Phi,
            "a" => FactorKind::A,
            "adag" => FactorKind::Adag,
            _ => return self.err(start, format!("unknown factor keyword '{kw}'")),
        };
        self.expect('[')?;
        self.skip_ws();
        let name_at = self.pos;
        let name = self.word();
        if name.is_empty() {
            return self.err(name_at, format!("expected a function name, found {}", self.describe()));
        }
        self.expect(']')?;
        let index = self.registry.intern(&name);
        Ok(Factor { kind, index })
    }

    fn literal(&mut self) -> Result<Complex64> {
        if self.peek() == Some('(') {
            self.pos += 1;
            let mut value = Complex64::new(0.0, 0.0);
            let mut first = true;
            loop {
                self.skip_ws();
                let mut sign = 1.0;
                match self.peek() {
                    Some(')') if !first => {
                        self.pos += 1;
                        return Ok(value);
                    }
                    Some('+') => self.pos += 1,
                    Some('-') => {
                        sign = -1.0;
                        self.pos += 1
                    }
                    _ if first => {}
                    _ => return self.err(self.pos, format!("expected '+', '-' or ')', found {}", self.describe())),
                }
                self.skip_ws();
                value += sign * self.component()?;
                first = false;
            }
        }
        self.component()
    }

    /// A real number with optional `i` suffix, or a bare `i`.
    fn component(&mut self) -> Result<Complex64> {
        if self.peek() == Some('i') {
            self.pos += 1;
            return Ok(Complex64::new(0.0, 1.0));
        }
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some('.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return self.err(start, format!("expected a number, found {}", self.describe()));
        }
        if let Some('e' | 'E') = self.peek() {
            let save = self.pos;
            self.pos += 1;
            if let Some('+' | '-') = self.peek() {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let x: f64 = match text.parse() {
            Ok(x) => x,
            Err(_) => return self.err(start, format!("malformed number '{text}'")),
        };
        if self.peek() == Some('i') {
            self.pos += 1;
            Ok(Complex64::new(0.0, x))
        } else {
            Ok(Complex64::new(x, 0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(s: &str) -> (ParsedExpression, FunctionRegistry) {
        let mut r = FunctionRegistry::new();
        let p = parse(s, &mut r).unwrap_or_else(|e| panic!("{s}: {e}"));
        (p, r)
    }

    fn syntax_pos(s: &str) -> usize {
        let mut r = FunctionRegistry::new();
        match parse(s, &mut r) {
            Err(Error::Syntax { position, .. }) => position,
            other => panic!("{s}: expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn product_of_two_fields_has_four_terms() {
        let mut r = FunctionRegistry::new();
        let e = parse_expression("phi[f1] phi[f2]", &mut r).unwrap();
        assert_eq!(e.len(), 4);
        assert_eq!(r.index_of("f1"), Some(FnIndex(1)));
        assert_eq!(r.index_of("f2"), Some(FnIndex(2)));
    }

    #[test]
    fn adjacent_factors_without_spaces() {
        let mut r = FunctionRegistry::new();
        let e = parse_expression("a[g]adag[f]", &mut r).unwrap();
        assert_eq!(e.len(), 1);
        let (w, _) = e.terms().next().unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.display_with(&r).to_string(), "a[g] adag[f]");
    }

    #[test]
    fn unclosed_bracket_reports_end_column() {
        assert_eq!(syntax_pos("phi[f1"), 7);
    }

    #[test]
    fn unknown_keyword() {
        let mut r = FunctionRegistry::new();
        match parse("phi[f] psi[g]", &mut r) {
            Err(Error::Syntax { position, message }) => {
                assert_eq!(position, 8);
                assert!(message.contains("psi"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coefficients() {
        let (p, _) = parse_ok("2*phi[f] - 0.5e1 * a[g] + (1-2i)*adag[f] + i*a[h] + 3i*phi[f]");
        let cs: Vec<Complex64> = p.terms.iter().map(|t| t.coefficient).collect();
        assert_eq!(
            cs,
            vec![
                Complex64::new(2.0, 0.0),
                Complex64::new(-5.0, 0.0),
                Complex64::new(1.0, -2.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 3.0),
            ]
        );
        let (p, _) = parse_ok("-adag[x]");
        assert_eq!(p.terms[0].coefficient, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn whitespace_is_insignificant() {
        let (a, _) = parse_ok("  phi [ f1 ]phi[f2]  +  2 * a[ f1 ] ");
        let (b, _) = parse_ok("phi[f1]phi[f2]+2*a[f1]");
        assert_eq!(a, b);
    }

    #[test]
    fn a_function_named_i_is_fine() {
        let (p, r) = parse_ok("a[i] adag[i]");
        assert_eq!(p.terms[0].factors.len(), 2);
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn error_positions() {
        assert_eq!(syntax_pos(""), 1);
        assert_eq!(syntax_pos("phi[]"), 5);
        assert_eq!(syntax_pos("2 phi[f]"), 3);
        assert_eq!(syntax_pos("phi[f] +"), 9);
        assert_eq!(syntax_pos("phi[f] * phi[g]"), 8);
        assert_eq!(syntax_pos("(1+)*phi[f]"), 4);
    }
}
