//! The free *-algebra generated by a†[i], a[i] over registered test
//! functions, with the commutation rules
//!
//! [a[g], a†[f]] = (f, g),  [a[f], a[g]] = 0,  [a†[f], a†[g]] = 0.
//!
//! Vacuum expectation values follow by rewriting with these rules and
//! dropping every term with a[f]|0⟩ or ⟨0|a†[f].

mod normal;
mod parse;
mod table;
mod wick;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use normal::{excited_state_norm, normal_order, normal_order_with, vacuum_expectation, Strategy};
pub use parse::{parse, parse_expression, Factor, FactorKind, ParsedExpression, ParsedTerm};
pub use table::IpTable;
pub use wick::{for_each_pairing, wick_pairings, wick_vev, wick_vev_factors, Pairing, MAX_WICK_LEN};

/// Coefficients below this magnitude are dropped from stored expressions.
pub const PRUNE_TOLERANCE: f64 = 1e-14;

/// 1-based index of a registered test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FnIndex(pub usize);

impl fmt::Display for FnIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LetterKind {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub kind: LetterKind,
    pub index: FnIndex,
}

impl Letter {
    pub fn create(index: FnIndex) -> Self {
        Letter {
            kind: LetterKind::Create,
            index,
        }
    }

    pub fn annihilate(index: FnIndex) -> Self {
        Letter {
            kind: LetterKind::Annihilate,
            index,
        }
    }

    pub fn adjoint(self) -> Self {
        let kind = match self.kind {
            LetterKind::Create => LetterKind::Annihilate,
            LetterKind::Annihilate => LetterKind::Create,
        };
        Letter { kind, ..self }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LetterKind::Create => write!(f, "adag[{}]", self.index),
            LetterKind::Annihilate => write!(f, "a[{}]", self.index),
        }
    }
}

/// A product of letters in canonical form: every maximal run of same-kind
/// letters is sorted by function index, which the vanishing [a, a] and
/// [a†, a†] commutators allow.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct OperatorWord(Vec<Letter>);

impl OperatorWord {
    pub fn identity() -> Self {
        OperatorWord(Vec::new())
    }

    pub fn new(mut letters: Vec<Letter>) -> Self {
        canonicalize(&mut letters);
        OperatorWord(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All creation letters precede all annihilation letters.
    pub fn is_normal_ordered(&self) -> bool {
        self.0
            .windows(2)
            .all(|w| !(w[0].kind == LetterKind::Annihilate && w[1].kind == LetterKind::Create))
    }

    /// Reversed word with every letter swapped a ↔ a†.
    pub fn adjoint(&self) -> Self {
        OperatorWord::new(self.0.iter().rev().map(|l| l.adjoint()).collect())
    }

    pub fn concat(&self, other: &OperatorWord) -> Self {
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.0);
        letters.extend_from_slice(&other.0);
        OperatorWord::new(letters)
    }

    pub fn display_with<'a>(&'a self, registry: &'a FunctionRegistry) -> impl fmt::Display + 'a {
        WordDisplay {
            word: self,
            registry: Some(registry),
        }
    }
}

pub(crate) fn canonicalize(letters: &mut [Letter]) {
    let mut start = 0;
    while start < letters.len() {
        let kind = letters[start].kind;
        let mut end = start + 1;
        while end < letters.len() && letters[end].kind == kind {
            end += 1;
        }
        letters[start..end].sort_by_key(|l| l.index);
        start = end;
    }
}

struct WordDisplay<'a> {
    word: &'a OperatorWord,
    registry: Option<&'a FunctionRegistry>,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "1");
        }
        for (n, l) in self.word.0.iter().enumerate() {
            if n > 0 {
                write!(f, " ")?;
            }
            let kw = match l.kind {
                LetterKind::Create => "adag",
                LetterKind::Annihilate => "a",
            };
            match self.registry.and_then(|r| r.name(l.index)) {
                Some(name) => write!(f, "{kw}[{name}]")?,
                None => write!(f, "{kw}[{}]", l.index)?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        WordDisplay {
            word: self,
            registry: None,
        }
        .fmt(f)
    }
}

/// A finite complex-linear combination of canonical words.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorExpression {
    terms: BTreeMap<OperatorWord, Complex64>,
}

impl OperatorExpression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn scalar(c: Complex64) -> Self {
        Self::from_word(OperatorWord::identity(), c)
    }

    pub fn from_word(word: OperatorWord, c: Complex64) -> Self {
        let mut e = Self::zero();
        e.add_term(word, c);
        e
    }

    pub fn letter(l: Letter) -> Self {
        Self::from_word(OperatorWord(vec![l]), Complex64::new(1.0, 0.0))
    }

    /// Adds `c · word`, merging with an existing entry and pruning.
    pub fn add_term(&mut self, word: OperatorWord, c: Complex64) {
        let entry = self.terms.entry(word);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let v = *o.get() + c;
                if v.norm() < PRUNE_TOLERANCE {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                if c.norm() >= PRUNE_TOLERANCE {
                    v.insert(c);
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OperatorWord, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &OperatorWord) -> Complex64 {
        self.terms.get(word).copied().unwrap_or_default()
    }

    /// Longest word length, 0 for scalars and the zero element.
    pub fn max_word_len(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    pub fn is_normal_ordered(&self) -> bool {
        self.terms.keys().all(|w| w.is_normal_ordered())
    }

    /// The *-involution: reverse words, swap a ↔ a†, conjugate coefficients.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.add_term(w.adjoint(), c.conj());
        }
        out
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), alpha * c);
        }
        out
    }

    /// Every function index referenced by any word.
    pub fn indices(&self) -> Vec<FnIndex> {
        let mut v: Vec<FnIndex> = self
            .terms
            .keys()
            .flat_map(|w| w.letters().iter().map(|l| l.index))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Approximate equality of coefficients word by word.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let words: std::collections::BTreeSet<&OperatorWord> =
            self.terms.keys().chain(other.terms.keys()).collect();
        words
            .into_iter()
            .all(|w| (self.coefficient(w) - other.coefficient(w)).norm() <= tol)
    }

    pub fn display_with<'a>(&'a self, registry: &'a FunctionRegistry) -> impl fmt::Display + 'a {
        ExprDisplay {
            expr: self,
            registry: Some(registry),
        }
    }
}

struct ExprDisplay<'a> {
    expr: &'a OperatorExpression,
    registry: Option<&'a FunctionRegistry>,
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.is_zero() {
            return write!(f, "0");
        }
        for (n, (w, c)) in self.expr.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let wd = WordDisplay {
                word: w,
                registry: self.registry,
            };
            write!(f, "({}{:+}i)*{}", c.re, c.im, wd)?;
        }
        Ok(())
    }
}

impl fmt::Display for OperatorExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        ExprDisplay {
            expr: self,
            registry: None,
        }
        .fmt(f)
    }
}

impl Add for &OperatorExpression {
    type Output = OperatorExpression;

    fn add(self, rhs: &OperatorExpression) -> OperatorExpression {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }
}

impl Add for OperatorExpression {
    type Output = OperatorExpression;

    fn add(self, rhs: OperatorExpression) -> OperatorExpression {
        &self + &rhs
    }
}

impl Sub for &OperatorExpression {
    type Output = OperatorExpression;

    fn sub(self, rhs: &OperatorExpression) -> OperatorExpression {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), -*c);
        }
        out
    }
}

impl Sub for OperatorExpression {
    type Output = OperatorExpression;

    fn sub(self, rhs: OperatorExpression) -> OperatorExpression {
        &self - &rhs
    }
}

impl Neg for OperatorExpression {
    type Output = OperatorExpression;

    fn neg(self) -> OperatorExpression {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &OperatorExpression {
    type Output = OperatorExpression;

    fn mul(self, rhs: &OperatorExpression) -> OperatorExpression {
        let mut out = OperatorExpression::zero();
        for (wl, cl) in &self.terms {
            for (wr, cr) in &rhs.terms {
                out.add_term(wl.concat(wr), cl * cr);
            }
        }
        out
    }
}

impl Mul for OperatorExpression {
    type Output = OperatorExpression;

    fn mul(self, rhs: OperatorExpression) -> OperatorExpression {
        &self * &rhs
    }
}

impl Mul<Complex64> for OperatorExpression {
    type Output = OperatorExpression;

    fn mul(self, rhs: Complex64) -> OperatorExpression {
        self.scale(rhs)
    }
}

/// Append-only table of test-function names. Indices start at 1 and never
/// change once issued.
#[derive(Debug, Clone, Default)]
pub struct FunctionRegistry {
    names: Vec<String>,
    lookup: HashMap<String, FnIndex>,
}

impl FunctionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> FnIndex {
        if let Some(&i) = self.lookup.get(name) {
            return i;
        }
        self.names.push(name.to_owned());
        let i = FnIndex(self.names.len());
        self.lookup.insert(name.to_owned(), i);
        i
    }

    pub fn index_of(&self, name: &str) -> Option<FnIndex> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, i: FnIndex) -> Option<&str> {
        i.0.checked_sub(1)
            .and_then(|n| self.names.get(n))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FnIndex, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(n, s)| (FnIndex(n + 1), s.as_str()))
    }

    pub fn check(&self, i: FnIndex) -> Result<FnIndex> {
        if i.0 >= 1 && i.0 <= self.names.len() {
            Ok(i)
        } else {
            Err(Error::Lookup(format!(
                "function index {} is not registered ({} entries)",
                i.0,
                self.names.len()
            )))
        }
    }

    pub fn create(&self, i: FnIndex) -> Result<OperatorExpression> {
        Ok(OperatorExpression::letter(Letter::create(self.check(i)?)))
    }

    pub fn annihilate(&self, i: FnIndex) -> Result<OperatorExpression> {
        Ok(OperatorExpression::letter(Letter::annihilate(self.check(i)?)))
    }

    /// φ[i] = a†[i] + a[i].
    pub fn field_operator(&self, i: FnIndex) -> Result<OperatorExpression> {
        Ok(&self.create(i)? + &self.annihilate(i)?)
    }
}

/// φ[i] = a†[i] + a[i] for a registered index.
pub fn field_operator(registry: &FunctionRegistry, i: FnIndex) -> Result<OperatorExpression> {
    registry.field_operator(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(n: usize) -> FunctionRegistry {
        let mut r = FunctionRegistry::new();
        for k in 1..=n {
            r.intern(&format!("f{k}"));
        }
        r
    }

    #[test]
    fn field_operator_has_two_unit_terms() {
        let r = reg(1);
        let phi = field_operator(&r, FnIndex(1)).unwrap();
        assert_eq!(phi.len(), 2);
        assert!(phi.terms().all(|(_, c)| *c == Complex64::new(1.0, 0.0)));
        assert_eq!(phi.adjoint(), phi);
        assert_eq!(&phi * &OperatorExpression::identity(), phi);
    }

    #[test]
    fn unregistered_index_is_a_lookup_error() {
        let r = reg(2);
        assert!(matches!(r.field_operator(FnIndex(3)), Err(Error::Lookup(_))));
        assert!(matches!(r.field_operator(FnIndex(0)), Err(Error::Lookup(_))));
    }

    #[test]
    fn registry_indices_are_stable() {
        let mut r = FunctionRegistry::new();
        let a = r.intern("g");
        let b = r.intern("f");
        assert_eq!(r.intern("g"), a);
        assert_eq!((a, b), (FnIndex(1), FnIndex(2)));
        assert_eq!(r.name(b), Some("f"));
        assert_eq!(r.name(FnIndex(0)), None);
    }

    #[test]
    fn canonical_words_sort_commuting_runs() {
        let w = OperatorWord::new(vec![
            Letter::create(FnIndex(3)),
            Letter::create(FnIndex(1)),
            Letter::annihilate(FnIndex(2)),
            Letter::annihilate(FnIndex(1)),
            Letter::create(FnIndex(2)),
        ]);
        assert_eq!(w.to_string(), "adag[#1] adag[#3] a[#1] a[#2] adag[#2]");
        assert!(!w.is_normal_ordered());
    }

    #[test]
    fn product_merges_duplicates_and_prunes() {
        let r = reg(2);
        let phi1 = r.field_operator(FnIndex(1)).unwrap();
        let phi2 = r.field_operator(FnIndex(2)).unwrap();
        let p = &phi1 * &phi2;
        assert_eq!(p.len(), 4);
        let a1 = r.annihilate(FnIndex(1)).unwrap();
        let a2 = r.annihilate(FnIndex(2)).unwrap();
        // a1 a2 and a2 a1 are the same canonical word.
        let s = &(&a1 * &a2) - &(&a2 * &a1);
        assert!(s.is_zero());
        let tiny = OperatorExpression::scalar(Complex64::new(1e-15, 0.0));
        assert!(tiny.is_zero());
    }
}
