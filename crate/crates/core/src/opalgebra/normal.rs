use num_complex::Complex64;

use super::{canonicalize, FnIndex, IpTable, Letter, LetterKind, OperatorExpression, OperatorWord};
use crate::error::Result;

/// Which a·a† pair the rewriter substitutes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Leftmost,
    Rightmost,
}

/// Normal-orders `e` by repeated substitution
/// a[g] a†[f] → a†[f] a[g] + (f, g)·1.
pub fn normal_order(e: &OperatorExpression, ip: &IpTable) -> Result<OperatorExpression> {
    normal_order_with(e, ip, Strategy::Leftmost)
}

pub fn normal_order_with(
    e: &OperatorExpression,
    ip: &IpTable,
    strategy: Strategy,
) -> Result<OperatorExpression> {
    let mut out = OperatorExpression::zero();
    let mut stack: Vec<(Vec<Letter>, Complex64)> =
        e.terms().map(|(w, c)| (w.letters().to_vec(), *c)).collect();
    while let Some((mut letters, c)) = stack.pop() {
        let Some(p) = find_pair(&letters, strategy) else {
            canonicalize(&mut letters);
            out.add_term(OperatorWord(letters), c);
            continue;
        };
        let (g, f) = (letters[p].index, letters[p + 1].index);
        let contraction = ip.get(f, g)?;
        let mut contracted = Vec::with_capacity(letters.len() - 2);
        contracted.extend_from_slice(&letters[..p]);
        contracted.extend_from_slice(&letters[p + 2..]);
        letters.swap(p, p + 1);
        stack.push((letters, c));
        stack.push((contracted, c * contraction));
    }
    Ok(out)
}

fn find_pair(letters: &[Letter], strategy: Strategy) -> Option<usize> {
    let is_pair =
        |p: &usize| letters[*p].kind == LetterKind::Annihilate && letters[*p + 1].kind == LetterKind::Create;
    let n = letters.len().saturating_sub(1);
    match strategy {
        Strategy::Leftmost => (0..n).find(is_pair),
        Strategy::Rightmost => (0..n).rev().find(is_pair),
    }
}

/// ⟨0|e|0⟩.
///
/// Each word is rewritten from the left; a word whose first letter is a
/// creation operator (⟨0|a† = 0) or whose last letter is an annihilation
/// operator (a|0⟩ = 0) is dropped, and the empty word contributes its
/// coefficient. No pruning is applied to the accumulated value.
pub fn vacuum_expectation(e: &OperatorExpression, ip: &IpTable) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut stack: Vec<(Vec<Letter>, Complex64)> =
        e.terms().map(|(w, c)| (w.letters().to_vec(), *c)).collect();
    while let Some((mut letters, c)) = stack.pop() {
        let (Some(first), Some(last)) = (letters.first(), letters.last()) else {
            total += c;
            continue;
        };
        if first.kind == LetterKind::Create || last.kind == LetterKind::Annihilate {
            continue;
        }
        // First letter is an annihilator and some creator follows, so an
        // adjacent a·a† pair exists.
        let q = letters
            .iter()
            .position(|l| l.kind == LetterKind::Create)
            .expect("word ends in a creation letter");
        let p = q - 1;
        let contraction = ip.get(letters[q].index, letters[p].index)?;
        let mut contracted = Vec::with_capacity(letters.len() - 2);
        contracted.extend_from_slice(&letters[..p]);
        contracted.extend_from_slice(&letters[q + 1..]);
        letters.swap(p, q);
        stack.push((letters, c));
        stack.push((contracted, c * contraction));
    }
    Ok(total)
}

/// ⟨0| a[f_n]…a[f_1] a†[f_1]…a†[f_n] |0⟩, the squared norm of
/// a†[f_1]…a†[f_n]|0⟩.
pub fn excited_state_norm(indices: &[FnIndex], ip: &IpTable) -> Result<Complex64> {
    let mut letters: Vec<Letter> = indices.iter().rev().map(|&i| Letter::annihilate(i)).collect();
    letters.extend(indices.iter().map(|&i| Letter::create(i)));
    let e = OperatorExpression::from_word(OperatorWord::new(letters), Complex64::new(1.0, 0.0));
    vacuum_expectation(&e, ip)
}
