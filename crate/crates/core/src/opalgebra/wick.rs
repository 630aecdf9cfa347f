use num_complex::Complex64;

use super::{Factor, FactorKind, FnIndex, IpTable};
use crate::error::{Error, Result};

/// Longest product accepted by the pairing routines; (n−1)!! grows fast.
pub const MAX_WICK_LEN: usize = 16;

/// One perfect matching of factor positions (0-based, each pair `p < q`) and
/// the product of its contractions.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
    pub value: Complex64,
}

/// ⟨0|φ[f_1]…φ[f_n]|0⟩ as a sum over perfect matchings of the positions,
/// each matched pair p < q contributing (f_q, f_p).
pub fn wick_vev(indices: &[FnIndex], ip: &IpTable) -> Result<Complex64> {
    let factors: Vec<Factor> = indices
        .iter()
        .map(|&index| Factor {
            kind: FactorKind::Phi,
            index,
        })
        .collect();
    wick_vev_factors(&factors, ip)
}

/// Wick sum for a product of factors that are each φ, a or a†. The
/// contraction ⟨0|X_p X_q|0⟩ is (f_q, f_p) when X_p contains a and X_q
/// contains a†, and zero otherwise.
pub fn wick_vev_factors(factors: &[Factor], ip: &IpTable) -> Result<Complex64> {
    let n = factors.len();
    check_len(n)?;
    if n % 2 == 1 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let c = contractions(factors, ip)?;
    // Sum over matchings by memoising on the set of already-paired positions.
    let full = (1usize << n) - 1;
    let mut memo: Vec<Option<Complex64>> = vec![None; 1 << n];
    memo[full] = Some(Complex64::new(1.0, 0.0));
    Ok(matchings_from(0, n, &c, &mut memo))
}

fn matchings_from(mask: usize, n: usize, c: &[Vec<Complex64>], memo: &mut [Option<Complex64>]) -> Complex64 {
    if let Some(v) = memo[mask] {
        return v;
    }
    let p = (!mask).trailing_zeros() as usize;
    let mut total = Complex64::new(0.0, 0.0);
    for q in p + 1..n {
        if mask & (1 << q) != 0 || c[p][q] == Complex64::new(0.0, 0.0) {
            continue;
        }
        total += c[p][q] * matchings_from(mask | (1 << p) | (1 << q), n, c, memo);
    }
    memo[mask] = Some(total);
    total
}

/// Calls `visit` once per perfect matching, in lexicographic order of the
/// pair lists. Zero-valued matchings are included.
pub fn for_each_pairing(factors: &[Factor], ip: &IpTable, mut visit: impl FnMut(&Pairing)) -> Result<()> {
    let n = factors.len();
    check_len(n)?;
    if n % 2 == 1 {
        return Ok(());
    }
    let c = contractions(factors, ip)?;
    let mut current = Pairing {
        pairs: Vec::with_capacity(n / 2),
        value: Complex64::new(1.0, 0.0),
    };
    enumerate(0, n, &c, &mut current, &mut visit);
    Ok(())
}

fn enumerate(
    mask: usize,
    n: usize,
    c: &[Vec<Complex64>],
    current: &mut Pairing,
    visit: &mut impl FnMut(&Pairing),
) {
    if mask == (1usize << n) - 1 {
        visit(current);
        return;
    }
    let p = (!mask).trailing_zeros() as usize;
    let saved = current.value;
    for q in p + 1..n {
        if mask & (1 << q) != 0 {
            continue;
        }
        current.pairs.push((p, q));
        current.value = saved * c[p][q];
        enumerate(mask | (1 << p) | (1 << q), n, c, current, visit);
        current.pairs.pop();
    }
    current.value = saved;
}

/// Every perfect matching with its value.
pub fn wick_pairings(factors: &[Factor], ip: &IpTable) -> Result<Vec<Pairing>> {
    let mut out = Vec::new();
    for_each_pairing(factors, ip, |p| out.push(p.clone()))?;
    Ok(out)
}

fn check_len(n: usize) -> Result<()> {
    if n > MAX_WICK_LEN {
        return Err(Error::Limit(format!(
            "Wick pairing of {n} factors exceeds the limit of {MAX_WICK_LEN}"
        )));
    }
    Ok(())
}

fn contractions(factors: &[Factor], ip: &IpTable) -> Result<Vec<Vec<Complex64>>> {
    let n = factors.len();
    let mut c = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for p in 0..n {
        for q in p + 1..n {
            let left_annihilates = matches!(factors[p].kind, FactorKind::Phi | FactorKind::A);
            let right_creates = matches!(factors[q].kind, FactorKind::Phi | FactorKind::Adag);
            if left_annihilates && right_creates {
                c[p][q] = ip.get(factors[q].index, factors[p].index)?;
            }
        }
    }
    Ok(c)
}
