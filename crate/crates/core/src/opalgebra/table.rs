use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;

use super::FnIndex;
use crate::error::{invalid, Error, Result};
use crate::format::fmt_f64;

/// Inner-product table (f_i, f_j) supplied to the algebra.
///
/// The table is an input: the algebra never computes inner products itself.
/// CSV form is one row per entry, `i,j,re,im`, with an optional header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IpTable {
    entries: BTreeMap<(FnIndex, FnIndex), Complex64>,
}

impl IpTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Dense table over indices 1..=n from `ip(i, j)`.
    pub fn from_fn(n: usize, mut ip: impl FnMut(FnIndex, FnIndex) -> Complex64) -> Self {
        let mut t = Self::new();
        for i in 1..=n {
            for j in 1..=n {
                t.insert(FnIndex(i), FnIndex(j), ip(FnIndex(i), FnIndex(j)));
            }
        }
        t
    }

    /// Sets (f_i, f_j) = value.
    pub fn insert(&mut self, i: FnIndex, j: FnIndex, value: Complex64) {
        self.entries.insert((i, j), value);
    }

    /// Sets (f_i, f_j) = value and (f_j, f_i) = conj(value).
    pub fn insert_hermitian(&mut self, i: FnIndex, j: FnIndex, value: Complex64) {
        self.insert(i, j, value);
        self.insert(j, i, value.conj());
    }

    /// (f_i, f_j), conjugate-linear in the first slot.
    pub fn get(&self, i: FnIndex, j: FnIndex) -> Result<Complex64> {
        self.entries.get(&(i, j)).copied().ok_or_else(|| {
            Error::Lookup(format!("inner-product table has no entry ({}, {})", i.0, j.0))
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FnIndex, FnIndex, Complex64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "re", "im"])?;
        for (i, j, v) in self.iter() {
            out.write_record([i.0.to_string(), j.0.to_string(), fmt_f64(v.re), fmt_f64(v.im)])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut t = Self::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if line == 0 && rec.get(0) == Some("i") {
                continue;
            }
            if rec.len() != 4 {
                return Err(invalid(format!(
                    "ip table row {}: expected 4 fields i,j,re,im, got {}",
                    line + 1,
                    rec.len()
                )));
            }
            let idx = |k: usize| -> Result<FnIndex> {
                let v: usize = rec[k]
                    .parse()
                    .map_err(|_| invalid(format!("ip table row {}: bad index '{}'", line + 1, &rec[k])))?;
                if v == 0 {
                    return Err(invalid(format!("ip table row {}: indices start at 1", line + 1)));
                }
                Ok(FnIndex(v))
            };
            let num = |k: usize| -> Result<f64> {
                rec[k]
                    .parse()
                    .map_err(|_| invalid(format!("ip table row {}: bad number '{}'", line + 1, &rec[k])))
            };
            t.insert(idx(0)?, idx(1)?, Complex64::new(num(2)?, num(3)?));
        }
        Ok(t)
    }
}
