//! Sample and spectrum files.
//!
//! CSV samples carry a header `sample,site_index_0[,site_index_1..],value`,
//! one row per site. Binary samples start with the magic `KGF1`, then
//! dimension and sites per axis as little-endian u32, spacing as f64, and
//! then the site values of each sample as f64 in row-major order.

use std::io::{Read, Write};

use super::{FieldConfiguration, LatticeSpec, SpectrumEstimate};
use crate::error::{invalid, Error, Result};
use crate::format::fmt_f64;

pub const BINARY_MAGIC: &[u8; 4] = b"KGF1";
const BINARY_HEADER_LEN: usize = 4 + 4 + 4 + 8;

fn site_columns(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("site_index_{i}")).collect()
}

fn mode_columns(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("k_index_{i}")).collect()
}

pub struct CsvSampleWriter<W: Write> {
    inner: csv::Writer<W>,
    lattice: LatticeSpec,
    next: u64,
}

impl<W: Write> CsvSampleWriter<W> {
    pub fn new(out: W, lattice: LatticeSpec) -> Result<Self> {
        lattice.validate()?;
        let mut inner = csv::Writer::from_writer(out);
        let mut header = vec!["sample".to_string()];
        header.extend(site_columns(lattice.dim));
        header.push("value".into());
        inner.write_record(&header)?;
        Ok(CsvSampleWriter { inner, lattice, next: 0 })
    }

    pub fn write(&mut self, cfg: &FieldConfiguration) -> Result<()> {
        if *cfg.lattice() != self.lattice {
            return Err(invalid("configuration lattice differs from writer lattice"));
        }
        let sample = self.next.to_string();
        for (i, v) in cfg.values().iter().enumerate() {
            let mut row = vec![sample.clone()];
            row.extend(self.lattice.coords(i).iter().map(|c| c.to_string()));
            row.push(fmt_f64(*v));
            self.inner.write_record(&row)?;
        }
        self.next += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Reads a CSV sample file written by [`CsvSampleWriter`].
pub fn read_samples_csv<R: Read>(input: R, spacing: f64) -> Result<Vec<FieldConfiguration>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    let dim = header.len().saturating_sub(2);
    let mut expected = vec!["sample".to_string()];
    expected.extend(site_columns(dim));
    expected.push("value".into());
    if dim == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(invalid(format!("unexpected sample header {:?}", header)));
    }
    let mut rows: Vec<(u64, Vec<usize>, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse_err = |what: &str| invalid(format!("bad {what} in sample row {:?}", rec));
        let s: u64 = rec[0].parse().map_err(|_| parse_err("sample"))?;
        let coords = (1..=dim)
            .map(|i| rec[i].parse::<usize>().map_err(|_| parse_err("site index")))
            .collect::<Result<Vec<_>>>()?;
        let v: f64 = rec[dim + 1].parse().map_err(|_| parse_err("value"))?;
        rows.push((s, coords, v));
    }
    let n = rows.iter().flat_map(|r| r.1.iter()).max().map_or(0, |m| m + 1);
    let lattice = LatticeSpec::new(dim, n, spacing)?;
    let count = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1) as usize;
    let sites = lattice.site_count();
    if rows.len() != count * sites {
        return Err(invalid(format!(
            "sample file has {} rows, expected {} samples x {sites} sites",
            rows.len(),
            count
        )));
    }
    let mut values = vec![vec![f64::NAN; sites]; count];
    for (s, c, v) in rows {
        values[s as usize][lattice.flat(&c)] = v;
    }
    values.into_iter().map(|v| FieldConfiguration::new(lattice, v)).collect()
}

pub struct BinarySampleWriter<W: Write> {
    out: W,
    lattice: LatticeSpec,
}

impl<W: Write> BinarySampleWriter<W> {
    pub fn new(mut out: W, lattice: LatticeSpec) -> Result<Self> {
        lattice.validate()?;
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&(lattice.dim as u32).to_le_bytes())?;
        out.write_all(&(lattice.sites_per_axis as u32).to_le_bytes())?;
        out.write_all(&lattice.spacing.to_le_bytes())?;
        Ok(BinarySampleWriter { out, lattice })
    }

    pub fn write(&mut self, cfg: &FieldConfiguration) -> Result<()> {
        if *cfg.lattice() != self.lattice {
            return Err(invalid("configuration lattice differs from writer lattice"));
        }
        let mut buf = Vec::with_capacity(cfg.values().len() * 8);
        for v in cfg.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.out.write_all(&buf)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn read_samples_binary<R: Read>(mut input: R) -> Result<Vec<FieldConfiguration>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < BINARY_HEADER_LEN || &bytes[..4] != BINARY_MAGIC {
        return Err(invalid("not a KGF1 sample file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let spacing = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let lattice = LatticeSpec::new(u32_at(4), u32_at(8), spacing)?;
    let body = &bytes[BINARY_HEADER_LEN..];
    let stride = lattice.site_count() * 8;
    if body.len() % stride != 0 {
        return Err(invalid("sample file length is not a whole number of samples"));
    }
    body.chunks_exact(stride)
        .map(|chunk| {
            let v = chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            FieldConfiguration::new(lattice, v)
        })
        .collect()
}

/// Writes `k_index_0..,mean,stderr,count,expected`, one row per mode.
pub fn write_spectrum_csv<W: Write>(out: W, est: &SpectrumEstimate, expected: &[f64]) -> Result<()> {
    if expected.len() != est.mean.len() {
        return Err(invalid("expected spectrum length differs from estimate"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = mode_columns(est.lattice.dim);
    header.extend(["mean", "stderr", "count", "expected"].map(String::from));
    w.write_record(&header)?;
    for m in 0..est.mean.len() {
        let mut row: Vec<String> = est.lattice.mode_index(m).iter().map(|j| j.to_string()).collect();
        row.push(fmt_f64(est.mean[m]));
        row.push(fmt_f64(est.stderr[m]));
        row.push(est.count.to_string());
        row.push(fmt_f64(expected[m]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a spectrum file back as (estimate, expected).
pub fn read_spectrum_csv<R: Read>(input: R, spacing: f64) -> Result<(SpectrumEstimate, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let dim = rdr.headers()?.len().saturating_sub(4);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let bad = || invalid(format!("bad spectrum row {:?}", rec));
        let j = (0..dim)
            .map(|i| rec[i].parse::<i64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let f = |i: usize| rec[dim + i].parse::<f64>().map_err(|_| bad());
        let count: u64 = rec[dim + 2].parse().map_err(|_| bad())?;
        rows.push((j, f(0)?, f(1)?, count, f(3)?));
    }
    let n = (rows.len() as f64).powf(1.0 / dim.max(1) as f64).round() as usize;
    let lattice = LatticeSpec::new(dim, n, spacing)?;
    if rows.len() != lattice.site_count() {
        return Err(invalid("spectrum row count is not N^D"));
    }
    let sites = lattice.site_count();
    let (mut mean, mut stderr, mut expected) = (vec![0.0; sites], vec![0.0; sites], vec![0.0; sites]);
    let count = rows.first().map_or(0, |r| r.3);
    for (j, m, s, _, e) in rows {
        let flat = lattice.flat_from_mode_index(&j);
        mean[flat] = m;
        stderr[flat] = s;
        expected[flat] = e;
    }
    Ok((
        SpectrumEstimate {
            lattice,
            count,
            mean,
            stderr,
        },
        expected,
    ))
}
