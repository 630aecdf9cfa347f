//! Spectral-method sampler for real scalar fields on periodic lattices.
//!
//! Conventions: sites x = n·a, wave numbers k_j = 2πj/(Na) with
//! j ∈ (−N/2, N/2], and lattice Fourier modes φ̃_k = aᴰ Σ_x φ_x e^{−ik·x}.
//! A density with coefficient c(k) is discretised as
//! exp[−(1/V) Σ_k c(|k|) |φ̃_k|²], V = (Na)ᴰ, which gives
//! E[|φ̃_k|²] = V / 2c(|k|) for every mode: paired modes {k, −k} carry
//! variance V/4c in each of Re and Im, self-conjugate modes are real with
//! variance V/2c.

mod estimate;
mod fft;
pub mod io;
mod rng;

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectra::SpectralDensity;

pub use estimate::{power_spectrum, ModeCheck, RunningStats, SpectrumAccumulator, SpectrumEstimate};
pub(crate) use fft::LatticeFft;
use rng::ModeRng;

/// Largest lattice accepted, in sites.
pub const MAX_SITES: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub dim: usize,
    pub sites_per_axis: usize,
    pub spacing: f64,
}

impl LatticeSpec {
    pub fn new(dim: usize, sites_per_axis: usize, spacing: f64) -> Result<Self> {
        let l = LatticeSpec {
            dim,
            sites_per_axis,
            spacing,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(invalid(format!("lattice dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        let n = self.sites_per_axis;
        if n < 8 || !n.is_power_of_two() {
            return Err(invalid(format!("sites per axis must be a power of two >= 8, got {n}")));
        }
        if n.checked_pow(self.dim as u32).is_none_or(|s| s > MAX_SITES) {
            return Err(invalid(format!(
                "lattice {n}^{} exceeds the {MAX_SITES}-site limit",
                self.dim
            )));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(invalid(format!("lattice spacing must be finite and > 0, got {}", self.spacing)));
        }
        Ok(())
    }

    pub fn site_count(&self) -> usize {
        self.sites_per_axis.pow(self.dim as u32)
    }

    /// aᴰ.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// V = (Na)ᴰ.
    pub fn volume(&self) -> f64 {
        (self.sites_per_axis as f64 * self.spacing).powi(self.dim as i32)
    }

    /// Per-axis unsigned indices of a flat row-major index.
    pub fn coords(&self, flat: usize) -> Vec<usize> {
        let n = self.sites_per_axis;
        let mut c = vec![0; self.dim];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            c[axis] = rest % n;
            rest /= n;
        }
        c
    }

    pub fn flat(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.sites_per_axis + c)
    }

    /// Signed mode indices j ∈ (−N/2, N/2] of a flat mode index.
    pub fn mode_index(&self, flat: usize) -> Vec<i64> {
        let n = self.sites_per_axis;
        self.coords(flat)
            .into_iter()
            .map(|j| if j <= n / 2 { j as i64 } else { j as i64 - n as i64 })
            .collect()
    }

    pub fn flat_from_mode_index(&self, j: &[i64]) -> usize {
        let n = self.sites_per_axis as i64;
        let c: Vec<usize> = j.iter().map(|&j| j.rem_euclid(n) as usize).collect();
        self.flat(&c)
    }

    pub fn wavevector(&self, flat: usize) -> Vec<f64> {
        let dk = 2.0 * std::f64::consts::PI / (self.sites_per_axis as f64 * self.spacing);
        self.mode_index(flat).into_iter().map(|j| j as f64 * dk).collect()
    }

    pub fn kmag(&self, flat: usize) -> f64 {
        self.wavevector(flat).iter().map(|k| k * k).sum::<f64>().sqrt()
    }

    /// Flat index of −k.
    pub fn partner(&self, flat: usize) -> usize {
        let n = self.sites_per_axis;
        let c: Vec<usize> = self.coords(flat).into_iter().map(|j| (n - j) % n).collect();
        self.flat(&c)
    }

    fn describe_mode(&self, flat: usize) -> String {
        let j = self.mode_index(flat);
        let k = self.kmag(flat);
        if k == 0.0 {
            format!("k=0 (index {j:?})")
        } else {
            format!("|k|={k} (index {j:?})")
        }
    }
}

/// A real field on a lattice at fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfiguration {
    lattice: LatticeSpec,
    values: Vec<f64>,
}

impl FieldConfiguration {
    pub fn new(lattice: LatticeSpec, values: Vec<f64>) -> Result<Self> {
        lattice.validate()?;
        if values.len() != lattice.site_count() {
            return Err(invalid(format!(
                "configuration has {} values, lattice has {} sites",
                values.len(),
                lattice.site_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("configuration values must be finite"));
        }
        Ok(FieldConfiguration { lattice, values })
    }

    pub fn zeros(lattice: LatticeSpec) -> Self {
        FieldConfiguration {
            lattice,
            values: vec![0.0; lattice.site_count()],
        }
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// φ̃_k = aᴰ Σ_x φ_x e^{−ik·x}, indexed like the sites.
    pub fn modes(&self) -> Vec<Complex64> {
        self.modes_with(&LatticeFft::new(&self.lattice))
    }

    pub(crate) fn modes_with(&self, fft: &LatticeFft) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut buf);
        let cell = self.lattice.cell_volume();
        buf.iter_mut().for_each(|v| *v *= cell);
        buf
    }

    /// Configuration with the given modes, φ_x = (1/V) Σ_k φ̃_k e^{ik·x}.
    /// Returns the configuration and the largest imaginary residue relative
    /// to the largest real value.
    pub fn from_modes(lattice: LatticeSpec, modes: &[Complex64]) -> Result<(Self, f64)> {
        lattice.validate()?;
        if modes.len() != lattice.site_count() {
            return Err(invalid("mode count does not match lattice"));
        }
        synthesize(&lattice, &LatticeFft::new(&lattice), modes.to_vec())
    }
}

fn synthesize(lattice: &LatticeSpec, fft: &LatticeFft, mut buf: Vec<Complex64>) -> Result<(FieldConfiguration, f64)> {
    fft.inverse(&mut buf);
    let inv_v = 1.0 / lattice.volume();
    let max_re = buf.iter().fold(0.0f64, |m, v| m.max(v.re.abs()));
    let max_im = buf.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    let residue = if max_re > 0.0 { max_im / max_re } else { max_im };
    let values: Vec<f64> = buf.iter().map(|v| v.re * inv_v).collect();
    Ok((
        FieldConfiguration {
            lattice: *lattice,
            values,
        },
        residue,
    ))
}

/// Largest tolerated imaginary residue of a synthesised configuration.
pub const REALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum ModePlan {
    Pinned,
    SelfConjugate { sd: f64 },
    Pair { sd: f64, partner: usize },
    Partner,
}

/// E[|φ̃_k|²] per mode: V / 2c(|k|), or 0 for a pinned zero mode.
pub fn expected_power(d: &SpectralDensity, lattice: &LatticeSpec, pin_zero_mode: bool) -> Result<Vec<f64>> {
    d.validate()?;
    lattice.validate()?;
    let v = lattice.volume();
    (0..lattice.site_count())
        .map(|m| {
            if pin_zero_mode && m == 0 {
                return Ok(0.0);
            }
            let c = d.coefficient_unchecked(lattice.kmag(m));
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::DegenerateMode {
                    mode: lattice.describe_mode(m),
                    coefficient: c,
                });
            }
            Ok(v / (2.0 * c))
        })
        .collect()
}

/// Draws i.i.d. configurations from a spectral density. Sample `s` depends
/// only on (seed, s, lattice, density).
#[derive(Clone)]
pub struct Sampler {
    density: SpectralDensity,
    lattice: LatticeSpec,
    seed: u64,
    pin_zero_mode: bool,
    plan: Vec<ModePlan>,
    expected: Vec<f64>,
    fft: LatticeFft,
}

impl Sampler {
    pub fn new(density: SpectralDensity, lattice: LatticeSpec, seed: u64, pin_zero_mode: bool) -> Result<Self> {
        let expected = expected_power(&density, &lattice, pin_zero_mode)?;
        let plan = (0..lattice.site_count())
            .map(|m| {
                let p = lattice.partner(m);
                let power = expected[m];
                if pin_zero_mode && m == 0 {
                    ModePlan::Pinned
                } else if p == m {
                    ModePlan::SelfConjugate { sd: power.sqrt() }
                } else if m < p {
                    ModePlan::Pair {
                        sd: (0.5 * power).sqrt(),
                        partner: p,
                    }
                } else {
                    ModePlan::Partner
                }
            })
            .collect();
        Ok(Sampler {
            density,
            lattice,
            seed,
            pin_zero_mode,
            plan,
            expected,
            fft: LatticeFft::new(&lattice),
        })
    }

    pub fn density(&self) -> &SpectralDensity {
        &self.density
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pin_zero_mode(&self) -> bool {
        self.pin_zero_mode
    }

    pub fn expected_power(&self) -> &[f64] {
        &self.expected
    }

    /// Lattice Fourier modes of sample `index`, Hermitian by construction.
    pub fn draw_modes(&self, index: u64) -> Vec<Complex64> {
        let mut rng = ModeRng::new(self.seed, index);
        let mut modes = vec![Complex64::new(0.0, 0.0); self.plan.len()];
        for (m, plan) in self.plan.iter().enumerate() {
            match *plan {
                ModePlan::Pinned | ModePlan::Partner => {}
                ModePlan::SelfConjugate { sd } => {
                    let (z, _) = rng.normals(m);
                    modes[m] = Complex64::new(sd * z, 0.0);
                }
                ModePlan::Pair { sd, partner } => {
                    let (z1, z2) = rng.normals(m);
                    let v = Complex64::new(sd * z1, sd * z2);
                    modes[m] = v;
                    modes[partner] = v.conj();
                }
            }
        }
        modes
    }

    /// Sample `index` and the imaginary residue of its inverse transform.
    pub fn draw(&self, index: u64) -> Result<(FieldConfiguration, f64)> {
        let (cfg, residue) = synthesize(&self.lattice, &self.fft, self.draw_modes(index))?;
        if residue > REALITY_TOLERANCE {
            return Err(Error::NumericConsistency(format!(
                "sample {index}: imaginary residue {residue:e} exceeds {REALITY_TOLERANCE:e}"
            )));
        }
        Ok((cfg, residue))
    }

    pub fn sample(&self, index: u64) -> Result<FieldConfiguration> {
        self.draw(index).map(|(c, _)| c)
    }

    /// Samples `range` in parallel on the current rayon pool, in index order.
    pub fn sample_range(&self, range: Range<u64>) -> Result<Vec<FieldConfiguration>> {
        range.into_par_iter().map(|i| self.sample(i)).collect()
    }
}

/// Iterator over samples 0..n, generated in parallel batches and yielded in
/// sample-index order.
pub struct SampleStream {
    sampler: Sampler,
    pool: Option<rayon::ThreadPool>,
    next: u64,
    end: u64,
    batch: usize,
    buffer: std::vec::IntoIter<FieldConfiguration>,
}

const STREAM_BATCH: usize = 512;

impl SampleStream {
    pub fn new(sampler: Sampler, n: u64, threads: Option<usize>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("sample count must be >= 1"));
        }
        let pool = match threads {
            Some(t) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t.max(1))
                    .build()
                    .map_err(|e| invalid(format!("cannot build thread pool: {e}")))?,
            ),
            None => None,
        };
        Ok(SampleStream {
            sampler,
            pool,
            next: 0,
            end: n,
            batch: STREAM_BATCH,
            buffer: Vec::new().into_iter(),
        })
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }
}

impl Iterator for SampleStream {
    type Item = Result<FieldConfiguration>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(c) = self.buffer.next() {
            return Some(Ok(c));
        }
        if self.next >= self.end {
            return None;
        }
        let hi = (self.next + self.batch as u64).min(self.end);
        let range = self.next..hi;
        self.next = hi;
        let batch = match &self.pool {
            Some(pool) => pool.install(|| self.sampler.sample_range(range)),
            None => self.sampler.sample_range(range),
        };
        match batch {
            Ok(v) => {
                self.buffer = v.into_iter();
                self.buffer.next().map(Ok)
            }
            Err(e) => {
                self.next = self.end;
                Some(Err(e))
            }
        }
    }
}

/// Stream of `n` i.i.d. configurations from `d` on `lattice`.
pub fn sample_fields(
    d: &SpectralDensity,
    lattice: &LatticeSpec,
    seed: u64,
    n: u64,
    pin_zero_mode: bool,
    threads: Option<usize>,
) -> Result<SampleStream> {
    SampleStream::new(Sampler::new(*d, *lattice, seed, pin_zero_mode)?, n, threads)
}

fn check_shape(cfg: &FieldConfiguration, f: &[f64]) -> Result<()> {
    if f.len() != cfg.values.len() {
        return Err(invalid(format!(
            "test function has {} values, lattice has {} sites",
            f.len(),
            cfg.values.len()
        )));
    }
    Ok(())
}

/// X[f] = aᴰ Σ_x f(x) φ(x).
pub fn smear(cfg: &FieldConfiguration, f: &[f64]) -> Result<f64> {
    check_shape(cfg, f)?;
    let s: f64 = cfg.values.iter().zip(f).map(|(p, q)| p * q).sum();
    Ok(cfg.lattice.cell_volume() * s)
}

/// Ensemble variance of X[f]: (1/V²) Σ_k |f̃_k|² · E[|φ̃_k|²].
pub fn smear_variance(d: &SpectralDensity, lattice: &LatticeSpec, f: &[f64], pin_zero_mode: bool) -> Result<f64> {
    let probe = FieldConfiguration::new(*lattice, f.to_vec())?;
    let ft = probe.modes();
    let power = expected_power(d, lattice, pin_zero_mode)?;
    let v = lattice.volume();
    Ok(ft.iter().zip(&power).map(|(f, p)| f.norm_sqr() * p).sum::<f64>() / (v * v))
}

fn quadratic_form(cfg: &FieldConfiguration, weight: impl Fn(f64) -> f64) -> f64 {
    let modes = cfg.modes();
    let lat = &cfg.lattice;
    let s: f64 = modes
        .iter()
        .enumerate()
        .map(|(m, v)| weight(lat.kmag(m)) * v.norm_sqr())
        .sum();
    s / lat.volume()
}

/// H_C = (1/V) Σ_k ½(|k|² + m²) |φ̃_k|².
pub fn hamiltonian_c(cfg: &FieldConfiguration, mass: f64) -> f64 {
    quadratic_form(cfg, |k| 0.5 * (k * k + mass * mass))
}

/// H_Q = (1/V) Σ_k √(|k|² + m²) |φ̃_k|².
pub fn hamiltonian_q(cfg: &FieldConfiguration, mass: f64) -> f64 {
    quadratic_form(cfg, |k| k.hypot(mass))
}

/// (1/V) Σ_k c(|k|) |φ̃_k|², the negative log-density up to a constant.
pub fn density_exponent(d: &SpectralDensity, cfg: &FieldConfiguration) -> Result<f64> {
    d.validate()?;
    Ok(quadratic_form(cfg, |k| d.coefficient_unchecked(k)))
}
