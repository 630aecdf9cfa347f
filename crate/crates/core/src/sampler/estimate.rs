use num_complex::Complex64;

use super::{FieldConfiguration, LatticeFft, LatticeSpec};
use crate::error::{invalid, Result};

/// Welford mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance, NaN below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Accumulates |φ̃_k|² per mode.
#[derive(Debug, Clone)]
pub struct SpectrumAccumulator {
    lattice: LatticeSpec,
    fft: LatticeFft,
    stats: Vec<RunningStats>,
}

impl SpectrumAccumulator {
    pub fn new(lattice: LatticeSpec) -> Result<Self> {
        lattice.validate()?;
        Ok(SpectrumAccumulator {
            lattice,
            fft: LatticeFft::new(&lattice),
            stats: vec![RunningStats::default(); lattice.site_count()],
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn count(&self) -> u64 {
        self.stats.first().map_or(0, |s| s.count())
    }

    pub fn push(&mut self, cfg: &FieldConfiguration) -> Result<()> {
        if *cfg.lattice() != self.lattice {
            return Err(invalid("configuration lattice differs from accumulator lattice"));
        }
        let modes = cfg.modes_with(&self.fft);
        self.push_modes(&modes);
        Ok(())
    }

    pub(crate) fn push_modes(&mut self, modes: &[Complex64]) {
        for (s, v) in self.stats.iter_mut().zip(modes) {
            s.push(v.norm_sqr());
        }
    }

    pub fn merge(&mut self, other: &SpectrumAccumulator) -> Result<()> {
        if other.lattice != self.lattice {
            return Err(invalid("cannot merge spectra on different lattices"));
        }
        for (a, b) in self.stats.iter_mut().zip(&other.stats) {
            a.merge(b);
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<SpectrumEstimate> {
        let count = self.count();
        if count < 2 {
            return Err(invalid(format!("power spectrum needs >= 2 samples, got {count}")));
        }
        Ok(SpectrumEstimate {
            lattice: self.lattice,
            count,
            mean: self.stats.iter().map(|s| s.mean()).collect(),
            stderr: self.stats.iter().map(|s| s.stderr()).collect(),
        })
    }
}

/// Per-mode comparison of an estimate with an expected value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCheck {
    pub mode: usize,
    pub mean: f64,
    pub stderr: f64,
    pub expected: f64,
    /// (mean − expected) / stderr, 0 when both match exactly.
    pub z: f64,
}

/// Sample mean and standard error of |φ̃_k|² for every mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub lattice: LatticeSpec,
    pub count: u64,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl SpectrumEstimate {
    pub fn compare(&self, expected: &[f64]) -> Result<Vec<ModeCheck>> {
        if expected.len() != self.mean.len() {
            return Err(invalid("expected spectrum length differs from estimate"));
        }
        Ok((0..self.mean.len())
            .map(|m| {
                let diff = self.mean[m] - expected[m];
                let z = if diff == 0.0 { 0.0 } else { diff / self.stderr[m] };
                ModeCheck {
                    mode: m,
                    mean: self.mean[m],
                    stderr: self.stderr[m],
                    expected: expected[m],
                    z,
                }
            })
            .collect())
    }

    /// Fraction of modes with |z| ≤ `sigmas`.
    pub fn fraction_within(&self, expected: &[f64], sigmas: f64) -> Result<f64> {
        let checks = self.compare(expected)?;
        let ok = checks.iter().filter(|c| c.z.abs() <= sigmas).count();
        Ok(ok as f64 / checks.len() as f64)
    }

    pub fn max_abs_z(&self, expected: &[f64]) -> Result<f64> {
        Ok(self.compare(expected)?.iter().fold(0.0f64, |m, c| m.max(c.z.abs())))
    }
}

/// Per-mode power spectrum of a set of configurations on one lattice.
pub fn power_spectrum<'a, I>(samples: I) -> Result<SpectrumEstimate>
where
    I: IntoIterator<Item = &'a FieldConfiguration>,
{
    let mut iter = samples.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| invalid("power spectrum needs >= 2 samples, got 0"))?;
    let mut acc = SpectrumAccumulator::new(*first.lattice())?;
    acc.push(first)?;
    for cfg in iter {
        acc.push(cfg)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37 % 101) as f64).sin() * 3.0 + 1e6).collect();
        let mut s = RunningStats::new();
        xs.iter().for_each(|&x| s.push(x));
        let mean = xs.iter().sum::<f64>() / 100.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 99.0;
        assert!((s.mean() - mean).abs() < 1e-9);
        assert!((s.variance() - var).abs() < 1e-9 * var);

        let (mut a, mut b) = (RunningStats::new(), RunningStats::new());
        xs[..30].iter().for_each(|&x| a.push(x));
        xs[30..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert_eq!(a.count(), 100);
        assert!((a.mean() - mean).abs() < 1e-9);
        assert!((a.variance() - var).abs() < 1e-9 * var);
        assert!(RunningStats::new().variance().is_nan());
    }

    #[test]
    fn spectrum_requires_two_samples_and_one_lattice() {
        let l = LatticeSpec::new(1, 8, 1.0).unwrap();
        let z = FieldConfiguration::zeros(l);
        assert!(power_spectrum(std::iter::empty()).is_err());
        assert!(power_spectrum([&z]).is_err());
        let other = FieldConfiguration::zeros(LatticeSpec::new(1, 16, 1.0).unwrap());
        assert!(power_spectrum([&z, &other]).is_err());
        let est = power_spectrum([&z, &z]).unwrap();
        assert_eq!(est.count, 2);
        assert_eq!(est.fraction_within(&[0.0; 8], 1.0).unwrap(), 1.0);
    }
}
