//! Test functions and the mass-shell inner products.
//!
//! After integrating out 2π δ(k·k − m²) θ(k₀) every kernel reduces to
//!
//! (f, g) = P ∫ dᴰk/(2π)ᴰ w(ω_k) f̃*(ω_k, k) g̃(ω_k, k),  ω_k = √(|k|² + m²),
//!
//! with (P, w) = (ħ/2, 1/ω) for the quantum kernel, (kT, 1/ω²) for the
//! classical kernel and (ξħ/2, 1/ω) for the ξ-scaled kernel. The kernel
//! conjugates its first argument.

mod packet;
pub mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{invalid, Error, Result};

pub use packet::{fourier_transform, WavePacket};
pub use quadrature::{Cutoff, QuadratureRule, QuadratureSpec};

/// Envelope standard deviations covered by the automatic window.
const WINDOW_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelVariant {
    Quantum,
    Classical,
    XiScaled,
}

impl std::str::FromStr for KernelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(KernelVariant::Quantum),
            "classical" => Ok(KernelVariant::Classical),
            "xi" | "xi-scaled" => Ok(KernelVariant::XiScaled),
            other => Err(invalid(format!("unknown kernel '{other}' (expected quantum, classical or xi)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub variant: KernelVariant,
    pub constants: PhysicalConstants,
    pub dim: usize,
    pub quadrature: QuadratureSpec,
}

impl KernelSpec {
    pub fn new(variant: KernelVariant, constants: PhysicalConstants, dim: usize) -> Self {
        KernelSpec {
            variant,
            constants,
            dim,
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn quantum(constants: PhysicalConstants, dim: usize) -> Self {
        Self::new(KernelVariant::Quantum, constants, dim)
    }

    pub fn classical(constants: PhysicalConstants, dim: usize) -> Self {
        Self::new(KernelVariant::Classical, constants, dim)
    }

    pub fn xi_scaled(constants: PhysicalConstants, dim: usize) -> Self {
        Self::new(KernelVariant::XiScaled, constants, dim)
    }

    pub fn with_quadrature(mut self, quadrature: QuadratureSpec) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn with_variant(mut self, variant: KernelVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.quadrature.validate()?;
        if !(1..=3).contains(&self.dim) {
            return Err(invalid(format!("dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        if self.variant == KernelVariant::Classical && self.constants.kt <= 0.0 {
            return Err(invalid("classical kernel requires kT > 0"));
        }
        // ∫ dᴰk w(|k|) diverges at k = 0 for these massless cases.
        if self.constants.mass == 0.0 {
            let divergent = match self.variant {
                KernelVariant::Quantum | KernelVariant::XiScaled => self.dim == 1,
                KernelVariant::Classical => self.dim <= 2,
            };
            if divergent {
                return Err(invalid(format!(
                    "{:?} kernel with m = 0 is infrared divergent in D = {}",
                    self.variant, self.dim
                )));
            }
        }
        Ok(())
    }

    /// P / (2π)ᴰ.
    fn prefactor(&self) -> f64 {
        let c = &self.constants;
        let p = match self.variant {
            KernelVariant::Quantum => 0.5 * c.hbar,
            KernelVariant::Classical => c.kt,
            KernelVariant::XiScaled => 0.5 * c.xi * c.hbar,
        };
        p / (2.0 * PI).powi(self.dim as i32)
    }

    #[inline]
    fn shape(&self, omega: f64) -> f64 {
        match self.variant {
            KernelVariant::Quantum | KernelVariant::XiScaled => 1.0 / omega,
            KernelVariant::Classical => 1.0 / (omega * omega),
        }
    }
}

/// Value of an inner product together with quadrature diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProductReport {
    pub value: Complex64,
    /// ∫ |integrand|, the scale used for the convergence test.
    pub abs_integral: f64,
    /// Estimate with doubled window and doubled node count, if it was run.
    pub refined: Option<Complex64>,
    pub rel_change: Option<f64>,
    pub nodes: usize,
    pub windows: Vec<(f64, f64)>,
}

/// (f, g) under `spec`, conjugating `f`.
pub fn inner_product(spec: &KernelSpec, f: &WavePacket, g: &WavePacket) -> Result<Complex64> {
    inner_product_report(spec, f, g).map(|r| r.value)
}

pub fn inner_product_report(
    spec: &KernelSpec,
    f: &WavePacket,
    g: &WavePacket,
) -> Result<InnerProductReport> {
    spec.validate()?;
    f.validate()?;
    g.validate()?;
    if f.dim != spec.dim || g.dim != spec.dim {
        return Err(invalid(format!(
            "dimension mismatch: kernel D={}, packets D={} and D={}",
            spec.dim, f.dim, g.dim
        )));
    }
    let q = &spec.quadrature;
    let base_windows = windows(spec, f, g, 1.0);
    let (value, abs_integral) = integrate(spec, f, g, &base_windows, q.nodes);
    let mut report = InnerProductReport {
        value,
        abs_integral,
        refined: None,
        rel_change: None,
        nodes: q.nodes,
        windows: base_windows,
    };
    if q.check {
        let wide = windows(spec, f, g, 2.0);
        let (refined, refined_abs) = integrate(spec, f, g, &wide, 2 * q.nodes);
        let scale = refined_abs.max(abs_integral);
        let rel_change = if scale > 0.0 {
            (refined - value).norm() / scale
        } else {
            0.0
        };
        if !(rel_change <= q.tolerance) {
            return Err(Error::Accuracy {
                base: value,
                refined,
                rel_change,
                tolerance: q.tolerance,
            });
        }
        report.refined = Some(refined);
        report.rel_change = Some(rel_change);
    }
    Ok(report)
}

/// Real, non-negative (f, f). Fails if the imaginary part or a negative real
/// part exceeds round-off.
pub fn positivity_check(spec: &KernelSpec, f: &WavePacket) -> Result<f64> {
    let r = inner_product_report(spec, f, f)?;
    let tol = 1e-12 * r.abs_integral;
    if r.value.im.abs() > tol {
        return Err(Error::NumericConsistency(format!(
            "(f, f) has imaginary part {:e} above tolerance {tol:e}",
            r.value.im
        )));
    }
    if r.value.re < -tol {
        return Err(Error::NumericConsistency(format!(
            "(f, f) = {:e} is negative",
            r.value.re
        )));
    }
    Ok(r.value.re.max(0.0))
}

fn windows(spec: &KernelSpec, f: &WavePacket, g: &WavePacket, scale: f64) -> Vec<(f64, f64)> {
    match spec.quadrature.cutoff {
        Cutoff::Fixed(kmax) => vec![(-scale * kmax, scale * kmax); spec.dim],
        Cutoff::Auto => {
            // |f̃* g̃| is bounded by a Gaussian in k with precision σf² + σg².
            let pf = f.width_x * f.width_x;
            let pg = g.width_x * g.width_x;
            let s = 1.0 / (pf + pg).sqrt();
            let half = scale * WINDOW_SIGMAS * s;
            (0..spec.dim)
                .map(|j| {
                    let c = (pf * f.carrier_wavevector[j] + pg * g.carrier_wavevector[j]) / (pf + pg);
                    (c - half, c + half)
                })
                .collect()
        }
    }
}

/// Tensor-product quadrature of the reduced integrand. The spatial part of
/// f̃ factorises over axes, so only the on-shell time factor is evaluated per
/// grid point.
fn integrate(
    spec: &KernelSpec,
    f: &WavePacket,
    g: &WavePacket,
    windows: &[(f64, f64)],
    nodes: usize,
) -> (Complex64, f64) {
    let rule = spec.quadrature.rule;
    let mass2 = spec.constants.mass * spec.constants.mass;
    let axes: Vec<Vec<(f64, Complex64)>> = windows
        .iter()
        .enumerate()
        .map(|(j, &(lo, hi))| {
            quadrature::axis_nodes(rule, nodes, lo, hi, spec.constants.mass)
                .into_iter()
                .map(|(k, w)| (k, w * f.axis_factor(j, k).conj() * g.axis_factor(j, k)))
                .collect()
        })
        .collect();

    let radial = |k2: f64| -> Complex64 {
        let omega = (k2 + mass2).sqrt();
        spec.shape(omega) * f.time_factor(omega).conj() * g.time_factor(omega)
    };

    let (sum, abs) = match spec.dim {
        1 => axes[0].iter().fold((Complex64::new(0.0, 0.0), 0.0), |(s, a), &(k, p)| {
            let t = p * radial(k * k);
            (s + t, a + t.norm())
        }),
        2 => {
            let partials: Vec<(Complex64, f64)> = axes[0]
                .par_iter()
                .map(|&(k0, p0)| {
                    axes[1].iter().fold((Complex64::new(0.0, 0.0), 0.0), |(s, a), &(k1, p1)| {
                        let t = p0 * p1 * radial(k0 * k0 + k1 * k1);
                        (s + t, a + t.norm())
                    })
                })
                .collect();
            sum_ordered(&partials)
        }
        _ => {
            let partials: Vec<(Complex64, f64)> = axes[0]
                .par_iter()
                .map(|&(k0, p0)| {
                    let mut s = Complex64::new(0.0, 0.0);
                    let mut a = 0.0;
                    for &(k1, p1) in &axes[1] {
                        let p01 = p0 * p1;
                        let k01 = k0 * k0 + k1 * k1;
                        for &(k2, p2) in &axes[2] {
                            let t = p01 * p2 * radial(k01 + k2 * k2);
                            s += t;
                            a += t.norm();
                        }
                    }
                    (s, a)
                })
                .collect();
            sum_ordered(&partials)
        }
    };

    let amp = f.amplitude.conj() * g.amplitude;
    let pre = spec.prefactor();
    (pre * amp * sum, pre * amp.norm() * abs)
}

fn sum_ordered(partials: &[(Complex64, f64)]) -> (Complex64, f64) {
    partials
        .iter()
        .fold((Complex64::new(0.0, 0.0), 0.0), |(s, a), &(ps, pa)| (s + ps, a + pa))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn packets() -> (WavePacket, WavePacket) {
        let f = WavePacket::standard(1)
            .with_center(0.2, &[-0.5])
            .with_widths(1.2, 0.9)
            .with_carrier(1.3, &[0.4])
            .with_amplitude(c(0.8, 0.3));
        let g = WavePacket::standard(1)
            .with_center(-0.7, &[0.6])
            .with_widths(0.7, 1.4)
            .with_carrier(0.9, &[-0.8])
            .with_amplitude(c(-0.2, 1.1));
        (f, g)
    }

    #[test]
    fn xi_kernel_is_xi_times_quantum() {
        let (f, g) = packets();
        let k = PhysicalConstants::default().with_xi(0.5);
        let q = inner_product(&KernelSpec::quantum(k, 1), &f, &g).unwrap();
        let x = inner_product(&KernelSpec::xi_scaled(k, 1), &f, &g).unwrap();
        assert!((x - 0.5 * q).norm() <= 1e-15 * q.norm());
    }

    #[test]
    fn hermitian_for_all_variants() {
        let (f, g) = packets();
        for v in [KernelVariant::Quantum, KernelVariant::Classical, KernelVariant::XiScaled] {
            let spec = KernelSpec::new(v, PhysicalConstants::default(), 1);
            let fg = inner_product(&spec, &f, &g).unwrap();
            let gf = inner_product(&spec, &g, &f).unwrap();
            assert!((fg - gf.conj()).norm() <= 1e-14 * fg.norm(), "{v:?}");
        }
    }

    #[test]
    fn positivity_and_scaling() {
        let (f, _) = packets();
        let spec = KernelSpec::quantum(PhysicalConstants::default(), 1);
        let n1 = positivity_check(&spec, &f).unwrap();
        assert!(n1 > 0.0);
        let n2 = positivity_check(&spec, &f.scaled(c(2.0, 0.0))).unwrap();
        assert!((n2 - 4.0 * n1).abs() <= 1e-13 * n2);
        let zero = positivity_check(&spec, &f.with_amplitude(c(0.0, 0.0))).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn sesquilinear_slots() {
        let (f, g) = packets();
        let spec = KernelSpec::quantum(PhysicalConstants::default(), 1);
        let base = inner_product(&spec, &f, &g).unwrap();
        let alpha = c(0.3, -1.7);
        let left = inner_product(&spec, &f.scaled(alpha), &g).unwrap();
        let right = inner_product(&spec, &f, &g.scaled(alpha)).unwrap();
        assert!((left - alpha.conj() * base).norm() <= 1e-13 * left.norm());
        assert!((right - alpha * base).norm() <= 1e-13 * right.norm());
    }

    #[test]
    fn fixed_cutoff_and_trapezoid_agree_with_default() {
        let (f, g) = packets();
        let k = PhysicalConstants::default();
        let auto = inner_product(&KernelSpec::quantum(k, 1), &f, &g).unwrap();
        let fixed = KernelSpec::quantum(k, 1).with_quadrature(
            QuadratureSpec::default().with_cutoff(Cutoff::Fixed(f.k_extent().max(g.k_extent()))),
        );
        let trap = KernelSpec::quantum(k, 1)
            .with_quadrature(QuadratureSpec::default().with_rule(QuadratureRule::Trapezoid));
        for spec in [fixed, trap] {
            let v = inner_product(&spec, &f, &g).unwrap();
            assert!((v - auto).norm() <= 1e-10 * auto.norm(), "{v} vs {auto}");
        }
    }

    #[test]
    fn classical_to_quantum_ratio_tends_to_two_over_mass() {
        // A packet narrow in k around 0: the ratio of kernels is ⟨2/ω⟩,
        // with ω → m = 1 as the k-width shrinks. Richardson in σ_k².
        let k = PhysicalConstants::default();
        let ratio = |sigma_k: f64| {
            let f = WavePacket::standard(1).with_widths(1.0, 1.0 / sigma_k).with_carrier(1.0, &[0.0]);
            let cl = positivity_check(&KernelSpec::classical(k, 1), &f).unwrap();
            let qu = positivity_check(&KernelSpec::quantum(k, 1), &f).unwrap();
            cl / qu
        };
        let (r1, r2, r3) = (ratio(0.2), ratio(0.1), ratio(0.05));
        // Errors are even in σ_k: eliminate the σ_k² and σ_k⁴ terms.
        let a = (4.0 * r2 - r1) / 3.0;
        let b = (4.0 * r3 - r2) / 3.0;
        let extrapolated = (16.0 * b - a) / 15.0;
        assert!((r3 - 2.0).abs() < 1e-2);
        assert!((extrapolated - 2.0).abs() < 1e-5, "{r1} {r2} {r3} -> {extrapolated}");
    }

    #[test]
    fn two_and_three_dimensions() {
        let k = PhysicalConstants::default();
        let q = QuadratureSpec::default().with_nodes(64);
        let f3 = WavePacket::standard(3).with_carrier(1.0, &[0.3, 0.0, -0.2]);
        let g3 = WavePacket::standard(3)
            .with_center(0.1, &[0.2, -0.1, 0.0])
            .with_carrier(1.2, &[0.0, 0.1, 0.0]);
        let spec = KernelSpec::quantum(k, 3).with_quadrature(q);
        let fg = inner_product(&spec, &f3, &g3).unwrap();
        let gf = inner_product(&spec, &g3, &f3).unwrap();
        assert!((fg - gf.conj()).norm() <= 1e-14 * fg.norm());
        assert!(positivity_check(&spec, &f3).unwrap() > 0.0);

        let f2 = WavePacket::standard(2).with_carrier(0.5, &[0.2, 0.1]);
        let spec2 = KernelSpec::quantum(k, 2).with_quadrature(QuadratureSpec::default().with_nodes(96));
        assert!(positivity_check(&spec2, &f2).unwrap() > 0.0);
    }

    #[test]
    fn error_paths() {
        let k = PhysicalConstants::default();
        let f1 = WavePacket::standard(1);
        let f2 = WavePacket::standard(2);
        assert!(matches!(
            inner_product(&KernelSpec::quantum(k, 1), &f1, &f2),
            Err(Error::InvalidInput(_))
        ));
        assert!(KernelSpec::classical(k.with_kt(0.0), 1).validate().is_err());
        assert!(KernelSpec::quantum(k.with_mass(0.0), 1).validate().is_err());
        assert!(KernelSpec::classical(k.with_mass(0.0), 2).validate().is_err());
        assert!(KernelSpec::quantum(k.with_mass(0.0), 2).validate().is_ok());
        assert!(KernelSpec::classical(k.with_mass(0.0), 3).validate().is_ok());

        // A fixed box that truncates the packet: the doubling test must fire
        // and carry both estimates.
        let wide = WavePacket::standard(1).with_widths(1.0, 0.5);
        let spec = KernelSpec::quantum(k, 1)
            .with_quadrature(QuadratureSpec::default().with_cutoff(Cutoff::Fixed(1.0)));
        match inner_product(&spec, &wide, &wide) {
            Err(Error::Accuracy { base, refined, .. }) => assert!(refined.re > base.re),
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn variant_names_parse() {
        assert_eq!("xi".parse::<KernelVariant>().unwrap(), KernelVariant::XiScaled);
        assert_eq!("classical".parse::<KernelVariant>().unwrap(), KernelVariant::Classical);
        assert!("bogus".parse::<KernelVariant>().is_err());
    }
}
