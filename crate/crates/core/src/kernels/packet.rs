use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// A complex-modulated Gaussian test function on (D+1)-dimensional spacetime,
///
/// f(t, x) = A · exp(−(t−t₀)²/2τ²) · exp(−|x−x₀|²/2σ²) · exp(−iω̄(t−t₀)) · exp(ik̄·(x−x₀)).
///
/// Its Fourier transform, with f̃(k) = ∫dt dᴰx e^{i(k₀t − k·x)} f(t, x), is
/// known in closed form, so none of the kernels need a numerical transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub dim: usize,
    pub center_t: f64,
    pub center_x: Vec<f64>,
    pub width_t: f64,
    pub width_x: f64,
    pub carrier_freq: f64,
    pub carrier_wavevector: Vec<f64>,
    pub amplitude: Complex64,
}

impl WavePacket {
    /// Unit-width, unit-amplitude packet centred at the origin with no carrier.
    pub fn standard(dim: usize) -> Self {
        WavePacket {
            dim,
            center_t: 0.0,
            center_x: vec![0.0; dim],
            width_t: 1.0,
            width_x: 1.0,
            carrier_freq: 0.0,
            carrier_wavevector: vec![0.0; dim],
            amplitude: Complex64::new(1.0, 0.0),
        }
    }

    pub fn with_center(mut self, t: f64, x: &[f64]) -> Self {
        self.center_t = t;
        self.center_x = x.to_vec();
        self
    }

    pub fn with_widths(mut self, width_t: f64, width_x: f64) -> Self {
        self.width_t = width_t;
        self.width_x = width_x;
        self
    }

    pub fn with_carrier(mut self, freq: f64, wavevector: &[f64]) -> Self {
        self.carrier_freq = freq;
        self.carrier_wavevector = wavevector.to_vec();
        self
    }

    pub fn with_amplitude(mut self, amplitude: Complex64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// The same packet multiplied by a complex scalar.
    pub fn scaled(&self, alpha: Complex64) -> Self {
        let mut p = self.clone();
        p.amplitude *= alpha;
        p
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(invalid(format!("packet dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        if self.center_x.len() != self.dim || self.carrier_wavevector.len() != self.dim {
            return Err(invalid(format!(
                "packet vectors must have {} components (center_x has {}, carrier_wavevector has {})",
                self.dim,
                self.center_x.len(),
                self.carrier_wavevector.len()
            )));
        }
        let scalars = [
            self.center_t,
            self.width_t,
            self.width_x,
            self.carrier_freq,
            self.amplitude.re,
            self.amplitude.im,
        ];
        let vectors = self.center_x.iter().chain(&self.carrier_wavevector);
        if scalars.iter().chain(vectors).any(|v| !v.is_finite()) {
            return Err(invalid("packet parameters must be finite"));
        }
        if self.width_t <= 0.0 || self.width_x <= 0.0 {
            return Err(invalid(format!(
                "packet widths must be > 0, got tau={} sigma={}",
                self.width_t, self.width_x
            )));
        }
        Ok(())
    }

    /// Position-space value f(t, x).
    pub fn value(&self, t: f64, x: &[f64]) -> Complex64 {
        let dt = t - self.center_t;
        let mut r2 = 0.0;
        let mut phase = -self.carrier_freq * dt;
        for j in 0..self.dim {
            let dx = x[j] - self.center_x[j];
            r2 += dx * dx;
            phase += self.carrier_wavevector[j] * dx;
        }
        let envelope = (-dt * dt / (2.0 * self.width_t * self.width_t)
            - r2 / (2.0 * self.width_x * self.width_x))
            .exp();
        self.amplitude * Complex64::from_polar(envelope, phase)
    }

    /// Temporal factor of f̃: τ√(2π) e^{−τ²(k₀−ω̄)²/2} e^{ik₀t₀}.
    #[inline]
    pub(crate) fn time_factor(&self, k0: f64) -> Complex64 {
        let d = k0 - self.carrier_freq;
        let mag = self.width_t * SQRT_2PI * (-0.5 * self.width_t * self.width_t * d * d).exp();
        Complex64::from_polar(mag, k0 * self.center_t)
    }

    /// Spatial factor of f̃ along one axis: σ√(2π) e^{−σ²(k−k̄)²/2} e^{−ikx₀}.
    #[inline]
    pub(crate) fn axis_factor(&self, axis: usize, k: f64) -> Complex64 {
        let d = k - self.carrier_wavevector[axis];
        let mag = self.width_x * SQRT_2PI * (-0.5 * self.width_x * self.width_x * d * d).exp();
        Complex64::from_polar(mag, -k * self.center_x[axis])
    }

    /// Largest |k̄| + 12/σ, the extent of the packet in wave-number space.
    pub fn k_extent(&self) -> f64 {
        let kbar = self.carrier_wavevector.iter().map(|k| k * k).sum::<f64>().sqrt();
        kbar + 12.0 / self.width_x
    }
}

/// Closed-form Fourier transform f̃(k₀, k).
pub fn fourier_transform(f: &WavePacket, k0: f64, kvec: &[f64]) -> Result<Complex64> {
    f.validate()?;
    if kvec.len() != f.dim {
        return Err(invalid(format!(
            "wave vector has {} components, packet has dimension {}",
            kvec.len(),
            f.dim
        )));
    }
    if !k0.is_finite() || kvec.iter().any(|k| !k.is_finite()) {
        return Err(invalid("wave vector must be finite"));
    }
    let spatial: Complex64 = kvec.iter().enumerate().map(|(j, &k)| f.axis_factor(j, k)).product();
    Ok(f.amplitude * f.time_factor(k0) * spatial)
}
