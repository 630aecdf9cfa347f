use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::LatticeSpec;

/// Unnormalised D-dimensional DFT on a cubic lattice, row-major with the
/// last axis contiguous. Forward uses e^{−2πi jn/N}.
#[derive(Clone)]
pub(crate) struct LatticeFft {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for LatticeFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeFft").field("n", &self.n).field("dim", &self.dim).finish()
    }
}

impl LatticeFft {
    pub fn new(lattice: &LatticeSpec) -> Self {
        let mut planner = FftPlanner::new();
        let n = lattice.sites_per_axis;
        LatticeFft {
            n,
            dim: lattice.dim,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.apply(buf, &self.forward);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.apply(buf, &self.inverse);
    }

    fn apply(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n.pow(self.dim as u32));
        // Contiguous last axis: rustfft transforms every length-n chunk.
        fft.process(buf);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim.saturating_sub(1) {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = buf.len() / (n * stride);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = buf[base + i * stride];
                    }
                    fft.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        buf[base + i * stride] = *v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_direct_dft_in_two_dimensions() {
        let lat = LatticeSpec::new(2, 8, 1.0).unwrap();
        let n = 8;
        let data: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut buf = data.clone();
        LatticeFft::new(&lat).forward(&mut buf);
        for j0 in 0..n {
            for j1 in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for x0 in 0..n {
                    for x1 in 0..n {
                        let ph = -2.0 * PI * ((j0 * x0 + j1 * x1) as f64) / n as f64;
                        acc += data[x0 * n + x1] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((acc - buf[j0 * n + j1]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_undoes_forward_up_to_site_count() {
        let lat = LatticeSpec::new(3, 8, 0.5).unwrap();
        let data: Vec<Complex64> = (0..512).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let mut buf = data.clone();
        let fft = LatticeFft::new(&lat);
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&data) {
            assert!((a / 512.0 - b).norm() < 1e-10);
        }
    }
}
