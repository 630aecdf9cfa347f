use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One-dimensional quadrature rule. Both rules are open: no node sits on an
/// endpoint of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Composite midpoint rule on equal cells.
    Trapezoid,
    #[default]
    GaussLegendre,
}

/// Integration window per wave-number axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Cutoff {
    /// Window fitted to the Gaussian envelope of f̃* g̃: centre ± 12 envelope
    /// standard deviations.
    #[default]
    Auto,
    /// Symmetric box [−k_max, k_max] on every axis.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub cutoff: Cutoff,
    pub nodes: usize,
    pub rule: QuadratureRule,
    /// Run the doubled-window, doubled-node estimate and fail if it moves the
    /// result by more than `tolerance` relative to ∫|integrand|.
    pub check: bool,
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            cutoff: Cutoff::Auto,
            nodes: 256,
            rule: QuadratureRule::GaussLegendre,
            check: true,
            tolerance: 1e-8,
        }
    }
}

pub const MIN_NODES: usize = 16;

impl QuadratureSpec {
    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn unchecked(mut self) -> Self {
        self.check = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < MIN_NODES {
            return Err(invalid(format!(
                "quadrature needs at least {MIN_NODES} nodes per axis, got {}",
                self.nodes
            )));
        }
        if let Cutoff::Fixed(k) = self.cutoff {
            if !(k.is_finite() && k > 0.0) {
                return Err(invalid(format!("cutoff must be finite and > 0, got {k}")));
            }
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(invalid("quadrature tolerance must be finite and > 0"));
        }
        Ok(())
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [−1, 1].
///
/// Newton iteration on P_n from the Tricomi initial guess; converges to
/// machine precision for every n used here.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights of `rule` with `n` nodes mapped onto [lo, hi].
pub fn rule_nodes(rule: QuadratureRule, n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    match rule {
        QuadratureRule::GaussLegendre => gauss_legendre(n)
            .into_iter()
            .map(|(x, w)| (mid + half * x, half * w))
            .collect(),
        QuadratureRule::Trapezoid => {
            let h = (hi - lo) / n as f64;
            (0..n).map(|i| (lo + (i as f64 + 0.5) * h, h)).collect()
        }
    }
}

/// Smallest Gauss-Legendre panel.
const MIN_PANEL_NODES: usize = 16;
/// Grading levels toward k = 0 when the mass is zero.
const MASSLESS_LEVELS: i32 = 8;

/// Panel breakpoints graded geometrically toward k = 0, where 1/ω peaks with
/// width m. Only scales below an eighth of the window are added.
fn breakpoints(lo: f64, hi: f64, mass: f64) -> Vec<f64> {
    let top = (hi - lo) / 8.0;
    let scales: Vec<f64> = if mass > 0.0 {
        std::iter::successors(Some(mass), |s| Some(s * 4.0))
            .take_while(|&s| s < top)
            .collect()
    } else {
        (0..MASSLESS_LEVELS).map(|j| top * 4f64.powi(-j)).collect()
    };
    let mut pts = vec![lo, hi];
    if !scales.is_empty() {
        pts.push(0.0);
        pts.extend(scales.iter().flat_map(|&s| [s, -s]));
    }
    pts.retain(|&x| x >= lo && x <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Per-axis nodes for the mass-shell integrand. Gauss-Legendre is applied on
/// graded panels with nodes shared in proportion to panel length; the
/// midpoint rule stays uniform.
pub fn axis_nodes(rule: QuadratureRule, n: usize, lo: f64, hi: f64, mass: f64) -> Vec<(f64, f64)> {
    if rule == QuadratureRule::Trapezoid {
        return rule_nodes(rule, n, lo, hi);
    }
    let pts = breakpoints(lo, hi, mass);
    let width = hi - lo;
    pts.windows(2)
        .flat_map(|p| {
            let share = (n as f64 * (p[1] - p[0]) / width).ceil() as usize;
            rule_nodes(rule, share.max(MIN_PANEL_NODES), p[0], p[1])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [16, 64, 256, 512] {
            let nodes = gauss_legendre(n);
            let total: f64 = nodes.iter().map(|(_, w)| w).sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n} weight sum {total}");
            let x2: f64 = nodes.iter().map(|(x, w)| w * x * x).sum();
            assert!((x2 - 2.0 / 3.0).abs() < 1e-13);
            let x10: f64 = nodes.iter().map(|(x, w)| w * x.powi(10)).sum();
            assert!((x10 - 2.0 / 11.0).abs() < 1e-13);
        }
    }

    #[test]
    fn nodes_are_interior_and_sorted() {
        let nodes = rule_nodes(QuadratureRule::GaussLegendre, 33, 0.0, 1.0);
        assert!(nodes.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(nodes.iter().all(|(x, _)| *x > 0.0 && *x < 1.0));
        let mids = rule_nodes(QuadratureRule::Trapezoid, 10, 0.0, 1.0);
        assert!((mids[0].0 - 0.05).abs() < 1e-15);
        assert!(mids.iter().all(|(x, _)| *x > 0.0 && *x < 1.0));
    }

    #[test]
    fn gaussian_integral() {
        let exact = (2.0 * PI).sqrt();
        for rule in [QuadratureRule::GaussLegendre, QuadratureRule::Trapezoid] {
            let v: f64 = rule_nodes(rule, 256, -12.0, 12.0)
                .iter()
                .map(|(x, w)| w * (-0.5 * x * x).exp())
                .sum();
            assert!((v - exact).abs() < 1e-13, "{rule:?}: {v}");
        }
    }

    #[test]
    fn graded_panels_resolve_narrow_peak() {
        let m = 0.05;
        let exact = 2.0 * (10.0f64 / m).asinh();
        let graded: f64 = axis_nodes(QuadratureRule::GaussLegendre, 256, -10.0, 10.0, m)
            .iter()
            .map(|(k, w)| w / k.hypot(m))
            .sum();
        assert!((graded - exact).abs() < 1e-10 * exact, "{graded} vs {exact}");
        let pts = breakpoints(-10.0, 10.0, m);
        assert!(pts.contains(&0.0) && pts.contains(&0.8) && !pts.contains(&3.2));
        assert_eq!(breakpoints(-10.0, 10.0, 5.0), vec![-10.0, 10.0]);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        assert!(QuadratureSpec::default().with_nodes(8).validate().is_err());
        assert!(QuadratureSpec::default()
            .with_cutoff(Cutoff::Fixed(-1.0))
            .validate()
            .is_err());
    }
}
