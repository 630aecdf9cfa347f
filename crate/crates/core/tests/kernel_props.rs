use kgfield::kernels::{inner_product, positivity_check, KernelSpec, WavePacket};
use kgfield::{Complex64, PhysicalConstants};
use proptest::prelude::*;

fn packet() -> impl Strategy<Value = WavePacket> {
    (
        -2.0..2.0f64,
        -2.0..2.0f64,
        0.5..2.0f64,
        0.5..2.0f64,
        0.5..3.0f64,
        -2.0..2.0f64,
        0.5..2.0f64,
        -3.0..3.0f64,
    )
        .prop_map(|(t, x, wt, wx, w, k, r, th)| {
            WavePacket::standard(1)
                .with_center(t, &[x])
                .with_widths(wt, wx)
                .with_carrier(w, &[k])
                .with_amplitude(Complex64::from_polar(r, th))
        })
}

fn constants() -> impl Strategy<Value = PhysicalConstants> {
    (0.3..3.0f64, 0.3..3.0f64, 0.2..3.0f64, 0.05..0.95f64)
        .prop_map(|(h, t, m, xi)| PhysicalConstants::default().with_hbar(h).with_kt(t).with_mass(m).with_xi(xi))
}

fn cs_scale(spec: &KernelSpec, f: &WavePacket, g: &WavePacket) -> f64 {
    let ff = inner_product(spec, f, f).unwrap().norm();
    let gg = inner_product(spec, g, g).unwrap().norm();
    (ff * gg).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hermitian(k in constants(), f in packet(), g in packet()) {
        for spec in [KernelSpec::quantum(k, 1), KernelSpec::classical(k, 1)] {
            let fg = inner_product(&spec, &f, &g).unwrap();
            let gf = inner_product(&spec, &g, &f).unwrap();
            prop_assert!((fg - gf.conj()).norm() <= 1e-12 * cs_scale(&spec, &f, &g));
        }
    }

    #[test]
    fn xi_scaling_is_exact(k in constants(), f in packet(), g in packet()) {
        let q = inner_product(&KernelSpec::quantum(k, 1), &f, &g).unwrap();
        let x = inner_product(&KernelSpec::xi_scaled(k, 1), &f, &g).unwrap();
        prop_assert!((x - k.xi * q).norm() <= 1e-14 * q.norm());
    }

    #[test]
    fn positive_and_quadratic(k in constants(), f in packet(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let spec = KernelSpec::quantum(k, 1);
        let n = positivity_check(&spec, &f).unwrap();
        prop_assert!(n > 0.0);
        let alpha = Complex64::new(re, im);
        let scaled = positivity_check(&spec, &f.scaled(alpha)).unwrap();
        prop_assert!((scaled - alpha.norm_sqr() * n).abs() <= 1e-12 * scaled.max(n));
    }

    #[test]
    fn cauchy_schwarz(k in constants(), f in packet(), g in packet()) {
        let spec = KernelSpec::quantum(k, 1);
        let fg = inner_product(&spec, &f, &g).unwrap().norm();
        prop_assert!(fg <= cs_scale(&spec, &f, &g) * (1.0 + 1e-12));
    }

    #[test]
    fn hbar_and_kt_are_prefactors(k in constants(), f in packet(), g in packet(), s in 0.5..4.0f64) {
        let q1 = inner_product(&KernelSpec::quantum(k, 1), &f, &g).unwrap();
        let q2 = inner_product(&KernelSpec::quantum(k.with_hbar(s * k.hbar), 1), &f, &g).unwrap();
        prop_assert!((q2 - s * q1).norm() <= 1e-13 * q2.norm());
        let c1 = inner_product(&KernelSpec::classical(k, 1), &f, &g).unwrap();
        let c2 = inner_product(&KernelSpec::classical(k.with_kt(s * k.kt), 1), &f, &g).unwrap();
        prop_assert!((c2 - s * c1).norm() <= 1e-13 * c2.norm());
    }
}

#[test]
fn two_dimensional_hermiticity() {
    let k = PhysicalConstants::default();
    let spec = KernelSpec::quantum(k, 2);
    let f = WavePacket::standard(2).with_carrier(1.0, &[0.3, -0.2]).with_center(0.4, &[0.5, 0.0]);
    let g = WavePacket::standard(2).with_widths(0.8, 1.3).with_carrier(1.4, &[-0.5, 0.1]);
    let fg = inner_product(&spec, &f, &g).unwrap();
    let gf = inner_product(&spec, &g, &f).unwrap();
    assert!((fg - gf.conj()).norm() <= 1e-12 * fg.norm());
}

#[test]
fn massless_three_dimensional_is_finite() {
    let k = PhysicalConstants::default().with_mass(0.0);
    let spec = KernelSpec::quantum(k, 3).with_quadrature(kgfield::kernels::QuadratureSpec::default().with_nodes(64));
    let f = WavePacket::standard(3).with_widths(1.0, 1.5).with_carrier(0.5, &[0.2, 0.0, 0.0]);
    let v = inner_product(&spec, &f, &f).unwrap();
    assert!(v.re.is_finite() && v.re > 0.0);
    assert!(KernelSpec::quantum(k, 1).validate().is_err());
}
