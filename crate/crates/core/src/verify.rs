//! Self-check suite: kernel axioms, algebra equivalence, spectral identities,
//! sampler moments and the number-basis oracle.

use std::f64::consts::PI;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::error::{invalid, Error, Result};
use crate::fockoracle::{self, ModeSpec};
use crate::kernels::{inner_product, KernelSpec, WavePacket};
use crate::opalgebra::{
    for_each_pairing, parse_expression, vacuum_expectation, wick_vev, Factor, FactorKind, FnIndex,
    FunctionRegistry, IpTable, OperatorExpression,
};
use crate::sampler::io::BinarySampleWriter;
use crate::sampler::{
    expected_power, hamiltonian_c, LatticeSpec, RunningStats, SampleStream, Sampler, SpectrumAccumulator,
};
use crate::spectra::{crossover_report, lambda_of_xi, linear_grid, thermal_argument, Ensemble, SpectralDensity};

pub const KERNEL_PAIRS: usize = 100;
pub const HERMITICITY_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;
pub const XI_SCALING_TOL: f64 = 1e-12;
/// Agreement of the default quadrature with the rapidity-variable oracle.
pub const RAPIDITY_TOL: f64 = 1e-8;

pub const ALGEBRA_TABLES: usize = 20;
pub const ALGEBRA_ORDERS: [usize; 4] = [2, 4, 6, 8];
pub const ALGEBRA_TOL: f64 = 1e-10;

pub const ORIENTATION_PAIRS: usize = 20;
pub const ORIENTATION_TOL: f64 = 1e-8;

pub const LAMBDA_GRID: usize = 256;
pub const LAMBDA_TOL: f64 = 1e-12;
pub const XI_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub const CROSSOVER_MASS: f64 = 0.01;
pub const CROSSOVER_TOL: f64 = 0.01;
pub const CROSSOVER_LOW_ARG: f64 = 0.1;
pub const CROSSOVER_HIGH_ARG: f64 = 3.0;

pub const SAMPLER_SITES: usize = 64;
pub const SAMPLER_SPACING: f64 = 1.0;
pub const DEFAULT_SAMPLES: u64 = 20_000;
pub const MOMENT_SIGMAS: f64 = 5.0;
pub const MOMENT_FRACTION: f64 = 0.99;

pub const EQUIPARTITION_SIGMAS: f64 = 5.0;

pub const COTH_POINTS: usize = 20;
pub const COTH_X_RANGE: (f64, f64) = (0.2, 10.0);
pub const ORACLE_K_POINTS: usize = 64;
pub const ORACLE_TOL: f64 = fockoracle::ORACLE_TOLERANCE;
pub const ORACLE_SIGMAS: f64 = 5.0;

/// Deliberate defects used to confirm that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corruption {
    #[default]
    None,
    /// Negates every kernel inner product.
    KernelSign,
}

impl FromStr for Corruption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Corruption::None),
            "kernel-sign" => Ok(Corruption::KernelSign),
            other => Err(invalid(format!("unknown corruption '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    All,
    Kernels,
    Algebra,
    Spectra,
    Sampler,
    Oracle,
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8],
            Suite::Kernels => &[1, 3],
            Suite::Algebra => &[2],
            Suite::Spectra => &[4, 5],
            Suite::Sampler => &[6, 7],
            Suite::Oracle => &[8],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "kernels" => Suite::Kernels,
            "algebra" => Suite::Algebra,
            "spectra" => Suite::Spectra,
            "sampler" => Suite::Sampler,
            "oracle" => Suite::Oracle,
            other => {
                return Err(invalid(format!(
                    "unknown suite '{other}' (expected all, kernels, algebra, spectra, sampler or oracle)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub samples: u64,
    pub threads: Option<usize>,
    pub corruption: Corruption,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 20240601,
            samples: DEFAULT_SAMPLES,
            threads: None,
            corruption: Corruption::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub criterion: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {} {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Runs one criterion. Internal errors count as failures.
pub fn run_check(criterion: u8, cfg: &VerifyConfig) -> CheckOutcome {
    let start = Instant::now();
    let (name, result): (&'static str, Result<(bool, String)>) = match criterion {
        1 => ("kernel axioms", kernel_axioms(cfg)),
        2 => ("algorithm equivalence", algorithm_equivalence(cfg)),
        3 => ("two-point orientation", two_point_orientation(cfg)),
        4 => ("lambda closure", lambda_closure()),
        5 => ("crossover", crossover()),
        6 => ("sampler moments", sampler_moments(cfg)),
        7 => ("equipartition", equipartition(cfg)),
        8 => ("number-basis oracle", fock_oracle(cfg)),
        _ => ("unknown", Err(invalid(format!("no criterion {criterion}")))),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome {
        criterion,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Vec<CheckOutcome> {
    suite.criteria().iter().map(|&c| run_check(c, cfg)).collect()
}

fn rng_for(cfg: &VerifyConfig, criterion: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(criterion);
    rng
}

struct Kernel {
    spec: KernelSpec,
    corruption: Corruption,
}

impl Kernel {
    fn new(spec: KernelSpec, cfg: &VerifyConfig) -> Self {
        Kernel {
            spec,
            corruption: cfg.corruption,
        }
    }

    fn ip(&self, f: &WavePacket, g: &WavePacket) -> Result<Complex64> {
        let v = inner_product(&self.spec, f, g)?;
        Ok(match self.corruption {
            Corruption::None => v,
            Corruption::KernelSign => -v,
        })
    }
}

/// A D = 1 packet mostly supported on the positive mass shell.
pub fn random_packet(rng: &mut ChaCha8Rng) -> WavePacket {
    WavePacket::standard(1)
        .with_center(rng.random_range(-2.0..2.0), &[rng.random_range(-2.0..2.0)])
        .with_widths(rng.random_range(0.5..2.0), rng.random_range(0.5..2.0))
        .with_carrier(rng.random_range(0.5..3.0), &[rng.random_range(-2.0..2.0)])
        .with_amplitude(Complex64::from_polar(
            rng.random_range(0.5..2.0),
            rng.random_range(-PI..PI),
        ))
}

/// D = 1 quantum inner product in the rapidity variable k = m sinh η, where
/// dk/ω = dη, by the midpoint rule. Independent of the module quadrature.
pub fn rapidity_inner_product(constants: &PhysicalConstants, f: &WavePacket, g: &WavePacket) -> Result<Complex64> {
    let m = constants.mass;
    if !(m > 0.0) || f.dim != 1 || g.dim != 1 {
        return Err(invalid("rapidity oracle needs D = 1 and m > 0"));
    }
    let pf = f.width_x * f.width_x;
    let pg = g.width_x * g.width_x;
    let centre = (pf * f.carrier_wavevector[0] + pg * g.carrier_wavevector[0]) / (pf + pg);
    let half = 14.0 / (pf + pg).sqrt();
    let (lo, hi) = (((centre - half) / m).asinh(), ((centre + half) / m).asinh());
    let n = 8192;
    let h = (hi - lo) / n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let eta = lo + (i as f64 + 0.5) * h;
        let (k, omega) = (m * eta.sinh(), m * eta.cosh());
        let ft = |p: &WavePacket| crate::kernels::fourier_transform(p, omega, &[k]);
        sum += ft(f)?.conj() * ft(g)?;
    }
    Ok(sum * h * 0.5 * constants.hbar / (2.0 * PI))
}

fn kernel_axioms(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let constants = PhysicalConstants::default();
    let q = Kernel::new(KernelSpec::quantum(constants, 1), cfg);
    let xi = Kernel::new(KernelSpec::xi_scaled(constants, 1), cfg);
    let mut rng = rng_for(cfg, 1);
    let (mut herm, mut pos, mut scal, mut rap) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut failures = 0;
    for _ in 0..KERNEL_PAIRS {
        let f = random_packet(&mut rng);
        let g = random_packet(&mut rng);
        let fg = q.ip(&f, &g)?;
        let gf = q.ip(&g, &f)?;
        let ff = q.ip(&f, &f)?;
        let gg = q.ip(&g, &g)?;
        // Cauchy-Schwarz scale |(f,f)(g,g)|^½ bounds |(f,g)|.
        let scale = (ff.norm() * gg.norm()).sqrt();
        let h = (fg - gf.conj()).norm() / scale;
        let p = [ff, gg]
            .iter()
            .map(|v| if v.re > 0.0 { v.im.abs() / v.re } else { f64::INFINITY })
            .fold(0.0, f64::max);
        let s = (xi.ip(&f, &g)? - constants.xi * fg).norm() / fg.norm().max(f64::MIN_POSITIVE);
        let r = (rapidity_inner_product(&constants, &f, &g)? - fg).norm() / scale;
        if h > HERMITICITY_TOL || p > POSITIVITY_TOL || s > XI_SCALING_TOL || r > RAPIDITY_TOL {
            failures += 1;
        }
        herm = herm.max(h);
        pos = pos.max(p);
        scal = scal.max(s);
        rap = rap.max(r);
    }
    Ok((
        failures == 0,
        format!(
            "{KERNEL_PAIRS} pairs, {failures} failing; max hermiticity {herm:.2e}, positivity {pos:.2e}, xi-scaling {scal:.2e}, rapidity oracle {rap:.2e}"
        ),
    ))
}

/// Gram table ⟨v_i, v_j⟩ of random complex vectors, Hermitian and positive.
pub fn random_gram_table(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> IpTable {
    let vs: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..rank)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    IpTable::from_fn(n, |i, j| {
        vs[i.0 - 1].iter().zip(&vs[j.0 - 1]).map(|(a, b)| a.conj() * b).sum()
    })
}

fn phi_product(indices: &[FnIndex]) -> OperatorExpression {
    indices.iter().fold(OperatorExpression::identity(), |acc, &i| {
        let phi = OperatorExpression::letter(crate::opalgebra::Letter::create(i))
            + OperatorExpression::letter(crate::opalgebra::Letter::annihilate(i));
        &acc * &phi
    })
}

fn algorithm_equivalence(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let mut rng = rng_for(cfg, 2);
    let (mut worst, mut odd_nonzero, mut cases) = (0.0f64, 0usize, 0usize);
    for _ in 0..ALGEBRA_TABLES {
        let ip = random_gram_table(&mut rng, 8, 3);
        for &n in &ALGEBRA_ORDERS {
            let indices: Vec<FnIndex> = (0..n).map(|_| FnIndex(rng.random_range(1..=8))).collect();
            let engine = vacuum_expectation(&phi_product(&indices), &ip)?;
            let wick = wick_vev(&indices, &ip)?;
            let factors: Vec<Factor> = indices
                .iter()
                .map(|&index| Factor {
                    kind: FactorKind::Phi,
                    index,
                })
                .collect();
            let mut scale = 0.0;
            for_each_pairing(&factors, &ip, |p| scale += p.value.norm())?;
            worst = worst.max((engine - wick).norm() / scale);
            cases += 1;

            let odd = &indices[..n - 1];
            let zero = Complex64::new(0.0, 0.0);
            if vacuum_expectation(&phi_product(odd), &ip)? != zero || wick_vev(odd, &ip)? != zero {
                odd_nonzero += 1;
            }
        }
    }
    Ok((
        worst <= ALGEBRA_TOL && odd_nonzero == 0,
        format!("{cases} even products, max relative difference {worst:.2e}; {odd_nonzero} odd products nonzero"),
    ))
}

fn two_point_orientation(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let constants = PhysicalConstants::default();
    let spec = KernelSpec::quantum(constants, 1);
    let kernel = Kernel::new(spec, cfg);
    let mut rng = rng_for(cfg, 3);
    let mut worst = 0.0f64;
    for _ in 0..ORIENTATION_PAIRS {
        let packets = [random_packet(&mut rng), random_packet(&mut rng)];
        let mut registry = FunctionRegistry::new();
        let expr = parse_expression("phi[f1] phi[f2]", &mut registry)?;
        let mut ip = IpTable::new();
        for (i, f) in packets.iter().enumerate() {
            for (j, g) in packets.iter().enumerate() {
                ip.insert(FnIndex(i + 1), FnIndex(j + 1), kernel.ip(f, g)?);
            }
        }
        let vev = vacuum_expectation(&expr, &ip)?;
        let direct = inner_product(&spec, &packets[1], &packets[0])?;
        worst = worst.max((vev - direct).norm() / direct.norm().max(f64::MIN_POSITIVE));
    }
    Ok((
        worst <= ORIENTATION_TOL,
        format!("{ORIENTATION_PAIRS} pairs, max relative difference {worst:.2e}"),
    ))
}

fn lambda_closure() -> Result<(bool, String)> {
    let ks = linear_grid(0.0, 20.0, LAMBDA_GRID);
    let mut worst = 0.0f64;
    for &xi in &XI_GRID {
        let k = PhysicalConstants::default().with_xi(xi);
        let d = SpectralDensity::xi_lambda(k, lambda_of_xi(xi)?)?;
        let vac = SpectralDensity::new(Ensemble::QuantumVacuum, k)?;
        for &kk in &ks {
            let (a, b) = (d.coefficient(kk)?, vac.coefficient(kk)?);
            worst = worst.max(((a - b) / b).abs());
        }
    }
    Ok((
        worst <= LAMBDA_TOL,
        format!("{} xi values x {LAMBDA_GRID} k, max relative deviation {worst:.2e}", XI_GRID.len()),
    ))
}

fn crossover() -> Result<(bool, String)> {
    let k = PhysicalConstants::default().with_hbar(1.0).with_kt(1.0).with_mass(CROSSOVER_MASS);
    let grid = linear_grid(0.0, 10.0, 2001);
    let rows = crossover_report(&k, &grid)?;
    let (mut low_n, mut high_n, mut low_worst, mut high_worst) = (0, 0, 0.0f64, 0.0f64);
    for r in &rows {
        let arg = thermal_argument(&k, r.k);
        if arg <= CROSSOVER_LOW_ARG {
            low_n += 1;
            low_worst = low_worst.max(r.rel_dev_e);
        }
        if arg >= CROSSOVER_HIGH_ARG {
            high_n += 1;
            high_worst = high_worst.max(r.rel_dev_q);
        }
    }
    Ok((
        low_n > 0 && high_n > 0 && low_worst < CROSSOVER_TOL && high_worst < CROSSOVER_TOL,
        format!(
            "low regime {low_n} modes, max dev from c_E {low_worst:.2e}; high regime {high_n} modes, max dev from c_Q {high_worst:.2e}"
        ),
    ))
}

fn lattice() -> Result<LatticeSpec> {
    LatticeSpec::new(1, SAMPLER_SITES, SAMPLER_SPACING)
}

fn stream_bytes(sampler: &Sampler, n: u64, threads: usize) -> Result<Vec<u8>> {
    let mut w = BinarySampleWriter::new(Vec::new(), *sampler.lattice())?;
    for cfg in SampleStream::new(sampler.clone(), n, Some(threads))? {
        w.write(&cfg?)?;
    }
    w.finish()
}

fn sampler_moments(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let lat = lattice()?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, &e) in Ensemble::ALL.iter().enumerate() {
        let d = SpectralDensity::new(e, PhysicalConstants::default())?;
        let sampler = Sampler::new(d, lat, cfg.seed.wrapping_add(i as u64), false)?;
        let mut acc = SpectrumAccumulator::new(lat)?;
        for c in SampleStream::new(sampler.clone(), cfg.samples, cfg.threads)? {
            acc.push(&c?)?;
        }
        let est = acc.finish()?;
        let frac = est.fraction_within(sampler.expected_power(), MOMENT_SIGMAS)?;
        ok &= frac >= MOMENT_FRACTION;
        parts.push(format!("{e} {:.1}%", 100.0 * frac));
    }
    let d = SpectralDensity::new(Ensemble::QuantumThermal, PhysicalConstants::default())?;
    let sampler = Sampler::new(d, lat, cfg.seed, false)?;
    let identical = stream_bytes(&sampler, 1000, 1)? == stream_bytes(&sampler, 1000, 4)?;
    ok &= identical;
    Ok((
        ok,
        format!(
            "modes within {MOMENT_SIGMAS} se: {}; 1 vs 4 workers byte-identical: {identical}",
            parts.join(", ")
        ),
    ))
}

fn equipartition(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let lat = lattice()?;
    let k = PhysicalConstants::default();
    let d = SpectralDensity::new(Ensemble::ClassicalEquilibrium, k)?;
    let sampler = Sampler::new(d, lat, cfg.seed.wrapping_add(7), false)?;
    let mut stats = RunningStats::new();
    for c in SampleStream::new(sampler, cfg.samples, cfg.threads)? {
        stats.push(hamiltonian_c(&c?, k.mass));
    }
    let expected = lat.site_count() as f64 * k.kt / 2.0;
    let z = (stats.mean() - expected) / stats.stderr();
    Ok((
        z.abs() <= EQUIPARTITION_SIGMAS,
        format!("mean H_C {:.6} vs {expected}, z = {z:.2}", stats.mean()),
    ))
}

fn fock_oracle(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let (lo, hi) = COTH_X_RANGE;
    let mut coth_worst = 0.0f64;
    for i in 0..COTH_POINTS {
        let x = lo * (hi / lo).powf(i as f64 / (COTH_POINTS - 1) as f64);
        let m = ModeSpec::new(1.0, 1.0, x)?;
        let v = fockoracle::mode_variance_numeric(&m)?;
        coth_worst = coth_worst.max(((v - m.closed_form()) / m.closed_form()).abs());
    }

    let k = PhysicalConstants::default();
    let thermal = SpectralDensity::new(Ensemble::QuantumThermal, k)?;
    let ks = linear_grid(0.0, 10.0, ORACLE_K_POINTS);
    let mut density_worst = fockoracle::verify_grid(&thermal, &ks)?
        .iter()
        .fold(0.0f64, |m, r| m.max(r.rel_err));
    for &xi in &XI_GRID {
        let d = SpectralDensity::new(Ensemble::XiLambda, k.with_xi(xi))?;
        for r in fockoracle::verify_grid(&d, &[0.0, 1.0, 5.0])? {
            density_worst = density_worst.max(r.rel_err);
        }
    }

    // Lattice per-mode variance E|φ̃_k|²/V against the oracle at |k|.
    let lat = lattice()?;
    let mut sample_worst = 0.0f64;
    for (i, e) in [Ensemble::QuantumThermal, Ensemble::XiLambda].into_iter().enumerate() {
        let d = SpectralDensity::new(e, k)?;
        let sampler = Sampler::new(d, lat, cfg.seed.wrapping_add(100 + i as u64), false)?;
        let mut acc = SpectrumAccumulator::new(lat)?;
        for c in SampleStream::new(sampler, cfg.samples, cfg.threads)? {
            acc.push(&c?)?;
        }
        let est = acc.finish()?;
        let v = lat.volume();
        for m in 0..lat.site_count() {
            let oracle = fockoracle::mode_variance_numeric(&fockoracle::mode_for_density(&d, lat.kmag(m))?)?;
            let z = (est.mean[m] / v - oracle) / (est.stderr[m] / v);
            sample_worst = sample_worst.max(z.abs());
        }
    }
    // Contract and oracle must agree on the expected power itself.
    let power = expected_power(&thermal, &lat, false)?;
    let contract_ok = (0..lat.site_count()).all(|m| {
        let o = fockoracle::verify_density_variance(&thermal, lat.kmag(m)).map(|r| r.numeric);
        o.is_ok_and(|o| ((power[m] / lat.volume() - o) / o).abs() <= ORACLE_TOL)
    });

    Ok((
        coth_worst <= ORACLE_TOL && density_worst <= ORACLE_TOL && sample_worst <= ORACLE_SIGMAS && contract_ok,
        format!(
            "coth identity {coth_worst:.2e}, density variance {density_worst:.2e}, sampled max |z| {sample_worst:.2}"
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyConfig {
        VerifyConfig {
            samples: 4000,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn fast_checks_pass() {
        for c in [2, 4, 5] {
            let r = run_check(c, &quick());
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn rapidity_oracle_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = PhysicalConstants::default();
        for _ in 0..3 {
            let (f, g) = (random_packet(&mut rng), random_packet(&mut rng));
            let a = rapidity_inner_product(&k, &f, &g).unwrap();
            let b = inner_product(&KernelSpec::quantum(k, 1), &f, &g).unwrap();
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-3), "{a} {b}");
        }
    }

    #[test]
    fn corruption_is_detected() {
        let cfg = VerifyConfig {
            corruption: Corruption::KernelSign,
            ..quick()
        };
        assert!(!run_check(1, &cfg).passed);
    }

    #[test]
    fn suite_parsing() {
        assert_eq!("all".parse::<Suite>().unwrap().criteria().len(), 8);
        assert!("bogus".parse::<Suite>().is_err());
        assert_eq!("kernel-sign".parse::<Corruption>().unwrap(), Corruption::KernelSign);
    }
}
