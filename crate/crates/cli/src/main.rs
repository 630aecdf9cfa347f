mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgfield::fockoracle;
use kgfield::kernels::{inner_product_report, Cutoff, KernelSpec, KernelVariant, QuadratureRule};
use kgfield::opalgebra::{
    for_each_pairing, parse, vacuum_expectation, FnIndex, FunctionRegistry, IpTable, MAX_WICK_LEN,
};
use kgfield::sampler::io::{write_spectrum_csv, BinarySampleWriter, CsvSampleWriter};
use kgfield::sampler::{LatticeSpec, SampleStream, Sampler, SpectrumAccumulator};
use kgfield::spectra::{self, Ensemble, SpectralDensity};
use kgfield::verify::{self, Corruption, Suite, VerifyConfig};
use kgfield::{fmt_f64, Error, Result};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "kgf", version, about = "Free Klein-Gordon field toolkit")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=3))]
    dim: Option<u8>,
    #[arg(long, global = true)]
    hbar: Option<f64>,
    #[arg(long = "kT", global = true)]
    kt: Option<f64>,
    #[arg(long, global = true)]
    mass: Option<f64>,
    #[arg(long, global = true)]
    xi: Option<f64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariant inner product of two named packets.
    Innerprod(InnerprodArgs),
    /// Vacuum expectation value of an operator expression.
    Expect(ExpectArgs),
    /// Spectral coefficients c(|k|) on a k grid.
    Spectra(SpectraArgs),
    /// Draw lattice configurations and their power spectrum.
    Sample(SampleArgs),
    /// Run the self-check suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct QuadArgs {
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
    /// Fixed symmetric k window; automatic when absent.
    #[arg(long)]
    kmax: Option<f64>,
    /// Skip the doubled-resolution convergence check.
    #[arg(long)]
    no_check: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum RuleArg {
    GaussLegendre,
    Trapezoid,
}

#[derive(Args, Debug)]
struct InnerprodArgs {
    #[arg(long, default_value = "quantum")]
    kernel: KernelVariant,
    #[arg(short = 'f', long = "f")]
    f: String,
    #[arg(short = 'g', long = "g")]
    g: String,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args, Debug)]
struct ExpectArgs {
    expression: String,
    #[arg(long, default_value = "quantum")]
    kernel: KernelVariant,
    /// List the Wick matchings of every term with their products.
    #[arg(long)]
    show_pairings: bool,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args, Debug)]
struct SpectraArgs {
    #[arg(long)]
    ensemble: Option<Ensemble>,
    /// λ for the xilambda ensemble; λ(ξ) when absent.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k_start: Option<f64>,
    #[arg(long)]
    k_stop: Option<f64>,
    #[arg(long)]
    k_count: Option<usize>,
    /// Emit the thermal crossover table instead.
    #[arg(long)]
    crossover: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum SampleFormat {
    Csv,
    Bin,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    ensemble: Option<Ensemble>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    spacing: Option<f64>,
    /// Fix the k = 0 mode to zero instead of rejecting a degenerate density.
    #[arg(long)]
    pin_zero_mode: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: SampleFormat,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, hide = true, default_value = "none")]
    corrupt: Corruption,
}

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_ACCURACY: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Accuracy { .. } | Error::Truncation { .. } | Error::NumericConsistency(_) => EXIT_ACCURACY,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("kgf: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn threads() -> Result<Option<usize>> {
    match std::env::var("KGF_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidInput(format!("KGF_THREADS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.dim {
        cfg.dim = d as usize;
    }
    let k = &mut cfg.constants;
    if let Some(v) = cli.hbar {
        k.hbar = v;
    }
    if let Some(v) = cli.kt {
        k.kt = v;
    }
    if let Some(v) = cli.mass {
        k.mass = v;
    }
    if let Some(v) = cli.xi {
        k.xi = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = resolve_config(&cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Innerprod(a) => cmd_innerprod(&cfg, a),
        Command::Expect(a) => cmd_expect(&cfg, a),
        Command::Spectra(a) => cmd_spectra(&cfg, a, out),
        Command::Sample(a) => cmd_sample(&cfg, a, out),
        Command::Verify(a) => cmd_verify(&cfg, a, out),
    }
}

fn kernel_spec(cfg: &RunConfig, variant: KernelVariant, q: &QuadArgs) -> Result<KernelSpec> {
    let mut quad = cfg.quadrature;
    if let Some(n) = q.nodes {
        quad = quad.with_nodes(n);
    }
    if let Some(r) = q.rule {
        quad = quad.with_rule(match r {
            RuleArg::GaussLegendre => QuadratureRule::GaussLegendre,
            RuleArg::Trapezoid => QuadratureRule::Trapezoid,
        });
    }
    if let Some(k) = q.kmax {
        quad = quad.with_cutoff(Cutoff::Fixed(k));
    }
    if q.no_check {
        quad = quad.unchecked();
    }
    let spec = KernelSpec::new(variant, cfg.constants, cfg.dim).with_quadrature(quad);
    spec.validate()?;
    Ok(spec)
}

fn print_complex(out: &mut impl Write, v: num_complex::Complex64) -> io::Result<()> {
    writeln!(out, "re,im")?;
    writeln!(out, "{},{}", fmt_f64(v.re), fmt_f64(v.im))
}

fn cmd_innerprod(cfg: &RunConfig, a: &InnerprodArgs) -> Result<u8> {
    let f = cfg.packet(&a.f)?;
    let g = cfg.packet(&a.g)?;
    let spec = kernel_spec(cfg, a.kernel, &a.quad)?;
    let r = inner_product_report(&spec, &f, &g)?;
    let mut out = io::stdout().lock();
    print_complex(&mut out, r.value)?;
    writeln!(out, "# kernel {:?}, nodes {}, |integrand| integral {}", a.kernel, r.nodes, fmt_f64(r.abs_integral))?;
    for (axis, (lo, hi)) in r.windows.iter().enumerate() {
        writeln!(out, "# window axis {axis}: [{}, {}]", fmt_f64(*lo), fmt_f64(*hi))?;
    }
    match (r.refined, r.rel_change) {
        (Some(v), Some(c)) => writeln!(
            out,
            "# refined {},{} relative change {}",
            fmt_f64(v.re),
            fmt_f64(v.im),
            fmt_f64(c)
        )?,
        _ => writeln!(out, "# convergence check skipped")?,
    }
    Ok(0)
}

fn cmd_expect(cfg: &RunConfig, a: &ExpectArgs) -> Result<u8> {
    let mut registry = FunctionRegistry::new();
    let parsed = parse(&a.expression, &mut registry)?;
    if parsed.max_factors() > MAX_WICK_LEN {
        return Err(Error::Limit(format!(
            "a term has {} factors, at most {MAX_WICK_LEN} are supported",
            parsed.max_factors()
        )));
    }
    let packets: Vec<_> = registry
        .iter()
        .map(|(_, name)| cfg.packet(name))
        .collect::<Result<_>>()?;
    let spec = kernel_spec(cfg, a.kernel, &a.quad)?;
    let mut ip = IpTable::new();
    for (i, f) in packets.iter().enumerate() {
        for (j, g) in packets.iter().enumerate().skip(i) {
            let v = inner_product_report(&spec, f, g)?.value;
            if i == j {
                ip.insert(FnIndex(i + 1), FnIndex(i + 1), v);
            } else {
                ip.insert_hermitian(FnIndex(i + 1), FnIndex(j + 1), v);
            }
        }
    }
    let value = vacuum_expectation(&parsed.to_expression(), &ip)?;
    let mut out = io::stdout().lock();
    print_complex(&mut out, value)?;
    if a.show_pairings {
        for (t, term) in parsed.terms.iter().enumerate() {
            writeln!(
                out,
                "# term {} coefficient {},{}",
                t + 1,
                fmt_f64(term.coefficient.re),
                fmt_f64(term.coefficient.im)
            )?;
            let mut lines = Vec::new();
            for_each_pairing(&term.factors, &ip, |p| {
                let pairs: Vec<String> = p
                    .pairs
                    .iter()
                    .map(|&(i, j)| {
                        let name = |k: usize| registry.name(term.factors[k].index).unwrap_or("?").to_string();
                        format!("({},{})", name(i), name(j))
                    })
                    .collect();
                lines.push(format!(
                    "# pairing {} product {},{}",
                    pairs.join(""),
                    fmt_f64(p.value.re),
                    fmt_f64(p.value.im)
                ));
            })?;
            if lines.is_empty() {
                writeln!(out, "# no matchings")?;
            }
            for l in lines {
                writeln!(out, "{l}")?;
            }
        }
    }
    Ok(0)
}

fn density(cfg: &RunConfig, ensemble: Option<Ensemble>, lambda: Option<f64>) -> Result<SpectralDensity> {
    let e = match (ensemble, &cfg.ensemble) {
        (Some(e), _) => e,
        (None, Some(name)) => name.parse()?,
        (None, None) => return Err(Error::InvalidInput("an ensemble is required (--ensemble)".into())),
    };
    match (e, lambda.or(cfg.lambda)) {
        (Ensemble::XiLambda, Some(l)) => SpectralDensity::xi_lambda(cfg.constants, l),
        _ => SpectralDensity::new(e, cfg.constants),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn cmd_spectra(cfg: &RunConfig, a: &SpectraArgs, out: Option<&Path>) -> Result<u8> {
    let g = cfg.k_grid;
    let count = a.k_count.unwrap_or(g.count);
    if count == 0 {
        return Err(Error::InvalidInput("k grid needs at least one point".into()));
    }
    let grid = spectra::linear_grid(a.k_start.unwrap_or(g.start), a.k_stop.unwrap_or(g.stop), count);
    let mut sink: Box<dyn Write> = match out {
        Some(dir) if a.crossover => Box::new(create(dir, "crossover.csv")?),
        Some(dir) => {
            let d = density(cfg, a.ensemble, a.lambda)?;
            Box::new(create(dir, &format!("spectra_{}.csv", d.ensemble.name()))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    if a.crossover {
        let rows = spectra::crossover_report(&cfg.constants, &grid)?;
        spectra::write_crossover_csv(&mut sink, &rows)?;
    } else {
        let d = density(cfg, a.ensemble, a.lambda)?;
        spectra::write_coefficients_csv(&mut sink, &d, &grid)?;
    }
    sink.flush()?;
    Ok(0)
}

fn cmd_sample(cfg: &RunConfig, a: &SampleArgs, out: Option<&Path>) -> Result<u8> {
    let d = density(cfg, a.ensemble, a.lambda)?;
    let base = cfg.lattice.unwrap_or(LatticeSpec {
        dim: cfg.dim,
        sites_per_axis: 64,
        spacing: 1.0,
    });
    let lattice = LatticeSpec::new(
        cfg.dim,
        a.sites.unwrap_or(base.sites_per_axis),
        a.spacing.unwrap_or(base.spacing),
    )?;
    let n = a.samples.unwrap_or(cfg.samples);
    let dir = out.unwrap_or(Path::new("."));
    let sampler = Sampler::new(d, lattice, cfg.seed, a.pin_zero_mode)?;
    let expected = sampler.expected_power().to_vec();
    let stream = SampleStream::new(sampler, n, threads()?)?;
    let mut acc = SpectrumAccumulator::new(lattice)?;
    let sample_file = match a.format {
        SampleFormat::Csv => "samples.csv",
        SampleFormat::Bin => "samples.bin",
    };
    let file = create(dir, sample_file)?;
    match a.format {
        SampleFormat::Csv => {
            let mut w = CsvSampleWriter::new(file, lattice)?;
            for c in stream {
                let c = c?;
                acc.push(&c)?;
                w.write(&c)?;
            }
            w.finish()?.flush()?;
        }
        SampleFormat::Bin => {
            let mut w = BinarySampleWriter::new(file, lattice)?;
            for c in stream {
                let c = c?;
                acc.push(&c)?;
                w.write(&c)?;
            }
            w.finish()?.flush()?;
        }
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "# {} samples of {} on {}^{} sites written to {}", n, d.ensemble, lattice.sites_per_axis, lattice.dim, dir.join(sample_file).display())?;
    if n >= 2 {
        let est = acc.finish()?;
        let mut w = create(dir, "spectrum.csv")?;
        write_spectrum_csv(&mut w, &est, &expected)?;
        w.flush()?;
        let within = est.fraction_within(&expected, 5.0)?;
        writeln!(stdout, "# spectrum written to {}; {:.4} of modes within 5 standard errors of V/2c", dir.join("spectrum.csv").display(), within)?;
    }
    Ok(0)
}

fn cmd_verify(cfg: &RunConfig, a: &VerifyArgs, out: Option<&Path>) -> Result<u8> {
    let vc = VerifyConfig {
        seed: if cfg.seed == 0 { VerifyConfig::default().seed } else { cfg.seed },
        samples: a.samples.unwrap_or(verify::DEFAULT_SAMPLES),
        threads: threads()?,
        corruption: a.corrupt,
    };
    if vc.samples < 2 {
        return Err(Error::InvalidInput("verify needs at least 2 samples".into()));
    }
    let mut stdout = io::stdout().lock();
    let mut all = true;
    for &c in a.suite.criteria() {
        let r = verify::run_check(c, &vc);
        all &= r.passed;
        writeln!(stdout, "{r}")?;
    }
    if let Some(dir) = out {
        let k = kgfield::PhysicalConstants::default();
        let mut rows = fockoracle::verify_grid(
            &SpectralDensity::new(Ensemble::QuantumThermal, k)?,
            &spectra::linear_grid(0.0, 10.0, verify::ORACLE_K_POINTS),
        )?;
        for &xi in &verify::XI_GRID {
            rows.extend(fockoracle::verify_grid(
                &SpectralDensity::new(Ensemble::XiLambda, k.with_xi(xi))?,
                &[0.0, 1.0, 5.0],
            )?);
        }
        let mut w = create(dir, "oracle.csv")?;
        fockoracle::write_oracle_csv(&mut w, &rows)?;
        w.flush()?;
    }
    writeln!(stdout, "# {}", if all { "all checks passed" } else { "some checks failed" })?;
    Ok(if all { 0 } else { EXIT_VERIFY_FAILED })
}
