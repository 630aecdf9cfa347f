use std::path::Path;
use std::process::{Command, Output};

use kgfield::sampler::io::{read_samples_binary, read_samples_csv, read_spectrum_csv};
use kgfield::spectra::{read_coefficients_csv, read_crossover_csv};
use num_complex::Complex64;

fn kgf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn value(o: &Output) -> Complex64 {
    assert!(o.status.success(), "{}", stderr(o));
    let text = stdout(o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im"));
    let (re, im) = lines.next().unwrap().split_once(',').unwrap();
    Complex64::new(re.parse().unwrap(), im.parse().unwrap())
}

#[test]
fn xi_kernel_scales_quantum_value() {
    let q = value(&kgf(&["innerprod", "--kernel", "quantum", "-f", "f1", "-g", "f1"]));
    let x = value(&kgf(&["innerprod", "--kernel", "xi", "--xi", "0.5", "-f", "f1", "-g", "f1"]));
    assert!((x - 0.5 * q).norm() <= 1e-15 * q.norm());
}

#[test]
fn swapped_arguments_conjugate() {
    let a = value(&kgf(&["innerprod", "-f", "f1", "-g", "f2"]));
    let b = value(&kgf(&["innerprod", "-f", "f2", "-g", "f1"]));
    assert!((a - b.conj()).norm() <= 1e-12 * a.norm());
}

#[test]
fn missing_packet_exits_2_with_name() {
    let o = kgf(&["innerprod", "-f", "f1", "-g", "nosuch"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nosuch"));
}

#[test]
fn truncated_window_exits_3() {
    let o = kgf(&["innerprod", "-f", "f1", "-g", "f2", "--kmax", "1.0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn two_point_function_matches_innerprod() {
    let vev = value(&kgf(&["expect", "phi[f1] phi[f2]"]));
    let ip = value(&kgf(&["innerprod", "-f", "f2", "-g", "f1"]));
    assert!((vev - ip).norm() <= 1e-12 * ip.norm());
}

#[test]
fn odd_products_are_exactly_zero() {
    let v = value(&kgf(&["expect", "phi[f1] phi[f2] phi[f3]"]));
    assert_eq!(v, Complex64::new(0.0, 0.0));
}

#[test]
fn four_fields_show_three_pairings() {
    let o = kgf(&["expect", "--show-pairings", "phi[f1] phi[f2] phi[f3] phi[f1]"]);
    let v = value(&o);
    let text = stdout(&o);
    let products: Vec<Complex64> = text
        .lines()
        .filter(|l| l.starts_with("# pairing"))
        .map(|l| {
            let (re, im) = l.rsplit_once(' ').unwrap().1.split_once(',').unwrap();
            Complex64::new(re.parse().unwrap(), im.parse().unwrap())
        })
        .collect();
    assert_eq!(products.len(), 3);
    let sum: Complex64 = products.iter().sum();
    assert!((sum - v).norm() <= 1e-12 * v.norm());
}

#[test]
fn syntax_error_reports_column() {
    let o = kgf(&["expect", "phi[f1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("column 7"), "{}", stderr(&o));
}

#[test]
fn long_products_hit_the_limit() {
    let expr = vec!["phi[f1]"; 18].join(" ");
    let o = kgf(&["expect", &expr]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("limit"), "{}", stderr(&o));
}

#[test]
fn xilambda_spectrum_equals_vacuum() {
    let read = |e: &str| {
        let o = kgf(&["spectra", "--ensemble", e, "--xi", "0.5", "--k-count", "33"]);
        assert!(o.status.success());
        read_coefficients_csv(&o.stdout[..]).unwrap()
    };
    let (xl, vac) = (read("xilambda"), read("vacuum"));
    assert_eq!(xl.len(), 33);
    for ((k1, a), (k2, b)) in xl.iter().zip(&vac) {
        assert_eq!(k1, k2);
        assert!(((a - b) / b).abs() <= 1e-12);
    }
}

#[test]
fn crossover_table_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kgf(&["spectra", "--crossover", "--mass", "0.01", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read(dir.path().join("crossover.csv")).unwrap();
    assert!(text.starts_with(b"k,c_T,c_E,c_Q,rel_dev_E,rel_dev_Q\n"));
    assert_eq!(read_crossover_csv(&text[..]).unwrap().len(), 101);
}

#[test]
fn degenerate_zero_mode_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kgf(&["sample", "--ensemble", "classical", "--mass", "0", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k=0"), "{}", stderr(&o));
    let o = kgf(&["sample", "--ensemble", "classical", "--mass", "0", "--pin-zero-mode", "--samples", "10", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn sample_run(dir: &Path, threads: &str, format: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgf"))
        .env("KGF_THREADS", threads)
        .args([
            "sample", "--ensemble", "thermal", "--dim", "2", "--sites", "8", "--spacing", "0.5", "--samples", "600",
            "--seed", "42", "--format", format, "--out",
        ])
        .arg(dir)
        .output()
        .unwrap()
}

#[test]
fn sample_files_are_reproducible_and_readable() {
    for format in ["csv", "bin"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert!(sample_run(a.path(), "1", format).status.success());
        assert!(sample_run(b.path(), "3", format).status.success());
        let name = format!("samples.{format}");
        let fa = std::fs::read(a.path().join(&name)).unwrap();
        assert_eq!(fa, std::fs::read(b.path().join(&name)).unwrap());
        let sa = std::fs::read(a.path().join("spectrum.csv")).unwrap();
        assert_eq!(sa, std::fs::read(b.path().join("spectrum.csv")).unwrap());

        let samples = if format == "csv" {
            read_samples_csv(&fa[..], 0.5).unwrap()
        } else {
            read_samples_binary(&fa[..]).unwrap()
        };
        assert_eq!(samples.len(), 600);
        let (est, expected) = read_spectrum_csv(&sa[..], 0.5).unwrap();
        assert_eq!(est.count, 600);
        assert_eq!(est, kgfield::sampler::power_spectrum(&samples).unwrap());
        assert!(est.fraction_within(&expected, 5.0).unwrap() >= 0.95);
    }
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kgf"))
        .env("KGF_THREADS", "zero")
        .args(["sample", "--ensemble", "vacuum", "--samples", "4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{
  "constants": {"hbar": 2.0, "mass": 0.5},
  "dim": 1,
  "packets": {
    "wide": {"dim": 1, "center_t": 0.0, "center_x": [0.0], "width_t": 1.0, "width_x": 2.0,
             "carrier_freq": 1.0, "carrier_wavevector": [0.0], "amplitude": [1.0, 0.0]}
  }
}"#,
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    let a = value(&kgf(&["--config", cfg, "innerprod", "-f", "wide", "-g", "wide"]));
    let b = value(&kgf(&["--config", cfg, "--hbar", "1.0", "innerprod", "-f", "wide", "-g", "wide"]));
    assert!((a - 2.0 * b).norm() <= 1e-14 * a.norm());
    assert_eq!(kgf(&["--config", cfg, "innerprod", "-f", "f1", "-g", "f1"]).status.code(), Some(2));

    std::fs::write(&path, r#"{"constants": {"hbar": 1.0}, "bogus": 1}"#).unwrap();
    assert_eq!(kgf(&["--config", cfg, "innerprod", "-f", "f1", "-g", "f1"]).status.code(), Some(2));
}

#[test]
fn verify_writes_oracle_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kgf(&["verify", "--suite", "oracle", "--samples", "2000", "--out", out]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = std::fs::read(dir.path().join("oracle.csv")).unwrap();
    let rows = kgfield::fockoracle::read_oracle_csv(&text[..]).unwrap();
    assert!(rows.len() >= 64 && rows.iter().all(|r| r.passed()));
}
