//! Spectral coefficients of the fixed-time Gaussian densities.
//!
//! Every density is written as exp[−∫ dᴰk/(2π)ᴰ c(k) |φ̃_t(k)|²] up to
//! normalisation; with ω = √(|k|² + m²):
//!
//! | ensemble              | c(k)                          |
//! |-----------------------|-------------------------------|
//! | classical equilibrium | ω² / 2kT                      |
//! | quantum vacuum        | ω / ħ                         |
//! | quantum thermal       | tanh(ħω / 2kT) · ω / ħ        |
//! | ξ vacuum              | ω / ξħ                        |
//! | ξ, λ Gibbs state      | tanh(ξ / 2λ) · ω / ξħ         |

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{invalid, Error, Result};
use crate::format::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    ClassicalEquilibrium,
    QuantumVacuum,
    QuantumThermal,
    XiVacuum,
    XiLambda,
}

impl Ensemble {
    pub const ALL: [Ensemble; 5] = [
        Ensemble::ClassicalEquilibrium,
        Ensemble::QuantumVacuum,
        Ensemble::QuantumThermal,
        Ensemble::XiVacuum,
        Ensemble::XiLambda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ensemble::ClassicalEquilibrium => "classical",
            Ensemble::QuantumVacuum => "vacuum",
            Ensemble::QuantumThermal => "thermal",
            Ensemble::XiVacuum => "xivacuum",
            Ensemble::XiLambda => "xilambda",
        }
    }
}

impl std::fmt::Display for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "classical" | "classical-equilibrium" => Ensemble::ClassicalEquilibrium,
            "vacuum" | "quantum-vacuum" => Ensemble::QuantumVacuum,
            "thermal" | "quantum-thermal" => Ensemble::QuantumThermal,
            "xivacuum" | "xi-vacuum" => Ensemble::XiVacuum,
            "xilambda" | "xi-lambda" => Ensemble::XiLambda,
            other => {
                return Err(invalid(format!(
                    "unknown ensemble '{other}' (expected classical, vacuum, thermal, xivacuum or xilambda)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub ensemble: Ensemble,
    pub constants: PhysicalConstants,
    /// Gibbs parameter λ, used by `XiLambda` only.
    pub lambda: Option<f64>,
}

impl SpectralDensity {
    /// Density for `ensemble`. For `XiLambda` this picks λ = λ(ξ), the value
    /// that reproduces the quantum vacuum.
    pub fn new(ensemble: Ensemble, constants: PhysicalConstants) -> Result<Self> {
        let lambda = match ensemble {
            Ensemble::XiLambda => Some(lambda_of_xi(constants.xi)?),
            _ => None,
        };
        let d = SpectralDensity {
            ensemble,
            constants,
            lambda,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn xi_lambda(constants: PhysicalConstants, lambda: f64) -> Result<Self> {
        let d = SpectralDensity {
            ensemble: Ensemble::XiLambda,
            constants,
            lambda: Some(lambda),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        match self.ensemble {
            Ensemble::ClassicalEquilibrium | Ensemble::QuantumThermal if self.constants.kt <= 0.0 => {
                Err(invalid(format!("{} ensemble requires kT > 0", self.ensemble)))
            }
            Ensemble::XiLambda => match self.lambda {
                Some(l) if l.is_finite() && l > 0.0 => Ok(()),
                Some(l) => Err(invalid(format!("lambda must be finite and > 0, got {l}"))),
                None => Err(invalid("xilambda ensemble requires lambda")),
            },
            _ => Ok(()),
        }
    }

    /// c(|k|). Validates the density first; use [`Self::coefficient_unchecked`]
    /// in loops over a density already known to be valid.
    pub fn coefficient(&self, kmag: f64) -> Result<f64> {
        self.validate()?;
        if !kmag.is_finite() || kmag < 0.0 {
            return Err(invalid(format!("|k| must be finite and >= 0, got {kmag}")));
        }
        Ok(self.coefficient_unchecked(kmag))
    }

    pub fn coefficient_unchecked(&self, kmag: f64) -> f64 {
        let c = &self.constants;
        let omega = c.omega(kmag);
        match self.ensemble {
            Ensemble::ClassicalEquilibrium => omega * omega / (2.0 * c.kt),
            Ensemble::QuantumVacuum => omega / c.hbar,
            Ensemble::QuantumThermal => (c.hbar * omega / (2.0 * c.kt)).tanh() * omega / c.hbar,
            Ensemble::XiVacuum => omega / (c.xi * c.hbar),
            Ensemble::XiLambda => {
                let lambda = self.lambda.unwrap_or(f64::NAN);
                (c.xi / (2.0 * lambda)).tanh() * omega / (c.xi * c.hbar)
            }
        }
    }
}

/// spectral_coefficient(d, |k|) = c(|k|).
pub fn spectral_coefficient(d: &SpectralDensity, kmag: f64) -> Result<f64> {
    d.coefficient(kmag)
}

/// λ(ξ) = ξ / (2 artanh ξ), defined for 0 < ξ < 1.
pub fn lambda_of_xi(xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Domain(format!("lambda(xi) needs 0 < xi < 1, got {xi}")));
    }
    Ok(xi / (2.0 * xi.atanh()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub k: f64,
    #[serde(rename = "c_T")]
    pub c_t: f64,
    #[serde(rename = "c_E")]
    pub c_e: f64,
    #[serde(rename = "c_Q")]
    pub c_q: f64,
    #[serde(rename = "rel_dev_E")]
    pub rel_dev_e: f64,
    #[serde(rename = "rel_dev_Q")]
    pub rel_dev_q: f64,
}

/// Compares the thermal coefficient with the classical (low-k) and vacuum
/// (high-k) asymptotes on `k_grid`.
pub fn crossover_report(constants: &PhysicalConstants, k_grid: &[f64]) -> Result<Vec<CrossoverRow>> {
    if k_grid.is_empty() {
        return Err(invalid("crossover report needs a non-empty k grid"));
    }
    let thermal = SpectralDensity::new(Ensemble::QuantumThermal, *constants)?;
    let classical = SpectralDensity::new(Ensemble::ClassicalEquilibrium, *constants)?;
    let vacuum = SpectralDensity::new(Ensemble::QuantumVacuum, *constants)?;
    k_grid
        .iter()
        .map(|&k| {
            let c_t = thermal.coefficient(k)?;
            let c_e = classical.coefficient(k)?;
            let c_q = vacuum.coefficient(k)?;
            Ok(CrossoverRow {
                k,
                c_t,
                c_e,
                c_q,
                rel_dev_e: ((c_t - c_e) / c_e).abs(),
                rel_dev_q: ((c_t - c_q) / c_q).abs(),
            })
        })
        .collect()
}

/// ħω/2kT at wave number k, the argument of the thermal tanh.
pub fn thermal_argument(constants: &PhysicalConstants, k: f64) -> f64 {
    constants.hbar * constants.omega(k) / (2.0 * constants.kt)
}

pub const CROSSOVER_HEADER: [&str; 6] = ["k", "c_T", "c_E", "c_Q", "rel_dev_E", "rel_dev_Q"];

pub fn write_crossover_csv<W: Write>(w: W, rows: &[CrossoverRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CROSSOVER_HEADER)?;
    for r in rows {
        out.write_record([r.k, r.c_t, r.c_e, r.c_q, r.rel_dev_e, r.rel_dev_q].map(fmt_f64))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_crossover_csv<R: Read>(r: R) -> Result<Vec<CrossoverRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    if rdr.headers()?.iter().ne(CROSSOVER_HEADER) {
        return Err(invalid(format!("unexpected crossover header {:?}", rdr.headers()?)));
    }
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// `k,c` table of one density's coefficients.
pub fn write_coefficients_csv<W: Write>(w: W, d: &SpectralDensity, k_grid: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "c"])?;
    for &k in k_grid {
        out.write_record([fmt_f64(k), fmt_f64(d.coefficient(k)?)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_coefficients_csv<R: Read>(r: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_reader(r);
    if rdr.headers()?.iter().ne(["k", "c"]) {
        return Err(invalid(format!("unexpected coefficient header {:?}", rdr.headers()?)));
    }
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
