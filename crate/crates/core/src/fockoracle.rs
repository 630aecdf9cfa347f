//! Single-mode number-basis oracle for the tanh/coth variance structure.
//!
//! One mode is a ladder operator b with [b, b†] = 1 and configuration
//! variable q = √(ħ_eff/2ω)(b + b†). A Gibbs state with weights e^{−x n}
//! has ⟨q²⟩ = (ħ_eff/2ω)(2n̄ + 1) = (ħ_eff/2ω) coth(x/2).

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::format::fmt_f64;
use crate::spectra::{Ensemble, SpectralDensity};

/// Bound on the Gibbs weight beyond the cutoff.
pub const TAIL_BOUND: f64 = 1e-12;
pub const MIN_CUTOFF: usize = 8;
/// Largest cutoff; the basis is held as dense matrices.
pub const MAX_CUTOFF: usize = 2048;
/// Gibbs argument standing in for the zero-temperature limit.
pub const VACUUM_GIBBS_X: f64 = 64.0;
/// Relative tolerance of [`DensityVarianceCheck::passed`].
pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// n̄ = 1/(eˣ − 1).
pub fn bose_occupancy(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("occupancy needs x > 0, got {x}")));
    }
    Ok(1.0 / x.exp_m1())
}

/// Weight Σ_{n ≥ cutoff} e^{−x n}.
fn tail_weight(x: f64, cutoff: usize) -> f64 {
    (-x * cutoff as f64).exp() / -(-x).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub omega: f64,
    pub hbar_eff: f64,
    pub gibbs_x: f64,
    pub cutoff: usize,
}

impl ModeSpec {
    /// Picks the smallest cutoff whose tail weight is below [`TAIL_BOUND`].
    pub fn new(omega: f64, hbar_eff: f64, gibbs_x: f64) -> Result<Self> {
        check_params(omega, hbar_eff, gibbs_x)?;
        let cutoff = (MIN_CUTOFF..=MAX_CUTOFF)
            .find(|&n| tail_weight(gibbs_x, n) < TAIL_BOUND)
            .ok_or_else(|| {
                Error::Limit(format!(
                    "gibbs_x = {gibbs_x} needs a number-basis cutoff above {MAX_CUTOFF}"
                ))
            })?;
        Ok(ModeSpec {
            omega,
            hbar_eff,
            gibbs_x,
            cutoff,
        })
    }

    pub fn with_cutoff(self, cutoff: usize) -> Result<Self> {
        let m = ModeSpec { cutoff, ..self };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_params(self.omega, self.hbar_eff, self.gibbs_x)?;
        if self.cutoff < MIN_CUTOFF || self.cutoff > MAX_CUTOFF {
            return Err(invalid(format!(
                "cutoff must lie in [{MIN_CUTOFF}, {MAX_CUTOFF}], got {}",
                self.cutoff
            )));
        }
        let tail = tail_weight(self.gibbs_x, self.cutoff);
        if !(tail < TAIL_BOUND) {
            return Err(Error::Truncation {
                tail,
                bound: TAIL_BOUND,
            });
        }
        Ok(())
    }

    /// (ħ_eff/2ω) coth(x/2).
    pub fn closed_form(&self) -> f64 {
        self.hbar_eff / (2.0 * self.omega) / (0.5 * self.gibbs_x).tanh()
    }
}

fn check_params(omega: f64, hbar_eff: f64, gibbs_x: f64) -> Result<()> {
    for (name, v) in [("omega", omega), ("hbar_eff", hbar_eff), ("gibbs_x", gibbs_x)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    Ok(())
}

/// ⟨q²⟩ in the truncated number basis.
pub fn mode_variance_numeric(m: &ModeSpec) -> Result<f64> {
    m.validate()?;
    let dim = m.cutoff + 1;
    let scale = (m.hbar_eff / (2.0 * m.omega)).sqrt();
    let mut b = DMatrix::<f64>::zeros(dim, dim);
    for n in 1..dim {
        b[(n - 1, n)] = (n as f64).sqrt();
    }
    let q = (&b + b.transpose()) * scale;
    // The top state is excluded: q pushes it out of the basis.
    let (mut num, mut z) = (0.0, 0.0);
    for n in (0..m.cutoff).rev() {
        let w = (-m.gibbs_x * n as f64).exp();
        num += w * q.column(n).norm_squared();
        z += w;
    }
    Ok(num / z)
}

/// Comparison of the oracle with 1/(2c(k)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityVarianceCheck {
    pub ensemble: Ensemble,
    pub k: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub rel_err: f64,
}

impl DensityVarianceCheck {
    pub fn passed(&self) -> bool {
        self.rel_err <= ORACLE_TOLERANCE
    }
}

/// Mode implied by a density at |k|.
pub fn mode_for_density(d: &SpectralDensity, kmag: f64) -> Result<ModeSpec> {
    d.validate()?;
    let c = &d.constants;
    let omega = c.omega(kmag);
    match d.ensemble {
        Ensemble::QuantumThermal => ModeSpec::new(omega, c.hbar, c.hbar * omega / c.kt),
        Ensemble::XiLambda => {
            let lambda = d.lambda.ok_or_else(|| invalid("xilambda density has no lambda"))?;
            ModeSpec::new(omega, c.xi * c.hbar, c.xi / lambda)
        }
        Ensemble::QuantumVacuum => ModeSpec::new(omega, c.hbar, VACUUM_GIBBS_X),
        other => Err(invalid(format!("the number-basis oracle does not cover the {other} ensemble"))),
    }
}

pub fn verify_density_variance(d: &SpectralDensity, kmag: f64) -> Result<DensityVarianceCheck> {
    let mode = mode_for_density(d, kmag)?;
    let numeric = mode_variance_numeric(&mode)?;
    let closed_form = 1.0 / (2.0 * d.coefficient(kmag)?);
    Ok(DensityVarianceCheck {
        ensemble: d.ensemble,
        k: kmag,
        numeric,
        closed_form,
        rel_err: ((numeric - closed_form) / closed_form).abs(),
    })
}

/// [`verify_density_variance`] over a grid, in grid order.
pub fn verify_grid(d: &SpectralDensity, ks: &[f64]) -> Result<Vec<DensityVarianceCheck>> {
    ks.par_iter().map(|&k| verify_density_variance(d, k)).collect()
}

pub const ORACLE_HEADER: [&str; 5] = ["ensemble", "k", "numeric", "closed_form", "rel_err"];

pub fn write_oracle_csv<W: Write>(w: W, rows: &[DensityVarianceCheck]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(ORACLE_HEADER)?;
    for r in rows {
        w.write_record([
            r.ensemble.name().to_string(),
            fmt_f64(r.k),
            fmt_f64(r.numeric),
            fmt_f64(r.closed_form),
            fmt_f64(r.rel_err),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_oracle_csv<R: Read>(r: R) -> Result<Vec<DensityVarianceCheck>> {
    let mut rdr = csv::Reader::from_reader(r);
    if rdr.headers()?.iter().ne(ORACLE_HEADER) {
        return Err(invalid("unexpected oracle header"));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|_| invalid(format!("bad number in oracle row {:?}", rec)))
            };
            Ok(DensityVarianceCheck {
                ensemble: rec[0].parse()?,
                k: f(1)?,
                numeric: f(2)?,
                closed_form: f(3)?,
                rel_err: f(4)?,
            })
        })
        .collect()
}
