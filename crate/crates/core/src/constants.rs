use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical scales shared by kernels, densities and the oracle.
///
/// Defaults are natural units, `hbar = kT = mass = 1`. `xi` defaults to 0.5
/// so that the λ(ξ) closure is defined out of the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    pub hbar: f64,
    #[serde(rename = "kT")]
    pub kt: f64,
    pub mass: f64,
    pub xi: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            hbar: 1.0,
            kt: 1.0,
            mass: 1.0,
            xi: 0.5,
        }
    }
}

impl PhysicalConstants {
    pub fn natural() -> Self {
        Self::default()
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_kt(mut self, kt: f64) -> Self {
        self.kt = kt;
        self
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    /// Checks the constraints every consumer relies on. `kT > 0` and the range
    /// of `xi` are checked by the consumers that need them.
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("hbar", self.hbar),
            ("kT", self.kt),
            ("mass", self.mass),
            ("xi", self.xi),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid(format!("{name} must be finite, got {v}")));
        }
        if self.hbar <= 0.0 {
            return Err(invalid(format!("hbar must be > 0, got {}", self.hbar)));
        }
        if self.kt < 0.0 {
            return Err(invalid(format!("kT must be >= 0, got {}", self.kt)));
        }
        if self.mass < 0.0 {
            return Err(invalid(format!("mass must be >= 0, got {}", self.mass)));
        }
        if self.xi <= 0.0 {
            return Err(invalid(format!("xi must be > 0, got {}", self.xi)));
        }
        Ok(())
    }

    /// On-shell frequency ω = √(|k|² + m²).
    #[inline]
    pub fn omega(&self, kmag: f64) -> f64 {
        kmag.hypot(self.mass)
    }
}
