//! Run configuration: one JSON document, overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use kgfield::kernels::{QuadratureSpec, WavePacket};
use kgfield::sampler::LatticeSpec;
use kgfield::{Error, PhysicalConstants, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Default for KGrid {
    fn default() -> Self {
        KGrid {
            start: 0.0,
            stop: 10.0,
            count: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub constants: PhysicalConstants,
    pub dim: usize,
    pub packets: BTreeMap<String, WavePacket>,
    pub quadrature: QuadratureSpec,
    pub lattice: Option<LatticeSpec>,
    pub ensemble: Option<String>,
    pub lambda: Option<f64>,
    pub samples: u64,
    pub seed: u64,
    pub k_grid: KGrid,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            constants: PhysicalConstants::default(),
            dim: 1,
            packets: BTreeMap::new(),
            quadrature: QuadratureSpec::default(),
            lattice: None,
            ensemble: None,
            lambda: None,
            samples: 1000,
            seed: 0,
            k_grid: KGrid::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidInput(format!("dim must be 1, 2 or 3, got {}", self.dim)));
        }
        self.quadrature.validate()?;
        for (name, p) in &self.packets {
            p.validate()
                .map_err(|e| Error::InvalidInput(format!("packet '{name}': {e}")))?;
            if p.dim != self.dim {
                return Err(Error::InvalidInput(format!(
                    "packet '{name}' has D={}, run has D={}",
                    p.dim, self.dim
                )));
            }
        }
        if let Some(l) = &self.lattice {
            l.validate()?;
        }
        Ok(())
    }

    /// Named packets, or the built-in set f1..f3 when the config has none.
    pub fn packet_set(&self) -> BTreeMap<String, WavePacket> {
        if !self.packets.is_empty() {
            return self.packets.clone();
        }
        builtin_packets(self.dim)
    }

    pub fn packet(&self, name: &str) -> Result<WavePacket> {
        self.packet_set()
            .remove(name)
            .ok_or_else(|| Error::Lookup(format!("no packet named '{name}'")))
    }
}

pub fn builtin_packets(dim: usize) -> BTreeMap<String, WavePacket> {
    let axis = |v: f64| {
        let mut x = vec![0.0; dim];
        x[0] = v;
        x
    };
    let f1 = WavePacket::standard(dim).with_carrier(1.5, &axis(0.5));
    let f2 = WavePacket::standard(dim)
        .with_center(0.5, &axis(-1.0))
        .with_widths(1.5, 0.8)
        .with_carrier(2.0, &axis(-0.5))
        .with_amplitude(Complex64::new(0.6, -0.8));
    let f3 = WavePacket::standard(dim)
        .with_center(-1.0, &axis(1.0))
        .with_widths(0.7, 1.2)
        .with_carrier(1.2, &axis(1.0));
    [("f1", f1), ("f2", f2), ("f3", f3)]
        .into_iter()
        .map(|(n, p)| (n.to_string(), p))
        .collect()
}
