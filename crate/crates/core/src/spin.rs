// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Weakly coupled S_nAMX… spin systems and their I-spin configurations.
//!
//! Only the S group is irradiated. The static Hamiltonian is
//! `H₀ = H_I + Ω_I·S_z` with
//!
//!   H_I = Σ_k Ω_k I_kz + Σ_{k<l} 2π J_kl I_kz I_lz
//!   Ω_I = Ω_s + Σ_k 2π J_ks I_kz
//!
//! Both operators are diagonal in the Zeeman product basis of the I spins,
//! so every quantity that only involves I_z operators is represented as a
//! [`LomsoDiagonal`]: one real number per [`IConfiguration`].
//!
//! Basis ordering for full-space matrices: S spins are the slowest-varying
//! factors, then the I spins in declaration order. Each spin contributes
//! one bit, big-endian, with `m = +1/2` encoded as 0.

use std::f64::consts::PI;
use std::ops::{Add, Mul};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::su2::Mat2;

/// Upper bound on the number of I spins; keeps 2^N_I enumerations sane.
pub const MAX_I_SPINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ISpin {
    /// Offset Ω_k, rad/s.
    pub offset: f64,
    /// Coupling to the S group, stored as 2π·J_ks in rad/s.
    pub j_to_s: f64,
}

/// Scalar coupling between two I spins, stored as 2π·J_kl in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IICoupling {
    pub k: usize,
    pub l: usize,
    pub j: f64,
}

/// A weakly coupled S_nAMX… system.
///
/// Couplings enter in Hz and are converted to rad/s once, here.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    s_count: usize,
    s_offset: f64,
    i_spins: Vec<ISpin>,
    j_ii: Vec<IICoupling>,
}

impl SpinSystem {
    /// `s_count` equivalent S spins at offset `s_offset` (rad/s), no I spins.
    pub fn new(s_count: usize, s_offset: f64) -> Result<Self> {
        if s_count == 0 {
            return Err(Error::InvalidSystem("s_count must be at least 1".into()));
        }
        if !s_offset.is_finite() {
            return Err(Error::InvalidSystem("S offset must be finite".into()));
        }
        Ok(SpinSystem {
            s_count,
            s_offset,
            i_spins: Vec::new(),
            j_ii: Vec::new(),
        })
    }

    /// Adds an I spin with offset Ω_k in rad/s and coupling J_ks in Hz.
    pub fn with_i_spin(mut self, offset: f64, j_to_s_hz: f64) -> Result<Self> {
        if !offset.is_finite() || !j_to_s_hz.is_finite() {
            return Err(Error::InvalidSystem("I-spin parameters must be finite".into()));
        }
        if self.i_spins.len() >= MAX_I_SPINS {
            return Err(Error::InvalidSystem(format!(
                "at most {MAX_I_SPINS} I spins are supported"
            )));
        }
        self.i_spins.push(ISpin {
            offset,
            j_to_s: 2.0 * PI * j_to_s_hz,
        });
        Ok(self)
    }

    /// Adds a coupling J_kl in Hz between I spins `k` and `l`.
    pub fn with_i_coupling(mut self, k: usize, l: usize, j_hz: f64) -> Result<Self> {
        let n = self.i_spins.len();
        if k == l {
            return Err(Error::InvalidSystem(format!("self-coupling of I spin {k}")));
        }
        if k >= n || l >= n {
            return Err(Error::InvalidSystem(format!(
                "coupling ({k}, {l}) references a missing I spin ({n} declared)"
            )));
        }
        if !j_hz.is_finite() {
            return Err(Error::InvalidSystem("coupling must be finite".into()));
        }
        let (k, l) = if k < l { (k, l) } else { (l, k) };
        if self.j_ii.iter().any(|c| c.k == k && c.l == l) {
            return Err(Error::InvalidSystem(format!("coupling ({k}, {l}) given twice")));
        }
        self.j_ii.push(IICoupling {
            k,
            l,
            j: 2.0 * PI * j_hz,
        });
        Ok(self)
    }

    /// Same system with a different S offset (rad/s).
    pub fn with_s_offset(&self, s_offset: f64) -> Self {
        SpinSystem {
            s_offset,
            ..self.clone()
        }
    }

    pub fn s_count(&self) -> usize {
        self.s_count
    }

    pub fn s_offset(&self) -> f64 {
        self.s_offset
    }

    pub fn i_spins(&self) -> &[ISpin] {
        &self.i_spins
    }

    pub fn i_couplings(&self) -> &[IICoupling] {
        &self.j_ii
    }

    pub fn i_count(&self) -> usize {
        self.i_spins.len()
    }

    pub fn config_count(&self) -> usize {
        1 << self.i_spins.len()
    }

    /// Dimension of the full Hilbert space, 2^(n + N_I).
    pub fn full_dimension(&self) -> usize {
        1 << (self.s_count + self.i_spins.len())
    }

    pub fn configuration(&self, index: usize) -> Result<IConfiguration> {
        if index >= self.config_count() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.config_count(),
            });
        }
        Ok(IConfiguration::from_index(index, self.i_count()))
    }

    /// Loads a system file (offsets in Hz).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: SpinSystemFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.display().to_string(),
            source,
        })?;
        file.into_system()
    }

    pub fn to_file_repr(&self) -> SpinSystemFile {
        SpinSystemFile {
            s_count: self.s_count,
            s_offset_hz: self.s_offset / (2.0 * PI),
            i_spins: self
                .i_spins
                .iter()
                .map(|s| ISpinFile {
                    offset_hz: s.offset / (2.0 * PI),
                    j_to_s_hz: s.j_to_s / (2.0 * PI),
                })
                .collect(),
            j_ii_hz: self
                .j_ii
                .iter()
                .map(|c| (c.k, c.l, c.j / (2.0 * PI)))
                .collect(),
        }
    }
}

/// On-disk form of a [`SpinSystem`]. All frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSystemFile {
    #[serde(default = "one")]
    pub s_count: usize,
    #[serde(default)]
    pub s_offset_hz: f64,
    #[serde(default)]
    pub i_spins: Vec<ISpinFile>,
    #[serde(default)]
    pub j_ii_hz: Vec<(usize, usize, f64)>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ISpinFile {
    pub offset_hz: f64,
    pub j_to_s_hz: f64,
}

impl SpinSystemFile {
    pub fn into_system(self) -> Result<SpinSystem> {
        let mut system = SpinSystem::new(self.s_count, 2.0 * PI * self.s_offset_hz)?;
        for spin in &self.i_spins {
            system = system.with_i_spin(2.0 * PI * spin.offset_hz, spin.j_to_s_hz)?;
        }
        for &(k, l, j) in &self.j_ii_hz {
            system = system.with_i_coupling(k, l, j)?;
        }
        Ok(system)
    }
}

/// One joint assignment of magnetic quantum numbers to the I spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IConfiguration {
    index: usize,
    /// `true` for m = +1/2.
    up: Vec<bool>,
}

impl IConfiguration {
    pub fn from_index(index: usize, i_count: usize) -> Self {
        let up = (0..i_count)
            .map(|k| (index >> (i_count - 1 - k)) & 1 == 0)
            .collect();
        IConfiguration { index, up }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Magnetic quantum number of I spin `k`.
    pub fn m(&self, k: usize) -> f64 {
        if self.up[k] {
            0.5
        } else {
            -0.5
        }
    }

    pub fn magnetic_quantum_numbers(&self) -> Vec<f64> {
        (0..self.up.len()).map(|k| self.m(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }
}

/// All 2^N_I configurations in index order.
pub fn enumerate_configurations(system: &SpinSystem) -> Vec<IConfiguration> {
    (0..system.config_count())
        .map(|i| IConfiguration::from_index(i, system.i_count()))
        .collect()
}

/// Eigenvalue ω⁽ⁱ⁾ of Ω_I = Ω_s + Σ_k 2π J_ks I_kz for this configuration.
pub fn effective_s_offset(system: &SpinSystem, config: &IConfiguration) -> f64 {
    system.s_offset
        + system
            .i_spins
            .iter()
            .enumerate()
            .map(|(k, spin)| spin.j_to_s * config.m(k))
            .sum::<f64>()
}

/// Eigenvalue E⁽ⁱ⁾ of H_I for this configuration.
pub fn i_spin_energy(system: &SpinSystem, config: &IConfiguration) -> f64 {
    let zeeman: f64 = system
        .i_spins
        .iter()
        .enumerate()
        .map(|(k, spin)| spin.offset * config.m(k))
        .sum();
    let coupling: f64 = system
        .j_ii
        .iter()
        .map(|c| c.j * config.m(c.k) * config.m(c.l))
        .sum();
    zeeman + coupling
}

/// A longitudinal-magnetization / spin-order operator of the I spins,
/// stored as its diagonal over configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct LomsoDiagonal {
    values: Vec<f64>,
}

impl LomsoDiagonal {
    pub fn from_values(values: Vec<f64>) -> Self {
        LomsoDiagonal { values }
    }

    pub fn from_fn(system: &SpinSystem, f: impl Fn(&IConfiguration) -> f64) -> Self {
        LomsoDiagonal {
            values: enumerate_configurations(system).iter().map(f).collect(),
        }
    }

    /// Diagonal of Ω_I.
    pub fn effective_offsets(system: &SpinSystem) -> Self {
        Self::from_fn(system, |c| effective_s_offset(system, c))
    }

    /// Diagonal of H_I.
    pub fn i_energies(system: &SpinSystem) -> Self {
        Self::from_fn(system, |c| i_spin_energy(system, c))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        LomsoDiagonal {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl Add for &LomsoDiagonal {
    type Output = LomsoDiagonal;
    fn add(self, rhs: &LomsoDiagonal) -> LomsoDiagonal {
        assert_eq!(self.len(), rhs.len(), "diagonal length mismatch");
        LomsoDiagonal {
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Mul for &LomsoDiagonal {
    type Output = LomsoDiagonal;
    fn mul(self, rhs: &LomsoDiagonal) -> LomsoDiagonal {
        assert_eq!(self.len(), rhs.len(), "diagonal length mismatch");
        LomsoDiagonal {
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a * b).collect(),
        }
    }
}

/// Full-space matrix whose restriction to configuration `i` is
/// `B_i ⊗ B_i ⊗ … ⊗ B_i` over the n equivalent S spins.
///
/// For a single S spin this is the direct sum of the blocks. `blocks` is
/// indexed by configuration index.
pub fn assemble_full_matrix(system: &SpinSystem, blocks: &[Mat2]) -> Result<DMatrix<Complex64>> {
    let n_cfg = system.config_count();
    if blocks.len() < n_cfg {
        return Err(Error::MissingBlock(blocks.len()));
    }
    let n_s = system.s_count();
    let n_i = system.i_count();
    let s_states = 1usize << n_s;
    let dim = system.full_dimension();
    let mut full = DMatrix::<Complex64>::zeros(dim, dim);
    for (cfg, block) in blocks.iter().take(n_cfg).enumerate() {
        for row_s in 0..s_states {
            for col_s in 0..s_states {
                let mut entry = Complex64::new(1.0, 0.0);
                for k in 0..n_s {
                    let shift = n_s - 1 - k;
                    entry *= block.get((row_s >> shift) & 1, (col_s >> shift) & 1);
                }
                full[((row_s << n_i) | cfg, (col_s << n_i) | cfg)] = entry;
            }
        }
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sax() -> SpinSystem {
        SpinSystem::new(1, 0.0)
            .unwrap()
            .with_i_spin(200.0, 10.0)
            .unwrap()
    }

    #[test]
    fn enumerates_empty_configuration() {
        let sys = SpinSystem::new(1, 0.0).unwrap();
        let configs = enumerate_configurations(&sys);
        assert_eq!(configs.len(), 1);
        assert!(configs[0].is_empty());
    }

    #[test]
    fn enumerates_single_spin() {
        let configs = enumerate_configurations(&sax());
        assert_eq!(configs.len(), 2);
        assert_eq!(configs[0].magnetic_quantum_numbers(), vec![0.5]);
        assert_eq!(configs[1].magnetic_quantum_numbers(), vec![-0.5]);
    }

    #[test]
    fn enumerates_two_spins_big_endian() {
        let sys = sax().with_i_spin(-50.0, 3.0).unwrap();
        let configs = enumerate_configurations(&sys);
        assert_eq!(configs.len(), 4);
        for (i, c) in configs.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
        assert_eq!(configs[1].magnetic_quantum_numbers(), vec![0.5, -0.5]);
        assert_eq!(configs[2].magnetic_quantum_numbers(), vec![-0.5, 0.5]);
    }

    #[test]
    fn effective_offset_examples() {
        let sys = sax();
        let c = enumerate_configurations(&sys);
        assert!((effective_s_offset(&sys, &c[0]) - 10.0 * PI).abs() < 1e-12);
        assert!((effective_s_offset(&sys, &c[1]) + 10.0 * PI).abs() < 1e-12);
        let bare = SpinSystem::new(1, 100.0).unwrap();
        let c0 = IConfiguration::from_index(0, 0);
        assert_eq!(effective_s_offset(&bare, &c0), 100.0);
    }

    #[test]
    fn i_energy_examples() {
        let sys = SpinSystem::new(1, 0.0)
            .unwrap()
            .with_i_spin(200.0, 0.0)
            .unwrap()
            .with_i_spin(-50.0, 0.0)
            .unwrap();
        let up_up = IConfiguration::from_index(0, 2);
        assert!((i_spin_energy(&sys, &up_up) - 75.0).abs() < 1e-12);
        let coupled = sys.with_i_coupling(0, 1, 4.0).unwrap();
        assert!((i_spin_energy(&coupled, &up_up) - (75.0 + 2.0 * PI)).abs() < 1e-12);
        let bare = SpinSystem::new(2, 5.0).unwrap();
        assert_eq!(i_spin_energy(&bare, &IConfiguration::from_index(0, 0)), 0.0);
    }

    #[test]
    fn rejects_invalid_systems() {
        assert!(SpinSystem::new(0, 0.0).is_err());
        let sys = sax();
        assert!(sys.clone().with_i_coupling(0, 0, 1.0).is_err());
        assert!(sys.clone().with_i_coupling(0, 3, 1.0).is_err());
    }

    #[test]
    fn file_round_trip_converts_hz() {
        let text = r#"{"s_count": 2, "s_offset_hz": 50.0,
            "i_spins": [{"offset_hz": 100.0, "j_to_s_hz": 7.0},
                        {"offset_hz": -30.0, "j_to_s_hz": 2.0}],
            "j_ii_hz": [[0, 1, 4.5]]}"#;
        let file: SpinSystemFile = serde_json::from_str(text).unwrap();
        let sys = file.clone().into_system().unwrap();
        assert_eq!(sys.s_count(), 2);
        assert!((sys.s_offset() - 100.0 * PI).abs() < 1e-12);
        assert!((sys.i_spins()[0].offset - 200.0 * PI).abs() < 1e-12);
        assert!((sys.i_spins()[1].j_to_s - 4.0 * PI).abs() < 1e-12);
        let back = sys.to_file_repr();
        assert!((back.j_ii_hz[0].2 - 4.5).abs() < 1e-12);
        assert!((back.s_offset_hz - 50.0).abs() < 1e-12);
    }

    #[test]
    fn assembles_identity() {
        let sys = SpinSystem::new(1, 0.0).unwrap();
        let full = assemble_full_matrix(&sys, &[Mat2::identity()]).unwrap();
        assert_eq!(full, DMatrix::identity(2, 2));
        let sys2 = sax().with_i_spin(1.0, 1.0).unwrap();
        let full = assemble_full_matrix(&sys2, &[Mat2::identity(); 4]).unwrap();
        assert_eq!(full, DMatrix::identity(8, 8));
    }

    #[test]
    fn assembles_direct_sum_with_interleaving() {
        let sys = sax();
        let c = |re: f64| Complex64::new(re, 0.0);
        let b0 = Mat2::new(c(1.0), c(2.0), c(3.0), c(4.0));
        let b1 = Mat2::new(c(5.0), c(6.0), c(7.0), c(8.0));
        let full = assemble_full_matrix(&sys, &[b0, b1]).unwrap();
        // rows/cols: |α,α⟩ |α,β⟩ |β,α⟩ |β,β⟩ (S first)
        assert_eq!(full[(0, 0)], c(1.0));
        assert_eq!(full[(0, 2)], c(2.0));
        assert_eq!(full[(2, 0)], c(3.0));
        assert_eq!(full[(2, 2)], c(4.0));
        assert_eq!(full[(1, 1)], c(5.0));
        assert_eq!(full[(1, 3)], c(6.0));
        assert_eq!(full[(3, 1)], c(7.0));
        assert_eq!(full[(3, 3)], c(8.0));
        assert_eq!(full[(0, 1)], c(0.0));
    }

    #[test]
    fn missing_block_is_an_error() {
        let sys = sax();
        assert!(matches!(
            assemble_full_matrix(&sys, &[Mat2::identity()]),
            Err(Error::MissingBlock(1))
        ));
    }

    #[test]
    fn lomso_diagonal_algebra_is_elementwise() {
        let a = LomsoDiagonal::from_values(vec![1.0, 2.0, -3.0]);
        let b = LomsoDiagonal::from_values(vec![0.5, 4.0, 2.0]);
        assert_eq!((&a * &b).values(), &[0.5, 8.0, -6.0]);
        assert_eq!((&a + &b).values(), &[1.5, 6.0, -1.0]);
        assert_eq!(&a * &b, &b * &a);
    }
}
