// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense full-space reference propagator.
//!
//! Builds H₀ and the RF Hamiltonian as 2^(n_S+n_I)-dimensional matrices from
//! Kronecker products of single-spin operators and steps the interaction
//! frame propagator with dense unitaries. Shares no code with the block propagator beyond the pulse
//! shape, so agreement between the two is a meaningful check.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pulse::{sample, PulseShape};
use crate::spin::SpinSystem;

pub type CMatrix = DMatrix<Complex64>;

/// Largest full-space dimension the oracle accepts.
pub const MAX_DIMENSION: usize = 1 << 8;

fn single(op: char) -> CMatrix {
    let h = 0.5;
    let (a, b, c, d) = match op {
        'x' => (0.0.into(), h.into(), h.into(), 0.0.into()),
        'y' => (
            0.0.into(),
            Complex64::new(0.0, -h),
            Complex64::new(0.0, h),
            0.0.into(),
        ),
        'z' => (h.into(), 0.0.into(), 0.0.into(), (-h).into()),
        _ => unreachable!("spin operator component"),
    };
    DMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

/// Operator of component `op` ('x', 'y' or 'z') for spin `which` among
/// `n_spins`, spin 0 being the leftmost tensor factor.
pub fn spin_operator(n_spins: usize, which: usize, op: char) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for q in 0..n_spins {
        let factor = if q == which {
            single(op)
        } else {
            CMatrix::identity(2, 2)
        };
        out = out.kronecker(&factor);
    }
    out
}

/// Full-space operators in the ordering used by
/// [`crate::spin::assemble_full_matrix`]: S spins first, then I spins.
pub struct FullSpace {
    pub n_s: usize,
    pub n_i: usize,
    pub h0: CMatrix,
    pub s_x: CMatrix,
    pub s_y: CMatrix,
    pub s_z: CMatrix,
}

impl FullSpace {
    pub fn new(system: &SpinSystem) -> Result<Self> {
        let n_s = system.s_count();
        let n_i = system.i_count();
        let n = n_s + n_i;
        if 1usize << n > MAX_DIMENSION {
            return Err(Error::InvalidArgument(format!(
                "dense oracle limited to dimension {MAX_DIMENSION}"
            )));
        }
        let dim = 1 << n;
        let zero = || CMatrix::zeros(dim, dim);
        let s_ops = |op: char| {
            (0..n_s).fold(zero(), |acc, k| acc + spin_operator(n, k, op))
        };
        let s_z = s_ops('z');
        let i_z: Vec<CMatrix> = (0..n_i).map(|k| spin_operator(n, n_s + k, 'z')).collect();

        let mut h0 = &s_z * Complex64::from(system.s_offset());
        for (k, spin) in system.i_spins().iter().enumerate() {
            h0 += &i_z[k] * Complex64::from(spin.offset);
            h0 += (&i_z[k] * &s_z) * Complex64::from(spin.j_to_s);
        }
        for c in system.i_couplings() {
            h0 += (&i_z[c.k] * &i_z[c.l]) * Complex64::from(c.j);
        }
        Ok(FullSpace {
            n_s,
            n_i,
            h0,
            s_x: s_ops('x'),
            s_y: s_ops('y'),
            s_z,
        })
    }

    /// Orthonormal eigenvectors of the total S_x as columns.
    pub fn s_x_eigenvectors(&self) -> CMatrix {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let hadamard = DMatrix::from_row_slice(2, 2, &[r, r, r, -r]).map(Complex64::from);
        let mut out = CMatrix::identity(1, 1);
        for q in 0..self.n_s + self.n_i {
            out = if q < self.n_s {
                out.kronecker(&hadamard)
            } else {
                out.kronecker(&CMatrix::identity(2, 2))
            };
        }
        out
    }

    pub fn dimension(&self) -> usize {
        self.h0.nrows()
    }

    /// ω₁(cosφ·S_x + sinφ·S_y) in the rotating frame.
    pub fn rf_hamiltonian(&self, amp: f64, phase: f64) -> CMatrix {
        &self.s_x * Complex64::from(amp * phase.cos()) + &self.s_y * Complex64::from(amp * phase.sin())
    }

    /// e^{iH₀t}·H·e^{−iH₀t}. H₀ is diagonal in the product basis.
    pub fn to_interaction_frame(&self, h: &CMatrix, t: f64) -> CMatrix {
        let dim = self.dimension();
        let e: Vec<f64> = (0..dim).map(|a| self.h0[(a, a)].re).collect();
        CMatrix::from_fn(dim, dim, |a, b| h[(a, b)] * Complex64::from_polar(1.0, (e[a] - e[b]) * t))
    }
}

/// Interaction-frame propagator at t = T by `n_steps` midpoint slices.
///
/// Each slice exponential is taken in the eigenbasis of the total S_x:
/// H_i = ω₁·W S_x W† with W = e^{iH₀t}·e^{−iφS_z} diagonal, so
/// exp(−iH_i Δt) = W V e^{−iω₁Δt·D} V† W† where S_x = V D V†. V is the
/// Kronecker product of single-spin Hadamard matrices on the S spins.
pub fn dense_interaction_propagator(system: &SpinSystem, shape: &PulseShape, n_steps: usize) -> Result<CMatrix> {
    let space = FullSpace::new(system)?;
    let dim = space.dimension();
    let v = space.s_x_eigenvectors();
    let d = (v.adjoint() * &space.s_x * &v).map_diagonal(|z| z.re);
    let energies: Vec<f64> = (0..dim).map(|a| space.h0[(a, a)].re).collect();
    let m: Vec<f64> = (0..dim).map(|a| space.s_z[(a, a)].re).collect();
    let v_adj = v.adjoint();
    let samples = sample(shape, n_steps.max(1));
    let mut u = CMatrix::identity(dim, dim);
    for k in 0..samples.len() {
        let (t, phase, amp) = (samples.times[k], samples.phases[k], samples.amps[k]);
        let w: Vec<Complex64> = (0..dim)
            .map(|a| Complex64::from_polar(1.0, energies[a] * t - phase * m[a]))
            .collect();
        let rot: Vec<Complex64> = (0..dim)
            .map(|b| Complex64::from_polar(1.0, -amp * samples.dt * d[b]))
            .collect();
        // W V e^{−iω₁Δt D} V† W† U, applying the diagonal factors in place
        for (a, mut row) in u.row_iter_mut().enumerate() {
            row *= w[a].conj();
        }
        let mut x = &v_adj * &u;
        for (b, mut row) in x.row_iter_mut().enumerate() {
            row *= rot[b];
        }
        u = &v * x;
        for (a, mut row) in u.row_iter_mut().enumerate() {
            row *= w[a];
        }
    }
    Ok(u)
}

/// [`dense_interaction_propagator`] refined by step doubling until the
/// Frobenius change falls below `tol`.
pub fn dense_converged(system: &SpinSystem, shape: &PulseShape, n_steps: usize, tol: f64) -> Result<CMatrix> {
    let mut n = n_steps.max(1);
    let mut coarse = dense_interaction_propagator(system, shape, n)?;
    let mut estimate = f64::INFINITY;
    loop {
        if 2 * n > crate::propagation::MAX_STEPS {
            return Err(Error::NotConverged {
                tol,
                max_steps: crate::propagation::MAX_STEPS,
                steps: n,
                best_estimate: estimate,
            });
        }
        let fine = dense_interaction_propagator(system, shape, 2 * n)?;
        estimate = (&fine - &coarse).norm();
        if estimate < tol {
            return Ok(fine);
        }
        coarse = fine;
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::calibrate;
    use std::f64::consts::PI;

    #[test]
    fn spin_operator_commutation() {
        let x = spin_operator(2, 1, 'x');
        let y = spin_operator(2, 1, 'y');
        let z = spin_operator(2, 1, 'z');
        let comm = &x * &y - &y * &x;
        assert!((comm - z * Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let other = spin_operator(2, 0, 'x');
        assert!((&other * &x - &x * &other).norm() < 1e-15);
    }

    #[test]
    fn h0_is_diagonal_with_expected_energies() {
        let sys = SpinSystem::new(1, 100.0).unwrap().with_i_spin(40.0, 5.0).unwrap();
        let space = FullSpace::new(&sys).unwrap();
        let j = sys.i_spins()[0].j_to_s;
        // |S up, I up⟩
        let expected = 50.0 + 20.0 + j / 4.0;
        assert!((space.h0[(0, 0)].re - expected).abs() < 1e-12);
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert_eq!(space.h0[(a, b)], Complex64::from(0.0));
                }
            }
        }
    }

    #[test]
    fn hard_pulse_on_bare_spin() {
        let sys = SpinSystem::new(1, 0.0).unwrap();
        let p = calibrate(&PulseShape::constant(1.0, 1e-3).unwrap(), PI, 8).unwrap();
        let u = dense_interaction_propagator(&sys, &p, 8).unwrap();
        // exp(−iπS_x) = −i·2S_x
        let expected = single('x') * Complex64::new(0.0, -2.0);
        assert!((u - expected).norm() < 1e-12);
    }

    #[test]
    fn hadamard_basis_diagonalizes_total_sx() {
        let sys = SpinSystem::new(2, 0.0).unwrap().with_i_spin(10.0, 1.0).unwrap();
        let space = FullSpace::new(&sys).unwrap();
        let v = space.s_x_eigenvectors();
        let dim = space.dimension();
        assert!((v.adjoint() * &v - CMatrix::identity(dim, dim)).norm() < 1e-14);
        let d = v.adjoint() * &space.s_x * &v;
        let off: f64 = (0..dim)
            .flat_map(|a| (0..dim).map(move |b| (a, b)))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| d[(a, b)].norm())
            .fold(0.0, f64::max);
        assert!(off < 1e-14);
    }

    #[test]
    fn eigen_stepping_matches_generic_exponential() {
        let sys = SpinSystem::new(2, 300.0).unwrap().with_i_spin(-150.0, 40.0).unwrap();
        let space = FullSpace::new(&sys).unwrap();
        let p = calibrate(&PulseShape::gaussian(1e-3, 0.01).unwrap(), PI / 2.0, 64).unwrap();
        let samples = sample(&p, 16);
        let mut reference = CMatrix::identity(8, 8);
        for k in 0..16 {
            let h = space.rf_hamiltonian(samples.amps[k], samples.phases[k]);
            let hi = space.to_interaction_frame(&h, samples.times[k]);
            reference = (hi * Complex64::new(0.0, -samples.dt)).exp() * reference;
        }
        let u = dense_interaction_propagator(&sys, &p, 16).unwrap();
        assert!((u - reference).norm() < 1e-12);
    }

    #[test]
    fn rejects_large_systems() {
        let mut sys = SpinSystem::new(1, 0.0).unwrap();
        for _ in 0..8 {
            sys = sys.with_i_spin(0.0, 1.0).unwrap();
        }
        assert!(FullSpace::new(&sys).is_err());
    }
}
