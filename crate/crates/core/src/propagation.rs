// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact interaction-frame propagation.
//!
//! In the interaction frame of `H₀ = H_I + Ω_I·S_z` the RF Hamiltonian is
//!
//!   H_i(t) = ω₁(t)·[cos(−Ω_I t + φ(t))·S_x + sin(−Ω_I t + φ(t))·S_y]
//!
//! which is block diagonal over I-spin configurations: in configuration `i`
//! the operator Ω_I is the number ω⁽ⁱ⁾ and each block is a 2×2 traceless
//! Hermitian matrix. The time-ordered exponential is evaluated per block by
//! midpoint slicing with closed-form SU(2) steps, refined by step doubling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pulse::{PulseShape, SampledPulse};
use crate::spin::{
    assemble_full_matrix, effective_s_offset, enumerate_configurations, i_spin_energy,
    IConfiguration, SpinSystem,
};
use crate::su2::{exp_hermitian, exp_spin_vector, Mat2};

/// Refinement ceiling for step doubling.
pub const MAX_STEPS: usize = 1 << 20;

/// Default refinement tolerance (max Frobenius change per doubling).
pub const DEFAULT_TOL: f64 = 1e-9;

/// Block Hamiltonian H⁽ⁱ⁾(t) for configuration `config`.
pub fn block_hamiltonian(
    system: &SpinSystem,
    config: &IConfiguration,
    amp: f64,
    phase: f64,
    t: f64,
) -> Mat2 {
    rf_block(effective_s_offset(system, config), amp, phase, t)
}

#[inline]
fn rf_block(offset: f64, amp: f64, phase: f64, t: f64) -> Mat2 {
    Mat2::from_spin_vector(rf_vector(offset, amp, phase, t))
}

/// `ω₁·h(t)` for a configuration with effective offset `offset`.
#[inline]
pub(crate) fn rf_vector(offset: f64, amp: f64, phase: f64, t: f64) -> [f64; 3] {
    let angle = -offset * t + phase;
    [amp * angle.cos(), amp * angle.sin(), 0.0]
}

/// `exp(−i H dt)` for a traceless Hermitian slice Hamiltonian.
pub fn su2_step(h: &Mat2, dt: f64) -> Mat2 {
    exp_hermitian(h, dt)
}

/// Per-configuration interaction-frame propagators on the grid t_k = k·Δt.
#[derive(Debug, Clone)]
pub struct BlockTrajectory {
    /// t_0 … t_N.
    pub times: Vec<f64>,
    /// `blocks[config][k]` = U_I⁽ⁱ⁾(t_k).
    pub blocks: Vec<Vec<Mat2>>,
    /// ω⁽ⁱ⁾ per configuration, rad/s.
    pub offsets: Vec<f64>,
    pub n_steps: usize,
    /// Number of step doublings performed.
    pub refinements: u32,
    /// Max Frobenius change of the endpoint at the last doubling.
    pub error_estimate: f64,
}

impl BlockTrajectory {
    pub fn config_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) / self.n_steps.max(1) as f64
    }

    pub fn endpoint(&self) -> Vec<Mat2> {
        self.blocks.iter().map(|b| *b.last().expect("non-empty trajectory")).collect()
    }

    /// Largest ‖U U† − E‖_F over all stored blocks.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .map(Mat2::unitarity_defect)
            .fold(0.0, f64::max)
    }
}

fn config_offsets(system: &SpinSystem) -> Vec<f64> {
    enumerate_configurations(system)
        .iter()
        .map(|c| effective_s_offset(system, c))
        .collect()
}

fn step_block(u: Mat2, offset: f64, samples: &SampledPulse, k: usize) -> Mat2 {
    let h = rf_block(offset, samples.amps[k], samples.phases[k], samples.times[k]);
    su2_step(&h, samples.dt) * u
}

fn block_endpoint(offset: f64, samples: &SampledPulse) -> Mat2 {
    (0..samples.len()).fold(Mat2::identity(), |u, k| step_block(u, offset, samples, k))
}

fn block_history(offset: f64, samples: &SampledPulse) -> Vec<Mat2> {
    let mut out = Vec::with_capacity(samples.len() + 1);
    let mut u = Mat2::identity();
    out.push(u);
    for k in 0..samples.len() {
        u = step_block(u, offset, samples, k);
        out.push(u);
    }
    out
}

/// Endpoint blocks U_I⁽ⁱ⁾(T) with `n_steps` slices, no refinement.
pub fn endpoint_blocks(system: &SpinSystem, shape: &PulseShape, n_steps: usize) -> Vec<Mat2> {
    let samples = crate::pulse::sample(shape, n_steps);
    config_offsets(system)
        .par_iter()
        .map(|&w| block_endpoint(w, &samples))
        .collect()
}

/// Full trajectory with exactly `n_steps` slices, no refinement.
pub fn propagate_fixed(system: &SpinSystem, shape: &PulseShape, n_steps: usize) -> BlockTrajectory {
    let n = n_steps.max(1);
    let samples = crate::pulse::sample(shape, n);
    let offsets = config_offsets(system);
    let blocks = offsets
        .par_iter()
        .map(|&w| block_history(w, &samples))
        .collect();
    BlockTrajectory {
        times: (0..=n).map(|k| k as f64 * samples.dt).collect(),
        blocks,
        offsets,
        n_steps: n,
        refinements: 0,
        error_estimate: f64::NAN,
    }
}

fn max_endpoint_change(a: &[Mat2], b: &[Mat2]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.distance(y)).fold(0.0, f64::max)
}

/// Time-ordered interaction-frame propagator, refined by step doubling from
/// `n_steps` until the endpoint changes by less than `tol` (Frobenius, max
/// over configurations). The returned trajectory is the finest one computed.
pub fn propagate_interaction(
    system: &SpinSystem,
    shape: &PulseShape,
    n_steps: usize,
    tol: f64,
) -> Result<BlockTrajectory> {
    propagate_interaction_with_limit(system, shape, n_steps, tol, MAX_STEPS)
}

pub fn propagate_interaction_with_limit(
    system: &SpinSystem,
    shape: &PulseShape,
    n_steps: usize,
    tol: f64,
    max_steps: usize,
) -> Result<BlockTrajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let mut n = n_steps;
    let mut coarse = endpoint_blocks(system, shape, n);
    let mut refinements = 0;
    let mut estimate = f64::INFINITY;
    loop {
        let fine_n = 2 * n;
        if fine_n > max_steps {
            return Err(Error::NotConverged {
                tol,
                max_steps,
                steps: n,
                best_estimate: estimate,
            });
        }
        let fine = endpoint_blocks(system, shape, fine_n);
        estimate = max_endpoint_change(&coarse, &fine);
        refinements += 1;
        if estimate < tol {
            let mut traj = propagate_fixed(system, shape, fine_n);
            traj.refinements = refinements;
            traj.error_estimate = estimate;
            return Ok(traj);
        }
        coarse = fine;
        n = fine_n;
    }
}

/// A rotating-frame block `exp(−iH₀t)·U_I(t)` restricted to one
/// configuration, split into the S-spin rotation and the scalar I-spin phase
/// `exp(−iE⁽ⁱ⁾t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabBlock {
    pub rotation: Mat2,
    /// E⁽ⁱ⁾·t in rad.
    pub i_phase: f64,
}

impl LabBlock {
    /// The block including its I-spin phase factor.
    pub fn full(&self) -> Mat2 {
        self.rotation.scale(Complex64::from_polar(1.0, -self.i_phase))
    }
}

/// Rotating-frame propagator blocks at grid index `t_index`.
pub fn lab_frame_propagator(
    system: &SpinSystem,
    trajectory: &BlockTrajectory,
    t_index: usize,
) -> Result<Vec<LabBlock>> {
    if t_index >= trajectory.len() {
        return Err(Error::IndexOutOfRange {
            index: t_index,
            len: trajectory.len(),
        });
    }
    let t = trajectory.times[t_index];
    Ok(enumerate_configurations(system)
        .iter()
        .zip(&trajectory.blocks)
        .map(|(cfg, blocks)| {
            let w = effective_s_offset(system, cfg);
            LabBlock {
                rotation: free_precession(w, t) * blocks[t_index],
                i_phase: i_spin_energy(system, cfg) * t,
            }
        })
        .collect())
}

/// `exp(−i ω S_z t)`.
fn free_precession(offset: f64, t: f64) -> Mat2 {
    exp_spin_vector([0.0, 0.0, offset * t])
}

/// Full-space U_I = Πₖ exp(−i Ω·S_k) from per-configuration single-S
/// blocks. For one S spin this is the direct sum of the blocks.
pub fn multi_s_assemble(system: &SpinSystem, endpoint: &[Mat2]) -> Result<DMatrix<Complex64>> {
    assemble_full_matrix(system, endpoint)
}

/// Transverse and longitudinal S magnetization after the pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    /// Trial S offset, rad/s.
    pub offset: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

/// Response to the pulse from the initial state S_z as a function of S
/// offset, averaged uniformly over I configurations. Initial ⟨S_z⟩ = 1/2.
pub fn excitation_profile(
    system: &SpinSystem,
    shape: &PulseShape,
    offsets: &[f64],
    n_steps: usize,
) -> Vec<ProfilePoint> {
    let t_end = shape.duration();
    offsets
        .par_iter()
        .map(|&offset| {
            let sys = system.with_s_offset(offset);
            let ends = endpoint_blocks(&sys, shape, n_steps);
            let n_cfg = ends.len() as f64;
            let (mut mx, mut my, mut mz) = (0.0, 0.0, 0.0);
            for (cfg, u_i) in enumerate_configurations(&sys).iter().zip(&ends) {
                let u = free_precession(effective_s_offset(&sys, cfg), t_end) * *u_i;
                let rho = u * Mat2::sz() * u.dagger();
                mx += (Mat2::sx() * rho).trace().re;
                my += (Mat2::sy() * rho).trace().re;
                mz += (Mat2::sz() * rho).trace().re;
            }
            ProfilePoint {
                offset,
                mx: mx / n_cfg,
                my: my / n_cfg,
                mz: mz / n_cfg,
            }
        })
        .collect()
}
