// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Continuous Magnus operator Ω(t) with U_I(t) = exp(−iΩ(t)), its
//! elementary-rotation angles, and the existence criteria.
//!
//! Per configuration Ω = Ω_x S_x + Ω_y S_y + Ω_z S_z. Writing
//! Ω̂ = |(Ω_x, Ω_y, Ω_z)|, α = atan2(Ω_y, Ω_x) and β = atan2(√(Ω_x²+Ω_y²), Ω_z),
//!
//!   exp(−iΩ) = exp(−iαS_z)·exp(−iβS_y)·exp(−iΩ̂S_z)·exp(iβS_y)·exp(iαS_z).
//!
//! The eigenvalues of Ω are m_s·Ω̂⁽ⁱ⁾. A single exponential exists while no
//! two eigenvalues differ by a nonzero multiple of 2π; since
//! |Ω̂⁽ⁱ⁾(t)| ≤ I(t) = ∫₀ᵗ|ω₁|, the condition I(t) < 2π is sufficient.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagation::{propagate_interaction, rf_vector, BlockTrajectory, DEFAULT_TOL};
use crate::pulse::{abs_amplitude_integral, cumulative_abs_integral, flip_angle, sample, PulseShape};
use crate::spin::{effective_s_offset, enumerate_configurations, SpinSystem};
use crate::su2::{dot3, exp_spin_vector, norm3, Mat2};

const TWO_PI: f64 = 2.0 * PI;
const FOUR_PI: f64 = 4.0 * PI;

/// |sin(Ω̂/2)| below which the rotation axis is treated as undefined.
pub const AMBIGUITY_TOL: f64 = 1e-8;

/// Default tolerance for the eigenvalue-gap test, rad.
pub const DEFAULT_GAP_TOL: f64 = 1e-6;

/// Continuity-tracked Ω(t) for every configuration.
#[derive(Debug, Clone)]
pub struct MagnusSolution {
    pub times: Vec<f64>,
    /// `omega[config][k]` = (Ω_x, Ω_y, Ω_z) at t_k, rad.
    pub omega: Vec<Vec<[f64; 3]>>,
    /// Set where U_I ≈ −E and the axis of Ω is undefined.
    pub ambiguous: Vec<Vec<bool>>,
    /// Number of equivalent S spins the blocks belong to.
    pub s_count: usize,
}

impl MagnusSolution {
    pub fn config_count(&self) -> usize {
        self.omega.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn omega_hat(&self, config: usize, k: usize) -> f64 {
        norm3(self.omega[config][k])
    }

    /// (α, β, Ω̂) at grid index `k`.
    pub fn angles(&self, config: usize, k: usize) -> Angles {
        angles_from_omega(self.omega[config][k])
    }

    /// Grid times at which any configuration is flagged ambiguous.
    pub fn ambiguity_times(&self) -> Vec<f64> {
        (0..self.len())
            .filter(|&k| self.ambiguous.iter().any(|flags| flags[k]))
            .map(|k| self.times[k])
            .collect()
    }

    /// Largest Ω̂ over all configurations and times.
    pub fn max_omega_hat(&self) -> f64 {
        self.omega
            .iter()
            .flatten()
            .map(|&v| norm3(v))
            .fold(0.0, f64::max)
    }
}

/// Selects, among all Ω with exp(−iΩ·S) = `u`, the one nearest to `prev`.
///
/// Returns the vector and whether `u` sits at the −E degeneracy.
pub fn nearest_logarithm(u: &Mat2, prev: [f64; 3]) -> ([f64; 3], bool) {
    let (c, v) = u.su2_quaternion();
    let s = norm3(v);
    let ambiguous = s < AMBIGUITY_TOL && c <= -1.0 + AMBIGUITY_TOL;
    if s < AMBIGUITY_TOL {
        // U ≈ ±E: every direction is admissible; keep the previous one and
        // pick the admissible radius (4πk for +E, 2π(2k+1) for −E) nearest
        // to |prev|.
        let r_prev = norm3(prev);
        let radius = if c > 0.0 {
            FOUR_PI * (r_prev / FOUR_PI).round()
        } else {
            TWO_PI + FOUR_PI * ((r_prev - TWO_PI) / FOUR_PI).round().max(0.0)
        };
        if radius == 0.0 {
            return ([0.0; 3], ambiguous);
        }
        let dir = if r_prev > 0.0 {
            prev.map(|x| x / r_prev)
        } else {
            [1.0, 0.0, 0.0]
        };
        return (dir.map(|x| x * radius), ambiguous);
    }
    let axis = v.map(|x| x / s);
    let principal = 2.0 * s.atan2(c);
    let along = dot3(prev, axis);
    let k = ((along - principal) / FOUR_PI).round();
    let radius = principal + FOUR_PI * k;
    (axis.map(|x| x * radius), ambiguous)
}

/// Extracts the continuous Magnus operator from a densely stored
/// trajectory, seeded by Ω(0) = 0.
pub fn extract_omega(trajectory: &BlockTrajectory) -> Result<MagnusSolution> {
    extract_omega_for(trajectory, 1)
}

pub(crate) fn extract_omega_for(trajectory: &BlockTrajectory, s_count: usize) -> Result<MagnusSolution> {
    let per_config: Vec<Result<(Vec<[f64; 3]>, Vec<bool>)>> = trajectory
        .blocks
        .par_iter()
        .enumerate()
        .map(|(config, blocks)| {
            let mut omega = Vec::with_capacity(blocks.len());
            let mut flags = Vec::with_capacity(blocks.len());
            let mut prev = [0.0; 3];
            for (k, u) in blocks.iter().enumerate() {
                let (next, flag) = nearest_logarithm(u, prev);
                let jump = norm3([next[0] - prev[0], next[1] - prev[1], next[2] - prev[2]]);
                if jump >= PI {
                    return Err(Error::ContinuityGap {
                        config,
                        index: k.saturating_sub(1),
                        next: k,
                        jump,
                    });
                }
                omega.push(next);
                flags.push(flag);
                prev = next;
            }
            Ok((omega, flags))
        })
        .collect();
    let mut omega = Vec::with_capacity(per_config.len());
    let mut ambiguous = Vec::with_capacity(per_config.len());
    for r in per_config {
        let (o, f) = r?;
        omega.push(o);
        ambiguous.push(f);
    }
    Ok(MagnusSolution {
        times: trajectory.times.clone(),
        omega,
        ambiguous,
        s_count,
    })
}

/// Elementary-rotation angles of Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Angles {
    /// Azimuth in (−π, π].
    pub alpha: f64,
    /// Polar angle in [0, π].
    pub beta: f64,
    /// |Ω| ≥ 0.
    pub omega_hat: f64,
}

impl Angles {
    /// Ω̂·(cosα sinβ, sinα sinβ, cosβ).
    pub fn to_omega(&self) -> [f64; 3] {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        [
            self.omega_hat * ca * sb,
            self.omega_hat * sa * sb,
            self.omega_hat * cb,
        ]
    }
}

pub fn angles_from_omega(omega: [f64; 3]) -> Angles {
    let [x, y, z] = omega;
    let mut alpha = y.atan2(x);
    if alpha <= -PI {
        alpha += TWO_PI;
    }
    Angles {
        alpha,
        beta: x.hypot(y).atan2(z),
        omega_hat: norm3(omega),
    }
}

/// Eigenvalues M·Ω̂⁽ⁱ⁾ of Ω at grid index `t_index`, with M running over the
/// distinct total S magnetic quantum numbers −n/2, …, n/2.
pub fn omega_eigenvalues(solution: &MagnusSolution, t_index: usize) -> Result<Vec<f64>> {
    if t_index >= solution.len() {
        return Err(Error::IndexOutOfRange {
            index: t_index,
            len: solution.len(),
        });
    }
    let hats: Vec<f64> = (0..solution.config_count())
        .map(|c| solution.omega_hat(c, t_index))
        .collect();
    Ok(eigenvalues_from_hats(&hats, solution.s_count))
}

pub(crate) fn eigenvalues_from_hats(hats: &[f64], s_count: usize) -> Vec<f64> {
    let n = s_count.max(1);
    let mut out = Vec::with_capacity(hats.len() * (n + 1));
    for &h in hats {
        for j in 0..=n {
            let m = 0.5 * n as f64 - j as f64;
            out.push(m * h);
        }
    }
    out
}

/// Outcome of the Magnus eigenvalue-gap test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCheck {
    pub ok: bool,
    /// min over pairs and n ≠ 0 of ||λ_i − λ_j| − 2π|n||.
    pub nearest_violation: f64,
    /// max over pairs of |λ_i − λ_j|.
    pub max_gap: f64,
}

pub fn magnus_gap_check(eigenvalues: &[f64], tolerance: f64) -> GapCheck {
    let mut nearest = f64::INFINITY;
    let mut max_gap: f64 = 0.0;
    for (i, a) in eigenvalues.iter().enumerate() {
        for b in &eigenvalues[i + 1..] {
            let d = (a - b).abs();
            max_gap = max_gap.max(d);
            let n = (d / TWO_PI).round().max(1.0);
            nearest = nearest.min((d - TWO_PI * n).abs());
        }
    }
    if eigenvalues.len() < 2 {
        nearest = TWO_PI;
    }
    GapCheck {
        ok: nearest > tolerance,
        nearest_violation: nearest,
        max_gap,
    }
}

/// Weak-amplitude estimate of Ω̂⁽ⁱ⁾(t): the flip angle ∫₀ᵗ ω₁.
pub fn weak_field_approx(shape: &PulseShape, t: f64, n_steps: usize) -> Result<f64> {
    flip_angle(shape, t, n_steps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionOptions {
    pub n_steps: usize,
    pub tol: f64,
    pub gap_tol: f64,
}

impl Default for CriterionOptions {
    fn default() -> Self {
        CriterionOptions {
            n_steps: crate::pulse::DEFAULT_STEPS,
            tol: DEFAULT_TOL,
            gap_tol: DEFAULT_GAP_TOL,
        }
    }
}

/// Explicit-criterion verdict plus the audit of the eigenvalue bound along
/// the exact trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    /// I(T) = ∫|ω₁|, rad.
    pub i_t: f64,
    /// θ(T) = ∫ω₁, rad.
    pub theta_t: f64,
    /// I(T) < 2π.
    pub criterion23_met: bool,
    /// |θ(T)| < 2π (weak-field form).
    pub criterion25_met: bool,
    pub max_omega_hat: f64,
    /// Largest eigenvalue gap of Ω over the trajectory.
    pub max_gap: f64,
    /// Closest approach of any gap to a nonzero multiple of 2π.
    pub magnus_gap_nearest: f64,
    pub magnus_ok: bool,
    /// min over t, configurations of I(t) − Ω̂⁽ⁱ⁾(t).
    pub bound21_margin: f64,
    pub ambiguity_times: Vec<f64>,
    /// Slices of the accepted trajectory.
    pub trajectory_steps: usize,
    pub trajectory_error: f64,
}

/// [`explicit_criterion_with`] with default tolerances.
pub fn explicit_criterion(system: &SpinSystem, shape: &PulseShape, n_steps: usize) -> Result<CriterionReport> {
    explicit_criterion_with(
        system,
        shape,
        &CriterionOptions {
            n_steps,
            ..CriterionOptions::default()
        },
    )
}

pub fn explicit_criterion_with(
    system: &SpinSystem,
    shape: &PulseShape,
    options: &CriterionOptions,
) -> Result<CriterionReport> {
    let t_end = shape.duration();
    let i_t = abs_amplitude_integral(shape, t_end, options.n_steps)?;
    let theta_t = flip_angle(shape, t_end, options.n_steps)?;
    let trajectory = propagate_interaction(system, shape, options.n_steps, options.tol)?;
    let solution = extract_omega_for(&trajectory, system.s_count())?;
    Ok(assess(i_t, theta_t, shape, &trajectory, &solution, options.gap_tol))
}

/// Report fields derived from an already extracted solution.
pub fn assess(
    i_t: f64,
    theta_t: f64,
    shape: &PulseShape,
    trajectory: &BlockTrajectory,
    solution: &MagnusSolution,
    gap_tol: f64,
) -> CriterionReport {
    let running_i = cumulative_abs_integral(shape, trajectory.n_steps);
    let mut margin = f64::INFINITY;
    let mut nearest = f64::INFINITY;
    let mut max_gap: f64 = 0.0;
    let mut hats = vec![0.0; solution.config_count()];
    for k in 0..solution.len() {
        for (c, h) in hats.iter_mut().enumerate() {
            *h = solution.omega_hat(c, k);
            margin = margin.min(running_i[k] - *h);
        }
        let check = magnus_gap_check(&eigenvalues_from_hats(&hats, solution.s_count), gap_tol);
        nearest = nearest.min(check.nearest_violation);
        max_gap = max_gap.max(check.max_gap);
    }
    CriterionReport {
        i_t,
        theta_t,
        criterion23_met: i_t < TWO_PI,
        criterion25_met: theta_t.abs() < TWO_PI,
        max_omega_hat: solution.max_omega_hat(),
        max_gap,
        magnus_gap_nearest: nearest,
        magnus_ok: nearest > gap_tol,
        bound21_margin: margin,
        ambiguity_times: solution.ambiguity_times(),
        trajectory_steps: trajectory.n_steps,
        trajectory_error: trajectory.error_estimate,
    }
}

/// Block Hamiltonians H⁽ⁱ⁾ at the `n_steps` slice midpoints, per
/// configuration, together with the slice width.
pub fn sampled_block_hamiltonians(
    system: &SpinSystem,
    shape: &PulseShape,
    n_steps: usize,
) -> (Vec<Vec<Mat2>>, f64) {
    let s = sample(shape, n_steps);
    let blocks = enumerate_configurations(system)
        .iter()
        .map(|cfg| {
            let w = effective_s_offset(system, cfg);
            (0..s.len())
                .map(|k| Mat2::from_spin_vector(rf_vector(w, s.amps[k], s.phases[k], s.times[k])))
                .collect()
        })
        .collect();
    (blocks, s.dt)
}

/// First Magnus terms Ω₁, Ω₂, Ω₃ of a piecewise-constant Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnusTerms {
    /// `terms[k]` is Ω_{k+1}.
    pub terms: Vec<Mat2>,
}

impl MagnusTerms {
    /// Ω₁ + … + Ω_order.
    pub fn partial_sum(&self, order: usize) -> Mat2 {
        self.terms
            .iter()
            .take(order)
            .fold(Mat2::zero(), |acc, t| acc + *t)
    }

    /// exp(−i(Ω₁ + … + Ω_order)).
    pub fn propagator(&self, order: usize) -> Mat2 {
        exp_spin_vector(self.partial_sum(order).spin_vector())
    }
}

/// Magnus terms up to `order` (1..=3) for slices `h` of width `dt`.
///
/// The simplex integrals are exact for piecewise-constant H, including the
/// contributions where several times share a slice:
///
///   Ω₁ = ∫H
///   Ω₂ = −(i/2) ∫∫_{t₁>t₂} [H₁, H₂]
///   Ω₃ = −(1/6) ∫∫∫_{t₁>t₂>t₃} ([H₁,[H₂,H₃]] + [H₃,[H₂,H₁]])
pub fn magnus_partial_sums(h: &[Mat2], dt: f64, order: usize) -> Result<MagnusTerms> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!("Magnus order {order} not in 1..=3")));
    }
    let i_unit = num_complex::Complex64::new(0.0, 1.0);
    let n = h.len();
    let total = h.iter().fold(Mat2::zero(), |acc, x| acc + *x);
    let mut terms = vec![total * dt];
    if order == 1 {
        return Ok(MagnusTerms { terms });
    }

    // prefix[k] = Σ_{l<k} H_l, suffix[k] = Σ_{l>k} H_l
    let mut prefix = Vec::with_capacity(n);
    let mut acc = Mat2::zero();
    for x in h {
        prefix.push(acc);
        acc = acc + *x;
    }
    let suffix: Vec<Mat2> = prefix.iter().zip(h).map(|(p, x)| total - *p - *x).collect();

    let second = h
        .iter()
        .zip(&prefix)
        .fold(Mat2::zero(), |acc, (x, p)| acc + x.commutator(p));
    terms.push(second.scale(-0.5 * i_unit * dt * dt));
    if order == 2 {
        return Ok(MagnusTerms { terms });
    }

    // Σ_{a>b>c} [H_a,[H_b,H_c]] via D_a = Σ_{b<a} [H_b, prefix_b]
    let mut nested_lower = Mat2::zero();
    let mut strict = Mat2::zero();
    for (x, p) in h.iter().zip(&prefix) {
        strict = strict + x.commutator(&nested_lower);
        nested_lower = nested_lower + x.commutator(p);
    }
    // Σ_{a>b>c} [H_c,[H_b,H_a]] via E_c = Σ_{b>c} [H_b, suffix_b]
    let mut nested_upper = Mat2::zero();
    for (x, s) in h.iter().zip(&suffix).rev() {
        strict = strict + x.commutator(&nested_upper);
        nested_upper = nested_upper + x.commutator(s);
    }
    // two times inside one slice
    let shared = h
        .iter()
        .zip(prefix.iter().zip(&suffix))
        .fold(Mat2::zero(), |acc, (x, (p, s))| {
            acc + x.commutator(&x.commutator(p)) + x.commutator(&x.commutator(s))
        });
    let dt3 = dt * dt * dt;
    terms.push((strict * dt3 + shared * (0.5 * dt3)) * (-1.0 / 6.0));
    Ok(MagnusTerms { terms })
}
