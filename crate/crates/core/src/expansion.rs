// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Expansion-form propagator `U_I = f·E − 2i(g_x S_x + g_y S_y + g_z S_z)`.
//!
//! Substituting this form into `dU_I/dt = −iH_i U_I` with
//! `H_i = ω₁ h·S` gives the linear system
//!
//!   df/dt = −(ω₁/2)·(h·g)
//!   dg/dt =  (ω₁/2)·(f·h + h × g)
//!
//! which conserves f² + |g|² and has a solution for any pulse, whether or
//! not a single-exponential propagator exists.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::magnus::{angles_from_omega, nearest_logarithm, Angles};
use crate::propagation::{rf_vector, MAX_STEPS};
use crate::pulse::PulseShape;
use crate::spin::{effective_s_offset, enumerate_configurations, SpinSystem};
use crate::su2::{cross3, dot3, norm3, Mat2};

/// Tolerance on f² + |g|² − 1 accepted by [`reconstruct_propagator`].
pub const NORM_TOL: f64 = 1e-6;

/// |g| below which the rotation axis is undefined.
pub const AXIS_EPS: f64 = 1e-10;

/// One point (f, g) of the expansion coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatePoint {
    pub f: f64,
    pub g: [f64; 3],
}

impl StatePoint {
    pub const IDENTITY: StatePoint = StatePoint {
        f: 1.0,
        g: [0.0; 3],
    };

    /// f² + |g|² − 1.
    pub fn constraint_residual(&self) -> f64 {
        self.f * self.f + dot3(self.g, self.g) - 1.0
    }

    fn axpy(&self, a: f64, d: &StatePoint) -> StatePoint {
        StatePoint {
            f: self.f + a * d.f,
            g: [
                self.g[0] + a * d.g[0],
                self.g[1] + a * d.g[1],
                self.g[2] + a * d.g[2],
            ],
        }
    }

    fn max_abs_diff(&self, other: &StatePoint) -> f64 {
        let mut m = (self.f - other.f).abs();
        for k in 0..3 {
            m = m.max((self.g[k] - other.g[k]).abs());
        }
        m
    }
}

/// Expansion coefficients on the grid t_k = k·Δt for every configuration.
#[derive(Debug, Clone)]
pub struct ExpansionState {
    pub times: Vec<f64>,
    /// `points[config][k]`.
    pub points: Vec<Vec<StatePoint>>,
    pub n_steps: usize,
    pub refinements: u32,
    pub error_estimate: f64,
}

impl ExpansionState {
    pub fn config_count(&self) -> usize {
        self.points.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn endpoint(&self) -> Vec<StatePoint> {
        self.points.iter().map(|p| *p.last().expect("non-empty state")).collect()
    }

    /// Largest |f² + |g|² − 1| over all stored points.
    pub fn max_constraint_residual(&self) -> f64 {
        self.points
            .iter()
            .flatten()
            .map(|p| p.constraint_residual().abs())
            .fold(0.0, f64::max)
    }
}

/// Time derivative of (f, g) for unit direction `h` and amplitude `w1`.
pub fn expansion_rhs(point: &StatePoint, h: [f64; 3], w1: f64) -> StatePoint {
    let half = 0.5 * w1;
    let c = cross3(h, point.g);
    StatePoint {
        f: -half * dot3(h, point.g),
        g: [
            half * (point.f * h[0] + c[0]),
            half * (point.f * h[1] + c[1]),
            half * (point.f * h[2] + c[2]),
        ],
    }
}

/// The form printed before correction: the f equation lacks the factor 1/2
/// and the x component of the cross term has the wrong sign. Kept only to
/// show that it breaks f² + |g|² = 1.
#[cfg(feature = "historical-rhs")]
pub fn historical_expansion_rhs(point: &StatePoint, h: [f64; 3], w1: f64) -> StatePoint {
    let half = 0.5 * w1;
    let g = point.g;
    StatePoint {
        f: -w1 * dot3(h, g),
        g: [
            half * (point.f * h[0] + h[2] * g[1] - h[1] * g[2]),
            half * (point.f * h[1] + h[2] * g[0] - h[0] * g[2]),
            half * (point.f * h[2] + h[0] * g[1] - h[1] * g[0]),
        ],
    }
}

/// Which right-hand side to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhsVariant {
    #[default]
    Corrected,
    #[cfg(feature = "historical-rhs")]
    Historical,
}

impl RhsVariant {
    fn eval(self, point: &StatePoint, h: [f64; 3], w1: f64) -> StatePoint {
        match self {
            RhsVariant::Corrected => expansion_rhs(point, h, w1),
            #[cfg(feature = "historical-rhs")]
            RhsVariant::Historical => historical_expansion_rhs(point, h, w1),
        }
    }
}

/// Unit direction h(t) and ω₁(t) for a configuration with offset `offset`.
fn drive(shape: &PulseShape, offset: f64, t: f64) -> ([f64; 3], f64) {
    let w1 = shape.amplitude(t);
    let angle = -offset * t + shape.phase(t);
    ([angle.cos(), angle.sin(), 0.0], w1)
}

fn rk4_step(
    shape: &PulseShape,
    offset: f64,
    variant: RhsVariant,
    y: &StatePoint,
    t: f64,
    dt: f64,
) -> StatePoint {
    let rhs = |p: &StatePoint, t: f64| {
        let (h, w1) = drive(shape, offset, t);
        variant.eval(p, h, w1)
    };
    let k1 = rhs(y, t);
    let k2 = rhs(&y.axpy(0.5 * dt, &k1), t + 0.5 * dt);
    let k3 = rhs(&y.axpy(0.5 * dt, &k2), t + 0.5 * dt);
    let k4 = rhs(&y.axpy(dt, &k3), t + dt);
    StatePoint {
        f: y.f + dt / 6.0 * (k1.f + 2.0 * k2.f + 2.0 * k3.f + k4.f),
        g: [0, 1, 2].map(|i| y.g[i] + dt / 6.0 * (k1.g[i] + 2.0 * k2.g[i] + 2.0 * k3.g[i] + k4.g[i])),
    }
}

fn config_offsets(system: &SpinSystem) -> Vec<f64> {
    enumerate_configurations(system)
        .iter()
        .map(|c| effective_s_offset(system, c))
        .collect()
}

fn integrate_block(
    shape: &PulseShape,
    offset: f64,
    n: usize,
    variant: RhsVariant,
    keep: bool,
) -> Vec<StatePoint> {
    let dt = shape.duration() / n as f64;
    let mut y = StatePoint::IDENTITY;
    let mut out = Vec::with_capacity(if keep { n + 1 } else { 1 });
    if keep {
        out.push(y);
    }
    for k in 0..n {
        y = rk4_step(shape, offset, variant, &y, k as f64 * dt, dt);
        if keep {
            out.push(y);
        }
    }
    if !keep {
        out.push(y);
    }
    out
}

/// Fixed-step classical RK4 integration with `n_steps` steps.
pub fn integrate_expansion_fixed(
    system: &SpinSystem,
    shape: &PulseShape,
    n_steps: usize,
    variant: RhsVariant,
) -> ExpansionState {
    let n = n_steps.max(1);
    let dt = shape.duration() / n as f64;
    let points = config_offsets(system)
        .par_iter()
        .map(|&w| integrate_block(shape, w, n, variant, true))
        .collect();
    ExpansionState {
        times: (0..=n).map(|k| k as f64 * dt).collect(),
        points,
        n_steps: n,
        refinements: 0,
        error_estimate: f64::NAN,
    }
}

/// RK4 integration refined by step doubling until the endpoint changes by
/// less than `tol` (max abs over f, g and configurations).
pub fn integrate_expansion(
    system: &SpinSystem,
    shape: &PulseShape,
    n_steps: usize,
    tol: f64,
) -> Result<ExpansionState> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let offsets = config_offsets(system);
    let endpoints = |n: usize| -> Vec<StatePoint> {
        offsets
            .par_iter()
            .map(|&w| integrate_block(shape, w, n, RhsVariant::Corrected, false)[0])
            .collect()
    };
    let mut n = n_steps;
    let mut coarse = endpoints(n);
    let mut refinements = 0;
    let mut estimate = f64::INFINITY;
    loop {
        let fine_n = 2 * n;
        if fine_n > MAX_STEPS {
            return Err(Error::NotConverged {
                tol,
                max_steps: MAX_STEPS,
                steps: n,
                best_estimate: estimate,
            });
        }
        let fine = endpoints(fine_n);
        estimate = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max);
        refinements += 1;
        if estimate < tol {
            let mut state = integrate_expansion_fixed(system, shape, fine_n, RhsVariant::Corrected);
            state.refinements = refinements;
            state.error_estimate = estimate;
            return Ok(state);
        }
        coarse = fine;
        n = fine_n;
    }
}

/// `f·E − 2i g·S`.
pub fn reconstruct_propagator(point: &StatePoint) -> Result<Mat2> {
    let residual = point.constraint_residual();
    if residual.abs() > NORM_TOL {
        return Err(Error::NormViolation(residual));
    }
    Ok(Mat2::from_su2_quaternion(point.f, point.g))
}

/// Principal angles of a single state point: Ω̃ = 2·atan2(|g|, f),
/// α̃ = β̃ = 0 where the axis is undefined.
pub fn angles_from_state(point: &StatePoint) -> Angles {
    let s = norm3(point.g);
    let omega = 2.0 * s.atan2(point.f);
    if s < AXIS_EPS {
        return Angles {
            alpha: 0.0,
            beta: 0.0,
            omega_hat: omega,
        };
    }
    let axis = angles_from_omega(point.g);
    Angles {
        omega_hat: omega,
        ..axis
    }
}

/// Continuity-tracked Ω vectors of a state sequence, seeded by Ω(0) = 0.
fn tracked_omega(points: &[StatePoint]) -> Vec<[f64; 3]> {
    let mut prev = [0.0; 3];
    points
        .iter()
        .map(|p| {
            let u = Mat2::from_su2_quaternion(p.f, p.g);
            prev = nearest_logarithm(&u, prev).0;
            prev
        })
        .collect()
}

/// (α̃, β̃, Ω̃) along one configuration's sequence. Ω̃ follows the continuous
/// branch through Ω̃ = 2π; where |g| ≈ 0 the axis angles are reported as 0.
pub fn angles_along(points: &[StatePoint]) -> Vec<Angles> {
    tracked_omega(points)
        .into_iter()
        .zip(points)
        .map(|(omega, p)| {
            let a = angles_from_omega(omega);
            if norm3(p.g) < AXIS_EPS {
                Angles {
                    alpha: 0.0,
                    beta: 0.0,
                    omega_hat: a.omega_hat,
                }
            } else {
                a
            }
        })
        .collect()
}

/// Ω̂(t) = ∫₀ᵗ ω₁ (h·n) dt′ per configuration, cumulative midpoint rule on
/// the state's grid, with n the unit axis of Ω. Where the axis is undefined
/// the instantaneous h is used.
pub fn omega_hat_quadrature(
    state: &ExpansionState,
    shape: &PulseShape,
    system: &SpinSystem,
) -> Vec<Vec<f64>> {
    let offsets = config_offsets(system);
    let dt = shape.duration() / state.n_steps as f64;
    state
        .points
        .par_iter()
        .zip(offsets.par_iter())
        .map(|(points, &offset)| {
            let axes: Vec<Option<[f64; 3]>> = tracked_omega(points)
                .into_iter()
                .zip(points)
                .map(|(o, p)| {
                    let r = norm3(o);
                    (norm3(p.g) >= AXIS_EPS && r > 0.0).then(|| o.map(|x| x / r))
                })
                .collect();
            let mut out = Vec::with_capacity(points.len());
            let mut acc = 0.0;
            out.push(acc);
            for k in 0..points.len() - 1 {
                let t = (k as f64 + 0.5) * dt;
                let w1 = shape.amplitude(t);
                let v = rf_vector(offset, 1.0, shape.phase(t), t);
                let n = match (axes[k], axes[k + 1]) {
                    (Some(a), Some(b)) => {
                        let m = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                        let r = norm3(m);
                        if r > AXIS_EPS {
                            m.map(|x| x / r)
                        } else {
                            v
                        }
                    }
                    (None, Some(b)) if k > 0 => b,
                    (Some(a), None) => a,
                    _ => v,
                };
                acc += dt * w1 * dot3(v, n);
                out.push(acc);
            }
            out
        })
        .collect()
}
