// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Cross-module invariant suite behind `magnus verify`, plus the random
//! pulse and system generators it shares with the test suites.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog;
use crate::error::Result;
use crate::expansion::{integrate_expansion, reconstruct_propagator};
use crate::magnus::{
    angles_from_omega, assess, extract_omega, magnus_gap_check, magnus_partial_sums,
    sampled_block_hamiltonians, DEFAULT_GAP_TOL,
};
use crate::oracle::dense_converged;
use crate::propagation::{multi_s_assemble, propagate_fixed, propagate_interaction, DEFAULT_TOL};
use crate::pulse::{
    abs_amplitude_integral, build_pulse, calibrate, flip_angle,
    FourierPulseSpec, PulseShape, DEFAULT_STEPS,
};
use crate::spin::{LomsoDiagonal, SpinSystem};
use crate::su2::Mat2;

const TWO_PI: f64 = 2.0 * PI;
const HZ: f64 = TWO_PI;

/// A Fourier-series pulse with up to six random harmonics, scaled so that
/// I(T) = `target_i`.
pub fn random_fourier_pulse<R: Rng>(rng: &mut R, duration: f64, target_i: f64) -> Result<PulseShape> {
    let n = rng.gen_range(1..=6);
    let spec = FourierPulseSpec {
        name: "random".into(),
        nominal_flip: 0.0,
        a0: rng.gen_range(-0.5..0.5),
        cos_coeffs: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        sin_coeffs: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let shape = PulseShape::fourier(&spec, duration)?;
    let i_t = abs_amplitude_integral(&shape, duration, DEFAULT_STEPS)?;
    Ok(shape.scaled(target_i / i_t))
}

/// SA or SAX (one S spin, one or two I spins) with offsets within ±500 Hz
/// and couplings within ±20 Hz.
pub fn random_system<R: Rng>(rng: &mut R) -> Result<SpinSystem> {
    let mut sys = SpinSystem::new(1, HZ * rng.gen_range(-300.0..300.0))?;
    let n_i = rng.gen_range(1..=2);
    for _ in 0..n_i {
        sys = sys.with_i_spin(HZ * rng.gen_range(-500.0..500.0), rng.gen_range(-20.0..20.0))?;
    }
    if n_i == 2 {
        sys = sys.with_i_coupling(0, 1, rng.gen_range(-20.0..20.0))?;
    }
    Ok(sys)
}

/// 90° Gaussian (1% truncation, 2 ms).
pub fn gaussian_90() -> Result<PulseShape> {
    calibrate(&PulseShape::gaussian(2e-3, 0.01)?, PI / 2.0, DEFAULT_STEPS)
}

/// S_nAX with n S spins and two weakly coupled I spins.
pub fn snax(n_s: usize) -> Result<SpinSystem> {
    SpinSystem::new(n_s, HZ * 40.0)?
        .with_i_spin(HZ * 150.0, 7.0)?
        .with_i_spin(HZ * -220.0, 3.5)?
        .with_i_coupling(0, 1, 12.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("unitarity", unitarity),
    ("lomso_commutation", lomso_commutation),
    ("nonnegative_identity", nonnegative_identity),
    ("calibration", calibration_270),
    ("angles_round_trip", angles_round_trip),
    ("dense_oracle", dense_oracle),
    ("bound_and_implication", bound_and_implication),
    ("expansion_equivalence", expansion_equivalence),
    ("degeneracy", degeneracy),
    ("magnus_order", magnus_order),
];

/// Runs every check; a check that errors counts as failed.
pub fn run_suite() -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let (passed, detail) = match check() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn unitarity() -> Result<(bool, String)> {
    let traj = propagate_interaction(&snax(1)?, &gaussian_90()?, DEFAULT_STEPS, DEFAULT_TOL)?;
    let d = traj.max_unitarity_defect();
    Ok((d < 1e-12, format!("max ‖UU†−E‖ = {d:.2e}")))
}

fn lomso_commutation() -> Result<(bool, String)> {
    let sys = snax(1)?;
    let a = LomsoDiagonal::effective_offsets(&sys);
    let b = LomsoDiagonal::i_energies(&sys);
    let ab = &a * &b;
    let ba = &b * &a;
    let diff = ab
        .values()
        .iter()
        .zip(ba.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok((diff == 0.0, format!("max |[A,B]| = {diff:.1e}")))
}

fn nonnegative_identity() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for shape in [PulseShape::gaussian(2e-3, 0.01)?, PulseShape::sech(2e-3, 5.3)?] {
        let p = calibrate(&shape, PI / 2.0, DEFAULT_STEPS)?;
        let t = p.duration();
        let d = abs_amplitude_integral(&p, t, DEFAULT_STEPS)? - flip_angle(&p, t, DEFAULT_STEPS)?;
        worst = worst.max(d.abs());
    }
    Ok((worst < 1e-9, format!("max |I − θ| = {worst:.1e}")))
}

fn calibration_270() -> Result<(bool, String)> {
    let p = calibrate(&PulseShape::gaussian(2e-3, 0.01)?, 1.5 * PI, DEFAULT_STEPS)?;
    let i_t = abs_amplitude_integral(&p, p.duration(), DEFAULT_STEPS)?;
    let err = (i_t - 1.5 * PI).abs();
    Ok((err < 1e-9 && i_t < TWO_PI, format!("I(T) = {i_t:.12}")))
}

fn angles_round_trip() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let v = [0, 1, 2].map(|_| rng.gen_range(-3.0..3.0));
        let back = angles_from_omega(v).to_omega();
        worst = worst.max((0..3).map(|k| (back[k] - v[k]).abs()).fold(0.0, f64::max));
    }
    Ok((worst < 1e-12, format!("max component error {worst:.1e}")))
}

fn dense_oracle() -> Result<(bool, String)> {
    let p = gaussian_90()?;
    let mut worst: f64 = 0.0;
    for n_s in [1, 2] {
        let sys = snax(n_s)?;
        let traj = propagate_interaction(&sys, &p, 1024, DEFAULT_TOL)?;
        let blocks = multi_s_assemble(&sys, &traj.endpoint())?;
        let dense = dense_converged(&sys, &p, 1024, DEFAULT_TOL)?;
        worst = worst.max((blocks - dense).norm());
    }
    Ok((worst < 1e-8, format!("max Frobenius difference {worst:.1e}")))
}

fn bound_and_implication() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::INFINITY;
    let mut counterexamples = 0;
    let cases = 12;
    for _ in 0..cases {
        let target = rng.gen_range(0.2..3.0 * PI);
        let p = random_fourier_pulse(&mut rng, 1e-3, target)?;
        let sys = random_system(&mut rng)?;
        let traj = propagate_interaction(&sys, &p, 1024, 1e-7)?;
        let sol = extract_omega(&traj)?;
        let i_t = abs_amplitude_integral(&p, p.duration(), DEFAULT_STEPS)?;
        let theta = flip_angle(&p, p.duration(), DEFAULT_STEPS)?;
        let r = assess(i_t, theta, &p, &traj, &sol, DEFAULT_GAP_TOL);
        worst = worst.min(r.bound21_margin);
        if r.criterion23_met && !r.magnus_ok {
            counterexamples += 1;
        }
    }
    Ok((
        worst >= -1e-6 && counterexamples == 0,
        format!("{cases} pulses, min I − Ω̂ = {worst:.2e}, {counterexamples} implication failures"),
    ))
}

fn expansion_equivalence() -> Result<(bool, String)> {
    let sys = SpinSystem::new(1, HZ * 40.0)?.with_i_spin(HZ * 150.0, 7.0)?;
    let desc = catalog::resolve("reburp")?;
    let p = build_pulse(&desc)?;
    let exact = propagate_interaction(&sys, &p, 1024, 1e-10)?;
    let state = integrate_expansion(&sys, &p, 1024, 1e-10)?;
    let mut worst: f64 = 0.0;
    for (u, x) in exact.endpoint().iter().zip(state.endpoint()) {
        worst = worst.max(reconstruct_propagator(&x)?.distance(u));
    }
    let residual = state.max_constraint_residual();
    Ok((
        worst < 1e-6 && residual < 1e-8,
        format!("RE-BURP endpoint difference {worst:.1e}, residual {residual:.1e}"),
    ))
}

fn degeneracy() -> Result<(bool, String)> {
    let sys = SpinSystem::new(1, 0.0)?;
    let p = calibrate(&PulseShape::constant(1.0, 1e-3)?, TWO_PI, 64)?;
    let traj = propagate_fixed(&sys, &p, 400);
    let end = traj.endpoint()[0];
    let sol = extract_omega(&traj)?;
    let hat = sol.omega_hat(0, sol.len() - 1);
    let gap = magnus_gap_check(&[0.5 * hat, -0.5 * hat], DEFAULT_GAP_TOL);
    let flagged = !sol.ambiguity_times().is_empty();
    let ok = end.distance(&(-Mat2::identity())) < 1e-10 && flagged && (hat - TWO_PI).abs() < 1e-6 && !gap.ok;
    Ok((ok, format!("Ω̂(T) = {hat:.9}, flagged = {flagged}, gap ok = {}", gap.ok)))
}

fn magnus_order() -> Result<(bool, String)> {
    let sys = SpinSystem::new(1, HZ * 300.0)?.with_i_spin(HZ * 150.0, 7.0)?;
    let p = gaussian_90()?;
    let n = 2048;
    let (h, dt) = sampled_block_hamiltonians(&sys, &p, n);
    let exact = propagate_fixed(&sys, &p, n).endpoint();
    let mut e1: f64 = 0.0;
    let mut e3: f64 = 0.0;
    for (hc, u) in h.iter().zip(&exact) {
        let terms = magnus_partial_sums(hc, dt, 3)?;
        e1 = e1.max(terms.propagator(1).distance(u));
        e3 = e3.max(terms.propagator(3).distance(u));
    }
    Ok((e3 < e1, format!("order-1 error {e1:.2e}, order-3 error {e3:.2e}")))
}
