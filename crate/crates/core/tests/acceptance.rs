// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate. Runs every criterion at its fixed tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use magnus_core::catalog;
use magnus_core::expansion::{integrate_expansion, integrate_expansion_fixed, reconstruct_propagator, RhsVariant};
use magnus_core::magnus::{
    assess, explicit_criterion_with, extract_omega, magnus_gap_check, magnus_partial_sums,
    omega_eigenvalues, sampled_block_hamiltonians, CriterionOptions, CriterionReport, DEFAULT_GAP_TOL,
};
use magnus_core::oracle::dense_converged;
use magnus_core::propagation::{multi_s_assemble, propagate_fixed, propagate_interaction};
use magnus_core::pulse::{abs_amplitude_integral, build_pulse, calibrate, flip_angle, PulseShape, DEFAULT_STEPS};
use magnus_core::verify::{gaussian_90, random_fourier_pulse, random_system, snax};
use magnus_core::{Mat2, SpinSystem};

const TWO_PI: f64 = 2.0 * PI;
const HZ: f64 = TWO_PI;

type Outcome = Result<(bool, String), String>;

/// Criterion reports collected for the implication check.
#[derive(Default)]
struct Sweep {
    cases: Vec<(String, bool, bool)>,
}

impl Sweep {
    fn record(&mut self, label: impl Into<String>, r: &CriterionReport) {
        self.cases.push((label.into(), r.criterion23_met, r.magnus_ok));
    }
}

fn err(e: magnus_core::Error) -> String {
    e.to_string()
}

fn sa() -> SpinSystem {
    SpinSystem::new(1, HZ * 40.0)
        .and_then(|s| s.with_i_spin(HZ * 150.0, 7.0))
        .expect("valid system")
}

fn criterion_report(system: &SpinSystem, shape: &PulseShape, tol: f64) -> Result<CriterionReport, String> {
    let opts = CriterionOptions {
        n_steps: DEFAULT_STEPS,
        tol,
        gap_tol: DEFAULT_GAP_TOL,
    };
    explicit_criterion_with(system, shape, &opts).map_err(err)
}

fn verdict_table(sweep: &mut Sweep) -> Outcome {
    let expected_met = [
        ("eburp1", false),
        ("eburp2", false),
        ("iburp1", false),
        ("iburp2", false),
        ("uburp", false),
        ("reburp", false),
        ("g3", false),
        ("q3", false),
        ("g4", true),
        ("q5", true),
    ];
    let bare = SpinSystem::new(1, 0.0).map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, want) in expected_met {
        let desc = catalog::resolve(name).map_err(err)?;
        let p = build_pulse(&desc).map_err(err)?;
        let r = criterion_report(&bare, &p, 1e-9)?;
        let name = desc.name.as_str();
        sweep.record(format!("catalog {name}"), &r);
        let good = r.criterion23_met == want;
        ok &= good;
        parts.push(format!(
            "{name} I/2π={:.3} met={}{}",
            r.i_t / TWO_PI,
            r.criterion23_met,
            if good { "" } else { " (expected met)" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn nonnegative_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for shape in [
        PulseShape::gaussian(2e-3, 0.01).map_err(err)?,
        PulseShape::sech(2e-3, 5.3).map_err(err)?,
    ] {
        for flip in [PI / 2.0, PI, 1.5 * PI] {
            let p = calibrate(&shape, flip, DEFAULT_STEPS).map_err(err)?;
            let t = p.duration();
            let i_t = abs_amplitude_integral(&p, t, DEFAULT_STEPS).map_err(err)?;
            let theta = flip_angle(&p, t, DEFAULT_STEPS).map_err(err)?;
            worst = worst.max((i_t - theta).abs());
        }
    }
    Ok((worst < 1e-9, format!("max |I(T) − θ(T)| = {worst:.2e} (gaussian, sech; 90°/180°/270°)")))
}

fn oracle_equivalence() -> Outcome {
    let p = gaussian_90().map_err(err)?;
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, n_s) in [("SAX 8-dim", 1), ("S2AX 16-dim", 2)] {
        let sys = snax(n_s).map_err(err)?;
        let traj = propagate_interaction(&sys, &p, DEFAULT_STEPS, 1e-9).map_err(err)?;
        let blocks = multi_s_assemble(&sys, &traj.endpoint()).map_err(err)?;
        let dense = dense_converged(&sys, &p, DEFAULT_STEPS, 1e-9).map_err(err)?;
        let diff = (blocks - dense).norm();
        ok &= diff < 1e-8;
        parts.push(format!("{label} ‖Δ‖ = {diff:.2e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 5.0;
    parts.push(format!("runtime {secs:.2} s"));
    Ok((ok, parts.join(", ")))
}

fn bound_sweep(sweep: &mut Sweep) -> Outcome {
    let cases: Vec<_> = {
        let mut rng = ChaCha8Rng::seed_from_u64(20260101);
        (0..100)
            .map(|_| {
                let target = rng.gen_range(0.2..3.0 * PI);
                let p = random_fourier_pulse(&mut rng, 1e-3, target);
                let s = random_system(&mut rng);
                (p, s)
            })
            .collect()
    };
    let results: Vec<Result<(f64, usize, CriterionReport), String>> = cases
        .into_par_iter()
        .map(|(p, s)| {
            let (p, s) = (p.map_err(err)?, s.map_err(err)?);
            let traj = propagate_interaction(&s, &p, DEFAULT_STEPS, 1e-9).map_err(err)?;
            let sol = extract_omega(&traj).map_err(err)?;
            let i_t = abs_amplitude_integral(&p, p.duration(), DEFAULT_STEPS).map_err(err)?;
            let theta = flip_angle(&p, p.duration(), DEFAULT_STEPS).map_err(err)?;
            let r = assess(i_t, theta, &p, &traj, &sol, DEFAULT_GAP_TOL);
            let flagged = sol.ambiguity_times().len();
            Ok((r.bound21_margin, flagged, r))
        })
        .collect();
    let mut worst = f64::INFINITY;
    let mut flagged = 0;
    let mut gap_excess = f64::NEG_INFINITY;
    for (k, res) in results.into_iter().enumerate() {
        let (margin, flags, r) = res?;
        worst = worst.min(margin);
        flagged += flags;
        gap_excess = gap_excess.max(r.max_gap - r.i_t);
        sweep.record(format!("random {k}"), &r);
    }
    Ok((
        worst >= -1e-6 && flagged == 0 && gap_excess <= 1e-6,
        format!(
            "100 pulses, min over t,i of I(t) − Ω̂ = {worst:.2e}, max gap − I(T) = {gap_excess:.2e}, ambiguous samples = {flagged}"
        ),
    ))
}

fn expansion_equivalence() -> Outcome {
    let sys = sa();
    let entries = catalog::bundled();
    let results: Vec<Result<(String, f64, f64), String>> = entries
        .par_iter()
        .map(|e| {
            let p = build_pulse(&e.pulse).map_err(err)?;
            let exact = propagate_interaction(&sys, &p, DEFAULT_STEPS, 1e-9).map_err(err)?;
            let state = integrate_expansion(&sys, &p, DEFAULT_STEPS, 1e-9).map_err(err)?;
            let mut diff: f64 = 0.0;
            for (u, x) in exact.endpoint().iter().zip(state.endpoint()) {
                diff = diff.max(reconstruct_propagator(&x).map_err(err)?.distance(u));
            }
            Ok((e.pulse.name.clone(), diff, state.max_constraint_residual()))
        })
        .collect();
    let mut worst_diff: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut worst_name = String::new();
    for r in results {
        let (name, d, res) = r?;
        if d > worst_diff {
            worst_name = name;
            worst_diff = d;
        }
        worst_res = worst_res.max(res);
    }
    Ok((
        worst_diff < 1e-6 && worst_res < 1e-8,
        format!(
            "{} pulses, max endpoint difference {worst_diff:.2e} ({worst_name}), max constraint residual {worst_res:.2e}",
            entries.len()
        ),
    ))
}

fn historical_regression() -> Outcome {
    let sys = sa();
    let p = gaussian_90().map_err(err)?;
    let old = integrate_expansion_fixed(&sys, &p, DEFAULT_STEPS, RhsVariant::Historical).max_constraint_residual();
    let new = integrate_expansion_fixed(&sys, &p, DEFAULT_STEPS, RhsVariant::Corrected).max_constraint_residual();
    Ok((
        old > 1e-2,
        format!("historical residual {old:.3e}, corrected residual {new:.1e}"),
    ))
}

fn degeneracy() -> Outcome {
    let sys = SpinSystem::new(1, 0.0).map_err(err)?;
    let p = calibrate(&PulseShape::constant(1.0, 1e-3).map_err(err)?, TWO_PI, 64).map_err(err)?;
    let traj = propagate_fixed(&sys, &p, 512);
    let end = traj.endpoint()[0];
    let to_minus_e = end.distance(&(-Mat2::identity()));
    let sol = extract_omega(&traj).map_err(err)?;
    let last = sol.len() - 1;
    let hat = sol.omega_hat(0, last);
    let flags = sol.ambiguity_times();
    let flagged_near = flags.iter().any(|&t| (t - p.duration()).abs() <= traj.dt());
    let gap = magnus_gap_check(&omega_eigenvalues(&sol, last).map_err(err)?, DEFAULT_GAP_TOL);
    let n = (gap.max_gap / TWO_PI).round();
    let ok = to_minus_e < 1e-10 && flagged_near && (hat - TWO_PI).abs() < 1e-6 && !gap.ok && n == 1.0;
    Ok((
        ok,
        format!(
            "‖U(T) + E‖ = {to_minus_e:.1e}, flagged at {:?}, Ω̂(T) − 2π = {:.1e}, gap ok = {} (n = {n})",
            flags,
            hat - TWO_PI,
            gap.ok
        ),
    ))
}

fn weak_field(sweep: &mut Sweep) -> Outcome {
    let sys = snax(1).map_err(err)?;
    let base = gaussian_90().map_err(err)?;
    let mut errors = Vec::new();
    for k in 0..6 {
        let p = base.scaled(0.5f64.powi(k));
        let theta = flip_angle(&p, p.duration(), DEFAULT_STEPS).map_err(err)?;
        let traj = propagate_interaction(&sys, &p, DEFAULT_STEPS, 1e-9).map_err(err)?;
        let sol = extract_omega(&traj).map_err(err)?;
        let last = sol.len() - 1;
        let e = (0..sol.config_count())
            .map(|c| (theta - sol.omega_hat(c, last)).abs())
            .fold(0.0, f64::max);
        errors.push(e);
        let i_t = abs_amplitude_integral(&p, p.duration(), DEFAULT_STEPS).map_err(err)?;
        sweep.record(format!("weak field {k}"), &assess(i_t, theta, &p, &traj, &sol, DEFAULT_GAP_TOL));
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[1] / w[0]).collect();
    let ok = ratios.iter().all(|&r| r < 0.6);
    Ok((
        ok,
        format!(
            "errors {} ; ratios {}",
            errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" "),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" ")
        ),
    ))
}

fn implication(sweep: &Sweep) -> Outcome {
    let met = sweep.cases.iter().filter(|c| c.1).count();
    let bad: Vec<&str> = sweep
        .cases
        .iter()
        .filter(|c| c.1 && !c.2)
        .map(|c| c.0.as_str())
        .collect();
    Ok((
        bad.is_empty() && !sweep.cases.is_empty(),
        format!(
            "{} cases, {met} with I(T) < 2π, counterexamples: {}",
            sweep.cases.len(),
            if bad.is_empty() { "none".into() } else { bad.join(", ") }
        ),
    ))
}

fn magnus_orders() -> Outcome {
    let sys = sa();
    let p = gaussian_90().map_err(err)?;
    let exact = propagate_interaction(&sys, &p, DEFAULT_STEPS, 1e-9).map_err(err)?.endpoint();
    let (h, dt) = sampled_block_hamiltonians(&sys, &p, DEFAULT_STEPS);
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, (hc, u)) in h.iter().zip(&exact).enumerate() {
        let terms = magnus_partial_sums(hc, dt, 3).map_err(err)?;
        let e1 = terms.propagator(1).distance(u);
        let e3 = terms.propagator(3).distance(u);
        ok &= e3 < e1;
        parts.push(format!("config {c}: order 1 {e1:.2e}, order 3 {e3:.2e}"));
    }
    Ok((ok, parts.join("; ")))
}

fn main() -> ExitCode {
    let mut sweep = Sweep::default();
    let start = Instant::now();
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match &r {
            Ok((true, d)) => ("PASS", d.clone()),
            Ok((false, d)) => ("FAIL", d.clone()),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        println!("[{tag}] {name}: {detail} [{secs:.2} s]");
        results.push((name, r, secs));
    };
    run("AC1 criterion verdict table", &mut || verdict_table(&mut sweep));
    run("AC2 non-negative envelope identity", &mut nonnegative_identity);
    run("AC3 dense oracle equivalence", &mut oracle_equivalence);
    run("AC4 eigenvalue bound sweep", &mut || bound_sweep(&mut sweep));
    run("AC5 expansion-form equivalence", &mut expansion_equivalence);
    run("AC6 historical right-hand side regression", &mut historical_regression);
    run("AC7 degeneracy at 2π", &mut degeneracy);
    run("AC8 weak-field limit", &mut || weak_field(&mut sweep));
    run("AC9 implication criterion ⇒ Magnus solution", &mut || implication(&sweep));
    run("AC10 Magnus partial sums", &mut magnus_orders);
    let failed = results.iter().filter(|r| !matches!(r.1, Ok((true, _)))).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
