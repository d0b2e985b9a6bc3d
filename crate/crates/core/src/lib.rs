// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact propagators, single-exponential (Magnus) solutions and an explicit
//! existence criterion for a weakly coupled spin system `S_nAMX…` driven by a
//! shaped RF pulse on the S spins.
//!
//! The interaction-frame propagator is block diagonal over I-spin
//! configurations, so every computation here runs on 2×2 SU(2) blocks.
//! [`oracle`] rebuilds the same propagator in the full Hilbert space and
//! serves as an independent check.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod expansion;
pub mod magnus;
pub mod oracle;
pub mod output;
pub mod propagation;
pub mod pulse;
pub mod spin;
pub mod su2;
pub mod verify;

pub use error::{Error, Result};
pub use expansion::{
    angles_along, angles_from_state, integrate_expansion, integrate_expansion_fixed,
    omega_hat_quadrature, reconstruct_propagator, ExpansionState, RhsVariant, StatePoint,
};
pub use magnus::{
    angles_from_omega, assess, explicit_criterion, explicit_criterion_with, extract_omega,
    magnus_gap_check, magnus_partial_sums, nearest_logarithm, omega_eigenvalues,
    weak_field_approx, Angles, CriterionOptions, CriterionReport, GapCheck, MagnusSolution,
};
pub use propagation::{
    excitation_profile, lab_frame_propagator, propagate_fixed, propagate_interaction,
    BlockTrajectory, ProfilePoint,
};
pub use pulse::{
    abs_amplitude_integral, build_pulse, calibrate, flip_angle, Envelope, FourierPulseSpec,
    PhaseProfile, PulseFile, PulseShape,
};
pub use spin::{enumerate_configurations, IConfiguration, SpinSystem};
pub use su2::{BlockUnitary, Mat2};
