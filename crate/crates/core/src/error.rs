// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("unknown pulse family `{0}`")]
    UnknownFamily(String),

    #[error("cannot calibrate pulse with zero net area")]
    ZeroArea,

    #[error("time {t} s outside pulse duration [0, {duration}] s")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("missing propagator block for configuration {0}")]
    MissingBlock(usize),

    #[error(
        "step refinement did not reach tolerance {tol:e} within {max_steps} steps \
         (best estimate {best_estimate:e} at {steps} steps)"
    )]
    NotConverged {
        tol: f64,
        max_steps: usize,
        steps: usize,
        best_estimate: f64,
    },

    #[error(
        "Ω jumps by {jump:.3} rad between samples {index} and {next} of configuration {config}; \
         increase n_steps"
    )]
    ContinuityGap {
        config: usize,
        index: usize,
        next: usize,
        jump: f64,
    },

    #[error("state violates f² + |g|² = 1 by {0:e}")]
    NormViolation(f64),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::ContinuityGap { .. } | Error::NormViolation(_)
        )
    }
}
