// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Shaped RF pulse envelopes, flip-angle calibration and the two amplitude
//! integrals behind the convergence criterion:
//!
//!   θ(t) = ∫₀ᵗ ω₁(t′) dt′        (flip angle)
//!   I(t) = ∫₀ᵗ |ω₁(t′)| dt′      (criterion integral)
//!
//! Both integrals use the composite midpoint rule on a uniform grid, the same
//! midpoints at which the propagators sample the Hamiltonian, so that the
//! discrete θ(T) seen by the criterion and by the propagators agree.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of quadrature panels / propagation slices.
pub const DEFAULT_STEPS: usize = 4096;

/// Normalized envelope families. Each is evaluated at the reduced time
/// `x = t/T ∈ [0, 1]` and multiplied by the pulse scale.
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    /// Hard pulse.
    Constant,
    /// `exp(−a·u²)` with `u = 2x − 1` and `a = −ln(truncation)`.
    Gaussian { truncation: f64 },
    /// `sech(β·u)`.
    Sech { beta: f64 },
    /// `sin(πv)/(πv)` with `v = (lobes + 1)·u`: `lobes` side lobes per side.
    Sinc { lobes: u32 },
    /// Hermite function `H_n(v)·exp(−v²/2)` with `v = u·(√(2n+1) + 3)`.
    Hermite { order: u32 },
    /// `a0 + Σₙ Aₙ cos(2πnx) + Bₙ sin(2πnx)`.
    Fourier(FourierCoefficients),
    /// `Σᵢ Aᵢ exp(−4 ln2 (x − cᵢ)² / wᵢ²)`, centers and FWHM in units of T.
    GaussianCascade(CascadeCoefficients),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierCoefficients {
    pub a0: f64,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeCoefficients {
    pub amplitudes: Vec<f64>,
    pub centers: Vec<f64>,
    pub fwhm: Vec<f64>,
}

/// A Fourier-series pulse as published: coefficients plus nominal flip.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPulseSpec {
    pub name: String,
    /// Radians.
    pub nominal_flip: f64,
    pub a0: f64,
    pub cos_coeffs: Vec<f64>,
    pub sin_coeffs: Vec<f64>,
}

impl Envelope {
    pub fn family(&self) -> &'static str {
        match self {
            Envelope::Constant => "constant",
            Envelope::Gaussian { .. } => "gaussian",
            Envelope::Sech { .. } => "sech",
            Envelope::Sinc { .. } => "sinc",
            Envelope::Hermite { .. } => "hermite",
            Envelope::Fourier(_) => "fourier",
            Envelope::GaussianCascade(_) => "gaussian_cascade",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPulse(msg));
        match self {
            Envelope::Constant => Ok(()),
            Envelope::Gaussian { truncation } => {
                if *truncation > 0.0 && *truncation < 1.0 {
                    Ok(())
                } else {
                    bad(format!("gaussian truncation {truncation} not in (0, 1)"))
                }
            }
            Envelope::Sech { beta } => {
                if beta.is_finite() && *beta > 0.0 {
                    Ok(())
                } else {
                    bad(format!("sech beta {beta} must be positive"))
                }
            }
            Envelope::Sinc { lobes } => {
                if *lobes >= 1 {
                    Ok(())
                } else {
                    bad("sinc needs at least one side lobe".into())
                }
            }
            Envelope::Hermite { order } => {
                if *order <= 20 {
                    Ok(())
                } else {
                    bad(format!("hermite order {order} above 20"))
                }
            }
            Envelope::Fourier(c) => {
                let all = std::iter::once(&c.a0).chain(&c.a).chain(&c.b);
                if all.into_iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    bad("non-finite Fourier coefficient".into())
                }
            }
            Envelope::GaussianCascade(c) => {
                let n = c.amplitudes.len();
                if n == 0 || c.centers.len() != n || c.fwhm.len() != n {
                    return bad("cascade needs equal-length, non-empty coefficient lists".into());
                }
                let finite = c
                    .amplitudes
                    .iter()
                    .chain(&c.centers)
                    .chain(&c.fwhm)
                    .all(|v| v.is_finite());
                if !finite || c.fwhm.iter().any(|w| *w <= 0.0) {
                    return bad("cascade coefficients must be finite with positive widths".into());
                }
                Ok(())
            }
        }
    }

    /// Envelope value at reduced time `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let u = 2.0 * x - 1.0;
        match self {
            Envelope::Constant => 1.0,
            Envelope::Gaussian { truncation } => (truncation.ln() * u * u).exp(),
            Envelope::Sech { beta } => 1.0 / (beta * u).cosh(),
            Envelope::Sinc { lobes } => {
                let v = PI * (*lobes as f64 + 1.0) * u;
                if v.abs() < 1e-8 {
                    1.0 - v * v / 6.0
                } else {
                    v.sin() / v
                }
            }
            Envelope::Hermite { order } => {
                let n = *order;
                let v = u * ((2.0 * n as f64 + 1.0).sqrt() + 3.0);
                hermite_polynomial(n, v) * (-0.5 * v * v).exp()
            }
            Envelope::Fourier(c) => {
                let w = 2.0 * PI * x;
                let cos_part: f64 = c
                    .a
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * (w * (k + 1) as f64).cos())
                    .sum();
                let sin_part: f64 = c
                    .b
                    .iter()
                    .enumerate()
                    .map(|(k, b)| b * (w * (k + 1) as f64).sin())
                    .sum();
                c.a0 + cos_part + sin_part
            }
            Envelope::GaussianCascade(c) => c
                .amplitudes
                .iter()
                .zip(&c.centers)
                .zip(&c.fwhm)
                .map(|((a, c0), w)| {
                    let d = (x - c0) / w;
                    a * (-4.0 * LN_2 * d * d).exp()
                })
                .sum(),
        }
    }
}

/// Physicists' Hermite polynomial by recurrence.
fn hermite_polynomial(n: u32, v: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * v);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = 2.0 * v * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// RF phase φ(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseProfile {
    Constant(f64),
    /// `φ(t) = initial + rate·t`, a frequency-shifted pulse.
    Linear { initial: f64, rate: f64 },
}

impl PhaseProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            PhaseProfile::Constant(phi) => phi,
            PhaseProfile::Linear { initial, rate } => initial + rate * t,
        }
    }
}

/// A shaped pulse `ω₁(t) = scale·envelope(t/T)` with phase `φ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseShape {
    name: String,
    envelope: Envelope,
    duration: f64,
    scale: f64,
    phase: PhaseProfile,
    nominal_flip: Option<f64>,
}

impl PulseShape {
    pub fn new(name: impl Into<String>, envelope: Envelope, duration: f64, scale: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidPulse(format!("duration {duration} must be positive")));
        }
        if !scale.is_finite() {
            return Err(Error::InvalidPulse("amplitude scale must be finite".into()));
        }
        envelope.validate()?;
        Ok(PulseShape {
            name: name.into(),
            envelope,
            duration,
            scale,
            phase: PhaseProfile::Constant(0.0),
            nominal_flip: None,
        })
    }

    /// Hard pulse of amplitude `amplitude` rad/s.
    pub fn constant(amplitude: f64, duration: f64) -> Result<Self> {
        Self::new("constant", Envelope::Constant, duration, amplitude)
    }

    /// Unit-peak Gaussian truncated at `truncation` of its peak.
    pub fn gaussian(duration: f64, truncation: f64) -> Result<Self> {
        Self::new("gaussian", Envelope::Gaussian { truncation }, duration, 1.0)
    }

    pub fn sech(duration: f64, beta: f64) -> Result<Self> {
        Self::new("sech", Envelope::Sech { beta }, duration, 1.0)
    }

    pub fn sinc(duration: f64, lobes: u32) -> Result<Self> {
        Self::new("sinc", Envelope::Sinc { lobes }, duration, 1.0)
    }

    pub fn hermite(duration: f64, order: u32) -> Result<Self> {
        Self::new("hermite", Envelope::Hermite { order }, duration, 1.0)
    }

    /// Fourier pulse with unit scale; call [`calibrate`] for its nominal flip.
    pub fn fourier(spec: &FourierPulseSpec, duration: f64) -> Result<Self> {
        let envelope = Envelope::Fourier(FourierCoefficients {
            a0: spec.a0,
            a: spec.cos_coeffs.clone(),
            b: spec.sin_coeffs.clone(),
        });
        let mut shape = Self::new(spec.name.clone(), envelope, duration, 1.0)?;
        shape.nominal_flip = Some(spec.nominal_flip);
        Ok(shape)
    }

    pub fn with_phase(mut self, phase: PhaseProfile) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_nominal_flip(mut self, flip: f64) -> Self {
        self.nominal_flip = Some(flip);
        self
    }

    /// Same envelope with amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        PulseShape {
            scale: self.scale * factor,
            ..self.clone()
        }
    }

    /// Same shape stretched to a new duration, amplitude unchanged.
    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        Self::new(self.name.clone(), self.envelope.clone(), duration, self.scale).map(|s| PulseShape {
            phase: self.phase,
            nominal_flip: self.nominal_flip,
            ..s
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn phase_profile(&self) -> PhaseProfile {
        self.phase
    }

    pub fn nominal_flip(&self) -> Option<f64> {
        self.nominal_flip
    }

    /// ω₁(t) in rad/s.
    pub fn amplitude(&self, t: f64) -> f64 {
        self.scale * self.envelope.eval(t / self.duration)
    }

    /// φ(t) in rad.
    pub fn phase(&self, t: f64) -> f64 {
        self.phase.eval(t)
    }
}

/// Midpoint samples of a pulse on `n` equal panels.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPulse {
    pub times: Vec<f64>,
    pub amps: Vec<f64>,
    pub phases: Vec<f64>,
    pub dt: f64,
}

impl SampledPulse {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn sample(shape: &PulseShape, n_steps: usize) -> SampledPulse {
    let n = n_steps.max(1);
    let dt = shape.duration / n as f64;
    let times: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * dt).collect();
    let amps = times.iter().map(|&t| shape.amplitude(t)).collect();
    let phases = times.iter().map(|&t| shape.phase(t)).collect();
    SampledPulse {
        times,
        amps,
        phases,
        dt,
    }
}

fn check_time(shape: &PulseShape, t: f64) -> Result<()> {
    // Tolerate rounding when t is computed as k·Δt.
    let slack = 1e-12 * shape.duration;
    if t.is_finite() && t >= -slack && t <= shape.duration + slack {
        Ok(())
    } else {
        Err(Error::TimeOutOfRange {
            t,
            duration: shape.duration,
        })
    }
}

fn midpoint_integral(f: impl Fn(f64) -> f64, t0: f64, t1: f64, n_steps: usize) -> f64 {
    let n = n_steps.max(1);
    let h = (t1 - t0) / n as f64;
    (0..n).map(|k| f(t0 + (k as f64 + 0.5) * h)).sum::<f64>() * h
}

/// ∫ₜ₀ᵗ¹ ω₁ dt with `n_steps` midpoint panels.
pub fn integrate_amplitude(shape: &PulseShape, t0: f64, t1: f64, n_steps: usize) -> Result<f64> {
    check_time(shape, t0)?;
    check_time(shape, t1)?;
    Ok(midpoint_integral(|t| shape.amplitude(t), t0, t1, n_steps))
}

/// Flip angle θ(t) = ∫₀ᵗ ω₁ dt′.
pub fn flip_angle(shape: &PulseShape, t: f64, n_steps: usize) -> Result<f64> {
    integrate_amplitude(shape, 0.0, t, n_steps)
}

/// Criterion integral I(t) = ∫₀ᵗ |ω₁| dt′.
pub fn abs_amplitude_integral(shape: &PulseShape, t: f64, n_steps: usize) -> Result<f64> {
    check_time(shape, t)?;
    Ok(midpoint_integral(|t| shape.amplitude(t).abs(), 0.0, t, n_steps))
}

/// Running I(t_k) at the grid points t_k = k·T/n, k = 0..=n.
pub fn cumulative_abs_integral(shape: &PulseShape, n_steps: usize) -> Vec<f64> {
    let s = sample(shape, n_steps);
    let mut out = Vec::with_capacity(s.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for a in &s.amps {
        acc += a.abs() * s.dt;
        out.push(acc);
    }
    out
}

/// Rescales the amplitude so that θ(T) = `target_flip` under the
/// `n_steps`-panel quadrature.
pub fn calibrate(shape: &PulseShape, target_flip: f64, n_steps: usize) -> Result<PulseShape> {
    let theta = flip_angle(shape, shape.duration, n_steps)?;
    let total = abs_amplitude_integral(shape, shape.duration, n_steps)?;
    if total == 0.0 || theta.abs() <= 1e-12 * total {
        return Err(Error::ZeroArea);
    }
    let mut out = shape.scaled(target_flip / theta);
    out.nominal_flip = Some(target_flip);
    Ok(out)
}

/// On-disk pulse description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseFile {
    pub name: String,
    pub family: String,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierCoefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade: Option<CascadeCoefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_flip_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_deg: Option<f64>,
    /// Provenance of tabulated coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl PulseFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_string(),
            source,
        })
    }

    fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::InvalidPulse(format!("{} pulse needs params.{key}", self.family)))
    }
}

/// Builds a pulse from its descriptor. If a nominal flip is present the
/// amplitude is calibrated to it with [`DEFAULT_STEPS`] panels; otherwise
/// `params.amplitude` (rad/s, default 1) sets the scale.
pub fn build_pulse(desc: &PulseFile) -> Result<PulseShape> {
    let envelope = match desc.family.as_str() {
        "constant" | "hard" => Envelope::Constant,
        "gaussian" => Envelope::Gaussian {
            truncation: desc.params.get("truncation").copied().unwrap_or(0.01),
        },
        "sech" => Envelope::Sech {
            beta: desc.param("beta")?,
        },
        "sinc" => Envelope::Sinc {
            lobes: as_count(desc.param("lobes")?, "lobes")?,
        },
        "hermite" => Envelope::Hermite {
            order: as_count(desc.param("order")?, "order")?,
        },
        "fourier" => Envelope::Fourier(desc.fourier.clone().ok_or_else(|| {
            Error::InvalidPulse("fourier pulse needs a `fourier` coefficient block".into())
        })?),
        "gaussian_cascade" => Envelope::GaussianCascade(desc.cascade.clone().ok_or_else(|| {
            Error::InvalidPulse("gaussian_cascade pulse needs a `cascade` block".into())
        })?),
        other => return Err(Error::UnknownFamily(other.to_string())),
    };
    let scale = desc.params.get("amplitude").copied().unwrap_or(1.0);
    let mut shape = PulseShape::new(desc.name.clone(), envelope, desc.duration_s, scale)?;
    if let Some(phase) = desc.phase_deg {
        shape = shape.with_phase(PhaseProfile::Constant(phase.to_radians()));
    }
    match desc.nominal_flip_deg {
        Some(flip) => calibrate(&shape, flip.to_radians(), DEFAULT_STEPS),
        None => Ok(shape),
    }
}

fn as_count(v: f64, what: &str) -> Result<u32> {
    if v.fract() == 0.0 && (0.0..=1e6).contains(&v) {
        Ok(v as u32)
    } else {
        Err(Error::InvalidPulse(format!("{what} must be a non-negative integer, got {v}")))
    }
}
