// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! `magnus` command-line front end.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::catalog;
use crate::error::{Error, Result};
use crate::expansion::{angles_along, integrate_expansion, omega_hat_quadrature};
use crate::magnus::{explicit_criterion_with, CriterionOptions, DEFAULT_GAP_TOL};
use crate::output::{emit, json_string, to_value, Cell, Format, Table};
use crate::propagation::{excitation_profile, propagate_interaction, DEFAULT_TOL};
use crate::pulse::{abs_amplitude_integral, build_pulse, flip_angle, PulseFile, PulseShape, DEFAULT_STEPS};
use crate::spin::{SpinSystem, SpinSystemFile};
use crate::verify::run_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_CRITERION_VIOLATED: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "magnus",
    version,
    about = "Magnus-solution existence criterion and exact propagators for shaped pulses on weakly coupled spins"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the pulse catalog with nominal flips and criterion integrals.
    Catalog(OutputArgs),
    /// Evaluate the explicit criterion I(T) < 2π and audit it against the
    /// exact trajectory. Exit code 3 when the criterion is violated.
    Criterion(RunArgs),
    /// Interaction-frame propagator blocks along the pulse.
    Propagate(RunArgs),
    /// Excitation profile from S_z versus S offset.
    Profile(ProfileArgs),
    /// Expansion-form coefficients (f, g) and rotation angles along the pulse.
    Decompose(RunArgs),
    /// Run the invariant suite and report pass/fail counts.
    Verify(OutputArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted. Written atomically.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Output format; inferred from the output extension, default json.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

impl OutputArgs {
    fn format(&self) -> Format {
        Format::resolve(
            self.format.map(|f| match f {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            }),
            self.output.as_deref(),
        )
    }
}

#[derive(Debug, Clone, Args)]
pub struct PulseArgs {
    /// Pulse file, or the name of a catalog entry (e.g. reburp, g4).
    #[arg(long, conflicts_with = "shape")]
    pub pulse: Option<String>,
    /// Analytic family: constant, gaussian, sech, sinc, hermite.
    #[arg(long)]
    pub shape: Option<String>,
    /// Pulse length in seconds (default 2e-3 for --shape).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Flip angle in degrees; the amplitude is calibrated to it.
    #[arg(long)]
    pub flip: Option<f64>,
    /// Gaussian truncation level.
    #[arg(long)]
    pub truncation: Option<f64>,
    /// Sech steepness β.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sinc side lobes per side.
    #[arg(long)]
    pub lobes: Option<u32>,
    /// Hermite order.
    #[arg(long)]
    pub order: Option<u32>,
    /// Peak scale in rad/s (used when no flip is given).
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Constant RF phase in degrees.
    #[arg(long)]
    pub phase: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Spin-system file (JSON, frequencies in Hz). Isolated S spin on
    /// resonance when omitted.
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[command(flatten)]
    pub pulse: PulseArgs,
    /// Initial number of slices / quadrature panels.
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    /// Step-doubling tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Tolerance of the eigenvalue-gap test, rad.
    #[arg(long, default_value_t = DEFAULT_GAP_TOL)]
    pub gap_tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Lowest S offset, Hz.
    #[arg(long, default_value_t = -2000.0, allow_negative_numbers = true)]
    pub min_hz: f64,
    /// Highest S offset, Hz.
    #[arg(long, default_value_t = 2000.0, allow_negative_numbers = true)]
    pub max_hz: f64,
    /// Number of offsets.
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

/// Inputs after files are read and defaults applied.
struct Resolved {
    system_file: SpinSystemFile,
    system: SpinSystem,
    pulse_file: PulseFile,
    pulse: PulseShape,
}

fn resolve_pulse_file(args: &PulseArgs) -> Result<PulseFile> {
    let mut desc = match (&args.pulse, &args.shape) {
        (Some(spec), _) => catalog::resolve(spec)?,
        (None, Some(family)) => {
            let mut params = BTreeMap::new();
            let mut put = |k: &str, v: Option<f64>| {
                if let Some(v) = v {
                    params.insert(k.to_string(), v);
                }
            };
            put("truncation", args.truncation);
            put("beta", args.beta);
            put("lobes", args.lobes.map(f64::from));
            put("order", args.order.map(f64::from));
            if family == "sech" && args.beta.is_none() {
                params.insert("beta".into(), 5.3);
            }
            if family == "sinc" && args.lobes.is_none() {
                params.insert("lobes".into(), 1.0);
            }
            if family == "hermite" && args.order.is_none() {
                params.insert("order".into(), 0.0);
            }
            PulseFile {
                name: family.clone(),
                family: family.clone(),
                duration_s: 2e-3,
                params,
                fourier: None,
                cascade: None,
                nominal_flip_deg: None,
                phase_deg: None,
                source: None,
            }
        }
        (None, None) => return Err(Error::InvalidArgument("one of --pulse or --shape is required".into())),
    };
    if let Some(d) = args.duration {
        desc.duration_s = d;
    }
    if let Some(a) = args.amplitude {
        desc.params.insert("amplitude".into(), a);
        desc.nominal_flip_deg = None;
    }
    if let Some(f) = args.flip {
        desc.nominal_flip_deg = Some(f);
    }
    if let Some(p) = args.phase {
        desc.phase_deg = Some(p);
    }
    if desc.nominal_flip_deg.is_none() && !desc.params.contains_key("amplitude") {
        return Err(Error::InvalidArgument("give --flip or --amplitude".into()));
    }
    Ok(desc)
}

fn resolve(args: &RunArgs) -> Result<Resolved> {
    if args.steps == 0 {
        return Err(Error::InvalidArgument("--steps must be at least 1".into()));
    }
    if !(args.tol > 0.0) || !(args.gap_tol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let system = match &args.system {
        Some(path) => SpinSystem::from_file(path)?,
        None => SpinSystem::new(1, 0.0)?,
    };
    let pulse_file = resolve_pulse_file(&args.pulse)?;
    let pulse = build_pulse(&pulse_file)?;
    Ok(Resolved {
        system_file: system.to_file_repr(),
        system,
        pulse_file,
        pulse,
    })
}

fn header(command: &str, config: Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert(
        "tool".into(),
        json!({"name": "magnus", "version": env!("CARGO_PKG_VERSION")}),
    );
    m.insert("command".into(), json!(command));
    m.insert("config".into(), config);
    m
}

fn run_config(r: &Resolved, args: &RunArgs) -> Value {
    json!({
        "system": to_value(&r.system_file),
        "pulse": to_value(&r.pulse_file),
        "n_steps": args.steps,
        "tol": args.tol,
        "gap_tol": args.gap_tol,
    })
}

fn write_table(command: &str, config: Value, table: &Table, out: &OutputArgs) -> Result<()> {
    let text = match out.format() {
        Format::Csv => table.to_csv()?,
        Format::Json => {
            let mut m = header(command, config);
            m.insert("rows".into(), table.to_json());
            json_string(&Value::Object(m))
        }
    };
    emit(out.output.as_deref(), &text)
}

fn criterion(args: &RunArgs) -> Result<i32> {
    let r = resolve(args)?;
    let opts = CriterionOptions {
        n_steps: args.steps,
        tol: args.tol,
        gap_tol: args.gap_tol,
    };
    let report = explicit_criterion_with(&r.system, &r.pulse, &opts)?;
    let mut m = header("criterion", run_config(&r, args));
    m.insert("pulse".into(), json!(r.pulse.name()));
    m.insert("system".into(), to_value(&r.system_file));
    let fields = to_value(&report);
    let rename = [
        ("i_t", "I_T"),
        ("theta_t", "theta_T"),
        ("criterion23_met", "criterion23"),
        ("criterion25_met", "criterion25"),
    ];
    for (k, v) in fields.as_object().expect("report is an object") {
        let key = rename.iter().find(|(from, _)| from == k).map_or(k.as_str(), |(_, to)| to);
        m.insert(key.to_string(), v.clone());
    }
    let text = match args.out.format() {
        Format::Json => json_string(&Value::Object(m)),
        Format::Csv => {
            let mut t = Table::new(&["field", "value"]);
            for (k, v) in &m {
                if matches!(k.as_str(), "tool" | "config" | "system") {
                    continue;
                }
                t.push(vec![k.as_str().into(), v.to_string().trim_matches('"').into()]);
            }
            t.to_csv()?
        }
    };
    emit(args.out.output.as_deref(), &text)?;
    Ok(if report.criterion23_met {
        EXIT_OK
    } else {
        EXIT_CRITERION_VIOLATED
    })
}

/// Stride that puts the stored rows back on the user's `--steps` grid.
fn stride(fine_steps: usize, requested: usize) -> usize {
    (fine_steps / requested.max(1)).max(1)
}

fn propagate(args: &RunArgs) -> Result<i32> {
    let r = resolve(args)?;
    let traj = propagate_interaction(&r.system, &r.pulse, args.steps, args.tol)?;
    let mut t = Table::new(&[
        "t", "config_index", "u00_re", "u00_im", "u01_re", "u01_im", "u10_re", "u10_im", "u11_re", "u11_im",
    ]);
    let step = stride(traj.n_steps, args.steps);
    for (k, time) in traj.times.iter().enumerate().step_by(step) {
        for (c, blocks) in traj.blocks.iter().enumerate() {
            let mut row: Vec<Cell> = vec![(*time).into(), c.into()];
            for z in blocks[k].0 {
                row.push(z.re.into());
                row.push(z.im.into());
            }
            t.push(row);
        }
    }
    let mut config = run_config(&r, args);
    config["trajectory_steps"] = json!(traj.n_steps);
    config["trajectory_error"] = to_value(&traj.error_estimate);
    write_table("propagate", config, &t, &args.out)?;
    Ok(EXIT_OK)
}

fn profile(args: &ProfileArgs) -> Result<i32> {
    let r = resolve(&args.run)?;
    if args.points == 0 || !(args.max_hz >= args.min_hz) {
        return Err(Error::InvalidArgument("need --points ≥ 1 and --max-hz ≥ --min-hz".into()));
    }
    let offsets_hz: Vec<f64> = if args.points == 1 {
        vec![args.min_hz]
    } else {
        let d = (args.max_hz - args.min_hz) / (args.points - 1) as f64;
        (0..args.points).map(|k| args.min_hz + d * k as f64).collect()
    };
    let offsets: Vec<f64> = offsets_hz.iter().map(|f| 2.0 * PI * f).collect();
    let points = excitation_profile(&r.system, &r.pulse, &offsets, args.run.steps);
    let mut t = Table::new(&["offset_hz", "mx", "my", "mz"]);
    for (hz, p) in offsets_hz.iter().zip(points) {
        t.push(vec![(*hz).into(), p.mx.into(), p.my.into(), p.mz.into()]);
    }
    let mut config = run_config(&r, &args.run);
    config["min_hz"] = json!(args.min_hz);
    config["max_hz"] = json!(args.max_hz);
    config["points"] = json!(args.points);
    write_table("profile", config, &t, &args.run.out)?;
    Ok(EXIT_OK)
}

fn decompose(args: &RunArgs) -> Result<i32> {
    let r = resolve(args)?;
    let state = integrate_expansion(&r.system, &r.pulse, args.steps, args.tol)?;
    let quad = omega_hat_quadrature(&state, &r.pulse, &r.system);
    let mut t = Table::new(&[
        "t",
        "config_index",
        "f",
        "g_x",
        "g_y",
        "g_z",
        "alpha",
        "beta",
        "omega_hat",
        "omega_hat_quadrature",
        "constraint_residual",
    ]);
    let step = stride(state.n_steps, args.steps);
    let angles: Vec<_> = state.points.iter().map(|p| angles_along(p)).collect();
    for k in (0..state.len()).step_by(step) {
        for (c, points) in state.points.iter().enumerate() {
            let p = points[k];
            let a = angles[c][k];
            t.push(vec![
                state.times[k].into(),
                c.into(),
                p.f.into(),
                p.g[0].into(),
                p.g[1].into(),
                p.g[2].into(),
                a.alpha.into(),
                a.beta.into(),
                a.omega_hat.into(),
                quad[c][k].into(),
                p.constraint_residual().into(),
            ]);
        }
    }
    let mut config = run_config(&r, args);
    config["state_steps"] = json!(state.n_steps);
    config["state_error"] = to_value(&state.error_estimate);
    write_table("decompose", config, &t, &args.out)?;
    Ok(EXIT_OK)
}

fn catalog_cmd(out: &OutputArgs) -> Result<i32> {
    let mut t = Table::new(&[
        "file",
        "name",
        "family",
        "duration_s",
        "nominal_flip_deg",
        "I_T",
        "theta_T",
        "criterion23",
    ]);
    for e in catalog::catalog()? {
        let p = build_pulse(&e.pulse)?;
        let i_t = abs_amplitude_integral(&p, p.duration(), DEFAULT_STEPS)?;
        let theta = flip_angle(&p, p.duration(), DEFAULT_STEPS)?;
        t.push(vec![
            e.file.into(),
            e.pulse.name.into(),
            e.pulse.family.into(),
            e.pulse.duration_s.into(),
            e.pulse.nominal_flip_deg.map_or(Cell::Num(f64::NAN), Cell::Num),
            i_t.into(),
            theta.into(),
            (i_t < 2.0 * PI).into(),
        ]);
    }
    let source = std::env::var(catalog::DATA_DIR_ENV).unwrap_or_else(|_| "bundled".into());
    write_table("catalog", json!({ "data": source }), &t, out)?;
    Ok(EXIT_OK)
}

fn verify_cmd(out: &OutputArgs) -> Result<i32> {
    let outcomes = run_suite();
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let failed = outcomes.len() - passed;
    let text = match out.format() {
        Format::Json => {
            let mut m = header("verify", json!({}));
            m.insert("passed".into(), json!(passed));
            m.insert("failed".into(), json!(failed));
            m.insert("checks".into(), to_value(&outcomes));
            json_string(&Value::Object(m))
        }
        Format::Csv => {
            let mut t = Table::new(&["check", "passed", "detail", "seconds"]);
            for o in &outcomes {
                t.push(vec![o.name.into(), o.passed.into(), o.detail.clone().into(), o.seconds.into()]);
            }
            t.to_csv()?
        }
    };
    for o in &outcomes {
        eprintln!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    eprintln!("{passed} passed, {failed} failed");
    emit(out.output.as_deref(), &text)?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_NUMERICAL })
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() || matches!(err, Error::Io { path, .. } if path == "<stdout>") {
        EXIT_NUMERICAL
    } else {
        EXIT_BAD_INPUT
    }
}

/// Executes a parsed command and returns the process exit code. Errors are
/// reported on stderr.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Catalog(out) => catalog_cmd(out),
        Command::Criterion(args) => criterion(args),
        Command::Propagate(args) => propagate(args),
        Command::Profile(args) => profile(args),
        Command::Decompose(args) => decompose(args),
        Command::Verify(out) => verify_cmd(out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("magnus: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("magnus").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults() {
        let Command::Criterion(a) = parse(&["criterion", "--shape", "gaussian", "--flip", "90"]).command else {
            panic!("wrong subcommand");
        };
        assert_eq!(a.steps, 4096);
        assert_eq!(a.tol, 1e-9);
        assert_eq!(a.out.format(), Format::Json);
    }

    #[test]
    fn shape_flags_become_pulse_file() {
        let Command::Criterion(a) =
            parse(&["criterion", "--shape", "gaussian", "--flip", "270", "--truncation", "0.05"]).command
        else {
            panic!("wrong subcommand");
        };
        let d = resolve_pulse_file(&a.pulse).unwrap();
        assert_eq!(d.nominal_flip_deg, Some(270.0));
        assert_eq!(d.params["truncation"], 0.05);
        assert_eq!(d.duration_s, 2e-3);
    }

    #[test]
    fn pulse_and_shape_conflict() {
        let r = Cli::try_parse_from(["magnus", "criterion", "--pulse", "g4", "--shape", "gaussian"]);
        assert!(r.is_err());
    }

    #[test]
    fn missing_flip_is_bad_input() {
        let Command::Criterion(a) = parse(&["criterion", "--shape", "gaussian"]).command else {
            panic!("wrong subcommand");
        };
        let e = resolve_pulse_file(&a.pulse).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_BAD_INPUT);
    }

    #[test]
    fn stride_restores_requested_grid() {
        assert_eq!(stride(8192, 4096), 2);
        assert_eq!(stride(4096, 4096), 1);
        assert_eq!(stride(100, 4096), 1);
    }
}
