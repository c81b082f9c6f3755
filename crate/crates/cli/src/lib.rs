//! Command-line front end: closed-form matrices, parameter sweeps, the
//! adiabatic spectrum and a seeded verification suite.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 failed
//! verification.

pub mod config;
pub mod error;
pub mod format;
pub mod sweep;
pub mod verify;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lzc_core::model::{shorthands, transition_matrix};
use lzc_core::propagator::{numeric_transition_matrix, IntegrationSettings};
use lzc_core::spectrum::adiabatic_energies;
use lzc_core::ModelParams;
use serde::Serialize;

use crate::config::ConfigFile;
pub use crate::error::CliError;
use crate::format::num;

/// Largest oracle deviation accepted by `--verify`.
pub const ORACLE_THRESHOLD: f64 = 2e-3;

/// A closed-form matrix whose own error bound exceeds this is a numerical
/// failure rather than a result.
pub const MAX_MATRIX_TOL: f64 = 1e-3;

/// Closed-form matrix, rejected when its error bound is too large.
pub fn reliable_matrix(params: &ModelParams) -> Result<lzc_core::TransitionMatrix, CliError> {
    let m = transition_matrix(params)?;
    if m.tol > MAX_MATRIX_TOL {
        return Err(CliError::Numerical(format!(
            "closed form lost precision: error bound {:e} exceeds {MAX_MATRIX_TOL:e}",
            m.tol
        )));
    }
    Ok(m)
}

#[derive(Debug, Parser)]
#[command(
    name = "lzc",
    version,
    about = "Three-state Landau-Zener-Coulomb transition probabilities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form 3x3 transition matrix for one parameter set.
    Matrix(MatrixArgs),
    /// Closed-form matrices over a grid in k2 or in the coupling scale g (CSV).
    Sweep(sweep::SweepArgs),
    /// Adiabatic energies over a time grid (CSV).
    Spectrum(SpectrumArgs),
    /// Seeded random property suite (JSON report).
    Verify(verify::VerifyArgs),
}

/// Model parameters from flags, falling back to `--config`.
#[derive(Debug, Clone, Args, Default)]
pub struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub k2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b2: Option<f64>,
    /// File of `key = value` lines; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl ParamArgs {
    pub fn config_file(&self) -> Result<ConfigFile, CliError> {
        match &self.config {
            Some(p) => ConfigFile::load(p),
            None => Ok(ConfigFile::default()),
        }
    }

    /// Resolves one parameter: flag, then config, then `default`.
    pub fn value(
        &self,
        key: &str,
        cfg: &ConfigFile,
        default: Option<f64>,
    ) -> Result<f64, CliError> {
        let flag = match key {
            "k2" => self.k2,
            "g1" => self.g1,
            "g2" => self.g2,
            "b1" => self.b1,
            "b2" => self.b2,
            _ => None,
        };
        match flag {
            Some(v) => Ok(v),
            None => cfg
                .get_f64(key)?
                .or(default)
                .ok_or_else(|| CliError::Usage(format!("missing parameter --{key}"))),
        }
    }

    pub fn resolve(&self) -> Result<ModelParams, CliError> {
        let cfg = self.config_file()?;
        let v = |k| self.value(k, &cfg, None);
        Ok(ModelParams::new(
            v("k2")?,
            v("g1")?,
            v("g2")?,
            v("b1")?,
            v("b2")?,
        )?)
    }
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Also run the ODE oracle and report the largest entry deviation.
    #[arg(long)]
    pub verify: bool,
    /// Target accuracy of the oracle.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 0.1)]
    pub tau_from: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tau_to: f64,
    #[arg(long, default_value_t = 200)]
    pub tau_steps: usize,
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct MatrixReport {
    params: lzc_core::model::RawParams,
    case: u8,
    shorthands: ShorthandReport,
    p: [[f64; 3]; 3],
    tol: f64,
    extended_domain: bool,
    stochastic_residual: f64,
    range_violation: f64,
    oracle_deviation: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ShorthandReport {
    kappa: f64,
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
    c1: f64,
    c2: f64,
}

/// Shorthands in the caller's level labels.
fn caller_shorthands(p: &ModelParams) -> ShorthandReport {
    let s = shorthands(p);
    let (q1, q2, p1, p2, c1, c2) = if p.swapped() {
        (s.q2, s.q1, s.p2, s.p1, s.c2, s.c1)
    } else {
        (s.q1, s.q2, s.p1, s.p2, s.c1, s.c2)
    };
    ShorthandReport {
        kappa: s.kappa,
        q1,
        q2,
        p1,
        p2,
        c1,
        c2,
    }
}

pub fn run_matrix(args: &MatrixArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = args.params.resolve()?;
    let m = reliable_matrix(&params)?;
    let oracle_deviation = if args.verify {
        let settings = IntegrationSettings::for_params(&params, args.tol);
        let (o, _) = numeric_transition_matrix(&params, &settings)?;
        Some(m.max_abs_diff(&o))
    } else {
        None
    };
    let report = MatrixReport {
        params: params.raw(),
        case: m.case.number(),
        shorthands: caller_shorthands(&params),
        p: m.p,
        tol: m.tol,
        extended_domain: m.extended_domain,
        stochastic_residual: m.stochastic_residual(),
        range_violation: m.range_violation(),
        oracle_deviation,
    };

    if args.json {
        serde_json::to_writer_pretty(&mut *out, &report)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        writeln!(out)?;
    } else {
        writeln!(out, "case: {}", m.case)?;
        if m.extended_domain {
            writeln!(
                out,
                "note: k2 < 0 lies outside the physical domain (extended domain)"
            )?;
        }
        let s = &report.shorthands;
        writeln!(
            out,
            "shorthands: kappa={} q1={} q2={} p1={} p2={} C1={} C2={}",
            num(s.kappa),
            num(s.q1),
            num(s.q2),
            num(s.p1),
            num(s.p2),
            num(s.c1),
            num(s.c2)
        )?;
        writeln!(
            out,
            "P[i][j] (row i: initial level, column j: final level):"
        )?;
        for row in m.clamped() {
            writeln!(out, "  {}", row.map(num).join("  "))?;
        }
        writeln!(out, "tol: {}", num(m.tol))?;
        writeln!(
            out,
            "max |row/column sum - 1|: {}",
            num(report.stochastic_residual)
        )?;
        if let Some(d) = oracle_deviation {
            writeln!(
                out,
                "oracle max deviation: {} (limit {})",
                num(d),
                num(ORACLE_THRESHOLD)
            )?;
        }
    }

    if report.stochastic_residual > m.tol {
        return Err(CliError::Verification(format!(
            "double stochasticity violated: residual {:e} > tol {:e}",
            report.stochastic_residual, m.tol
        )));
    }
    if report.range_violation > m.tol {
        return Err(CliError::Verification(format!(
            "entries outside [0, 1] by {:e} > tol {:e}",
            report.range_violation, m.tol
        )));
    }
    if let Some(d) = oracle_deviation {
        if d > ORACLE_THRESHOLD {
            return Err(CliError::Verification(format!(
                "oracle deviation {d:e} exceeds {ORACLE_THRESHOLD:e}"
            )));
        }
    }
    Ok(())
}

pub fn run_spectrum(args: &SpectrumArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = args.params.resolve()?;
    if !(args.tau_from > 0.0 && args.tau_to > args.tau_from && args.tau_steps >= 2) {
        return Err(CliError::Usage(
            "spectrum grid needs 0 < tau-from < tau-to and tau-steps >= 2".into(),
        ));
    }
    let mut text = String::from("tau,E0,E1,E2\n");
    for i in 0..args.tau_steps {
        let tau =
            args.tau_from + (args.tau_to - args.tau_from) * i as f64 / (args.tau_steps - 1) as f64;
        let e = adiabatic_energies(&params, tau)?;
        text.push_str(&format!(
            "{},{},{},{}\n",
            num(tau),
            num(e[0]),
            num(e[1]),
            num(e[2])
        ));
    }
    write_output(args.out.as_ref(), &text, out)
}

/// Writes to `--out` when given, else to `out`.
pub fn write_output(
    path: Option<&PathBuf>,
    text: &str,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Matrix(a) => run_matrix(a, out),
        Command::Sweep(a) => sweep::run_sweep(a, out),
        Command::Spectrum(a) => run_spectrum(a, out),
        Command::Verify(a) => verify::run_verify(a, out),
    }
}
