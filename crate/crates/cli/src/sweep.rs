//! Closed-form matrices over a one-parameter grid, written as CSV.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use lzc_core::propagator::{numeric_transition_matrix, IntegrationSettings};
use lzc_core::ModelParams;
use rayon::prelude::*;

use crate::error::CliError;
use crate::format::num;
use crate::{reliable_matrix, write_output, ParamArgs};

pub const MAX_STEPS: usize = 100_000;
pub const DEFAULT_VERIFY_EVERY: usize = 10;

const ENTRIES: [&str; 9] = ["00", "01", "02", "10", "11", "12", "20", "21", "22"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    K2,
    G,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Fixed parameters; in a g sweep, g1/g2 are replaced by c1*g and c2*g.
    #[command(flatten)]
    pub params: ParamArgs,
    /// Swept variable.
    #[arg(long, value_enum)]
    pub var: Option<SweepVar>,
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Number of grid points, endpoints included.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Coupling pattern for g sweeps (default 1).
    #[arg(long, allow_negative_numbers = true)]
    pub c1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c2: Option<f64>,
    /// Add oracle columns at every Nth grid point.
    #[arg(long)]
    pub verify: bool,
    /// Oracle decimation (default 10).
    #[arg(long)]
    pub verify_every: Option<usize>,
    /// Target accuracy of the oracle.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A fully resolved sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub var: SweepVar,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub k2: f64,
    /// Couplings for k2 sweeps, pattern (c1, c2) for g sweeps.
    pub g: (f64, f64),
    pub b1: f64,
    pub b2: f64,
    /// Oracle decimation; `None` disables the oracle columns.
    pub verify_every: Option<usize>,
    pub tol: f64,
}

impl SweepPlan {
    pub fn from_args(args: &SweepArgs) -> Result<Self, CliError> {
        let cfg = args.params.config_file()?;
        let var = match args.var {
            Some(v) => v,
            None => match cfg.get_str("var") {
                Some("k2") => SweepVar::K2,
                Some("g") => SweepVar::G,
                Some(other) => {
                    return Err(CliError::Usage(format!(
                        "var must be k2 or g, got `{other}`"
                    )))
                }
                None => return Err(CliError::Usage("missing --var".into())),
            },
        };
        let pick = |flag: Option<f64>, key: &str, default: Option<f64>| -> Result<f64, CliError> {
            match flag {
                Some(v) => Ok(v),
                None => cfg
                    .get_f64(key)?
                    .or(default)
                    .ok_or_else(|| CliError::Usage(format!("missing --{key}"))),
            }
        };
        let from = pick(args.from, "from", None)?;
        let to = pick(args.to, "to", None)?;
        let steps = match args.steps {
            Some(s) => s,
            None => cfg
                .get_usize("steps")?
                .ok_or_else(|| CliError::Usage("missing --steps".into()))?,
        };
        let verify_every = match args.verify_every {
            Some(n) => n,
            None => cfg
                .get_usize("verify_every")?
                .unwrap_or(DEFAULT_VERIFY_EVERY),
        };
        let p = &args.params;
        let k2 = if var == SweepVar::K2 {
            0.0
        } else {
            p.value("k2", &cfg, None)?
        };
        let g = match var {
            SweepVar::K2 => (p.value("g1", &cfg, None)?, p.value("g2", &cfg, None)?),
            SweepVar::G => (
                pick(args.c1, "c1", Some(1.0))?,
                pick(args.c2, "c2", Some(1.0))?,
            ),
        };
        let plan = Self {
            var,
            from,
            to,
            steps,
            k2,
            g,
            b1: p.value("b1", &cfg, None)?,
            b2: p.value("b2", &cfg, None)?,
            verify_every: args.verify.then_some(verify_every),
            tol: args.tol,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.from.is_finite() && self.to.is_finite() && self.from < self.to) {
            return Err(CliError::Usage(format!(
                "sweep needs from < to, got {} and {}",
                self.from, self.to
            )));
        }
        if !(2..=MAX_STEPS).contains(&self.steps) {
            return Err(CliError::Usage(format!(
                "steps must lie in 2..={MAX_STEPS}, got {}",
                self.steps
            )));
        }
        if self.verify_every == Some(0) {
            return Err(CliError::Usage("verify-every must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CliError::Usage(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        // Fail early on parameters that are invalid at every grid point.
        self.params_at(self.from)?;
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == n {
                    self.to
                } else {
                    self.from + (self.to - self.from) * i as f64 / n as f64
                }
            })
            .collect()
    }

    pub fn params_at(&self, x: f64) -> Result<ModelParams, CliError> {
        let p = match self.var {
            SweepVar::K2 => ModelParams::new(x, self.g.0, self.g.1, self.b1, self.b2),
            SweepVar::G => ModelParams::new(self.k2, self.g.0 * x, self.g.1 * x, self.b1, self.b2),
        };
        Ok(p?)
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["x".to_string()];
        cols.extend(ENTRIES.iter().map(|e| format!("P{e}")));
        if self.verify_every.is_some() {
            cols.extend(ENTRIES.iter().map(|e| format!("O{e}")));
            cols.push("residual".into());
        }
        cols.join(",")
    }
}

/// One grid point; `closed`/`oracle` hold the error message on failure.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub x: f64,
    pub closed: Result<[[f64; 3]; 3], String>,
    pub oracle: Option<Result<[[f64; 3]; 3], String>>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.closed.is_err() || matches!(self.oracle, Some(Err(_)))
    }

    /// Largest entrywise closed-form vs oracle deviation at oracle points.
    pub fn residual(&self) -> Option<f64> {
        match (&self.closed, &self.oracle) {
            (Ok(c), Some(Ok(o))) => Some(
                c.iter()
                    .flatten()
                    .zip(o.iter().flatten())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            ),
            _ => None,
        }
    }

    pub fn to_csv(&self, with_oracle: bool) -> String {
        let entries = |m: &[[f64; 3]; 3]| m.iter().flatten().map(|v| num(*v)).collect::<Vec<_>>();
        let mut cols = vec![num(self.x)];
        match &self.closed {
            Ok(m) => cols.extend(entries(m)),
            Err(_) => cols.extend(std::iter::repeat_n("ERR".to_string(), 9)),
        }
        if with_oracle {
            match &self.oracle {
                Some(Ok(m)) => cols.extend(entries(m)),
                _ => cols.extend(std::iter::repeat_n(String::new(), 9)),
            }
            cols.push(match (&self.oracle, self.residual()) {
                (_, Some(r)) => num(r),
                (Some(_), None) => "ERR".into(),
                (None, None) if self.closed.is_err() => "ERR".into(),
                (None, None) => String::new(),
            });
        }
        cols.join(",")
    }
}

fn closed_entry(plan: &SweepPlan, x: f64) -> Result<[[f64; 3]; 3], String> {
    let p = plan.params_at(x).map_err(|e| e.to_string())?;
    let m = reliable_matrix(&p).map_err(|e| e.to_string())?;
    let res = m.stochastic_residual().max(m.range_violation());
    if res > m.tol {
        return Err(format!("closed-form invariants violated by {res:e}"));
    }
    Ok(m.clamped())
}

fn oracle_entry(plan: &SweepPlan, x: f64) -> Result<[[f64; 3]; 3], String> {
    let p = plan.params_at(x).map_err(|e| e.to_string())?;
    let settings = IntegrationSettings::for_params(&p, plan.tol);
    numeric_transition_matrix(&p, &settings)
        .map(|(m, _)| m.clamped())
        .map_err(|e| e.to_string())
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn compute_rows(plan: &SweepPlan) -> Vec<SweepRow> {
    plan.grid()
        .into_par_iter()
        .enumerate()
        .map(|(i, x)| SweepRow {
            x,
            closed: closed_entry(plan, x),
            oracle: plan
                .verify_every
                .filter(|n| i % n == 0)
                .map(|_| oracle_entry(plan, x)),
        })
        .collect()
}

pub fn render_csv(plan: &SweepPlan, rows: &[SweepRow]) -> String {
    let with_oracle = plan.verify_every.is_some();
    let mut text = plan.header();
    text.push('\n');
    for row in rows {
        text.push_str(&row.to_csv(with_oracle));
        text.push('\n');
    }
    text
}

pub fn run_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let plan = SweepPlan::from_args(args)?;
    let rows = compute_rows(&plan);
    write_output(args.out.as_ref(), &render_csv(&plan, &rows), out)?;
    let failed: Vec<_> = rows.iter().filter(|r| r.failed()).collect();
    for r in &failed {
        let msg = r
            .closed
            .as_ref()
            .err()
            .or(r.oracle.as_ref().and_then(|o| o.as_ref().err()));
        eprintln!(
            "x = {}: {}",
            num(r.x),
            msg.map(String::as_str).unwrap_or("failed")
        );
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{} of {} sweep points failed",
            failed.len(),
            rows.len()
        )))
    }
}
