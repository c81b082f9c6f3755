//! Seeded random property suite with a JSON report.

use std::io::Write;

use clap::Args;
use lzc_core::contour::i_squared_identity;
use lzc_core::model::{negated_params, reflected_params, transition_matrix, RawParams};
use lzc_core::propagator::{
    numeric_transition_matrix, numeric_transition_matrix_in, Direction, IntegrationSettings,
};
use lzc_core::sampling::ParamSampler;
use lzc_core::{ModelParams, SlopeCase};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::ORACLE_THRESHOLD;

/// The time-reversal check runs on every Nth trial; it costs three extra
/// propagations.
pub const REVERSAL_EVERY: usize = 5;

/// Oracle accuracy target used by the suite.
const ORACLE_TOL: f64 = 1e-3;

/// Property names and their thresholds, in report order.
pub const PROPERTIES: [(&str, f64); 8] = [
    ("stochasticity", 1e-6),
    ("level0_identity", 1e-6),
    ("range", 1e-6),
    ("reflection", 1e-9),
    ("negation", 1e-9),
    ("oracle_agreement", ORACLE_THRESHOLD),
    ("time_reversal", ORACLE_THRESHOLD),
    ("i_squared_identity", 1e-6),
];

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Number of random parameter sets (at least 1).
    #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PropertyReport {
    pub name: String,
    /// Largest residual seen; `null` when a check could not be evaluated.
    pub max_residual: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Failure {
    pub property: String,
    pub params: RawParams,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: u64,
    pub properties: Vec<PropertyReport>,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.pass)
    }
}

/// Residual of one property on one trial; `Err` when evaluation failed.
type Check = Result<f64, String>;

fn closed(p: &ModelParams) -> Result<lzc_core::TransitionMatrix, String> {
    transition_matrix(p).map_err(|e| e.to_string())
}

/// All applicable checks for trial `index`, indexed like [`PROPERTIES`].
fn run_trial(index: usize, p: &ModelParams) -> [Option<Check>; 8] {
    let m = closed(p);
    let on_m = |f: &dyn Fn(&lzc_core::TransitionMatrix) -> f64| {
        Some(m.as_ref().map(f).map_err(Clone::clone))
    };
    let settings = IntegrationSettings::for_params(p, ORACLE_TOL);
    let fwd = numeric_transition_matrix(p, &settings)
        .map(|(o, _)| o)
        .map_err(|e| e.to_string());

    let reflection = (|| {
        let (r, perm) = reflected_params(p);
        Ok(m.as_ref()
            .map_err(Clone::clone)?
            .max_abs_diff(&closed(&r)?.permuted(perm)))
    })();
    let negation = (|| {
        Ok(m.as_ref()
            .map_err(Clone::clone)?
            .max_abs_diff(&closed(&negated_params(p))?))
    })();
    let oracle = (|| {
        Ok(m.as_ref()
            .map_err(Clone::clone)?
            .max_abs_diff(fwd.as_ref().map_err(Clone::clone)?))
    })();
    let reversal = index.is_multiple_of(REVERSAL_EVERY).then(|| {
        let (rev, _) = numeric_transition_matrix_in(p, Direction::Reversed, &settings)
            .map_err(|e| e.to_string())?;
        Ok(rev.max_abs_diff(&fwd.as_ref().map_err(Clone::clone)?.transpose()))
    });
    let i_squared = (p.case() == SlopeCase::BothPositive).then(|| {
        let (lhs, rhs) = i_squared_identity(p).map_err(|e| e.to_string())?;
        Ok((lhs - rhs).abs() / rhs.abs())
    });

    [
        on_m(&|m| m.stochastic_residual()),
        on_m(&|m| m.level0_identity_residual()),
        on_m(&|m| m.range_violation()),
        Some(reflection),
        Some(negation),
        Some(oracle),
        reversal,
        i_squared,
    ]
}

/// Runs the suite. Trials are evaluated in parallel; the report is
/// independent of scheduling.
pub fn verify(seed: u64, trials: u64) -> VerifyReport {
    let sets = ParamSampler::new(seed).draw_cycled(trials as usize);
    let results: Vec<_> = sets
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_trial(i, p))
        .collect();

    let mut properties = Vec::new();
    let mut failures = Vec::new();
    for (k, (name, threshold)) in PROPERTIES.iter().enumerate() {
        let mut max_residual = Some(0.0f64);
        let mut pass = true;
        for (p, checks) in sets.iter().zip(&results) {
            let detail = match &checks[k] {
                None => continue,
                Some(Ok(r)) if *r <= *threshold => {
                    max_residual = max_residual.map(|m| m.max(*r));
                    continue;
                }
                Some(Ok(r)) => {
                    // NaN residuals land here too.
                    max_residual =
                        max_residual.map(|m| if r.is_nan() { f64::NAN } else { m.max(*r) });
                    format!("residual {r:e} exceeds {threshold:e}")
                }
                Some(Err(e)) => {
                    max_residual = None;
                    e.clone()
                }
            };
            pass = false;
            failures.push(Failure {
                property: name.to_string(),
                params: p.raw(),
                detail,
            });
        }
        let max_residual = max_residual.filter(|r| r.is_finite());
        properties.push(PropertyReport {
            name: name.to_string(),
            max_residual,
            threshold: *threshold,
            pass,
        });
    }
    VerifyReport {
        seed,
        trials,
        properties,
        failures,
    }
}

pub fn run_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report = verify(args.seed, args.trials);
    serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(out)?;
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<_> = report
            .properties
            .iter()
            .filter(|p| !p.pass)
            .map(|p| p.name.as_str())
            .collect();
        Err(CliError::Verification(format!(
            "properties failed: {}",
            names.join(", ")
        )))
    }
}
