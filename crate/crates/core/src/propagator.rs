//! Numerical propagation of the amplitude equations, used as an independent
//! oracle for the closed-form transition matrix.
//!
//! Integration runs in the interaction picture
//! `A = a e^{i k2 ln|tau|}`, `B_j = b_j e^{i beta_j tau^2 / 2}`:
//!
//! ```text
//! A'   = -i sum_j g_j B_j e^{i phi_j}
//! B_j' = -i conj(g_j) A e^{-i phi_j},     phi_j = k2 ln|tau| - beta_j tau^2 / 2
//! ```
//!
//! whose right-hand sides stay bounded at both ends. The short interval
//! `(0, eps)` next to the singular point and the tail beyond `T` are handled
//! by first-order analytic corrections.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ModelParams, TransitionMatrix};
use crate::ode::Dop853;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest tolerated change of the norm during raw integration.
pub const MAX_NORM_DRIFT: f64 = 1e-6;

/// Amplitudes `(a, b1, b2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub amp0: Complex64,
    pub amp1: Complex64,
    pub amp2: Complex64,
}

impl StateVector {
    pub fn basis(level: usize) -> Self {
        let mut v = [ZERO; 3];
        v[level] = Complex64::new(1.0, 0.0);
        Self::from_array(v)
    }

    pub fn from_array(v: [Complex64; 3]) -> Self {
        Self {
            amp0: v[0],
            amp1: v[1],
            amp2: v[2],
        }
    }

    pub fn to_array(self) -> [Complex64; 3] {
        [self.amp0, self.amp1, self.amp2]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0.norm_sqr() + self.amp1.norm_sqr() + self.amp2.norm_sqr()
    }

    pub fn populations(&self) -> [f64; 3] {
        [
            self.amp0.norm_sqr(),
            self.amp1.norm_sqr(),
            self.amp2.norm_sqr(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From `tau -> 0+` to `tau -> +inf`.
    Forward,
    /// From `tau -> -inf` to `tau -> 0-`.
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSettings {
    /// Distance of the integration start (or end) from `tau = 0`; ignored
    /// when `k2 = 0`, where integration reaches `tau = 0` exactly.
    pub epsilon: f64,
    pub t_final: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub tail_correction: bool,
}

impl IntegrationSettings {
    /// Settings targeting population accuracy `tol`.
    pub fn for_params(params: &ModelParams, tol: f64) -> Self {
        let g = params.g1().max(params.g2()).max(1.0);
        let beta_min = params.beta1().abs().min(params.beta2().abs());
        Self {
            epsilon: 1e-3f64.min(tol / (10.0 * g)),
            t_final: 50f64.max(20.0 / (beta_min * tol).sqrt()),
            rel_tol: 1e-11,
            abs_tol: 1e-12,
            max_steps: 20_000_000,
            tail_correction: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < self.t_final && self.t_final.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "need 0 < epsilon < t_final (epsilon = {}, t_final = {})",
                self.epsilon, self.t_final
            )));
        }
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(Error::InvalidParams(format!(
                    "{name} must lie in (0, 1e-2], got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationResult {
    pub populations: [f64; 3],
    /// Estimated distance of the populations from the `T -> inf`,
    /// `eps -> 0` limit.
    pub conv_err: f64,
    /// `| |psi(T)|^2 - 1 |` accumulated by the integrator alone.
    pub norm_drift: f64,
    pub steps_used: usize,
}

/// Hamiltonian with complex couplings, in the caller's level labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexCouplingModel {
    pub k2: f64,
    pub g: [Complex64; 2],
    pub beta: [f64; 2],
}

impl ComplexCouplingModel {
    pub fn from_params(params: &ModelParams) -> Self {
        let r = params.raw();
        Self {
            k2: r.k2,
            g: [Complex64::new(r.g1, 0.0), Complex64::new(r.g2, 0.0)],
            beta: [r.b1, r.b2],
        }
    }

    /// Same magnitudes, couplings rotated by `e^{i phase_j}`.
    pub fn with_phases(params: &ModelParams, phases: [f64; 2]) -> Self {
        let mut m = Self::from_params(params);
        for (g, phase) in m.g.iter_mut().zip(phases) {
            // Snap rounding noise so that multiples of pi/2 rotate exactly.
            let snap = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
            *g *= Complex64::new(snap(phase.cos()), snap(phase.sin()));
        }
        m
    }

    fn phase(&self, j: usize, tau: f64) -> f64 {
        let log_part = if self.k2 == 0.0 {
            0.0
        } else {
            self.k2 * tau.abs().ln()
        };
        log_part - 0.5 * self.beta[j] * tau * tau
    }

    fn phase_rate(&self, j: usize, tau: f64) -> f64 {
        self.k2 / tau - self.beta[j] * tau
    }

    fn rhs(&self, tau: f64, y: &[Complex64; 3], dy: &mut [Complex64; 3]) {
        let e1 = Complex64::from_polar(1.0, self.phase(0, tau));
        let e2 = Complex64::from_polar(1.0, self.phase(1, tau));
        dy[0] = -I * (self.g[0] * y[1] * e1 + self.g[1] * y[2] * e2);
        dy[1] = -I * self.g[0].conj() * y[0] * e1.conj();
        dy[2] = -I * self.g[1].conj() * y[0] * e2.conj();
    }

    /// First-order change of the interaction-picture state from the
    /// semi-infinite interval beyond `tau` (`outward = +1` for
    /// `(tau, +inf)`, `-1` for `(-inf, tau)`), by one integration by parts.
    fn tail_increment(&self, tau: f64, y: &[Complex64; 3], outward: f64) -> [Complex64; 3] {
        // int_tau^{+-inf} e^{i s phi} = -+ e^{i s phi(tau)} / (i s phi'(tau))
        let mut d = [ZERO; 3];
        for j in 0..2 {
            let rate = self.phase_rate(j, tau);
            let e = Complex64::from_polar(1.0, self.phase(j, tau));
            let int_plus = -outward * e / (I * rate);
            let int_minus = -outward * e.conj() / (-I * rate);
            d[0] += -I * self.g[j] * y[j + 1] * int_plus;
            d[j + 1] += -I * self.g[j].conj() * y[0] * int_minus;
        }
        d
    }

    /// First-order change from the interval between `tau = 0` and
    /// `tau = eps` (signed), where `e^{i phi_j} ~ |tau|^{i k2}`.
    fn origin_increment(&self, eps: f64, y: &[Complex64; 3]) -> [Complex64; 3] {
        let e = eps.abs();
        let k2i = Complex64::new(0.0, self.k2);
        // int over the interval of |tau|^{+- i k2}, oriented from 0 to eps.
        let int_plus = eps.signum() * Complex64::new(e, 0.0).powc(1.0 + k2i) / (1.0 + k2i);
        let int_minus = eps.signum() * Complex64::new(e, 0.0).powc(1.0 - k2i) / (1.0 - k2i);
        let mut d = [ZERO; 3];
        for j in 0..2 {
            d[0] += -I * self.g[j] * y[j + 1] * int_plus;
            d[j + 1] += -I * self.g[j].conj() * y[0] * int_minus;
        }
        d
    }

    fn tail_error_bound(&self, t_final: f64) -> f64 {
        (0..2)
            .map(|j| self.g[j].norm() / (self.beta[j].abs() * t_final * t_final))
            .sum()
    }
}

fn add(y: &mut [Complex64; 3], d: [Complex64; 3]) {
    for k in 0..3 {
        y[k] += d[k];
    }
}

/// Propagates a model with (possibly complex) couplings from one diabatic
/// level and returns the final diabatic populations.
pub fn propagate_model(
    model: &ComplexCouplingModel,
    initial_level: usize,
    direction: Direction,
    settings: &IntegrationSettings,
) -> Result<PropagationResult> {
    settings.validate()?;
    if initial_level > 2 {
        return Err(Error::InvalidParams(format!(
            "initial level must be 0, 1 or 2, got {initial_level}"
        )));
    }
    let eps = if model.k2 == 0.0 {
        0.0
    } else {
        settings.epsilon
    };
    let t_final = settings.t_final;
    let solver = Dop853::new(settings.rel_tol, settings.abs_tol).with_max_steps(settings.max_steps);
    let mut y = StateVector::basis(initial_level).to_array();

    let (t0, t1, outer_edge) = match direction {
        Direction::Forward => (eps, t_final, t_final),
        Direction::Reversed => (-t_final, -eps, -t_final),
    };

    // Contribution of the part of the line not covered by the integrator,
    // on the side where the system starts.
    let mut correction = 0.0;
    match direction {
        Direction::Forward if eps > 0.0 => {
            let d = model.origin_increment(eps, &y);
            correction += d.iter().map(|x| x.norm()).fold(0.0, f64::max);
            add(&mut y, d);
        }
        Direction::Reversed if settings.tail_correction => {
            let d = model.tail_increment(outer_edge, &y, -1.0);
            add(&mut y, d);
        }
        _ => {}
    }
    let start_norm = y.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for x in &mut y {
        *x /= start_norm;
    }

    let (mut y, stats) = solver.integrate(|t, y, dy| model.rhs(t, y, dy), t0, t1, y)?;
    let norm_drift = (y.iter().map(|x| x.norm_sqr()).sum::<f64>() - 1.0).abs();
    if norm_drift > MAX_NORM_DRIFT {
        return Err(Error::Integration(format!(
            "norm drift {norm_drift:e} exceeds {MAX_NORM_DRIFT:e} after {} steps",
            stats.accepted
        )));
    }

    match direction {
        Direction::Forward if settings.tail_correction => {
            let d = model.tail_increment(outer_edge, &y, 1.0);
            add(&mut y, d);
        }
        Direction::Reversed if eps > 0.0 => {
            let d = model.origin_increment(eps, &y);
            correction += d.iter().map(|x| x.norm()).fold(0.0, f64::max);
            add(&mut y, d);
        }
        _ => {}
    }

    let norm_sqr: f64 = y.iter().map(|x| x.norm_sqr()).sum();
    let populations = std::array::from_fn(|k| y[k].norm_sqr() / norm_sqr);
    let tail_err = if settings.tail_correction {
        model.tail_error_bound(t_final)
    } else {
        // Uncorrected tail: first-order amplitude ~ g / |phi'(T)|.
        (0..2)
            .map(|j| 2.0 * model.g[j].norm() / model.phase_rate(j, t_final).abs())
            .sum()
    };
    Ok(PropagationResult {
        populations,
        conv_err: tail_err + correction * correction + (norm_sqr - 1.0).abs(),
        norm_drift,
        steps_used: stats.accepted,
    })
}

pub fn propagate(
    params: &ModelParams,
    initial_level: usize,
    direction: Direction,
    settings: &IntegrationSettings,
) -> Result<PropagationResult> {
    propagate_model(
        &ComplexCouplingModel::from_params(params),
        initial_level,
        direction,
        settings,
    )
}

fn matrix_for_model(
    model: &ComplexCouplingModel,
    params: &ModelParams,
    direction: Direction,
    settings: &IntegrationSettings,
) -> Result<(TransitionMatrix, f64)> {
    let mut p = [[0.0; 3]; 3];
    let mut conv = 0.0f64;
    for (i, row) in p.iter_mut().enumerate() {
        let r = propagate_model(model, i, direction, settings)?;
        *row = r.populations;
        conv = conv.max(r.conv_err);
    }
    let m = TransitionMatrix {
        p,
        tol: conv,
        case: params.case(),
        extended_domain: false,
    };
    let row_err = m
        .row_sums()
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max);
    if row_err > 3.0 * MAX_NORM_DRIFT {
        return Err(Error::Integration(format!(
            "row sums deviate from 1 by {row_err:e}"
        )));
    }
    Ok((m, conv))
}

/// Transition matrix from three propagations; also returns the largest
/// convergence-error estimate.
pub fn numeric_transition_matrix(
    params: &ModelParams,
    settings: &IntegrationSettings,
) -> Result<(TransitionMatrix, f64)> {
    numeric_transition_matrix_in(params, Direction::Forward, settings)
}

pub fn numeric_transition_matrix_in(
    params: &ModelParams,
    direction: Direction,
    settings: &IntegrationSettings,
) -> Result<(TransitionMatrix, f64)> {
    matrix_for_model(
        &ComplexCouplingModel::from_params(params),
        params,
        direction,
        settings,
    )
}

/// Largest entrywise change of the numeric matrix when the couplings carry
/// the given phases.
pub fn gauge_check(
    params: &ModelParams,
    phases: [f64; 2],
    settings: &IntegrationSettings,
) -> Result<f64> {
    let (base, _) = numeric_transition_matrix(params, settings)?;
    let model = ComplexCouplingModel::with_phases(params, phases);
    let (rotated, _) = matrix_for_model(&model, params, Direction::Forward, settings)?;
    Ok(base.max_abs_diff(&rotated))
}

/// Evolves Schrodinger-picture amplitudes `(a, b1, b2)` from `tau0` to
/// `tau1` (both nonzero and of the same sign).
pub fn evolve_schrodinger(
    model: &ComplexCouplingModel,
    state: StateVector,
    tau0: f64,
    tau1: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<StateVector> {
    if tau0 * tau1 <= 0.0 {
        return Err(Error::Domain(format!(
            "interval [{tau0}, {tau1}] touches tau = 0"
        )));
    }
    let solver = Dop853::new(rel_tol, abs_tol);
    let (y, _) = solver.integrate(
        |tau, y: &[Complex64; 3], dy: &mut [Complex64; 3]| {
            dy[0] = -I * (model.k2 / tau * y[0] + model.g[0] * y[1] + model.g[1] * y[2]);
            dy[1] = -I * (model.g[0].conj() * y[0] + model.beta[0] * tau * y[1]);
            dy[2] = -I * (model.g[1].conj() * y[0] + model.beta[1] * tau * y[2]);
        },
        tau0,
        tau1,
        state.to_array(),
    )?;
    Ok(StateVector::from_array(y))
}
