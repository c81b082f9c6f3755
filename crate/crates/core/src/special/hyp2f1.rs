//! Gauss hypergeometric function `2F1(a, b; c; z)` for complex `a, b, c` and
//! real `z`.
//!
//! Dispatch by argument:
//!
//! | range            | method                                              |
//! |------------------|-----------------------------------------------------|
//! | `z = 0`          | exactly 1                                           |
//! | `\|z\| <= 1/2`   | Maclaurin series                                    |
//! | `z < -1/2`       | Pfaff transform to `z / (z - 1)`, then recurse      |
//! | `z < 0`          | also `1 / (1 - z)` connection formula if needed     |
//! | `1/2 < z < 1`    | `1 - z` connection formula or direct series         |
//! | `1 < z <= 2`     | `1 - z` or `1 / z` connection formula               |
//! | `z = 1`          | Gauss summation                                     |
//! | `z > 2`          | `1 / z` connection formula                          |
//!
//! When a connection formula is degenerate (integer `c - a - b` or `a - b`)
//! the Euler integral is used instead.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gamma::{gamma_c, ln_gamma_c, rgamma_c};
use super::is_nonpositive_integer;
use crate::error::{Error, Result};
use crate::quad::Quadrature;

const SERIES_MAX_TERMS: usize = 10_000;
const SERIES_REL_STOP: f64 = 1e-16;
/// Distance to the nearest integer below which a connection formula is
/// treated as degenerate.
const DEGENERACY_GAP: f64 = 1e-3;
/// Relative accuracy assumed for each product of gamma functions.
const GAMMA_REL_ERR: f64 = 5e-14;
/// Direct summation is still usable (if slow) up to this `|z|`.
const SERIES_FALLBACK_RADIUS: f64 = 0.9;

/// Which limit to take on the cut `z in [1, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutSide {
    /// The conventional value on the cut, taken as the limit from below
    /// (`z - i0`), which is what most numerical libraries return.
    #[default]
    Principal,
    /// `z + i0`.
    AboveCut,
    /// `z - i0`.
    BelowCut,
}

impl CutSide {
    /// `+1` above the cut, `-1` below it.
    fn sign(self) -> f64 {
        match self {
            CutSide::AboveCut => 1.0,
            CutSide::Principal | CutSide::BelowCut => -1.0,
        }
    }

    /// `(x)^p` for a negative real base `x`, approached from the side of the
    /// cut that corresponds to `z +- i0` with `x = 1 - z t` and `t > 0`.
    fn negative_base_pow(self, x: f64, p: Complex64) -> Complex64 {
        (p * self.negative_base_ln(x)).exp()
    }

    /// `ln x` for a negative real base `x` on the side matching `z +- i0`.
    fn negative_base_ln(self, x: f64) -> Complex64 {
        // 1 - (z + i0) t = x - i0, so the argument is -pi above the cut.
        Complex64::new((-x).ln(), -self.sign() * PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    Transform,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyp2F1Input {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub z: f64,
    pub cut_side: CutSide,
}

impl Hyp2F1Input {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, z: f64) -> Self {
        Self {
            a,
            b,
            c,
            z,
            cut_side: CutSide::Principal,
        }
    }

    pub fn with_side(mut self, side: CutSide) -> Self {
        self.cut_side = side;
        self
    }

    fn validate(&self) -> Result<()> {
        let finite = |w: Complex64| w.re.is_finite() && w.im.is_finite();
        if !(finite(self.a) && finite(self.b) && finite(self.c) && self.z.is_finite()) {
            return Err(Error::Domain("2F1 parameters must be finite".into()));
        }
        if is_nonpositive_integer(self.c) {
            return Err(Error::Domain(format!(
                "2F1 is undefined for c = {} (non-positive integer)",
                self.c.re
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub value: Complex64,
    pub abs_err: f64,
    pub method: Method,
}

/// `2F1` as `exp(ln_scale) * value`, for results outside the `f64` range.
/// `abs_err` is in the same units as `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledEvalResult {
    pub value: Complex64,
    pub abs_err: f64,
    pub ln_scale: f64,
    pub method: Method,
}

impl ScaledEvalResult {
    fn unscaled(r: EvalResult) -> Self {
        Self {
            value: r.value,
            abs_err: r.abs_err,
            ln_scale: 0.0,
            method: r.method,
        }
    }

    /// `ln |2F1|`.
    pub fn ln_norm(&self) -> f64 {
        self.ln_scale + self.value.norm().ln()
    }

    /// Error bound relative to `|2F1|`.
    pub fn rel_err(&self) -> f64 {
        self.abs_err / self.value.norm()
    }

    /// `ln` of the absolute error bound, for comparing routes.
    fn ln_abs_err(&self) -> f64 {
        self.ln_scale + self.abs_err.ln()
    }

    fn accepted(&self) -> bool {
        self.abs_err <= ACCEPT_REL_ERR * self.value.norm()
    }

    fn is_finite(&self) -> bool {
        self.value.re.is_finite()
            && self.value.im.is_finite()
            && self.abs_err.is_finite()
            && self.ln_scale.is_finite()
    }

    /// Multiplies by `exp(ln_factor)`.
    fn times_exp(mut self, ln_factor: Complex64) -> Self {
        self.ln_scale += ln_factor.re;
        self.value *= Complex64::from_polar(1.0, ln_factor.im);
        self
    }

    /// Moves the magnitude of `value` into `ln_scale`.
    fn normalized(mut self) -> Self {
        let m = self.value.norm();
        if m > 0.0 && m.is_finite() {
            self.ln_scale += m.ln();
            self.value /= m;
            self.abs_err /= m;
        }
        self
    }

    /// The plain value, if it fits in `f64`.
    pub fn to_eval(self) -> Option<EvalResult> {
        let f = self.ln_scale.exp();
        let r = EvalResult {
            value: self.value * f,
            abs_err: self.abs_err * f,
            method: self.method,
        };
        (r.value.re.is_finite() && r.value.im.is_finite() && r.abs_err.is_finite()).then_some(r)
    }
}

/// Evaluates `2F1(a, b; c; z)` with an absolute error estimate. Fails with a
/// domain error when the value is outside the `f64` range; see
/// [`hyp2f1_scaled`].
pub fn hyp2f1(input: Hyp2F1Input) -> Result<EvalResult> {
    hyp2f1_scaled(input)?.to_eval().ok_or_else(|| {
        Error::Domain(format!(
            "2F1({}, {}; {}; {}) is outside double-precision range",
            input.a, input.b, input.c, input.z
        ))
    })
}

/// As [`hyp2f1`], with the magnitude carried separately so that results
/// beyond the `f64` range stay usable in products.
pub fn hyp2f1_scaled(input: Hyp2F1Input) -> Result<ScaledEvalResult> {
    input.validate()?;
    let Hyp2F1Input {
        a,
        b,
        c,
        z,
        cut_side,
    } = input;
    let fast = eval(
        a,
        b,
        c,
        z,
        cut_side,
        Ctx {
            depth: 0,
            quadrature: false,
        },
    );
    let r = match fast {
        Ok(r) if r.rel_err() <= QUADRATURE_TRIGGER_REL_ERR => r,
        // Large parameters where every series cancels: allow the slower
        // integral route wherever a series is used.
        _ => best_of([
            Some(fast),
            Some(eval(
                a,
                b,
                c,
                z,
                cut_side,
                Ctx {
                    depth: 0,
                    quadrature: true,
                },
            )),
        ])?,
    };
    if !r.is_finite() {
        return Err(Error::Domain(format!(
            "2F1({}, {}; {}; {}) produced a non-finite value",
            input.a, input.b, input.c, input.z
        )));
    }
    Ok(r)
}

/// Relative error bound at which a route is accepted without trying others.
const ACCEPT_REL_ERR: f64 = 1e-13;
/// Transformations may recurse into each other; alternates stop here.
const MAX_ALTERNATE_DEPTH: u32 = 2;
/// Results worse than this are recomputed with the integral route enabled.
const QUADRATURE_TRIGGER_REL_ERR: f64 = 1e-9;

/// Recursion state shared by the transformation routes.
#[derive(Debug, Clone, Copy)]
struct Ctx {
    depth: u32,
    /// Whether series may fall back to the subtracted Euler integral.
    quadrature: bool,
}

impl Ctx {
    fn deeper(self) -> Self {
        Self {
            depth: self.depth + 1,
            ..self
        }
    }
}

fn eval(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    z: f64,
    side: CutSide,
    ctx: Ctx,
) -> Result<ScaledEvalResult> {
    if z == 0.0 {
        return Ok(ScaledEvalResult {
            value: Complex64::new(1.0, 0.0),
            abs_err: 0.0,
            ln_scale: 0.0,
            method: Method::Series,
        });
    }
    if z == 1.0 {
        return gauss_sum(a, b, c);
    }
    if z < -0.5 {
        let primary = pfaff(a, b, c, z, ctx);
        if matches!(&primary, Ok(r) if r.accepted()) {
            return primary;
        }
        return best_of([
            Some(primary),
            Some(one_over_one_minus_z(a, b, c, z, ctx.quadrature)),
        ]);
    }
    // Large parameters make individual routes lose digits to cancellation.
    // The primary route for each range is tried first; when its error bound
    // is poor, the other valid routes are tried and the best one kept.
    let primary = if z.abs() <= 0.5 {
        series_best(a, b, c, z, ctx.quadrature)
    } else if z <= 2.0 {
        one_minus_z(a, b, c, z, side, ctx)
    } else {
        one_over_z(a, b, c, z, side, ctx.quadrature)
    };
    let accepted = matches!(&primary, Ok(r) if r.accepted());
    if accepted || ctx.depth >= MAX_ALTERNATE_DEPTH {
        return primary;
    }
    if z < 0.0 {
        best_of([
            Some(primary),
            Some(one_over_one_minus_z(a, b, c, z, ctx.quadrature)),
        ])
    } else if z <= 0.5 {
        best_of([Some(primary), Some(one_minus_z(a, b, c, z, side, ctx))])
    } else if z < 1.0 {
        let direct = (z <= SERIES_FALLBACK_RADIUS).then(|| series_best(a, b, c, z, ctx.quadrature));
        best_of([Some(primary), direct])
    } else if z <= 2.0 {
        best_of([
            Some(primary),
            Some(one_over_z(a, b, c, z, side, ctx.quadrature)),
        ])
    } else {
        best_of([Some(primary), Some(one_minus_z(a, b, c, z, side, ctx))])
    }
}

/// The successful candidate with the smallest error bound, else the first
/// error.
fn best_of<const N: usize>(
    candidates: [Option<Result<ScaledEvalResult>>; N],
) -> Result<ScaledEvalResult> {
    let mut best: Option<ScaledEvalResult> = None;
    let mut first_err = None;
    for c in candidates.into_iter().flatten() {
        match c {
            Ok(r) if r.is_finite() => {
                if best.is_none_or(|b| r.ln_abs_err() < b.ln_abs_err()) {
                    best = Some(r);
                }
            }
            Ok(r) => {
                first_err.get_or_insert(Error::Domain(format!(
                    "2F1 route produced a non-finite value {}",
                    r.value
                )));
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one candidate"))
}

/// Maclaurin series for `|z| < 1`. When the direct sum cancels badly, Euler's
/// transform `(1 - z)^{c-a-b} 2F1(c - a, c - b; c; z)` is also tried, and,
/// if `quadrature` is set and both lose too many digits, the subtracted Euler
/// integral.
fn series_best(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    z: f64,
    quadrature: bool,
) -> Result<ScaledEvalResult> {
    let direct = series(a, b, c, z);
    if matches!(&direct, Ok(r) if r.accepted()) {
        return direct;
    }
    let euler =
        series(c - a, c - b, c, z).map(|r| r.times_exp((c - a - b) * (1.0 - z).ln()).normalized());
    let best = best_of([Some(direct), Some(euler)]);
    if !quadrature || matches!(&best, Ok(r) if r.rel_err() <= QUADRATURE_TRIGGER_REL_ERR) {
        return best;
    }
    best_of([Some(best), Some(euler_subtracted(a, b, c, z))])
}

/// Euler integral with the value at `t = 1` subtracted, for `z < 1`:
///
/// `2F1(a, b; c; z) = g(1) + Gamma(c) / (Gamma(a) Gamma(c - a))
///   \int_0^1 t^{a-1} (1-t)^{c-a-1} (g(t) - g(1)) dt`, `g(t) = (1 - z t)^{-b}`,
///
/// valid for `Re a > 0` and `Re(c - a) > -1`. It stays well conditioned when
/// `|b|` is large and `a`, `c` are moderate, where every series cancels, and
/// covers `Re c = Re a`, where the plain Euler integral diverges. The
/// numerator parameter used as `a` is the smaller of the two.
fn euler_subtracted(a: Complex64, b: Complex64, c: Complex64, z: f64) -> Result<ScaledEvalResult> {
    let usable = |p: Complex64| p.re > 0.0 && (c - p).re > -1.0;
    let (p, q) = match (usable(a), usable(b)) {
        (true, true) if b.norm() < a.norm() => (b, a),
        (true, _) => (a, b),
        (false, true) => (b, a),
        (false, false) => {
            return Err(Error::Domain(format!(
                "subtracted Euler integral needs Re a > 0 and Re(c - a) > -1 (a = {a}, b = {b}, c = {c})"
            )))
        }
    };
    if z >= 1.0 {
        return Err(Error::Domain(format!(
            "subtracted Euler integral needs z < 1, got {z}"
        )));
    }
    let ln_g1 = -q * (1.0 - z).ln();
    let unit = ScaledEvalResult {
        value: Complex64::new(1.0, 0.0),
        abs_err: 0.0,
        ln_scale: 0.0,
        method: Method::Quadrature,
    };
    if is_nonpositive_integer(c - p) {
        return Ok(unit.times_exp(ln_g1));
    }
    let ln_k = ln_gamma_c(c)? - ln_gamma_c(p)? - ln_gamma_c(c - p)?;
    let (pa, pc) = (p - 1.0, c - p - 1.0);
    // g(t) / g(1) - 1 = expm1(-q ln(1 + z (1 - t) / (1 - z))), formed from 1 - t.
    let ratio = z / (1.0 - z);
    let quad = Quadrature::new(0.0, 1e-10).with_max_intervals(20_000);
    let j = quad.integrate_endpoint_singular(
        |_, dl, dr| (pa * dl.ln() + pc * dr.ln()).exp() * expm1_c(-q * (ratio * dr).ln_1p()),
        0.0,
        1.0,
        p.re,
        (c - p).re + 1.0,
    )?;
    let k = ln_k.exp();
    let kj = k * j.value;
    let out = ScaledEvalResult {
        value: 1.0 + kj,
        abs_err: k.norm() * j.abs_err + GAMMA_REL_ERR * kj.norm(),
        ln_scale: 0.0,
        method: Method::Quadrature,
    };
    Ok(out.times_exp(ln_g1).normalized())
}

/// `e^w - 1` without cancellation for small `|w|`.
fn expm1_c(w: Complex64) -> Complex64 {
    let s = (0.5 * w.im).sin();
    Complex64::new(
        w.re.exp_m1() * w.im.cos() - 2.0 * s * s,
        w.re.exp() * w.im.sin(),
    )
}

/// The Maclaurin series alone, for `|z| < 1` (no transformations).
pub fn hyp2f1_series(input: Hyp2F1Input) -> Result<EvalResult> {
    input.validate()?;
    if input.z.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "Maclaurin series needs |z| < 1, got {}",
            input.z
        )));
    }
    series(input.a, input.b, input.c, input.z)?
        .to_eval()
        .ok_or_else(|| {
            Error::Domain(format!(
                "Maclaurin series at z = {} is outside double-precision range",
                input.z
            ))
        })
}

fn gauss_sum(a: Complex64, b: Complex64, c: Complex64) -> Result<ScaledEvalResult> {
    let s = c - a - b;
    if s.re <= 0.0 {
        return Err(Error::Domain(format!(
            "2F1 diverges at z = 1 when Re(c - a - b) = {} <= 0",
            s.re
        )));
    }
    let Some((ln, rel)) = gamma_ratio_ln([c, s], [c - a, c - b], Complex64::new(0.0, 0.0))? else {
        return Ok(zero_result());
    };
    let unit = ScaledEvalResult {
        value: Complex64::new(1.0, 0.0),
        abs_err: rel,
        ln_scale: 0.0,
        method: Method::Transform,
    };
    Ok(unit.times_exp(ln))
}

/// Maclaurin series. Stops after three consecutive terms fall below
/// `1e-16 |partial sum|`. Terms and sum are rescaled as they grow so that
/// sums whose coefficient is tiny stay representable.
fn series(a: Complex64, b: Complex64, c: Complex64, z: f64) -> Result<ScaledEvalResult> {
    const RESCALE_AT: f64 = 1e200;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut abs_sum = 1.0;
    let mut ln_scale = 0.0;
    let mut small_run = 0;
    for n in 0..SERIES_MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        let t = term.norm();
        abs_sum += t;
        if !(t.is_finite() && abs_sum.is_finite()) {
            break;
        }
        if abs_sum > RESCALE_AT {
            term /= RESCALE_AT;
            sum /= RESCALE_AT;
            abs_sum /= RESCALE_AT;
            ln_scale += RESCALE_AT.ln();
            continue;
        }
        if t <= SERIES_REL_STOP * sum.norm() {
            small_run += 1;
            if small_run == 3 {
                // Tail of a series with ratio <= |z| after the last term.
                let tail = t * z.abs() / (1.0 - z.abs()).max(1e-3);
                return Ok(ScaledEvalResult {
                    value: sum,
                    abs_err: tail + 4.0 * f64::EPSILON * abs_sum,
                    ln_scale,
                    method: Method::Series,
                }
                .normalized());
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence {
        context: "2F1 Maclaurin series",
        partial: sum,
        abs_err: term.norm(),
        iterations: SERIES_MAX_TERMS,
    })
}

/// `2F1(a,b;c;z) = (1 - z)^{-a} 2F1(a, c - b; c; z / (z - 1))` for `z < 0`.
fn pfaff(a: Complex64, b: Complex64, c: Complex64, z: f64, ctx: Ctx) -> Result<ScaledEvalResult> {
    let w = z / (z - 1.0);
    let inner = eval(a, c - b, c, w, CutSide::Principal, ctx)?;
    let mut out = inner.times_exp(-a * (1.0 - z).ln());
    out.method = Method::Transform;
    Ok(out)
}

fn near_integer(w: Complex64) -> bool {
    w.im.abs() < DEGENERACY_GAP && (w.re - w.re.round()).abs() < DEGENERACY_GAP
}

/// Connection formula around `z = 1`, valid for `0 < z < 2`. For `z > 1` the
/// factor `(1 - z)^{c-a-b}` carries the branch.
fn one_minus_z(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    z: f64,
    side: CutSide,
    ctx: Ctx,
) -> Result<ScaledEvalResult> {
    let s = c - a - b;
    if near_integer(s) {
        return degenerate_fallback(a, b, c, z, side);
    }
    let w = 1.0 - z;
    let ln_w = if w > 0.0 {
        Complex64::new(w.ln(), 0.0)
    } else {
        side.negative_base_ln(w)
    };
    let k1 = gamma_ratio_ln([c, s], [c - a, c - b], Complex64::new(0.0, 0.0))?;
    let k2 = gamma_ratio_ln([c, -s], [a, b], s * ln_w)?;
    let f1 = match k1 {
        Some(_) => Some(eval(a, b, 1.0 - s, w, CutSide::Principal, ctx.deeper())?),
        None => None,
    };
    let f2 = match k2 {
        Some(_) => Some(eval(
            c - a,
            c - b,
            1.0 + s,
            w,
            CutSide::Principal,
            ctx.deeper(),
        )?),
        None => None,
    };
    Ok(combine(k1.zip(f1), k2.zip(f2)))
}

/// `ln(Gamma(n0) Gamma(n1) / (Gamma(d0) Gamma(d1))) + extra`, with a relative
/// error bound for its exponential that grows with the size of the
/// logarithms being summed. `None` when a denominator argument is a pole,
/// so that the ratio vanishes.
fn gamma_ratio_ln(
    num: [Complex64; 2],
    den: [Complex64; 2],
    extra: Complex64,
) -> Result<Option<(Complex64, f64)>> {
    if den.iter().any(|&d| is_nonpositive_integer(d)) {
        return Ok(None);
    }
    let terms = [
        ln_gamma_c(num[0])?,
        ln_gamma_c(num[1])?,
        -ln_gamma_c(den[0])?,
        -ln_gamma_c(den[1])?,
        extra,
    ];
    let ln: Complex64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.norm()).sum();
    Ok(Some((ln, GAMMA_REL_ERR + 4.0 * f64::EPSILON * scale)))
}

/// Connection formula around `z = infinity` for `z > 1`; the factors
/// `(-z)^{-a}`, `(-z)^{-b}` carry the branch.
fn one_over_z(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    z: f64,
    side: CutSide,
    quadrature: bool,
) -> Result<ScaledEvalResult> {
    if near_integer(a - b) {
        return degenerate_fallback(a, b, c, z, side);
    }
    // -(z + i0) = z e^{-i pi}
    let log_minus_z = Complex64::new(z.ln(), -side.sign() * PI);
    let k1 = gamma_ratio_ln([c, b - a], [b, c - a], -a * log_minus_z)?;
    let k2 = gamma_ratio_ln([c, a - b], [a, c - b], -b * log_minus_z)?;
    let inv = 1.0 / z;
    let f1 = match k1 {
        Some(_) => Some(series_best(a, a - c + 1.0, a - b + 1.0, inv, quadrature)?),
        None => None,
    };
    let f2 = match k2 {
        Some(_) => Some(series_best(b, b - c + 1.0, b - a + 1.0, inv, quadrature)?),
        None => None,
    };
    Ok(combine(k1.zip(f1), k2.zip(f2)))
}

/// Connection formula in `1 / (1 - z)` for `z < 0`. Pairs large parameters
/// in numerator and denominator, so the inner series do not cancel when the
/// direct and Pfaff series do.
fn one_over_one_minus_z(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    z: f64,
    quadrature: bool,
) -> Result<ScaledEvalResult> {
    if near_integer(a - b) {
        return Err(Error::Domain(format!(
            "1/(1-z) connection formula is degenerate for a - b = {}",
            a - b
        )));
    }
    let ln_1mz = Complex64::new((1.0 - z).ln(), 0.0);
    let k1 = gamma_ratio_ln([c, b - a], [b, c - a], -a * ln_1mz)?;
    let k2 = gamma_ratio_ln([c, a - b], [a, c - b], -b * ln_1mz)?;
    let w = 1.0 / (1.0 - z);
    let f1 = match k1 {
        Some(_) => Some(series_best(a, c - b, a - b + 1.0, w, quadrature)?),
        None => None,
    };
    let f2 = match k2 {
        Some(_) => Some(series_best(b, c - a, b - a + 1.0, w, quadrature)?),
        None => None,
    };
    Ok(combine(k1.zip(f1), k2.zip(f2)))
}

fn zero_result() -> ScaledEvalResult {
    ScaledEvalResult {
        value: Complex64::new(0.0, 0.0),
        abs_err: 0.0,
        ln_scale: 0.0,
        method: Method::Series,
    }
}

/// A connection coefficient `(ln k, rel_err)` with its hypergeometric factor.
type Term = ((Complex64, f64), ScaledEvalResult);

/// `k1 f1 + k2 f2`; an absent term is zero. Both terms are brought to the
/// larger of their scales before adding.
fn combine(t1: Option<Term>, t2: Option<Term>) -> ScaledEvalResult {
    let terms: Vec<(ScaledEvalResult, f64)> = [t1, t2]
        .into_iter()
        .flatten()
        .map(|((l, rel), f)| (f.times_exp(l), rel))
        .collect();
    let Some(scale) = terms.iter().map(|(t, _)| t.ln_scale).reduce(f64::max) else {
        return zero_result();
    };
    let mut out = ScaledEvalResult {
        value: Complex64::new(0.0, 0.0),
        abs_err: 0.0,
        ln_scale: scale,
        method: Method::Transform,
    };
    for (t, rel) in terms {
        let f = (t.ln_scale - scale).exp();
        let v = t.value * f;
        out.value += v;
        out.abs_err += t.abs_err * f + rel * v.norm();
    }
    out.normalized()
}

fn degenerate_fallback(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    z: f64,
    side: CutSide,
) -> Result<ScaledEvalResult> {
    let input = Hyp2F1Input::new(a, b, c, z).with_side(side);
    if euler_applicable(a, b, c, z) {
        return hyp2f1_euler_quadrature(input).map(ScaledEvalResult::unscaled);
    }
    let swapped = Hyp2F1Input::new(b, a, c, z).with_side(side);
    if euler_applicable(b, a, c, z) {
        return hyp2f1_euler_quadrature(swapped).map(ScaledEvalResult::unscaled);
    }
    if z.abs() <= SERIES_FALLBACK_RADIUS {
        return series(a, b, c, z);
    }
    Err(Error::Domain(format!(
        "2F1({a}, {b}; {c}; {z}) sits on a degenerate connection formula and the Euler integral does not apply"
    )))
}

fn euler_applicable(a: Complex64, b: Complex64, c: Complex64, z: f64) -> bool {
    let base = c.re > b.re && b.re > 0.0;
    if z > 1.0 {
        base && a.re < 1.0
    } else if z == 1.0 {
        base && (c - a - b).re > 0.0
    } else {
        base
    }
}

/// Evaluates `2F1` from the Euler integral
/// `Gamma(c) / (Gamma(b) Gamma(c-b)) \int_0^1 t^{b-1} (1-t)^{c-b-1} (1-zt)^{-a} dt`.
///
/// Requires `Re c > Re b > 0`. For `z > 1` the factor `1 - z t` changes sign
/// at `t = 1/z`, which additionally needs `Re a < 1`; past that point the
/// power is taken on the side selected by `cut_side`.
pub fn hyp2f1_euler_quadrature(input: Hyp2F1Input) -> Result<EvalResult> {
    euler_quadrature_with(
        input,
        Quadrature::new(0.0, 1e-10).with_max_intervals(20_000),
    )
}

pub(crate) fn euler_quadrature_with(input: Hyp2F1Input, quad: Quadrature) -> Result<EvalResult> {
    input.validate()?;
    let Hyp2F1Input {
        a,
        b,
        c,
        z,
        cut_side,
    } = input;
    if !(c.re > b.re && b.re > 0.0) {
        return Err(Error::Domain(format!(
            "Euler integral needs Re c > Re b > 0 (b = {b}, c = {c})"
        )));
    }
    if z > 1.0 && a.re >= 1.0 {
        return Err(Error::Domain(format!(
            "Euler integral for z > 1 needs Re a < 1 (a = {a})"
        )));
    }
    if z == 1.0 && (c - a - b).re <= 0.0 {
        return Err(Error::Domain("Euler integral diverges at z = 1".into()));
    }

    let pb = b - 1.0;
    let pcb = c - b - 1.0;
    let prefactor = gamma_c(c)? * rgamma_c(b) * rgamma_c(c - b);

    let result = if z <= 1.0 {
        let right_decay = if z == 1.0 { (c - a - b).re } else { (c - b).re };
        quad.integrate_endpoint_singular(
            |t, dl, dr| {
                let base = if z == 1.0 { dr } else { 1.0 - z * t };
                let log = pb * dl.ln() + pcb * dr.ln() - a * base.ln();
                log.exp()
            },
            0.0,
            1.0,
            b.re,
            right_decay,
        )?
    } else {
        let t0 = 1.0 / z;
        let lower = quad.integrate_endpoint_singular(
            |t, dl, dr| {
                // 1 - z t = z (t0 - t) > 0
                let log = pb * dl.ln() + pcb * (1.0 - t).ln() - a * (z * dr).ln();
                log.exp()
            },
            0.0,
            t0,
            b.re,
            1.0 - a.re,
        )?;
        let upper = quad.integrate_endpoint_singular(
            |t, dl, dr| {
                let log = pb * t.ln() + pcb * dr.ln();
                log.exp() * cut_side.negative_base_pow(-z * dl, -a)
            },
            t0,
            1.0,
            1.0 - a.re,
            (c - b).re,
        )?;
        crate::quad::QuadResult {
            value: lower.value + upper.value,
            abs_err: lower.abs_err + upper.abs_err,
            evals: lower.evals + upper.evals,
        }
    };

    let value = prefactor * result.value;
    Ok(EvalResult {
        value,
        abs_err: prefactor.norm() * result.abs_err + GAMMA_REL_ERR * value.norm(),
        method: Method::Quadrature,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn zero_argument_is_one() {
        let r = hyp2f1(Hyp2F1Input::new(
            cx(3.0, -2.0),
            cx(0.1, 4.0),
            cx(-1.5, 0.5),
            0.0,
        ))
        .unwrap();
        assert_eq!(r.value, cx(1.0, 0.0));
        let q = hyp2f1_euler_quadrature(Hyp2F1Input::new(
            cx(3.0, -2.0),
            cx(0.5, 1.0),
            cx(1.5, 0.5),
            0.0,
        ))
        .unwrap();
        assert!((q.value - 1.0).norm() < 1e-12);
    }

    #[test]
    fn log_identity() {
        let want = cx(2.0 * 2f64.ln(), 0.0);
        let input = Hyp2F1Input::new(cx(1.0, 0.0), cx(1.0, 0.0), cx(2.0, 0.0), 0.5);
        assert!(rel(hyp2f1(input).unwrap().value, want) < 1e-15);
        assert!(rel(hyp2f1_euler_quadrature(input).unwrap().value, want) < 1e-11);
    }

    #[test]
    fn gauss_summation_example() {
        let got = hyp2f1(Hyp2F1Input::new(
            cx(0.5, 0.0),
            cx(0.25, 0.0),
            cx(2.0, 0.0),
            1.0,
        ))
        .unwrap();
        let g = |x: f64| gamma_c(cx(x, 0.0)).unwrap();
        let want = g(2.0) * g(1.25) / (g(1.5) * g(1.75));
        assert!(rel(got.value, want) < 1e-13);
        assert!(matches!(
            hyp2f1(Hyp2F1Input::new(
                cx(1.0, 0.0),
                cx(1.0, 0.0),
                cx(1.5, 0.0),
                1.0
            )),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn poles_in_c_rejected() {
        for c in [0.0, -2.0] {
            let input = Hyp2F1Input::new(cx(0.3, 0.0), cx(0.2, 0.0), cx(c, 0.0), 0.3);
            assert!(matches!(hyp2f1(input), Err(Error::Domain(_))));
            assert!(matches!(
                hyp2f1_euler_quadrature(input),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn euler_preconditions() {
        let bad_b = Hyp2F1Input::new(cx(0.3, 0.0), cx(-0.2, 0.0), cx(1.0, 0.0), 0.3);
        assert!(matches!(
            hyp2f1_euler_quadrature(bad_b),
            Err(Error::Domain(_))
        ));
        let bad_a = Hyp2F1Input::new(cx(1.2, 0.0), cx(0.5, 0.0), cx(1.0, 0.0), 1.5);
        assert!(matches!(
            hyp2f1_euler_quadrature(bad_a),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn table_tuple_series_vs_quadrature() {
        let input = Hyp2F1Input::new(cx(1.0, -0.5556), cx(0.5, -0.05), cx(1.0, -0.6106), 0.1);
        let s = hyp2f1(input).unwrap();
        let q = hyp2f1_euler_quadrature(input).unwrap();
        assert_eq!(s.method, Method::Series);
        assert!(rel(s.value, q.value) < 1e-10);
        // 30-digit reference
        let want = cx(1.052_955_545_616_672_9, -0.003_140_683_932_353_064_8);
        assert!(rel(s.value, want) < 1e-14);
    }

    /// High-precision references on the real line for a = 0.3 - 1.2i,
    /// b = -0.7 + 0.4i, c = 1.1 + 0.5i.
    #[test]
    fn reference_values_every_region() {
        let a = cx(0.3, -1.2);
        let b = cx(-0.7, 0.4);
        let c = cx(1.1, 0.5);
        let cases = [
            (
                -3.7,
                CutSide::Principal,
                cx(-0.361_896_754_708_626_55, -1.415_240_809_446_499_6),
            ),
            (
                -0.8,
                CutSide::Principal,
                cx(0.628_065_772_211_095_7, -0.438_249_286_432_079_74),
            ),
            (
                0.7,
                CutSide::Principal,
                cx(1.461_362_410_629_948, 0.511_947_884_040_140_3),
            ),
            (
                0.95,
                CutSide::Principal,
                cx(1.717_882_987_106_197_2, 0.721_554_884_502_068),
            ),
            (
                1.3,
                CutSide::AboveCut,
                cx(2.706_940_612_775_024_5, 1.701_355_437_547_421),
            ),
            (
                1.3,
                CutSide::BelowCut,
                cx(2.153_088_115_450_575, 0.919_559_845_044_901_7),
            ),
            (
                2.5,
                CutSide::AboveCut,
                cx(-0.554_516_362_225_447_5, 4.559_020_445_994_498),
            ),
            (
                2.5,
                CutSide::BelowCut,
                cx(3.637_297_574_250_520_7, 1.148_976_390_284_639_5),
            ),
            (
                7.0,
                CutSide::AboveCut,
                cx(-3.944_593_392_148_743, 0.731_407_019_293_454_7),
            ),
            (
                7.0,
                CutSide::BelowCut,
                cx(8.095_811_015_317_955, -0.000_781_931_547_466_919_5),
            ),
        ];
        for (z, side, want) in cases {
            let got = hyp2f1(Hyp2F1Input::new(a, b, c, z).with_side(side)).unwrap();
            assert!(
                rel(got.value, want) < 1e-12,
                "z = {z} {side:?}: {} vs {want}",
                got.value
            );
            assert!(got.abs_err < 1e-10 * want.norm());
        }
    }

    #[test]
    fn principal_is_below_cut() {
        let input = Hyp2F1Input::new(cx(0.3, -1.2), cx(-0.7, 0.4), cx(1.1, 0.5), 2.5);
        let p = hyp2f1(input).unwrap().value;
        let below = hyp2f1(input.with_side(CutSide::BelowCut)).unwrap().value;
        assert_eq!(p, below);
    }

    #[test]
    fn branch_dependent_magnitude_above_one() {
        let a = cx(0.5, 0.1);
        let input = Hyp2F1Input::new(a, a, cx(1.5, 0.0), 1.5);
        let above = hyp2f1_euler_quadrature(input.with_side(CutSide::AboveCut)).unwrap();
        let below = hyp2f1_euler_quadrature(input.with_side(CutSide::BelowCut)).unwrap();
        assert!((above.value.norm() - below.value.norm()).abs() > 0.1);
        assert!(
            rel(
                above.value,
                cx(1.024_597_489_594_864_6, 0.518_130_870_998_586_05)
            ) < 1e-10
        );
        assert!(
            rel(
                below.value,
                cx(1.629_027_793_825_937_2, -0.460_616_538_104_540_43)
            ) < 1e-10
        );
        // Same values from the connection formulas.
        let t_above = hyp2f1(input.with_side(CutSide::AboveCut)).unwrap();
        let t_below = hyp2f1(input.with_side(CutSide::BelowCut)).unwrap();
        assert!(rel(t_above.value, above.value) < 1e-10);
        assert!(rel(t_below.value, below.value) < 1e-10);
    }

    #[test]
    fn degenerate_connection_uses_quadrature() {
        // c - a - b = 1 exactly: the 1 - z formula is singular.
        let input = Hyp2F1Input::new(cx(0.25, 0.3), cx(0.5, -0.2), cx(1.75, 0.1), 0.97);
        let r = hyp2f1(input).unwrap();
        assert_eq!(r.method, Method::Quadrature);
        // Direct summation still converges at z = 0.97.
        let s = hyp2f1_series(input).unwrap();
        assert!(rel(r.value, s.value) < 1e-9);
    }

    #[test]
    fn terminating_series() {
        // 2F1(-2, b; c; z) = 1 - 2 b z / c + b (b+1) z^2 / (c (c+1))
        let b = cx(0.7, 0.2);
        let c = cx(1.3, -0.4);
        for z in [-4.0, -0.3, 0.4, 0.8, 1.7, 3.0] {
            let got = hyp2f1(Hyp2F1Input::new(cx(-2.0, 0.0), b, c, z))
                .unwrap()
                .value;
            let want = 1.0 - 2.0 * b * z / c + b * (b + 1.0) * z * z / (c * (c + 1.0));
            assert!(rel(got, want) < 1e-12, "z = {z}: {got} vs {want}");
        }
    }

    #[test]
    fn scaled_result_beyond_double_range() {
        // 2F1(a, b; b; z) = (1 - z)^{-a}; below the cut at z = 2 this is
        // exp(-i pi a), of magnitude e^{300 pi} for Im a = 300.
        let a = cx(1.0, 300.0);
        let b = cx(0.5, 0.3);
        let input = Hyp2F1Input::new(a, b, b, 2.0);
        assert!(matches!(hyp2f1(input), Err(Error::Domain(_))));
        let r = hyp2f1_scaled(input).unwrap();
        let want = -Complex64::i() * PI * a;
        assert!(
            (r.ln_norm() - want.re).abs() < 1e-9 * want.re,
            "{} vs {}",
            r.ln_norm(),
            want.re
        );
        let phase = r.value / r.value.norm();
        assert!(
            (phase - Complex64::from_polar(1.0, want.im)).norm() < 1e-9,
            "{phase}"
        );
        assert!(r.rel_err() < 1e-9);
    }

    // References computed at 40 digits with an arbitrary-precision library.
    type Cx = (f64, f64);
    const SUBTRACTED_CASES: [(Cx, Cx, Cx, f64, Cx); 4] = [
        (
            (0.5, -3641.9833284397187),
            (0.5, 0.0),
            (1.5, 0.9358171294452096),
            0.09317996757611237,
            (0.055648184941541954619, -0.020456544059145746996),
        ),
        (
            (0.5, 0.0),
            (0.5, 1709.1651560469413),
            (0.5, -28.22233290175261),
            0.6726957427824245,
            (0.15478381815064891524, -0.00063133092972718049637),
        ),
        (
            (0.5, 0.0),
            (2.0, 3.0),
            (0.5, 0.7),
            0.4,
            (2.832172628291078124, 0.99370674978362347029),
        ),
        (
            (0.7, 0.2),
            (0.5, -400.0),
            (1.2, -0.3),
            -0.8,
            (0.008290043933513083307, -0.024582271369772560167),
        ),
    ];

    #[test]
    fn subtracted_euler_integral_matches_reference() {
        for (a, b, c, z, want) in SUBTRACTED_CASES {
            let (a, b, c, want) = (cx(a.0, a.1), cx(b.0, b.1), cx(c.0, c.1), cx(want.0, want.1));
            let r = euler_subtracted(a, b, c, z).unwrap().to_eval().unwrap();
            assert!(rel(r.value, want) < 1e-7, "z = {z}: {} vs {want}", r.value);
        }
    }

    #[test]
    fn cancelling_parameters_match_reference() {
        for (a, b, c, z, want) in SUBTRACTED_CASES {
            let (a, b, c, want) = (cx(a.0, a.1), cx(b.0, b.1), cx(c.0, c.1), cx(want.0, want.1));
            let r = hyp2f1(Hyp2F1Input::new(a, b, c, z)).unwrap();
            let err = (r.value - want).norm();
            assert!(err < 1e-7 * want.norm(), "z = {z}: {} vs {want}", r.value);
            assert!(
                err <= r.abs_err.max(1e-14 * want.norm()),
                "bound {} < {err}",
                r.abs_err
            );
        }
    }
}
