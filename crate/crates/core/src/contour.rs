//! Contour-integral solutions of the amplitude equations, evaluated by
//! direct quadrature.
//!
//! With `a = tau b0` and `t = tau^2 / 2` the equations become
//!
//! ```text
//! i b0' = [(k2 - i) b0 + g1 b1 + g2 b2] / (2t)
//! i bj' = gj b0 + betaj bj
//! ```
//!
//! and are solved by `b0 = int e^{-iut} B(u) du`, `bj = gj int e^{-iut} B(u) / (u - betaj) du`
//! with `B(u) = u^alpha (u - beta1)^xi1 (u - beta2)^xi2`. Every power has its
//! cut running from the branch point to `-i inf`, i.e. `arg(u - c)` lies in
//! `(-pi/2, 3pi/2)`. The contour `gamma_j` wraps the cut below branch point
//! `c_j` (`c_0 = 0`, `c_j = beta_j`) counterclockwise.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{h_factor, shorthands, HFactor, ModelParams, SlopeCase};
use crate::propagator::StateVector;
use crate::quad::{exp_breakpoints, QuadResult, Quadrature};
use crate::special::{gamma_c, hyp2f1, CutSide, Hyp2F1Input};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `(alpha, xi1, xi2)` in the caller's labeling.
pub fn exponents(params: &ModelParams) -> (Complex64, Complex64, Complex64) {
    let r = params.raw();
    let x1 = r.g1 * r.g1 / (2.0 * r.b1);
    let x2 = r.g2 * r.g2 / (2.0 * r.b2);
    (
        Complex64::new(-0.5, r.k2 / 2.0 - x1 - x2),
        Complex64::new(0.0, x1),
        Complex64::new(0.0, x2),
    )
}

/// Integrand `x^alpha (x - i beta1)^(xi1 + shift1) (x - i beta2)^(xi2 + shift2)`
/// of the real-axis integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourIntegrand {
    pub alpha: Complex64,
    pub xi1: Complex64,
    pub xi2: Complex64,
    pub beta1: f64,
    pub beta2: f64,
    pub shift1: i32,
    pub shift2: i32,
}

impl ContourIntegrand {
    pub fn new(params: &ModelParams, shift1: i32, shift2: i32) -> Result<Self> {
        let (alpha, xi1, xi2) = exponents(params);
        let r = params.raw();
        let s = Self {
            alpha,
            xi1,
            xi2,
            beta1: r.b1,
            beta2: r.b2,
            shift1,
            shift2,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.shift1, self.shift2]
            .iter()
            .all(|s| *s == 0 || *s == -1)
        {
            return Err(Error::InvalidParams("shifts must be 0 or -1".into()));
        }
        if self.alpha.re != -0.5 || self.xi1.re != 0.0 || self.xi2.re != 0.0 {
            return Err(Error::InvalidParams(
                "need Re alpha = -1/2 and purely imaginary xi".into(),
            ));
        }
        Ok(())
    }

    fn mu1(&self) -> Complex64 {
        self.xi1 + self.shift1 as f64
    }

    fn mu2(&self) -> Complex64 {
        self.xi2 + self.shift2 as f64
    }
}

/// `J = int_0^inf x^alpha (x - i beta1)^mu1 (x - i beta2)^mu2 dx` on
/// principal branches, by quadrature in `s = ln x`.
///
/// On the positive axis `|(x - i beta)^xi|` climbs to `e^{pi |xi| / 2}` and
/// the result comes from heavy cancellation. When both slopes share a sign
/// the branch points `i beta_j` lie on one side, so the path is rotated onto
/// the ray `x = -i sgn(beta) r`, where the integrand has constant phase
/// apart from slow oscillation in `ln r`.
pub fn real_axis_integral(integrand: &ContourIntegrand) -> Result<QuadResult> {
    integrand.validate()?;
    let (alpha, mu1, mu2) = (integrand.alpha, integrand.mu1(), integrand.mu2());
    let total = alpha + mu1 + mu2;
    let right_rate = -(total.re + 1.0);
    if right_rate <= 0.0 {
        return Err(Error::Domain(
            "real-axis integral diverges: need Re(alpha + mu1 + mu2) < -1".into(),
        ));
    }
    let left_rate = alpha.re + 1.0;
    let (lo, hi) = (-41.0 / left_rate, 41.0 / right_rate);
    let n = (hi - lo).ceil() as usize;
    let pts: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    let (b1, b2) = (integrand.beta1, integrand.beta2);
    let quad = Quadrature::new(0.0, 1e-10).with_max_intervals(20_000);

    if b1 * b2 > 0.0 {
        // x = e^{-i sigma pi/2} r with sigma = sgn(beta): every base
        // x, x - i beta has argument -sigma pi/2 along the ray.
        let sigma = b1.signum();
        let (m1, m2) = (b1.abs(), b2.abs());
        let f = |s: f64| {
            let r = s.exp();
            ((alpha + 1.0) * s + mu1 * (r + m1).ln() + mu2 * (r + m2).ln()).exp()
        };
        let ray = quad.integrate(f, &pts)?;
        let rot = (-I * sigma * PI / 2.0 * (total + 1.0)).exp();
        return Ok(QuadResult {
            value: rot * ray.value,
            abs_err: ray.abs_err,
            evals: ray.evals,
        });
    }

    let f = |s: f64| {
        let x = s.exp();
        let l1 = Complex64::new(x, -b1).ln();
        let l2 = Complex64::new(x, -b2).ln();
        ((alpha + 1.0) * s + mu1 * l1 + mu2 * l2).exp()
    };
    Quadrature::new(0.0, 1e-9)
        .with_max_intervals(20_000)
        .integrate(f, &pts)
}

/// The same integral through `Gamma` functions and `2F1`, valid for slopes
/// of equal sign:
/// `A^(alpha+1+mu1) B^mu2 Beta(alpha+1, -alpha-1-mu1-mu2) 2F1(-mu2, alpha+1; -mu1-mu2; 1 - A/B)`
/// with `A = -i beta1`, `B = -i beta2`.
pub fn real_axis_closed_form(integrand: &ContourIntegrand) -> Result<Complex64> {
    integrand.validate()?;
    if integrand.beta1 * integrand.beta2 <= 0.0 {
        return Err(Error::Domain(
            "closed form needs slopes of equal sign".into(),
        ));
    }
    let (alpha, mu1, mu2) = (integrand.alpha, integrand.mu1(), integrand.mu2());
    let a = Complex64::new(0.0, -integrand.beta1);
    let b = Complex64::new(0.0, -integrand.beta2);
    let p = alpha + 1.0;
    let q = -alpha - 1.0 - mu1 - mu2;
    let beta_fn = gamma_c(p)? * gamma_c(q)? / gamma_c(p + q)?;
    let z = 1.0 - integrand.beta1 / integrand.beta2;
    let f = hyp2f1(Hyp2F1Input::new(-mu2, p, -mu1 - mu2, z).with_side(CutSide::Principal))?;
    Ok(a.powc(p + mu1) * b.powc(mu2) * beta_fn * f.value)
}

fn require_case1(params: &ModelParams) -> Result<()> {
    if params.case() != SlopeCase::BothPositive {
        return Err(Error::Domain(format!(
            "only defined for beta2 > beta1 > 0, got {}",
            params.case()
        )));
    }
    Ok(())
}

/// `|Q|^2 = 1 / (4 pi [e^{pi (k2 - q1 - q2)} + 1])` for the slope case
/// `beta2 > beta1 > 0`.
pub fn normalization_q2(params: &ModelParams) -> Result<f64> {
    require_case1(params)?;
    let s = shorthands(params);
    Ok(1.0 / (4.0 * PI * ((PI * (params.k2() - s.q1 - s.q2)).exp() + 1.0)))
}

/// `|I|^2` two ways for the transition from level 1 to level 0 (normalized
/// labels): quadrature of the reduced contour integral, and the closed form
/// built from `H10`. Returns `(lhs, rhs)`.
pub fn i_squared_identity(params: &ModelParams) -> Result<(f64, f64)> {
    require_case1(params)?;
    let (k2, g1, g2, b1, b2) = (
        params.k2(),
        params.g1(),
        params.g2(),
        params.beta1(),
        params.beta2(),
    );
    let x1 = g1 * g1 / (2.0 * b1);
    let x2 = g2 * g2 / (2.0 * b2);
    let integrand = ContourIntegrand {
        alpha: Complex64::new(-0.5, k2 / 2.0 - x1 - x2),
        xi1: Complex64::new(0.0, x1),
        xi2: Complex64::new(0.0, x2),
        beta1: b1,
        beta2: b2,
        shift1: -1,
        shift2: 0,
    };
    let j = real_axis_integral(&integrand)?.value;
    let alpha = integrand.alpha;
    let total = alpha + integrand.xi1 + integrand.xi2;
    let i_pow = (I * PI / 2.0 * total).exp();
    let lhs = (i_pow * (1.0 - (-2.0 * PI * I * alpha).exp()) * j).norm_sqr();

    let s = shorthands(params);
    let sum_q = s.q1 + s.q2;
    let ratio = if sum_q == 0.0 {
        PI
    } else {
        -(-PI * sum_q).exp_m1() / sum_q
    };
    let h10 = h_factor(HFactor::H10, params, CutSide::Principal)?.value;
    let rhs = 4.0 * PI * ratio * h10 * ((PI * (k2 - sum_q)).exp() + 1.0) / (b2 * (1.0 + s.kappa));
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contour {
    Gamma0,
    Gamma1,
    Gamma2,
}

impl Contour {
    pub const ALL: [Contour; 3] = [Contour::Gamma0, Contour::Gamma1, Contour::Gamma2];

    pub fn index(self) -> usize {
        match self {
            Contour::Gamma0 => 0,
            Contour::Gamma1 => 1,
            Contour::Gamma2 => 2,
        }
    }
}

/// Values of `(b0, b1, b2)` at transformed time `t` (unnormalized).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeTriple {
    pub b0: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
    pub t: f64,
}

impl AmplitudeTriple {
    pub fn tau(&self) -> f64 {
        (2.0 * self.t).sqrt()
    }

    /// Amplitudes of the original equations, `(tau b0, b1, b2)` at
    /// `tau = sqrt(2t)`.
    pub fn physical(&self) -> StateVector {
        StateVector {
            amp0: self.tau() * self.b0,
            amp1: self.b1,
            amp2: self.b2,
        }
    }
}

/// `w^e` with the cut of `w` along the negative imaginary axis.
fn pow_down_cut(w: Complex64, e: Complex64) -> Complex64 {
    let mut arg = w.im.atan2(w.re);
    if arg < -PI / 2.0 {
        arg += 2.0 * PI;
    }
    (e * Complex64::new(w.norm().ln(), arg)).exp()
}

/// `(1 - e^{2 pi i w}) / w`, continuous at `w = 0`.
fn loop_factor(w: Complex64) -> Complex64 {
    let x = 2.0 * PI * I * w;
    if w.norm() < 1e-3 {
        -2.0 * PI * I * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0)
    } else {
        (1.0 - x.exp()) / w
    }
}

/// Evaluates the three amplitude integrals along contour `gamma_j` at `t`.
///
/// Each is the jump across the cut, `i e^{-i pi nu/2} (1 - e^{2 pi i nu}) int_0^inf y^nu h(y) dy`
/// with `u = c_j - i y`, `h = e^{-iut} * (remaining factors)`, and `nu`
/// the exponent of `u - c_j`. The `y` integral is continued to
/// `Re nu > -2` by one integration by parts and truncated at `y = 40/t`.
pub fn contour_amplitudes(
    params: &ModelParams,
    contour: Contour,
    t: f64,
) -> Result<AmplitudeTriple> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "contour amplitudes need t > 0, got {t}"
        )));
    }
    let (alpha, xi1, xi2) = exponents(params);
    let r = params.raw();
    let points = [0.0, r.b1, r.b2];
    let couplings = [1.0, r.g1, r.g2];
    let j = contour.index();
    let c = points[j];
    let depth = 40.0 / t;
    let quad = Quadrature::new(0.0, 1e-11).with_max_intervals(20_000);

    let mut out = [Complex64::new(0.0, 0.0); 3];
    for m in 0..3 {
        let mut e = [alpha, xi1, xi2];
        if m > 0 {
            e[m] -= 1.0;
        }
        let nu = e[j];
        let others: Vec<(f64, Complex64)> = (0..3)
            .filter(|&i| i != j)
            .map(|i| (points[i], e[i]))
            .collect();
        let h = |y: f64| -> (Complex64, Complex64) {
            let u = Complex64::new(c, -y);
            let mut val = (-I * u * t).exp();
            let mut log_deriv = Complex64::new(0.0, 0.0);
            for &(ci, ei) in &others {
                val *= pow_down_cut(u - ci, ei);
                log_deriv += ei / (u - ci);
            }
            // d/dy = -i d/du
            (val, val * (-t - I * log_deriv))
        };
        let w = nu + 1.0;
        // int_0^D y^w h'(y) dy with y = D e^{-x}
        let integrand = |x: f64| {
            let y = depth * (-x).exp();
            let (_, dh) = h(y);
            (w * y.ln()).exp() * dh * y
        };
        let ibp = quad
            .integrate(integrand, &exp_breakpoints(w.re + 1.0))?
            .value;
        let boundary = (w * depth.ln()).exp() * h(depth).0;
        let jump = I * (-I * PI * nu / 2.0).exp() * loop_factor(w) * (boundary - ibp);
        out[m] = couplings[m] * jump;
    }
    Ok(AmplitudeTriple {
        b0: out[0],
        b1: out[1],
        b2: out[2],
        t,
    })
}

/// Right-hand side of the transformed equations, `d/dt (b0, b1, b2)`.
pub fn transformed_rhs(params: &ModelParams, amps: &AmplitudeTriple) -> [Complex64; 3] {
    let r = params.raw();
    let t = amps.t;
    [
        -I * (Complex64::new(r.k2, -1.0) * amps.b0 + r.g1 * amps.b1 + r.g2 * amps.b2) / (2.0 * t),
        -I * (r.g1 * amps.b0 + r.b1 * amps.b1),
        -I * (r.g2 * amps.b0 + r.b2 * amps.b2),
    ]
}

/// Relative distance `min_phi |x - e^{i phi} y| / |y|` between two states.
pub fn phase_aligned_distance(x: &StateVector, y: &StateVector) -> f64 {
    let (xa, ya) = (x.to_array(), y.to_array());
    let overlap: Complex64 = xa.iter().zip(&ya).map(|(a, b)| a.conj() * b).sum();
    let phase = if overlap.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        overlap / overlap.norm()
    };
    let diff: f64 = xa
        .iter()
        .zip(&ya)
        .map(|(a, b)| (a * phase - b).norm_sqr())
        .sum();
    (diff / y.norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::transition_matrix;
    use crate::propagator::{evolve_schrodinger, ComplexCouplingModel};

    fn reference_set() -> ModelParams {
        ModelParams::new(0.1, 1.0, 0.7, 0.9, 1.0).unwrap()
    }

    fn weak() -> ModelParams {
        ModelParams::new(0.3, 0.2, 0.25, 0.8, 1.2).unwrap()
    }

    #[test]
    fn exponent_values() {
        let (a, x1, x2) = exponents(&ModelParams::new(0.0, 0.0, 0.0, 0.5, 1.0).unwrap());
        assert_eq!(
            (a, x1, x2),
            (
                Complex64::new(-0.5, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0)
            )
        );
        let (a, _, _) = exponents(&ModelParams::new(1.0, 0.0, 0.0, 0.5, 1.0).unwrap());
        assert_eq!(a, Complex64::new(-0.5, 0.5));
        let (a, x1, x2) = exponents(&reference_set());
        assert!((a.im - (0.05 - 0.555_555_555_555_555_6 - 0.245)).abs() < 1e-15);
        assert!((x1.im - 0.555_555_555_555_555_6).abs() < 1e-15);
        assert!((x2.im - 0.245).abs() < 1e-15);
    }

    #[test]
    fn elementary_real_axis_integral() {
        for b1 in [0.5, 1.0, 2.0] {
            let p = ModelParams::new(0.0, 0.0, 0.0, b1, 3.0).unwrap();
            let j = real_axis_integral(&ContourIntegrand::new(&p, -1, 0).unwrap()).unwrap();
            let exact = PI * Complex64::new(0.0, -b1).powf(-0.5);
            assert!(
                (j.value - exact).norm() < 1e-10 * exact.norm(),
                "{b1}: {} vs {exact}",
                j.value
            );
            assert!(j.abs_err <= 1e-8 * exact.norm());
        }
        let exact = PI * Complex64::from_polar(1.0, PI / 4.0);
        assert!((exact.re - 2.2214).abs() < 1e-4 && (exact.im - 2.2214).abs() < 1e-4);
    }

    #[test]
    fn real_axis_integral_matches_beta_times_hypergeometric() {
        for shifts in [(-1, 0), (0, -1), (-1, -1)] {
            let ig = ContourIntegrand::new(&reference_set(), shifts.0, shifts.1).unwrap();
            let q = real_axis_integral(&ig).unwrap().value;
            let c = real_axis_closed_form(&ig).unwrap();
            assert!((q - c).norm() < 1e-8 * c.norm(), "{shifts:?}: {q} vs {c}");
        }
    }

    #[test]
    fn rotated_and_axis_paths_agree() {
        // Equal-sign slopes take the rotated ray (either direction); mixed
        // signs stay on the axis.
        for (b1, b2) in [(0.4, 0.9), (-0.9, -0.4)] {
            let p = ModelParams::new(0.3, 0.4, 0.3, b1, b2).unwrap();
            let ig = ContourIntegrand::new(&p, -1, 0).unwrap();
            let q = real_axis_integral(&ig).unwrap().value;
            let c = real_axis_closed_form(&ig).unwrap();
            assert!((q - c).norm() < 1e-8 * c.norm(), "{b1} {b2}: {q} vs {c}");
        }
        let p = ModelParams::new(0.3, 0.4, 0.3, -0.4, 0.9).unwrap();
        let ig = ContourIntegrand::new(&p, -1, 0).unwrap();
        assert!(real_axis_integral(&ig).unwrap().value.norm().is_finite());
    }

    #[test]
    fn divergent_integrand_rejected() {
        let ig = ContourIntegrand::new(&reference_set(), 0, 0).unwrap();
        assert!(matches!(real_axis_integral(&ig), Err(Error::Domain(_))));
        assert!(ContourIntegrand::new(&reference_set(), 1, 0).is_err());
    }

    #[test]
    fn normalization_values() {
        let p = ModelParams::new(0.0, 0.0, 0.0, 0.5, 1.0).unwrap();
        assert!((normalization_q2(&p).unwrap() - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!((normalization_q2(&reference_set()).unwrap() - 0.078_871_4).abs() < 1e-7);
        let mixed = ModelParams::new(0.5, 0.5, 0.3, -0.15, 0.3).unwrap();
        assert!(matches!(normalization_q2(&mixed), Err(Error::Domain(_))));
    }

    #[test]
    fn i_squared_identity_and_p10() {
        let p = reference_set();
        let (lhs, rhs) = i_squared_identity(&p).unwrap();
        assert!((lhs - rhs).abs() <= 1e-6 * rhs, "{lhs} vs {rhs}");
        let p10 = transition_matrix(&p).unwrap().p[1][0];
        let via_q = normalization_q2(&p).unwrap() * p.g1() * p.g1() * lhs;
        assert!((via_q - p10).abs() <= 1e-6 * p10);
    }

    #[test]
    fn i_squared_small_coupling_limit() {
        let p = ModelParams::new(0.4, 1e-4, 0.6, 0.5, 0.9).unwrap();
        let (lhs, rhs) = i_squared_identity(&p).unwrap();
        assert!(lhs.is_finite() && rhs > 0.0);
        assert!((lhs - rhs).abs() <= 1e-6 * rhs);
    }

    #[test]
    fn loop_factor_is_continuous() {
        let at = loop_factor(Complex64::new(0.0, 0.0));
        assert_eq!(at, Complex64::new(0.0, -2.0 * PI));
        for w in [Complex64::new(0.0, 9.9e-4), Complex64::new(0.0, 1.01e-3)] {
            let direct = (1.0 - (2.0 * PI * I * w).exp()) / w;
            assert!((loop_factor(w) - direct).norm() < 1e-9);
        }
    }

    #[test]
    fn amplitudes_satisfy_transformed_equations() {
        let p = reference_set();
        for contour in Contour::ALL {
            for t in [1.5, 4.0] {
                let h = 1e-4;
                let mid = contour_amplitudes(&p, contour, t).unwrap();
                let up = contour_amplitudes(&p, contour, t + h).unwrap();
                let dn = contour_amplitudes(&p, contour, t - h).unwrap();
                let rhs = transformed_rhs(&p, &mid);
                let fd = [
                    (up.b0 - dn.b0) / (2.0 * h),
                    (up.b1 - dn.b1) / (2.0 * h),
                    (up.b2 - dn.b2) / (2.0 * h),
                ];
                let scale = mid.b0.norm() + mid.b1.norm() + mid.b2.norm();
                for k in 0..3 {
                    assert!(
                        (fd[k] - rhs[k]).norm() <= 1e-5 * scale,
                        "{contour:?} t={t} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn ode_continues_contour_solution() {
        let p = weak();
        let model = ComplexCouplingModel::from_params(&p);
        for contour in Contour::ALL {
            let start = contour_amplitudes(&p, contour, 2.0).unwrap();
            let end = contour_amplitudes(&p, contour, 8.0).unwrap();
            let evolved =
                evolve_schrodinger(&model, start.physical(), 2.0, 4.0, 1e-12, 1e-14).unwrap();
            let d = phase_aligned_distance(&evolved, &end.physical());
            assert!(d <= 1e-5, "{contour:?}: {d}");
            // Linearity: any complex multiple is still a solution.
            let s = Complex64::new(-0.3, 2.1);
            let scaled = StateVector::from_array(start.physical().to_array().map(|x| x * s));
            let evolved = evolve_schrodinger(&model, scaled, 2.0, 4.0, 1e-12, 1e-14).unwrap();
            let want = StateVector::from_array(end.physical().to_array().map(|x| x * s));
            assert!(phase_aligned_distance(&evolved, &want) <= 1e-5);
        }
    }

    #[test]
    fn contours_select_one_level_at_late_times() {
        let p = weak();
        for contour in Contour::ALL {
            let s = contour_amplitudes(&p, contour, 500.0)
                .unwrap()
                .physical()
                .to_array();
            let j = contour.index();
            for i in (0..3).filter(|&i| i != j) {
                assert!(
                    s[i].norm() / s[j].norm() <= 1e-2,
                    "{contour:?}: |b{i}|/|b{j}| = {}",
                    s[i].norm() / s[j].norm()
                );
            }
        }
    }
}
