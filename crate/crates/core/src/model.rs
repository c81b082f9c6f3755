//! Model parameters and the closed-form transition probability matrix.
//!
//! The Hamiltonian in the diabatic basis `(a, b1, b2)` is
//!
//! ```text
//!     | k2/tau   g1        g2       |
//! H = | g1       beta1 tau 0        |
//!     | g2       0         beta2 tau|
//! ```
//!
//! and `P[i][j]` is the probability to end in level `j` at `tau -> inf`
//! having started in level `i` at `tau -> 0+`. All closed-form expressions
//! assume `beta2 > beta1`; [`ModelParams::new`] relabels levels 1 and 2 when
//! needed and every public result is reported in the caller's labeling.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{hyp2f1_scaled, CutSide, Hyp2F1Input};

/// Side of the cut `[1, inf)` used for `H10` and `H20` in the mixed-slope
/// case, where their arguments exceed 1. Fixed by comparison with the
/// numerical propagator (see the `branch_calibration` tests).
pub const MIXED_CASE_CUT_SIDE: CutSide = CutSide::BelowCut;

/// Default accuracy attached to closed-form matrices.
pub const DEFAULT_MATRIX_TOL: f64 = 1e-6;

/// The five real parameters, as supplied by a caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub k2: f64,
    pub g1: f64,
    pub g2: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Validated model parameters, stored with `beta2 > beta1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    k2: f64,
    g1: f64,
    g2: f64,
    beta1: f64,
    beta2: f64,
    swapped: bool,
}

impl ModelParams {
    /// Builds a parameter set. Coupling signs are dropped (a sign flip is a
    /// gauge transformation); levels 1 and 2 are swapped internally if
    /// `beta1 > beta2`.
    pub fn new(k2: f64, g1: f64, g2: f64, beta1: f64, beta2: f64) -> Result<Self> {
        for (name, v) in [
            ("k2", k2),
            ("g1", g1),
            ("g2", g2),
            ("beta1", beta1),
            ("beta2", beta2),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        classify_slopes(beta1, beta2)?;
        let (g1, g2) = (g1.abs(), g2.abs());
        Ok(if beta1 < beta2 {
            Self {
                k2,
                g1,
                g2,
                beta1,
                beta2,
                swapped: false,
            }
        } else {
            Self {
                k2,
                g1: g2,
                g2: g1,
                beta1: beta2,
                beta2: beta1,
                swapped: true,
            }
        })
    }

    pub fn from_raw(raw: RawParams) -> Result<Self> {
        Self::new(raw.k2, raw.g1, raw.g2, raw.b1, raw.b2)
    }

    /// Parameters in the caller's labeling.
    pub fn raw(&self) -> RawParams {
        if self.swapped {
            RawParams {
                k2: self.k2,
                g1: self.g2,
                g2: self.g1,
                b1: self.beta2,
                b2: self.beta1,
            }
        } else {
            RawParams {
                k2: self.k2,
                g1: self.g1,
                g2: self.g2,
                b1: self.beta1,
                b2: self.beta2,
            }
        }
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }
    /// Coupling of the normalized level 1 (the smaller slope).
    pub fn g1(&self) -> f64 {
        self.g1
    }
    pub fn g2(&self) -> f64 {
        self.g2
    }
    pub fn beta1(&self) -> f64 {
        self.beta1
    }
    pub fn beta2(&self) -> f64 {
        self.beta2
    }
    /// Whether levels 1 and 2 were exchanged to reach `beta2 > beta1`.
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    /// Maps a caller level index to the normalized one (and back; the map is
    /// an involution).
    pub fn level_map(&self) -> [usize; 3] {
        if self.swapped {
            [0, 2, 1]
        } else {
            [0, 1, 2]
        }
    }

    pub fn case(&self) -> SlopeCase {
        if self.beta1 > 0.0 {
            SlopeCase::BothPositive
        } else if self.beta2 > 0.0 {
            SlopeCase::Mixed
        } else {
            SlopeCase::BothNegative
        }
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.raw();
        write!(
            f,
            "k2={} g1={} g2={} b1={} b2={}",
            r.k2, r.g1, r.g2, r.b1, r.b2
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlopeCase {
    /// `beta2 > beta1 > 0`
    BothPositive,
    /// `beta2 > 0 > beta1`
    Mixed,
    /// `0 > beta2 > beta1`
    BothNegative,
}

impl SlopeCase {
    pub const ALL: [SlopeCase; 3] = [
        SlopeCase::BothPositive,
        SlopeCase::Mixed,
        SlopeCase::BothNegative,
    ];

    pub fn number(self) -> u8 {
        match self {
            SlopeCase::BothPositive => 1,
            SlopeCase::Mixed => 2,
            SlopeCase::BothNegative => 3,
        }
    }
}

impl fmt::Display for SlopeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SlopeCase::BothPositive => "case 1 (beta2 > beta1 > 0)",
            SlopeCase::Mixed => "case 2 (beta2 > 0 > beta1)",
            SlopeCase::BothNegative => "case 3 (0 > beta2 > beta1)",
        };
        f.write_str(s)
    }
}

/// Slope case for an unordered pair of slopes.
pub fn classify_slopes(beta1: f64, beta2: f64) -> Result<SlopeCase> {
    if beta1 == 0.0 || beta2 == 0.0 {
        return Err(Error::DegenerateSlope(format!(
            "slopes must be nonzero (beta1 = {beta1}, beta2 = {beta2})"
        )));
    }
    if beta1 == beta2 {
        return Err(Error::DegenerateSlope(format!("beta1 = beta2 = {beta1}")));
    }
    let (lo, hi) = (beta1.min(beta2), beta1.max(beta2));
    Ok(if lo > 0.0 {
        SlopeCase::BothPositive
    } else if hi > 0.0 {
        SlopeCase::Mixed
    } else {
        SlopeCase::BothNegative
    })
}

pub fn classify(params: &ModelParams) -> SlopeCase {
    params.case()
}

/// Shorthand combinations of the model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Shorthands {
    /// `exp(-pi k2)`
    pub kappa: f64,
    /// `g_i^2 / beta_i`
    pub q1: f64,
    pub q2: f64,
    /// `exp(-pi g_i^2 / |beta_i|)`
    pub p1: f64,
    pub p2: f64,
    /// `k2 - q_i`
    pub c1: f64,
    pub c2: f64,
}

/// Shorthands for the normalized labeling.
pub fn shorthands(params: &ModelParams) -> Shorthands {
    let q1 = params.g1 * params.g1 / params.beta1;
    let q2 = params.g2 * params.g2 / params.beta2;
    Shorthands {
        kappa: (-PI * params.k2).exp(),
        q1,
        q2,
        p1: (-PI * q1.abs()).exp(),
        p2: (-PI * q2.abs()).exp(),
        c1: params.k2 - q1,
        c2: params.k2 - q2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HFactor {
    H10,
    H20,
    H12,
    H21,
}

/// A squared hypergeometric magnitude with its error bound. `value` may
/// overflow for large couplings; `ln_value` stays finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HValue {
    pub value: f64,
    pub abs_err: f64,
    /// `ln value`
    pub ln_value: f64,
    /// `abs_err / value`
    pub rel_err: f64,
}

/// The `(a, b; c; z)` tuple behind each H factor.
pub fn h_tuple(which: HFactor, params: &ModelParams) -> Hyp2F1Input {
    let (k2, b1, b2) = (params.k2, params.beta1, params.beta2);
    let x1 = params.g1 * params.g1 / (2.0 * b1);
    let x2 = params.g2 * params.g2 / (2.0 * b2);
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match which {
        HFactor::H10 => Hyp2F1Input::new(
            c(1.0, -x1),
            c(0.5, -k2 / 2.0),
            c(1.0, -(x1 + x2)),
            (b2 - b1) / b2,
        ),
        HFactor::H20 => Hyp2F1Input::new(
            c(1.0, x2),
            c(0.5, k2 / 2.0),
            c(1.0, x1 + x2),
            (b1 - b2) / b1,
        ),
        HFactor::H12 => Hyp2F1Input::new(
            c(0.5, -(k2 / 2.0 - x1 - x2)),
            c(0.5, -k2 / 2.0),
            c(1.5, -(k2 / 2.0 - x2)),
            b1 / (b1 - b2),
        ),
        HFactor::H21 => Hyp2F1Input::new(
            c(0.5, k2 / 2.0 - x1 - x2),
            c(0.5, k2 / 2.0),
            c(1.5, k2 / 2.0 - x1),
            b2 / (b2 - b1),
        ),
    }
}

/// `|2F1(a, b; c; z)|^2` for one of the four H factors.
pub fn h_factor(which: HFactor, params: &ModelParams, cut_side: CutSide) -> Result<HValue> {
    let input = h_tuple(which, params).with_side(cut_side);
    let r = hyp2f1_scaled(input)?;
    let e = r.rel_err();
    let ln_value = 2.0 * r.ln_norm();
    let value = ln_value.exp();
    Ok(HValue {
        value,
        abs_err: value * (2.0 * e + e * e),
        ln_value,
        rel_err: 2.0 * e + e * e,
    })
}

/// Row-major 3x3 transition matrix, `p[i][j] = P(i -> j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionMatrix {
    /// Raw values; may stray outside `[0, 1]` by rounding.
    pub p: [[f64; 3]; 3],
    /// Accuracy claimed for every entry.
    pub tol: f64,
    pub case: SlopeCase,
    /// Set when `k2 < 0`, where the closed forms are evaluated as written
    /// but only the oracle vouches for them.
    pub extended_domain: bool,
}

impl TransitionMatrix {
    pub fn identity(case: SlopeCase, tol: f64) -> Self {
        let mut p = [[0.0; 3]; 3];
        for (i, row) in p.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self {
            p,
            tol,
            case,
            extended_domain: false,
        }
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.p[from][to]
    }

    /// Entries clamped to `[0, 1]` for display.
    pub fn clamped(&self) -> [[f64; 3]; 3] {
        self.p.map(|row| row.map(|x| x.clamp(0.0, 1.0)))
    }

    pub fn row_sums(&self) -> [f64; 3] {
        self.p.map(|row| row.iter().sum())
    }

    pub fn col_sums(&self) -> [f64; 3] {
        std::array::from_fn(|j| (0..3).map(|i| self.p[i][j]).sum())
    }

    /// Largest deviation of any row or column sum from 1.
    pub fn stochastic_residual(&self) -> f64 {
        self.row_sums()
            .into_iter()
            .chain(self.col_sums())
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest distance of an entry outside `[0, 1]`.
    pub fn range_violation(&self) -> f64 {
        self.p
            .iter()
            .flatten()
            .map(|&x| (-x).max(x - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| (self.p[i][j] - other.p[i][j]).abs())
            .fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        let mut t = *self;
        t.p = std::array::from_fn(|i| std::array::from_fn(|j| self.p[j][i]));
        t
    }

    /// Relabels levels: entry `(i, j)` of the result is `(perm[i], perm[j])`
    /// of `self`.
    pub fn permuted(&self, perm: [usize; 3]) -> Self {
        let mut t = *self;
        t.p = std::array::from_fn(|i| std::array::from_fn(|j| self.p[perm[i]][perm[j]]));
        t
    }

    /// `P00 + P10 + P20 - 1`: the three independently computed probabilities
    /// of ending in level 0.
    pub fn level0_identity_residual(&self) -> f64 {
        self.p[0][0] + self.p[1][0] + self.p[2][0] - 1.0
    }

    /// Column 0 of the tabulated layout: probabilities out of level 0.
    pub fn from_level0(&self) -> [f64; 3] {
        self.p[0]
    }
}

/// `(1 - p1 p2) / (q1 + q2)` for same-sign slopes, or `(p1 - p2) / (q1 + q2)`
/// in the mixed case, as `(sign, ln |ratio|)`. Written to stay finite as
/// `q1 + q2 -> 0` and when `p2` underflows.
fn coupling_ratio_ln(case: SlopeCase, sh: &Shorthands) -> (f64, f64) {
    let s = sh.q1 + sh.q2;
    // ln((1 - e^{-pi x}) / x) for x >= 0.
    let ln_decay = |x: f64| {
        if x == 0.0 {
            PI.ln()
        } else {
            (-(-PI * x).exp_m1()).ln() - x.ln()
        }
    };
    match case {
        // p1 p2 = exp(-pi |s|) when both q have the same sign.
        SlopeCase::BothPositive => (1.0, ln_decay(s.abs())),
        SlopeCase::BothNegative => (-1.0, ln_decay(s.abs())),
        SlopeCase::Mixed => {
            // p1 - p2 = p2 (exp(pi s) - 1) with q1 <= 0 <= q2; (e^{pi s} - 1) / s > 0.
            let ln_p2 = -PI * sh.q2.abs();
            let ln_growth = if s >= 0.0 {
                PI * s + ln_decay(s)
            } else {
                ln_decay(-s)
            };
            (1.0, ln_p2 + ln_growth)
        }
    }
}

/// `k * H` for a prefactor given as `(sign, ln |k|)`, with its error bound.
fn scaled_h(k: (f64, f64), h: &HValue) -> (f64, f64) {
    let v = k.0 * (k.1 + h.ln_value).exp();
    (v, v.abs() * h.rel_err)
}

fn ln_abs(x: f64) -> (f64, f64) {
    (x.signum(), x.abs().ln())
}

/// Closed-form transition matrix, reported in the caller's labeling.
pub fn transition_matrix(params: &ModelParams) -> Result<TransitionMatrix> {
    transition_matrix_with_cut(params, MIXED_CASE_CUT_SIDE)
}

/// As [`transition_matrix`], with an explicit cut side for the mixed-case
/// `H10` and `H20` factors (ignored in the other cases).
pub fn transition_matrix_with_cut(
    params: &ModelParams,
    mixed_side: CutSide,
) -> Result<TransitionMatrix> {
    let case = params.case();
    if params.g1 == 0.0 && params.g2 == 0.0 {
        return Ok(TransitionMatrix::identity(case, DEFAULT_MATRIX_TOL));
    }
    let sh = shorthands(params);
    let (g1s, g2s) = (params.g1 * params.g1, params.g2 * params.g2);
    let (b1, b2) = (params.beta1, params.beta2);
    let kap = sh.kappa;
    let norm = 1.0 + kap;
    let ratio = coupling_ratio_ln(case, &sh);
    let side = if case == SlopeCase::Mixed {
        mixed_side
    } else {
        CutSide::Principal
    };

    let h10 = h_factor(HFactor::H10, params, side)?;
    let h20 = h_factor(HFactor::H20, params, side)?;
    // Prefactors of H10 and H20 in log form: the H factors can overflow while
    // the products stay bounded by 1.
    let with_ratio = |k: f64| (k.signum() * ratio.0, k.abs().ln() + ratio.1);

    let mut p = [[0.0; 3]; 3];
    let mut err = 0.0f64;
    let mut set = |p: &mut [[f64; 3]; 3], i: usize, j: usize, (v, e): (f64, f64)| {
        p[i][j] = v;
        err = err.max(e);
    };
    match case {
        SlopeCase::BothPositive | SlopeCase::Mixed => {
            let (k10, k20) = if case == SlopeCase::BothPositive {
                p[0] = [
                    (sh.p1 * sh.p2 + kap) / norm,
                    sh.p2 * (1.0 - sh.p1) / norm,
                    (1.0 - sh.p2) / norm,
                ];
                (g1s / (b2 * norm), g2s / (b1 * norm))
            } else {
                p[0] = [
                    (sh.p2 + kap * sh.p1) / norm,
                    (1.0 - sh.p1) * kap / norm,
                    (1.0 - sh.p2) / norm,
                ];
                (g1s / (b2 * norm), -g2s * kap / (b1 * norm))
            };
            set(&mut p, 1, 0, scaled_h(with_ratio(k10), &h10));
            set(&mut p, 2, 0, scaled_h(with_ratio(k20), &h20));
            let h12 = h_factor(HFactor::H12, params, CutSide::Principal)?;
            let k12 = g1s * sh.q2 * (sh.p2 + kap) / ((b2 - b1) * (1.0 + sh.c2 * sh.c2) * norm);
            set(&mut p, 1, 2, scaled_h(ln_abs(k12), &h12));
            p[1][1] = 1.0 - p[1][0] - p[1][2];
            p[2][1] = p[1][2] + p[1][0] - p[0][1];
        }
        SlopeCase::BothNegative => {
            p[0] = [
                (1.0 + kap * sh.p1 * sh.p2) / norm,
                (1.0 - sh.p1) * kap / norm,
                sh.p1 * (1.0 - sh.p2) * kap / norm,
            ];
            set(
                &mut p,
                1,
                0,
                scaled_h(with_ratio(g1s * kap / (b2 * norm)), &h10),
            );
            set(
                &mut p,
                2,
                0,
                scaled_h(with_ratio(g2s * kap / (b1 * norm)), &h20),
            );
            let h21 = h_factor(HFactor::H21, params, CutSide::Principal)?;
            let k21 =
                g2s * sh.q1 * (kap * sh.p1 + 1.0) / ((b1 - b2) * (1.0 + sh.c1 * sh.c1) * norm);
            set(&mut p, 2, 1, scaled_h(ln_abs(k21), &h21));
            p[1][2] = p[2][1] + p[0][1] - p[1][0];
            p[1][1] = 1.0 - p[1][0] - p[1][2];
        }
    }
    p[2][2] = 1.0 - p[0][2] - p[1][2];

    for row in &p {
        for x in row {
            if !x.is_finite() {
                return Err(Error::Domain(format!(
                    "non-finite transition probability for {params}"
                )));
            }
        }
    }

    let normalized = TransitionMatrix {
        p,
        // Complement entries combine up to three formula entries.
        tol: DEFAULT_MATRIX_TOL.max(3.0 * err),
        case,
        extended_domain: params.k2 < 0.0,
    };
    Ok(normalized.permuted(params.level_map()))
}

/// Reflection of the model across the time axis: `beta1 -> -beta2`,
/// `beta2 -> -beta1`, `g1 <-> g2`, `k2 -> -k2` (in the caller's labeling).
/// Returns the reflected set and the level permutation relating the two
/// matrices: `P[i][j] = P_reflected[perm[i]][perm[j]]`.
pub fn reflected_params(params: &ModelParams) -> (ModelParams, [usize; 3]) {
    let r = params.raw();
    let reflected =
        ModelParams::new(-r.k2, r.g2, r.g1, -r.b2, -r.b1).expect("reflection preserves validity");
    (reflected, [0, 2, 1])
}

/// Complex conjugation of the amplitude equations:
/// `(k2, beta1, beta2) -> (-k2, -beta1, -beta2)` with levels unchanged.
pub fn negated_params(params: &ModelParams) -> ModelParams {
    let r = params.raw();
    ModelParams::new(-r.k2, r.g1, r.g2, -r.b1, -r.b2).expect("negation preserves validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::hyp2f1;

    fn reference_set() -> ModelParams {
        ModelParams::new(0.1, 1.0, 0.7, 0.9, 1.0).unwrap()
    }

    #[test]
    fn rejects_degenerate_slopes() {
        assert!(matches!(
            ModelParams::new(0.1, 1.0, 1.0, 0.0, 1.0),
            Err(Error::DegenerateSlope(_))
        ));
        assert!(matches!(
            ModelParams::new(0.1, 1.0, 1.0, 0.5, 0.5),
            Err(Error::DegenerateSlope(_))
        ));
        assert!(matches!(
            ModelParams::new(f64::NAN, 1.0, 1.0, 0.5, 0.7),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn relabeling_round_trips() {
        let p = ModelParams::new(0.3, 0.2, 0.9, 1.0, -0.5).unwrap();
        assert!(p.swapped());
        assert_eq!(
            (p.beta1(), p.beta2(), p.g1(), p.g2()),
            (-0.5, 1.0, 0.9, 0.2)
        );
        assert_eq!(
            p.raw(),
            RawParams {
                k2: 0.3,
                g1: 0.2,
                g2: 0.9,
                b1: 1.0,
                b2: -0.5
            }
        );
    }

    #[test]
    fn shorthand_trivial_values() {
        let s = shorthands(&ModelParams::new(0.0, 0.0, 0.0, 0.5, 1.0).unwrap());
        assert_eq!(
            (s.kappa, s.p1, s.p2, s.q1, s.q2, s.c1, s.c2),
            (1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0)
        );
        let s = shorthands(&ModelParams::new(1.0, 0.0, 0.0, 0.5, 1.0).unwrap());
        assert!((s.kappa - 0.043_213_918_263_772_25).abs() < 1e-15);
    }

    #[test]
    fn shorthand_reference_set() {
        let s = shorthands(&reference_set());
        assert!((s.kappa - 0.730_403).abs() < 1e-6);
        assert!((s.p1 - 0.030_480).abs() < 1e-6);
        assert!((s.p2 - 0.214_513).abs() < 1e-6);
        assert!((s.q1 - 1.111_111).abs() < 1e-6);
        assert!((s.q2 - 0.49).abs() < 1e-14);
    }

    #[test]
    fn classification() {
        let c = |b1, b2| ModelParams::new(0.1, 1.0, 1.0, b1, b2).unwrap().case();
        assert_eq!(c(0.9, 1.0), SlopeCase::BothPositive);
        assert_eq!(c(-0.15, 0.3), SlopeCase::Mixed);
        assert_eq!(c(-0.3, -0.2), SlopeCase::BothNegative);
        assert_eq!(c(0.3, -0.15), SlopeCase::Mixed);
        assert!(classify_slopes(0.0, 1.0).is_err());
    }

    #[test]
    fn h_factor_binomial_reduction() {
        // With g1 = g2 = 0, H10 = |(1 - z)^{-b}|^2 = (1 - z)^{-1} (Re b = 1/2).
        for (k2, b1, b2) in [(0.4, 0.3, 1.0), (1.3, -0.4, -0.2), (0.0, -0.5, 0.25)] {
            let p = ModelParams::new(k2, 0.0, 0.0, b1, b2).unwrap();
            let z = (b2 - b1) / b2;
            let h = h_factor(HFactor::H10, &p, CutSide::BelowCut).unwrap();
            if z < 1.0 {
                assert!(
                    (h.value - 1.0 / (1.0 - z)).abs() < 1e-12 * h.value,
                    "{k2} {b1} {b2}"
                );
            } else {
                // (1 - z)^{-b} on the cut picks up |e^{+-i pi b}|^2 = e^{-+pi k2}.
                let above = h_factor(HFactor::H10, &p, CutSide::AboveCut).unwrap();
                let base = 1.0 / (z - 1.0);
                assert!((h.value * above.value - base * base).abs() < 1e-10 * base * base);
            }
        }
    }

    #[test]
    fn h_factor_zero_argument() {
        // H12 has z = beta1 / (beta1 - beta2) = 0 only if beta1 = 0, which is
        // excluded; instead check the z = 0 limit through the tuple directly.
        let mut t = h_tuple(HFactor::H12, &reference_set());
        t.z = 0.0;
        assert_eq!(hyp2f1(t).unwrap().value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn zero_coupling_is_identity() {
        for (b1, b2) in [(0.9, 1.0), (-0.15, 0.3), (-0.3, -0.2)] {
            let m = transition_matrix(&ModelParams::new(0.7, 0.0, 0.0, b1, b2).unwrap()).unwrap();
            assert_eq!(m.p, TransitionMatrix::identity(m.case, 0.0).p);
        }
    }

    #[test]
    fn reference_set_elementary_column() {
        let m = transition_matrix(&reference_set()).unwrap();
        let col = m.from_level0();
        assert!((col[0] - 0.425_879).abs() < 1e-6);
        assert!((col[1] - 0.120_189).abs() < 1e-6);
        assert!((col[2] - 0.453_933).abs() < 1e-6);
        assert!((col.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stochastic_on_tabulated_sets() {
        for (k2, g1, g2, b1, b2) in [
            (0.1, 1.0, 0.7, 0.9, 1.0),
            (0.5, 0.5, 0.3, -0.15, 0.3),
            (0.5, 1.0, 1.3, -0.3, -0.2),
        ] {
            let m = transition_matrix(&ModelParams::new(k2, g1, g2, b1, b2).unwrap()).unwrap();
            assert!(m.stochastic_residual() < 1e-9, "{:?}", m);
            assert!(m.level0_identity_residual().abs() < 1e-9);
            assert!(m.range_violation() < 1e-9);
        }
    }

    #[test]
    fn caller_labeling_is_restored() {
        let a = transition_matrix(&ModelParams::new(0.4, 0.6, 0.3, -0.2, 0.5).unwrap()).unwrap();
        let b = transition_matrix(&ModelParams::new(0.4, 0.3, 0.6, 0.5, -0.2).unwrap()).unwrap();
        assert!(a.max_abs_diff(&b.permuted([0, 2, 1])) < 1e-15);
    }

    #[test]
    fn single_zero_coupling_decouples_level() {
        for (b1, b2) in [(0.4, 0.9), (-0.4, 0.9), (-0.9, -0.4)] {
            let m = transition_matrix(&ModelParams::new(0.6, 0.8, 0.0, b1, b2).unwrap()).unwrap();
            assert!((m.p[2][2] - 1.0).abs() < 1e-9, "{b1} {b2}: {:?}", m.p);
            for k in 0..2 {
                assert!(m.p[2][k].abs() < 1e-9 && m.p[k][2].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reflection_example_and_involution() {
        let p = reference_set();
        let (r, perm) = reflected_params(&p);
        assert_eq!(
            r.raw(),
            RawParams {
                k2: -0.1,
                g1: 0.7,
                g2: 1.0,
                b1: -1.0,
                b2: -0.9
            }
        );
        assert_eq!(r.case(), SlopeCase::BothNegative);
        assert_eq!(perm, [0, 2, 1]);
        assert_eq!(reflected_params(&r).0, p);
        let m = transition_matrix(&p).unwrap();
        let mr = transition_matrix(&r).unwrap();
        assert!(mr.extended_domain);
        assert!(m.max_abs_diff(&mr.permuted(perm)) < 1e-9);
    }

    #[test]
    fn large_k2_limit() {
        let p = ModelParams::new(20.0, 0.8, 0.5, 0.4, 0.9).unwrap();
        let s = shorthands(&p);
        let m = transition_matrix(&p).unwrap();
        let want = [s.p1 * s.p2, s.p2 * (1.0 - s.p1), 1.0 - s.p2];
        for (got, want) in m.p[0].iter().zip(want) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn ratio_is_continuous_through_zero_sum() {
        // Mixed case with q1 + q2 = 0: g1^2 / 0.2 = g2^2 / 0.2.
        let p = ModelParams::new(0.3, 0.5, 0.5, -0.2, 0.2).unwrap();
        let near = ModelParams::new(0.3, 0.5, 0.5 + 1e-7, -0.2, 0.2).unwrap();
        let a = transition_matrix(&p).unwrap();
        let b = transition_matrix(&near).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-5);
        assert!(a.stochastic_residual() < 1e-9);
    }
}
