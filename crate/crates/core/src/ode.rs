//! Dormand-Prince 8(5,3) explicit Runge-Kutta integrator for complex state
//! vectors of fixed length.
//!
//! Step-size control follows Hairer, Norsett and Wanner: a mixed 5th/3rd
//! order error estimate scaled per component by `atol + rtol * |y|`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State<const N: usize> = [Complex64; N];

#[derive(Debug, Clone, Copy)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on |h|; `f64::INFINITY` for none.
    pub h_max: f64,
}

impl Default for Dop853 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 5_000_000,
            h_max: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;

fn axpy<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (coef, k) in terms {
        let c = coef * h;
        for i in 0..N {
            out[i] += k[i] * c;
        }
    }
    out
}

impl Dop853 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    fn scale<const N: usize>(&self, a: &State<N>, b: &State<N>, i: usize) -> f64 {
        self.atol + self.rtol * a[i].norm().max(b[i].norm())
    }

    fn norm<const N: usize>(&self, v: &State<N>, y: &State<N>) -> f64 {
        let s: f64 = (0..N)
            .map(|i| (v[i].norm() / self.scale(y, y, i)).powi(2))
            .sum();
        (s / N as f64).sqrt()
    }

    fn initial_step<const N: usize, F>(
        &self,
        f: &mut F,
        t0: f64,
        y0: &State<N>,
        f0: &State<N>,
        dir: f64,
        span: f64,
    ) -> f64
    where
        F: FnMut(f64, &State<N>, &mut State<N>),
    {
        let d0 = self.norm(y0, y0);
        let d1 = self.norm(f0, y0);
        let mut h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h = h.min(self.h_max).min(span);
        let y1 = axpy(y0, dir * h, &[(1.0, f0)]);
        let mut f1 = [Complex64::new(0.0, 0.0); N];
        f(t0 + dir * h, &y1, &mut f1);
        let diff: State<N> = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = self.norm(&diff, y0) / h;
        let dmax = d1.max(d2);
        let h1 = if dmax <= 1e-15 {
            (1e-6f64).max(h * 1e-3)
        } else {
            (0.01 / dmax).powf(1.0 / 8.0)
        };
        (100.0 * h).min(h1).min(self.h_max).min(span)
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
    pub fn integrate<const N: usize, F>(
        &self,
        mut f: F,
        t0: f64,
        t1: f64,
        y0: State<N>,
    ) -> Result<(State<N>, OdeStats)>
    where
        F: FnMut(f64, &State<N>, &mut State<N>),
    {
        let mut stats = OdeStats::default();
        if t0 == t1 {
            return Ok((y0, stats));
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let zero = [Complex64::new(0.0, 0.0); N];

        let mut t = t0;
        let mut y = y0;
        let mut k1 = zero;
        f(t, &y, &mut k1);
        stats.evals += 1;
        let mut h = self.initial_step(&mut f, t0, &y, &k1, dir, span);
        stats.evals += 1;
        let mut last_rejected = false;

        let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7, mut k8, mut k9, mut k10) =
            (zero, zero, zero, zero, zero, zero, zero, zero, zero);

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::Integration(format!(
                    "step budget of {} exhausted at t = {t} (target {t1})",
                    self.max_steps
                )));
            }
            let remaining = (t1 - t).abs();
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration(format!(
                    "step size underflow at t = {t}"
                )));
            }
            let hs = dir * h;

            f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]), &mut k2);
            f(
                t + C3 * hs,
                &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]),
                &mut k3,
            );
            f(
                t + C4 * hs,
                &axpy(&y, hs, &[(A41, &k1), (A43, &k3)]),
                &mut k4,
            );
            f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A53, &k3), (A54, &k4)]),
                &mut k5,
            );
            f(
                t + C6 * hs,
                &axpy(&y, hs, &[(A61, &k1), (A64, &k4), (A65, &k5)]),
                &mut k6,
            );
            f(
                t + C7 * hs,
                &axpy(&y, hs, &[(A71, &k1), (A74, &k4), (A75, &k5), (A76, &k6)]),
                &mut k7,
            );
            f(
                t + C8 * hs,
                &axpy(
                    &y,
                    hs,
                    &[(A81, &k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)],
                ),
                &mut k8,
            );
            f(
                t + C9 * hs,
                &axpy(
                    &y,
                    hs,
                    &[
                        (A91, &k1),
                        (A94, &k4),
                        (A95, &k5),
                        (A96, &k6),
                        (A97, &k7),
                        (A98, &k8),
                    ],
                ),
                &mut k9,
            );
            f(
                t + C10 * hs,
                &axpy(
                    &y,
                    hs,
                    &[
                        (A101, &k1),
                        (A104, &k4),
                        (A105, &k5),
                        (A106, &k6),
                        (A107, &k7),
                        (A108, &k8),
                        (A109, &k9),
                    ],
                ),
                &mut k10,
            );
            let mut k11 = zero;
            f(
                t + C11 * hs,
                &axpy(
                    &y,
                    hs,
                    &[
                        (A111, &k1),
                        (A114, &k4),
                        (A115, &k5),
                        (A116, &k6),
                        (A117, &k7),
                        (A118, &k8),
                        (A119, &k9),
                        (A1110, &k10),
                    ],
                ),
                &mut k11,
            );
            let t_new = t + hs;
            let y12 = axpy(
                &y,
                hs,
                &[
                    (A121, &k1),
                    (A124, &k4),
                    (A125, &k5),
                    (A126, &k6),
                    (A127, &k7),
                    (A128, &k8),
                    (A129, &k9),
                    (A1210, &k10),
                    (A1211, &k11),
                ],
            );
            let mut k12 = zero;
            f(t_new, &y12, &mut k12);
            stats.evals += 11;

            let incr: State<N> = std::array::from_fn(|i| {
                k1[i] * B1
                    + k6[i] * B6
                    + k7[i] * B7
                    + k8[i] * B8
                    + k9[i] * B9
                    + k10[i] * B10
                    + k11[i] * B11
                    + k12[i] * B12
            });
            let y_new: State<N> = std::array::from_fn(|i| y[i] + incr[i] * hs);

            let mut err = 0.0;
            let mut err2 = 0.0;
            for i in 0..N {
                let sk = self.scale(&y, &y_new, i);
                let e2 = incr[i] - k1[i] * BHH1 - k9[i] * BHH2 - k12[i] * BHH3;
                err2 += (e2.norm() / sk).powi(2);
                let e = k1[i] * ER1
                    + k6[i] * ER6
                    + k7[i] * ER7
                    + k8[i] * ER8
                    + k9[i] * ER9
                    + k10[i] * ER10
                    + k11[i] * ER11
                    + k12[i] * ER12;
                err += (e.norm() / sk).powi(2);
            }
            let mut deno = err + 0.01 * err2;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = h * err * (1.0 / (deno * N as f64)).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration(format!(
                    "non-finite error estimate at t = {t}"
                )));
            }

            let fac11 = err.powf(1.0 / 8.0);
            let fac = (fac11 / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;

            if err <= 1.0 {
                stats.accepted += 1;
                f(t_new, &y_new, &mut k1);
                stats.evals += 1;
                y = y_new;
                t = t_new;
                if last {
                    return Ok((y, stats));
                }
                if last_rejected {
                    h_new = h_new.min(h);
                }
                last_rejected = false;
            } else {
                stats.rejected += 1;
                h_new = h / (1.0 / FAC_MIN).min(fac11 / SAFE);
                last_rejected = true;
            }
            h = h_new.min(self.h_max);
        }
    }
}

// Dormand-Prince 8(5,3) tableau, with the published digits.
#[allow(clippy::excessive_precision)]
mod tableau {
    pub const A21: f64 = 5.26001519587677318785587544488E-2;
    pub const A31: f64 = 1.97250569845378994544595329183E-2;
    pub const A32: f64 = 5.91751709536136983633785987549E-2;
    pub const A41: f64 = 2.95875854768068491816892993775E-2;
    pub const A43: f64 = 8.87627564304205475450678981324E-2;
    pub const A51: f64 = 2.41365134159266685502369798665E-1;
    pub const A53: f64 = -8.84549479328286085344864962717E-1;
    pub const A54: f64 = 9.24834003261792003115737966543E-1;
    pub const A61: f64 = 3.7037037037037037037037037037E-2;
    pub const A64: f64 = 1.70828608729473871279604482173E-1;
    pub const A65: f64 = 1.25467687566822425016691814123E-1;
    pub const A71: f64 = 3.7109375E-2;
    pub const A74: f64 = 1.70252211019544039314978060272E-1;
    pub const A75: f64 = 6.02165389804559606850219397283E-2;
    pub const A76: f64 = -1.7578125E-2;
    pub const A81: f64 = 3.70920001185047927108779319836E-2;
    pub const A84: f64 = 1.70383925712239993810214054705E-1;
    pub const A85: f64 = 1.07262030446373284651809199168E-1;
    pub const A86: f64 = -1.53194377486244017527936158236E-2;
    pub const A87: f64 = 8.27378916381402288758473766002E-3;
    pub const A91: f64 = 6.24110958716075717114429577812E-1;
    pub const A94: f64 = -3.36089262944694129406857109825E0;
    pub const A95: f64 = -8.68219346841726006818189891453E-1;
    pub const A96: f64 = 2.75920996994467083049415600797E1;
    pub const A97: f64 = 2.01540675504778934086186788979E1;
    pub const A98: f64 = -4.34898841810699588477366255144E1;
    pub const A101: f64 = 4.77662536438264365890433908527E-1;
    pub const A104: f64 = -2.48811461997166764192642586468E0;
    pub const A105: f64 = -5.90290826836842996371446475743E-1;
    pub const A106: f64 = 2.12300514481811942347288949897E1;
    pub const A107: f64 = 1.52792336328824235832596922938E1;
    pub const A108: f64 = -3.32882109689848629194453265587E1;
    pub const A109: f64 = -2.03312017085086261358222928593E-2;
    pub const A111: f64 = -9.3714243008598732571704021658E-1;
    pub const A114: f64 = 5.18637242884406370830023853209E0;
    pub const A115: f64 = 1.09143734899672957818500254654E0;
    pub const A116: f64 = -8.14978701074692612513997267357E0;
    pub const A117: f64 = -1.85200656599969598641566180701E1;
    pub const A118: f64 = 2.27394870993505042818970056734E1;
    pub const A119: f64 = 2.49360555267965238987089396762E0;
    pub const A1110: f64 = -3.0467644718982195003823669022E0;
    pub const A121: f64 = 2.27331014751653820792359768449E0;
    pub const A124: f64 = -1.05344954667372501984066689879E1;
    pub const A125: f64 = -2.00087205822486249909675718444E0;
    pub const A126: f64 = -1.79589318631187989172765950534E1;
    pub const A127: f64 = 2.79488845294199600508499808837E1;
    pub const A128: f64 = -2.85899827713502369474065508674E0;
    pub const A129: f64 = -8.87285693353062954433549289258E0;
    pub const A1210: f64 = 1.23605671757943030647266201528E1;
    pub const A1211: f64 = 6.43392746015763530355970484046E-1;
    pub const B1: f64 = 5.42937341165687622380535766363E-2;
    pub const B6: f64 = 4.45031289275240888144113950566E0;
    pub const B7: f64 = 1.89151789931450038304281599044E0;
    pub const B8: f64 = -5.8012039600105847814672114227E0;
    pub const B9: f64 = 3.1116436695781989440891606237E-1;
    pub const B10: f64 = -1.52160949662516078556178806805E-1;
    pub const B11: f64 = 2.01365400804030348374776537501E-1;
    pub const B12: f64 = 4.47106157277725905176885569043E-2;
    pub const BHH1: f64 = 0.244094488188976377952755905512E+00;
    pub const BHH2: f64 = 0.733846688281611857341361741547E+00;
    pub const BHH3: f64 = 0.220588235294117647058823529412E-01;
    pub const C2: f64 = 0.526001519587677318785587544488E-01;
    pub const C3: f64 = 0.789002279381515978178381316732E-01;
    pub const C4: f64 = 0.118350341907227396726757197510E+00;
    pub const C5: f64 = 0.281649658092772603273242802490E+00;
    pub const C6: f64 = 0.333333333333333333333333333333E+00;
    pub const C7: f64 = 0.25E+00;
    pub const C8: f64 = 0.307692307692307692307692307692E+00;
    pub const C9: f64 = 0.651282051282051282051282051282E+00;
    pub const C10: f64 = 0.6E+00;
    pub const C11: f64 = 0.857142857142857142857142857142E+00;
    pub const ER1: f64 = 0.1312004499419488073250102996E-01;
    pub const ER6: f64 = -0.1225156446376204440720569753E+01;
    pub const ER7: f64 = -0.4957589496572501915214079952E+00;
    pub const ER8: f64 = 0.1664377182454986536961530415E+01;
    pub const ER9: f64 = -0.3503288487499736816886487290E+00;
    pub const ER10: f64 = 0.3341791187130174790297318841E+00;
    pub const ER11: f64 = 0.8192320648511571246570742613E-01;
    pub const ER12: f64 = -0.2235530786388629525884427845E-01;
}
use tableau::*;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_phase() {
        // y' = i w y, y(0) = 1  =>  y(t) = e^{i w t}
        let w = 3.7;
        let solver = Dop853::new(1e-12, 1e-14);
        let (y, stats) = solver
            .integrate(
                |_, y: &State<1>, dy: &mut State<1>| dy[0] = Complex64::new(0.0, w) * y[0],
                0.0,
                25.0,
                [Complex64::new(1.0, 0.0)],
            )
            .unwrap();
        let exact = Complex64::new(0.0, w * 25.0).exp();
        assert!((y[0] - exact).norm() < 1e-9, "{}", (y[0] - exact).norm());
        assert!(stats.accepted > 10);
    }

    #[test]
    fn backward_direction() {
        // y' = -2 t y from t = 1 to t = -1 returns to the same value (even solution).
        let solver = Dop853::default();
        let (y, _) = solver
            .integrate(
                |t, y: &State<1>, dy: &mut State<1>| dy[0] = y[0] * (-2.0 * t),
                1.0,
                -1.0,
                [Complex64::new(1.0, 0.0)],
            )
            .unwrap();
        assert!((y[0] - 1.0).norm() < 1e-9);
    }

    #[test]
    fn rabi_oscillation_conserves_norm() {
        // Two-level system with constant coupling: full Rabi flop at t = pi / (2 g).
        let g = 0.8;
        let solver = Dop853::new(1e-11, 1e-13);
        let rhs = |_: f64, y: &State<2>, dy: &mut State<2>| {
            let mi = Complex64::new(0.0, -g);
            dy[0] = mi * y[1];
            dy[1] = mi * y[0];
        };
        let t_flip = std::f64::consts::PI / (2.0 * g);
        let (y, _) = solver
            .integrate(
                rhs,
                0.0,
                t_flip,
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            )
            .unwrap();
        assert!(y[0].norm() < 1e-9);
        assert!((y[1].norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn step_budget_is_enforced() {
        let solver = Dop853::new(1e-12, 1e-14).with_max_steps(5);
        let res = solver.integrate(
            |t, _y: &State<1>, dy: &mut State<1>| dy[0] = Complex64::new(0.0, 50.0 * t).exp(),
            0.0,
            100.0,
            [Complex64::new(0.0, 0.0)],
        );
        assert!(matches!(res, Err(Error::Integration(_))));
    }
}
