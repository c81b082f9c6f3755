//! Adaptive Gauss-Kronrod quadrature for complex-valued integrands.
//!
//! The driver is a global-subdivision scheme in the style of QUADPACK's
//! `qag`: the interval with the largest error estimate is bisected until the
//! summed estimate meets `max(abs_tol, rel_tol * |I|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

// 21-point Kronrod abscissae; odd indices are the 10-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_926,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub abs_err: f64,
    pub evals: usize,
}

/// Tolerances and budget for [`Quadrature::integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).norm();
    // Round-off floor, as in QUADPACK.
    let floor = 50.0 * f64::EPSILON * value.norm();
    Panel {
        a,
        b,
        value,
        err: err.max(floor),
    }
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    /// Integrates `f` over `[points[0], points[last]]`, seeding the
    /// subdivision with every consecutive pair of `points`.
    pub fn integrate<F: Fn(f64) -> Complex64>(&self, f: F, points: &[f64]) -> Result<QuadResult> {
        if points.len() < 2 {
            return Err(Error::Domain("quadrature needs at least two points".into()));
        }
        let mut heap = BinaryHeap::new();
        let mut total = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for w in points.windows(2) {
            if w[0] == w[1] {
                continue;
            }
            let p = kronrod21(&f, w[0], w[1]);
            total += p.value;
            err += p.err;
            heap.push(p);
        }
        let mut evals = 21 * heap.len();
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::Domain("integrand is not finite".into()));
        }

        while err > self.abs_tol.max(self.rel_tol * total.norm()) {
            if heap.len() >= self.max_intervals {
                return Err(Error::NonConvergence {
                    context: "adaptive quadrature",
                    partial: total,
                    abs_err: err,
                    iterations: heap.len(),
                });
            }
            let worst = heap.pop().expect("heap is never empty here");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Interval exhausted at machine resolution; accept what we have.
                heap.push(worst);
                break;
            }
            let left = kronrod21(&f, worst.a, mid);
            let right = kronrod21(&f, mid, worst.b);
            evals += 42;
            total += left.value + right.value - worst.value;
            err += left.err + right.err - worst.err;
            heap.push(left);
            heap.push(right);
        }

        // Resum to shed the drift of the incremental updates.
        let (value, abs_err) = heap
            .iter()
            .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), p| {
                (v + p.value, e + p.err)
            });
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::Domain("integrand is not finite".into()));
        }
        Ok(QuadResult {
            value,
            abs_err,
            evals,
        })
    }

    /// Integrates over a finite interval `[l, r]` whose integrand behaves like
    /// `(t - l)^p` and `(r - t)^q` at the ends, with `Re p, Re q > -1`.
    ///
    /// Each half is mapped to a semi-infinite range by `t - l = h e^{-x}` (and
    /// the mirror image), which turns the algebraic endpoint behaviour into
    /// exponential decay at rate `Re p + 1`. The integrand receives
    /// `(t, t - l, r - t)` so that factors near the ends can be formed without
    /// cancellation.
    pub fn integrate_endpoint_singular<F>(
        &self,
        f: F,
        l: f64,
        r: f64,
        decay_left: f64,
        decay_right: f64,
    ) -> Result<QuadResult>
    where
        F: Fn(f64, f64, f64) -> Complex64,
    {
        if !(decay_left > 0.0 && decay_right > 0.0) {
            return Err(Error::Domain(
                "endpoint exponents must have real part above -1".into(),
            ));
        }
        let h = 0.5 * (r - l);
        let left = |x: f64| {
            let d = h * (-x).exp();
            f(l + d, d, (r - l) - d) * d
        };
        let right = |x: f64| {
            let d = h * (-x).exp();
            f(r - d, (r - l) - d, d) * d
        };
        let lo = self.integrate(left, &exp_breakpoints(decay_left))?;
        let hi = self.integrate(right, &exp_breakpoints(decay_right))?;
        Ok(QuadResult {
            value: lo.value + hi.value,
            abs_err: lo.abs_err + hi.abs_err,
            evals: lo.evals + hi.evals,
        })
    }
}

/// Breakpoints on `[0, X]` for an integrand decaying like `e^{-rate x}`,
/// with `X` chosen so the neglected tail is below `1e-17` of the scale.
pub(crate) fn exp_breakpoints(rate: f64) -> Vec<f64> {
    let end = (39.0 + (1.0 + 1.0 / rate).ln()) / rate;
    let pieces = (end / 2.0).ceil().clamp(1.0, 400.0) as usize;
    (0..=pieces)
        .map(|i| end * i as f64 / pieces as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let r = q
            .integrate(|x| c(x.powi(10) - 3.0 * x), &[0.0, 2.0])
            .unwrap();
        let exact = 2f64.powi(11) / 11.0 - 6.0;
        assert!((r.value.re - exact).abs() < 1e-12 * exact.abs());
    }

    #[test]
    fn oscillatory_complex() {
        // \int_0^{10} e^{i 7 x} dx = (e^{70 i} - 1) / (7 i)
        let q = Quadrature::default();
        let r = q
            .integrate(|x| Complex64::new(0.0, 7.0 * x).exp(), &[0.0, 5.0, 10.0])
            .unwrap();
        let exact = (Complex64::new(0.0, 70.0).exp() - 1.0) / Complex64::new(0.0, 7.0);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn endpoint_singularities() {
        // \int_0^1 t^{-1/2} (1-t)^{-1/2} dt = pi
        let q = Quadrature::default();
        let r = q
            .integrate_endpoint_singular(
                |_, dl, dr| c(dl.powf(-0.5) * dr.powf(-0.5)),
                0.0,
                1.0,
                0.5,
                0.5,
            )
            .unwrap();
        assert!((r.value.re - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn budget_exhaustion_reports_partial() {
        let q = Quadrature::new(0.0, 1e-15).with_max_intervals(3);
        let err = q
            .integrate(|x| Complex64::new(0.0, 200.0 * x).exp(), &[0.0, 10.0])
            .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
