use std::f64::consts::PI;

use num_complex::Complex64;

use super::is_nonpositive_integer;
use crate::error::{Error, Result};

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(z)` for `Re z >= 0.5` (not necessarily the principal branch of
/// the log; only its exponential is used).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut series = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + series.ln()
}

/// Complex gamma function.
///
/// Uses the Lanczos approximation on `Re z >= 1/2` and the reflection
/// formula elsewhere. Relative accuracy is about `1e-14` for `|z| <= 50`.
pub fn gamma_c(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("gamma of non-finite argument {z}")));
    }
    if is_nonpositive_integer(z) {
        return Err(Error::Domain(format!("gamma has a pole at {}", z.re)));
    }
    Ok(gamma_unchecked(z))
}

fn gamma_unchecked(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        let s = (PI * z).sin();
        PI / (s * ln_gamma_right(1.0 - z).exp())
    } else {
        ln_gamma_right(z).exp()
    }
}

/// `ln sin(pi z)` without overflow for large `|Im z|` (branch unspecified).
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let iz = Complex64::i() * PI * z;
    if z.im.abs() < 1.0 {
        return (PI * z).sin().ln();
    }
    // sin(pi z) = e^{-i pi z} (e^{2 i pi z} - 1) / (2i) for Im z > 0, mirrored below.
    let ln_2i = Complex64::new(2f64.ln(), PI / 2.0);
    if z.im > 0.0 {
        -iz + (-(2.0 * iz).exp() + 1.0).ln() + Complex64::new(0.0, PI) - ln_2i
    } else {
        iz + (1.0 - (-2.0 * iz).exp()).ln() - ln_2i
    }
}

/// `ln Gamma(z)` on the whole plane minus the poles, for products of gamma
/// factors that would over- or underflow individually. Only the
/// exponential is meaningful: the imaginary part is not the principal branch.
pub fn ln_gamma_c(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("gamma of non-finite argument {z}")));
    }
    if is_nonpositive_integer(z) {
        return Err(Error::Domain(format!("gamma has a pole at {}", z.re)));
    }
    if z.re < 0.5 {
        Ok(PI.ln() - ln_sin_pi(z) - ln_gamma_right(1.0 - z))
    } else {
        Ok(ln_gamma_right(z))
    }
}

/// Reciprocal gamma function, `1 / Gamma(z)`; entire, zero at the poles.
pub fn rgamma_c(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        let s = (PI * z).sin();
        s * ln_gamma_right(1.0 - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}
