//! Special functions over complex parameters.

mod gamma;
mod hyp2f1;

pub use gamma::{gamma_c, ln_gamma_c, rgamma_c};
pub use hyp2f1::{
    hyp2f1, hyp2f1_euler_quadrature, hyp2f1_scaled, hyp2f1_series, CutSide, EvalResult,
    Hyp2F1Input, Method, ScaledEvalResult,
};

use num_complex::Complex64;

/// True when `z` is (to rounding) a non-positive integer, i.e. a pole of
/// the gamma function.
pub(crate) fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}
