//! Adiabatic energies: eigenvalues of the instantaneous Hamiltonian.

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Real symmetric Hamiltonian at time `tau` (couplings taken as magnitudes;
/// their phases do not affect the spectrum).
pub fn hamiltonian(params: &ModelParams, tau: f64) -> Result<[[f64; 3]; 3]> {
    if tau == 0.0 || !tau.is_finite() {
        return Err(Error::Domain(format!(
            "Hamiltonian is singular or undefined at tau = {tau}"
        )));
    }
    let (g1, g2) = (params.g1(), params.g2());
    Ok([
        [params.k2() / tau, g1, g2],
        [g1, params.beta1() * tau, 0.0],
        [g2, 0.0, params.beta2() * tau],
    ])
}

/// Eigenvalues of a real symmetric 3x3 matrix in ascending order, by cyclic
/// Jacobi rotations.
pub fn symmetric_eigenvalues(m: [[f64; 3]; 3]) -> [f64; 3] {
    let mut a = m;
    let scale = a.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    for _sweep in 0..50 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= f64::EPSILON * 1e-3 * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let r = 3 - p - q;
            let (arp, arq) = (a[r][p], a[r][q]);
            a[p][p] -= t * a[p][q];
            a[q][q] += t * a[p][q];
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(f64::total_cmp);
    ev
}

/// The three adiabatic energies at `tau`, ascending.
pub fn adiabatic_energies(params: &ModelParams, tau: f64) -> Result<[f64; 3]> {
    Ok(symmetric_eigenvalues(hamiltonian(params, tau)?))
}

/// Smallest gap between neighbouring adiabatic energies over a time grid.
pub fn min_gap(params: &ModelParams, taus: &[f64]) -> Result<f64> {
    let mut gap = f64::INFINITY;
    for &t in taus {
        let e = adiabatic_energies(params, t)?;
        gap = gap.min(e[1] - e[0]).min(e[2] - e[1]);
    }
    Ok(gap)
}
