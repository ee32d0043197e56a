//! Gamma-type special functions for the determinant formulas: Riemann zeta
//! at real arguments, Barnes G and the double Gamma built on it, and the
//! logarithmic Gamma integral.

use std::f64::consts::PI;

use statrs::function::gamma::{digamma, gamma, ln_gamma};

use super::DeterminantError;

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `B_2, B_4, ..., B_20`.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// `(zeta(s), zeta'(s))` for real `s > 1` by Euler-Maclaurin summation
/// with cut-off `N = 20`.
pub fn riemann_zeta_with_derivative(s: f64) -> Result<(f64, f64), DeterminantError> {
    if !(s > 1.0) {
        return Err(DeterminantError::Domain(format!("zeta needs s > 1, got {s}")));
    }
    const N: usize = 20;
    let mut z = 0.0;
    let mut dz = 0.0;
    for n in 1..N {
        let x = n as f64;
        let t = x.powf(-s);
        z += t;
        dz -= t * x.ln();
    }
    let x = N as f64;
    let l = x.ln();
    let xs = x.powf(-s);
    // Integral tail, half endpoint value.
    z += x * xs / (s - 1.0) + 0.5 * xs;
    dz += -x * xs * (l / (s - 1.0) + 1.0 / ((s - 1.0) * (s - 1.0))) - 0.5 * xs * l;
    // -sum B_{2j}/(2j)! f^{(2j-1)}(N) with f = x^{-s}; the derivative term
    // uses d/ds of the rising factorial.
    let mut rising = s; // (s)_{2j-1}
    let mut drising = 1.0; // d/ds (s)_{2j-1}
    let mut fact = 2.0; // (2j)!
    let mut pow = xs / x; // N^{-s-2j+1}
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * rising * pow;
        z += term;
        dz += b / fact * (drising * pow - rising * pow * l);
        let k = 2 * j + 1;
        for m in [k, k + 1] {
            drising = drising * (s + m as f64) + rising;
            rising *= s + m as f64;
        }
        fact *= ((2 * j + 3) * (2 * j + 4)) as f64;
        pow /= x * x;
    }
    Ok((z, dz))
}

/// `zeta_R'(-1)` through the functional equation,
/// `zeta'(-1) = 1/12 - (gamma + log 2 pi)/12 + zeta'(2) / (2 pi^2)`.
pub fn zeta_prime_minus_one() -> f64 {
    let (_, dz2) = riemann_zeta_with_derivative(2.0).expect("s = 2 is in the domain");
    1.0 / 12.0 - (EULER_GAMMA + (2.0 * PI).ln()) / 12.0 + dz2 / (2.0 * PI * PI)
}

/// `log G(z)` for real `z > 0`, shifting up to `z >= 16` with
/// `G(z + 1) = Gamma(z) G(z)` and using the large-argument expansion there.
pub fn ln_barnes_g(z: f64) -> Result<f64, DeterminantError> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(DeterminantError::Domain(format!("Barnes G needs z > 0, got {z}")));
    }
    let mut shift = 0.0;
    let mut w = z;
    while w < 16.0 {
        shift += ln_gamma(w);
        w += 1.0;
    }
    // log G(u + 1) with u = w - 1.
    let u = w - 1.0;
    let lu = u.ln();
    let mut s = 0.5 * u * u * lu - 0.75 * u * u + 0.5 * u * (2.0 * PI).ln() - lu / 12.0
        + zeta_prime_minus_one();
    let mut p = 1.0;
    for k in 1..BERNOULLI_EVEN.len() {
        p /= u * u;
        let kf = k as f64;
        s += BERNOULLI_EVEN[k] / (4.0 * kf * (kf + 1.0)) * p;
    }
    Ok(s - shift)
}

pub fn barnes_g(z: f64) -> Result<f64, DeterminantError> {
    Ok(ln_barnes_g(z)?.exp())
}

/// Barnes double Gamma, normalized as `Gamma_2(s) = 1 / G(s)`.
pub fn barnes_gamma2(s: f64) -> Result<f64, DeterminantError> {
    Ok((-ln_barnes_g(s)?).exp())
}

/// `Gamma_log(z) = int_0^inf t^{z-1} e^{-t} log t dt = Gamma(z) psi(z)`,
/// continued to non-integer `z < 0`.
pub fn gamma_log(z: f64) -> Result<f64, DeterminantError> {
    if z <= 0.0 && z.fract() == 0.0 {
        return Err(DeterminantError::Domain(format!("Gamma_log has a pole at {z}")));
    }
    Ok(gamma(z) * digamma(z))
}
