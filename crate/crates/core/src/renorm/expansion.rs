use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::RenormError;

/// Largest logarithmic power accepted in a trial basis.
pub const MAX_LOG_POWER: u32 = 2;

/// Boundary face an expansion is taken at, in the compactified coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Anchor {
    /// The face at `sigma = 0`.
    Left,
    /// The face at `sigma = 1`.
    Right,
}

/// One trial order `x^s (log x)^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub exponent: f64,
    pub log_power: u32,
}

impl Order {
    pub const fn new(exponent: f64, log_power: u32) -> Self {
        Self {
            exponent,
            log_power,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        x.powf(self.exponent) * x.ln().powi(self.log_power as i32)
    }
}

/// Default trial basis at a funnel face: `x^{-2}, ..., x^{2}` without logs.
pub fn funnel_basis() -> Vec<Order> {
    (-2..=2).map(|s| Order::new(s as f64, 0)).collect()
}

/// Default trial basis at a cusp face: the funnel basis plus `x^{-1} log x`.
pub fn cusp_basis() -> Vec<Order> {
    let mut b = funnel_basis();
    b.insert(1, Order::new(-1.0, 1));
    b
}

/// A fitted coefficient `a_{s,p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhgTerm {
    pub exponent: f64,
    pub log_power: u32,
    pub coefficient: f64,
}

/// Truncated polyhomogeneous expansion `sum a_{s,p} x^s (log x)^p` at one
/// boundary face, with the least-squares residual of the fit it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhgExpansion {
    pub terms: Vec<PhgTerm>,
    pub anchor: Anchor,
    /// Max abs deviation between samples and the fitted model.
    pub residual: f64,
}

impl PhgExpansion {
    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * Order::new(t.exponent, t.log_power).eval(x))
            .sum()
    }

    /// Coefficient of `x^s (log x)^p`, zero when the order was not fitted.
    pub fn coefficient(&self, exponent: f64, log_power: u32) -> f64 {
        self.terms
            .iter()
            .find(|t| (t.exponent - exponent).abs() < 1e-12 && t.log_power == log_power)
            .map_or(0.0, |t| t.coefficient)
    }
}

fn check_basis(basis: &[Order]) -> Result<(), RenormError> {
    for (i, a) in basis.iter().enumerate() {
        if a.log_power > MAX_LOG_POWER {
            return Err(RenormError::Model(format!(
                "log power {} exceeds the maximum {MAX_LOG_POWER}",
                a.log_power
            )));
        }
        for b in &basis[i + 1..] {
            if a.log_power == b.log_power && (a.exponent - b.exponent).abs() < 1e-6 {
                return Err(RenormError::Conditioning(format!(
                    "near-duplicate trial orders x^{} and x^{}",
                    a.exponent, b.exponent
                )));
            }
        }
    }
    Ok(())
}

/// Least-squares fit of `samples` against the trial `basis` in the boundary
/// defining function `bdf`.
///
/// The bdf samples must be strictly positive and strictly monotone, and there
/// must be at least twice as many samples as basis terms.
pub fn fit_boundary_expansion(
    samples: &[f64],
    bdf: &[f64],
    basis: &[Order],
    anchor: Anchor,
) -> Result<PhgExpansion, RenormError> {
    if samples.len() != bdf.len() {
        return Err(RenormError::Input(format!(
            "{} samples but {} bdf values",
            samples.len(),
            bdf.len()
        )));
    }
    if basis.is_empty() || samples.len() < 2 * basis.len() {
        return Err(RenormError::Input(format!(
            "{} samples cannot support a {}-term basis",
            samples.len(),
            basis.len()
        )));
    }
    if bdf.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(RenormError::Input("bdf values must be positive".into()));
    }
    let increasing = bdf.windows(2).all(|w| w[1] > w[0]);
    let decreasing = bdf.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(RenormError::Input("bdf values are not strictly monotone".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(RenormError::Input("non-finite sample".into()));
    }
    check_basis(basis)?;

    // Columns are scaled by their value at the outermost sample so the
    // singular values reflect shape rather than magnitude.
    let x_ref = bdf.iter().cloned().fold(0.0, f64::max);
    let scales: Vec<f64> = basis
        .iter()
        .map(|o| {
            let v = o.eval(x_ref).abs();
            if v > 0.0 {
                v
            } else {
                1.0
            }
        })
        .collect();
    // Rows are weighted by x^{-s_min} so the leading singular order does
    // not swamp the least-squares problem.
    let s_min = basis.iter().map(|o| o.exponent).fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = bdf.iter().map(|x| (x / x_ref).powf(-s_min)).collect();
    let rows = samples.len();
    let a = DMatrix::from_fn(rows, basis.len(), |i, j| {
        weights[i] * basis[j].eval(bdf[i]) / scales[j]
    });
    let b = DVector::from_iterator(rows, samples.iter().zip(&weights).map(|(v, w)| v * w));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > 1e14 {
        return Err(RenormError::Conditioning(format!(
            "trial basis condition number {:.3e}",
            smax / smin
        )));
    }
    let coef = svd
        .solve(&b, 0.0)
        .map_err(|e| RenormError::Conditioning(e.to_string()))?;
    let residual = (0..rows)
        .map(|i| ((&a.row(i) * &coef)[0] - b[i]).abs() / weights[i])
        .fold(0.0, f64::max);
    let terms = basis
        .iter()
        .zip(coef.iter())
        .zip(&scales)
        .map(|((o, c), s)| PhgTerm {
            exponent: o.exponent,
            log_power: o.log_power,
            coefficient: c / s,
        })
        .collect();
    Ok(PhgExpansion {
        terms,
        anchor,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic(k: usize) -> Vec<f64> {
        (4..4 + k).map(|j| 2f64.powi(-(j as i32))).collect()
    }

    #[test]
    fn recovers_pole_plus_constant() {
        let x = dyadic(8);
        let f: Vec<f64> = x.iter().map(|x| 3.0 / x + 5.0).collect();
        let e = fit_boundary_expansion(
            &f,
            &x,
            &[Order::new(-1.0, 0), Order::new(0.0, 0)],
            Anchor::Left,
        )
        .unwrap();
        assert!((e.coefficient(-1.0, 0) - 3.0).abs() < 1e-10);
        assert!((e.coefficient(0.0, 0) - 5.0).abs() < 1e-8);
    }

    #[test]
    fn recovers_log_term() {
        let x = dyadic(10);
        let f: Vec<f64> = x.iter().map(|x| 2.0 * x.ln() / x).collect();
        let basis = [Order::new(-1.0, 1), Order::new(-1.0, 0), Order::new(0.0, 0)];
        let e = fit_boundary_expansion(&f, &x, &basis, Anchor::Left).unwrap();
        assert!((e.coefficient(-1.0, 1) - 2.0).abs() < 1e-10);
        assert!(e.coefficient(-1.0, 0).abs() < 1e-8);
        assert!(e.coefficient(0.0, 0).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_monotone_bdf() {
        let x = [0.1, 0.05, 0.07, 0.01];
        let f = [1.0; 4];
        let err = fit_boundary_expansion(&f, &x, &[Order::new(0.0, 0)], Anchor::Left);
        assert!(matches!(err, Err(RenormError::Input(_))));
    }

    #[test]
    fn rejects_near_duplicate_orders() {
        let x = dyadic(8);
        let f = vec![1.0; 8];
        let err = fit_boundary_expansion(
            &f,
            &x,
            &[Order::new(-1.0, 0), Order::new(-1.0 + 1e-9, 0)],
            Anchor::Left,
        );
        assert!(matches!(err, Err(RenormError::Conditioning(_))));
    }

    #[test]
    fn rejects_too_few_samples() {
        let x = dyadic(3);
        let err = fit_boundary_expansion(&[1.0; 3], &x, &funnel_basis(), Anchor::Left);
        assert!(matches!(err, Err(RenormError::Input(_))));
    }
}
