//! Small numerical kernels shared by the geometry modules: composite
//! quadrature on uniform grids, tridiagonal solves and polynomial
//! extrapolation to a grid endpoint.

/// Composite Simpson weights for `n + 1` equispaced nodes with spacing `h`.
///
/// Falls back to Simpson 3/8 on the last three intervals when `n` is odd so
/// the rule stays fourth order for every `n >= 3`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2, "simpson needs at least two intervals");
    let mut w = vec![0.0; n + 1];
    if n % 2 == 0 {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = if i == 0 || i == n {
                h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
    } else {
        assert!(n >= 3, "odd simpson needs at least three intervals");
        let m = n - 3;
        if m > 0 {
            for i in 0..=m {
                w[i] += if i == 0 || i == m {
                    h / 3.0
                } else if i % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                };
            }
        }
        let c = 3.0 * h / 8.0;
        w[m] += c;
        w[m + 1] += 3.0 * c;
        w[m + 2] += 3.0 * c;
        w[m + 3] += c;
    }
    w
}

/// Simpson quadrature of equispaced samples.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    if n == 1 {
        return 0.5 * h * (values[0] + values[1]);
    }
    simpson_weights(n, h)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Trapezoid quadrature of equispaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Trapezoid rule on arbitrary (sorted) abscissae.
pub fn trapezoid_nonuniform(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Simpson estimate together with a Richardson error estimate from the
/// half-resolution rule. Requires `values.len() - 1` divisible by 4 for the
/// coarse rule to line up; otherwise the estimate falls back to the
/// Simpson/trapezoid gap.
pub fn simpson_with_error(values: &[f64], h: f64) -> (f64, f64) {
    let n = values.len() - 1;
    let fine = simpson(values, h);
    if n >= 8 && n % 4 == 0 {
        let coarse: Vec<f64> = values.iter().step_by(2).copied().collect();
        let c = simpson(&coarse, 2.0 * h);
        (fine, (fine - c).abs() / 15.0)
    } else {
        (fine, (fine - trapezoid(values, h)).abs())
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm).
///
/// `lower[i]` multiplies `x[i-1]` in row `i` (so `lower[0]` is ignored) and
/// `upper[i]` multiplies `x[i+1]` (so `upper[n-1]` is ignored).
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Value at `x0` of the interpolating polynomial through `(xs, ys)`.
pub fn lagrange_eval(xs: &[f64], ys: &[f64], x0: f64) -> f64 {
    let mut acc = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut l = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                l *= (x0 - xj) / (xi - xj);
            }
        }
        acc += l * yi;
    }
    acc
}

/// Least-squares slope of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        for n in [4usize, 7, 10] {
            let h = 1.0 / n as f64;
            let v: Vec<f64> = (0..=n).map(|i| (i as f64 * h).powi(3)).collect();
            assert!((simpson(&v, h) - 0.25).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn thomas_matches_dense_solution() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, 2.0, -1.0, 0.5];
        let mut rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut r = diag[i] * x[i];
                if i > 0 {
                    r += lower[i] * x[i - 1];
                }
                if i < 3 {
                    r += upper[i] * x[i + 1];
                }
                r
            })
            .collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        for (a, b) in rhs.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn lagrange_reproduces_quadratic() {
        let xs = [1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x - 2.0 * x).collect();
        assert!((lagrange_eval(&xs, &ys, 0.0)).abs() < 1e-13);
    }
}
