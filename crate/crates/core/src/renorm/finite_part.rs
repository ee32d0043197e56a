use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::expansion::{fit_boundary_expansion, Anchor, Order, PhgExpansion};
use super::RenormError;
use crate::numerics::{lagrange_eval, simpson, simpson_with_error};

/// Regularization scheme that produced a [`RenormalizedValue`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Hadamard,
    Riesz,
}

/// One divergent term `coefficient * eps^{-inverse_power} * log(1/eps)^{log_power}`
/// of the truncated integral over `{x >= eps}` at the given end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergentTerm {
    pub end: Anchor,
    pub inverse_power: f64,
    pub log_power: u32,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormalizedValue {
    pub finite_part: f64,
    pub divergent_coefficients: Vec<DivergentTerm>,
    pub method: Method,
    pub estimated_error: f64,
}

impl RenormalizedValue {
    /// Coefficient of `eps^{-k} log(1/eps)^p` summed over ends.
    pub fn divergent(&self, inverse_power: f64, log_power: u32) -> f64 {
        self.divergent_coefficients
            .iter()
            .filter(|d| (d.inverse_power - inverse_power).abs() < 1e-12 && d.log_power == log_power)
            .map(|d| d.coefficient)
            .sum()
    }
}

/// Chart data for an end at which the integrand may diverge.
#[derive(Clone, Debug, PartialEq)]
pub struct EndChart {
    /// Boundary defining function of this end at every grid node.
    pub x: Vec<f64>,
    /// `|dx/dsigma|` at every grid node.
    pub dx: Vec<f64>,
    pub basis: Vec<Order>,
}

/// Integrand `F(sigma) dsigma` on a uniform grid over `[0, 1]`, i.e. the
/// integrand already multiplied by the measure density. Values at a
/// divergent boundary node are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct Integrand {
    pub density: Vec<f64>,
    pub total_bdf: Vec<f64>,
    pub left: Option<EndChart>,
    pub right: Option<EndChart>,
}

impl Integrand {
    pub fn intervals(&self) -> usize {
        self.density.len() - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    pub fn with_density(&self, density: Vec<f64>) -> Self {
        Self {
            density,
            total_bdf: self.total_bdf.clone(),
            left: self.left.clone(),
            right: self.right.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HadamardOptions {
    /// Nodes used for the expansion fit at each end; `None` picks a default.
    pub fit_nodes: Option<usize>,
    /// Estimated errors above this are reported as accuracy errors.
    pub tolerance: f64,
}

impl Default for HadamardOptions {
    fn default() -> Self {
        Self {
            fit_nodes: None,
            tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszOptions {
    pub hadamard: HadamardOptions,
    /// Continuation stencil around `z = 0` (nonzero points).
    pub stencil: Vec<f64>,
    /// Probes in the half-plane of absolute convergence, evaluated by direct
    /// quadrature and compared against the continued values.
    pub probes: Vec<f64>,
    pub max_pole_order: u32,
    pub regular_degree: usize,
}

impl Default for RieszOptions {
    fn default() -> Self {
        let stencil = (1..=6)
            .flat_map(|k| {
                let z = 0.004 * k as f64;
                [z, -z]
            })
            .collect();
        Self {
            hadamard: HadamardOptions::default(),
            stencil,
            probes: Vec::new(),
            max_pole_order: 2,
            regular_degree: 4,
        }
    }
}

/// `int_0^X x^{z+s} (log x)^p dx`, analytically continued in the exponent.
/// At `z + s = -1` this is the finite part `log(X)^{p+1} / (p+1)`.
pub fn model_integral(exponent: f64, log_power: u32, upper: f64, z: f64) -> f64 {
    let m = exponent + z + 1.0;
    let l = upper.ln();
    if m.abs() < 1e-14 {
        return l.powi(log_power as i32 + 1) / (log_power as f64 + 1.0);
    }
    let xm = upper.powf(m);
    match log_power {
        0 => xm / m,
        1 => xm * (l / m - 1.0 / (m * m)),
        2 => xm * (l * l / m - 2.0 * l / (m * m) + 2.0 / (m * m * m)),
        p => {
            // Integration by parts recursion for higher log powers.
            xm * l.powi(p as i32) / m - (p as f64 / m) * model_integral(exponent, p - 1, upper, z)
        }
    }
}

fn divergent_terms(end: Anchor, exponent: f64, log_power: u32, c: f64) -> Vec<DivergentTerm> {
    let m = exponent + 1.0;
    let term = |k: f64, p: u32, v: f64| DivergentTerm {
        end,
        inverse_power: k,
        log_power: p,
        coefficient: c * v,
    };
    if m > 1e-12 || c == 0.0 {
        return Vec::new();
    }
    if m.abs() <= 1e-12 {
        let p = log_power + 1;
        let sign = if p % 2 == 0 { -1.0 } else { 1.0 };
        return vec![term(0.0, p, sign / p as f64)];
    }
    let k = -m;
    match log_power {
        0 => vec![term(k, 0, 1.0 / k)],
        1 => vec![term(k, 1, -1.0 / k), term(k, 0, 1.0 / (k * k))],
        _ => vec![
            term(k, 2, 1.0 / k),
            term(k, 1, -2.0 / (k * k)),
            term(k, 0, 2.0 / (k * k * k)),
        ],
    }
}

/// A boundary collar: nodes `0..=m` counted from the end, with the fitted
/// expansion of `F / |dx/dsigma|` in the end's bdf.
struct Collar {
    anchor: Anchor,
    nodes: Vec<usize>,
    x: Vec<f64>,
    dx: Vec<f64>,
    expansion: PhgExpansion,
    fit_x_max: f64,
}

/// Highest regular power added to a trial basis before fitting, so that the
/// smooth part of the integrand does not leak into the singular coefficients.
const REGULAR_FIT_DEGREE: i32 = 6;

fn augmented_basis(basis: &[Order]) -> Vec<Order> {
    let top = basis
        .iter()
        .filter(|o| o.log_power == 0)
        .map(|o| o.exponent)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = basis.to_vec();
    for s in 0..=REGULAR_FIT_DEGREE {
        let s = s as f64;
        if s > top + 1e-9 {
            out.push(Order::new(s, 0));
        }
    }
    out
}

fn default_fit_nodes(m: usize, basis_len: usize) -> usize {
    (2 * basis_len + 4).min(m)
}

fn build_collar(
    f: &Integrand,
    chart: &EndChart,
    anchor: Anchor,
    m: usize,
    opts: &HadamardOptions,
) -> Result<Collar, RenormError> {
    let n = f.intervals();
    if chart.x.len() != n + 1 || chart.dx.len() != n + 1 {
        return Err(RenormError::Input("end chart does not match the grid".into()));
    }
    let nodes: Vec<usize> = (0..=m)
        .map(|j| match anchor {
            Anchor::Left => j,
            Anchor::Right => n - j,
        })
        .collect();
    let x: Vec<f64> = nodes.iter().map(|&i| chart.x[i]).collect();
    let dx: Vec<f64> = nodes.iter().map(|&i| chart.dx[i].abs()).collect();
    let basis = augmented_basis(&chart.basis);
    let k = opts
        .fit_nodes
        .unwrap_or_else(|| default_fit_nodes(m, basis.len()))
        .min(m);
    let samples: Vec<f64> = (1..=k).map(|j| f.density[nodes[j]] / dx[j]).collect();
    let expansion = fit_boundary_expansion(&samples, &x[1..=k], &basis, anchor)?;
    Ok(Collar {
        anchor,
        nodes,
        fit_x_max: x[k],
        x,
        dx,
        expansion,
    })
}

impl Collar {
    /// `x^z (F - model dx)` on the collar nodes, node 0 by extrapolation.
    fn remainder(&self, density: &[f64], z: f64) -> Vec<f64> {
        let mut r: Vec<f64> = (0..self.nodes.len())
            .map(|j| {
                if j == 0 {
                    return 0.0;
                }
                let x = self.x[j];
                let v = density[self.nodes[j]] - self.expansion.eval(x) * self.dx[j];
                if z == 0.0 {
                    v
                } else {
                    x.powf(z) * v
                }
            })
            .collect();
        let xs = [1.0, 2.0, 3.0, 4.0];
        r[0] = lagrange_eval(&xs, &r[1..5], 0.0);
        r
    }

    fn model_part(&self, z: f64) -> f64 {
        let upper = *self.x.last().unwrap();
        self.expansion
            .terms
            .iter()
            .map(|t| t.coefficient * model_integral(t.exponent, t.log_power, upper, z))
            .sum()
    }

    fn divergences(&self) -> Vec<DivergentTerm> {
        self.expansion
            .terms
            .iter()
            .flat_map(|t| divergent_terms(self.anchor, t.exponent, t.log_power, t.coefficient))
            .collect()
    }

    fn fit_error(&self) -> f64 {
        self.expansion.residual * self.fit_x_max
    }
}

/// Layout of collars and the plain middle region.
struct Split {
    collars: Vec<Collar>,
    middle: Option<(usize, usize)>,
}

fn split(f: &Integrand, opts: &HadamardOptions) -> Result<Split, RenormError> {
    let n = f.intervals();
    if n < 16 || n % 4 != 0 {
        return Err(RenormError::Input(format!(
            "grid needs a multiple of 4 intervals, at least 16 (got {n})"
        )));
    }
    if f.total_bdf.len() != n + 1 {
        return Err(RenormError::Input("total bdf does not match the grid".into()));
    }
    let m = n / 2;
    let mut collars = Vec::new();
    if let Some(c) = &f.left {
        collars.push(build_collar(f, c, Anchor::Left, m, opts)?);
    }
    if let Some(c) = &f.right {
        collars.push(build_collar(f, c, Anchor::Right, m, opts)?);
    }
    let middle = match (&f.left, &f.right) {
        (Some(_), Some(_)) => None,
        (Some(_), None) => Some((m, n)),
        (None, Some(_)) => Some((0, m)),
        (None, None) => Some((0, n)),
    };
    if let Some((a, b)) = middle {
        if f.density[a..=b].iter().any(|v| !v.is_finite()) {
            return Err(RenormError::Input(
                "non-finite integrand away from the divergent ends".into(),
            ));
        }
    }
    Ok(Split { collars, middle })
}

/// Hadamard finite part: fitted divergent model terms integrated in closed
/// form, plus quadrature of the integrable remainder.
pub fn finite_part_hadamard(
    f: &Integrand,
    opts: &HadamardOptions,
) -> Result<RenormalizedValue, RenormError> {
    let lenient = HadamardOptions { tolerance: f64::INFINITY, ..opts.clone() };
    let [l, r] = finite_part_hadamard_halves(f, &lenient)?;
    let total = l.finite_part + r.finite_part;
    let err = l.estimated_error + r.estimated_error;
    if err > opts.tolerance {
        return Err(RenormError::Accuracy {
            estimate: err,
            tolerance: opts.tolerance,
        });
    }
    let mut divergent = l.divergent_coefficients;
    divergent.extend(r.divergent_coefficients);
    Ok(RenormalizedValue {
        finite_part: total,
        divergent_coefficients: divergent,
        method: Method::Hadamard,
        estimated_error: err,
    })
}

/// Hadamard finite parts over `[0, 1/2]` and `[1/2, 1]` separately.
pub fn finite_part_hadamard_halves(
    f: &Integrand,
    opts: &HadamardOptions,
) -> Result<[RenormalizedValue; 2], RenormError> {
    let layout = split(f, opts)?;
    let h = f.h();
    let m = f.intervals() / 2;
    let mut parts = [(0.0, 0.0, Vec::new()), (0.0, 0.0, Vec::new())];
    for c in &layout.collars {
        let r = c.remainder(&f.density, 0.0);
        let (q, e) = simpson_with_error(&r, h);
        let p = &mut parts[if c.anchor == Anchor::Left { 0 } else { 1 }];
        p.0 += q + c.model_part(0.0);
        p.1 += e + c.fit_error();
        p.2.extend(c.divergences());
    }
    if let Some((a, b)) = layout.middle {
        for (k, (lo, hi)) in [(0, (a, m)), (1, (m, b))] {
            if lo < hi {
                let (q, e) = simpson_with_error(&f.density[lo..=hi], h);
                parts[k].0 += q;
                parts[k].1 += e;
            }
        }
    }
    let out = parts.map(|(total, err, divergent)| RenormalizedValue {
        finite_part: total,
        divergent_coefficients: divergent,
        method: Method::Hadamard,
        estimated_error: err + 1e-15 * total.abs(),
    });
    if let Some(v) = out.iter().find(|v| v.estimated_error > opts.tolerance) {
        return Err(RenormError::Accuracy {
            estimate: v.estimated_error,
            tolerance: opts.tolerance,
        });
    }
    Ok(out)
}

fn continued_zeta(f: &Integrand, layout: &Split, z: f64) -> f64 {
    let h = f.h();
    let mut total = 0.0;
    for c in &layout.collars {
        total += simpson(&c.remainder(&f.density, z), h) + c.model_part(z);
    }
    if let Some((a, b)) = layout.middle {
        let v: Vec<f64> = (a..=b)
            .map(|i| {
                let x = f.total_bdf[i];
                if x > 0.0 {
                    x.powf(z) * f.density[i]
                } else {
                    0.0
                }
            })
            .collect();
        total += simpson(&v, h);
    }
    total
}

fn direct_zeta(f: &Integrand, z: f64) -> f64 {
    let v: Vec<f64> = f
        .total_bdf
        .iter()
        .zip(&f.density)
        .map(|(&x, &d)| if x > 0.0 && d.is_finite() { x.powf(z) * d } else { 0.0 })
        .collect();
    simpson(&v, f.h())
}

/// Riesz finite part `FP_{z=0} int x^z F`: the zeta function of the
/// integrand is evaluated on a stencil around 0 by analytic continuation of
/// the fitted end expansions, and a Laurent model with poles up to the
/// configured order is fitted to it.
pub fn finite_part_riesz(
    f: &Integrand,
    opts: &RieszOptions,
) -> Result<RenormalizedValue, RenormError> {
    let pole_order = [&f.left, &f.right]
        .iter()
        .filter_map(|c| c.as_ref())
        .flat_map(|c| c.basis.iter())
        .filter(|o| (o.exponent + 1.0).abs() < 1e-12)
        .map(|o| o.log_power + 1)
        .max()
        .unwrap_or(0);
    if pole_order > opts.max_pole_order {
        return Err(RenormError::Model(format!(
            "pole of order {pole_order} at z = 0 exceeds the maximum {}",
            opts.max_pole_order
        )));
    }
    if opts.stencil.iter().any(|z| *z == 0.0) {
        return Err(RenormError::Input("stencil must avoid z = 0".into()));
    }
    let ncols = pole_order as usize + opts.regular_degree + 1;
    if opts.stencil.len() < ncols + 2 {
        return Err(RenormError::Input(format!(
            "{} stencil points cannot support a {ncols}-term Laurent model",
            opts.stencil.len()
        )));
    }
    let layout = split(f, &opts.hadamard)?;
    let values: Vec<f64> = opts
        .stencil
        .iter()
        .map(|&z| continued_zeta(f, &layout, z))
        .collect();

    let zmax = opts.stencil.iter().fold(0.0f64, |a, z| a.max(z.abs()));
    let power = |j: usize| j as i32 - pole_order as i32;
    let a = DMatrix::from_fn(opts.stencil.len(), ncols, |i, j| {
        (opts.stencil[i] / zmax).powi(power(j))
    });
    let b = DVector::from_column_slice(&values);
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 0.0)
        .map_err(|e| RenormError::Conditioning(e.to_string()))?;
    let fit_residual = (&a * &coef - &b).amax();
    let c0 = coef[pole_order as usize];

    let mut err = fit_residual;
    for c in &layout.collars {
        err += c.fit_error();
    }
    for &z in &opts.probes {
        err = err.max((direct_zeta(f, z) - continued_zeta(f, &layout, z)).abs());
    }
    // Quadrature error is shared with the Hadamard route on the remainder.
    let h = f.h();
    for c in &layout.collars {
        err += simpson_with_error(&c.remainder(&f.density, 0.0), h).1;
    }
    if let Some((a, b)) = layout.middle {
        err += simpson_with_error(&f.density[a..=b], h).1;
    }
    err += 1e-15 * c0.abs();
    if err > opts.hadamard.tolerance {
        return Err(RenormError::Accuracy {
            estimate: err,
            tolerance: opts.hadamard.tolerance,
        });
    }
    Ok(RenormalizedValue {
        finite_part: c0,
        divergent_coefficients: layout.collars.iter().flat_map(|c| c.divergences()).collect(),
        method: Method::Riesz,
        estimated_error: err,
    })
}
