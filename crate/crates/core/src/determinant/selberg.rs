use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::special::{ln_barnes_g, zeta_prime_minus_one};
use super::DeterminantError;

/// Bound on the neglected part of the Selberg product.
pub const TAIL_TOL: f64 = 1e-12;

/// Primitive closed geodesic lengths with explicit multiplicities.
///
/// Whether `gamma` and `gamma^{-1}` are distinct primitive classes is left
/// to the data: a cylinder with one closed geodesic of length `l` is either
/// `l 1` or `l 2`, and the two readings differ by squaring `Z`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthSpectrum {
    entries: Vec<(f64, u32)>,
}

impl LengthSpectrum {
    pub fn new(mut entries: Vec<(f64, u32)>) -> Result<Self, DeterminantError> {
        for &(l, m) in &entries {
            if !(l > 0.0) || !l.is_finite() {
                return Err(DeterminantError::Domain(format!("length must be positive, got {l}")));
            }
            if m == 0 {
                return Err(DeterminantError::Domain("multiplicity must be positive".into()));
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(f64, u32)] {
        &self.entries
    }

    /// Parses `length multiplicity` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, DeterminantError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| DeterminantError::Parse { line: i + 1, msg };
            let mut fields = line.split_whitespace();
            let (Some(l), Some(m), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(err(format!("expected `length multiplicity`, got `{line}`")));
            };
            let l: f64 = l.parse().map_err(|_| err(format!("bad length `{l}`")))?;
            let m: u32 = m.parse().map_err(|_| err(format!("bad multiplicity `{m}`")))?;
            if !(l > 0.0) || !l.is_finite() || m == 0 {
                return Err(err(format!("need length > 0 and multiplicity >= 1, got `{line}`")));
            }
            entries.push((l, m));
        }
        Self::new(entries)
    }
}

/// A product value together with a bound on the omitted factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelbergValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// `Z(s) = prod_gamma prod_{k < k_max} (1 - e^{-(s+k) l(gamma)})`.
///
/// The bound uses `-log(1 - y) <= 2y` for `y <= 1/2`, summed as a
/// geometric series over the omitted `k`.
pub fn selberg_zeta_truncated(
    spectrum: &LengthSpectrum,
    s: f64,
    k_max: usize,
) -> Result<SelbergValue, DeterminantError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(DeterminantError::Domain(format!("Selberg product needs s > 0, got {s}")));
    }
    let mut log_z = 0.0;
    let mut log_tail = 0.0;
    for &(l, m) in &spectrum.entries {
        let m = m as f64;
        for k in 0..k_max {
            log_z += m * (-(-(s + k as f64) * l).exp()).ln_1p();
        }
        let y = (-(s + k_max as f64) * l).exp();
        if y > 0.5 {
            return Err(DeterminantError::Domain(format!(
                "no tail certificate for length {l} with {k_max} factors"
            )));
        }
        log_tail += 2.0 * m * y / (-(-l).exp_m1());
    }
    let value = log_z.exp();
    Ok(SelbergValue {
        value,
        tail_bound: value * log_tail.exp_m1(),
    })
}

/// `Z(s)` with enough factors that the tail bound is below [`TAIL_TOL`].
pub fn selberg_zeta(spectrum: &LengthSpectrum, s: f64) -> Result<SelbergValue, DeterminantError> {
    let shortest = spectrum.entries.first().map_or(1.0, |e| e.0);
    let total: f64 = spectrum.entries.iter().map(|e| e.1 as f64).sum();
    // 2 total e^{-(s+k) l} / (1 - e^{-l}) < TAIL_TOL / 4 at the shortest length.
    let need = ((8.0 * total.max(1.0) / TAIL_TOL / -(-shortest).exp_m1()).ln() / shortest - s).ceil();
    let k_max = need.max(1.0) as usize;
    let z = selberg_zeta_truncated(spectrum, s, k_max)?;
    if !(z.tail_bound < TAIL_TOL) {
        return Err(DeterminantError::Domain(format!(
            "tail bound {} above tolerance",
            z.tail_bound
        )));
    }
    Ok(z)
}

/// `d/ds Z` at `s` by central differences of `log Z` with step `1e-4` and
/// one Richardson pass.
pub fn selberg_zeta_derivative(spectrum: &LengthSpectrum, s: f64) -> Result<f64, DeterminantError> {
    let log_z = |x: f64| selberg_zeta(spectrum, x).map(|z| z.value.ln());
    let h = 1e-4;
    let d1 = (log_z(s + h)? - log_z(s - h)?) / (2.0 * h);
    let d2 = (log_z(s + 2.0 * h)? - log_z(s - 2.0 * h)?) / (4.0 * h);
    Ok(selberg_zeta(spectrum, s)?.value * (4.0 * d1 - d2) / 3.0)
}

/// Reading of the cusp prefactor `(sqrt 2 pi)^{-n_C}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CuspPrefactor {
    /// `sqrt(2) * pi`.
    #[default]
    SqrtTwoTimesPi,
    /// `sqrt(2 pi)`.
    SqrtOfTwoPi,
}

impl CuspPrefactor {
    pub fn value(&self) -> f64 {
        match self {
            CuspPrefactor::SqrtTwoTimesPi => 2f64.sqrt() * PI,
            CuspPrefactor::SqrtOfTwoPi => (2.0 * PI).sqrt(),
        }
    }
}

/// Topological data and the constants `E`, `F` of the determinant formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelbergParams {
    pub chi: i32,
    pub n_cusps: u32,
    pub e: f64,
    pub f: f64,
}

impl SelbergParams {
    /// `E = chi (log(2 pi)/2 - 2 zeta'(-1) + 1/4)`, `F = -chi`.
    pub fn new(chi: i32, n_cusps: u32) -> Self {
        let c = chi as f64;
        Self {
            chi,
            n_cusps,
            e: c * (0.5 * (2.0 * PI).ln() - 2.0 * zeta_prime_minus_one() + 0.25),
            f: -c,
        }
    }
}

/// `det(Delta + s(s-1)) = Z(s) e^{E + F s(1-s)} (Gamma(s) / ((2 pi)^s Gamma_2(s)^2))^chi
/// (2^s sqrt(pi(s - 1/2)) Gamma(s - 1/2))^{-n_C}`.
pub fn det_from_selberg(
    spectrum: &LengthSpectrum,
    params: &SelbergParams,
    s: f64,
) -> Result<SelbergValue, DeterminantError> {
    let z = selberg_zeta(spectrum, s)?;
    let mut log_pre = params.e + params.f * s * (1.0 - s);
    if params.chi != 0 {
        // Gamma_2 = 1 / G.
        log_pre += params.chi as f64 * (ln_gamma(s) - s * (2.0 * PI).ln() + 2.0 * ln_barnes_g(s)?);
    }
    if params.n_cusps > 0 {
        if !(s > 0.5) {
            return Err(DeterminantError::Domain(format!("cusp factor needs s > 1/2, got {s}")));
        }
        let cusp = s * 2f64.ln() + 0.5 * (PI * (s - 0.5)).ln() + ln_gamma(s - 0.5);
        log_pre -= params.n_cusps as f64 * cusp;
    }
    let pre = log_pre.exp();
    Ok(SelbergValue {
        value: z.value * pre,
        tail_bound: z.tail_bound * pre,
    })
}

/// `det Delta` of the hyperbolic metric: `C Z(1)`, or `C Z'(1)` for finite
/// area, with `C = e^E (2 pi)^{-chi} p^{-n_C}`.
pub fn det_hyperbolic(
    spectrum: &LengthSpectrum,
    params: &SelbergParams,
    finite_area: bool,
    prefactor: CuspPrefactor,
) -> Result<SelbergValue, DeterminantError> {
    let c = (params.e - params.chi as f64 * (2.0 * PI).ln()).exp()
        * prefactor.value().powi(-(params.n_cusps as i32));
    if finite_area {
        let d = selberg_zeta_derivative(spectrum, 1.0)?;
        // The difference quotient dominates the product tail here.
        return Ok(SelbergValue {
            value: c * d,
            tail_bound: c * d.abs() * 1e-8,
        });
    }
    let z = selberg_zeta(spectrum, 1.0)?;
    Ok(SelbergValue {
        value: c * z.value,
        tail_bound: c * z.tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `log Z(s) = -sum_m e^{-m s l} / (m (1 - e^{-m l}))` per primitive
    /// length, summed until the terms underflow.
    fn log_zeta_series(entries: &[(f64, u32)], s: f64) -> f64 {
        entries
            .iter()
            .map(|&(l, mult)| {
                let mut acc = 0.0;
                for m in 1..400 {
                    let mf = m as f64;
                    acc -= (-mf * s * l).exp() / (mf * -(-mf * l).exp_m1());
                }
                mult as f64 * acc
            })
            .sum()
    }

    #[test]
    fn parse_spectrum() {
        let s = LengthSpectrum::parse("# cylinder\n3.0 1\n\n1.5 2  # short\n").unwrap();
        assert_eq!(s.entries(), &[(1.5, 2), (3.0, 1)]);
        let e = LengthSpectrum::parse("1.0 1\n-2 1\n").unwrap_err();
        assert_eq!(e, DeterminantError::Parse { line: 2, msg: "need length > 0 and multiplicity >= 1, got `-2 1`".into() });
        assert!(LengthSpectrum::parse("1.0").is_err());
        assert!(LengthSpectrum::parse("1.0 0").is_err());
        assert!(LengthSpectrum::parse("1.0 1 2").is_err());
    }

    #[test]
    fn empty_product_is_one() {
        let z = selberg_zeta(&LengthSpectrum::empty(), 1.5).unwrap();
        assert_eq!(z.value, 1.0);
        assert_eq!(z.tail_bound, 0.0);
    }

    #[test]
    fn single_length_against_series() {
        let spec = LengthSpectrum::new(vec![(2.0, 1)]).unwrap();
        let z = selberg_zeta(&spec, 2.0).unwrap();
        let oracle = log_zeta_series(&[(2.0, 1)], 2.0).exp();
        assert!((z.value - oracle).abs() <= z.tail_bound + 1e-15);
        assert!(z.tail_bound < TAIL_TOL);
        assert!((z.value - 0.978_871_107_940_562_8).abs() < 1e-12);
    }

    #[test]
    fn multi_length_against_series() {
        let entries = vec![(0.7, 2), (1.3, 1), (2.9, 3)];
        let spec = LengthSpectrum::new(entries.clone()).unwrap();
        for s in [1.0, 1.5, 3.0] {
            let z = selberg_zeta(&spec, s).unwrap();
            assert!((z.value.ln() - log_zeta_series(&entries, s)).abs() < 1e-12);
        }
    }

    #[test]
    fn product_increases_to_one() {
        let spec = LengthSpectrum::new(vec![(1.0, 1)]).unwrap();
        let mut prev = 0.0;
        for s in [1.1, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let z = selberg_zeta(&spec, s).unwrap().value;
            assert!(z > prev && z < 1.0);
            prev = z;
        }
        assert!(1.0 - prev < 1e-13);
    }

    #[test]
    fn truncation_bound_holds() {
        let spec = LengthSpectrum::new(vec![(0.5, 1)]).unwrap();
        let full = selberg_zeta(&spec, 1.2).unwrap().value;
        for k in [5, 10, 20] {
            let t = selberg_zeta_truncated(&spec, 1.2, k).unwrap();
            assert!((t.value - full).abs() <= t.tail_bound);
        }
        assert!(selberg_zeta_truncated(&spec, 0.0, 5).is_err());
    }

    #[test]
    fn derivative_against_series() {
        let entries = vec![(1.0, 1)];
        let spec = LengthSpectrum::new(entries.clone()).unwrap();
        let h = 1e-6;
        let dlog = (log_zeta_series(&entries, 1.0 + h) - log_zeta_series(&entries, 1.0 - h)) / (2.0 * h);
        let z1 = log_zeta_series(&entries, 1.0).exp();
        let d = selberg_zeta_derivative(&spec, 1.0).unwrap();
        assert!((d - z1 * dlog).abs() < 1e-8);
    }

    #[test]
    fn params_flip_with_chi() {
        let p = SelbergParams::new(-2, 1);
        let q = SelbergParams::new(2, 1);
        assert_eq!(p.e, -q.e);
        assert_eq!(p.f, -q.f);
        assert_eq!(p.f, 2.0);
        assert_eq!(SelbergParams::new(0, 3).e, 0.0);
    }

    #[test]
    fn horn_determinants() {
        let params = SelbergParams::new(0, 1);
        let empty = LengthSpectrum::empty();
        for s in [0.75, 1.0, 2.5] {
            let d = det_from_selberg(&empty, &params, s).unwrap().value;
            let expected = 1.0
                / (2f64.powf(s) * (PI * (s - 0.5)).sqrt() * statrs::function::gamma::gamma(s - 0.5));
            assert!((d - expected).abs() < 1e-14 * expected.max(1.0));
        }
        let det = det_hyperbolic(&empty, &params, false, CuspPrefactor::default()).unwrap();
        assert!((det.value - 1.0 / (2f64.sqrt() * PI)).abs() < 1e-15);
        let alt = det_hyperbolic(&empty, &params, false, CuspPrefactor::SqrtOfTwoPi).unwrap();
        assert!((alt.value - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_cylinder_is_pure_product() {
        let params = SelbergParams::new(0, 0);
        let spec = LengthSpectrum::new(vec![(1.7, 1)]).unwrap();
        for s in [1.0, 1.3, 2.0] {
            let d = det_from_selberg(&spec, &params, s).unwrap();
            let z = selberg_zeta(&spec, s).unwrap();
            assert_eq!(d, z);
            assert!(d.tail_bound < TAIL_TOL);
        }
        let det = det_hyperbolic(&spec, &params, false, CuspPrefactor::default()).unwrap();
        assert_eq!(det.value, selberg_zeta(&spec, 1.0).unwrap().value);
    }

    #[test]
    fn compact_genus_two_uses_barnes() {
        // chi = -2 changes the answer through Gamma_2 and zeta'(-1).
        let a = det_from_selberg(&LengthSpectrum::empty(), &SelbergParams::new(-2, 0), 2.0).unwrap();
        let b = det_from_selberg(&LengthSpectrum::empty(), &SelbergParams::new(0, 0), 2.0).unwrap();
        assert!(a.value.is_finite() && a.value > 0.0);
        assert_ne!(a.value, b.value);
    }
}
