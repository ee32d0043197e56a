use super::FlowError;

/// `r(t) = r_0 C / (r_0 + (C - r_0) e^{C t})`.
pub fn asymptotic_curvature(t: f64, r0: f64, c: f64) -> Result<f64, FlowError> {
    let den = r0 + (c - r0) * (c * t).exp();
    if den.abs() <= 1e-300 || !den.is_finite() {
        return Err(FlowError::SingularTime { t });
    }
    // The denominator equals C at t = 0; a sign change means it vanished.
    if den.signum() != c.signum() {
        return Err(FlowError::SingularTime { t });
    }
    Ok(r0 * c / den)
}

/// `A_t = (A_0 - 4 pi chi / C) e^{C t} + 4 pi chi / C`, with areas per unit
/// angle, so `4 pi chi` enters as `2 chi`.
pub fn predicted_renormalized_area(t: f64, a0: f64, chi: i32, c: f64) -> Result<f64, FlowError> {
    if c == 0.0 {
        return Err(FlowError::Config("area law needs a nonzero normalization".into()));
    }
    let k = 2.0 * chi as f64 / c;
    Ok((a0 - k) * (c * t).exp() + k)
}
