use std::f64::consts::PI;

use super::{constants_product, CoefficientSet, CosinePart, FourierError};

/// Upper limit on summed terms before a tolerance is declared unreachable.
pub const DEFAULT_MAX_TERMS: usize = 20_000_000;

/// A truncated series value with a certified bound on the neglected tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub bound: f64,
    pub terms: usize,
}

/// `Σ_{m≥1} Π_j α_m^{(j)}` over the cosine parts of `sets`.
///
/// With any dense input the product vanishes past its length and the sum is
/// exact. For all-rule inputs the tail past `K` is bounded by
/// `B·K^{1−2P}/(2P−1)` with `B` the product of the decay constants and `P`
/// the total decay power; `K` is the smallest count that brings the bound
/// under `tol`.
pub fn series_product_sum(
    sets: &[&CoefficientSet],
    tol: f64,
    max_terms: usize,
) -> Result<SeriesSum, FourierError> {
    if !(tol > 0.0) {
        return Err(FourierError::InvalidTolerance(tol));
    }
    if sets.is_empty() {
        return Ok(SeriesSum { value: 0.0, bound: 0.0, terms: 0 });
    }
    let dense_len = sets.iter().filter_map(|s| s.cosine_len()).min();
    let (terms, bound) = match dense_len {
        Some(len) => (len, 0.0),
        None => {
            let (b, p) = sets.iter().fold((1.0, 0u32), |(b, p), s| {
                let (c, q) = s.cosine_decay();
                (b * c, p + q)
            });
            if b == 0.0 {
                return Ok(SeriesSum { value: 0.0, bound: 0.0, terms: 0 });
            }
            let e = (2 * p - 1) as f64;
            let needed = (b / (e * tol)).powf(1.0 / e).ceil().max(1.0);
            if needed > max_terms as f64 {
                return Err(FourierError::ToleranceUnreachable { needed, max: max_terms });
            }
            let k = needed as usize;
            (k, b * (k as f64).powf(-e) / e)
        }
    };
    let value = (1..=terms as u64)
        .rev()
        .map(|m| sets.iter().map(|s| s.alpha(m)).product::<f64>())
        .sum();
    Ok(SeriesSum { value, bound, terms })
}

/// `Mₙ = Σ αₘⁿ`. For `n = 2` on a single-factor rule the closed form is used.
pub fn moment(cs: &CoefficientSet, n: u32, tol: f64) -> Result<SeriesSum, FourierError> {
    if n == 2 {
        if let Some(value) = moment_closed_form_n2(cs) {
            return Ok(SeriesSum { value, bound: 0.0, terms: 0 });
        }
    }
    let copies: Vec<&CoefficientSet> = std::iter::repeat(cs).take(n as usize).collect();
    series_product_sum(&copies, tol, DEFAULT_MAX_TERMS)
}

/// `Σ αₘ²` in closed form for a single-factor cosine rule.
pub fn moment_closed_form_n2(cs: &CoefficientSet) -> Option<f64> {
    match cs.cosine_part() {
        CosinePart::Rule { gain, factors } if factors.len() == 1 => {
            let t = factors[0].tau;
            Some(gain * gain * t.powi(4) * sum_inv_sq(t))
        }
        _ => None,
    }
}

/// `Σ_{m≥1} 1/(m²−τ²)`.
pub fn sum_inv(tau: f64) -> f64 {
    1.0 / (2.0 * tau * tau) - PI / (2.0 * tau * (PI * tau).tan())
}

/// `Σ_{m≥1} (−1)ᵐ/(m²−τ²)`.
pub fn sum_alternating_inv(tau: f64) -> f64 {
    1.0 / (2.0 * tau * tau) - PI / (2.0 * tau * (PI * tau).sin())
}

/// `Σ_{m≥1} 1/(m²−τ²)²`, obtained by differentiating [`sum_inv`] in `τ`.
pub fn sum_inv_sq(tau: f64) -> f64 {
    let s = (PI * tau).sin();
    -1.0 / (2.0 * tau.powi(4))
        + (PI * (2.0 * PI * tau).sin() + 2.0 * PI * PI * tau) / (8.0 * tau.powi(3) * s * s)
}

/// Normalizes `inputs` jointly so that `ℂ+𝕊 = 1`: returns `η = (ℂ+𝕊)^{−1/n}`
/// and the scaled sets.
pub fn normalize_eta(
    inputs: &[CoefficientSet],
    tol: f64,
) -> Result<(f64, Vec<CoefficientSet>), FourierError> {
    let k = constants_product(inputs, tol)?;
    let total = k.c + k.s;
    if !(total > 0.0) {
        return Err(FourierError::NonPositiveIdentitySum(total));
    }
    let eta = total.powf(-1.0 / inputs.len() as f64);
    let out = inputs
        .iter()
        .map(|cs| {
            let prior = cs.eta();
            cs.scaled(eta).with_normalization(prior * eta)
        })
        .collect();
    Ok((eta, out))
}

/// The closed-form cosine family normalized for `n` identical inputs.
pub fn normalized_cosine(
    tau: f64,
    l: f64,
    n: u32,
    tol: f64,
) -> Result<CoefficientSet, FourierError> {
    let base = super::cosine_coefficients(tau, l, n)?;
    let (_, mut sets) = normalize_eta(&vec![base; n as usize], tol)?;
    Ok(sets.swap_remove(0))
}
