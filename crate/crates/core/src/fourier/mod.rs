//! Fourier data of main functions and the generalized Parseval identity.
//!
//! Coefficients follow the convention `f(x) = α₀/2 + Σ αₘ cos(mπx/l) + Σ βₘ sin(mπx/l)`.
//! Cosine coefficients are either a closed-form rule (a product of one or
//! more `τ`-families) or a dense truncated array.

mod pipeline;
mod series;

pub use pipeline::{
    constants_pipeline, constants_product, convolve, kernel_transform, parseval_constants,
    IdentityConstants, PipelineState,
};
pub use series::{
    moment, moment_closed_form_n2, normalize_eta, normalized_cosine, series_product_sum,
    sum_alternating_inv, sum_inv, sum_inv_sq, SeriesSum, DEFAULT_MAX_TERMS,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FourierError {
    #[error("τ must lie strictly inside (0, 1), got {0}")]
    TauOutOfRange(f64),
    #[error("half-period l must be positive and finite, got {0}")]
    InvalidHalfPeriod(f64),
    #[error("at least {min} inputs are required, got {got}")]
    TooFewInputs { min: usize, got: usize },
    #[error("operation needs single-parity coefficient sets")]
    MixedParity,
    #[error("tail bound needs {needed} terms, more than the limit of {max}")]
    ToleranceUnreachable { needed: f64, max: usize },
    #[error("identity sum ℂ+𝕊 = {0} is not positive; the normalising root is undefined")]
    NonPositiveIdentitySum(f64),
    #[error("truncation must keep at least one coefficient")]
    EmptyTruncation,
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// One closed-form factor `τ²(−1)ᵐ/(τ²−m²)` of a cosine rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleFactor {
    pub tau: f64,
    pub l: f64,
}

impl RuleFactor {
    fn value(&self, m: u64) -> f64 {
        let t2 = self.tau * self.tau;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        sign * t2 / (t2 - (m as f64) * (m as f64))
    }

    /// `C` in `|factor(m)| ≤ C·m⁻²` for all `m ≥ 1`.
    fn decay_constant(&self) -> f64 {
        let t2 = self.tau * self.tau;
        t2 / (1.0 - t2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CosinePart {
    /// `αₘ = gain · Π_k factor_k(m)`.
    Rule { gain: f64, factors: Vec<RuleFactor> },
    /// `α₁..α_M`; coefficients beyond `M` are zero.
    Dense { values: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    alpha0: f64,
    cosine: CosinePart,
    sine: Vec<f64>,
    normalized: bool,
    eta: f64,
}

impl CoefficientSet {
    pub fn dense(alpha0: f64, cosine: Vec<f64>, sine: Vec<f64>) -> Self {
        Self {
            alpha0,
            cosine: CosinePart::Dense { values: cosine },
            sine,
            normalized: false,
            eta: 1.0,
        }
    }

    pub fn even(alpha0: f64, cosine: Vec<f64>) -> Self {
        Self::dense(alpha0, cosine, Vec::new())
    }

    pub fn odd(sine: Vec<f64>) -> Self {
        Self::dense(0.0, Vec::new(), sine)
    }

    pub fn zero() -> Self {
        Self::dense(0.0, Vec::new(), Vec::new())
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn cosine_part(&self) -> &CosinePart {
        &self.cosine
    }

    pub fn sine(&self) -> &[f64] {
        &self.sine
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_rule(&self) -> bool {
        matches!(self.cosine, CosinePart::Rule { .. })
    }

    /// Cosine coefficient `αₘ` for `m ≥ 1`.
    pub fn alpha(&self, m: u64) -> f64 {
        debug_assert!(m >= 1);
        match &self.cosine {
            CosinePart::Rule { gain, factors } => {
                factors.iter().fold(*gain, |acc, f| acc * f.value(m))
            }
            CosinePart::Dense { values } => values.get((m - 1) as usize).copied().unwrap_or(0.0),
        }
    }

    /// Sine coefficient `βₘ` for `m ≥ 1`.
    pub fn beta(&self, m: u64) -> f64 {
        debug_assert!(m >= 1);
        self.sine.get((m - 1) as usize).copied().unwrap_or(0.0)
    }

    /// Number of stored cosine coefficients; `None` for a rule.
    pub fn cosine_len(&self) -> Option<usize> {
        match &self.cosine {
            CosinePart::Rule { .. } => None,
            CosinePart::Dense { values } => Some(values.len()),
        }
    }

    /// `(C, p)` with `|αₘ| ≤ C·m^{−2p}`; dense parts report `p = 0`.
    pub(crate) fn cosine_decay(&self) -> (f64, u32) {
        match &self.cosine {
            CosinePart::Rule { gain, factors } => (
                factors.iter().fold(gain.abs(), |acc, f| acc * f.decay_constant()),
                factors.len() as u32,
            ),
            CosinePart::Dense { values } => {
                (values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())), 0)
            }
        }
    }

    fn cosine_is_zero(&self) -> bool {
        match &self.cosine {
            CosinePart::Rule { gain, .. } => *gain == 0.0,
            CosinePart::Dense { values } => values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn parity(&self) -> Parity {
        let even_zero = self.alpha0 == 0.0 && self.cosine_is_zero();
        let odd_zero = self.sine.iter().all(|v| *v == 0.0);
        match (even_zero, odd_zero) {
            (true, true) => Parity::Zero,
            (false, true) => Parity::Even,
            (true, false) => Parity::Odd,
            (false, false) => Parity::Mixed,
        }
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let cosine = match &self.cosine {
            CosinePart::Rule { gain, factors } => CosinePart::Rule {
                gain: gain * s,
                factors: factors.clone(),
            },
            CosinePart::Dense { values } => CosinePart::Dense {
                values: values.iter().map(|v| v * s).collect(),
            },
        };
        Self {
            alpha0: self.alpha0 * s,
            cosine,
            sine: self.sine.iter().map(|v| v * s).collect(),
            normalized: self.normalized,
            eta: self.eta,
        }
    }

    pub(crate) fn with_normalization(mut self, eta: f64) -> Self {
        self.normalized = true;
        self.eta = eta;
        self
    }

    /// Dense copy of the cosine part truncated to `m_max` terms.
    pub fn to_dense(&self, m_max: usize) -> Self {
        let values = (1..=m_max as u64).map(|m| self.alpha(m)).collect();
        Self {
            alpha0: self.alpha0,
            cosine: CosinePart::Dense { values },
            sine: self.sine.clone(),
            normalized: self.normalized,
            eta: self.eta,
        }
    }

    /// Evaluates the (truncated) series at `x`.
    pub fn evaluate(&self, x: f64, l: f64, m_max: usize) -> f64 {
        let m_cos = self.cosine_len().unwrap_or(m_max).min(m_max);
        let mut acc = self.alpha0 / 2.0;
        for m in 1..=m_cos as u64 {
            acc += self.alpha(m) * (m as f64 * PI * x / l).cos();
        }
        for (k, b) in self.sine.iter().enumerate() {
            acc += b * ((k + 1) as f64 * PI * x / l).sin();
        }
        acc
    }
}

/// Closed-form cosine coefficients of `cos(πτx/l)` on `[−l, l]`:
/// `α₀ = 2 sin(πτ)/(πτ)`, `αₘ = α₀ τ² (−1)ᵐ/(τ²−m²)`. The set is not
/// normalized; `n` is the number of inputs it will later be normalized for.
pub fn cosine_coefficients(tau: f64, l: f64, n: u32) -> Result<CoefficientSet, FourierError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(FourierError::TauOutOfRange(tau));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(FourierError::InvalidHalfPeriod(l));
    }
    if n < 2 {
        return Err(FourierError::TooFewInputs { min: 2, got: n as usize });
    }
    let alpha0 = 2.0 * (PI * tau).sin() / (PI * tau);
    Ok(CoefficientSet {
        alpha0,
        cosine: CosinePart::Rule {
            gain: alpha0,
            factors: vec![RuleFactor { tau, l }],
        },
        sine: Vec::new(),
        normalized: false,
        eta: 1.0,
    })
}

/// Fourier coefficients of a sampled function via the periodic trapezoid rule.
pub fn coefficients_by_quadrature<F: Fn(f64) -> f64>(
    f: F,
    l: f64,
    m_max: usize,
) -> Result<CoefficientSet, FourierError> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(FourierError::InvalidHalfPeriod(l));
    }
    if m_max == 0 {
        return Err(FourierError::EmptyTruncation);
    }
    let points = (1usize << 16).max(4 * m_max + 4);
    let h = 2.0 * l / points as f64;
    let samples: Vec<(f64, f64)> = (0..points)
        .map(|k| {
            let x = -l + h * k as f64;
            (x, f(x))
        })
        .collect();
    let w = 2.0 / points as f64;
    let alpha0 = w * samples.iter().map(|(_, v)| v).sum::<f64>();
    let mut cosine = Vec::with_capacity(m_max);
    let mut sine = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let k = m as f64 * PI / l;
        let (mut c, mut s) = (0.0, 0.0);
        for (x, v) in &samples {
            let (sn, cs) = (k * x).sin_cos();
            c += v * cs;
            s += v * sn;
        }
        cosine.push(w * c);
        sine.push(w * s);
    }
    Ok(CoefficientSet::dense(alpha0, cosine, sine))
}

/// Splits into the even (cosine) and odd (sine) parts.
pub fn parity_split(cs: &CoefficientSet) -> (CoefficientSet, CoefficientSet) {
    let even = CoefficientSet {
        sine: Vec::new(),
        ..cs.clone()
    };
    let odd = CoefficientSet {
        alpha0: 0.0,
        cosine: CosinePart::Dense { values: Vec::new() },
        sine: cs.sine.clone(),
        normalized: cs.normalized,
        eta: cs.eta,
    };
    (even, odd)
}

/// Inverse of [`parity_split`].
pub fn reassemble(even: &CoefficientSet, odd: &CoefficientSet) -> CoefficientSet {
    CoefficientSet {
        sine: odd.sine.clone(),
        ..even.clone()
    }
}
