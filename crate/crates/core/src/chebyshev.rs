//! Tensor Chebyshev interpolation on `[−1, 1]²`.
//!
//! A two-variable expression `Φ(a, b)` is lowered to `Σ c_rp T_r(a) T_p(b)`,
//! a sum of products of one-variable terms that the masking protocols can
//! evaluate.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub const MAX_DEGREE: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChebError {
    #[error("degree {0} exceeds the supported maximum of {MAX_DEGREE}")]
    DegreeTooLarge(usize),
}

fn check_degree(m: usize) -> Result<(), ChebError> {
    if m > MAX_DEGREE {
        Err(ChebError::DegreeTooLarge(m))
    } else {
        Ok(())
    }
}

/// Roots of `T_{m+1}`: `x_s = cos((2s+1)π/(2m+2))`, decreasing in `s`.
pub fn cheb_nodes(m: usize) -> Vec<f64> {
    (0..=m)
        .map(|s| ((2 * s + 1) as f64 * PI / (2 * m + 2) as f64).cos())
        .collect()
}

/// `T_r(x)` by the three-term recurrence.
pub fn cheb_t(r: usize, x: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, x);
    match r {
        0 => t0,
        _ => {
            for _ in 1..r {
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            t1
        }
    }
}

/// Clenshaw evaluation of `Σ c_r T_r(x)`.
pub fn cheb_eval(coeffs: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or(0.0) + x * b1 - b2
}

fn coefficients_from_samples(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let m = n - 1;
    (0..n)
        .map(|r| {
            let sum: f64 = samples
                .iter()
                .enumerate()
                .map(|(s, v)| v * (r as f64 * (2 * s + 1) as f64 * PI / (2 * m + 2) as f64).cos())
                .sum();
            let c = 2.0 * sum / n as f64;
            if r == 0 {
                c / 2.0
            } else {
                c
            }
        })
        .collect()
}

/// Degree-`m` interpolant through the `m+1` Chebyshev nodes, as coefficients
/// of `T_0..T_m`.
pub fn interp_1d<F: Fn(f64) -> f64>(f: F, m: usize) -> Result<Vec<f64>, ChebError> {
    check_degree(m)?;
    let samples: Vec<f64> = cheb_nodes(m).into_iter().map(f).collect();
    Ok(coefficients_from_samples(&samples))
}

/// `max_deriv / (2^m (m+1)!)`.
pub fn error_bound(max_deriv: f64, m: usize) -> f64 {
    let mut denom = 2f64.powi(m as i32);
    for k in 2..=(m + 1) {
        denom *= k as f64;
    }
    max_deriv / denom
}

/// Upper bound on the Lebesgue constant of the degree-`m` Chebyshev nodes.
pub fn lebesgue_bound(m: usize) -> f64 {
    2.0 / PI * ((m + 1) as f64).ln() + 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebModel {
    pub degrees: (usize, usize),
    /// Row-major `(m+1) × (m′+1)`: `coefficients[r][p]` multiplies `T_r(a)T_p(b)`.
    pub coefficients: Vec<Vec<f64>>,
    pub bound: Option<f64>,
}

impl ChebModel {
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        let row: Vec<f64> = self.coefficients.iter().map(|c| cheb_eval(c, b)).collect();
        cheb_eval(&row, a)
    }

    pub fn coefficient(&self, r: usize, p: usize) -> f64 {
        self.coefficients
            .get(r)
            .and_then(|row| row.get(p))
            .copied()
            .unwrap_or(0.0)
    }

    /// Sets the bound from `max|∂ᵃ^{m+1}Φ|` and `max|∂ᵇ^{m′+1}Φ|` on the square.
    pub fn with_derivative_bounds(mut self, da: f64, db: f64) -> Self {
        let (m, m2) = self.degrees;
        self.bound = Some(error_bound(da, m) + lebesgue_bound(m) * error_bound(db, m2));
        self
    }

    /// Largest deviation from `phi` on a uniform `k × k` grid.
    pub fn grid_error<F: Fn(f64, f64) -> f64>(&self, phi: F, k: usize) -> f64 {
        let step = 2.0 / (k - 1) as f64;
        let mut worst = 0.0f64;
        for i in 0..k {
            let a = -1.0 + step * i as f64;
            for j in 0..k {
                let b = -1.0 + step * j as f64;
                worst = worst.max((self.eval(a, b) - phi(a, b)).abs());
            }
        }
        worst
    }
}

/// Nested tensor interpolation: first along `a` at degree `m`, then each
/// coefficient function `c_r(b)` along `b` at degree `m2`.
pub fn interp_2d<F: Fn(f64, f64) -> f64>(
    phi: F,
    m: usize,
    m2: usize,
) -> Result<ChebModel, ChebError> {
    check_degree(m)?;
    check_degree(m2)?;
    let a_nodes = cheb_nodes(m);
    let b_nodes = cheb_nodes(m2);
    let per_b: Vec<Vec<f64>> = b_nodes
        .iter()
        .map(|&b| {
            let samples: Vec<f64> = a_nodes.iter().map(|&a| phi(a, b)).collect();
            coefficients_from_samples(&samples)
        })
        .collect();
    let coefficients = (0..=m)
        .map(|r| {
            let c_r: Vec<f64> = per_b.iter().map(|row| row[r]).collect();
            coefficients_from_samples(&c_r)
        })
        .collect();
    Ok(ChebModel { degrees: (m, m2), coefficients, bound: None })
}
