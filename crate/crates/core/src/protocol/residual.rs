//! Independent check of the mask residual.
//!
//! Summing the four lanes, every product `Π_j (c_j ± ω_j)` and
//! `Π_j (c_j ± ω̂_j)` expands over user subsets `S`; odd `|S|` cancel between
//! the `±` lanes and `S = ∅` carries the secret product. What remains is
//! `2 Σ_{|S| even ≥ 2} (Π_S ω + Π_S ω̂) Π_{j∉S} c_j`, evaluated here with a
//! private dense-polynomial arithmetic that shares no code with the Θ engine.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::engine::{bracket_sign, n_party_round, scaled_code};
use super::types::{Basis, MaskPair, MaskSet, MaskUnit, SecretInput, Transcript};
use super::ProtocolError;

/// Default agreement tolerance between the run and the expansion, relative
/// to `max(1, Σ|terms|)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Largest user count the subset expansion accepts.
pub const MAX_ORACLE_USERS: usize = 20;

type Poly = Vec<Complex64>;

fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn add_into(acc: &mut Poly, p: &Poly) {
    if acc.len() < p.len() {
        acc.resize(p.len(), Complex64::new(0.0, 0.0));
    }
    for (a, b) in acc.iter_mut().zip(p) {
        *a += b;
    }
}

fn grade_value(g: usize) -> Complex64 {
    if g == 0 {
        Complex64::new(1.0, 0.0)
    } else if g % 2 == 1 {
        Complex64::new(0.0, 1.0)
    } else {
        Complex64::new(-1.0, 0.0)
    }
}

fn evaluate(p: &Poly) -> (Complex64, f64) {
    let value = p.iter().enumerate().map(|(g, c)| c * grade_value(g)).sum();
    let size = p.iter().map(|c| c.norm()).sum();
    (value, size)
}

fn masks_as_polys(pair: MaskPair, unit: MaskUnit) -> (Poly, Poly) {
    let c = |re: f64| Complex64::new(re, 0.0);
    match unit {
        MaskUnit::Theta => (vec![c(pair.p), c(pair.q)], vec![c(-pair.q), c(pair.p)]),
        MaskUnit::Imaginary => (
            vec![Complex64::new(pair.p, pair.q)],
            vec![Complex64::new(-pair.q, pair.p)],
        ),
    }
}

/// `Σ_{|S| even ≥ 2} 2(Π_S ω + Π_S ω̂)Π_{∉S} c` as a polynomial in `u`.
fn subset_expansion(cs: &[f64], masks: &[MaskPair], unit: MaskUnit) -> Poly {
    let n = cs.len();
    let polys: Vec<(Poly, Poly)> = masks.iter().map(|m| masks_as_polys(*m, unit)).collect();
    let mut acc: Poly = vec![Complex64::new(0.0, 0.0)];
    for subset in 1u32..(1 << n) {
        if subset.count_ones() % 2 == 1 {
            continue;
        }
        let mut w: Poly = vec![Complex64::new(2.0, 0.0)];
        let mut w_hat: Poly = vec![Complex64::new(2.0, 0.0)];
        let mut rest = 1.0;
        for j in 0..n {
            if subset & (1 << j) != 0 {
                w = mul(&w, &polys[j].0);
                w_hat = mul(&w_hat, &polys[j].1);
            } else {
                rest *= cs[j];
            }
        }
        add_into(&mut w, &w_hat);
        let scaled: Poly = w.iter().map(|c| c * rest).collect();
        add_into(&mut acc, &scaled);
    }
    acc
}

/// The residual predicted by the subset expansion, with the magnitude of the
/// expanded terms.
pub fn residual_oracle(
    inputs: &[SecretInput],
    y: f64,
    masks: &MaskSet,
    basis: &Basis,
    unit: MaskUnit,
) -> Result<(Complex64, f64), ProtocolError> {
    let n = inputs.len();
    if !(2..=MAX_ORACLE_USERS).contains(&n) {
        return Err(ProtocolError::NOutOfRange(n));
    }
    let scaled: Vec<f64> = inputs.iter().map(|s| scaled_code(y, n, s.code)).collect();
    let sign = bracket_sign(y);

    let zero_cs: Vec<f64> = scaled.iter().map(|c| basis.zero_coefficient(*c)).collect();
    let zero_masks: Vec<MaskPair> = masks.users.iter().map(|u| u.zero).collect();
    let (zero_val, zero_size) = evaluate(&subset_expansion(&zero_cs, &zero_masks, unit));
    let mut total = zero_val * (basis.zero_weight() / 8.0);
    let mut size = zero_size * basis.zero_weight().abs() / 8.0;

    for (m, w) in basis.stream_weights().iter().enumerate() {
        let cs: Vec<f64> = scaled.iter().map(|c| basis.stream_coefficient(*c, m)).collect();
        let ms: Vec<MaskPair> = masks.users.iter().map(|u| u.stream[m]).collect();
        let (v, s) = evaluate(&subset_expansion(&cs, &ms, unit));
        total += v * (w / 4.0);
        size += s * w.abs() / 4.0;
    }
    Ok((total * sign, size))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub display: Complex64,
    pub expected: f64,
    /// `display − expected` from the protocol run.
    pub protocol: Complex64,
    /// Same quantity from the subset expansion.
    pub oracle: Complex64,
    /// Magnitude of the expanded terms; sets the comparison scale.
    pub scale: f64,
}

impl ResidualReport {
    pub fn difference(&self) -> f64 {
        (self.protocol - self.oracle).norm()
    }
}

/// Compares an existing run against the expansion.
pub fn check_transcript(
    t: &Transcript,
    basis: &Basis,
    tol: f64,
) -> Result<ResidualReport, ProtocolError> {
    let (oracle, size) = residual_oracle(&t.inputs, t.y, &t.masks, basis, t.unit)?;
    let report = ResidualReport {
        display: t.display,
        expected: t.expected,
        protocol: t.residual,
        oracle,
        scale: size.max(1.0),
    };
    if report.difference() > tol * report.scale {
        return Err(ProtocolError::OracleMismatch { protocol: t.residual, oracle });
    }
    Ok(report)
}

/// Runs the n-user scheme and checks its residual two ways.
pub fn residual_diagnostic(
    inputs: &[SecretInput],
    y: f64,
    masks: &MaskSet,
    basis: &Basis,
) -> Result<ResidualReport, ProtocolError> {
    let t = n_party_round(inputs, y, masks, basis)?;
    check_transcript(&t, basis, RESIDUAL_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::super::masks::sample_masks;
    use super::super::types::Mode;
    use super::*;
    use crate::theta::ThetaExpr;

    #[test]
    fn polynomial_grade_map() {
        let one_plus = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let minus_one = vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];
        let p4 = |p: &Poly| mul(&mul(p, p), &mul(p, p));
        let mut s = p4(&one_plus);
        add_into(&mut s, &p4(&minus_one));
        assert_eq!(evaluate(&s).0, Complex64::new(-12.0, 0.0));
        let t = ThetaExpr::linear(1.0, 1.0)
            .power(4)
            .add(&ThetaExpr::linear(-1.0, 1.0).power(4))
            .unwrap();
        assert_eq!(t.eval_t().unwrap(), Complex64::new(-12.0, 0.0));
    }

    fn trial(n: usize, seed: u64) -> ResidualReport {
        let inputs: Vec<_> = (0..n)
            .map(|j| SecretInput::new(0.5 + j as f64 * 0.3, 1.0 + j as f64))
            .collect();
        let basis = Basis::new(0.3, 1.0, n, Mode::Rank1).unwrap();
        let masks = sample_masks(&inputs, Mode::Rank1, 0, seed);
        residual_diagnostic(&inputs, 2.0, &masks, &basis).unwrap()
    }

    #[test]
    fn small_n_cancels() {
        for n in [2, 3] {
            let r = trial(n, 21);
            assert!(r.oracle.norm() < 1e-10 * r.scale, "n = {n}");
            assert!(r.protocol.norm() < 1e-10 * r.scale, "n = {n}");
        }
    }

    #[test]
    fn larger_n_leaves_matching_residual() {
        for n in [4, 5, 6] {
            let r = trial(n, 5);
            assert!(r.oracle.norm() > 1e-3, "n = {n}");
            assert!(r.difference() <= 1e-10 * r.scale);
        }
    }
}
