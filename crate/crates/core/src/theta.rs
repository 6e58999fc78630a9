//! The graded Θ^[n] algebra.
//!
//! An expression is a finite sum `Σ c_n Θ^[n]` with complex coefficients,
//! optionally multiplied by formal roots `(B)^{p/κ}` of root-free bases. The
//! ∗-product adds grades, formal roots of a common base accumulate their
//! exponents and collapse back to the base once the exponent reaches one, and
//! [`ThetaExpr::eval_t`] maps the fully multiplied result to a complex number
//! (odd grades to `+i`, even grades to `-1`, grade 0 passes through).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Grade = u32;

/// Two canonical (unit-norm) root bases are the same base when every
/// coefficient agrees to this absolute tolerance.
pub const BASE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("root factors with different Θ-bases cannot be multiplied")]
    RootBaseMismatch,
    #[error("root scale must be strictly positive, got {0}")]
    NonPositiveScale(f64),
    #[error("root order must be at least 1")]
    ZeroOrder,
    #[error("the base of a formal root must itself be free of roots")]
    NestedRoot,
    #[error("expression holds an unresolved root factor of exponent {numerator}/{order}")]
    UnresolvedRoot { numerator: u32, order: u32 },
    #[error("expressions carrying different root factors cannot be added")]
    RootSum,
}

/// A deferred `(base)^{numerator/order}` factor.
///
/// `base` is stored with unit coefficient norm; the positive magnitude that
/// was split off, already raised to `1/order` per copy, lives in `scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootFactor {
    base: ThetaExpr,
    order: u32,
    numerator: u32,
    scale: f64,
}

impl RootFactor {
    pub fn base(&self) -> &ThetaExpr {
        &self.base
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn numerator(&self) -> u32 {
        self.numerator
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn same_base(&self, other: &RootFactor) -> bool {
        self.base.approx_eq(&other.base, BASE_TOLERANCE)
    }
}

/// A Θ-expression: `(Σ_n c_n Θ^[n]) · Π roots`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "ThetaRecord", try_from = "ThetaRecord")]
pub struct ThetaExpr {
    terms: BTreeMap<Grade, Complex64>,
    roots: Vec<RootFactor>,
}

impl ThetaExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn scalar(c: Complex64) -> Self {
        Self::monomial(0, c)
    }

    pub fn real(x: f64) -> Self {
        Self::scalar(Complex64::new(x, 0.0))
    }

    /// `Θ^[n]` with unit coefficient. `theta(0)` is the scalar 1.
    pub fn theta(n: Grade) -> Self {
        Self::monomial(n, Complex64::new(1.0, 0.0))
    }

    pub fn monomial(grade: Grade, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(grade, c);
        }
        Self { terms, roots: Vec::new() }
    }

    pub fn from_terms<I: IntoIterator<Item = (Grade, Complex64)>>(iter: I) -> Self {
        let mut terms: BTreeMap<Grade, Complex64> = BTreeMap::new();
        for (g, c) in iter {
            *terms.entry(g).or_default() += c;
        }
        terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Self { terms, roots: Vec::new() }
    }

    /// `x + u·y` with `u = Θ^[1]`, the shape of every protocol mask.
    pub fn linear(x: f64, y: f64) -> Self {
        Self::from_terms([(0, Complex64::new(x, 0.0)), (1, Complex64::new(y, 0.0))])
    }

    pub fn terms(&self) -> impl Iterator<Item = (Grade, Complex64)> + '_ {
        self.terms.iter().map(|(g, c)| (*g, *c))
    }

    pub fn coefficient(&self, grade: Grade) -> Complex64 {
        self.terms.get(&grade).copied().unwrap_or_default()
    }

    pub fn grades(&self) -> impl Iterator<Item = Grade> + '_ {
        self.terms.keys().copied()
    }

    pub fn root_factors(&self) -> &[RootFactor] {
        &self.roots
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_root_free(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn max_grade(&self) -> Option<Grade> {
        self.terms.keys().next_back().copied()
    }

    /// Euclidean norm of the coefficient vector, ignoring root factors.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Drops every term whose coefficient magnitude is at most `eps`.
    pub fn prune(&self, eps: f64) -> Self {
        let mut out = self.clone();
        out.terms.retain(|_, c| c.norm() > eps);
        if out.terms.is_empty() {
            out.roots.clear();
        }
        out
    }

    /// Term-wise comparison of the polynomial parts and of the root factors.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let grades: std::collections::BTreeSet<Grade> =
            self.terms.keys().chain(other.terms.keys()).copied().collect();
        let terms_ok = grades
            .into_iter()
            .all(|g| (self.coefficient(g) - other.coefficient(g)).norm() <= tol);
        terms_ok
            && self.roots.len() == other.roots.len()
            && self.roots.iter().zip(&other.roots).all(|(a, b)| {
                a.order == b.order
                    && a.numerator == b.numerator
                    && (a.scale - b.scale).abs() <= tol * a.scale.abs().max(1.0)
                    && a.base.approx_eq(&b.base, tol)
            })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        if s == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        if out.terms.is_empty() {
            out.roots.clear();
        }
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Coefficient-wise sum. Both operands must carry the same root factors
    /// (normally none).
    pub fn add(&self, other: &Self) -> Result<Self, ThetaError> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let roots_match = self.roots.len() == other.roots.len()
            && self.roots.iter().zip(&other.roots).all(|(a, b)| {
                a.order == b.order
                    && a.numerator == b.numerator
                    && a.scale == b.scale
                    && a.same_base(b)
            });
        if !roots_match {
            return Err(ThetaError::RootSum);
        }
        let mut out = self.clone();
        for (g, c) in &other.terms {
            *out.terms.entry(*g).or_default() += *c;
        }
        out.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        if out.terms.is_empty() {
            out.roots.clear();
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        self.scale_real(-1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ThetaError> {
        self.add(&other.neg())
    }

    /// The ∗-product: grades add, same-base roots accumulate and collapse.
    pub fn star_mul(&self, other: &Self) -> Result<Self, ThetaError> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        let mut roots = self.roots.clone();
        for r in &other.roots {
            let empty = roots.is_empty();
            match roots.iter_mut().find(|q| q.same_base(r)) {
                Some(q) => {
                    let order = lcm(q.order, r.order);
                    q.numerator = q.numerator * (order / q.order) + r.numerator * (order / r.order);
                    q.order = order;
                    q.scale *= r.scale;
                }
                None if empty => roots.push(r.clone()),
                None => return Err(ThetaError::RootBaseMismatch),
            }
        }
        let out = Self {
            terms: convolve_terms(&self.terms, &other.terms),
            roots,
        };
        Ok(out.collapse_roots())
    }

    /// `e^m` under ∗; `power(e, 0)` is 1.
    pub fn power(&self, m: u32) -> Self {
        let mut result = Self::one();
        let mut base = self.clone();
        let mut k = m;
        while k > 0 {
            if k & 1 == 1 {
                result = result
                    .star_mul(&base)
                    .expect("powers of one expression share a single root base");
            }
            k >>= 1;
            if k > 0 {
                base = base
                    .star_mul(&base)
                    .expect("powers of one expression share a single root base");
            }
        }
        result
    }

    /// `(real_scale · base)^{1/order}` as a deferred root factor.
    pub fn formal_root(base: &Self, order: u32, real_scale: f64) -> Result<Self, ThetaError> {
        if order == 0 {
            return Err(ThetaError::ZeroOrder);
        }
        if !(real_scale > 0.0) || !real_scale.is_finite() {
            return Err(ThetaError::NonPositiveScale(real_scale));
        }
        if !base.is_root_free() {
            return Err(ThetaError::NestedRoot);
        }
        if order == 1 {
            return Ok(base.scale_real(real_scale));
        }
        let norm = base.norm();
        if norm == 0.0 {
            return Ok(Self::zero());
        }
        let root = RootFactor {
            base: base.scale_real(1.0 / norm),
            order,
            numerator: 1,
            scale: (real_scale * norm).powf(1.0 / order as f64),
        };
        Ok(Self {
            terms: Self::one().terms,
            roots: vec![root],
        })
    }

    /// κ-th formal root of an arbitrary root-free expression, with its
    /// coefficient norm split off as the positive real scale.
    pub fn root_of(expr: &Self, order: u32) -> Result<Self, ThetaError> {
        Self::formal_root(expr, order, 1.0)
    }

    /// Numerical evaluation: grade 0 passes through, odd grades map to `+i`,
    /// even grades to `-1`. Only defined once every root has collapsed.
    pub fn eval_t(&self) -> Result<Complex64, ThetaError> {
        if let Some(r) = self.roots.first() {
            return Err(ThetaError::UnresolvedRoot {
                numerator: r.numerator,
                order: r.order,
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(g, c)| *c * eval_grade(*g))
            .sum())
    }

    fn collapse_roots(mut self) -> Self {
        let mut pending = Vec::new();
        let mut extra = Vec::new();
        for r in std::mem::take(&mut self.roots) {
            if r.numerator >= r.order {
                let whole = r.numerator / r.order;
                let rest = r.numerator % r.order;
                let mut factor = r.base.power(whole).scale_real(r.scale);
                if rest > 0 {
                    let g = gcd(rest, r.order);
                    pending.push(RootFactor {
                        base: r.base.clone(),
                        order: r.order / g,
                        numerator: rest / g,
                        scale: 1.0,
                    });
                } else {
                    factor.roots.clear();
                }
                extra.push(factor);
            } else {
                let g = gcd(r.numerator, r.order);
                pending.push(RootFactor {
                    order: r.order / g,
                    numerator: r.numerator / g,
                    ..r
                });
            }
        }
        for f in extra {
            self.terms = convolve_terms(&self.terms, &f.terms);
        }
        self.roots = pending;
        if self.terms.is_empty() {
            self.roots.clear();
        }
        self
    }
}

/// EvalT of a single grade.
pub fn eval_grade(grade: Grade) -> Complex64 {
    match grade {
        0 => Complex64::new(1.0, 0.0),
        g if g % 2 == 0 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

fn convolve_terms(
    a: &BTreeMap<Grade, Complex64>,
    b: &BTreeMap<Grade, Complex64>,
) -> BTreeMap<Grade, Complex64> {
    let mut out: BTreeMap<Grade, Complex64> = BTreeMap::new();
    for (ga, ca) in a {
        for (gb, cb) in b {
            *out.entry(ga + gb).or_default() += ca * cb;
        }
    }
    out.retain(|_, c| *c != Complex64::new(0.0, 0.0));
    out
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

impl fmt::Display for ThetaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (g, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if *g == 0 {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            } else {
                write!(f, "({}{:+}i)Θ^[{}]", c.re, c.im, g)?;
            }
        }
        for r in &self.roots {
            write!(f, " · {}·({})^({}/{})", r.scale, r.base, r.numerator, r.order)?;
        }
        Ok(())
    }
}

/// Text record of an expression: `(grade, re, im)` triples plus root
/// descriptors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaRecord {
    pub terms: Vec<(Grade, f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub roots: Vec<RootRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootRecord {
    pub base: Vec<(Grade, f64, f64)>,
    pub order: u32,
    pub numerator: u32,
    pub scale: f64,
}

impl From<ThetaExpr> for ThetaRecord {
    fn from(e: ThetaExpr) -> Self {
        let triples = |x: &ThetaExpr| x.terms().map(|(g, c)| (g, c.re, c.im)).collect();
        ThetaRecord {
            terms: triples(&e),
            roots: e
                .roots
                .iter()
                .map(|r| RootRecord {
                    base: triples(&r.base),
                    order: r.order,
                    numerator: r.numerator,
                    scale: r.scale,
                })
                .collect(),
        }
    }
}

impl TryFrom<ThetaRecord> for ThetaExpr {
    type Error = ThetaError;

    fn try_from(rec: ThetaRecord) -> Result<Self, Self::Error> {
        let poly = |t: &[(Grade, f64, f64)]| {
            ThetaExpr::from_terms(t.iter().map(|(g, re, im)| (*g, Complex64::new(*re, *im))))
        };
        let mut out = poly(&rec.terms);
        for r in &rec.roots {
            if r.order == 0 {
                return Err(ThetaError::ZeroOrder);
            }
            if !(r.scale > 0.0) {
                return Err(ThetaError::NonPositiveScale(r.scale));
            }
            out.roots.push(RootFactor {
                base: poly(&r.base),
                order: r.order,
                numerator: r.numerator,
                scale: r.scale,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grades_add_under_star() {
        let p = ThetaExpr::theta(2).star_mul(&ThetaExpr::theta(3)).unwrap();
        assert_eq!(p, ThetaExpr::theta(5));
    }

    #[test]
    fn unit_and_zero() {
        let t = ThetaExpr::theta(7);
        assert_eq!(t.star_mul(&ThetaExpr::one()).unwrap(), t);
        assert!(t.star_mul(&ThetaExpr::zero()).unwrap().is_zero());
    }

    #[test]
    fn mixed_grade_product_example() {
        let (x1, y1, x2, y2) = (1.5, -0.25, 2.0, 0.75);
        let lhs = ThetaExpr::from_terms([(0, c(x1, 0.0)), (1, c(0.0, y1))]);
        let rhs = ThetaExpr::from_terms([(0, c(x2, 0.0)), (2, c(0.0, y2))]);
        let prod = lhs.star_mul(&rhs).unwrap();
        let expected = ThetaExpr::from_terms([
            (0, c(x1 * x2, 0.0)),
            (1, c(0.0, x2 * y1)),
            (2, c(0.0, x1 * y2)),
            (3, c(-y1 * y2, 0.0)),
        ]);
        assert!(prod.approx_eq(&expected, 1e-15));
        let v = prod.eval_t().unwrap();
        let want = c(x1 * x2 - x2 * y1, -(x1 * y2 + y1 * y2));
        assert!((v - want).norm() < 1e-15);
    }

    #[test]
    fn add_and_scale() {
        let two = ThetaExpr::theta(1).add(&ThetaExpr::theta(1)).unwrap();
        assert_eq!(two.coefficient(1), c(2.0, 0.0));
        assert!(ThetaExpr::linear(3.0, 4.0).scale(c(0.0, 0.0)).is_zero());
        let e = ThetaExpr::one().add(&ThetaExpr::theta(2)).unwrap();
        let s = e.scale(c(0.0, 1.0));
        assert_eq!(s.coefficient(0), c(0.0, 1.0));
        assert_eq!(s.coefficient(2), c(0.0, 1.0));
    }

    #[test]
    fn power_examples() {
        assert_eq!(ThetaExpr::theta(2).power(3), ThetaExpr::theta(6));
        let b = ThetaExpr::linear(1.0, 1.0);
        let p = b.power(4);
        for (g, binom) in [(0, 1.0), (1, 4.0), (2, 6.0), (3, 4.0), (4, 1.0)] {
            assert_eq!(p.coefficient(g), c(binom, 0.0));
        }
        assert_eq!(p.eval_t().unwrap(), c(-6.0, 8.0));
        assert_eq!(ThetaExpr::linear(0.3, -2.0).power(0), ThetaExpr::one());
    }

    #[test]
    fn formal_root_order_one_is_identity() {
        let b = ThetaExpr::linear(1.0, 1.0);
        assert_eq!(ThetaExpr::formal_root(&b, 1, 1.0).unwrap(), b);
    }

    #[test]
    fn formal_root_collapses_with_scale() {
        let b = ThetaExpr::linear(1.0, 1.0);
        let r = ThetaExpr::formal_root(&b, 3, 2.0).unwrap();
        assert!(r.eval_t().is_err());
        let cube = r.star_mul(&r).unwrap().star_mul(&r).unwrap();
        assert!(cube.is_root_free());
        assert!(cube.approx_eq(&b.scale_real(2.0), 1e-14));
        let plain = ThetaExpr::formal_root(&b, 3, 1.0).unwrap().power(3);
        assert!(plain.approx_eq(&b, 1e-14));
    }

    #[test]
    fn formal_root_rejects_bad_input() {
        let b = ThetaExpr::linear(1.0, 1.0);
        assert_eq!(
            ThetaExpr::formal_root(&b, 2, 0.0),
            Err(ThetaError::NonPositiveScale(0.0))
        );
        assert_eq!(
            ThetaExpr::formal_root(&b, 2, -1.0),
            Err(ThetaError::NonPositiveScale(-1.0))
        );
        assert_eq!(ThetaExpr::formal_root(&b, 0, 1.0), Err(ThetaError::ZeroOrder));
    }

    #[test]
    fn different_root_bases_do_not_multiply() {
        let r1 = ThetaExpr::formal_root(&ThetaExpr::linear(1.0, 1.0), 2, 1.0).unwrap();
        let r2 = ThetaExpr::formal_root(&ThetaExpr::linear(1.0, -1.0), 2, 1.0).unwrap();
        assert_eq!(r1.star_mul(&r2), Err(ThetaError::RootBaseMismatch));
    }

    #[test]
    fn partial_root_accumulation_reduces() {
        let b = ThetaExpr::linear(2.0, 1.0);
        let r = ThetaExpr::formal_root(&b, 4, 1.0).unwrap();
        let half = r.star_mul(&r).unwrap();
        assert_eq!(half.root_factors()[0].order(), 2);
        assert_eq!(half.root_factors()[0].numerator(), 1);
        let five = half.star_mul(&half).unwrap().star_mul(&r).unwrap();
        // b · b^{1/4}
        assert_eq!(five.root_factors()[0].numerator(), 1);
        assert_eq!(five.root_factors()[0].order(), 4);
        let full = five.star_mul(&r).unwrap().star_mul(&half).unwrap();
        assert!(full.approx_eq(&b.power(2), 1e-13));
    }

    #[test]
    fn eval_grade_map() {
        assert_eq!(ThetaExpr::theta(3).eval_t().unwrap(), c(0.0, 1.0));
        assert_eq!(ThetaExpr::theta(4).eval_t().unwrap(), c(-1.0, 0.0));
        assert_eq!(ThetaExpr::real(2.5).eval_t().unwrap(), c(2.5, 0.0));
    }

    #[test]
    fn unresolved_root_is_an_error() {
        let r = ThetaExpr::formal_root(&ThetaExpr::linear(1.0, 2.0), 3, 1.0).unwrap();
        assert_eq!(
            r.eval_t(),
            Err(ThetaError::UnresolvedRoot { numerator: 1, order: 3 })
        );
    }

    #[test]
    fn adding_different_roots_is_rejected() {
        let r = ThetaExpr::formal_root(&ThetaExpr::linear(1.0, 2.0), 3, 1.0).unwrap();
        assert_eq!(r.add(&ThetaExpr::one()), Err(ThetaError::RootSum));
        let doubled = r.add(&r).unwrap();
        assert_eq!(doubled.coefficient(0), c(2.0, 0.0));
    }

    #[test]
    fn prune_bounds_eval_change() {
        let e = ThetaExpr::from_terms([(0, c(1.0, 0.0)), (1, c(1e-9, 0.0)), (2, c(0.0, -3e-10))]);
        let eps = 1e-8;
        let pruned = e.prune(eps);
        assert_eq!(pruned.term_count(), 1);
        let diff = (pruned.eval_t().unwrap() - e.eval_t().unwrap()).norm();
        assert!(diff <= eps * e.term_count() as f64);
    }

    #[test]
    fn record_round_trip_keeps_roots() {
        let r = ThetaExpr::formal_root(&ThetaExpr::linear(1.0, 2.0), 3, 5.0)
            .unwrap()
            .scale_real(0.5);
        let text = serde_json::to_string(&r).unwrap();
        let back: ThetaExpr = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
