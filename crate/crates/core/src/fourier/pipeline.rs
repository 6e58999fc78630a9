use super::series::{series_product_sum, DEFAULT_MAX_TERMS};
use super::{parity_split, CoefficientSet, CosinePart, FourierError, Parity};

/// The two constants of the generalized Parseval identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityConstants {
    /// `ℂ = ½Πα₀ + Σₘ Παₘ`.
    pub c: f64,
    /// `𝕊 = Σₘ Πβₘ`.
    pub s: f64,
    /// Certified bound on the truncation error of `c`.
    pub bound: f64,
}

impl IdentityConstants {
    pub fn total(&self) -> f64 {
        self.c + self.s
    }
}

/// Running intermediate of a sequential convolution chain.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineState {
    pub current: CoefficientSet,
    pub steps_applied: usize,
}

impl PipelineState {
    pub fn start(cs: CoefficientSet) -> Self {
        Self { current: cs, steps_applied: 0 }
    }

    pub fn convolve_with(self, other: &CoefficientSet) -> Result<Self, FourierError> {
        Ok(Self {
            current: convolve(&self.current, other)?,
            steps_applied: self.steps_applied + 1,
        })
    }
}

/// Convolution in coefficient space. Cosine⋆cosine multiplies coefficients
/// (`α₀ ↦ α₀α₀′`, so the constant term is `½α₀α₀′`); sine⋆sine yields the
/// cosine series with coefficients `−βₘβₘ′`.
pub fn convolve(a: &CoefficientSet, b: &CoefficientSet) -> Result<CoefficientSet, FourierError> {
    match (a.parity(), b.parity()) {
        (Parity::Mixed, _) | (_, Parity::Mixed) => Err(FourierError::MixedParity),
        (Parity::Zero, _) | (_, Parity::Zero) => Ok(CoefficientSet::zero()),
        (Parity::Even, Parity::Even) => {
            let alpha0 = a.alpha0() * b.alpha0();
            match (a.cosine_part(), b.cosine_part()) {
                (
                    CosinePart::Rule { gain: ga, factors: fa },
                    CosinePart::Rule { gain: gb, factors: fb },
                ) => {
                    let mut out = CoefficientSet::even(alpha0, Vec::new());
                    out.cosine = CosinePart::Rule {
                        gain: ga * gb,
                        factors: fa.iter().chain(fb).copied().collect(),
                    };
                    Ok(out)
                }
                _ => {
                    let len = [a.cosine_len(), b.cosine_len()]
                        .into_iter()
                        .flatten()
                        .min()
                        .unwrap_or(0);
                    let values = (1..=len as u64).map(|m| a.alpha(m) * b.alpha(m)).collect();
                    Ok(CoefficientSet::even(alpha0, values))
                }
            }
        }
        (Parity::Odd, Parity::Odd) => {
            let len = a.sine().len().min(b.sine().len());
            let values = (0..len).map(|k| -a.sine()[k] * b.sine()[k]).collect();
            Ok(CoefficientSet::even(0.0, values))
        }
        _ => Err(FourierError::MixedParity),
    }
}

/// The kernel map: sine coefficients become cosine coefficients of the same
/// index.
pub fn kernel_transform(s: &CoefficientSet) -> Result<CoefficientSet, FourierError> {
    match s.parity() {
        Parity::Odd | Parity::Zero => Ok(CoefficientSet::even(0.0, s.sine().to_vec())),
        _ => Err(FourierError::MixedParity),
    }
}

/// `(1/l)∫ f g dx` for two cosine-parity sets, evaluated in coefficient space.
fn final_integral(
    f: &CoefficientSet,
    g: &CoefficientSet,
    tol: f64,
) -> Result<(f64, f64), FourierError> {
    if f.parity() == Parity::Zero || g.parity() == Parity::Zero {
        return Ok((0.0, 0.0));
    }
    let tail = series_product_sum(&[f, g], tol, DEFAULT_MAX_TERMS)?;
    Ok((0.5 * f.alpha0() * g.alpha0() + tail.value, tail.bound))
}

fn chain(items: &[CoefficientSet]) -> Result<PipelineState, FourierError> {
    let mut state = PipelineState::start(items[0].clone());
    for cs in &items[1..] {
        state = state.convolve_with(cs)?;
    }
    Ok(state)
}

fn check_arity(n: usize) -> Result<(), FourierError> {
    if n < 2 {
        return Err(FourierError::TooFewInputs { min: 2, got: n });
    }
    Ok(())
}

/// `ℂ` and `𝕊` through convolution chains: the even parts are convolved in
/// sequence, the odd parts are paired, and for odd `n` one odd part passes
/// through the kernel map. Each sine pairing contributes a factor `−1`, which
/// is undone at the end so the result equals [`constants_product`].
pub fn constants_pipeline(
    inputs: &[CoefficientSet],
    tol: f64,
) -> Result<IdentityConstants, FourierError> {
    let n = inputs.len();
    check_arity(n)?;
    let (evens, odds): (Vec<_>, Vec<_>) = inputs.iter().map(parity_split).unzip();

    let head = chain(&evens[..n - 1])?;
    let (c, bound) = final_integral(&head.current, &evens[n - 1], tol)?;

    let s = if n == 2 {
        odds[0]
            .sine()
            .iter()
            .zip(odds[1].sine())
            .map(|(x, y)| x * y)
            .sum()
    } else {
        let paired_count = if n % 2 == 0 { n } else { n - 1 };
        let mut stage = odds[..paired_count]
            .chunks(2)
            .map(|p| convolve(&p[0], &p[1]))
            .collect::<Result<Vec<_>, _>>()?;
        if n % 2 == 1 {
            stage.push(kernel_transform(&odds[n - 1])?);
        }
        let last = stage.pop().expect("at least two pipeline stages");
        let head = chain(&stage)?;
        let (raw, _) = final_integral(&head.current, &last, tol)?;
        let pairings = paired_count / 2;
        if pairings % 2 == 0 {
            raw
        } else {
            -raw
        }
    };
    Ok(IdentityConstants { c, s, bound })
}

/// `ℂ` and `𝕊` by direct coefficient products.
pub fn constants_product(
    inputs: &[CoefficientSet],
    tol: f64,
) -> Result<IdentityConstants, FourierError> {
    check_arity(inputs.len())?;
    let refs: Vec<&CoefficientSet> = inputs.iter().collect();
    let tail = series_product_sum(&refs, tol, DEFAULT_MAX_TERMS)?;
    let c = 0.5 * inputs.iter().map(|cs| cs.alpha0()).product::<f64>() + tail.value;
    let len = inputs.iter().map(|cs| cs.sine().len()).min().unwrap_or(0);
    let s = (0..len)
        .rev()
        .map(|k| inputs.iter().map(|cs| cs.sine()[k]).product::<f64>())
        .sum();
    Ok(IdentityConstants { c, s, bound: tail.bound })
}

/// Both paths at once; the caller compares them.
pub fn parseval_constants(
    inputs: &[CoefficientSet],
    tol: f64,
) -> Result<(IdentityConstants, IdentityConstants), FourierError> {
    Ok((constants_pipeline(inputs, tol)?, constants_product(inputs, tol)?))
}

#[cfg(test)]
mod tests {
    use super::super::{cosine_coefficients, normalized_cosine};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut ChaCha8Rng, m: usize) -> CoefficientSet {
        let mut v = || (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let cos = v();
        let sin = v();
        CoefficientSet::dense(rng.gen_range(-1.0..1.0), cos, sin)
    }

    #[test]
    fn cosine_convolution_constant_halves() {
        let f = CoefficientSet::even(2.0, vec![1.0]);
        let h = convolve(&f, &f).unwrap();
        assert_eq!(h.alpha0() / 2.0, 2.0);
        assert_eq!(h.alpha(1), 1.0);
        // direct integral (1/l)∫ f(t) f(x−t) dt at x = 0.3, l = 1
        let x = 0.3;
        let pts = 4096;
        let direct: f64 = (0..pts)
            .map(|k| {
                let t = -1.0 + 2.0 * k as f64 / pts as f64;
                f.evaluate(t, 1.0, 1) * f.evaluate(x - t, 1.0, 1)
            })
            .sum::<f64>()
            * 2.0
            / pts as f64;
        assert!((direct - h.evaluate(x, 1.0, 1)).abs() < 1e-12);
    }

    #[test]
    fn sine_convolution_flips_sign() {
        let s = CoefficientSet::odd(vec![1.0]);
        let h = convolve(&s, &s).unwrap();
        assert_eq!(h.parity(), Parity::Even);
        assert_eq!(h.alpha(1), -1.0);
    }

    #[test]
    fn mixed_parity_rejected() {
        let mixed = CoefficientSet::dense(1.0, vec![], vec![1.0]);
        let even = CoefficientSet::even(1.0, vec![]);
        assert_eq!(convolve(&mixed, &even), Err(FourierError::MixedParity));
        assert_eq!(
            convolve(&CoefficientSet::odd(vec![1.0]), &even),
            Err(FourierError::MixedParity)
        );
        assert_eq!(kernel_transform(&even), Err(FourierError::MixedParity));
    }

    #[test]
    fn convolution_commutes_and_is_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (ea, _) = parity_split(&random_set(&mut rng, 16));
            let (eb, _) = parity_split(&random_set(&mut rng, 16));
            let (ec, _) = parity_split(&random_set(&mut rng, 16));
            assert_eq!(convolve(&ea, &eb).unwrap(), convolve(&eb, &ea).unwrap());
            let lhs = convolve(&ea.scaled(2.0), &eb).unwrap();
            assert_eq!(lhs, convolve(&ea, &eb).unwrap().scaled(2.0));
            let sum = CoefficientSet::even(
                eb.alpha0() + ec.alpha0(),
                (1..=16).map(|m| eb.alpha(m) + ec.alpha(m)).collect(),
            );
            let left = convolve(&ea, &sum).unwrap();
            let ab = convolve(&ea, &eb).unwrap();
            let ac = convolve(&ea, &ec).unwrap();
            for m in 1..=16 {
                assert!((left.alpha(m) - ab.alpha(m) - ac.alpha(m)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kernel_keeps_indices() {
        let k = kernel_transform(&CoefficientSet::odd(vec![0.0, 0.5, -2.0])).unwrap();
        assert_eq!(k.alpha(2), 0.5);
        assert_eq!(k.alpha(3), -2.0);
        assert_eq!(kernel_transform(&CoefficientSet::zero()).unwrap().parity(), Parity::Zero);
        let one = kernel_transform(&CoefficientSet::odd(vec![1.0])).unwrap();
        assert_eq!(one.alpha(1), 1.0);
    }

    #[test]
    fn normalized_pair_gives_unit_identity() {
        let cs = normalized_cosine(1.0 / 6.0, 1.0, 2, 1e-14).unwrap();
        let inputs = [cs.clone(), cs];
        for k in [
            constants_pipeline(&inputs, 1e-13).unwrap(),
            constants_product(&inputs, 1e-13).unwrap(),
        ] {
            assert!((k.c - 1.0).abs() < 1e-9);
            assert_eq!(k.s, 0.0);
        }
    }

    #[test]
    fn two_inputs_reduce_to_classical_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_set(&mut rng, 8);
        let g = random_set(&mut rng, 8);
        let k = constants_product(&[f.clone(), g.clone()], 1e-12).unwrap();
        let cross: f64 = 0.5 * f.alpha0() * g.alpha0()
            + (1..=8).map(|m| f.alpha(m) * g.alpha(m) + f.beta(m) * g.beta(m)).sum::<f64>();
        assert!((k.total() - cross).abs() < 1e-14);
    }

    #[test]
    fn dual_path_on_random_dense_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=6 {
            for _ in 0..5 {
                let inputs: Vec<_> = (0..n).map(|_| random_set(&mut rng, 32)).collect();
                let (p, d) = parseval_constants(&inputs, 1e-12).unwrap();
                let scale = 1.0f64.max(d.total().abs());
                assert!((p.total() - d.total()).abs() <= 1e-9 * scale, "n = {n}");
                assert!((p.s - d.s).abs() <= 1e-9 * 1.0f64.max(d.s.abs()), "n = {n}");
            }
        }
    }

    #[test]
    fn rule_inputs_through_pipeline() {
        let a = cosine_coefficients(0.2, 1.0, 3).unwrap();
        let b = cosine_coefficients(0.45, 1.0, 3).unwrap();
        let c = cosine_coefficients(0.8, 1.0, 3).unwrap();
        let inputs = [a, b, c];
        let (p, d) = parseval_constants(&inputs, 1e-13).unwrap();
        assert!((p.c - d.c).abs() < 1e-12);
    }

    #[test]
    fn zero_sine_part_annihilates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut inputs: Vec<_> = (0..4).map(|_| random_set(&mut rng, 8)).collect();
        inputs[2] = parity_split(&inputs[2]).0;
        assert_eq!(constants_pipeline(&inputs, 1e-12).unwrap().s, 0.0);
        assert_eq!(constants_product(&inputs, 1e-12).unwrap().s, 0.0);
    }
}
