use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::types::{MaskPair, MaskSet, Mode, SecretInput, Supplementary, UserMasks};
use super::ProtocolError;

/// Additive mask scalars are drawn from `[−ADDITIVE_RANGE, ADDITIVE_RANGE]`.
pub const ADDITIVE_RANGE: f64 = 10.0;
/// Multiplicative masks are log-uniform on `[MULT_LOW, MULT_HIGH]`.
pub const MULT_LOW: f64 = 0.1;
pub const MULT_HIGH: f64 = 10.0;
/// Largest accepted `|Π chain − 1|`.
pub const TELESCOPE_TOLERANCE: f64 = 1e-12;

pub fn additive(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-ADDITIVE_RANGE..=ADDITIVE_RANGE)
}

pub fn multiplicative(rng: &mut impl Rng) -> f64 {
    rng.gen_range(MULT_LOW.ln()..=MULT_HIGH.ln()).exp()
}

fn pair(rng: &mut impl Rng) -> MaskPair {
    MaskPair::new(additive(rng), additive(rng))
}

/// `parts` reals summing to `value`; the last share fixes the sum.
pub fn split_with(value: f64, parts: usize, rng: &mut impl Rng) -> Vec<f64> {
    assert!(parts >= 1, "at least one share");
    let mut shares: Vec<f64> = (0..parts - 1).map(|_| additive(rng)).collect();
    let partial: f64 = shares.iter().sum();
    shares.push(value - partial);
    shares
}

/// Deterministic additive split of `value` under `seed`.
pub fn split_secret(value: f64, parts: usize, seed: u64) -> Vec<f64> {
    split_with(value, parts, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `κ` positive masks whose product is 1: the last is the inverse of the
/// product of the others.
pub fn telescoping_chain(kappa: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut chain: Vec<f64> = (0..kappa.saturating_sub(1)).map(|_| multiplicative(rng)).collect();
    let product: f64 = chain.iter().product();
    chain.push(1.0 / product);
    chain
}

pub fn chain_deviation(chain: &[f64]) -> f64 {
    (chain.iter().product::<f64>() - 1.0).abs()
}

/// Fails with `TelescopeViolation` if any chain drifts from 1.
pub fn check_telescoping(sup: &Supplementary) -> Result<(), ProtocolError> {
    for chain in sup.zero.iter().chain(&sup.stream) {
        let deviation = chain_deviation(chain);
        if deviation > TELESCOPE_TOLERANCE {
            return Err(ProtocolError::TelescopeViolation { deviation });
        }
    }
    Ok(())
}

pub fn sample_supplementary(kappa: usize, rng: &mut impl Rng) -> Supplementary {
    Supplementary {
        zero: (0..4).map(|_| telescoping_chain(kappa, rng)).collect(),
        stream: (0..4).map(|_| telescoping_chain(kappa, rng)).collect(),
    }
}

/// Unit supplementary masks.
pub fn unit_supplementary(kappa: usize) -> Supplementary {
    Supplementary {
        zero: vec![vec![1.0; kappa]; 4],
        stream: vec![vec![1.0; kappa]; 4],
    }
}

/// Samples shares and masks for every user: `share_count` additive shares
/// of `x_j a_j`, one zero-mode pair, and the stream pairs required by `mode`.
/// For `iota ≥ 1` the supplementary chains are drawn too.
pub fn sample_masks(
    inputs: &[SecretInput],
    mode: Mode,
    iota: usize,
    seed: u64,
) -> MaskSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa = 3 * iota;
    let share_count = if iota == 0 { 4 } else { 4 * kappa };
    let stream_len = match mode {
        Mode::Rank1 => 1,
        Mode::Dense { truncation } => truncation,
    };
    let users = inputs
        .iter()
        .map(|inp| {
            let shares = split_with(inp.weight * inp.code, share_count, &mut rng);
            let zero = pair(&mut rng);
            let stream = (0..stream_len).map(|_| pair(&mut rng)).collect();
            let supplementary = (iota > 0).then(|| sample_supplementary(kappa, &mut rng));
            UserMasks { shares, zero, stream, supplementary }
        })
        .collect();
    MaskSet { users }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_part_is_the_value() {
        assert_eq!(split_secret(6.6, 1, 9), vec![6.6]);
    }

    #[test]
    fn seeded_split_is_deterministic() {
        assert_eq!(split_secret(6.6, 4, 42), split_secret(6.6, 4, 42));
        assert_ne!(split_secret(6.6, 4, 42), split_secret(6.6, 4, 43));
    }

    #[test]
    fn worked_split_sums() {
        let shares = [3.3, 1.65, 1.32, 0.33];
        assert!((shares.iter().sum::<f64>() - 3.0 * 2.2).abs() < 1e-12);
    }

    #[test]
    fn unit_chain_when_kappa_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(telescoping_chain(1, &mut rng), vec![1.0]);
    }

    #[test]
    fn violation_detected() {
        let mut sup = unit_supplementary(3);
        sup.stream[2][1] = 1.5;
        assert!(matches!(
            check_telescoping(&sup),
            Err(ProtocolError::TelescopeViolation { .. })
        ));
    }

    proptest! {
        #[test]
        fn split_preserves_sum(seed in any::<u64>(), parts in 1usize..40) {
            let shares = split_secret(6.6, parts, seed);
            prop_assert_eq!(shares.len(), parts);
            prop_assert!((shares.iter().sum::<f64>() - 6.6).abs() < 1e-12);
        }

        #[test]
        fn chains_telescope(seed in any::<u64>(), kappa in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sup = sample_supplementary(kappa, &mut rng);
            prop_assert!(check_telescoping(&sup).is_ok());
            prop_assert!(sup.zero.iter().flatten().all(|v| *v > 0.0));
        }
    }
}
