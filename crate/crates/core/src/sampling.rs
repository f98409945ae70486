//! Deterministic point-pair sampling for the empirical checks.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Pair = (DVector<f64>, DVector<f64>);

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_PAIRS: usize = 10_000;

/// Seeded generator shared by every sampling routine in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

/// Pairs `(e_i, 0)` and `((e_i + e_j)/sqrt 2, 0)` for `i < j`.
pub fn axis_pairs(dim: usize) -> Vec<Pair> {
    let zero = DVector::zeros(dim);
    let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        out.push((e, zero.clone()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for j in i + 1..dim {
            let mut e = DVector::zeros(dim);
            e[i] = s;
            e[j] = s;
            out.push((e, zero.clone()));
        }
    }
    out
}

/// Axis pairs, then the caller's adversarial pairs, then Gaussian pairs
/// until `count` pairs are produced. The structured pairs are always kept,
/// even when they alone exceed `count`.
pub fn sample_pairs(dim: usize, count: usize, seed: u64, adversarial: &[Pair]) -> Vec<Pair> {
    let mut out = axis_pairs(dim);
    out.extend(adversarial.iter().filter(|(x, y)| x.len() == dim && y.len() == dim).cloned());
    let mut r = rng(seed);
    while out.len() < count {
        let x = gaussian_vector(&mut r, dim);
        let y = gaussian_vector(&mut r, dim);
        if x != y {
            out.push((x, y));
        }
    }
    out
}

/// Uniform draw from `[lo, hi)`.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    lo + (hi - lo) * rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = sample_pairs(3, 50, 7, &[]);
        let b = sample_pairs(3, 50, 7, &[]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert_ne!(sample_pairs(3, 50, 8, &[]), a);
    }

    #[test]
    fn axis_pairs_count() {
        assert_eq!(axis_pairs(2).len(), 3);
        assert_eq!(axis_pairs(10).len(), 55);
        for (x, y) in axis_pairs(4) {
            assert!(((x - y).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn structured_pairs_survive_small_counts() {
        let adv = vec![(DVector::from_vec(vec![3.0, 4.0]), DVector::from_vec(vec![0.0, 0.0]))];
        let p = sample_pairs(2, 1, 0, &adv);
        assert_eq!(p.len(), 4);
        assert_eq!(p[3], adv[0]);
    }
}
