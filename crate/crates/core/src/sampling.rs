//! Deterministic randomness: seeded generators, seed mixing, categorical
//! draws and Laplace noise.
//!
//! Every categorical draw consumes exactly one `f64` from the generator,
//! whether uniform or weighted. The reduction identities between the
//! samplers depend on this.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point;

/// Generator used throughout the crate.
pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer over `(seed, stream)`; used to derive independent
/// per-trial and per-subroutine seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED69));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform index in `0..n` from a single `f64` draw.
pub fn pick_uniform<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    let u: f64 = rng.random();
    ((u * n as f64) as usize).min(n - 1)
}

/// Index drawn proportionally to `weights` using one uniform draw against
/// the running cumulative sum; the lowest index wins ties. Returns `None`
/// when the weights sum to zero (nothing drawn from the generator).
pub fn pick_weighted<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let u: f64 = rng.random();
    Some(locate(weights, u * total))
}

/// First index whose cumulative weight exceeds `target`.
fn locate(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if acc > target {
                return i;
            }
        }
    }
    // Rounding pushed the target past the end.
    last_positive
}

/// Normalizes weights into probabilities (all zero stays all zero).
pub fn normalize(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter().map(|w| w / total).collect()
    } else {
        vec![0.0; weights.len()]
    }
}

/// One draw from a centered Laplace distribution with scale `b`
/// (variance `2 b^2`). `b == 0` returns 0 without touching the generator.
pub fn laplace<R: Rng + ?Sized>(rng: &mut R, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    // u uniform in (-1/2, 1/2); inverse CDF.
    let mut u: f64 = rng.random::<f64>() - 0.5;
    if u == -0.5 {
        u = -0.5 + f64::EPSILON;
    }
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Density of the centered Laplace distribution with scale `b` at `x`.
pub fn laplace_pdf(x: f64, b: f64) -> f64 {
    (-(x.abs()) / b).exp() / (2.0 * b)
}

/// Point drawn from the product of `Lap(sigma / sqrt 2)` around `mu`, so
/// every coordinate has variance `sigma^2`. `sigma == 0` returns `mu`.
pub fn sample_product_laplace<R: Rng + ?Sized>(mu: &Point, sigma: f64, rng: &mut R) -> Point {
    let b = sigma / std::f64::consts::SQRT_2;
    let coords = mu.coords().iter().map(|m| m + laplace(rng, b)).collect();
    Point::from_vec_unchecked(coords)
}

/// Fisher-Yates prefix: `k` distinct indices from `0..n` in draw order.
pub fn sample_distinct<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + pick_uniform(rng, n - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// `k` distinct indices from `0..n` by rejection; cheap when `k << n`.
pub fn sample_distinct_sparse<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    if 4 * k > n {
        return sample_distinct(rng, n, k);
    }
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let i = pick_uniform(rng, n);
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}
