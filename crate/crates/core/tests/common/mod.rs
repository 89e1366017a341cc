#![allow(dead_code)]

use kvariates::{Dataset, Point};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point<R: Rng>(rng: &mut R, d: usize, lo: f64, hi: f64) -> Point {
    Point::new((0..d).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

pub fn uniform_dataset<R: Rng>(rng: &mut R, m: usize, d: usize, lo: f64, hi: f64) -> Dataset {
    Dataset::new((0..m).map(|_| random_point(rng, d, lo, hi)).collect()).unwrap()
}

/// `groups` blobs of `per_group` points, each uniform in a unit box around
/// a random center in `[0, 10]^d`. Returns the data and the blob labels.
pub fn blobs<R: Rng>(
    rng: &mut R,
    groups: usize,
    per_group: usize,
    d: usize,
) -> (Dataset, Vec<usize>) {
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for g in 0..groups {
        let c = random_point(rng, d, 0.0, 10.0);
        for _ in 0..per_group {
            let p = c
                .coords()
                .iter()
                .map(|x| x + rng.random_range(-1.0..1.0))
                .collect();
            pts.push(Point::new(p).unwrap());
            labels.push(g);
        }
    }
    (Dataset::new(pts).unwrap(), labels)
}
