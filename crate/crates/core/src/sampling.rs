//! Seeded quasi-random and random point generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton sequence in `[0, 1)^dim` with a seeded Cranley–Patterson rotation.
#[derive(Debug, Clone)]
pub struct ScrambledHalton {
    shift: Vec<f64>,
    index: u64,
}

impl ScrambledHalton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension above {}", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            shift: (0..dim).map(|_| rng.gen::<f64>()).collect(),
            index: 1,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(&s, b)| (radical_inverse(i, b) + s).fract())
            .collect()
    }

    /// Next point mapped into `[lo, hi]` coordinate-wise.
    pub fn next_in_box(&mut self, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        self.next_point()
            .into_iter()
            .zip(lo.iter().zip(hi))
            .map(|(u, (&a, &b))| a + u * (b - a))
            .collect()
    }
}

/// Uniform point of the ball `B(center, r)` by rejection from its bounding cube.
pub fn uniform_in_ball(rng: &mut ChaCha8Rng, center: &[f64], r: f64) -> Vec<f64> {
    loop {
        let u: Vec<f64> = center.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if u.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            return center.iter().zip(u).map(|(&c, v)| c + r * v).collect();
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_is_seed_deterministic_and_in_range() {
        let mut a = ScrambledHalton::new(3, 7);
        let mut b = ScrambledHalton::new(3, 7);
        for _ in 0..100 {
            let p = a.next_point();
            assert_eq!(p, b.next_point());
            assert!(p.iter().all(|&v| (0.0..1.0).contains(&v)));
        }
        let mut c = ScrambledHalton::new(3, 8);
        assert_ne!(ScrambledHalton::new(3, 7).next_point(), c.next_point());
    }

    #[test]
    fn halton_fills_unit_interval_evenly() {
        let mut h = ScrambledHalton::new(1, 0);
        let n = 1024;
        let mean: f64 = (0..n).map(|_| h.next_point()[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 5e-3);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut r = rng(1);
        for _ in 0..1000 {
            let p = uniform_in_ball(&mut r, &[1.0, -1.0], 0.5);
            assert!(((p[0] - 1.0).powi(2) + (p[1] + 1.0).powi(2)).sqrt() <= 0.5 + 1e-15);
        }
    }
}
