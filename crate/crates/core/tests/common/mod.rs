#![allow(dead_code)]

use mordell_core::Tolerance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tol(eps: f64) -> Tolerance {
    Tolerance::new(eps, eps, 10_000_000).unwrap()
}

/// `n` points `(κ, u₁, u₂)` with `κ ∈ [−2,2]`, `|u_j| ≤ 3`, kept at distance `margin`
/// from both loci `u₂ = 0` and `u₁ = κu₂`.
pub fn off_locus_points(seed: u64, n: usize, margin: f64) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let k: f64 = rng.gen_range(-2.0..=2.0);
        let u1: f64 = rng.gen_range(-3.0..=3.0);
        let u2: f64 = rng.gen_range(-3.0..=3.0);
        if u2.abs() > margin && (u1 - k * u2).abs() > margin {
            out.push((k, u1, u2));
        }
    }
    out
}
