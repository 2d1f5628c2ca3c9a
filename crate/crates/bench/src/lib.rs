//! Seeded inputs shared by the benchmarks.

use marketfacts_core::market::{Order, Side, Ticks};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn orders(n: usize, seed: u64) -> Vec<Order> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| Order {
            agent_id: rng.random_range(0..500),
            side: if rng.random_bool(0.5) { Side::Buy } else { Side::Sell },
            quantity: rng.random_range(1..=20),
            limit: Ticks(rng.random_range(9_900..=10_100)),
            submit_tick: i as u64,
        })
        .collect()
}

/// Continuous power law on `[x_min, inf)` by inversion.
pub fn power_law(n: usize, zeta: f64, x_min: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| x_min * (1.0 - rng.random::<f64>()).powf(-1.0 / (zeta - 1.0)))
        .collect()
}

pub fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}
