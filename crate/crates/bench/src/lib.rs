//! Synthetic instances for the benchmarks.

use hhasa_core::{Instance, InstanceData, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform customers on a 100x100 square with stations on a grid, sized so
/// that every customer can be served by a single-customer route.
pub fn synthetic(n_customers: usize, n_stations: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let customers = (0..n_customers)
        .map(|_| {
            let p = Point::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            (p, rng.random_range(1..=20))
        })
        .collect();
    let side = (n_stations as f64).sqrt().ceil().max(1.0) as usize;
    let stations = (0..n_stations)
        .map(|i| {
            let (r, c) = (i / side, i % side);
            Point::new((c as f64 + 0.5) * 100.0 / side as f64, (r as f64 + 0.5) * 100.0 / side as f64)
        })
        .collect();
    Instance::new(InstanceData {
        name: format!("synthetic-{n_customers}"),
        depot: Point::new(50.0, 50.0),
        customers,
        stations,
        max_load: 100,
        max_energy: 150.0,
        consumption: 1.0,
        min_routes: None,
    })
    .expect("synthetic instance is valid")
}
