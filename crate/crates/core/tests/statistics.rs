use hhasa_core::bandit::{select_epsilon_greedy, select_random, select_thompson, BanditState};
use hhasa_core::neighborhoods::select_c2;
use hhasa_core::solver::metropolis_accept;
use hhasa_core::{Instance, InstanceData, Point, POOL_SIZE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson chi-square p-value of `counts` against a uniform distribution.
fn uniform_p(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

const DRAWS: usize = 10_000;
const P_FLOOR: f64 = 0.001;

fn circle(n: usize) -> Instance {
    Instance::new(InstanceData {
        name: "circle".into(),
        depot: Point::new(0.0, 0.0),
        customers: (0..n)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / n as f64;
                (Point::new(100.0 * a.cos(), 100.0 * a.sin()), 1)
            })
            .collect(),
        stations: vec![],
        max_load: 100,
        max_energy: 1e6,
        consumption: 1.0,
        min_routes: None,
    })
    .unwrap()
}

#[test]
fn r2_draws_are_uniform_over_other_customers() {
    let inst = circle(21);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counts = [0usize; 22];
    for _ in 0..DRAWS {
        counts[select_c2(1, 1.0, &inst, &mut rng).unwrap()] += 1;
    }
    assert_eq!(counts[0] + counts[1], 0);
    assert!(uniform_p(&counts[2..]) > P_FLOOR);
}

#[test]
fn r1_draws_only_the_two_nearest() {
    let inst = circle(21);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..DRAWS {
        let c = select_c2(1, 0.10, &inst, &mut rng).unwrap();
        assert!(c == 2 || c == 21, "{c}");
    }
}

#[test]
fn full_exploration_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut s = BanditState::new();
    s.rewards[4] = 50.0;
    let mut counts = [0usize; POOL_SIZE];
    for _ in 0..DRAWS {
        counts[select_epsilon_greedy(&s, 1.0, &mut rng)] += 1;
    }
    assert!(uniform_p(&counts) > P_FLOOR, "{counts:?}");
}

#[test]
fn flat_thompson_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = BanditState::new();
    let mut counts = [0usize; POOL_SIZE];
    for _ in 0..DRAWS {
        counts[select_thompson(&s, &mut rng)] += 1;
    }
    assert!(uniform_p(&counts) > P_FLOOR, "{counts:?}");
}

#[test]
fn random_selector_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; POOL_SIZE];
    for _ in 0..DRAWS {
        counts[select_random(&mut rng)] += 1;
    }
    for c in counts {
        let f = c as f64 / DRAWS as f64;
        assert!((0.10..=0.15).contains(&f), "{counts:?}");
    }
}

#[test]
fn beta_sampler_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (a, b) in [(1.0, 1.0), (2.0, 5.0), (10.0, 2.0)] {
        let dist = Beta::new(a, b).unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = a * b / ((a + b).powi(2) * (a + b + 1.0));
        let se = (var / n as f64).sqrt();
        assert!((mean - a / (a + b)).abs() < 3.0 * se, "Beta({a},{b}) mean {mean}");
    }
}

#[test]
fn metropolis_rate_at_delta_equal_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for t in [0.01, 1.0, 50.0] {
        let hits = (0..DRAWS).filter(|_| metropolis_accept(t, t, &mut rng)).count();
        let rate = hits as f64 / DRAWS as f64;
        assert!((rate - (-1.0f64).exp()).abs() < 0.02, "T={t}: {rate}");
    }
}
