//! Exhaustive reference solver for tiny instances. Shares nothing with the
//! library search code beyond instance accessors.

#![allow(dead_code)]

use hhasa_core::{Instance, InstanceData, Node, Point, DEPOT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-9;

/// Ordered chains of distinct stations, including the empty chain.
fn station_chains(stations: &[Node]) -> Vec<Vec<Node>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<Node>> = vec![vec![]];
    for _ in 0..stations.len() {
        let mut next = Vec::new();
        for chain in &frontier {
            for &s in stations {
                if !chain.contains(&s) {
                    let mut c = chain.clone();
                    c.push(s);
                    next.push(c);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Cheapest station placement for a fixed customer order, by forward
/// enumeration of non-dominated (battery, length) labels.
pub fn best_route(order: &[Node], inst: &Instance) -> Option<f64> {
    let q = inst.max_energy();
    let stations: Vec<Node> = inst.stations().collect();
    let chains = station_chains(&stations);
    let mut seq = vec![DEPOT];
    seq.extend_from_slice(order);
    seq.push(DEPOT);
    let mut labels: Vec<(f64, f64)> = vec![(q, 0.0)];
    for w in seq.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut next: Vec<(f64, f64)> = Vec::new();
        for &(battery, length) in &labels {
            'chain: for chain in &chains {
                let mut bat = battery;
                let mut len = length;
                let mut at = a;
                for &s in chain {
                    bat -= inst.energy(at, s);
                    if bat < -EPS {
                        continue 'chain;
                    }
                    len += inst.distance(at, s);
                    bat = q;
                    at = s;
                }
                bat -= inst.energy(at, b);
                if bat < -EPS {
                    continue;
                }
                len += inst.distance(at, b);
                next.push((bat, len));
            }
        }
        // Keep labels that no other label beats on both battery and length.
        next.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.total_cmp(&y.1)));
        labels.clear();
        let mut best_len = f64::INFINITY;
        for l in next {
            if l.1 < best_len - EPS {
                best_len = l.1;
                labels.push(l);
            }
        }
        if labels.is_empty() {
            return None;
        }
    }
    labels.iter().map(|l| l.1).min_by(f64::total_cmp)
}

fn permutations(items: &[Node]) -> Vec<Vec<Node>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Optimal total length over every split of the customers into routes,
/// every visiting order and every station placement.
pub fn brute_force_optimum(inst: &Instance) -> Option<f64> {
    let customers: Vec<Node> = inst.customers().collect();
    let n = customers.len();
    assert!(n <= 8, "brute force is for tiny instances");
    let full = (1usize << n) - 1;
    let mut route = vec![None; full + 1];
    for (mask, slot) in route.iter_mut().enumerate().skip(1) {
        let members: Vec<Node> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| customers[i]).collect();
        let load: u64 = members.iter().map(|&c| u64::from(inst.demand(c))).sum();
        if load > u64::from(inst.max_load()) {
            continue;
        }
        *slot = permutations(&members)
            .iter()
            .filter_map(|p| best_route(p, inst))
            .min_by(f64::total_cmp);
    }
    let mut part = vec![None; full + 1];
    part[0] = Some(0.0);
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let mut sub = mask;
        let mut best: Option<f64> = None;
        while sub > 0 {
            if sub & low != 0 {
                if let (Some(r), Some(p)) = (route[sub], part[mask ^ sub]) {
                    let v: f64 = r + p;
                    if best.is_none_or(|b| v < b) {
                        best = Some(v);
                    }
                }
            }
            sub = (sub - 1) & mask;
        }
        part[mask] = best;
    }
    part[full]
}

/// Random instance with 4 to 7 customers and 1 or 2 stations on which
/// every customer can be served on its own.
pub fn random_toy(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n_c = rng.random_range(4..=7);
        let n_s = rng.random_range(1..=2);
        let mut pt = || Point::new(rng.random_range(0.0..100.0f64).round(), rng.random_range(0.0..100.0f64).round());
        let depot = pt();
        let customers: Vec<(Point, u32)> = (0..n_c).map(|_| (pt(), 0)).collect();
        let stations: Vec<Point> = (0..n_s).map(|_| pt()).collect();
        let far = customers
            .iter()
            .map(|(p, _)| p.distance(&depot))
            .fold(0.0f64, f64::max);
        let customers = customers
            .into_iter()
            .map(|(p, _)| (p, rng.random_range(1..=5)))
            .collect();
        let inst = Instance::new(InstanceData {
            name: format!("toy-{seed}"),
            depot,
            customers,
            stations,
            max_load: rng.random_range(8..=14),
            max_energy: (far * rng.random_range(1.2..2.4f64)).round(),
            consumption: 1.0,
            min_routes: None,
        })
        .expect("valid toy");
        if inst.customers().all(|c| best_route(&[c], &inst).is_some()) {
            return inst;
        }
    }
}
