//! Low-level perturbation heuristics and the blocks that turn a perturbed
//! tour back into a feasible one.
//!
//! The pool holds four operators (swap, reversion, 2-opt, insertion), each
//! paired with two closeness levels for picking the second customer. A move
//! runs as: [`generate`] (pick `c1` from a rolling permutation, `c2` near
//! it, apply the operator), then [`repair_load`] when a vehicle is
//! overloaded, then [`adjust_stations`].

use std::collections::VecDeque;
use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, Node, DEPOT};
use crate::solution::{normalize, repair_route_energy, route_energy_feasible, route_load, Tour, Unrepairable};

pub const POOL_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operator {
    Swap,
    Reversion,
    TwoOpt,
    Insertion,
}

/// Which neighbourhood of `c1` the second customer is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Closeness {
    /// The nearest `r1` fraction of customers.
    R1,
    /// The nearest `r2` fraction of customers.
    R2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeuristicId {
    pub op: Operator,
    pub closeness: Closeness,
}

impl HeuristicId {
    /// Pool order; the position in this array is the arm index.
    pub const ALL: [HeuristicId; POOL_SIZE] = [
        HeuristicId::new(Operator::Swap, Closeness::R1),
        HeuristicId::new(Operator::Reversion, Closeness::R1),
        HeuristicId::new(Operator::TwoOpt, Closeness::R1),
        HeuristicId::new(Operator::Insertion, Closeness::R1),
        HeuristicId::new(Operator::Swap, Closeness::R2),
        HeuristicId::new(Operator::Reversion, Closeness::R2),
        HeuristicId::new(Operator::TwoOpt, Closeness::R2),
        HeuristicId::new(Operator::Insertion, Closeness::R2),
    ];

    pub const fn new(op: Operator, closeness: Closeness) -> Self {
        Self { op, closeness }
    }

    pub fn index(self) -> usize {
        let op = match self.op {
            Operator::Swap => 0,
            Operator::Reversion => 1,
            Operator::TwoOpt => 2,
            Operator::Insertion => 3,
        };
        match self.closeness {
            Closeness::R1 => op,
            Closeness::R2 => op + 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for HeuristicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            Operator::Swap => "Swap",
            Operator::Reversion => "Reversion",
            Operator::TwoOpt => "2Opt",
            Operator::Insertion => "Insertion",
        };
        let r = match self.closeness {
            Closeness::R1 => "r1",
            Closeness::R2 => "r2",
        };
        write!(f, "{op}_{r}")
    }
}

/// Fractions of nearest customers used by the two closeness levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosenessFractions {
    pub r1: f64,
    pub r2: f64,
}

impl ClosenessFractions {
    pub fn fraction(&self, c: Closeness) -> f64 {
        match c {
            Closeness::R1 => self.r1,
            Closeness::R2 => self.r2,
        }
    }
}

impl Default for ClosenessFractions {
    fn default() -> Self {
        Self { r1: 0.10, r2: 1.0 }
    }
}

/// Rolling random permutation of customers; each one is used as the first
/// customer of a move exactly once before the permutation is redrawn.
#[derive(Debug, Clone, Default)]
pub struct CustomerQueue {
    cust: VecDeque<Node>,
}

impl CustomerQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cust.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cust.is_empty()
    }

    pub fn next<R: Rng + ?Sized>(&mut self, inst: &Instance, rng: &mut R) -> Node {
        if self.cust.is_empty() {
            let mut perm: Vec<Node> = inst.customers().collect();
            perm.shuffle(rng);
            self.cust.extend(perm);
        }
        self.cust.pop_front().expect("instance has customers")
    }
}

fn position_of(seq: &[Node], node: Node) -> Option<usize> {
    seq.iter().position(|&n| n == node)
}

/// Applies one operator to customers `c1` and `c2` and normalises the
/// result.
///
/// Positions are taken in the whole giant tour, so segments may span depot
/// delimiters and stations; reversing across a delimiter moves customers
/// between routes. `c1 == c2` or a customer missing from the tour is a
/// contract violation and panics.
pub fn apply_heuristic(tour: &Tour, op: Operator, c1: Node, c2: Node, inst: &Instance) -> Tour {
    assert_ne!(c1, c2, "heuristic needs two distinct customers");
    let mut seq = tour.seq().to_vec();
    let i1 = position_of(&seq, c1).expect("c1 is in the tour");
    let i2 = position_of(&seq, c2).expect("c2 is in the tour");
    let (p1, p2) = if i1 < i2 { (i1, i2) } else { (i2, i1) };
    match op {
        Operator::Swap => seq.swap(p1, p2),
        Operator::Reversion => seq[p1..=p2].reverse(),
        Operator::TwoOpt => seq[p1 + 1..=p2].reverse(),
        Operator::Insertion => {
            let node = seq.remove(i1);
            let anchor = position_of(&seq, c2).expect("c2 is in the tour");
            seq.insert(anchor + 1, node);
        }
    }
    normalize(&Tour::new(seq), inst)
}

/// Uniform draw among the nearest `fraction` of customers to `c1`; `None`
/// when the instance has a single customer.
pub fn select_c2<R: Rng + ?Sized>(c1: Node, fraction: f64, inst: &Instance, rng: &mut R) -> Option<Node> {
    inst.closest_customers(c1, fraction).choose(rng).copied()
}

/// Generate block: candidate neighbour of `tour` under heuristic `h`. The
/// candidate may violate load or energy constraints.
pub fn generate<R: Rng + ?Sized>(
    tour: &Tour,
    h: HeuristicId,
    queue: &mut CustomerQueue,
    inst: &Instance,
    fractions: ClosenessFractions,
    rng: &mut R,
) -> Tour {
    let c1 = queue.next(inst, rng);
    match select_c2(c1, fractions.fraction(h.closeness), inst, rng) {
        Some(c2) => apply_heuristic(tour, h.op, c1, c2, inst),
        None => normalize(tour, inst),
    }
}

pub fn is_load_feasible(tour: &Tour, inst: &Instance) -> bool {
    let cap = u64::from(inst.max_load());
    tour.routes().all(|r| route_load(r, inst) <= cap)
}

fn split_routes(tour: &Tour) -> Vec<Vec<Node>> {
    tour.routes().filter(|r| !r.is_empty()).map(<[Node]>::to_vec).collect()
}

fn join_routes(routes: &[Vec<Node>]) -> Tour {
    Tour::from_routes(routes)
}

/// Repair block: moves customers out of overloaded vehicles.
///
/// In each overloaded route the customer at which the running load first
/// exceeds the capacity is removed, repeatedly, until the route fits. Each
/// removed customer is then placed next to its nearest customer among the
/// routes that can still take its demand, on whichever side adds less
/// distance.
pub fn repair_load(tour: &Tour, inst: &Instance) -> Result<Tour, Unrepairable> {
    if is_load_feasible(tour, inst) {
        return Ok(tour.clone());
    }
    let cap = u64::from(inst.max_load());
    let mut routes = split_routes(tour);
    let mut pending = Vec::new();
    for route in &mut routes {
        while route_load(route, inst) > cap {
            let mut running = 0;
            let idx = route
                .iter()
                .position(|&n| {
                    running += u64::from(inst.demand(n));
                    running > cap
                })
                .expect("overloaded route has a crossing point");
            pending.push(route.remove(idx));
        }
    }

    let mut loads: Vec<u64> = routes.iter().map(|r| route_load(r, inst)).collect();
    for c in pending {
        let q = u64::from(inst.demand(c));
        let mut nearest: Option<(f64, usize, usize)> = None;
        for (ri, route) in routes.iter().enumerate() {
            if loads[ri] + q > cap {
                continue;
            }
            for (pi, &n) in route.iter().enumerate() {
                if !inst.is_customer(n) {
                    continue;
                }
                let d = inst.distance(c, n);
                if nearest.is_none_or(|(best, _, _)| d < best) {
                    nearest = Some((d, ri, pi));
                }
            }
        }
        let Some((_, ri, pi)) = nearest else {
            return Err(Unrepairable);
        };
        let route = &mut routes[ri];
        let anchor = route[pi];
        let prev = if pi == 0 { DEPOT } else { route[pi - 1] };
        let next = route.get(pi + 1).copied().unwrap_or(DEPOT);
        let before = inst.distance(prev, c) + inst.distance(c, anchor) - inst.distance(prev, anchor);
        let after = inst.distance(anchor, c) + inst.distance(c, next) - inst.distance(anchor, next);
        if before <= after {
            route.insert(pi, c);
        } else {
            route.insert(pi + 1, c);
        }
        loads[ri] += q;
    }
    Ok(normalize(&join_routes(&routes), inst))
}

/// Parameters of the station adjustment block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustParams {
    /// Probability of leaving an energy-feasible route as it is.
    pub memory: f64,
    /// Roulette weight of relocating a station.
    pub p_move: f64,
    /// Roulette weight of dropping a station.
    pub p_eliminate: f64,
}

impl Default for AdjustParams {
    fn default() -> Self {
        Self {
            memory: 0.5,
            p_move: 0.60,
            p_eliminate: 0.40,
        }
    }
}

/// Adjust-station block. Energy-infeasible routes get stations inserted;
/// feasible routes that visit stations get, with probability
/// `1 - memory`, one station visit either relocated to another arc of the
/// same route or removed, after which the route is repaired if needed.
pub fn adjust_stations<R: Rng + ?Sized>(
    tour: &Tour,
    inst: &Instance,
    params: AdjustParams,
    rng: &mut R,
) -> Result<Tour, Unrepairable> {
    let mut routes = split_routes(tour);
    for route in &mut routes {
        if !route_energy_feasible(route, inst) {
            *route = repair_route_energy(route, inst)?;
            continue;
        }
        let visits: Vec<usize> = (0..route.len()).filter(|&i| inst.is_station(route[i])).collect();
        if visits.is_empty() || rng.random::<f64>() < params.memory {
            continue;
        }
        let total = params.p_move + params.p_eliminate;
        let do_move = total > 0.0 && rng.random::<f64>() * total < params.p_move;
        let at = *visits.choose(rng).expect("non-empty");
        let station = route.remove(at);
        if do_move {
            // Insertion slots are 0..=len; slot `at` puts it back in place.
            let slots = route.len() + 1;
            if slots > 1 {
                let mut slot = rng.random_range(0..slots - 1);
                if slot >= at {
                    slot += 1;
                }
                route.insert(slot, station);
            } else {
                route.insert(at, station);
            }
        }
        if !route_energy_feasible(route, inst) {
            *route = repair_route_energy(route, inst)?;
        }
    }
    Ok(join_routes(&routes))
}
