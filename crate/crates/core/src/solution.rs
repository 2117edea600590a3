//! Giant-tour solutions: evaluation, feasibility checks, station insertion
//! and random initial construction.
//!
//! A tour is a single node sequence that starts and ends at the depot, with
//! interior depot visits separating the routes of consecutive vehicles:
//! `[0, 1, 16, 2, 0, 3, 4, 0]` is two routes, the first one recharging at
//! station 16. Leaving the depot or any station happens with a full battery.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::instance::{Instance, Node, DEPOT};

/// Slack for floating point battery arithmetic.
pub const ENERGY_EPS: f64 = 1e-9;

const CONSTRUCTION_ATTEMPTS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolutionError {
    #[error("tour must start and end at the depot")]
    MalformedDelimiters,
    #[error("node {0} is not part of the instance")]
    UnknownNode(usize),
    #[error("could not build an energy-feasible tour after {0} attempts")]
    Construction(usize),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// No station placement makes the route energy-feasible.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("route cannot be made energy-feasible")]
pub struct Unrepairable;

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    seq: Vec<Node>,
    fitness: Option<f64>,
}

impl Tour {
    pub fn new(seq: Vec<Node>) -> Self {
        Self { seq, fitness: None }
    }

    /// Builds a tour from routes given without depot delimiters.
    pub fn from_routes<R: AsRef<[Node]>>(routes: &[R]) -> Self {
        let mut seq = vec![DEPOT];
        for r in routes {
            seq.extend_from_slice(r.as_ref());
            seq.push(DEPOT);
        }
        Self::new(seq)
    }

    pub fn seq(&self) -> &[Node] {
        &self.seq
    }

    pub fn into_seq(self) -> Vec<Node> {
        self.seq
    }

    /// Cached value from the last [`evaluate`] call.
    pub fn fitness(&self) -> Option<f64> {
        self.fitness
    }

    /// Interior slices between depot delimiters, empty routes included.
    pub fn routes(&self) -> impl Iterator<Item = &[Node]> {
        let inner = if self.seq.len() >= 2 {
            &self.seq[1..self.seq.len() - 1]
        } else {
            &[][..]
        };
        let empty_tour = self.seq.len() < 2;
        inner
            .split(|&n| n == DEPOT)
            .filter(move |_| !empty_tour)
    }

    pub fn route_count(&self) -> usize {
        self.routes().filter(|r| !r.is_empty()).count()
    }

    fn well_formed(&self) -> bool {
        self.seq.len() >= 2 && self.seq[0] == DEPOT && self.seq[self.seq.len() - 1] == DEPOT
    }
}

impl fmt::Display for Tour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.seq.iter().map(|n| n.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Sum of arc lengths along a node sequence.
pub fn path_length(seq: &[Node], inst: &Instance) -> f64 {
    seq.windows(2).map(|w| inst.distance(w[0], w[1])).sum()
}

/// Total travelled distance; caches the value on the tour.
pub fn evaluate(tour: &mut Tour, inst: &Instance) -> Result<f64, SolutionError> {
    if !tour.well_formed() {
        return Err(SolutionError::MalformedDelimiters);
    }
    if let Some(&bad) = tour.seq.iter().find(|&&n| n >= inst.n_nodes()) {
        return Err(SolutionError::UnknownNode(bad));
    }
    let f = path_length(&tour.seq, inst);
    tour.fitness = Some(f);
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    DuplicateCustomer,
    MissingCustomer,
    LoadExceeded,
    BatteryNegative,
    MalformedDelimiters,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One violated constraint. `route` and `position` (index into the tour
/// sequence) are absent for violations that have no single location.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub node: Option<Node>,
    pub route: Option<usize>,
    pub position: Option<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(n) = self.node {
            write!(f, " node={n}")?;
        }
        if let Some(r) = self.route {
            write!(f, " route={r}")?;
        }
        if let Some(p) = self.position {
            write!(f, " position={p}")?;
        }
        Ok(())
    }
}

/// Lists every violated constraint; an empty result means the tour is
/// feasible.
pub fn validate(tour: &Tour, inst: &Instance) -> Vec<Violation> {
    let seq = tour.seq();
    let mut out = Vec::new();
    let violation = |kind, node, route, position| Violation {
        kind,
        node,
        route,
        position,
    };

    if !tour.well_formed() {
        out.push(violation(ViolationKind::MalformedDelimiters, None, None, None));
    }
    for (pos, &n) in seq.iter().enumerate() {
        if n >= inst.n_nodes() {
            out.push(violation(ViolationKind::MalformedDelimiters, Some(n), None, Some(pos)));
        }
    }
    if seq.iter().any(|&n| n >= inst.n_nodes()) {
        return out;
    }

    let mut seen = vec![false; inst.n_customers() + 1];
    for (pos, &n) in seq.iter().enumerate() {
        if inst.is_customer(n) {
            if seen[n] {
                out.push(violation(ViolationKind::DuplicateCustomer, Some(n), None, Some(pos)));
            }
            seen[n] = true;
        }
    }
    for c in inst.customers() {
        if !seen[c] {
            out.push(violation(ViolationKind::MissingCustomer, Some(c), None, None));
        }
    }

    // Walk routes; a route is closed by the next depot or the end of the
    // sequence (a missing closing depot was reported above).
    let mut route = 0;
    let mut load: u64 = 0;
    let mut load_reported = false;
    let mut battery = inst.max_energy();
    let mut battery_reported = false;
    for pos in 1..seq.len() {
        let (a, b) = (seq[pos - 1], seq[pos]);
        battery -= inst.energy(a, b);
        if battery < -ENERGY_EPS && !battery_reported {
            out.push(violation(ViolationKind::BatteryNegative, Some(b), Some(route), Some(pos)));
            battery_reported = true;
        }
        if inst.is_customer(b) {
            load += u64::from(inst.demand(b));
            if load > u64::from(inst.max_load()) && !load_reported {
                out.push(violation(ViolationKind::LoadExceeded, Some(b), Some(route), Some(pos)));
                load_reported = true;
            }
        }
        if inst.is_recharge(b) {
            battery = inst.max_energy();
        }
        if b == DEPOT {
            route += 1;
            load = 0;
            load_reported = false;
            battery_reported = false;
        }
    }
    out
}

/// Per-arc battery trace of one route (interior nodes only, depot implied at
/// both ends): remaining energy on arrival at each node after the depot.
pub fn battery_trace(route: &[Node], inst: &Instance) -> Vec<f64> {
    let mut trace = Vec::with_capacity(route.len() + 1);
    let mut battery = inst.max_energy();
    let mut prev = DEPOT;
    for &n in route.iter().chain(std::iter::once(&DEPOT)) {
        battery -= inst.energy(prev, n);
        trace.push(battery);
        if inst.is_recharge(n) {
            battery = inst.max_energy();
        }
        prev = n;
    }
    trace
}

pub fn route_load(route: &[Node], inst: &Instance) -> u64 {
    route.iter().map(|&n| u64::from(inst.demand(n))).sum()
}

/// Whether a route (interior nodes only) keeps a non-negative battery.
pub fn route_energy_feasible(route: &[Node], inst: &Instance) -> bool {
    let mut battery = inst.max_energy();
    let mut prev = DEPOT;
    for &n in route.iter().chain(std::iter::once(&DEPOT)) {
        battery -= inst.energy(prev, n);
        if battery < -ENERGY_EPS {
            return false;
        }
        if inst.is_recharge(n) {
            battery = inst.max_energy();
        }
        prev = n;
    }
    true
}

struct EnergyFailure {
    /// Index of the first arc `(path[arc], path[arc + 1])` that runs dry.
    arc: usize,
    /// Last index at or before `arc` where the vehicle left fully charged.
    last_recharge: usize,
}

fn first_energy_failure(path: &[Node], inst: &Instance) -> Option<EnergyFailure> {
    let mut battery = inst.max_energy();
    let mut last_recharge = 0;
    for i in 0..path.len() - 1 {
        battery -= inst.energy(path[i], path[i + 1]);
        if battery < -ENERGY_EPS {
            return Some(EnergyFailure {
                arc: i,
                last_recharge,
            });
        }
        if inst.is_recharge(path[i + 1]) {
            battery = inst.max_energy();
            last_recharge = i + 1;
        }
    }
    None
}

/// Inserts stations into one depot-to-depot path until it is
/// energy-feasible. At the first arc `(a, b)` that would drain the battery,
/// in order of preference:
///
/// 1. the smallest-detour station reachable from `a` from which `b` can be
///    reached on a full charge;
/// 2. the same test on earlier arcs back to the last recharge (latest first),
///    where the station must carry the vehicle all the way to `b`;
/// 3. an earlier station that raises the charge left on arrival at `a`;
/// 4. a reachable station strictly closer to `b`, which chains stations
///    across arcs longer than a full battery.
fn repair_path(path: &mut Vec<Node>, inst: &Instance) -> Result<(), Unrepairable> {
    let max_q = inst.max_energy();
    let guard = 4 * path.len() + 4 * inst.n_stations() + 16;
    for _ in 0..guard {
        let Some(fail) = first_energy_failure(path, inst) else {
            return Ok(());
        };
        if inst.n_stations() == 0 {
            return Err(Unrepairable);
        }
        let (first, last) = (fail.last_recharge, fail.arc);

        // Battery when departing each index in first..=last.
        let mut depart = Vec::with_capacity(last - first + 1);
        let mut battery = max_q;
        for j in first..=last {
            if j > first {
                battery -= inst.energy(path[j - 1], path[j]);
            }
            depart.push(battery);
        }
        // to_fail[j - first]: energy from path[j] to path[last].
        let mut to_fail = vec![0.0; last - first + 1];
        for j in (first..last).rev() {
            to_fail[j - first] = to_fail[j + 1 - first] + inst.energy(path[j], path[j + 1]);
        }
        let over_arc = inst.energy(path[last], path[last + 1]);

        // Steps 1 and 2.
        let mut choice: Option<(usize, Node)> = None;
        for j in (first..=last).rev() {
            let (a, b) = (path[j], path[j + 1]);
            let budget = depart[j - first];
            // Energy from b onwards through the failing arc.
            let tail = if j < last {
                to_fail[j + 1 - first] + over_arc
            } else {
                0.0
            };
            let best = inst
                .stations()
                .filter(|&s| s != a && s != b)
                .filter(|&s| inst.energy(a, s) <= budget + ENERGY_EPS)
                .filter(|&s| inst.energy(s, b) + tail <= max_q + ENERGY_EPS)
                .min_by(|&x, &y| detour(inst, a, x, b).total_cmp(&detour(inst, a, y, b)));
            if let Some(s) = best {
                choice = Some((j, s));
                break;
            }
        }

        // Step 3: more charge on arrival at path[last].
        if choice.is_none() {
            let arrival_now = depart[last - first];
            let mut best: Option<(f64, f64, usize, Node)> = None;
            for j in (first..last).rev() {
                let (a, b) = (path[j], path[j + 1]);
                let budget = depart[j - first];
                let rest = to_fail[j + 1 - first];
                for s in inst.stations().filter(|&s| s != a && s != b) {
                    if inst.energy(a, s) > budget + ENERGY_EPS {
                        continue;
                    }
                    let arrival = max_q - inst.energy(s, b) - rest;
                    if arrival <= arrival_now + ENERGY_EPS {
                        continue;
                    }
                    let d = detour(inst, a, s, b);
                    let better = match best {
                        None => true,
                        Some((arr, bd, _, _)) => arrival > arr + ENERGY_EPS || (arrival > arr - ENERGY_EPS && d < bd),
                    };
                    if better {
                        best = Some((arrival, d, j, s));
                    }
                }
                if best.is_some() {
                    break;
                }
            }
            choice = best.map(|(_, _, j, s)| (j, s));
        }

        // Step 4.
        if choice.is_none() {
            let (a, b) = (path[last], path[last + 1]);
            let budget = depart[last - first];
            choice = inst
                .stations()
                .filter(|&s| s != a && inst.energy(a, s) <= budget + ENERGY_EPS)
                .filter(|&s| inst.distance(s, b) < inst.distance(a, b))
                .min_by(|&x, &y| inst.distance(x, b).total_cmp(&inst.distance(y, b)))
                .map(|s| (last, s));
        }

        match choice {
            Some((j, s)) => path.insert(j + 1, s),
            None => return Err(Unrepairable),
        }
    }
    Err(Unrepairable)
}

fn detour(inst: &Instance, a: Node, s: Node, b: Node) -> f64 {
    inst.distance(a, s) + inst.distance(s, b)
}

/// Energy-repairs a single route given without depot delimiters.
pub fn repair_route_energy(route: &[Node], inst: &Instance) -> Result<Vec<Node>, Unrepairable> {
    if route_energy_feasible(route, inst) {
        return Ok(route.to_vec());
    }
    let mut path = Vec::with_capacity(route.len() + 4);
    path.push(DEPOT);
    path.extend_from_slice(route);
    path.push(DEPOT);
    if repair_path(&mut path, inst).is_ok() {
        path.pop();
        path.remove(0);
        return Ok(path);
    }
    let customers: Vec<Node> = route.iter().copied().filter(|&n| inst.is_customer(n)).collect();
    optimal_stations(&customers, inst).ok_or(Unrepairable)
}

/// Shortest station placement for a fixed customer order, or `None` when no
/// placement makes the route feasible.
///
/// Labels are `(recharge node, arc)`: the vehicle has just left a station
/// (or the depot) full, and the next customer is `seq[arc + 1]`. Stations
/// may be chained back to back between two customers.
pub fn optimal_stations(customers: &[Node], inst: &Instance) -> Option<Vec<Node>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Cost(f64);
    impl Eq for Cost {}
    impl PartialOrd for Cost {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Cost {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }

    let max_q = inst.max_energy() + ENERGY_EPS;
    let mut seq = Vec::with_capacity(customers.len() + 2);
    seq.push(DEPOT);
    seq.extend_from_slice(customers);
    seq.push(DEPOT);
    let last = seq.len() - 1;
    let stations: Vec<Node> = inst.stations().collect();
    // Recharge slot 0 is the depot, slot i + 1 is stations[i].
    let slots = stations.len() + 1;
    let node_of = |slot: usize| if slot == 0 { DEPOT } else { stations[slot - 1] };
    let id = |slot: usize, arc: usize| arc * slots + slot;
    let n_labels = last * slots;
    let mut dist = vec![f64::INFINITY; n_labels];
    let mut prev: Vec<Option<usize>> = vec![None; n_labels];
    let mut heap = BinaryHeap::new();
    dist[id(0, 0)] = 0.0;
    heap.push(Reverse((Cost(0.0), id(0, 0))));
    let mut finish: Option<(f64, usize)> = None;

    while let Some(Reverse((Cost(d), label))) = heap.pop() {
        if d > dist[label] {
            continue;
        }
        if finish.is_some_and(|(best, _)| best <= d) {
            break;
        }
        let (slot, arc) = (label % slots, label / slots);
        let from = node_of(slot);
        let mut relax = |to: usize, cost: f64, heap: &mut BinaryHeap<_>| {
            if cost < dist[to] {
                dist[to] = cost;
                prev[to] = Some(label);
                heap.push(Reverse((Cost(cost), to)));
            }
        };
        // Chain to another station before the next customer.
        for (i, &s) in stations.iter().enumerate() {
            if s != from && inst.energy(from, s) <= max_q {
                relax(id(i + 1, arc), d + inst.distance(from, s), &mut heap);
            }
        }
        // Serve customers arc + 1 ..= k, then recharge or finish.
        let mut used = 0.0;
        let mut length = 0.0;
        let mut at = from;
        for k in arc + 1..=last {
            used += inst.energy(at, seq[k]);
            length += inst.distance(at, seq[k]);
            if used > max_q {
                break;
            }
            at = seq[k];
            if k == last {
                if finish.is_none_or(|(best, _)| d + length < best) {
                    finish = Some((d + length, label));
                }
                break;
            }
            for (i, &s) in stations.iter().enumerate() {
                if used + inst.energy(at, s) <= max_q {
                    relax(id(i + 1, k), d + length + inst.distance(at, s), &mut heap);
                }
            }
        }
    }

    let (_, mut label) = finish?;
    // Walk back through the labels, emitting the customers between them.
    let mut rev: Vec<Node> = Vec::new();
    let mut upto = last;
    loop {
        let (slot, arc) = (label % slots, label / slots);
        for k in (arc + 1..upto).rev() {
            rev.push(seq[k]);
        }
        if slot != 0 {
            rev.push(node_of(slot));
        }
        upto = arc + 1;
        match prev[label] {
            Some(p) => label = p,
            None => break,
        }
    }
    rev.reverse();
    Some(rev)
}

/// Makes every route of a load-feasible tour energy-feasible. Routes that
/// already are feasible are left untouched.
pub fn insert_stations(tour: &Tour, inst: &Instance) -> Result<Tour, Unrepairable> {
    let mut seq = Vec::with_capacity(tour.seq().len() + 8);
    seq.push(DEPOT);
    for route in tour.routes() {
        if route.is_empty() {
            continue;
        }
        seq.extend(repair_route_energy(route, inst)?);
        seq.push(DEPOT);
    }
    Ok(Tour::new(seq))
}

/// Cleans up a tour: drops empty routes, collapses runs of adjacent
/// stations to the single visit with the smallest detour, and removes
/// stations visited right after leaving the depot.
pub fn normalize(tour: &Tour, inst: &Instance) -> Tour {
    let mut seq = Vec::with_capacity(tour.seq().len());
    seq.push(DEPOT);
    for route in tour.routes() {
        let start = seq.len();
        let mut i = 0;
        while i < route.len() {
            let n = route[i];
            if !inst.is_station(n) {
                seq.push(n);
                i += 1;
                continue;
            }
            let mut end = i;
            while end + 1 < route.len() && inst.is_station(route[end + 1]) {
                end += 1;
            }
            let prev = *seq.last().unwrap_or(&DEPOT);
            if prev != DEPOT || seq.len() > start {
                let next = route.get(end + 1).copied().unwrap_or(DEPOT);
                let keep = route[i..=end]
                    .iter()
                    .copied()
                    .min_by(|&x, &y| {
                        (inst.distance(prev, x) + inst.distance(x, next))
                            .total_cmp(&(inst.distance(prev, y) + inst.distance(y, next)))
                    })
                    .expect("non-empty station run");
                seq.push(keep);
            }
            i = end + 1;
        }
        // Routes reduced to nothing (or to stations only) disappear.
        if seq[start..].iter().any(|&n| inst.is_customer(n)) {
            seq.push(DEPOT);
        } else {
            seq.truncate(start);
        }
    }
    Tour::new(seq)
}

/// Random feasible starting tour: shuffled customers split greedily by load,
/// then stations inserted where the battery would run out. After
/// repeated failures, routes that stay infeasible are cut in half until
/// they can be repaired.
pub fn construct_initial<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Result<Tour, SolutionError> {
    let mut customers: Vec<Node> = inst.customers().collect();
    for _ in 0..CONSTRUCTION_ATTEMPTS {
        customers.shuffle(rng);
        let tour = split_by_load(&customers, inst);
        if let Ok(t) = insert_stations(&tour, inst) {
            return Ok(t);
        }
    }
    // Last resort: halve routes that cannot be made feasible.
    let tour = split_by_load(&customers, inst);
    let mut seq = vec![DEPOT];
    for route in tour.routes().filter(|r| !r.is_empty()) {
        split_until_feasible(route, inst, &mut seq).map_err(|_| SolutionError::Construction(CONSTRUCTION_ATTEMPTS))?;
    }
    Ok(Tour::new(seq))
}

fn split_until_feasible(route: &[Node], inst: &Instance, seq: &mut Vec<Node>) -> Result<(), Unrepairable> {
    match repair_route_energy(route, inst) {
        Ok(r) => {
            seq.extend(r);
            seq.push(DEPOT);
            Ok(())
        }
        Err(e) if route.len() == 1 => Err(e),
        Err(_) => {
            let (a, b) = route.split_at(route.len() / 2);
            split_until_feasible(a, inst, seq)?;
            split_until_feasible(b, inst, seq)
        }
    }
}

/// Cuts a customer order into routes left to right, opening a new route
/// whenever the next customer would overflow the vehicle.
pub fn split_by_load(order: &[Node], inst: &Instance) -> Tour {
    let cap = u64::from(inst.max_load());
    let mut seq = Vec::with_capacity(order.len() * 2);
    seq.push(DEPOT);
    let mut load = 0;
    for &c in order {
        let q = u64::from(inst.demand(c));
        if load + q > cap && load > 0 {
            seq.push(DEPOT);
            load = 0;
        }
        seq.push(c);
        load += q;
    }
    seq.push(DEPOT);
    Tour::new(seq)
}

/// Writes a tour in the file numbering of the instance followed by its
/// fitness line.
pub fn to_solution_text(tour: &Tour, inst: &Instance) -> String {
    let ids: Vec<String> = tour.seq().iter().map(|&n| inst.file_id(n).to_string()).collect();
    let fitness = tour.fitness().unwrap_or_else(|| path_length(tour.seq(), inst));
    format!("{}\nFITNESS: {:.6}\n", ids.join(","), fitness)
}

/// Parses the solution text format. Returns the tour in canonical numbering
/// and the stated fitness, if present.
pub fn parse_solution_text(text: &str, inst: &Instance) -> Result<(Tour, Option<f64>), SolutionError> {
    let mut seq = Vec::new();
    let mut fitness = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line
            .strip_prefix("FITNESS:")
            .or_else(|| line.strip_prefix("FITNESS :"))
        {
            let v = rest.trim().parse::<f64>().map_err(|_| SolutionError::Parse {
                line: idx + 1,
                reason: format!("bad fitness value `{}`", rest.trim()),
            })?;
            fitness = Some(v);
            continue;
        }
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            let id = tok.parse::<usize>().map_err(|_| SolutionError::Parse {
                line: idx + 1,
                reason: format!("bad node id `{tok}`"),
            })?;
            let node = inst.node_from_file_id(id).ok_or(SolutionError::Parse {
                line: idx + 1,
                reason: format!("node {id} is not in the instance"),
            })?;
            seq.push(node);
        }
    }
    if seq.is_empty() {
        return Err(SolutionError::Parse {
            line: 0,
            reason: "no route data".into(),
        });
    }
    Ok((Tour::new(seq), fitness))
}
