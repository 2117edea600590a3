//! Problem definition for the capacitated electric vehicle routing problem.
//!
//! Nodes use a canonical layout regardless of how the source file numbers
//! them: the depot is node `0`, customers are `1..=n_c` and charging
//! stations are `n_c + 1..=n_c + n_s`. The mapping back to file ids is kept
//! so that solutions can be written in the numbering of the input file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

/// Canonical node index (see module docs for the layout).
pub type Node = usize;

/// Depot index in the canonical layout.
pub const DEPOT: Node = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Depot,
    Customer,
    Station,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("line {line}: malformed header `{text}`")]
    MalformedHeader { line: usize, text: String },
    #[error("missing required header `{0}`")]
    MissingHeader(&'static str),
    #[error("missing required section `{0}`")]
    MissingSection(&'static str),
    #[error("{section}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        section: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: expected a number, found `{token}`")]
    NonNumeric { line: usize, token: String },
    #[error("unsupported {key} `{value}`")]
    Unsupported { key: &'static str, value: String },
    #[error("node {node}: {reason}")]
    InvalidNode { node: usize, reason: String },
    #[error("customer {node}: demand {demand} exceeds vehicle capacity {capacity}")]
    DemandExceedsCapacity {
        node: usize,
        demand: u32,
        capacity: u32,
    },
    #[error("invalid {key}: {reason}")]
    InvalidValue { key: &'static str, reason: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Raw, canonically ordered problem data used to build an [`Instance`].
#[derive(Debug, Clone)]
pub struct InstanceData {
    pub name: String,
    pub depot: Point,
    /// Customer positions and demands; customer `i` becomes node `i + 1`.
    pub customers: Vec<(Point, u32)>,
    pub stations: Vec<Point>,
    pub max_load: u32,
    pub max_energy: f64,
    pub consumption: f64,
    pub min_routes: Option<usize>,
}

/// Immutable problem instance with precomputed distances, per-customer
/// proximity lists and a nearest-detour station table.
#[derive(Debug, Clone)]
pub struct Instance {
    name: String,
    n_customers: usize,
    n_stations: usize,
    coords: Vec<Point>,
    demand: Vec<u32>,
    max_load: u32,
    max_energy: f64,
    consumption: f64,
    min_routes: Option<usize>,
    optimal_value: Option<f64>,
    file_ids: Vec<usize>,
    dist: Vec<f64>,
    proximity: Vec<Vec<Node>>,
    best_station: Vec<u32>,
}

impl Instance {
    pub fn new(data: InstanceData) -> Result<Self, InstanceError> {
        let n_total = 1 + data.customers.len() + data.stations.len();
        let file_ids = (1..=n_total).collect();
        Self::build(data, file_ids, None)
    }

    fn build(
        data: InstanceData,
        file_ids: Vec<usize>,
        optimal_value: Option<f64>,
    ) -> Result<Self, InstanceError> {
        let n_customers = data.customers.len();
        let n_stations = data.stations.len();
        if n_customers == 0 {
            return Err(InstanceError::InvalidValue {
                key: "DIMENSION",
                reason: "instance has no customers".into(),
            });
        }
        if data.max_load == 0 {
            return Err(InstanceError::InvalidValue {
                key: "CAPACITY",
                reason: "must be positive".into(),
            });
        }
        if !(data.max_energy > 0.0 && data.max_energy.is_finite()) {
            return Err(InstanceError::InvalidValue {
                key: "ENERGY_CAPACITY",
                reason: "must be positive".into(),
            });
        }
        if !(data.consumption > 0.0 && data.consumption.is_finite()) {
            return Err(InstanceError::InvalidValue {
                key: "ENERGY_CONSUMPTION",
                reason: "must be positive".into(),
            });
        }

        let mut coords = Vec::with_capacity(n_customers + n_stations + 1);
        let mut demand = vec![0; n_customers + n_stations + 1];
        coords.push(data.depot);
        for (i, (p, q)) in data.customers.iter().enumerate() {
            let node = i + 1;
            if *q == 0 {
                return Err(InstanceError::InvalidNode {
                    node: file_ids[node],
                    reason: "customer demand must be positive".into(),
                });
            }
            if *q > data.max_load {
                return Err(InstanceError::DemandExceedsCapacity {
                    node: file_ids[node],
                    demand: *q,
                    capacity: data.max_load,
                });
            }
            coords.push(*p);
            demand[node] = *q;
        }
        coords.extend(data.stations.iter().copied());

        let n = coords.len();
        let mut dist = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let d = coords[a].distance(&coords[b]);
                dist[a * n + b] = d;
                dist[b * n + a] = d;
            }
        }

        let proximity = (1..=n_customers)
            .map(|c| {
                let mut others: Vec<Node> = (1..=n_customers).filter(|&o| o != c).collect();
                others.sort_by(|&a, &b| dist[c * n + a].total_cmp(&dist[c * n + b]).then(a.cmp(&b)));
                others
            })
            .collect();

        let first_station = n_customers + 1;
        let mut best_station = vec![u32::MAX; n * n];
        if n_stations > 0 {
            for a in 0..n {
                for b in 0..n {
                    let mut best = first_station;
                    let mut best_len = f64::INFINITY;
                    for s in first_station..n {
                        let len = dist[a * n + s] + dist[s * n + b];
                        if len < best_len {
                            best_len = len;
                            best = s;
                        }
                    }
                    best_station[a * n + b] = best as u32;
                }
            }
        }

        Ok(Self {
            name: data.name,
            n_customers,
            n_stations,
            coords,
            demand,
            max_load: data.max_load,
            max_energy: data.max_energy,
            consumption: data.consumption,
            min_routes: data.min_routes,
            optimal_value,
            file_ids,
            dist,
            proximity,
            best_station,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        parse_instance(&text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_customers(&self) -> usize {
        self.n_customers
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    /// Total node count including the depot.
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn max_load(&self) -> u32 {
        self.max_load
    }

    pub fn max_energy(&self) -> f64 {
        self.max_energy
    }

    /// Energy consumed per unit of distance.
    pub fn consumption(&self) -> f64 {
        self.consumption
    }

    /// Advisory vehicle count from the file header; never enforced.
    pub fn min_routes(&self) -> Option<usize> {
        self.min_routes
    }

    pub fn optimal_value(&self) -> Option<f64> {
        self.optimal_value
    }

    pub fn coord(&self, node: Node) -> Point {
        self.coords[node]
    }

    pub fn demand(&self, node: Node) -> u32 {
        self.demand[node]
    }

    pub fn kind(&self, node: Node) -> NodeKind {
        if node == DEPOT {
            NodeKind::Depot
        } else if node <= self.n_customers {
            NodeKind::Customer
        } else {
            NodeKind::Station
        }
    }

    #[inline]
    pub fn is_customer(&self, node: Node) -> bool {
        node != DEPOT && node <= self.n_customers
    }

    #[inline]
    pub fn is_station(&self, node: Node) -> bool {
        node > self.n_customers
    }

    /// Depot or station: leaving either of them happens with a full battery.
    #[inline]
    pub fn is_recharge(&self, node: Node) -> bool {
        node == DEPOT || node > self.n_customers
    }

    pub fn customers(&self) -> impl Iterator<Item = Node> + '_ {
        1..=self.n_customers
    }

    pub fn stations(&self) -> impl Iterator<Item = Node> + '_ {
        (self.n_customers + 1)..self.coords.len()
    }

    /// Unrounded Euclidean distance.
    #[inline]
    pub fn distance(&self, a: Node, b: Node) -> f64 {
        self.dist[a * self.coords.len() + b]
    }

    #[inline]
    pub fn energy(&self, a: Node, b: Node) -> f64 {
        self.consumption * self.distance(a, b)
    }

    /// Station minimising `d(a, s) + d(s, b)`, ties to the lowest index.
    /// Returns `None` when the instance has no stations.
    pub fn nearest_station(&self, a: Node, b: Node) -> Option<Node> {
        if self.n_stations == 0 {
            return None;
        }
        Some(self.best_station[a * self.coords.len() + b] as Node)
    }

    /// Every other customer, nearest first.
    pub fn proximity(&self, customer: Node) -> &[Node] {
        &self.proximity[customer - 1]
    }

    /// The `ceil(fraction * (n_c - 1))` customers closest to `customer`,
    /// never fewer than one (when another customer exists).
    pub fn closest_customers(&self, customer: Node, fraction: f64) -> &[Node] {
        let list = self.proximity(customer);
        &list[..closeness_count(list.len(), fraction)]
    }

    /// Id of `node` in the numbering of the source file.
    pub fn file_id(&self, node: Node) -> usize {
        self.file_ids[node]
    }

    /// Inverse of [`Instance::file_id`].
    pub fn node_from_file_id(&self, id: usize) -> Option<Node> {
        self.file_ids.iter().position(|&f| f == id)
    }

    /// Writes the instance in the line-oriented EVRP file format.
    pub fn to_evrp_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NAME : {}", self.name);
        let _ = writeln!(out, "TYPE : EVRP");
        if let Some(v) = self.optimal_value {
            let _ = writeln!(out, "OPTIMAL_VALUE : {v}");
        }
        if let Some(v) = self.min_routes {
            let _ = writeln!(out, "VEHICLES : {v}");
        }
        let _ = writeln!(out, "DIMENSION : {}", self.n_customers + 1);
        let _ = writeln!(out, "STATIONS : {}", self.n_stations);
        let _ = writeln!(out, "CAPACITY : {}", self.max_load);
        let _ = writeln!(out, "ENERGY_CAPACITY : {}", self.max_energy);
        let _ = writeln!(out, "ENERGY_CONSUMPTION : {}", self.consumption);
        let _ = writeln!(out, "EDGE_WEIGHT_FORMAT : EUC_2D");
        let mut by_file: Vec<Node> = (0..self.n_nodes()).collect();
        by_file.sort_by_key(|&n| self.file_ids[n]);
        out.push_str("NODE_COORD_SECTION\n");
        for &n in &by_file {
            let p = self.coords[n];
            let _ = writeln!(out, "{} {} {}", self.file_ids[n], p.x, p.y);
        }
        out.push_str("DEMAND_SECTION\n");
        for &n in by_file.iter().filter(|&&n| !self.is_station(n)) {
            let _ = writeln!(out, "{} {}", self.file_ids[n], self.demand[n]);
        }
        out.push_str("STATIONS_COORD_SECTION\n");
        for &n in by_file.iter().filter(|&&n| self.is_station(n)) {
            let _ = writeln!(out, "{}", self.file_ids[n]);
        }
        out.push_str("DEPOT_SECTION\n");
        let _ = writeln!(out, "{}", self.file_ids[DEPOT]);
        out.push_str("-1\nEOF\n");
        out
    }
}

/// Number of candidates kept for a closeness fraction over `available`
/// other customers.
pub fn closeness_count(available: usize, fraction: f64) -> usize {
    if available == 0 {
        return 0;
    }
    // Guard against products like 0.1 * 30 = 3.0000000000000004.
    let raw = (fraction * available as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(available)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Header,
    Coords,
    Demands,
    Stations,
    Depot,
    Done,
}

/// Parses the TSPLIB-derived EVRP benchmark format.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut headers: HashMap<String, String> = HashMap::new();
    let mut coords: Vec<(usize, Point)> = Vec::new();
    let mut demands: Vec<(usize, u32)> = Vec::new();
    let mut station_ids: Vec<usize> = Vec::new();
    let mut depot_ids: Vec<usize> = Vec::new();
    let mut seen = [false; 4];
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        match upper.as_str() {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                seen[0] = true;
                continue;
            }
            "DEMAND_SECTION" => {
                section = Section::Demands;
                seen[1] = true;
                continue;
            }
            "STATIONS_COORD_SECTION" => {
                section = Section::Stations;
                seen[2] = true;
                continue;
            }
            "DEPOT_SECTION" => {
                section = Section::Depot;
                seen[3] = true;
                continue;
            }
            "EOF" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        let mut tokens = line.split_whitespace();
        match section {
            Section::Header => {
                let Some((key, value)) = line.split_once(':') else {
                    return Err(InstanceError::MalformedHeader {
                        line: line_no,
                        text: line.to_string(),
                    });
                };
                let key = key.trim().to_ascii_uppercase();
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    return Err(InstanceError::MalformedHeader {
                        line: line_no,
                        text: line.to_string(),
                    });
                }
                headers.insert(key, value.trim().to_string());
            }
            Section::Coords => {
                let id = next_int(&mut tokens, line_no)?;
                let x = next_float(&mut tokens, line_no)?;
                let y = next_float(&mut tokens, line_no)?;
                coords.push((id, Point::new(x, y)));
            }
            Section::Demands => {
                let id = next_int(&mut tokens, line_no)?;
                let q = next_int(&mut tokens, line_no)?;
                let q = u32::try_from(q).map_err(|_| InstanceError::NonNumeric {
                    line: line_no,
                    token: q.to_string(),
                })?;
                demands.push((id, q));
            }
            Section::Stations => station_ids.push(next_int(&mut tokens, line_no)?),
            Section::Depot => {
                let tok = tokens.next().unwrap_or_default();
                if tok == "-1" {
                    section = Section::Done;
                } else {
                    depot_ids.push(parse_int(tok, line_no)?);
                }
            }
            Section::Done => {}
        }
    }

    for (flag, name) in seen.iter().zip(SECTIONS) {
        if !flag {
            return Err(InstanceError::MissingSection(name));
        }
    }

    let header = |key: &'static str| headers.get(key).ok_or(InstanceError::MissingHeader(key));
    let header_num = |key: &'static str| -> Result<f64, InstanceError> {
        let v = header(key)?;
        v.parse::<f64>().map_err(|_| InstanceError::InvalidValue {
            key,
            reason: format!("`{v}` is not a number"),
        })
    };
    let header_int = |key: &'static str| -> Result<usize, InstanceError> {
        let v = header(key)?;
        v.parse::<usize>().map_err(|_| InstanceError::InvalidValue {
            key,
            reason: format!("`{v}` is not a non-negative integer"),
        })
    };

    let kind = header("TYPE")?;
    if !kind.eq_ignore_ascii_case("EVRP") {
        return Err(InstanceError::Unsupported {
            key: "TYPE",
            value: kind.clone(),
        });
    }
    let weights = headers
        .get("EDGE_WEIGHT_FORMAT")
        .or_else(|| headers.get("EDGE_WEIGHT_TYPE"))
        .ok_or(InstanceError::MissingHeader("EDGE_WEIGHT_FORMAT"))?;
    if !weights.eq_ignore_ascii_case("EUC_2D") {
        return Err(InstanceError::Unsupported {
            key: "EDGE_WEIGHT_FORMAT",
            value: weights.clone(),
        });
    }
    let name = header("NAME")?.clone();
    let dimension = header_int("DIMENSION")?;
    let n_stations = header_int("STATIONS")?;
    let capacity = header_int("CAPACITY")?;
    let max_load = u32::try_from(capacity).map_err(|_| InstanceError::InvalidValue {
        key: "CAPACITY",
        reason: "out of range".into(),
    })?;
    let max_energy = header_num("ENERGY_CAPACITY")?;
    let consumption = header_num("ENERGY_CONSUMPTION")?;
    let min_routes = match headers.get("VEHICLES") {
        Some(_) => Some(header_int("VEHICLES")?),
        None => None,
    };
    let optimal_value = match headers.get("OPTIMAL_VALUE") {
        Some(_) => Some(header_num("OPTIMAL_VALUE")?),
        None => None,
    };
    if dimension < 2 {
        return Err(InstanceError::InvalidValue {
            key: "DIMENSION",
            reason: "needs a depot and at least one customer".into(),
        });
    }

    let n_total = dimension + n_stations;
    check_len("NODE_COORD_SECTION", n_total, coords.len())?;
    check_len("DEMAND_SECTION", dimension, demands.len())?;
    check_len("STATIONS_COORD_SECTION", n_stations, station_ids.len())?;
    check_len("DEPOT_SECTION", 1, depot_ids.len())?;

    let mut position: HashMap<usize, Point> = HashMap::with_capacity(n_total);
    for &(id, p) in &coords {
        if position.insert(id, p).is_some() {
            return Err(InstanceError::InvalidNode {
                node: id,
                reason: "duplicate coordinate entry".into(),
            });
        }
    }
    let lookup = |id: usize| {
        position.get(&id).copied().ok_or(InstanceError::InvalidNode {
            node: id,
            reason: "no coordinates".into(),
        })
    };

    let depot_id = depot_ids[0];
    let depot = lookup(depot_id)?;
    let mut station_set = std::collections::HashSet::with_capacity(n_stations);
    for &s in &station_ids {
        if s == depot_id || !station_set.insert(s) {
            return Err(InstanceError::InvalidNode {
                node: s,
                reason: "listed twice or as both depot and station".into(),
            });
        }
    }

    let mut demand_of: HashMap<usize, u32> = HashMap::with_capacity(dimension);
    for &(id, q) in &demands {
        if station_set.contains(&id) {
            return Err(InstanceError::InvalidNode {
                node: id,
                reason: "station has a demand entry".into(),
            });
        }
        if demand_of.insert(id, q).is_some() {
            return Err(InstanceError::InvalidNode {
                node: id,
                reason: "duplicate demand entry".into(),
            });
        }
    }
    if demand_of.get(&depot_id).copied().unwrap_or(0) != 0 {
        return Err(InstanceError::InvalidNode {
            node: depot_id,
            reason: "depot demand must be zero".into(),
        });
    }

    let mut customer_ids: Vec<usize> = position
        .keys()
        .copied()
        .filter(|id| *id != depot_id && !station_set.contains(id))
        .collect();
    customer_ids.sort_unstable();
    check_len("customer nodes", dimension - 1, customer_ids.len())?;

    let mut customers = Vec::with_capacity(customer_ids.len());
    for &id in &customer_ids {
        let q = *demand_of.get(&id).ok_or(InstanceError::InvalidNode {
            node: id,
            reason: "no demand entry".into(),
        })?;
        customers.push((lookup(id)?, q));
    }
    let stations = station_ids.iter().map(|&s| lookup(s)).collect::<Result<Vec<_>, _>>()?;

    let mut file_ids = Vec::with_capacity(n_total);
    file_ids.push(depot_id);
    file_ids.extend(customer_ids.iter().copied());
    file_ids.extend(station_ids.iter().copied());

    Instance::build(
        InstanceData {
            name,
            depot,
            customers,
            stations,
            max_load,
            max_energy,
            consumption,
            min_routes,
        },
        file_ids,
        optimal_value,
    )
}

const KNOWN_KEYS: &[&str] = &[
    "NAME",
    "COMMENT",
    "TYPE",
    "OPTIMAL_VALUE",
    "VEHICLES",
    "DIMENSION",
    "STATIONS",
    "CAPACITY",
    "ENERGY_CAPACITY",
    "ENERGY_CONSUMPTION",
    "EDGE_WEIGHT_FORMAT",
    "EDGE_WEIGHT_TYPE",
];

const SECTIONS: [&str; 4] = [
    "NODE_COORD_SECTION",
    "DEMAND_SECTION",
    "STATIONS_COORD_SECTION",
    "DEPOT_SECTION",
];

fn check_len(section: &'static str, expected: usize, found: usize) -> Result<(), InstanceError> {
    if expected == found {
        Ok(())
    } else {
        Err(InstanceError::DimensionMismatch {
            section,
            expected,
            found,
        })
    }
}

fn parse_int(tok: &str, line: usize) -> Result<usize, InstanceError> {
    tok.parse().map_err(|_| InstanceError::NonNumeric {
        line,
        token: tok.to_string(),
    })
}

fn next_int<'a>(tokens: &mut impl Iterator<Item = &'a str>, line: usize) -> Result<usize, InstanceError> {
    parse_int(tokens.next().unwrap_or_default(), line)
}

fn next_float<'a>(tokens: &mut impl Iterator<Item = &'a str>, line: usize) -> Result<f64, InstanceError> {
    let tok = tokens.next().unwrap_or_default();
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| InstanceError::NonNumeric {
            line,
            token: tok.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SMALL: &str = "\
NAME : tiny
COMMENT : hand-made: four customers, two stations
TYPE : EVRP
VEHICLES : 2
DIMENSION : 5
STATIONS : 2
CAPACITY : 10
ENERGY_CAPACITY : 30
ENERGY_CONSUMPTION : 1.2
EDGE_WEIGHT_FORMAT : EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 4
3 -3 4
4 6 0
5 0 -7
6 1 0
7 10 0
DEMAND_SECTION
1 0
2 3
3 4
4 5
5 6
STATIONS_COORD_SECTION
6
7
DEPOT_SECTION
1
-1
EOF
";

    #[test]
    fn parses_canonical_layout() {
        let inst = parse_instance(SMALL).unwrap();
        assert_eq!(inst.name(), "tiny");
        assert_eq!(inst.n_customers(), 4);
        assert_eq!(inst.n_stations(), 2);
        assert_eq!(inst.max_load(), 10);
        assert_eq!(inst.max_energy(), 30.0);
        assert_eq!(inst.consumption(), 1.2);
        assert_eq!(inst.min_routes(), Some(2));
        assert_eq!(inst.demand(DEPOT), 0);
        assert_eq!(inst.demand(4), 6);
        assert_eq!(inst.kind(5), NodeKind::Station);
        assert_eq!(inst.file_id(5), 6);
        assert_eq!(inst.distance(0, 1), 5.0);
        assert!((inst.energy(0, 1) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn remaps_depot_listed_last() {
        let text = SMALL
            .replace("1 0 0\n", "1 9 9\n")
            .replace("5 0 -7\n", "5 0 0\n")
            .replace("1 0\n2 3", "1 6\n2 3")
            .replace("5 6\n", "5 0\n")
            .replace("DEPOT_SECTION\n1\n", "DEPOT_SECTION\n5\n");
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.coord(DEPOT), Point::new(0.0, 0.0));
        assert_eq!(inst.file_id(DEPOT), 5);
        assert_eq!(inst.file_id(1), 1);
        assert_eq!(inst.demand(1), 6);
        assert_eq!(inst.node_from_file_id(5), Some(DEPOT));
    }

    #[test]
    fn dimension_mismatch() {
        let text = SMALL.replace("DIMENSION : 5", "DIMENSION : 6");
        assert!(matches!(
            parse_instance(&text),
            Err(InstanceError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn missing_section() {
        let text = SMALL.replace("DEPOT_SECTION\n1\n-1\n", "");
        assert!(matches!(
            parse_instance(&text),
            Err(InstanceError::MissingSection("DEPOT_SECTION"))
        ));
    }

    #[test]
    fn malformed_header() {
        let text = SMALL.replace("TYPE : EVRP", "FLAVOUR : EVRP");
        assert!(matches!(
            parse_instance(&text),
            Err(InstanceError::MalformedHeader { line: 3, .. })
        ));
        let text = SMALL.replace("TYPE : EVRP", "TYPE EVRP");
        assert!(matches!(
            parse_instance(&text),
            Err(InstanceError::MalformedHeader { .. })
        ));
    }

    #[test]
    fn non_numeric_coordinate() {
        let text = SMALL.replace("4 6 0", "4 six 0");
        assert!(matches!(
            parse_instance(&text),
            Err(InstanceError::NonNumeric { line: 15, .. })
        ));
    }

    #[test]
    fn demand_exceeding_capacity() {
        let text = SMALL.replace("5 6\n", "5 11\n");
        assert!(matches!(
            parse_instance(&text),
            Err(InstanceError::DemandExceedsCapacity { node: 5, demand: 11, .. })
        ));
    }

    #[test]
    fn header_keys_are_case_insensitive() {
        let text = SMALL
            .replace("NAME :", "Name:")
            .replace("EDGE_WEIGHT_FORMAT", "EDGE_WEIGHT_TYPE");
        assert_eq!(parse_instance(&text).unwrap().name(), "tiny");
    }

    #[test]
    fn writer_round_trips() {
        let inst = parse_instance(SMALL).unwrap();
        let again = parse_instance(&inst.to_evrp_string()).unwrap();
        for a in 0..inst.n_nodes() {
            assert_eq!(inst.coord(a), again.coord(a));
            assert_eq!(inst.demand(a), again.demand(a));
            assert_eq!(inst.file_id(a), again.file_id(a));
        }
    }

    #[test]
    fn nearest_station_geometry() {
        let data = InstanceData {
            name: "line".into(),
            depot: Point::new(0.0, 0.0),
            customers: vec![(Point::new(2.0, 0.0), 1)],
            stations: vec![Point::new(1.0, 0.0), Point::new(10.0, 0.0)],
            max_load: 5,
            max_energy: 100.0,
            consumption: 1.0,
            min_routes: None,
        };
        let inst = Instance::new(data).unwrap();
        assert_eq!(inst.nearest_station(DEPOT, 1), Some(2));
    }

    #[test]
    fn closeness_counts() {
        assert_eq!(closeness_count(20, 1.0), 20);
        assert_eq!(closeness_count(20, 0.10), 2);
        assert_eq!(closeness_count(30, 0.10), 3);
        assert_eq!(closeness_count(5, 0.10), 1);
        assert_eq!(closeness_count(1, 0.10), 1);
        assert_eq!(closeness_count(0, 0.5), 0);
    }
}
