//! Finite lattices and q-swap rewiring.
//!
//! Lattices span along the first grid index `i`: the source boundary is the
//! column `i = 0` and the sink boundary the column `i = L − 1`. The
//! transverse index `j` is open or wrapped.
//!
//! Edge counts for side `L` (open / wrapped transverse boundary):
//!
//! | kind       | nodes | edges (open)     | edges (wrapped) |
//! |------------|-------|------------------|-----------------|
//! | square     | `L²`  | `2L(L−1)`        | `L(2L−1)`       |
//! | triangular | `L²`  | `3L² − 4L + 1`   | `3L² − 2L`      |
//! | honeycomb  | `2L²` | `3L² − 2L`       | `3L² − L`       |
//!
//! Triangular and honeycomb patches are rhombi with bond vectors
//! `(1,0)`, `(0,1)`, `(1,−1)` in grid coordinates; a honeycomb cell `(i, j)`
//! holds an `A` node joined to `B(i,j)`, `B(i−1,j)` and `B(i,j−1)`.
//! Double bonds duplicate every edge into slots 0 and 1.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    Square,
    Triangular,
    Honeycomb,
}

impl std::str::FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(LatticeKind::Square),
            "triangular" => Ok(LatticeKind::Triangular),
            "honeycomb" => Ok(LatticeKind::Honeycomb),
            other => Err(Error::UnsupportedLattice(other.to_string())),
        }
    }
}

impl LatticeKind {
    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Square => "square",
            LatticeKind::Triangular => "triangular",
            LatticeKind::Honeycomb => "honeycomb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    #[default]
    Open,
    Wrapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub size: usize,
    #[serde(default)]
    pub double_bonds: bool,
    #[serde(default)]
    pub boundary: BoundaryMode,
}

impl LatticeSpec {
    pub fn new(kind: LatticeKind, size: usize) -> Self {
        Self {
            kind,
            size,
            double_bonds: false,
            boundary: BoundaryMode::Open,
        }
    }

    pub fn double_bonds(mut self, yes: bool) -> Self {
        self.double_bonds = yes;
        self
    }

    pub fn boundary(mut self, mode: BoundaryMode) -> Self {
        self.boundary = mode;
        self
    }

    pub fn label(&self) -> String {
        format!(
            "{}{}(L={}, {})",
            if self.double_bonds { "double-bond " } else { "" },
            self.kind.name(),
            self.size,
            match self.boundary {
                BoundaryMode::Open => "open",
                BoundaryMode::Wrapped => "wrapped",
            }
        )
    }

    pub fn build(&self) -> Result<Lattice> {
        build_lattice(self.kind, self.size, self.double_bonds, self.boundary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub i: i32,
    pub j: i32,
    /// 0 for Bravais lattices; 0 = A, 1 = B on the honeycomb.
    pub sublattice: u8,
    pub position: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    pub slot: u8,
}

impl Edge {
    pub fn other(&self, node: usize) -> usize {
        if self.a as usize == node {
            self.b as usize
        } else {
            self.a as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    label: String,
    spec: Option<LatticeSpec>,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    source: Vec<usize>,
    sink: Vec<usize>,
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn bravais_position(kind: LatticeKind, i: i32, j: i32, sublattice: u8) -> [f64; 2] {
    match kind {
        LatticeKind::Square => [i as f64, j as f64],
        LatticeKind::Triangular | LatticeKind::Honeycomb => {
            let (mut x, mut y) = (i as f64 + 0.5 * j as f64, 0.5 * SQRT3 * j as f64);
            if sublattice == 1 {
                // circumcentre of the A-site's three B neighbours
                x += 0.5;
                y += 0.5 / SQRT3;
            }
            [x, y]
        }
    }
}

/// Builds an `L × L` patch of the given kind.
pub fn build_lattice(
    kind: LatticeKind,
    size: usize,
    double_bonds: bool,
    boundary: BoundaryMode,
) -> Result<Lattice> {
    if size < 2 {
        return Err(Error::InvalidParameter(format!(
            "lattice side must be at least 2, got {size}"
        )));
    }
    if boundary == BoundaryMode::Wrapped && size < 3 {
        return Err(Error::InvalidParameter(
            "wrapped boundaries need side at least 3".into(),
        ));
    }
    if size > 20_000 {
        return Err(Error::InvalidParameter(format!("lattice side {size} too large")));
    }
    let l = size as i32;
    let wrap = boundary == BoundaryMode::Wrapped;
    let subs: u8 = if kind == LatticeKind::Honeycomb { 2 } else { 1 };
    let id = |i: i32, j: i32, s: u8| -> u32 { ((i * l + j) as u32) * subs as u32 + s as u32 };

    let mut nodes = Vec::with_capacity(size * size * subs as usize);
    for i in 0..l {
        for j in 0..l {
            for s in 0..subs {
                nodes.push(Node {
                    i,
                    j,
                    sublattice: s,
                    position: bravais_position(kind, i, j, s),
                });
            }
        }
    }

    let mut edges = Vec::new();
    let mut add = |a: u32, b: u32| {
        edges.push(Edge { a, b, slot: 0 });
        if double_bonds {
            edges.push(Edge { a, b, slot: 1 });
        }
    };
    // transverse neighbour j + dj, honouring the boundary mode
    let shift = |j: i32, dj: i32| -> Option<i32> {
        let t = j + dj;
        if (0..l).contains(&t) {
            Some(t)
        } else if wrap {
            Some(t.rem_euclid(l))
        } else {
            None
        }
    };

    for i in 0..l {
        for j in 0..l {
            match kind {
                LatticeKind::Square | LatticeKind::Triangular => {
                    let here = id(i, j, 0);
                    if let Some(up) = shift(j, 1) {
                        add(here, id(i, up, 0));
                    }
                    if i + 1 < l {
                        add(here, id(i + 1, j, 0));
                        if kind == LatticeKind::Triangular {
                            if let Some(down) = shift(j, -1) {
                                add(here, id(i + 1, down, 0));
                            }
                        }
                    }
                }
                LatticeKind::Honeycomb => {
                    let a = id(i, j, 0);
                    add(a, id(i, j, 1));
                    if i >= 1 {
                        add(a, id(i - 1, j, 1));
                    }
                    if let Some(down) = shift(j, -1) {
                        add(a, id(i, down, 1));
                    }
                }
            }
        }
    }

    let source = (0..nodes.len()).filter(|&n| nodes[n].i == 0).collect();
    let sink = (0..nodes.len()).filter(|&n| nodes[n].i == l - 1).collect();
    let spec = LatticeSpec {
        kind,
        size,
        double_bonds,
        boundary,
    };
    Ok(Lattice {
        label: spec.label(),
        spec: Some(spec),
        nodes,
        edges,
        source,
        sink,
    })
}

impl Lattice {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Construction parameters; `None` for rewired lattices.
    pub fn spec(&self) -> Option<&LatticeSpec> {
        self.spec.as_ref()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> &[usize] {
        &self.source
    }

    pub fn sink(&self) -> &[usize] {
        &self.sink
    }

    /// Incident edge indices of every node.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (e, edge) in self.edges.iter().enumerate() {
            inc[edge.a as usize].push(e);
            inc[edge.b as usize].push(e);
        }
        inc
    }

    /// Degree counting every multiplicity slot.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for e in &self.edges {
            deg[e.a as usize] += 1;
            deg[e.b as usize] += 1;
        }
        deg
    }

    /// Sorted distinct neighbours of `node`.
    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.a as usize == node || e.b as usize == node)
            .map(|e| e.other(node))
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    /// Edge list as CSV `node_a,node_b,slot,scp`.
    pub fn to_csv(&self, scps: Option<&[f64]>) -> String {
        let mut out = String::from("node_a,node_b,slot,scp\n");
        for (k, e) in self.edges.iter().enumerate() {
            let scp = scps.map(|s| format!("{}", s[k])).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", e.a, e.b, e.slot, scp);
        }
        out
    }
}

/// Nodes to q-swap and the cyclic neighbour order at each.
#[derive(Debug, Clone, PartialEq)]
pub struct QSwapPlan {
    swap_nodes: Vec<usize>,
    neighbor_order: Vec<Vec<usize>>,
}

/// Slot-0 edges `(neighbour, edge index)` of every node.
fn slot0_star(lattice: &Lattice) -> Vec<Vec<(usize, usize)>> {
    let mut star = vec![Vec::new(); lattice.node_count()];
    for (e, edge) in lattice.edges.iter().enumerate() {
        if edge.slot == 0 {
            star[edge.a as usize].push((edge.b as usize, e));
            star[edge.b as usize].push((edge.a as usize, e));
        }
    }
    star
}

fn ccw_order(lattice: &Lattice, center: usize, mut neighbors: Vec<usize>) -> Vec<usize> {
    let [cx, cy] = lattice.nodes[center].position;
    let angle = |n: usize| {
        let [x, y] = lattice.nodes[n].position;
        let a = (y - cy).atan2(x - cx);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    };
    neighbors.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)).then(a.cmp(&b)));
    neighbors
}

impl QSwapPlan {
    /// Plan with counter-clockwise geometric neighbour order.
    pub fn new(lattice: &Lattice, swap_nodes: Vec<usize>) -> Result<Self> {
        let star = slot0_star(lattice);
        let mut order = Vec::with_capacity(swap_nodes.len());
        for &n in &swap_nodes {
            if n >= lattice.node_count() {
                return Err(Error::InvalidPlan(format!("node {n} out of range")));
            }
            let nbrs = star[n].iter().map(|x| x.0).collect();
            order.push(ccw_order(lattice, n, nbrs));
        }
        Self::with_order(lattice, swap_nodes, order)
    }

    pub fn with_order(
        lattice: &Lattice,
        swap_nodes: Vec<usize>,
        neighbor_order: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if swap_nodes.len() != neighbor_order.len() {
            return Err(Error::InvalidPlan(
                "one neighbour order per swap node required".into(),
            ));
        }
        let n = lattice.node_count();
        let mut is_swap = vec![false; n];
        for &s in &swap_nodes {
            if s >= n {
                return Err(Error::InvalidPlan(format!("node {s} out of range")));
            }
            if std::mem::replace(&mut is_swap[s], true) {
                return Err(Error::InvalidPlan(format!("node {s} listed twice")));
            }
        }
        for e in &lattice.edges {
            if is_swap[e.a as usize] && is_swap[e.b as usize] {
                return Err(Error::InvalidPlan(format!(
                    "swap nodes {} and {} are adjacent",
                    e.a, e.b
                )));
            }
        }
        let star = slot0_star(lattice);
        for (&s, order) in swap_nodes.iter().zip(&neighbor_order) {
            let mut expected: Vec<usize> = star[s].iter().map(|x| x.0).collect();
            expected.sort_unstable();
            if expected.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidPlan(format!(
                    "node {s} has parallel slot-0 edges"
                )));
            }
            if expected.len() < 2 {
                return Err(Error::InvalidPlan(format!(
                    "node {s} has degree {} < 2",
                    expected.len()
                )));
            }
            let mut given = order.clone();
            given.sort_unstable();
            if given != expected {
                return Err(Error::InvalidPlan(format!(
                    "neighbour order of node {s} is not a permutation of its neighbours"
                )));
            }
        }
        Ok(Self {
            swap_nodes,
            neighbor_order,
        })
    }

    /// Keeps the candidates with exactly `q` slot-0 neighbours; boundary
    /// nodes of lower degree are left out.
    pub fn full_degree(
        lattice: &Lattice,
        candidates: impl IntoIterator<Item = usize>,
        q: usize,
    ) -> Result<Self> {
        let star = slot0_star(lattice);
        let nodes = candidates
            .into_iter()
            .filter(|&n| n < star.len() && star[n].len() == q)
            .collect();
        Self::new(lattice, nodes)
    }

    /// 3-swaps on every full-degree `A` node of a honeycomb.
    pub fn honeycomb(lattice: &Lattice) -> Result<Self> {
        match lattice.spec {
            Some(spec) if spec.kind == LatticeKind::Honeycomb => {}
            _ => {
                return Err(Error::UnsupportedLattice(format!(
                    "honeycomb plan needs a honeycomb, got {}",
                    lattice.label
                )))
            }
        }
        let a_nodes = (0..lattice.node_count()).filter(|&n| lattice.nodes[n].sublattice == 0);
        Self::full_degree(lattice, a_nodes, 3)
    }

    pub fn swap_nodes(&self) -> &[usize] {
        &self.swap_nodes
    }

    pub fn neighbor_order(&self) -> &[Vec<usize>] {
        &self.neighbor_order
    }
}

/// Where an output edge's SCP comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeOrigin {
    Direct(u32),
    /// New bond between two neighbours of a swapped node: `min` of the two
    /// consumed edges.
    Min(u32, u32),
}

/// Topology of a q-swap, reusable across SCP draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapTransform {
    lattice: Lattice,
    origins: Vec<EdgeOrigin>,
    groups: Vec<Vec<usize>>,
    input_edges: usize,
}

impl SwapTransform {
    pub fn new(input: &Lattice, plan: &QSwapPlan) -> Result<Self> {
        // Re-validate: plans may have been built for another lattice.
        let plan = QSwapPlan::with_order(input, plan.swap_nodes.clone(), plan.neighbor_order.clone())?;
        let n = input.node_count();
        let mut removed = vec![false; n];
        for &s in &plan.swap_nodes {
            removed[s] = true;
        }
        let mut remap = vec![u32::MAX; n];
        let mut nodes = Vec::with_capacity(n - plan.swap_nodes.len());
        for (k, node) in input.nodes.iter().enumerate() {
            if !removed[k] {
                remap[k] = nodes.len() as u32;
                nodes.push(*node);
            }
        }

        let mut edges = Vec::new();
        let mut origins = Vec::new();
        let mut next_slot: HashMap<(u32, u32), u8> = HashMap::new();
        let key = |a: u32, b: u32| (a.min(b), a.max(b));
        for (e, edge) in input.edges.iter().enumerate() {
            if removed[edge.a as usize] || removed[edge.b as usize] {
                continue;
            }
            let (a, b) = (remap[edge.a as usize], remap[edge.b as usize]);
            let s = next_slot.entry(key(a, b)).or_insert(0);
            *s = (*s).max(edge.slot + 1);
            edges.push(Edge { a, b, slot: edge.slot });
            origins.push(EdgeOrigin::Direct(e as u32));
        }

        let star = slot0_star(input);
        let mut groups = Vec::with_capacity(plan.swap_nodes.len());
        for (&s, order) in plan.swap_nodes.iter().zip(&plan.neighbor_order) {
            let edge_to = |nbr: usize| -> u32 {
                star[s].iter().find(|x| x.0 == nbr).expect("validated plan").1 as u32
            };
            let q = order.len();
            // a 2-cycle collapses to a single relay bond
            let bonds = if q == 2 { 1 } else { q };
            let mut group = Vec::with_capacity(bonds);
            for k in 0..bonds {
                let (u, v) = (order[k], order[(k + 1) % q]);
                let (a, b) = (remap[u], remap[v]);
                let slot = next_slot.entry(key(a, b)).or_insert(0);
                group.push(edges.len());
                edges.push(Edge { a, b, slot: *slot });
                *slot += 1;
                origins.push(EdgeOrigin::Min(edge_to(u), edge_to(v)));
            }
            groups.push(group);
        }

        let keep = |set: &[usize]| -> Vec<usize> {
            set.iter()
                .filter(|&&k| !removed[k])
                .map(|&k| remap[k] as usize)
                .collect()
        };
        let (source, sink) = (keep(&input.source), keep(&input.sink));
        if source.is_empty() || sink.is_empty() {
            return Err(Error::InvalidPlan("plan removes a whole boundary".into()));
        }
        Ok(Self {
            lattice: Lattice {
                label: format!("{} + {} q-swaps", input.label, plan.swap_nodes.len()),
                spec: None,
                nodes,
                edges,
                source,
                sink,
            },
            origins,
            groups,
            input_edges: input.edge_count(),
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn origins(&self) -> &[EdgeOrigin] {
        &self.origins
    }

    /// Output edges created by each swap node, in plan order.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn input_edge_count(&self) -> usize {
        self.input_edges
    }

    /// Output SCPs from input SCPs by the min-rule.
    pub fn apply_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.origins.iter().map(|o| match *o {
            EdgeOrigin::Direct(e) => input[e as usize],
            EdgeOrigin::Min(a, b) => input[a as usize].min(input[b as usize]),
        }));
    }

    pub fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_scps(input, self.input_edges)?;
        let mut out = Vec::with_capacity(self.origins.len());
        self.apply_into(input, &mut out);
        Ok(out)
    }
}

fn check_scps(scps: &[f64], edges: usize) -> Result<()> {
    if scps.len() != edges {
        return Err(Error::InvalidParameter(format!(
            "{} SCPs supplied for {edges} edges",
            scps.len()
        )));
    }
    if let Some(bad) = scps.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidParameter(format!(
            "SCP {bad} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Applies `plan` to `lattice` with edge SCPs `scps`: each swap node's star
/// is replaced by a cycle over its neighbours whose bonds carry the minimum
/// of the two consumed SCPs.
pub fn q_swap(lattice: &Lattice, plan: &QSwapPlan, scps: &[f64]) -> Result<(Lattice, Vec<f64>)> {
    check_scps(scps, lattice.edge_count())?;
    let t = SwapTransform::new(lattice, plan)?;
    let out = t.apply(scps)?;
    Ok((t.lattice, out))
}

/// Transform turning a double-bond honeycomb into a triangular lattice on
/// the `B` sublattice (3-swaps on `A`, slot-0 bonds consumed).
pub fn honeycomb_to_triangular_transform(lattice: &Lattice) -> Result<SwapTransform> {
    match lattice.spec {
        Some(spec) if spec.kind == LatticeKind::Honeycomb && spec.double_bonds => {}
        _ => {
            return Err(Error::UnsupportedLattice(format!(
                "expected a double-bond honeycomb, got {}",
                lattice.label
            )))
        }
    }
    SwapTransform::new(lattice, &QSwapPlan::honeycomb(lattice)?)
}

pub fn honeycomb_to_triangular(lattice: &Lattice, scps: &[f64]) -> Result<(Lattice, Vec<f64>)> {
    check_scps(scps, lattice.edge_count())?;
    let t = honeycomb_to_triangular_transform(lattice)?;
    let out = t.apply(scps)?;
    Ok((t.lattice, out))
}
