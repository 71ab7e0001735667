//! Directed, anisotropically weighted grid graphs over a domain.
//!
//! Nodes sit on the lattice `hℤᵈ` clipped to `Ω̄`. Stencil edges that leave
//! `Ω̄` are truncated at the exit point, where a boundary node is inserted.
//! Lattice points on an open slit are duplicated, one copy per side, and each
//! copy only connects to its own side. Edge weights use midpoint quadrature
//! `w(u→v) = |v−u|·φ⁰((u+v)/2, (v−u)/|v−u|)`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexField, Shape};
use crate::domain::{Domain, Side};
use crate::error::{Error, Result};

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

const WEIGHT_RTOL: f64 = 1e-9;
const MAX_NODES: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Interior,
    Boundary,
    SlitLeft,
    SlitRight,
}

impl NodeRole {
    pub fn is_boundary(self) -> bool {
        self != NodeRole::Interior
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Interior => "interior",
            NodeRole::Boundary => "boundary",
            NodeRole::SlitLeft => "slit_left",
            NodeRole::SlitRight => "slit_right",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
    #[serde(rename = "26")]
    TwentySix,
}

impl Stencil {
    pub fn from_order(order: usize, dim: usize) -> Result<Self> {
        match (order, dim) {
            (8, 2) => Ok(Stencil::Eight),
            (16, 2) => Ok(Stencil::Sixteen),
            (26, 3) => Ok(Stencil::TwentySix),
            _ => Err(Error::Argument(format!(
                "stencil order {order} is not available in {dim}D (use 8 or 16 in 2D, 26 in 3D)"
            ))),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Stencil::Eight => 8,
            Stencil::Sixteen => 16,
            Stencil::TwentySix => 26,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Stencil::TwentySix => 3,
            _ => 2,
        }
    }

    /// Integer lattice offsets, all primitive.
    pub fn offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        match self {
            Stencil::Eight | Stencil::Sixteen => {
                let r: i64 = if self == Stencil::Eight { 1 } else { 2 };
                for j in -r..=r {
                    for i in -r..=r {
                        if (i, j) == (0, 0) || gcd(i.abs(), j.abs()) != 1 {
                            continue;
                        }
                        out.push([i, j, 0]);
                    }
                }
            }
            Stencil::TwentySix => {
                for k in -1..=1 {
                    for j in -1..=1 {
                        for i in -1..=1 {
                            if (i, j, k) != (0, 0, 0) {
                                out.push([i, j, k]);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Worst-case relative overestimate of a straight Euclidean distance by
    /// stencil paths: `1/cos(θ_gap/2) − 1` for the largest angular gap.
    pub fn relative_error_bound(self) -> f64 {
        if self == Stencil::TwentySix {
            // gap between (1,0,0) and (1,1,1) directions
            let gap = (1.0 / 3f64.sqrt()).acos();
            return 1.0 / (gap / 2.0).cos() - 1.0;
        }
        let mut angles: Vec<f64> = self
            .offsets()
            .iter()
            .map(|o| (o[1] as f64).atan2(o[0] as f64))
            .collect();
        angles.sort_by(f64::total_cmp);
        let mut gap: f64 = angles[0] + std::f64::consts::TAU - angles[angles.len() - 1];
        for w in angles.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        1.0 / (gap / 2.0).cos() - 1.0
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub pos: [f64; 3],
    pub role: NodeRole,
    /// Slit index for duplicated slit nodes.
    pub slit: Option<usize>,
}

impl Node {
    pub fn point(&self, dim: usize) -> &[f64] {
        &self.pos[..dim]
    }
}

/// Node positions, roles and undirected edge pairs, shared by every
/// reweighting of one discretization.
#[derive(Debug)]
pub struct MeshGeometry {
    id: u64,
    dim: usize,
    h: f64,
    stencil: Stencil,
    domain: Arc<Domain>,
    nodes: Vec<Node>,
    pairs: Vec<(u32, u32)>,
    grid: HashMap<[i64; 3], Vec<u32>>,
}

#[derive(Clone, Debug)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl Csr {
    fn build(n: usize, edges: &[(u32, u32, f64)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _, _) in edges {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; edges.len()];
        let mut weights = vec![0.0; edges.len()];
        for &(u, v, w) in edges {
            let k = fill[u as usize];
            targets[k] = v;
            weights[k] = w;
            fill[u as usize] += 1;
        }
        // sort each row by target for deterministic traversal
        for i in 0..n {
            let (a, b) = (offsets[i], offsets[i + 1]);
            let mut row: Vec<(u32, f64)> = targets[a..b].iter().copied().zip(weights[a..b].iter().copied()).collect();
            row.sort_by_key(|e| e.0);
            for (k, (t, w)) in row.into_iter().enumerate() {
                targets[a + k] = t;
                weights[a + k] = w;
            }
        }
        Self {
            offsets,
            targets,
            weights,
        }
    }

    fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.offsets[u], self.offsets[u + 1]);
        self.targets[a..b]
            .iter()
            .zip(&self.weights[a..b])
            .map(|(&t, &w)| (t as usize, w))
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            offsets: self.offsets.clone(),
            targets: self.targets.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }
}

/// A weighted discretization: shared geometry plus directed weights.
#[derive(Clone, Debug)]
pub struct MeshGraph {
    geometry: Arc<MeshGeometry>,
    field: Arc<ConvexField>,
    /// `(w(a→b), w(b→a))` per geometry pair.
    pair_weights: Vec<(f64, f64)>,
    fwd: Csr,
    rev: Csr,
}

/// Per-node values on a mesh geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    mesh_id: u64,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: &MeshGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::Argument(format!(
                "field has {} values for a mesh with {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        Ok(Self {
            mesh_id: mesh.id(),
            values,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(mesh: &MeshGraph, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..mesh.node_count()).map(|i| f(mesh.point(i))).collect();
        Self {
            mesh_id: mesh.id(),
            values,
        }
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh_id: self.mesh_id,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn check_mesh(&self, mesh: &MeshGraph) -> Result<()> {
        if self.mesh_id != mesh.id() {
            return Err(Error::Argument("field belongs to a different mesh".into()));
        }
        Ok(())
    }

    pub fn check_same_mesh(&self, other: &ScalarField) -> Result<()> {
        if self.mesh_id != other.mesh_id {
            return Err(Error::Argument("fields belong to different meshes".into()));
        }
        Ok(())
    }
}

fn lattice_key(p: &[f64], h: f64) -> [i64; 3] {
    let mut k = [0i64; 3];
    for (i, v) in p.iter().enumerate() {
        k[i] = (v / h).round() as i64;
    }
    k
}

fn quantized_key(p: &[f64], h: f64) -> [i64; 3] {
    let q = h * 1e-9;
    let mut k = [0i64; 3];
    for (i, v) in p.iter().enumerate() {
        k[i] = (v / q).round() as i64;
    }
    k
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Builds the weighted grid graph of `domain` at spacing `h`.
pub fn discretize(domain: Arc<Domain>, field: Arc<ConvexField>, h: f64, stencil: Stencil) -> Result<MeshGraph> {
    let dim = domain.dim();
    if field.dim() != dim {
        return Err(Error::Argument("field and domain dimensions differ".into()));
    }
    if stencil.dim() != dim {
        return Err(Error::Argument(format!(
            "stencil {} does not match a {dim}D domain",
            stencil.order()
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Argument("mesh spacing must be positive".into()));
    }
    let (lo, hi) = domain.bounding_box();
    for i in 0..dim {
        if hi[i] - lo[i] < 2.0 * h {
            return Err(Error::Refinement(format!(
                "spacing {h} is too coarse for a domain of extent {} along axis {i}",
                hi[i] - lo[i]
            )));
        }
    }
    for (k, s) in domain.slits().iter().enumerate() {
        let len = dist(&s.a, &s.b);
        if len < 2.0 * h {
            return Err(Error::Refinement(format!(
                "spacing {h} cannot resolve slit {k} of length {len}; use h ≤ {}",
                len / 2.0
            )));
        }
    }
    let klo: Vec<i64> = (0..dim).map(|i| ((lo[i] - 1e-9 * h) / h).ceil() as i64).collect();
    let khi: Vec<i64> = (0..dim).map(|i| ((hi[i] + 1e-9 * h) / h).floor() as i64).collect();
    let count: f64 = (0..dim).map(|i| (khi[i] - klo[i] + 1) as f64).product();
    if count > MAX_NODES as f64 {
        return Err(Error::Argument(format!("spacing {h} would create {count} lattice points")));
    }

    let mut nodes: Vec<Node> = Vec::new();
    let mut grid: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    let mut lattice: Vec<[i64; 3]> = Vec::new();
    let zr = if dim == 3 { klo[2]..=khi[2] } else { 0..=0 };
    for kz in zr {
        for ky in klo[1]..=khi[1] {
            for kx in klo[0]..=khi[0] {
                let key = [kx, ky, kz];
                let pos = [kx as f64 * h, ky as f64 * h, kz as f64 * h];
                let p = &pos[..dim];
                if !domain.in_closure(p) {
                    continue;
                }
                let mut ids = Vec::new();
                if let Some(s) = domain.slit_at(p) {
                    for role in [NodeRole::SlitLeft, NodeRole::SlitRight] {
                        ids.push(nodes.len() as u32);
                        nodes.push(Node {
                            pos,
                            role,
                            slit: Some(s),
                        });
                        lattice.push(key);
                    }
                } else {
                    let role = if domain.on_base_boundary(p) {
                        NodeRole::Boundary
                    } else {
                        NodeRole::Interior
                    };
                    ids.push(nodes.len() as u32);
                    nodes.push(Node { pos, role, slit: None });
                    lattice.push(key);
                }
                grid.insert(key, ids);
            }
        }
    }
    let grid_count = nodes.len();

    let compatible = |node: &Node, other: &[f64], other_node: Option<&Node>| -> bool {
        let (Some(k), role) = (node.slit, node.role) else {
            return true;
        };
        if let Some(o) = other_node {
            if o.slit == Some(k) {
                return o.role == role;
            }
        }
        match domain.slits()[k].side_of(other) {
            None => true,
            Some(Side::Left) => role == NodeRole::SlitLeft,
            Some(Side::Right) => role == NodeRole::SlitRight,
        }
    };

    let offsets = stencil.offsets();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    // inserted boundary nodes, keyed by quantized position
    let mut inserted: BTreeMap<[i64; 3], (u32, [f64; 3])> = BTreeMap::new();
    let mut pending: Vec<(u32, [i64; 3])> = Vec::new();
    let mut u = 0;
    while u < grid_count {
        let key = lattice[u];
        let copies = &grid[&key];
        let pu = nodes[u].pos;
        for o in &offsets {
            let vkey = [key[0] + o[0], key[1] + o[1], key[2] + o[2]];
            let pv = [vkey[0] as f64 * h, vkey[1] as f64 * h, vkey[2] as f64 * h];
            match domain.exit_param(&pu[..dim], &pv[..dim]) {
                None => {
                    // each undirected lattice edge once, from its lexicographically smaller end
                    let positive = o.iter().rev().find(|&&c| c != 0).map(|&c| c > 0).unwrap_or(false);
                    if !positive || domain.crosses_slit(&pu[..dim], &pv[..dim]) {
                        continue;
                    }
                    let Some(targets) = grid.get(&vkey) else { continue };
                    for &cu in copies {
                        for &cv in targets {
                            let (nu, nv) = (&nodes[cu as usize], &nodes[cv as usize]);
                            if compatible(nu, &pv[..dim], Some(nv)) && compatible(nv, &pu[..dim], Some(nu)) {
                                pairs.push((cu, cv));
                            }
                        }
                    }
                }
                Some(t) => {
                    if t * dist(&pu[..dim], &pv[..dim]) < 1e-9 * h {
                        continue;
                    }
                    let mut pb = [0.0; 3];
                    for i in 0..dim {
                        pb[i] = pu[i] + t * (pv[i] - pu[i]);
                    }
                    if domain.crosses_slit(&pu[..dim], &pb[..dim]) {
                        continue;
                    }
                    let qk = quantized_key(&pb[..dim], h);
                    let next = inserted.len() as u32;
                    let tmp = inserted.entry(qk).or_insert((next, pb)).0;
                    for &cu in copies {
                        if compatible(&nodes[cu as usize], &pb[..dim], None) {
                            pending.push((cu, qk));
                        }
                    }
                    let _ = tmp;
                }
            }
        }
        u += copies.len();
    }
    // inserted nodes get ids in key order
    let mut inserted_ids: HashMap<[i64; 3], u32> = HashMap::new();
    for (qk, (_, pos)) in &inserted {
        inserted_ids.insert(*qk, nodes.len() as u32);
        nodes.push(Node {
            pos: *pos,
            role: NodeRole::Boundary,
            slit: None,
        });
    }
    for (cu, qk) in pending {
        pairs.push((cu, inserted_ids[&qk]));
    }
    pairs.sort_unstable();
    pairs.dedup();

    // every node must be reachable
    let n = nodes.len();
    let mut adj_count = vec![0usize; n];
    for &(a, b) in &pairs {
        adj_count[a as usize] += 1;
        adj_count[b as usize] += 1;
    }
    let und: Vec<(u32, u32, f64)> = pairs
        .iter()
        .flat_map(|&(a, b)| [(a, b, 0.0), (b, a, 0.0)])
        .collect();
    let adj = Csr::build(n, &und);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    if n > 0 {
        seen[0] = true;
        queue.push_back(0usize);
    }
    let mut reached = 0;
    while let Some(v) = queue.pop_front() {
        reached += 1;
        for (w, _) in adj.row(v) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    if n == 0 || reached < n {
        return Err(Error::Geometry(format!(
            "discretized domain is disconnected: {reached} of {n} nodes reachable at h={h}"
        )));
    }

    let geometry = Arc::new(MeshGeometry {
        id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
        dim,
        h,
        stencil,
        domain,
        nodes,
        pairs,
        grid,
    });
    MeshGraph::weighted(geometry, field)
}

impl MeshGraph {
    fn weighted(geometry: Arc<MeshGeometry>, field: Arc<ConvexField>) -> Result<Self> {
        let dim = geometry.dim;
        let (alpha, m) = (field.alpha(), field.m());
        let mut pair_weights = Vec::with_capacity(geometry.pairs.len());
        let mut mid = vec![0.0; dim];
        let mut dir = vec![0.0; dim];
        for &(a, b) in &geometry.pairs {
            let pa = geometry.nodes[a as usize].point(dim);
            let pb = geometry.nodes[b as usize].point(dim);
            let len = dist(pa, pb);
            for i in 0..dim {
                mid[i] = 0.5 * (pa[i] + pb[i]);
                dir[i] = (pb[i] - pa[i]) / len;
            }
            let wab = len * field.support_eval(&mid, &dir)?;
            for d in dir.iter_mut() {
                *d = -*d;
            }
            let wba = len * field.support_eval(&mid, &dir)?;
            for w in [wab, wba] {
                if !(w >= alpha * len * (1.0 - WEIGHT_RTOL) && w <= m * len * (1.0 + WEIGHT_RTOL)) {
                    return Err(Error::Model(format!(
                        "edge weight {w} outside [{}, {}] for an edge of length {len} at {mid:?}",
                        alpha * len,
                        m * len
                    )));
                }
            }
            pair_weights.push((wab, wba));
        }
        let (fwd, rev) = Self::csr(&geometry, &pair_weights);
        Ok(Self {
            geometry,
            field,
            pair_weights,
            fwd,
            rev,
        })
    }

    fn csr(geometry: &MeshGeometry, pair_weights: &[(f64, f64)]) -> (Csr, Csr) {
        let n = geometry.nodes.len();
        let mut fwd_edges = Vec::with_capacity(2 * pair_weights.len());
        let mut rev_edges = Vec::with_capacity(2 * pair_weights.len());
        for (&(a, b), &(wab, wba)) in geometry.pairs.iter().zip(pair_weights) {
            fwd_edges.push((a, b, wab));
            fwd_edges.push((b, a, wba));
            rev_edges.push((b, a, wab));
            rev_edges.push((a, b, wba));
        }
        (Csr::build(n, &fwd_edges), Csr::build(n, &rev_edges))
    }

    /// Same geometry, weights recomputed from another field.
    pub fn reweighted(&self, field: Arc<ConvexField>) -> Result<Self> {
        Self::weighted(self.geometry.clone(), field)
    }

    /// Same geometry, all weights multiplied by `factor` (the field is
    /// recorded as given; it must equal `factor`·current field).
    pub fn scaled(&self, factor: f64, field: Arc<ConvexField>) -> Self {
        Self {
            geometry: self.geometry.clone(),
            field,
            pair_weights: self.pair_weights.iter().map(|(a, b)| (a * factor, b * factor)).collect(),
            fwd: self.fwd.scaled(factor),
            rev: self.rev.scaled(factor),
        }
    }

    /// Same geometry with Euclidean edge lengths as weights.
    pub fn euclidean(&self) -> Result<Self> {
        let unit = ConvexField::constant(Shape::ball(1.0), self.dim())?;
        self.reweighted(Arc::new(unit))
    }

    /// Geometry id; fields on any reweighting of one discretization share it.
    pub fn id(&self) -> u64 {
        self.geometry.id
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim
    }

    pub fn h(&self) -> f64 {
        self.geometry.h
    }

    pub fn stencil(&self) -> Stencil {
        self.geometry.stencil
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.geometry.domain
    }

    pub fn field(&self) -> &Arc<ConvexField> {
        &self.field
    }

    pub fn node_count(&self) -> usize {
        self.geometry.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        2 * self.geometry.pairs.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.geometry.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.geometry.nodes[i]
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.geometry.nodes[i].point(self.geometry.dim)
    }

    pub fn role(&self, i: usize) -> NodeRole {
        self.geometry.nodes[i].role
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.role(i).is_boundary()).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| !self.role(i).is_boundary()).collect()
    }

    /// Outgoing edges `(v, w(u→v))`.
    pub fn out_edges(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.fwd.row(u)
    }

    /// Incoming edges `(v, w(v→u))`.
    pub fn in_edges(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rev.row(u)
    }

    /// `w(u→v)`, if the edge exists.
    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.out_edges(u).find(|&(t, _)| t == v).map(|(_, w)| w)
    }

    /// All directed edges `(u, v, w)` in source-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |u| self.out_edges(u).map(move |(v, w)| (u, v, w)))
    }

    /// Nodes on the lattice point nearest to `p` (both copies on a slit).
    pub fn lattice_nodes(&self, p: &[f64]) -> Option<&[u32]> {
        let key = lattice_key(p, self.h());
        let ids = self.geometry.grid.get(&key)?;
        (dist(self.point(ids[0] as usize), p) <= 1e-9 * self.h()).then_some(ids.as_slice())
    }

    /// The unique node at lattice point `p` (none on duplicated slit points).
    pub fn lattice_node(&self, p: &[f64]) -> Option<usize> {
        match self.lattice_nodes(p)? {
            [one] => Some(*one as usize),
            _ => None,
        }
    }

    /// All nodes at minimal distance from `p`; several for slit copies.
    pub fn nodes_near(&self, p: &[f64]) -> Vec<usize> {
        if let Some(ids) = self.lattice_nodes(p) {
            return ids.iter().map(|&i| i as usize).collect();
        }
        let mut best = f64::INFINITY;
        let mut out = Vec::new();
        for i in 0..self.node_count() {
            let d = dist(self.point(i), p);
            if d < best - 1e-12 {
                best = d;
                out.clear();
                out.push(i);
            } else if (d - best).abs() <= 1e-12 {
                out.push(i);
            }
        }
        out
    }

    /// The node nearest to `p`, preferring the smallest id on ties.
    pub fn nearest_node(&self, p: &[f64]) -> usize {
        self.nodes_near(p)[0]
    }

    /// The node nearest to `p` on the given slit side.
    pub fn slit_copy(&self, p: &[f64], side: Side) -> Option<usize> {
        let want = match side {
            Side::Left => NodeRole::SlitLeft,
            Side::Right => NodeRole::SlitRight,
        };
        self.lattice_nodes(p)?
            .iter()
            .map(|&i| i as usize)
            .find(|&i| self.role(i) == want)
    }
}

/// Shortest-path approximation of the intrinsic Euclidean distance `|x−y|_Ω`
/// between two nodes; infinite when unreachable.
pub fn euclidean_path_distance(graph: &MeshGraph, x: usize, y: usize) -> Result<f64> {
    let e = graph.euclidean()?;
    Ok(crate::geodesic::quasi_dist(&e, x, y)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, DomainSpec};
    use approx::assert_relative_eq;

    fn unit_ball() -> Arc<ConvexField> {
        Arc::new(ConvexField::constant(Shape::ball(1.0), 2).unwrap())
    }

    fn square(h: f64, stencil: Stencil, field: Arc<ConvexField>) -> MeshGraph {
        let d = Arc::new(build_domain(&DomainSpec::unit_square()).unwrap());
        discretize(d, field, h, stencil).unwrap()
    }

    #[test]
    fn stencil_offsets() {
        assert_eq!(Stencil::Eight.offsets().len(), 8);
        assert_eq!(Stencil::Sixteen.offsets().len(), 16);
        assert_eq!(Stencil::TwentySix.offsets().len(), 26);
        assert_relative_eq!(Stencil::Eight.relative_error_bound(), 1.0 / (std::f64::consts::PI / 8.0).cos() - 1.0);
        assert!(Stencil::Sixteen.relative_error_bound() < 0.03);
    }

    #[test]
    fn coarse_square_grid() {
        let g = square(0.25, Stencil::Eight, unit_ball());
        assert_eq!(g.node_count(), 25);
        assert_eq!(g.boundary_nodes().len(), 16);
        for (u, v, w) in g.edges() {
            assert_relative_eq!(w, dist(g.point(u), g.point(v)), epsilon = 1e-15);
        }
    }

    #[test]
    fn ellipse_axis_weight() {
        let el = Shape::ellipsoid(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let g = square(0.5, Stencil::Eight, Arc::new(ConvexField::constant(el, 2).unwrap()));
        let a = g.lattice_node(&[0.0, 0.5]).unwrap();
        let b = g.lattice_node(&[0.5, 0.5]).unwrap();
        assert_relative_eq!(g.weight(a, b).unwrap(), 1.0);
        assert_relative_eq!(g.weight(b, a).unwrap(), 1.0);
    }

    #[test]
    fn slit_is_never_crossed() {
        let d = Arc::new(build_domain(&DomainSpec::slit_disk()).unwrap());
        let g = discretize(d.clone(), unit_ball(), 1.0 / 64.0, Stencil::Sixteen).unwrap();
        let slit = &d.slits()[0];
        for (u, v, _) in g.edges() {
            let (pu, pv) = (g.point(u), g.point(v));
            assert!(!slit.crossed_by(pu, pv));
            let upper = |p: &[f64]| p[1] > 1e-12;
            let side = |i: usize, p: &[f64]| match g.role(i) {
                NodeRole::SlitLeft => -1.0,
                NodeRole::SlitRight => 1.0,
                _ => p[0].signum() * (p[0].abs() > 1e-12) as i32 as f64,
            };
            if upper(pu) && upper(pv) {
                assert!(side(u, pu) * side(v, pv) >= 0.0, "edge {pu:?} -> {pv:?} crosses the slit");
            }
        }
        let copies = g.lattice_nodes(&[0.0, 0.5]).unwrap();
        assert_eq!(copies.len(), 2);
    }

    #[test]
    fn boundary_nodes_lie_on_arcs() {
        let d = Arc::new(build_domain(&DomainSpec::disk([0.0, 0.0], 1.0)).unwrap());
        let g = discretize(d.clone(), unit_ball(), 0.1, Stencil::Sixteen).unwrap();
        for i in g.boundary_nodes() {
            assert!(d.boundary_residual(g.point(i)) < 1e-12);
        }
        assert!(g.boundary_nodes().len() > 60);
    }

    #[test]
    fn refinement_errors() {
        let d = Arc::new(build_domain(&DomainSpec::slit_disk()).unwrap());
        assert!(matches!(
            discretize(d.clone(), unit_ball(), 0.6, Stencil::Eight),
            Err(Error::Refinement(_))
        ));
        assert!(matches!(
            discretize(d, unit_ball(), 0.1, Stencil::TwentySix),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn three_dimensional_box() {
        let spec: DomainSpec = serde_json::from_str(r#"{"kind":"box","lo":[0,0,0],"hi":[1,1,1]}"#).unwrap();
        let d = Arc::new(build_domain(&spec).unwrap());
        let field = Arc::new(ConvexField::constant(Shape::ball(1.0), 3).unwrap());
        let g = discretize(d, field, 0.25, Stencil::TwentySix).unwrap();
        assert_eq!(g.node_count(), 125);
        assert_eq!(g.interior_nodes().len(), 27);
    }

    #[test]
    fn scalar_field_mesh_check() {
        let g1 = square(0.25, Stencil::Eight, unit_ball());
        let g2 = square(0.25, Stencil::Eight, unit_ball());
        let f = ScalarField::from_fn(&g1, |p| p[0]);
        assert!(f.check_mesh(&g1).is_ok());
        assert!(f.check_mesh(&g2).is_err());
        let e = g1.euclidean().unwrap();
        assert!(f.check_mesh(&e).is_ok(), "reweighting keeps the geometry");
    }
}
