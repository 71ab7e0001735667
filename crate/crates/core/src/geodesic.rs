//! Shortest paths for the Finsler quasi-distance on a [`MeshGraph`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::convex::ConvexField;
use crate::error::{Error, Result};
use crate::mesh::{MeshGraph, ScalarField};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `min_(y,c) c + d(y, z)`.
    FromSources,
    /// `min_(y,c) c + d(z, y)`, computed on the reversed graph.
    ToSources,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on (cost, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Labels of a multi-source sweep.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub direction: Direction,
    pub values: Vec<f64>,
    /// Winning source node per node.
    pub source: Vec<u32>,
    /// Next node towards the winning source (predecessor for
    /// [`Direction::FromSources`], successor for [`Direction::ToSources`]).
    pub parent: Vec<u32>,
}

impl Sweep {
    pub fn source_of(&self, node: usize) -> Option<usize> {
        (self.source[node] != NONE).then_some(self.source[node] as usize)
    }

    pub fn parent_of(&self, node: usize) -> Option<usize> {
        (self.parent[node] != NONE).then_some(self.parent[node] as usize)
    }

    /// Node chain from `node` back to its source, `node` first.
    pub fn chain(&self, node: usize) -> Vec<usize> {
        let mut out = vec![node];
        let mut cur = node;
        while let Some(p) = self.parent_of(cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn into_field(self, graph: &MeshGraph) -> ScalarField {
        ScalarField::new(graph, self.values).expect("sweep sized to the graph")
    }
}

/// Multi-source Dijkstra. Ties between equal labels go to the smaller
/// source id.
pub fn sweep(graph: &MeshGraph, sources: &[(usize, f64)], direction: Direction) -> Result<Sweep> {
    sweep_until(graph, sources, direction, |_, _| false)
}

/// [`sweep`] that stops once `stop(node, label)` returns true for a settled node.
pub fn sweep_until(
    graph: &MeshGraph,
    sources: &[(usize, f64)],
    direction: Direction,
    mut stop: impl FnMut(usize, f64) -> bool,
) -> Result<Sweep> {
    if sources.is_empty() {
        return Err(Error::Argument("sweep needs at least one source".into()));
    }
    let n = graph.node_count();
    let mut values = vec![f64::INFINITY; n];
    let mut source = vec![NONE; n];
    let mut parent = vec![NONE; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::with_capacity(sources.len() * 2);
    for &(s, c) in sources {
        if s >= n {
            return Err(Error::Argument(format!("source node {s} out of range")));
        }
        if !c.is_finite() {
            return Err(Error::Argument(format!("source offset {c} is not finite")));
        }
        if c < values[s] || (c == values[s] && (s as u32) < source[s]) {
            values[s] = c;
            source[s] = s as u32;
            heap.push(Entry { cost: c, node: s as u32 });
        }
    }
    while let Some(Entry { cost, node }) = heap.pop() {
        let u = node as usize;
        if done[u] || cost > values[u] {
            continue;
        }
        done[u] = true;
        if stop(u, cost) {
            break;
        }
        let relax = |v: usize, w: f64, values: &mut Vec<f64>, source: &mut Vec<u32>, parent: &mut Vec<u32>| {
            let c = cost + w;
            if c < values[v] || (c == values[v] && source[u] < source[v]) {
                let improved = c < values[v];
                values[v] = c;
                source[v] = source[u];
                parent[v] = node;
                improved
            } else {
                false
            }
        };
        match direction {
            Direction::FromSources => {
                for (v, w) in graph.out_edges(u) {
                    if !done[v] && relax(v, w, &mut values, &mut source, &mut parent) {
                        heap.push(Entry { cost: values[v], node: v as u32 });
                    }
                }
            }
            Direction::ToSources => {
                for (v, w) in graph.in_edges(u) {
                    if !done[v] && relax(v, w, &mut values, &mut source, &mut parent) {
                        heap.push(Entry { cost: values[v], node: v as u32 });
                    }
                }
            }
        }
    }
    Ok(Sweep {
        direction,
        values,
        source,
        parent,
    })
}

/// Piecewise-linear curve with cumulative Euclidean and Finsler arc lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPolyline {
    pub points: Vec<Vec<f64>>,
    /// Graph nodes of the vertices, when the path comes from a graph.
    pub nodes: Option<Vec<usize>>,
    pub s_euclid: Vec<f64>,
    pub s_finsler: Vec<f64>,
}

impl PathPolyline {
    /// Builds a path from points; Finsler lengths from `field` (segments
    /// must stay in the field's domain).
    pub fn from_points(field: &ConvexField, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Argument("empty path".into()));
        }
        let mut s_euclid = vec![0.0];
        let mut s_finsler = vec![0.0];
        for w in points.windows(2) {
            let (len, fl) = segment_length(field, &w[0], &w[1])?;
            s_euclid.push(s_euclid.last().unwrap() + len);
            s_finsler.push(s_finsler.last().unwrap() + fl);
        }
        Ok(Self {
            points,
            nodes: None,
            s_euclid,
            s_finsler,
        })
    }

    /// Path through graph nodes; Finsler lengths are the edge weights.
    pub fn from_nodes(graph: &MeshGraph, nodes: Vec<usize>) -> Result<Self> {
        let mut s_euclid = vec![0.0];
        let mut s_finsler = vec![0.0];
        for w in nodes.windows(2) {
            let wt = graph.weight(w[0], w[1]).ok_or_else(|| {
                Error::Argument(format!("nodes {} and {} are not joined by an edge", w[0], w[1]))
            })?;
            let len = euclid(graph.point(w[0]), graph.point(w[1]));
            s_euclid.push(s_euclid.last().unwrap() + len);
            s_finsler.push(s_finsler.last().unwrap() + wt);
        }
        Ok(Self {
            points: nodes.iter().map(|&i| graph.point(i).to_vec()).collect(),
            nodes: Some(nodes),
            s_euclid,
            s_finsler,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn euclidean_length(&self) -> f64 {
        *self.s_euclid.last().unwrap()
    }

    pub fn finsler_length(&self) -> f64 {
        *self.s_finsler.last().unwrap()
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn segment_length(field: &ConvexField, a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if let Some(d) = field.domain() {
        if !d.in_closure(a) || d.exit_param(a, b).is_some() || d.crosses_slit(a, b) {
            return Err(Error::Geometry(format!("segment {a:?} -> {b:?} leaves the domain")));
        }
    }
    let len = euclid(a, b);
    if len == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    let dir: Vec<f64> = a.iter().zip(b).map(|(x, y)| (y - x) / len).collect();
    Ok((len, len * field.support_eval(&mid, &dir)?))
}

/// `Σ |Δ|·φ⁰(midpoint, Δ/|Δ|)` over the segments of `points`.
pub fn finsler_length(field: &ConvexField, points: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for w in points.windows(2) {
        total += segment_length(field, &w[0], &w[1])?.1;
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct DistanceResult {
    /// `d(x, y)`, infinite when `y` is unreachable.
    pub value: f64,
    pub path: Option<PathPolyline>,
    /// Whether the distance was measured as `d(y, x)`.
    pub reverse: bool,
}

/// `d(x, y)` by Dijkstra from `x`, with the extracted path.
pub fn quasi_dist(graph: &MeshGraph, x: usize, y: usize) -> Result<DistanceResult> {
    let n = graph.node_count();
    if x >= n || y >= n {
        return Err(Error::Argument("node index out of range".into()));
    }
    let s = sweep_until(graph, &[(x, 0.0)], Direction::FromSources, |u, _| u == y)?;
    let value = s.values[y];
    let path = if value.is_finite() {
        let mut nodes = s.chain(y);
        nodes.reverse();
        Some(PathPolyline::from_nodes(graph, nodes)?)
    } else {
        None
    };
    Ok(DistanceResult {
        value,
        path,
        reverse: false,
    })
}

/// `d(y, x)`, flagged as reversed.
pub fn quasi_dist_reverse(graph: &MeshGraph, x: usize, y: usize) -> Result<DistanceResult> {
    let mut r = quasi_dist(graph, y, x)?;
    r.reverse = true;
    Ok(r)
}

/// Extended distance between points: the minimum over all nodes at each
/// point, so a point on a slit is reached from either side.
pub fn point_distance(graph: &MeshGraph, x: &[f64], y: &[f64]) -> Result<DistanceResult> {
    let xs = graph.nodes_near(x);
    let ys = graph.nodes_near(y);
    let mut best: Option<DistanceResult> = None;
    for &a in &xs {
        for &b in &ys {
            let r = quasi_dist(graph, a, b)?;
            if best.as_ref().map_or(true, |cur| r.value < cur.value) {
                best = Some(r);
            }
        }
    }
    Ok(best.expect("nodes_near is never empty"))
}

/// Largest decrease in path weight obtainable by replacing one interior
/// vertex `v_i` with another node joined to both `v_(i−1)` and `v_(i+1)`.
/// Zero for a shortest path.
pub fn single_vertex_improvement(graph: &MeshGraph, nodes: &[usize]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 1..nodes.len().saturating_sub(1) {
        let (a, v, b) = (nodes[i - 1], nodes[i], nodes[i + 1]);
        let current = graph.weight(a, v).unwrap_or(f64::INFINITY) + graph.weight(v, b).unwrap_or(f64::INFINITY);
        for (w, wa) in graph.out_edges(a) {
            if w == v {
                continue;
            }
            if let Some(wb) = graph.weight(w, b) {
                best = best.max(current - (wa + wb));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::Shape;
    use crate::domain::{build_domain, DomainSpec};
    use crate::mesh::{discretize, Stencil};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn mesh(spec: DomainSpec, shape: Shape, h: f64) -> MeshGraph {
        let d = Arc::new(build_domain(&spec).unwrap());
        let f = Arc::new(ConvexField::constant(shape, 2).unwrap().with_domain(d.clone()).unwrap());
        discretize(d, f, h, Stencil::Sixteen).unwrap()
    }

    #[test]
    fn straight_distance_in_square() {
        let g = mesh(DomainSpec::unit_square(), Shape::ball(1.0), 1.0 / 128.0);
        let x = g.nearest_node(&[0.25, 0.5]);
        let y = g.nearest_node(&[0.75, 0.5]);
        let r = quasi_dist(&g, x, y).unwrap();
        assert_relative_eq!(r.value, 0.5, max_relative = 0.02);
        let path = r.path.unwrap();
        assert_relative_eq!(path.finsler_length(), r.value, epsilon = 1e-12);
        assert_eq!(single_vertex_improvement(&g, path.nodes.as_ref().unwrap()), 0.0);
        assert_eq!(quasi_dist(&g, x, x).unwrap().value, 0.0);
    }

    #[test]
    fn ellipse_distance() {
        let el = Shape::ellipsoid(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let g = mesh(DomainSpec::unit_square(), el, 1.0 / 128.0);
        let x = g.nearest_node(&[0.1, 0.5]);
        let y = g.nearest_node(&[0.9, 0.5]);
        assert_relative_eq!(quasi_dist(&g, x, y).unwrap().value, 1.6, max_relative = 0.02);
    }

    #[test]
    fn sweep_shift_and_boundary_distance() {
        let g = mesh(DomainSpec::unit_square(), Shape::ball(1.0), 1.0 / 16.0);
        let o = g.lattice_node(&[0.0, 0.0]).unwrap();
        let base = sweep(&g, &[(o, 0.0)], Direction::FromSources).unwrap();
        let shifted = sweep(&g, &[(o, 5.0)], Direction::FromSources).unwrap();
        for (a, b) in base.values.iter().zip(&shifted.values) {
            assert_relative_eq!(a + 5.0, *b, epsilon = 1e-12);
        }
        let srcs: Vec<_> = g.boundary_nodes().into_iter().map(|b| (b, 0.0)).collect();
        let s = sweep(&g, &srcs, Direction::FromSources).unwrap();
        let c = g.lattice_node(&[0.5, 0.5]).unwrap();
        assert_relative_eq!(s.values[c], 0.5, epsilon = 1e-12);
        let q = g.lattice_node(&[0.25, 0.5]).unwrap();
        assert_relative_eq!(s.values[q], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn finsler_length_examples() {
        let a = ConvexField::constant(Shape::ball(1.0), 2).unwrap();
        let d = ConvexField::constant(Shape::ellipsoid(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap(), 2).unwrap();
        let p = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        assert_relative_eq!(finsler_length(&a, &p).unwrap(), 1.0);
        assert_relative_eq!(finsler_length(&d, &p).unwrap(), 2.0);
        let q = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]];
        assert_relative_eq!(finsler_length(&a, &q).unwrap(), 1.0);
    }

    #[test]
    fn segment_leaving_domain_is_rejected() {
        let dom = Arc::new(build_domain(&DomainSpec::slit_disk()).unwrap());
        let f = ConvexField::constant(Shape::ball(1.0), 2).unwrap().with_domain(dom).unwrap();
        let across = vec![vec![0.5, 0.5], vec![-0.5, 0.5]];
        assert!(matches!(finsler_length(&f, &across), Err(Error::Geometry(_))));
    }

    #[test]
    fn slit_disk_distances() {
        let g = mesh(DomainSpec::slit_disk(), Shape::ball(1.0), 1.0 / 64.0);
        let d = point_distance(&g, &[0.5, 0.5], &[-0.5, 0.5]).unwrap();
        assert_relative_eq!(d.value, 2f64.sqrt(), max_relative = 0.03);
        let a = point_distance(&g, &[0.5, 0.5], &[0.0, 0.5]).unwrap();
        let b = point_distance(&g, &[0.0, 0.5], &[-0.5, 0.5]).unwrap();
        assert_relative_eq!(a.value + b.value, 1.0, epsilon = 1e-12);
    }
}
