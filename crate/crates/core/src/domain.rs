//! Bounded domains `Ω`: rectangles/boxes, disks and simple polygons, with
//! optional slits (open segments removed from the domain).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for point-on-curve and containment predicates.
pub const GEOM_EPS: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainKind {
    /// Axis-aligned box `(lo, hi)`; a rectangle in 2D.
    #[serde(alias = "box")]
    Rectangle { lo: Vec<f64>, hi: Vec<f64> },
    Disk { center: Vec<f64>, radius: f64 },
    /// Simple polygon given by its vertex loop (either orientation).
    Polygon { vertices: Vec<Vec<f64>> },
}

/// Open segment `(from, to)` removed from the domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlitSpec {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub kind: DomainKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slits: Vec<SlitSpec>,
}

impl DomainSpec {
    pub fn rectangle(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self {
            kind: DomainKind::Rectangle {
                lo: lo.to_vec(),
                hi: hi.to_vec(),
            },
            slits: Vec::new(),
        }
    }

    pub fn unit_square() -> Self {
        Self::rectangle([0.0, 0.0], [1.0, 1.0])
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Self {
            kind: DomainKind::Disk {
                center: center.to_vec(),
                radius,
            },
            slits: Vec::new(),
        }
    }

    pub fn polygon(vertices: &[[f64; 2]]) -> Self {
        Self {
            kind: DomainKind::Polygon {
                vertices: vertices.iter().map(|v| v.to_vec()).collect(),
            },
            slits: Vec::new(),
        }
    }

    pub fn with_slit(mut self, from: [f64; 2], to: [f64; 2]) -> Self {
        self.slits.push(SlitSpec {
            from: from.to_vec(),
            to: to.to_vec(),
        });
        self
    }

    /// The slit disk `B(0,1) \ {(0,y) : 0 < y < 1}`.
    pub fn slit_disk() -> Self {
        Self::disk([0.0, 0.0], 1.0).with_slit([0.0, 0.0], [0.0, 1.0])
    }
}

/// Side of a slit, relative to its direction `from → to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// One Lipschitz piece of `∂Ω`.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryArc {
    Segment { a: [f64; 2], b: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
    /// Face `x[axis] = value` of a box.
    Face { axis: usize, value: f64 },
    SlitSide { slit: usize, side: Side },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Slit {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

fn cross2(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

fn sub2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dist_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub2(b, a);
    let ap = sub2(p, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0].hypot(d[1])
}

/// Intersection parameter `t` on `p→q` with segment `a→b` (closed), if any.
fn segment_intersection(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<(f64, f64)> {
    let r = sub2(q, p);
    let s = sub2(b, a);
    let denom = cross2(r, s);
    if denom.abs() < 1e-15 * (r[0].hypot(r[1]) * s[0].hypot(s[1])).max(1e-300) {
        return None;
    }
    let ap = sub2(a, p);
    let t = cross2(ap, s) / denom;
    let u = cross2(ap, r) / denom;
    let tol = 1e-12;
    if (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u) {
        Some((t.clamp(0.0, 1.0), u.clamp(0.0, 1.0)))
    } else {
        None
    }
}

impl Slit {
    fn len(&self) -> f64 {
        let d = sub2(self.b, self.a);
        d[0].hypot(d[1])
    }

    /// `Some(side)` strictly off the slit line, `None` on it.
    pub fn side_of(&self, p: &[f64]) -> Option<Side> {
        let c = cross2(sub2(self.b, self.a), sub2([p[0], p[1]], self.a));
        if c.abs() <= GEOM_EPS * self.len() {
            None
        } else if c > 0.0 {
            Some(Side::Left)
        } else {
            Some(Side::Right)
        }
    }

    /// Whether `p` lies on the open slit.
    pub fn contains(&self, p: &[f64]) -> bool {
        if self.side_of(p).is_some() {
            return false;
        }
        let d = sub2(self.b, self.a);
        let s = ((p[0] - self.a[0]) * d[0] + (p[1] - self.a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]);
        let e = GEOM_EPS / self.len();
        s > e && s < 1.0 - e
    }

    /// Whether the open segment `(p, q)` passes from one side of the open
    /// slit to the other. Touching the slit at an endpoint or passing through
    /// a slit tip is not a crossing.
    pub fn crossed_by(&self, p: &[f64], q: &[f64]) -> bool {
        let (Some(sp), Some(sq)) = (self.side_of(p), self.side_of(q)) else {
            return false;
        };
        if sp == sq {
            return false;
        }
        match segment_intersection([p[0], p[1]], [q[0], q[1]], self.a, self.b) {
            Some((_, u)) => {
                let e = GEOM_EPS / self.len();
                u > e && u < 1.0 - e
            }
            None => false,
        }
    }

    fn distance(&self, p: &[f64]) -> f64 {
        dist_point_segment([p[0], p[1]], self.a, self.b)
    }
}

/// A validated domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    spec: DomainSpec,
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    polygon: Vec<[f64; 2]>,
    arcs: Vec<BoundaryArc>,
    slits: Vec<Slit>,
}

/// Validates a domain spec: bounding box, boundary arcs and slit sides.
pub fn build_domain(spec: &DomainSpec) -> Result<Domain> {
    let mut polygon = Vec::new();
    let mut arcs = Vec::new();
    let (dim, lo, hi) = match &spec.kind {
        DomainKind::Rectangle { lo, hi } => {
            let d = lo.len();
            if !(2..=3).contains(&d) || hi.len() != d {
                return Err(Error::Geometry("rectangle corners must be 2D or 3D points".into()));
            }
            if lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                return Err(Error::Geometry("rectangle must have positive extent".into()));
            }
            if d == 2 {
                let c = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
                for i in 0..4 {
                    arcs.push(BoundaryArc::Segment {
                        a: c[i],
                        b: c[(i + 1) % 4],
                    });
                }
            } else {
                for axis in 0..3 {
                    arcs.push(BoundaryArc::Face { axis, value: lo[axis] });
                    arcs.push(BoundaryArc::Face { axis, value: hi[axis] });
                }
            }
            (d, lo.clone(), hi.clone())
        }
        DomainKind::Disk { center, radius } => {
            if center.len() != 2 {
                return Err(Error::Geometry("disk domains are 2D".into()));
            }
            if !(*radius > 0.0) {
                return Err(Error::Geometry("disk radius must be positive".into()));
            }
            arcs.push(BoundaryArc::Circle {
                center: [center[0], center[1]],
                radius: *radius,
            });
            (
                2,
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            )
        }
        DomainKind::Polygon { vertices } => {
            if vertices.len() < 3 || vertices.iter().any(|v| v.len() != 2) {
                return Err(Error::Geometry("polygon needs at least 3 planar vertices".into()));
            }
            let mut v: Vec<[f64; 2]> = vertices.iter().map(|p| [p[0], p[1]]).collect();
            let area: f64 = (0..v.len())
                .map(|i| cross2(v[i], v[(i + 1) % v.len()]))
                .sum::<f64>()
                * 0.5;
            if area.abs() < GEOM_EPS {
                return Err(Error::Geometry("polygon has zero area".into()));
            }
            if area < 0.0 {
                v.reverse();
            }
            check_simple(&v)?;
            for i in 0..v.len() {
                arcs.push(BoundaryArc::Segment {
                    a: v[i],
                    b: v[(i + 1) % v.len()],
                });
            }
            let lo = vec![
                v.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
                v.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
            ];
            let hi = vec![
                v.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
                v.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
            ];
            polygon = v;
            (2, lo, hi)
        }
    };
    let mut domain = Domain {
        spec: spec.clone(),
        dim,
        lo,
        hi,
        polygon,
        arcs,
        slits: Vec::new(),
    };
    for (k, s) in spec.slits.iter().enumerate() {
        if dim != 2 || s.from.len() != 2 || s.to.len() != 2 {
            return Err(Error::Geometry("slits are supported in 2D only".into()));
        }
        let slit = Slit {
            a: [s.from[0], s.from[1]],
            b: [s.to[0], s.to[1]],
        };
        if slit.len() < GEOM_EPS {
            return Err(Error::Geometry(format!("slit {k} is degenerate")));
        }
        let mid = [(slit.a[0] + slit.b[0]) / 2.0, (slit.a[1] + slit.b[1]) / 2.0];
        if !domain.in_closure(&s.from) || !domain.in_closure(&s.to) || !domain.in_base_interior(&mid) {
            return Err(Error::Geometry(format!("slit {k} lies outside the domain")));
        }
        for (j, other) in domain.slits.iter().enumerate() {
            if segment_intersection(slit.a, slit.b, other.a, other.b).is_some() {
                return Err(Error::Geometry(format!("slits {j} and {k} intersect")));
            }
        }
        domain.slits.push(slit);
        domain.arcs.push(BoundaryArc::SlitSide { slit: k, side: Side::Left });
        domain.arcs.push(BoundaryArc::SlitSide { slit: k, side: Side::Right });
    }
    Ok(domain)
}

fn check_simple(v: &[[f64; 2]]) -> Result<()> {
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segment_intersection(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]).is_some() {
                return Err(Error::Geometry(format!(
                    "polygon is self-intersecting (edges {i} and {j})"
                )));
            }
        }
    }
    Ok(())
}

impl Domain {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn arcs(&self) -> &[BoundaryArc] {
        &self.arcs
    }

    pub fn slits(&self) -> &[Slit] {
        &self.slits
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn scale_eps(&self) -> f64 {
        GEOM_EPS * self.diameter().max(1.0)
    }

    /// Membership in the closure of the base domain (slits ignored).
    pub fn in_closure(&self, x: &[f64]) -> bool {
        let e = self.scale_eps();
        match &self.spec.kind {
            DomainKind::Rectangle { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= a - e && *v <= b + e),
            DomainKind::Disk { center, radius } => {
                (x[0] - center[0]).hypot(x[1] - center[1]) <= radius + e
            }
            DomainKind::Polygon { .. } => {
                let p = [x[0], x[1]];
                self.polygon_edge_distance(p) <= e || self.polygon_contains(p)
            }
        }
    }

    fn in_base_interior(&self, x: &[f64]) -> bool {
        self.in_closure(x) && !self.on_base_boundary(x)
    }

    /// Membership in the open domain `Ω` (slits removed).
    pub fn contains(&self, x: &[f64]) -> bool {
        self.in_base_interior(x) && !self.slits.iter().any(|s| s.contains(x))
    }

    /// Whether `x` lies on the outer boundary of the base domain.
    pub fn on_base_boundary(&self, x: &[f64]) -> bool {
        let e = self.scale_eps();
        if !self.in_closure(x) {
            return false;
        }
        match &self.spec.kind {
            DomainKind::Rectangle { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .any(|(v, (a, b))| (v - a).abs() <= e || (v - b).abs() <= e),
            DomainKind::Disk { center, radius } => {
                ((x[0] - center[0]).hypot(x[1] - center[1]) - radius).abs() <= e
            }
            DomainKind::Polygon { .. } => self.polygon_edge_distance([x[0], x[1]]) <= e,
        }
    }

    /// Index of the slit whose open segment contains `x`.
    pub fn slit_at(&self, x: &[f64]) -> Option<usize> {
        self.slits.iter().position(|s| s.contains(x))
    }

    /// Euclidean distance from `x ∈ Ω̄` to `∂Ω` (outer boundary and slits).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        if !self.in_closure(x) {
            return 0.0;
        }
        let base = match &self.spec.kind {
            DomainKind::Rectangle { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| (v - a).min(b - v))
                .fold(f64::INFINITY, f64::min),
            DomainKind::Disk { center, radius } => radius - (x[0] - center[0]).hypot(x[1] - center[1]),
            DomainKind::Polygon { .. } => self.polygon_edge_distance([x[0], x[1]]),
        };
        self.slits
            .iter()
            .map(|s| s.distance(x))
            .fold(base, f64::min)
            .max(0.0)
    }

    /// First parameter `t ∈ (0, 1]` at which the segment `a + t(b − a)` leaves
    /// the closed base domain, or `None` when it stays inside. `a` must lie in
    /// the closure; `Some(0)` means the segment leaves immediately.
    pub fn exit_param(&self, a: &[f64], b: &[f64]) -> Option<f64> {
        let e = self.scale_eps();
        match &self.spec.kind {
            DomainKind::Rectangle { lo, hi } => {
                let mut t_exit = f64::INFINITY;
                for i in 0..a.len() {
                    let d = b[i] - a[i];
                    if d > 0.0 && b[i] > hi[i] + e {
                        t_exit = t_exit.min(((hi[i] - a[i]) / d).max(0.0));
                    } else if d < 0.0 && b[i] < lo[i] - e {
                        t_exit = t_exit.min(((lo[i] - a[i]) / d).max(0.0));
                    }
                }
                t_exit.is_finite().then_some(t_exit)
            }
            DomainKind::Disk { center, radius } => {
                if self.in_closure(b) {
                    return None;
                }
                let f = [a[0] - center[0], a[1] - center[1]];
                let d = [b[0] - a[0], b[1] - a[1]];
                let qa = d[0] * d[0] + d[1] * d[1];
                let qb = 2.0 * (f[0] * d[0] + f[1] * d[1]);
                let qc = f[0] * f[0] + f[1] * f[1] - radius * radius;
                let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
                Some(((-qb + disc.sqrt()) / (2.0 * qa)).max(0.0))
            }
            DomainKind::Polygon { .. } => {
                let p = [a[0], a[1]];
                let q = [b[0], b[1]];
                let n = self.polygon.len();
                let mut ts = vec![0.0, 1.0];
                for i in 0..n {
                    if let Some((t, _)) = segment_intersection(p, q, self.polygon[i], self.polygon[(i + 1) % n]) {
                        ts.push(t);
                    }
                }
                ts.sort_by(f64::total_cmp);
                ts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
                for w in ts.windows(2) {
                    let tm = 0.5 * (w[0] + w[1]);
                    let mid = [p[0] + tm * (q[0] - p[0]), p[1] + tm * (q[1] - p[1])];
                    if !self.in_closure(&mid) {
                        return Some(w[0]);
                    }
                }
                None
            }
        }
    }

    /// Whether the open segment `(a, b)` crosses any slit.
    pub fn crosses_slit(&self, a: &[f64], b: &[f64]) -> bool {
        self.slits.iter().any(|s| s.crossed_by(a, b))
    }

    /// Points of a regular `n`-per-axis lattice over the bounding box that lie in `Ω̄`.
    pub fn sample_points(&self, n: usize) -> Vec<Vec<f64>> {
        let n = n.max(2);
        let mut out = Vec::new();
        let coord = |i: usize, k: usize| self.lo[i] + (self.hi[i] - self.lo[i]) * k as f64 / (n - 1) as f64;
        if self.dim == 2 {
            for j in 0..n {
                for i in 0..n {
                    let p = vec![coord(0, i), coord(1, j)];
                    if self.in_closure(&p) {
                        out.push(p);
                    }
                }
            }
        } else {
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let p = vec![coord(0, i), coord(1, j), coord(2, k)];
                        if self.in_closure(&p) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }

    fn polygon_edge_distance(&self, p: [f64; 2]) -> f64 {
        let n = self.polygon.len();
        (0..n)
            .map(|i| dist_point_segment(p, self.polygon[i], self.polygon[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    fn polygon_contains(&self, p: [f64; 2]) -> bool {
        let v = &self.polygon;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            if (v[i][1] > p[1]) != (v[j][1] > p[1]) {
                let x = v[j][0] + (p[1] - v[j][1]) / (v[i][1] - v[j][1]) * (v[i][0] - v[j][0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Signed residual of `x` against the analytic boundary arc it is closest to.
    pub fn boundary_residual(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for arc in &self.arcs {
            let r = match arc {
                BoundaryArc::Segment { a, b } => dist_point_segment([x[0], x[1]], *a, *b),
                BoundaryArc::Circle { center, radius } => ((x[0] - center[0]).hypot(x[1] - center[1]) - radius).abs(),
                BoundaryArc::Face { axis, value } => (x[*axis] - value).abs(),
                BoundaryArc::SlitSide { slit, .. } => self.slits[*slit].distance(x),
            };
            best = best.min(r);
        }
        best
    }
}
