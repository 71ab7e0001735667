//! Compact convex constraint sets `K(x)` and their gauge/support functions.
//!
//! A [`ConvexField`] is a family `x ↦ K(x)` given by a base [`Shape`] scaled by
//! a spatial factor `s(x)`: `K(x) = s(x)·K₀`. Level-set shapes instead bind
//! the point `x` into a supremand `H(x, ·)` and take `{H(x, ·) ≤ ν}`.
//!
//! For every instance the global bounds `B(0, α) ⊂ K(x) ⊂ B(0, M)` are stored
//! explicitly and checked on construction by sampling directions. They imply
//!
//! ```text
//! |p|/M ≤ φ(x, p) ≤ |p|/α        α|q| ≤ φ⁰(x, q) ≤ M|q|
//! ```
//!
//! where `φ` is the Minkowski gauge and `φ⁰` the support function.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::search::{self, maximize_on_circle, maximize_on_sphere};
use crate::supremal::SupremandSpec;

/// Directions sampled when validating `(α, M)` of an instance.
pub const VALIDATION_DIRECTIONS: usize = 1024;
/// Boundary directions sampled by [`hausdorff_dist`] in 2D.
pub const HAUSDORFF_DIRECTIONS: usize = 4096;

const BOUND_RTOL: f64 = 1e-9;
const GAUGE_BISECTION_RTOL: f64 = 1e-13;
const LEVELSET_ANGLE_TOL: f64 = 1e-8;
const LEVELSET_COARSE: usize = 64;
const POLYTOPE_TIE_RTOL: f64 = 1e-12;

/// A supremand `H(x, p)`, evaluated pointwise.
pub trait Supremand: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], p: &[f64]) -> f64;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Ellipsoid `{p : pᵀ A⁻¹ p ≤ 1}` with symmetric positive-definite shape matrix `A`.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    dim: usize,
    shape: Vec<f64>,
    inverse: Vec<f64>,
    min_semi_axis: f64,
    max_semi_axis: f64,
}

impl Ellipsoid {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Model("ellipsoid shape matrix must be square".into()));
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
        if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
            return Err(Error::Model("ellipsoid shape matrix must be symmetric".into()));
        }
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Model("ellipsoid shape matrix must be positive definite".into()))?;
        let inv = chol.inverse();
        let eig = m.clone().symmetric_eigenvalues();
        let lmin = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let lmax = eig.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            dim,
            shape: (0..dim * dim).map(|k| m[(k / dim, k % dim)]).collect(),
            inverse: (0..dim * dim).map(|k| inv[(k / dim, k % dim)]).collect(),
            min_semi_axis: lmin.sqrt(),
            max_semi_axis: lmax.sqrt(),
        })
    }

    fn quad(mat: &[f64], dim: usize, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                s += v[i] * mat[i * dim + j] * v[j];
            }
        }
        s
    }

    fn gauge(&self, p: &[f64]) -> f64 {
        Self::quad(&self.inverse, self.dim, p).max(0.0).sqrt()
    }

    fn support(&self, q: &[f64]) -> f64 {
        Self::quad(&self.shape, self.dim, q).max(0.0).sqrt()
    }

    fn argmax(&self, q: &[f64]) -> Vec<f64> {
        let s = self.support(q);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.shape[i * self.dim + j] * q[j]).sum::<f64>() / s)
            .collect()
    }
}

/// Convex polygon given by its hull vertices (counter-clockwise) and the
/// facet inequalities `n·p ≤ c`, `c > 0`.
#[derive(Clone, Debug)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
    facets: Vec<([f64; 2], f64)>,
}

impl Polygon {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        if points.iter().any(|p| p.len() != 2) {
            return Err(Error::Model("polytope sets are supported in 2D only".into()));
        }
        let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
        let hull = convex_hull(&pts);
        if hull.len() < 3 {
            return Err(Error::Model("polytope hull is degenerate".into()));
        }
        let mut facets = Vec::with_capacity(hull.len());
        for i in 0..hull.len() {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            let n = [b[1] - a[1], a[0] - b[0]];
            let c = n[0] * a[0] + n[1] * a[1];
            if c <= 1e-12 * (n[0].hypot(n[1])) {
                return Err(Error::Model(
                    "polytope hull must contain the origin strictly in its interior".into(),
                ));
            }
            facets.push((n, c));
        }
        Ok(Self {
            vertices: hull,
            facets,
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    fn gauge(&self, p: &[f64]) -> f64 {
        self.facets
            .iter()
            .map(|(n, c)| (n[0] * p[0] + n[1] * p[1]) / c)
            .fold(0.0, f64::max)
    }

    fn support(&self, q: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| v[0] * q[0] + v[1] * q[1])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Maximizing vertex; ties go to the lexicographically smallest vertex.
    fn argmax(&self, q: &[f64]) -> [f64; 2] {
        let best = self.support(q);
        let tol = POLYTOPE_TIE_RTOL * (1.0 + best.abs());
        let mut ties: Vec<[f64; 2]> = self
            .vertices
            .iter()
            .copied()
            .filter(|v| v[0] * q[0] + v[1] * q[1] >= best - tol)
            .collect();
        ties.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        ties[0]
    }

    fn inradius(&self) -> f64 {
        self.facets
            .iter()
            .map(|(n, c)| c / n[0].hypot(n[1]))
            .fold(f64::INFINITY, f64::min)
    }

    fn circumradius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max)
    }
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Base shape of a constraint set.
#[derive(Clone, Debug)]
pub enum Shape {
    /// `B(center, radius)`; the origin must lie strictly inside.
    Ball { radius: f64, center: [f64; 3] },
    Ellipsoid(Arc<Ellipsoid>),
    Polytope(Arc<Polygon>),
    /// `{p : H(x, p) ≤ level}`.
    LevelSet {
        supremand: Arc<dyn Supremand>,
        level: f64,
    },
}

impl Shape {
    pub fn ball(radius: f64) -> Self {
        Shape::Ball {
            radius,
            center: [0.0; 3],
        }
    }

    pub fn ellipsoid(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Shape::Ellipsoid(Arc::new(Ellipsoid::new(rows)?)))
    }

    pub fn polytope(vertices: &[Vec<f64>]) -> Result<Self> {
        Ok(Shape::Polytope(Arc::new(Polygon::new(vertices)?)))
    }

    /// Bounds `(α, M)` of the unscaled shape when they follow in closed form.
    pub fn closed_form_bounds(&self) -> Option<(f64, f64)> {
        match self {
            Shape::Ball { radius, center } => {
                let c = norm(center);
                Some((radius - c, radius + c))
            }
            Shape::Ellipsoid(e) => Some((e.min_semi_axis, e.max_semi_axis)),
            Shape::Polytope(p) => Some((p.inradius(), p.circumradius())),
            Shape::LevelSet { .. } => None,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Shape::Ball { radius, center } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Model("ball radius must be positive".into()));
                }
                if norm(&center[..dim]) >= *radius {
                    return Err(Error::Model(
                        "ball must contain the origin strictly in its interior".into(),
                    ));
                }
            }
            Shape::Ellipsoid(e) if e.dim != dim => {
                return Err(Error::Model("ellipsoid dimension mismatch".into()));
            }
            Shape::Polytope(_) if dim != 2 => {
                return Err(Error::Model("polytope sets are supported in 2D only".into()));
            }
            Shape::LevelSet { supremand, level } => {
                if supremand.dim() != dim {
                    return Err(Error::Model("supremand dimension mismatch".into()));
                }
                if !(level.is_finite() && *level > 0.0) {
                    return Err(Error::Model("level must be positive".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub(crate) fn gauge(&self, dim: usize, scale: f64, x: &[f64], p: &[f64]) -> Result<f64> {
        let g = match self {
            Shape::Ball { radius, center } => {
                let c = &center[..dim];
                let pc = dot(p, c);
                let pp = dot(p, p);
                let rr = radius * radius - dot(c, c);
                let disc = (pc * pc + pp * rr).max(0.0);
                (disc.sqrt() - pc) / rr
            }
            Shape::Ellipsoid(e) => e.gauge(p),
            Shape::Polytope(poly) => poly.gauge(p),
            Shape::LevelSet { supremand, level } => {
                levelset_gauge(supremand.as_ref(), *level, x, p)?
            }
        };
        Ok(g / scale)
    }

    pub(crate) fn support(&self, dim: usize, scale: f64, x: &[f64], q: &[f64]) -> Result<f64> {
        let s = match self {
            Shape::Ball { radius, center } => dot(&center[..dim], q) + radius * norm(q),
            Shape::Ellipsoid(e) => e.support(q),
            Shape::Polytope(poly) => poly.support(q),
            Shape::LevelSet { .. } => {
                if norm(q) == 0.0 {
                    0.0
                } else {
                    let (_, v) = self.levelset_best_direction(dim, x, q)?;
                    v
                }
            }
        };
        Ok(s * scale)
    }

    /// Maximizes `(u·q)/φ(x,u)` over unit `u` for a level-set shape.
    fn levelset_best_direction(&self, dim: usize, x: &[f64], q: &[f64]) -> Result<(Vec<f64>, f64)> {
        let Shape::LevelSet { supremand, level } = self else {
            unreachable!("levelset_best_direction on a closed-form shape")
        };
        let h = supremand.as_ref();
        match dim {
            1 => {
                let u = vec![q[0].signum()];
                let v = q[0].abs() / levelset_gauge(h, *level, x, &u)?;
                Ok((u, v))
            }
            2 => {
                let (t, v) = maximize_on_circle(
                    |t| {
                        let u = [t.cos(), t.sin()];
                        Ok(dot(&u, q) / levelset_gauge(h, *level, x, &u)?)
                    },
                    LEVELSET_COARSE,
                    LEVELSET_ANGLE_TOL,
                )?;
                Ok((vec![t.cos(), t.sin()], v))
            }
            _ => {
                let (u, v) = maximize_on_sphere(
                    |u| Ok(dot(u, q) / levelset_gauge(h, *level, x, u)?),
                    256,
                    1e-9,
                )?;
                Ok((u.to_vec(), v))
            }
        }
    }
}

/// Gauge of `{H(x,·) ≤ level}` by monotone bisection on `t ↦ H(x, p/t)`.
fn levelset_gauge(h: &dyn Supremand, level: f64, x: &[f64], p: &[f64]) -> Result<f64> {
    let np = norm(p);
    if np == 0.0 {
        return Ok(0.0);
    }
    let mut buf = [0.0f64; 3];
    let mut inside = |t: f64| {
        for (b, v) in buf.iter_mut().zip(p) {
            *b = v / t;
        }
        h.eval(x, &buf[..p.len()]) <= level
    };
    let mut hi = np;
    let mut n = 0;
    while !inside(hi) {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(Error::Model(
                "level-set gauge not bracketable: sublevel set does not contain a ball around 0".into(),
            ));
        }
    }
    let mut lo = hi;
    n = 0;
    while inside(lo) {
        lo *= 0.5;
        n += 1;
        if n > 200 {
            return Err(Error::Model(
                "level-set gauge not bracketable: supremand is not coercive".into(),
            ));
        }
    }
    while hi - lo > GAUGE_BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One compact convex set `K = scale · shape` (level sets bound at `anchor`).
#[derive(Clone, Debug)]
pub struct ConvexSetInstance {
    shape: Shape,
    scale: f64,
    anchor: [f64; 3],
    dim: usize,
    alpha: f64,
    m: f64,
}

impl ConvexSetInstance {
    /// Builds an instance and checks `B(0,α) ⊂ K ⊂ B(0,M)` on
    /// [`VALIDATION_DIRECTIONS`] sampled directions.
    pub fn new(shape: Shape, scale: f64, anchor: &[f64], alpha: f64, m: f64) -> Result<Self> {
        let dim = anchor.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::Argument("dimension must be 1, 2 or 3".into()));
        }
        let inst = Self::unchecked(shape, scale, anchor, alpha, m);
        inst.validate()?;
        Ok(inst)
    }

    /// Closed-form instance with its exact `(α, M)`.
    pub fn closed_form(shape: Shape, scale: f64, dim: usize) -> Result<Self> {
        let (a, m) = shape
            .closed_form_bounds()
            .ok_or_else(|| Error::Argument("level sets need explicit bounds".into()))?;
        Self::new(shape, scale, &vec![0.0; dim], a * scale, m * scale)
    }

    fn unchecked(shape: Shape, scale: f64, anchor: &[f64], alpha: f64, m: f64) -> Self {
        let mut a = [0.0; 3];
        a[..anchor.len()].copy_from_slice(anchor);
        Self {
            shape,
            scale,
            anchor: a,
            dim: anchor.len(),
            alpha,
            m,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.m >= self.alpha && self.m.is_finite()) {
            return Err(Error::Model(format!(
                "invalid bounds alpha={} M={}",
                self.alpha, self.m
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Model(format!("scale factor {} is not positive", self.scale)));
        }
        self.shape.validate(self.dim)?;
        for u in search::unit_directions(self.dim, VALIDATION_DIRECTIONS) {
            let g = self.gauge(&u)?;
            let lo = (1.0 / self.m) * (1.0 - BOUND_RTOL);
            let hi = (1.0 / self.alpha) * (1.0 + BOUND_RTOL);
            if !(g >= lo && g <= hi) {
                return Err(Error::Model(format!(
                    "set violates B(0,{})⊂K⊂B(0,{}): gauge {g} in direction {u:?}",
                    self.alpha, self.m
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Argument(format!(
                "vector of length {} for a {}-dimensional set",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }

    fn x(&self) -> &[f64] {
        &self.anchor[..self.dim]
    }

    /// Minkowski gauge `inf{t > 0 : p/t ∈ K}`.
    pub fn gauge(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p)?;
        self.shape.gauge(self.dim, self.scale, self.x(), p)
    }

    /// Support function `sup{p·q : p ∈ K}`.
    pub fn support(&self, q: &[f64]) -> Result<f64> {
        self.check_dim(q)?;
        self.shape.support(self.dim, self.scale, self.x(), q)
    }

    /// A point `p ∈ ∂K` with `p·q = support(q)`.
    ///
    /// Unique for strictly convex sets; polytope ties go to the
    /// lexicographically smallest vertex.
    pub fn argmax(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(q)?;
        if norm(q) == 0.0 {
            return Err(Error::Argument(
                "support argmax undefined for q = 0 (every point of K is optimal)".into(),
            ));
        }
        let s = self.scale;
        Ok(match &self.shape {
            Shape::Ball { radius, center } => {
                let nq = norm(q);
                (0..self.dim)
                    .map(|i| s * (center[i] + radius * q[i] / nq))
                    .collect()
            }
            Shape::Ellipsoid(e) => e.argmax(q).into_iter().map(|v| s * v).collect(),
            Shape::Polytope(poly) => poly.argmax(q).iter().map(|v| s * v).collect(),
            Shape::LevelSet { .. } => {
                let (u, _) = self.shape.levelset_best_direction(self.dim, self.x(), q)?;
                let g = self.gauge(&u)?;
                u.into_iter().map(|v| v / g).collect()
            }
        })
    }

    /// `sup{p·q / φ⁰(q) : q ≠ 0}`, computed by direction search.
    pub fn bipolar_gauge(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p)?;
        if norm(p) == 0.0 {
            return Ok(0.0);
        }
        match self.dim {
            1 => {
                let q = [p[0].signum()];
                Ok(p[0].abs() / self.support(&q)?)
            }
            2 => {
                let (_, v) = maximize_on_circle(
                    |t| {
                        let q = [t.cos(), t.sin()];
                        Ok(dot(p, &q) / self.support(&q)?)
                    },
                    256,
                    1e-12,
                )?;
                Ok(v)
            }
            _ => {
                let (_, v) = maximize_on_sphere(|q| Ok(dot(p, q) / self.support(q)?), 512, 1e-10)?;
                Ok(v)
            }
        }
    }

    /// The boundary point `u / φ(u)` in direction `u`.
    pub fn boundary_point(&self, u: &[f64]) -> Result<Vec<f64>> {
        let g = self.gauge(u)?;
        Ok(u.iter().map(|v| v / g).collect())
    }

    /// Euclidean distance from `p` to the set, via
    /// `dist(p, K) = max_{|q|=1} (p·q − φ⁰(q))` for `p ∉ K`.
    pub fn distance_to(&self, p: &[f64]) -> Result<f64> {
        if self.gauge(p)? <= 1.0 {
            return Ok(0.0);
        }
        let v = match self.dim {
            1 => (p[0].abs() - self.support(&[p[0].signum()])?).max(0.0),
            2 => {
                maximize_on_circle(
                    |t| {
                        let q = [t.cos(), t.sin()];
                        Ok(dot(p, &q) - self.support(&q)?)
                    },
                    128,
                    1e-12,
                )?
                .1
            }
            _ => maximize_on_sphere(|q| Ok(dot(p, q) - self.support(q)?), 256, 1e-10)?.1,
        };
        Ok(v.max(0.0))
    }
}

/// Hausdorff distance `max{ρ(A,B), ρ(B,A)}` by boundary sampling
/// ([`HAUSDORFF_DIRECTIONS`] directions in 2D).
pub fn hausdorff_dist(a: &ConvexSetInstance, b: &ConvexSetInstance) -> Result<f64> {
    hausdorff_dist_with(a, b, HAUSDORFF_DIRECTIONS)
}

pub fn hausdorff_dist_with(a: &ConvexSetInstance, b: &ConvexSetInstance, samples: usize) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::Argument("Hausdorff distance between sets of different dimension".into()));
    }
    Ok(one_sided_deviation(a, b, samples)?.max(one_sided_deviation(b, a, samples)?))
}

fn one_sided_deviation(from: &ConvexSetInstance, to: &ConvexSetInstance, samples: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for u in search::unit_directions(from.dim, samples) {
        let p = from.boundary_point(&u)?;
        worst = worst.max(to.distance_to(&p)?);
    }
    Ok(worst)
}

/// A field `x ↦ K(x) = s(x)·K₀` with global bounds `(α, M)`.
#[derive(Clone, Debug)]
pub struct ConvexField {
    shape: Shape,
    scale: Expr,
    dim: usize,
    alpha: f64,
    m: f64,
    domain: Option<Arc<Domain>>,
}

impl ConvexField {
    pub fn new(shape: Shape, scale: Expr, dim: usize, alpha: f64, m: f64) -> Result<Self> {
        let field = Self {
            shape,
            scale,
            dim,
            alpha,
            m,
            domain: None,
        };
        // bounds at one representative point; `with_domain` samples the whole domain
        let probe = vec![0.0; dim];
        if field.scale.as_constant().is_some() {
            field.checked_instance(&probe)?;
        } else {
            field.shape.validate(dim)?;
        }
        Ok(field)
    }

    /// Constant field `K(x) ≡ K₀` with the shape's closed-form bounds.
    pub fn constant(shape: Shape, dim: usize) -> Result<Self> {
        let (a, m) = shape
            .closed_form_bounds()
            .ok_or_else(|| Error::Argument("level sets need explicit bounds".into()))?;
        Self::new(shape, Expr::constant(1.0), dim, a, m)
    }

    /// Restricts the field to `domain`; evaluations outside `Ω̄` become
    /// domain errors. The bounds are re-checked on a grid of domain points.
    pub fn with_domain(mut self, domain: Arc<Domain>) -> Result<Self> {
        if domain.dim() != self.dim {
            return Err(Error::Argument("field and domain dimensions differ".into()));
        }
        for x in domain.sample_points(12) {
            self.checked_instance_at(&x, 64)?;
        }
        self.domain = Some(domain);
        Ok(self)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn scale(&self) -> &Expr {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn domain(&self) -> Option<&Arc<Domain>> {
        self.domain.as_ref()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Argument(format!(
                "point of length {} for a {}-dimensional field",
                x.len(),
                self.dim
            )));
        }
        if let Some(d) = &self.domain {
            if !d.in_closure(x) {
                return Err(Error::Domain(format!("point {x:?} lies outside the closed domain")));
            }
        }
        Ok(())
    }

    fn scale_at(&self, x: &[f64]) -> Result<f64> {
        let s = self.scale.eval(x);
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Model(format!("scale {s} at {x:?} is not positive")));
        }
        Ok(s)
    }

    /// `K(x)` with the field's global bounds (not re-validated).
    pub fn instance_at(&self, x: &[f64]) -> Result<ConvexSetInstance> {
        self.check_point(x)?;
        Ok(ConvexSetInstance::unchecked(
            self.shape.clone(),
            self.scale_at(x)?,
            x,
            self.alpha,
            self.m,
        ))
    }

    fn checked_instance(&self, x: &[f64]) -> Result<ConvexSetInstance> {
        ConvexSetInstance::new(self.shape.clone(), self.scale_at(x)?, x, self.alpha, self.m)
    }

    fn checked_instance_at(&self, x: &[f64], directions: usize) -> Result<()> {
        let inst = ConvexSetInstance::unchecked(self.shape.clone(), self.scale_at(x)?, x, self.alpha, self.m);
        for u in search::unit_directions(self.dim, directions) {
            let g = inst.gauge(&u)?;
            if !(g >= (1.0 - BOUND_RTOL) / self.m && g <= (1.0 + BOUND_RTOL) / self.alpha) {
                return Err(Error::Model(format!(
                    "field violates B(0,{})⊂K(x)⊂B(0,{}) at x={x:?}: gauge {g} in direction {u:?}",
                    self.alpha, self.m
                )));
            }
        }
        Ok(())
    }

    /// `φ(x, p)`.
    pub fn gauge_eval(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.shape.gauge(self.dim, self.scale_at(x)?, x, p)
    }

    /// `φ⁰(x, q)`.
    pub fn support_eval(&self, x: &[f64], q: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.shape.support(self.dim, self.scale_at(x)?, x, q)
    }

    pub fn support_argmax(&self, x: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        self.instance_at(x)?.argmax(q)
    }

    pub fn bipolar_gauge(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        self.instance_at(x)?.bipolar_gauge(p)
    }

    /// Central-difference probe of `∇ₓφ⁰(x, q)` with step `h`.
    pub fn support_x_gradient(&self, x: &[f64], q: &[f64], h: f64) -> Result<Vec<f64>> {
        if !(h > 0.0) {
            return Err(Error::Argument("finite-difference step must be positive".into()));
        }
        if let Some(d) = &self.domain {
            if d.boundary_distance(x) <= h {
                return Err(Error::Domain(format!(
                    "x={x:?} is within {h} of the boundary; stencil does not fit"
                )));
            }
        }
        let mut grad = Vec::with_capacity(self.dim);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for i in 0..self.dim {
            xp[i] = x[i] + h;
            xm[i] = x[i] - h;
            grad.push((self.support_eval(&xp, q)? - self.support_eval(&xm, q)?) / (2.0 * h));
            xp[i] = x[i];
            xm[i] = x[i];
        }
        Ok(grad)
    }

    /// `|g(h) − g(h/2)| / |g(h/2) − g(h/4)|` for the gradient probe; ≈ 4 for
    /// a smooth field with central differences.
    pub fn support_x_gradient_richardson(&self, x: &[f64], q: &[f64], h: f64) -> Result<f64> {
        let g1 = self.support_x_gradient(x, q, h)?;
        let g2 = self.support_x_gradient(x, q, h / 2.0)?;
        let g4 = self.support_x_gradient(x, q, h / 4.0)?;
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        Ok(diff(&g1, &g2) / diff(&g2, &g4))
    }
}

fn one() -> Expr {
    Expr::constant(1.0)
}

/// Serialized base shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeSpec {
    Ball {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Ellipsoid {
        matrix: Vec<Vec<f64>>,
    },
    Polytope {
        vertices: Vec<Vec<f64>>,
    },
    Levelset {
        supremand: SupremandSpec,
        level: f64,
    },
}

/// JSON form of a [`ConvexField`]:
/// `{"kind": "ball"|"ellipsoid"|"polytope"|"levelset", ..., "scale": expr, "alpha": a, "M": m}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexFieldSpec {
    #[serde(flatten)]
    pub shape: ShapeSpec,
    #[serde(default = "one")]
    pub scale: Expr,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl ConvexFieldSpec {
    pub fn dim(&self) -> usize {
        if let Some(d) = self.dim {
            return d;
        }
        match &self.shape {
            ShapeSpec::Ball { center: Some(c), .. } => c.len(),
            ShapeSpec::Ellipsoid { matrix } => matrix.len(),
            ShapeSpec::Levelset { supremand, .. } => supremand.dim(),
            _ => 2,
        }
    }

    pub fn build_shape(&self) -> Result<Shape> {
        let dim = self.dim();
        Ok(match &self.shape {
            ShapeSpec::Ball { radius, center } => {
                let mut c = [0.0; 3];
                if let Some(cv) = center {
                    if cv.len() != dim {
                        return Err(Error::Schema("ball center dimension mismatch".into()));
                    }
                    c[..dim].copy_from_slice(cv);
                }
                Shape::Ball {
                    radius: *radius,
                    center: c,
                }
            }
            ShapeSpec::Ellipsoid { matrix } => Shape::ellipsoid(matrix)?,
            ShapeSpec::Polytope { vertices } => Shape::polytope(vertices)?,
            ShapeSpec::Levelset { supremand, level } => Shape::LevelSet {
                supremand: supremand.build()?,
                level: *level,
            },
        })
    }

    pub fn build(&self) -> Result<ConvexField> {
        ConvexField::new(self.build_shape()?, self.scale.clone(), self.dim(), self.alpha, self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square() -> Shape {
        Shape::polytope(&[vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]]).unwrap()
    }

    fn ellipse() -> Shape {
        Shape::ellipsoid(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn gauge_examples() {
        let ball = ConvexField::constant(Shape::ball(1.0), 2).unwrap();
        assert_eq!(ball.gauge_eval(&[0.5, 0.5], &[0.0, 3.0]).unwrap(), 3.0);
        let sq = ConvexField::constant(square(), 2).unwrap();
        assert_relative_eq!(sq.gauge_eval(&[0.0, 0.0], &[2.0, 1.0]).unwrap(), 2.0, epsilon = 1e-14);
        let el = ConvexField::constant(ellipse(), 2).unwrap();
        assert_relative_eq!(el.gauge_eval(&[0.0, 0.0], &[2.0, 0.0]).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(ball.gauge_eval(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn support_examples() {
        let x = [0.2, 0.2];
        let ball = ConvexField::constant(Shape::ball(1.0), 2).unwrap();
        assert_relative_eq!(ball.support_eval(&x, &[3.0, 4.0]).unwrap(), 5.0);
        let sq = ConvexField::constant(square(), 2).unwrap();
        assert_relative_eq!(sq.support_eval(&x, &[1.0, 2.0]).unwrap(), 3.0);
        let el = ConvexField::constant(ellipse(), 2).unwrap();
        assert_relative_eq!(el.support_eval(&x, &[1.0, 1.0]).unwrap(), 5f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn argmax_examples() {
        let x = [0.0, 0.0];
        let ball = ConvexField::constant(Shape::ball(1.0), 2).unwrap();
        assert_eq!(ball.support_argmax(&x, &[0.0, 2.0]).unwrap(), vec![0.0, 1.0]);
        let sq = ConvexField::constant(square(), 2).unwrap();
        assert_eq!(sq.support_argmax(&x, &[1.0, 2.0]).unwrap(), vec![1.0, 1.0]);
        // tie between (1,1) and (1,-1): lexicographically smallest wins
        assert_eq!(sq.support_argmax(&x, &[1.0, 0.0]).unwrap(), vec![1.0, -1.0]);
        let el = ConvexField::constant(ellipse(), 2).unwrap();
        let p = el.support_argmax(&x, &[1.0, 1.0]).unwrap();
        assert_relative_eq!(p[0], 4.0 / 5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(p[1], 1.0 / 5f64.sqrt(), epsilon = 1e-12);
        assert!(matches!(ball.support_argmax(&x, &[0.0, 0.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn bipolar_examples() {
        let x = [0.0, 0.0];
        let ball = ConvexField::constant(Shape::ball(1.0), 2).unwrap();
        assert_relative_eq!(ball.bipolar_gauge(&x, &[0.0, 3.0]).unwrap(), 3.0, epsilon = 1e-10);
        let sq = ConvexField::constant(square(), 2).unwrap();
        assert_relative_eq!(sq.bipolar_gauge(&x, &[2.0, 1.0]).unwrap(), 2.0, epsilon = 1e-9);
        let el = ConvexField::constant(ellipse(), 2).unwrap();
        assert_relative_eq!(el.bipolar_gauge(&x, &[2.0, 0.0]).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn hausdorff_examples() {
        let b1 = ConvexSetInstance::closed_form(Shape::ball(1.0), 1.0, 2).unwrap();
        let b2 = ConvexSetInstance::closed_form(Shape::ball(2.0), 1.0, 2).unwrap();
        let sq = ConvexSetInstance::closed_form(square(), 1.0, 2).unwrap();
        assert!(hausdorff_dist(&b1, &b1).unwrap() < 1e-12);
        assert_relative_eq!(hausdorff_dist(&b1, &b2).unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(hausdorff_dist(&b1, &sq).unwrap(), 2f64.sqrt() - 1.0, epsilon = 1e-9);
        assert_relative_eq!(
            hausdorff_dist(&sq, &b1).unwrap(),
            hausdorff_dist(&b1, &sq).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn shifted_ball_is_not_symmetric() {
        let shape = Shape::Ball {
            radius: 1.0,
            center: [0.5, 0.0, 0.0],
        };
        let k = ConvexSetInstance::closed_form(shape, 1.0, 2).unwrap();
        assert_relative_eq!(k.gauge(&[1.5, 0.0]).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(k.gauge(&[-0.5, 0.0]).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(k.support(&[1.0, 0.0]).unwrap(), 1.5);
        assert_relative_eq!(k.support(&[-1.0, 0.0]).unwrap(), 0.5);
        assert_eq!((k.alpha(), k.m()), (0.5, 1.5));
    }

    #[test]
    fn invalid_instances_rejected() {
        // origin outside the polytope
        assert!(Shape::polytope(&[vec![1.0, 1.0], vec![2.0, 1.0], vec![1.0, 2.0]]).is_err());
        assert!(Shape::ellipsoid(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        // bounds that are too optimistic
        assert!(ConvexSetInstance::new(Shape::ball(1.0), 1.0, &[0.0, 0.0], 1.5, 2.0).is_err());
        assert!(ConvexSetInstance::new(Shape::ball(1.0), 1.0, &[0.0, 0.0], 0.5, 0.9).is_err());
        let off = Shape::Ball {
            radius: 1.0,
            center: [1.0, 0.0, 0.0],
        };
        assert!(ConvexSetInstance::new(off, 1.0, &[0.0, 0.0], 0.1, 2.0).is_err());
    }

    #[test]
    fn three_dimensional_ball_and_ellipsoid() {
        let e = Shape::ellipsoid(&[vec![4.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 9.0]]).unwrap();
        let k = ConvexSetInstance::closed_form(e, 1.0, 3).unwrap();
        assert_relative_eq!(k.support(&[0.0, 0.0, 1.0]).unwrap(), 3.0);
        assert_relative_eq!(k.bipolar_gauge(&[1.0, 1.0, 1.0]).unwrap(), k.gauge(&[1.0, 1.0, 1.0]).unwrap(), epsilon = 1e-7);
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind":"ellipsoid","matrix":[[4,0],[0,1]],"alpha":1,"M":2}"#;
        let spec: ConvexFieldSpec = serde_json::from_str(json).unwrap();
        let back: ConvexFieldSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, back);
        let f = spec.build().unwrap();
        assert_relative_eq!(f.support_eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 2.0);
        let bad = r#"{"kind":"ball","radius":1,"alpha":1,"M":0.5}"#;
        let spec: ConvexFieldSpec = serde_json::from_str(bad).unwrap();
        assert!(spec.build().is_err());
    }
}
