//! Supremal functionals `F(u) = ess sup H(x, ∇u)` and their reduction to
//! gradient constraints `K_ν(x) = {p : H(x, p) ≤ ν}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexField, Shape, Supremand};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::extensions::{admissibility_with, AdmissibilityReport};
use crate::geodesic::{sweep_until, Direction};
use crate::mesh::{discretize, MeshGraph, ScalarField, Stencil};
use crate::search;

fn one() -> Expr {
    Expr::constant(1.0)
}

fn unit_power() -> f64 {
    1.0
}

/// Whitelisted supremands. Every entry has the form
/// `H(x, p) = (ψ(p) / f(x))^k` for a base gauge `ψ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "H", rename_all = "snake_case")]
pub enum SupremandSpec {
    /// `ψ(p) = |p|`.
    ScaledNorm {
        #[serde(default = "one")]
        f: Expr,
        #[serde(default = "unit_power")]
        power: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    /// `ψ(p) = √(pᵀA⁻¹p)`.
    EllipsoidGauge {
        matrix: Vec<Vec<f64>>,
        #[serde(default = "one")]
        f: Expr,
        #[serde(default = "unit_power")]
        power: f64,
    },
    /// Gauge of the hull of `vertices` (2D).
    PolytopeGauge {
        vertices: Vec<Vec<f64>>,
        #[serde(default = "one")]
        f: Expr,
        #[serde(default = "unit_power")]
        power: f64,
    },
    /// `ψ(p) = |p|·ρ(θ)` with `ρ` piecewise linear and periodic over the
    /// tabulated polar angles (2D).
    Tabulated {
        angles: Vec<f64>,
        values: Vec<f64>,
        #[serde(default = "one")]
        f: Expr,
        #[serde(default = "unit_power")]
        power: f64,
    },
}

impl SupremandSpec {
    pub fn scaled_norm(f: Expr) -> Self {
        SupremandSpec::ScaledNorm {
            f,
            power: 1.0,
            dim: None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SupremandSpec::ScaledNorm { dim, .. } => dim.unwrap_or(2),
            SupremandSpec::EllipsoidGauge { matrix, .. } => matrix.len(),
            _ => 2,
        }
    }

    fn parts(&self) -> (&Expr, f64) {
        match self {
            SupremandSpec::ScaledNorm { f, power, .. }
            | SupremandSpec::EllipsoidGauge { f, power, .. }
            | SupremandSpec::PolytopeGauge { f, power, .. }
            | SupremandSpec::Tabulated { f, power, .. } => (f, *power),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Supremand>> {
        Ok(Arc::new(self.build_concrete()?))
    }

    pub fn build_concrete(&self) -> Result<WhitelistSupremand> {
        let (f, power) = self.parts();
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::Model("supremand power must be positive".into()));
        }
        let dim = self.dim();
        let base = match self {
            SupremandSpec::ScaledNorm { .. } => {
                if !(1..=3).contains(&dim) {
                    return Err(Error::Schema("scaled_norm dimension must be 1, 2 or 3".into()));
                }
                Base::Shape(Shape::ball(1.0))
            }
            SupremandSpec::EllipsoidGauge { matrix, .. } => Base::Shape(Shape::ellipsoid(matrix)?),
            SupremandSpec::PolytopeGauge { vertices, .. } => Base::Shape(Shape::polytope(vertices)?),
            SupremandSpec::Tabulated { angles, values, .. } => Base::Tabulated(Tabulated::new(angles, values)?),
        };
        Ok(WhitelistSupremand {
            base,
            f: f.clone(),
            power,
            dim,
        })
    }

    /// Whether `H(x, ·)` is positively 1-homogeneous.
    pub fn is_one_homogeneous(&self) -> bool {
        self.parts().1 == 1.0
    }
}

#[derive(Clone, Debug)]
enum Base {
    Shape(Shape),
    Tabulated(Tabulated),
}

/// Radial profile `ρ(θ) > 0`, linear between tabulated angles.
#[derive(Clone, Debug)]
struct Tabulated {
    angles: Vec<f64>,
    values: Vec<f64>,
}

impl Tabulated {
    fn new(angles: &[f64], values: &[f64]) -> Result<Self> {
        if angles.len() != values.len() || angles.len() < 3 {
            return Err(Error::Schema("tabulated supremand needs ≥3 matching angles and values".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Model("tabulated profile must be positive (coercivity)".into()));
        }
        let mut pts: Vec<(f64, f64)> = angles
            .iter()
            .map(|a| a.rem_euclid(std::f64::consts::TAU))
            .zip(values.iter().copied())
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[1].0 - w[0].0 < 1e-12) {
            return Err(Error::Schema("tabulated angles must be distinct".into()));
        }
        let t = Tabulated {
            angles: pts.iter().map(|p| p.0).collect(),
            values: pts.iter().map(|p| p.1).collect(),
        };
        t.check_convex()?;
        Ok(t)
    }

    fn rho(&self, theta: f64) -> f64 {
        let th = theta.rem_euclid(std::f64::consts::TAU);
        let n = self.angles.len();
        let k = self.angles.partition_point(|&a| a <= th);
        let (i, j) = if k == 0 || k == n { (n - 1, 0) } else { (k - 1, k) };
        let (a0, a1) = (self.angles[i], self.angles[j]);
        let span = (a1 - a0).rem_euclid(std::f64::consts::TAU);
        let s = (th - a0).rem_euclid(std::f64::consts::TAU) / span;
        self.values[i] * (1.0 - s) + self.values[j] * s
    }

    fn gauge(&self, p: &[f64]) -> f64 {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            0.0
        } else {
            r * self.rho(p[1].atan2(p[0]))
        }
    }

    /// Sampled midpoint convexity of the unit sublevel set.
    fn check_convex(&self) -> Result<()> {
        let n = 256;
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                let r = 1.0 / self.rho(t);
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                let m = [0.5 * (pts[i][0] + pts[j][0]), 0.5 * (pts[i][1] + pts[j][1])];
                if self.gauge(&m) > 1.0 + 1e-9 {
                    return Err(Error::Model("tabulated supremand has a nonconvex sublevel set".into()));
                }
            }
        }
        Ok(())
    }

    fn bounds(&self) -> (f64, f64) {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(0.0, f64::max);
        // unit sublevel radius is 1/ρ
        (1.0 / hi, 1.0 / lo)
    }
}

/// A built whitelist supremand `H(x, p) = (ψ(p) / f(x))^k`.
#[derive(Clone, Debug)]
pub struct WhitelistSupremand {
    base: Base,
    f: Expr,
    power: f64,
    dim: usize,
}

impl WhitelistSupremand {
    fn base_gauge(&self, x: &[f64], p: &[f64]) -> f64 {
        match &self.base {
            Base::Shape(s) => s.gauge(self.dim, 1.0, x, p).unwrap_or(f64::INFINITY),
            Base::Tabulated(t) => t.gauge(p),
        }
    }

    fn base_bounds(&self) -> (f64, f64) {
        match &self.base {
            Base::Shape(s) => s.closed_form_bounds().expect("whitelist bases have closed-form bounds"),
            Base::Tabulated(t) => t.bounds(),
        }
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    pub fn power(&self) -> f64 {
        self.power
    }
}

impl Supremand for WhitelistSupremand {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], p: &[f64]) -> f64 {
        (self.base_gauge(x, p) / self.f.eval(x)).powf(self.power)
    }
}

/// Range of `f` over sampled domain points, widened by 5%.
fn f_range(f: &Expr, domain: &Domain) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for x in domain.sample_points(48) {
        let v = f.eval(&x);
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Model(format!(
                "f({x:?}) = {v}: supremand is not uniformly coercive"
            )));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((0.95 * lo, 1.05 * hi))
}

/// `K_ν(x) = {p : H(x,p) ≤ ν}` restricted to `domain`.
///
/// For whitelist bases this is `ν^(1/k)·f(x)·K_ψ` in closed form; tabulated
/// profiles go through the generic level-set path.
pub fn level_set_field(spec: &SupremandSpec, domain: &Arc<Domain>, nu: f64) -> Result<ConvexField> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::Argument(format!("level ν = {nu} must be positive")));
    }
    let h = spec.build_concrete()?;
    if h.dim != domain.dim() {
        return Err(Error::Argument("supremand and domain dimensions differ".into()));
    }
    let c = nu.powf(1.0 / h.power);
    let (flo, fhi) = f_range(&h.f, domain)?;
    let (a0, m0) = h.base_bounds();
    let (alpha, m) = (c * flo * a0, c * fhi * m0);
    let field = match &h.base {
        Base::Shape(shape) => {
            let scale = match h.f.as_constant() {
                Some(v) => Expr::constant(v * c),
                None => Expr::parse(&format!("({}) * {c:e}", h.f.source()))?,
            };
            ConvexField::new(shape.clone(), scale, h.dim, alpha, m)?
        }
        Base::Tabulated(_) => ConvexField::new(
            Shape::LevelSet {
                supremand: Arc::new(h.clone()),
                level: nu,
            },
            Expr::constant(1.0),
            h.dim,
            alpha,
            m,
        )?,
    };
    field.with_domain(domain.clone())
}

/// Sampled check of the modelling assumptions on `H` over `domain`:
/// `H ≥ 0`, `H(·, 0) = 0`, convex unit sublevels and uniform coercivity.
pub fn check_assumptions(spec: &SupremandSpec, domain: &Domain) -> Result<()> {
    let h = spec.build_concrete()?;
    f_range(&h.f, domain)?;
    let dirs = search::unit_directions(h.dim, 128);
    for x in domain.sample_points(8) {
        if h.eval(&x, &vec![0.0; h.dim]) != 0.0 {
            return Err(Error::Model(format!("H(x, 0) ≠ 0 at x = {x:?}")));
        }
        let pts: Vec<Vec<f64>> = dirs
            .iter()
            .map(|u| {
                let v = h.eval(&x, u);
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Model(format!("H({x:?}, {u:?}) = {v} is not positive")));
                }
                // boundary point of {H(x,·) ≤ 1} along u
                let t = v.powf(1.0 / h.power);
                Ok(u.iter().map(|c| c / t).collect())
            })
            .collect::<Result<_>>()?;
        for i in 0..pts.len() {
            for j in (i + 1..pts.len()).step_by(7) {
                let m: Vec<f64> = pts[i].iter().zip(&pts[j]).map(|(a, b)| 0.5 * (a + b)).collect();
                if h.eval(&x, &m) > 1.0 + 1e-9 {
                    return Err(Error::Model(format!("sublevel set of H is not convex at x = {x:?}")));
                }
            }
        }
    }
    Ok(())
}

/// A supremand, a boundary datum and a fixed mesh geometry on which
/// `d_ν` is evaluated for every level `ν`.
#[derive(Debug)]
pub struct SupremalProblem {
    spec: SupremandSpec,
    domain: Arc<Domain>,
    datum: Expr,
    base: MeshGraph,
    boundary: Vec<usize>,
    g: Vec<f64>,
    power: f64,
}

impl SupremalProblem {
    pub fn new(spec: SupremandSpec, domain: Arc<Domain>, datum: Expr, h: f64, stencil: Stencil) -> Result<Self> {
        check_assumptions(&spec, &domain)?;
        let field = Arc::new(level_set_field(&spec, &domain, 1.0)?);
        let base = discretize(domain.clone(), field, h, stencil)?;
        let boundary = base.boundary_nodes();
        let mut g = vec![f64::NAN; base.node_count()];
        for &b in &boundary {
            let v = datum.eval(base.point(b));
            if !v.is_finite() {
                return Err(Error::Model(format!("datum is not finite at {:?}", base.point(b))));
            }
            g[b] = v;
        }
        let power = spec.build_concrete()?.power;
        Ok(Self {
            spec,
            domain,
            datum,
            base,
            boundary,
            g,
            power,
        })
    }

    pub fn spec(&self) -> &SupremandSpec {
        &self.spec
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn datum(&self) -> &Expr {
        &self.datum
    }

    /// The mesh weighted for `ν = 1`.
    pub fn base_mesh(&self) -> &MeshGraph {
        &self.base
    }

    pub fn level_field(&self, nu: f64) -> Result<ConvexField> {
        level_set_field(&self.spec, &self.domain, nu)
    }

    /// Mesh for `d_ν` with every weight recomputed from `K_ν`.
    pub fn mesh_at(&self, nu: f64) -> Result<MeshGraph> {
        self.base.reweighted(Arc::new(self.level_field(nu)?))
    }

    /// Mesh for `d_ν` from the base weights, valid because `K_ν = ν^(1/k)·K_1`
    /// for whitelist supremands.
    pub fn mesh_at_scaled(&self, nu: f64) -> Result<MeshGraph> {
        Ok(self.base.scaled(self.level_scale(nu), Arc::new(self.level_field(nu)?)))
    }

    fn level_scale(&self, nu: f64) -> f64 {
        nu.powf(1.0 / self.power)
    }

    pub fn admissibility_at(&self, nu: f64, scaled: bool, tol: f64) -> Result<AdmissibilityReport> {
        let mesh = if scaled { self.mesh_at_scaled(nu)? } else { self.mesh_at(nu)? };
        admissibility_with(&mesh, &self.boundary, &self.g, tol)
    }

    /// Euclidean Lipschitz constant of `g` over (sampled) boundary pairs.
    pub fn datum_lipschitz(&self) -> f64 {
        let stride = (self.boundary.len() / 600).max(1);
        let pts: Vec<usize> = self.boundary.iter().copied().step_by(stride).collect();
        let mut l: f64 = 0.0;
        for (k, &a) in pts.iter().enumerate() {
            for &b in &pts[k + 1..] {
                let d = vdist(self.base.point(a), self.base.point(b));
                if d > 1e-12 {
                    l = l.max((self.g[a] - self.g[b]).abs() / d);
                }
            }
        }
        l
    }
}

fn vdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// One bisection evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelStep {
    pub nu: f64,
    pub admissible: bool,
    pub margin: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Bisection history of [`optimal_mu`].
#[derive(Clone, Debug, Default)]
pub struct LevelRecord {
    pub steps: Vec<LevelStep>,
    pub bracket: (f64, f64),
    pub fast_path: bool,
    /// `(ν, max relative weight difference)` of the scaled-versus-recomputed
    /// cross-checks.
    pub cross_checks: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MuOptions {
    /// Bisection tolerance on `ν`.
    pub tol: f64,
    pub bracket: Option<(f64, f64)>,
    /// Admissibility slack `g(y₂) − g(y₁) ≤ d_ν(y₁, y₂) + slack`.
    pub admissibility_tol: f64,
    /// Allow the scaled-weight fast path for 1-homogeneous `H`.
    pub fast_path: bool,
}

impl Default for MuOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            bracket: None,
            admissibility_tol: 1e-9,
            fast_path: true,
        }
    }
}

pub const BRACKET_FLOOR: f64 = 1e-6;

/// Smallest `ν` (within `tol`) for which `g` is 1-Lipschitz w.r.t. `d_ν`.
pub fn optimal_mu(problem: &SupremalProblem, opts: &MuOptions) -> Result<(f64, LevelRecord)> {
    if !(opts.tol > 0.0) {
        return Err(Error::Argument("bisection tolerance must be positive".into()));
    }
    let (mut lo, mut hi) = match opts.bracket {
        Some(b) => b,
        None => {
            let l = problem.datum_lipschitz();
            let alpha1 = problem.base.field().alpha();
            // a constant datum still needs a nondegenerate bracket
            (BRACKET_FLOOR, (10.0 * l / alpha1).powf(problem.power) + 2.0 * BRACKET_FLOOR)
        }
    };
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Bracket(format!("invalid bracket [{lo}, {hi}]")));
    }
    let fast = opts.fast_path && problem.spec.is_one_homogeneous();
    let mut record = LevelRecord {
        bracket: (lo, hi),
        fast_path: fast,
        ..Default::default()
    };
    let diameter = problem.domain.diameter();
    if problem.base.h() > diameter / 16.0 {
        record.warnings.push(format!(
            "mesh spacing {} is coarse relative to the domain diameter {diameter}; μ is not certified",
            problem.base.h()
        ));
    }
    let eval = |nu: f64, lo: f64, hi: f64, record: &mut LevelRecord| -> Result<bool> {
        let r = problem.admissibility_at(nu, fast, opts.admissibility_tol)?;
        record.steps.push(LevelStep {
            nu,
            admissible: r.ok,
            margin: r.margin,
            lo,
            hi,
        });
        Ok(r.ok)
    };
    if !eval(hi, lo, hi, &mut record)? {
        return Err(Error::Bracket(format!("datum is not admissible at the upper bracket end ν = {hi}")));
    }
    if eval(lo, lo, hi, &mut record)? {
        check_monotone(&record)?;
        return Ok((lo, record));
    }
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid, lo, hi, &mut record)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    check_monotone(&record)?;
    if fast {
        for nu in [record.bracket.1, hi] {
            let a = problem.mesh_at_scaled(nu)?;
            let b = problem.mesh_at(nu)?;
            let mut worst: f64 = 0.0;
            for ((_, _, wa), (_, _, wb)) in a.edges().zip(b.edges()) {
                worst = worst.max((wa - wb).abs() / wb);
            }
            if worst > 1e-9 {
                return Err(Error::Model(format!(
                    "scaled weights disagree with recomputed weights at ν = {nu} (relative {worst:.3e})"
                )));
            }
            record.cross_checks.push((nu, worst));
        }
    }
    Ok((hi, record))
}

fn check_monotone(record: &LevelRecord) -> Result<()> {
    let mut steps = record.steps.clone();
    steps.sort_by(|a, b| a.nu.total_cmp(&b.nu));
    for w in steps.windows(2) {
        if w[0].admissible && !w[1].admissible {
            return Err(Error::Model(format!(
                "admissibility is not monotone in ν: admissible at {} but not at {}",
                w[0].nu, w[1].nu
            )));
        }
    }
    Ok(())
}

/// `(node, d_1(x0, node))` for every node of the closed ball `B(x0, r)`.
fn ball_distances(mesh: &MeshGraph, x0: usize, r: f64) -> Result<Vec<(usize, f64)>> {
    let p0 = mesh.point(x0).to_vec();
    let inside: Vec<usize> = (0..mesh.node_count())
        .filter(|&i| i != x0 && vdist(mesh.point(i), &p0) <= r + 1e-12)
        .collect();
    let mut remaining = inside.len();
    let in_ball = |i: usize| i != x0 && vdist(mesh.point(i), &p0) <= r + 1e-12;
    let s = sweep_until(mesh, &[(x0, 0.0)], Direction::FromSources, |u, _| {
        if in_ball(u) {
            remaining -= 1;
        }
        remaining == 0
    })?;
    Ok(inside.into_iter().map(|i| (i, s.values[i])).collect())
}

const LOCAL_SLACK: f64 = 1e-12;

/// Bisection for `inf{ν : Δu ≤ ν^(1/k)·d_1 + slack on the ball}`.
fn local_level(ball: &[(usize, f64)], u: &ScalarField, u0: f64, power: f64, r: f64) -> Result<f64> {
    let holds = |nu: f64| {
        let s = nu.powf(1.0 / power);
        ball.iter()
            .filter(|(_, d)| vdist_ok(*d, r))
            .all(|&(i, d)| u.get(i) - u0 <= s * d + LOCAL_SLACK)
    };
    if holds(0.0) {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut n = 0;
    while !holds(hi) {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(Error::Bracket("local level is unbounded".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn vdist_ok(d: f64, _r: f64) -> bool {
    d.is_finite()
}

fn check_radius(problem: &SupremalProblem, x0: usize, r: f64) -> Result<()> {
    let mesh = &problem.base;
    if r < mesh.h() {
        return Err(Error::Resolution(format!("radius {r} is below the mesh spacing {}", mesh.h())));
    }
    let bd = problem.domain.boundary_distance(mesh.point(x0));
    if r >= bd {
        return Err(Error::Domain(format!(
            "B(x0, {r}) leaves the domain at {:?} (boundary distance {bd})",
            mesh.point(x0)
        )));
    }
    Ok(())
}

/// `μ(x₀, r) = inf{ν : u(x) − u(x₀) ≤ d_ν(x₀, x) for mesh nodes x ∈ B(x₀, r)}`.
pub fn local_mu(problem: &SupremalProblem, u: &ScalarField, x0: usize, r: f64) -> Result<f64> {
    u.check_mesh(&problem.base)?;
    check_radius(problem, x0, r)?;
    let ball = ball_distances(&problem.base, x0, r)?;
    local_level(&ball, u, u.get(x0), problem.power, r)
}

/// Local levels over a decreasing radius ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct PointwiseLevel {
    /// `(r, μ(x₀, r))`, largest radius first.
    pub ladder: Vec<(f64, f64)>,
    /// `μ(x₀, r_min)`.
    pub value: f64,
    /// Whether the ladder values are nonincreasing as `r` decreases.
    pub monotone: bool,
}

/// Default radius ladder `[4h, 3h, 2.5h]`.
pub fn default_ladder(h: f64) -> Vec<f64> {
    vec![4.0 * h, 3.0 * h, 2.5 * h]
}

pub fn pointwise_h(problem: &SupremalProblem, u: &ScalarField, x0: usize, ladder: &[f64]) -> Result<PointwiseLevel> {
    u.check_mesh(&problem.base)?;
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Argument("radius ladder must be nonempty and strictly decreasing".into()));
    }
    for &r in ladder {
        check_radius(problem, x0, r)?;
    }
    let ball = ball_distances(&problem.base, x0, ladder[0])?;
    let p0 = problem.base.point(x0).to_vec();
    let mut out = Vec::with_capacity(ladder.len());
    for &r in ladder {
        let sub: Vec<(usize, f64)> = ball
            .iter()
            .copied()
            .filter(|&(i, _)| vdist(problem.base.point(i), &p0) <= r + 1e-12)
            .collect();
        out.push((r, local_level(&sub, u, u.get(x0), problem.power, r)?));
    }
    let monotone = out.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    Ok(PointwiseLevel {
        value: out.last().unwrap().1,
        ladder: out,
        monotone,
    })
}

/// Nodes where the pointwise level reaches `μ − ε`.
#[derive(Clone, Debug)]
pub struct AttainmentMask {
    pub mask: Vec<bool>,
    /// Nodes where every ladder radius fits inside the domain.
    pub defined: Vec<bool>,
    /// Pointwise levels (NaN where undefined).
    pub levels: Vec<f64>,
}

impl AttainmentMask {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn defined_count(&self) -> usize {
        self.defined.iter().filter(|&&m| m).count()
    }
}

pub fn attainment_set(
    problem: &SupremalProblem,
    u: &ScalarField,
    mu: f64,
    eps: f64,
    ladder: &[f64],
) -> Result<AttainmentMask> {
    u.check_mesh(&problem.base)?;
    let n = problem.base.node_count();
    let mut mask = vec![false; n];
    let mut defined = vec![false; n];
    let mut levels = vec![f64::NAN; n];
    let rmax = ladder.iter().copied().fold(0.0, f64::max);
    for i in problem.base.interior_nodes() {
        if problem.domain.boundary_distance(problem.base.point(i)) <= rmax {
            continue;
        }
        let lvl = pointwise_h(problem, u, i, ladder)?;
        defined[i] = true;
        levels[i] = lvl.value;
        mask[i] = lvl.value >= mu - eps;
    }
    Ok(AttainmentMask { mask, defined, levels })
}

/// `mask` grown by one lattice cell (axis and diagonal neighbours).
pub fn dilate(mesh: &MeshGraph, mask: &[bool]) -> Vec<bool> {
    let h = mesh.h();
    let mut out = mask.to_vec();
    for i in 0..mesh.node_count() {
        if !mask[i] {
            continue;
        }
        let p = mesh.point(i);
        if mesh.dim() != 2 {
            out[i] = true;
            continue;
        }
        for dx in [-1.0, 0.0, 1.0] {
            for dy in [-1.0, 0.0, 1.0] {
                let q = [p[0] + dx * h, p[1] + dy * h];
                if let Some(ids) = mesh.lattice_nodes(&q) {
                    for &j in ids {
                        out[j as usize] = true;
                    }
                }
            }
        }
    }
    out
}

/// Agreement of two masks up to one cell, on the nodes where `defined`:
/// the fraction of `A ∪ B` lying within one cell of the other mask.
pub fn dilated_jaccard(mesh: &MeshGraph, a: &[bool], b: &[bool], defined: &[bool]) -> f64 {
    let da = dilate(mesh, a);
    let db = dilate(mesh, b);
    let (mut union, mut agree) = (0usize, 0usize);
    for i in 0..a.len() {
        if !defined[i] || !(a[i] || b[i]) {
            continue;
        }
        union += 1;
        if (a[i] && db[i]) || (b[i] && da[i]) {
            if (!a[i] || db[i]) && (!b[i] || da[i]) {
                agree += 1;
            }
        }
    }
    if union == 0 {
        1.0
    } else {
        agree as f64 / union as f64
    }
}

/// Fraction of the `defined` nodes of `a` that lie in the one-cell dilation of `b`.
pub fn dilated_containment(mesh: &MeshGraph, a: &[bool], b: &[bool], defined: &[bool]) -> f64 {
    let db = dilate(mesh, b);
    let (mut total, mut inside) = (0usize, 0usize);
    for i in 0..a.len() {
        if defined[i] && a[i] {
            total += 1;
            inside += db[i] as usize;
        }
    }
    if total == 0 {
        1.0
    } else {
        inside as f64 / total as f64
    }
}
