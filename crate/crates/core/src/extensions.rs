//! Maximal and minimal extensions of boundary data, the uniqueness set and
//! coincidence geodesics.
//!
//! With `d` the graph quasi-distance,
//! `S⁺(x) = min_y g(y) + d(y, x)` and `S⁻(x) = max_y g(y) − d(x, y)`
//! over boundary nodes `y`.

use std::sync::{Arc, OnceLock};

use crate::convex::ConvexFieldSpec;
use crate::domain::{build_domain, DomainSpec};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geodesic::{quasi_dist, sweep, Direction, PathPolyline, Sweep};
use crate::mesh::{discretize, MeshGraph, ScalarField, Stencil};
use crate::tolerance::{Tolerance, ROUNDOFF};

/// A mesh with a boundary datum `g`.
#[derive(Debug)]
pub struct ExtensionProblem {
    mesh: MeshGraph,
    datum: Expr,
    g: Vec<f64>,
    boundary: Vec<usize>,
    tol: Tolerance,
    admissibility: OnceLock<AdmissibilityReport>,
}

impl ExtensionProblem {
    /// Samples `datum` at the boundary nodes of `mesh`.
    pub fn new(mesh: MeshGraph, datum: Expr) -> Result<Self> {
        let boundary = mesh.boundary_nodes();
        if boundary.is_empty() {
            return Err(Error::Geometry("mesh has no boundary nodes".into()));
        }
        let mut g = vec![f64::NAN; mesh.node_count()];
        for &b in &boundary {
            let v = datum.eval(mesh.point(b));
            if !v.is_finite() {
                return Err(Error::Model(format!(
                    "datum {} is not finite at boundary point {:?}",
                    datum,
                    mesh.point(b)
                )));
            }
            g[b] = v;
        }
        let tol = Tolerance::for_mesh(&mesh);
        Ok(Self {
            mesh,
            datum,
            g,
            boundary,
            tol,
            admissibility: OnceLock::new(),
        })
    }

    /// Validates the domain and field, discretizes, and samples the datum.
    pub fn build(domain: &DomainSpec, field: &ConvexFieldSpec, datum: Expr, h: f64, stencil: Stencil) -> Result<Self> {
        let d = Arc::new(build_domain(domain)?);
        let f = Arc::new(field.build()?.with_domain(d.clone())?);
        Self::new(discretize(d, f, h, stencil)?, datum)
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self.admissibility = OnceLock::new();
        self
    }

    pub fn mesh(&self) -> &MeshGraph {
        &self.mesh
    }

    pub fn datum(&self) -> &Expr {
        &self.datum
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    /// `g` at a boundary node.
    pub fn g(&self, node: usize) -> Option<f64> {
        let v = self.g[node];
        v.is_finite().then_some(v)
    }

    fn sources(&self, sign: f64) -> Vec<(usize, f64)> {
        self.boundary.iter().map(|&b| (b, sign * self.g[b])).collect()
    }
}

/// Outcome of the 1-Lipschitz test `g(y₂) − g(y₁) ≤ d(y₁, y₂) + tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub ok: bool,
    /// Most violating pair `(y₁, y₂)`.
    pub worst: (usize, usize),
    /// `max g(y₂) − g(y₁) − d(y₁, y₂)` over boundary pairs.
    pub margin: f64,
    pub tol: f64,
}

/// Checks every boundary pair at once: the sweep with offsets `g` gives
/// `min_y₁ g(y₁) + d(y₁, y₂)` at each `y₂`, so its deficit below `g(y₂)` is
/// the worst margin over all `y₁`.
pub fn admissibility_check(problem: &ExtensionProblem) -> Result<AdmissibilityReport> {
    if let Some(r) = problem.admissibility.get() {
        return Ok(r.clone());
    }
    let r = admissibility_with(&problem.mesh, &problem.boundary, &problem.g, problem.tol.discrete())?;
    Ok(problem.admissibility.get_or_init(|| r).clone())
}

/// Admissibility of boundary values `g` (indexed by node) on `mesh`.
pub fn admissibility_with(mesh: &MeshGraph, boundary: &[usize], g: &[f64], tol: f64) -> Result<AdmissibilityReport> {
    let sources: Vec<(usize, f64)> = boundary.iter().map(|&b| (b, g[b])).collect();
    let s = sweep(mesh, &sources, Direction::FromSources)?;
    let mut margin = f64::NEG_INFINITY;
    let mut worst = (boundary[0], boundary[0]);
    for &y2 in boundary {
        let m = g[y2] - s.values[y2];
        if m > margin {
            margin = m;
            worst = (s.source_of(y2).unwrap_or(y2), y2);
        }
    }
    Ok(AdmissibilityReport {
        ok: margin <= tol,
        worst,
        margin,
        tol,
    })
}

/// An extension field with the sweep that produced it.
#[derive(Clone, Debug)]
pub struct Extension {
    pub values: ScalarField,
    pub sweep: Sweep,
}

impl Extension {
    pub fn get(&self, node: usize) -> f64 {
        self.values.get(node)
    }
}

fn require_admissible(problem: &ExtensionProblem, override_admissibility: bool) -> Result<bool> {
    let r = admissibility_check(problem)?;
    if !r.ok && !override_admissibility {
        return Err(Error::Admissibility {
            from: r.worst.0,
            to: r.worst.1,
            margin: r.margin,
        });
    }
    Ok(r.ok)
}

/// `S⁺`. Boundary nodes carry `g` exactly when the datum is admissible.
pub fn maximal_extension(problem: &ExtensionProblem, override_admissibility: bool) -> Result<Extension> {
    let ok = require_admissible(problem, override_admissibility)?;
    let s = sweep(&problem.mesh, &problem.sources(1.0), Direction::FromSources)?;
    let mut values = s.values.clone();
    if ok {
        for &b in &problem.boundary {
            values[b] = problem.g[b];
        }
    }
    Ok(Extension {
        values: ScalarField::new(&problem.mesh, values)?,
        sweep: s,
    })
}

/// `S⁻`, as the negated sweep with offsets `−g` on the reversed graph.
pub fn minimal_extension(problem: &ExtensionProblem, override_admissibility: bool) -> Result<Extension> {
    let ok = require_admissible(problem, override_admissibility)?;
    let s = sweep(&problem.mesh, &problem.sources(-1.0), Direction::ToSources)?;
    let mut values: Vec<f64> = s.values.iter().map(|v| -v).collect();
    if ok {
        for &b in &problem.boundary {
            values[b] = problem.g[b];
        }
    }
    Ok(Extension {
        values: ScalarField::new(&problem.mesh, values)?,
        sweep: s,
    })
}

/// Nodes where `S⁺ − S⁻ ≤ ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessMask {
    pub mask: Vec<bool>,
    pub eps: f64,
    mesh_id: u64,
}

impl UniquenessMask {
    pub fn from_mask(mesh: &MeshGraph, mask: Vec<bool>, eps: f64) -> Result<Self> {
        if mask.len() != mesh.node_count() {
            return Err(Error::Argument("mask size does not match the mesh".into()));
        }
        Ok(Self {
            mask,
            eps,
            mesh_id: mesh.id(),
        })
    }

    pub fn contains(&self, node: usize) -> bool {
        self.mask[node]
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Fraction of the mesh's interior nodes that are marked.
    pub fn interior_coverage(&self, mesh: &MeshGraph) -> f64 {
        let interior = mesh.interior_nodes();
        let marked = interior.iter().filter(|&&i| self.mask[i]).count();
        marked as f64 / interior.len().max(1) as f64
    }

    pub fn interior_count(&self, mesh: &MeshGraph) -> usize {
        mesh.interior_nodes().into_iter().filter(|&i| self.mask[i]).count()
    }
}

pub fn uniqueness_set(splus: &ScalarField, sminus: &ScalarField, eps: f64) -> Result<UniquenessMask> {
    splus.check_same_mesh(sminus)?;
    if !(eps >= 0.0) {
        return Err(Error::Argument("uniqueness ε must be nonnegative".into()));
    }
    if let Some(i) = (0..splus.len()).find(|&i| splus.get(i) < sminus.get(i) - eps.max(ROUNDOFF)) {
        return Err(Error::Precondition(format!(
            "S⁺ < S⁻ at node {i} ({} < {}); the datum is not admissible",
            splus.get(i),
            sminus.get(i)
        )));
    }
    let mask = (0..splus.len())
        .map(|i| splus.get(i) - sminus.get(i) <= eps)
        .collect();
    Ok(UniquenessMask {
        mask,
        eps,
        mesh_id: splus.mesh_id(),
    })
}

/// Checks on a coincidence geodesic through `x0`.
#[derive(Clone, Debug)]
pub struct GeodesicReport {
    pub x0: usize,
    pub y1: usize,
    pub y2: usize,
    pub finsler_length: f64,
    /// `d(y₁, y₂)`.
    pub distance: f64,
    /// `max (S⁺ − S⁻)` along the curve.
    pub max_gap: f64,
    /// `max |ΔS⁺ / w − 1|` over segments: the discrete curve derivative of
    /// `S⁺` against `φ⁰(γ, γ̇)`.
    pub max_derivative_error: f64,
}

impl GeodesicReport {
    pub fn is_geodesic(&self, tol: f64) -> bool {
        (self.finsler_length - self.distance).abs() <= tol
    }
}

/// Concatenates the `S⁺` chain from its source `y₁` to `x0` with the `S⁻`
/// chain from `x0` to its source `y₂`.
pub fn coincidence_geodesic(
    problem: &ExtensionProblem,
    splus: &Extension,
    sminus: &Extension,
    x0: usize,
    eps: f64,
) -> Result<(PathPolyline, GeodesicReport)> {
    let mesh = &problem.mesh;
    splus.values.check_mesh(mesh)?;
    sminus.values.check_mesh(mesh)?;
    let gap0 = splus.get(x0) - sminus.get(x0);
    if gap0 > eps {
        return Err(Error::Precondition(format!(
            "node {x0} is not in the uniqueness set (S⁺ − S⁻ = {gap0:.3e} > {eps:.3e})"
        )));
    }
    let mut nodes = splus.sweep.chain(x0);
    nodes.reverse();
    nodes.extend(sminus.sweep.chain(x0).into_iter().skip(1));
    let path = PathPolyline::from_nodes(mesh, nodes.clone())?;
    let (y1, y2) = (nodes[0], *nodes.last().unwrap());
    let distance = quasi_dist(mesh, y1, y2)?.value;
    let max_gap = nodes
        .iter()
        .map(|&i| splus.get(i) - sminus.get(i))
        .fold(0.0, f64::max);
    let mut max_derivative_error: f64 = 0.0;
    for w in nodes.windows(2) {
        let wt = mesh.weight(w[0], w[1]).expect("path edges exist");
        let slope = (splus.get(w[1]) - splus.get(w[0])) / wt;
        max_derivative_error = max_derivative_error.max((slope - 1.0).abs());
    }
    let report = GeodesicReport {
        x0,
        y1,
        y2,
        finsler_length: path.finsler_length(),
        distance,
        max_gap,
        max_derivative_error,
    };
    Ok((path, report))
}

/// Discrete validation of a candidate solution `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateReport {
    /// `max |u − g|` on boundary nodes.
    pub boundary_error: f64,
    /// `max (u(v) − u(w)) / w(w→v)` over edges; at most 1 for feasible `u`.
    pub worst_edge_ratio: f64,
    pub worst_edge: (usize, usize),
    pub ok: bool,
}

/// Boundary agreement and per-edge feasibility `u(v) − u(w) ≤ w(w→v)`.
pub fn validate_candidate(problem: &ExtensionProblem, u: &ScalarField, tol: f64) -> Result<CandidateReport> {
    let mesh = &problem.mesh;
    u.check_mesh(mesh)?;
    let boundary_error = problem
        .boundary
        .iter()
        .map(|&b| (u.get(b) - problem.g[b]).abs())
        .fold(0.0, f64::max);
    let mut worst_edge_ratio = f64::NEG_INFINITY;
    let mut worst_edge = (0, 0);
    for (a, b, w) in mesh.edges() {
        let r = (u.get(b) - u.get(a)) / w;
        if r > worst_edge_ratio {
            worst_edge_ratio = r;
            worst_edge = (a, b);
        }
    }
    Ok(CandidateReport {
        boundary_error,
        worst_edge_ratio,
        worst_edge,
        ok: boundary_error <= tol && worst_edge_ratio <= 1.0 + tol,
    })
}

/// Largest violations of `S⁻ ≤ u ≤ S⁺`: `(max S⁻ − u, max u − S⁺)`.
pub fn sandwich_violation(u: &ScalarField, splus: &ScalarField, sminus: &ScalarField) -> Result<(f64, f64)> {
    u.check_same_mesh(splus)?;
    u.check_same_mesh(sminus)?;
    let mut below = f64::NEG_INFINITY;
    let mut above = f64::NEG_INFINITY;
    for i in 0..u.len() {
        below = below.max(sminus.get(i) - u.get(i));
        above = above.max(u.get(i) - splus.get(i));
    }
    Ok((below, above))
}
