//! Second-difference and gradient diagnostics for node fields.

use crate::error::{Error, Result};
use crate::extensions::UniquenessMask;
use crate::mesh::{MeshGraph, ScalarField};

/// Estimated constants with `u(x+h) + u(x−h) − 2u(x) ≤ C₁|h|²` and
/// `≥ −C₂|h|²` over the probes.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondDifferenceEstimate {
    pub c1: f64,
    pub c2: f64,
    pub probes: usize,
    /// Probes whose offset left the lattice or hit a duplicated slit point.
    pub skipped: usize,
}

pub fn second_difference_constants(
    mesh: &MeshGraph,
    u: &ScalarField,
    region: &[usize],
    offsets: &[Vec<f64>],
) -> Result<SecondDifferenceEstimate> {
    u.check_mesh(mesh)?;
    let dim = mesh.dim();
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    let (mut probes, mut skipped) = (0, 0);
    let mut plus = vec![0.0; dim];
    let mut minus = vec![0.0; dim];
    for &x in region {
        let p = mesh.point(x);
        for off in offsets {
            if off.len() != dim {
                return Err(Error::Argument("offset dimension mismatch".into()));
            }
            for i in 0..dim {
                plus[i] = p[i] + off[i];
                minus[i] = p[i] - off[i];
            }
            let (Some(a), Some(b)) = (mesh.lattice_node(&plus), mesh.lattice_node(&minus)) else {
                skipped += 1;
                continue;
            };
            let h2: f64 = off.iter().map(|v| v * v).sum();
            let d = (u.get(a) + u.get(b) - 2.0 * u.get(x)) / h2;
            hi = hi.max(d);
            lo = lo.min(d);
            probes += 1;
        }
    }
    Ok(SecondDifferenceEstimate {
        c1: hi.max(0.0),
        c2: (-lo).max(0.0),
        probes,
        skipped,
    })
}

/// Offsets `{s, s/2, s/4}` along the axes and diagonals.
pub fn offset_ladder(step: f64, dim: usize) -> Vec<Vec<f64>> {
    let dirs: Vec<Vec<f64>> = if dim == 2 {
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]]
    } else {
        (0..dim)
            .map(|i| (0..dim).map(|j| (i == j) as i32 as f64).collect())
            .collect()
    };
    let mut out = Vec::new();
    for k in [1.0, 0.5, 0.25] {
        for d in &dirs {
            out.push(d.iter().map(|v| v * step * k).collect());
        }
    }
    out
}

/// Non-boundary nodes inside the box `[lo, hi]`.
pub fn box_region(mesh: &MeshGraph, lo: &[f64], hi: &[f64]) -> Vec<usize> {
    mesh.interior_nodes()
        .into_iter()
        .filter(|&i| {
            let p = mesh.point(i);
            p.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= a - 1e-12 && *v <= b + 1e-12)
        })
        .collect()
}

/// Central-difference gradient at a lattice node; `None` without a full
/// axis stencil.
pub fn gradient(mesh: &MeshGraph, u: &ScalarField, node: usize) -> Option<Vec<f64>> {
    let h = mesh.h();
    let p = mesh.point(node).to_vec();
    mesh.lattice_node(&p)?;
    let mut g = Vec::with_capacity(p.len());
    let mut q = p.clone();
    for i in 0..p.len() {
        q[i] = p[i] + h;
        let a = mesh.lattice_node(&q)?;
        q[i] = p[i] - h;
        let b = mesh.lattice_node(&q)?;
        q[i] = p[i];
        g.push((u.get(a) - u.get(b)) / (2.0 * h));
    }
    Some(g)
}

fn vdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Gradients of `u` on the masked nodes.
#[derive(Clone, Debug)]
pub struct GradientReport {
    pub nodes: Vec<usize>,
    pub gradients: Vec<Vec<f64>>,
    /// Largest `|∇u(a) − ∇u(b)|` over masked axis neighbours `a, b`.
    pub max_jump: f64,
    /// Largest `|∇u − ∇v|` on the mask, per comparison field `v`.
    pub max_discrepancy: Vec<f64>,
    /// Masked nodes without a full stencil.
    pub skipped: usize,
}

impl GradientReport {
    /// Largest `|∇u − e|` over the reported nodes.
    pub fn max_deviation_from(&self, e: &[f64]) -> f64 {
        self.gradients.iter().map(|g| vdist(g, e)).fold(0.0, f64::max)
    }
}

pub fn gradient_on_uniqueness(
    mesh: &MeshGraph,
    u: &ScalarField,
    mask: &UniquenessMask,
    compare: &[&ScalarField],
) -> Result<GradientReport> {
    u.check_mesh(mesh)?;
    if mask.mesh_id() != mesh.id() {
        return Err(Error::Argument("mask belongs to a different mesh".into()));
    }
    if mask.count() == 0 {
        return Err(Error::Precondition("uniqueness mask is empty".into()));
    }
    for v in compare {
        v.check_mesh(mesh)?;
    }
    let mut grads: Vec<Option<Vec<f64>>> = vec![None; mesh.node_count()];
    let mut nodes = Vec::new();
    let mut gradients = Vec::new();
    let mut skipped = 0;
    let mut max_discrepancy = vec![0.0f64; compare.len()];
    for i in 0..mesh.node_count() {
        if !mask.contains(i) || mesh.role(i).is_boundary() {
            continue;
        }
        match gradient(mesh, u, i) {
            Some(g) => {
                for (k, v) in compare.iter().enumerate() {
                    if let Some(gv) = gradient(mesh, v, i) {
                        max_discrepancy[k] = max_discrepancy[k].max(vdist(&g, &gv));
                    }
                }
                nodes.push(i);
                gradients.push(g.clone());
                grads[i] = Some(g);
            }
            None => skipped += 1,
        }
    }
    let h = mesh.h();
    let mut max_jump: f64 = 0.0;
    for &i in &nodes {
        let p = mesh.point(i).to_vec();
        for axis in 0..p.len() {
            let mut q = p.clone();
            q[axis] += h;
            if let Some(j) = mesh.lattice_node(&q) {
                if let (Some(a), Some(b)) = (&grads[i], &grads[j]) {
                    max_jump = max_jump.max(vdist(a, b));
                }
            }
        }
    }
    Ok(GradientReport {
        nodes,
        gradients,
        max_jump,
        max_discrepancy,
        skipped,
    })
}

/// One-sided slopes `((u(x) − u(x−θ))/|θ|, (u(x+θ) − u(x))/|θ|)` along a
/// lattice offset `θ`.
pub fn one_sided_slopes(mesh: &MeshGraph, u: &ScalarField, node: usize, theta: &[f64]) -> Option<(f64, f64)> {
    let p = mesh.point(node);
    let fwd: Vec<f64> = p.iter().zip(theta).map(|(a, b)| a + b).collect();
    let bwd: Vec<f64> = p.iter().zip(theta).map(|(a, b)| a - b).collect();
    let a = mesh.lattice_node(&fwd)?;
    let b = mesh.lattice_node(&bwd)?;
    let len = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    Some(((u.get(node) - u.get(b)) / len, (u.get(a) - u.get(node)) / len))
}

/// Largest amount by which `∇u·θ/|θ|` leaves the interval spanned by the
/// one-sided slopes along the axis and diagonal directions, over masked nodes.
pub fn slope_bracket_violation(mesh: &MeshGraph, u: &ScalarField, mask: &UniquenessMask) -> Result<f64> {
    u.check_mesh(mesh)?;
    let h = mesh.h();
    let dirs: Vec<Vec<f64>> = offset_ladder(h, mesh.dim()).into_iter().take(if mesh.dim() == 2 { 4 } else { 3 }).collect();
    let mut worst: f64 = 0.0;
    for i in 0..mesh.node_count() {
        if !mask.contains(i) {
            continue;
        }
        let Some(g) = gradient(mesh, u, i) else { continue };
        for theta in &dirs {
            let Some((b, f)) = one_sided_slopes(mesh, u, i, theta) else { continue };
            let len = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
            let c: f64 = g.iter().zip(theta).map(|(a, t)| a * t).sum::<f64>() / len;
            let (lo, hi) = (b.min(f), b.max(f));
            worst = worst.max(lo - c).max(c - hi);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{ConvexField, Shape};
    use crate::domain::{build_domain, DomainSpec};
    use crate::mesh::{discretize, Stencil};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn square(h: f64) -> MeshGraph {
        let d = Arc::new(build_domain(&DomainSpec::unit_square()).unwrap());
        let f = Arc::new(ConvexField::constant(Shape::ball(1.0), 2).unwrap());
        discretize(d, f, h, Stencil::Eight).unwrap()
    }

    #[test]
    fn affine_and_quadratic() {
        let g = square(1.0 / 32.0);
        let region = box_region(&g, &[0.25, 0.25], &[0.75, 0.75]);
        let offs = offset_ladder(4.0 / 32.0, 2);
        let affine = ScalarField::from_fn(&g, |p| 0.3 * p[0] - 1.7 * p[1] + 2.0);
        let e = second_difference_constants(&g, &affine, &region, &offs).unwrap();
        assert!(e.c1 <= 1e-10 && e.c2 <= 1e-10);
        assert_eq!(e.skipped, 0);
        let quad = ScalarField::from_fn(&g, |p| -((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)));
        let e = second_difference_constants(&g, &quad, &region, &offs).unwrap();
        assert!(e.c1 <= 1e-9);
        assert_relative_eq!(e.c2, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn probes_off_the_lattice_are_skipped() {
        let g = square(0.25);
        let u = ScalarField::from_fn(&g, |p| p[0]);
        let region = vec![g.lattice_node(&[0.25, 0.5]).unwrap()];
        let e = second_difference_constants(&g, &u, &region, &[vec![0.5, 0.0], vec![0.1, 0.0]]).unwrap();
        assert_eq!((e.probes, e.skipped), (0, 2));
    }

    #[test]
    fn empty_mask_is_rejected() {
        let g = square(0.25);
        let u = ScalarField::from_fn(&g, |p| p[0]);
        let mask = UniquenessMask::from_mask(&g, vec![false; g.node_count()], 0.0).unwrap();
        assert!(matches!(
            gradient_on_uniqueness(&g, &u, &mask, &[]),
            Err(Error::Precondition(_))
        ));
    }
}
