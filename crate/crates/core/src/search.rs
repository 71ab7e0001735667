//! Direction searches over the unit circle and the unit sphere.
//!
//! Every objective maximized here is quasi-concave along the circle (a
//! linear functional over the boundary of a convex body, or a positively
//! homogeneous concave function), so a coarse scan followed by golden-section
//! refinement around the best sample finds the global maximum.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Default coarse sample count for circle scans.
pub const DEFAULT_COARSE: usize = 96;
/// Default angular tolerance for golden-section refinement.
pub const DEFAULT_ANGLE_TOL: f64 = 1e-10;

/// Maximizes `f(θ)` over `[0, 2π)`. Returns `(θ*, f(θ*))`.
pub fn maximize_on_circle<F>(mut f: F, coarse: usize, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = coarse.max(8);
    let step = std::f64::consts::TAU / n as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..n {
        let t = i as f64 * step;
        let v = f(t)?;
        if v > best.1 {
            best = (t, v);
        }
    }
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid)?;
    for cand in [(mid, fm), (c, fc), (d, fd)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best)
}

/// `n` nearly uniform points on the unit sphere (spherical Fibonacci lattice).
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let t = golden * i as f64;
            [r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

/// Unit directions used for sampling: `n` equispaced angles in 2D, a
/// Fibonacci lattice in 3D, the two signs in 1D.
pub fn unit_directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => fibonacci_sphere(n).into_iter().map(|p| p.to_vec()).collect(),
    }
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Multi-start local ascent over the unit sphere.
pub fn maximize_on_sphere<F>(mut f: F, samples: usize, tol: f64) -> Result<([f64; 3], f64)>
where
    F: FnMut(&[f64; 3]) -> Result<f64>,
{
    let pts = fibonacci_sphere(samples.max(32));
    let mut scored = Vec::with_capacity(pts.len());
    for p in pts {
        let v = f(&p)?;
        scored.push((v, p));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let spacing = (4.0 * std::f64::consts::PI / scored.len() as f64).sqrt();
    let mut best = (scored[0].1, scored[0].0);
    for &(v0, p0) in scored.iter().take(4) {
        let (mut p, mut v) = (p0, v0);
        let mut step = spacing;
        while step > tol {
            // tangent frame at p
            let helper = if p[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
            let t1 = normalize3(cross(p, helper));
            let t2 = cross(p, t1);
            let mut improved = false;
            for (a, b) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let cand = normalize3([
                    p[0] + step * (a * t1[0] + b * t2[0]),
                    p[1] + step * (a * t1[1] + b * t2[1]),
                    p[2] + step * (a * t1[2] + b * t2[2]),
                ]);
                let cv = f(&cand)?;
                if cv > v {
                    p = cand;
                    v = cv;
                    improved = true;
                    break;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if v > best.1 {
            best = (p, v);
        }
    }
    Ok(best)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
