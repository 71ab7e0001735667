use std::sync::Arc;

use finsler_core::convex::{hausdorff_dist, ConvexSetInstance};
use finsler_core::export::fmt12;
use finsler_core::extensions::{maximal_extension, minimal_extension, sandwich_violation, validate_candidate, ExtensionProblem};
use finsler_core::geodesic::{quasi_dist, sweep, Direction};
use finsler_core::regularity::{box_region, offset_ladder, second_difference_constants};
use finsler_core::supremal::{level_set_field, SupremalProblem, SupremandSpec};
use finsler_core::{build_domain, discretize, ConvexField, Domain, DomainSpec, Expr, MeshGraph, ScalarField, Shape, Stencil};
use proptest::prelude::*;

fn square() -> Arc<Domain> {
    Arc::new(build_domain(&DomainSpec::unit_square()).unwrap())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Star-shaped vertex sets around the origin; the hull is the set.
fn polygon() -> impl Strategy<Value = Shape> {
    prop::collection::vec(0.5f64..2.0, 3..9).prop_map(|radii| {
        let n = radii.len();
        let pts: Vec<Vec<f64>> = radii
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                vec![r * t.cos(), r * t.sin()]
            })
            .collect();
        Shape::polytope(&pts).unwrap()
    })
}

fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (0.5f64..2.0).prop_map(Shape::ball),
        (0.5f64..3.0, 0.5f64..3.0, -0.4f64..0.4)
            .prop_map(|(a, b, c)| Shape::ellipsoid(&[vec![a, c], vec![c, b]]).unwrap()),
        polygon(),
    ]
}

fn instance(shape: Shape) -> ConvexSetInstance {
    ConvexSetInstance::new(shape, 1.0, &[0.0, 0.0], 0.1, 10.0).unwrap()
}

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 2).prop_filter("nonzero", |v| v[0].hypot(v[1]) > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauge_and_support_are_sublinear(s in shape(), p in vec2(), q in vec2(), t in 0.01f64..20.0) {
        let k = instance(s);
        let tp: Vec<f64> = p.iter().map(|v| t * v).collect();
        let pq: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a + b).collect();
        for f in [ConvexSetInstance::gauge, ConvexSetInstance::support] {
            let (fp, fq) = (f(&k, &p).unwrap(), f(&k, &q).unwrap());
            prop_assert!((f(&k, &tp).unwrap() - t * fp).abs() <= 1e-9 * (1.0 + t * fp));
            prop_assert!(f(&k, &pq).unwrap() <= fp + fq + 1e-9);
        }
    }

    #[test]
    fn duality_sandwich_and_argmax(s in shape(), p in vec2(), q in vec2()) {
        let k = instance(s);
        let (n, m) = (p[0].hypot(p[1]), k.m());
        let g = k.gauge(&p).unwrap();
        prop_assert!(g >= n / m - 1e-9 && g <= n / k.alpha() + 1e-9);
        let s = k.support(&q).unwrap();
        prop_assert!(dot(&p, &q) <= g * s + 1e-9 * (1.0 + g * s));
        let star = k.argmax(&q).unwrap();
        prop_assert!((k.gauge(&star).unwrap() - 1.0).abs() <= 1e-7);
        prop_assert!((dot(&star, &q) - s).abs() <= 1e-7 * (1.0 + s));
        prop_assert!((k.bipolar_gauge(&p).unwrap() - g).abs() <= 1e-6 * (1.0 + g));
    }

    #[test]
    fn scaled_field_is_hausdorff_lipschitz(x in prop::collection::vec(0.0f64..1.0, 2), y in prop::collection::vec(0.0f64..1.0, 2)) {
        let f = ConvexField::new(Shape::ball(1.0), Expr::parse("1 + r2").unwrap(), 2, 1.0, 3.0)
            .unwrap()
            .with_domain(square())
            .unwrap();
        let dh = hausdorff_dist(&f.instance_at(&x).unwrap(), &f.instance_at(&y).unwrap()).unwrap();
        let fx = 1.0 + x[0] * x[0] + x[1] * x[1];
        let fy = 1.0 + y[0] * y[0] + y[1] * y[1];
        prop_assert!((dh - (fx - fy).abs()).abs() <= 1e-6);
        prop_assert!(dh <= 2.0 * 2f64.sqrt() * (x[0] - y[0]).hypot(x[1] - y[1]) + 1e-9);
    }

    #[test]
    fn level_sets_scale_with_the_power(nu in 0.05f64..20.0, k in 1.0f64..4.0, p in vec2()) {
        let spec: SupremandSpec = serde_json::from_value(serde_json::json!({"H": "scaled_norm", "f": "1 + r2", "power": k})).unwrap();
        let x = [0.3, 0.6];
        let one = level_set_field(&spec, &square(), 1.0).unwrap().gauge_eval(&x, &p).unwrap();
        let at = level_set_field(&spec, &square(), nu).unwrap().gauge_eval(&x, &p).unwrap();
        prop_assert!((at * nu.powf(1.0 / k) - one).abs() <= 1e-9 * (1.0 + one));
    }

    #[test]
    fn homogeneous_level_gauge_tracks_the_supremand(mu in 0.1f64..5.0, x in prop::collection::vec(0.1f64..0.9, 2), p in vec2()) {
        let spec = SupremandSpec::scaled_norm(Expr::parse("1 + r2").unwrap());
        let field = level_set_field(&spec, &square(), mu).unwrap();
        let h = 1e-5;
        let f = 1.0 + x[0] * x[0] + x[1] * x[1];
        let n = p[0].hypot(p[1]);
        for i in 0..2 {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[i] += h;
            b[i] -= h;
            let fd = (field.gauge_eval(&a, &p).unwrap() - field.gauge_eval(&b, &p).unwrap()) / (2.0 * h);
            // ∇ₓH for H = |p|/f
            let dh = -n * 2.0 * x[i] / (f * f);
            prop_assert!((fd - dh / mu).abs() <= 1e-6 * (1.0 + n / mu));
        }
    }

    #[test]
    fn fmt12_round_trips(v in -1e12f64..1e12, e in -20i32..20) {
        let x = v * 10f64.powi(e);
        let back: f64 = fmt12(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-12 * x.abs());
    }
}

fn field_mesh(s: Shape, h: f64) -> MeshGraph {
    let k = instance(s.clone());
    let f = ConvexField::new(s, Expr::constant(1.0), 2, k.alpha(), k.m()).unwrap();
    discretize(square(), Arc::new(f), h, Stencil::Sixteen).unwrap()
}

fn node() -> impl Strategy<Value = usize> {
    0usize..81
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn graph_distance_axioms(s in shape(), a in node(), b in node(), c in node()) {
        let g = field_mesh(s, 1.0 / 8.0);
        let alpha = g.field().alpha();
        let dab = quasi_dist(&g, a, b).unwrap().value;
        prop_assert_eq!(quasi_dist(&g, a, a).unwrap().value, 0.0);
        let (pa, pb) = (g.point(a), g.point(b));
        prop_assert!(dab >= alpha * (pa[0] - pb[0]).hypot(pa[1] - pb[1]) - 1e-12);
        let via = quasi_dist(&g, a, c).unwrap().value + quasi_dist(&g, c, b).unwrap().value;
        prop_assert!(dab <= via + 1e-12);
    }

    #[test]
    fn extensions_of_admissible_linear_data(t in 0.0f64..std::f64::consts::TAU, slope in 0.0f64..1.0, s in shape()) {
        let g = field_mesh(s, 1.0 / 16.0);
        // d(x, y) ≥ α|y − x| makes any slope-α linear datum admissible
        let a = slope * g.field().alpha();
        let (e0, e1) = (a * t.cos(), a * t.sin());
        let datum = Expr::parse(&format!("{e0}*x + {e1}*y")).unwrap();
        let p = ExtensionProblem::new(g, datum).unwrap();
        let sp = maximal_extension(&p, false).unwrap();
        let sm = minimal_extension(&p, false).unwrap();
        let mesh = p.mesh();
        for &i in p.boundary_nodes() {
            prop_assert!((sp.get(i) - p.g(i).unwrap()).abs() <= 1e-12);
            prop_assert!((sm.get(i) - p.g(i).unwrap()).abs() <= 1e-12);
        }
        for i in 0..mesh.node_count() {
            prop_assert!(sm.get(i) <= sp.get(i) + 1e-12);
        }
        for (i, j, w) in mesh.edges() {
            prop_assert!(sp.get(j) - sp.get(i) <= w + 1e-12);
        }
        let u = ScalarField::from_fn(mesh, |q| e0 * q[0] + e1 * q[1]);
        if validate_candidate(&p, &u, 1e-12).unwrap().ok {
            let (below, above) = sandwich_violation(&u, &sp.values, &sm.values).unwrap();
            prop_assert!(below <= 1e-12 && above <= 1e-12);
        }
    }

    #[test]
    fn second_differences_see_no_curvature_in_affine_fields(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, q in 0.1f64..3.0) {
        let g = field_mesh(Shape::ball(1.0), 1.0 / 32.0);
        let region = box_region(&g, &[0.25, 0.25], &[0.75, 0.75]);
        let offs = offset_ladder(4.0 / 32.0, 2);
        let affine = ScalarField::from_fn(&g, |p| a * p[0] + b * p[1] + c);
        let e = second_difference_constants(&g, &affine, &region, &offs).unwrap();
        prop_assert!(e.c1 <= 1e-9 && e.c2 <= 1e-9);
        // u and −u swap the two constants
        let f = |p: &[f64]| q * ((p[0] - 0.4).powi(2) + a.signum() * (p[1] - 0.6).powi(2));
        let quad = ScalarField::from_fn(&g, f);
        let neg = ScalarField::from_fn(&g, |p| -f(p));
        let (e1, e2) = (
            second_difference_constants(&g, &quad, &region, &offs).unwrap(),
            second_difference_constants(&g, &neg, &region, &offs).unwrap(),
        );
        prop_assert!((e1.c1 - e2.c2).abs() <= 1e-9 && (e1.c2 - e2.c1).abs() <= 1e-9);
    }

    #[test]
    fn admissibility_is_monotone_in_the_level(nus in prop::collection::vec(0.05f64..3.0, 2)) {
        let p = SupremalProblem::new(
            SupremandSpec::scaled_norm(Expr::parse("1 + r2").unwrap()),
            square(),
            Expr::parse("x*y + 0.5*x").unwrap(),
            1.0 / 16.0,
            Stencil::Sixteen,
        )
        .unwrap();
        let (lo, hi) = (nus[0].min(nus[1]), nus[0].max(nus[1]));
        let a = p.admissibility_at(lo, true, 1e-9).unwrap();
        let b = p.admissibility_at(hi, true, 1e-9).unwrap();
        prop_assert!(!a.ok || b.ok);
    }

    #[test]
    fn sweeps_agree_with_pairwise_distances(s in shape(), a in node(), b in node()) {
        let g = field_mesh(s, 1.0 / 8.0);
        let from = sweep(&g, &[(a, 0.0)], Direction::FromSources).unwrap().into_field(&g);
        let to = sweep(&g, &[(b, 0.0)], Direction::ToSources).unwrap().into_field(&g);
        let d = quasi_dist(&g, a, b).unwrap().value;
        prop_assert!((from.get(b) - d).abs() <= 1e-12 && (to.get(a) - d).abs() <= 1e-12);
    }
}
