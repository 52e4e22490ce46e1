use std::sync::Arc;

use calabi_core::curvature::{
    edge_curvature_in_chart, extrapolate_to_edge, interior_probe_points, rm_norm, scalar_curvature,
    EdgeComponent, FacetChart, InverseHessianDerivatives,
};
use calabi_core::{AffineFunction, DelzantPolygon, Poly2, SymplecticPotential};

fn hexagon() -> Arc<DelzantPolygon> {
    Arc::new(
        DelzantPolygon::from_vertices(&[[1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 2.0], [0.0, 2.0], [0.0, 1.0]])
            .unwrap(),
    )
}

fn potentials() -> Vec<SymplecticPotential> {
    let f = Poly2::from_terms(&[(3, 0, 0.05), (2, 1, 0.05), (1, 2, -0.03), (0, 3, 0.04), (2, 2, 0.05)]);
    let polys = [
        Arc::new(DelzantPolygon::unit_square()),
        Arc::new(DelzantPolygon::standard_simplex()),
        hexagon(),
    ];
    polys
        .iter()
        .flat_map(|p| {
            [
                SymplecticPotential::perturbed(p.clone(), 8, 0.05),
                SymplecticPotential::with_raw_smooth(p.clone(), 8, &f),
            ]
        })
        .collect()
}

fn comp(d: &InverseHessianDerivatives, c: EdgeComponent) -> f64 {
    match c {
        EdgeComponent::Tangential => d.component(0, 0, 0, 0),
        EdgeComponent::Mixed => d.component(0, 1, 0, 1),
        EdgeComponent::Normal => d.component(1, 1, 1, 1),
        EdgeComponent::RmSquared => d.rm_norm_squared(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn edge_vs_interior(component: EdgeComponent, tol: f64) {
    for u in potentials() {
        for k in 0..u.polygon().len() {
            let chart = FacetChart::new(u.polygon(), k);
            for i in 0..10 {
                let s = (0.05 + 0.09 * i as f64) * chart.length;
                let edge = edge_curvature_in_chart(&u, &chart, s, component).unwrap();
                let inner = extrapolate_to_edge(&u, &chart, s, 1e-3, |d| comp(d, component)).unwrap();
                assert!(rel(edge, inner) < tol, "{component:?} facet {k} s {s}: {edge} vs {inner}");
            }
        }
    }
}

#[test]
fn tangential_edge_value_matches_interior_limit() {
    edge_vs_interior(EdgeComponent::Tangential, 1e-6);
}

#[test]
fn mixed_edge_value_matches_interior_limit() {
    edge_vs_interior(EdgeComponent::Mixed, 1e-6);
}

#[test]
fn normal_edge_value_matches_interior_limit() {
    edge_vs_interior(EdgeComponent::Normal, 1e-6);
}

#[test]
fn boundary_rm_matches_interior_limit() {
    edge_vs_interior(EdgeComponent::RmSquared, 1e-3);
}

#[test]
fn curvature_is_lattice_invariant() {
    let maps = [([[1, 1], [0, 1]], [0.5, 1.0]), ([[0, -1], [1, 0]], [3.0, -2.0]), ([[2, 1], [1, 1]], [0.0, 0.0])];
    for u in potentials() {
        let points = interior_probe_points(u.polygon(), 40, 7);
        for (a, t) in maps {
            let v = u.lattice_transform(a, t).unwrap();
            for &x in &points {
                let y = [
                    a[0][0] as f64 * x[0] + a[0][1] as f64 * x[1] + t[0],
                    a[1][0] as f64 * x[0] + a[1][1] as f64 * x[1] + t[1],
                ];
                let (r0, r1) = (scalar_curvature(&u, x).unwrap(), scalar_curvature(&v, y).unwrap());
                assert!((r0 - r1).abs() <= 1e-9 * r0.abs().max(1.0), "R {r0} vs {r1}");
                let (m0, m1) = (rm_norm(&u, x).unwrap(), rm_norm(&v, y).unwrap());
                assert!((m0 - m1).abs() <= 1e-9 * m0.max(1.0), "|Rm| {m0} vs {m1}");
            }
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-5;
    for u in potentials() {
        for x in interior_probe_points(u.polygon(), 30, 11) {
            if u.polygon().min_facet_value(x) < 0.02 {
                continue;
            }
            let jet = u.eval_derivatives(x, 1).unwrap();
            let f = |dx: f64, dy: f64| u.value([x[0] + dx, x[1] + dy]).unwrap();
            let grad = [(f(h, 0.0) - f(-h, 0.0)) / (2.0 * h), (f(0.0, h) - f(0.0, -h)) / (2.0 * h)];
            for i in 0..2 {
                assert!(rel(grad[i], jet.grad[i]) < 1e-6, "{grad:?} vs {:?}", jet.grad);
            }
        }
    }
}

/// Second differences of values at h = 1e-5 drown in f64 roundoff
/// (about 4 eps |u| / h^2), so the Hessian uses a fourth-order stencil at 1e-4.
#[test]
fn hessian_matches_finite_differences() {
    let h = 1e-4;
    let w = [(-2.0, -1.0 / 12.0), (-1.0, 4.0 / 3.0), (0.0, -5.0 / 2.0), (1.0, 4.0 / 3.0), (2.0, -1.0 / 12.0)];
    let d1 = [(-2.0, 1.0 / 12.0), (-1.0, -2.0 / 3.0), (1.0, 2.0 / 3.0), (2.0, -1.0 / 12.0)];
    for u in potentials() {
        for x in interior_probe_points(u.polygon(), 30, 11) {
            if u.polygon().min_facet_value(x) < 0.02 {
                continue;
            }
            let jet = u.eval_derivatives(x, 2).unwrap();
            let f = |dx: f64, dy: f64| u.value([x[0] + dx * h, x[1] + dy * h]).unwrap();
            let fxx: f64 = w.iter().map(|&(k, c)| c * f(k, 0.0)).sum::<f64>() / (h * h);
            let fyy: f64 = w.iter().map(|&(k, c)| c * f(0.0, k)).sum::<f64>() / (h * h);
            let fxy: f64 = d1
                .iter()
                .flat_map(|&(i, a)| d1.iter().map(move |&(j, b)| (i, j, a * b)))
                .map(|(i, j, c)| c * f(i, j))
                .sum::<f64>()
                / (h * h);
            let scale = jet.hess[0][0].abs().max(jet.hess[1][1].abs());
            for (fd, want) in [(fxx, jet.hess[0][0]), (fyy, jet.hess[1][1]), (fxy, jet.hess[0][1])] {
                assert!((fd - want).abs() < 1e-6 * scale, "{fd} vs {want}");
            }
        }
    }
}

#[test]
fn higher_derivatives_match_differences_of_the_hessian() {
    let h = 1e-5;
    for u in potentials() {
        for x in interior_probe_points(u.polygon(), 30, 13) {
            if u.polygon().min_facet_value(x) < 0.05 {
                continue;
            }
            let jet = u.eval_derivatives(x, 4).unwrap();
            let hess_at = |dx: f64, dy: f64| u.eval_derivatives([x[0] + dx, x[1] + dy], 4).unwrap();
            for k in 0..2 {
                let e = if k == 0 { [h, 0.0] } else { [0.0, h] };
                let (p, m) = (hess_at(e[0], e[1]), hess_at(-e[0], -e[1]));
                for i in 0..2 {
                    for j in 0..2 {
                        let d3 = (p.hess[i][j] - m.hess[i][j]) / (2.0 * h);
                        let want = jet.d3[i][j][k];
                        assert!((d3 - want).abs() <= 1e-4 * want.abs().max(1.0), "d3 {d3} vs {want}");
                        for l in 0..2 {
                            let d4 = (p.d3[i][j][l] - m.d3[i][j][l]) / (2.0 * h);
                            let want = jet.d4[i][j][l][k];
                            assert!((d4 - want).abs() <= 1e-4 * want.abs().max(1.0), "d4 {d4} vs {want}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn convexity_probe_passes_on_perturbed_potentials() {
    for u in potentials() {
        let points = interior_probe_points(u.polygon(), 1000, 3);
        let report = u.convexity_probe(&points);
        assert_eq!(report.probed, 1000);
        assert!(report.is_convex(), "{report:?}");
    }
}

#[test]
fn normalization_absorbs_affine_functions() {
    for u in potentials() {
        let x0 = u.polygon().centroid();
        let n = u.normalize(x0).unwrap();
        let g = AffineFunction::new(0.7, -1.3, 2.1);
        let shifted = u.add_affine(&g).normalize(x0).unwrap();
        let again = n.normalize(x0).unwrap();
        for ((a, b), c) in n.coeffs().iter().zip(shifted.coeffs()).zip(again.coeffs()) {
            assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
        }
        let jet = n.eval_derivatives(x0, 1).unwrap();
        assert!(jet.value.abs() < 1e-12 && jet.grad[0].abs() < 1e-12 && jet.grad[1].abs() < 1e-12);
    }
}
