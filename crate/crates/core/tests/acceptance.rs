//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each and exits non-zero if any fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use calabi_core::curvature::{
    chart_derivatives, edge_curvature_in_chart, extrapolate_to_edge, interior_probe_points, rm_norm,
    scalar_curvature, EdgeComponent, FacetChart, InverseHessianDerivatives,
};
use calabi_core::flow::{Flow, FlowConfig, StopReason};
use calabi_core::functionals::{l_functional_crease, l_functional_poly, solve_theta};
use calabi_core::numeric::fit_slope;
use calabi_core::stability::{
    crease_at, crease_grid_min, diameter_estimate, l_of_crease, lambda_estimate, m_condition_estimate,
    m_value, ray_length, CreaseSearchConfig, DiameterConfig, MConditionConfig, SegmentTriple,
};
use calabi_core::{AffineFunction, DelzantPolygon, Functionals, Poly2, QuadratureConfig, SymplecticPotential};

struct Verdict {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn square() -> Arc<DelzantPolygon> {
    Arc::new(DelzantPolygon::unit_square())
}

fn simplex() -> Arc<DelzantPolygon> {
    Arc::new(DelzantPolygon::standard_simplex())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn extremal_oracle() -> Verdict {
    let u = SymplecticPotential::guillemin(square(), 8);
    let points = interior_probe_points(u.polygon(), 100, 2024);
    let mut r_err: f64 = 0.0;
    let mut rm_err: f64 = 0.0;
    for &x in &points {
        r_err = r_err.max((scalar_curvature(&u, x).unwrap() - 8.0).abs());
        rm_err = rm_err.max((rm_norm(&u, x).unwrap() - 32f64.sqrt()).abs());
    }
    let theta = solve_theta(u.polygon()).unwrap();
    let th_err = (theta.a0 - 8.0).abs().max(theta.a1.abs()).max(theta.a2.abs());
    check(
        r_err <= 1e-8 && rm_err <= 1e-6 && th_err <= 1e-10,
        format!("max|R-8| = {r_err:.2e}, max||Rm|-sqrt32| = {rm_err:.2e}, theta err = {th_err:.2e}"),
    )
}

fn gradient_identity() -> Verdict {
    let u = SymplecticPotential::perturbed(square(), 8, 0.05);
    let flow = Flow::new(&u, QuadratureConfig::default(), FlowConfig::default()).unwrap();
    let f = flow.functionals();
    let dt = 1e-6;
    let v = flow.velocity(&u).unwrap();
    let next: Vec<f64> = u.coeffs().iter().zip(&v).map(|(c, g)| c + dt * g).collect();
    let dm = f.mabuchi_relative(&u.with_coeffs(next)).unwrap() - f.mabuchi_relative(&u).unwrap();
    let calabi = f.calabi_energy_mod(&u).unwrap();
    let err = (dm / dt + calabi).abs() / calabi;
    check(
        err <= 0.02,
        format!("dM/dt = {:.6e}, -int(R-theta)^2 = {:.6e}, rel err = {err:.2e}", dm / dt, -calabi),
    )
}

fn flow_convergence() -> Verdict {
    let u = SymplecticPotential::perturbed(square(), 8, 0.05);
    let cfg = FlowConfig {
        tol: 1e-5,
        ..FlowConfig::default()
    };
    let flow = Flow::new(&u, QuadratureConfig::default(), cfg).unwrap();
    let run = flow.run(flow.initial_state(u).unwrap(), true);
    let h = &run.state.history;
    let monotone = h.windows(2).all(|w| w[1].mabuchi_rel <= w[0].mabuchi_rel);
    let final_u = run.trajectory.last().unwrap();
    let dev = flow.sup_curvature_deviation(final_u).unwrap();
    let f = flow.functionals();
    let dist: Vec<f64> = run
        .trajectory
        .iter()
        .map(|p| f.l2_distance(p, final_u).unwrap())
        .collect();
    let worst_rise = dist.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let calabi = h.last().unwrap().calabi_mod;
    check(
        run.reason == StopReason::Converged && calabi < 1e-5 && monotone && dev < 1e-2 && worst_rise <= 1e-8,
        format!(
            "{} after {} steps (t = {:.4}): calabi = {calabi:.2e}, monotone M = {monotone}, sup|R-8| = {dev:.2e}, max L2 rise = {worst_rise:.1e}",
            run.reason.label(),
            h.len() - 1,
            run.state.t
        ),
    )
}

fn comp(d: &InverseHessianDerivatives, c: EdgeComponent) -> f64 {
    match c {
        EdgeComponent::Tangential => d.component(0, 0, 0, 0),
        EdgeComponent::Mixed => d.component(0, 1, 0, 1),
        EdgeComponent::Normal => d.component(1, 1, 1, 1),
        EdgeComponent::RmSquared => d.rm_norm_squared(),
    }
}

/// Perturbations that stay visible on every facet.
fn edge_active(p: Arc<DelzantPolygon>) -> SymplecticPotential {
    let f = Poly2::from_terms(&[(3, 0, 0.05), (2, 1, 0.05), (1, 2, -0.03), (0, 3, 0.04), (2, 2, 0.05)]);
    SymplecticPotential::with_raw_smooth(p, 8, &f)
}

fn edge_formulas() -> Verdict {
    let mut lemma_err: f64 = 0.0;
    let mut rm_err: f64 = 0.0;
    for u in [
        SymplecticPotential::perturbed(square(), 8, 0.05),
        SymplecticPotential::perturbed(simplex(), 8, 0.05),
        edge_active(square()),
        edge_active(simplex()),
    ] {
        for k in 0..u.polygon().len() {
            let chart = FacetChart::new(u.polygon(), k);
            for frac in [0.2, 0.5, 0.73] {
                let s = frac * chart.length;
                let edge = edge_curvature_in_chart(&u, &chart, s, EdgeComponent::Tangential).unwrap();
                let inner = extrapolate_to_edge(&u, &chart, s, 1e-3, |d| comp(d, EdgeComponent::Tangential)).unwrap();
                lemma_err = lemma_err.max(rel(edge, inner));
                let edge = edge_curvature_in_chart(&u, &chart, s, EdgeComponent::RmSquared).unwrap();
                let inner = extrapolate_to_edge(&u, &chart, s, 1e-3, |d| d.rm_norm_squared()).unwrap();
                rm_err = rm_err.max(rel(edge, inner));
            }
        }
    }
    check(
        lemma_err <= 1e-6 && rm_err <= 1e-3,
        format!("(1/V'')'' vs u^11_11: {lemma_err:.2e} rel; three-term |Rm|^2: {rm_err:.2e} rel"),
    )
}

fn vanishing_components() -> Verdict {
    let eps = [1e-2, 1e-3, 1e-4];
    let mut worst = f64::INFINITY;
    for u in [
        SymplecticPotential::perturbed(square(), 8, 0.05),
        SymplecticPotential::perturbed(simplex(), 8, 0.05),
        edge_active(square()),
        edge_active(simplex()),
    ] {
        for k in 0..u.polygon().len() {
            let chart = FacetChart::new(u.polygon(), k);
            let s = 0.37 * chart.length;
            let ds: Vec<_> = eps.iter().map(|&e| chart_derivatives(&u, &chart, s, e).unwrap()).collect();
            for (i, j, a, b) in [(1, 1, 0, 0), (1, 1, 0, 1), (0, 1, 0, 0)] {
                let logs: Vec<f64> = ds.iter().map(|d| d.component(i, j, a, b).abs().ln()).collect();
                let xs: Vec<f64> = eps.iter().map(|e: &f64| e.ln()).collect();
                worst = worst.min(fit_slope(&xs, &logs));
            }
        }
    }
    check(worst >= 0.9, format!("smallest log-log slope = {worst:.4}"))
}

fn stability_functional() -> Verdict {
    let sq = square();
    let theta = solve_theta(&sq).unwrap();
    let mut affine_err: f64 = 0.0;
    for p in [
        Arc::new(DelzantPolygon::unit_square()),
        simplex(),
        Arc::new(DelzantPolygon::from_vertices(&[[1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 2.0], [0.0, 2.0], [0.0, 1.0]]).unwrap()),
    ] {
        let t = solve_theta(&p).unwrap();
        for g in [Poly2::constant(1.0), Poly2::linear(0.0, 1.0, 0.0), Poly2::linear(-0.7, 2.5, -1.25)] {
            affine_err = affine_err.max(l_functional_poly(&p, &t, &g).abs());
        }
    }
    let half = l_functional_crease(&sq, &theta, [1.0, 0.0], 0.5);
    let x0 = sq.centroid();
    let cfg = CreaseSearchConfig::default();
    let est = lambda_estimate(&sq, &theta, x0, &cfg);
    let again = l_of_crease(&sq, &theta, &crease_at(&sq, x0, est.argmin_phi, est.argmin_s)).ratio();
    let fine = crease_grid_min(&sq, &theta, x0, 10 * cfg.directions, 10 * cfg.offsets);
    let fine_ratio = fine.eval.ratio();
    check(
        affine_err <= 1e-12
            && (half - 0.5).abs() <= 1e-10
            && est.lambda_hat > 0.0
            && (again - est.lambda_hat).abs() <= 1e-12
            && fine_ratio > 0.0
            && (fine_ratio - est.lambda_hat).abs() <= 1e-12,
        format!(
            "L(affine) = {affine_err:.1e}, L(crease) = {half}, lambda = {:.12} at a = ({:.4}, {:.4}), 10x scan min = {fine_ratio:.12}",
            est.lambda_hat, est.argmin.a[0], est.argmin.a[1]
        ),
    )
}

fn mcondition_and_diameter() -> Verdict {
    let u = SymplecticPotential::guillemin(square(), 8);
    let chord = m_value(&u, &SegmentTriple::new([0.0, 0.5], [1.0, 0.5]).unwrap()).unwrap();
    let ray = ray_length(&u, [0.0, 0.5], [1.0, 0.5], &DiameterConfig::default()).unwrap().length;
    let m_err = (chord - 2f64.ln()).abs();
    let d_err = (ray - PI / 2f64.sqrt()).abs();
    check(
        m_err <= 1e-6 && d_err <= 1e-4,
        format!("chord M-value = {chord:.9} (err {m_err:.1e}), edge ray = {ray:.9} (err {d_err:.1e})"),
    )
}

struct Scalars {
    r: Vec<f64>,
    rm: Vec<f64>,
    mabuchi: f64,
    l: f64,
    lambda: f64,
    m_hat: f64,
    diam: f64,
}

fn scalars(u: &SymplecticPotential, points: &[[f64; 2]], with_m: bool) -> Scalars {
    let p = u.polygon_arc();
    let f = Functionals::new(p.clone(), QuadratureConfig::default()).unwrap();
    let theta = f.theta();
    Scalars {
        r: points.iter().map(|&x| scalar_curvature(u, x).unwrap()).collect(),
        rm: points.iter().map(|&x| rm_norm(u, x).unwrap()).collect(),
        mabuchi: f.mabuchi_relative(u).unwrap(),
        l: f.l_of_potential(u).unwrap(),
        lambda: lambda_estimate(p, &theta, p.centroid(), &CreaseSearchConfig::default()).lambda_hat,
        m_hat: if with_m {
            m_condition_estimate(u, &MConditionConfig::default()).unwrap().m_hat
        } else {
            f64::NAN
        },
        diam: diameter_estimate(u, &DiameterConfig::default()).unwrap().diam_hat,
    }
}

fn max_diff(a: &Scalars, b: &Scalars, with_m: bool) -> f64 {
    let mut d: f64 = 0.0;
    for (x, y) in a.r.iter().zip(&b.r).chain(a.rm.iter().zip(&b.rm)) {
        d = d.max((x - y).abs());
    }
    for (x, y) in [(a.mabuchi, b.mabuchi), (a.l, b.l), (a.lambda, b.lambda), (a.diam, b.diam)] {
        d = d.max((x - y).abs());
    }
    if with_m {
        d = d.max((a.m_hat - b.m_hat).abs());
    }
    d
}

fn equivariance() -> Verdict {
    let u = SymplecticPotential::perturbed(square(), 8, 0.05);
    let points = interior_probe_points(u.polygon(), 20, 99);
    let base = scalars(&u, &points, true);
    let g = AffineFunction::new(0.4, -1.3, 2.2);
    let affine = scalars(&u.add_affine(&g), &points, true);
    let map_points = |a: [[i64; 2]; 2], t: [f64; 2]| -> Vec<[f64; 2]> {
        points
            .iter()
            .map(|x| {
                [
                    a[0][0] as f64 * x[0] + a[0][1] as f64 * x[1] + t[0],
                    a[1][0] as f64 * x[0] + a[1][1] as f64 * x[1] + t[1],
                ]
            })
            .collect()
    };
    let rot = ([[0, -1], [1, 0]], [3.0, -2.0]);
    let rotated = scalars(&u.lattice_transform(rot.0, rot.1).unwrap(), &map_points(rot.0, rot.1), true);
    let shear = ([[1, 1], [0, 1]], [0.5, 1.0]);
    let sheared = scalars(&u.lattice_transform(shear.0, shear.1).unwrap(), &map_points(shear.0, shear.1), false);
    let (da, dr, ds) = (
        max_diff(&base, &affine, true),
        max_diff(&base, &rotated, true),
        max_diff(&base, &sheared, false),
    );
    check(
        da <= 1e-8 && dr <= 1e-8 && ds <= 1e-8,
        format!(
            "max change: affine shift {da:.1e}, rotation {dr:.1e}, shear {ds:.1e} (M-hat on shear excluded); lambda = {:.6}, M = {:.6}, diam = {:.6}",
            base.lambda, base.m_hat, base.diam
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 extremal oracle", Duration::from_secs(5), extremal_oracle),
        ("2 gradient-flow identity", Duration::from_secs(30), gradient_identity),
        ("3 flow convergence", Duration::from_secs(600), flow_convergence),
        ("4 edge-formula cross-validation", Duration::MAX, edge_formulas),
        ("5 vanishing components", Duration::MAX, vanishing_components),
        ("6 stability functional", Duration::MAX, stability_functional),
        ("7 M-condition and diameter oracles", Duration::MAX, mcondition_and_diameter),
        ("8 equivariance", Duration::MAX, equivariance),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let in_time = took <= limit;
        let ok = v.ok && in_time;
        if !ok {
            failed += 1;
        }
        let budget = if limit == Duration::MAX {
            String::new()
        } else {
            format!(" / limit {:.0}s", limit.as_secs_f64())
        };
        println!(
            "[{}] {name}: {} ({:.2}s{budget})",
            if ok { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 8 acceptance criteria passed");
}
