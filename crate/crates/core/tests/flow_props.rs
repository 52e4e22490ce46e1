use std::sync::Arc;

use calabi_core::curvature::interior_probe_points;
use calabi_core::flow::{normalize_trajectory, Flow, FlowConfig, Integrator, StopReason};
use calabi_core::{AffineFunction, DelzantPolygon, QuadratureConfig, SymplecticPotential};

fn square() -> Arc<DelzantPolygon> {
    Arc::new(DelzantPolygon::unit_square())
}

fn perturbed_square() -> SymplecticPotential {
    SymplecticPotential::perturbed(square(), 8, 0.05)
}

fn flow_for(u: &SymplecticPotential, cfg: FlowConfig) -> Flow {
    Flow::new(u, QuadratureConfig::default(), cfg).unwrap()
}

/// `dM/dt + calabi` at step `dt` along the projected velocity.
fn slope_defect(flow: &Flow, u: &SymplecticPotential, dt: f64) -> (f64, f64) {
    let f = flow.functionals();
    let v = flow.velocity(u).unwrap();
    let next: Vec<f64> = u.coeffs().iter().zip(&v).map(|(c, g)| c + dt * g).collect();
    let dm = f.mabuchi_relative(&u.with_coeffs(next)).unwrap() - f.mabuchi_relative(u).unwrap();
    let calabi = f.calabi_energy_mod(u).unwrap();
    (dm / dt + calabi, calabi)
}

#[test]
fn dissipation_defect_converges_at_first_order() {
    let u = perturbed_square();
    let flow = flow_for(&u, FlowConfig::default());
    let dts = [1e-3, 1e-4, 1e-5];
    let defects: Vec<f64> = dts.iter().map(|&dt| slope_defect(&flow, &u, dt).0).collect();
    let calabi = slope_defect(&flow, &u, 1e-5).1;
    // the dt-dependent part shrinks tenfold per decade; what remains is the
    // projection defect of the velocity, a small fraction of the energy
    let order = ((defects[0] - defects[1]) / (defects[1] - defects[2])).abs().log10();
    assert!(order >= 0.9, "observed order {order}, defects {defects:?}");
    let limit = defects[2] - (defects[1] - defects[2]) / 9.0;
    assert!(limit.abs() <= 1e-3 * calabi, "limit {limit} vs calabi {calabi}");
}

#[test]
fn accepted_steps_never_raise_energy() {
    for integrator in [Integrator::Euler, Integrator::Heun] {
        let u = perturbed_square();
        let cfg = FlowConfig {
            max_steps: 25,
            integrator,
            ..FlowConfig::default()
        };
        let flow = flow_for(&u, cfg);
        let run = flow.run(flow.initial_state(u).unwrap(), false);
        assert_eq!(run.reason, StopReason::StepLimit);
        let h = &run.state.history;
        assert_eq!(h.len(), 26);
        for w in h.windows(2) {
            assert!(w[1].mabuchi_rel <= w[0].mabuchi_rel + 1e-12);
            assert!(w[1].dt > 0.0 && w[1].t > w[0].t);
        }
        assert!(h.iter().all(|r| r.sup_rm.is_finite() && r.calabi_mod >= 0.0));
        assert!(h.last().unwrap().mabuchi_rel < h[0].mabuchi_rel);
    }
}

#[test]
fn trajectories_are_affine_equivariant() {
    let u = perturbed_square();
    let g = AffineFunction::new(0.4, -0.7, 1.1);
    let v = u.add_affine(&g);
    let cfg = FlowConfig {
        max_steps: 15,
        ..FlowConfig::default()
    };
    let flow = flow_for(&u, cfg);
    let a = flow.run(flow.initial_state(u.clone()).unwrap(), false);
    let b = flow.run(flow.initial_state(v).unwrap(), false);
    assert_eq!(a.state.history.len(), b.state.history.len());
    assert_eq!(a.state.t, b.state.t);
    let diff = b.state.potential.smooth_raw().sub(&a.state.potential.smooth_raw());
    let want = g.to_poly().with_degree(diff.degree());
    for (x, y) in diff.coeffs().iter().zip(want.coeffs()) {
        assert!((x - y).abs() <= 1e-8, "{:?}", diff.coeffs());
    }
}

#[test]
fn fixed_points_are_exactly_the_extremal_states() {
    let tol = 1e-6;
    let reference = SymplecticPotential::guillemin(square(), 8);
    let flow = flow_for(&reference, FlowConfig::default());
    let s0 = flow.initial_state(reference.clone()).unwrap();
    assert!(s0.calabi_mod() < tol);
    let s1 = flow.step(&s0).unwrap();
    let moved = |a: &SymplecticPotential, b: &SymplecticPotential| {
        a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    assert!(moved(&s1.potential, &reference) <= tol * s1.last().dt);

    let u = perturbed_square();
    let s0 = flow.initial_state(u.clone()).unwrap();
    assert!(s0.calabi_mod() >= tol);
    let s1 = flow.step(&s0).unwrap();
    assert!(moved(&s1.potential, &u) > tol * s1.last().dt);
}

#[test]
fn stalls_when_dt_min_is_too_large() {
    let u = perturbed_square();
    let cfg = FlowConfig {
        dt0: 1.0,
        dt_min: 0.5,
        dt_max: 1.0,
        ..FlowConfig::default()
    };
    let flow = flow_for(&u, cfg);
    let run = flow.run(flow.initial_state(u.clone()).unwrap(), false);
    assert!(matches!(run.reason, StopReason::Stalled { .. } | StopReason::Degenerated { .. }), "{:?}", run.reason);
    // the last good state is kept
    assert_eq!(run.state.potential, u);
    assert_eq!(run.state.history.len(), 1);
}

#[test]
fn curvature_bound_stops_the_run() {
    let u = perturbed_square();
    let cfg = FlowConfig {
        curvature_bound: 1.0,
        ..FlowConfig::default()
    };
    let flow = flow_for(&u, cfg);
    let run = flow.run(flow.initial_state(u).unwrap(), false);
    match run.reason {
        StopReason::CurvatureBreach { sup_rm, bound } => assert!(sup_rm > bound && bound == 1.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn normalized_trajectories() {
    let u = perturbed_square();
    let x0 = u.polygon().centroid();
    let constant = vec![u.clone(); 4];
    let n = normalize_trajectory(&constant, x0).unwrap();
    for inc in &n.increments[1..] {
        assert_eq!(inc.coeffs(), [0.0; 3]);
    }
    let g = AffineFunction::new(-0.2, 0.6, 0.1);
    let shifted: Vec<_> = constant.iter().map(|p| p.add_affine(&g)).collect();
    let m = normalize_trajectory(&shifted, x0).unwrap();
    let points = interior_probe_points(u.polygon(), 20, 5);
    for (a, b) in n.potentials.iter().zip(&m.potentials) {
        for &x in &points {
            assert!((a.value(x).unwrap() - b.value(x).unwrap()).abs() <= 1e-12);
        }
    }
}
