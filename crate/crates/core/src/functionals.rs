//! The extremal affine function, the stability functional, the relative
//! modified Mabuchi energy and related integrals.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Poly2;
use crate::polygon::{DelzantPolygon, Point};
use crate::potential::{AffineFunction, SymplecticPotential};
use crate::quadrature::{QuadratureConfig, QuadratureRule};

/// Solve `2 int_{dP} m dsigma = int_P m theta dx` for `m in {1, x1, x2}`.
///
/// The Gram system is set up in coordinates centered at the centroid.
pub fn solve_theta(polygon: &DelzantPolygon) -> Result<AffineFunction> {
    let c = polygon.centroid();
    let basis = [
        Poly2::constant(1.0),
        Poly2::linear(-c[0], 1.0, 0.0),
        Poly2::linear(-c[1], 0.0, 1.0),
    ];
    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for j in 0..3 {
        rhs[j] = 2.0 * polygon.boundary_moment(&basis[j]);
        for k in 0..3 {
            gram[(j, k)] = polygon.interior_moment(&basis[j].mul(&basis[k]));
        }
    }
    let sol = gram
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("theta Gram matrix"))?;
    Ok(AffineFunction::new(
        sol[0] - sol[1] * c[0] - sol[2] * c[1],
        sol[1],
        sol[2],
    ))
}

/// Residuals `2 int_{dP} m dsigma - int_P m theta dx` for `m = 1, x1, x2`.
pub fn theta_residuals(polygon: &DelzantPolygon, theta: &AffineFunction) -> [f64; 3] {
    let t = theta.to_poly();
    [
        Poly2::constant(1.0),
        Poly2::linear(0.0, 1.0, 0.0),
        Poly2::linear(0.0, 0.0, 1.0),
    ]
    .map(|m| 2.0 * polygon.boundary_moment(&m) - polygon.interior_moment(&m.mul(&t)))
}

/// Average scalar curvature `2 sigma(dP) / |P|`.
pub fn average_scalar_curvature(polygon: &DelzantPolygon) -> f64 {
    2.0 * polygon.boundary_measure() / polygon.area()
}

/// Exact `L(u)` for a polynomial `u`.
pub fn l_functional_poly(polygon: &DelzantPolygon, theta: &AffineFunction, u: &Poly2) -> f64 {
    2.0 * polygon.boundary_moment(u) - polygon.interior_moment(&u.mul(&theta.to_poly()))
}

/// Exact `L(max(0, <a, x> - b))` by clipping and polygon moments.
pub fn l_functional_crease(
    polygon: &DelzantPolygon,
    theta: &AffineFunction,
    a: [f64; 2],
    b: f64,
) -> f64 {
    crease_moments(polygon, theta, a, b).0
}

/// `(L(c), int_{dP} c dsigma)` for `c = max(0, <a, x> - b)`.
pub fn crease_moments(
    polygon: &DelzantPolygon,
    theta: &AffineFunction,
    a: [f64; 2],
    b: f64,
) -> (f64, f64) {
    let region = polygon.clip_halfplane(a, b);
    if region.is_empty() {
        return (0.0, 0.0);
    }
    let lin = Poly2::linear(-b, a[0], a[1]);
    let boundary = region.boundary_moment(&lin);
    (
        2.0 * boundary - region.interior_moment(&lin.mul(&theta.to_poly())),
        boundary,
    )
}

/// One row of energy diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub mabuchi_rel: f64,
    pub calabi_mod: f64,
    pub l_functional: f64,
    pub boundary_int: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "mabuchi_rel,calabi_mod,l_functional,boundary_int";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.mabuchi_rel, self.calabi_mod, self.l_functional, self.boundary_int
        )
    }
}

/// Quadrature-backed functionals on one polygon.
#[derive(Debug, Clone)]
pub struct Functionals {
    polygon: Arc<DelzantPolygon>,
    rule: QuadratureRule,
    theta: AffineFunction,
}

impl Functionals {
    pub fn new(polygon: Arc<DelzantPolygon>, config: QuadratureConfig) -> Result<Self> {
        let theta = solve_theta(&polygon)?;
        let rule = QuadratureRule::new(&polygon, config);
        Ok(Self {
            polygon,
            rule,
            theta,
        })
    }

    /// Replace `theta` by the constant average scalar curvature (the
    /// unmodified flow).
    pub fn unmodified(mut self) -> Self {
        self.theta = AffineFunction::constant(average_scalar_curvature(&self.polygon));
        self
    }

    pub fn polygon(&self) -> &DelzantPolygon {
        &self.polygon
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn theta(&self) -> AffineFunction {
        self.theta
    }

    fn check(&self, u: &SymplecticPotential) -> Result<()> {
        if u.polygon() != &*self.polygon {
            return Err(Error::Incompatible("potential lives on another polygon"));
        }
        Ok(())
    }

    /// `L(u)` by quadrature for an evaluator finite on the open polygon and
    /// on the open facets.
    pub fn l_functional<F>(&self, u: F) -> Result<f64>
    where
        F: Fn(Point) -> Result<f64> + Sync,
    {
        let check = |x: Point, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { x: x[0], y: x[1] })
            }
        };
        let boundary = self.rule.try_integrate_boundary(|x| check(x, u(x)?))?;
        let interior = self
            .rule
            .try_integrate(|x| check(x, u(x)? * self.theta.eval(x)))?;
        Ok(2.0 * boundary - interior)
    }

    pub fn l_of_potential(&self, u: &SymplecticPotential) -> Result<f64> {
        self.check(u)?;
        self.l_functional(|x| u.value_on_closure(x))
    }

    /// `M(u) - M(u_ref)` with `u_ref` the Guillemin reference.
    pub fn mabuchi_relative(&self, u: &SymplecticPotential) -> Result<f64> {
        self.check(u)?;
        let reference = u.reference();
        let log_ratio = self.rule.try_integrate(|x| {
            let h = u.eval_derivatives(x, 2)?;
            let det = h.hessian_det();
            if !(det > 0.0 && h.hess[0][0] + h.hess[1][1] > 0.0) {
                return Err(Error::ConvexityLoss { x: x[0], y: x[1], det });
            }
            let det_ref = reference.eval_derivatives(x, 2)?.hessian_det();
            Ok((det / det_ref).ln())
        })?;
        let l_diff = if u.guillemin_weight() == 1.0 {
            l_functional_poly(&self.polygon, &self.theta, &u.smooth_raw())
        } else {
            self.l_functional(|x| Ok(u.value_on_closure(x)? - reference.value_on_closure(x)?))?
        };
        Ok(-log_ratio + l_diff)
    }

    /// `int_P (R_u - theta)^2 dx`.
    pub fn calabi_energy_mod(&self, u: &SymplecticPotential) -> Result<f64> {
        self.check(u)?;
        self.rule.try_integrate(|x| {
            let r = self.scalar_curvature_at(u, x)?;
            let d = r - self.theta.eval(x);
            Ok(d * d)
        })
    }

    pub(crate) fn scalar_curvature_at(&self, u: &SymplecticPotential, x: Point) -> Result<f64> {
        crate::curvature::scalar_curvature(u, x)
    }

    /// `(int_P (u - v)^2 dx)^{1/2}`.
    pub fn l2_distance(&self, u: &SymplecticPotential, v: &SymplecticPotential) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let same_log = u.guillemin_weight() == v.guillemin_weight();
        let sq = if same_log {
            let d = u.smooth_raw().sub(&v.smooth_raw());
            self.rule.integrate(|x| {
                let e = d.eval(x[0], x[1]);
                e * e
            })
        } else {
            self.rule.try_integrate(|x| {
                let e = u.value(x)? - v.value(x)?;
                Ok(e * e)
            })?
        };
        Ok(sq.max(0.0).sqrt())
    }

    /// `int_{dP} u~ dsigma` for `u~` the normalization of `u` at `x0`.
    pub fn boundary_integral_normalized(&self, u: &SymplecticPotential, x0: Point) -> Result<f64> {
        self.check(u)?;
        let n = u.normalize(x0)?;
        self.rule.try_integrate_boundary(|x| n.value_on_closure(x))
    }

    pub fn energy_report(&self, u: &SymplecticPotential, x0: Point) -> Result<EnergyReport> {
        Ok(EnergyReport {
            mabuchi_rel: self.mabuchi_relative(u)?,
            calabi_mod: self.calabi_energy_mod(u)?,
            l_functional: self.l_of_potential(u)?,
            boundary_int: self.boundary_integral_normalized(u, x0)?,
        })
    }
}
