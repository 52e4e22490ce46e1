//! Abreu's curvature operators and their boundary limits on facets.
//!
//! Everything is assembled from the exact order-four jet of the potential:
//! with `A = D^2 u` and `B = A^{-1}`,
//! `d_k B = -B (d_k A) B` and
//! `d_k d_l B = B A_k B A_l B + B A_l B A_k B - B A_kl B`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::richardson_linear;
use crate::polygon::{DelzantPolygon, Point};
use crate::potential::{Jet, SymplecticPotential};

type M2 = [[f64; 2]; 2];

/// Second derivatives of the inverse Hessian: `second[k][l][i][j] = d_k d_l u^{ij}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseHessianDerivatives {
    pub inverse: M2,
    pub first: [M2; 2],
    pub second: [[M2; 2]; 2],
}

impl InverseHessianDerivatives {
    /// `R = - sum_{ij} d_i d_j u^{ij}`.
    pub fn scalar_curvature(&self) -> f64 {
        let s = &self.second;
        -(s[0][0][0][0] + s[0][1][0][1] + s[1][0][1][0] + s[1][1][1][1])
    }

    /// `|Rm|^2 = sum u^{ij}_{kl} u^{kl}_{ij}`.
    pub fn rm_norm_squared(&self) -> f64 {
        let s = &self.second;
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        acc += s[k][l][i][j] * s[i][j][k][l];
                    }
                }
            }
        }
        acc
    }

    /// `u^{ij}_{kl}`.
    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.second[k][l][i][j]
    }
}

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn triple(a: &M2, b: &M2, c: &M2) -> M2 {
    mul(&mul(a, b), c)
}

/// Differentiate the inverse Hessian twice from an order-four jet.
pub fn inverse_hessian_derivatives(jet: &Jet, at: Point) -> Result<InverseHessianDerivatives> {
    let a = jet.hess;
    let det = jet.hessian_det();
    if !(det > 0.0 && a[0][0] + a[1][1] > 0.0) || !det.is_finite() {
        return Err(Error::ConvexityLoss {
            x: at[0],
            y: at[1],
            det,
        });
    }
    let b = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
    let ak: [M2; 2] = [jet.d3[0], jet.d3[1]];
    let bak: [M2; 2] = [mul(&b, &ak[0]), mul(&b, &ak[1])];
    let mut first = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        let t = mul(&bak[k], &b);
        for i in 0..2 {
            for j in 0..2 {
                first[k][i][j] = -t[i][j];
            }
        }
    }
    let mut second = [[[[0.0; 2]; 2]; 2]; 2];
    for k in 0..2 {
        for l in 0..2 {
            let akl = jet.d4[k][l];
            let t1 = triple(&bak[k], &bak[l], &b);
            let t2 = triple(&bak[l], &bak[k], &b);
            let t3 = triple(&b, &akl, &b);
            for i in 0..2 {
                for j in 0..2 {
                    second[k][l][i][j] = t1[i][j] + t2[i][j] - t3[i][j];
                }
            }
        }
    }
    Ok(InverseHessianDerivatives {
        inverse: b,
        first,
        second,
    })
}

/// Pointwise curvature data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub point: Point,
    pub hessian: M2,
    pub inverse_hessian: M2,
    pub scalar_r: f64,
    pub rm_norm: f64,
}

impl CurvatureSample {
    pub fn hessian_det(&self) -> f64 {
        self.hessian[0][0] * self.hessian[1][1] - self.hessian[0][1] * self.hessian[1][0]
    }

    /// `|R| <= 2 |Rm|` for surfaces; checked with slack factor 4.
    pub fn passes_norm_comparison(&self) -> bool {
        self.scalar_r.abs() <= 4.0 * self.rm_norm + 1e-9
    }
}

pub fn sample(u: &SymplecticPotential, x: Point) -> Result<CurvatureSample> {
    let jet = u.eval_derivatives(x, 2)?;
    let d = invariant_derivatives(u, x)?;
    Ok(CurvatureSample {
        point: x,
        hessian: jet.hess,
        inverse_hessian: inverse(jet.hess),
        scalar_r: d.scalar_curvature(),
        rm_norm: d.rm_norm_squared().max(0.0).sqrt(),
    })
}

/// Inverse-Hessian derivatives in the chart of the nearest facet, whose log
/// term is added in exact chart form. Only the coordinate-free scalars of the
/// result are meaningful in world terms.
pub fn invariant_derivatives(u: &SymplecticPotential, x: Point) -> Result<InverseHessianDerivatives> {
    if !u.has_log_part() {
        return inverse_hessian_derivatives(&u.eval_derivatives(x, 4)?, x);
    }
    let (k, l) = u
        .polygon()
        .facet_values(x)
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("polygon has facets");
    if !(l > 0.0) {
        return Err(Error::OutsideDomain { x: x[0], y: x[1] });
    }
    let chart = FacetChart::new(u.polygon(), k);
    let mut jet = u.jet_without_facet(x, k, 4)?.pull_back(chart.matrix());
    jet.add_facet_log([0.0, 1.0], l, u.guillemin_weight(), 4);
    inverse_hessian_derivatives(&jet, x)
}

fn inverse(a: M2) -> M2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

pub fn scalar_curvature(u: &SymplecticPotential, x: Point) -> Result<f64> {
    Ok(invariant_derivatives(u, x)?.scalar_curvature())
}

pub fn rm_norm(u: &SymplecticPotential, x: Point) -> Result<f64> {
    Ok(invariant_derivatives(u, x)?.rm_norm_squared().max(0.0).sqrt())
}

/// `(1/v)''` for `v = V''`, given `v`, `v'` and `v''`.
pub fn reciprocal_second_derivative(v: f64, dv: f64, ddv: f64) -> f64 {
    -ddv / (v * v) + 2.0 * dv * dv / (v * v * v)
}

/// Scalar curvature `-(1/u'')''` of a one-variable potential.
pub fn scalar_curvature_1d(u2: f64, u3: f64, u4: f64) -> f64 {
    -reciprocal_second_derivative(u2, u3, u4)
}

/// Lattice chart `x = origin + s e + y w` sending facet `k` to `{y = 0}`, with
/// `y = l_k(x)` and `det[e w] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetChart {
    pub facet: usize,
    pub origin: Point,
    pub tangent: [i64; 2],
    pub transverse: [i64; 2],
    /// Chart parameter of the facet's far endpoint.
    pub length: f64,
}

impl FacetChart {
    pub fn new(polygon: &DelzantPolygon, facet: usize) -> Self {
        let f = polygon.facets()[facet];
        let [n0, n1] = f.normal;
        let tangent = [n1, -n0];
        let eg = num_integer::Integer::extended_gcd(&n0, &n1);
        // n0 x + n1 y = gcd = 1 for primitive normals
        let transverse = [eg.x * eg.gcd, eg.y * eg.gcd];
        let (a, b) = polygon.facet_endpoints(facet);
        let e = [tangent[0] as f64, tangent[1] as f64];
        let length = ((b[0] - a[0]) * e[0] + (b[1] - a[1]) * e[1]) / (e[0] * e[0] + e[1] * e[1]);
        Self {
            facet,
            origin: a,
            tangent,
            transverse,
            length,
        }
    }

    pub fn matrix(&self) -> M2 {
        [
            [self.tangent[0] as f64, self.transverse[0] as f64],
            [self.tangent[1] as f64, self.transverse[1] as f64],
        ]
    }

    pub fn to_world(&self, s: f64, y: f64) -> Point {
        let m = self.matrix();
        [
            self.origin[0] + m[0][0] * s + m[0][1] * y,
            self.origin[1] + m[1][0] * s + m[1][1] * y,
        ]
    }

    /// Euclidean length of one unit of the chart tangent coordinate.
    pub fn tangent_scale(&self) -> f64 {
        (self.tangent[0] as f64).hypot(self.tangent[1] as f64)
    }

    /// Chart coordinate of the facet point at arclength `arc` from its start.
    pub fn param_of_arclength(&self, arc: f64) -> f64 {
        arc / self.tangent_scale()
    }
}

/// Boundary curvature quantities in a facet's model chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeComponent {
    /// `u^{11}_{11}` along the facet, via `(1/V'')''` of the edge restriction.
    Tangential,
    /// `u^{12}_{12}` via `-d_s (2 G_{sy} / G_{ss})`.
    Mixed,
    /// `u^{22}_{22}`, the continuous extension `-8 det D^2 G / G_{ss}`.
    Normal,
    /// Three-term boundary `|Rm|^2`.
    RmSquared,
}

/// Boundary value of a curvature component at arclength `arc` on facet `facet`.
pub fn edge_curvature(
    u: &SymplecticPotential,
    facet: usize,
    arc: f64,
    component: EdgeComponent,
) -> Result<f64> {
    let chart = FacetChart::new(u.polygon(), facet);
    let s = chart.param_of_arclength(arc);
    edge_curvature_in_chart(u, &chart, s, component)
}

pub fn edge_curvature_in_chart(
    u: &SymplecticPotential,
    chart: &FacetChart,
    s: f64,
    component: EdgeComponent,
) -> Result<f64> {
    if u.guillemin_weight() != 1.0 {
        return Err(Error::Incompatible("edge formulas need the Guillemin reference"));
    }
    let rel_tol = 1e-12;
    if !(s > rel_tol * chart.length && s < chart.length * (1.0 - rel_tol)) {
        return Err(Error::VertexPoint { facet: chart.facet });
    }
    let x = chart.to_world(s, 0.0);
    let g = u
        .jet_without_facet(x, chart.facet, 4)?
        .pull_back(chart.matrix());
    let gss = g.hess[0][0];
    if !(gss > 0.0) {
        return Err(Error::ConvexityLoss {
            x: x[0],
            y: x[1],
            det: gss,
        });
    }
    let tangential = || reciprocal_second_derivative(gss, g.d3[0][0][0], g.d4[0][0][0][0]);
    let mixed = || {
        -2.0 * (g.d3[0][0][1] * gss - g.hess[0][1] * g.d3[0][0][0]) / (gss * gss)
    };
    let normal = || -8.0 * g.hessian_det() / gss;
    Ok(match component {
        EdgeComponent::Tangential => tangential(),
        EdgeComponent::Mixed => mixed(),
        EdgeComponent::Normal => normal(),
        EdgeComponent::RmSquared => {
            let (t, m, n) = (tangential(), mixed(), normal());
            t * t + 4.0 * m * m + n * n
        }
    })
}

/// Inverse-Hessian derivatives expressed in a facet chart, at the interior
/// point with chart coordinates `(s, y)`, `y > 0`.
pub fn chart_derivatives(
    u: &SymplecticPotential,
    chart: &FacetChart,
    s: f64,
    y: f64,
) -> Result<InverseHessianDerivatives> {
    let x = chart.to_world(s, y);
    if !(y > 0.0) || !u.polygon().contains_strictly(x) {
        return Err(Error::OutsideDomain { x: x[0], y: x[1] });
    }
    // the facet's own log term is added in chart form, where it is exact
    let mut jet = u
        .jet_without_facet(x, chart.facet, 4)?
        .pull_back(chart.matrix());
    jet.add_facet_log([0.0, 1.0], y, u.guillemin_weight(), 4);
    inverse_hessian_derivatives(&jet, x)
}

/// Limit of an interior chart quantity as `y -> 0`, by Richardson
/// extrapolation from offsets `h`, `h/2`, `h/4`.
pub fn extrapolate_to_edge<F>(
    u: &SymplecticPotential,
    chart: &FacetChart,
    s: f64,
    h: f64,
    quantity: F,
) -> Result<f64>
where
    F: Fn(&InverseHessianDerivatives) -> f64,
{
    let f = |y: f64| chart_derivatives(u, chart, s, y).map(|d| quantity(&d));
    Ok(richardson_linear(f(h)?, f(h / 2.0)?, f(h / 4.0)?))
}

/// Probe-set configuration for `sup |Rm|`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RmProbeConfig {
    pub interior_points: usize,
    pub per_facet: usize,
    pub vertex_offset: f64,
    pub seed: u64,
}

impl Default for RmProbeConfig {
    fn default() -> Self {
        Self {
            interior_points: 256,
            per_facet: 8,
            vertex_offset: 1e-2,
            seed: 0x5eed,
        }
    }
}

/// Estimated supremum of `|Rm|` with the probe that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupRm {
    pub value: f64,
    pub location: Point,
}

/// Quasi-random interior points, uniform in barycentric coordinates of the
/// centroid fan, reproducible from the seed.
pub fn interior_probe_points(polygon: &DelzantPolygon, count: usize, seed: u64) -> Vec<Point> {
    let c = polygon.centroid();
    let n = polygon.len();
    let areas: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = polygon.facet_endpoints(k);
            0.5 * crate::polygon::cross(crate::polygon::sub(a, c), crate::polygon::sub(b, c))
        })
        .collect();
    let total: f64 = areas.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut pick = rng.gen::<f64>() * total;
            let mut k = 0;
            while k + 1 < n && pick > areas[k] {
                pick -= areas[k];
                k += 1;
            }
            let (a, b) = polygon.facet_endpoints(k);
            // keep clear of the boundary where the log part is singular
            let r1: f64 = rng.gen_range(0.0..1.0f64).sqrt() * (1.0 - 1e-6);
            let r2: f64 = rng.gen_range(1e-6..1.0 - 1e-6);
            [
                c[0] + r1 * ((1.0 - r2) * (a[0] - c[0]) + r2 * (b[0] - c[0])),
                c[1] + r1 * ((1.0 - r2) * (a[1] - c[1]) + r2 * (b[1] - c[1])),
            ]
        })
        .collect()
}

/// `sup |Rm|` over interior probes, edge-formula probes on each facet and
/// inward-extrapolated vertex probes.
pub fn sup_rm(u: &SymplecticPotential, cfg: &RmProbeConfig) -> Result<SupRm> {
    let polygon = u.polygon();
    let interior = interior_probe_points(polygon, cfg.interior_points, cfg.seed);
    let values: Vec<Result<(f64, Point)>> = interior
        .par_iter()
        .map(|&x| rm_norm(u, x).map(|v| (v, x)))
        .collect();
    let mut best = SupRm {
        value: 0.0,
        location: polygon.centroid(),
    };
    let mut consider = |v: f64, x: Point| {
        if v > best.value || !v.is_finite() {
            best = SupRm { value: v, location: x };
        }
    };
    for r in values {
        let (v, x) = r?;
        consider(v, x);
    }
    if u.guillemin_weight() == 1.0 {
        for k in 0..polygon.len() {
            let chart = FacetChart::new(polygon, k);
            for j in 0..cfg.per_facet {
                let s = chart.length * (j as f64 + 0.5) / cfg.per_facet as f64;
                let v = edge_curvature_in_chart(u, &chart, s, EdgeComponent::RmSquared)?;
                consider(v.max(0.0).sqrt(), chart.to_world(s, 0.0));
            }
        }
    }
    let c = polygon.centroid();
    for &v in polygon.vertices() {
        let at = |eps: f64| [v[0] + eps * (c[0] - v[0]), v[1] + eps * (c[1] - v[1])];
        let h = cfg.vertex_offset;
        let val = richardson_linear(rm_norm(u, at(h))?, rm_norm(u, at(h / 2.0))?, rm_norm(u, at(h / 4.0))?);
        consider(val, v);
    }
    Ok(best)
}

/// CSV dump `x1,x2,R,rm,det` of curvature at the given points.
pub fn curvature_field_csv(u: &SymplecticPotential, points: &[Point]) -> Result<String> {
    let samples: Vec<Result<CurvatureSample>> = points.par_iter().map(|&x| sample(u, x)).collect();
    let mut out = String::from("x1,x2,R,rm,det\n");
    for s in samples {
        let s = s?;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.point[0],
            s.point[1],
            s.scalar_r,
            s.rm_norm,
            s.hessian_det()
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn square_ref() -> SymplecticPotential {
        SymplecticPotential::guillemin(Arc::new(DelzantPolygon::unit_square()), 8)
    }

    #[test]
    fn square_reference_is_extremal() {
        let u = square_ref();
        for x in [[0.5, 0.5], [0.1, 0.9], [0.01, 0.3]] {
            let s = sample(&u, x).unwrap();
            assert!((s.scalar_r - 8.0).abs() < 1e-10);
            assert!((s.rm_norm - 32f64.sqrt()).abs() < 1e-9);
            assert!(s.passes_norm_comparison());
        }
    }

    #[test]
    fn near_vertex_cancellation() {
        let u = square_ref();
        let rm = rm_norm(&u, [1e-3, 1e-3]).unwrap();
        assert!((rm - 32f64.sqrt()).abs() < 1e-6, "{rm}");
    }

    #[test]
    fn one_dimensional_reference_has_r_four() {
        for t in [0.05f64, 0.3, 0.5, 0.81] {
            let u2 = 0.5 * (1.0 / t + 1.0 / (1.0 - t));
            let u3 = 0.5 * (-1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)));
            let u4 = 0.5 * (2.0 / t.powi(3) + 2.0 / (1.0 - t).powi(3));
            assert!((scalar_curvature_1d(u2, u3, u4) - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn facet_chart_is_unimodular_and_aligned() {
        let p = DelzantPolygon::standard_simplex();
        for k in 0..3 {
            let c = FacetChart::new(&p, k);
            let m = c.matrix();
            assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1.0);
            let f = p.facets()[k];
            let x = c.to_world(0.3 * c.length, 0.25);
            assert!((f.eval(x) - 0.25).abs() < 1e-14);
            let end = c.to_world(c.length, 0.0);
            assert!(crate::polygon::dist(end, p.facet_endpoints(k).1) < 1e-14);
        }
    }

    #[test]
    fn square_edge_values() {
        let u = square_ref();
        let t = edge_curvature(&u, 0, 0.5, EdgeComponent::Tangential).unwrap();
        assert!((t + 4.0).abs() < 1e-12);
        for k in 0..4 {
            let m = edge_curvature(&u, k, 0.37, EdgeComponent::Mixed).unwrap();
            assert!(m.abs() < 1e-14);
            let rm2 = edge_curvature(&u, k, 0.37, EdgeComponent::RmSquared).unwrap();
            assert!((rm2 - 32.0).abs() < 1e-10);
        }
        assert!(matches!(
            edge_curvature(&u, 0, 0.0, EdgeComponent::Mixed),
            Err(Error::VertexPoint { .. })
        ));
    }
}
