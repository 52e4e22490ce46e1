//! Graded quadrature on a polygon and its weighted boundary.
//!
//! The interior rule fans the polygon from its centroid. Each fan triangle is
//! cut into strips parallel to its facet at geometric spacing `1/2, 1/4, ...`
//! and each strip is graded again toward the two vertices, so cells shrink
//! where the `l ln l` terms are singular. Every cell is split into two
//! triangles carrying a symmetric positive-weight Gauss rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numeric::{compensated_sum, gauss_legendre_on};
use crate::polygon::{cross, dist, sub, DelzantPolygon, Point, Region};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Number of geometric grading levels toward the boundary.
    pub depth: usize,
    /// Required polynomial degree of the per-triangle rule.
    pub order: usize,
    /// Dyadic grading levels toward facet endpoints for boundary integrals.
    pub boundary_depth: usize,
    /// Gauss–Legendre nodes per boundary sub-interval.
    pub boundary_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            depth: 6,
            order: 7,
            boundary_depth: 24,
            boundary_nodes: 8,
        }
    }
}

/// Symmetric triangle rule in barycentric coordinates, weights summing to 1.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<([f64; 3], f64)>,
}

fn orbit3(a: f64, w: f64, out: &mut Vec<([f64; 3], f64)>) {
    let b = 1.0 - 2.0 * a;
    out.push(([a, a, b], w));
    out.push(([a, b, a], w));
    out.push(([b, a, a], w));
}

fn orbit6(a: f64, b: f64, w: f64, out: &mut Vec<([f64; 3], f64)>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        out.push((p, w));
    }
}

impl TriangleRule {
    /// Smallest tabulated rule exact for polynomials of degree `order`.
    pub fn for_order(order: usize) -> Self {
        let mut points = Vec::new();
        let degree = match order {
            0 | 1 => {
                points.push(([1.0 / 3.0; 3], 1.0));
                1
            }
            2 => {
                orbit3(1.0 / 6.0, 1.0 / 3.0, &mut points);
                2
            }
            3..=5 => {
                let s15 = 15f64.sqrt();
                points.push(([1.0 / 3.0; 3], 9.0 / 40.0));
                orbit3((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0, &mut points);
                orbit3((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0, &mut points);
                5
            }
            6..=8 => {
                // 16-point degree-8 rule, all weights positive, all nodes interior
                points.push(([1.0 / 3.0; 3], 0.144315607677787));
                orbit3(0.459292588292723, 0.095091634267285, &mut points);
                orbit3(0.170569307751760, 0.103217370534718, &mut points);
                orbit3(0.050547228317031, 0.032458497623198, &mut points);
                orbit6(0.008394777409958, 0.263112829634638, 0.027230314174435, &mut points);
                8
            }
            _ => panic!("no tabulated triangle rule of degree {order}"),
        };
        // remove the rounding of the tabulated weights
        let total: f64 = points.iter().map(|p| p.1).sum();
        for p in &mut points {
            p.1 /= total;
        }
        Self { degree, points }
    }

    fn apply(&self, tri: &[Point; 3], out: &mut Vec<QuadNode>) {
        let area = 0.5 * cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
        if area <= 0.0 {
            return;
        }
        for (b, w) in &self.points {
            out.push(QuadNode {
                x: [
                    b[0] * tri[0][0] + b[1] * tri[1][0] + b[2] * tri[2][0],
                    b[0] * tri[0][1] + b[1] * tri[1][1] + b[2] * tri[2][1],
                ],
                w: w * area,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadNode {
    pub x: Point,
    pub w: f64,
}

/// Interior and boundary quadrature for one polygon.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    config: QuadratureConfig,
    triangles: Vec<[Point; 3]>,
    interior: Vec<QuadNode>,
    /// Boundary sub-intervals with their dsigma mass per unit parameter.
    segments: Vec<([Point; 2], f64)>,
    boundary: Vec<QuadNode>,
    area: f64,
    boundary_measure: f64,
}

fn t_breaks(levels: usize) -> Vec<f64> {
    if levels == 0 {
        return vec![0.0, 1.0];
    }
    let mut t = vec![0.0];
    for m in (1..=levels).rev() {
        t.push(0.5f64.powi(m as i32));
    }
    for m in 2..=levels {
        t.push(1.0 - 0.5f64.powi(m as i32));
    }
    t.push(1.0);
    t
}

fn graded_breaks(depth: usize) -> Vec<f64> {
    let mut s: Vec<f64> = (0..=depth).map(|j| 1.0 - 0.5f64.powi(j as i32)).collect();
    s.push(1.0);
    s
}

impl QuadratureRule {
    pub fn new(polygon: &DelzantPolygon, config: QuadratureConfig) -> Self {
        let c = polygon.centroid();
        let mut triangles = Vec::new();
        let sb = graded_breaks(config.depth);
        for k in 0..polygon.len() {
            let (a, b) = polygon.facet_endpoints(k);
            let map = |s: f64, t: f64| -> Point {
                let e = [(1.0 - t) * a[0] + t * b[0], (1.0 - t) * a[1] + t * b[1]];
                [c[0] + s * (e[0] - c[0]), c[1] + s * (e[1] - c[1])]
            };
            for j in 0..sb.len() - 1 {
                let (s0, s1) = (sb[j], sb[j + 1]);
                let tb = t_breaks(j);
                for w in tb.windows(2) {
                    let (t0, t1) = (w[0], w[1]);
                    let q = [map(s0, t0), map(s1, t0), map(s1, t1), map(s0, t1)];
                    triangles.push([q[0], q[1], q[2]]);
                    if s0 > 0.0 {
                        triangles.push([q[0], q[2], q[3]]);
                    }
                }
            }
        }
        let mut segments = Vec::new();
        let tb = boundary_breaks(config.boundary_depth);
        for k in 0..polygon.len() {
            let (a, b) = polygon.facet_endpoints(k);
            let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let density = dist(a, b) * polygon.facets()[k].measure_weight();
            for w in tb.windows(2) {
                segments.push(([at(w[0]), at(w[1])], density * (w[1] - w[0])));
            }
        }
        Self::from_parts(config, triangles, segments, polygon.area(), polygon.boundary_measure())
    }

    fn from_parts(
        config: QuadratureConfig,
        triangles: Vec<[Point; 3]>,
        segments: Vec<([Point; 2], f64)>,
        area: f64,
        boundary_measure: f64,
    ) -> Self {
        let rule = TriangleRule::for_order(config.order);
        let mut interior = Vec::with_capacity(triangles.len() * rule.points.len());
        for tri in &triangles {
            rule.apply(tri, &mut interior);
        }
        let mut boundary = Vec::with_capacity(segments.len() * config.boundary_nodes);
        for &([p, q], mass) in &segments {
            for (t, wt) in gauss_legendre_on(config.boundary_nodes, 0.0, 1.0) {
                boundary.push(QuadNode {
                    x: [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])],
                    w: wt * mass,
                });
            }
        }
        Self {
            config,
            triangles,
            interior,
            segments,
            boundary,
            area,
            boundary_measure,
        }
    }

    /// Same rule with every triangle and boundary interval crossing
    /// `<a, x> = b` split along that line, so piecewise-linear integrands with
    /// that crease are integrated exactly.
    pub fn split_along_line(&self, a: [f64; 2], b: f64) -> Self {
        let mut triangles = Vec::with_capacity(self.triangles.len() + 64);
        for tri in &self.triangles {
            let region = Region {
                vertices: tri.to_vec(),
                edge_weights: vec![None; 3],
            };
            let side = |x: Point| a[0] * x[0] + a[1] * x[1] - b;
            let vals = tri.map(side);
            let crosses = vals.iter().any(|v| *v > 0.0) && vals.iter().any(|v| *v < 0.0);
            if !crosses {
                triangles.push(*tri);
                continue;
            }
            let tol = 1e-15 * dist(tri[0], tri[1]).max(dist(tri[1], tri[2]));
            for piece in [
                region.clip_halfplane(a, b, tol),
                region.clip_halfplane([-a[0], -a[1]], -b, tol),
            ] {
                let v = &piece.vertices;
                for i in 1..v.len().saturating_sub(1) {
                    triangles.push([v[0], v[i], v[i + 1]]);
                }
            }
        }
        let mut segments = Vec::with_capacity(self.segments.len() + 8);
        for &([p, q], mass) in &self.segments {
            let (vp, vq) = (a[0] * p[0] + a[1] * p[1] - b, a[0] * q[0] + a[1] * q[1] - b);
            if vp * vq < 0.0 {
                let t = vp / (vp - vq);
                let m = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                segments.push(([p, m], mass * t));
                segments.push(([m, q], mass * (1.0 - t)));
            } else {
                segments.push(([p, q], mass));
            }
        }
        Self::from_parts(
            self.config,
            triangles,
            segments,
            self.area,
            self.boundary_measure,
        )
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    pub fn interior_nodes(&self) -> &[QuadNode] {
        &self.interior
    }

    pub fn boundary_nodes(&self) -> &[QuadNode] {
        &self.boundary
    }

    pub fn triangles(&self) -> &[[Point; 3]] {
        &self.triangles
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn boundary_measure(&self) -> f64 {
        self.boundary_measure
    }

    /// `int_P f dx`.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(Point) -> f64 + Sync,
    {
        let vals: Vec<f64> = self.interior.par_iter().map(|n| n.w * f(n.x)).collect();
        compensated_sum(vals)
    }

    pub fn try_integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(Point) -> Result<f64> + Sync,
    {
        let vals: Vec<f64> = self
            .interior
            .par_iter()
            .map(|n| f(n.x).map(|v| n.w * v))
            .collect::<Result<_>>()?;
        Ok(compensated_sum(vals))
    }

    /// `int_{dP} f dsigma`.
    pub fn integrate_boundary<F>(&self, f: F) -> f64
    where
        F: Fn(Point) -> f64 + Sync,
    {
        let vals: Vec<f64> = self.boundary.par_iter().map(|n| n.w * f(n.x)).collect();
        compensated_sum(vals)
    }

    pub fn try_integrate_boundary<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(Point) -> Result<f64> + Sync,
    {
        let vals: Vec<f64> = self
            .boundary
            .par_iter()
            .map(|n| f(n.x).map(|v| n.w * v))
            .collect::<Result<_>>()?;
        Ok(compensated_sum(vals))
    }
}

fn boundary_breaks(depth: usize) -> Vec<f64> {
    let mut t = vec![0.0];
    for m in (1..=depth).rev() {
        t.push(0.5f64.powi(m as i32 + 1));
    }
    t.push(0.5);
    for m in 1..=depth {
        t.push(1.0 - 0.5f64.powi(m as i32 + 1));
    }
    t.push(1.0);
    t
}
