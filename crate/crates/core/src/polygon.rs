//! Delzant polygons, exact polygon moments and half-plane clipping.
//!
//! Facet `k` is the edge from vertex `k` to vertex `k + 1` (indices mod the
//! vertex count). Vertices run counterclockwise and every facet carries a
//! primitive inward integer normal `n_k` and offset `c_k`, so that
//! `l_k(x) = <x, n_k> - c_k` vanishes on the facet and is positive inside.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, gauss_legendre_on, CompensatedSum};
use crate::poly::Poly2;

/// Absolute tolerance for predicates on a polygon rescaled to a unit box.
pub const PREDICATE_TOL: f64 = 1e-9;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: [i64; 2],
    pub offset: f64,
}

impl Facet {
    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        self.normal[0] as f64 * x[0] + self.normal[1] as f64 * x[1] - self.offset
    }

    pub fn normal_f64(&self) -> [f64; 2] {
        [self.normal[0] as f64, self.normal[1] as f64]
    }

    pub fn normal_len(&self) -> f64 {
        (self.normal[0] as f64).hypot(self.normal[1] as f64)
    }

    /// Weight of the boundary measure on this facet, `1 / |n|`.
    pub fn measure_weight(&self) -> f64 {
        1.0 / self.normal_len()
    }
}

/// One violated condition found by [`DelzantPolygon::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooFewVertices { count: usize },
    FacetCountMismatch { vertices: usize, facets: usize },
    NotConvex { vertex: usize },
    NonPrimitiveNormal { facet: usize, normal: [i64; 2] },
    NormalNotInward { facet: usize },
    OffsetMismatch { facet: usize, expected: f64, given: f64 },
    VertexOutside { vertex: usize, facet: usize, value: f64 },
    NotDelzant { vertex: usize, determinant: i64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::TooFewVertices { count } => write!(f, "only {count} vertices"),
            Violation::FacetCountMismatch { vertices, facets } => {
                write!(f, "{facets} facets for {vertices} vertices")
            }
            Violation::NotConvex { vertex } => {
                write!(f, "vertex {vertex}: polygon not strictly convex/counterclockwise")
            }
            Violation::NonPrimitiveNormal { facet, normal } => {
                write!(f, "facet {facet}: normal {normal:?} is not primitive")
            }
            Violation::NormalNotInward { facet } => {
                write!(f, "facet {facet}: normal is not the inward normal of its edge")
            }
            Violation::OffsetMismatch {
                facet,
                expected,
                given,
            } => write!(f, "facet {facet}: offset {given} inconsistent with vertices ({expected})"),
            Violation::VertexOutside {
                vertex,
                facet,
                value,
            } => write!(f, "vertex {vertex} violates facet {facet} (l = {value})"),
            Violation::NotDelzant { vertex, determinant } => {
                write!(f, "vertex {vertex}: normal determinant {determinant} is not +-1")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid Delzant polygon");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// A convex lattice polygon with facet data.
#[derive(Debug, Clone, PartialEq)]
pub struct DelzantPolygon {
    vertices: Vec<Point>,
    facets: Vec<Facet>,
}

impl DelzantPolygon {
    /// Polygon from counterclockwise vertices; normals and offsets are derived.
    pub fn from_vertices(vertices: &[Point]) -> Result<Self> {
        Self::from_parts(vertices.to_vec(), None, None)
    }

    /// Build without running [`validate`](Self::validate). Missing normals are
    /// derived from edge directions, missing offsets from the vertices.
    pub fn from_parts(
        vertices: Vec<Point>,
        normals: Option<Vec<[i64; 2]>>,
        offsets: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidPolygon(format!("only {n} vertices")));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        let normals = match normals {
            Some(ns) => {
                if ns.len() != n {
                    return Err(Error::InvalidPolygon(format!(
                        "{} normals for {n} vertices",
                        ns.len()
                    )));
                }
                ns
            }
            None => (0..n)
                .map(|k| primitive_inward_normal(vertices[k], vertices[(k + 1) % n]))
                .collect::<Result<_>>()?,
        };
        let offsets = match offsets {
            Some(cs) => {
                if cs.len() != n {
                    return Err(Error::InvalidPolygon(format!(
                        "{} offsets for {n} vertices",
                        cs.len()
                    )));
                }
                cs
            }
            None => (0..n)
                .map(|k| {
                    let nk = normals[k];
                    let (a, b) = (vertices[k], vertices[(k + 1) % n]);
                    // average of both endpoints absorbs rounding in float input
                    0.5 * (nk[0] as f64 * (a[0] + b[0]) + nk[1] as f64 * (a[1] + b[1]))
                })
                .collect(),
        };
        let facets = normals
            .into_iter()
            .zip(offsets)
            .map(|(normal, offset)| Facet { normal, offset })
            .collect();
        Ok(Self { vertices, facets })
    }

    /// Build and reject anything [`validate`](Self::validate) flags.
    pub fn checked(
        vertices: Vec<Point>,
        normals: Option<Vec<[i64; 2]>>,
        offsets: Option<Vec<f64>>,
    ) -> Result<Self> {
        let poly = Self::from_parts(vertices, normals, offsets)?;
        let report = poly.validate();
        if report.is_valid() {
            Ok(poly)
        } else {
            Err(Error::InvalidPolygon(report.to_string()))
        }
    }

    pub fn unit_square() -> Self {
        Self::from_vertices(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
            .expect("unit square")
    }

    /// The standard simplex with vertices (0,0), (1,0), (0,1).
    pub fn standard_simplex() -> Self {
        Self::from_vertices(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).expect("simplex")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Endpoints of facet `k`.
    pub fn facet_endpoints(&self, k: usize) -> (Point, Point) {
        (self.vertices[k], self.vertices[(k + 1) % self.len()])
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        bounding_box(&self.vertices)
    }

    /// Length scale used to turn [`PREDICATE_TOL`] into an absolute tolerance.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi[0] - lo[0]).max(hi[1] - lo[1])
    }

    pub fn area(&self) -> f64 {
        self.as_region().area()
    }

    pub fn centroid(&self) -> Point {
        self.as_region().centroid()
    }

    /// Values `l_i(x)` for all facets.
    pub fn facet_values(&self, x: Point) -> Vec<f64> {
        self.facets.iter().map(|f| f.eval(x)).collect()
    }

    /// Smallest facet value at `x`.
    pub fn min_facet_value(&self, x: Point) -> f64 {
        self.facets
            .iter()
            .map(|f| f.eval(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains_strictly(&self, x: Point) -> bool {
        self.facets.iter().all(|f| f.eval(x) > 0.0)
    }

    pub fn contains_closed(&self, x: Point) -> bool {
        let tol = PREDICATE_TOL * self.scale();
        self.facets.iter().all(|f| f.eval(x) >= -tol * f.normal_len())
    }

    /// Weighted perimeter `sigma(dP)`.
    pub fn boundary_measure(&self) -> f64 {
        compensated_sum((0..self.len()).map(|k| {
            let (a, b) = self.facet_endpoints(k);
            dist(a, b) * self.facets[k].measure_weight()
        }))
    }

    /// Range of `<a, x>` over the polygon.
    pub fn support_interval(&self, a: [f64; 2]) -> (f64, f64) {
        self.vertices
            .iter()
            .map(|v| a[0] * v[0] + a[1] * v[1])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s), hi.max(s))
            })
    }

    /// Check every Delzant-polygon invariant and list all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.vertices.len();
        if n < 3 {
            violations.push(Violation::TooFewVertices { count: n });
            return ValidationReport { violations };
        }
        if self.facets.len() != n {
            violations.push(Violation::FacetCountMismatch {
                vertices: n,
                facets: self.facets.len(),
            });
            return ValidationReport { violations };
        }
        let scale = self.scale();
        let tol = PREDICATE_TOL;
        for k in 0..n {
            let prev = self.vertices[(k + n - 1) % n];
            let cur = self.vertices[k];
            let next = self.vertices[(k + 1) % n];
            let turn = cross(sub(cur, prev), sub(next, cur)) / (scale * scale);
            if turn <= tol {
                violations.push(Violation::NotConvex { vertex: k });
            }
        }
        for (k, facet) in self.facets.iter().enumerate() {
            let [a, b] = facet.normal;
            if a.gcd(&b) != 1 {
                violations.push(Violation::NonPrimitiveNormal {
                    facet: k,
                    normal: facet.normal,
                });
            }
            let (p, q) = self.facet_endpoints(k);
            let d = sub(q, p);
            let nf = facet.normal_f64();
            let len = (d[0].hypot(d[1])) * facet.normal_len();
            let along = (nf[0] * d[0] + nf[1] * d[1]) / len;
            let inward = cross(d, nf) / len;
            if along.abs() > tol || inward <= 0.0 {
                violations.push(Violation::NormalNotInward { facet: k });
            }
            let expected = 0.5 * (nf[0] * (p[0] + q[0]) + nf[1] * (p[1] + q[1]));
            if (expected - facet.offset).abs() > tol * scale * facet.normal_len() {
                violations.push(Violation::OffsetMismatch {
                    facet: k,
                    expected,
                    given: facet.offset,
                });
            }
        }
        for (v, x) in self.vertices.iter().enumerate() {
            for (k, facet) in self.facets.iter().enumerate() {
                let value = facet.eval(*x);
                if value < -tol * scale * facet.normal_len() {
                    violations.push(Violation::VertexOutside {
                        vertex: v,
                        facet: k,
                        value,
                    });
                }
            }
        }
        for k in 0..n {
            let a = self.facets[(k + n - 1) % n].normal;
            let b = self.facets[k].normal;
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() != 1 {
                violations.push(Violation::NotDelzant {
                    vertex: k,
                    determinant: det,
                });
            }
        }
        ValidationReport { violations }
    }

    /// Image under `x -> A x + t` for an integer matrix with determinant +-1.
    pub fn lattice_transform(&self, a: [[i64; 2]; 2], t: [f64; 2]) -> Result<Self> {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.abs() != 1 {
            return Err(Error::InvalidPolygon(format!(
                "lattice map has determinant {det}"
            )));
        }
        // A^{-T} for a unimodular A, in integers.
        let inv_t = [
            [a[1][1] * det, -a[1][0] * det],
            [-a[0][1] * det, a[0][0] * det],
        ];
        let map = |x: Point| -> Point {
            [
                a[0][0] as f64 * x[0] + a[0][1] as f64 * x[1] + t[0],
                a[1][0] as f64 * x[0] + a[1][1] as f64 * x[1] + t[1],
            ]
        };
        let facet_map = |f: &Facet| -> Facet {
            let n = [
                inv_t[0][0] * f.normal[0] + inv_t[0][1] * f.normal[1],
                inv_t[1][0] * f.normal[0] + inv_t[1][1] * f.normal[1],
            ];
            Facet {
                normal: n,
                offset: f.offset + n[0] as f64 * t[0] + n[1] as f64 * t[1],
            }
        };
        let n = self.len();
        let (vertices, facets): (Vec<Point>, Vec<Facet>) = if det > 0 {
            (
                self.vertices.iter().copied().map(map).collect(),
                self.facets.iter().map(facet_map).collect(),
            )
        } else {
            // orientation reverses: walk the old polygon backwards
            (
                (0..n).map(|j| map(self.vertices[n - 1 - j])).collect(),
                (0..n)
                    .map(|j| facet_map(&self.facets[(2 * n - 2 - j) % n]))
                    .collect(),
            )
        };
        Ok(Self { vertices, facets })
    }

    /// The polygon as a moment-integration region, every edge carrying its
    /// boundary-measure weight.
    pub fn as_region(&self) -> Region {
        Region {
            vertices: self.vertices.clone(),
            edge_weights: self.facets.iter().map(|f| Some(f.measure_weight())).collect(),
        }
    }

    /// `int_P p dx`.
    pub fn interior_moment(&self, p: &Poly2) -> f64 {
        self.as_region().interior_moment(p)
    }

    /// `int_{dP} p dsigma`.
    pub fn boundary_moment(&self, p: &Poly2) -> f64 {
        self.as_region().boundary_moment(p)
    }

    /// Part of the polygon where `<a, x> - b >= 0`.
    pub fn clip_halfplane(&self, a: [f64; 2], b: f64) -> Region {
        self.as_region().clip_halfplane(a, b, PREDICATE_TOL * self.scale())
    }

    pub fn to_file(&self) -> PolygonFile {
        PolygonFile {
            vertices: self
                .vertices
                .iter()
                .map(|v| [Scalar::Num(v[0]), Scalar::Num(v[1])])
                .collect(),
            normals: Some(self.facets.iter().map(|f| f.normal).collect()),
            offsets: Some(self.facets.iter().map(|f| Scalar::Num(f.offset)).collect()),
        }
    }
}

/// A convex region with per-edge boundary weights. Edges with weight `None`
/// (crease cuts from clipping) carry no boundary-measure mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub vertices: Vec<Point>,
    pub edge_weights: Vec<Option<f64>>,
}

impl Region {
    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            edge_weights: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let n = self.vertices.len();
        0.5 * compensated_sum(
            (0..n).map(|k| cross(self.vertices[k], self.vertices[(k + 1) % n])),
        )
    }

    pub fn centroid(&self) -> Point {
        let area = self.area();
        let x = self.interior_moment(&Poly2::linear(0.0, 1.0, 0.0));
        let y = self.interior_moment(&Poly2::linear(0.0, 0.0, 1.0));
        [x / area, y / area]
    }

    /// Exact `int p dx` by Green's-theorem edge reduction, in a frame
    /// centered at the first vertex.
    pub fn interior_moment(&self, p: &Poly2) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let origin = self.vertices[0];
        let shifted = p.compose_affine([[1.0, 0.0], [0.0, 1.0]], origin);
        let local: Vec<Point> = self.vertices.iter().map(|v| sub(*v, origin)).collect();
        let mut acc = CompensatedSum::new();
        for (i, j, c) in shifted.terms() {
            if c != 0.0 {
                acc.add(c * monomial_moment(&local, i, j));
            }
        }
        acc.value()
    }

    /// Exact weighted boundary integral over the edges that carry weight.
    pub fn boundary_moment(&self, p: &Poly2) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let n = self.vertices.len();
        let nodes = p.degree() / 2 + 1;
        let rule = gauss_legendre_on(nodes, 0.0, 1.0);
        let mut acc = CompensatedSum::new();
        for k in 0..n {
            let Some(w) = self.edge_weights[k] else {
                continue;
            };
            let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
            let len = dist(a, b);
            if len == 0.0 {
                continue;
            }
            let s: f64 = rule
                .iter()
                .map(|&(t, wt)| wt * p.eval(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
                .sum();
            acc.add(w * len * s);
        }
        acc.value()
    }

    /// Sutherland–Hodgman clip to `<a, x> - b >= 0`, keeping edge weights.
    pub fn clip_halfplane(&self, a: [f64; 2], b: f64, tol: f64) -> Region {
        if self.is_empty() {
            return Region::empty();
        }
        let n = self.vertices.len();
        let norm = a[0].hypot(a[1]);
        let side = |x: Point| (a[0] * x[0] + a[1] * x[1] - b) / norm;
        // (vertex, weight of the edge arriving at it)
        let mut out: Vec<(Point, Option<f64>)> = Vec::with_capacity(n + 2);
        for k in 0..n {
            let p = self.vertices[k];
            let q = self.vertices[(k + 1) % n];
            let w = self.edge_weights[k];
            let (sp, sq) = (side(p), side(q));
            let p_in = sp >= -tol;
            let q_in = sq >= -tol;
            match (p_in, q_in) {
                (true, true) => out.push((q, w)),
                (true, false) => {
                    if sp > tol {
                        out.push((lerp(p, q, sp / (sp - sq)), w));
                    }
                }
                (false, true) => {
                    if sq > tol {
                        out.push((lerp(p, q, sp / (sp - sq)), None));
                        out.push((q, w));
                    } else {
                        out.push((q, None));
                    }
                }
                (false, false) => {}
            }
        }
        // drop coincident consecutive vertices
        let mut cleaned: Vec<(Point, Option<f64>)> = Vec::with_capacity(out.len());
        for (v, w) in out {
            if let Some(last) = cleaned.last() {
                if dist(last.0, v) <= tol {
                    continue;
                }
            }
            cleaned.push((v, w));
        }
        while cleaned.len() > 1 && dist(cleaned[0].0, cleaned[cleaned.len() - 1].0) <= tol {
            let (_, w) = cleaned.remove(0);
            // keep the arriving weight of the merged vertex
            let last = cleaned.len() - 1;
            if cleaned[last].1.is_none() {
                cleaned[last].1 = w;
            }
        }
        if cleaned.len() < 3 {
            return Region::empty();
        }
        let m = cleaned.len();
        let region = Region {
            vertices: cleaned.iter().map(|(v, _)| *v).collect(),
            edge_weights: (0..m).map(|k| cleaned[(k + 1) % m].1).collect(),
        };
        if region.area() <= tol * tol {
            return Region::empty();
        }
        region
    }
}

/// `int x^p y^q dA` over a counterclockwise polygon.
fn monomial_moment(vertices: &[Point], p: usize, q: usize) -> f64 {
    let n = vertices.len();
    let mut acc = CompensatedSum::new();
    for k in 0..n {
        let [x0, y0] = vertices[k];
        let [x1, y1] = vertices[(k + 1) % n];
        let c = x0 * y1 - x1 * y0;
        if c == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for i in 0..=p {
            for j in 0..=q {
                inner += binomial(i + j, j)
                    * binomial(p + q - i - j, q - j)
                    * x0.powi(i as i32)
                    * x1.powi((p - i) as i32)
                    * y0.powi(j as i32)
                    * y1.powi((q - j) as i32);
            }
        }
        acc.add(c * inner);
    }
    let s = (p + q) as f64;
    acc.value() / ((s + 2.0) * (s + 1.0) * binomial(p + q, p))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Primitive integer vector pointing inward from the counterclockwise edge
/// `a -> b`, from a small-denominator rational fit of the edge slope.
fn primitive_inward_normal(a: Point, b: Point) -> Result<[i64; 2]> {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let big = dx.abs().max(dy.abs());
    if !(big > 0.0) {
        return Err(Error::InvalidPolygon("repeated vertex".into()));
    }
    // the edge direction, scaled so its larger component is +-1, must be rational
    let small = if dx.abs() >= dy.abs() { dy / dx.abs() } else { dx / dy.abs() };
    let (p, q) = rational_approximation(small, MAX_DENOMINATOR, PREDICATE_TOL).ok_or_else(|| {
        Error::InvalidPolygon(format!("edge direction ({dx}, {dy}) is not rational"))
    })?;
    let (ix, iy) = if dx.abs() >= dy.abs() {
        (q * dx.signum() as i64, p)
    } else {
        (p, q * dy.signum() as i64)
    };
    let g = ix.gcd(&iy);
    // inward normal of a ccw edge is the edge direction rotated by +90 degrees
    Ok([-iy / g, ix / g])
}

const MAX_DENOMINATOR: i64 = 1000;

/// Best continued-fraction approximation `p/q` of `x` within `tol`.
fn rational_approximation(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i64;
        let (p2, q2) = (ai.checked_mul(p1)?.checked_add(p0)?, ai.checked_mul(q1)?.checked_add(q0)?);
        if q2 > max_den {
            return None;
        }
        if (x - p2 as f64 / q2 as f64).abs() <= tol {
            return Some((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        r = 1.0 / (r - a);
        if !r.is_finite() {
            return None;
        }
    }
    None
}

/// On-disk polygon description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonFile {
    pub vertices: Vec<[Scalar; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<[i64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<Scalar>>,
}

/// A coordinate given either as a number or as an exact rational string `"p/q"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64> {
        match self {
            Scalar::Num(x) => Ok(*x),
            Scalar::Text(s) => parse_rational(s),
        }
    }
}

fn parse_rational(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("cannot parse scalar {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(p as f64 / q as f64)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

impl PolygonFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("polygon file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polygon serializes")
    }

    /// Build the polygon without validating it.
    pub fn build(&self) -> Result<DelzantPolygon> {
        let vertices = self
            .vertices
            .iter()
            .map(|[x, y]| Ok([x.value()?, y.value()?]))
            .collect::<Result<Vec<_>>>()?;
        let offsets = self
            .offsets
            .as_ref()
            .map(|cs| cs.iter().map(Scalar::value).collect::<Result<Vec<_>>>())
            .transpose()?;
        DelzantPolygon::from_parts(vertices, self.normals.clone(), offsets)
    }
}

pub(crate) fn bounding_box(points: &[Point]) -> (Point, Point) {
    points.iter().fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), p| {
            (
                [lo[0].min(p[0]), lo[1].min(p[1])],
                [hi[0].max(p[0]), hi[1].max(p[1])],
            )
        },
    )
}

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[inline]
pub(crate) fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}
