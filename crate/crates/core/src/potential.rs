//! Symplectic potentials `u = sum_i 1/2 l_i ln l_i + f` with `f` polynomial.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polygon::{DelzantPolygon, Point, PolygonFile};
use crate::poly::{monomial_index, Poly2};

pub const DEFAULT_DEGREE: usize = 8;

/// `a0 + a1 x1 + a2 x2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AffineFunction {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl AffineFunction {
    pub const ZERO: Self = Self {
        a0: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    pub fn new(a0: f64, a1: f64, a2: f64) -> Self {
        Self { a0, a1, a2 }
    }

    pub fn constant(a0: f64) -> Self {
        Self::new(a0, 0.0, 0.0)
    }

    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        self.a0 + self.a1 * x[0] + self.a2 * x[1]
    }

    pub fn to_poly(&self) -> Poly2 {
        Poly2::linear(self.a0, self.a1, self.a2)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.a0 + other.a0, self.a1 + other.a1, self.a2 + other.a2)
    }

    pub fn max_abs(&self) -> f64 {
        self.a0.abs().max(self.a1.abs()).max(self.a2.abs())
    }

    pub fn coeffs(&self) -> [f64; 3] {
        [self.a0, self.a1, self.a2]
    }
}

/// Derivatives of a function of two variables at a point, up to order four.
/// Tensors are stored fully (not just their symmetric part).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub d3: [[[f64; 2]; 2]; 2],
    pub d4: [[[[f64; 2]; 2]; 2]; 2],
}

impl Jet {
    /// Jet of `y -> u(x0 + M y)` given the jet of `u` at `x0`.
    pub fn pull_back(&self, m: [[f64; 2]; 2]) -> Jet {
        let mut out = Jet {
            value: self.value,
            ..Jet::default()
        };
        for i in 0..2 {
            for a in 0..2 {
                out.grad[i] += self.grad[a] * m[a][i];
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        s += self.hess[a][b] * m[a][i] * m[b][j];
                    }
                }
                out.hess[i][j] = s;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut s = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            for c in 0..2 {
                                s += self.d3[a][b][c] * m[a][i] * m[b][j] * m[c][k];
                            }
                        }
                    }
                    out.d3[i][j][k] = s;
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let mut s = 0.0;
                        for a in 0..2 {
                            for b in 0..2 {
                                for c in 0..2 {
                                    for d in 0..2 {
                                        s += self.d4[a][b][c][d]
                                            * m[a][i]
                                            * m[b][j]
                                            * m[c][k]
                                            * m[d][l];
                                    }
                                }
                            }
                        }
                        out.d4[i][j][k][l] = s;
                    }
                }
            }
        }
        out
    }

    pub fn hessian_det(&self) -> f64 {
        self.hess[0][0] * self.hess[1][1] - self.hess[0][1] * self.hess[1][0]
    }

    /// `k`-th directional derivative along `v` for `k <= 4`.
    pub fn directional(&self, v: [f64; 2], k: usize) -> f64 {
        let mut s = 0.0;
        match k {
            0 => s = self.value,
            1 => {
                for a in 0..2 {
                    s += self.grad[a] * v[a];
                }
            }
            2 => {
                for a in 0..2 {
                    for b in 0..2 {
                        s += self.hess[a][b] * v[a] * v[b];
                    }
                }
            }
            3 => {
                for a in 0..2 {
                    for b in 0..2 {
                        for c in 0..2 {
                            s += self.d3[a][b][c] * v[a] * v[b] * v[c];
                        }
                    }
                }
            }
            4 => {
                for a in 0..2 {
                    for b in 0..2 {
                        for c in 0..2 {
                            for d in 0..2 {
                                s += self.d4[a][b][c][d] * v[a] * v[b] * v[c] * v[d];
                            }
                        }
                    }
                }
            }
            _ => panic!("directional derivative order {k} > 4"),
        }
        s
    }

    pub(crate) fn add_facet_log(&mut self, n: [f64; 2], l: f64, weight: f64, order: usize) {
        // derivatives of w/2 l ln l along n
        let w = weight;
        self.value += 0.5 * w * l * l.ln();
        if order == 0 {
            return;
        }
        let g = 0.5 * w * (l.ln() + 1.0);
        for a in 0..2 {
            self.grad[a] += g * n[a];
        }
        if order == 1 {
            return;
        }
        let h = 0.5 * w / l;
        for a in 0..2 {
            for b in 0..2 {
                self.hess[a][b] += h * n[a] * n[b];
            }
        }
        if order == 2 {
            return;
        }
        let t = -0.5 * w / (l * l);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    self.d3[a][b][c] += t * n[a] * n[b] * n[c];
                }
            }
        }
        if order == 3 {
            return;
        }
        let q = w / (l * l * l);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        self.d4[a][b][c][d] += q * n[a] * n[b] * n[c] * n[d];
                    }
                }
            }
        }
    }

    /// Add polynomial partials (indexed by `monomial_index(a, b)`).
    fn add_partials(&mut self, partials: &[f64], order: usize) {
        let p = |idx: &[usize]| {
            let b = idx.iter().filter(|&&i| i == 1).count();
            partials[monomial_index(idx.len() - b, b)]
        };
        self.value += partials[0];
        if order == 0 {
            return;
        }
        for i in 0..2 {
            self.grad[i] += p(&[i]);
        }
        if order == 1 {
            return;
        }
        for i in 0..2 {
            for j in 0..2 {
                self.hess[i][j] += p(&[i, j]);
            }
        }
        if order == 2 {
            return;
        }
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    self.d3[i][j][k] += p(&[i, j, k]);
                }
            }
        }
        if order == 3 {
            return;
        }
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        self.d4[i][j][k][l] += p(&[i, j, k, l]);
                    }
                }
            }
        }
    }
}

/// Affine rescaling of the bounding box onto `[-1, 1]^2`, used as the
/// coordinate frame for the polynomial part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub center: Point,
    pub half: [f64; 2],
}

impl Frame {
    pub fn of_polygon(polygon: &DelzantPolygon) -> Self {
        let (lo, hi) = polygon.bounding_box();
        Self {
            center: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
            half: [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])],
        }
    }

    #[inline]
    pub fn to_local(&self, x: Point) -> Point {
        [
            (x[0] - self.center[0]) / self.half[0],
            (x[1] - self.center[1]) / self.half[1],
        ]
    }

    /// Express a raw-coordinate polynomial in frame coordinates.
    pub fn poly_to_local(&self, raw: &Poly2) -> Poly2 {
        raw.compose_affine([[self.half[0], 0.0], [0.0, self.half[1]]], self.center)
    }

    /// Express a frame-coordinate polynomial in raw coordinates.
    pub fn poly_to_raw(&self, local: &Poly2) -> Poly2 {
        local.compose_affine(
            [[1.0 / self.half[0], 0.0], [0.0, 1.0 / self.half[1]]],
            [
                -self.center[0] / self.half[0],
                -self.center[1] / self.half[1],
            ],
        )
    }
}

/// A symplectic potential on a Delzant polygon.
///
/// `guillemin_weight` is 1 for genuine symplectic potentials. Setting it to
/// 0 gives a smooth (log-free) convex function, used as a synthetic test mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticPotential {
    polygon: Arc<DelzantPolygon>,
    frame: Frame,
    smooth: Poly2,
    guillemin_weight: f64,
    normalization: AffineFunction,
}

impl SymplecticPotential {
    /// The Guillemin reference potential with `f = 0`.
    pub fn guillemin(polygon: Arc<DelzantPolygon>, degree: usize) -> Self {
        let frame = Frame::of_polygon(&polygon);
        Self {
            polygon,
            frame,
            smooth: Poly2::zero(degree),
            guillemin_weight: 1.0,
            normalization: AffineFunction::ZERO,
        }
    }

    /// Guillemin reference plus a polynomial given in raw coordinates.
    pub fn with_raw_smooth(polygon: Arc<DelzantPolygon>, degree: usize, f: &Poly2) -> Self {
        let mut u = Self::guillemin(polygon, degree.max(f.degree()));
        u.smooth = u.frame.poly_to_local(f).with_degree(degree);
        u
    }

    /// The `amplitude * (x1^2 - x1)(x2^2 - x2)` perturbation of the reference.
    pub fn perturbed(polygon: Arc<DelzantPolygon>, degree: usize, amplitude: f64) -> Self {
        let bump = Poly2::from_terms(&[(2, 2, 1.0), (2, 1, -1.0), (1, 2, -1.0), (1, 1, 1.0)]);
        Self::with_raw_smooth(polygon, degree, &bump.scale(amplitude))
    }

    /// A log-free potential equal to the given polynomial.
    pub fn smooth_only(polygon: Arc<DelzantPolygon>, degree: usize, f: &Poly2) -> Self {
        let mut u = Self::with_raw_smooth(polygon, degree, f);
        u.guillemin_weight = 0.0;
        u
    }

    pub fn from_local_coeffs(
        polygon: Arc<DelzantPolygon>,
        degree: usize,
        coeffs: Vec<f64>,
    ) -> Self {
        let mut u = Self::guillemin(polygon, degree);
        u.smooth = Poly2::from_coeffs(degree, coeffs);
        u
    }

    pub fn polygon(&self) -> &DelzantPolygon {
        &self.polygon
    }

    pub fn polygon_arc(&self) -> &Arc<DelzantPolygon> {
        &self.polygon
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn degree(&self) -> usize {
        self.smooth.degree()
    }

    /// Coefficients of `f` in the rescaled frame.
    pub fn coeffs(&self) -> &[f64] {
        self.smooth.coeffs()
    }

    pub fn smooth_local(&self) -> &Poly2 {
        &self.smooth
    }

    /// `f` in raw coordinates.
    pub fn smooth_raw(&self) -> Poly2 {
        self.frame.poly_to_raw(&self.smooth)
    }

    pub fn guillemin_weight(&self) -> f64 {
        self.guillemin_weight
    }

    pub fn has_log_part(&self) -> bool {
        self.guillemin_weight != 0.0
    }

    /// Accumulated affine function subtracted by [`normalize`](Self::normalize).
    pub fn normalization(&self) -> AffineFunction {
        self.normalization
    }

    /// Same polygon and reference, new frame coefficients.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Self {
        Self {
            smooth: Poly2::from_coeffs(self.degree(), coeffs),
            ..self.clone()
        }
    }

    /// The reference `u_ref` on the same polygon (drops `f`).
    pub fn reference(&self) -> Self {
        Self::guillemin(self.polygon.clone(), self.degree())
    }

    fn affine_local(&self, g: &AffineFunction) -> Poly2 {
        self.frame.poly_to_local(&g.to_poly())
    }

    pub fn add_affine(&self, g: &AffineFunction) -> Self {
        Self {
            smooth: self.smooth.add(&self.affine_local(g)),
            ..self.clone()
        }
    }

    pub fn add_raw_poly(&self, p: &Poly2) -> Self {
        Self {
            smooth: self
                .smooth
                .add(&self.frame.poly_to_local(p))
                .with_degree(self.degree()),
            ..self.clone()
        }
    }

    /// `k * u` (log part included).
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            smooth: self.smooth.scale(k),
            guillemin_weight: self.guillemin_weight * k,
            ..self.clone()
        }
    }

    fn check_domain(&self, x: Point) -> Result<()> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::NonFinite { x: x[0], y: x[1] });
        }
        if self.has_log_part() && !self.polygon.contains_strictly(x) {
            return Err(Error::OutsideDomain { x: x[0], y: x[1] });
        }
        Ok(())
    }

    /// Value and derivatives of `u` up to `order` (at most 4) at an interior point.
    pub fn eval_derivatives(&self, x: Point, order: usize) -> Result<Jet> {
        self.check_domain(x)?;
        Ok(self.jet_skipping(x, order, None))
    }

    pub fn value(&self, x: Point) -> Result<f64> {
        Ok(self.eval_derivatives(x, 0)?.value)
    }

    /// Value on the closed polygon, with `l ln l = 0` on the facets.
    pub fn value_on_closure(&self, x: Point) -> Result<f64> {
        if !self.polygon.contains_closed(x) {
            return Err(Error::OutsideDomain { x: x[0], y: x[1] });
        }
        let mut v = 0.0;
        if self.has_log_part() {
            for f in self.polygon.facets() {
                let l = f.eval(x);
                if l > 0.0 {
                    v += 0.5 * self.guillemin_weight * l * l.ln();
                }
            }
        }
        let xi = self.frame.to_local(x);
        Ok(v + self.smooth.eval(xi[0], xi[1]))
    }

    /// Jet of `u - 1/2 l_i ln l_i`, which stays finite on the open facet `i`.
    pub fn jet_without_facet(&self, x: Point, facet: usize, order: usize) -> Result<Jet> {
        for (k, f) in self.polygon.facets().iter().enumerate() {
            if k != facet && self.has_log_part() && f.eval(x) <= 0.0 {
                return Err(Error::OutsideDomain { x: x[0], y: x[1] });
            }
        }
        Ok(self.jet_skipping(x, order, Some(facet)))
    }

    /// Jet of the smooth part `f` only.
    pub fn smooth_jet(&self, x: Point, order: usize) -> Jet {
        let mut jet = Jet::default();
        self.add_smooth(&mut jet, x, order);
        jet
    }

    fn jet_skipping(&self, x: Point, order: usize, skip: Option<usize>) -> Jet {
        assert!(order <= 4, "jets are available up to order 4");
        let mut jet = Jet::default();
        if self.has_log_part() {
            for (k, f) in self.polygon.facets().iter().enumerate() {
                if Some(k) == skip {
                    continue;
                }
                jet.add_facet_log(f.normal_f64(), f.eval(x), self.guillemin_weight, order);
            }
        }
        self.add_smooth(&mut jet, x, order);
        jet
    }

    fn add_smooth(&self, jet: &mut Jet, x: Point, order: usize) {
        let xi = self.frame.to_local(x);
        let mut partials = self.smooth.partials(xi[0], xi[1], order);
        let (sx, sy) = (1.0 / self.frame.half[0], 1.0 / self.frame.half[1]);
        for (idx, (a, b)) in crate::poly::exponents(order).enumerate() {
            partials[idx] *= sx.powi(a as i32) * sy.powi(b as i32);
        }
        jet.add_partials(&partials, order);
    }

    /// Subtract the tangent plane at `x0`, so that `u(x0) = 0` and `Du(x0) = 0`.
    pub fn normalize(&self, x0: Point) -> Result<Self> {
        Ok(self.normalize_with_shift(x0)?.0)
    }

    /// As [`normalize`](Self::normalize), also returning the subtracted affine function.
    pub fn normalize_with_shift(&self, x0: Point) -> Result<(Self, AffineFunction)> {
        let jet = self.eval_derivatives(x0, 1)?;
        let shift = AffineFunction::new(
            jet.value - jet.grad[0] * x0[0] - jet.grad[1] * x0[1],
            jet.grad[0],
            jet.grad[1],
        );
        let neg = AffineFunction::new(-shift.a0, -shift.a1, -shift.a2);
        let mut out = self.add_affine(&neg);
        out.normalization = self.normalization.add(&shift);
        Ok((out, shift))
    }

    /// Normalize at the polygon centroid.
    pub fn normalize_at_centroid(&self) -> Result<Self> {
        self.normalize(self.polygon.centroid())
    }

    /// Restriction `V(t) = u(p + t (q - p))`.
    pub fn restrict_to_segment(&self, p: Point, q: Point) -> Result<SegmentRestriction<'_>> {
        let poly = &self.polygon;
        if self.has_log_part() {
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let degenerate = p == q;
            if !poly.contains_closed(p)
                || !poly.contains_closed(q)
                || (!degenerate && !poly.contains_strictly(mid))
            {
                return Err(Error::SegmentExits);
            }
        }
        Ok(SegmentRestriction {
            potential: self,
            start: p,
            direction: [q[0] - p[0], q[1] - p[1]],
        })
    }

    /// Probe `det D^2u > 0` and `tr D^2u > 0` at the given points.
    pub fn convexity_probe(&self, points: &[Point]) -> ConvexityReport {
        let mut report = ConvexityReport {
            probed: 0,
            failures: 0,
            first_failure: None,
        };
        for &x in points {
            report.probed += 1;
            let ok = match self.eval_derivatives(x, 2) {
                Ok(jet) => jet.hessian_det() > 0.0 && jet.hess[0][0] + jet.hess[1][1] > 0.0,
                Err(_) => false,
            };
            if !ok {
                report.failures += 1;
                report.first_failure.get_or_insert(x);
            }
        }
        report
    }

    /// Image under the lattice map `x -> A x + t` of the polygon, with
    /// `u'(A x + t) = u(x)`.
    pub fn lattice_transform(&self, a: [[i64; 2]; 2], t: [f64; 2]) -> Result<Self> {
        let polygon = Arc::new(self.polygon.lattice_transform(a, t)?);
        let det = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) as f64;
        let inv = [
            [a[1][1] as f64 / det, -a[0][1] as f64 / det],
            [-a[1][0] as f64 / det, a[0][0] as f64 / det],
        ];
        let shift = [
            -(inv[0][0] * t[0] + inv[0][1] * t[1]),
            -(inv[1][0] * t[0] + inv[1][1] * t[1]),
        ];
        // compose frame to frame; going through raw monomials loses digits
        let mut out = Self::guillemin(polygon, self.degree());
        let (old, new) = (self.frame, out.frame);
        let y0 = new.center;
        let x0 = [
            inv[0][0] * y0[0] + inv[0][1] * y0[1] + shift[0],
            inv[1][0] * y0[0] + inv[1][1] * y0[1] + shift[1],
        ];
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = inv[i][j] * new.half[j] / old.half[i];
            }
        }
        let t = [
            (x0[0] - old.center[0]) / old.half[0],
            (x0[1] - old.center[1]) / old.half[1],
        ];
        out.smooth = self.smooth.compose_affine(m, t);
        out.guillemin_weight = self.guillemin_weight;
        Ok(out)
    }

    pub fn to_file(&self) -> PotentialFile {
        PotentialFile {
            polygon: self.polygon.to_file(),
            degree: self.degree(),
            frame: self.frame,
            coefficients: self.smooth.coeffs().to_vec(),
            guillemin_weight: self.guillemin_weight,
            normalization: self.normalization,
        }
    }

    pub fn from_file(file: &PotentialFile) -> Result<Self> {
        let polygon = file.polygon.build()?;
        let report = polygon.validate();
        if !report.is_valid() {
            return Err(Error::InvalidPolygon(report.to_string()));
        }
        let polygon = Arc::new(polygon);
        if file.coefficients.len() != crate::poly::monomial_count(file.degree) {
            return Err(Error::Parse(format!(
                "{} coefficients for degree {}",
                file.coefficients.len(),
                file.degree
            )));
        }
        Ok(Self {
            polygon,
            frame: file.frame,
            smooth: Poly2::from_coeffs(file.degree, file.coefficients.clone()),
            guillemin_weight: file.guillemin_weight,
            normalization: file.normalization,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub probed: usize,
    pub failures: usize,
    pub first_failure: Option<Point>,
}

impl ConvexityReport {
    pub fn is_convex(&self) -> bool {
        self.failures == 0
    }
}

/// One-variable restriction of a potential to a line segment.
#[derive(Debug, Clone, Copy)]
pub struct SegmentRestriction<'a> {
    potential: &'a SymplecticPotential,
    start: Point,
    direction: [f64; 2],
}

impl SegmentRestriction<'_> {
    pub fn point(&self, t: f64) -> Point {
        [
            self.start[0] + t * self.direction[0],
            self.start[1] + t * self.direction[1],
        ]
    }

    pub fn direction(&self) -> [f64; 2] {
        self.direction
    }

    /// `V^{(k)}(t)` for `k <= 4`, `t` in the open interval.
    pub fn derivative(&self, t: f64, k: usize) -> Result<f64> {
        let jet = self.potential.eval_derivatives(self.point(t), k)?;
        Ok(jet.directional(self.direction, k))
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.derivative(t, 0)
    }

    pub fn second_derivative(&self, t: f64) -> Result<f64> {
        self.derivative(t, 2)
    }
}

/// Serialized potential: the polygon, the degree and the frame coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialFile {
    pub polygon: PolygonFile,
    pub degree: usize,
    pub frame: Frame,
    pub coefficients: Vec<f64>,
    #[serde(default = "one")]
    pub guillemin_weight: f64,
    #[serde(default)]
    pub normalization: AffineFunction,
}

fn one() -> f64 {
    1.0
}

impl PotentialFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("potential serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("potential file: {e}")))
    }
}
