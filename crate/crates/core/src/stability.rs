//! Relative K-stability diagnostics: single-crease PL test functions, the
//! `lambda` search, the M-condition sampler and straight-ray diameter bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::crease_moments;
use crate::numeric::{compensated_sum, gauss_legendre_on};
use crate::polygon::{DelzantPolygon, Point};
use crate::potential::{AffineFunction, SymplecticPotential};

/// `max(0, <a, x> - b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreaseFunction {
    pub a: [f64; 2],
    pub b: f64,
}

impl CreaseFunction {
    pub fn new(a: [f64; 2], b: f64) -> Self {
        Self { a, b }
    }

    pub fn value(&self, x: Point) -> f64 {
        (self.a[0] * x[0] + self.a[1] * x[1] - self.b).max(0.0)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new([k * self.a[0], k * self.a[1]], k * self.b)
    }

    /// Whether `x0` lies on the zero side.
    pub fn is_oriented(&self, x0: Point) -> bool {
        self.a[0] * x0[0] + self.a[1] * x0[1] - self.b <= 0.0
    }

    /// Empty positive side, or the function is affine on all of `P`.
    pub fn is_degenerate(&self, polygon: &DelzantPolygon) -> bool {
        let (lo, hi) = polygon.support_interval(self.a);
        let tol = 1e-12 * (hi - lo).abs().max(1.0);
        hi <= self.b + tol || lo >= self.b - tol
    }
}

/// `L(c)` together with `int_{dP} c dsigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CreaseEvaluation {
    pub crease: CreaseFunction,
    pub l: f64,
    pub boundary: f64,
    pub degenerate: bool,
}

impl CreaseEvaluation {
    pub fn ratio(&self) -> f64 {
        if self.degenerate || self.boundary <= 0.0 {
            f64::INFINITY
        } else {
            self.l / self.boundary
        }
    }
}

/// Exact `L(c)` from clipping and polygon moments. Degenerate creases give 0.
pub fn l_of_crease(
    polygon: &DelzantPolygon,
    theta: &AffineFunction,
    crease: &CreaseFunction,
) -> CreaseEvaluation {
    if crease.is_degenerate(polygon) {
        return CreaseEvaluation {
            crease: *crease,
            l: 0.0,
            boundary: 0.0,
            degenerate: true,
        };
    }
    let (l, boundary) = crease_moments(polygon, theta, crease.a, crease.b);
    CreaseEvaluation {
        crease: *crease,
        l,
        boundary,
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CreaseSearchConfig {
    pub directions: usize,
    pub offsets: usize,
    /// Number of best grid cells refined by golden-section search.
    pub refine_cells: usize,
    pub golden_iterations: usize,
}

impl Default for CreaseSearchConfig {
    fn default() -> Self {
        Self {
            directions: 720,
            offsets: 200,
            refine_cells: 8,
            golden_iterations: 40,
        }
    }
}

/// The crease with direction angle `phi` whose offset sits a fraction `s` of
/// the way from `x0` to the far end of the support interval.
pub fn crease_at(polygon: &DelzantPolygon, x0: Point, phi: f64, s: f64) -> CreaseFunction {
    let a = [phi.cos(), phi.sin()];
    let b0 = a[0] * x0[0] + a[1] * x0[1];
    let (_, hi) = polygon.support_interval(a);
    CreaseFunction::new(a, b0 + s * (hi - b0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CreaseSample {
    pub phi: f64,
    pub s: f64,
    pub eval: CreaseEvaluation,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaEstimate {
    pub lambda_hat: f64,
    pub argmin: CreaseFunction,
    pub argmin_phi: f64,
    pub argmin_s: f64,
    /// Smallest ratio over the grid alone.
    pub grid_min: f64,
    #[serde(skip)]
    pub samples: Vec<CreaseSample>,
}

impl LambdaEstimate {
    /// Whether some PL crease in the family has `L <= 0`.
    pub fn destabilized(&self) -> bool {
        self.lambda_hat <= 0.0
    }

    pub fn samples_csv(&self) -> String {
        let mut out = String::from("phi,s,a1,a2,b,l,boundary,ratio\n");
        for c in &self.samples {
            let e = c.eval;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.phi,
                c.s,
                e.crease.a[0],
                e.crease.a[1],
                e.crease.b,
                e.l,
                e.boundary,
                e.ratio()
            ));
        }
        out
    }
}

/// Ratios closer than this count as ties, broken by the smaller `(phi, s)`.
pub const TIE_QUANTUM: f64 = 1e-12;

fn key(c: &CreaseSample) -> (f64, f64, f64) {
    let r = c.eval.ratio();
    let q = if r.is_finite() { (r / TIE_QUANTUM).round() } else { f64::INFINITY };
    (q, c.phi, c.s)
}

fn better(a: &CreaseSample, b: &CreaseSample) -> bool {
    key(a) < key(b)
}

fn sample(polygon: &DelzantPolygon, theta: &AffineFunction, x0: Point, phi: f64, s: f64) -> CreaseSample {
    let crease = crease_at(polygon, x0, phi, s);
    CreaseSample {
        phi,
        s,
        eval: l_of_crease(polygon, theta, &crease),
    }
}

/// Every crease of a `directions x offsets` grid, in grid order.
pub fn crease_grid(
    polygon: &DelzantPolygon,
    theta: &AffineFunction,
    x0: Point,
    directions: usize,
    offsets: usize,
) -> Vec<CreaseSample> {
    (0..directions * offsets)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / offsets, idx % offsets);
            let phi = std::f64::consts::TAU * i as f64 / directions as f64;
            sample(polygon, theta, x0, phi, j as f64 / offsets as f64)
        })
        .collect()
}

/// Best crease of a `directions x offsets` grid without storing the samples.
pub fn crease_grid_min(
    polygon: &DelzantPolygon,
    theta: &AffineFunction,
    x0: Point,
    directions: usize,
    offsets: usize,
) -> CreaseSample {
    (0..directions * offsets)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / offsets, idx % offsets);
            let phi = std::f64::consts::TAU * i as f64 / directions as f64;
            sample(polygon, theta, x0, phi, j as f64 / offsets as f64)
        })
        .reduce_with(|a, b| if better(&b, &a) { b } else { a })
        .expect("non-empty grid")
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iterations: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iterations {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimize `L(c) / int_{dP} c dsigma` over creases with `x0` on the zero side.
pub fn lambda_estimate(
    polygon: &DelzantPolygon,
    theta: &AffineFunction,
    x0: Point,
    cfg: &CreaseSearchConfig,
) -> LambdaEstimate {
    let samples = crease_grid(polygon, theta, x0, cfg.directions, cfg.offsets);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&i, &j| key(&samples[i]).partial_cmp(&key(&samples[j])).expect("ordered keys"));
    let grid_best = samples[order[0]];
    let dphi = std::f64::consts::TAU / cfg.directions as f64;
    let ds = 1.0 / cfg.offsets as f64;
    let refined: Vec<CreaseSample> = order
        .iter()
        .take(cfg.refine_cells)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&idx| {
            let cell = samples[idx];
            let s_lo = (cell.s - ds).max(0.0);
            let s_hi = (cell.s + ds).min(1.0 - 0.5 * ds);
            let best_s = |phi: f64| {
                golden_min(
                    |s| sample(polygon, theta, x0, phi, s).eval.ratio(),
                    s_lo,
                    s_hi,
                    cfg.golden_iterations,
                )
            };
            let (phi, _) = golden_min(|phi| best_s(phi).1, cell.phi - dphi, cell.phi + dphi, cfg.golden_iterations);
            let (s, _) = best_s(phi);
            sample(polygon, theta, x0, phi, s)
        })
        .collect();
    let mut best = grid_best;
    for r in &refined {
        if key(r).0 < key(&best).0 {
            best = *r;
        }
    }
    LambdaEstimate {
        lambda_hat: best.eval.ratio(),
        argmin: best.eval.crease,
        argmin_phi: best.phi,
        argmin_s: best.s,
        grid_min: grid_best.eval.ratio(),
        samples,
    }
}

/// A segment `x1 x4` with its third points `x2`, `x3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentTriple {
    pub x1: Point,
    pub x2: Point,
    pub x3: Point,
    pub x4: Point,
    /// Unit vector from `x1` to `x4`.
    pub v: [f64; 2],
}

impl SegmentTriple {
    pub fn new(x1: Point, x4: Point) -> Result<Self> {
        let d = [x4[0] - x1[0], x4[1] - x1[1]];
        let len = d[0].hypot(d[1]);
        if len == 0.0 || !len.is_finite() {
            return Err(Error::SegmentExits);
        }
        let at = |t: f64| [x1[0] + t * d[0], x1[1] + t * d[1]];
        Ok(Self {
            x1,
            x2: at(1.0 / 3.0),
            x3: at(2.0 / 3.0),
            x4,
            v: [d[0] / len, d[1] / len],
        })
    }
}

/// `|Du.v(x2) - Du.v(x3)|` on one segment.
pub fn m_value(u: &SymplecticPotential, seg: &SegmentTriple) -> Result<f64> {
    let poly = u.polygon();
    let mid = [0.5 * (seg.x1[0] + seg.x4[0]), 0.5 * (seg.x1[1] + seg.x4[1])];
    if u.has_log_part()
        && !(poly.contains_closed(seg.x1) && poly.contains_closed(seg.x4) && poly.contains_strictly(mid))
    {
        return Err(Error::SegmentExits);
    }
    let g2 = u.eval_derivatives(seg.x2, 1)?.grad;
    let g3 = u.eval_derivatives(seg.x3, 1)?.grad;
    Ok(((g2[0] - g3[0]) * seg.v[0] + (g2[1] - g3[1]) * seg.v[1]).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MConditionConfig {
    /// Facet offsets `l_k = delta` of the near-boundary sample points.
    pub offsets: Vec<f64>,
    pub per_facet: usize,
    /// Radial and angular counts of the interior points in each fan triangle.
    pub interior_radial: usize,
    pub interior_angular: usize,
}

impl Default for MConditionConfig {
    fn default() -> Self {
        Self {
            offsets: vec![1e-2, 1e-3, 1e-4],
            per_facet: 8,
            interior_radial: 3,
            interior_angular: 3,
        }
    }
}

/// The sample points: near-boundary points pushed toward the centroid until
/// `l_k = delta`, plus a grid in each centroid fan triangle.
pub fn m_condition_points(polygon: &DelzantPolygon, cfg: &MConditionConfig) -> Vec<Point> {
    let c = polygon.centroid();
    let mut pts = Vec::new();
    for k in 0..polygon.len() {
        let (a, b) = polygon.facet_endpoints(k);
        let lc = polygon.facets()[k].eval(c);
        for j in 0..cfg.per_facet {
            let s = (j as f64 + 0.5) / cfg.per_facet as f64;
            let e = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            for &delta in &cfg.offsets {
                let r = delta / lc;
                pts.push([e[0] + r * (c[0] - e[0]), e[1] + r * (c[1] - e[1])]);
            }
        }
        for i in 1..=cfg.interior_radial {
            let r = i as f64 / (cfg.interior_radial + 1) as f64;
            for j in 1..=cfg.interior_angular {
                let s = j as f64 / (cfg.interior_angular + 1) as f64;
                pts.push([
                    c[0] + r * ((1.0 - s) * (a[0] - c[0]) + s * (b[0] - c[0])),
                    c[1] + r * ((1.0 - s) * (a[1] - c[1]) + s * (b[1] - c[1])),
                ]);
            }
        }
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MConditionEstimate {
    pub m_hat: f64,
    pub worst: Option<SegmentTriple>,
    pub segments: usize,
    pub skipped: usize,
}

/// Maximum of [`m_value`] over all segments between pairs of `points`.
pub fn m_condition_over(u: &SymplecticPotential, points: &[Point]) -> Result<MConditionEstimate> {
    let pairs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (i + 1..points.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<Option<(f64, SegmentTriple)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let seg = SegmentTriple::new(points[i], points[j]).ok()?;
            match m_value(u, &seg) {
                Ok(v) => Some(Ok((v, seg))),
                Err(Error::SegmentExits) => None,
                Err(e) => Some(Err(e)),
            }
        })
        .map(|r| r.transpose())
        .collect::<Result<_>>()?;
    let mut est = MConditionEstimate {
        m_hat: 0.0,
        worst: None,
        segments: 0,
        skipped: 0,
    };
    for v in values {
        match v {
            Some((m, seg)) => {
                est.segments += 1;
                if m > est.m_hat || est.worst.is_none() {
                    est.m_hat = m;
                    est.worst = Some(seg);
                }
            }
            None => est.skipped += 1,
        }
    }
    Ok(est)
}

pub fn m_condition_estimate(u: &SymplecticPotential, cfg: &MConditionConfig) -> Result<MConditionEstimate> {
    m_condition_over(u, &m_condition_points(u.polygon(), cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiameterConfig {
    /// Dyadic refinement levels toward each end of a ray.
    pub depth: usize,
    pub nodes: usize,
}

impl Default for DiameterConfig {
    fn default() -> Self {
        Self { depth: 40, nodes: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayLength {
    pub p: Point,
    pub q: Point,
    pub length: f64,
    /// `sqrt(min V'') |q - p|` over the quadrature samples of the ray.
    pub lower_bound: f64,
}

/// Length `int_0^1 sqrt((q-p)^T D^2u (q-p)) dt` of a straight ray, with
/// `t^{-1/2}`-type endpoint singularities handled by dyadic splitting and a
/// tail term `2 sqrt(kappa eps)` when an endpoint sits on the boundary.
pub fn ray_length(u: &SymplecticPotential, p: Point, q: Point, cfg: &DiameterConfig) -> Result<RayLength> {
    let len = (q[0] - p[0]).hypot(q[1] - p[1]);
    if len == 0.0 {
        return Ok(RayLength {
            p,
            q,
            length: 0.0,
            lower_bound: 0.0,
        });
    }
    let seg = u.restrict_to_segment(p, q)?;
    let eps = 0.5f64.powi(cfg.depth as i32 + 1);
    let mut breaks = vec![eps];
    for m in (1..=cfg.depth).rev() {
        breaks.push(0.5f64.powi(m as i32 + 1) * 2.0);
    }
    let tail: Vec<f64> = breaks.iter().rev().skip(1).map(|t| 1.0 - t).collect();
    breaks.extend(tail);
    breaks.dedup();
    let mut terms = Vec::new();
    let mut min_v2 = f64::INFINITY;
    for w in breaks.windows(2) {
        for (t, wt) in gauss_legendre_on(cfg.nodes, w[0], w[1]) {
            let v2 = seg.second_derivative(t)?;
            if !(v2 > 0.0) {
                let x = seg.point(t);
                return Err(Error::ConvexityLoss { x: x[0], y: x[1], det: v2 });
            }
            min_v2 = min_v2.min(v2);
            terms.push(wt * v2.sqrt());
        }
    }
    let poly = u.polygon();
    let on_boundary = |x: Point| u.has_log_part() && poly.min_facet_value(x) <= 1e-12 * poly.scale();
    for (end, t) in [(p, eps), (q, 1.0 - eps)] {
        let v2 = seg.second_derivative(t)?;
        terms.push(if on_boundary(end) {
            2.0 * eps * v2.sqrt()
        } else {
            eps * v2.sqrt()
        });
    }
    Ok(RayLength {
        p,
        q,
        length: compensated_sum(terms),
        lower_bound: min_v2.sqrt(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiameterEstimate {
    pub diam_hat: f64,
    pub worst_pair: (Point, Point),
    pub rays: Vec<RayLength>,
}

/// Vertices, facet midpoints and the centroid.
pub fn diameter_probes(polygon: &DelzantPolygon) -> Vec<Point> {
    let mut pts: Vec<Point> = polygon.vertices().to_vec();
    for k in 0..polygon.len() {
        let (a, b) = polygon.facet_endpoints(k);
        pts.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
    }
    pts.push(polygon.centroid());
    pts
}

fn on_common_facet(polygon: &DelzantPolygon, p: Point, q: Point) -> bool {
    let tol = 1e-12 * polygon.scale();
    polygon
        .facets()
        .iter()
        .any(|f| f.eval(p).abs() <= tol * f.normal_len() && f.eval(q).abs() <= tol * f.normal_len())
}

/// `max` over probe pairs of `min(direct, via centroid)`; rays running
/// inside a facet count as infinitely long.
pub fn diameter_estimate(u: &SymplecticPotential, cfg: &DiameterConfig) -> Result<DiameterEstimate> {
    let polygon = u.polygon();
    let probes = diameter_probes(polygon);
    let hub = probes.len() - 1;
    let pairs: Vec<(usize, usize)> = (0..probes.len())
        .flat_map(|i| (i + 1..probes.len()).map(move |j| (i, j)))
        .collect();
    let rays: Vec<RayLength> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (p, q) = (probes[i], probes[j]);
            if u.has_log_part() && on_common_facet(polygon, p, q) {
                Ok(RayLength {
                    p,
                    q,
                    length: f64::INFINITY,
                    lower_bound: 0.0,
                })
            } else {
                ray_length(u, p, q, cfg)
            }
        })
        .collect::<Result<_>>()?;
    let n = probes.len();
    let mut table = vec![0.0; n * n];
    for (&(i, j), r) in pairs.iter().zip(&rays) {
        table[i * n + j] = r.length;
        table[j * n + i] = r.length;
    }
    let mut diam_hat = 0.0;
    let mut worst_pair = (probes[0], probes[0]);
    for &(i, j) in &pairs {
        let d = table[i * n + j].min(table[i * n + hub] + table[hub * n + j]);
        if d > diam_hat {
            diam_hat = d;
            worst_pair = (probes[i], probes[j]);
        }
    }
    Ok(DiameterEstimate {
        diam_hat,
        worst_pair,
        rays,
    })
}

/// Summary of all stability and geometry diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub lambda_hat: f64,
    pub argmin_crease: CreaseFunction,
    pub m_hat: f64,
    pub worst_segment: Option<SegmentTriple>,
    pub diam_hat: f64,
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
