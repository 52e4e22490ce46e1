//! The modified Calabi flow `df/dt = theta - R_f` as a gradient flow of the
//! relative modified Mabuchi energy.
//!
//! The velocity is sampled at interior quadrature nodes and projected onto the
//! polynomial space of `f` by weighted least squares. Steps are explicit and
//! accepted only when the energy does not go up.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{interior_probe_points, scalar_curvature, sup_rm, RmProbeConfig};
use crate::error::{Error, Result};
use crate::functionals::Functionals;
use crate::poly::exponents;
use crate::polygon::{DelzantPolygon, Point};
use crate::potential::{AffineFunction, SymplecticPotential};
use crate::quadrature::QuadratureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Euler,
    Heun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Stop once `calabi_mod` drops below this.
    pub tol: f64,
    pub t_max: f64,
    pub max_steps: usize,
    /// Abort when `sup |Rm|` exceeds this bound.
    pub curvature_bound: f64,
    /// `false` replaces `theta` by the average scalar curvature.
    pub modified: bool,
    pub integrator: Integrator,
    /// Consecutive convexity failures tolerated within one step.
    pub max_retries: usize,
    /// Allowed energy increase per accepted step.
    pub energy_slack: f64,
    /// Nodes with `min_i l_i` below this are left out of the projection.
    pub projection_cutoff: f64,
    pub rm_probe: RmProbeConfig,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-4,
            dt_min: 1e-14,
            dt_max: 1e-2,
            tol: 1e-6,
            t_max: 10.0,
            max_steps: 100_000,
            curvature_bound: f64::INFINITY,
            modified: true,
            integrator: Integrator::Euler,
            max_retries: 40,
            energy_slack: 1e-12,
            projection_cutoff: 1e-4,
            rm_probe: RmProbeConfig::default(),
        }
    }
}

/// Monitors recorded after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub t: f64,
    pub dt: f64,
    pub mabuchi_rel: f64,
    pub calabi_mod: f64,
    pub sup_rm: f64,
    pub boundary_int: f64,
    pub l2_ref: f64,
}

impl HistoryRow {
    pub const CSV_HEADER: &'static str = "t,dt,mabuchi_rel,calabi_mod,sup_rm,boundary_int,l2_ref";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.t, self.dt, self.mabuchi_rel, self.calabi_mod, self.sup_rm, self.boundary_int, self.l2_ref
        )
    }
}

pub fn history_csv(rows: &[HistoryRow]) -> String {
    let mut out = String::from(HistoryRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// A matplotlib script plotting the history CSV next to it.
pub fn plot_script(history_file: &str) -> String {
    format!(
        r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{history_file}")))
t = [float(r["t"]) for r in rows]
fig, ax = plt.subplots(2, 2, figsize=(10, 7))
ax[0][0].plot(t, [float(r["mabuchi_rel"]) for r in rows])
ax[0][0].set_title("relative modified Mabuchi energy")
ax[0][1].semilogy(t, [max(float(r["calabi_mod"]), 1e-300) for r in rows])
ax[0][1].set_title("modified Calabi energy")
ax[1][0].plot(t, [float(r["sup_rm"]) for r in rows])
ax[1][0].set_title("sup |Rm|")
ax[1][1].plot(t, [float(r["boundary_int"]) for r in rows], label="boundary integral")
ax[1][1].plot(t, [float(r["l2_ref"]) for r in rows], label="L2 to reference")
ax[1][1].legend()
for a in ax.flat:
    a.set_xlabel("t")
fig.tight_layout()
fig.savefig("flow.png", dpi=120)
"#
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub potential: SymplecticPotential,
    pub t: f64,
    /// Step size to try next.
    pub dt: f64,
    pub history: Vec<HistoryRow>,
    accepted_streak: usize,
}

impl FlowState {
    pub fn last(&self) -> &HistoryRow {
        self.history.last().expect("history starts with the initial row")
    }

    pub fn mabuchi_rel(&self) -> f64 {
        self.last().mabuchi_rel
    }

    pub fn calabi_mod(&self) -> f64 {
        self.last().calabi_mod
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    TimeLimit,
    StepLimit,
    Stalled { dt: f64 },
    Degenerated { message: String },
    CurvatureBreach { sup_rm: f64, bound: f64 },
}

impl StopReason {
    pub fn label(&self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::TimeLimit => "time_limit",
            StopReason::StepLimit => "step_limit",
            StopReason::Stalled { .. } => "stalled",
            StopReason::Degenerated { .. } => "degenerated",
            StopReason::CurvatureBreach { .. } => "curvature_breach",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub state: FlowState,
    pub reason: StopReason,
    /// Potentials after every accepted step (initial included), when recorded.
    pub trajectory: Vec<SymplecticPotential>,
}

/// Weighted least-squares projection onto polynomials in the potential frame.
#[derive(Debug, Clone)]
struct Projector {
    nodes: Vec<Point>,
    /// `(V^T W V)^{-1} V^T W`, stored as `R^{-1} Q^T sqrt(W)`.
    map: DMatrix<f64>,
}

impl Projector {
    fn new(u: &SymplecticPotential, f: &Functionals, cutoff: f64) -> Result<Self> {
        let polygon = f.polygon();
        let nodes: Vec<_> = f
            .rule()
            .interior_nodes()
            .iter()
            .filter(|n| polygon.min_facet_value(n.x) >= cutoff)
            .copied()
            .collect();
        let basis: Vec<(usize, usize)> = exponents(u.degree()).collect();
        let frame = u.frame();
        let v = DMatrix::from_fn(nodes.len(), basis.len(), |i, j| {
            let xi = frame.to_local(nodes[i].x);
            let (p, q) = basis[j];
            nodes[i].w.sqrt() * xi[0].powi(p as i32) * xi[1].powi(q as i32)
        });
        let qr = v.qr();
        let r_inv = qr
            .r()
            .try_inverse()
            .ok_or(Error::Singular("projection basis"))?;
        let mut map = r_inv * qr.q().transpose();
        for (j, n) in nodes.iter().enumerate() {
            map.column_mut(j).scale_mut(n.w.sqrt());
        }
        Ok(Self {
            nodes: nodes.iter().map(|n| n.x).collect(),
            map,
        })
    }

    fn project(&self, values: &[f64]) -> Vec<f64> {
        (&self.map * DVector::from_column_slice(values)).as_slice().to_vec()
    }
}

/// The flow integrator for one polygon.
#[derive(Debug, Clone)]
pub struct Flow {
    config: FlowConfig,
    functionals: Functionals,
    projector: Projector,
    x0: Point,
    reference: SymplecticPotential,
}

impl Flow {
    /// Sets up the integrator for potentials of the given shape.
    pub fn new(
        template: &SymplecticPotential,
        quadrature: QuadratureConfig,
        config: FlowConfig,
    ) -> Result<Self> {
        let mut functionals = Functionals::new(template.polygon_arc().clone(), quadrature)?;
        if !config.modified {
            functionals = functionals.unmodified();
        }
        let projector = Projector::new(template, &functionals, config.projection_cutoff)?;
        let x0 = template.polygon().centroid();
        let reference = template.reference().normalize(x0)?;
        Ok(Self {
            config,
            functionals,
            projector,
            x0,
            reference,
        })
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn functionals(&self) -> &Functionals {
        &self.functionals
    }

    pub fn polygon(&self) -> &Arc<DelzantPolygon> {
        self.reference.polygon_arc()
    }

    pub fn base_point(&self) -> Point {
        self.x0
    }

    /// Projected velocity `Pi(theta - R)` as frame coefficients.
    pub fn velocity(&self, u: &SymplecticPotential) -> Result<Vec<f64>> {
        let theta = self.functionals.theta();
        let g: Vec<f64> = self
            .projector
            .nodes
            .par_iter()
            .map(|&x| scalar_curvature(u, x).map(|r| theta.eval(x) - r))
            .collect::<Result<_>>()?;
        Ok(self.projector.project(&g))
    }

    pub fn monitor(&self, u: &SymplecticPotential, t: f64, dt: f64) -> Result<HistoryRow> {
        let f = &self.functionals;
        let normalized = u.normalize(self.x0)?;
        Ok(HistoryRow {
            t,
            dt,
            mabuchi_rel: f.mabuchi_relative(u)?,
            calabi_mod: f.calabi_energy_mod(u)?,
            sup_rm: sup_rm(u, &self.config.rm_probe)?.value,
            boundary_int: f
                .rule()
                .try_integrate_boundary(|x| normalized.value_on_closure(x))?,
            l2_ref: f.l2_distance(&normalized, &self.reference)?,
        })
    }

    pub fn initial_state(&self, u: SymplecticPotential) -> Result<FlowState> {
        if u.polygon() != &**self.polygon() || u.degree() != self.reference.degree() {
            return Err(Error::Incompatible("potential does not match the flow setup"));
        }
        let row = self.monitor(&u, 0.0, 0.0)?;
        Ok(FlowState {
            potential: u,
            t: 0.0,
            dt: self.config.dt0,
            history: vec![row],
            accepted_streak: 0,
        })
    }

    fn trial(&self, u: &SymplecticPotential, v: &[f64], dt: f64) -> Result<SymplecticPotential> {
        let euler = |vel: &[f64]| {
            let c: Vec<f64> = u.coeffs().iter().zip(vel).map(|(a, b)| a + dt * b).collect();
            u.with_coeffs(c)
        };
        match self.config.integrator {
            Integrator::Euler => Ok(euler(v)),
            Integrator::Heun => {
                let mid = euler(v);
                let v2 = self.velocity(&mid)?;
                let avg: Vec<f64> = v.iter().zip(&v2).map(|(a, b)| 0.5 * (a + b)).collect();
                Ok(euler(&avg))
            }
        }
    }

    /// One accepted step, halving `dt` until the energy does not increase.
    pub fn step(&self, state: &FlowState) -> Result<FlowState> {
        self.advance(state.clone())
    }

    fn advance(&self, mut state: FlowState) -> Result<FlowState> {
        let u = &state.potential;
        let velocity = self.velocity(u)?;
        let m_old = state.mabuchi_rel();
        let mut dt = state.dt;
        let mut convexity_failures = 0;
        loop {
            if dt < self.config.dt_min {
                return Err(Error::FlowStall { dt });
            }
            let attempt = self
                .trial(u, &velocity, dt)
                .and_then(|next| Ok((self.functionals.mabuchi_relative(&next)?, next)));
            match attempt {
                Ok((m_new, next)) if m_new <= m_old + self.config.energy_slack => {
                    let row = self.monitor(&next, state.t + dt, dt)?;
                    state.accepted_streak += 1;
                    state.dt = dt;
                    if state.accepted_streak >= 5 {
                        state.accepted_streak = 0;
                        state.dt = (2.0 * dt).min(self.config.dt_max);
                    }
                    state.t += dt;
                    state.potential = next;
                    state.history.push(row);
                    return Ok(state);
                }
                Ok(_) => convexity_failures = 0,
                Err(Error::ConvexityLoss { .. }) => {
                    convexity_failures += 1;
                    if convexity_failures >= self.config.max_retries {
                        return Err(Error::Degeneration {
                            retries: convexity_failures,
                        });
                    }
                }
                Err(e) => return Err(e),
            }
            state.accepted_streak = 0;
            dt *= 0.5;
        }
    }

    /// Steps until `calabi_mod < tol`, `t >= t_max`, the step limit, or a failure.
    pub fn run(&self, state: FlowState, record_trajectory: bool) -> FlowRun {
        let mut trajectory = Vec::new();
        if record_trajectory {
            trajectory.push(state.potential.clone());
        }
        let mut state = state;
        let mut steps = 0;
        let reason = loop {
            let last = *state.last();
            if last.sup_rm > self.config.curvature_bound || !last.sup_rm.is_finite() {
                break StopReason::CurvatureBreach {
                    sup_rm: last.sup_rm,
                    bound: self.config.curvature_bound,
                };
            }
            if last.calabi_mod < self.config.tol {
                break StopReason::Converged;
            }
            if state.t >= self.config.t_max {
                break StopReason::TimeLimit;
            }
            if steps >= self.config.max_steps {
                break StopReason::StepLimit;
            }
            // never step past t_max
            let backup = state.clone();
            state.dt = state.dt.min(self.config.t_max - state.t);
            match self.advance(state) {
                Ok(next) => {
                    state = next;
                    steps += 1;
                    if record_trajectory {
                        trajectory.push(state.potential.clone());
                    }
                }
                Err(e) => {
                    state = backup;
                    break match e {
                        Error::FlowStall { dt } => StopReason::Stalled { dt },
                        other => StopReason::Degenerated {
                            message: other.to_string(),
                        },
                    };
                }
            }
        };
        FlowRun {
            state,
            reason,
            trajectory,
        }
    }

    /// `sup |R - theta|` over the interior probe set and points at distance
    /// `1e-3` (in `l`) from each facet.
    pub fn sup_curvature_deviation(&self, u: &SymplecticPotential) -> Result<f64> {
        let polygon = u.polygon();
        let theta = self.functionals.theta();
        let mut points = interior_probe_points(polygon, self.config.rm_probe.interior_points, self.config.rm_probe.seed);
        let c = polygon.centroid();
        for k in 0..polygon.len() {
            let (a, b) = polygon.facet_endpoints(k);
            let facet = polygon.facets()[k];
            let per = self.config.rm_probe.per_facet.max(1);
            for j in 0..per {
                let s = (j as f64 + 0.5) / per as f64;
                let e = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                // move toward the centroid until l_k = 1e-3
                let lc = facet.eval(c);
                let r = 1e-3 / lc;
                points.push([e[0] + r * (c[0] - e[0]), e[1] + r * (c[1] - e[1])]);
            }
        }
        let devs: Vec<f64> = points
            .par_iter()
            .map(|&x| scalar_curvature(u, x).map(|r| (r - theta.eval(x)).abs()))
            .collect::<Result<_>>()?;
        Ok(devs.into_iter().fold(0.0, f64::max))
    }
}

/// Normalized trajectory with the subtracted affine functions.
#[derive(Debug, Clone)]
pub struct NormalizedTrajectory {
    pub potentials: Vec<SymplecticPotential>,
    pub shifts: Vec<AffineFunction>,
    /// `shifts[k] - shifts[k-1]`, with `increments[0] = shifts[0]`.
    pub increments: Vec<AffineFunction>,
    pub sup_shift: f64,
}

pub fn normalize_trajectory(trajectory: &[SymplecticPotential], x0: Point) -> Result<NormalizedTrajectory> {
    let mut potentials = Vec::with_capacity(trajectory.len());
    let mut shifts = Vec::with_capacity(trajectory.len());
    for u in trajectory {
        let (n, s) = u.normalize_with_shift(x0)?;
        potentials.push(n);
        shifts.push(s);
    }
    let increments = shifts
        .iter()
        .enumerate()
        .map(|(k, s)| match k {
            0 => *s,
            _ => s.add(&AffineFunction::new(-shifts[k - 1].a0, -shifts[k - 1].a1, -shifts[k - 1].a2)),
        })
        .collect();
    let sup_shift = shifts.iter().map(AffineFunction::max_abs).fold(0.0, f64::max);
    Ok(NormalizedTrajectory {
        potentials,
        shifts,
        increments,
        sup_shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_flow(u: &SymplecticPotential) -> Flow {
        Flow::new(u, QuadratureConfig::default(), FlowConfig::default()).unwrap()
    }

    #[test]
    fn extremal_square_is_a_fixed_point() {
        let u = SymplecticPotential::guillemin(Arc::new(DelzantPolygon::unit_square()), 8);
        let flow = square_flow(&u);
        let v = flow.velocity(&u).unwrap();
        assert!(v.iter().map(|c| c.abs()).fold(0.0, f64::max) <= 1e-8);
        let s0 = flow.initial_state(u.clone()).unwrap();
        let s1 = flow.step(&s0).unwrap();
        let dt = s1.history[1].dt;
        for (a, b) in s1.potential.coeffs().iter().zip(u.coeffs()) {
            assert!((a - b).abs() <= 1e-8 * dt);
        }
    }

    #[test]
    fn accepted_step_lowers_energy() {
        let u = SymplecticPotential::perturbed(Arc::new(DelzantPolygon::unit_square()), 8, 0.05);
        let flow = square_flow(&u);
        let s0 = flow.initial_state(u).unwrap();
        let s1 = flow.step(&s0).unwrap();
        assert!(s1.mabuchi_rel() < s0.mabuchi_rel());
        assert!(s1.t > 0.0 && s1.dt > 0.0);
    }

    #[test]
    fn zero_time_limit_returns_initial_state() {
        let u = SymplecticPotential::perturbed(Arc::new(DelzantPolygon::unit_square()), 8, 0.05);
        let cfg = FlowConfig {
            t_max: 0.0,
            ..FlowConfig::default()
        };
        let flow = Flow::new(&u, QuadratureConfig::default(), cfg).unwrap();
        let run = flow.run(flow.initial_state(u.clone()).unwrap(), false);
        assert_eq!(run.reason, StopReason::TimeLimit);
        assert_eq!(run.state.history.len(), 1);
        assert_eq!(run.state.potential, u);
    }

    #[test]
    fn shifted_trajectory_normalizes_identically() {
        let u = SymplecticPotential::perturbed(Arc::new(DelzantPolygon::unit_square()), 8, 0.05);
        let g = AffineFunction::new(0.3, -1.0, 2.0);
        let x0 = u.polygon().centroid();
        let a = normalize_trajectory(&[u.clone(), u.clone()], x0).unwrap();
        let b = normalize_trajectory(&[u.add_affine(&g), u.add_affine(&g)], x0).unwrap();
        assert!(a.increments[1].max_abs() < 1e-14);
        for (p, q) in a.potentials.iter().zip(&b.potentials) {
            for (x, y) in p.coeffs().iter().zip(q.coeffs()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
