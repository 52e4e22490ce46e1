//! Numerical laboratory for the modified Calabi flow on toric surfaces.
//!
//! Symplectic potentials live on Delzant polygons as the Guillemin reference
//! `sum 1/2 l_i ln l_i` plus a polynomial correction. On top of that the crate
//! provides Abreu's curvature operators, the extremal affine function and the
//! modified Mabuchi energy, an energy-monotone flow integrator, and stability
//! diagnostics (PL crease search, M-condition sampling, diameter bounds).

// `!(x > 0.0)` rejects NaN too; index loops mirror the tensor notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod curvature;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod numeric;
pub mod poly;
pub mod polygon;
pub mod potential;
pub mod quadrature;
pub mod stability;

pub use curvature::{CurvatureSample, EdgeComponent};
pub use error::{Error, Result};
pub use flow::{Flow, FlowConfig, FlowRun, FlowState, HistoryRow, Integrator, StopReason};
pub use functionals::{EnergyReport, Functionals};
pub use poly::Poly2;
pub use polygon::{DelzantPolygon, Facet, Point, PolygonFile, Region, ValidationReport};
pub use potential::{AffineFunction, Jet, PotentialFile, SymplecticPotential};
pub use quadrature::{QuadratureConfig, QuadratureRule};
pub use stability::{CreaseFunction, SegmentTriple, StabilityReport};

