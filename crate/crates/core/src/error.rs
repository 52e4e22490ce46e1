use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("point ({x}, {y}) is not strictly inside the polygon")]
    OutsideDomain { x: f64, y: f64 },

    #[error("hessian is not positive definite at ({x}, {y}) (det = {det})")]
    ConvexityLoss { x: f64, y: f64, det: f64 },

    #[error("point lies at a vertex of facet {facet}")]
    VertexPoint { facet: usize },

    #[error("segment leaves the polygon")]
    SegmentExits,

    #[error("non-finite value at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },

    #[error("singular linear system: {0}")]
    Singular(&'static str),

    #[error("time step underflow: dt = {dt:e} below dt_min")]
    FlowStall { dt: f64 },

    #[error("convexity lost in {retries} consecutive step attempts")]
    Degeneration { retries: usize },

    #[error("curvature bound exceeded: sup|Rm| = {sup_rm} > {bound}")]
    CurvatureBound { sup_rm: f64, bound: f64 },

    #[error("incompatible potentials: {0}")]
    Incompatible(&'static str),

    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
