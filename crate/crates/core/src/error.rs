use thiserror::Error;

/// Errors raised by the solvers and constructors in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("medium rejected: {reason} at ({x:.6}, {y:.6})")]
    MediumRejected { reason: String, x: f64, y: f64 },

    #[error("quadrature did not converge (last estimates {last:.12e}, {previous:.12e})")]
    QuadratureNonConvergence { last: f64, previous: f64 },

    #[error("linear solver stagnated with residual {residual:.3e}")]
    SolverStagnation { residual: f64 },

    #[error("fixed point did not converge after {iterations} iterations (last update {last_update:.3e})")]
    NonConvergence {
        iterations: usize,
        last_update: f64,
        history: Vec<f64>,
    },

    #[error("graph assumption violated: free boundary oscillates at column {column}")]
    GraphAssumptionViolated { column: usize },

    #[error("no boundary layer: fitted decay rate {rate:.3e} is not positive")]
    NoBoundaryLayer { rate: f64 },

    #[error("family not monotone: ordering violated by {violation:.3e}")]
    FamilyNotMonotone { violation: f64 },

    #[error("search space of {size} configurations exceeds cap {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },

    #[error("infeasible barriers: {0}")]
    InfeasibleBarriers(String),

    #[error("bending profile convexity defect {defect:.3e} exceeds slack {slack:.3e} at node ({i}, {j})")]
    ConvexityDefect {
        defect: f64,
        slack: f64,
        i: usize,
        j: usize,
    },

    #[error("obstacle data incompatible: front collapsed onto the obstacle at ray {ray}")]
    FrontCollapse { ray: usize },

    #[error("degenerate polyline with {0} vertices")]
    DegeneratePolyline(usize),

    #[error("empty positivity set")]
    EmptyPositivity,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("solve failed for t = {t}: {source}")]
    PartialSeries {
        t: f64,
        series: Vec<(f64, f64, f64)>,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
