use num_complex::Complex64;
use thiserror::Error;

use crate::collapse::CollapseReport;

pub type Result<T> = std::result::Result<T, Error>;

/// Which part of a collapse certificate failed to reach its share of ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    Approximation,
    LowFrequency,
    I1,
    I2,
}

impl std::fmt::Display for Leg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Leg::Approximation => "approximation",
            Leg::LowFrequency => "J2",
            Leg::I1 => "I1",
            Leg::I2 => "I2",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid with {size} points per axis cannot resolve degree {degree} (need at least {needed})")]
    UndersampledGrid {
        size: usize,
        degree: usize,
        needed: usize,
    },

    #[error("quasi-norm did not converge under grid refinement (last relative change {rel_change:.3e})")]
    NonConvergedQuadrature { rel_change: f64 },

    #[error("symbol evaluated at the origin")]
    OriginEvaluation,

    #[error("symbol is not in the homogeneous class: {0}")]
    NotInClass(String),

    #[error("quadrature on {nodes} nodes is not exact for degree {degree}; node mean = {value}")]
    ExactnessViolated {
        nodes: usize,
        degree: usize,
        value: Complex64,
    },

    #[error("norm of the reference function vanishes")]
    DegenerateNorm,

    #[error("approximation error {achieved:.3e} exceeds budget {budget:.3e}")]
    ApproximationTargetMissed { achieved: f64, budget: f64 },

    #[error("representation identity broken: deviation {deviation:.3e}")]
    IdentityBroken { deviation: f64 },

    #[error("search budget exhausted on the {leg} leg (best K upper bound {:.3e})", .report.k_upper)]
    BudgetExhausted {
        leg: Leg,
        report: Box<CollapseReport>,
    },

    #[error("tail beyond the integration window is not negligible (estimate {estimate:.3e})")]
    TailNotNegligible { estimate: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
