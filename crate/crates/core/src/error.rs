use alloc::string::String;

use crate::dual::DualPoint;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: &'static str },

    #[error("`{field}` has length {found}, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("relay path SNR is zero; relaying can never match the direct link")]
    RelayPathDegenerate,

    #[error("instance infeasible: relaying needs tau_r >= {tau_r_lb} s (direct link carries {direct_rate} bits)")]
    InfeasibleInstance { tau_r_lb: f64, direct_rate: f64 },

    #[error("solver requires identical cycles-per-bit across nodes")]
    HeterogeneousCycles,

    #[error("ellipsoid method did not converge within {iterations} iterations (best dual value {best_value})")]
    MaxIterationsExceeded {
        iterations: usize,
        best: DualPoint,
        best_value: f64,
    },

    #[error("direct link rate is zero")]
    DegenerateDirectLink,

    #[error("linear program: {0}")]
    Lp(#[from] crate::lp::LpError),

    #[error("recovery linear program ended {0:?}; (T, 0, ..., 0) should always be feasible")]
    RecoveryLp(crate::lp::LpStatus),

    #[error("recovered solution violates `{constraint}` by {slack:e} (normalized)")]
    ConstraintViolation { constraint: String, slack: f64 },

    #[error("oracle limited to M <= {max}, got {found}")]
    OracleLimit { max: usize, found: usize },
}
