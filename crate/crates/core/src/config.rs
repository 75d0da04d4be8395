use serde::{Deserialize, Serialize};

/// Structural predicates (hermitian, unitary, ...), Frobenius norm.
pub const TAU_EXACT: f64 = 1e-10;
/// Spectral decisions (nilpotency, numerical rank).
pub const TAU_NILP: f64 = 1e-8;
/// Residuals of linear feasibility problems.
pub const TAU_FEAS: f64 = 1e-8;

/// The tolerance set used across the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub exact: f64,
    pub nilp: f64,
    pub feas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact: TAU_EXACT,
            nilp: TAU_NILP,
            feas: TAU_FEAS,
        }
    }
}
