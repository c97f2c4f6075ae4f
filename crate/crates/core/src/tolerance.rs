/// Numerical thresholds used by predicates and validating constructors.
///
/// All norms are Frobenius. The defaults are sized for exact-arithmetic
/// problems where tolerances only need to absorb rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Algebraic predicates: idempotence, unitarity, commutators, sums.
    pub alg: f64,
    /// Deviation of a ket's norm from 1.
    pub norm: f64,
    /// Relative bound on off-diagonal decoherence-functional entries.
    pub consistency: f64,
    /// Absolute floor for the consistency bound, used for zero-weight pairs.
    pub consistency_floor: f64,
    /// Deviation of probability distributions from unit sum.
    pub prob: f64,
}

pub const TOL_ALG: f64 = 1e-10;
pub const TOL_NORM: f64 = 1e-12;
pub const TOL_CONSISTENCY: f64 = 1e-8;
pub const CONSISTENCY_FLOOR: f64 = 1e-12;
pub const TOL_PROB: f64 = 1e-9;

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            alg: TOL_ALG,
            norm: TOL_NORM,
            consistency: TOL_CONSISTENCY,
            consistency_floor: CONSISTENCY_FLOOR,
            prob: TOL_PROB,
        }
    }
}
