use serde::{Deserialize, Serialize};

/// Numerical thresholds used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Residual bound for reality and unitarity relations.
    pub unitary: f64,
    /// Distance to the unit circle under which an eigenvalue counts as unimodular.
    pub circle: f64,
    /// Initial eigenvalue clustering radius.
    pub cluster_gap: f64,
    /// Largest clustering radius reached by adaptive widening.
    pub cluster_gap_max: f64,
    /// Eigenvalues of a restricted Krein form below this are treated as zero.
    pub form: f64,
    /// Relative singular value under which a block counts as singular.
    pub sv_min: f64,
    /// Condition number above which a Riesz projection is rejected.
    pub max_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitary: 1e-10,
            circle: 1e-8,
            cluster_gap: 1e-6,
            cluster_gap_max: 1e-3,
            form: 1e-9,
            sv_min: 1e-8,
            max_condition: 1e10,
        }
    }
}
