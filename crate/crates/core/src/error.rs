use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: defect {defect:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("eigenvalue iteration did not converge within {iterations} sweeps")]
    NoConvergence { iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular link overlap |det| = {det:e} between k-points; refine the grid")]
    SingularLink { det: f64 },

    #[error("bands {lower} and {upper} are not degenerate at the symmetry point (splitting {splitting:e})")]
    NoDegeneracy { lower: usize, upper: usize, splitting: f64 },

    #[error("displacement matrix for shift ({s1}, {s2}) still truncated with pad {pad} (deviation {deviation:e})")]
    Truncation { s1: f64, s2: f64, pad: usize, deviation: f64 },

    #[error("band {band} is not isolated on the grid (min gap {min_gap:e} <= {tolerance:e})")]
    GapClosed { band: usize, min_gap: f64, tolerance: f64 },

    #[error("{what}: deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    ToleranceExceeded { what: String, deviation: f64, tolerance: f64 },

    #[error("matrix dimension {dim} exceeds the configured cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
}
