use thiserror::Error;

/// Errors surfaced by lattice and solver operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("axis {axis} out of range for a field with {max} axes")]
    AxisOutOfRange { axis: usize, max: usize },

    #[error("operation requires a space-time field")]
    NotSpaceTime,

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("field kind mismatch: expected {expected}, got {got}")]
    KindMismatch { expected: String, got: String },

    #[error("inner region is not contained in outer region ({violations} cells stick out)")]
    CutoffContainment { violations: usize },

    #[error("net charge obstructs periodic repair: defect mean {mean:.3e} exceeds threshold {threshold:.3e}")]
    NetCharge { mean: f64, threshold: f64 },

    #[error("negative charge parameter {0} (the bump family needs sqrt(p); use the conjugate family)")]
    NegativeCharge(f64),

    #[error("bump function is not normalized: integral {0}")]
    BumpNotNormalized(f64),

    #[error("source support violation: {cells} cells of the source lie outside the declared region")]
    SupportViolation { cells: usize },

    #[error("nonzero total mass: integral {integral:.3e} exceeds tolerance {tol:.3e}")]
    NonzeroMass { integral: f64, tol: f64 },

    #[error("conjugate-gradient solver failed to converge: relative residual {residual:.3e} after {iters} iterations")]
    CgDiverged { residual: f64, iters: usize, history: Vec<f64> },

    #[error("cocycle closeness violation on overlap ({a},{b}): sup defect {defect:.3e} >= {limit:.3e}")]
    ClosenessViolation { a: usize, b: usize, defect: f64, limit: f64 },

    #[error("patch consistency failure at cube {cube}: candidate gauges disagree by {defect:.3e} (triple {a},{b},{cube})")]
    PatchInconsistent { cube: usize, a: usize, b: usize, defect: f64 },

    #[error("overlap mismatch between patches {a} and {b}: max defect {defect:.3e} at cell {cell}")]
    OverlapMismatch { a: usize, b: usize, defect: f64, cell: usize },

    #[error("unsupported norm parameters: {0}")]
    UnsupportedNorm(String),

    #[error("CFL violation: dt {dt} exceeds {limit} (0.25 h)")]
    CflViolation { dt: f64, limit: f64 },

    #[error("NaN detected at step {step}")]
    NanAtStep { step: usize },

    #[error("domain of dependence is empty: t {t} >= ball radius {radius}")]
    EmptyCone { t: f64, radius: f64 },

    #[error("bad field file: {0}")]
    BadFieldFile(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
