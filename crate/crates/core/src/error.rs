use thiserror::Error;

/// Every failure the pipeline can surface.
#[derive(Debug, Error)]
pub enum Error {
    #[error("genus {0} is not supported; only genus 2 is implemented")]
    UnsupportedGenus(u32),

    #[error("word enumeration exceeded the element budget of {cap}")]
    BudgetExceeded { cap: usize },

    #[error("Möbius map evaluated at a pole: |cz + d| = {modulus:e}")]
    NearPole { modulus: f64 },

    #[error("series did not converge: tail {tail:e} exceeds tolerance {tolerance:e}")]
    ConvergenceFailure { tail: f64, tolerance: f64 },

    #[error("basis is degenerate: eigenvalue ratio {ratio:e}")]
    DegenerateBasis { ratio: f64 },

    #[error("mesh has {nodes} nodes, over the cap of {cap}")]
    MeshBudget { nodes: usize, cap: usize },

    #[error("non-positive mass weight {weight:e} at node {node}")]
    SingularMass { node: usize, weight: f64 },

    #[error("linear solve failed: {0}")]
    SolverFailure(String),

    #[error("dense kernel of {nodes}x{nodes} exceeds the cap of {cap} nodes")]
    KernelBudget { nodes: usize, cap: usize },

    #[error("symmetry `{name}` violated: relative residual {residual:e}")]
    SymmetryViolation { name: String, residual: f64 },

    #[error("type-unbalanced curvature term survived: imaginary residue {residue:e}")]
    TypeImbalance { residue: f64 },

    #[error("positive curvature-operator eigenvalue {eigenvalue:e} above tolerance {tau:e}")]
    PositiveModeDetected { eigenvalue: f64, tau: f64 },

    #[error("kernel dimension {found}, expected {expected}")]
    KernelDimMismatch { found: usize, expected: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }
}
