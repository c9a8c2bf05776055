use thiserror::Error;

/// Errors raised by the simulator.
///
/// Variants fall into two families: validation failures (bad geometry or
/// parameters, caller error) and solver failures (numerical preconditions
/// that do not hold for the requested configuration). [`Error::is_validation`]
/// tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),

    #[error("invalid system spec: {0}")]
    Spec(String),

    #[error("plaquette ({row}, {col}) is outside the lattice")]
    Range { row: usize, col: usize },

    #[error("matrix is not Hermitian (max |H - H^dagger| = {0:e})")]
    Integrity(f64),

    #[error("eigendecomposition failed to converge")]
    Eigen,

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("symmetry unavailable: {0}")]
    SymmetryUnavailable(String),

    #[error("parity classification residual {0:e} exceeds tolerance")]
    Degeneracy(f64),

    #[error("energy {energy} lies within {distance:e} of lattice eigenvalue {pole}; use the resonant treatment")]
    Pole { energy: f64, pole: f64, distance: f64 },

    #[error("qubit is decoupled from mode {0} (|psi(1)| below 1e-12)")]
    DegenerateCoupling(usize),

    #[error("root bracketing failed on [{lo}, {hi}]: {detail}")]
    Solver { lo: f64, hi: f64, detail: String },

    #[error("domain: {0}")]
    Domain(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("long-time averaging needs non-degenerate eigenvalues (min gap {0:e})")]
    Averaging(f64),

    #[error("degenerate two-qubit configuration: {0}")]
    Degenerate(String),

    #[error("input: {0}")]
    Input(String),

    #[error("trace analysis: {0}")]
    Analysis(String),
}

impl Error {
    /// True for errors caused by invalid input rather than a failed solve.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Geometry(_)
                | Error::Spec(_)
                | Error::Range { .. }
                | Error::Integrity(_)
                | Error::SymmetryUnavailable(_)
                | Error::Domain(_)
                | Error::Contract(_)
                | Error::Input(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Geometry(_) => "geometry",
            Error::Spec(_) => "spec",
            Error::Range { .. } => "range",
            Error::Integrity(_) => "integrity",
            Error::Eigen => "eigen",
            Error::Calibration(_) => "calibration",
            Error::SymmetryUnavailable(_) => "symmetry_unavailable",
            Error::Degeneracy(_) => "degeneracy",
            Error::Pole { .. } => "pole",
            Error::DegenerateCoupling(_) => "degenerate_coupling",
            Error::Solver { .. } => "solver",
            Error::Domain(_) => "domain",
            Error::Contract(_) => "contract",
            Error::Averaging(_) => "averaging",
            Error::Degenerate(_) => "degenerate",
            Error::Input(_) => "input",
            Error::Analysis(_) => "analysis",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
