use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// Grid or configuration parameters violate a structural invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A coefficient became NaN/Inf or the conserved-quantity watchdog
    /// tripped (blow-up or numerical breakdown).
    #[error("non-finite state at t = {t}: {detail}")]
    NonFinite { t: f64, detail: String },

    /// A frame shift would move coefficients carrying non-negligible mass
    /// outside the truncated lattice.
    #[error(
        "frame shift by {shift:?} drops relative l2 mass {dropped_rel:.3e} (tolerance {tol:.1e})"
    )]
    FrameOutOfGrid {
        shift: [i64; 3],
        dropped_rel: f64,
        tol: f64,
    },

    /// Polar decomposition of the zero mode is ill-defined.
    #[error("zero mode vanishes: |v0| = {abs:.3e} < {floor:.3e}")]
    ZeroModeVanishes { abs: f64, floor: f64 },

    /// The perturbation left the chart where the zero-mode amplitude is
    /// recoverable: sum of |w_j|^2 must stay below rho^2.
    #[error("perturbation too large: sum |w|^2 = {w_l2sq:.6e} >= rho^2 = {rho_sq:.6e}{}",
        .t.map(|t| format!(" at t = {t}")).unwrap_or_default())]
    PerturbationTooLarge {
        w_l2sq: f64,
        rho_sq: f64,
        t: Option<f64>,
    },

    /// n^2 + 2 n lambda rho^2 <= 0: the linearization has a non-real
    /// eigenvalue and the diagonalizing frame does not exist.
    #[error("unstable regime: n^2 + 2 n lambda rho^2 = {value:.6e} <= 0 at shell n = {n}")]
    UnstableRegime { n: u64, value: f64 },

    /// An exactly resonant non-cancelling frequency combination was found;
    /// no positive gamma can certify the scan box.
    #[error("exact resonance: |divisor| = {value:.3e} for shells {m:?} vs {n:?}")]
    ExactResonance {
        m: Vec<u64>,
        n: Vec<u64>,
        value: f64,
    },

    /// Taylor coefficient order above the implementation cap.
    #[error("multi-index order {order} exceeds cap {cap}")]
    OrderCap { order: usize, cap: usize },

    /// A rho failed the non-resonance pre-screening gate.
    #[error("certification failed: gamma_hat = {gamma_hat:.3e} < floor {floor:.3e}")]
    CertificationFailed { gamma_hat: f64, floor: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
