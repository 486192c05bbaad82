use thiserror::Error;

use crate::protocol::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Step size collapsed below the representable resolution.
    #[error("stiff/singular dynamics: step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("integration produced a non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("invalid integration request: {0}")]
    InvalidRequest(String),

    /// `|exp(P(T)) - 1|` fell below the resonance threshold.
    #[error("Floquet resonance: no isolated periodic solution (|e^P(T) - 1| = {defect:.3e})")]
    Resonance { defect: f64 },

    #[error("parametric-resonance boundary: monodromy has a double fixed point (separation {separation:.3e})")]
    ParametricResonanceBoundary { separation: f64 },

    #[error("no admissible Riccati branch: {0}")]
    NoRiccatiBranch(String),

    #[error("frame logarithm undefined: G2 + 1/2 = {value} at t = {t}")]
    FrameLogarithm { t: f64, value: String },

    #[error("degenerate Floquet steady state: vanishing denominator {denominator:.3e}")]
    DegenerateSteadyState { denominator: f64 },

    #[error("no dissipation: stability undefined (mean damping is zero)")]
    NoDissipation,

    #[error("stroboscopic map is not contractive (spectral radius {radius:.6})")]
    NotContractive { radius: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("protocol config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("protocol violates its invariants: {}", format_violations(.0))]
    InvalidProtocol(Vec<Violation>),

    #[error("Fock cutoff {cutoff} is too small: {reason}")]
    Cutoff { cutoff: usize, reason: String },

    #[error("cycle not closed: energy defect {defect:.3e} over one period")]
    OpenCycle { defect: f64 },

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
}

fn format_violations(v: &[Violation]) -> String {
    let shown: Vec<String> = v.iter().take(3).map(|x| x.to_string()).collect();
    if v.len() > 3 {
        format!("{} (+{} more)", shown.join("; "), v.len() - 3)
    } else {
        shown.join("; ")
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
