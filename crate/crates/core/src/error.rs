use thiserror::Error;

/// Errors surfaced by the library.
///
/// The first group reports invalid inputs (bad parameters, out-of-range
/// arguments, inconsistent options); the second reports numerical routines
/// that ran correctly but could not produce the requested object (no
/// bifurcation in the window, lost branch, integrator breakdown).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter that must be strictly positive is zero, negative, or
    /// non-finite. The name is the conventional configuration key.
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    /// A volatile-recruitment coefficient (the only parameters allowed to
    /// vanish) is negative or non-finite.
    #[error("parameter `{name}` must be non-negative and finite, got {value}")]
    NegativeAttraction { name: &'static str, value: f64 },

    /// An argument lies outside its admissible range.
    #[error("argument `{name}` = {value} outside admissible range [{min}, {max}]")]
    Domain {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// A structural precondition on the parameters fails, so the requested
    /// quantity is undefined.
    #[error("precondition violated: {0}")]
    Prereq(String),

    /// Inconsistent or incomplete run options.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The boundary equilibrium is not at its critical parameter value, so
    /// transversality coefficients for the exchange of stability are
    /// undefined. Carries the distance of the critical eigenvalue from zero.
    #[error("equilibrium is not critical (eigenvalue magnitude {0:.3e} exceeds 1e-6)")]
    NotCritical(f64),

    /// No pair of coexistence equilibria collides inside the search window.
    #[error("no saddle-node found for `{name}` in [{lo}, {hi}]")]
    NoFoldInRange { name: &'static str, lo: f64, hi: f64 },

    /// No tracked branch crosses the oscillation threshold inside the window.
    #[error("no Hopf point found for `{name}` in [{lo}, {hi}]")]
    NoHopfInRange { name: &'static str, lo: f64, hi: f64 },

    /// Continuation lost the equilibrium branch it was tracking.
    #[error("lost the tracked equilibrium branch near `{name}` = {value}")]
    BranchLost { name: &'static str, value: f64 },

    /// The adaptive integrator drove the step size below representable
    /// resolution (the right-hand side is effectively singular there).
    #[error("step size underflow at t = {t} (state x = {x}, y = {y}, z = {z})")]
    StepSizeUnderflow { t: f64, x: f64, y: f64, z: f64 },

    /// The integrated state left the representable range.
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
}
