//! Dynamics of a crop–aphid–natural-enemy food chain in which damaged crops
//! release volatiles that recruit the aphids' natural enemies.
//!
//! The state is `(crop, aphids, enemies)` biomass. The crop grows
//! logistically and is grazed by aphids through a saturating (Holling II)
//! response; aphids convert grazing into growth and are consumed by enemies
//! through a second saturating response; enemies are recruited by
//! plant-emitted volatiles (a baseline term plus an aphid-density-dependent
//! boost) and additionally grow by converting predation.
//!
//! The crate provides:
//!
//! * [`model`] — parameters, the vector field, its Jacobian and second
//!   additive compound matrix, and the absorbing (feasible) region;
//! * [`equilibria`] — closed-form boundary equilibria and a bracketing
//!   search for coexistence equilibria on the crop axis;
//! * [`stability`] — characteristic coefficients, Routh–Hurwitz
//!   classification, and an exact cubic eigenvalue solver;
//! * [`certificate`] — a sufficient certificate of global convergence to a
//!   coexistence state, built from weighted Lozinskii bounds on the second
//!   compound of the Jacobian over the absorbing region;
//! * [`bifurcation`] — closed-form transcritical thresholds, saddle-node and
//!   Hopf locators, and a one-parameter scan that assembles a bifurcation
//!   diagram with classified branches and detected events;
//! * [`simulate`] — an adaptive Dormand–Prince (RK45) integrator with
//!   positivity and boundedness monitors.

pub mod bifurcation;
pub mod certificate;
pub mod equilibria;
mod error;
pub mod model;
pub mod simulate;
pub mod stability;

pub use error::Error;
/// Complex scalar used for eigenvalues, re-exported for downstream use.
pub use num_complex::Complex64;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
