//! Equilibria of the system: the two closed-form boundary states and a
//! bracketing search for coexistence (interior) states.
//!
//! On the aphid nullcline `y = y*(x)` and the enemy nullcline `z = z*(x, y)`
//! the first two components of the vector field vanish identically, so every
//! coexistence equilibrium is a root of the scalar residual
//! `x ↦ z'(x, y*(x), z*(x, y*(x)))` on the crop interval between the aphid
//! break-even crop level and the carrying capacity. The search scans that
//! interval on a uniform grid and bisects every sign change.

use crate::model::{vector_field, ModelParams, State};
use crate::{Error, Result};

/// Default number of grid cells for the residual scan.
pub const DEFAULT_GRID: usize = 4096;
/// Default bisection tolerance (both on the bracket width and the residual).
pub const DEFAULT_TOL: f64 = 1e-10;

/// Which equilibrium a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    /// Total collapse `(0, 0, 0)`.
    Collapse,
    /// Aphid-free state `(K, 0, bK/n)`: full crop, enemies sustained by
    /// constitutive volatiles alone.
    AphidFree,
    /// Coexistence state with all three species present.
    Interior,
}

impl std::fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EquilibriumKind::Collapse => "collapse",
            EquilibriumKind::AphidFree => "aphid-free",
            EquilibriumKind::Interior => "interior",
        })
    }
}

/// A located equilibrium together with numerical evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub point: State,
    /// Max-abs value of the vector field at the reported point.
    pub residual: f64,
    /// Crop-axis bracket the root was isolated in (interior roots only).
    pub bracket: Option<(f64, f64)>,
    /// True for near-tangency candidates: the residual dips close to zero
    /// without a sign change, the signature of two roots about to collide.
    pub marginal: bool,
}

/// Structural existence information for coexistence states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExistenceReport {
    /// Whether `e·a > m`: aphids can outgrow their mortality on abundant
    /// crop. If false, no coexistence state exists at all.
    pub conversion_exceeds_mortality: bool,
    /// Crop level where aphid grazing gain equals mortality (`m h / (e a - m)`),
    /// the left end of the search interval. `None` when the gain never
    /// reaches mortality.
    pub break_even: Option<f64>,
    /// Residual at the break-even crop level (non-negative by construction).
    pub residual_at_break_even: Option<f64>,
    /// Residual at the carrying capacity; its sign fixes the parity of the
    /// number of transversal roots.
    pub residual_at_capacity: f64,
    /// Sufficient condition for at least one coexistence state: the invasion
    /// gain at full crop reaches the invasion loss (and `e·a > m`).
    pub threshold_holds: bool,
}

/// Result of the coexistence search: transversal (and flagged marginal)
/// roots sorted by crop level, plus the existence analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorSearch {
    pub roots: Vec<EquilibriumReport>,
    pub existence: ExistenceReport,
}

impl InteriorSearch {
    /// Number of transversal (sign-change) roots, excluding marginal hits.
    pub fn transversal_count(&self) -> usize {
        self.roots.iter().filter(|r| !r.marginal).count()
    }
}

/// The total-collapse equilibrium `(0, 0, 0)`.
pub fn collapse_equilibrium(p: &ModelParams) -> EquilibriumReport {
    let point = State::new(0.0, 0.0, 0.0);
    let f = vector_field(p, &point);
    EquilibriumReport {
        kind: EquilibriumKind::Collapse,
        point,
        residual: max_abs(f),
        bracket: None,
        marginal: false,
    }
}

/// The aphid-free equilibrium `(K, 0, bK/n)`.
pub fn aphid_free_equilibrium(p: &ModelParams) -> EquilibriumReport {
    let point = State::new(
        p.capacity,
        0.0,
        p.attraction * p.capacity / p.predator_mortality,
    );
    let f = vector_field(p, &point);
    EquilibriumReport {
        kind: EquilibriumKind::AphidFree,
        point,
        residual: max_abs(f),
        bracket: None,
        marginal: false,
    }
}

/// Aphid biomass on the crop nullcline at crop level `x`:
/// `y*(x) = r (1 - x/K)(h + x) / a`.
pub fn aphid_nullcline(p: &ModelParams, x: f64) -> Result<f64> {
    if !(0.0..=p.capacity).contains(&x) {
        return Err(Error::Domain {
            name: "x",
            value: x,
            min: 0.0,
            max: p.capacity,
        });
    }
    Ok(aphid_nullcline_unchecked(p, x))
}

fn aphid_nullcline_unchecked(p: &ModelParams, x: f64) -> f64 {
    p.growth * (1.0 - x / p.capacity) * (p.grazing_half + x) / p.grazing
}

/// Enemy biomass on the aphid nullcline at `(x, y)`:
/// `z*(x, y) = (l + y)(e a x/(h + x) - m) / p`.
pub fn enemy_nullcline(p: &ModelParams, x: f64, y: f64) -> f64 {
    (p.predation_half + y) / p.predation * (p.grazing_gain(x) - p.aphid_mortality)
}

/// Crop level at which aphid grazing gain exactly offsets mortality.
///
/// Below it aphids decline even without predation; coexistence states can
/// only sit between it and the carrying capacity. Requires `e·a > m`.
pub fn aphid_break_even(p: &ModelParams) -> Result<f64> {
    let margin = p.conversion * p.grazing - p.aphid_mortality;
    if margin <= 0.0 {
        return Err(Error::Prereq(format!(
            "aphid grazing gain saturates at e·a = {:.6e} ≤ m = {:.6e}; \
             aphids cannot persist at any crop level",
            p.conversion * p.grazing,
            p.aphid_mortality
        )));
    }
    Ok(p.aphid_mortality * p.grazing_half / margin)
}

/// Coexistence residual at crop level `x`: the enemy balance evaluated on
/// the two nullclines. Zero exactly at coexistence equilibria.
///
/// Requires `0 ≤ x ≤ K` and `e·a > m` (so that the nullcline construction
/// can vanish at positive enemy biomass).
pub fn interior_residual(p: &ModelParams, x: f64) -> Result<f64> {
    if p.conversion * p.grazing <= p.aphid_mortality {
        aphid_break_even(p)?;
    }
    if !(0.0..=p.capacity).contains(&x) {
        return Err(Error::Domain {
            name: "x",
            value: x,
            min: 0.0,
            max: p.capacity,
        });
    }
    Ok(interior_residual_unchecked(p, x))
}

/// Residual without domain checks; used by the search and by continuation
/// code that evaluates it at parameter values outside the physical window.
pub(crate) fn interior_residual_unchecked(p: &ModelParams, x: f64) -> f64 {
    let y = aphid_nullcline_unchecked(p, x);
    let z = enemy_nullcline(p, x, y);
    vector_field(p, &State::new(x, y, z))[2]
}

/// Reconstructs the full state on the nullclines at crop level `x`.
pub(crate) fn interior_point(p: &ModelParams, x: f64) -> State {
    let y = aphid_nullcline_unchecked(p, x);
    let z = enemy_nullcline(p, x, y);
    State::new(x, y, z)
}

/// Structural existence analysis for coexistence states.
pub fn existence_conditions(p: &ModelParams) -> ExistenceReport {
    let conversion_exceeds_mortality = p.conversion * p.grazing > p.aphid_mortality;
    let break_even = aphid_break_even(p).ok();
    let residual_at_break_even = break_even.map(|x| interior_residual_unchecked(p, x));
    let residual_at_capacity = interior_residual_unchecked(p, p.capacity);
    let threshold_holds = conversion_exceeds_mortality && p.invasion_gain() >= p.invasion_loss();
    ExistenceReport {
        conversion_exceeds_mortality,
        break_even,
        residual_at_break_even,
        residual_at_capacity,
        threshold_holds,
    }
}

/// Finds all coexistence equilibria by scanning the residual on a uniform
/// grid over the admissible crop interval and bisecting each sign change.
///
/// `grid_points` is the number of scan cells (values below 16 are raised to
/// 16); `tol` bounds both the final bracket width and the residual magnitude
/// (non-positive or non-finite values fall back to [`DEFAULT_TOL`]).
///
/// Roots are returned sorted by crop level. Grid local minima of the
/// residual magnitude that dip below `sqrt(tol)` without a sign change are
/// reported as `marginal` candidates — the signature of a near-tangency
/// where two roots are about to collide or have just collided.
///
/// Parameters for which aphids cannot persist at all (`e·a ≤ m`) yield an
/// empty root list; the `existence` field explains why.
pub fn find_interior_equilibria(p: &ModelParams, grid_points: usize, tol: f64) -> InteriorSearch {
    let existence = existence_conditions(p);
    let tol = if tol.is_finite() && tol > 0.0 {
        tol
    } else {
        DEFAULT_TOL
    };
    let cells = grid_points.max(16);

    let mut roots: Vec<EquilibriumReport> = Vec::new();
    if let Some(lo) = existence.break_even {
        if lo < p.capacity {
            let hi = p.capacity;
            let step = (hi - lo) / cells as f64;
            let xs: Vec<f64> = (0..=cells)
                .map(|i| if i == cells { hi } else { lo + i as f64 * step })
                .collect();
            let hv: Vec<f64> = xs
                .iter()
                .map(|&x| interior_residual_unchecked(p, x))
                .collect();

            // Exact zeros on grid nodes are roots outright.
            for i in 0..=cells {
                if hv[i] == 0.0 {
                    roots.push(report_at(p, xs[i], Some((xs[i], xs[i]))));
                }
            }
            // Transversal roots: bisect every sign change.
            for i in 0..cells {
                if hv[i] * hv[i + 1] < 0.0 {
                    let x = bisect(p, xs[i], xs[i + 1], hv[i], tol);
                    roots.push(report_at(p, x, Some((xs[i], xs[i + 1]))));
                }
            }
            // Marginal candidates: interior local minima of |residual| that
            // dip below sqrt(tol) without changing sign.
            for i in 1..cells {
                let near_zero = hv[i].abs() < tol.sqrt();
                let local_min = hv[i].abs() < hv[i - 1].abs() && hv[i].abs() < hv[i + 1].abs();
                let no_crossing = hv[i - 1] * hv[i] > 0.0 && hv[i] * hv[i + 1] > 0.0;
                if near_zero && local_min && no_crossing {
                    // Parabolic vertex through the three samples.
                    let denom = hv[i - 1] - 2.0 * hv[i] + hv[i + 1];
                    let x = if denom != 0.0 {
                        (xs[i] - 0.5 * step * (hv[i + 1] - hv[i - 1]) / denom)
                            .clamp(xs[i - 1], xs[i + 1])
                    } else {
                        xs[i]
                    };
                    let mut rep = report_at(p, x, Some((xs[i - 1], xs[i + 1])));
                    rep.marginal = true;
                    roots.push(rep);
                }
            }
            roots.sort_by(|a, b| a.point.crop.partial_cmp(&b.point.crop).unwrap());
        }
    }

    InteriorSearch { roots, existence }
}

fn report_at(p: &ModelParams, x: f64, bracket: Option<(f64, f64)>) -> EquilibriumReport {
    let point = interior_point(p, x);
    let f = vector_field(p, &point);
    EquilibriumReport {
        kind: EquilibriumKind::Interior,
        point,
        residual: max_abs(f),
        bracket,
        marginal: false,
    }
}

/// Bisection on the residual: shrinks the bracket until both the width and
/// the midpoint residual are at most `tol` (or the width reaches floating-
/// point resolution).
fn bisect(p: &ModelParams, mut lo: f64, mut hi: f64, h_lo: f64, tol: f64) -> f64 {
    let lo_positive = h_lo > 0.0;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        let hm = interior_residual_unchecked(p, mid);
        if hm == 0.0 {
            return mid;
        }
        if (hm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol && hm.abs() <= tol {
            break;
        }
    }
    mid
}

fn max_abs(v: [f64; 3]) -> f64 {
    v[0].abs().max(v[1].abs()).max(v[2].abs())
}
