//! Time integration of the model with an adaptive embedded Runge–Kutta
//! scheme (Dormand–Prince 5(4) with the first-same-as-last optimization),
//! plus monitors for the structural invariants every trajectory must keep:
//! componentwise non-negativity and eventual absorption into the bounded
//! feasible region.

use crate::model::{feasible_region, vector_field, weighted_total, FeasibleRegion, ModelParams, State};
use crate::{Error, Result};

/// Default relative step-error tolerance.
pub const DEFAULT_REL_TOL: f64 = 1e-8;
/// Default absolute step-error tolerance.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub initial: State,
    /// Final time; integration always starts at zero.
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step size; infinite by default.
    pub max_step: f64,
}

impl IntegratorConfig {
    /// Configuration with default tolerances and no step-size cap.
    pub fn new(initial: State, t_end: f64) -> Self {
        Self {
            initial,
            t_end,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            max_step: f64::INFINITY,
        }
    }
}

/// One accepted integration point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: State,
}

/// Outcome of an invariant monitor over a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorReport {
    pub ok: bool,
    /// Time of the first violation, when any.
    pub first_violation: Option<f64>,
}

/// An integrated trajectory with step statistics and invariant monitors.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Accepted steps, including the initial state; times are strictly
    /// increasing, the last one equals the requested final time exactly.
    pub samples: Vec<Sample>,
    pub accepted: usize,
    pub rejected: usize,
    pub positivity: MonitorReport,
    pub boundedness: MonitorReport,
    /// Absorbing region the boundedness monitor checks against.
    pub region: FeasibleRegion,
}

impl Trajectory {
    /// Final integration point.
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory is never empty")
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn advance(y: [f64; 3], h: f64, terms: &[(f64, [f64; 3])]) -> [f64; 3] {
    let mut out = y;
    for &(c, k) in terms {
        for (i, out_i) in out.iter_mut().enumerate() {
            *out_i += h * c * k[i];
        }
    }
    out
}

/// Integrates the model from `cfg.initial` over `[0, cfg.t_end]`.
///
/// Steps are controlled by the embedded error estimate against the mixed
/// tolerance `abs_tol + rel_tol·|y|` (root-mean-square over components).
/// Every accepted step is recorded. Fails with
/// [`Error::StepSizeUnderflow`] when error control forces the step below
/// resolvable size and [`Error::NonFiniteState`] when the state leaves the
/// floating-point range.
pub fn integrate(p: &ModelParams, cfg: &IntegratorConfig) -> Result<Trajectory> {
    p.validate()?;
    validate_config(cfg)?;

    let mut t = 0.0_f64;
    let mut y = cfg.initial.to_array();
    let mut h = cfg.t_end.min(cfg.max_step).min(1e-2);
    let mut k1 = vector_field(p, &State::from_array(y));
    if !k1.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteState { t });
    }

    let mut samples = vec![Sample {
        t,
        state: State::from_array(y),
    }];
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    while t < cfg.t_end {
        if h < 1e-14 * t.abs().max(1.0) {
            let s = State::from_array(y);
            return Err(Error::StepSizeUnderflow {
                t,
                x: s.crop,
                y: s.aphids,
                z: s.enemies,
            });
        }
        let mut reaches_end = false;
        if t + h >= cfg.t_end {
            h = cfg.t_end - t;
            reaches_end = true;
        }

        let eval = |arr: [f64; 3]| vector_field(p, &State::from_array(arr));
        let k2 = eval(advance(y, h, &[(A21, k1)]));
        let k3 = eval(advance(y, h, &[(A31, k1), (A32, k2)]));
        let k4 = eval(advance(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
        let k5 = eval(advance(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
        let k6 = eval(advance(
            y,
            h,
            &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
        ));
        let y_next = advance(y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        let k7 = eval(y_next);

        let mut err_sq = 0.0_f64;
        for i in 0..3 {
            let err_i = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_next[i].abs());
            err_sq += (err_i / scale) * (err_i / scale);
        }
        let err = (err_sq / 3.0).sqrt();

        if err <= 1.0 {
            t = if reaches_end { cfg.t_end } else { t + h };
            y = y_next;
            k1 = k7;
            accepted += 1;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteState { t });
            }
            samples.push(Sample {
                t,
                state: State::from_array(y),
            });
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let factor = if factor.is_nan() { 0.2 } else { factor };
            h = (h * factor).min(cfg.max_step);
        } else {
            rejected += 1;
            let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 0.9);
            let factor = if factor.is_nan() { 0.2 } else { factor };
            h *= factor;
        }
    }

    let positivity = check_positivity(&samples, 1e-9);
    let region = feasible_region(p, cfg.initial.crop);
    let boundedness = check_boundedness(p, &samples, &region, 1e-9);
    Ok(Trajectory {
        samples,
        accepted,
        rejected,
        positivity,
        boundedness,
        region,
    })
}

fn validate_config(cfg: &IntegratorConfig) -> Result<()> {
    if !(cfg.t_end.is_finite() && cfg.t_end > 0.0) {
        return Err(Error::Config(format!(
            "final time must be positive and finite, got {}",
            cfg.t_end
        )));
    }
    for (name, value) in [("rel_tol", cfg.rel_tol), ("abs_tol", cfg.abs_tol)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Config(format!(
                "tolerance `{name}` must be positive and finite, got {value}"
            )));
        }
    }
    if !(cfg.max_step > 0.0) {
        return Err(Error::Config(format!(
            "maximum step must be positive, got {}",
            cfg.max_step
        )));
    }
    for (name, value) in [
        ("x0", cfg.initial.crop),
        ("y0", cfg.initial.aphids),
        ("z0", cfg.initial.enemies),
    ] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::Domain {
                name,
                value,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
    }
    Ok(())
}

/// Checks that no component drops below `-tol` anywhere on the trajectory.
pub fn check_positivity(samples: &[Sample], tol: f64) -> MonitorReport {
    for s in samples {
        if s.state.min_component() < -tol {
            return MonitorReport {
                ok: false,
                first_violation: Some(s.t),
            };
        }
    }
    MonitorReport {
        ok: true,
        first_violation: None,
    }
}

/// Checks that once the trajectory has entered the feasible region (crop at
/// most `k1`, weighted total biomass at most the cap, both within `tol`), it
/// never leaves again. Transients before first entry are not violations.
pub fn check_boundedness(
    p: &ModelParams,
    samples: &[Sample],
    region: &FeasibleRegion,
    tol: f64,
) -> MonitorReport {
    let inside = |s: &Sample| {
        s.state.crop <= region.k1 + tol && weighted_total(p, &s.state) <= region.total_cap + tol
    };
    let mut entered = false;
    for s in samples {
        if inside(s) {
            entered = true;
        } else if entered {
            return MonitorReport {
                ok: false,
                first_violation: Some(s.t),
            };
        }
    }
    MonitorReport {
        ok: true,
        first_violation: None,
    }
}

/// Whether the trajectory tail (the final tenth of the time span) stays
/// within `tol` of `target` in the maximum norm.
pub fn converged_to(traj: &Trajectory, target: &State, tol: f64) -> bool {
    let t_end = traj.last().t;
    let mut seen_tail = false;
    for s in &traj.samples {
        if s.t >= 0.9 * t_end {
            seen_tail = true;
            if s.state.max_abs_diff(target) > tol {
                return false;
            }
        }
    }
    seen_tail
}
