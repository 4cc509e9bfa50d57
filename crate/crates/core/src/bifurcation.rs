//! Bifurcation analysis in one parameter.
//!
//! Three codimension-one events organize the dynamics:
//!
//! * **transcritical** — the aphid-free state exchanges stability with a
//!   coexistence branch when the invasion gain of rare aphids crosses their
//!   invasion loss; the critical parameter values are closed-form;
//! * **saddle-node** — two coexistence states collide and annihilate where
//!   the coexistence residual becomes tangent to zero;
//! * **Hopf** — a coexistence state sheds or absorbs a small cycle where
//!   the Routh–Hurwitz discriminant `a1·a2 - a3` crosses zero while
//!   `a1, a2 > 0`.
//!
//! The locators exploit that the coexistence residual is affine in both
//! supported parameters: the parameter value placing a root at a given crop
//! level follows from two residual evaluations, and a saddle-node is the
//! extremum of that map between the colliding pair, which golden-section
//! search pins down to machine precision.

use crate::equilibria::{
    aphid_free_equilibrium, find_interior_equilibria, interior_point,
    interior_residual_unchecked, EquilibriumReport, DEFAULT_GRID, DEFAULT_TOL,
};
use crate::model::{jacobian, second_differential, ModelParams, State};
use crate::stability::{
    char_coeffs, classify_aphid_free, classify_interior, cubic_roots, CharCoeffs, Verdict, MARGIN,
};
use crate::{Error, Result};

/// Parameter a bifurcation analysis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BifParam {
    /// Aphid per-capita mortality (config key `m`).
    AphidMortality,
    /// Constitutive volatile emission (config key `b`).
    Attraction,
}

impl BifParam {
    /// Conventional configuration key of the parameter.
    pub fn key(self) -> &'static str {
        match self {
            BifParam::AphidMortality => "m",
            BifParam::Attraction => "b",
        }
    }

    /// Current value of the parameter.
    pub fn value(self, p: &ModelParams) -> f64 {
        match self {
            BifParam::AphidMortality => p.aphid_mortality,
            BifParam::Attraction => p.attraction,
        }
    }

    /// Copy of `p` with the parameter set to `v`.
    pub fn with_value(self, p: &ModelParams, v: f64) -> ModelParams {
        let mut out = *p;
        match self {
            BifParam::AphidMortality => out.aphid_mortality = v,
            BifParam::Attraction => out.attraction = v,
        }
        out
    }

    /// Derivative of the vector field with respect to the parameter.
    fn field_derivative(self, s: &State) -> [f64; 3] {
        match self {
            BifParam::AphidMortality => [0.0, -s.aphids, 0.0],
            BifParam::Attraction => [0.0, 0.0, s.crop],
        }
    }
}

impl std::fmt::Display for BifParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// Kind of a detected bifurcation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Transcritical,
    SaddleNode,
    Hopf,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventKind::Transcritical => "transcritical",
            EventKind::SaddleNode => "saddle-node",
            EventKind::Hopf => "hopf",
        })
    }
}

/// Normal-form coefficients at a critical equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransversalityReport {
    /// Right null vector of the critical Jacobian.
    pub tangent: [f64; 3],
    /// Left null vector, normalized against `tangent`.
    pub adjoint: [f64; 3],
    /// ⟨adjoint, ∂f/∂μ⟩ at the critical point.
    pub q1: f64,
    /// ⟨adjoint, (∂μ Df)·tangent⟩; for the transcritical case the Jacobian
    /// derivative is taken along the moving boundary equilibrium.
    pub q2: f64,
    /// ⟨adjoint, D²f(tangent, tangent)⟩.
    pub q3: f64,
    /// Whether the decisive coefficients are non-zero (`q2, q3` for the
    /// transcritical exchange; `q1, q3` for a saddle-node).
    pub nondegenerate: bool,
}

/// A located codimension-one bifurcation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BifurcationEvent {
    pub kind: EventKind,
    pub parameter: BifParam,
    /// Critical parameter value.
    pub value: f64,
    /// Equilibrium at which the event happens, at the critical value.
    pub location: State,
    /// |vanishing quantity| at the reported point: the invasion gap for a
    /// transcritical event, `a3` for a saddle-node, `a1·a2 - a3` for Hopf.
    pub defect: f64,
    pub transversality: Option<TransversalityReport>,
    /// d(a1·a2 - a3)/dμ along the branch at a Hopf point.
    pub crossing_speed: Option<f64>,
}

/// Aphid mortality at which the aphid-free state changes stability:
/// `m* = e a K/(h + K) - p b K/(n l)`.
pub fn transcritical_mortality(p: &ModelParams) -> f64 {
    p.invasion_gain()
        - p.predation * p.attraction * p.capacity / (p.predator_mortality * p.predation_half)
}

/// Constitutive emission at which the aphid-free state changes stability:
/// `b* = (e a K/(h + K) - m) n l / (p K)`.
pub fn transcritical_attraction(p: &ModelParams) -> f64 {
    (p.invasion_gain() - p.aphid_mortality) * p.predator_mortality * p.predation_half
        / (p.predation * p.capacity)
}

fn invasion_gap(p: &ModelParams) -> f64 {
    p.invasion_gain() - p.invasion_loss()
}

/// Normal-form coefficients of the stability exchange at the aphid-free
/// state. The parameters must already sit at the critical value (the middle
/// eigenvalue within `1e-6`), otherwise [`Error::NotCritical`] is returned.
///
/// The critical direction is the isolated aphid eigendirection, so the left
/// null vector is the aphid coordinate axis; the right null vector is solved
/// from the first and third Jacobian rows with unit aphid component.
pub fn transcritical_transversality(
    p: &ModelParams,
    param: BifParam,
) -> Result<TransversalityReport> {
    let gap = invasion_gap(p);
    if gap.abs() > 1e-6 {
        return Err(Error::NotCritical(gap.abs()));
    }
    let point = aphid_free_equilibrium(p).point;
    let jac = jacobian(p, &point);
    let v1 = -jac.0[0][1] / jac.0[0][0];
    let v3 = -(jac.0[2][0] * v1 + jac.0[2][1]) / jac.0[2][2];
    let tangent = [v1, 1.0, v3];
    let adjoint = [0.0, 1.0, 0.0];

    // The parameter enters the aphid equation only through the aphid
    // biomass factor, which vanishes on the boundary.
    let q1 = 0.0;
    let q2 = match param {
        BifParam::AphidMortality => -1.0,
        // The boundary state moves with the emission coefficient, so the
        // relevant derivative is the total one along the moving equilibrium:
        // d(gain - loss)/db = -pK/(nl).
        BifParam::Attraction => {
            -p.predation * p.capacity / (p.predator_mortality * p.predation_half)
        }
    };
    let q3 = second_differential(p, &point, tangent, tangent)[1];

    Ok(TransversalityReport {
        tangent,
        adjoint,
        q1,
        q2,
        q3,
        nondegenerate: q2 != 0.0 && q3 != 0.0,
    })
}

/// Locates a saddle-node of coexistence states inside `range`.
///
/// A coarse scan finds a ±2 jump of the transversal root count, bisection
/// tightens the parameter bracket, and the critical value is the extremum —
/// between the colliding pair — of the exact affine parameter-at-root map.
/// Normal-form data come from adjugate null vectors of the critical
/// Jacobian.
pub fn locate_fold(
    p: &ModelParams,
    param: BifParam,
    range: (f64, f64),
    tol: f64,
) -> Result<BifurcationEvent> {
    let (lo, hi) = validated_range(param, range)?;
    let tol = sane_tol(tol);

    // Fine enough to resolve the colliding pair close to the fold.
    const SCAN_GRID: usize = 8192;
    const COARSE: usize = 64;
    let count_at = |v: f64| -> usize {
        find_interior_equilibria(&param.with_value(p, v), SCAN_GRID, DEFAULT_TOL)
            .transversal_count()
    };

    let mut bracket = None;
    let mut prev_v = lo;
    let mut prev_c = count_at(lo);
    for i in 1..=COARSE {
        let v = lo + (hi - lo) * i as f64 / COARSE as f64;
        let c = count_at(v);
        if c.abs_diff(prev_c) >= 2 {
            bracket = Some((prev_v, v, prev_c, c));
            break;
        }
        prev_v = v;
        prev_c = c;
    }
    let Some((mut blo, mut bhi, c_lo, c_hi)) = bracket else {
        return Err(Error::NoFoldInRange {
            name: param.key(),
            lo,
            hi,
        });
    };

    // The pair lives on the side with more roots; bisection keeps that
    // endpoint rich so the pair stays resolvable.
    let pair_on_high_side = c_hi > c_lo;
    let width_target = tol.min(1e-4).max(1e-8);
    while bhi - blo > width_target {
        let mid = 0.5 * (blo + bhi);
        let cm = count_at(mid);
        if cm == c_lo {
            blo = mid;
        } else if cm == c_hi {
            bhi = mid;
        } else {
            break; // pair at grid resolution; current bracket suffices
        }
    }

    let rich_value = if pair_on_high_side { bhi } else { blo };
    let rich = find_interior_equilibria(&param.with_value(p, rich_value), SCAN_GRID, DEFAULT_TOL);
    let xs: Vec<f64> = rich
        .roots
        .iter()
        .filter(|r| !r.marginal)
        .map(|r| r.point.crop)
        .collect();
    if xs.len() < 2 {
        return Err(Error::NoFoldInRange {
            name: param.key(),
            lo,
            hi,
        });
    }
    let mut pair_start = 0;
    let mut pair_gap = f64::INFINITY;
    for i in 0..xs.len() - 1 {
        if xs[i + 1] - xs[i] < pair_gap {
            pair_gap = xs[i + 1] - xs[i];
            pair_start = i;
        }
    }
    let (xa, xb) = (xs[pair_start], xs[pair_start + 1]);

    // Parameter value placing a root at crop level x; exact because the
    // residual is affine in the parameter.
    let phi = |x: f64| -> f64 {
        let h_lo = interior_residual_unchecked(&param.with_value(p, lo), x);
        let h_hi = interior_residual_unchecked(&param.with_value(p, hi), x);
        let slope = (h_hi - h_lo) / (hi - lo);
        lo - h_lo / slope
    };
    // Roots exist on the rich side of the fold, so φ has a minimum between
    // the pair when the pair lives at larger parameter values, a maximum
    // otherwise.
    let objective = |x: f64| {
        if pair_on_high_side {
            phi(x)
        } else {
            -phi(x)
        }
    };
    let x_fold = golden_section(xa, xb, &objective);
    let critical = phi(x_fold);
    if !critical.is_finite() || critical < lo - 1e-9 || critical > hi + 1e-9 {
        return Err(Error::NoFoldInRange {
            name: param.key(),
            lo,
            hi,
        });
    }

    let p_crit = param.with_value(p, critical);
    let location = interior_point(&p_crit, x_fold);
    let jac = jacobian(&p_crit, &location);
    let coeffs = char_coeffs(&jac);
    let adj = jac.adjugate();
    let tangent = normalize_tangent(strongest_column(&adj.0));
    let adjoint = normalize_adjoint(strongest_row(&adj.0), tangent);
    let q1 = dot(adjoint, param.field_derivative(&location));
    let q2 = match param {
        BifParam::AphidMortality => -adjoint[1] * tangent[1],
        BifParam::Attraction => adjoint[2] * tangent[0],
    };
    let q3 = dot(adjoint, second_differential(&p_crit, &location, tangent, tangent));

    Ok(BifurcationEvent {
        kind: EventKind::SaddleNode,
        parameter: param,
        value: critical,
        location,
        defect: coeffs.a3.abs(),
        transversality: Some(TransversalityReport {
            tangent,
            adjoint,
            q1,
            q2,
            q3,
            nondegenerate: q1 != 0.0 && q3 != 0.0,
        }),
        crossing_speed: None,
    })
}

/// Locates a Hopf point on a coexistence branch inside `range`.
///
/// Branches are tracked across the window by nearest crop level; a sign
/// change of the Routh–Hurwitz discriminant with `a1, a2` positive on both
/// sides is bisected down to `tol`, and the conjugate pair is checked to sit
/// on the imaginary axis.
pub fn locate_hopf(
    p: &ModelParams,
    param: BifParam,
    range: (f64, f64),
    tol: f64,
) -> Result<BifurcationEvent> {
    let (lo, hi) = validated_range(param, range)?;
    let tol = sane_tol(tol);

    let seeds = transversal_roots(p, param, lo);
    if seeds.is_empty() {
        return Err(Error::NoHopfInRange {
            name: param.key(),
            lo,
            hi,
        });
    }

    const WALK: usize = 16;
    let mut any_tracked = false;
    for seed in &seeds {
        let mut x_prev = seed.point.crop;
        let mut samples: Vec<(f64, f64, CharCoeffs)> = Vec::new();
        let mut lost = false;
        for i in 0..=WALK {
            let v = lo + (hi - lo) * i as f64 / WALK as f64;
            match nearest_root(&transversal_roots(p, param, v), x_prev) {
                Some(root) => {
                    let pv = param.with_value(p, v);
                    let coeffs = char_coeffs(&jacobian(&pv, &root.point));
                    x_prev = root.point.crop;
                    samples.push((v, x_prev, coeffs));
                }
                None => {
                    lost = true;
                    break;
                }
            }
        }
        if lost {
            continue;
        }
        any_tracked = true;
        for pair in samples.windows(2) {
            let (v0, x0, c0) = pair[0];
            let (v1, _, c1) = pair[1];
            let sides_qualify = c0.a1 > MARGIN
                && c0.a2 > MARGIN
                && c1.a1 > MARGIN
                && c1.a2 > MARGIN;
            if sides_qualify && c0.rh_discriminant * c1.rh_discriminant < 0.0 {
                return refine_hopf(p, param, (v0, v1), x0, tol);
            }
        }
    }
    if any_tracked {
        Err(Error::NoHopfInRange {
            name: param.key(),
            lo,
            hi,
        })
    } else {
        Err(Error::BranchLost {
            name: param.key(),
            value: lo,
        })
    }
}

fn refine_hopf(
    p: &ModelParams,
    param: BifParam,
    bracket: (f64, f64),
    x_seed: f64,
    tol: f64,
) -> Result<BifurcationEvent> {
    let (mut vlo, mut vhi) = bracket;
    let mut x_track = x_seed;
    let track = |v: f64, near: f64| -> Result<(EquilibriumReport, CharCoeffs)> {
        let roots = transversal_roots(p, param, v);
        match nearest_root(&roots, near) {
            Some(root) => {
                let coeffs = char_coeffs(&jacobian(&param.with_value(p, v), &root.point));
                Ok((*root, coeffs))
            }
            None => Err(Error::BranchLost {
                name: param.key(),
                value: v,
            }),
        }
    };

    let (_, c_lo) = track(vlo, x_track)?;
    let lo_positive = c_lo.rh_discriminant > 0.0;
    let width_target = tol.min(1e-9);
    for _ in 0..200 {
        if vhi - vlo <= width_target {
            break;
        }
        let mid = 0.5 * (vlo + vhi);
        let (root, coeffs) = track(mid, x_track)?;
        x_track = root.point.crop;
        if (coeffs.rh_discriminant > 0.0) == lo_positive {
            vlo = mid;
        } else {
            vhi = mid;
        }
    }
    let value = 0.5 * (vlo + vhi);
    let (root, coeffs) = track(value, x_track)?;

    // At a genuine Hopf point the conjugate pair sits on the imaginary axis.
    let eigen = cubic_roots(&coeffs);
    let pair_re = eigen
        .iter()
        .filter(|z| z.im != 0.0)
        .map(|z| z.re.abs())
        .fold(f64::INFINITY, f64::min);
    if !(pair_re <= 1e-6) {
        return Err(Error::NoHopfInRange {
            name: param.key(),
            lo: bracket.0,
            hi: bracket.1,
        });
    }

    // Crossing speed of the discriminant along the branch.
    let dv = 1e-4 * (1.0 + value.abs());
    let crossing_speed = match (track(value - dv, root.point.crop), track(value + dv, root.point.crop)) {
        (Ok((_, cm)), Ok((_, cp))) => {
            Some((cp.rh_discriminant - cm.rh_discriminant) / (2.0 * dv))
        }
        _ => None,
    };

    Ok(BifurcationEvent {
        kind: EventKind::Hopf,
        parameter: param,
        value,
        location: root.point,
        defect: coeffs.rh_discriminant.abs(),
        transversality: None,
        crossing_speed,
    })
}

/// One classified equilibrium in a scan row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanEntry {
    pub point: State,
    pub verdict: Verdict,
    pub coeffs: CharCoeffs,
    pub marginal: bool,
}

/// All equilibria at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub value: f64,
    /// Verdict of the aphid-free boundary state.
    pub aphid_free: Verdict,
    /// Coexistence states sorted by crop level.
    pub entries: Vec<ScanEntry>,
}

/// A one-parameter bifurcation diagram: classified branches plus events.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub parameter: BifParam,
    pub rows: Vec<ScanRow>,
    pub events: Vec<BifurcationEvent>,
}

/// Sweeps `param` over `range` in `steps` uniform increments, classifying
/// every equilibrium at each value and detecting events between consecutive
/// values: invasion-gap sign changes (transcritical, refined by the closed
/// form), ±2 root-count jumps (saddle-node, refined by [`locate_fold`]), and
/// qualifying discriminant sign changes on matched branches (Hopf, refined
/// by [`locate_hopf`]).
pub fn scan_parameter(
    p: &ModelParams,
    param: BifParam,
    range: (f64, f64),
    steps: usize,
) -> Result<ScanResult> {
    let (lo, hi) = validated_range(param, range)?;
    if steps == 0 {
        return Err(Error::Config(
            "parameter scan needs at least one step".to_string(),
        ));
    }

    let value_at = |i: usize| lo + (hi - lo) * i as f64 / steps as f64;
    let mut rows: Vec<ScanRow> = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let v = value_at(i);
        let pv = param.with_value(p, v);
        let search = find_interior_equilibria(&pv, DEFAULT_GRID, DEFAULT_TOL);
        let entries = search
            .roots
            .iter()
            .map(|root| {
                let rep = classify_interior(&pv, root);
                ScanEntry {
                    point: root.point,
                    verdict: rep.verdict,
                    coeffs: rep.coeffs,
                    marginal: root.marginal,
                }
            })
            .collect();
        rows.push(ScanRow {
            value: v,
            aphid_free: classify_aphid_free(&pv).verdict,
            entries,
        });
    }

    let mut events: Vec<BifurcationEvent> = Vec::new();
    for i in 0..steps {
        let (v0, v1) = (value_at(i), value_at(i + 1));

        // Transcritical: the invasion gap is affine in both supported
        // parameters, so a strict sign change pins the closed-form value.
        let g0 = invasion_gap(&param.with_value(p, v0));
        let g1 = invasion_gap(&param.with_value(p, v1));
        if g0 * g1 < 0.0 {
            let critical = match param {
                BifParam::AphidMortality => transcritical_mortality(p),
                BifParam::Attraction => transcritical_attraction(p),
            };
            let p_crit = param.with_value(p, critical);
            events.push(BifurcationEvent {
                kind: EventKind::Transcritical,
                parameter: param,
                value: critical,
                location: aphid_free_equilibrium(&p_crit).point,
                defect: invasion_gap(&p_crit).abs(),
                transversality: transcritical_transversality(&p_crit, param).ok(),
                crossing_speed: None,
            });
        }

        // Saddle-node: a jump of at least two in the transversal count.
        let c0 = transversal_entry_count(&rows[i]);
        let c1 = transversal_entry_count(&rows[i + 1]);
        if c0.abs_diff(c1) >= 2 {
            events.push(locate_fold(p, param, (v0, v1), 1e-9)?);
        }

        // Hopf: discriminant flip on a matched branch with a1, a2 positive.
        let mut hopf_here = false;
        for e0 in rows[i].entries.iter().filter(|e| !e.marginal) {
            let candidate = rows[i + 1]
                .entries
                .iter()
                .filter(|e| !e.marginal)
                .min_by(|a, b| {
                    let da = (a.point.crop - e0.point.crop).abs();
                    let db = (b.point.crop - e0.point.crop).abs();
                    da.partial_cmp(&db).unwrap()
                });
            let Some(e1) = candidate else { continue };
            if (e1.point.crop - e0.point.crop).abs() > 0.1 {
                continue;
            }
            let sides_qualify = e0.coeffs.a1 > MARGIN
                && e0.coeffs.a2 > MARGIN
                && e1.coeffs.a1 > MARGIN
                && e1.coeffs.a2 > MARGIN;
            if sides_qualify
                && e0.coeffs.rh_discriminant * e1.coeffs.rh_discriminant < 0.0
                && !hopf_here
            {
                match locate_hopf(p, param, (v0, v1), 1e-9) {
                    Ok(event) => {
                        events.push(event);
                        hopf_here = true;
                    }
                    Err(Error::NoHopfInRange { .. }) | Err(Error::BranchLost { .. }) => {}
                    Err(other) => return Err(other),
                }
            }
        }
    }

    events.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    Ok(ScanResult {
        parameter: param,
        rows,
        events,
    })
}

fn transversal_entry_count(row: &ScanRow) -> usize {
    row.entries.iter().filter(|e| !e.marginal).count()
}

fn transversal_roots(p: &ModelParams, param: BifParam, v: f64) -> Vec<EquilibriumReport> {
    find_interior_equilibria(&param.with_value(p, v), DEFAULT_GRID, DEFAULT_TOL)
        .roots
        .into_iter()
        .filter(|r| !r.marginal)
        .collect()
}

/// Nearest tracked root by crop level, within a 0.1 matching window.
fn nearest_root(roots: &[EquilibriumReport], near: f64) -> Option<&EquilibriumReport> {
    roots
        .iter()
        .min_by(|a, b| {
            let da = (a.point.crop - near).abs();
            let db = (b.point.crop - near).abs();
            da.partial_cmp(&db).unwrap()
        })
        .filter(|r| (r.point.crop - near).abs() <= 0.1)
}

fn validated_range(param: BifParam, range: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = range;
    let floor_ok = match param {
        BifParam::AphidMortality => lo > 0.0,
        BifParam::Attraction => lo >= 0.0,
    };
    if !(lo.is_finite() && hi.is_finite() && lo < hi && floor_ok) {
        return Err(Error::Config(format!(
            "invalid search range [{lo}, {hi}] for `{}`",
            param.key()
        )));
    }
    Ok((lo, hi))
}

fn sane_tol(tol: f64) -> f64 {
    if tol.is_finite() && tol > 0.0 {
        tol
    } else {
        1e-9
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn strongest_column(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut best = 0;
    let mut best_norm = -1.0;
    for j in 0..3 {
        let col_norm = (m[0][j] * m[0][j] + m[1][j] * m[1][j] + m[2][j] * m[2][j]).sqrt();
        if col_norm > best_norm {
            best_norm = col_norm;
            best = j;
        }
    }
    [m[0][best], m[1][best], m[2][best]]
}

fn strongest_row(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (i, row) in m.iter().enumerate() {
        let row_norm = norm(*row);
        if row_norm > best_norm {
            best_norm = row_norm;
            best = i;
        }
    }
    m[best]
}

/// Scale the tangent to unit aphid component when possible, unit norm
/// otherwise.
fn normalize_tangent(v: [f64; 3]) -> [f64; 3] {
    let n = norm(v);
    if v[1].abs() > 1e-12 * n {
        [v[0] / v[1], 1.0, v[2] / v[1]]
    } else {
        [v[0] / n, v[1] / n, v[2] / n]
    }
}

/// Scale the adjoint so that ⟨adjoint, tangent⟩ = 1 when the two are not
/// numerically orthogonal, unit norm otherwise.
fn normalize_adjoint(w: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    let s = dot(w, v);
    if s.abs() > 1e-12 * norm(w) * norm(v) {
        [w[0] / s, w[1] / s, w[2] / s]
    } else {
        let n = norm(w);
        [w[0] / n, w[1] / n, w[2] / n]
    }
}

/// Golden-section minimization of `f` on `[a, b]` down to floating-point
/// resolution of the abscissa.
fn golden_section(mut a: f64, mut b: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if b - a <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::vector_field;
    use crate::stability::classify_aphid_free;
    use approx::assert_relative_eq;

    fn with_attraction(b: f64) -> ModelParams {
        ModelParams {
            attraction: b,
            ..ModelParams::default()
        }
    }

    #[test]
    fn closed_form_thresholds() {
        let p = with_attraction(0.26);
        assert_relative_eq!(
            transcritical_mortality(&p),
            0.04 / 1.5 - 0.01 * 0.26 / 0.15,
            max_relative = 1e-13
        );
        assert!((transcritical_attraction(&p) - 0.25).abs() < 1e-12);

        // At either critical value the aphid-free state is exactly marginal.
        let at_m = BifParam::AphidMortality.with_value(&p, transcritical_mortality(&p));
        assert_eq!(classify_aphid_free(&at_m).verdict, Verdict::Marginal);
        let at_b = BifParam::Attraction.with_value(&p, transcritical_attraction(&p));
        assert_eq!(classify_aphid_free(&at_b).verdict, Verdict::Marginal);
    }

    #[test]
    fn transversality_requires_criticality() {
        let p = with_attraction(0.26);
        assert!(matches!(
            transcritical_transversality(&p, BifParam::AphidMortality),
            Err(Error::NotCritical(_))
        ));
    }

    #[test]
    fn mortality_exchange_coefficients() {
        let p = with_attraction(0.26);
        let pc = BifParam::AphidMortality.with_value(&p, transcritical_mortality(&p));
        let report = transcritical_transversality(&pc, BifParam::AphidMortality).unwrap();
        assert_eq!(report.q1, 0.0);
        assert_eq!(report.q2, -1.0);
        // Tangent solved from the boundary Jacobian rows.
        assert_relative_eq!(report.tangent[0], -(0.1 / (0.1 * 1.5)), max_relative = 1e-12);
        assert_relative_eq!(report.tangent[1], 1.0, max_relative = 1e-15);
        assert!((report.tangent[2] - 2.3844).abs() < 5e-4);
        assert!((report.q3 - (-0.0378963)).abs() < 1e-6);
        assert!(report.nondegenerate);

        // Finite-difference oracle for the quadratic coefficient: centered
        // second difference of the aphid component along the tangent.
        let e1 = aphid_free_equilibrium(&pc).point;
        let v = report.tangent;
        let h = 1e-4;
        let eval = |sign: f64| {
            let s = State::new(
                e1.crop + sign * h * v[0],
                e1.aphids + sign * h * v[1],
                e1.enemies + sign * h * v[2],
            );
            vector_field(&pc, &s)[1]
        };
        let fd = (eval(1.0) - 2.0 * vector_field(&pc, &e1)[1] + eval(-1.0)) / (h * h);
        assert!((fd - report.q3).abs() < 1e-6, "fd {fd} vs q3 {}", report.q3);
    }

    #[test]
    fn attraction_exchange_coefficients() {
        let p = with_attraction(0.26);
        let pc = BifParam::Attraction.with_value(&p, transcritical_attraction(&p));
        let report = transcritical_transversality(&pc, BifParam::Attraction).unwrap();
        assert_eq!(report.q1, 0.0);
        assert_relative_eq!(report.q2, -1.0 / 15.0, max_relative = 1e-12);
        assert!(report.q3 != 0.0);
        assert!(report.nondegenerate);
    }

    #[test]
    fn fold_location_and_normal_form() {
        let p = with_attraction(0.26);
        let event = locate_fold(&p, BifParam::Attraction, (0.20, 0.25), 1e-9).unwrap();
        assert_eq!(event.kind, EventKind::SaddleNode);
        assert!(
            (event.value - 0.2357421181).abs() < 1e-8,
            "fold at {}",
            event.value
        );
        assert!((event.location.crop - 0.9307718).abs() < 1e-4);
        // The determinant coefficient vanishes at the collision.
        assert!(event.defect < 1e-8, "defect {}", event.defect);
        let t = event.transversality.unwrap();
        // Null-vector residual of the critical Jacobian.
        let p_star = BifParam::Attraction.with_value(&p, event.value);
        let jac = jacobian(&p_star, &event.location);
        let jv = jac.mul_vec(t.tangent);
        let n = norm(t.tangent);
        assert!(norm(jv) <= 1e-8 * (1.0 + n), "|J v| = {}", norm(jv));
        let wj = jac.transpose().mul_vec(t.adjoint);
        assert!(norm(wj) <= 1e-8 * (1.0 + norm(t.adjoint)));
        assert_relative_eq!(dot(t.adjoint, t.tangent), 1.0, max_relative = 1e-9);
        assert!(t.q1 != 0.0 && t.q3 != 0.0 && t.nondegenerate);
    }

    #[test]
    fn fold_is_consistent_with_root_counts() {
        // Just below the fold value one transversal pair is missing; just
        // above it is present.
        let p = with_attraction(0.26);
        let event = locate_fold(&p, BifParam::Attraction, (0.20, 0.25), 1e-9).unwrap();
        let below = find_interior_equilibria(
            &BifParam::Attraction.with_value(&p, event.value - 1e-4),
            DEFAULT_GRID,
            DEFAULT_TOL,
        );
        let above = find_interior_equilibria(
            &BifParam::Attraction.with_value(&p, event.value + 1e-4),
            DEFAULT_GRID,
            DEFAULT_TOL,
        );
        assert_eq!(below.transversal_count() + 2, above.transversal_count());
    }

    #[test]
    fn no_fold_outside_the_collision_window() {
        let p = with_attraction(0.26);
        assert!(matches!(
            locate_fold(&p, BifParam::Attraction, (0.18, 0.21), 1e-9),
            Err(Error::NoFoldInRange { .. })
        ));
    }

    #[test]
    fn mortality_fold_in_upper_window() {
        // At high constitutive emission the two remaining coexistence states
        // collide as mortality rises.
        let p = with_attraction(0.26);
        let event = locate_fold(&p, BifParam::AphidMortality, (0.011, 0.013), 1e-9).unwrap();
        assert!(event.value > 0.0115 && event.value < 0.0120, "m̃ = {}", event.value);
        assert!(event.defect < 1e-8);
        let below = find_interior_equilibria(
            &BifParam::AphidMortality.with_value(&p, event.value - 1e-4),
            DEFAULT_GRID,
            DEFAULT_TOL,
        );
        let above = find_interior_equilibria(
            &BifParam::AphidMortality.with_value(&p, event.value + 1e-4),
            DEFAULT_GRID,
            DEFAULT_TOL,
        );
        assert_eq!(below.transversal_count(), 2);
        assert_eq!(above.transversal_count(), 0);
    }

    #[test]
    fn hopf_location_on_the_coexistence_branch() {
        let p = with_attraction(0.26);
        let event = locate_hopf(&p, BifParam::Attraction, (0.17, 0.22), 1e-10).unwrap();
        assert_eq!(event.kind, EventKind::Hopf);
        assert!(
            (event.value - 0.1906988944).abs() < 1e-7,
            "hopf at {}",
            event.value
        );
        assert!(event.defect < 1e-9);
        let speed = event.crossing_speed.unwrap();
        assert!(speed > 0.0, "crossing speed {speed}");
        // Verdict flips across the located value.
        let below = with_attraction(event.value - 1e-3);
        let s_below = find_interior_equilibria(&below, DEFAULT_GRID, DEFAULT_TOL);
        assert_eq!(
            crate::stability::classify_interior(&below, &s_below.roots[0]).verdict,
            Verdict::Unstable
        );
        let above = with_attraction(event.value + 1e-3);
        let s_above = find_interior_equilibria(&above, DEFAULT_GRID, DEFAULT_TOL);
        assert_eq!(
            crate::stability::classify_interior(&above, &s_above.roots[0]).verdict,
            Verdict::LocallyStable
        );
    }

    #[test]
    fn no_hopf_on_a_quiet_window() {
        let p = with_attraction(0.26);
        assert!(matches!(
            locate_hopf(&p, BifParam::Attraction, (0.21, 0.24), 1e-9),
            Err(Error::NoHopfInRange { .. })
        ));
    }

    #[test]
    fn attraction_scan_finds_all_three_events() {
        let p = with_attraction(0.26);
        let scan = scan_parameter(&p, BifParam::Attraction, (0.18, 0.27), 90).unwrap();
        assert_eq!(scan.rows.len(), 91);

        let kinds: Vec<EventKind> = scan.events.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![EventKind::Hopf, EventKind::SaddleNode, EventKind::Transcritical]
        );
        assert!((scan.events[0].value - 0.19069889).abs() < 1e-6);
        assert!((scan.events[1].value - 0.23574212).abs() < 1e-6);
        assert!((scan.events[2].value - 0.25).abs() < 1e-12);

        // Branch verdicts on either end of the window.
        let first = &scan.rows[0];
        assert_eq!(first.aphid_free, Verdict::Unstable);
        assert_eq!(first.entries.len(), 1);
        assert_eq!(first.entries[0].verdict, Verdict::Unstable);
        let last = scan.rows.last().unwrap();
        assert_eq!(last.aphid_free, Verdict::LocallyStable);
    }

    #[test]
    fn mortality_scan_has_one_transcritical_event() {
        let p = with_attraction(0.26);
        let scan = scan_parameter(&p, BifParam::AphidMortality, (0.005, 0.015), 100).unwrap();
        let transcritical: Vec<&BifurcationEvent> = scan
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Transcritical)
            .collect();
        assert_eq!(transcritical.len(), 1);
        assert!(
            (transcritical[0].value - transcritical_mortality(&p)).abs() < 1e-9,
            "m* located at {}",
            transcritical[0].value
        );
        // The same window also contains the two mortality folds.
        let folds = scan
            .events
            .iter()
            .filter(|e| e.kind == EventKind::SaddleNode)
            .count();
        assert_eq!(folds, 2);
    }

    #[test]
    fn scan_rejects_bad_ranges() {
        let p = with_attraction(0.26);
        assert!(matches!(
            scan_parameter(&p, BifParam::Attraction, (0.3, 0.2), 10),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            scan_parameter(&p, BifParam::AphidMortality, (0.0, 0.01), 10),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            scan_parameter(&p, BifParam::Attraction, (0.2, 0.3), 0),
            Err(Error::Config(_))
        ));
    }
}
