//! Local stability analysis: characteristic coefficients of 3×3 Jacobians,
//! Routh–Hurwitz classification, a closed-form cubic eigenvalue solver, and
//! per-equilibrium classification reports.

use num_complex::Complex64;

use crate::equilibria::{
    aphid_free_equilibrium, collapse_equilibrium, EquilibriumKind, EquilibriumReport,
};
use crate::model::{jacobian, Matrix3, ModelParams};
use crate::model::State;

/// Half-width of the band around zero inside which a Routh–Hurwitz quantity
/// (or a critical eigenvalue) is treated as vanishing, i.e. the
/// classification is reported as marginal rather than decided by a sign that
/// is indistinguishable from rounding noise.
pub const MARGIN: f64 = 1e-8;

/// Coefficients of the characteristic polynomial
/// `λ³ + a1 λ² + a2 λ + a3` of a 3×3 matrix, together with the
/// Routh–Hurwitz discriminant `a1 a2 - a3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `a1·a2 - a3`; positive (together with `a1, a2, a3 > 0`) exactly when
    /// all roots have negative real part.
    pub rh_discriminant: f64,
}

impl CharCoeffs {
    pub fn new(a1: f64, a2: f64, a3: f64) -> Self {
        CharCoeffs {
            a1,
            a2,
            a3,
            rh_discriminant: a1 * a2 - a3,
        }
    }
}

/// Characteristic coefficients of `m`: `a1 = -tr`, `a2` the sum of principal
/// 2×2 minors, `a3 = -det`.
pub fn char_coeffs(m: &Matrix3) -> CharCoeffs {
    CharCoeffs::new(-m.trace(), m.principal_minor_sum(), -m.det())
}

/// Three-way stability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    LocallyStable,
    Unstable,
    /// Some decisive quantity sits inside the numerical margin around zero;
    /// the sign test cannot be trusted.
    Marginal,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::LocallyStable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        })
    }
}

/// Routh–Hurwitz test for a real cubic: all roots lie strictly in the left
/// half-plane iff `a1, a2, a3, a1·a2 - a3` are all positive.
///
/// Quantities clearing [`MARGIN`] decide the verdict; if any falls inside
/// the margin band the verdict is [`Verdict::Marginal`].
pub fn routh_hurwitz(c: &CharCoeffs) -> Verdict {
    let quantities = [c.a1, c.a2, c.a3, c.rh_discriminant];
    if quantities.iter().all(|&q| q > MARGIN) {
        Verdict::LocallyStable
    } else if quantities.iter().any(|&q| q.abs() <= MARGIN) {
        Verdict::Marginal
    } else {
        Verdict::Unstable
    }
}

/// All three roots of `λ³ + a1 λ² + a2 λ + a3`, sorted by real part (ties by
/// imaginary part). Complex roots come in exact conjugate pairs.
///
/// Uses the trigonometric form when all roots are real and a
/// cancellation-free Cardano root plus quadratic deflation otherwise, with
/// guarded Newton polishing on the original polynomial.
pub fn cubic_roots(c: &CharCoeffs) -> [Complex64; 3] {
    let (a1, a2, a3) = (c.a1, c.a2, c.a3);
    // Depressed form: λ = t - a1/3 turns the cubic into t³ + p t + q.
    let shift = a1 / 3.0;
    let p = a2 - a1 * a1 / 3.0;
    let q = 2.0 * a1 * a1 * a1 / 27.0 - a1 * a2 / 3.0 + a3;
    let disc = -4.0 * p * p * p - 27.0 * q * q;

    let mut roots = if disc >= 0.0 {
        // Three real roots. disc ≥ 0 forces p ≤ 0; p = 0 only with q = 0.
        if p >= 0.0 {
            [Complex64::new(0.0, 0.0); 3]
        } else {
            let rho = 2.0 * (-p / 3.0).sqrt();
            let cos_arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
            let theta = cos_arg.acos() / 3.0;
            let third_turn = 2.0 * std::f64::consts::FRAC_PI_3;
            [
                Complex64::new(rho * theta.cos(), 0.0),
                Complex64::new(rho * (theta - third_turn).cos(), 0.0),
                Complex64::new(rho * (theta + third_turn).cos(), 0.0),
            ]
        }
    } else {
        // One real root, cancellation-free: pick the cube-root term whose
        // two summands share a sign.
        let half_q = 0.5 * q;
        let delta = (half_q * half_q + p * p * p / 27.0).sqrt();
        let w = if q >= 0.0 {
            (-half_q - delta).cbrt()
        } else {
            (-half_q + delta).cbrt()
        };
        let t1 = polish_real_depressed(p, q, w - p / (3.0 * w));
        // Deflation: the conjugate pair solves t² + t1·t + (t1² + p).
        let re = -0.5 * t1;
        let im = (0.75 * t1 * t1 + p).max(0.0).sqrt();
        [
            Complex64::new(t1, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    };

    for r in &mut roots {
        *r -= shift;
    }

    // Guarded Newton polish on the original polynomial: real roots with real
    // steps, the pair with one complex step mirrored to preserve conjugacy.
    for i in 0..3 {
        if roots[i].im == 0.0 {
            roots[i].re = polish_real_monic(a1, a2, a3, roots[i].re);
        }
    }
    if roots[1].im != 0.0 {
        let polished = polish_complex_monic(a1, a2, a3, roots[1]);
        roots[1] = polished;
        roots[2] = polished.conj();
    }

    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    roots
}

fn polish_real_depressed(p: f64, q: f64, x0: f64) -> f64 {
    let mut x = x0;
    let mut fx = (x * x + p) * x + q;
    for _ in 0..3 {
        let df = 3.0 * x * x + p;
        if df == 0.0 {
            break;
        }
        let xn = x - fx / df;
        let fxn = (xn * xn + p) * xn + q;
        if !xn.is_finite() || fxn.abs() >= fx.abs() {
            break;
        }
        x = xn;
        fx = fxn;
    }
    x
}

fn polish_real_monic(a1: f64, a2: f64, a3: f64, x0: f64) -> f64 {
    let f = |x: f64| ((x + a1) * x + a2) * x + a3;
    let mut x = x0;
    let mut fx = f(x);
    for _ in 0..3 {
        let df = (3.0 * x + 2.0 * a1) * x + a2;
        if df == 0.0 {
            break;
        }
        let xn = x - fx / df;
        let fxn = f(xn);
        if !xn.is_finite() || fxn.abs() >= fx.abs() {
            break;
        }
        x = xn;
        fx = fxn;
    }
    x
}

fn polish_complex_monic(a1: f64, a2: f64, a3: f64, z0: Complex64) -> Complex64 {
    let f = |z: Complex64| ((z + a1) * z + a2) * z + a3;
    let mut z = z0;
    let mut fz = f(z);
    for _ in 0..3 {
        let df = (z * 3.0 + 2.0 * a1) * z + a2;
        if df.norm() == 0.0 {
            break;
        }
        let zn = z - fz / df;
        let fzn = f(zn);
        if !zn.is_finite() || fzn.norm() >= fz.norm() {
            break;
        }
        z = zn;
        fz = fzn;
    }
    z
}

/// Diagonal/determinant sign pattern that is sufficient (not necessary) for
/// local stability of a coexistence state: each species self-damps and the
/// determinant coefficient is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SufficientConditions {
    /// Crop self-interaction `∂x'/∂x < 0`.
    pub crop_self_damping: bool,
    /// Aphid self-interaction `∂y'/∂y < 0`.
    pub aphid_self_damping: bool,
    /// Enemy self-interaction `∂z'/∂z < 0`.
    pub enemy_self_damping: bool,
    /// Determinant coefficient `a3 > 0`.
    pub positive_determinant_coeff: bool,
}

impl SufficientConditions {
    pub fn all_hold(&self) -> bool {
        self.crop_self_damping
            && self.aphid_self_damping
            && self.enemy_self_damping
            && self.positive_determinant_coeff
    }
}

/// Full classification of one equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub kind: EquilibriumKind,
    pub point: State,
    pub coeffs: CharCoeffs,
    /// Eigenvalues sorted by real part.
    pub eigenvalues: [Complex64; 3],
    pub verdict: Verdict,
    /// For the aphid-free state: `(invasion gain, invasion loss)` of a rare
    /// aphid population; stability is their comparison.
    pub threshold: Option<(f64, f64)>,
    /// For coexistence states: the sufficient sign pattern.
    pub sufficient: Option<SufficientConditions>,
}

/// Classifies the total-collapse state. Its eigenvalues are `r, -m, -n`
/// exactly, so it is unstable for every admissible parameter set (the crop
/// always regrows).
pub fn classify_collapse(p: &ModelParams) -> StabilityReport {
    let eq = collapse_equilibrium(p);
    let jac = jacobian(p, &eq.point);
    let coeffs = char_coeffs(&jac);
    let eigenvalues = sorted_reals([
        p.growth,
        -p.aphid_mortality,
        -p.predator_mortality,
    ]);
    let verdict = if p.growth > MARGIN {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    };
    StabilityReport {
        kind: EquilibriumKind::Collapse,
        point: eq.point,
        coeffs,
        eigenvalues,
        verdict,
        threshold: None,
        sufficient: None,
    }
}

/// Classifies the aphid-free state `(K, 0, bK/n)`.
///
/// Its spectrum is `{-r, gain - loss, -n}` with the invasion gain
/// `e a K/(h + K)` and invasion loss `m + p b K/(n l)`: the state is locally
/// stable exactly when rare aphids cannot invade.
pub fn classify_aphid_free(p: &ModelParams) -> StabilityReport {
    let eq = aphid_free_equilibrium(p);
    let jac = jacobian(p, &eq.point);
    let coeffs = char_coeffs(&jac);
    let gain = p.invasion_gain();
    let loss = p.invasion_loss();
    let gap = gain - loss;
    let eigenvalues = sorted_reals([-p.growth, gap, -p.predator_mortality]);
    let verdict = if gap > MARGIN {
        Verdict::Unstable
    } else if gap < -MARGIN {
        Verdict::LocallyStable
    } else {
        Verdict::Marginal
    };
    StabilityReport {
        kind: EquilibriumKind::AphidFree,
        point: eq.point,
        coeffs,
        eigenvalues,
        verdict,
        threshold: Some((gain, loss)),
        sufficient: None,
    }
}

/// Classifies a coexistence equilibrium found by the interior search.
pub fn classify_interior(p: &ModelParams, eq: &EquilibriumReport) -> StabilityReport {
    let jac = jacobian(p, &eq.point);
    let coeffs = char_coeffs(&jac);
    let eigenvalues = cubic_roots(&coeffs);
    let verdict = routh_hurwitz(&coeffs);
    let sufficient = SufficientConditions {
        crop_self_damping: jac.0[0][0] < 0.0,
        aphid_self_damping: jac.0[1][1] < 0.0,
        enemy_self_damping: jac.0[2][2] < 0.0,
        positive_determinant_coeff: coeffs.a3 > 0.0,
    };
    StabilityReport {
        kind: eq.kind,
        point: eq.point,
        coeffs,
        eigenvalues,
        verdict,
        threshold: None,
        sufficient: Some(sufficient),
    }
}

fn sorted_reals(v: [f64; 3]) -> [Complex64; 3] {
    let mut v = v;
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    [
        Complex64::new(v[0], 0.0),
        Complex64::new(v[1], 0.0),
        Complex64::new(v[2], 0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{find_interior_equilibria, DEFAULT_GRID, DEFAULT_TOL};
    use crate::model::State;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn with_attraction(b: f64) -> ModelParams {
        ModelParams {
            attraction: b,
            ..ModelParams::default()
        }
    }

    fn poly_abs(c: &CharCoeffs, z: Complex64) -> f64 {
        (((z + c.a1) * z + c.a2) * z + c.a3).norm()
    }

    #[test]
    fn routh_hurwitz_reference_verdicts() {
        // (λ+1)³: stable.
        assert_eq!(routh_hurwitz(&CharCoeffs::new(3.0, 3.0, 1.0)), Verdict::LocallyStable);
        // Negative determinant coefficient: a real positive root.
        assert_eq!(routh_hurwitz(&CharCoeffs::new(1.0, 1.0, -1.0)), Verdict::Unstable);
        // (λ+1)(λ²+1): pure imaginary pair, zero discriminant.
        assert_eq!(routh_hurwitz(&CharCoeffs::new(1.0, 1.0, 1.0)), Verdict::Marginal);
        // All four quantities negative-free but one inside the margin band.
        assert_eq!(
            routh_hurwitz(&CharCoeffs::new(1.0, 1.0, 1e-9)),
            Verdict::Marginal
        );
    }

    #[test]
    fn cubic_roots_reference_cases() {
        // (λ-1)(λ-2)(λ-3) = λ³ - 6λ² + 11λ - 6.
        let r = cubic_roots(&CharCoeffs::new(-6.0, 11.0, -6.0));
        assert_relative_eq!(r[0].re, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r[1].re, 2.0, max_relative = 1e-12);
        assert_relative_eq!(r[2].re, 3.0, max_relative = 1e-12);
        assert!(r.iter().all(|z| z.im == 0.0));

        // (λ+1)(λ² + 4): conjugate pair ±2i.
        let r = cubic_roots(&CharCoeffs::new(1.0, 4.0, 4.0));
        assert_relative_eq!(r[0].re, -1.0, max_relative = 1e-12);
        assert_eq!(r[1].re, r[2].re);
        assert_eq!(r[1].im, -r[2].im);
        assert_relative_eq!(r[1].im.abs(), 2.0, max_relative = 1e-12);

        // Triple root (λ+2)³ = λ³ + 6λ² + 12λ + 8.
        let r = cubic_roots(&CharCoeffs::new(6.0, 12.0, 8.0));
        for z in r {
            assert!((z - Complex64::new(-2.0, 0.0)).norm() < 1e-4);
        }
    }

    proptest! {
        #[test]
        fn cubic_roots_have_small_residuals(
            a1 in -50.0..50.0f64,
            a2 in -50.0..50.0f64,
            a3 in -50.0..50.0f64,
        ) {
            let c = CharCoeffs::new(a1, a2, a3);
            let roots = cubic_roots(&c);
            for z in roots {
                let bound = 1e-9 * (1.0 + z.norm().powi(3));
                prop_assert!(poly_abs(&c, z) <= bound,
                    "residual {} above {} at root {}", poly_abs(&c, z), bound, z);
            }
            // Vieta: the roots reassemble the coefficients.
            let sum = roots[0] + roots[1] + roots[2];
            prop_assert!((sum.re + a1).abs() < 1e-8 * (1.0 + a1.abs()));
            prop_assert!(sum.im.abs() < 1e-9);
            let prod = roots[0] * roots[1] * roots[2];
            prop_assert!((prod.re + a3).abs() < 1e-7 * (1.0 + a3.abs()));
        }

        #[test]
        fn verdict_agrees_with_root_signs(
            a1 in -10.0..10.0f64,
            a2 in -10.0..10.0f64,
            a3 in -10.0..10.0f64,
        ) {
            let c = CharCoeffs::new(a1, a2, a3);
            let decisive = [c.a1, c.a2, c.a3, c.rh_discriminant]
                .iter()
                .all(|q| q.abs() > 10.0 * MARGIN);
            prop_assume!(decisive);
            let max_re = cubic_roots(&c)
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assume!(max_re.abs() > 1e-7);
            match routh_hurwitz(&c) {
                Verdict::LocallyStable => prop_assert!(max_re < 0.0),
                Verdict::Unstable => prop_assert!(max_re > 0.0),
                Verdict::Marginal => prop_assert!(false, "margins were excluded"),
            }
        }
    }

    #[test]
    fn discriminant_matches_expanded_display_form() {
        // The discriminant a1·a2 - a3 of the coexistence Jacobian (whose
        // (1,3) entry vanishes) equals the expanded entrywise display used
        // in hand calculations.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = with_attraction(rng.gen_range(0.0..0.4));
            let s = State::new(
                rng.gen_range(0.05..1.0),
                rng.gen_range(0.01..2.0),
                rng.gen_range(0.01..3.0),
            );
            let jac = jacobian(&p, &s);
            let m = &jac.0;
            let (a11, a12) = (m[0][0], m[0][1]);
            let (a21, a22, a23) = (m[1][0], m[1][1], m[1][2]);
            let (a31, a32, a33) = (m[2][0], m[2][1], m[2][2]);
            let display = -a11 * (a11 * a22 + a11 * a33 - a12 * a21)
                - a22 * (a11 * a22 + a11 * a33 + a22 * a33 - a12 * a21 - a23 * a32)
                - a33 * (a11 * a22 + a11 * a33 + a22 * a33 - a23 * a32)
                + a12 * a23 * a31;
            let coeffs = char_coeffs(&jac);
            assert_relative_eq!(
                coeffs.rh_discriminant,
                display,
                max_relative = 1e-10,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn compound_spectrum_is_pairwise_sums() {
        use crate::model::second_compound;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let p = with_attraction(rng.gen_range(0.05..0.4));
            let s = State::new(
                rng.gen_range(0.05..1.2),
                rng.gen_range(0.01..2.0),
                rng.gen_range(0.01..3.0),
            );
            let jac = jacobian(&p, &s);
            let eig = cubic_roots(&char_coeffs(&jac));
            let mut sums = [eig[0] + eig[1], eig[0] + eig[2], eig[1] + eig[2]];
            let mut comp = cubic_roots(&char_coeffs(&second_compound(&jac)));
            let key = |z: &Complex64| (z.re, z.im);
            sums.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            comp.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            for (a, b) in sums.iter().zip(comp.iter()) {
                assert!(
                    (a - b).norm() < 1e-8,
                    "pairwise sum {a} vs compound eigenvalue {b}"
                );
            }
        }
    }

    #[test]
    fn collapse_state_is_always_unstable() {
        let rep = classify_collapse(&with_attraction(0.26));
        assert_eq!(rep.verdict, Verdict::Unstable);
        let expected = [-0.3, -0.01, 0.1];
        for (z, e) in rep.eigenvalues.iter().zip(expected) {
            assert_relative_eq!(z.re, e, max_relative = 1e-14);
            assert_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn aphid_free_threshold_reference_values() {
        let rep = classify_aphid_free(&with_attraction(0.26));
        let (gain, loss) = rep.threshold.unwrap();
        assert!((gain - 0.0267).abs() < 1e-4);
        assert!((loss - 0.0273).abs() < 1e-4);
        assert_eq!(rep.verdict, Verdict::LocallyStable);

        assert_eq!(
            classify_aphid_free(&with_attraction(0.24)).verdict,
            Verdict::Unstable
        );
        assert_eq!(
            classify_aphid_free(&with_attraction(0.25)).verdict,
            Verdict::Marginal
        );
    }

    #[test]
    fn aphid_free_closed_form_matches_generic_solver() {
        for i in 0..=9 {
            let b = 0.18 + 0.09 * i as f64 / 9.0;
            let p = with_attraction(b);
            let rep = classify_aphid_free(&p);
            let generic = cubic_roots(&rep.coeffs);
            for (a, g) in rep.eigenvalues.iter().zip(generic.iter()) {
                assert!(
                    (a - g).norm() < 1e-9,
                    "closed-form {a} vs generic {g} at b = {b}"
                );
            }
        }
    }

    #[test]
    fn coexistence_pair_above_fold_has_expected_verdicts() {
        // In the bistable window the residual alternates sign: the low-crop
        // state is stable, the middle state born at the fold is unstable,
        // and the high-crop state is stable.
        let p = with_attraction(0.24);
        let search = find_interior_equilibria(&p, DEFAULT_GRID, DEFAULT_TOL);
        let verdicts: Vec<Verdict> = search
            .roots
            .iter()
            .filter(|r| !r.marginal)
            .map(|r| classify_interior(&p, r).verdict)
            .collect();
        assert_eq!(
            verdicts,
            vec![Verdict::LocallyStable, Verdict::Unstable, Verdict::LocallyStable]
        );
    }

    #[test]
    fn coexistence_coefficients_near_reference_point() {
        // Characteristic data of the higher-crop stable state in the
        // bistable window, quoted to ~3 significant figures.
        let p = with_attraction(0.24);
        let search = find_interior_equilibria(&p, DEFAULT_GRID, DEFAULT_TOL);
        let mid = &search.roots[2];
        assert!((mid.point.crop - 0.9707).abs() < 1e-3);
        let rep = classify_interior(&p, mid);
        assert!((rep.coeffs.a1 - 0.3934).abs() < 2e-2 * 0.3934);
        assert!((rep.coeffs.a2 - 0.0286).abs() < 2e-2 * 0.0286);
        assert!((rep.coeffs.a3 - 1.161e-5).abs() < 2e-2 * 1.161e-5);
        assert!((rep.coeffs.rh_discriminant - 0.0112).abs() < 2e-2 * 0.0112);
        // The recorded sufficient conditions: aphid self-damping can never
        // hold at a coexistence state, where the balance condition forces
        // the aphid diagonal entry to +p·y·z/(l+y)² > 0, so the conjunction
        // is reported false even though the state is stable.
        let suff = rep.sufficient.unwrap();
        assert!(suff.crop_self_damping);
        assert!(!suff.aphid_self_damping);
        assert!(suff.enemy_self_damping);
        assert!(suff.positive_determinant_coeff);
        assert!(!suff.all_hold());
        let s = &mid.point;
        let diag = jacobian(&p, s).0[1][1];
        let identity =
            p.predation * s.aphids * s.enemies / ((p.predation_half + s.aphids).powi(2));
        assert_relative_eq!(diag, identity, max_relative = 1e-6);
    }

    #[test]
    fn hopf_crossing_flips_interior_verdict() {
        // The unique coexistence state is unstable just below the
        // oscillation threshold and stable just above it.
        let below = with_attraction(0.1897);
        let above = with_attraction(0.1917);
        for (p, expected) in [
            (below, Verdict::Unstable),
            (above, Verdict::LocallyStable),
        ] {
            let search = find_interior_equilibria(&p, DEFAULT_GRID, DEFAULT_TOL);
            assert_eq!(search.transversal_count(), 1);
            let rep = classify_interior(&p, &search.roots[0]);
            assert_eq!(rep.verdict, expected, "b = {}", p.attraction);
        }
    }
}
