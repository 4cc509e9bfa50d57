//! Model definitions: parameters, state, vector field, Jacobian, second
//! additive compound matrix, second differential, and the absorbing region.
//!
//! Writing `x, y, z` for crop, aphid, and enemy biomass, the system is
//!
//! ```text
//! x' = r x (1 - x/K) - a x y / (h + x)
//! y' = y ( e a x / (h + x) - m - p z / (l + y) )
//! z' = x ( b + c y / (k + y) ) + z ( q p y / (l + y) - n )
//! ```
//!
//! Field names below spell out the ecological role of each constant; doc
//! comments note the conventional one-letter key used in configuration files.

use crate::{Error, Result};

/// Parameters of the crop–aphid–enemy system.
///
/// All rates are per unit time, all biomasses share one arbitrary unit. Every
/// parameter must be strictly positive except the two volatile-recruitment
/// coefficients ([`attraction`](Self::attraction) and
/// [`attraction_boost`](Self::attraction_boost)), which may be zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Intrinsic crop growth rate (config key `r`).
    pub growth: f64,
    /// Crop carrying capacity (config key `K`).
    pub capacity: f64,
    /// Maximal per-aphid grazing rate on crops (config key `a`).
    pub grazing: f64,
    /// Crop level at which grazing reaches half its maximum (config key `h`).
    pub grazing_half: f64,
    /// Yield of aphid biomass per unit of grazed crop (config key `e`).
    pub conversion: f64,
    /// Aphid per-capita mortality (config key `m`).
    pub aphid_mortality: f64,
    /// Maximal per-enemy predation rate on aphids (config key `p`).
    pub predation: f64,
    /// Aphid level at which predation reaches half its maximum (config key `l`).
    pub predation_half: f64,
    /// Baseline enemy recruitment per unit of crop, mediated by constitutive
    /// volatile emission (config key `b`). May be zero.
    pub attraction: f64,
    /// Additional recruitment per unit of crop under heavy aphid load,
    /// mediated by herbivore-induced volatiles (config key `c`). May be zero.
    pub attraction_boost: f64,
    /// Aphid level at which the induced volatile boost is half-saturated
    /// (config key `k`).
    pub attraction_half: f64,
    /// Yield of enemy biomass per unit of consumed aphid (config key `q`).
    pub predator_conversion: f64,
    /// Enemy per-capita mortality (config key `n`).
    pub predator_mortality: f64,
}

impl Default for ModelParams {
    /// Reference parameter set used throughout the documentation, examples,
    /// and shipped configuration files.
    fn default() -> Self {
        ModelParams {
            growth: 0.1,
            capacity: 1.0,
            grazing: 0.1,
            grazing_half: 0.5,
            conversion: 0.4,
            aphid_mortality: 0.01,
            predation: 0.01,
            predation_half: 0.5,
            attraction: 0.26,
            attraction_boost: 0.44,
            attraction_half: 0.5,
            predator_conversion: 0.5,
            predator_mortality: 0.3,
        }
    }
}

impl ModelParams {
    /// Checks positivity/non-negativity and finiteness of every parameter.
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 11] = [
            ("r", self.growth),
            ("K", self.capacity),
            ("a", self.grazing),
            ("h", self.grazing_half),
            ("e", self.conversion),
            ("m", self.aphid_mortality),
            ("p", self.predation),
            ("l", self.predation_half),
            ("k", self.attraction_half),
            ("q", self.predator_conversion),
            ("n", self.predator_mortality),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        let non_negative: [(&'static str, f64); 2] =
            [("b", self.attraction), ("c", self.attraction_boost)];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::NegativeAttraction { name, value });
            }
        }
        Ok(())
    }

    /// Per-capita aphid growth from grazing at crop level `x`:
    /// `e a x / (h + x)`.
    pub fn grazing_gain(&self, x: f64) -> f64 {
        self.conversion * self.grazing * x / (self.grazing_half + x)
    }

    /// Per-capita growth of a rare aphid population invading the aphid-free
    /// state: grazing gain at full crop, `e a K / (h + K)`.
    pub fn invasion_gain(&self) -> f64 {
        self.grazing_gain(self.capacity)
    }

    /// Per-capita loss of a rare aphid population at the aphid-free state:
    /// intrinsic mortality plus predation by the volatile-sustained enemy
    /// stock, `m + p b K / (n l)`.
    pub fn invasion_loss(&self) -> f64 {
        self.aphid_mortality
            + self.predation * self.attraction * self.capacity
                / (self.predator_mortality * self.predation_half)
    }
}

/// Biomass state of the three-species system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub crop: f64,
    pub aphids: f64,
    pub enemies: f64,
}

impl State {
    pub fn new(crop: f64, aphids: f64, enemies: f64) -> Self {
        State {
            crop,
            aphids,
            enemies,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.crop, self.aphids, self.enemies]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        State::new(v[0], v[1], v[2])
    }

    /// Maximum componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        (self.crop - other.crop)
            .abs()
            .max((self.aphids - other.aphids).abs())
            .max((self.enemies - other.enemies).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.crop.is_finite() && self.aphids.is_finite() && self.enemies.is_finite()
    }

    /// Smallest of the three components.
    pub fn min_component(&self) -> f64 {
        self.crop.min(self.aphids).min(self.enemies)
    }
}

/// Dense 3×3 matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix3(pub [[f64; 3]; 3]);

impl Matrix3 {
    pub fn trace(&self) -> f64 {
        let m = &self.0;
        m[0][0] + m[1][1] + m[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Sum of the three principal 2×2 minors.
    pub fn principal_minor_sum(&self) -> f64 {
        let m = &self.0;
        (m[0][0] * m[1][1] - m[0][1] * m[1][0])
            + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
            + (m[1][1] * m[2][2] - m[1][2] * m[2][1])
    }

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn transpose(&self) -> Matrix3 {
        let m = &self.0;
        Matrix3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    /// Adjugate (transposed cofactor matrix), satisfying
    /// `A · adj(A) = adj(A) · A = det(A) · I`. For a rank-2 matrix its
    /// columns span the null space and its rows span the left null space.
    pub fn adjugate(&self) -> Matrix3 {
        let m = &self.0;
        let (a, b, c) = (m[0][0], m[0][1], m[0][2]);
        let (d, e, f) = (m[1][0], m[1][1], m[1][2]);
        let (g, h, i) = (m[2][0], m[2][1], m[2][2]);
        Matrix3([
            [e * i - f * h, c * h - b * i, b * f - c * e],
            [f * g - d * i, a * i - c * g, c * d - a * f],
            [d * h - e * g, b * g - a * h, a * e - b * d],
        ])
    }
}

/// Right-hand side of the system at state `s`, as `[x', y', z']`.
pub fn vector_field(p: &ModelParams, s: &State) -> [f64; 3] {
    let (x, y, z) = (s.crop, s.aphids, s.enemies);
    let grazing_response = p.grazing * x / (p.grazing_half + x);
    let predation_response = p.predation * y / (p.predation_half + y);
    [
        p.growth * x * (1.0 - x / p.capacity) - grazing_response * y,
        y * (p.conversion * grazing_response
            - p.aphid_mortality
            - p.predation * z / (p.predation_half + y)),
        x * (p.attraction + p.attraction_boost * y / (p.attraction_half + y))
            + z * (p.predator_conversion * predation_response - p.predator_mortality),
    ]
}

/// Jacobian of the vector field at state `s`.
pub fn jacobian(p: &ModelParams, s: &State) -> Matrix3 {
    let (x, y, z) = (s.crop, s.aphids, s.enemies);
    let gh = p.grazing_half + x;
    let ph = p.predation_half + y;
    let ah = p.attraction_half + y;
    Matrix3([
        [
            p.growth - 2.0 * p.growth * x / p.capacity
                - p.grazing * p.grazing_half * y / (gh * gh),
            -p.grazing * x / gh,
            0.0,
        ],
        [
            p.conversion * p.grazing * p.grazing_half * y / (gh * gh),
            p.conversion * p.grazing * x / gh
                - p.predation_half * p.predation * z / (ph * ph)
                - p.aphid_mortality,
            -p.predation * y / ph,
        ],
        [
            p.attraction + p.attraction_boost * y / ah,
            p.attraction_boost * p.attraction_half * x / (ah * ah)
                + p.predation_half * p.predation * p.predator_conversion * z / (ph * ph),
            p.predator_conversion * p.predation * y / ph - p.predator_mortality,
        ],
    ])
}

/// Second additive compound of a 3×3 matrix.
///
/// Its eigenvalues are the pairwise sums of the eigenvalues of `a`; its
/// logarithmic norm controls the contraction of two-dimensional areas under
/// the flow, which is what the global-stability certificate bounds.
pub fn second_compound(a: &Matrix3) -> Matrix3 {
    let m = &a.0;
    Matrix3([
        [m[0][0] + m[1][1], m[1][2], -m[0][2]],
        [m[2][1], m[0][0] + m[2][2], m[0][1]],
        [-m[2][0], m[1][0], m[1][1] + m[2][2]],
    ])
}

/// Second differential of the vector field: the symmetric bilinear (Hessian)
/// form of each component evaluated on directions `u` and `v`.
///
/// Only five second derivatives are non-zero per component because the field
/// is affine in `z` and couples `x` to `z` only linearly.
pub fn second_differential(p: &ModelParams, s: &State, u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    let (x, y, z) = (s.crop, s.aphids, s.enemies);
    let gh = p.grazing_half + x;
    let ph = p.predation_half + y;
    let ah = p.attraction_half + y;
    let sym_xy = u[0] * v[1] + u[1] * v[0];
    let sym_yz = u[1] * v[2] + u[2] * v[1];

    let f1_xx = -2.0 * p.growth / p.capacity + 2.0 * p.grazing * p.grazing_half * y / gh.powi(3);
    let f1_xy = -p.grazing * p.grazing_half / (gh * gh);
    let d1 = f1_xx * u[0] * v[0] + f1_xy * sym_xy;

    let f2_xx = -2.0 * p.conversion * p.grazing * p.grazing_half * y / gh.powi(3);
    let f2_xy = p.conversion * p.grazing * p.grazing_half / (gh * gh);
    let f2_yy = 2.0 * p.predation * p.predation_half * z / ph.powi(3);
    let f2_yz = -p.predation * p.predation_half / (ph * ph);
    let d2 = f2_xx * u[0] * v[0] + f2_xy * sym_xy + f2_yy * u[1] * v[1] + f2_yz * sym_yz;

    let f3_xy = p.attraction_boost * p.attraction_half / (ah * ah);
    let f3_yy = -2.0 * p.attraction_boost * p.attraction_half * x / ah.powi(3)
        - 2.0 * p.predation * p.predator_conversion * p.predation_half * z / ph.powi(3);
    let f3_yz = p.predation * p.predator_conversion * p.predation_half / (ph * ph);
    let d3 = f3_xy * sym_xy + f3_yy * u[1] * v[1] + f3_yz * sym_yz;

    [d1, d2, d3]
}

/// Forward-invariant absorbing box used by the global-stability certificate.
///
/// Crop biomass eventually stays below `k1 = max(x(0), K)`. Once it does,
/// the weighted total `N = e·x + y + z/q` obeys
/// `N' + decay·N ≤ (e r + (b + c)/q + 1) k1`, so `N` is eventually trapped
/// under `total_cap = (e r + (b + c)/q + 1) k1 / decay`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibleRegion {
    /// Upper bound on crop biomass.
    pub k1: f64,
    /// Uniform decay rate of the weighted total: `min(1/e, m, n)`.
    pub decay: f64,
    /// Upper bound on the weighted total `e·x + y + z/q`.
    pub total_cap: f64,
}

/// Absorbing region for trajectories starting with crop biomass `x0`.
pub fn feasible_region(p: &ModelParams, x0: f64) -> FeasibleRegion {
    let k1 = x0.max(p.capacity);
    let decay = (1.0 / p.conversion)
        .min(p.aphid_mortality)
        .min(p.predator_mortality);
    let total_cap = (p.conversion * p.growth
        + (p.attraction + p.attraction_boost) / p.predator_conversion
        + 1.0)
        * k1
        / decay;
    FeasibleRegion {
        k1,
        decay,
        total_cap,
    }
}

/// Weighted population total `e·x + y + z/q` whose decay defines the
/// absorbing region.
pub fn weighted_total(p: &ModelParams, s: &State) -> f64 {
    p.conversion * s.crop + s.aphids + s.enemies / p.predator_conversion
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn base() -> ModelParams {
        ModelParams::default()
    }

    fn random_state(rng: &mut impl Rng) -> State {
        State::new(
            rng.gen_range(0.05..1.2),
            rng.gen_range(0.01..2.0),
            rng.gen_range(0.01..3.0),
        )
    }

    #[test]
    fn default_parameters_validate() {
        base().validate().unwrap();
    }

    #[test]
    fn zero_attraction_coefficients_are_allowed() {
        let p = ModelParams {
            attraction: 0.0,
            attraction_boost: 0.0,
            ..base()
        };
        p.validate().unwrap();
    }

    #[test]
    fn non_positive_rate_is_rejected() {
        for bad in [0.0, -0.1, f64::NAN, f64::INFINITY] {
            let p = ModelParams {
                growth: bad,
                ..base()
            };
            match p.validate() {
                Err(Error::NonPositiveParameter { name: "r", .. }) => {}
                other => panic!("expected NonPositiveParameter for r, got {other:?}"),
            }
        }
    }

    #[test]
    fn negative_attraction_is_rejected() {
        let p = ModelParams {
            attraction: -0.01,
            ..base()
        };
        match p.validate() {
            Err(Error::NegativeAttraction { name: "b", .. }) => {}
            other => panic!("expected NegativeAttraction for b, got {other:?}"),
        }
    }

    #[test]
    fn vector_field_vanishes_at_total_collapse() {
        let f = vector_field(&base(), &State::new(0.0, 0.0, 0.0));
        assert_eq!(f, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn vector_field_vanishes_at_aphid_free_state() {
        let p = base();
        let z = p.attraction * p.capacity / p.predator_mortality;
        let f = vector_field(&p, &State::new(p.capacity, 0.0, z));
        assert!(f[0].abs() < 1e-15 && f[1].abs() < 1e-15 && f[2].abs() < 1e-15);
    }

    #[test]
    fn invasion_gain_and_loss_reference_values() {
        let p = base();
        assert_relative_eq!(p.invasion_gain(), 0.4 * 0.1 / 1.5, max_relative = 1e-14);
        assert_relative_eq!(
            p.invasion_loss(),
            0.01 + 0.01 * 0.26 / (0.3 * 0.5),
            max_relative = 1e-14
        );
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        // Central differences on the vector field, componentwise relative
        // tolerance 1e-5 with unit absolute floor.
        let p = base();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let s = random_state(&mut rng);
            let jac = jacobian(&p, &s);
            let base_arr = s.to_array();
            for j in 0..3 {
                let hstep = 1e-6 * base_arr[j].abs().max(1.0);
                let mut plus = base_arr;
                let mut minus = base_arr;
                plus[j] += hstep;
                minus[j] -= hstep;
                let fp = vector_field(&p, &State::from_array(plus));
                let fm = vector_field(&p, &State::from_array(minus));
                for i in 0..3 {
                    let fd = (fp[i] - fm[i]) / (2.0 * hstep);
                    let scale = 1.0 + jac.0[i][j].abs();
                    assert!(
                        (fd - jac.0[i][j]).abs() <= 1e-5 * scale,
                        "entry ({i},{j}): fd {fd} vs analytic {}",
                        jac.0[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn crop_self_interaction_has_equivalent_factored_form() {
        // r - 2rx/K - ahy/(h+x)^2  ==  r(1 - 2x/K) - ahy/(h+x)^2.
        let p = base();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = random_state(&mut rng);
            let canonical = jacobian(&p, &s).0[0][0];
            let gh = p.grazing_half + s.crop;
            let factored = p.growth * (1.0 - 2.0 * s.crop / p.capacity)
                - p.grazing * p.grazing_half * s.aphids / (gh * gh);
            assert_relative_eq!(canonical, factored, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn crop_does_not_sense_enemies_directly() {
        let p = base();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let s = random_state(&mut rng);
            assert_eq!(jacobian(&p, &s).0[0][2], 0.0);
        }
    }

    #[test]
    fn second_compound_of_known_matrix() {
        let a = Matrix3([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]);
        let c = second_compound(&a);
        assert_eq!(
            c.0,
            [[6.0, 6.0, -3.0], [8.0, 10.0, 2.0], [-7.0, 4.0, 14.0]]
        );
    }

    #[test]
    fn second_differential_matches_finite_differences() {
        // D²f(v, v) against the centered second difference of f along v.
        let p = base();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s = random_state(&mut rng);
            let v = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let d2 = second_differential(&p, &s, v, v);
            let hstep = 1e-4;
            let arr = s.to_array();
            let shift = |sign: f64| {
                let moved = [
                    arr[0] + sign * hstep * v[0],
                    arr[1] + sign * hstep * v[1],
                    arr[2] + sign * hstep * v[2],
                ];
                vector_field(&p, &State::from_array(moved))
            };
            let fp = shift(1.0);
            let f0 = vector_field(&p, &s);
            let fm = shift(-1.0);
            for i in 0..3 {
                let fd = (fp[i] - 2.0 * f0[i] + fm[i]) / (hstep * hstep);
                assert!(
                    (fd - d2[i]).abs() <= 1e-5 * (1.0 + d2[i].abs()),
                    "component {i}: fd {fd} vs analytic {}",
                    d2[i]
                );
            }
        }
    }

    #[test]
    fn second_differential_is_symmetric_and_bilinear() {
        let p = base();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let s = random_state(&mut rng);
            let draw = |rng: &mut ChaCha8Rng| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            };
            let u = draw(&mut rng);
            let v = draw(&mut rng);
            let uv = second_differential(&p, &s, u, v);
            let vu = second_differential(&p, &s, v, u);
            // Polarization: D²f(u,v) = ¼ (D²f(u+v,u+v) - D²f(u-v,u-v)).
            let sum = [u[0] + v[0], u[1] + v[1], u[2] + v[2]];
            let diff = [u[0] - v[0], u[1] - v[1], u[2] - v[2]];
            let pss = second_differential(&p, &s, sum, sum);
            let pdd = second_differential(&p, &s, diff, diff);
            for i in 0..3 {
                assert_relative_eq!(uv[i], vu[i], max_relative = 1e-12, epsilon = 1e-15);
                let polar = 0.25 * (pss[i] - pdd[i]);
                assert_relative_eq!(uv[i], polar, max_relative = 1e-10, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn feasible_region_reference_values() {
        let p = ModelParams {
            attraction: 0.23,
            ..base()
        };
        let region = feasible_region(&p, 0.5);
        assert_eq!(region.k1, 1.0);
        assert_relative_eq!(region.decay, 0.01, max_relative = 1e-15);
        // (0.4·0.1 + (0.23 + 0.44)/0.5 + 1) / 0.01 = 238
        assert_relative_eq!(region.total_cap, 238.0, max_relative = 1e-12);
        // A start above the capacity enlarges the box proportionally.
        let wider = feasible_region(&p, 2.0);
        assert_eq!(wider.k1, 2.0);
        assert_relative_eq!(wider.total_cap, 476.0, max_relative = 1e-12);
    }

    #[test]
    fn adjugate_satisfies_cofactor_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let mut m = [[0.0; 3]; 3];
            for row in &mut m {
                for entry in row.iter_mut() {
                    *entry = rng.gen_range(-2.0..2.0);
                }
            }
            let a = Matrix3(m);
            let adj = a.adjugate();
            let det = a.det();
            for i in 0..3 {
                let col = adj.mul_vec([
                    if i == 0 { 1.0 } else { 0.0 },
                    if i == 1 { 1.0 } else { 0.0 },
                    if i == 2 { 1.0 } else { 0.0 },
                ]);
                let product = a.mul_vec(col);
                for (r, entry) in product.iter().enumerate() {
                    let expect = if r == i { det } else { 0.0 };
                    assert!(
                        (entry - expect).abs() <= 1e-12 * (1.0 + det.abs()),
                        "A·adj mismatch at ({r},{i})"
                    );
                }
            }
        }
    }

    #[test]
    fn weighted_total_matches_definition() {
        let p = base();
        let s = State::new(0.3, 0.7, 1.1);
        assert_relative_eq!(
            weighted_total(&p, &s),
            0.4 * 0.3 + 0.7 + 1.1 / 0.5,
            max_relative = 1e-15
        );
    }
}
