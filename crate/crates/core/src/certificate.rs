//! Sufficient certificate of global convergence to a coexistence state.
//!
//! The method bounds every entry of the second additive compound of the
//! Jacobian over the absorbing box
//! `{ η ≤ x ≤ k1, η ≤ y, η ≤ z, e·x + y + z/q ≤ total_cap }`
//! by a constant matrix `N`, then takes the weighted column-sum (Lozinskii)
//! measure of `N` under a diagonal scaling `diag(α, β, ζ)`. If the largest
//! of the three weighted column sums is negative, two-dimensional areas
//! contract uniformly along the flow, which rules out periodic orbits and —
//! together with a persistence condition keeping trajectories away from the
//! boundary — forces convergence to the coexistence state.
//!
//! The floor `η > 0` is not derived by the library; it is an input, either
//! chosen by the caller or estimated from a simulated trajectory with
//! [`estimate_eta`].

use crate::model::{FeasibleRegion, ModelParams, State};
use crate::simulate::{integrate, IntegratorConfig};
use crate::{Error, Result};

/// Inputs of the certificate: the boundary floor `η`, the diagonal scaling
/// weights, and the absorbing region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateConfig {
    /// Lower bound on every population inside the certified region.
    pub eta: f64,
    /// Diagonal scaling weights `(α, β, ζ)`, all positive.
    pub weights: [f64; 3],
    /// Absorbing box the bounds are taken over.
    pub region: FeasibleRegion,
}

impl CertificateConfig {
    pub fn new(eta: f64, weights: [f64; 3], region: FeasibleRegion) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0 && eta < region.k1) {
            return Err(Error::Config(format!(
                "population floor η = {eta} must be positive and below the crop bound {}",
                region.k1
            )));
        }
        for w in weights {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Config(format!(
                    "certificate weights must be positive and finite, got {weights:?}"
                )));
            }
        }
        Ok(CertificateConfig {
            eta,
            weights,
            region,
        })
    }
}

/// Constant entrywise upper bounds `N` on the second compound of the
/// Jacobian over the absorbing box. The `(1,3)` entry of the compound is
/// identically zero and is omitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryBounds {
    pub n11: f64,
    pub n12: f64,
    pub n21: f64,
    pub n22: f64,
    pub n23: f64,
    pub n31: f64,
    pub n32: f64,
    pub n33: f64,
}

/// Entrywise bounds over the box with floor `η`, crop cap `k1`, and weighted
/// total cap `total_cap`.
///
/// The diagonal bounds majorize the compound's diagonal (sums of Jacobian
/// diagonal entries); off-diagonal bounds majorize absolute values of the
/// coupling entries. The `(3,2)` bound additionally uses that aphid biomass
/// stays below `k1` along the nullcline structure of the attractor box.
pub fn entry_bounds(p: &ModelParams, cfg: &CertificateConfig) -> EntryBounds {
    let eta = cfg.eta;
    let k1 = cfg.region.k1;
    let cap = cfg.region.total_cap;
    let ghk = p.grazing_half + k1;
    let ghe = p.grazing_half + eta;
    let ple = p.predation_half + eta;
    let plc = p.predation_half + cap;
    let ake = p.attraction_half + eta;

    // Shared part of the two crop-involving diagonal bounds:
    // r - 2 r η / K - a h η / (h + k1)².
    let crop_self = p.growth - 2.0 * p.growth * eta / p.capacity
        - p.grazing * p.grazing_half * eta / (ghk * ghk);

    EntryBounds {
        n11: crop_self + p.conversion * p.grazing * k1 / ghe
            - p.predation_half * p.predation * eta / (plc * plc)
            - p.aphid_mortality,
        n12: -p.predation * eta / ple,
        n21: p.attraction_boost * p.attraction_half * k1 / (ake * ake)
            + p.predation_half
                * p.predation
                * p.predator_conversion
                * p.predator_conversion
                * cap
                / (ple * ple),
        n22: crop_self + p.predation * p.predator_conversion * cap / plc
            - p.predator_mortality,
        n23: -p.grazing * eta / ghe,
        n31: -p.attraction - p.attraction_boost * eta / ake,
        n32: p.conversion * p.grazing * p.grazing_half * k1 / (ghe * ghe),
        n33: p.conversion * p.grazing * k1 / ghk
            - p.predation_half * p.predation * eta / (plc * plc)
            - p.aphid_mortality
            + p.predation * p.predator_conversion * cap / plc
            - p.predator_mortality,
    }
}

/// Weighted column-sum (Lozinskii) bounds of the scaled bound matrix
/// `D N D⁻¹` with `D = diag(α, β, ζ)`: one value per column.
pub fn lozinskii_cases(bounds: &EntryBounds, weights: [f64; 3]) -> [f64; 3] {
    let [alpha, beta, zeta] = weights;
    [
        bounds.n11 + (alpha / beta) * bounds.n12,
        (beta / alpha) * bounds.n21 + bounds.n22 + (beta / zeta) * bounds.n23,
        (zeta / alpha) * bounds.n31 + (zeta / beta) * bounds.n32 + bounds.n33,
    ]
}

/// Outcome of the certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertVerdict {
    /// Areas contract and the persistence condition holds: every positive
    /// trajectory in the box converges to the coexistence state.
    Certified,
    /// The sufficient conditions do not hold at these inputs. This proves
    /// nothing about instability.
    NotCertified,
}

impl std::fmt::Display for CertVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CertVerdict::Certified => "certified",
            CertVerdict::NotCertified => "not-certified",
        })
    }
}

/// Uniform-persistence side condition: rare aphids must be able to invade
/// the aphid-free boundary, `invasion gain > invasion loss`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistenceCheck {
    pub invasion_gain: f64,
    pub invasion_loss: f64,
    pub holds: bool,
}

/// Full certificate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateReport {
    pub config: CertificateConfig,
    pub bounds: EntryBounds,
    /// The three weighted column sums.
    pub cases: [f64; 3],
    /// Largest column sum; the certificate requires it to be negative.
    pub sup: f64,
    pub persistence: PersistenceCheck,
    pub verdict: CertVerdict,
    /// The `(1,2)` bound is sometimes quoted with the grazing form
    /// `-a·η/(h+η)` (identical to the `(2,3)` bound) instead of the
    /// predation form `-p·η/(l+η)`. The report evaluates the cases both
    /// ways so results can be compared against either convention.
    pub alt_n12: f64,
    pub alt_cases: [f64; 3],
    pub alt_sup: f64,
    /// True when the two conventions disagree beyond rounding.
    pub n12_mismatch: bool,
}

/// Evaluates the certificate at fixed inputs.
pub fn certify(p: &ModelParams, cfg: CertificateConfig) -> CertificateReport {
    let bounds = entry_bounds(p, &cfg);
    let cases = lozinskii_cases(&bounds, cfg.weights);
    let sup = cases[0].max(cases[1]).max(cases[2]);

    let gain = p.invasion_gain();
    let loss = p.invasion_loss();
    let persistence = PersistenceCheck {
        invasion_gain: gain,
        invasion_loss: loss,
        holds: gain > loss,
    };

    let alt_n12 = -p.grazing * cfg.eta / (p.grazing_half + cfg.eta);
    let alt_bounds = EntryBounds {
        n12: alt_n12,
        ..bounds
    };
    let alt_cases = lozinskii_cases(&alt_bounds, cfg.weights);
    let alt_sup = alt_cases[0].max(alt_cases[1]).max(alt_cases[2]);

    let verdict = if sup < 0.0 && persistence.holds {
        CertVerdict::Certified
    } else {
        CertVerdict::NotCertified
    };

    CertificateReport {
        config: cfg,
        bounds,
        cases,
        sup,
        persistence,
        verdict,
        alt_n12,
        alt_cases,
        alt_sup,
        n12_mismatch: (alt_n12 - bounds.n12).abs() > 1e-12 * (1.0 + bounds.n12.abs()),
    }
}

/// Searches a logarithmic grid of weights `α, β ∈ [0.1, 100]` (with `ζ = 1`;
/// the cases are invariant under common rescaling) and returns the report
/// with the smallest worst-case column sum. The returned report need not be
/// certified — inspect its verdict.
pub fn search_weights(
    p: &ModelParams,
    eta: f64,
    region: FeasibleRegion,
    grid_size: usize,
) -> Result<CertificateReport> {
    if grid_size < 2 {
        return Err(Error::Config(format!(
            "weight search needs a grid of at least 2 points per axis, got {grid_size}"
        )));
    }
    let bounds = entry_bounds(p, &CertificateConfig::new(eta, [1.0, 1.0, 1.0], region)?);
    let mut best: Option<([f64; 3], f64)> = None;
    for i in 0..grid_size {
        let alpha = 10f64.powf(-1.0 + 3.0 * i as f64 / (grid_size - 1) as f64);
        for j in 0..grid_size {
            let beta = 10f64.powf(-1.0 + 3.0 * j as f64 / (grid_size - 1) as f64);
            let weights = [alpha, beta, 1.0];
            let cases = lozinskii_cases(&bounds, weights);
            let sup = cases[0].max(cases[1]).max(cases[2]);
            if best.map_or(true, |(_, s)| sup < s) {
                best = Some((weights, sup));
            }
        }
    }
    let (weights, _) = best.expect("grid has at least one point");
    Ok(certify(p, CertificateConfig::new(eta, weights, region)?))
}

/// Estimates the population floor `η` from a simulated trajectory: the
/// smallest coordinate over the second half of the run, shrunk by 10% as a
/// safety factor.
///
/// Fails if the trajectory does not stay strictly positive over that window
/// (no meaningful floor exists then).
pub fn estimate_eta(p: &ModelParams, start: State, horizon: f64) -> Result<f64> {
    let traj = integrate(p, &IntegratorConfig::new(start, horizon))?;
    let mut floor = f64::INFINITY;
    for sample in &traj.samples {
        if sample.t >= 0.5 * horizon {
            floor = floor.min(sample.state.min_component());
        }
    }
    if !(floor.is_finite() && floor > 0.0) {
        return Err(Error::Config(format!(
            "trajectory from ({}, {}, {}) is not bounded away from the boundary; \
             observed floor {floor}",
            start.crop, start.aphids, start.enemies
        )));
    }
    Ok(0.9 * floor)
}
