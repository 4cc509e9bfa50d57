//! Run configuration: a flat JSON file whose keys cover the model
//! parameters (single letters, matching the conventional notation) and the
//! analysis settings. Every key can also be overridden from the command
//! line with `--set KEY=VALUE`.

use std::path::Path;

use anyhow::{bail, Context};
use serde::Deserialize;
use voctri::bifurcation::BifParam;
use voctri::model::{ModelParams, State};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // Model parameters.
    /// Crop logistic growth rate.
    pub r: f64,
    /// Crop carrying capacity.
    #[serde(rename = "K")]
    pub capacity: f64,
    /// Maximal aphid grazing rate.
    pub a: f64,
    /// Grazing half-saturation crop level.
    pub h: f64,
    /// Crop-to-aphid conversion efficiency.
    pub e: f64,
    /// Aphid mortality rate.
    pub m: f64,
    /// Maximal predation rate.
    pub p: f64,
    /// Predation half-saturation aphid level.
    pub l: f64,
    /// Constitutive volatile emission coefficient.
    pub b: f64,
    /// Herbivory-induced volatile emission coefficient.
    pub c: f64,
    /// Induction half-saturation aphid level.
    pub k: f64,
    /// Predation-to-recruitment conversion efficiency.
    pub q: f64,
    /// Natural-enemy mortality rate.
    pub n: f64,

    // Initial state and integration settings.
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,

    // Certificate settings.
    /// Persistence floor; estimated from a trajectory when absent.
    pub eta: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub zeta: f64,

    // Scan and locator settings.
    /// Parameter to sweep: "b" or "m".
    pub param: String,
    pub range_lo: Option<f64>,
    pub range_hi: Option<f64>,
    pub steps: usize,
    pub tol: f64,
    pub grid_points: usize,
    pub fold_lo: f64,
    pub fold_hi: f64,
    pub hopf_lo: f64,
    pub hopf_hi: f64,

    // Output settings.
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            r: p.growth,
            capacity: p.capacity,
            a: p.grazing,
            h: p.grazing_half,
            e: p.conversion,
            m: p.aphid_mortality,
            p: p.predation,
            l: p.predation_half,
            b: p.attraction,
            c: p.attraction_boost,
            k: p.attraction_half,
            q: p.predator_conversion,
            n: p.predator_mortality,
            x0: 0.5,
            y0: 0.3,
            z0: 0.2,
            t_end: 3000.0,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            eta: None,
            alpha: 1.0,
            beta: 1.0,
            zeta: 1.0,
            param: "b".to_string(),
            range_lo: None,
            range_hi: None,
            steps: 200,
            tol: 1e-8,
            grid_points: 4096,
            fold_lo: 0.20,
            fold_hi: 0.25,
            hopf_lo: 0.17,
            hopf_hi: 0.22,
            svg: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read configuration file {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse configuration file {}", path.display()))?;
        Ok(cfg)
    }

    /// Applies one `--set KEY=VALUE` override.
    pub fn apply_set(&mut self, assignment: &str) -> anyhow::Result<()> {
        let Some((key, value)) = assignment.split_once('=') else {
            bail!("override `{assignment}` is not of the form KEY=VALUE");
        };
        let parse_f64 = || -> anyhow::Result<f64> {
            value
                .parse::<f64>()
                .with_context(|| format!("value `{value}` for key `{key}` is not a number"))
        };
        let parse_usize = || -> anyhow::Result<usize> {
            value
                .parse::<usize>()
                .with_context(|| format!("value `{value}` for key `{key}` is not a count"))
        };
        match key {
            "r" => self.r = parse_f64()?,
            "K" => self.capacity = parse_f64()?,
            "a" => self.a = parse_f64()?,
            "h" => self.h = parse_f64()?,
            "e" => self.e = parse_f64()?,
            "m" => self.m = parse_f64()?,
            "p" => self.p = parse_f64()?,
            "l" => self.l = parse_f64()?,
            "b" => self.b = parse_f64()?,
            "c" => self.c = parse_f64()?,
            "k" => self.k = parse_f64()?,
            "q" => self.q = parse_f64()?,
            "n" => self.n = parse_f64()?,
            "x0" => self.x0 = parse_f64()?,
            "y0" => self.y0 = parse_f64()?,
            "z0" => self.z0 = parse_f64()?,
            "t_end" => self.t_end = parse_f64()?,
            "rel_tol" => self.rel_tol = parse_f64()?,
            "abs_tol" => self.abs_tol = parse_f64()?,
            "max_step" => self.max_step = parse_f64()?,
            "eta" => self.eta = Some(parse_f64()?),
            "alpha" => self.alpha = parse_f64()?,
            "beta" => self.beta = parse_f64()?,
            "zeta" => self.zeta = parse_f64()?,
            "param" => self.param = value.to_string(),
            "range_lo" => self.range_lo = Some(parse_f64()?),
            "range_hi" => self.range_hi = Some(parse_f64()?),
            "steps" => self.steps = parse_usize()?,
            "tol" => self.tol = parse_f64()?,
            "grid_points" => self.grid_points = parse_usize()?,
            "fold_lo" => self.fold_lo = parse_f64()?,
            "fold_hi" => self.fold_hi = parse_f64()?,
            "hopf_lo" => self.hopf_lo = parse_f64()?,
            "hopf_hi" => self.hopf_hi = parse_f64()?,
            "svg" => {
                self.svg = value
                    .parse::<bool>()
                    .with_context(|| format!("value `{value}` for key `svg` is not a boolean"))?
            }
            other => bail!("unknown configuration key `{other}`"),
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            growth: self.r,
            capacity: self.capacity,
            grazing: self.a,
            grazing_half: self.h,
            conversion: self.e,
            aphid_mortality: self.m,
            predation: self.p,
            predation_half: self.l,
            attraction: self.b,
            attraction_boost: self.c,
            attraction_half: self.k,
            predator_conversion: self.q,
            predator_mortality: self.n,
        }
    }

    pub fn initial_state(&self) -> State {
        State::new(self.x0, self.y0, self.z0)
    }

    pub fn bif_param(&self) -> anyhow::Result<BifParam> {
        match self.param.as_str() {
            "b" => Ok(BifParam::Attraction),
            "m" => Ok(BifParam::AphidMortality),
            other => bail!("unknown scan parameter `{other}` (expected `b` or `m`)"),
        }
    }

    /// Scan range: explicit configuration wins, otherwise a window around
    /// the interesting regime of the chosen parameter.
    pub fn scan_range(&self, param: BifParam) -> (f64, f64) {
        let default = match param {
            BifParam::Attraction => (0.18, 0.27),
            BifParam::AphidMortality => (0.005, 0.015),
        };
        (
            self.range_lo.unwrap_or(default.0),
            self.range_hi.unwrap_or(default.1),
        )
    }
}
