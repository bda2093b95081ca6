//! Probability of collecting one photon at Alice and one at Bob per cycle.
//!
//! Detectors are treated as points times a small solid angle: the joint
//! emission density at the detector directions is integrated over both
//! emission times and multiplied by `dOmega_A dOmega_B`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{geometry_from_spherical, EmissionGeometry};
use crate::montecarlo::{estimate_pair_statistics_with, sampler_by_name};
use crate::postselection::two_photon_amplitudes;
use crate::quadrature::GaussLegendre;
use crate::sources::SourcePairConfig;

/// Detector solid angles and Bob's polar angle (Alice sits on the `z` axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectionWindow {
    pub domega_a: f64,
    pub domega_b: f64,
    pub theta_b: f64,
}

impl CollectionWindow {
    pub fn new(domega_a: f64, domega_b: f64, theta_b: f64) -> Result<Self> {
        for (name, v) in [("domega_a", domega_a), ("domega_b", domega_b)] {
            if !(v > 0.0 && v <= 4.0 * PI) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 4 pi], got {v}")));
            }
        }
        if !theta_b.is_finite() {
            return Err(Error::InvalidArgument(format!("theta_b must be finite, got {theta_b}")));
        }
        Ok(CollectionWindow {
            domega_a,
            domega_b,
            theta_b,
        })
    }
}

/// `(3/8pi)^2 (2 Gamma0 Gamma1 / Gamma^2)(1 + cos^2 theta_B) |<22|phi0>|^2 dOmega_A dOmega_B`.
///
/// Not clamped: for large windows the point-detector approximation breaks
/// down and the value may exceed one.
pub fn pair_probability_analytic(cfg: &SourcePairConfig, win: &CollectionWindow) -> f64 {
    let g = cfg.total_decay_rate();
    let pref = (3.0 / (8.0 * PI)).powi(2);
    let branching = 2.0 * cfg.gamma0() * cfg.gamma1() / (g * g);
    let c = win.theta_b.cos();
    let pop = cfg.initial_state().excited_pair_amplitude().norm_sqr();
    pref * branching * (1.0 + c * c) * pop * win.domega_a * win.domega_b
}

/// Gauss-Legendre node counts, time cutoff and truncation tolerance for
/// [`pair_probability_numeric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub n_t1: usize,
    pub n_tau: usize,
    /// Upper time cutoff. `None` means `30 / (Gamma0 + Gamma1)`.
    pub t_max: Option<f64>,
    /// Largest accepted truncation error relative to the result.
    pub tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            n_t1: 48,
            n_tau: 48,
            t_max: None,
            tol: 1e-10,
        }
    }
}

impl QuadSpec {
    pub fn cutoff(&self, cfg: &SourcePairConfig) -> f64 {
        self.t_max.unwrap_or(30.0 / cfg.total_decay_rate())
    }
}

/// Density of a coincidence at `(t1, t2)` summed over both detection orders
/// and all polarizations.
fn ordered_pair_density(
    cfg: &SourcePairConfig,
    geom_a: &EmissionGeometry,
    geom_b: &EmissionGeometry,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let ab = two_photon_amplitudes(geom_a, geom_b, t1, t2, cfg)?.probability_density();
    let ba = two_photon_amplitudes(geom_b, geom_a, t1, t2, cfg)?.probability_density();
    Ok(ab + ba)
}

/// Double-time quadrature over `0 <= t1 <= t2 <= T_max` in the variables
/// `(t1, tau = t2 - t1)`.
pub fn pair_probability_numeric(
    cfg: &SourcePairConfig,
    geom_a: &EmissionGeometry,
    geom_b: &EmissionGeometry,
    win: &CollectionWindow,
    quad: &QuadSpec,
) -> Result<f64> {
    let g = cfg.total_decay_rate();
    let t_max = quad.cutoff(cfg);
    if !(t_max * g >= 20.0) {
        return Err(Error::InvalidArgument(format!(
            "time cutoff {t_max} is below 20 / (Gamma0 + Gamma1) = {}",
            20.0 / g
        )));
    }
    if quad.n_t1 == 0 || quad.n_tau == 0 || !(quad.tol > 0.0) {
        return Err(Error::InvalidArgument("quadrature needs positive node counts and tolerance".into()));
    }
    let gl_t1 = GaussLegendre::new(quad.n_t1);
    let gl_tau = GaussLegendre::new(quad.n_tau);
    let mut integral = 0.0;
    for (t1, w1) in gl_t1.on_interval(0.0, t_max) {
        for (tau, w2) in gl_tau.on_interval(0.0, t_max - t1) {
            integral += w1 * w2 * ordered_pair_density(cfg, geom_a, geom_b, t1, t1 + tau)?;
        }
    }
    let windows = win.domega_a * win.domega_b;
    let p = integral * windows;

    // The density factorizes as d0 e^{-Gamma (t1 + t2)}; the mass beyond
    // t2 = T is d0 (e^{-Gamma T}(1 - e^{-Gamma T}) + e^{-2 Gamma T}/2) / Gamma^2.
    let d0 = ordered_pair_density(cfg, geom_a, geom_b, 0.0, 0.0)?;
    let e = (-g * t_max).exp();
    let tail = d0 * (e * (1.0 - e) + 0.5 * e * e) / (g * g) * windows;
    if tail > quad.tol * p.abs() && tail > 0.0 {
        return Err(Error::Quadrature {
            estimated: tail,
            tolerance: quad.tol * p.abs(),
        });
    }
    Ok(p)
}

/// `int int_{0 <= t1 <= t2 <= T} e^{-Gamma (t1 + t2)}` by the same rule as
/// [`pair_probability_numeric`]; the exact value for `T -> infinity` is
/// `1 / (2 Gamma^2)`.
pub fn time_integral(gamma: f64, quad: &QuadSpec, t_max: f64) -> f64 {
    let gl_t1 = GaussLegendre::new(quad.n_t1);
    let gl_tau = GaussLegendre::new(quad.n_tau);
    let mut s = 0.0;
    for (t1, w1) in gl_t1.on_interval(0.0, t_max) {
        for (tau, w2) in gl_tau.on_interval(0.0, t_max - t1) {
            s += w1 * w2 * (-gamma * (2.0 * t1 + tau)).exp();
        }
    }
    s
}

/// Everything an estimator of the pair probability may need.
#[derive(Debug, Clone)]
pub struct EfficiencyProblem {
    pub cfg: SourcePairConfig,
    pub window: CollectionWindow,
    /// Bob's azimuth; Alice is at `z`.
    pub phi_b: f64,
    pub quad: QuadSpec,
    pub n_cycles: u64,
    pub seed: u64,
}

impl EfficiencyProblem {
    pub fn alice_geometry(&self) -> EmissionGeometry {
        geometry_from_spherical(0.0, 0.0)
    }

    pub fn bob_geometry(&self) -> EmissionGeometry {
        geometry_from_spherical(self.window.theta_b, self.phi_b)
    }
}

/// One row of an estimator comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PairProbabilityEstimate {
    pub estimator: String,
    pub value: f64,
    /// One standard error for stochastic estimators.
    pub std_error: Option<f64>,
}

pub trait PairProbabilityEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn estimate(&self, problem: &EfficiencyProblem) -> Result<PairProbabilityEstimate>;
}

struct Analytic;

impl PairProbabilityEstimator for Analytic {
    fn name(&self) -> &'static str {
        "analytic"
    }

    fn description(&self) -> &'static str {
        "closed-form point-detector probability"
    }

    fn estimate(&self, p: &EfficiencyProblem) -> Result<PairProbabilityEstimate> {
        Ok(PairProbabilityEstimate {
            estimator: self.name().into(),
            value: pair_probability_analytic(&p.cfg, &p.window),
            std_error: None,
        })
    }
}

struct Quadrature;

impl PairProbabilityEstimator for Quadrature {
    fn name(&self) -> &'static str {
        "quadrature"
    }

    fn description(&self) -> &'static str {
        "double-time Gauss-Legendre integral of the two-photon density"
    }

    fn estimate(&self, p: &EfficiencyProblem) -> Result<PairProbabilityEstimate> {
        let value = pair_probability_numeric(&p.cfg, &p.alice_geometry(), &p.bob_geometry(), &p.window, &p.quad)?;
        Ok(PairProbabilityEstimate {
            estimator: self.name().into(),
            value,
            std_error: None,
        })
    }
}

/// Monte Carlo estimate using one of the registered cycle samplers.
struct MonteCarlo {
    name: &'static str,
    sampler: &'static str,
    description: &'static str,
}

impl PairProbabilityEstimator for MonteCarlo {
    fn name(&self) -> &'static str {
        self.name
    }

    fn description(&self) -> &'static str {
        self.description
    }

    fn estimate(&self, p: &EfficiencyProblem) -> Result<PairProbabilityEstimate> {
        let sampler = sampler_by_name(self.sampler)?;
        let stats = estimate_pair_statistics_with(
            sampler.as_ref(),
            &p.cfg,
            &p.window,
            p.phi_b,
            p.n_cycles,
            p.seed,
        )?;
        Ok(PairProbabilityEstimate {
            estimator: self.name.into(),
            value: stats.estimated_p,
            std_error: Some(stats.std_error),
        })
    }
}

/// Estimators selectable by name.
pub struct EstimatorRegistry {
    entries: BTreeMap<&'static str, Box<dyn PairProbabilityEstimator>>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        EstimatorRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Analytic));
        r.register(Box::new(Quadrature));
        r.register(Box::new(MonteCarlo {
            name: "forced-mc",
            sampler: "forced",
            description: "trajectory Monte Carlo with emissions steered into the detector cones",
        }));
        r.register(Box::new(MonteCarlo {
            name: "analog-mc",
            sampler: "analog",
            description: "unbiased trajectory Monte Carlo without importance sampling",
        }));
        r
    }

    /// Adds an estimator, replacing any previous one with the same name.
    pub fn register(&mut self, estimator: Box<dyn PairProbabilityEstimator>) {
        self.entries.insert(estimator.name(), estimator);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn PairProbabilityEstimator> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "estimator",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn PairProbabilityEstimator> {
        self.entries.values().map(|b| b.as_ref())
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}
