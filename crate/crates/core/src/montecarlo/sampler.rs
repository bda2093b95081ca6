//! Exact jump-time and jump-channel sampling, with an analog and a forced
//! (importance-sampled) variant of the channel choice.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{geometry_from_direction, DetectorCone, EmissionGeometry};
use crate::jump::{evolve_no_jump, JumpContext, ResetCoefficients};
use crate::sources::{excitation_number, Polarization, RVec3, SourceOperator, SourcePairConfig, SourceState, C64, SOURCE_DIM};

use super::{CampaignSetup, Detector, DetectorPair, EmissionEvent};

/// Bound on `||R_{k,lambda} phi||^2` for any unit `phi`, per polarization.
pub fn envelope_bound(cfg: &SourcePairConfig) -> f64 {
    3.0 / (2.0 * PI) * cfg.gamma0().max(cfg.gamma1()) * 4.0
}

/// Survival probability `||U_cond(t) phi||^2` for a unit state with sector
/// weights `w`.
fn survival(w: &[f64; 3], gamma: f64, t: f64) -> f64 {
    w[0] + w[1] * (-gamma * t).exp() + w[2] * (-2.0 * gamma * t).exp()
}

/// Waiting time with `S(t) = u`, or `None` when `u <= S(infinity)`.
pub fn sample_waiting_time(state: &SourceState, gamma: f64, u: f64) -> Option<f64> {
    let w = [state.sector_weight(0), state.sector_weight(1), state.sector_weight(2)];
    if u <= w[0] || w[1] + w[2] <= 0.0 {
        return None;
    }
    let mut lo = 0.0;
    let mut hi = 1.0 / gamma;
    while survival(&w, gamma, hi) > u {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if survival(&w, gamma, mid) > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn uniform_direction(rng: &mut ChaCha8Rng) -> RVec3 {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = TAU * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    RVec3::new(s * phi.cos(), s * phi.sin(), z)
}

fn uniform_in_cone(cone: &DetectorCone, rng: &mut ChaCha8Rng) -> RVec3 {
    let c = cone.cos_half_angle() + (1.0 - cone.cos_half_angle()) * rng.random::<f64>();
    cone.direction_at(c, TAU * rng.random::<f64>())
}

fn random_polarization(rng: &mut ChaCha8Rng) -> Polarization {
    if rng.random::<bool>() {
        Polarization::Plus
    } else {
        Polarization::Minus
    }
}

/// Draws `(k, lambda)` with density proportional to `||R_{k,lambda} phi||^2`
/// restricted to the directions produced by `propose`.
fn rejection_channel(
    state: &SourceState,
    cfg: &SourcePairConfig,
    rng: &mut ChaCha8Rng,
    mut propose: impl FnMut(&mut ChaCha8Rng) -> RVec3,
) -> Result<(EmissionGeometry, Polarization)> {
    let bound = envelope_bound(cfg);
    loop {
        let k = propose(rng);
        let pol = random_polarization(rng);
        let geom = geometry_from_direction(&k)?;
        let density = ResetCoefficients::new(&JumpContext::new(geom.clone(), pol), cfg)
            .apply(state)
            .norm_squared();
        if density > bound {
            return Err(Error::EnvelopeViolation { density, bound });
        }
        if rng.random::<f64>() * bound < density {
            return Ok((geom, pol));
        }
    }
}

/// Strategy for picking the emission channel of each jump.
pub trait CycleSampler: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// Likelihood ratio carried by every cycle with one photon in each cone.
    fn pair_weight(&self, setup: &CampaignSetup) -> f64;

    fn choose_channel(
        &self,
        setup: &CampaignSetup,
        state: &SourceState,
        rng: &mut ChaCha8Rng,
    ) -> Result<(EmissionGeometry, Polarization)>;
}

/// Channels drawn from the true conditional density over the full sphere.
pub struct AnalogSampler;

impl CycleSampler for AnalogSampler {
    fn name(&self) -> &'static str {
        "analog"
    }

    fn description(&self) -> &'static str {
        "channels drawn from the emission density over the whole sphere"
    }

    fn pair_weight(&self, _setup: &CampaignSetup) -> f64 {
        1.0
    }

    fn choose_channel(
        &self,
        setup: &CampaignSetup,
        state: &SourceState,
        rng: &mut ChaCha8Rng,
    ) -> Result<(EmissionGeometry, Polarization)> {
        rejection_channel(state, setup.config(), rng, uniform_direction)
    }
}

/// Emission into Alice's and Bob's cones is boosted so that their combined
/// probability becomes `(q_A + q_B) / Z`, with `Z` the largest value `q_A + q_B`
/// can take in any state. Every coincidence then carries the constant weight
/// `Z^2`, and the channel distribution inside each region is unchanged.
pub struct ForcedSampler;

impl ForcedSampler {
    fn detectors<'a>(&self, setup: &'a CampaignSetup) -> Result<&'a DetectorPair> {
        setup
            .detectors()
            .ok_or_else(|| Error::InvalidArgument("the forced sampler needs detector cones".into()))
    }
}

impl CycleSampler for ForcedSampler {
    fn name(&self) -> &'static str {
        "forced"
    }

    fn description(&self) -> &'static str {
        "emissions steered into the detector cones, coincidences reweighted by Z^2"
    }

    fn pair_weight(&self, setup: &CampaignSetup) -> f64 {
        setup.detectors().map_or(1.0, |d| d.forced_bound().powi(2))
    }

    fn choose_channel(
        &self,
        setup: &CampaignSetup,
        state: &SourceState,
        rng: &mut ChaCha8Rng,
    ) -> Result<(EmissionGeometry, Polarization)> {
        let det = self.detectors(setup)?;
        let z = det.forced_bound();
        let (qa, qb) = det.region_probabilities(state);
        if qa + qb > z {
            return Err(Error::EnvelopeViolation {
                density: qa + qb,
                bound: z,
            });
        }
        let cfg = setup.config();
        let r = rng.random::<f64>() * z;
        if r < qa {
            rejection_channel(state, cfg, rng, |g| uniform_in_cone(det.alice(), g))
        } else if r < qa + qb {
            rejection_channel(state, cfg, rng, |g| uniform_in_cone(det.bob(), g))
        } else {
            rejection_channel(state, cfg, rng, |g| loop {
                let k = uniform_direction(g);
                if det.classify(&k) == Detector::None {
                    return k;
                }
            })
        }
    }
}

/// Largest `phi^dagger Q_AB phi / phi^dagger Q_S phi` over states with at
/// least one excitation.
pub(crate) fn max_region_fraction(q_ab: &SourceOperator, q_total: &SourceOperator) -> Result<f64> {
    let mut best: f64 = 0.0;
    for n in 1..=2 {
        let idx: Vec<usize> = (0..SOURCE_DIM).filter(|&i| excitation_number(i) == n).collect();
        let d = idx.len();
        let a = DMatrix::<C64>::from_fn(d, d, |r, c| q_ab.entry(idx[r], idx[c]));
        let b = DMatrix::<C64>::from_fn(d, d, |r, c| q_total.entry(idx[r], idx[c]));
        let chol = b.cholesky().ok_or_else(|| {
            Error::InvalidConfig("total emission operator is not positive definite".into())
        })?;
        let l_inv = chol
            .l()
            .try_inverse()
            .ok_or_else(|| Error::InvalidConfig("singular emission operator".into()))?;
        let c = &l_inv * a * l_inv.adjoint();
        let c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
        let eig = c.symmetric_eigen();
        let top = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best = best.max(top);
    }
    Ok(best)
}

/// Runs one cycle from `cfg`'s initial state until no excitation remains or
/// `t_max` is reached.
pub fn run_cycle(
    sampler: &dyn CycleSampler,
    setup: &CampaignSetup,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<EmissionEvent>, SourceState)> {
    let cfg = setup.config();
    let gamma = cfg.total_decay_rate();
    let t_max = setup.t_max();
    let mut state = cfg.initial_state().clone();
    let mut now = 0.0;
    let mut events = Vec::new();
    loop {
        let u = 1.0 - rng.random::<f64>();
        let Some(wait) = sample_waiting_time(&state, gamma, u) else {
            // conditioned on no further emission the state collapses onto |n = 0>
            let ground = SourceState::from_amplitudes(std::array::from_fn(|i| {
                if excitation_number(i) == 0 {
                    state.vector()[i]
                } else {
                    C64::new(0.0, 0.0)
                }
            }));
            if ground.norm() > 0.0 {
                state = ground.normalized()?;
            }
            break;
        };
        if now + wait > t_max {
            state = evolve_no_jump(t_max - now, cfg, &state)?.normalized()?;
            break;
        }
        now += wait;
        let before = evolve_no_jump(wait, cfg, &state)?.normalized()?;
        let (geometry, polarization) = sampler.choose_channel(setup, &before, rng)?;
        let after = ResetCoefficients::new(&JumpContext::new(geometry.clone(), polarization), cfg)
            .apply(&before)
            .normalized()?;
        let detector = setup.detector_of(geometry.direction());
        events.push(EmissionEvent {
            time: now,
            geometry,
            polarization,
            post_state: after.clone(),
            detector,
        });
        state = after;
    }
    Ok((events, state))
}

/// Samplers selectable by name.
pub fn sampler_registry() -> BTreeMap<&'static str, Arc<dyn CycleSampler>> {
    let mut m: BTreeMap<&'static str, Arc<dyn CycleSampler>> = BTreeMap::new();
    for s in [Arc::new(AnalogSampler) as Arc<dyn CycleSampler>, Arc::new(ForcedSampler)] {
        m.insert(s.name(), s);
    }
    m
}

pub fn sampler_by_name(name: &str) -> Result<Arc<dyn CycleSampler>> {
    let reg = sampler_registry();
    reg.get(name).cloned().ok_or_else(|| Error::UnknownStrategy {
        kind: "sampler",
        name: name.to_string(),
        available: reg.keys().copied().collect::<Vec<_>>().join(", "),
    })
}
