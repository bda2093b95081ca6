//! Quantum-jump trajectory sampling and coincidence statistics.
//!
//! Waiting times are drawn by inverting the exact survival function of the
//! conditional evolution and jump channels by rejection sampling from the
//! reset-operator density, so no time discretization enters anywhere.
//! Cycles use independent ChaCha streams derived from one master seed and
//! are merged in cycle order, which makes campaigns independent of the
//! thread count.

mod sampler;
mod window;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::efficiency::CollectionWindow;
use crate::error::{Error, Result};
use crate::geometry::{condition_residual, geometry_from_spherical, DetectorCone, EmissionGeometry, Parity};
use crate::io::{format_float, Table};
use crate::jump::{integrated_emission_operator, total_emission_operator};
use crate::postselection::PLACEMENT_TOL;
use crate::quadrature::DirectionRule;
use crate::sources::{a01, fidelity, PhotonPairState, Polarization, RVec3, SourceOperator, SourcePairConfig, SourceState};

pub use sampler::{
    envelope_bound, run_cycle, sample_waiting_time, sampler_by_name, sampler_registry, AnalogSampler, CycleSampler,
    ForcedSampler,
};
pub use window::{coincidence_window_analysis, window_capture_probability, StampedClick, WindowReport};

/// Which detector cone, if any, a photon direction falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    Alice,
    Bob,
    None,
}

impl Detector {
    pub fn label(self) -> &'static str {
        match self {
            Detector::Alice => "A",
            Detector::Bob => "B",
            Detector::None => "none",
        }
    }

    pub fn from_label(s: &str) -> Option<Detector> {
        match s {
            "A" => Some(Detector::Alice),
            "B" => Some(Detector::Bob),
            "none" => Some(Detector::None),
            _ => None,
        }
    }
}

/// One sampled emission.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionEvent {
    pub time: f64,
    pub geometry: EmissionGeometry,
    pub polarization: Polarization,
    /// Normalized source state right after the jump.
    pub post_state: SourceState,
    pub detector: Detector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub events: Vec<EmissionEvent>,
    pub final_state: SourceState,
    pub rng_seed: u64,
    pub rng_stream: u64,
}

/// Alice's and Bob's cones with the operators the forced sampler needs.
#[derive(Debug, Clone)]
pub struct DetectorPair {
    alice: DetectorCone,
    bob: DetectorCone,
    q_alice: SourceOperator,
    q_bob: SourceOperator,
    q_total: SourceOperator,
    forced_bound: f64,
}

impl DetectorPair {
    pub fn alice(&self) -> &DetectorCone {
        &self.alice
    }

    pub fn bob(&self) -> &DetectorCone {
        &self.bob
    }

    pub fn classify(&self, k: &RVec3) -> Detector {
        if self.alice.contains(k) {
            Detector::Alice
        } else if self.bob.contains(k) {
            Detector::Bob
        } else {
            Detector::None
        }
    }

    /// Probabilities that the next photon from `state` lands in Alice's and
    /// Bob's cone, given that one is emitted now.
    pub fn region_probabilities(&self, state: &SourceState) -> (f64, f64) {
        let total = self.q_total.expectation(state).re;
        if !(total > 0.0) {
            return (0.0, 0.0);
        }
        (
            self.q_alice.expectation(state).re / total,
            self.q_bob.expectation(state).re / total,
        )
    }

    /// Upper bound `Z` on the combined cone probability over all states.
    pub fn forced_bound(&self) -> f64 {
        self.forced_bound
    }
}

/// Source configuration, optional detector cones and the cycle cutoff.
#[derive(Debug, Clone)]
pub struct CampaignSetup {
    cfg: SourcePairConfig,
    detectors: Option<DetectorPair>,
    t_max: f64,
}

const CONE_RULE: (usize, usize) = (12, 24);

impl CampaignSetup {
    /// No detectors: every photon is labelled [`Detector::None`].
    pub fn unobserved(cfg: SourcePairConfig, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::InvalidArgument(format!("t_max must be > 0, got {t_max}")));
        }
        Ok(CampaignSetup {
            cfg,
            detectors: None,
            t_max,
        })
    }

    /// Cones must be disjoint and centered on directions that satisfy the
    /// plus (Alice) and minus (Bob) conditions.
    pub fn new(cfg: SourcePairConfig, alice: DetectorCone, bob: DetectorCone, t_max: f64) -> Result<Self> {
        let mut setup = Self::unobserved(cfg, t_max)?;
        let cfg = &setup.cfg;
        let ra = condition_residual(alice.center(), cfg, Parity::Plus);
        if ra > PLACEMENT_TOL {
            return Err(Error::ConditionViolation {
                detector: "Alice",
                residual: ra,
            });
        }
        let rb = condition_residual(bob.center(), cfg, Parity::Minus);
        if rb > PLACEMENT_TOL {
            return Err(Error::ConditionViolation {
                detector: "Bob",
                residual: rb,
            });
        }
        if !alice.is_disjoint_from(&bob) {
            return Err(Error::InvalidArgument("Alice's and Bob's cones overlap".into()));
        }
        let q_alice = integrated_emission_operator(cfg, &DirectionRule::cone(&alice, CONE_RULE.0, CONE_RULE.1));
        let q_bob = integrated_emission_operator(cfg, &DirectionRule::cone(&bob, CONE_RULE.0, CONE_RULE.1));
        let q_total = total_emission_operator(cfg);
        let fraction = sampler::max_region_fraction(&q_alice.add(&q_bob), &q_total)?;
        setup.detectors = Some(DetectorPair {
            alice,
            bob,
            q_alice,
            q_bob,
            q_total,
            forced_bound: (fraction * (1.0 + 1e-9)).min(1.0),
        });
        Ok(setup)
    }

    /// Alice's cone around `z`, Bob's around `(theta_b, phi_b)`, with the
    /// window's solid angles.
    pub fn from_window(cfg: SourcePairConfig, win: &CollectionWindow, phi_b: f64, t_max: f64) -> Result<Self> {
        let alice = DetectorCone::from_solid_angle(geometry_from_spherical(0.0, 0.0), win.domega_a)?;
        let bob = DetectorCone::from_solid_angle(geometry_from_spherical(win.theta_b, phi_b), win.domega_b)?;
        Self::new(cfg, alice, bob, t_max)
    }

    pub fn config(&self) -> &SourcePairConfig {
        &self.cfg
    }

    pub fn detectors(&self) -> Option<&DetectorPair> {
        self.detectors.as_ref()
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn detector_of(&self, k: &RVec3) -> Detector {
        self.detectors.as_ref().map_or(Detector::None, |d| d.classify(k))
    }
}

fn cycle_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One analog trajectory from `cfg`'s initial state, reproducible from `seed`.
pub fn sample_trajectory(cfg: &SourcePairConfig, seed: u64, t_max: f64) -> Result<TrajectoryResult> {
    let setup = CampaignSetup::unobserved(cfg.clone(), t_max)?;
    sample_cycle(&AnalogSampler, &setup, seed, 0)
}

/// Cycle `stream` of the campaign with master seed `seed`.
pub fn sample_cycle(sampler: &dyn CycleSampler, setup: &CampaignSetup, seed: u64, stream: u64) -> Result<TrajectoryResult> {
    let mut rng = cycle_rng(seed, stream);
    let (events, final_state) = run_cycle(sampler, setup, &mut rng)?;
    Ok(TrajectoryResult {
        events,
        final_state,
        rng_seed: seed,
        rng_stream: stream,
    })
}

/// Cone coincidences and polarization outcomes of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceStats {
    pub sampler: String,
    pub n_cycles: u64,
    /// Cycles with exactly one photon in each cone.
    pub n_pairs_in_cones: u64,
    /// Indexed by [`PhotonPairState::index`]`(bob, alice)`.
    pub pol_counts: [u64; 4],
    /// Weight of each coincidence: 1 for analog sampling, `Z^2` when forced.
    pub pair_weight: f64,
    pub estimated_p: f64,
    pub std_error: f64,
    /// Number of cycles with 0, 1, 2 and more than 2 photons.
    pub photons_per_cycle: [u64; 4],
    /// Smallest fidelity with `|a01>` of the final state over coincidence
    /// cycles (1 when there are none).
    pub min_pair_fidelity_a01: f64,
}

#[derive(Debug, Clone, Copy)]
struct CycleSummary {
    n_photons: usize,
    pair: Option<(Polarization, Polarization)>,
    fidelity_a01: f64,
}

fn summarize(tr: &TrajectoryResult) -> CycleSummary {
    let alice: Vec<_> = tr.events.iter().filter(|e| e.detector == Detector::Alice).collect();
    let bob: Vec<_> = tr.events.iter().filter(|e| e.detector == Detector::Bob).collect();
    let pair = match (alice.as_slice(), bob.as_slice()) {
        ([a], [b]) => Some((b.polarization, a.polarization)),
        _ => None,
    };
    CycleSummary {
        n_photons: tr.events.len(),
        pair,
        fidelity_a01: if pair.is_some() {
            fidelity(&tr.final_state, &a01())
        } else {
            1.0
        },
    }
}

/// Campaign output: statistics and, when requested, every trajectory.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub stats: CoincidenceStats,
    pub trajectories: Vec<TrajectoryResult>,
}

pub fn run_campaign(
    sampler: &dyn CycleSampler,
    setup: &CampaignSetup,
    n_cycles: u64,
    seed: u64,
    keep_trajectories: bool,
) -> Result<Campaign> {
    if n_cycles == 0 {
        return Err(Error::InvalidArgument("n_cycles must be > 0".into()));
    }
    let results: Vec<(CycleSummary, Option<TrajectoryResult>)> = (0..n_cycles)
        .into_par_iter()
        .map(|i| {
            let tr = sample_cycle(sampler, setup, seed, i)?;
            let s = summarize(&tr);
            Ok((s, keep_trajectories.then_some(tr)))
        })
        .collect::<Result<_>>()?;

    let mut pol_counts = [0u64; 4];
    let mut photons_per_cycle = [0u64; 4];
    let mut n_pairs = 0u64;
    let mut min_fid: f64 = 1.0;
    let mut trajectories = Vec::new();
    for (s, tr) in results {
        photons_per_cycle[s.n_photons.min(3)] += 1;
        if let Some((bob, alice)) = s.pair {
            n_pairs += 1;
            pol_counts[PhotonPairState::index(bob, alice)] += 1;
            min_fid = min_fid.min(s.fidelity_a01);
        }
        trajectories.extend(tr);
    }
    let weight = sampler.pair_weight(setup);
    let n = n_cycles as f64;
    let frac = n_pairs as f64 / n;
    Ok(Campaign {
        stats: CoincidenceStats {
            sampler: sampler.name().to_string(),
            n_cycles,
            n_pairs_in_cones: n_pairs,
            pol_counts,
            pair_weight: weight,
            estimated_p: weight * frac,
            std_error: weight * (frac * (1.0 - frac) / n).sqrt(),
            photons_per_cycle,
            min_pair_fidelity_a01: min_fid,
        },
        trajectories,
    })
}

/// Forced-sampling estimate of the cone coincidence probability with Alice at
/// `z` and Bob at `(win.theta_b, phi_b)`.
pub fn estimate_pair_statistics(
    cfg: &SourcePairConfig,
    win: &CollectionWindow,
    phi_b: f64,
    n_cycles: u64,
    seed: u64,
) -> Result<CoincidenceStats> {
    estimate_pair_statistics_with(&ForcedSampler, cfg, win, phi_b, n_cycles, seed)
}

pub fn estimate_pair_statistics_with(
    sampler: &dyn CycleSampler,
    cfg: &SourcePairConfig,
    win: &CollectionWindow,
    phi_b: f64,
    n_cycles: u64,
    seed: u64,
) -> Result<CoincidenceStats> {
    let setup = CampaignSetup::from_window(cfg.clone(), win, phi_b, f64::INFINITY)?;
    Ok(run_campaign(sampler, &setup, n_cycles, seed, false)?.stats)
}

pub const EVENT_COLUMNS: [&str; 6] = ["cycle_index", "time", "theta", "phi", "polarization", "detector"];

/// Flat CSV view of one emission.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub cycle_index: u64,
    pub time: f64,
    pub theta: f64,
    pub phi: f64,
    pub polarization: Polarization,
    pub detector: Detector,
}

impl EventRow {
    pub fn from_event(cycle_index: u64, e: &EmissionEvent) -> Self {
        EventRow {
            cycle_index,
            time: e.time,
            theta: e.geometry.theta(),
            phi: e.geometry.phi(),
            polarization: e.polarization,
            detector: e.detector,
        }
    }

    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.cycle_index.to_string(),
            format_float(self.time),
            format_float(self.theta),
            format_float(self.phi),
            self.polarization.symbol().to_string(),
            self.detector.label().to_string(),
        ]
    }

    pub fn from_record(rec: &[String]) -> Result<Self> {
        let bad = |what: &str| Error::InvalidArgument(format!("malformed event row ({what}): {rec:?}"));
        if rec.len() != EVENT_COLUMNS.len() {
            return Err(bad("column count"));
        }
        let f = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(EVENT_COLUMNS[i]));
        let polarization = match rec[4].as_str() {
            "+" => Polarization::Plus,
            "-" => Polarization::Minus,
            _ => return Err(bad("polarization")),
        };
        Ok(EventRow {
            cycle_index: rec[0].parse().map_err(|_| bad("cycle_index"))?,
            time: f(1)?,
            theta: f(2)?,
            phi: f(3)?,
            polarization,
            detector: Detector::from_label(&rec[5]).ok_or_else(|| bad("detector"))?,
        })
    }

    pub fn click(&self) -> StampedClick {
        StampedClick {
            cycle_index: self.cycle_index,
            time: self.time,
            detector: self.detector,
            polarization: self.polarization,
        }
    }
}

/// Event rows of a list of trajectories, in cycle order.
pub fn event_table(trajectories: &[TrajectoryResult], metadata: Vec<(String, String)>) -> Table {
    let rows = trajectories
        .iter()
        .flat_map(|tr| tr.events.iter().map(move |e| EventRow::from_event(tr.rng_stream, e).to_record()))
        .collect();
    Table {
        metadata,
        header: EVENT_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}
