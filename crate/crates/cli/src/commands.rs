//! Subcommand implementations. Each returns the table to emit.

use std::f64::consts::PI;

use dipent::efficiency::{pair_probability_analytic, CollectionWindow, EfficiencyProblem, EstimatorRegistry, QuadSpec};
use dipent::geometry::{find_detector_rings, geometry_from_spherical, Parity};
use dipent::io::{format_float, Table, SCHEMA_KEY};
use dipent::measures::entanglement_of_formation;
use dipent::montecarlo::{
    coincidence_window_analysis, event_table, run_campaign, sampler_by_name, CampaignSetup, EventRow, StampedClick,
};
use dipent::postselection::{analytic_pair_state, conditional_pair_state};
use dipent::sources::{PhotonPairState, SourcePairConfig};

use crate::config::{PairMethod, RunConfig};
use crate::failure::Failure;

pub const EF_MAP_SCHEMA: &str = "dipent.ef-map/1";
pub const RINGS_SCHEMA: &str = "dipent.rings/1";
pub const PAIR_STATE_SCHEMA: &str = "dipent.pair-state/1";
pub const EFFICIENCY_SCHEMA: &str = "dipent.efficiency/1";
pub const EVENTS_SCHEMA: &str = "dipent.events/1";

/// Output of a command: the table plus an optional one-line JSON summary.
pub struct Output {
    pub table: Table,
    pub summary: Option<String>,
}

fn base_metadata(schema: &str, cfg: &RunConfig) -> Vec<(String, String)> {
    let canonical = RunConfig { out: None, ..cfg.clone() };
    vec![
        (SCHEMA_KEY.into(), schema.into()),
        ("config_hash".into(), cfg.hash()),
        ("seed".into(), cfg.seed.to_string()),
        ("config".into(), serde_json::to_string(&canonical).expect("config serializes")),
    ]
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// `n` evenly spaced points from `lo` to `hi`, both included.
fn linspace([lo, hi]: [f64; 2], n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

pub fn ef_map(cfg: &RunConfig) -> Result<Output, Failure> {
    let mut rows = Vec::with_capacity(cfg.grid * cfg.grid);
    for theta in linspace(cfg.theta_range, cfg.grid) {
        for phi in linspace(cfg.phi_range, cfg.grid) {
            let rep = entanglement_of_formation(&analytic_pair_state(theta, phi))?;
            rows.push(vec![
                format_float(theta),
                format_float(phi),
                format_float(rep.ef),
                format_float(rep.concurrence),
                format_float(rep.p_mix),
            ]);
        }
    }
    Ok(Output {
        table: Table {
            metadata: base_metadata(EF_MAP_SCHEMA, cfg),
            header: header(&["theta", "phi", "ef", "concurrence", "p"]),
            rows,
        },
        summary: None,
    })
}

pub fn rings(cfg: &RunConfig) -> Result<Output, Failure> {
    let source = cfg.source_config()?;
    let mut rows = Vec::new();
    for parity in [Parity::Plus, Parity::Minus] {
        for ring in find_detector_rings(&source, parity, cfg.ring_tol)? {
            rows.push(vec![
                parity.name().to_string(),
                ring.order.to_string(),
                format_float(ring.cos_alpha),
                format_float(ring.cos_alpha.acos()),
                format_float(ring.residual),
            ]);
        }
    }
    let mut metadata = base_metadata(RINGS_SCHEMA, cfg);
    metadata.push(("k0d".into(), format_float(source.k0d())));
    let axis = source.source_axis();
    metadata.push((
        "source_axis".into(),
        format!("{} {} {}", format_float(axis.x), format_float(axis.y), format_float(axis.z)),
    ));
    Ok(Output {
        table: Table {
            metadata,
            header: header(&["parity", "order", "cos_alpha", "alpha", "residual"]),
            rows,
        },
        summary: None,
    })
}

fn resolved_method(cfg: &RunConfig) -> PairMethod {
    match cfg.method {
        PairMethod::Auto if cfg.theta_b.sin().abs() < 1e-12 => PairMethod::Analytic,
        PairMethod::Auto => PairMethod::Conditional,
        m => m,
    }
}

pub fn pair_state(cfg: &RunConfig) -> Result<Output, Failure> {
    let reference = analytic_pair_state(cfg.theta_b, cfg.phi_b);
    let mut metadata = base_metadata(PAIR_STATE_SCHEMA, cfg);
    let pair: PhotonPairState = match resolved_method(cfg) {
        PairMethod::Conditional => {
            let source = cfg.source_config()?;
            let alice = geometry_from_spherical(0.0, 0.0);
            let bob = geometry_from_spherical(cfg.theta_b, cfg.phi_b);
            let cond = conditional_pair_state(&alice, &bob, cfg.t1, cfg.t2, &source)?;
            metadata.push(("method".into(), "conditional".into()));
            metadata.push(("k0d".into(), format_float(source.k0d())));
            metadata.push(("schmidt_residual".into(), format_float(cond.schmidt_residual)));
            metadata.push(("prob_density".into(), format_float(cond.prob_density)));
            cond.pair
        }
        _ => {
            metadata.push(("method".into(), "analytic".into()));
            reference.clone()
        }
    };
    let rep = entanglement_of_formation(&pair)?;
    metadata.push(("concurrence".into(), format_float(rep.concurrence)));
    metadata.push(("ef".into(), format_float(rep.ef)));
    metadata.push(("p".into(), format_float(rep.p_mix)));
    metadata.push(("fidelity_analytic".into(), format_float(pair.fidelity(&reference))));

    let amps = pair.amplitudes();
    let probs = pair.probabilities();
    let ref_amps = reference.amplitudes();
    let rows = PhotonPairState::labels()
        .iter()
        .enumerate()
        .map(|(i, (bob, alice))| {
            vec![
                bob.symbol().to_string(),
                alice.symbol().to_string(),
                format_float(amps[i].re),
                format_float(amps[i].im),
                format_float(probs[i]),
                format_float(ref_amps[i].re),
                format_float(ref_amps[i].im),
            ]
        })
        .collect();
    Ok(Output {
        table: Table {
            metadata,
            header: header(&["bob", "alice", "re", "im", "probability", "analytic_re", "analytic_im"]),
            rows,
        },
        summary: None,
    })
}

fn cone_solid_angle(half_angle: f64) -> f64 {
    2.0 * PI * (1.0 - half_angle.cos())
}

fn window(cfg: &RunConfig) -> Result<CollectionWindow, Failure> {
    let domega = cone_solid_angle(cfg.cone_half_angle);
    Ok(CollectionWindow::new(domega, domega, cfg.theta_b)?)
}

pub fn efficiency(cfg: &RunConfig) -> Result<Output, Failure> {
    let source: SourcePairConfig = cfg.source_config()?;
    let win = window(cfg)?;
    let problem = EfficiencyProblem {
        cfg: source.clone(),
        window: win,
        phi_b: cfg.phi_b,
        quad: QuadSpec {
            n_t1: cfg.quad_nodes,
            n_tau: cfg.quad_nodes,
            t_max: None,
            tol: cfg.quad_tol,
        },
        n_cycles: cfg.n_cycles,
        seed: cfg.seed,
    };
    let reference = pair_probability_analytic(&source, &win);
    let registry = EstimatorRegistry::with_defaults();
    let mut rows = Vec::new();
    for name in &cfg.estimators {
        let est = registry.get(name)?.estimate(&problem)?;
        let rel = (est.value - reference) / reference;
        let z = est
            .std_error
            .filter(|s| *s > 0.0)
            .map(|s| format_float((est.value - reference) / s))
            .unwrap_or_default();
        rows.push(vec![
            est.estimator,
            format_float(est.value),
            est.std_error.map(format_float).unwrap_or_default(),
            format_float(rel),
            z,
        ]);
    }
    let mut metadata = base_metadata(EFFICIENCY_SCHEMA, cfg);
    metadata.push(("domega".into(), format_float(win.domega_a)));
    metadata.push(("analytic_reference".into(), format_float(reference)));
    Ok(Output {
        table: Table {
            metadata,
            header: header(&["estimator", "value", "std_error", "rel_diff_analytic", "z_analytic"]),
            rows,
        },
        summary: None,
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<Output, Failure> {
    let source = cfg.source_config()?;
    let sampler = sampler_by_name(&cfg.sampler)?;
    let win = window(cfg)?;
    let setup = CampaignSetup::from_window(source, &win, cfg.phi_b, cfg.t_max.unwrap_or(f64::INFINITY))?;
    let campaign = run_campaign(sampler.as_ref(), &setup, cfg.n_cycles, cfg.seed, cfg.keep_events)?;
    let stats = &campaign.stats;

    let gamma = cfg.gamma_total();
    let delta_t = cfg.delta_t.unwrap_or(10.0 / gamma);
    let t_rep = cfg.t_rep.unwrap_or(10.0 * delta_t);
    let clicks: Vec<StampedClick> = campaign
        .trajectories
        .iter()
        .flat_map(|tr| tr.events.iter().map(|e| EventRow::from_event(tr.rng_stream, e).click()))
        .collect();
    let windows = coincidence_window_analysis(&clicks, delta_t, t_rep, gamma);

    let summary = serde_json::json!({
        "sampler": stats.sampler,
        "n_cycles": stats.n_cycles,
        "n_pairs_in_cones": stats.n_pairs_in_cones,
        "pol_counts": {
            "B+A+": stats.pol_counts[0],
            "B+A-": stats.pol_counts[1],
            "B-A+": stats.pol_counts[2],
            "B-A-": stats.pol_counts[3],
        },
        "pair_weight": stats.pair_weight,
        "estimated_p": stats.estimated_p,
        "std_error": stats.std_error,
        "photons_per_cycle": stats.photons_per_cycle,
        "min_pair_fidelity_a01": stats.min_pair_fidelity_a01,
        "window": {
            "delta_t": delta_t,
            "t_rep": t_rep,
            "pairs_in_window": windows.pairs_in_window,
            "cross_cycle_coincidences": windows.cross_cycle_coincidences,
            "late_clicks": windows.late_clicks,
            "multi_click_windows": windows.multi_click_windows,
            "ordering_ok": windows.ordering_ok,
        },
    });

    let mut metadata = base_metadata(EVENTS_SCHEMA, cfg);
    let counts = stats.pol_counts.map(|c| c.to_string()).join(" ");
    metadata.extend([
        ("sampler".into(), stats.sampler.clone()),
        ("n_cycles".into(), stats.n_cycles.to_string()),
        ("n_pairs_in_cones".into(), stats.n_pairs_in_cones.to_string()),
        ("pol_counts".into(), counts),
        ("pair_weight".into(), format_float(stats.pair_weight)),
        ("estimated_p".into(), format_float(stats.estimated_p)),
        ("std_error".into(), format_float(stats.std_error)),
        ("min_pair_fidelity_a01".into(), format_float(stats.min_pair_fidelity_a01)),
        ("delta_t".into(), format_float(delta_t)),
        ("t_rep".into(), format_float(t_rep)),
        ("pairs_in_window".into(), windows.pairs_in_window.to_string()),
        ("cross_cycle_coincidences".into(), windows.cross_cycle_coincidences.to_string()),
    ]);
    Ok(Output {
        table: event_table(&campaign.trajectories, metadata),
        summary: Some(summary.to_string()),
    })
}
