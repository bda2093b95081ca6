//! Coincidence-window bookkeeping for a stream of repeated cycles.
//!
//! Cycle `k` starts at `k * t_rep` with the sources freshly prepared. Alice
//! and Bob accept clicks that arrive within `delta_t` of a cycle start and
//! pair clicks belonging to the same window.

use crate::sources::Polarization;

use super::Detector;

/// A click with its cycle and time since the cycle start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedClick {
    pub cycle_index: u64,
    pub time: f64,
    pub detector: Detector,
    pub polarization: Polarization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WindowReport {
    /// Windows with one Alice click and one Bob click inside `delta_t`.
    pub pairs_in_window: u64,
    /// Alice/Bob click pairs from different cycles closer than `delta_t`.
    pub cross_cycle_coincidences: u64,
    /// Clicks arriving after their window closed.
    pub late_clicks: u64,
    /// Windows holding more than one click at the same detector.
    pub multi_click_windows: u64,
    /// False when `delta_t` is not well separated from `1 / Gamma` and `t_rep`.
    pub ordering_ok: bool,
}

/// Required separation factor between `1 / Gamma`, `delta_t` and `t_rep`.
pub const SEPARATION: f64 = 10.0;

/// Probability that both photons from `|22>` arrive within `delta_t`,
/// `(1 - e^{-Gamma delta_t})^2`.
pub fn window_capture_probability(gamma_total: f64, delta_t: f64) -> f64 {
    (1.0 - (-gamma_total * delta_t).exp()).powi(2)
}

pub fn coincidence_window_analysis(clicks: &[StampedClick], delta_t: f64, t_rep: f64, gamma_total: f64) -> WindowReport {
    let ordering_ok = delta_t * gamma_total >= SEPARATION && t_rep >= SEPARATION * delta_t;
    if !ordering_ok {
        log::warn!(
            "coincidence window delta_t = {delta_t} is not well inside 1/Gamma = {} << delta_t << t_rep = {t_rep}",
            1.0 / gamma_total
        );
    }
    let mut report = WindowReport {
        ordering_ok,
        ..Default::default()
    };

    let mut in_window: Vec<&StampedClick> = Vec::new();
    for c in clicks.iter().filter(|c| c.detector != Detector::None) {
        if c.time <= delta_t {
            in_window.push(c);
        } else {
            report.late_clicks += 1;
        }
    }
    in_window.sort_by(|a, b| a.cycle_index.cmp(&b.cycle_index).then(a.time.total_cmp(&b.time)));

    for group in in_window.chunk_by(|a, b| a.cycle_index == b.cycle_index) {
        let na = group.iter().filter(|c| c.detector == Detector::Alice).count();
        let nb = group.len() - na;
        if na == 1 && nb == 1 {
            report.pairs_in_window += 1;
        }
        if na > 1 || nb > 1 {
            report.multi_click_windows += 1;
        }
    }

    // absolute arrival times, all clicks including late ones
    let mut stamped: Vec<(f64, u64, Detector)> = clicks
        .iter()
        .filter(|c| c.detector != Detector::None)
        .map(|c| (c.cycle_index as f64 * t_rep + c.time, c.cycle_index, c.detector))
        .collect();
    stamped.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (i, (t, cycle, det)) in stamped.iter().enumerate() {
        for (t2, cycle2, det2) in &stamped[i + 1..] {
            if t2 - t > delta_t {
                break;
            }
            if cycle2 != cycle && det2 != det {
                report.cross_cycle_coincidences += 1;
            }
        }
    }
    report
}
