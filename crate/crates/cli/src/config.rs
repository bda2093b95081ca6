//! Run configuration: a JSON file overlaid by command-line flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use dipent::sources::{RVec3, SourcePairConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMethod {
    /// Conditional state when Bob can sit on a minus ring, closed form otherwise.
    Auto,
    Analytic,
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gamma0: f64,
    pub gamma1: f64,
    pub k0d: f64,
    pub source_axis: [f64; 3],
    pub theta_b: f64,
    pub phi_b: f64,
    /// Replace `k0d` and the axis by the placement that puts Bob at
    /// `(theta_b, phi_b)` on the first minus ring.
    pub auto_place: bool,
    pub seed: u64,
    pub n_cycles: u64,
    pub grid: usize,
    pub theta_range: [f64; 2],
    pub phi_range: [f64; 2],
    pub ring_tol: f64,
    pub method: PairMethod,
    pub t1: f64,
    pub t2: f64,
    pub cone_half_angle: f64,
    pub estimators: Vec<String>,
    pub quad_nodes: usize,
    pub quad_tol: f64,
    pub sampler: String,
    /// Cycle length cutoff, unlimited when absent.
    pub t_max: Option<f64>,
    /// Coincidence window, `10 / (Gamma0 + Gamma1)` when absent.
    pub delta_t: Option<f64>,
    /// Repetition period, `10 * delta_t` when absent.
    pub t_rep: Option<f64>,
    pub keep_events: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma0: 1.0,
            gamma1: 1.0,
            k0d: 3.0 * PI,
            source_axis: [1.0, 0.0, 0.0],
            theta_b: PI / 2.0,
            phi_b: 0.0,
            auto_place: false,
            seed: 2024,
            n_cycles: 20_000,
            grid: 51,
            theta_range: [0.0, PI],
            phi_range: [0.0, 2.0 * PI],
            ring_tol: 1e-9,
            method: PairMethod::Auto,
            t1: 0.5,
            t2: 1.5,
            cone_half_angle: 0.02,
            estimators: vec!["analytic".into(), "quadrature".into(), "forced-mc".into()],
            quad_nodes: 48,
            quad_tol: 1e-10,
            sampler: "forced".into(),
            t_max: None,
            delta_t: None,
            t_rep: None,
            keep_events: true,
            out: None,
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub gamma0: Option<f64>,
    pub gamma1: Option<f64>,
    pub k0d: Option<f64>,
    pub theta_b: Option<f64>,
    pub phi_b: Option<f64>,
    pub n_cycles: Option<u64>,
    pub grid: Option<usize>,
    pub auto_place: bool,
    pub sampler: Option<String>,
    pub estimators: Option<Vec<String>>,
    pub method: Option<PairMethod>,
    pub cone_half_angle: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>, flags: Overrides) -> Result<Self, Failure> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if flags.out.is_some() {
            cfg.out = flags.out;
        }
        set(&mut cfg.seed, flags.seed);
        set(&mut cfg.gamma0, flags.gamma0);
        set(&mut cfg.gamma1, flags.gamma1);
        set(&mut cfg.k0d, flags.k0d);
        set(&mut cfg.theta_b, flags.theta_b);
        set(&mut cfg.phi_b, flags.phi_b);
        set(&mut cfg.n_cycles, flags.n_cycles);
        set(&mut cfg.grid, flags.grid);
        set(&mut cfg.sampler, flags.sampler);
        set(&mut cfg.estimators, flags.estimators);
        set(&mut cfg.method, flags.method);
        set(&mut cfg.cone_half_angle, flags.cone_half_angle);
        cfg.auto_place |= flags.auto_place;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let positive = [
            ("ring_tol", self.ring_tol),
            ("quad_tol", self.quad_tol),
            ("cone_half_angle", self.cone_half_angle),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("t_max", self.t_max), ("delta_t", self.delta_t), ("t_rep", self.t_rep)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Failure::config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.grid < 2 {
            return Err(Failure::config(format!("grid must be >= 2, got {}", self.grid)));
        }
        if self.quad_nodes < 2 {
            return Err(Failure::config(format!("quad_nodes must be >= 2, got {}", self.quad_nodes)));
        }
        for (name, [lo, hi]) in [("theta_range", self.theta_range), ("phi_range", self.phi_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Failure::config(format!("{name} must be an ordered finite pair, got [{lo}, {hi}]")));
            }
        }
        if !(0.0 <= self.t1 && self.t1 <= self.t2 && self.t2.is_finite()) {
            return Err(Failure::config(format!(
                "detection times need 0 <= t1 <= t2, got t1 = {}, t2 = {}",
                self.t1, self.t2
            )));
        }
        if self.estimators.is_empty() {
            return Err(Failure::config("estimators list is empty"));
        }
        Ok(())
    }

    /// Source configuration, with Bob's placement applied when requested.
    pub fn source_config(&self) -> Result<SourcePairConfig, Failure> {
        let [x, y, z] = self.source_axis;
        let cfg = SourcePairConfig::new(self.gamma0, self.gamma1, self.k0d)?.with_source_axis(RVec3::new(x, y, z))?;
        if self.auto_place {
            Ok(cfg.placed_for_bob(self.theta_b, self.phi_b)?)
        } else {
            Ok(cfg)
        }
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma0 + self.gamma1
    }

    /// SHA-256 of the canonical JSON form, ignoring the output path.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { out: None, ..self.clone() };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"seed": 5, "k0d": 7.0, "grid": 9}"#).unwrap();
        let cfg = RunConfig::load(
            Some(&path),
            Overrides {
                seed: Some(11),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.k0d, 7.0);
        assert_eq!(cfg.grid, 9);
        assert_eq!(cfg.gamma0, 1.0);
    }

    #[test]
    fn hash_ignores_output_path_only() {
        let a = RunConfig::default();
        let b = RunConfig {
            out: Some("x.csv".into()),
            ..a.clone()
        };
        let c = RunConfig { seed: 1, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_values() {
        for json in [r#"{"grid": 1}"#, r#"{"ring_tol": 0}"#, r#"{"t1": 2, "t2": 1}"#, r#"{"bogus": 1}"#] {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("c.json");
            std::fs::write(&path, json).unwrap();
            let err = RunConfig::load(Some(&path), Overrides::default()).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{json}");
        }
    }

    #[test]
    fn missing_file_is_io() {
        let err = RunConfig::load(Some(Path::new("/nonexistent/run.json")), Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("/nonexistent/run.json"));
    }
}
