//! Deterministic quadrature rules: Gauss-Legendre on an interval, product
//! rules on the sphere and on a detector cone.

use std::f64::consts::{PI, TAU};

use crate::geometry::DetectorCone;
use crate::sources::RVec3;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule; exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// Weighted direction nodes.
#[derive(Debug, Clone)]
pub struct DirectionRule {
    points: Vec<(RVec3, f64)>,
}

impl DirectionRule {
    /// Gauss-Legendre in `cos(theta)` times a uniform azimuth grid over the
    /// full sphere. The azimuth grid is exact for trigonometric polynomials of
    /// degree below `n_phi`.
    pub fn sphere(n_cos: usize, n_phi: usize) -> Self {
        let gl = GaussLegendre::new(n_cos);
        let dphi = TAU / n_phi as f64;
        let mut points = Vec::with_capacity(n_cos * n_phi);
        for (c, w) in gl.on_interval(-1.0, 1.0) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                points.push((RVec3::new(s * phi.cos(), s * phi.sin(), c), w * dphi));
            }
        }
        DirectionRule { points }
    }

    /// Same product construction restricted to a detector cone, in the cone's
    /// own frame.
    pub fn cone(cone: &DetectorCone, n_cos: usize, n_phi: usize) -> Self {
        let gl = GaussLegendre::new(n_cos);
        let dphi = TAU / n_phi as f64;
        let mut points = Vec::with_capacity(n_cos * n_phi);
        for (c, w) in gl.on_interval(cone.cos_half_angle(), 1.0) {
            for j in 0..n_phi {
                let az = (j as f64 + 0.5) * dphi;
                points.push((cone.direction_at(c, az), w * dphi));
            }
        }
        DirectionRule { points }
    }

    pub fn points(&self) -> &[(RVec3, f64)] {
        &self.points
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|(_, w)| w).sum()
    }

    pub fn integrate<F: FnMut(&RVec3) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().map(|(k, w)| w * f(k)).sum()
    }
}

/// Default sphere rule used for sum-rule checks: 64 x 128 nodes.
pub fn default_sphere_rule() -> DirectionRule {
    DirectionRule::sphere(64, 128)
}
