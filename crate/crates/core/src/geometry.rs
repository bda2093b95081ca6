//! Propagation directions, their polarization bases, and detector placement.
//!
//! The phases of the two emission paths differ by `delta = k0d (k . axis)`.
//! A detector of plus parity (Alice) needs `delta = 2 pi n`, one of minus
//! parity (Bob) needs `delta = (2n + 1) pi`. Since only `k . axis` is
//! constrained, solutions are cones ("rings") around the source axis.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::error::{Error, Result};
use crate::sources::{CVec3, Polarization, RVec3, SourcePairConfig, C64};

/// Propagation direction with its transverse polarization basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionGeometry {
    direction: RVec3,
    eps_plus: CVec3,
    eps_minus: CVec3,
    theta: f64,
    phi: f64,
}

impl EmissionGeometry {
    pub fn direction(&self) -> &RVec3 {
        &self.direction
    }

    pub fn polarization_vector(&self, pol: Polarization) -> &CVec3 {
        match pol {
            Polarization::Plus => &self.eps_plus,
            Polarization::Minus => &self.eps_minus,
        }
    }

    pub fn eps_plus(&self) -> &CVec3 {
        &self.eps_plus
    }

    pub fn eps_minus(&self) -> &CVec3 {
        &self.eps_minus
    }

    /// Polar angle in `[0, pi]`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Azimuth in `[0, 2 pi)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Builds the geometry for spherical angles `(theta, phi)`.
///
/// `eps+ = e^{i phi} (cos t cos p - i sin p, cos t sin p + i cos p, -sin t)/sqrt(2)`
/// and `eps- = conj(eps+)`. Out-of-range angles are wrapped onto
/// `theta in [0, pi]`, `phi in [0, 2 pi)`; the map `(2 pi - t, p + pi)` leaves
/// both the direction and `eps+` unchanged, so wrapping is exact.
pub fn geometry_from_spherical(theta: f64, phi: f64) -> EmissionGeometry {
    let (theta, phi) = wrap_angles(theta, phi);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let direction = RVec3::new(st * cp, st * sp, ct);
    let phase = C64::from_polar(FRAC_1_SQRT_2, phi);
    let eps_plus = CVec3::new(
        phase * C64::new(ct * cp, -sp),
        phase * C64::new(ct * sp, cp),
        phase * C64::new(-st, 0.0),
    );
    let eps_minus = eps_plus.map(|c| c.conj());
    EmissionGeometry {
        direction,
        eps_plus,
        eps_minus,
        theta,
        phi,
    }
}

/// Geometry for an arbitrary (not necessarily unit) direction vector.
pub fn geometry_from_direction(k: &RVec3) -> Result<EmissionGeometry> {
    let n = k.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidArgument("direction must be a nonzero vector".into()));
    }
    let u = k / n;
    let theta = u.z.clamp(-1.0, 1.0).acos();
    let phi = u.y.atan2(u.x);
    Ok(geometry_from_spherical(theta, phi))
}

fn wrap_angles(theta: f64, phi: f64) -> (f64, f64) {
    let mut t = theta.rem_euclid(TAU);
    let mut p = phi;
    if t > PI {
        t = TAU - t;
        p += PI;
    }
    let mut p = p.rem_euclid(TAU);
    if p >= TAU {
        p = 0.0;
    }
    (t, p)
}

/// Which half of the placement condition a detector must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    /// In-phase paths (Alice).
    Plus,
    /// Opposite-phase paths (Bob).
    Minus,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Plus => "plus",
            Parity::Minus => "minus",
        }
    }
}

/// `delta = k0d (k . axis)`, the optical phase difference between the two
/// emission paths in direction `k`.
pub fn relative_phase(direction: &RVec3, cfg: &SourcePairConfig) -> f64 {
    cfg.k0d() * direction.dot(cfg.source_axis())
}

fn residual_for_phase(delta: f64, parity: Parity) -> f64 {
    let a = C64::from_polar(1.0, -delta / 2.0);
    let b = C64::from_polar(1.0, delta / 2.0);
    (a - b * parity.sign()).norm()
}

/// `|e^{-i delta/2} - s e^{+i delta/2}|`, zero exactly on the condition.
pub fn condition_residual(geom: &EmissionGeometry, cfg: &SourcePairConfig, parity: Parity) -> f64 {
    residual_for_phase(relative_phase(geom.direction(), cfg), parity)
}

/// One cone of directions satisfying a placement condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorRing {
    pub parity: Parity,
    /// Integer `n` in `k0d cos(alpha) = 2 pi n` (plus) or `(2n + 1) pi` (minus).
    pub order: i64,
    /// Cosine of the angle between the direction and the source axis.
    pub cos_alpha: f64,
    pub residual: f64,
}

/// All rings of the given parity, sorted by `cos_alpha`.
///
/// An empty list is a valid answer (no minus ring exists for `k0d < pi`).
/// For `k0d = 0` every direction satisfies the plus condition, which has no
/// ring representation and is reported as an error.
pub fn find_detector_rings(cfg: &SourcePairConfig, parity: Parity, tol: f64) -> Result<Vec<DetectorRing>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("ring tolerance must be > 0, got {tol}")));
    }
    let k0d = cfg.k0d();
    if k0d == 0.0 {
        return match parity {
            Parity::Plus => Err(Error::InvalidArgument(
                "k0d = 0: every direction satisfies the plus condition".into(),
            )),
            Parity::Minus => Ok(Vec::new()),
        };
    }
    let offset = match parity {
        Parity::Plus => 0.0,
        Parity::Minus => 0.5,
    };
    // phase / 2 pi = n + offset must lie in [-k0d / 2 pi, k0d / 2 pi]
    let reach = k0d / TAU * (1.0 + 1e-14);
    let n_lo = (-reach - offset).ceil() as i64;
    let n_hi = (reach - offset).floor() as i64;
    let mut rings = Vec::new();
    for n in n_lo..=n_hi {
        let phase = TAU * (n as f64 + offset);
        let cos_alpha = (phase / k0d).clamp(-1.0, 1.0);
        let residual = residual_for_phase(k0d * cos_alpha, parity);
        if residual <= tol {
            rings.push(DetectorRing {
                parity,
                order: n,
                cos_alpha,
                residual,
            });
        }
    }
    rings.sort_by(|a, b| a.cos_alpha.total_cmp(&b.cos_alpha));
    Ok(rings)
}

/// Orthonormal `(e1, e2)` completing `axis` to a right-handed frame.
/// `e1` is the part of `z` perpendicular to the axis when that exists.
pub fn transverse_frame(axis: &RVec3) -> (RVec3, RVec3) {
    let z = RVec3::z();
    let mut e1 = z - axis * axis.dot(&z);
    if e1.norm() < 1e-9 {
        let x = RVec3::x();
        e1 = x - axis * axis.dot(&x);
    }
    let e1 = e1.normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}

/// Direction on a ring at azimuth `psi` around the source axis.
/// With the default `x` axis, `psi = 0` lies in the `xz` half-plane with `z > 0`.
pub fn ring_direction(cfg: &SourcePairConfig, cos_alpha: f64, psi: f64) -> EmissionGeometry {
    let axis = cfg.source_axis();
    let (e1, e2) = transverse_frame(axis);
    let sin_alpha = (1.0 - cos_alpha * cos_alpha).max(0.0).sqrt();
    let k = axis * cos_alpha + (e1 * psi.cos() + e2 * psi.sin()) * sin_alpha;
    geometry_from_direction(&k).expect("unit direction")
}

/// Circular detector aperture around a center direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorCone {
    center: EmissionGeometry,
    half_angle: f64,
    cos_half_angle: f64,
    frame: (RVec3, RVec3),
}

impl DetectorCone {
    pub fn new(center: EmissionGeometry, half_angle: f64) -> Result<Self> {
        if !(half_angle > 0.0 && half_angle <= PI) {
            return Err(Error::InvalidArgument(format!(
                "cone half-angle must lie in (0, pi], got {half_angle}"
            )));
        }
        let frame = transverse_frame(center.direction());
        Ok(DetectorCone {
            cos_half_angle: half_angle.cos(),
            center,
            half_angle,
            frame,
        })
    }

    /// Cone covering the given solid angle (steradians, in `(0, 4 pi]`).
    pub fn from_solid_angle(center: EmissionGeometry, solid_angle: f64) -> Result<Self> {
        if !(solid_angle > 0.0 && solid_angle <= 4.0 * PI) {
            return Err(Error::InvalidArgument(format!(
                "solid angle must lie in (0, 4 pi], got {solid_angle}"
            )));
        }
        let c = (1.0 - solid_angle / TAU).clamp(-1.0, 1.0);
        Self::new(center, c.acos())
    }

    pub fn center(&self) -> &EmissionGeometry {
        &self.center
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    pub fn cos_half_angle(&self) -> f64 {
        self.cos_half_angle
    }

    pub fn solid_angle(&self) -> f64 {
        TAU * (1.0 - self.cos_half_angle)
    }

    pub fn contains(&self, direction: &RVec3) -> bool {
        direction.dot(self.center.direction()) >= self.cos_half_angle
    }

    /// Direction at polar offset `cos_psi` from the center and azimuth `azimuth`.
    pub fn direction_at(&self, cos_psi: f64, azimuth: f64) -> RVec3 {
        let (e1, e2) = &self.frame;
        let s = (1.0 - cos_psi * cos_psi).max(0.0).sqrt();
        let k = self.center.direction() * cos_psi + (e1 * azimuth.cos() + e2 * azimuth.sin()) * s;
        k.normalize()
    }

    /// True when the two cones share no direction.
    pub fn is_disjoint_from(&self, other: &DetectorCone) -> bool {
        let sep = self
            .center
            .direction()
            .dot(other.center.direction())
            .clamp(-1.0, 1.0)
            .acos();
        sep > self.half_angle + other.half_angle
    }
}
