//! Two-photon conditional states.
//!
//! After emissions `(k_X, lambda)` at `t1` and `(k_Y, lambda')` at `t2` the
//! unnormalized joint state is
//! `sum |1_{Y,lambda'}> |1_{X,lambda}> (x) R_{Y,lambda'} U(t2 - t1) R_{X,lambda} U(t1) |phi0>`.
//! With Alice and Bob on their placement rings this factorizes into a photon
//! pair state times `|a01>`.

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::geometry::{condition_residual, EmissionGeometry, Parity};
use crate::jump::{evolve_no_jump, JumpContext, ResetCoefficients};
use crate::sources::{Polarization, PhotonPairState, SourcePairConfig, SourceState, C64, PAIR_DIM, SOURCE_DIM};

/// Placement residual accepted by [`conditional_pair_state`].
pub const PLACEMENT_TOL: f64 = 1e-9;
/// Largest second Schmidt coefficient still counted as a product state.
pub const SCHMIDT_TOL: f64 = 1e-9;

/// One emission of a two-photon record.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSlot {
    pub geometry: EmissionGeometry,
    pub time: f64,
}

/// Unnormalized source states after two emissions, one per polarization pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonRecord {
    pub first: EmissionSlot,
    pub second: EmissionSlot,
    /// `table[lambda_first][lambda_second]`.
    pub amplitude_table: [[SourceState; 2]; 2],
}

impl TwoPhotonRecord {
    pub fn amplitude(&self, first: Polarization, second: Polarization) -> &SourceState {
        &self.amplitude_table[first.index()][second.index()]
    }

    /// Joint density in `(t1, t2, Omega_X, Omega_Y)` summed over polarizations.
    pub fn probability_density(&self) -> f64 {
        self.amplitude_table.iter().flatten().map(|s| s.norm_squared()).sum()
    }
}

pub fn two_photon_amplitudes(
    geom_x: &EmissionGeometry,
    geom_y: &EmissionGeometry,
    t1: f64,
    t2: f64,
    cfg: &SourcePairConfig,
) -> Result<TwoPhotonRecord> {
    if !(t1 >= 0.0) || !(t2 >= t1) {
        return Err(Error::InvalidArgument(format!(
            "emission times must satisfy 0 <= t1 <= t2, got t1 = {t1}, t2 = {t2}"
        )));
    }
    let before_first = evolve_no_jump(t1, cfg, cfg.initial_state())?;
    let table = Polarization::BOTH.map(|lx| {
        let rx = ResetCoefficients::new(&JumpContext::new(geom_x.clone(), lx), cfg);
        let after_first = rx.apply(&before_first);
        let before_second = evolve_no_jump(t2 - t1, cfg, &after_first).expect("t2 >= t1");
        Polarization::BOTH.map(|ly| {
            let ry = ResetCoefficients::new(&JumpContext::new(geom_y.clone(), ly), cfg);
            ry.apply(&before_second)
        })
    });
    Ok(TwoPhotonRecord {
        first: EmissionSlot {
            geometry: geom_x.clone(),
            time: t1,
        },
        second: EmissionSlot {
            geometry: geom_y.clone(),
            time: t2,
        },
        amplitude_table: table,
    })
}

type JointMatrix = SMatrix<C64, PAIR_DIM, SOURCE_DIM>;

/// Rows in the `(Bob, Alice)` pair basis, columns over the source basis.
fn detector_labelled_matrix(record: &TwoPhotonRecord, alice_first: bool) -> JointMatrix {
    let mut m = JointMatrix::zeros();
    for first in Polarization::BOTH {
        for second in Polarization::BOTH {
            let (bob, alice) = if alice_first { (second, first) } else { (first, second) };
            let row = PhotonPairState::index(bob, alice);
            let state = record.amplitude(first, second);
            for (col, a) in state.vector().iter().enumerate() {
                m[(row, col)] = *a;
            }
        }
    }
    m
}

/// Singular values of the photon-label x source coefficient matrix, descending.
pub fn schmidt_coefficients(m: &SMatrix<C64, PAIR_DIM, SOURCE_DIM>) -> Vec<f64> {
    let svd = m.svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Factorized result of a successful Alice/Bob coincidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPairState {
    /// Normalized photon pair, global phase fixed so that the first amplitude
    /// of at least half the largest modulus is real and positive.
    pub pair: PhotonPairState,
    /// Normalized source factor.
    pub source: SourceState,
    /// Joint probability density of the Alice-first ordering at `(t1, t2)`.
    pub prob_density: f64,
    /// Second Schmidt coefficient of the normalized joint state.
    pub schmidt_residual: f64,
}

/// Normalized photon pair and source state after Alice detects at `t1` and
/// Bob at `t2`.
pub fn conditional_pair_state(
    geom_a: &EmissionGeometry,
    geom_b: &EmissionGeometry,
    t1: f64,
    t2: f64,
    cfg: &SourcePairConfig,
) -> Result<ConditionalPairState> {
    let ra = condition_residual(geom_a, cfg, Parity::Plus);
    if ra > PLACEMENT_TOL {
        return Err(Error::ConditionViolation {
            detector: "Alice",
            residual: ra,
        });
    }
    let rb = condition_residual(geom_b, cfg, Parity::Minus);
    if rb > PLACEMENT_TOL {
        return Err(Error::ConditionViolation {
            detector: "Bob",
            residual: rb,
        });
    }
    if cfg.initial_state().excited_pair_amplitude().norm() < 1e-15 {
        return Err(Error::ZeroAmplitude);
    }
    let record = two_photon_amplitudes(geom_a, geom_b, t1, t2, cfg)?;
    let m = detector_labelled_matrix(&record, true);
    let prob_density = m.norm_squared();
    if !(prob_density > 0.0) {
        return Err(Error::ZeroAmplitude);
    }
    let m = m / C64::new(prob_density.sqrt(), 0.0);
    let svd = m.svd(true, false);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let second = svd.singular_values[order[1]];
    if second > SCHMIDT_TOL {
        return Err(Error::Factorization {
            second_singular_value: second,
        });
    }
    let u = svd.u.as_ref().expect("requested U");
    let lead = u.column(order[0]).into_owned();
    // source factor = u1^dagger M
    let source_row = lead.adjoint() * m;
    let mut pair_amps: [C64; PAIR_DIM] = std::array::from_fn(|i| lead[i]);
    let mut source_amps: [C64; SOURCE_DIM] = std::array::from_fn(|j| source_row[j]);
    let largest = pair_amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if let Some(pivot) = pair_amps.iter().find(|a| a.norm() >= 0.5 * largest) {
        let phase = pivot.conj() / pivot.norm();
        for a in pair_amps.iter_mut() {
            *a *= phase;
        }
        for a in source_amps.iter_mut() {
            *a /= phase;
        }
    }
    Ok(ConditionalPairState {
        pair: PhotonPairState::from_amplitudes(pair_amps).normalized()?,
        source: SourceState::from_amplitudes(source_amps).normalized()?,
        prob_density,
        schmidt_residual: second,
    })
}

/// Closed-form pair state for Alice at `z` and Bob at `(theta, phi)`:
///
/// ```text
/// [ (1 + c)(|B+,A-> - |B-,A+>) + (1 - c)(e^{2i phi}|B+,A+> - e^{-2i phi}|B-,A->) ] / (2 sqrt(1 + c^2))
/// ```
/// with `c = cos(theta)`.
pub fn analytic_pair_state(theta: f64, phi: f64) -> PhotonPairState {
    let c = theta.cos();
    let norm = 2.0 * (1.0 + c * c).sqrt();
    let same = (1.0 - c) / norm;
    let cross = (1.0 + c) / norm;
    PhotonPairState::from_amplitudes([
        C64::from_polar(same, 2.0 * phi),
        C64::new(cross, 0.0),
        C64::new(-cross, 0.0),
        -C64::from_polar(same, -2.0 * phi),
    ])
}

/// Norm distance between the Alice-first and Bob-first joint states after
/// relabelling photons by detector.
pub fn order_symmetry_check(
    geom_a: &EmissionGeometry,
    geom_b: &EmissionGeometry,
    t1: f64,
    t2: f64,
    cfg: &SourcePairConfig,
) -> Result<f64> {
    let alice_first = two_photon_amplitudes(geom_a, geom_b, t1, t2, cfg)?;
    let bob_first = two_photon_amplitudes(geom_b, geom_a, t1, t2, cfg)?;
    let ma = detector_labelled_matrix(&alice_first, true);
    let mb = detector_labelled_matrix(&bob_first, false);
    Ok((ma - mb).norm())
}
