//! Entanglement of the photon pair and exchange-symmetry analysis of source
//! states.

use crate::error::{Error, Result};
use crate::sources::{basis_index, Level, PhotonPairState, Polarization, SourceState};

const NORM_TOL: f64 = 1e-9;

/// Concurrence, mixing parameter and entanglement of formation of a pure
/// two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementReport {
    pub concurrence: f64,
    /// `p = (1 - sqrt(1 - C^2)) / 2`, in `[0, 1/2]`.
    pub p_mix: f64,
    /// Binary entropy of `p_mix`, in bits.
    pub ef: f64,
}

fn check_normalized(pair: &PhotonPairState) -> Result<()> {
    let n = pair.norm();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm: n });
    }
    Ok(())
}

/// `C = 2 |a++ a-- - a+- a-+|`.
pub fn pure_state_concurrence(pair: &PhotonPairState) -> Result<f64> {
    check_normalized(pair)?;
    use Polarization::*;
    let det = pair.amplitude(Plus, Plus) * pair.amplitude(Minus, Minus)
        - pair.amplitude(Plus, Minus) * pair.amplitude(Minus, Plus);
    Ok((2.0 * det.norm()).clamp(0.0, 1.0))
}

/// `-p log2 p - (1 - p) log2 (1 - p)` with `0 log2 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

pub fn entanglement_of_formation(pair: &PhotonPairState) -> Result<EntanglementReport> {
    let concurrence = pure_state_concurrence(pair)?;
    use Polarization::*;
    let det = pair.amplitude(Plus, Plus) * pair.amplitude(Minus, Minus)
        - pair.amplitude(Plus, Minus) * pair.amplitude(Minus, Plus);
    // Bob's reduced density matrix; its eigenvalue gap is well conditioned
    // near C = 1, where sqrt(1 - C^2) is not
    let n = pair.norm_squared();
    let rho_pp = (pair.amplitude(Plus, Plus).norm_sqr() + pair.amplitude(Plus, Minus).norm_sqr()) / n;
    let rho_mm = (pair.amplitude(Minus, Plus).norm_sqr() + pair.amplitude(Minus, Minus).norm_sqr()) / n;
    let rho_pm = (pair.amplitude(Plus, Plus) * pair.amplitude(Minus, Plus).conj()
        + pair.amplitude(Plus, Minus) * pair.amplitude(Minus, Minus).conj())
        / n;
    let gap = ((rho_pp - rho_mm).powi(2) + 4.0 * rho_pm.norm_sqr()).sqrt().min(1.0);
    let largest = 0.5 * (1.0 + gap);
    let p_mix = (det.norm_sqr() / (n * n) / largest).clamp(0.0, 0.5);
    Ok(EntanglementReport {
        concurrence,
        p_mix,
        ef: binary_entropy(p_mix),
    })
}

/// Squared-norm weights of the exchange-symmetric and antisymmetric parts.
pub fn dicke_sector_overlap(state: &SourceState) -> (f64, f64) {
    let v = state.vector();
    let mut sym = 0.0;
    let mut anti = 0.0;
    for (a, i) in Level::ALL.iter().enumerate() {
        sym += v[basis_index(*i, *i)].norm_sqr();
        for j in &Level::ALL[a + 1..] {
            let ij = v[basis_index(*i, *j)];
            let ji = v[basis_index(*j, *i)];
            sym += 0.5 * (ij + ji).norm_sqr();
            anti += 0.5 * (ij - ji).norm_sqr();
        }
    }
    (sym, anti)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{condition_residual, find_detector_rings, ring_direction, Parity};
    use crate::jump::{reset_operator, JumpContext};
    use crate::postselection::analytic_pair_state;
    use crate::sources::{a01, dicke_basis_vector, DickeKind, SourcePairConfig, C64};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn basis_pair(bob: Polarization, alice: Polarization) -> PhotonPairState {
        let mut a = [C64::new(0.0, 0.0); 4];
        a[PhotonPairState::index(bob, alice)] = C64::new(1.0, 0.0);
        PhotonPairState::from_amplitudes(a)
    }

    #[test]
    fn concurrence_examples() {
        assert_abs_diff_eq!(pure_state_concurrence(&PhotonPairState::singlet()).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(pure_state_concurrence(&basis_pair(Polarization::Plus, Polarization::Plus)).unwrap(), 0.0);
        let unnormalized = PhotonPairState::from_amplitudes([C64::new(0.5, 0.0); 4].map(|c| c * 1.1));
        assert!(pure_state_concurrence(&unnormalized).is_err());
    }

    #[test]
    fn ef_examples() {
        assert_abs_diff_eq!(entanglement_of_formation(&analytic_pair_state(0.0, 0.3)).unwrap().ef, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(entanglement_of_formation(&analytic_pair_state(PI / 2.0, 0.0)).unwrap().ef, 0.0, epsilon = 1e-12);
        let r = entanglement_of_formation(&analytic_pair_state(PI / 4.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r.p_mix, 1.0 / 3.0, epsilon = 1e-14);
        // -(1/3) log2(1/3) - (2/3) log2(2/3)
        assert_abs_diff_eq!(r.ef, 0.918_295_834_054_489_6, epsilon = 1e-12);
    }

    #[test]
    fn binary_entropy_edges() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
    }

    #[test]
    fn sector_examples() {
        let (s, a) = dicke_sector_overlap(&a01());
        assert!(s < 1e-30);
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-15);
        assert_eq!(dicke_sector_overlap(&SourceState::both_excited()), (1.0, 0.0));
        let (s, a) = dicke_sector_overlap(&SourceState::basis(Level::Ground0, Level::Ground1));
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-15);
    }

    fn dicke_inputs() -> Vec<(SourceState, bool)> {
        let mut v = Vec::new();
        for (i, j) in [
            (Level::Ground0, Level::Ground1),
            (Level::Ground0, Level::Excited),
            (Level::Ground1, Level::Excited),
        ] {
            v.push((dicke_basis_vector(DickeKind::Symmetric, i, j).unwrap(), true));
            v.push((dicke_basis_vector(DickeKind::Antisymmetric, i, j).unwrap(), false));
        }
        for l in Level::ALL {
            v.push((SourceState::basis(l, l), true));
        }
        v
    }

    #[test]
    fn reset_operators_obey_sector_selection_rules() {
        for k0d in [PI, 2.0 * PI, 11.0] {
            let cfg = SourcePairConfig::new(0.8, 1.2, k0d).unwrap();
            for parity in [Parity::Plus, Parity::Minus] {
                for ring in find_detector_rings(&cfg, parity, 1e-9).unwrap() {
                    for psi in [0.0, 1.0, 2.5] {
                        let geom = ring_direction(&cfg, ring.cos_alpha, psi);
                        assert!(condition_residual(&geom, &cfg, parity) < 1e-9);
                        for pol in Polarization::BOTH {
                            let r = reset_operator(&JumpContext::new(geom.clone(), pol), &cfg);
                            for (input, symmetric) in dicke_inputs() {
                                let (s, a) = dicke_sector_overlap(&r.apply(&input));
                                let keeps = parity == Parity::Plus;
                                let forbidden = if symmetric == keeps { a } else { s };
                                assert!(forbidden < 1e-12, "k0d={k0d} {parity:?} leak {forbidden}");
                            }
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn ef_matches_closed_form(theta in 0.0f64..PI, phi in 0.0f64..6.3) {
            let r = entanglement_of_formation(&analytic_pair_state(theta, phi)).unwrap();
            let c = theta.cos();
            prop_assert!((r.concurrence - 2.0 * c.abs() / (1.0 + c * c)).abs() < 1e-12);
            prop_assert!((r.p_mix - c * c / (1.0 + c * c)).abs() < 1e-13);
            prop_assert!((r.ef - binary_entropy(c * c / (1.0 + c * c))).abs() < 1e-10);
        }

        #[test]
        fn sector_weights_sum_to_norm(re in proptest::collection::vec(-1.0f64..1.0, 18)) {
            let amps: [C64; 9] = std::array::from_fn(|i| C64::new(re[2 * i], re[2 * i + 1]));
            let s = SourceState::from_amplitudes(amps);
            let (a, b) = dicke_sector_overlap(&s);
            prop_assert!((a + b - s.norm_squared()).abs() < 1e-12);
        }
    }
}
