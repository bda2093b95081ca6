//! Reset operators, conditional (no-photon) evolution and the directional
//! emission density of the two-source system.
//!
//! For a photon with direction `k` and polarization `lambda`,
//!
//! ```text
//! R = sum_{i,j} sqrt(3 Gamma_j / 8 pi) (D_2j, eps_{k lambda}) e^{-i k0 k.r_i} |j>_i <2|
//! ```
//!
//! and `||R |phi>||^2` is the emission density per unit time and solid angle.
//! Between emissions the state evolves with the diagonal non-Hermitian
//! `H_cond = -(i/2)(Gamma0 + Gamma1) sum_i |2>_i <2|`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{relative_phase, EmissionGeometry};
use crate::quadrature::DirectionRule;
use crate::sources::{
    basis_index, excitation_number, vec3_inner, Level, Polarization, RVec3, SourceOperator, SourcePairConfig,
    SourceState, C64, SOURCE_DIM,
};

/// Direction and polarization indexing one reset operator.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpContext {
    pub geometry: EmissionGeometry,
    pub polarization: Polarization,
}

impl JumpContext {
    pub fn new(geometry: EmissionGeometry, polarization: Polarization) -> Self {
        JumpContext { geometry, polarization }
    }
}

/// Amplitude prefactor `sqrt(3 Gamma_j / 8 pi)`.
pub fn channel_amplitude(cfg: &SourcePairConfig, ground: Level) -> f64 {
    (3.0 * cfg.gamma(ground) / (8.0 * PI)).sqrt()
}

/// The four complex coefficients of one reset operator, indexed
/// `[source][ground level]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetCoefficients {
    coeff: [[C64; 2]; 2],
}

impl ResetCoefficients {
    pub fn new(ctx: &JumpContext, cfg: &SourcePairConfig) -> Self {
        let delta = relative_phase(ctx.geometry.direction(), cfg);
        // r1 = +(d/2) axis, r2 = -(d/2) axis
        let phases = [C64::from_polar(1.0, -delta / 2.0), C64::from_polar(1.0, delta / 2.0)];
        let eps = ctx.geometry.polarization_vector(ctx.polarization);
        let mut coeff = [[C64::new(0.0, 0.0); 2]; 2];
        for (src, phase) in phases.iter().enumerate() {
            for ground in Level::GROUNDS {
                let overlap = vec3_inner(cfg.dipole(ground), eps);
                coeff[src][ground.index()] = overlap * phase * channel_amplitude(cfg, ground);
            }
        }
        ResetCoefficients { coeff }
    }

    pub fn get(&self, source: usize, ground: Level) -> C64 {
        self.coeff[source][ground.index()]
    }

    /// `R |phi>` without materializing the 9x9 matrix.
    pub fn apply(&self, state: &SourceState) -> SourceState {
        let mut out = [C64::new(0.0, 0.0); SOURCE_DIM];
        for other in Level::ALL {
            let from1 = state.amplitude(Level::Excited, other);
            let from2 = state.amplitude(other, Level::Excited);
            for ground in Level::GROUNDS {
                out[basis_index(ground, other)] += self.coeff[0][ground.index()] * from1;
                out[basis_index(other, ground)] += self.coeff[1][ground.index()] * from2;
            }
        }
        SourceState::from_amplitudes(out)
    }

    pub fn to_operator(&self) -> SourceOperator {
        let mut m = nalgebra::SMatrix::<C64, SOURCE_DIM, SOURCE_DIM>::zeros();
        for other in Level::ALL {
            for ground in Level::GROUNDS {
                m[(basis_index(ground, other), basis_index(Level::Excited, other))] += self.coeff[0][ground.index()];
                m[(basis_index(other, ground), basis_index(other, Level::Excited))] += self.coeff[1][ground.index()];
            }
        }
        SourceOperator::from_matrix(m)
    }
}

/// `R_{k, lambda}` as a 9x9 operator.
pub fn reset_operator(ctx: &JumpContext, cfg: &SourcePairConfig) -> SourceOperator {
    ResetCoefficients::new(ctx, cfg).to_operator()
}

/// `H_cond`, diagonal with entry `-(i/2)(Gamma0 + Gamma1) n_exc`.
pub fn conditional_hamiltonian(cfg: &SourcePairConfig) -> SourceOperator {
    let g = cfg.total_decay_rate();
    SourceOperator::from_diagonal(std::array::from_fn(|i| {
        C64::new(0.0, -0.5 * g * excitation_number(i) as f64)
    }))
}

fn damping_factors(t: f64, cfg: &SourcePairConfig) -> [f64; 3] {
    let g = cfg.total_decay_rate();
    [1.0, (-0.5 * g * t).exp(), (-g * t).exp()]
}

/// `U_cond(t, 0) = exp(-i H_cond t)` in closed form.
pub fn ucond(t: f64, cfg: &SourcePairConfig) -> Result<SourceOperator> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("evolution time must be >= 0, got {t}")));
    }
    let f = damping_factors(t, cfg);
    Ok(SourceOperator::from_diagonal(std::array::from_fn(|i| {
        C64::new(f[excitation_number(i)], 0.0)
    })))
}

/// `U_cond(t, 0) |phi>` without building the operator.
pub fn evolve_no_jump(t: f64, cfg: &SourcePairConfig, state: &SourceState) -> Result<SourceState> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("evolution time must be >= 0, got {t}")));
    }
    let f = damping_factors(t, cfg);
    let mut amps = state.amplitudes();
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= f[excitation_number(i)];
    }
    Ok(SourceState::from_amplitudes(amps))
}

/// `||R_{k,+} phi||^2` and `||R_{k,-} phi||^2`.
pub fn emission_density(state: &SourceState, geom: &EmissionGeometry, cfg: &SourcePairConfig) -> (f64, f64) {
    let [p, m] = Polarization::BOTH.map(|pol| {
        let ctx = JumpContext::new(geom.clone(), pol);
        ResetCoefficients::new(&ctx, cfg).apply(state).norm_squared()
    });
    (p, m)
}

/// Total emission rate, `sum_lambda int ||R phi||^2 dOmega`, by quadrature.
pub fn emission_rate_quadrature(state: &SourceState, cfg: &SourcePairConfig, rule: &DirectionRule) -> f64 {
    rule.integrate(|k| {
        let geom = crate::geometry::geometry_from_direction(k).expect("unit node");
        let (p, m) = emission_density(state, &geom, cfg);
        p + m
    })
}

/// Rate implied by `H_cond`: `(Gamma0 + Gamma1) <n_exc>`.
pub fn no_jump_decay_rate(state: &SourceState, cfg: &SourcePairConfig) -> f64 {
    cfg.total_decay_rate() * state.excitation_expectation()
}

/// `int dOmega (delta_ab - k_a k_b) e^{i x k.n}` for unit `n`.
fn transverse_plane_wave_tensor(x: f64, n: &RVec3) -> nalgebra::Matrix3<f64> {
    let (f1, f2) = if x.abs() < 1e-3 {
        let x2 = x * x;
        (1.0 - x2 / 6.0 + x2 * x2 / 120.0, -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0)
    } else {
        let (s, c) = x.sin_cos();
        (s / x, c / (x * x) - s / (x * x * x))
    };
    let id = nalgebra::Matrix3::<f64>::identity();
    let nn = n * n.transpose();
    ((id - nn) * f1 + (id - nn * 3.0) * f2) * (4.0 * PI)
}

/// Exact total emission rate including the interference between the two
/// sources' emission paths.
///
/// The direct terms give `(Gamma0 + Gamma1) <n_exc>`. Components `|2 j'>` and
/// `|j 2>` both decay into `|j j'>` and interfere; after angular integration
/// that cross term is proportional to the collective decay kernel at optical
/// distance `k0d`. `H_cond` omits it, so the two rates agree only when no
/// such pair of components is populated or in the limit `k0d -> infinity`.
pub fn collective_emission_rate(state: &SourceState, cfg: &SourcePairConfig) -> f64 {
    let tensor = transverse_plane_wave_tensor(cfg.k0d(), cfg.source_axis()).map(|v| C64::new(v, 0.0));
    let mut cross = C64::new(0.0, 0.0);
    for j in Level::GROUNDS {
        for jp in Level::GROUNDS {
            let amp = state.amplitude(Level::Excited, jp).conj() * state.amplitude(j, Level::Excited);
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            let kernel = vec3_inner(cfg.dipole(jp), &(tensor * cfg.dipole(j)));
            cross += amp * kernel * channel_amplitude(cfg, j) * channel_amplitude(cfg, jp);
        }
    }
    no_jump_decay_rate(state, cfg) + 2.0 * cross.re
}

/// Hermitian operator whose expectation value is [`collective_emission_rate`].
pub fn total_emission_operator(cfg: &SourcePairConfig) -> SourceOperator {
    let tensor = transverse_plane_wave_tensor(cfg.k0d(), cfg.source_axis()).map(|v| C64::new(v, 0.0));
    let g = cfg.total_decay_rate();
    let mut m = nalgebra::SMatrix::<C64, SOURCE_DIM, SOURCE_DIM>::zeros();
    for i in 0..SOURCE_DIM {
        m[(i, i)] = C64::new(g * excitation_number(i) as f64, 0.0);
    }
    let mut cross = nalgebra::SMatrix::<C64, SOURCE_DIM, SOURCE_DIM>::zeros();
    for j in Level::GROUNDS {
        for jp in Level::GROUNDS {
            let kernel = vec3_inner(cfg.dipole(jp), &(tensor * cfg.dipole(j)));
            cross[(basis_index(Level::Excited, jp), basis_index(j, Level::Excited))] +=
                kernel * channel_amplitude(cfg, j) * channel_amplitude(cfg, jp);
        }
    }
    SourceOperator::from_matrix(m + cross + cross.adjoint())
}

/// `sum_lambda sum_nodes w R^dagger R`, the emission operator integrated over
/// the directions of `rule`. Its expectation value in a state is the emission
/// rate into those directions.
pub fn integrated_emission_operator(cfg: &SourcePairConfig, rule: &DirectionRule) -> SourceOperator {
    let mut acc = nalgebra::SMatrix::<C64, SOURCE_DIM, SOURCE_DIM>::zeros();
    for (k, w) in rule.points() {
        let geom = crate::geometry::geometry_from_direction(k).expect("unit node");
        for pol in Polarization::BOTH {
            let r = ResetCoefficients::new(&JumpContext::new(geom.clone(), pol), cfg).to_operator();
            acc += r.matrix().adjoint() * r.matrix() * C64::new(*w, 0.0);
        }
    }
    // enforce exact Hermiticity
    let herm = (acc + acc.adjoint()) * C64::new(0.5, 0.0);
    SourceOperator::from_matrix(herm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{condition_residual, geometry_from_spherical, ring_direction, Parity};
    use crate::quadrature::default_sphere_rule;
    use crate::sources::{dicke_basis_vector, DickeKind};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn alice_z() -> EmissionGeometry {
        geometry_from_spherical(0.0, 0.0)
    }

    #[test]
    fn total_emission_operator_matches_quadrature() {
        let rule = default_sphere_rule();
        for (k0d, axis) in [(2.0 * PI, RVec3::x()), (4.1, RVec3::new(0.6, 0.0, 0.8)), (0.0005, RVec3::y())] {
            let cfg = SourcePairConfig::new(0.6, 1.4, k0d).unwrap().with_source_axis(axis).unwrap();
            let exact = total_emission_operator(&cfg);
            let quad = integrated_emission_operator(&cfg, &rule);
            assert!(exact.max_abs_diff(&quad) < 1e-10, "k0d = {k0d}: {}", exact.max_abs_diff(&quad));
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
            let phi = random_state(&mut rng);
            let via_op = exact.expectation(&phi).re;
            assert_abs_diff_eq!(via_op, collective_emission_rate(&phi, &cfg), epsilon = 1e-12);
        }
    }

    #[test]
    fn reset_on_both_excited_at_alice() {
        let cfg = SourcePairConfig::default();
        let ctx = JumpContext::new(alice_z(), Polarization::Plus);
        let out = reset_operator(&ctx, &cfg).apply(&SourceState::both_excited());
        let c = (3.0 * cfg.gamma0() / (8.0 * PI)).sqrt();
        let mut expected = [C64::new(0.0, 0.0); SOURCE_DIM];
        expected[basis_index(Level::Ground0, Level::Excited)] = C64::new(c, 0.0);
        expected[basis_index(Level::Excited, Level::Ground0)] = C64::new(c, 0.0);
        let expected = SourceState::from_amplitudes(expected);
        assert!(out.sub(&expected).norm() < 1e-15);
        let s02 = dicke_basis_vector(DickeKind::Symmetric, Level::Ground0, Level::Excited).unwrap();
        let c2 = (3.0 * cfg.gamma0() / (4.0 * PI)).sqrt();
        assert!(out.sub(&s02.scaled(C64::new(c2, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn matrix_and_direct_application_agree() {
        let cfg = SourcePairConfig::new(0.7, 1.9, 5.3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let geom = geometry_from_spherical(rng.random::<f64>() * PI, rng.random::<f64>() * 6.0);
            let phi = random_state(&mut rng);
            for pol in Polarization::BOTH {
                let ctx = JumpContext::new(geom.clone(), pol);
                let coeffs = ResetCoefficients::new(&ctx, &cfg);
                let a = coeffs.apply(&phi);
                let b = coeffs.to_operator().apply(&phi);
                assert!(a.sub(&b).norm() < 1e-14);
            }
        }
    }

    pub(crate) fn random_state(rng: &mut impl Rng) -> SourceState {
        let amps: [C64; SOURCE_DIM] =
            std::array::from_fn(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        SourceState::from_amplitudes(amps).normalized().unwrap()
    }

    #[test]
    fn ground_states_do_not_emit() {
        let cfg = SourcePairConfig::default();
        let geom = geometry_from_spherical(1.2, 0.4);
        for a in Level::GROUNDS {
            for b in Level::GROUNDS {
                let s = SourceState::basis(a, b);
                for pol in Polarization::BOTH {
                    let r = reset_operator(&JumpContext::new(geom.clone(), pol), &cfg);
                    assert_eq!(r.apply(&s).norm(), 0.0);
                }
                assert_eq!(emission_density(&s, &geom, &cfg), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn single_excited_source_total_rate() {
        let cfg = SourcePairConfig::new(0.8, 1.7, 2.0 * PI).unwrap();
        let s = SourceState::basis(Level::Excited, Level::Ground0);
        let rate = emission_rate_quadrature(&s, &cfg, &default_sphere_rule());
        assert!((rate - 2.5).abs() / 2.5 < 1e-10, "{rate}");
    }

    #[test]
    fn conditional_hamiltonian_entries() {
        let cfg = SourcePairConfig::new(0.3, 0.9, 1.0).unwrap();
        let h = conditional_hamiltonian(&cfg);
        let i22 = basis_index(Level::Excited, Level::Excited);
        let i01 = basis_index(Level::Ground0, Level::Ground1);
        let i20 = basis_index(Level::Excited, Level::Ground0);
        assert_abs_diff_eq!(h.entry(i22, i22).im, -1.2, epsilon = 1e-15);
        assert_eq!(h.entry(i01, i01), C64::new(0.0, 0.0));
        assert_abs_diff_eq!(h.entry(i20, i20).im, -0.6, epsilon = 1e-15);
        assert_eq!(h.entry(i22, i20), C64::new(0.0, 0.0));
    }

    #[test]
    fn ucond_examples() {
        let cfg = SourcePairConfig::new(0.3, 0.9, 1.0).unwrap();
        let t = 0.77;
        let u = ucond(t, &cfg).unwrap();
        let s22 = u.apply(&SourceState::both_excited());
        assert_abs_diff_eq!(s22.norm_squared(), (-2.0 * 1.2 * t).exp(), epsilon = 1e-15);
        let s01 = SourceState::basis(Level::Ground0, Level::Ground1);
        assert_eq!(u.apply(&s01), s01);
        let (t1, t2) = (0.31, 1.45);
        let lhs = ucond(t1, &cfg).unwrap().compose(&ucond(t2, &cfg).unwrap());
        assert!(lhs.max_abs_diff(&ucond(t1 + t2, &cfg).unwrap()) < 1e-15);
        assert!(ucond(-1e-3, &cfg).is_err());
    }

    #[test]
    fn ucond_matches_series_exponential_of_hcond() {
        // exp(-i H t) by truncated Taylor series as an independent route
        let cfg = SourcePairConfig::new(0.5, 0.25, 1.0).unwrap();
        let t = 0.9;
        let minus_i_h_t = conditional_hamiltonian(&cfg).scaled(C64::new(0.0, -t));
        let mut term = SourceOperator::identity();
        let mut sum = SourceOperator::identity();
        for n in 1..40 {
            term = term.compose(&minus_i_h_t).scaled(C64::new(1.0 / n as f64, 0.0));
            sum = sum.add(&term);
        }
        assert!(sum.max_abs_diff(&ucond(t, &cfg).unwrap()) < 1e-14);
    }

    #[test]
    fn alice_constructive_interference() {
        let cfg = SourcePairConfig::default();
        let (p, m) = emission_density(&SourceState::both_excited(), &alice_z(), &cfg);
        assert_abs_diff_eq!(p, 2.0 * 3.0 * cfg.gamma0() / (8.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(m, 2.0 * 3.0 * cfg.gamma1() / (8.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn symmetric_state_is_dark_at_bob_on_the_shared_channel() {
        // |s02> decays to |00> from both sources; at a minus-parity direction
        // the phases are e^{-i pi/2} and e^{+i pi/2} and the |00> amplitude cancels.
        let cfg = SourcePairConfig::default();
        let bob = ring_direction(&cfg, 0.5, 0.0);
        assert!(condition_residual(&bob, &cfg, Parity::Minus) < 1e-14);
        let s02 = dicke_basis_vector(DickeKind::Symmetric, Level::Ground0, Level::Excited).unwrap();
        let ctx = JumpContext::new(bob, Polarization::Plus);
        let out = ResetCoefficients::new(&ctx, &cfg).apply(&s02);
        assert!(out.amplitude(Level::Ground0, Level::Ground0).norm() < 1e-15);
    }

    #[test]
    fn collective_rate_matches_quadrature() {
        let rule = default_sphere_rule();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for cfg in [
            SourcePairConfig::default(),
            SourcePairConfig::new(0.4, 1.3, 0.2).unwrap(),
            SourcePairConfig::new(1.0, 2.0, 9.1)
                .unwrap()
                .with_source_axis(RVec3::new(0.0, 0.6, 0.8))
                .unwrap(),
        ] {
            for _ in 0..5 {
                let phi = random_state(&mut rng);
                let q = emission_rate_quadrature(&phi, &cfg, &rule);
                let exact = collective_emission_rate(&phi, &cfg);
                assert!((q - exact).abs() < 1e-10 * exact.max(1.0), "{q} vs {exact}");
            }
        }
    }

    #[test]
    fn sum_rule_holds_without_interfering_components() {
        let cfg = SourcePairConfig::new(0.6, 1.1, 2.0 * PI).unwrap();
        let rule = default_sphere_rule();
        let amps = |pairs: &[((Level, Level), C64)]| {
            let mut a = [C64::new(0.0, 0.0); SOURCE_DIM];
            for ((x, y), c) in pairs {
                a[basis_index(*x, *y)] = *c;
            }
            SourceState::from_amplitudes(a).normalized().unwrap()
        };
        use Level::*;
        let states = [
            SourceState::both_excited(),
            SourceState::basis(Excited, Ground1),
            amps(&[((Excited, Excited), C64::new(0.3, 0.1)), ((Ground0, Ground1), C64::new(-0.2, 0.5))]),
            amps(&[((Excited, Ground0), C64::new(0.7, 0.0)), ((Excited, Ground1), C64::new(0.0, 0.4))]),
        ];
        for phi in states {
            let q = emission_rate_quadrature(&phi, &cfg, &rule);
            let nominal = no_jump_decay_rate(&phi, &cfg);
            assert!((q - nominal).abs() / nominal < 1e-10);
            // d/dt ||U(t) phi||^2 at t = 0: Richardson-extrapolated forward difference
            let h = 1e-5;
            let s = |t: f64| evolve_no_jump(t, &cfg, &phi).unwrap().norm_squared();
            let d1 = (s(h) - s(0.0)) / h;
            let d2 = (s(2.0 * h) - s(0.0)) / (2.0 * h);
            let richardson = 2.0 * d1 - d2;
            assert!((richardson + q).abs() / q < 1e-6, "{richardson} vs {q}");
        }
    }

    #[test]
    fn integrated_operator_reproduces_rate() {
        let cfg = SourcePairConfig::new(0.9, 1.4, 3.3).unwrap();
        let rule = DirectionRule::sphere(32, 64);
        let q = integrated_emission_operator(&cfg, &rule);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let phi = random_state(&mut rng);
            let via_op = q.expectation(&phi);
            assert!(via_op.im.abs() < 1e-12);
            assert!((via_op.re - emission_rate_quadrature(&phi, &cfg, &rule)).abs() < 1e-12);
        }
        // block diagonal in the excitation number
        for r in 0..SOURCE_DIM {
            for c in 0..SOURCE_DIM {
                if excitation_number(r) != excitation_number(c) {
                    assert!(q.entry(r, c).norm() < 1e-14);
                }
            }
        }
    }
}
