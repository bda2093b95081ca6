//! Two-source Hilbert space, physical configuration and the small amount of
//! complex linear algebra shared by the other modules.
//!
//! Each source is a Lambda system with ground levels `|0>`, `|1>` and the
//! excited level `|2>`. A two-source state lives in the 9-dimensional product
//! space, indexed as `3 * i1 + i2` with source 1 as the first factor.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use nalgebra::{SMatrix, SVector, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
/// Complex 3-vector (dipole and polarization vectors).
pub type CVec3 = Vector3<C64>;
/// Real 3-vector (propagation directions, source axis).
pub type RVec3 = Vector3<f64>;

pub const SOURCE_DIM: usize = 9;
pub const PAIR_DIM: usize = 4;

const NORM_TOL: f64 = 1e-12;

/// Internal level of a single source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Ground0 = 0,
    Ground1 = 1,
    Excited = 2,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Ground0, Level::Ground1, Level::Excited];
    pub const GROUNDS: [Level; 2] = [Level::Ground0, Level::Ground1];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Level::ALL.get(i).copied()
    }
}

/// Photon polarization label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    Plus,
    Minus,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::Plus, Polarization::Minus];

    pub fn index(self) -> usize {
        match self {
            Polarization::Plus => 0,
            Polarization::Minus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Polarization::Plus => '+',
            Polarization::Minus => '-',
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Index of the product basis state `|i1 i2>`.
pub fn basis_index(i1: Level, i2: Level) -> usize {
    3 * i1.index() + i2.index()
}

/// Levels of both sources for a basis index.
pub fn basis_levels(index: usize) -> (Level, Level) {
    (
        Level::from_index(index / 3).expect("basis index out of range"),
        Level::from_index(index % 3).expect("basis index out of range"),
    )
}

/// Number of excited sources in basis state `index`.
pub fn excitation_number(index: usize) -> usize {
    let (a, b) = basis_levels(index);
    usize::from(a == Level::Excited) + usize::from(b == Level::Excited)
}

/// Hermitian inner product of complex 3-vectors, conjugating the first argument.
pub fn vec3_inner(a: &CVec3, b: &CVec3) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Amplitude vector over the two-source basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceState(SVector<C64, SOURCE_DIM>);

impl SourceState {
    pub fn zero() -> Self {
        SourceState(SVector::zeros())
    }

    pub fn basis(i1: Level, i2: Level) -> Self {
        let mut v = SVector::zeros();
        v[basis_index(i1, i2)] = C64::new(1.0, 0.0);
        SourceState(v)
    }

    /// `|22>`, both sources excited.
    pub fn both_excited() -> Self {
        Self::basis(Level::Excited, Level::Excited)
    }

    pub fn from_amplitudes(amps: [C64; SOURCE_DIM]) -> Self {
        SourceState(SVector::from(amps))
    }

    pub fn from_vector(v: SVector<C64, SOURCE_DIM>) -> Self {
        SourceState(v)
    }

    pub fn vector(&self) -> &SVector<C64, SOURCE_DIM> {
        &self.0
    }

    pub fn amplitude(&self, i1: Level, i2: Level) -> C64 {
        self.0[basis_index(i1, i2)]
    }

    pub fn amplitudes(&self) -> [C64; SOURCE_DIM] {
        let mut out = [C64::new(0.0, 0.0); SOURCE_DIM];
        out.copy_from_slice(self.0.as_slice());
        out
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    /// Returns the state scaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        SourceState(self.0 * factor)
    }

    pub fn add(&self, other: &SourceState) -> Self {
        SourceState(self.0 + other.0)
    }

    pub fn sub(&self, other: &SourceState) -> Self {
        SourceState(self.0 - other.0)
    }

    /// `<22|self>`.
    pub fn excited_pair_amplitude(&self) -> C64 {
        self.amplitude(Level::Excited, Level::Excited)
    }

    /// Squared norm of the component with exactly `n` excited sources.
    pub fn sector_weight(&self, n: usize) -> f64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(i, _)| excitation_number(*i) == n)
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    /// `<phi| n_exc |phi>` (not divided by the norm).
    pub fn excitation_expectation(&self) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, c)| excitation_number(i) as f64 * c.norm_sqr())
            .sum()
    }

    /// True when no source is excited (up to `tol` in squared norm).
    pub fn is_ground(&self, tol: f64) -> bool {
        self.excitation_expectation() <= tol
    }
}

/// Hermitian inner product `<a|b>`, conjugate-linear in `a`.
pub fn inner_product(a: &SourceState, b: &SourceState) -> C64 {
    a.0.dotc(&b.0)
}

/// `|<a|b>|^2 / (<a|a><b|b>)`; global phases and norms drop out.
pub fn fidelity(a: &SourceState, b: &SourceState) -> f64 {
    let den = a.norm_squared() * b.norm_squared();
    if den == 0.0 {
        return 0.0;
    }
    inner_product(a, b).norm_sqr() / den
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DickeKind {
    Symmetric,
    Antisymmetric,
}

/// `(|ij> +- |ji>)/sqrt(2)`.
pub fn dicke_basis_vector(kind: DickeKind, i: Level, j: Level) -> Result<SourceState> {
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "Dicke pair needs distinct levels, got {i:?} twice"
        )));
    }
    let sign = match kind {
        DickeKind::Symmetric => 1.0,
        DickeKind::Antisymmetric => -1.0,
    };
    let mut v = SVector::zeros();
    v[basis_index(i, j)] = C64::new(FRAC_1_SQRT_2, 0.0);
    v[basis_index(j, i)] = C64::new(sign * FRAC_1_SQRT_2, 0.0);
    Ok(SourceState(v))
}

/// The antisymmetric ground state `|a01>`.
pub fn a01() -> SourceState {
    dicke_basis_vector(DickeKind::Antisymmetric, Level::Ground0, Level::Ground1)
        .expect("distinct levels")
}

/// Linear operator on the two-source space.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceOperator(SMatrix<C64, SOURCE_DIM, SOURCE_DIM>);

impl SourceOperator {
    pub fn zero() -> Self {
        SourceOperator(SMatrix::zeros())
    }

    pub fn identity() -> Self {
        SourceOperator(SMatrix::identity())
    }

    pub fn from_matrix(m: SMatrix<C64, SOURCE_DIM, SOURCE_DIM>) -> Self {
        SourceOperator(m)
    }

    pub fn from_diagonal(diag: [C64; SOURCE_DIM]) -> Self {
        SourceOperator(SMatrix::from_diagonal(&SVector::from(diag)))
    }

    pub fn matrix(&self) -> &SMatrix<C64, SOURCE_DIM, SOURCE_DIM> {
        &self.0
    }

    /// `<row|O|col>`.
    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn apply(&self, state: &SourceState) -> SourceState {
        SourceState(self.0 * state.0)
    }

    /// `self * other` (apply `other` first).
    pub fn compose(&self, other: &SourceOperator) -> SourceOperator {
        SourceOperator(self.0 * other.0)
    }

    pub fn adjoint(&self) -> SourceOperator {
        SourceOperator(self.0.adjoint())
    }

    pub fn add(&self, other: &SourceOperator) -> SourceOperator {
        SourceOperator(self.0 + other.0)
    }

    pub fn scaled(&self, factor: C64) -> SourceOperator {
        SourceOperator(self.0 * factor)
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &SourceOperator) -> f64 {
        (self.0 - other.0)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// `<phi|O|phi>`.
    pub fn expectation(&self, state: &SourceState) -> C64 {
        state.0.dotc(&(self.0 * state.0))
    }
}

/// Two-photon polarization state, basis ordered `(B+,A+), (B+,A-), (B-,A+), (B-,A-)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonPairState(SVector<C64, PAIR_DIM>);

impl PhotonPairState {
    pub fn index(bob: Polarization, alice: Polarization) -> usize {
        2 * bob.index() + alice.index()
    }

    pub fn labels() -> [(Polarization, Polarization); PAIR_DIM] {
        use Polarization::*;
        [(Plus, Plus), (Plus, Minus), (Minus, Plus), (Minus, Minus)]
    }

    pub fn from_amplitudes(amps: [C64; PAIR_DIM]) -> Self {
        PhotonPairState(SVector::from(amps))
    }

    pub fn amplitude(&self, bob: Polarization, alice: Polarization) -> C64 {
        self.0[Self::index(bob, alice)]
    }

    pub fn amplitudes(&self) -> [C64; PAIR_DIM] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn probabilities(&self) -> [f64; PAIR_DIM] {
        let n = self.norm_squared();
        self.amplitudes().map(|a| a.norm_sqr() / n)
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(PhotonPairState(self.0 / C64::new(n, 0.0)))
    }

    pub fn inner(&self, other: &PhotonPairState) -> C64 {
        self.0.dotc(&other.0)
    }

    /// Phase-insensitive overlap `|<a|b>|^2/(|a|^2 |b|^2)`.
    pub fn fidelity(&self, other: &PhotonPairState) -> f64 {
        let den = self.norm_squared() * other.norm_squared();
        if den == 0.0 {
            return 0.0;
        }
        self.inner(other).norm_sqr() / den
    }

    /// `(|B+,A-> - |B-,A+>)/sqrt(2)`.
    pub fn singlet() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        PhotonPairState::from_amplitudes([C64::new(0.0, 0.0), h, -h, C64::new(0.0, 0.0)])
    }
}

/// Default `D20 = (1, i, 0)/sqrt(2)`.
pub fn default_dipole20() -> CVec3 {
    CVec3::new(
        C64::new(FRAC_1_SQRT_2, 0.0),
        C64::new(0.0, FRAC_1_SQRT_2),
        C64::new(0.0, 0.0),
    )
}

/// Default `D21 = D20*`.
pub fn default_dipole21() -> CVec3 {
    default_dipole20().map(|c| c.conj())
}

/// Physical parameters of the two-source setup.
///
/// Source 1 sits at `+(d/2) axis`, source 2 at `-(d/2) axis`; only the
/// dimensionless `k0d = k0 |r1 - r2|` and the axis direction enter any
/// observable. The axis defaults to `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePairConfig {
    gamma0: f64,
    gamma1: f64,
    k0d: f64,
    source_axis: RVec3,
    dipole20: CVec3,
    dipole21: CVec3,
    initial_state: SourceState,
}

impl SourcePairConfig {
    /// Default dipoles, `x` axis and initial state `|22>`.
    pub fn new(gamma0: f64, gamma1: f64, k0d: f64) -> Result<Self> {
        let cfg = SourcePairConfig {
            gamma0,
            gamma1,
            k0d,
            source_axis: RVec3::x(),
            dipole20: default_dipole20(),
            dipole21: default_dipole21(),
            initial_state: SourceState::both_excited(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_initial_state(mut self, state: SourceState) -> Result<Self> {
        self.initial_state = state;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dipoles(mut self, dipole20: CVec3, dipole21: CVec3) -> Result<Self> {
        self.dipole20 = dipole20;
        self.dipole21 = dipole21;
        self.validate()?;
        Ok(self)
    }

    pub fn with_source_axis(mut self, axis: RVec3) -> Result<Self> {
        self.source_axis = axis;
        self.validate()?;
        Ok(self)
    }

    pub fn with_k0d(mut self, k0d: f64) -> Result<Self> {
        self.k0d = k0d;
        self.validate()?;
        Ok(self)
    }

    /// Moves the sources so that Alice at `z` and Bob at `(theta_b, phi_b)`
    /// sit on the first plus and minus rings: axis in the `xy` plane at
    /// azimuth `phi_b`, `k0d = pi / sin(theta_b)`.
    pub fn placed_for_bob(self, theta_b: f64, phi_b: f64) -> Result<Self> {
        let s = theta_b.sin();
        if s.abs() < 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "Bob at theta = {theta_b} is parallel to Alice; no source placement separates them"
            )));
        }
        let sign = s.signum();
        let axis = RVec3::new(sign * phi_b.cos(), sign * phi_b.sin(), 0.0);
        self.with_source_axis(axis)?.with_k0d(PI / s.abs())
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma0 must be > 0, got {}", self.gamma0)));
        }
        if !(self.gamma1 > 0.0 && self.gamma1.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma1 must be > 0, got {}", self.gamma1)));
        }
        if !(self.k0d >= 0.0 && self.k0d.is_finite()) {
            return Err(Error::InvalidConfig(format!("k0d must be >= 0, got {}", self.k0d)));
        }
        if (self.source_axis.norm() - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidConfig("source axis must be a unit vector".into()));
        }
        for (name, d) in [("dipole20", &self.dipole20), ("dipole21", &self.dipole21)] {
            let n = vec3_inner(d, d).re.sqrt();
            if (n - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidConfig(format!("{name} must have unit norm, got {n}")));
            }
        }
        if !self.initial_state.is_normalized() {
            return Err(Error::InvalidConfig(format!(
                "initial state must have unit norm, got {}",
                self.initial_state.norm()
            )));
        }
        Ok(())
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    /// Decay rate of the 2-j transition.
    pub fn gamma(&self, ground: Level) -> f64 {
        match ground {
            Level::Ground0 => self.gamma0,
            Level::Ground1 => self.gamma1,
            Level::Excited => panic!("no decay into the excited level"),
        }
    }

    /// `Gamma0 + Gamma1`, the total decay rate of one excited source.
    pub fn total_decay_rate(&self) -> f64 {
        self.gamma0 + self.gamma1
    }

    pub fn k0d(&self) -> f64 {
        self.k0d
    }

    pub fn source_axis(&self) -> &RVec3 {
        &self.source_axis
    }

    pub fn dipole(&self, ground: Level) -> &CVec3 {
        match ground {
            Level::Ground0 => &self.dipole20,
            Level::Ground1 => &self.dipole21,
            Level::Excited => panic!("no dipole for the excited level"),
        }
    }

    pub fn initial_state(&self) -> &SourceState {
        &self.initial_state
    }
}

impl Default for SourcePairConfig {
    /// `Gamma0 = Gamma1 = 1`, `k0d = 2 pi`.
    fn default() -> Self {
        SourcePairConfig::new(1.0, 1.0, 2.0 * PI).expect("valid defaults")
    }
}
