//! Two-photon polarization state algebra.
//!
//! States are 4×4 density matrices over the ordered basis `(HH, HV, VH, VV)`,
//! first letter Alice's photon, second letter Bob's. Measurement settings are
//! electro-optic rotations `|H⟩ → cosθ|H⟩ − i sinθ|V⟩` followed by a
//! polarizing beam splitter, so the measured axis on the Bloch sphere is
//! `cos2θ·Z + sin2θ·Y`.
//!
//! Outcome values: Alice reads `+1` on her H port and `−1` on V, Bob reads
//! `−1` on H and `+1` on V. With the singlet source this gives
//! `E(θa, θb) = cos(2(θa − θb))`, so matched settings are perfectly
//! correlated and the CHSH combination is positive.

mod linalg;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;
use linalg::{Mat2, Mat4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("target fidelity {0} outside [0.25, 1]")]
    FidelityOutOfRange(f64),
    #[error("reference state is not pure (Tr ρ² = {0})")]
    NotPure(f64),
    #[error("matrix is not Hermitian (defect {0})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("not positive semidefinite (minimum eigenvalue {0})")]
    NotPositive(f64),
}

/// Polarization port of a beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Port {
    H = 0,
    V = 1,
}

impl Port {
    pub const BOTH: [Port; 2] = [Port::H, Port::V];

    fn index(self) -> usize {
        self as usize
    }
}

/// Value Alice assigns to a click on `port`.
pub fn alice_value(port: Port) -> i8 {
    match port {
        Port::H => 1,
        Port::V => -1,
    }
}

/// Value Bob assigns to a click on `port`.
pub fn bob_value(port: Port) -> i8 {
    match port {
        Port::H => -1,
        Port::V => 1,
    }
}

/// Outcome bits `(a, b)` for a detection, where bit 0 means value `+1`.
pub fn outcome_bits(port_a: Port, port_b: Port) -> (u8, u8) {
    (
        u8::from(alice_value(port_a) < 0),
        u8::from(bob_value(port_b) < 0),
    )
}

/// Density matrix of the photon pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairState<T> {
    matrix: Mat4<T>,
}

impl<T: Real> PairState<T> {
    /// Validates a raw matrix against the density-matrix invariants.
    pub fn from_matrix(matrix: [[Complex<T>; 4]; 4]) -> Result<Self, QuantumError> {
        let state = PairState { matrix };
        state.check()?;
        Ok(state)
    }

    /// Projector onto a (normalized) pure state with amplitudes over `(HH, HV, VH, VV)`.
    pub fn pure(amplitudes: [Complex<T>; 4]) -> Self {
        let norm = amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt();
        let psi = amplitudes.map(|a| a / norm);
        let mut matrix = linalg::zero4();
        for i in 0..4 {
            for j in 0..4 {
                matrix[i][j] = psi[i] * psi[j].conj();
            }
        }
        PairState { matrix }
    }

    pub fn maximally_mixed() -> Self {
        let quarter = T::lit(0.25);
        let mut matrix = linalg::zero4();
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = Complex::new(quarter, T::zero());
        }
        PairState { matrix }
    }

    pub fn matrix(&self) -> &[[Complex<T>; 4]; 4] {
        &self.matrix
    }

    pub fn trace(&self) -> Complex<T> {
        linalg::trace4(&self.matrix)
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> T {
        linalg::trace4(&linalg::mul4(&self.matrix, &self.matrix)).re
    }

    pub fn is_pure(&self) -> bool {
        (self.purity() - T::one()).abs() <= T::purity_tol()
    }

    /// Spectrum in ascending order.
    pub fn eigenvalues(&self) -> [T; 4] {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    /// Checks hermiticity, unit trace and positivity.
    pub fn check(&self) -> Result<(), QuantumError> {
        let defect = linalg::hermiticity_defect(&self.matrix);
        if defect > T::algebra_tol() {
            return Err(QuantumError::NotHermitian(to_f64(defect)));
        }
        let tr = self.trace();
        if (tr.re - T::one()).abs() > T::algebra_tol() || tr.im.abs() > T::algebra_tol() {
            return Err(QuantumError::BadTrace(to_f64(tr.re)));
        }
        let min = self.eigenvalues()[0];
        if min < -T::psd_tol() {
            return Err(QuantumError::NotPositive(to_f64(min)));
        }
        Ok(())
    }

    /// `p·self + (1 − p)·other`.
    pub fn mix(&self, other: &PairState<T>, p: T) -> PairState<T> {
        let mut matrix = linalg::zero4();
        let q = T::one() - p;
        for i in 0..4 {
            for j in 0..4 {
                matrix[i][j] = self.matrix[i][j] * p + other.matrix[i][j] * q;
            }
        }
        PairState { matrix }
    }
}

fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Single-photon polarization transformation over `(H, V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalUnitary<T> {
    matrix: Mat2<T>,
}

impl<T: Real> LocalUnitary<T> {
    pub fn identity() -> Self {
        let one = Complex::new(T::one(), T::zero());
        let zero = Complex::new(T::zero(), T::zero());
        LocalUnitary {
            matrix: [[one, zero], [zero, one]],
        }
    }

    /// Wraps a raw matrix, returning `None` unless `U·U† = I` within tolerance.
    pub fn from_matrix(matrix: [[Complex<T>; 2]; 2]) -> Option<Self> {
        let u = LocalUnitary { matrix };
        u.is_unitary().then_some(u)
    }

    pub fn matrix(&self) -> &[[Complex<T>; 2]; 2] {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        LocalUnitary {
            matrix: linalg::adjoint2(&self.matrix),
        }
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn then_after(&self, other: &LocalUnitary<T>) -> Self {
        LocalUnitary {
            matrix: linalg::mul2(&self.matrix, &other.matrix),
        }
    }

    pub fn is_unitary(&self) -> bool {
        let p = linalg::mul2(&self.matrix, &linalg::adjoint2(&self.matrix));
        (0..2).all(|i| {
            (0..2).all(|j| {
                let expected = if i == j { T::one() } else { T::zero() };
                (p[i][j] - Complex::new(expected, T::zero())).norm() <= T::algebra_tol()
            })
        })
    }
}

/// Born-rule outcome probabilities indexed by `(port_a, port_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistribution<T> {
    p: [[T; 2]; 2],
}

impl<T: Real> OutcomeDistribution<T> {
    pub fn get(&self, port_a: Port, port_b: Port) -> T {
        self.p[port_a.index()][port_b.index()]
    }

    pub fn total(&self) -> T {
        self.p.iter().flatten().fold(T::zero(), |a, &b| a + b)
    }

    /// `p_HH + p_VV − p_HV − p_VH`, independent of the value convention.
    pub fn raw_correlation(&self) -> T {
        self.p[0][0] + self.p[1][1] - self.p[0][1] - self.p[1][0]
    }

    /// Expectation of the product of the two parties' values.
    pub fn correlation(&self) -> T {
        let mut e = T::zero();
        for a in Port::BOTH {
            for b in Port::BOTH {
                let sign = alice_value(a) * bob_value(b);
                e += T::lit(f64::from(sign)) * self.get(a, b);
            }
        }
        e
    }

    /// Probability that Alice clicks on `port`, summed over Bob.
    pub fn marginal_a(&self, port: Port) -> T {
        self.p[port.index()][0] + self.p[port.index()][1]
    }

    pub fn marginal_b(&self, port: Port) -> T {
        self.p[0][port.index()] + self.p[1][port.index()]
    }

    /// Flattened `[HH, HV, VH, VV]`.
    pub fn as_array(&self) -> [T; 4] {
        [self.p[0][0], self.p[0][1], self.p[1][0], self.p[1][1]]
    }
}

/// `(|HV⟩ + e^{iφ}|VH⟩)/√2`.
pub fn ideal_pair_state<T: Real>(phi: T) -> PairState<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let phase = Complex::new(phi.cos(), phi.sin());
    PairState::pure([zero, one, phase, zero])
}

/// Isotropic mixture `p·target + (1 − p)·I/4` with `p = (4F − 1)/3`, so that
/// the overlap with `target` is exactly `fidelity_goal`.
pub fn werner_mix<T: Real>(
    target: &PairState<T>,
    fidelity_goal: T,
) -> Result<PairState<T>, QuantumError> {
    let quarter = T::lit(0.25);
    if !(fidelity_goal >= quarter && fidelity_goal <= T::one()) {
        return Err(QuantumError::FidelityOutOfRange(to_f64(fidelity_goal)));
    }
    if !target.is_pure() {
        return Err(QuantumError::NotPure(to_f64(target.purity())));
    }
    let p = werner_parameter(fidelity_goal);
    Ok(target.mix(&PairState::maximally_mixed(), p))
}

/// Werner mixing weight giving fidelity `f` with the pure component.
pub fn werner_parameter<T: Real>(f: T) -> T {
    (T::lit(4.0) * f - T::one()) / T::lit(3.0)
}

/// Fidelity `(3p + 1)/4` of a Werner state with weight `p`.
pub fn werner_fidelity<T: Real>(p: T) -> T {
    (T::lit(3.0) * p + T::one()) / T::lit(4.0)
}

/// Electro-optic rotation `[[cosθ, −i sinθ], [−i sinθ, cosθ]]`.
pub fn eom_unitary<T: Real>(theta: T) -> LocalUnitary<T> {
    let c = Complex::new(theta.cos(), T::zero());
    let s = Complex::new(T::zero(), -theta.sin());
    LocalUnitary {
        matrix: [[c, s], [s, c]],
    }
}

/// Linear retarder aligned with H/V: `diag(e^{−iβ}, e^{iβ})`.
pub fn phase_retarder<T: Real>(beta: T) -> LocalUnitary<T> {
    let zero = Complex::new(T::zero(), T::zero());
    LocalUnitary {
        matrix: [
            [Complex::new(beta.cos(), -beta.sin()), zero],
            [zero, Complex::new(beta.cos(), beta.sin())],
        ],
    }
}

/// `(ua ⊗ ub)·ρ·(ua ⊗ ub)†`.
pub fn apply_local<T: Real>(
    state: &PairState<T>,
    ua: &LocalUnitary<T>,
    ub: &LocalUnitary<T>,
) -> PairState<T> {
    let u = linalg::kron(&ua.matrix, &ub.matrix);
    let matrix = linalg::mul4(&linalg::mul4(&u, &state.matrix), &linalg::adjoint4(&u));
    PairState { matrix }
}

/// Detection probabilities after rotating Alice by `theta_a` and Bob by `theta_b`.
pub fn born_probabilities<T: Real>(
    state: &PairState<T>,
    theta_a: T,
    theta_b: T,
) -> OutcomeDistribution<T> {
    let rotated = apply_local(state, &eom_unitary(theta_a), &eom_unitary(theta_b));
    let mut p = [[T::zero(); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            p[a][b] = rotated.matrix[2 * a + b][2 * a + b]
                .re
                .max(T::zero())
                .min(T::one());
        }
    }
    OutcomeDistribution { p }
}

/// `⟨Ψ|ρ|Ψ⟩` for a pure `target = |Ψ⟩⟨Ψ|`, computed as `Re Tr(target·ρ)`.
pub fn fidelity<T: Real>(state: &PairState<T>, target: &PairState<T>) -> Result<T, QuantumError> {
    if !target.is_pure() {
        return Err(QuantumError::NotPure(to_f64(target.purity())));
    }
    let overlap = linalg::trace4(&linalg::mul4(&target.matrix, &state.matrix)).re;
    Ok(overlap.max(T::zero()).min(T::one()))
}

/// Analyzer angles for the CHSH combination, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshAngles<T> {
    pub a1: T,
    pub a2: T,
    pub b1: T,
    pub b2: T,
}

impl<T: Real> ChshAngles<T> {
    /// Alice at 0°/45°, Bob at 22.5°/67.5°.
    pub fn standard() -> Self {
        let deg = T::PI() / T::lit(180.0);
        ChshAngles {
            a1: T::zero(),
            a2: T::lit(45.0) * deg,
            b1: T::lit(22.5) * deg,
            b2: T::lit(67.5) * deg,
        }
    }

    /// The four `(θa, θb, sign)` terms of `S`.
    pub fn terms(&self) -> [(T, T, T); 4] {
        [
            (self.a1, self.b1, T::one()),
            (self.a2, self.b1, T::one()),
            (self.a2, self.b2, T::one()),
            (self.a1, self.b2, -T::one()),
        ]
    }
}

/// `S = E(a1,b1) + E(a2,b1) + E(a2,b2) − E(a1,b2)` from exact Born probabilities.
pub fn chsh_analytic<T: Real>(state: &PairState<T>, angles: &ChshAngles<T>) -> T {
    angles
        .terms()
        .iter()
        .fold(T::zero(), |acc, &(ta, tb, sign)| {
            acc + sign * born_probabilities(state, ta, tb).correlation()
        })
}
