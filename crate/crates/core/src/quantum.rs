//! Pure-state qubit models with ±1-valued observables.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::behavior::Behavior;
use crate::linalg::{inner, norm_sqr, ComplexMatrix};

pub const QUANTUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("observable is not an involution (max |O^2 - I| = {0:e})")]
    NotInvolution(f64),
    #[error("observable is not Hermitian")]
    NotHermitian,
    #[error("observable must be a 2x2 matrix")]
    NotQubit,
    #[error("state has squared norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("state dimension {0} is not 2^parties")]
    Dimension(usize),
    #[error("party {0} appears twice in a correlator")]
    DuplicateParty(usize),
    #[error("party {party} has no setting {setting}")]
    UnknownSetting { party: usize, setting: usize },
    #[error("expectation has imaginary part {0:e}")]
    NotReal(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, QuantumError> {
        let n = amplitudes.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(QuantumError::Dimension(n));
        }
        let norm = norm_sqr(&amplitudes);
        if (norm - 1.0).abs() > QUANTUM_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    /// Computational basis state `|index⟩` on `qubits` qubits.
    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// `(|0…0⟩ + |1…1⟩)/√2`
    pub fn ghz(qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amplitudes[0] = h;
        amplitudes[(1 << qubits) - 1] = h;
        Self { amplitudes }
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, QuantumError> {
        if matrix.rows() != 2 || matrix.cols() != 2 {
            return Err(QuantumError::NotQubit);
        }
        if !matrix.is_hermitian(QUANTUM_TOL) {
            return Err(QuantumError::NotHermitian);
        }
        check_involution(&matrix)?;
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

fn check_involution(m: &ComplexMatrix) -> Result<(), QuantumError> {
    let err = (m * m).distance(&ComplexMatrix::identity(m.rows()));
    if err > QUANTUM_TOL {
        return Err(QuantumError::NotInvolution(err));
    }
    Ok(())
}

/// Spectral projectors `(I ± O)/2` of an involution; the first is the
/// +1 eigenspace (outcome index 0).
pub fn projectors(o: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix), QuantumError> {
    if !o.is_square() {
        return Err(QuantumError::NotQubit);
    }
    check_involution(o)?;
    let id = ComplexMatrix::identity(o.rows());
    Ok(((&id + o).scale_real(0.5), (&id - o).scale_real(0.5)))
}

/// Applies a single-qubit operator to `party` of an n-qubit vector.
/// Party 0 is the most significant bit.
pub(crate) fn apply_local(state: &[Complex64], party: usize, op: &ComplexMatrix) -> Vec<Complex64> {
    let qubits = state.len().trailing_zeros() as usize;
    let bit = 1usize << (qubits - 1 - party);
    let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
    for i in 0..state.len() {
        if i & bit != 0 {
            continue;
        }
        let (a0, a1) = (state[i], state[i | bit]);
        out[i] = op[(0, 0)] * a0 + op[(0, 1)] * a1;
        out[i | bit] = op[(1, 0)] * a0 + op[(1, 1)] * a1;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumModel {
    state: StateVector,
    /// `observables[party][setting]`
    observables: Vec<Vec<Observable>>,
    /// `projectors[party][setting][outcome]`
    projectors: Vec<Vec<[ComplexMatrix; 2]>>,
}

impl QuantumModel {
    pub fn new(state: StateVector, observables: Vec<Vec<Observable>>) -> Result<Self, QuantumError> {
        if state.qubits() != observables.len() {
            return Err(QuantumError::Dimension(state.dimension()));
        }
        let projectors = observables
            .iter()
            .map(|per_party| {
                per_party
                    .iter()
                    .map(|o| projectors(o.matrix()).map(|(p, m)| [p, m]))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { state, observables, projectors })
    }

    pub fn parties(&self) -> usize {
        self.observables.len()
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn observable(&self, party: usize, setting: usize) -> &Observable {
        &self.observables[party][setting]
    }

    pub fn settings(&self) -> Vec<usize> {
        self.observables.iter().map(Vec::len).collect()
    }

    pub(crate) fn projector(&self, party: usize, setting: usize, outcome: usize) -> &ComplexMatrix {
        &self.projectors[party][setting][outcome]
    }

    /// Same state, with the observables of two parties exchanged.
    pub fn with_swapped_observables(&self, p: usize, q: usize) -> Self {
        let mut observables = self.observables.clone();
        observables.swap(p, q);
        Self::new(self.state.clone(), observables).expect("already validated")
    }

    /// `⟨Ψ| ⊗ O_(party,setting) |Ψ⟩` with identity on absent parties.
    pub fn expectation(&self, term: &[(usize, usize)]) -> Result<f64, QuantumError> {
        let mut seen = vec![false; self.parties()];
        let mut v = self.state.amplitudes().to_vec();
        for &(party, setting) in term {
            if party >= self.parties() || setting >= self.observables[party].len() {
                return Err(QuantumError::UnknownSetting { party, setting });
            }
            if std::mem::replace(&mut seen[party], true) {
                return Err(QuantumError::DuplicateParty(party));
            }
            v = apply_local(&v, party, self.observables[party][setting].matrix());
        }
        let value = inner(self.state.amplitudes(), &v);
        if value.im.abs() > QUANTUM_TOL {
            return Err(QuantumError::NotReal(value.im));
        }
        Ok(value.re)
    }

    /// Born-rule behavior `p(o|x) = ⟨Ψ| ⊗ P_{o_i}^{x_i} |Ψ⟩`.
    pub fn behavior(&self) -> Behavior<f64> {
        let n = self.parties();
        let settings = self.settings();
        let b = Behavior::from_fn(settings, vec![2; n], |xs, os| {
            let mut v = self.state.amplitudes().to_vec();
            for party in 0..n {
                v = apply_local(&v, party, self.projector(party, xs[party], os[party]));
            }
            norm_sqr(&v).max(0.0)
        })
        .expect("valid shape");
        debug_assert!(b.validate(&1e-12).is_ok());
        b
    }
}

/// Convenience wrapper matching the module-level operation name.
pub fn behavior_of(m: &QuantumModel) -> Behavior<f64> {
    m.behavior()
}

/// `cos(4π/5) σz − sin(4π/5) σx`
pub fn rotation_u() -> ComplexMatrix {
    let theta = 4.0 * PI / 5.0;
    &ComplexMatrix::sigma_z().scale_real(theta.cos()) - &ComplexMatrix::sigma_x().scale_real(theta.sin())
}

/// The four-qubit state and measurements violating `S <= 7`.
pub fn build_paper_model() -> QuantumModel {
    let amp = |re: f64| Complex64::new(re, 0.0);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 16];
    for (basis, value) in [
        (0b0000, 17.0 / 60.0),
        (0b0011, 1.0 / 3.0),
        (0b0101, -1.0 / 8f64.sqrt()),
        (0b0110, 1.0 / 10.0),
        (0b1000, 1.0 / 4.0),
        (0b1011, -1.0 / 2.0),
        (0b1101, -1.0 / 3.0),
        (0b1110, 1.0 / 2.0),
    ] {
        amplitudes[basis] = amp(value);
    }
    let state = StateVector::new(amplitudes).expect("normalized");

    let x = ComplexMatrix::sigma_x();
    let z = ComplexMatrix::sigma_z();
    let h = ComplexMatrix::hadamard();
    let u = rotation_u();
    let ud = u.adjoint();
    let obs = |m: ComplexMatrix| Observable::new(m).expect("valid observable");

    let a0 = -&(&(&u * &x) * &ud);
    let a1 = &(&u * &z) * &ud;
    let b0 = h.clone();
    let b1 = -&(&(&x * &h) * &x);
    let c0 = z.clone();
    let c1 = -&x;
    let d0 = -&z;
    let d1 = -&x;

    QuantumModel::new(
        state,
        vec![
            vec![obs(a0), obs(a1)],
            vec![obs(b0), obs(b1)],
            vec![obs(c0), obs(c1)],
            vec![obs(d0), obs(d1)],
        ],
    )
    .expect("consistent model")
}
