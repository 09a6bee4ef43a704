//! Dense statevector simulation of one subsystem register.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::ansatz::AnsatzCircuit;
use crate::error::{ForgeError, Result};
use crate::estimator::CliffordOperator;
use crate::pauli::{check_dim, PauliString, PauliSum};

/// Tolerance for norm drift and imaginary residues of Hermitian expectations.
pub const NORM_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Rotation conventions: `Rz(γ) = diag(e^{-iγ/2}, e^{iγ/2})`,
/// `Ry(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`,
/// `Rx(θ) = [[cos θ/2, -i sin θ/2], [-i sin θ/2, cos θ/2]]`, `Phase(φ) = diag(1, e^{iφ})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    Phase { qubit: usize, angle: f64 },
    X { qubit: usize },
    Cnot { control: usize, target: usize },
    Cz { a: usize, b: usize },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::Phase { qubit, .. }
            | Gate::X { qubit } => vec![qubit],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Cz { a, b } => vec![a, b],
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx { qubit, angle } => Gate::Rx { qubit, angle: -angle },
            Gate::Ry { qubit, angle } => Gate::Ry { qubit, angle: -angle },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit, angle: -angle },
            Gate::Phase { qubit, angle } => Gate::Phase { qubit, angle: -angle },
            g => g,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(q) = qs.iter().find(|&&q| q >= n) {
            return Err(ForgeError::arg(format!("gate {self:?} targets qubit {q} on a {n}-qubit register")));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(ForgeError::arg(format!("gate {self:?} has repeated targets")));
        }
        Ok(())
    }

    /// 2x2 matrix `[[a, b], [c, d]]` for single-qubit gates.
    fn single_matrix(&self) -> Option<(usize, [Complex64; 4])> {
        match *self {
            Gate::Rx { qubit, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let ms = Complex64::new(0.0, -s);
                Some((qubit, [Complex64::new(c, 0.0), ms, ms, Complex64::new(c, 0.0)]))
            }
            Gate::Ry { qubit, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                Some((qubit, [Complex64::new(c, 0.0), Complex64::new(-s, 0.0), Complex64::new(s, 0.0), Complex64::new(c, 0.0)]))
            }
            Gate::Rz { qubit, angle } => {
                let e = Complex64::from_polar(1.0, -angle / 2.0);
                Some((qubit, [e, ZERO, ZERO, e.conj()]))
            }
            Gate::Phase { qubit, angle } => Some((qubit, [ONE, ZERO, ZERO, Complex64::from_polar(1.0, angle)])),
            Gate::X { qubit } => Some((qubit, [ZERO, ONE, ONE, ZERO])),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// Computational basis state `|σ⟩`; bit `k` of `index` is `σ_k`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n >= 31 {
            return Err(ForgeError::arg(format!("register size {n} unsupported")));
        }
        let dim = 1usize << n;
        if index >= dim {
            return Err(ForgeError::arg(format!("basis index {index} out of range for {n} qubits")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Statevector { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        check_dim(n, amps.len())?;
        if n == 0 {
            return Err(ForgeError::arg("empty register"));
        }
        Ok(Statevector { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        if let Some((q, m)) = gate.single_matrix() {
            self.apply_single(q, m);
            return;
        }
        match *gate {
            Gate::Cnot { control, target } => {
                let (cm, tm) = (1usize << control, 1usize << target);
                for k in 0..self.amps.len() {
                    if k & cm != 0 && k & tm == 0 {
                        self.amps.swap(k, k | tm);
                    }
                }
            }
            Gate::Cz { a, b } => {
                let m = (1usize << a) | (1usize << b);
                for (k, amp) in self.amps.iter_mut().enumerate() {
                    if k & m == m {
                        *amp = -*amp;
                    }
                }
            }
            _ => unreachable!("single-qubit gates handled above"),
        }
    }

    fn apply_single(&mut self, q: usize, [a, b, c, d]: [Complex64; 4]) {
        let stride = 1usize << q;
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for k in base..base + stride {
                let (u, v) = (self.amps[k], self.amps[k + stride]);
                self.amps[k] = a * u + b * v;
                self.amps[k + stride] = c * u + d * v;
            }
            base += 2 * stride;
        }
    }

    pub fn apply_all<'a, I: IntoIterator<Item = &'a Gate>>(&mut self, gates: I) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    pub fn apply_pauli_sum(&self, op: &PauliSum) -> Result<Statevector> {
        Ok(Statevector { n: self.n, amps: op.apply(&self.amps)? })
    }

    pub fn apply_word(&self, word: &PauliString) -> Result<Statevector> {
        Ok(Statevector { n: self.n, amps: word.apply(&self.amps)? })
    }

    /// `⟨v|O|v⟩` without the Hermiticity check.
    pub(crate) fn expectation_complex(&self, op: &PauliSum) -> Complex64 {
        op.terms().iter().map(|(c, w)| w.expectation_raw(&self.amps) * *c).sum()
    }
}

pub fn basis_state(n: usize, sigma: usize) -> Result<Statevector> {
    Statevector::basis(n, sigma)
}

/// `|+⟩`-style uniform superposition on one qubit, handy in examples.
pub fn plus_state() -> Statevector {
    let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Statevector { n: 1, amps: vec![a, a] }
}

pub fn apply_gate(gate: &Gate, v: &Statevector) -> Result<Statevector> {
    let mut out = v.clone();
    out.apply(gate)?;
    Ok(out)
}

/// `⟨v|O|v⟩` for a Hermitian sum; a non-negligible imaginary part is an error.
pub fn expectation(v: &Statevector, op: &PauliSum) -> Result<f64> {
    if op.n_qubits() != v.n {
        return Err(ForgeError::arg(format!(
            "observable has {} qubits, state has {}",
            op.n_qubits(),
            v.n
        )));
    }
    let e = v.expectation_complex(op);
    if e.im.abs() > NORM_TOL {
        return Err(ForgeError::internal(format!("expectation has imaginary part {:e}", e.im)));
    }
    Ok(e.re)
}

/// `|⟨σ'|U_inv† C U_fwd|σ⟩|²` over all `σ'`, with separate parameter vectors
/// for the forward circuit and the inverse circuit. Both are `ω` in normal use;
/// shifting only one of them isolates one occurrence of each gate.
pub fn conditional_distribution_split(
    sigma: usize,
    circuit: &AnsatzCircuit,
    forward: &[f64],
    inverse: &[f64],
    clifford: &CliffordOperator,
) -> Result<Vec<f64>> {
    if clifford.n_qubits() != circuit.n_qubits() {
        return Err(ForgeError::arg(format!(
            "Clifford acts on {} qubits, circuit on {}",
            clifford.n_qubits(),
            circuit.n_qubits()
        )));
    }
    let state = circuit.run(forward, sigma)?;
    let mut moved = clifford.apply(&state)?;
    circuit.apply_adjoint(inverse, &mut moved)?;
    let probs = moved.probabilities();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(ForgeError::internal(format!("Clifford lost norm: Σp = {total}")));
    }
    Ok(probs)
}

/// `p(σ'|σ) = |⟨σ'|U† C U|σ⟩|²` as a vector indexed by `σ'`.
pub fn conditional_distribution(
    sigma: usize,
    circuit: &AnsatzCircuit,
    params: &[f64],
    clifford: &CliffordOperator,
) -> Result<Vec<f64>> {
    conditional_distribution_split(sigma, circuit, params, params, clifford)
}

/// Draw `shots` outcomes `σ'` i.i.d. from a probability vector.
pub fn sample_distribution<R: Rng + ?Sized>(probs: &[f64], shots: usize, rng: &mut R) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(probs).map_err(|e| ForgeError::internal(format!("bad distribution: {e}")))?;
    Ok((0..shots).map(|_| dist.sample(rng)).collect())
}

/// Z-basis measurement of `U† C U|σ⟩`, repeated `shots` times.
pub fn sample_conditional<R: Rng + ?Sized>(
    sigma: usize,
    circuit: &AnsatzCircuit,
    params: &[f64],
    clifford: &CliffordOperator,
    shots: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if shots == 0 {
        return Err(ForgeError::arg("shots must be at least 1"));
    }
    let probs = conditional_distribution(sigma, circuit, params, clifford)?;
    sample_distribution(&probs, shots, rng)
}
