//! Clifford pairs `C_{αβ} = ½(I + (-1)^α O_A + (-1)^β O_B - (-1)^{α+β} O_A O_B)`
//! and the coefficients expressing `O_A⊗O_B + O_B⊗O_A` through them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::pauli::{check_dense, Pauli, PauliString};
use crate::simulator::{Gate, Statevector};

/// Reconstruction tolerance for [`solve_coefficients`].
pub const DECOMPOSITION_TOL: f64 = 1e-10;

/// Bound check slack on the solved coefficients.
const COEFF_BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CliffordOperator {
    alpha: u8,
    beta: u8,
    op_a: PauliString,
    op_b: PauliString,
    /// The four weighted words of the projector combination.
    terms: [(f64, PauliString); 4],
}

fn sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_pair(op_a: &PauliString, op_b: &PauliString) -> Result<()> {
    if op_a.n_qubits() != op_b.n_qubits() {
        return Err(ForgeError::arg(format!(
            "size mismatch: {} vs {} qubits",
            op_a.n_qubits(),
            op_b.n_qubits()
        )));
    }
    for w in [op_a, op_b] {
        if !w.is_hermitian() {
            return Err(ForgeError::arg(format!("{w} is not Hermitian")));
        }
    }
    if !op_a.commutes_with(op_b)? {
        return Err(ForgeError::arg(format!("{op_a} and {op_b} do not commute")));
    }
    Ok(())
}

pub fn build_clifford(op_a: &PauliString, op_b: &PauliString, alpha: u8, beta: u8) -> Result<CliffordOperator> {
    if alpha > 1 || beta > 1 {
        return Err(ForgeError::arg(format!("α, β must be 0 or 1, got ({alpha}, {beta})")));
    }
    check_pair(op_a, op_b)?;
    let (sa, sb) = (sign(alpha), sign(beta));
    let product = op_a.mul(op_b)?;
    let terms = [
        (0.5, PauliString::identity(op_a.n_qubits())?),
        (0.5 * sa, op_a.clone()),
        (0.5 * sb, op_b.clone()),
        (-0.5 * sa * sb, product),
    ];
    Ok(CliffordOperator { alpha, beta, op_a: op_a.clone(), op_b: op_b.clone(), terms })
}

impl CliffordOperator {
    pub fn n_qubits(&self) -> usize {
        self.op_a.n_qubits()
    }

    pub fn alpha(&self) -> u8 {
        self.alpha
    }

    pub fn beta(&self) -> u8 {
        self.beta
    }

    pub fn op_a(&self) -> &PauliString {
        &self.op_a
    }

    pub fn op_b(&self) -> &PauliString {
        &self.op_b
    }

    pub fn terms(&self) -> &[(f64, PauliString); 4] {
        &self.terms
    }

    pub fn is_diagonal(&self) -> bool {
        self.op_a.is_diagonal() && self.op_b.is_diagonal()
    }

    pub(crate) fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for (c, w) in &self.terms {
            w.apply_add(Complex64::new(*c, 0.0), v, out);
        }
    }

    pub fn apply(&self, state: &Statevector) -> Result<Statevector> {
        if state.n_qubits() != self.n_qubits() {
            return Err(ForgeError::arg(format!(
                "Clifford acts on {} qubits, state has {}",
                self.n_qubits(),
                state.n_qubits()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); state.amplitudes().len()];
        self.apply_into(state.amplitudes(), &mut out);
        Statevector::from_amplitudes(out)
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.n_qubits())?;
        let mut m = self.terms[0].1.dense_matrix()? * Complex64::new(self.terms[0].0, 0.0);
        for (c, w) in &self.terms[1..] {
            m += w.dense_matrix()? * Complex64::new(*c, 0.0);
        }
        Ok(m)
    }
}

/// Single `Z` on one qubit with phase `+1`, or `None`.
fn single_z(w: &PauliString) -> Option<usize> {
    if w.weight() != 1 || !w.is_diagonal() || w.phase().sign() != Some(1.0) {
        return None;
    }
    let q = w.z_mask().trailing_zeros() as usize;
    (w.op(q) == Pauli::Z).then_some(q)
}

/// Gate list for the diagonal case `O_A = Z_p`, `O_B = Z_q`.
///
/// The product of the returned gates equals `C_{αβ}` up to a global phase.
pub fn clifford_gate_sequence(op_a: &PauliString, op_b: &PauliString, alpha: u8, beta: u8) -> Result<Vec<Gate>> {
    if alpha > 1 || beta > 1 {
        return Err(ForgeError::arg(format!("α, β must be 0 or 1, got ({alpha}, {beta})")));
    }
    let (Some(p), Some(q)) = (single_z(op_a), single_z(op_b)) else {
        return Err(ForgeError::Unsupported(format!(
            "gate sequence needs single-qubit Z operators, got {op_a} and {op_b}"
        )));
    };
    if op_a.n_qubits() != op_b.n_qubits() {
        return Err(ForgeError::arg("size mismatch between operators"));
    }
    let mut gates = Vec::new();
    if p != q {
        let flips: Vec<Gate> = [(p, alpha), (q, beta)]
            .iter()
            .filter(|(_, bit)| *bit == 1)
            .map(|&(qubit, _)| Gate::X { qubit })
            .collect();
        gates.extend(&flips);
        gates.push(Gate::Cz { a: p, b: q });
        gates.extend(&flips);
    } else {
        let flip = alpha != beta;
        if flip {
            gates.push(Gate::X { qubit: p });
        }
        gates.push(Gate::Phase { qubit: p, angle: (alpha as f64 + beta as f64 - 1.0) * PI });
        if flip {
            gates.push(Gate::X { qubit: p });
        }
    }
    Ok(gates)
}

/// Real coefficients with
/// `O_A⊗O_B + O_B⊗O_A = a0·(P*⊗I + I⊗P) + Σ_{αβ} a_{αβ} C*_{αβ}⊗C_{αβ}`, `P = O_A O_B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCoefficients {
    pub a0: f64,
    /// Indexed `[α][β]`.
    pub a: [[f64; 2]; 2],
}

impl DecompositionCoefficients {
    pub fn get(&self, alpha: u8, beta: u8) -> f64 {
        self.a[alpha as usize][beta as usize]
    }
}

/// `A ⊗ B` on `2k` qubits with `A` on the low `k` bits.
pub(crate) fn kron_lo_hi(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = a.nrows();
    let db = b.nrows();
    DMatrix::from_fn(d * db, d * db, |r, c| a[(r % d, c % d)] * b[(r / d, c / d)])
}

fn conj(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.map(|z| z.conj())
}

/// Least-squares coefficients of the pair, checked against a dense
/// reconstruction restricted to the joint support of the two words.
pub fn solve_coefficients(op_a: &PauliString, op_b: &PauliString) -> Result<DecompositionCoefficients> {
    check_pair(op_a, op_b)?;
    let mask = match op_a.support() | op_b.support() {
        0 => 1,
        m => m,
    };
    let (a, b) = (op_a.compress(mask), op_b.compress(mask));
    let k = a.n_qubits();
    if 2 * k > crate::pauli::DENSE_QUBIT_LIMIT {
        return Err(ForgeError::resource(format!("pair support of {k} qubits is too wide to solve densely")));
    }
    let ma = a.dense_matrix()?;
    let mb = b.dense_matrix()?;
    let target = kron_lo_hi(&ma, &mb) + kron_lo_hi(&mb, &ma);
    let p = a.mul(&b)?.dense_matrix()?;
    let id = DMatrix::<Complex64>::identity(1 << k, 1 << k);
    let mut basis = vec![kron_lo_hi(&conj(&p), &id) + kron_lo_hi(&id, &p)];
    for (alpha, beta) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let c = build_clifford(&a, &b, alpha, beta)?.dense_matrix()?;
        basis.push(kron_lo_hi(&conj(&c), &c));
    }

    let inner = |x: &DMatrix<Complex64>, y: &DMatrix<Complex64>| -> f64 {
        x.iter().zip(y.iter()).map(|(u, v)| (u.conj() * v).re).sum()
    };
    let gram = DMatrix::from_fn(5, 5, |i, j| inner(&basis[i], &basis[j]));
    let rhs = DVector::from_fn(5, |i, _| inner(&basis[i], &target));
    let eps = 1e-9 * gram.norm();
    let x = gram
        .svd(true, true)
        .solve(&rhs, eps)
        .map_err(|e| ForgeError::internal(format!("coefficient solve failed: {e}")))?;

    let mut recon = basis[0].clone() * Complex64::new(x[0], 0.0);
    for (i, m) in basis.iter().enumerate().skip(1) {
        recon += m * Complex64::new(x[i], 0.0);
    }
    let residual = (recon - &target).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > DECOMPOSITION_TOL {
        return Err(ForgeError::Decomposition(format!(
            "pair ({op_a}, {op_b}) leaves residual {residual:e}"
        )));
    }
    let clean = |v: f64| if v.abs() < 1e-13 { 0.0 } else { v };
    let coeffs = DecompositionCoefficients {
        a0: clean(x[0]),
        a: [[clean(x[1]), clean(x[2])], [clean(x[3]), clean(x[4])]],
    };
    let all = [coeffs.a0, coeffs.a[0][0], coeffs.a[0][1], coeffs.a[1][0], coeffs.a[1][1]];
    if all.iter().any(|v| v.abs() > 1.0 + COEFF_BOUND_SLACK) {
        return Err(ForgeError::Decomposition(format!(
            "pair ({op_a}, {op_b}) needs coefficients outside [-1, 1]: {all:?}"
        )));
    }
    Ok(coeffs)
}
