//! Forged expectation values.
//!
//! The state is `(U* ⊗ U) Σ_σ λ(σ) |σ⟩|σ⟩` with `λ(σ) = √p_θ(σ)` from the
//! autoregressive network and `U = U(ω)` the layered circuit. Every estimate
//! reduces to two kinds of single-register quantities:
//!
//! * diagonal parts `Σ_σ p(σ) ⟨σ|U† D U|σ⟩`,
//! * Clifford parts `Σ_σ p(σ) Σ_σ' R(σ, σ') |⟨σ'|U† C U|σ⟩|²`,
//!
//! evaluated by enumeration or by sampling `σ ~ p` and `σ' ~ |⟨σ'|U† C U|σ⟩|²`.

mod clifford;
mod exact;
mod sampled;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use clifford::{
    build_clifford, clifford_gate_sequence, solve_coefficients, CliffordOperator, DecompositionCoefficients,
    DECOMPOSITION_TOL,
};

use crate::ansatz::AnsatzCircuit;
use crate::arnn::ArnnModel;
use crate::error::{ForgeError, Result};
use crate::hamiltonians::{validate_partition, CrossTerm, HamiltonianPartition, ModelSpec};
use crate::pauli::{Pauli, PauliString, PauliSum};

pub const DEFAULT_N_SIGMA: usize = 512;
pub const DEFAULT_SHOTS: usize = 128;

/// Largest subsystem for exact enumeration.
pub const ENUMERATION_LIMIT: usize = crate::arnn::ENUMERATION_LIMIT;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorMode {
    /// Sum over every `σ` and `σ'`.
    Exact,
    /// `n_sigma` draws of `σ`, `shots` draws of `σ'` per `(σ, Clifford)`.
    Sampled { n_sigma: usize, shots: usize, seed: u64 },
}

impl EstimatorMode {
    pub fn sampled(seed: u64) -> Self {
        EstimatorMode::Sampled { n_sigma: DEFAULT_N_SIGMA, shots: DEFAULT_SHOTS, seed }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, EstimatorMode::Exact)
    }

    /// Same budgets with a different seed; exact mode is unchanged.
    pub fn reseeded(&self, seed: u64) -> Self {
        match *self {
            EstimatorMode::Exact => EstimatorMode::Exact,
            EstimatorMode::Sampled { n_sigma, shots, .. } => EstimatorMode::Sampled { n_sigma, shots, seed },
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match *self {
            EstimatorMode::Exact if n > ENUMERATION_LIMIT => Err(ForgeError::resource(format!(
                "exact mode enumerates 2^{n} bitstrings; limit is 2^{ENUMERATION_LIMIT}"
            ))),
            EstimatorMode::Sampled { n_sigma, shots, .. } if n_sigma == 0 || shots == 0 => {
                Err(ForgeError::arg("sample budgets must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// One cross class after decomposition.
#[derive(Clone, Debug)]
pub(crate) struct ClassPlan {
    pub term: CrossTerm,
    pub multiplicity: usize,
    pub coeffs: DecompositionCoefficients,
}

/// A single-register diagonal observable plus weighted Clifford parts.
#[derive(Clone, Debug)]
pub(crate) struct Objective {
    pub diagonal: PauliSum,
    pub pairs: Vec<(f64, CliffordOperator)>,
}

type TermPlan = (DecompositionCoefficients, PauliSum, Vec<(f64, CliffordOperator)>);

fn plan_term(term: &CrossTerm) -> Result<TermPlan> {
    let coeffs = solve_coefficients(&term.op_a, &term.op_b)?;
    let product = PauliSum::from_word(1.0, term.op_a.mul(&term.op_b)?)?;
    let mut cliffords = Vec::new();
    for (alpha, beta) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let a = coeffs.get(alpha, beta);
        if a != 0.0 {
            cliffords.push((a / 2.0, build_clifford(&term.op_a, &term.op_b, alpha, beta)?));
        }
    }
    Ok((coeffs, product, cliffords))
}

impl Objective {
    /// `½(⟨O_A⊗O_B⟩ + ⟨O_B⊗O_A⟩)` of one cross pair.
    fn cross(term: &CrossTerm) -> Result<Self> {
        let (coeffs, product, cliffords) = plan_term(term)?;
        Ok(Objective { diagonal: product.scale(coeffs.a0), pairs: cliffords })
    }
}

#[derive(Clone, Debug)]
pub struct ForgedModel {
    arnn: ArnnModel,
    circuit: AnsatzCircuit,
    omega: Vec<f64>,
    partition: HamiltonianPartition,
    classes: Vec<ClassPlan>,
    energy: Objective,
    spec: Option<ModelSpec>,
}

impl ForgedModel {
    pub fn new(arnn: ArnnModel, circuit: AnsatzCircuit, omega: Vec<f64>, partition: HamiltonianPartition) -> Result<Self> {
        let n = partition.n_sub();
        if arnn.n_bits() != n || circuit.n_qubits() != n {
            return Err(ForgeError::arg(format!(
                "network has {} bits, circuit {} qubits, subsystem {n} qubits",
                arnn.n_bits(),
                circuit.n_qubits()
            )));
        }
        if omega.len() != circuit.n_params() {
            return Err(ForgeError::arg(format!(
                "expected {} circuit parameters, got {}",
                circuit.n_params(),
                omega.len()
            )));
        }
        validate_partition(&partition)?;
        let mut classes = Vec::new();
        let mut diagonal = partition.h_a().scale(2.0);
        let mut pairs = Vec::new();
        for class in partition.classes() {
            let (coeffs, product, cliffords) = plan_term(&class.term)?;
            let weight = class.multiplicity as f64 * class.term.coefficient;
            diagonal = diagonal.add(&product.scale(weight * coeffs.a0))?;
            pairs.extend(cliffords.iter().map(|(w, c)| (weight * w, c.clone())));
            classes.push(ClassPlan {
                term: class.term.clone(),
                multiplicity: class.multiplicity,
                coeffs,
            });
        }
        Ok(ForgedModel { arnn, circuit, omega, partition, classes, energy: Objective { diagonal, pairs }, spec: None })
    }

    /// Random network weights and circuit angles uniform on `±omega_scale`.
    pub fn initialize(
        partition: HamiltonianPartition,
        layers: usize,
        hidden: usize,
        omega_scale: f64,
        seed: u64,
    ) -> Result<Self> {
        let n = partition.n_sub();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arnn = ArnnModel::new(n, hidden, &mut rng)?;
        let circuit = AnsatzCircuit::new(n, layers)?;
        rng.set_stream(1);
        let omega = circuit.init_params(omega_scale, &mut rng);
        ForgedModel::new(arnn, circuit, omega, partition)
    }

    /// [`ForgedModel::initialize`] on a named benchmark model.
    pub fn from_spec(spec: ModelSpec, layers: usize, hidden: usize, omega_scale: f64, seed: u64) -> Result<Self> {
        let mut model = ForgedModel::initialize(spec.build()?, layers, hidden, omega_scale, seed)?;
        model.spec = Some(spec);
        Ok(model)
    }

    pub fn spec(&self) -> Option<ModelSpec> {
        self.spec
    }

    pub fn set_spec(&mut self, spec: Option<ModelSpec>) {
        self.spec = spec;
    }

    pub fn n_sub(&self) -> usize {
        self.partition.n_sub()
    }

    pub fn arnn(&self) -> &ArnnModel {
        &self.arnn
    }

    pub fn circuit(&self) -> &AnsatzCircuit {
        &self.circuit
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn theta(&self) -> &[f64] {
        self.arnn.params()
    }

    pub fn partition(&self) -> &HamiltonianPartition {
        &self.partition
    }

    pub fn set_omega(&mut self, omega: &[f64]) -> Result<()> {
        if omega.len() != self.omega.len() {
            return Err(ForgeError::arg(format!(
                "expected {} circuit parameters, got {}",
                self.omega.len(),
                omega.len()
            )));
        }
        self.omega.copy_from_slice(omega);
        Ok(())
    }

    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        self.arnn.set_params(theta)
    }

    pub fn set_arnn(&mut self, arnn: ArnnModel) -> Result<()> {
        if arnn.n_bits() != self.n_sub() {
            return Err(ForgeError::arg("network width does not match the subsystem"));
        }
        self.arnn = arnn;
        Ok(())
    }

    /// Decomposition coefficients of each cross class, in partition order.
    pub fn cross_coefficients(&self) -> Vec<(CrossTerm, usize, DecompositionCoefficients)> {
        self.classes.iter().map(|c| (c.term.clone(), c.multiplicity, c.coeffs)).collect()
    }
}

/// Energy and optional gradients from one pass over the same samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub energy: f64,
    pub grad_theta: Option<Vec<f64>>,
    pub grad_omega: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GradientRequest {
    pub theta: bool,
    pub omega: bool,
    /// Subtract a mean local energy inside the score term.
    pub baseline: bool,
}

impl GradientRequest {
    pub const NONE: GradientRequest = GradientRequest { theta: false, omega: false, baseline: false };
}

pub(crate) fn evaluate_objective(
    model: &ForgedModel,
    objective: &Objective,
    mode: EstimatorMode,
    request: GradientRequest,
) -> Result<Evaluation> {
    if objective.diagonal.n_qubits() != model.n_sub() {
        return Err(ForgeError::arg(format!(
            "observable has {} qubits, subsystem has {}",
            objective.diagonal.n_qubits(),
            model.n_sub()
        )));
    }
    mode.check(model.n_sub())?;
    match mode {
        EstimatorMode::Exact => exact::evaluate(model, objective, request),
        EstimatorMode::Sampled { n_sigma, shots, seed } => {
            sampled::evaluate(model, objective, n_sigma, shots, seed, request)
        }
    }
}

/// Energy with the requested gradients.
pub fn evaluate(model: &ForgedModel, mode: EstimatorMode, request: GradientRequest) -> Result<Evaluation> {
    evaluate_objective(model, &model.energy, mode, request)
}

/// `Σ_σ p(σ) ⟨σ|U† O U|σ⟩` for an observable on one subsystem.
pub fn estimate_diagonal(model: &ForgedModel, obs: &PauliSum, mode: EstimatorMode) -> Result<f64> {
    let objective = Objective { diagonal: obs.clone(), pairs: Vec::new() };
    Ok(evaluate_objective(model, &objective, mode, GradientRequest::NONE)?.energy)
}

/// `μ_{αβ} = Σ_σ p(σ) Σ_σ' R(σ, σ') |⟨σ'|U† C U|σ⟩|²`.
pub fn estimate_mu_alpha_beta(model: &ForgedModel, clifford: &CliffordOperator, mode: EstimatorMode) -> Result<f64> {
    let objective = Objective { diagonal: PauliSum::zero(model.n_sub())?, pairs: vec![(1.0, clifford.clone())] };
    Ok(evaluate_objective(model, &objective, mode, GradientRequest::NONE)?.energy)
}

/// Swap-symmetrised `½(⟨O_A⊗O_B⟩ + ⟨O_B⊗O_A⟩)`, without the term coefficient.
pub fn estimate_cross(model: &ForgedModel, term: &CrossTerm, mode: EstimatorMode) -> Result<f64> {
    if term.op_a.n_qubits() != model.n_sub() {
        return Err(ForgeError::arg("cross term does not match the subsystem size"));
    }
    let objective = Objective::cross(term)?;
    Ok(evaluate_objective(model, &objective, mode, GradientRequest::NONE)?.energy)
}

/// `2⟨H_A⟩ + Σ_classes multiplicity · coefficient · estimate_cross`.
pub fn energy(model: &ForgedModel, mode: EstimatorMode) -> Result<f64> {
    Ok(evaluate(model, mode, GradientRequest::NONE)?.energy)
}

/// `⟨P⟩` for a Hermitian word `P` on the full `2N`-qubit register.
///
/// Swapping the two registers of a forged state conjugates it, so the
/// symmetrised cross estimate equals `⟨O_A⊗O_B⟩` exactly when the word is a
/// real matrix. Words with an odd number of `Y` factors on both sides, or
/// with anticommuting halves, have no forged estimator here.
pub fn observable(model: &ForgedModel, word: &PauliString, mode: EstimatorMode) -> Result<f64> {
    let n = model.n_sub();
    if word.n_qubits() != 2 * n {
        return Err(ForgeError::arg(format!("observable acts on {} qubits, model has {}", word.n_qubits(), 2 * n)));
    }
    if !word.is_hermitian() {
        return Err(ForgeError::arg(format!("observable {word} is not Hermitian")));
    }
    let sign = if word.phase().exponent() == 0 { 1.0 } else { -1.0 };
    let low = (1u64 << n) - 1;
    let a = word.compress(low).unsigned();
    let b = word.compress(low << n).unsigned();
    let diag = |w: PauliString, c: f64| estimate_diagonal(model, &PauliSum::from_word(c, w)?, mode);
    match (a.is_identity(), b.is_identity()) {
        (true, true) => Ok(sign),
        // ⟨O ⊗ I⟩ = ⟨I ⊗ O*⟩ and O* = (-1)^{#Y} O.
        (false, true) => {
            let flip = if a.y_count().is_multiple_of(2) { 1.0 } else { -1.0 };
            diag(a, sign * flip)
        }
        (true, false) => diag(b, sign),
        (false, false) => {
            if !a.commutes_with(&b)? || !word.unsigned().is_real_matrix() {
                return Err(ForgeError::Unsupported(format!(
                    "{word}: halves must commute and the word must be a real matrix"
                )));
            }
            Ok(sign * estimate_cross(model, &CrossTerm::new(1.0, a, b)?, mode)?)
        }
    }
}

/// `⟨Z_i Z_j⟩` over the full `2N`-qubit register.
pub fn correlators(model: &ForgedModel, mode: EstimatorMode) -> Result<DMatrix<f64>> {
    let n = model.n_sub();
    let mut out = DMatrix::from_element(2 * n, 2 * n, 1.0);
    for i in 0..2 * n {
        for j in i + 1..2 * n {
            let value = match (i < n, j < n) {
                (true, true) | (false, false) => {
                    let (a, b) = (i % n, j % n);
                    let word = PauliString::from_sparse(n, &[(a, Pauli::Z), (b, Pauli::Z)])?;
                    estimate_diagonal(model, &PauliSum::from_word(1.0, word)?, mode)?
                }
                _ => {
                    let term = CrossTerm::new(
                        1.0,
                        PauliString::single(n, i, Pauli::Z)?,
                        PauliString::single(n, j - n, Pauli::Z)?,
                    )?;
                    estimate_cross(model, &term, mode)?
                }
            };
            out[(i, j)] = value;
            out[(j, i)] = value;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
