//! Entanglement forging simulator: a `2N`-qubit ground state approximated by
//! an `N`-qubit circuit and an autoregressive model of the Schmidt
//! coefficients.

pub mod ansatz;
pub mod arnn;
pub mod error;
pub mod estimator;
pub mod hamiltonians;
pub mod oracle;
pub mod pauli;
pub mod simulator;
pub mod trainer;

pub use ansatz::{build_ansatz, DEFAULT_INIT_SCALE, DEFAULT_LAYERS, parameter_shift_grad, AnsatzCircuit};
pub use arnn::{ArnnCheckpoint, ArnnModel, DEFAULT_HIDDEN};
pub use error::{ForgeError, Result};
pub use estimator::{
    build_clifford, clifford_gate_sequence, correlators, energy, estimate_cross, estimate_diagonal,
    estimate_mu_alpha_beta, observable, solve_coefficients, CliffordOperator, DecompositionCoefficients, EstimatorMode,
    ForgedModel,
};
pub use hamiltonians::{
    build_tfim_1d, build_tfim_2d, build_tv_2x2, validate_partition, CrossTerm, HamiltonianPartition, ModelSpec,
    ValidationReport,
};
pub use oracle::{exact_correlators, exact_ground_state, reconstruct_forged_state, schmidt_decompose};
pub use pauli::{apply_pauli, commutes, pauli_mul, Pauli, PauliString, PauliSum};
pub use simulator::{conditional_distribution, expectation, Gate, Statevector};
pub use trainer::{grad_omega, grad_theta, train, Checkpoint, EnergyTrace, EpochRecord, OptimizerKind, TrainConfig};
