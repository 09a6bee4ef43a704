//! Layered hardware-efficient circuit: per layer, `Rot(φ, θ, γ) = Rz(γ) Ry(θ) Rz(φ)`
//! on every qubit followed by a brick wall of CNOTs with periodic wrap-around.
//!
//! Parameter `3·(layer·n + qubit) + k` holds `φ`, `θ`, `γ` for `k = 0, 1, 2`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::error::{ForgeError, Result};
use crate::simulator::{Gate, Statevector};

/// Depth used when none is configured.
pub const DEFAULT_LAYERS: usize = 8;
/// Half-width of the uniform draw for fresh circuit angles.
pub const DEFAULT_INIT_SCALE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnsatzCircuit {
    n: usize,
    layers: usize,
    /// `(control, target)` pairs of each layer.
    cnots: Vec<Vec<(usize, usize)>>,
}

impl AnsatzCircuit {
    pub fn new(n_qubits: usize, n_layers: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(ForgeError::arg(format!("brick-wall ansatz needs at least 2 qubits, got {n_qubits}")));
        }
        if n_qubits >= 31 {
            return Err(ForgeError::arg(format!("register size {n_qubits} unsupported")));
        }
        let cnots = (0..n_layers)
            .map(|layer| {
                (0..n_qubits)
                    .filter(|i| i % 2 == layer % 2)
                    .map(|i| (i, (i + 1) % n_qubits))
                    .filter(|(c, t)| c != t)
                    .collect()
            })
            .collect();
        Ok(AnsatzCircuit { n: n_qubits, layers: n_layers, cnots })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn n_layers(&self) -> usize {
        self.layers
    }

    pub fn n_params(&self) -> usize {
        3 * self.n * self.layers
    }

    pub fn cnot_pairs(&self, layer: usize) -> &[(usize, usize)] {
        &self.cnots[layer]
    }

    /// Uniform draw on `[-scale, scale]` for every parameter.
    pub fn init_params<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> Vec<f64> {
        (0..self.n_params()).map(|_| rng.gen_range(-scale..=scale)).collect()
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(ForgeError::arg(format!(
                "expected {} circuit parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        Ok(())
    }

    /// The gate list of `U(ω)` in application order.
    pub fn gates(&self, params: &[f64]) -> Result<Vec<Gate>> {
        self.check_params(params)?;
        let mut out = Vec::with_capacity(self.n_params() + self.n * self.layers);
        for layer in 0..self.layers {
            for q in 0..self.n {
                let p = &params[3 * (layer * self.n + q)..][..3];
                out.push(Gate::Rz { qubit: q, angle: p[0] });
                out.push(Gate::Ry { qubit: q, angle: p[1] });
                out.push(Gate::Rz { qubit: q, angle: p[2] });
            }
            out.extend(self.cnots[layer].iter().map(|&(control, target)| Gate::Cnot { control, target }));
        }
        Ok(out)
    }

    pub fn apply(&self, params: &[f64], state: &mut Statevector) -> Result<()> {
        self.check_register(state)?;
        for g in self.gates(params)? {
            state.apply_unchecked(&g);
        }
        Ok(())
    }

    /// Apply `U(ω)†`.
    pub fn apply_adjoint(&self, params: &[f64], state: &mut Statevector) -> Result<()> {
        self.check_register(state)?;
        for g in self.gates(params)?.iter().rev() {
            state.apply_unchecked(&g.inverse());
        }
        Ok(())
    }

    fn check_register(&self, state: &Statevector) -> Result<()> {
        if state.n_qubits() != self.n {
            return Err(ForgeError::arg(format!(
                "circuit acts on {} qubits, state has {}",
                self.n,
                state.n_qubits()
            )));
        }
        Ok(())
    }

    /// `U(ω)|σ⟩`.
    pub fn run(&self, params: &[f64], sigma: usize) -> Result<Statevector> {
        let mut state = Statevector::basis(self.n, sigma)?;
        self.apply(params, &mut state)?;
        Ok(state)
    }
}

pub fn build_ansatz(n_qubits: usize, n_layers: usize) -> Result<AnsatzCircuit> {
    AnsatzCircuit::new(n_qubits, n_layers)
}

/// Two-point parameter-shift gradient of `f` at `params`.
///
/// Exact when every parameter enters `f` through exactly one rotation gate
/// of an expectation value (generator eigenvalues `±1/2`).
pub fn parameter_shift_grad<F>(params: &[f64], mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut shifted = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        shifted[k] = params[k] + FRAC_PI_2;
        let plus = f(&shifted)?;
        shifted[k] = params[k] - FRAC_PI_2;
        let minus = f(&shifted)?;
        shifted[k] = params[k];
        grad.push(0.5 * (plus - minus));
    }
    Ok(grad)
}
