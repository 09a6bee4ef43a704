//! Enumeration over every bitstring.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{Evaluation, ForgedModel, GradientRequest, Objective};
use crate::ansatz::AnsatzCircuit;
use crate::error::Result;
use crate::estimator::CliffordOperator;
use crate::pauli::PauliSum;

type Amps = Vec<Complex64>;

/// `U|σ⟩` for every `σ`, in index order.
pub(crate) fn forward_states(circuit: &AnsatzCircuit, omega: &[f64]) -> Result<Vec<Amps>> {
    (0..1usize << circuit.n_qubits())
        .into_par_iter()
        .map(|s| circuit.run(omega, s).map(|v| v.into_amplitudes()))
        .collect()
}

pub(crate) fn diagonal_value(v: &[Complex64], op: &PauliSum) -> f64 {
    op.terms().iter().map(|(c, w)| c * w.expectation_raw(v).re).sum()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `K[σ][σ'] = Σ_t w_t |⟨ref_σ'|C_t fwd_σ⟩|²`, row-major in `σ`.
fn kernel(fwd: &[Amps], refs: &[Amps], pairs: &[(f64, CliffordOperator)]) -> Vec<f64> {
    let dim = fwd.len();
    let rows: Vec<Vec<f64>> = fwd
        .par_iter()
        .map(|v| {
            let mut row = vec![0.0; dim];
            let mut buf = vec![Complex64::new(0.0, 0.0); v.len()];
            for (w, c) in pairs {
                c.apply_into(v, &mut buf);
                for (k, r) in refs.iter().enumerate() {
                    row[k] += w * inner(r, &buf).norm_sqr();
                }
            }
            row
        })
        .collect();
    rows.concat()
}

fn bilinear(lambda: &[f64], k: &[f64]) -> f64 {
    let dim = lambda.len();
    (0..dim)
        .map(|s| lambda[s] * (0..dim).map(|t| k[s * dim + t] * lambda[t]).sum::<f64>())
        .sum()
}

pub(super) fn evaluate(model: &ForgedModel, objective: &Objective, request: GradientRequest) -> Result<Evaluation> {
    let arnn = model.arnn();
    let log_p = arnn.log_probs_all()?;
    let p: Vec<f64> = log_p.iter().map(|l| l.exp()).collect();
    let lambda: Vec<f64> = log_p.iter().map(|l| (0.5 * l).exp()).collect();
    let dim = p.len();

    let fwd = forward_states(model.circuit(), model.omega())?;
    let d: Vec<f64> = fwd.iter().map(|v| diagonal_value(v, &objective.diagonal)).collect();
    let k = kernel(&fwd, &fwd, &objective.pairs);
    let energy = p.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() + bilinear(&lambda, &k);

    let grad_theta = if request.theta {
        // Local energy L(σ) = d(σ) + Σ_σ' K(σ, σ') R(σ, σ').
        let local: Vec<f64> = (0..dim)
            .map(|s| d[s] + (0..dim).map(|t| k[s * dim + t] * lambda[t] / lambda[s]).sum::<f64>())
            .collect();
        let baseline = if request.baseline { p.iter().zip(&local).map(|(a, b)| a * b).sum() } else { 0.0 };
        // Coefficient of ∇ln p(σ): score term plus the two halves of ∇R.
        let coef: Vec<f64> = (0..dim)
            .map(|s| {
                let out: f64 = (0..dim).map(|t| k[s * dim + t] * lambda[s] * lambda[t]).sum();
                let into: f64 = (0..dim).map(|t| k[t * dim + s] * lambda[t] * lambda[s]).sum();
                p[s] * (local[s] - baseline) - 0.5 * out + 0.5 * into
            })
            .collect();
        let mut grad = vec![0.0; arnn.n_params()];
        for (s, c) in coef.iter().enumerate() {
            for (g, v) in grad.iter_mut().zip(arnn.grad_log_prob(s)?) {
                *g += c * v;
            }
        }
        Some(grad)
    } else {
        None
    };

    let grad_omega = if request.omega {
        let omega = model.omega();
        let shifted = |k_idx: usize, delta: f64| -> Result<(f64, f64)> {
            let mut w = omega.to_vec();
            w[k_idx] += delta;
            let states = forward_states(model.circuit(), &w)?;
            let diag: f64 = states.iter().zip(&p).map(|(v, pp)| pp * diagonal_value(v, &objective.diagonal)).sum();
            // The Clifford parts are symmetric in the two occurrences of U,
            // so shifting the forward copy alone gives half the derivative.
            let mu = bilinear(&lambda, &kernel(&states, &fwd, &objective.pairs));
            Ok((diag, mu))
        };
        let grad = (0..omega.len())
            .into_par_iter()
            .map(|i| {
                let (dp, mp) = shifted(i, FRAC_PI_2)?;
                let (dm, mm) = shifted(i, -FRAC_PI_2)?;
                Ok(0.5 * (dp - dm) + (mp - mm))
            })
            .collect::<Result<Vec<f64>>>()?;
        Some(grad)
    } else {
        None
    };

    Ok(Evaluation { energy, grad_theta, grad_omega })
}
