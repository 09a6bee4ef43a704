//! Monte Carlo estimates: `σ ~ p_θ`, then `σ' ~ |⟨σ'|U† C U|σ⟩|²` per Clifford.
//!
//! Every term of one evaluation shares the same `σ` draws. Inner draws for
//! sample `i` and Clifford `t` use their own ChaCha stream, so results do not
//! depend on the thread count.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_PI_2;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::exact::diagonal_value;
use super::{Evaluation, ForgedModel, GradientRequest, Objective};
use crate::error::{ForgeError, Result};
use crate::simulator::conditional_distribution_split;

struct Draws {
    /// Distinct `σ` values and how often each was drawn.
    unique: Vec<(usize, usize)>,
    /// Index into `unique` for every draw.
    draw_slot: Vec<usize>,
    /// `shots[t][i]` are the `σ'` outcomes of draw `i` under Clifford `t`.
    shots: Vec<Vec<Vec<usize>>>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(super) fn evaluate(
    model: &ForgedModel,
    objective: &Objective,
    n_sigma: usize,
    shots: usize,
    seed: u64,
    request: GradientRequest,
) -> Result<Evaluation> {
    let arnn = model.arnn();
    let circuit = model.circuit();
    let omega = model.omega();
    let n_pairs = objective.pairs.len();

    let sigmas = arnn.sample(n_sigma, &mut stream_rng(seed, 0))?;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &s in &sigmas {
        *counts.entry(s).or_default() += 1;
    }
    let unique: Vec<(usize, usize)> = counts.into_iter().collect();
    let slot_of: HashMap<usize, usize> = unique.iter().enumerate().map(|(k, &(s, _))| (s, k)).collect();
    let draw_slot: Vec<usize> = sigmas.iter().map(|s| slot_of[s]).collect();

    // Conditional distributions per (Clifford, distinct σ).
    let conditionals: Vec<Vec<Vec<f64>>> = objective
        .pairs
        .iter()
        .map(|(_, c)| {
            unique
                .par_iter()
                .map(|&(s, _)| conditional_distribution_split(s, circuit, omega, omega, c))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let samplers: Vec<Vec<WeightedIndex<f64>>> = conditionals
        .iter()
        .map(|per_sigma| {
            per_sigma
                .iter()
                .map(|probs| WeightedIndex::new(probs).map_err(|e| ForgeError::internal(format!("bad distribution: {e}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let shot_lists: Vec<Vec<Vec<usize>>> = (0..n_pairs)
        .map(|t| {
            (0..n_sigma)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, 1 + (i * n_pairs + t) as u64);
                    let dist = &samplers[t][draw_slot[i]];
                    (0..shots).map(|_| dist.sample(&mut rng)).collect()
                })
                .collect()
        })
        .collect();
    let draws = Draws { unique, draw_slot, shots: shot_lists };

    let mut log_p: HashMap<usize, f64> = HashMap::new();
    for &(s, _) in &draws.unique {
        log_p.insert(s, arnn.log_prob(s)?);
    }
    for per_draw in &draws.shots {
        for list in per_draw {
            for &s in list {
                if let std::collections::hash_map::Entry::Vacant(e) = log_p.entry(s) {
                    e.insert(arnn.log_prob(s)?);
                }
            }
        }
    }
    let ratio = |s: usize, t: usize| (0.5 * (log_p[&t] - log_p[&s])).exp();

    let states: Vec<Vec<_>> = draws
        .unique
        .par_iter()
        .map(|&(s, _)| circuit.run(omega, s).map(|v| v.into_amplitudes()))
        .collect::<Result<_>>()?;
    let diag: Vec<f64> = states.iter().map(|v| diagonal_value(v, &objective.diagonal)).collect();

    // Local energy of each draw.
    let local: Vec<f64> = (0..n_sigma)
        .map(|i| {
            let s = sigmas[i];
            let mut l = diag[draws.draw_slot[i]];
            for (t, (w, _)) in objective.pairs.iter().enumerate() {
                let list = &draws.shots[t][i];
                l += w * list.iter().map(|&sp| ratio(s, sp)).sum::<f64>() / list.len() as f64;
            }
            l
        })
        .collect();
    let n = n_sigma as f64;
    let energy = local.iter().sum::<f64>() / n;

    let grad_theta = if request.theta {
        let total: f64 = local.iter().sum();
        // Weight attached to ∇ln p of each bitstring.
        let mut coef: BTreeMap<usize, f64> = BTreeMap::new();
        for i in 0..n_sigma {
            let s = sigmas[i];
            let b = if request.baseline && n_sigma > 1 { (total - local[i]) / (n - 1.0) } else { 0.0 };
            *coef.entry(s).or_default() += (local[i] - b) / n;
            for (t, (w, _)) in objective.pairs.iter().enumerate() {
                let list = &draws.shots[t][i];
                let scale = w / (list.len() as f64 * n);
                for &sp in list {
                    let r = ratio(s, sp);
                    *coef.entry(sp).or_default() += 0.5 * scale * r;
                    *coef.entry(s).or_default() -= 0.5 * scale * r;
                }
            }
        }
        let mut grad = vec![0.0; arnn.n_params()];
        for (s, c) in coef {
            for (g, v) in grad.iter_mut().zip(arnn.grad_log_prob(s)?) {
                *g += c * v;
            }
        }
        Some(grad)
    } else {
        None
    };

    let grad_omega = if request.omega {
        Some(omega_gradient(model, objective, &draws, &conditionals, &sigmas, &ratio)?)
    } else {
        None
    };

    Ok(Evaluation { energy, grad_theta, grad_omega })
}

fn omega_gradient<F: Fn(usize, usize) -> f64 + Sync>(
    model: &ForgedModel,
    objective: &Objective,
    draws: &Draws,
    conditionals: &[Vec<Vec<f64>>],
    sigmas: &[usize],
    ratio: &F,
) -> Result<Vec<f64>> {
    let circuit = model.circuit();
    let omega = model.omega();
    let n = sigmas.len() as f64;
    (0..omega.len())
        .into_par_iter()
        .map(|k| {
            let mut plus = omega.to_vec();
            let mut minus = omega.to_vec();
            plus[k] += FRAC_PI_2;
            minus[k] -= FRAC_PI_2;

            // Diagonal part: ordinary parameter shift per distinct σ.
            let mut g = 0.0;
            for &(s, count) in &draws.unique {
                let vp = circuit.run(&plus, s)?.into_amplitudes();
                let vm = circuit.run(&minus, s)?.into_amplitudes();
                let shift = 0.5 * (diagonal_value(&vp, &objective.diagonal) - diagonal_value(&vm, &objective.diagonal));
                g += count as f64 / n * shift;
            }

            // Clifford parts: E[R ∇ln P(σ'|σ)], with ∇P from shifting each
            // occurrence of the gate separately.
            for (t, (w, c)) in objective.pairs.iter().enumerate() {
                let grads: Vec<Vec<f64>> = draws
                    .unique
                    .iter()
                    .map(|&(s, _)| {
                        let fp = conditional_distribution_split(s, circuit, &plus, omega, c)?;
                        let fm = conditional_distribution_split(s, circuit, &minus, omega, c)?;
                        let ip = conditional_distribution_split(s, circuit, omega, &plus, c)?;
                        let im = conditional_distribution_split(s, circuit, omega, &minus, c)?;
                        Ok((0..fp.len()).map(|j| 0.5 * (fp[j] - fm[j] + ip[j] - im[j])).collect())
                    })
                    .collect::<Result<_>>()?;
                for (i, &s) in sigmas.iter().enumerate() {
                    let slot = draws.draw_slot[i];
                    let probs = &conditionals[t][slot];
                    let list = &draws.shots[t][i];
                    let acc: f64 = list.iter().map(|&sp| ratio(s, sp) * grads[slot][sp] / probs[sp]).sum();
                    g += w * acc / (list.len() as f64 * n);
                }
            }
            Ok(g)
        })
        .collect()
}
