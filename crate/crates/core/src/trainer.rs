//! Two-phase energy minimisation.
//!
//! Phase 1 updates only the circuit angles `ω`; phase 2 updates `ω` and the
//! network weights `θ` together. The trace records the energy of the
//! parameters at the start of each epoch.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arnn::ArnnCheckpoint;
use crate::error::{ForgeError, Result};
use crate::estimator::{evaluate, EstimatorMode, ForgedModel, GradientRequest};
use crate::hamiltonians::{HamiltonianPartition, ModelSpec};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
    /// Gradient-free SPSA on `ω`; `θ` still follows Adam.
    Spsa,
}

impl std::str::FromStr for OptimizerKind {
    type Err = ForgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            "spsa" => Ok(OptimizerKind::Spsa),
            other => Err(ForgeError::arg(format!("unknown optimizer {other:?}"))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Spsa => "spsa",
        })
    }
}

/// Gain sequences `a_k = a / (k + 1 + A)^α` and `c_k = c / (k + 1)^γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaParams {
    pub a: f64,
    pub c: f64,
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for SpsaParams {
    fn default() -> Self {
        SpsaParams { a: 1.0, c: 0.1, big_a: 10.0, alpha: 0.602, gamma: 0.101 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub phase1_epochs: usize,
    pub lr_omega: f64,
    pub lr_theta: f64,
    pub optimizer: OptimizerKind,
    pub mode: EstimatorMode,
    pub seed: u64,
    pub baseline: bool,
    /// Stop once the energy moved less than this over `early_stop_window` epochs.
    pub early_stop_tol: f64,
    pub early_stop_window: usize,
    pub spsa: SpsaParams,
    /// Epoch index to resume from.
    pub start_epoch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            phase1_epochs: 100,
            lr_omega: 0.05,
            lr_theta: 0.01,
            optimizer: OptimizerKind::Adam,
            mode: EstimatorMode::Exact,
            seed: 0,
            baseline: true,
            early_stop_tol: 1e-8,
            early_stop_window: 50,
            spsa: SpsaParams::default(),
            start_epoch: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.phase1_epochs > self.epochs {
            return Err(ForgeError::arg(format!(
                "phase1_epochs ({}) exceeds epochs ({})",
                self.phase1_epochs, self.epochs
            )));
        }
        if !(self.lr_omega > 0.0 && self.lr_theta > 0.0) {
            return Err(ForgeError::arg("learning rates must be positive"));
        }
        if let EstimatorMode::Sampled { n_sigma, shots, .. } = self.mode {
            if n_sigma == 0 || shots == 0 {
                return Err(ForgeError::arg("sample budgets must be positive"));
            }
        }
        Ok(())
    }

    /// Estimator mode of one epoch; sampled runs draw fresh samples each epoch.
    pub fn epoch_mode(&self, epoch: usize) -> EstimatorMode {
        let mixed = self.seed.wrapping_add((epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        self.mode.reseeded(mixed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub energy: f64,
    pub grad_norm_theta: f64,
    pub grad_norm_omega: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyTrace {
    pub records: Vec<EpochRecord>,
}

impl EnergyTrace {
    pub fn last_energy(&self) -> Option<f64> {
        self.records.last().map(|r| r.energy)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Adam with bias correction, or plain gradient descent when `sgd` is set.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    sgd: bool,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0, sgd: false }
    }

    pub fn sgd(len: usize, lr: f64) -> Self {
        Adam { sgd: true, ..Adam::new(len, lr) }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        if self.sgd {
            for (p, g) in params.iter_mut().zip(grad) {
                *p -= self.lr * g;
            }
            return;
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

/// Simultaneous-perturbation stochastic approximation.
#[derive(Clone, Debug)]
pub struct Spsa {
    params: SpsaParams,
    k: usize,
}

impl Spsa {
    pub fn new(params: SpsaParams) -> Self {
        Spsa { params, k: 0 }
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn rademacher<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
        (0..len).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect()
    }

    /// One update of `x`; returns the gradient estimate.
    pub fn step<F, R>(&mut self, x: &mut [f64], mut f: F, rng: &mut R) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64]) -> Result<f64>,
        R: Rng + ?Sized,
    {
        let p = self.params;
        let k = self.k as f64;
        let a_k = p.a / (k + 1.0 + p.big_a).powf(p.alpha);
        let c_k = p.c / (k + 1.0).powf(p.gamma);
        let delta = Spsa::rademacher(x.len(), rng);
        let plus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v + c_k * d).collect();
        let minus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v - c_k * d).collect();
        let diff = f(&plus)? - f(&minus)?;
        let grad: Vec<f64> = delta.iter().map(|d| diff / (2.0 * c_k * d)).collect();
        for (v, g) in x.iter_mut().zip(&grad) {
            *v -= a_k * g;
        }
        self.k += 1;
        Ok(grad)
    }
}

/// One SPSA update of the circuit angles against the forged energy.
pub fn spsa_step<R: Rng + ?Sized>(
    model: &ForgedModel,
    spsa: &mut Spsa,
    mode: EstimatorMode,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut omega = model.omega().to_vec();
    let mut probe = model.clone();
    spsa.step(
        &mut omega,
        |w| {
            probe.set_omega(w)?;
            crate::estimator::energy(&probe, mode)
        },
        rng,
    )?;
    Ok(omega)
}

pub fn grad_theta(model: &ForgedModel, mode: EstimatorMode, baseline: bool) -> Result<Vec<f64>> {
    let request = GradientRequest { theta: true, omega: false, baseline };
    Ok(evaluate(model, mode, request)?.grad_theta.expect("requested"))
}

pub fn grad_omega(model: &ForgedModel, mode: EstimatorMode) -> Result<Vec<f64>> {
    let request = GradientRequest { theta: false, omega: true, baseline: false };
    Ok(evaluate(model, mode, request)?.grad_omega.expect("requested"))
}

/// Parameters and provenance needed to resume or re-evaluate a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub epoch: usize,
    pub energy: f64,
    pub model: Option<ModelSpec>,
    pub layers: usize,
    pub network: ArnnCheckpoint,
    pub omega: Vec<f64>,
    /// Hash of the run configuration; filled in by the caller.
    pub config_hash: String,
}

impl Checkpoint {
    pub fn capture(model: &ForgedModel, epoch: usize, energy: f64) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            epoch,
            energy,
            model: model.spec(),
            layers: model.circuit().n_layers(),
            network: model.arnn().to_checkpoint(),
            omega: model.omega().to_vec(),
            config_hash: String::new(),
        }
    }

    pub fn restore_with(&self, partition: HamiltonianPartition) -> Result<ForgedModel> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(ForgeError::Format(format!(
                "checkpoint version {} (expected {CHECKPOINT_VERSION})",
                self.format_version
            )));
        }
        let arnn = crate::arnn::ArnnModel::from_checkpoint(&self.network)?;
        let circuit = crate::ansatz::AnsatzCircuit::new(arnn.n_bits(), self.layers)?;
        let mut model = ForgedModel::new(arnn, circuit, self.omega.clone(), partition)
            .map_err(|e| ForgeError::Format(format!("checkpoint does not fit its model: {e}")))?;
        model.set_spec(self.model);
        Ok(model)
    }

    pub fn restore(&self) -> Result<ForgedModel> {
        let spec = self.model.ok_or_else(|| ForgeError::Format("checkpoint names no model".into()))?;
        self.restore_with(spec.build()?)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn train(model: ForgedModel, config: &TrainConfig) -> Result<(ForgedModel, EnergyTrace)> {
    train_with(model, config, |_, _| {})
}

/// [`train`] with a hook that sees the updated model after every epoch.
pub fn train_with<F>(mut model: ForgedModel, config: &TrainConfig, mut on_epoch: F) -> Result<(ForgedModel, EnergyTrace)>
where
    F: FnMut(&ForgedModel, &EpochRecord),
{
    config.validate()?;
    let mut trace = EnergyTrace::default();
    let mut opt_omega = match config.optimizer {
        OptimizerKind::Sgd => Adam::sgd(model.omega().len(), config.lr_omega),
        _ => Adam::new(model.omega().len(), config.lr_omega),
    };
    let mut opt_theta = match config.optimizer {
        OptimizerKind::Sgd => Adam::sgd(model.theta().len(), config.lr_theta),
        _ => Adam::new(model.theta().len(), config.lr_theta),
    };
    let mut spsa = Spsa::new(config.spsa);
    let mut spsa_rng = ChaCha8Rng::seed_from_u64(config.seed);
    spsa_rng.set_stream(7);
    let mut last_valid = Checkpoint::capture(&model, config.start_epoch, f64::NAN);

    for epoch in config.start_epoch..config.epochs {
        let start = Instant::now();
        let mode = config.epoch_mode(epoch);
        let joint = epoch >= config.phase1_epochs;
        let use_spsa = config.optimizer == OptimizerKind::Spsa;
        let request = GradientRequest { theta: joint, omega: !use_spsa, baseline: config.baseline };
        let eval = evaluate(&model, mode, request)?;

        let diverged = |reason: String, last_valid: &Checkpoint| ForgeError::Training {
            epoch,
            reason,
            last_valid: Box::new(last_valid.clone()),
        };
        if !eval.energy.is_finite() {
            return Err(diverged(format!("energy is {}", eval.energy), &last_valid));
        }
        let finite = |g: &Option<Vec<f64>>| g.as_ref().is_none_or(|v| v.iter().all(|x| x.is_finite()));
        if !finite(&eval.grad_theta) || !finite(&eval.grad_omega) {
            return Err(diverged("gradient is not finite".into(), &last_valid));
        }
        last_valid = Checkpoint::capture(&model, epoch, eval.energy);

        let grad_norm_omega = if use_spsa {
            let mut omega = model.omega().to_vec();
            let mut probe = model.clone();
            let estimate = spsa.step(
                &mut omega,
                |w| {
                    probe.set_omega(w)?;
                    crate::estimator::energy(&probe, mode)
                },
                &mut spsa_rng,
            )?;
            model.set_omega(&omega)?;
            norm(&estimate)
        } else {
            let g = eval.grad_omega.as_deref().unwrap_or(&[]);
            let mut omega = model.omega().to_vec();
            opt_omega.step(&mut omega, g);
            model.set_omega(&omega)?;
            norm(g)
        };
        let grad_norm_theta = match &eval.grad_theta {
            Some(g) => {
                let mut theta = model.theta().to_vec();
                opt_theta.step(&mut theta, g);
                model.set_theta(&theta)?;
                norm(g)
            }
            None => 0.0,
        };

        let record = EpochRecord {
            epoch,
            energy: eval.energy,
            grad_norm_theta,
            grad_norm_omega,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        trace.records.push(record);
        on_epoch(&model, &record);

        let w = config.early_stop_window;
        if w > 0 && epoch >= config.phase1_epochs + w && trace.records.len() > w {
            let recent = &trace.records[trace.records.len() - 1 - w..];
            if (recent[w].energy - recent[0].energy).abs() < config.early_stop_tol {
                break;
            }
        }
    }
    Ok((model, trace))
}
